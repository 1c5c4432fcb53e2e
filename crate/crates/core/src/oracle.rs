//! Exhaustive solvers for tiny instances.
//!
//! Both solvers first reduce the instance exactly: candidate balls with the
//! same member set collapse to their best representative, and points of `K`
//! that lie in exactly the same candidates collapse to one atom. The budget
//! applies to the reduced instance. Exceeding it is an error, never a silent
//! fallback.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cover::{CoverMode, CoverSum, GreedyBound, Witness};
use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;
use crate::space::PointSet;

/// Hard ceiling imposed by the 64-bit masks used in the searches.
const MASK_BITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct OracleBudget {
    /// Maximum number of atoms (reduced points) in a cover instance.
    pub max_points: usize,
    /// Maximum number of distinct candidate balls after reduction.
    pub max_candidates: usize,
    /// Maximum number of branch-and-bound nodes.
    pub max_subsets: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_points: 12,
            max_candidates: 60,
            max_subsets: 1 << 24,
        }
    }
}

impl OracleBudget {
    fn check(&self) -> Result<()> {
        if self.max_points == 0 || self.max_points > MASK_BITS || self.max_candidates == 0 || self.max_candidates > MASK_BITS {
            return Err(Error::invalid(format!(
                "oracle budget limits must lie in 1..={MASK_BITS} (points {}, candidates {})",
                self.max_points, self.max_candidates
            )));
        }
        Ok(())
    }
}

/// A candidate ball with its log-weight, as handed to the oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedBall {
    pub center: usize,
    pub n: usize,
    pub members: Vec<usize>,
    pub log_weight: f64,
}

/// Exact reduction of a weighted-cover instance. Member lists are indices
/// into the space; only points flagged in `target` must be covered.
#[derive(Debug, Clone)]
pub(crate) struct CoverReduction {
    /// Candidate indices per distinct restricted member set.
    groups: Vec<Vec<usize>>,
    /// Atom mask covered by each group.
    masks: Vec<u64>,
    atoms: usize,
}

impl CoverReduction {
    pub fn new<'a, I>(members: I, target: &[bool], budget: &OracleBudget) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [u32]>,
    {
        budget.check()?;
        let mut by_set: HashMap<Vec<u32>, usize> = HashMap::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut sets: Vec<Vec<u32>> = Vec::new();
        for (i, m) in members.into_iter().enumerate() {
            let restricted: Vec<u32> = m.iter().copied().filter(|&y| target[y as usize]).collect();
            if restricted.is_empty() {
                continue;
            }
            match by_set.get(&restricted) {
                Some(&g) => groups[g].push(i),
                None => {
                    if groups.len() == budget.max_candidates {
                        return Err(Error::Capacity(format!(
                            "more than {} distinct candidate balls",
                            budget.max_candidates
                        )));
                    }
                    by_set.insert(restricted.clone(), groups.len());
                    groups.push(vec![i]);
                    sets.push(restricted);
                }
            }
        }
        // Atom signature: the groups containing the point.
        let mut signature: HashMap<u32, Vec<usize>> = HashMap::new();
        for (g, set) in sets.iter().enumerate() {
            for &y in set {
                signature.entry(y).or_default().push(g);
            }
        }
        let target_count = target.iter().filter(|&&t| t).count();
        if signature.len() != target_count {
            return Err(Error::invalid("candidate balls do not cover the target set"));
        }
        let mut points: Vec<u32> = signature.keys().copied().collect();
        points.sort_unstable();
        let mut atom_of: HashMap<&Vec<usize>, usize> = HashMap::new();
        let mut masks = vec![0u64; groups.len()];
        for y in &points {
            let sig = &signature[y];
            let next = atom_of.len();
            let atom = *atom_of.entry(sig).or_insert(next);
            if atom >= budget.max_points {
                return Err(Error::Capacity(format!("more than {} atoms to cover", budget.max_points)));
            }
            for &g in sig {
                masks[g] |= 1 << atom;
            }
        }
        Ok(CoverReduction {
            groups,
            masks,
            atoms: atom_of.len(),
        })
    }

    /// Minimum-weight cover; returns chosen candidate indices (one per
    /// chosen group, the lightest of its group).
    pub fn solve(&self, log_weights: &[f64], budget: &OracleBudget) -> Result<Vec<usize>> {
        let reps: Vec<usize> = self
            .groups
            .iter()
            .map(|g| {
                *g.iter()
                    .min_by(|&&a, &&b| log_weights[a].total_cmp(&log_weights[b]).then(a.cmp(&b)))
                    .expect("groups are nonempty")
            })
            .collect();
        let lw: Vec<f64> = reps.iter().map(|&r| log_weights[r]).collect();
        let reference = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = lw.iter().map(|&l| (l - reference).exp()).collect();
        let all = if self.atoms == 64 { u64::MAX } else { (1u64 << self.atoms) - 1 };
        let chosen = min_weight_cover(&self.masks, &w, all, budget.max_subsets)?;
        let mut out: Vec<usize> = chosen.into_iter().map(|g| reps[g]).collect();
        out.sort_unstable();
        Ok(out)
    }
}

/// Exact reduction of a packing instance: one vertex per distinct member set
/// (over the whole space), conflicting when the sets intersect.
#[derive(Debug, Clone)]
pub(crate) struct PackingReduction {
    groups: Vec<Vec<usize>>,
    adjacency: Vec<u64>,
}

impl PackingReduction {
    pub fn new<'a, I>(members: I, budget: &OracleBudget) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [u32]>,
    {
        budget.check()?;
        let mut by_set: HashMap<&'a [u32], usize> = HashMap::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut sets: Vec<&'a [u32]> = Vec::new();
        for (i, m) in members.into_iter().enumerate() {
            match by_set.get(m) {
                Some(&g) => groups[g].push(i),
                None => {
                    if groups.len() == budget.max_candidates {
                        return Err(Error::Capacity(format!(
                            "more than {} distinct candidate balls",
                            budget.max_candidates
                        )));
                    }
                    by_set.insert(m, groups.len());
                    groups.push(vec![i]);
                    sets.push(m);
                }
            }
        }
        let adjacency = conflict_masks(sets.len(), |a, b| sorted_intersect(sets[a], sets[b]));
        Ok(PackingReduction { groups, adjacency })
    }

    /// Maximum-weight disjoint family; returns chosen candidate indices.
    pub fn solve(&self, log_weights: &[f64], budget: &OracleBudget) -> Result<Vec<usize>> {
        let reps: Vec<usize> = self
            .groups
            .iter()
            .map(|g| {
                *g.iter()
                    .max_by(|&&a, &&b| log_weights[a].total_cmp(&log_weights[b]).then(b.cmp(&a)))
                    .expect("groups are nonempty")
            })
            .collect();
        let chosen = solve_independent(&self.adjacency, &reps.iter().map(|&r| log_weights[r]).collect::<Vec<_>>(), budget)?;
        let mut out: Vec<usize> = chosen.into_iter().map(|g| reps[g]).collect();
        out.sort_unstable();
        Ok(out)
    }
}

/// Maximum-weight independent set on an explicit conflict graph with
/// log-weights. Returns chosen vertex indices.
pub(crate) fn solve_independent(adjacency: &[u64], log_weights: &[f64], budget: &OracleBudget) -> Result<Vec<usize>> {
    if adjacency.len() > budget.max_candidates.min(MASK_BITS) {
        return Err(Error::Capacity(format!(
            "{} vertices exceed the {}-candidate budget",
            adjacency.len(),
            budget.max_candidates
        )));
    }
    let reference = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_weights.iter().map(|&l| (l - reference).exp()).collect();
    max_weight_independent(adjacency, &w, budget.max_subsets)
}

pub(crate) fn conflict_masks(len: usize, conflicts: impl Fn(usize, usize) -> bool) -> Vec<u64> {
    let mut adj = vec![0u64; len];
    for a in 0..len {
        for b in a + 1..len {
            if conflicts(a, b) {
                adj[a] |= 1 << b;
                adj[b] |= 1 << a;
            }
        }
    }
    adj
}

pub(crate) fn sorted_intersect(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

fn min_weight_cover(sets: &[u64], weights: &[f64], all: u64, max_nodes: u64) -> Result<Vec<usize>> {
    let atoms = 64 - all.leading_zeros() as usize;
    // Covering lists per atom, lightest first.
    let mut covering: Vec<Vec<usize>> = vec![Vec::new(); atoms];
    for (g, &m) in sets.iter().enumerate() {
        for (a, list) in covering.iter_mut().enumerate() {
            if m >> a & 1 == 1 {
                list.push(g);
            }
        }
    }
    for list in covering.iter_mut() {
        list.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
    }
    let cheapest: Vec<f64> = covering.iter().map(|l| weights[l[0]]).collect();

    // Greedy incumbent.
    let mut covered = 0u64;
    let mut incumbent = Vec::new();
    let mut best = 0.0;
    while covered != all {
        let g = (0..sets.len())
            .filter(|&g| sets[g] & !covered != 0)
            .min_by(|&a, &b| {
                let ra = weights[a] / (sets[a] & !covered).count_ones() as f64;
                let rb = weights[b] / (sets[b] & !covered).count_ones() as f64;
                ra.total_cmp(&rb).then(a.cmp(&b))
            })
            .expect("reduction guarantees coverability");
        covered |= sets[g];
        best += weights[g];
        incumbent.push(g);
    }

    struct Search<'a> {
        sets: &'a [u64],
        weights: &'a [f64],
        covering: &'a [Vec<usize>],
        cheapest: &'a [f64],
        all: u64,
        nodes: u64,
        max_nodes: u64,
        best: f64,
        best_set: Vec<usize>,
        stack: Vec<usize>,
    }

    impl Search<'_> {
        fn go(&mut self, covered: u64, cost: f64) -> Result<()> {
            self.nodes += 1;
            if self.nodes > self.max_nodes {
                return Err(Error::Capacity(format!("cover search exceeded {} nodes", self.max_nodes)));
            }
            if covered == self.all {
                if cost < self.best {
                    self.best = cost;
                    self.best_set = self.stack.clone();
                }
                return Ok(());
            }
            let uncovered = self.all & !covered;
            let mut bound: f64 = 0.0;
            let mut pick = usize::MAX;
            let mut pick_len = usize::MAX;
            let mut bits = uncovered;
            while bits != 0 {
                let a = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                bound = bound.max(self.cheapest[a]);
                let len = self.covering[a].len();
                if len < pick_len {
                    pick_len = len;
                    pick = a;
                }
            }
            if cost + bound >= self.best {
                return Ok(());
            }
            for &g in &self.covering[pick] {
                self.stack.push(g);
                self.go(covered | self.sets[g], cost + self.weights[g])?;
                self.stack.pop();
            }
            Ok(())
        }
    }

    let mut search = Search {
        sets,
        weights,
        covering: &covering,
        cheapest: &cheapest,
        all,
        nodes: 0,
        max_nodes,
        best,
        best_set: incumbent,
        stack: Vec::new(),
    };
    search.go(0, 0.0)?;
    let mut out = search.best_set;
    out.sort_unstable();
    Ok(out)
}

fn max_weight_independent(adjacency: &[u64], weights: &[f64], max_nodes: u64) -> Result<Vec<usize>> {
    let len = adjacency.len();
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    // Re-index so bit i is the i-th heaviest vertex.
    let mut pos = vec![0; len];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let adj: Vec<u64> = order
        .iter()
        .map(|&v| {
            let mut m = 0u64;
            let mut bits = adjacency[v];
            while bits != 0 {
                let u = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                m |= 1 << pos[u];
            }
            m
        })
        .collect();
    let w: Vec<f64> = order.iter().map(|&v| weights[v]).collect();
    let full = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };

    // Greedy incumbent: heaviest first.
    let mut avail = full;
    let mut best = 0.0;
    let mut best_set = 0u64;
    while avail != 0 {
        let i = avail.trailing_zeros() as usize;
        best += w[i];
        best_set |= 1 << i;
        avail &= !(adj[i] | 1 << i);
    }

    struct Search<'a> {
        adj: &'a [u64],
        w: &'a [f64],
        nodes: u64,
        max_nodes: u64,
        best: f64,
        best_set: u64,
    }

    impl Search<'_> {
        fn go(&mut self, avail: u64, cur: f64, chosen: u64) -> Result<()> {
            self.nodes += 1;
            if self.nodes > self.max_nodes {
                return Err(Error::Capacity(format!("packing search exceeded {} nodes", self.max_nodes)));
            }
            if avail == 0 {
                if cur > self.best {
                    self.best = cur;
                    self.best_set = chosen;
                }
                return Ok(());
            }
            let mut bound = cur;
            let mut bits = avail;
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                bound += self.w[i];
            }
            if bound <= self.best {
                return Ok(());
            }
            let i = avail.trailing_zeros() as usize;
            let rest = avail & !(1 << i);
            self.go(rest & !self.adj[i], cur + self.w[i], chosen | 1 << i)?;
            self.go(rest, cur, chosen)
        }
    }

    let mut search = Search {
        adj: &adj,
        w: &w,
        nodes: 0,
        max_nodes,
        best,
        best_set,
    };
    search.go(full, 0.0, 0)?;
    let mut out: Vec<usize> = (0..len).filter(|&i| search.best_set >> i & 1 == 1).map(|i| order[i]).collect();
    out.sort_unstable();
    Ok(out)
}

fn canonical(candidates: &[WeightedBall]) -> Vec<&WeightedBall> {
    let mut c: Vec<&WeightedBall> = candidates.iter().collect();
    c.sort_by(|a, b| {
        (a.center, a.n)
            .cmp(&(b.center, b.n))
            .then(a.log_weight.total_cmp(&b.log_weight))
            .then(a.members.cmp(&b.members))
    });
    c
}

/// Builds a sum from `(center, n, log_weight)` triples; `gap` is the greedy
/// bound for inexact sums, `None` for exact ones.
pub(crate) fn sum_of(chosen: &[(usize, usize, f64)], mode: CoverMode, gap: Option<GreedyBound>) -> CoverSum {
    let mut w: Vec<(usize, usize, f64)> = chosen.to_vec();
    w.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
    CoverSum {
        log_value: log_sum_exp(w.iter().map(|t| t.2)),
        witnesses: w.iter().map(|&(center, n, _)| Witness { center, n }).collect(),
        mode,
        exact: gap.is_none(),
        log_gap_bound: gap.map_or(0.0, |g| g.log_ratio()),
    }
}

/// Exact minimum-weight sub-collection of `candidates` covering `k`.
pub fn exact_cover_infimum(candidates: &[WeightedBall], k: &PointSet, budget: &OracleBudget) -> Result<CoverSum> {
    let cands = canonical(candidates);
    let universe = cands
        .iter()
        .flat_map(|c| c.members.iter().copied())
        .chain(k.iter())
        .max()
        .map_or(0, |m| m + 1);
    let target = {
        let mut t = vec![false; universe];
        for x in k.iter() {
            t[x] = true;
        }
        t
    };
    let members: Vec<Vec<u32>> = cands
        .iter()
        .map(|c| {
            let mut m: Vec<u32> = c.members.iter().map(|&x| x as u32).collect();
            m.sort_unstable();
            m.dedup();
            m
        })
        .collect();
    let reduction = CoverReduction::new(members.iter().map(Vec::as_slice), &target, budget)?;
    let lw: Vec<f64> = cands.iter().map(|c| c.log_weight).collect();
    let chosen = reduction.solve(&lw, budget)?;
    let picked: Vec<(usize, usize, f64)> = chosen.iter().map(|&i| (cands[i].center, cands[i].n, cands[i].log_weight)).collect();
    Ok(sum_of(&picked, CoverMode::VariableLengthCover, None))
}

/// Exact maximum-weight pairwise-disjoint sub-family of `candidates`.
pub fn exact_packing_supremum(candidates: &[WeightedBall], budget: &OracleBudget) -> Result<CoverSum> {
    let cands = canonical(candidates);
    let members: Vec<Vec<u32>> = cands
        .iter()
        .map(|c| {
            let mut m: Vec<u32> = c.members.iter().map(|&x| x as u32).collect();
            m.sort_unstable();
            m.dedup();
            m
        })
        .collect();
    let reduction = PackingReduction::new(members.iter().map(Vec::as_slice), budget)?;
    let lw: Vec<f64> = cands.iter().map(|c| c.log_weight).collect();
    let chosen = reduction.solve(&lw, budget)?;
    let picked: Vec<(usize, usize, f64)> = chosen.iter().map(|&i| (cands[i].center, cands[i].n, cands[i].log_weight)).collect();
    Ok(sum_of(&picked, CoverMode::Packing, None))
}
