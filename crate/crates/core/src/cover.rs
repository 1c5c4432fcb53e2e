//! Spanning and separated sets, weighted cover infima and packing suprema.
//!
//! Cover functionals use open Bowen balls centered anywhere in `X`; packing
//! functionals use closed balls centered in `K`. Every sum is carried in log
//! space and accumulated in ascending witness order.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, Key};
use crate::oracle::{self, CoverReduction, OracleBudget, PackingReduction, WeightedBall};
use crate::par;
use crate::space::{bowen_ball, reach, within, BowenBall, BowenReach, MetricSpace, PointSet};
use crate::systems::{BirkhoffTable, MapSequence, Orbits, Potential};

/// Partition searches with local moves are limited to sets this small.
const LOCAL_MOVE_LIMIT: usize = 24;
const LOCAL_MOVE_PASSES: usize = 3;
/// Upper limit on the number of elements of an open-cover join.
const JOIN_LIMIT: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverMode {
    FixedLengthCover,
    VariableLengthCover,
    Packing,
    RefinedPacking,
    OpenCover,
    Separated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Witness {
    pub center: usize,
    pub n: usize,
}

/// A cover or packing sum `Σ exp(-s·n_i + S_{n_i}φ(x_i))` with its witnesses.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CoverSum {
    pub log_value: f64,
    pub witnesses: Vec<Witness>,
    pub mode: CoverMode,
    pub exact: bool,
    /// Bound on `|ln(value) - ln(optimum)|`; zero when exact.
    pub log_gap_bound: f64,
}

impl CoverSum {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// Greedy solutions are off by at most this factor from the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GreedyBound {
    /// Multiplicative factor between greedy and optimal value.
    pub ratio: f64,
}

impl GreedyBound {
    pub fn log_ratio(&self) -> f64 {
        self.ratio.ln()
    }
}

/// Harmonic number `H(d)`, the classical greedy set-cover ratio.
pub fn harmonic(d: usize) -> f64 {
    (1..=d).map(|k| 1.0 / k as f64).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    pub budget: OracleBudget,
    /// Consult the exhaustive oracle whenever the reduced instance fits.
    pub use_oracle: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            budget: OracleBudget::default(),
            use_oracle: true,
        }
    }
}

impl EngineOptions {
    pub fn greedy_only() -> Self {
        EngineOptions {
            use_oracle: false,
            ..Self::default()
        }
    }
}

/// The data every functional needs: `(X, d)`, `f_{1,∞}`, `K` and `φ`.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub space: &'a MetricSpace,
    pub maps: &'a MapSequence,
    pub k: &'a PointSet,
    pub potential: &'a Potential,
}

impl<'a> Problem<'a> {
    pub fn new(space: &'a MetricSpace, maps: &'a MapSequence, k: &'a PointSet, potential: &'a Potential) -> Result<Self> {
        if maps.len() != space.len() || potential.len() != space.len() {
            return Err(Error::invalid(format!(
                "space has {} points but maps act on {} and the potential has {} values",
                space.len(),
                maps.len(),
                potential.len()
            )));
        }
        if k.universe() != space.len() {
            return Err(Error::invalid("subset K belongs to a different space"));
        }
        if k.is_empty() {
            return Err(Error::invalid("subset K must be nonempty"));
        }
        Ok(Problem {
            space,
            maps,
            k,
            potential,
        })
    }

    pub fn with_k(&self, k: &'a PointSet) -> Result<Self> {
        Problem::new(self.space, self.maps, k, self.potential)
    }

    pub fn with_potential(&self, potential: &'a Potential) -> Result<Self> {
        Problem::new(self.space, self.maps, self.k, potential)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("eps must be positive and finite, got {eps}")))
    }
}

fn check_window(n: usize, n_max: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    if n_max < n {
        return Err(Error::invalid(format!("Nmax = {n_max} is smaller than N = {n}")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct Candidate {
    center: usize,
    n: usize,
    members: Vec<u32>,
}

/// All candidate balls `(x, n)` for `x` in `centers` and `n` in the window,
/// ordered by `(center, n)`.
fn materialize(
    space: &MetricSpace,
    orbits: &Orbits,
    centers: &[usize],
    eps: f64,
    closed: bool,
    n_lo: usize,
    n_hi: usize,
) -> Result<Vec<Candidate>> {
    let reach = BowenReach::build(space, orbits, centers, eps, closed, n_lo, n_hi)?;
    let per_center = par::map_range(centers.len(), |row| {
        (n_lo..=n_hi)
            .map(|n| Candidate {
                center: centers[row],
                n,
                members: reach.ball(row, n).map(|y| y as u32).collect(),
            })
            .collect::<Vec<_>>()
    });
    Ok(per_center.into_iter().flatten().collect())
}

fn log_weights(cands: &[Candidate], birk: &BirkhoffTable, s: f64) -> Vec<f64> {
    cands.iter().map(|c| birk.sum(c.n, c.center) - s * c.n as f64).collect()
}

fn summarize(cands: &[Candidate], lw: &[f64], chosen: &[usize], mode: CoverMode, gap: Option<GreedyBound>) -> CoverSum {
    let picked: Vec<(usize, usize, f64)> = chosen.iter().map(|&i| (cands[i].center, cands[i].n, lw[i])).collect();
    oracle::sum_of(&picked, mode, gap)
}

/// Lazy greedy weighted set cover: repeatedly take the candidate minimizing
/// weight per newly covered target point, ties to the lowest index.
fn greedy_cover(cands: &[Candidate], lw: &[f64], target: &[bool]) -> Result<Vec<usize>> {
    let mut covered = vec![false; target.len()];
    let mut remaining = target.iter().filter(|&&t| t).count();
    let gain = |i: usize, covered: &[bool]| {
        cands[i]
            .members
            .iter()
            .filter(|&&y| target[y as usize] && !covered[y as usize])
            .count()
    };
    let initial = par::map_range(cands.len(), |i| gain(i, &covered));
    let mut heap: BinaryHeap<Reverse<(Key, usize)>> = initial
        .iter()
        .enumerate()
        .filter(|(_, &g)| g > 0)
        .map(|(i, &g)| Reverse((Key(lw[i] - (g as f64).ln()), i)))
        .collect();
    let mut chosen = Vec::new();
    while remaining > 0 {
        let Reverse((key, i)) = heap
            .pop()
            .ok_or_else(|| Error::invalid("candidate balls do not cover the target set"))?;
        let g = gain(i, &covered);
        if g == 0 {
            continue;
        }
        let fresh = Key(lw[i] - (g as f64).ln());
        if fresh != key {
            if let Some(Reverse(top)) = heap.peek() {
                if (fresh, i) > *top {
                    heap.push(Reverse((fresh, i)));
                    continue;
                }
            }
        }
        for &y in &cands[i].members {
            if target[y as usize] && !covered[y as usize] {
                covered[y as usize] = true;
            }
        }
        remaining -= g;
        chosen.push(i);
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Descending-weight greedy packing over `indices`, ties to the lowest index.
fn greedy_pack(cands: &[Candidate], lw: &[f64], indices: &[usize], universe: usize) -> Vec<usize> {
    let mut order = indices.to_vec();
    order.sort_by(|&a, &b| lw[b].total_cmp(&lw[a]).then(a.cmp(&b)));
    let mut occupied = vec![false; universe];
    let mut chosen = Vec::new();
    for i in order {
        let m = &cands[i].members;
        if m.iter().all(|&y| !occupied[y as usize]) {
            for &y in m {
                occupied[y as usize] = true;
            }
            chosen.push(i);
        }
    }
    chosen.sort_unstable();
    chosen
}

fn weighted_balls(cands: &[Candidate], lw: &[f64]) -> Vec<WeightedBall> {
    cands
        .iter()
        .zip(lw)
        .map(|(c, &l)| WeightedBall {
            center: c.center,
            n: c.n,
            members: c.members.iter().map(|&y| y as usize).collect(),
            log_weight: l,
        })
        .collect()
}

/// Prepared cover functional: candidate open balls `B_n(x, ε)` for every
/// `x ∈ X` and `n ∈ [N, Nmax]`, ready to be evaluated at many `s`.
#[derive(Debug)]
pub struct CoverFamily {
    cands: Vec<Candidate>,
    birk: BirkhoffTable,
    target: Vec<bool>,
    reduction: Result<CoverReduction>,
    options: EngineOptions,
    mode: CoverMode,
    bound: GreedyBound,
    n: usize,
    n_max: usize,
}

impl CoverFamily {
    pub fn new(problem: &Problem, eps: f64, n: usize, n_max: usize, options: &EngineOptions) -> Result<Self> {
        check_eps(eps)?;
        check_window(n, n_max)?;
        let orbits = problem.maps.orbits(n_max)?;
        let birk = BirkhoffTable::new(problem.potential, &orbits)?;
        let centers: Vec<usize> = (0..problem.space.len()).collect();
        let cands = materialize(problem.space, &orbits, &centers, eps, false, n, n_max)?;
        let target = problem.k.mask();
        let reduction = if options.use_oracle {
            CoverReduction::new(cands.iter().map(|c| c.members.as_slice()), &target, &options.budget)
        } else {
            Err(Error::Capacity("oracle disabled".into()))
        };
        let widest = cands
            .iter()
            .map(|c| c.members.iter().filter(|&&y| target[y as usize]).count())
            .max()
            .unwrap_or(1);
        let mode = if n == n_max {
            CoverMode::FixedLengthCover
        } else {
            CoverMode::VariableLengthCover
        };
        Ok(CoverFamily {
            cands,
            birk,
            target,
            reduction,
            options: *options,
            mode,
            bound: GreedyBound { ratio: harmonic(widest) },
            n,
            n_max,
        })
    }

    pub fn window(&self) -> (usize, usize) {
        (self.n, self.n_max)
    }

    pub fn greedy_bound(&self) -> GreedyBound {
        self.bound
    }

    /// Whether [`CoverFamily::evaluate`] consults the oracle.
    pub fn oracle_available(&self) -> bool {
        self.reduction.is_ok()
    }

    /// Oracle value when the instance fits the budget, greedy otherwise.
    pub fn evaluate(&self, s: f64) -> Result<CoverSum> {
        if self.reduction.is_ok() {
            match self.exact(s) {
                Ok(sum) => return Ok(sum),
                Err(Error::Capacity(_)) => {}
                Err(e) => return Err(e),
            }
        }
        self.greedy(s)
    }

    pub fn greedy(&self, s: f64) -> Result<CoverSum> {
        let lw = log_weights(&self.cands, &self.birk, s);
        let chosen = greedy_cover(&self.cands, &lw, &self.target)?;
        Ok(summarize(&self.cands, &lw, &chosen, self.mode, Some(self.bound)))
    }

    pub fn exact(&self, s: f64) -> Result<CoverSum> {
        let reduction = self.reduction.as_ref().map_err(Clone::clone)?;
        let lw = log_weights(&self.cands, &self.birk, s);
        let chosen = reduction.solve(&lw, &self.options.budget)?;
        Ok(summarize(&self.cands, &lw, &chosen, self.mode, None))
    }

    /// The candidate list with weights at `s`, as fed to the oracle.
    pub fn candidates(&self, s: f64) -> Vec<WeightedBall> {
        weighted_balls(&self.cands, &log_weights(&self.cands, &self.birk, s))
    }
}

/// Prepared packing functional: closed balls `B̄_n(x, ε)` for `x ∈ K` and
/// `n ∈ [N, Nmax]`.
#[derive(Debug)]
pub struct PackingFamily {
    space: MetricSpace,
    cands: Vec<Candidate>,
    birk: BirkhoffTable,
    /// Points of `K`, ascending; candidates of `k[i]` are `ranges[i]`.
    k: Vec<usize>,
    ranges: Vec<std::ops::Range<usize>>,
    universe: usize,
    full: Option<PackingReduction>,
    cache: Mutex<HashMap<Vec<usize>, Option<Arc<PackingReduction>>>>,
    options: EngineOptions,
    bound: GreedyBound,
}

impl PackingFamily {
    pub fn new(problem: &Problem, eps: f64, n: usize, n_max: usize, options: &EngineOptions) -> Result<Self> {
        check_eps(eps)?;
        check_window(n, n_max)?;
        let orbits = problem.maps.orbits(n_max)?;
        let birk = BirkhoffTable::new(problem.potential, &orbits)?;
        let k = problem.k.members().to_vec();
        let cands = materialize(problem.space, &orbits, &k, eps, true, n, n_max)?;
        let per = n_max - n + 1;
        let ranges = (0..k.len()).map(|i| i * per..(i + 1) * per).collect();
        let full = if options.use_oracle {
            PackingReduction::new(cands.iter().map(|c| c.members.as_slice()), &options.budget).ok()
        } else {
            None
        };
        let widest = cands.iter().map(|c| c.members.len()).max().unwrap_or(1);
        Ok(PackingFamily {
            space: problem.space.clone(),
            cands,
            birk,
            k,
            ranges,
            universe: problem.space.len(),
            full,
            cache: Mutex::new(HashMap::new()),
            options: *options,
            // A chosen ball blocks at most one disjoint optimal ball per member.
            bound: GreedyBound { ratio: widest as f64 },
        })
    }

    pub fn greedy_bound(&self) -> GreedyBound {
        self.bound
    }

    pub fn oracle_available(&self) -> bool {
        self.full.is_some()
    }

    fn indices_of(&self, positions: &[usize]) -> Vec<usize> {
        positions.iter().flat_map(|&p| self.ranges[p].clone()).collect()
    }

    fn reduction_for(&self, positions: &[usize]) -> Option<Arc<PackingReduction>> {
        if !self.options.use_oracle {
            return None;
        }
        let mut cache = self.cache.lock().expect("packing cache poisoned");
        cache
            .entry(positions.to_vec())
            .or_insert_with(|| {
                let idx = self.indices_of(positions);
                PackingReduction::new(idx.iter().map(|&i| self.cands[i].members.as_slice()), &self.options.budget)
                    .ok()
                    .map(Arc::new)
            })
            .clone()
    }

    /// Packing sum over the candidates centered at `K` positions `positions`.
    fn piece(&self, s: f64, lw: &[f64], positions: &[usize], reduction: Option<&PackingReduction>) -> Result<CoverSum> {
        let idx = self.indices_of(positions);
        if let Some(red) = reduction {
            let local: Vec<f64> = idx.iter().map(|&i| lw[i]).collect();
            match red.solve(&local, &self.options.budget) {
                Ok(chosen) => {
                    let chosen: Vec<usize> = chosen.into_iter().map(|j| idx[j]).collect();
                    return Ok(summarize(&self.cands, lw, &chosen, CoverMode::Packing, None));
                }
                Err(Error::Capacity(_)) => {}
                Err(e) => return Err(e),
            }
        }
        let _ = s;
        let chosen = greedy_pack(&self.cands, lw, &idx, self.universe);
        Ok(summarize(&self.cands, lw, &chosen, CoverMode::Packing, Some(self.bound)))
    }

    fn all_positions(&self) -> Vec<usize> {
        (0..self.k.len()).collect()
    }

    pub fn evaluate(&self, s: f64) -> Result<CoverSum> {
        let lw = log_weights(&self.cands, &self.birk, s);
        self.piece(s, &lw, &self.all_positions(), self.full.as_ref())
    }

    pub fn greedy(&self, s: f64) -> Result<CoverSum> {
        let lw = log_weights(&self.cands, &self.birk, s);
        self.piece(s, &lw, &self.all_positions(), None)
    }

    pub fn exact(&self, s: f64) -> Result<CoverSum> {
        let lw = log_weights(&self.cands, &self.birk, s);
        let red = match &self.full {
            Some(r) => r.clone(),
            None => PackingReduction::new(self.cands.iter().map(|c| c.members.as_slice()), &self.options.budget)?,
        };
        let chosen = red.solve(&lw, &self.options.budget)?;
        Ok(summarize(&self.cands, &lw, &chosen, CoverMode::Packing, None))
    }

    pub fn candidates(&self, s: f64) -> Vec<WeightedBall> {
        weighted_balls(&self.cands, &log_weights(&self.cands, &self.birk, s))
    }

    /// Seed partitions of `K` into `2..=parts` pieces by farthest-point
    /// clustering in the base metric.
    pub fn seed_partitions(&self, parts: usize) -> Vec<Vec<Vec<usize>>> {
        let k = &self.k;
        let mut seeds = vec![0usize];
        let mut near: Vec<f64> = k.iter().map(|&x| self.space.dist(k[0], x)).collect();
        let mut out = Vec::new();
        while seeds.len() < parts.min(k.len()) {
            let (far, &d) = near
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                .expect("K is nonempty");
            if d <= 0.0 {
                break;
            }
            seeds.push(far);
            for (i, &x) in k.iter().enumerate() {
                near[i] = near[i].min(self.space.dist(k[far], x));
            }
            let mut pieces = vec![Vec::new(); seeds.len()];
            for (i, &x) in k.iter().enumerate() {
                let nearest = (0..seeds.len())
                    .min_by(|&a, &b| {
                        self.space
                            .dist(k[seeds[a]], x)
                            .total_cmp(&self.space.dist(k[seeds[b]], x))
                            .then(a.cmp(&b))
                    })
                    .expect("at least one seed");
                pieces[nearest].push(i);
            }
            out.push(pieces);
        }
        out
    }

    fn partition_sum(&self, s: f64, lw: &[f64], pieces: &[Vec<usize>]) -> Result<CoverSum> {
        let mut all = Vec::new();
        let mut gap: Option<GreedyBound> = None;
        for piece in pieces.iter().filter(|p| !p.is_empty()) {
            let red = self.reduction_for(piece);
            let sum = self.piece(s, lw, piece, red.as_deref())?;
            if !sum.exact {
                gap = Some(self.bound);
            }
            all.extend(sum.witnesses.iter().map(|w| {
                let i = self.candidate_index(w);
                (w.center, w.n, lw[i])
            }));
        }
        Ok(oracle::sum_of(&all, CoverMode::RefinedPacking, gap))
    }

    fn candidate_index(&self, w: &Witness) -> usize {
        let pos = self.k.binary_search(&w.center).expect("witness center lies in K");
        let r = &self.ranges[pos];
        r.start + (w.n - self.cands[r.start].n)
    }

    /// Infimum of per-piece packing sums over a searched family of
    /// partitions of `K` into at most `parts` pieces. The trivial partition
    /// is always in the family.
    pub fn refined(&self, s: f64, parts: usize) -> Result<CoverSum> {
        if parts == 0 {
            return Err(Error::invalid("parts must be at least 1"));
        }
        let lw = log_weights(&self.cands, &self.birk, s);
        let trivial = vec![self.all_positions()];
        let mut best = self.partition_sum(s, &lw, &trivial)?;
        let mut best_pieces = trivial;
        if parts == 1 {
            return Ok(best);
        }
        for pieces in self.seed_partitions(parts) {
            let sum = self.partition_sum(s, &lw, &pieces)?;
            if sum.log_value < best.log_value {
                best = sum;
                best_pieces = pieces;
            }
        }
        if self.k.len() <= LOCAL_MOVE_LIMIT {
            for _ in 0..LOCAL_MOVE_PASSES {
                let mut improved = false;
                for p in 0..self.k.len() {
                    let from = best_pieces.iter().position(|piece| piece.contains(&p)).expect("partition covers K");
                    let slots = best_pieces.len() + usize::from(best_pieces.len() < parts);
                    for to in 0..slots {
                        if to == from {
                            continue;
                        }
                        let mut trial = best_pieces.clone();
                        trial[from].retain(|&q| q != p);
                        if to == trial.len() {
                            trial.push(vec![p]);
                        } else {
                            trial[to].push(p);
                            trial[to].sort_unstable();
                        }
                        trial.retain(|piece| !piece.is_empty());
                        let sum = self.partition_sum(s, &lw, &trial)?;
                        if sum.log_value < best.log_value {
                            best = sum;
                            best_pieces = trial;
                            improved = true;
                            break;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
        }
        Ok(best)
    }
}

/// `Λ_{ε,N}`: cheapest cover of `K` by open balls `B_N(x, ε)`, `x ∈ X`,
/// weighted by `exp(S_Nφ(x))`.
pub fn fixed_cover_sum(problem: &Problem, n: usize, eps: f64, options: &EngineOptions) -> Result<CoverSum> {
    CoverFamily::new(problem, eps, n, n, options)?.evaluate(0.0)
}

/// Windowed approximation of the variable-length cover functional.
pub fn variable_cover_sum(
    problem: &Problem,
    eps: f64,
    s: f64,
    n: usize,
    n_max: usize,
    options: &EngineOptions,
) -> Result<CoverSum> {
    let mut sum = CoverFamily::new(problem, eps, n, n_max, options)?.evaluate(s)?;
    sum.mode = CoverMode::VariableLengthCover;
    Ok(sum)
}

/// Windowed approximation of the packing functional.
pub fn packing_sum(
    problem: &Problem,
    eps: f64,
    s: f64,
    n: usize,
    n_max: usize,
    options: &EngineOptions,
) -> Result<CoverSum> {
    PackingFamily::new(problem, eps, n, n_max, options)?.evaluate(s)
}

/// Refined packing functional over partitions of `K` into `≤ parts` pieces.
#[allow(clippy::too_many_arguments)]
pub fn refined_packing_sum(
    problem: &Problem,
    eps: f64,
    s: f64,
    n: usize,
    n_max: usize,
    parts: usize,
    options: &EngineOptions,
) -> Result<CoverSum> {
    PackingFamily::new(problem, eps, n, n_max, options)?.refined(s, parts)
}

/// A set of points with its size and whether the oracle confirmed it optimal.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SetEstimate {
    pub set: PointSet,
    pub cardinality: usize,
    pub exact: bool,
    /// Optimal cardinality, when the oracle could decide it.
    pub oracle_cardinality: Option<usize>,
}

/// Closed `d_n`-neighborhoods within `K`: `out[i]` lists the points of `K`
/// (as point indices) within `eps` of `K[i]`.
fn closed_neighborhoods(problem: &Problem, orbits: &Orbits, n: usize, eps: f64) -> Vec<Vec<u32>> {
    let k = problem.k.members();
    par::map_slice(k, |&x| {
        k.iter()
            .filter(|&&y| reach(problem.space, orbits, x, y, eps, true, n) >= n)
            .map(|&y| y as u32)
            .collect()
    })
}

/// Greedy `(n, ε)`-spanning subset of `K` by farthest-point insertion.
pub fn spanning_set(problem: &Problem, n: usize, eps: f64, options: &EngineOptions) -> Result<SetEstimate> {
    check_eps(eps)?;
    check_window(n, n)?;
    let orbits = problem.maps.orbits(n)?;
    let k = problem.k.members();
    let dn = |x: usize, y: usize| (0..n).fold(0.0_f64, |m, i| m.max(problem.space.dist(orbits.at(i, x), orbits.at(i, y))));
    let mut chosen = vec![k[0]];
    let mut near: Vec<f64> = k.iter().map(|&y| dn(k[0], y)).collect();
    loop {
        let (far, &d) = near
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("K is nonempty");
        if d <= eps {
            break;
        }
        chosen.push(k[far]);
        let fresh = par::map_slice(k, |&y| dn(k[far], y));
        for (m, f) in near.iter_mut().zip(fresh) {
            *m = m.min(f);
        }
    }
    let cardinality = chosen.len();
    let oracle_cardinality = if options.use_oracle {
        let nbhd = closed_neighborhoods(problem, &orbits, n, eps);
        let target = problem.k.mask();
        match CoverReduction::new(nbhd.iter().map(Vec::as_slice), &target, &options.budget)
            .and_then(|r| r.solve(&vec![0.0; nbhd.len()], &options.budget))
        {
            Ok(opt) => Some(opt.len()),
            Err(Error::Capacity(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(SetEstimate {
        set: PointSet::new(problem.space.len(), chosen)?,
        cardinality,
        exact: oracle_cardinality == Some(cardinality),
        oracle_cardinality,
    })
}

/// Twin-reduced conflict graph of the separated-set problem: points of `K`
/// with identical closed neighborhoods collapse to one vertex.
struct SeparatedGraph {
    /// Positions in `K` of each group, ascending.
    groups: Vec<Vec<usize>>,
    adjacency: Vec<u64>,
}

fn separated_graph(nbhd: &[Vec<u32>], k: &[usize], budget: &OracleBudget) -> Result<SeparatedGraph> {
    let mut by_set: HashMap<&[u32], usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, nb) in nbhd.iter().enumerate() {
        match by_set.get(nb.as_slice()) {
            Some(&g) => groups[g].push(i),
            None => {
                if groups.len() == budget.max_candidates.min(64) {
                    return Err(Error::Capacity(format!(
                        "more than {} distinct separated-set vertices",
                        budget.max_candidates
                    )));
                }
                by_set.insert(nb, groups.len());
                groups.push(vec![i]);
            }
        }
    }
    let adjacency = oracle::conflict_masks(groups.len(), |a, b| {
        let rep_b = k[groups[b][0]] as u32;
        nbhd[groups[a][0]].binary_search(&rep_b).is_ok()
    });
    Ok(SeparatedGraph { groups, adjacency })
}

/// Greedy maximal `(n, ε)`-separated subset of `K`, scanning in index order.
pub fn separated_set(problem: &Problem, n: usize, eps: f64, options: &EngineOptions) -> Result<SetEstimate> {
    let zero = Potential::zero(problem.space.len());
    let flat = problem.with_potential(&zero)?;
    let (chosen, exact, oracle_cardinality, _) = separated_core(&flat, n, eps, options)?;
    let cardinality = chosen.len();
    Ok(SetEstimate {
        set: PointSet::new(problem.space.len(), chosen)?,
        cardinality,
        exact,
        oracle_cardinality,
    })
}

/// `P_n`: weighted separated supremum `sup Σ_{x∈E} exp(S_nφ(x))`.
pub fn separated_supremum(problem: &Problem, n: usize, eps: f64, options: &EngineOptions) -> Result<CoverSum> {
    let orbits = problem.maps.orbits(n.max(1))?;
    let birk = BirkhoffTable::new(problem.potential, &orbits)?;
    let (chosen, exact, _, widest) = separated_core(problem, n, eps, options)?;
    let picked: Vec<(usize, usize, f64)> = chosen.iter().map(|&x| (x, n, birk.sum(n, x))).collect();
    // Each kept point blocks at most one point per member of its neighborhood.
    let gap = (!exact).then_some(GreedyBound { ratio: widest as f64 });
    Ok(oracle::sum_of(&picked, CoverMode::Separated, gap))
}

/// Returns the chosen points, whether they are optimal, the optimal
/// cardinality for unit weights (when decided) and the largest neighborhood.
fn separated_core(
    problem: &Problem,
    n: usize,
    eps: f64,
    options: &EngineOptions,
) -> Result<(Vec<usize>, bool, Option<usize>, usize)> {
    check_eps(eps)?;
    check_window(n, n)?;
    let orbits = problem.maps.orbits(n)?;
    let birk = BirkhoffTable::new(problem.potential, &orbits)?;
    let k = problem.k.members();
    let nbhd = closed_neighborhoods(problem, &orbits, n, eps);
    let widest = nbhd.iter().map(Vec::len).max().unwrap_or(1);
    let lw: Vec<f64> = k.iter().map(|&x| birk.sum(n, x)).collect();
    let mut order: Vec<usize> = (0..k.len()).collect();
    order.sort_by(|&a, &b| lw[b].total_cmp(&lw[a]).then(a.cmp(&b)));
    let mut blocked = vec![false; problem.space.len()];
    let mut greedy = Vec::new();
    for i in order {
        if blocked[k[i]] {
            continue;
        }
        greedy.push(i);
        for &y in &nbhd[i] {
            blocked[y as usize] = true;
        }
    }
    greedy.sort_unstable();
    // Maximal separated sets span K.
    debug_assert!(k.iter().all(|&y| blocked[y]));

    if !options.use_oracle {
        return Ok((greedy.iter().map(|&i| k[i]).collect(), false, None, widest));
    }
    let graph = match separated_graph(&nbhd, k, &options.budget) {
        Ok(g) => g,
        Err(Error::Capacity(_)) => return Ok((greedy.iter().map(|&i| k[i]).collect(), false, None, widest)),
        Err(e) => return Err(e),
    };
    let reps: Vec<usize> = graph
        .groups
        .iter()
        .map(|g| *g.iter().max_by(|&&a, &&b| lw[a].total_cmp(&lw[b]).then(b.cmp(&a))).expect("nonempty group"))
        .collect();
    let rep_lw: Vec<f64> = reps.iter().map(|&i| lw[i]).collect();
    let solved = oracle::solve_independent(&graph.adjacency, &rep_lw, &options.budget);
    let unit = oracle::solve_independent(&graph.adjacency, &vec![0.0; reps.len()], &options.budget);
    match (solved, unit) {
        (Ok(best), Ok(unit)) => {
            let optimum = log_sum_exp(best.iter().map(|&g| rep_lw[g]));
            let found = log_sum_exp(greedy.iter().map(|&i| lw[i]));
            let mut chosen: Vec<usize> = if found >= optimum {
                greedy.iter().map(|&i| k[i]).collect()
            } else {
                best.iter().map(|&g| k[reps[g]]).collect()
            };
            chosen.sort_unstable();
            Ok((chosen, true, Some(unit.len()), widest))
        }
        (Err(Error::Capacity(_)), _) | (_, Err(Error::Capacity(_))) => {
            Ok((greedy.iter().map(|&i| k[i]).collect(), false, None, widest))
        }
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

/// `q_n`: cheapest cover of `K` by elements of the join `⋁_{j<n} f_1^{-j}U`,
/// each weighted by `inf_{x∈B∩K} exp(S_nφ(x))`.
pub fn open_cover_sum(problem: &Problem, n: usize, cover: &[PointSet], options: &EngineOptions) -> Result<CoverSum> {
    check_window(n, n)?;
    let len = problem.space.len();
    if cover.iter().any(|u| u.universe() != len) {
        return Err(Error::invalid("cover element belongs to a different space"));
    }
    let mut hit = vec![false; len];
    for u in cover {
        for x in u.iter() {
            hit[x] = true;
        }
    }
    if let Some(x) = hit.iter().position(|&h| !h) {
        return Err(Error::invalid(format!("cover does not contain point {x}")));
    }
    let orbits = problem.maps.orbits(n)?;
    let birk = BirkhoffTable::new(problem.potential, &orbits)?;
    let masks: Vec<Vec<bool>> = cover.iter().map(PointSet::mask).collect();

    let dedup = |sets: Vec<Vec<usize>>| {
        let mut seen = HashSet::new();
        let mut out: Vec<Vec<usize>> = sets.into_iter().filter(|s| !s.is_empty() && seen.insert(s.clone())).collect();
        out.sort();
        out
    };
    let mut elements: Vec<Vec<usize>> = dedup(cover.iter().map(|u| u.members().to_vec()).collect());
    for j in 1..n {
        let mut next = Vec::new();
        for e in &elements {
            for m in &masks {
                next.push(e.iter().copied().filter(|&x| m[orbits.at(j, x)]).collect::<Vec<_>>());
            }
        }
        elements = dedup(next);
        if elements.len() > JOIN_LIMIT {
            return Err(Error::Capacity(format!("open-cover join exceeds {JOIN_LIMIT} elements")));
        }
    }

    let k = problem.k.mask();
    let cands: Vec<Candidate> = elements
        .iter()
        .filter_map(|e| {
            let center = e
                .iter()
                .copied()
                .filter(|&x| k[x])
                .min_by(|&a, &b| birk.sum(n, a).total_cmp(&birk.sum(n, b)).then(a.cmp(&b)))?;
            Some(Candidate {
                center,
                n,
                members: e.iter().map(|&x| x as u32).collect(),
            })
        })
        .collect();
    let lw = log_weights(&cands, &birk, 0.0);
    if options.use_oracle {
        let solved = CoverReduction::new(cands.iter().map(|c| c.members.as_slice()), &k, &options.budget)
            .and_then(|r| r.solve(&lw, &options.budget));
        match solved {
            Ok(chosen) => return Ok(summarize(&cands, &lw, &chosen, CoverMode::OpenCover, None)),
            Err(Error::Capacity(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let chosen = greedy_cover(&cands, &lw, &k)?;
    let widest = cands
        .iter()
        .map(|c| c.members.iter().filter(|&&y| k[y as usize]).count())
        .max()
        .unwrap_or(1);
    let bound = GreedyBound { ratio: harmonic(widest) };
    Ok(summarize(&cands, &lw, &chosen, CoverMode::OpenCover, Some(bound)))
}

/// Vitali selection: scan balls by decreasing radius (stable), keeping each
/// ball disjoint from those already kept. Verifies that the 5r-enlargements
/// of the kept balls cover every input ball.
pub fn vitali_subfamily(space: &MetricSpace, maps: &MapSequence, balls: &[BowenBall]) -> Result<Vec<BowenBall>> {
    if balls.is_empty() {
        return Err(Error::invalid("Vitali selection needs at least one ball"));
    }
    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&a, &b| balls[b].eps.total_cmp(&balls[a].eps).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if kept.iter().all(|&j| !balls[i].members.intersects(&balls[j].members)) {
            kept.push(i);
        }
    }
    let mut covered = vec![false; space.len()];
    for &j in &kept {
        let b = &balls[j];
        let big = bowen_ball(space, maps, b.n, 5.0 * b.eps, b.center, b.closed)?;
        for x in big.members.iter() {
            covered[x] = true;
        }
    }
    if let Some(x) = balls.iter().flat_map(|b| b.members.iter()).find(|&x| !covered[x]) {
        return Err(Error::Internal(format!(
            "point {x} escapes the enlarged Vitali subfamily; the metric likely violates the triangle inequality"
        )));
    }
    kept.sort_unstable();
    Ok(kept.into_iter().map(|j| balls[j].clone()).collect())
}

/// Whether two points are `(n, eps)`-separated.
pub fn separated(space: &MetricSpace, orbits: &Orbits, n: usize, eps: f64, x: usize, y: usize) -> bool {
    !within(
        (0..n).fold(0.0_f64, |m, i| m.max(space.dist(orbits.at(i, x), orbits.at(i, y)))),
        eps,
        true,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::builtin::{builtin_system, SystemSpec};

    fn sys(s: &str) -> crate::systems::builtin::System {
        builtin_system(&s.parse::<SystemSpec>().unwrap()).unwrap()
    }

    #[test]
    fn spanning_and_separated_small() {
        let s = sys("two-point");
        let k = PointSet::all(2);
        let p = Problem::new(&s.space, &s.maps, &k, &s.potential).unwrap();
        let o = EngineOptions::default();
        assert_eq!(spanning_set(&p, 3, 2.0, &o).unwrap().cardinality, 1);
        let span = spanning_set(&p, 3, 0.5, &o).unwrap();
        assert_eq!((span.cardinality, span.exact), (2, true));
        assert_eq!(separated_set(&p, 2, 0.5, &o).unwrap().cardinality, 2);
    }

    #[test]
    fn fixed_cover_on_line() {
        let space = MetricSpace::line(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let maps = MapSequence::identity(4).unwrap();
        let phi = Potential::zero(4);
        let k = PointSet::all(4);
        let p = Problem::new(&space, &maps, &k, &phi).unwrap();
        let exact = fixed_cover_sum(&p, 1, 1.1, &EngineOptions::default()).unwrap();
        assert!(exact.exact);
        assert!((exact.value() - 2.0).abs() < 1e-12);
        assert_eq!(exact.witnesses.len(), 2);
        let greedy = fixed_cover_sum(&p, 1, 1.1, &EngineOptions::greedy_only()).unwrap();
        assert!(!greedy.exact);
        assert!(greedy.value() >= exact.value() - 1e-12);
    }

    #[test]
    fn windowed_single_point() {
        let s = sys("single-point:phi=0.3");
        let k = PointSet::all(1);
        let p = Problem::new(&s.space, &s.maps, &k, &s.potential).unwrap();
        let o = EngineOptions::default();
        let v = variable_cover_sum(&p, 0.5, 0.5, 10, 20, &o).unwrap();
        assert!((v.log_value + 4.0).abs() < 1e-12);
        assert_eq!(v.witnesses, vec![Witness { center: 0, n: 20 }]);
        assert!(variable_cover_sum(&p, 0.5, 0.5, 10, 9, &o).is_err());
        let pk = packing_sum(&p, 0.5, 0.3, 1, 5, &o).unwrap();
        assert!(pk.log_value.abs() < 1e-12);
    }

    #[test]
    fn refined_packing_never_exceeds_trivial_partition() {
        let s = sys("cyclic-shift:length=6");
        let k = PointSet::all(s.space.len());
        let p = Problem::new(&s.space, &s.maps, &k, &s.potential).unwrap();
        let fam = PackingFamily::new(&p, 0.5, 2, 3, &EngineOptions::default()).unwrap();
        for s in [0.0, 0.5, 1.0] {
            let plain = fam.evaluate(s).unwrap();
            let refined = fam.refined(s, 4).unwrap();
            assert!(refined.log_value <= plain.log_value);
            assert_eq!(fam.refined(s, 1).unwrap().log_value, plain.log_value);
        }
    }

    #[test]
    fn open_cover_join() {
        let s = sys("n-cycle:n=3");
        let k = PointSet::all(3);
        let p = Problem::new(&s.space, &s.maps, &k, &s.potential).unwrap();
        let singletons: Vec<PointSet> = (0..3).map(|x| PointSet::single(3, x).unwrap()).collect();
        let q = open_cover_sum(&p, 3, &singletons, &EngineOptions::default()).unwrap();
        assert!((q.value() - 3.0).abs() < 1e-12);
        let partial = &singletons[..2];
        assert!(open_cover_sum(&p, 3, partial, &EngineOptions::default()).is_err());
    }

    #[test]
    fn vitali_on_line() {
        let space = MetricSpace::line(vec![0.0, 0.5, 3.0]).unwrap();
        let maps = MapSequence::identity(3).unwrap();
        let balls: Vec<BowenBall> = (0..3).map(|c| bowen_ball(&space, &maps, 1, 1.0, c, false).unwrap()).collect();
        let kept = vitali_subfamily(&space, &maps, &balls).unwrap();
        assert_eq!(kept.iter().map(|b| b.center).collect::<Vec<_>>(), vec![0, 2]);
        assert!(vitali_subfamily(&space, &maps, &[]).is_err());
    }
}
