//! Finite metric spaces and Bowen-metric geometry.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;
use crate::systems::{MapSequence, Orbits};

type DistFn = dyn Fn(usize, usize) -> f64 + Send + Sync;

/// Above this many points the triangle inequality is sampled instead of
/// checked on every triple.
const FULL_TRIANGLE_CHECK: usize = 64;
const SAMPLED_TRIPLES: usize = 20_000;

/// A finite point cloud `0..len` with an exact distance function.
#[derive(Clone)]
pub struct MetricSpace {
    len: usize,
    labels: Option<Arc<[String]>>,
    dist: Arc<DistFn>,
}

impl fmt::Debug for MetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricSpace").field("len", &self.len).finish_non_exhaustive()
    }
}

impl MetricSpace {
    /// Builds a space and checks the metric axioms: symmetry and identity of
    /// indiscernibles on every pair, the triangle inequality on every triple
    /// for small spaces and on a deterministic sample otherwise.
    pub fn new<F>(len: usize, labels: Option<Vec<String>>, dist: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> f64 + Send + Sync + 'static,
    {
        if len == 0 {
            return Err(Error::invalid("metric space must have at least one point"));
        }
        if let Some(l) = &labels {
            if l.len() != len {
                return Err(Error::invalid(format!("{} labels for {len} points", l.len())));
            }
        }
        let space = MetricSpace {
            len,
            labels: labels.map(Arc::from),
            dist: Arc::new(dist),
        };
        space.validate()?;
        Ok(space)
    }

    fn validate(&self) -> Result<()> {
        let bad: Vec<Option<String>> = par::map_range(self.len, |x| {
            let dxx = self.dist(x, x);
            if dxx != 0.0 {
                return Some(format!("d({x},{x}) = {dxx}"));
            }
            for y in x + 1..self.len {
                let a = self.dist(x, y);
                let b = self.dist(y, x);
                if !(a.is_finite() && a > 0.0) {
                    return Some(format!("d({x},{y}) = {a} is not a positive finite distance"));
                }
                if a != b {
                    return Some(format!("d({x},{y}) = {a} but d({y},{x}) = {b}"));
                }
            }
            None
        });
        if let Some(msg) = bad.into_iter().flatten().next() {
            return Err(Error::invalid(format!("not a metric: {msg}")));
        }
        let violates = |x: usize, y: usize, z: usize| {
            let lhs = self.dist(x, z);
            let rhs = self.dist(x, y) + self.dist(y, z);
            lhs > rhs * (1.0 + 1e-12)
        };
        if self.len <= FULL_TRIANGLE_CHECK {
            for x in 0..self.len {
                for y in 0..self.len {
                    for z in 0..self.len {
                        if violates(x, y, z) {
                            return Err(Error::invalid(format!("triangle inequality fails on ({x},{y},{z})")));
                        }
                    }
                }
            }
        } else {
            let mut state = 0x9E37_79B9_7F4A_7C15_u64;
            for _ in 0..SAMPLED_TRIPLES {
                let x = (splitmix(&mut state) % self.len as u64) as usize;
                let y = (splitmix(&mut state) % self.len as u64) as usize;
                let z = (splitmix(&mut state) % self.len as u64) as usize;
                if violates(x, y, z) {
                    return Err(Error::invalid(format!("triangle inequality fails on ({x},{y},{z})")));
                }
            }
        }
        Ok(())
    }

    /// Explicit symmetric distance matrix.
    pub fn from_matrix(matrix: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> Result<Self> {
        let len = matrix.len();
        if matrix.iter().any(|row| row.len() != len) {
            return Err(Error::invalid("distance matrix must be square"));
        }
        let flat: Vec<f64> = matrix.into_iter().flatten().collect();
        MetricSpace::new(len, labels, move |x, y| flat[x * len + y])
    }

    /// Euclidean point cloud; every point must have the same dimension.
    pub fn euclidean(points: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::invalid("points have mixed dimensions"));
        }
        let len = points.len();
        MetricSpace::new(len, labels, move |x, y| {
            if x == y {
                return 0.0;
            }
            points[x]
                .iter()
                .zip(&points[y])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
    }

    /// Points on the real line.
    pub fn line(coords: Vec<f64>) -> Result<Self> {
        MetricSpace::euclidean(coords.into_iter().map(|c| vec![c]).collect(), None)
    }

    /// Every pair of distinct points at distance 1.
    pub fn discrete(len: usize, labels: Option<Vec<String>>) -> Result<Self> {
        MetricSpace::new(len, labels, |x, y| if x == y { 0.0 } else { 1.0 })
    }

    /// The grid `k/q` on the unit circle with arc-length distance.
    pub fn circle_grid(q: usize) -> Result<Self> {
        MetricSpace::new(q, None, move |x, y| {
            let k = x.abs_diff(y);
            k.min(q - k) as f64 / q as f64
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn dist(&self, x: usize, y: usize) -> f64 {
        (self.dist)(x, y)
    }

    pub fn label(&self, x: usize) -> String {
        match &self.labels {
            Some(l) => l[x].clone(),
            None => x.to_string(),
        }
    }

    pub fn check_point(&self, x: usize) -> Result<()> {
        if x < self.len {
            Ok(())
        } else {
            Err(Error::invalid(format!("point {x} outside space of {} points", self.len)))
        }
    }

    /// Smallest positive distance from `x` to another point, or `None` for a
    /// one-point space.
    pub fn separation_of(&self, x: usize) -> Option<f64> {
        (0..self.len).filter(|&y| y != x).map(|y| self.dist(x, y)).reduce(f64::min)
    }
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A sorted, deduplicated set of points of a space with `universe` points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PointSet {
    members: Vec<usize>,
    #[serde(skip)]
    universe: usize,
}

impl PointSet {
    pub fn new(universe: usize, mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if let Some(&bad) = members.iter().find(|&&m| m >= universe) {
            return Err(Error::invalid(format!("point {bad} outside space of {universe} points")));
        }
        Ok(PointSet { members, universe })
    }

    pub fn all(universe: usize) -> Self {
        PointSet {
            members: (0..universe).collect(),
            universe,
        }
    }

    pub fn single(universe: usize, x: usize) -> Result<Self> {
        PointSet::new(universe, vec![x])
    }

    /// Errors unless the set has at least one member.
    pub fn nonempty(self) -> Result<Self> {
        if self.members.is_empty() {
            Err(Error::invalid("subset K must be nonempty"))
        } else {
            Ok(self)
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.members.iter().all(|&m| other.contains(m))
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        let mut m = self.members.clone();
        m.extend_from_slice(&other.members);
        PointSet::new(self.universe.max(other.universe), m).expect("union of valid sets")
    }

    pub fn intersects(&self, other: &PointSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.members.len() && j < other.members.len() {
            match self.members[i].cmp(&other.members[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// Boolean membership mask over the universe.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.universe];
        for &x in &self.members {
            m[x] = true;
        }
        m
    }
}

/// A materialized Bowen ball `B_n(center, eps)` (open) or its closed version.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BowenBall {
    pub center: usize,
    pub n: usize,
    pub eps: f64,
    pub closed: bool,
    pub members: PointSet,
}

#[inline]
pub(crate) fn within(d: f64, eps: f64, closed: bool) -> bool {
    if closed {
        d <= eps
    } else {
        d < eps
    }
}

/// `d_n(x, y) = max_{0 <= i < n} d(f_1^i x, f_1^i y)`.
pub fn bowen_distance(space: &MetricSpace, maps: &MapSequence, n: usize, x: usize, y: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("Bowen horizon must be at least 1"));
    }
    space.check_point(x)?;
    space.check_point(y)?;
    if maps.len() != space.len() {
        return Err(Error::invalid("maps and space have different sizes"));
    }
    let ox = maps.orbit_of(x, n)?;
    let oy = maps.orbit_of(y, n)?;
    Ok(ox.iter().zip(&oy).fold(0.0_f64, |m, (&a, &b)| m.max(space.dist(a, b))))
}

/// Materializes a Bowen ball by scanning every point of the space.
pub fn bowen_ball(
    space: &MetricSpace,
    maps: &MapSequence,
    n: usize,
    eps: f64,
    center: usize,
    closed: bool,
) -> Result<BowenBall> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("ball radius must be positive, got {eps}")));
    }
    if n == 0 {
        return Err(Error::invalid("Bowen horizon must be at least 1"));
    }
    space.check_point(center)?;
    if maps.len() != space.len() {
        return Err(Error::invalid("maps and space have different sizes"));
    }
    let orbits = maps.orbits(n)?;
    let members = (0..space.len())
        .filter(|&y| reach(space, &orbits, center, y, eps, closed, n) >= n)
        .collect();
    Ok(BowenBall {
        center,
        n,
        eps,
        closed,
        members: PointSet::new(space.len(), members)?,
    })
}

/// Number of leading orbit steps along which `x` and `y` stay within `eps`,
/// capped at `horizon`. `y` lies in the `n`-th Bowen ball of `x` iff the
/// result is at least `n`.
#[inline]
pub(crate) fn reach(space: &MetricSpace, orbits: &Orbits, x: usize, y: usize, eps: f64, closed: bool, horizon: usize) -> usize {
    let mut r = 0;
    while r < horizon && within(space.dist(orbits.at(r, x), orbits.at(r, y)), eps, closed) {
        r += 1;
    }
    r
}

/// All Bowen balls of one radius around a list of centers, for every horizon
/// up to `horizon`.
///
/// Row `c` stores each `y` whose reach from `centers[c]` is at least
/// `min_n`, so `B_n(centers[c], eps)` for `min_n <= n <= horizon` is the set
/// of row entries with reach `>= n`.
#[derive(Debug, Clone)]
pub struct BowenReach {
    pub eps: f64,
    pub closed: bool,
    pub horizon: usize,
    pub min_n: usize,
    centers: Vec<usize>,
    rows: Vec<Vec<(u32, u32)>>,
}

impl BowenReach {
    pub fn build(
        space: &MetricSpace,
        orbits: &Orbits,
        centers: &[usize],
        eps: f64,
        closed: bool,
        min_n: usize,
        horizon: usize,
    ) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::invalid(format!("ball radius must be positive, got {eps}")));
        }
        if min_n == 0 || min_n > horizon || horizon > orbits.horizon() {
            return Err(Error::invalid(format!(
                "reach window [{min_n}, {horizon}] incompatible with orbit horizon {}",
                orbits.horizon()
            )));
        }
        let rows = par::map_slice(centers, |&x| {
            (0..space.len())
                .filter_map(|y| {
                    let r = reach(space, orbits, x, y, eps, closed, horizon);
                    (r >= min_n).then_some((y as u32, r as u32))
                })
                .collect::<Vec<_>>()
        });
        Ok(BowenReach {
            eps,
            closed,
            horizon,
            min_n,
            centers: centers.to_vec(),
            rows,
        })
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    /// Members of the ball around `centers[row]` at horizon `n`.
    pub fn ball(&self, row: usize, n: usize) -> impl Iterator<Item = usize> + '_ {
        debug_assert!(n >= self.min_n && n <= self.horizon);
        self.rows[row]
            .iter()
            .filter(move |&&(_, r)| r as usize >= n)
            .map(|&(y, _)| y as usize)
    }

    pub fn ball_vec(&self, row: usize, n: usize) -> Vec<usize> {
        self.ball(row, n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_balls() {
        let s = MetricSpace::discrete(2, None).unwrap();
        let m = MapSequence::identity(2).unwrap();
        assert_eq!(bowen_distance(&s, &m, 3, 0, 1).unwrap(), 1.0);
        assert_eq!(bowen_ball(&s, &m, 1, 0.5, 0, false).unwrap().members.members(), &[0]);
        assert_eq!(bowen_ball(&s, &m, 1, 1.0, 0, true).unwrap().members.members(), &[0, 1]);
        assert_eq!(bowen_ball(&s, &m, 1, 1.0, 0, false).unwrap().members.members(), &[0]);
        assert!(bowen_ball(&s, &m, 1, 0.0, 0, false).is_err());
        assert!(bowen_distance(&s, &m, 0, 0, 1).is_err());
        assert!(bowen_distance(&s, &m, 1, 0, 2).is_err());
    }

    #[test]
    fn single_point_distance_zero() {
        let s = MetricSpace::discrete(1, None).unwrap();
        let m = MapSequence::identity(1).unwrap();
        assert_eq!(bowen_distance(&s, &m, 5, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn metric_validation() {
        assert!(MetricSpace::from_matrix(vec![vec![0.0, 1.0], vec![2.0, 0.0]], None).is_err());
        assert!(MetricSpace::from_matrix(vec![vec![0.0, 0.0], vec![0.0, 0.0]], None).is_err());
        let bad_triangle = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert!(MetricSpace::from_matrix(bad_triangle, None).is_err());
        assert!(MetricSpace::circle_grid(12).is_ok());
    }

    #[test]
    fn reach_table_matches_direct_balls() {
        let s = MetricSpace::circle_grid(12).unwrap();
        let m = MapSequence::constant((0..12).map(|k| (2 * k) % 12).collect()).unwrap();
        let orbits = m.orbits(4).unwrap();
        let centers: Vec<usize> = (0..12).collect();
        for closed in [false, true] {
            let table = BowenReach::build(&s, &orbits, &centers, 0.2, closed, 1, 4).unwrap();
            for c in 0..12 {
                for n in 1..=4 {
                    let direct = bowen_ball(&s, &m, n, 0.2, c, closed).unwrap();
                    assert_eq!(table.ball_vec(c, n), direct.members.members());
                }
            }
        }
    }

    #[test]
    fn point_set_ops() {
        let a = PointSet::new(5, vec![3, 1, 3]).unwrap();
        assert_eq!(a.members(), &[1, 3]);
        assert!(PointSet::new(5, vec![5]).is_err());
        assert!(PointSet::new(5, vec![]).unwrap().nonempty().is_err());
        let b = PointSet::new(5, vec![0, 3]).unwrap();
        assert!(a.intersects(&b));
        assert_eq!(a.union(&b).members(), &[0, 1, 3]);
        assert!(!a.intersects(&PointSet::new(5, vec![0, 2, 4]).unwrap()));
    }
}
