//! Discrete probability measures, local pressures and measure pressures,
//! together with the checkers built on them.

use serde::{Deserialize, Serialize};

use crate::cover::{fixed_cover_sum, separated_supremum, Problem};
use crate::emit::serialize_extended;
use crate::error::{Error, Result};
use crate::numeric::tail_range;
use crate::par;
use crate::pressure::{estimate, validate_schedules, PressureConfig, PressureEstimate, PressureKind};
use crate::space::{reach, MetricSpace, PointSet};
use crate::systems::builtin::ShiftCoding;
use crate::systems::{BirkhoffTable, MapSequence, Potential};

/// Relative slack for comparisons between quantities that agree in exact
/// arithmetic but are summed in different orders.
const ROUNDING: f64 = 1e-12;

/// Nonnegative weights on the points of a space summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
    name: String,
}

impl DiscreteMeasure {
    /// Normalizes `weights` to total mass one.
    pub fn new(name: impl Into<String>, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("measure needs at least one point"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::invalid(format!("measure weight {w} is not a nonnegative number")));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("measure has zero total mass"));
        }
        let weights = if total == 1.0 {
            weights
        } else {
            weights.iter().map(|w| w / total).collect()
        };
        Ok(DiscreteMeasure {
            weights,
            name: name.into(),
        })
    }

    pub fn dirac(len: usize, x: usize) -> Result<Self> {
        if x >= len {
            return Err(Error::invalid(format!("point {x} outside a space of {len} points")));
        }
        let mut w = vec![0.0; len];
        w[x] = 1.0;
        DiscreteMeasure::new(format!("dirac({x})"), w)
    }

    pub fn uniform(len: usize) -> Result<Self> {
        DiscreteMeasure::new("uniform", vec![1.0 / len as f64; len])
    }

    /// Product measure on the words of a cyclic shift with i.i.d. symbols
    /// distributed by `probs`.
    pub fn product(coding: &ShiftCoding, probs: &[f64]) -> Result<Self> {
        if probs.len() != coding.alphabet {
            return Err(Error::invalid(format!(
                "{} symbol probabilities for an alphabet of {}",
                probs.len(),
                coding.alphabet
            )));
        }
        let weights = (0..coding.points())
            .map(|w| (0..coding.length).fold(1.0, |acc, i| acc * probs[coding.symbol(w, i)]))
            .collect();
        let label = probs.iter().map(|p| format!("{p}")).collect::<Vec<_>>().join(",");
        DiscreteMeasure::new(format!("product({label})"), weights)
    }

    /// Binary Bernoulli measure: symbol 1 has probability `p`.
    pub fn bernoulli(coding: &ShiftCoding, p: f64) -> Result<Self> {
        if coding.alphabet != 2 || !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid("Bernoulli measures need a binary alphabet and p in [0, 1]"));
        }
        let mut m = DiscreteMeasure::product(coding, &[1.0 - p, p])?;
        m.name = format!("bernoulli({p})");
        Ok(m)
    }

    /// `μ(· | K)`.
    pub fn conditioned(&self, k: &PointSet) -> Result<Self> {
        self.check_set(k)?;
        let w = self
            .weights
            .iter()
            .enumerate()
            .map(|(x, &w)| if k.contains(x) { w } else { 0.0 })
            .collect();
        let mut m = DiscreteMeasure::new(format!("{}|K", self.name), w)?;
        m.name = format!("{}|K", self.name);
        Ok(m)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn check_set(&self, k: &PointSet) -> Result<()> {
        if k.universe() != self.len() {
            return Err(Error::invalid("point set and measure live on different spaces"));
        }
        Ok(())
    }

    pub fn mass(&self, k: &PointSet) -> Result<f64> {
        self.check_set(k)?;
        Ok(k.iter().map(|x| self.weights[x]).sum())
    }

    pub fn support(&self) -> PointSet {
        let members = (0..self.len()).filter(|&x| self.weights[x] > 0.0).collect();
        PointSet::new(self.len(), members).expect("indices are in range")
    }

    /// `∫ g dμ`, summed in point order.
    pub fn integrate(&self, g: &[f64]) -> f64 {
        self.weights.iter().zip(g).map(|(w, v)| w * v).sum()
    }
}

/// `f_* μ`, with `(f_* μ)(B) = μ(f^{-1} B)`.
pub fn pushforward(mu: &DiscreteMeasure, map: &[usize]) -> Result<DiscreteMeasure> {
    if map.len() != mu.len() {
        return Err(Error::invalid("map and measure have different sizes"));
    }
    let mut out = vec![0.0; mu.len()];
    for (x, &w) in mu.weights.iter().enumerate() {
        let y = map[x];
        if y >= out.len() {
            return Err(Error::invalid(format!("map sends {x} outside the space")));
        }
        out[y] += w;
    }
    Ok(DiscreteMeasure {
        weights: out,
        name: format!("push({})", mu.name),
    })
}

/// Finite family of Lipschitz test functions standing in for the weak*
/// topology.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TestFunctionFamily {
    pub names: Vec<String>,
    pub functions: Vec<Vec<f64>>,
    pub lipschitz_bounds: Vec<f64>,
}

/// Lipschitz bounds are verified on every pair up to this many points.
const LIPSCHITZ_CHECK_LIMIT: usize = 512;

impl TestFunctionFamily {
    pub fn new(space: &MetricSpace, names: Vec<String>, functions: Vec<Vec<f64>>, lipschitz_bounds: Vec<f64>) -> Result<Self> {
        if functions.is_empty() || names.len() != functions.len() || lipschitz_bounds.len() != functions.len() {
            return Err(Error::invalid("test family needs matching, nonempty names, functions and bounds"));
        }
        for (g, (&lip, name)) in functions.iter().zip(lipschitz_bounds.iter().zip(&names)) {
            if g.len() != space.len() || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("test function {name} is not a finite function on the space")));
            }
            if !(lip >= 0.0 && lip.is_finite()) {
                return Err(Error::invalid(format!("test function {name} has an invalid Lipschitz bound")));
            }
            if space.len() <= LIPSCHITZ_CHECK_LIMIT {
                for x in 0..space.len() {
                    for y in x + 1..space.len() {
                        if (g[x] - g[y]).abs() > lip * space.dist(x, y) * (1.0 + ROUNDING) {
                            return Err(Error::invalid(format!(
                                "test function {name} violates its Lipschitz bound at ({x}, {y})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(TestFunctionFamily {
            names,
            functions,
            lipschitz_bounds,
        })
    }

    /// Tent functions `max(0, 1 - d(c, x)/r)` with Lipschitz constant `1/r`.
    pub fn tents(space: &MetricSpace, centers: &[usize], radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid("tent radius must be positive"));
        }
        let functions = centers
            .iter()
            .map(|&c| (0..space.len()).map(|x| (1.0 - space.dist(c, x) / radius).max(0.0)).collect())
            .collect();
        let names = centers.iter().map(|c| format!("tent({c})")).collect();
        TestFunctionFamily::new(space, names, functions, vec![1.0 / radius; centers.len()])
    }

    /// Default family: on spaces of at most 64 points, one tent per point
    /// with radius equal to the smallest distance in the space (these are
    /// point indicators, hence separating); on larger spaces 64 evenly spaced
    /// tents of radius half the diameter.
    pub fn standard(space: &MetricSpace) -> Result<Self> {
        let len = space.len();
        if len == 1 {
            return TestFunctionFamily::new(space, vec!["one".into()], vec![vec![1.0]], vec![0.0]);
        }
        if len <= 64 {
            let sep = (0..len)
                .filter_map(|x| space.separation_of(x))
                .fold(f64::INFINITY, f64::min);
            let centers: Vec<usize> = (0..len).collect();
            return TestFunctionFamily::tents(space, &centers, sep);
        }
        let diameter = (0..len).map(|y| space.dist(0, y)).fold(0.0, f64::max);
        let centers: Vec<usize> = (0..64).map(|i| i * len / 64).collect();
        TestFunctionFamily::tents(space, &centers, 0.5 * diameter.max(f64::MIN_POSITIVE))
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn max_lipschitz(&self) -> f64 {
        self.lipschitz_bounds.iter().copied().fold(0.0, f64::max)
    }

    /// `max_g |∫g dμ - ∫g dν|`.
    pub fn seminorm(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        self.functions
            .iter()
            .map(|g| (mu.integrate(g) - nu.integrate(g)).abs())
            .fold(0.0, f64::max)
    }
}

/// `max_{k <= horizon} max_g |∫ g∘f_k dμ - ∫ g dμ|`.
pub fn invariance_defect(mu: &DiscreteMeasure, maps: &MapSequence, horizon: usize, family: &TestFunctionFamily) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let mut worst: f64 = 0.0;
    for k in 1..=horizon {
        let pushed = pushforward(mu, &maps.map(k)?)?;
        worst = worst.max(family.seminorm(&pushed, mu));
    }
    Ok(worst)
}

/// `μ(B)` for a materialized ball.
pub fn ball_mass(mu: &DiscreteMeasure, ball: &crate::space::BowenBall) -> Result<f64> {
    mu.mass(&ball.members)
}

/// Brin–Katok quantities `(-ln μ(B_n(x, ε)) + S_nφ(x))/n` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LocalPressureProfile {
    pub points: Vec<usize>,
    pub eps_schedule: Vec<f64>,
    pub n_schedule: Vec<usize>,
    /// Per point, row-major over `(ε, n)`; `+∞` marks a zero-mass ball.
    #[serde(serialize_with = "serialize_table")]
    pub per_point: Vec<Vec<f64>>,
    /// Tail maximum at the smallest `ε`.
    #[serde(serialize_with = "serialize_list")]
    pub upper: Vec<f64>,
    /// Tail minimum at the smallest `ε`.
    #[serde(serialize_with = "serialize_list")]
    pub lower: Vec<f64>,
    /// `(point, eps, n)` of every zero-mass ball.
    pub infinite: Vec<(usize, f64, usize)>,
}

fn serialize_list<S: serde::Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Extended(*x))?;
    }
    seq.end()
}

fn serialize_table<S: serde::Serializer>(v: &[Vec<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for row in v {
        seq.serialize_element(&row.iter().map(|&x| Extended(x)).collect::<Vec<_>>())?;
    }
    seq.end()
}

/// A float that serializes infinities as strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extended(pub f64);

impl Serialize for Extended {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_extended(&self.0, s)
    }
}

impl LocalPressureProfile {
    fn position(&self, x: usize) -> Option<usize> {
        self.points.binary_search(&x).ok()
    }

    pub fn upper_at(&self, x: usize) -> Option<f64> {
        self.position(x).map(|i| self.upper[i])
    }

    pub fn lower_at(&self, x: usize) -> Option<f64> {
        self.position(x).map(|i| self.lower[i])
    }

    /// Rows `point,eps,n,value` with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point,eps,n,value\n");
        let w = self.n_schedule.len();
        for (i, &x) in self.points.iter().enumerate() {
            for (j, v) in self.per_point[i].iter().enumerate() {
                out.push_str(&format!(
                    "{x},{},{},{}\n",
                    crate::emit::format_f64(self.eps_schedule[j / w]),
                    self.n_schedule[j % w],
                    crate::emit::format_f64(*v)
                ));
            }
        }
        out
    }
}

/// Local pressures at each sampled point.
pub fn local_pressure(
    mu: &DiscreteMeasure,
    space: &MetricSpace,
    maps: &MapSequence,
    potential: &Potential,
    sample: &PointSet,
    eps_schedule: &[f64],
    n_schedule: &[usize],
) -> Result<LocalPressureProfile> {
    validate_schedules(eps_schedule, n_schedule)?;
    if sample.is_empty() {
        return Err(Error::invalid("sample must be nonempty"));
    }
    if mu.len() != space.len() || sample.universe() != space.len() || potential.len() != space.len() {
        return Err(Error::invalid("measure, sample, potential and space disagree in size"));
    }
    let horizon = *n_schedule.last().expect("nonempty");
    let orbits = maps.orbits(horizon)?;
    let birk = BirkhoffTable::new(potential, &orbits)?;
    let w = mu.weights();
    let rows: Vec<Vec<f64>> = par::map_slice(sample.members(), |&x| {
        let mut row = Vec::with_capacity(eps_schedule.len() * n_schedule.len());
        for &eps in eps_schedule {
            let reaches: Vec<usize> = (0..space.len())
                .map(|y| if w[y] > 0.0 { reach(space, &orbits, x, y, eps, false, horizon) } else { 0 })
                .collect();
            for &n in n_schedule {
                let mass: f64 = (0..space.len()).filter(|&y| reaches[y] >= n).map(|y| w[y]).sum();
                let value = if mass > 0.0 {
                    (-mass.ln() + birk.sum(n, x)) / n as f64
                } else {
                    f64::INFINITY
                };
                row.push(value);
            }
        }
        row
    });
    let width = n_schedule.len();
    let mut infinite = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if v.is_infinite() {
                infinite.push((sample.members()[i], eps_schedule[j / width], n_schedule[j % width]));
            }
        }
    }
    let last_row = |row: &Vec<f64>| row[row.len() - width..][tail_range(width)].to_vec();
    let upper = rows
        .iter()
        .map(|r| last_row(r).into_iter().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let lower = rows.iter().map(|r| last_row(r).into_iter().fold(f64::INFINITY, f64::min)).collect();
    Ok(LocalPressureProfile {
        points: sample.members().to_vec(),
        eps_schedule: eps_schedule.to_vec(),
        n_schedule: n_schedule.to_vec(),
        per_point: rows,
        upper,
        lower,
        infinite,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Side {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SetIntegral {
    #[serde(serialize_with = "serialize_extended")]
    pub value: f64,
    /// Points of `K ∩ supp μ` whose profile value is infinite.
    pub infinite_points: Vec<usize>,
}

/// `∫_K P_μ(x) dμ(x)` with the chosen side of the profile.
pub fn measure_pressure_over_set(mu: &DiscreteMeasure, k: &PointSet, profile: &LocalPressureProfile, side: Side) -> Result<SetIntegral> {
    mu.check_set(k)?;
    let mut value = 0.0;
    let mut infinite_points = Vec::new();
    for x in k.iter().filter(|&x| mu.weights()[x] > 0.0) {
        let v = match side {
            Side::Upper => profile.upper_at(x),
            Side::Lower => profile.lower_at(x),
        }
        .ok_or_else(|| Error::invalid(format!("profile does not cover support point {x}")))?;
        if v.is_infinite() {
            infinite_points.push(x);
        }
        value += mu.weights()[x] * v;
    }
    if !infinite_points.is_empty() {
        log::warn!("measure pressure over K is infinite at {} points", infinite_points.len());
    }
    Ok(SetIntegral { value, infinite_points })
}

/// Candidate sets of mass `>= 1 - δ`: the full support, and for `δ > 0` the
/// smallest prefix of support points sorted by ascending upper local
/// pressure that reaches that mass.
pub fn candidate_sets(mu: &DiscreteMeasure, profile: &LocalPressureProfile, delta: f64) -> Result<Vec<PointSet>> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta must lie in [0, 1), got {delta}")));
    }
    let support = mu.support();
    let mut out = vec![support.clone()];
    if delta > 0.0 {
        let mut order: Vec<(f64, usize)> = support
            .iter()
            .map(|x| {
                profile
                    .upper_at(x)
                    .map(|v| (v, x))
                    .ok_or_else(|| Error::invalid(format!("profile does not cover support point {x}")))
            })
            .collect::<Result<_>>()?;
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut mass = 0.0;
        let mut prefix = Vec::new();
        for (_, x) in order {
            prefix.push(x);
            mass += mu.weights()[x];
            if mass >= 1.0 - delta - ROUNDING {
                break;
            }
        }
        let set = PointSet::new(mu.len(), prefix)?;
        if set != support {
            out.push(set);
        }
    }
    Ok(out)
}

fn check_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() {
        return Err(Error::invalid("delta schedule must be nonempty"));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) || deltas.iter().any(|d| !(0.0..1.0).contains(d)) {
        return Err(Error::invalid("delta schedule must be strictly decreasing within [0, 1)"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CandidateValue {
    pub delta: f64,
    pub set: Vec<usize>,
    pub mass: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MeasurePressure {
    pub kind: PressureKind,
    pub value: f64,
    /// Minimum over candidates, per `δ`.
    pub per_delta: Vec<f64>,
    pub candidates: Vec<CandidateValue>,
}

/// Measure-theoretic version of a Carathéodory–Pesin pressure: the
/// infimum of the pressure over sets of mass at least `1 - δ`.
pub fn measure_cp_pressure(
    mu: &DiscreteMeasure,
    space: &MetricSpace,
    maps: &MapSequence,
    potential: &Potential,
    kind: PressureKind,
    deltas: &[f64],
    config: &PressureConfig,
) -> Result<MeasurePressure> {
    if kind == PressureKind::Classical {
        return Err(Error::invalid("measure pressure is defined for pesin, packing and capacity kinds"));
    }
    check_deltas(deltas)?;
    let support = mu.support();
    let profile = local_pressure(mu, space, maps, potential, &support, &config.eps_schedule, &config.n_schedule)?;
    let mut candidates = Vec::new();
    let mut per_delta = Vec::new();
    for &delta in deltas {
        let mut best = f64::INFINITY;
        for set in candidate_sets(mu, &profile, delta)? {
            let problem = Problem::new(space, maps, &set, potential)?;
            let value = estimate(&problem, config, kind)?.value;
            best = best.min(value);
            candidates.push(CandidateValue {
                delta,
                mass: mu.mass(&set)?,
                set: set.members().to_vec(),
                value,
            });
        }
        per_delta.push(best);
    }
    Ok(MeasurePressure {
        kind,
        value: *per_delta.last().expect("nonempty"),
        per_delta,
        candidates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SpanningMeasurePressure {
    pub value: f64,
    /// `[δ][ε][n]` minimum over candidates of `ln Q_n / n`.
    pub table: Vec<Vec<Vec<f64>>>,
    pub per_delta: Vec<f64>,
}

/// Spanning-set measure pressure: `ln Q_n(K)/n` minimized over candidate
/// sets of mass `>= 1 - δ`, then tail max over `n` at the smallest `ε`.
pub fn spanning_measure_pressure(
    mu: &DiscreteMeasure,
    space: &MetricSpace,
    maps: &MapSequence,
    potential: &Potential,
    deltas: &[f64],
    config: &PressureConfig,
) -> Result<SpanningMeasurePressure> {
    check_deltas(deltas)?;
    config.validate()?;
    let support = mu.support();
    let profile = local_pressure(mu, space, maps, potential, &support, &config.eps_schedule, &config.n_schedule)?;
    let mut table = Vec::new();
    let mut per_delta = Vec::new();
    for &delta in deltas {
        let sets = candidate_sets(mu, &profile, delta)?;
        let mut grid = Vec::new();
        for &eps in &config.eps_schedule {
            let row = par::try_map_slice(&config.n_schedule, |&n| {
                let mut best = f64::INFINITY;
                for set in &sets {
                    let problem = Problem::new(space, maps, set, potential)?;
                    best = best.min(fixed_cover_sum(&problem, n, eps, &config.options)?.log_value / n as f64);
                }
                Ok::<_, Error>(best)
            })?;
            grid.push(row);
        }
        let last = grid.last().expect("nonempty schedule");
        per_delta.push(last[tail_range(last.len())].iter().copied().fold(f64::NEG_INFINITY, f64::max));
        table.push(grid);
    }
    Ok(SpanningMeasurePressure {
        value: *per_delta.last().expect("nonempty"),
        table,
        per_delta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BallViolation {
    pub center: usize,
    pub n: usize,
    pub mass: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Outcome {
    /// Hypotheses hold and the conclusion was confirmed.
    Confirmed,
    /// A hypothesis failed; nothing is asserted.
    HypothesisFailed,
    /// Hypotheses hold but the estimate contradicts the conclusion.
    ConclusionViolated,
    /// Nothing to check.
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DistributionReport {
    pub s: f64,
    pub eps: f64,
    pub big_k: f64,
    pub positive_mass: bool,
    pub ball_bound: bool,
    pub limit_positive: bool,
    pub first_violation: Option<BallViolation>,
    /// `limsup` surrogate: max over the last half of the sequence.
    pub tail_start: usize,
    pub pesin: Option<PressureEstimate>,
    pub tolerance: f64,
    pub outcome: Outcome,
}

/// Checks the hypotheses of the pressure distribution principle for a
/// measure sequence and, when they hold, its conclusion `P^B(K) >= s`.
#[allow(clippy::too_many_arguments)]
pub fn distribution_principle_check(
    mus: &[DiscreteMeasure],
    problem: &Problem,
    s: f64,
    eps: f64,
    big_k: f64,
    n_schedule: &[usize],
    config: &PressureConfig,
) -> Result<DistributionReport> {
    if mus.is_empty() {
        return Err(Error::invalid("measure sequence must be nonempty"));
    }
    validate_schedules(&[eps], n_schedule)?;
    if !(big_k > 0.0) {
        return Err(Error::invalid("the constant K must be positive"));
    }
    let k = problem.k;
    let positive_mass = mus.iter().map(|m| m.mass(k)).collect::<Result<Vec<_>>>()?.iter().all(|&m| m > 0.0);
    let tail_start = tail_range(mus.len()).start;
    let tail = &mus[tail_start..];
    let horizon = *n_schedule.last().expect("nonempty");
    let orbits = problem.maps.orbits(horizon)?;
    let birk = BirkhoffTable::new(problem.potential, &orbits)?;
    let space = problem.space;
    let k_mask = k.mask();
    let violations: Vec<Option<BallViolation>> = par::map_range(space.len(), |x| {
        let reaches: Vec<usize> = (0..space.len()).map(|y| reach(space, &orbits, x, y, eps, false, horizon)).collect();
        for &n in n_schedule {
            if !(0..space.len()).any(|y| reaches[y] >= n && k_mask[y]) {
                continue;
            }
            let mass = tail
                .iter()
                .map(|m| (0..space.len()).filter(|&y| reaches[y] >= n).map(|y| m.weights()[y]).sum::<f64>())
                .fold(0.0, f64::max);
            let bound = big_k * (-(n as f64) * s + birk.sum(n, x)).exp();
            if mass > bound * (1.0 + ROUNDING) {
                return Some(BallViolation { center: x, n, mass, bound });
            }
        }
        None
    });
    let first_violation = violations.into_iter().flatten().next();
    let ball_bound = first_violation.is_none();
    let limit_positive = mus.last().expect("nonempty").mass(k)? > 0.0;
    let mut report = DistributionReport {
        s,
        eps,
        big_k,
        positive_mass,
        ball_bound,
        limit_positive,
        first_violation,
        tail_start,
        pesin: None,
        tolerance: 0.0,
        outcome: Outcome::HypothesisFailed,
    };
    if positive_mass && ball_bound && limit_positive {
        let mut cfg = config.clone();
        cfg.eps_schedule = vec![eps];
        let pesin = crate::pressure::pesin_pressure(problem, &cfg)?;
        report.tolerance = 2.0 * cfg.tol + pesin.allowance;
        report.outcome = if pesin.value >= s - report.tolerance {
            Outcome::Confirmed
        } else {
            Outcome::ConclusionViolated
        };
        report.pesin = Some(pesin);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Direction {
    /// `P̄_μ(x) <= s` on `K` implies `P^P(K) <= s`.
    UpperLe,
    /// `P̄_μ(x) >= s` on `K` and `μ(K) > 0` imply `P^P(K) >= s`.
    LowerGe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BillingsleyReport {
    pub s: f64,
    pub direction: Direction,
    pub hypothesis: bool,
    /// Points of `K` violating the pointwise hypothesis (first ten).
    pub witnesses: Vec<usize>,
    pub mass_of_k: f64,
    pub packing: Option<PressureEstimate>,
    pub tolerance: f64,
    pub outcome: Outcome,
}

/// Billingsley-type transfer of pointwise upper local pressure bounds on
/// `K` to the packing pressure of `K`.
pub fn billingsley_bound(
    mu: &DiscreteMeasure,
    problem: &Problem,
    s: f64,
    profile: &LocalPressureProfile,
    direction: Direction,
    config: &PressureConfig,
) -> Result<BillingsleyReport> {
    let mut witnesses = Vec::new();
    for x in problem.k.iter() {
        let v = profile
            .upper_at(x)
            .ok_or_else(|| Error::invalid(format!("profile does not cover point {x} of K")))?;
        let holds = match direction {
            Direction::UpperLe => v <= s,
            Direction::LowerGe => v >= s,
        };
        if !holds && witnesses.len() < 10 {
            witnesses.push(x);
        }
    }
    let mass_of_k = mu.mass(problem.k)?;
    let hypothesis = witnesses.is_empty() && (direction == Direction::UpperLe || mass_of_k > 0.0);
    let mut report = BillingsleyReport {
        s,
        direction,
        hypothesis,
        witnesses,
        mass_of_k,
        packing: None,
        tolerance: 0.0,
        outcome: Outcome::HypothesisFailed,
    };
    if hypothesis {
        let packing = crate::pressure::packing_pressure(problem, config)?;
        report.tolerance = config.chain_tol + packing.allowance;
        let ok = match direction {
            Direction::UpperLe => packing.value <= s + report.tolerance,
            Direction::LowerGe => packing.value >= s - report.tolerance,
        };
        report.outcome = if ok { Outcome::Confirmed } else { Outcome::ConclusionViolated };
        report.packing = Some(packing);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VariationalMember {
    pub name: String,
    #[serde(serialize_with = "serialize_extended")]
    pub upper_over_k: f64,
    pub packing_of_measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VariationalReport {
    pub members: Vec<VariationalMember>,
    #[serde(serialize_with = "serialize_extended")]
    pub sup_upper: f64,
    pub argmax_upper: String,
    pub sup_packing_of_measure: f64,
    pub packing: PressureEstimate,
    /// `packing - sup_upper`.
    #[serde(serialize_with = "serialize_extended")]
    pub gap_upper: f64,
    pub gap_packing_of_measure: f64,
    /// Whether the packing estimate is at least `‖φ‖_∞`.
    pub precondition: bool,
    pub tolerance: f64,
    /// The provable direction: both suprema are at most the packing estimate
    /// plus the tolerance.
    pub pass: bool,
}

/// Compares measure pressures of a family of measures carried by `K` with
/// the packing pressure of `K`.
pub fn variational_gap(problem: &Problem, family: &[DiscreteMeasure], config: &PressureConfig) -> Result<VariationalReport> {
    if family.is_empty() {
        return Err(Error::invalid("measure family must be nonempty"));
    }
    for mu in family {
        let m = mu.mass(problem.k)?;
        if (m - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("measure {} has mass {m} on K, not 1", mu.name())));
        }
    }
    let packing = crate::pressure::packing_pressure(problem, config)?;
    let mut members = Vec::new();
    for mu in family {
        let support = mu.support();
        let profile = local_pressure(
            mu,
            problem.space,
            problem.maps,
            problem.potential,
            &support,
            &config.eps_schedule,
            &config.n_schedule,
        )?;
        let upper = measure_pressure_over_set(mu, problem.k, &profile, Side::Upper)?.value;
        let own = if support == *problem.k {
            packing.value
        } else {
            let sub = Problem::new(problem.space, problem.maps, &support, problem.potential)?;
            crate::pressure::packing_pressure(&sub, config)?.value
        };
        members.push(VariationalMember {
            name: mu.name().to_string(),
            upper_over_k: upper,
            packing_of_measure: own,
        });
    }
    let (argmax, sup_upper) = members
        .iter()
        .map(|m| (m.name.clone(), m.upper_over_k))
        .fold((String::new(), f64::NEG_INFINITY), |acc, m| if m.1 > acc.1 { m } else { acc });
    let sup_packing_of_measure = members.iter().map(|m| m.packing_of_measure).fold(f64::NEG_INFINITY, f64::max);
    let tolerance = config.chain_tol + packing.allowance;
    let pass = sup_upper <= packing.value + tolerance && sup_packing_of_measure <= packing.value + tolerance;
    Ok(VariationalReport {
        precondition: packing.value >= problem.potential.sup_norm(),
        gap_upper: packing.value - sup_upper,
        gap_packing_of_measure: packing.value - sup_packing_of_measure,
        members,
        sup_upper,
        argmax_upper: argmax,
        sup_packing_of_measure,
        packing,
        tolerance,
        pass,
    })
}

/// `Γ_n(x) = (1/n) Σ_{j<n} δ_{f_1^j x}`.
pub fn empirical_measure(maps: &MapSequence, x: usize, n: usize) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let orbit = maps.orbit_of(x, n)?;
    let mut counts = vec![0usize; maps.len()];
    for y in orbit {
        counts[y] += 1;
    }
    DiscreteMeasure::new(
        format!("empirical({x},{n})"),
        counts.iter().map(|&c| c as f64 / n as f64).collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GenericPoints {
    /// `X_{n,F}` for `n = 1..=nMax`.
    pub per_n: Vec<PointSet>,
    /// Points with `Γ_n ∈ F` for every `n` in `[m, nMax]`.
    pub generic: PointSet,
    pub radius: f64,
    pub m: usize,
}

/// `X_{n,F} = {x : max_g |∫g dΓ_n(x) - ∫g dμ| < radius}` and the generic
/// surrogate built from them.
pub fn generic_points(
    mu: &DiscreteMeasure,
    maps: &MapSequence,
    family: &TestFunctionFamily,
    radius: f64,
    m: usize,
    n_max: usize,
) -> Result<GenericPoints> {
    if !(radius > 0.0) || m == 0 || m > n_max {
        return Err(Error::invalid("need radius > 0 and 1 <= m <= nMax"));
    }
    let len = maps.len();
    if mu.len() != len || family.functions.iter().any(|g| g.len() != len) {
        return Err(Error::invalid("measure, family and maps disagree in size"));
    }
    let orbits = maps.orbits(n_max)?;
    let targets: Vec<f64> = family.functions.iter().map(|g| mu.integrate(g)).collect();
    // inside[x][n-1]: whether Γ_n(x) ∈ F.
    let inside: Vec<Vec<bool>> = par::map_range(len, |x| {
        let mut sums = vec![0.0; family.len()];
        (1..=n_max)
            .map(|n| {
                let y = orbits.at(n - 1, x);
                for (s, g) in sums.iter_mut().zip(&family.functions) {
                    *s += g[y];
                }
                sums.iter()
                    .zip(&targets)
                    .map(|(s, t)| (s / n as f64 - t).abs())
                    .fold(0.0, f64::max)
                    < radius
            })
            .collect()
    });
    let per_n = (1..=n_max)
        .map(|n| PointSet::new(len, (0..len).filter(|&x| inside[x][n - 1]).collect()))
        .collect::<Result<Vec<_>>>()?;
    let generic = PointSet::new(len, (0..len).filter(|&x| inside[x][m - 1..].iter().all(|&b| b)).collect())?;
    Ok(GenericPoints {
        per_n,
        generic,
        radius,
        m,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GenericBoundReport {
    pub generic: Vec<usize>,
    pub left: Option<f64>,
    /// `(1/n) ln P_n(X_{n,F}, ε)` per `n` of the schedule at the smallest `ε`.
    #[serde(serialize_with = "serialize_list")]
    pub right_per_n: Vec<f64>,
    #[serde(serialize_with = "serialize_extended")]
    pub right: f64,
    pub tolerance: f64,
    pub outcome: Outcome,
}

/// Packing pressure of the generic surrogate against the separated growth
/// of the sets `X_{n,F}`.
pub fn packing_bound_on_generic(
    mu: &DiscreteMeasure,
    space: &MetricSpace,
    maps: &MapSequence,
    potential: &Potential,
    family: &TestFunctionFamily,
    radius: f64,
    m: usize,
    config: &PressureConfig,
) -> Result<GenericBoundReport> {
    config.validate()?;
    let n_top = *config.n_schedule.last().expect("nonempty");
    let gp = generic_points(mu, maps, family, radius, m.min(n_top), n_top)?;
    let eps = *config.eps_schedule.last().expect("nonempty");
    let right_per_n: Vec<f64> = config
        .n_schedule
        .iter()
        .map(|&n| {
            let set = &gp.per_n[n - 1];
            if set.is_empty() {
                return Ok(f64::NEG_INFINITY);
            }
            let problem = Problem::new(space, maps, set, potential)?;
            Ok(separated_supremum(&problem, n, eps, &config.options)?.log_value / n as f64)
        })
        .collect::<Result<_>>()?;
    let right = right_per_n[tail_range(right_per_n.len())].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if gp.generic.is_empty() {
        return Ok(GenericBoundReport {
            generic: Vec::new(),
            left: None,
            right_per_n,
            right,
            tolerance: 0.0,
            outcome: Outcome::Vacuous,
        });
    }
    let problem = Problem::new(space, maps, &gp.generic, potential)?;
    let packing = crate::pressure::packing_pressure(&problem, config)?;
    let tolerance = config.chain_tol + packing.allowance;
    let outcome = if packing.value <= right + tolerance {
        Outcome::Confirmed
    } else {
        Outcome::ConclusionViolated
    };
    Ok(GenericBoundReport {
        generic: gp.generic.members().to_vec(),
        left: Some(packing.value),
        right_per_n,
        right,
        tolerance,
        outcome,
    })
}

/// Points `x` whose open `radius`-ball `U` meets `f_n^k(U)` for some
/// `1 <= n, k <= kMax`.
pub fn non_wandering_set(space: &MetricSpace, maps: &MapSequence, k_max: usize, radius: f64) -> Result<PointSet> {
    if k_max == 0 || !(radius > 0.0) {
        return Err(Error::invalid("need kMax >= 1 and radius > 0"));
    }
    if maps.len() != space.len() {
        return Err(Error::invalid("maps and space have different sizes"));
    }
    let tables = (1..2 * k_max).map(|j| maps.map(j)).collect::<Result<Vec<_>>>()?;
    let members = par::map_range(space.len(), |x| {
        let u: Vec<bool> = (0..space.len()).map(|y| space.dist(x, y) < radius).collect();
        let start: Vec<usize> = (0..space.len()).filter(|&y| u[y]).collect();
        for n in 1..=k_max {
            let mut image = start.clone();
            for k in 1..=k_max {
                let f = &tables[n + k - 2];
                for y in image.iter_mut() {
                    *y = f[*y];
                }
                if image.iter().any(|&y| u[y]) {
                    return true;
                }
            }
        }
        false
    });
    PointSet::new(space.len(), (0..space.len()).filter(|&x| members[x]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct UniformLimitReport {
    /// `sup_x d(f_j x, f x)` for `j = 1..=horizon`.
    pub distances: Vec<f64>,
    pub tail_distance: f64,
    pub sequence_defect: f64,
    pub limit_defect: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Invariance under the limit of a uniformly convergent map sequence.
pub fn uniform_limit_check(
    mu: &DiscreteMeasure,
    space: &MetricSpace,
    maps: &MapSequence,
    limit: &[usize],
    family: &TestFunctionFamily,
    horizon: usize,
) -> Result<UniformLimitReport> {
    if limit.len() != space.len() || maps.len() != space.len() {
        return Err(Error::invalid("limit map, maps and space disagree in size"));
    }
    let distances = (1..=horizon)
        .map(|j| {
            let f = maps.map(j)?;
            Ok((0..space.len()).map(|x| space.dist(f[x], limit[x])).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    let tail_distance = distances[tail_range(distances.len())].iter().copied().fold(0.0, f64::max);
    let sequence_defect = invariance_defect(mu, maps, horizon, family)?;
    let limit_defect = family.seminorm(&pushforward(mu, limit)?, mu);
    let bound = family.max_lipschitz() * tail_distance + sequence_defect;
    Ok(UniformLimitReport {
        pass: limit_defect <= bound * (1.0 + ROUNDING) + ROUNDING,
        distances,
        tail_distance,
        sequence_defect,
        limit_defect,
        bound,
    })
}
