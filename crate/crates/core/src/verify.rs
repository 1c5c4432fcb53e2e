//! The acceptance suite: committed fixtures and the checks run against them.
//!
//! Reports contain only computed values, never timings, so two runs with
//! different worker counts must serialize to identical bytes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cover::{
    separated_set, spanning_set, CoverFamily, EngineOptions, PackingFamily, Problem,
};
use crate::emit::to_json;
use crate::error::{Error, Result};
use crate::measure::{
    billingsley_bound, distribution_principle_check, empirical_measure, generic_points, invariance_defect,
    local_pressure, measure_cp_pressure, measure_pressure_over_set, non_wandering_set, packing_bound_on_generic,
    pushforward, spanning_measure_pressure, uniform_limit_check, variational_gap, Direction, DiscreteMeasure, Outcome,
    Side, TestFunctionFamily,
};
use crate::oracle::{exact_cover_infimum, exact_packing_supremum, OracleBudget};
use crate::par;
use crate::pressure::{
    classical_pressure, estimate, relationship_report, ClassicalMode, PressureConfig, PressureEstimate, PressureKind,
};
use crate::space::{bowen_ball, PointSet};
use crate::systems::builtin::{builtin_system, CircleMaps, InlineGeometry, System, SystemSpec};
use crate::systems::Potential;

/// Slack for comparisons that are exact up to summation order.
const ROUNDING: f64 = 1e-12;
/// Largest space handed to the property and oracle suites.
const SMALL: usize = 12;
const RANDOM_INSTANCES: u64 = 14;
const LONG: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Relation {
    /// `lhs <= rhs + tolerance`.
    Le,
    /// `lhs >= rhs - tolerance`.
    Ge,
    /// `|lhs - rhs| <= tolerance`.
    Near,
    /// A boolean fact; `lhs` is 1 or 0.
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Check {
    pub name: String,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, relation: Relation, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let pass = match relation {
            Relation::Le => lhs <= rhs + tolerance,
            Relation::Ge => lhs >= rhs - tolerance,
            Relation::Near => (lhs - rhs).abs() <= tolerance,
            Relation::Holds => lhs == 1.0,
        };
        Check {
            name: name.into(),
            relation,
            lhs,
            rhs,
            tolerance,
            pass,
        }
    }

    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Check::new(name, Relation::Le, lhs, rhs, tolerance)
    }

    pub fn ge(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Check::new(name, Relation::Ge, lhs, rhs, tolerance)
    }

    pub fn near(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Check::new(name, Relation::Near, lhs, rhs, tolerance)
    }

    pub fn holds(name: impl Into<String>, fact: bool) -> Self {
        Check::new(name, Relation::Holds, if fact { 1.0 } else { 0.0 }, 1.0, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CriterionReport {
    pub id: usize,
    pub title: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    /// Cases left out, with the reason.
    pub skipped: Vec<String>,
}

impl CriterionReport {
    fn new(id: usize, checks: Vec<Check>, skipped: Vec<String>) -> Self {
        CriterionReport {
            id,
            title: TITLES[id - 1].to_string(),
            pass: !checks.is_empty() && checks.iter().all(|c| c.pass),
            checks,
            skipped,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// One line: id, title, verdict and check count.
    pub fn summary(&self) -> String {
        let failed = self.failures().count();
        format!(
            "criterion {:>2} {:<38} {} ({} checks, {} failed, {} skipped)",
            self.id,
            self.title,
            if self.pass { "PASS" } else { "FAIL" },
            self.checks.len(),
            failed,
            self.skipped.len()
        )
    }
}

pub const CRITERIA: usize = 11;

pub const TITLES: [&str; CRITERIA] = [
    "constant-system exactness",
    "full-shift entropy",
    "relationship chain",
    "pressure properties",
    "oracle equivalence",
    "local pressure fixtures",
    "distribution principle",
    "packing pinch",
    "variational principle",
    "invariant measures and generic points",
    "determinism",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyReport {
    pub criteria: Vec<CriterionReport>,
    pub pass: bool,
}

impl VerifyReport {
    fn new(criteria: Vec<CriterionReport>) -> Self {
        let pass = criteria.iter().all(|c| c.pass);
        VerifyReport { criteria, pass }
    }
}

/// Runs one of the criteria 1 to 10. Criterion 11 compares whole suites and
/// is run by [`run_suite`].
pub fn run_criterion(id: usize) -> Result<CriterionReport> {
    match id {
        1 => constant_system(),
        2 => full_shift(),
        3 => relationship_chain(),
        4 => pressure_properties(),
        5 => oracle_equivalence(),
        6 => local_fixtures(),
        7 => distribution_principle(),
        8 => packing_pinch(),
        9 => variational(),
        10 => invariant_measures(),
        11 => Err(Error::invalid("criterion 11 compares full suites; use run_suite")),
        _ => Err(Error::invalid(format!("no criterion {id}; valid ids are 1..={CRITERIA}"))),
    }
}

/// Runs the requested criteria. When 11 is among them, criteria 1 to 10
/// run once on a one-thread pool and once on `workers` threads and the two
/// serialized reports are compared byte for byte.
pub fn run_suite(ids: &[usize], workers: usize) -> Result<VerifyReport> {
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > CRITERIA) {
        return Err(Error::invalid(format!("no criterion {bad}; valid ids are 1..={CRITERIA}")));
    }
    let base: Vec<usize> = ids.iter().copied().filter(|&i| i != 11).collect();
    let run = |list: &[usize]| list.iter().map(|&i| run_criterion(i)).collect::<Result<Vec<_>>>();
    if !ids.contains(&11) {
        return Ok(VerifyReport::new(par::with_workers(workers, || run(&base))??));
    }
    let full: Vec<usize> = (1..CRITERIA).collect();
    let single = VerifyReport::new(par::with_workers(1, || run(&full))??);
    let many = VerifyReport::new(par::with_workers(workers, || run(&full))??);
    let (a, b) = (to_json(&single)?, to_json(&many)?);
    let identical = a == b;
    let first_difference = a
        .bytes()
        .zip(b.bytes())
        .position(|(x, y)| x != y)
        .unwrap_or(a.len().min(b.len()));
    let mut checks = vec![Check::holds(format!("reports identical with 1 and {workers} workers"), identical)];
    if !identical {
        checks.push(Check::near("first differing byte", first_difference as f64, a.len() as f64, 0.0));
    }
    let determinism = CriterionReport::new(11, checks, Vec::new());
    let mut out: Vec<CriterionReport> = many.criteria.into_iter().filter(|c| base.contains(&c.id)).collect();
    out.push(determinism);
    out.sort_by_key(|c| c.id);
    Ok(VerifyReport::new(out))
}

/// A committed relationship instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub system: System,
    pub k: PointSet,
    pub potential: Potential,
    pub config: PressureConfig,
}

impl Instance {
    pub fn problem(&self) -> Result<Problem<'_>> {
        Problem::new(&self.system.space, &self.system.maps, &self.k, &self.potential)
    }

    pub fn len(&self) -> usize {
        self.system.len()
    }

    pub fn is_empty(&self) -> bool {
        self.system.is_empty()
    }
}

fn system(descriptor: &str) -> Result<System> {
    builtin_system(&descriptor.parse::<SystemSpec>()?)
}

fn instance(
    name: &str,
    system: System,
    k: Option<Vec<usize>>,
    potential: Option<Vec<f64>>,
    eps: Vec<f64>,
    n: Vec<usize>,
    window: Option<(usize, usize)>,
) -> Result<Instance> {
    let len = system.len();
    let k = match k {
        Some(members) => PointSet::new(len, members)?.nonempty()?,
        None => PointSet::all(len),
    };
    let potential = match potential {
        Some(v) => Potential::new(format!("{name}-phi"), v)?,
        None => system.potential.clone(),
    };
    let mut config = PressureConfig::new(eps, n)?;
    if let Some((lo, hi)) = window {
        config = config.with_window(lo, hi);
    }
    Ok(Instance {
        name: name.to_string(),
        system,
        k,
        potential,
        config,
    })
}

/// Half the smallest distance in the space: below it every Bowen ball is a
/// single point, which is where the `ε → 0` limit is attained.
fn fine_scale(sys: &System) -> f64 {
    let sep = (0..sys.len())
        .filter_map(|x| sys.space.separation_of(x))
        .fold(f64::INFINITY, f64::min);
    round3(0.5 * sep).max(1e-3)
}

/// Long enough for windowed and fixed-length surrogates to settle on
/// systems of a few points.
fn long_schedule() -> Vec<usize> {
    (1..=LONG).collect()
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// Random system on 4 to 10 points of the unit square with one to three
/// map tables, a potential in `[-1, 1]` and a random subset `K`.
pub fn random_instance(seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.random_range(4..=10usize);
    let points: Vec<Vec<f64>> = (0..len)
        .map(|_| vec![round3(rng.random::<f64>()), round3(rng.random::<f64>())])
        .collect();
    let tables: Vec<Vec<usize>> = (0..rng.random_range(1..=3usize))
        .map(|_| (0..len).map(|_| rng.random_range(0..len)).collect())
        .collect();
    let phi: Vec<f64> = (0..len).map(|_| round3(rng.random_range(-1.0..=1.0))).collect();
    let k = if rng.random_bool(0.5) {
        None
    } else {
        let mut members: Vec<usize> = (0..len).filter(|_| rng.random_bool(0.5)).collect();
        if members.is_empty() {
            members.push(rng.random_range(0..len));
        }
        Some(members)
    };
    // Distinct coordinates keep the metric a metric.
    let mut distinct = points.clone();
    distinct.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    distinct.dedup();
    let points = if distinct.len() == len {
        points
    } else {
        (0..len).map(|i| vec![i as f64 / len as f64, points[i][1]]).collect()
    };
    let spec = SystemSpec::Inline {
        geometry: InlineGeometry::Euclidean(points),
        tables,
        preperiod: 0,
        labels: None,
    };
    let sys = builtin_system(&spec)?;
    let mut eps = vec![0.6, 0.3];
    let fine = fine_scale(&sys);
    if fine < 0.3 {
        eps.push(fine);
    }
    instance(&format!("random-{seed}"), sys, k, Some(phi), eps, long_schedule(), None)
}

/// The 25 committed relationship instances: eleven built-in systems and
/// fourteen seeded random ones.
pub fn relationship_instances() -> Result<Vec<Instance>> {
    let shift8 = system("cyclic-shift:length=8")?;
    let coding = shift8.coding.expect("shift systems carry a coding");
    let first_symbol: Vec<f64> = (0..coding.points()).map(|w| 0.5 * coding.symbol(w, 0) as f64).collect();
    let prefix = coding.prefix_class(0, 3);
    let cosine: Vec<f64> = (0..12).map(|k| round3((std::f64::consts::TAU * k as f64 / 12.0).cos())).collect();
    let rotation = system("circle-grid:q=12,steps=1")?;
    let snapped = system("uniform-limit:q=12,step=1")?;
    let doubling = builtin_system(&SystemSpec::CircleGrid {
        q: 12,
        maps: CircleMaps::DoublingTripling,
    })?;
    let grid_fine = fine_scale(&rotation);
    let mut out = vec![
        instance("single-point", system("single-point:phi=0.3")?, None, None, vec![0.5], vec![1, 2, 3, 4], None)?,
        instance("two-point", system("two-point")?, None, None, vec![0.5], (1..=10).collect(), None)?,
        instance(
            "two-point-collapse",
            system("two-point:collapse=true")?,
            None,
            Some(vec![0.2, -0.1]),
            vec![0.5],
            long_schedule(),
            None,
        )?,
        instance("three-cycle", system("n-cycle:n=3")?, None, Some(vec![1.0, 2.0, 4.0]), vec![0.5], long_schedule(), None)?,
        instance("five-cycle-subset", system("n-cycle:n=5")?, Some(vec![0, 2]), None, vec![0.5], long_schedule(), None)?,
        instance("shift-6", system("cyclic-shift:length=6")?, None, None, vec![0.5], (1..=6).collect(), Some((3, 6)))?,
        instance(
            "shift-8-prefix",
            shift8.clone(),
            Some(prefix),
            Some(first_symbol),
            vec![0.5],
            (1..=8).collect(),
            Some((4, 8)),
        )?,
        instance(
            "rotation-12",
            rotation,
            None,
            Some(cosine.clone()),
            vec![0.3, 0.1, grid_fine],
            long_schedule(),
            None,
        )?,
        instance(
            "switching-6",
            system("switching:g=1;2;3;4;5;0,h=0;0;1;2;3;4,schedule=gh")?,
            None,
            Some(vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]),
            vec![1.5, 0.5],
            long_schedule(),
            None,
        )?,
        instance(
            "uniform-limit-12",
            snapped,
            None,
            Some(cosine),
            vec![0.2, 0.1, grid_fine],
            long_schedule(),
            None,
        )?,
        instance("doubling-tripling-12", doubling, None, None, vec![0.2, grid_fine], (1..=8).collect(), None)?,
    ];
    for seed in 1..=RANDOM_INSTANCES {
        out.push(random_instance(seed)?);
    }
    Ok(out)
}

fn full_shift_system() -> Result<System> {
    system("cyclic-shift:length=12")
}

fn shift_config() -> Result<PressureConfig> {
    Ok(PressureConfig::new(vec![0.5], (1..=8).collect())?.with_window(4, 8))
}

fn constant_system() -> Result<CriterionReport> {
    let sys = system("single-point:phi=0.3")?;
    let k = PointSet::all(1);
    let problem = Problem::new(&sys.space, &sys.maps, &k, &sys.potential)?;
    let config = PressureConfig::new(vec![0.5], vec![1, 2, 3, 4])?;
    let tol = 1e-6;
    let mut checks = Vec::new();
    for kind in PressureKind::ALL {
        checks.push(Check::near(kind.as_str(), estimate(&problem, &config, kind)?.value, 0.3, tol));
    }
    let spanning = classical_pressure(&problem, &config, ClassicalMode::Spanning)?;
    checks.push(Check::near("classical spanning", spanning.value, 0.3, tol));
    let mu = DiscreteMeasure::dirac(1, 0)?;
    let profile = local_pressure(&mu, &sys.space, &sys.maps, &sys.potential, &k, &config.eps_schedule, &config.n_schedule)?;
    checks.push(Check::near("local upper", profile.upper[0], 0.3, tol));
    checks.push(Check::near("local lower", profile.lower[0], 0.3, tol));
    for side in [Side::Upper, Side::Lower] {
        let v = measure_pressure_over_set(&mu, &k, &profile, side)?.value;
        checks.push(Check::near(format!("measure pressure over K ({side:?})"), v, 0.3, tol));
    }
    for kind in [PressureKind::Pesin, PressureKind::Packing, PressureKind::CapacityUpper, PressureKind::CapacityLower] {
        let v = measure_cp_pressure(&mu, &sys.space, &sys.maps, &sys.potential, kind, &[0.5, 0.0], &config)?.value;
        checks.push(Check::near(format!("measure {}", kind.as_str()), v, 0.3, tol));
    }
    let star = spanning_measure_pressure(&mu, &sys.space, &sys.maps, &sys.potential, &[0.5, 0.0], &config)?;
    checks.push(Check::near("measure spanning", star.value, 0.3, tol));
    Ok(CriterionReport::new(1, checks, Vec::new()))
}

fn full_shift() -> Result<CriterionReport> {
    let sys = full_shift_system()?;
    let k = PointSet::all(sys.len());
    let problem = Problem::new(&sys.space, &sys.maps, &k, &sys.potential)?;
    let config = shift_config()?;
    let ln2 = std::f64::consts::LN_2;
    let mut checks = Vec::new();
    for kind in [PressureKind::Classical, PressureKind::CapacityUpper, PressureKind::Pesin, PressureKind::Packing] {
        checks.push(Check::near(kind.as_str(), estimate(&problem, &config, kind)?.value, ln2, 0.05));
    }
    let wide = EngineOptions {
        budget: OracleBudget {
            max_points: 16,
            ..OracleBudget::default()
        },
        use_oracle: true,
    };
    for n in 1..=8usize {
        let expected = (1usize << n) as f64;
        let confirm = n <= 4;
        let options = if confirm { wide } else { EngineOptions::greedy_only() };
        let spanning = spanning_set(&problem, n, 0.5, &options)?;
        let separated = separated_set(&problem, n, 0.5, &options)?;
        checks.push(Check::near(format!("spanning count n={n}"), spanning.cardinality as f64, expected, 0.0));
        checks.push(Check::near(format!("separated count n={n}"), separated.cardinality as f64, expected, 0.0));
        if confirm {
            let oracle = |c: Option<usize>| c.map_or(f64::NAN, |c| c as f64);
            checks.push(Check::near(
                format!("spanning oracle n={n}"),
                oracle(spanning.oracle_cardinality),
                expected,
                0.0,
            ));
            checks.push(Check::near(
                format!("separated oracle n={n}"),
                oracle(separated.oracle_cardinality),
                expected,
                0.0,
            ));
        }
    }
    Ok(CriterionReport::new(2, checks, Vec::new()))
}

fn relationship_chain() -> Result<CriterionReport> {
    let mut checks = Vec::new();
    for inst in relationship_instances()? {
        let report = relationship_report(&inst.problem()?, &inst.config)?;
        for c in &report.checks {
            checks.push(Check::le(format!("{}: {}", inst.name, c.name), c.lhs, c.rhs, c.tolerance));
        }
        checks.push(Check::near(format!("{}: scale gap", inst.name), report.max_scale_gap, 0.0, 1e-9));
    }
    Ok(CriterionReport::new(3, checks, Vec::new()))
}

fn perturbation(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| round3(rng.random_range(-1.0..=1.0))).collect()
}

/// Evaluates an estimator, reporting whether every functional behind it was
/// solved exactly.
fn exact_estimate(inst: &Instance, potential: &Potential, kind: PressureKind) -> Result<PressureEstimate> {
    let problem = Problem::new(&inst.system.space, &inst.system.maps, &inst.k, potential)?;
    estimate(&problem, &inst.config, kind)
}

fn pressure_properties() -> Result<CriterionReport> {
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    for (index, inst) in relationship_instances()?.into_iter().enumerate() {
        if inst.len() > SMALL {
            skipped.push(format!("{}: more than {SMALL} points", inst.name));
            continue;
        }
        let len = inst.len();
        let phi = inst.potential.clone();
        let psi = Potential::new("psi", perturbation(len, 1000 + index as u64))?;
        let bump = Potential::new("bump", perturbation(len, 2000 + index as u64).iter().map(|v| v.abs()).collect())?;
        let up = phi.add(&bump)?;
        let tol = inst.config.tol;
        for kind in PressureKind::ALL {
            let label = |what: &str| format!("{} {}: {what}", inst.name, kind.as_str());
            let mut cache: Vec<(Vec<f64>, PressureEstimate)> = Vec::new();
            let mut eval = |p: &Potential| -> Result<PressureEstimate> {
                if let Some((_, e)) = cache.iter().find(|(v, _)| v.as_slice() == p.values()) {
                    return Ok(e.clone());
                }
                let e = exact_estimate(&inst, p, kind)?;
                cache.push((p.values().to_vec(), e.clone()));
                Ok(e)
            };
            let base = eval(&phi)?;
            if !base.exact {
                skipped.push(label("not oracle-exact"));
                continue;
            }
            let p = base.value;
            let mut property = |name: &str, involved: &[&PressureEstimate], check: Check| {
                if involved.iter().all(|e| e.exact) {
                    checks.push(check);
                } else {
                    skipped.push(label(&format!("{name} not oracle-exact")));
                }
            };
            let c = 0.7;
            let shifted = eval(&phi.shifted(c))?;
            property("translation", &[&shifted], Check::near(label("translation"), shifted.value, p + c, 2.0 * tol));
            let upper = eval(&up)?;
            property("monotonicity", &[&upper], Check::le(label("monotonicity"), p, upper.value, 2.0 * tol));
            let other = eval(&psi)?;
            property(
                "lipschitz",
                &[&other],
                Check::le(label("lipschitz"), (p - other.value).abs(), phi.distance(&psi), 2.0 * tol),
            );
            for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let mixed = eval(&phi.mix(&psi, t)?)?;
                property(
                    "convexity",
                    &[&other, &mixed],
                    Check::le(
                        label(&format!("convexity t={t}")),
                        mixed.value,
                        t * p + (1.0 - t) * other.value,
                        2.0 * tol,
                    ),
                );
            }
            let sum = eval(&phi.add(&psi)?)?;
            property(
                "subadditivity",
                &[&other, &sum],
                Check::le(label("subadditivity"), sum.value, p + other.value, 3.0 * tol),
            );
            let doubled = eval(&phi.scaled(2.0))?;
            property("scaling c=2", &[&doubled], Check::le(label("scaling c=2"), doubled.value, 2.0 * p, 2.0 * tol));
            let halved = eval(&phi.scaled(0.5))?;
            property("scaling c=1/2", &[&halved], Check::ge(label("scaling c=1/2"), halved.value, 0.5 * p, 2.0 * tol));
            let abs = eval(&phi.abs())?;
            property("absolute value", &[&abs], Check::le(label("absolute value"), p.abs(), abs.value, 2.0 * tol));
        }
    }
    Ok(CriterionReport::new(4, checks, skipped))
}

fn same_sum(a: &crate::cover::CoverSum, b: &crate::cover::CoverSum) -> bool {
    a.log_value == b.log_value && a.witnesses == b.witnesses
}

fn oracle_equivalence() -> Result<CriterionReport> {
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    for (index, inst) in relationship_instances()?.into_iter().enumerate() {
        if inst.len() > SMALL {
            skipped.push(format!("{}: more than {SMALL} points", inst.name));
            continue;
        }
        let problem = inst.problem()?;
        let cfg = &inst.config;
        let budget = cfg.options.budget;
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + index as u64);
        for &eps in &cfg.eps_schedule {
            for (lo, hi) in [(cfg.n, cfg.n), (cfg.n, cfg.n_max)] {
                let cover = CoverFamily::new(&problem, eps, lo, hi, &cfg.options)?;
                let packing = PackingFamily::new(&problem, eps, lo, hi, &cfg.options)?;
                for s in [-0.5, 0.0, 0.5, 1.0] {
                    let tag = format!("{} eps={eps} window=[{lo},{hi}] s={s}", inst.name);
                    match cover.exact(s) {
                        Ok(exact) => {
                            let greedy = cover.greedy(s)?;
                            let ratio = cover.greedy_bound().log_ratio();
                            checks.push(Check::ge(format!("{tag}: greedy cover >= oracle"), greedy.log_value, exact.log_value, ROUNDING));
                            checks.push(Check::le(
                                format!("{tag}: greedy cover within ratio"),
                                greedy.log_value,
                                exact.log_value + ratio,
                                ROUNDING,
                            ));
                            let mut candidates = cover.candidates(s);
                            let mut invariant = true;
                            for _ in 0..5 {
                                candidates.shuffle(&mut rng);
                                invariant &= same_sum(&exact_cover_infimum(&candidates, problem.k, &budget)?, &exact);
                            }
                            checks.push(Check::holds(format!("{tag}: cover oracle permutation-invariant"), invariant));
                        }
                        Err(Error::Capacity(m)) => skipped.push(format!("{tag}: cover oracle {m}")),
                        Err(e) => return Err(e),
                    }
                    match packing.exact(s) {
                        Ok(exact) => {
                            let greedy = packing.greedy(s)?;
                            let ratio = packing.greedy_bound().log_ratio();
                            checks.push(Check::le(format!("{tag}: greedy packing <= oracle"), greedy.log_value, exact.log_value, ROUNDING));
                            checks.push(Check::le(
                                format!("{tag}: greedy packing within ratio"),
                                exact.log_value,
                                greedy.log_value + ratio,
                                ROUNDING,
                            ));
                            let mut candidates = packing.candidates(s);
                            let mut invariant = true;
                            for _ in 0..5 {
                                candidates.shuffle(&mut rng);
                                invariant &= same_sum(&exact_packing_supremum(&candidates, &budget)?, &exact);
                            }
                            checks.push(Check::holds(format!("{tag}: packing oracle permutation-invariant"), invariant));
                        }
                        Err(Error::Capacity(m)) => skipped.push(format!("{tag}: packing oracle {m}")),
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    Ok(CriterionReport::new(5, checks, skipped))
}

fn local_fixtures() -> Result<CriterionReport> {
    let sys = full_shift_system()?;
    let coding = sys.coding.expect("shift systems carry a coding");
    let all = PointSet::all(sys.len());
    let eps = [0.5];
    let ns: Vec<usize> = (1..=8).collect();
    let ln2 = std::f64::consts::LN_2;
    let mut checks = Vec::new();
    let half = DiscreteMeasure::bernoulli(&coding, 0.5)?;
    let profile = local_pressure(&half, &sys.space, &sys.maps, &sys.potential, &all, &eps, &ns)?;
    let worst = profile
        .per_point
        .iter()
        .flatten()
        .map(|v| (v - ln2).abs())
        .fold(0.0, f64::max);
    checks.push(Check::near("Bernoulli(1/2): every entry is log 2", worst, 0.0, 1e-9));
    let upper = profile.upper.iter().map(|v| (v - ln2).abs()).fold(0.0, f64::max);
    let lower = profile.lower.iter().map(|v| (v - ln2).abs()).fold(0.0, f64::max);
    checks.push(Check::near("Bernoulli(1/2): upper profile", upper, 0.0, 1e-9));
    checks.push(Check::near("Bernoulli(1/2): lower profile", lower, 0.0, 1e-9));
    let quarter = DiscreteMeasure::bernoulli(&coding, 0.25)?;
    let zeros = PointSet::single(sys.len(), 0)?;
    let profile = local_pressure(&quarter, &sys.space, &sys.maps, &sys.potential, &zeros, &eps, &ns)?;
    let target = (4.0f64 / 3.0).ln();
    checks.push(Check::near("Bernoulli(1/4) at 0^12: lower", profile.lower[0], target, 1e-9));
    checks.push(Check::near("Bernoulli(1/4) at 0^12: upper", profile.upper[0], target, 1e-9));
    Ok(CriterionReport::new(6, checks, Vec::new()))
}

fn distribution_principle() -> Result<CriterionReport> {
    let sys = full_shift_system()?;
    let coding = sys.coding.expect("shift systems carry a coding");
    let all = PointSet::all(sys.len());
    let problem = Problem::new(&sys.space, &sys.maps, &all, &sys.potential)?;
    let config = shift_config()?;
    let ns: Vec<usize> = (1..=8).collect();
    let mus = vec![DiscreteMeasure::bernoulli(&coding, 0.5)?; 4];
    let ln2 = std::f64::consts::LN_2;
    let mut checks = Vec::new();

    let below = distribution_principle_check(&mus, &problem, ln2 - 0.05, 0.5, 1.0, &ns, &config)?;
    checks.push(Check::holds("s = log 2 - 0.05: hypotheses hold", below.positive_mass && below.ball_bound && below.limit_positive));
    let pesin = below.pesin.as_ref().map_or(f64::NAN, |p| p.value);
    checks.push(Check::ge("s = log 2 - 0.05: Pesin estimate >= s", pesin, ln2 - 0.05, below.tolerance));
    checks.push(Check::holds("s = log 2 - 0.05: confirmed", below.outcome == Outcome::Confirmed));

    let above = distribution_principle_check(&mus, &problem, ln2 + 0.5, 0.5, 1.0, &ns, &config)?;
    checks.push(Check::holds("s = log 2 + 0.5: ball bound rejected", !above.ball_bound));
    checks.push(Check::holds("s = log 2 + 0.5: witness ball recorded", above.first_violation.is_some()));
    checks.push(Check::holds("s = log 2 + 0.5: no conclusion asserted", above.outcome == Outcome::HypothesisFailed && above.pesin.is_none()));

    let point = system("single-point:phi=0.3")?;
    let k = PointSet::all(1);
    let p = Problem::new(&point.space, &point.maps, &k, &point.potential)?;
    let cfg = PressureConfig::new(vec![0.5], vec![1, 2, 3, 4])?;
    let dirac = vec![DiscreteMeasure::dirac(1, 0)?; 2];
    let r = distribution_principle_check(&dirac, &p, 0.3, 0.5, 1.0, &[1, 2, 3, 4], &cfg)?;
    checks.push(Check::holds("single point, s = 0.3: confirmed", r.outcome == Outcome::Confirmed));
    Ok(CriterionReport::new(7, checks, Vec::new()))
}

fn packing_pinch() -> Result<CriterionReport> {
    let sys = full_shift_system()?;
    let coding = sys.coding.expect("shift systems carry a coding");
    let all = PointSet::all(sys.len());
    let problem = Problem::new(&sys.space, &sys.maps, &all, &sys.potential)?;
    let config = shift_config()?;
    let ln2 = std::f64::consts::LN_2;
    let mu = DiscreteMeasure::bernoulli(&coding, 0.5)?;
    let profile = local_pressure(&mu, &sys.space, &sys.maps, &sys.potential, &all, &config.eps_schedule, &config.n_schedule)?;
    let mut checks = Vec::new();
    let up = billingsley_bound(&mu, &problem, ln2 + 0.05, &profile, Direction::UpperLe, &config)?;
    let down = billingsley_bound(&mu, &problem, ln2 - 0.05, &profile, Direction::LowerGe, &config)?;
    for (name, r) in [("shift upper", &up), ("shift lower", &down)] {
        checks.push(Check::holds(format!("{name}: hypothesis"), r.hypothesis));
        checks.push(Check::holds(format!("{name}: confirmed"), r.outcome == Outcome::Confirmed));
    }
    let packing = up.packing.as_ref().map_or(f64::NAN, |p| p.value);
    checks.push(Check::le("shift: packing <= log 2 + 0.05", packing, ln2 + 0.05, 0.0));
    checks.push(Check::ge("shift: packing >= log 2 - 0.05", packing, ln2 - 0.05, 0.0));

    let point = system("single-point:phi=0.3")?;
    let k = PointSet::all(1);
    let p = Problem::new(&point.space, &point.maps, &k, &point.potential)?;
    let cfg = PressureConfig::new(vec![0.5], vec![1, 2, 3, 4])?;
    let dirac = DiscreteMeasure::dirac(1, 0)?;
    let profile = local_pressure(&dirac, &point.space, &point.maps, &point.potential, &k, &cfg.eps_schedule, &cfg.n_schedule)?;
    for direction in [Direction::UpperLe, Direction::LowerGe] {
        let r = billingsley_bound(&dirac, &p, 0.3, &profile, direction, &cfg)?;
        checks.push(Check::holds(format!("single point {direction:?}: confirmed"), r.outcome == Outcome::Confirmed));
        let v = r.packing.as_ref().map_or(f64::NAN, |p| p.value);
        checks.push(Check::near(format!("single point {direction:?}: packing"), v, 0.3, 0.05));
    }
    Ok(CriterionReport::new(8, checks, Vec::new()))
}

fn variational() -> Result<CriterionReport> {
    let sys = full_shift_system()?;
    let coding = sys.coding.expect("shift systems carry a coding");
    let all = PointSet::all(sys.len());
    let problem = Problem::new(&sys.space, &sys.maps, &all, &sys.potential)?;
    // A single scale n = 8 makes each upper measure pressure the exact
    // per-symbol entropy of the Bernoulli measure.
    let config = PressureConfig::new(vec![0.5], vec![8])?.with_window(8, 12);
    let ln2 = std::f64::consts::LN_2;
    let family = (1..=9)
        .map(|i| DiscreteMeasure::bernoulli(&coding, i as f64 / 10.0))
        .collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();
    let r = variational_gap(&problem, &family, &config)?;
    checks.push(Check::near("Bernoulli family: sup vs packing", r.sup_upper, r.packing.value, 0.05));
    checks.push(Check::near("Bernoulli family: packing is log 2", r.packing.value, ln2, 0.05));
    checks.push(Check::holds("Bernoulli family: sup attained at p = 0.5", r.argmax_upper == "bernoulli(0.5)"));
    checks.push(Check::le("Bernoulli family: sup <= packing + 0.05", r.sup_upper, r.packing.value, 0.05));
    checks.push(Check::le(
        "Bernoulli family: measure packing <= packing + 0.05",
        r.sup_packing_of_measure,
        r.packing.value,
        0.05,
    ));

    let class = PointSet::new(sys.len(), coding.prefix_class(0, 3))?;
    let sub = Problem::new(&sys.space, &sys.maps, &class, &sys.potential)?;
    let conditioned = vec![family[4].conditioned(&class)?];
    let r = variational_gap(&sub, &conditioned, &config)?;
    checks.push(Check::le("prefix class: sup <= packing + 0.05", r.sup_upper, r.packing.value, 0.05));
    checks.push(Check::le(
        "prefix class: measure packing <= packing + 0.05",
        r.sup_packing_of_measure,
        r.packing.value,
        0.05,
    ));

    let point = system("single-point:phi=0.3")?;
    let k = PointSet::all(1);
    let p = Problem::new(&point.space, &point.maps, &k, &point.potential)?;
    let cfg = PressureConfig::new(vec![0.5], vec![1, 2, 3, 4])?;
    let r = variational_gap(&p, &[DiscreteMeasure::dirac(1, 0)?], &cfg)?;
    checks.push(Check::near("single point: sup", r.sup_upper, 0.3, 0.05));
    checks.push(Check::le("single point: sup <= packing + 0.05", r.sup_upper, r.packing.value, 0.05));
    Ok(CriterionReport::new(9, checks, Vec::new()))
}

fn weights_equal(name: &str, got: &DiscreteMeasure, want: &[f64]) -> Check {
    let diff = got.weights().iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Check::near(name, diff, 0.0, 0.0)
}

fn invariant_measures() -> Result<CriterionReport> {
    let mut checks = Vec::new();
    let cycle = system("n-cycle:n=3")?;
    let collapse = system("two-point:collapse=true")?;
    let point = system("single-point:phi=0.3")?;
    let step = cycle.maps.map(1)?;

    let skewed = DiscreteMeasure::new("skewed", vec![0.5, 0.25, 0.25])?;
    checks.push(weights_equal("pushforward along the 3-cycle", &pushforward(&skewed, &step)?, &[0.25, 0.5, 0.25]));
    checks.push(weights_equal("pushforward by the identity", &pushforward(&skewed, &[0, 1, 2])?, skewed.weights()));
    let half = DiscreteMeasure::uniform(2)?;
    checks.push(weights_equal("pushforward a->b, b->b", &pushforward(&half, &collapse.maps.map(1)?)?, &[0.0, 1.0]));

    let cycle_family = TestFunctionFamily::standard(&cycle.space)?;
    let uniform = DiscreteMeasure::uniform(3)?;
    checks.push(Check::near("uniform on the 3-cycle is invariant", invariance_defect(&uniform, &cycle.maps, 6, &cycle_family)?, 0.0, 0.0));
    checks.push(Check::holds("skewed measure is not invariant", invariance_defect(&skewed, &cycle.maps, 1, &cycle_family)? > 0.0));
    let point_family = TestFunctionFamily::standard(&point.space)?;
    let dirac = DiscreteMeasure::dirac(1, 0)?;
    checks.push(Check::near("single point is invariant", invariance_defect(&dirac, &point.maps, 4, &point_family)?, 0.0, 0.0));

    let shift8 = system("cyclic-shift:length=8")?;
    let coding = shift8.coding.expect("shift systems carry a coding");
    let fair = DiscreteMeasure::bernoulli(&coding, 0.5)?;
    let worst = (0..shift8.len())
        .map(|x| {
            let ball = bowen_ball(&shift8.space, &shift8.maps, 3, 0.5, x, false)?;
            Ok((fair.mass(&ball.members)? - 0.125).abs())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(Check::near("Bernoulli(1/2) mass of every B_3(x, 0.5)", worst, 0.0, ROUNDING));

    let third = 1.0 / 3.0;
    checks.push(weights_equal("empirical measure of a over one cycle", &empirical_measure(&cycle.maps, 0, 3)?, &[third; 3]));
    checks.push(weights_equal("empirical measure a, b, b, b", &empirical_measure(&collapse.maps, 0, 4)?, &[0.25, 0.75]));
    checks.push(weights_equal("empirical measure of p", &empirical_measure(&point.maps, 0, 5)?, &[1.0]));

    let omega = non_wandering_set(&collapse.space, &collapse.maps, 8, 0.4)?;
    checks.push(Check::holds("non-wandering set of a->b, b->b is {b}", omega.members() == [1]));
    let omega = non_wandering_set(&cycle.space, &cycle.maps, 8, 0.4)?;
    checks.push(Check::holds("non-wandering set of the 3-cycle is everything", omega.len() == 3));
    checks.push(Check::near("uniform measure of the non-wandering set", uniform.mass(&omega)?, 1.0, 1e-9));
    let omega = non_wandering_set(&point.space, &point.maps, 8, 0.4)?;
    checks.push(Check::holds("non-wandering set of the point", omega.len() == 1));

    let rotation = system("circle-grid:q=12,steps=1")?;
    let snapped = system("uniform-limit:q=12,step=1")?;
    let limit = snapped.limit_map.clone().expect("uniform-limit systems carry their limit");
    let rotation_family = TestFunctionFamily::standard(&rotation.space)?;
    let uniform12 = DiscreteMeasure::uniform(12)?;
    let delta12 = DiscreteMeasure::dirac(12, 0)?;
    let r = uniform_limit_check(&uniform12, &rotation.space, &rotation.maps, &limit, &rotation_family, 8)?;
    checks.push(Check::near("constant rotation: limit defect", r.limit_defect, 0.0, 0.0));
    checks.push(Check::holds("constant rotation: bound", r.pass));
    let r = uniform_limit_check(&uniform12, &snapped.space, &snapped.maps, &limit, &rotation_family, 8)?;
    checks.push(Check::near("snapped rotations, uniform: limit defect", r.limit_defect, 0.0, 0.0));
    checks.push(Check::holds("snapped rotations, uniform: bound", r.pass));
    let r = uniform_limit_check(&delta12, &snapped.space, &snapped.maps, &limit, &rotation_family, 8)?;
    checks.push(Check::holds("snapped rotations, point mass: sequence defect positive", r.sequence_defect > 0.0));
    checks.push(Check::holds("snapped rotations, point mass: limit defect positive", r.limit_defect > 0.0));
    checks.push(Check::holds("snapped rotations, point mass: bound", r.pass));

    let generic = generic_points(&uniform, &cycle.maps, &cycle_family, 0.5, 3, 9)?;
    checks.push(Check::holds("3-cycle: every point generic", generic.generic.len() == 3));
    let collapse_family = TestFunctionFamily::standard(&collapse.space)?;
    let at_b = DiscreteMeasure::dirac(2, 1)?;
    let generic = generic_points(&at_b, &collapse.maps, &collapse_family, 0.1, 11, 20)?;
    checks.push(Check::holds("a->b, b->b: both points generic from m = 11", generic.generic.len() == 2));
    let generic = generic_points(&dirac, &point.maps, &point_family, 0.1, 1, 5)?;
    checks.push(Check::holds("single point generic", generic.generic.len() == 1));

    let cycle_cfg = PressureConfig::new(vec![0.5], (1..=24).collect())?;
    let r = packing_bound_on_generic(&uniform, &cycle.space, &cycle.maps, &cycle.potential, &cycle_family, 0.5, 3, &cycle_cfg)?;
    checks.push(generic_check("3-cycle", &r));
    let shift12 = full_shift_system()?;
    let shift_family = TestFunctionFamily::standard(&shift12.space)?;
    let coding12 = shift12.coding.expect("shift systems carry a coding");
    let fair12 = DiscreteMeasure::bernoulli(&coding12, 0.5)?;
    let r = packing_bound_on_generic(
        &fair12,
        &shift12.space,
        &shift12.maps,
        &shift12.potential,
        &shift_family,
        10.0,
        1,
        &shift_config()?,
    )?;
    checks.push(generic_check("shift", &r));
    checks.push(Check::near("shift: generic surrogate is everything", r.generic.len() as f64, shift12.len() as f64, 0.0));
    let point_cfg = PressureConfig::new(vec![0.5], vec![1, 2, 3, 4])?;
    let r = packing_bound_on_generic(&dirac, &point.space, &point.maps, &point.potential, &point_family, 0.1, 1, &point_cfg)?;
    checks.push(generic_check("single point", &r));
    Ok(CriterionReport::new(10, checks, Vec::new()))
}

fn generic_check(name: &str, r: &crate::measure::GenericBoundReport) -> Check {
    Check::le(
        format!("{name}: packing on generic points <= separated growth + 0.05"),
        r.left.unwrap_or(f64::NAN),
        r.right,
        0.05,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_instances_are_reproducible() {
        let a = random_instance(7).unwrap();
        let b = random_instance(7).unwrap();
        assert_eq!(a.potential, b.potential);
        assert_eq!(a.k, b.k);
        assert!((4..=10).contains(&a.len()));
    }

    #[test]
    fn instance_count() {
        assert_eq!(relationship_instances().unwrap().len(), 25);
    }

    #[test]
    fn check_relations() {
        assert!(Check::le("a", 1.0, 0.9, 0.2).pass);
        assert!(!Check::ge("b", 0.5, 1.0, 0.1).pass);
        assert!(Check::near("c", 1.0, 1.0 + 1e-10, 1e-9).pass);
        assert!(!Check::near("nan", f64::NAN, 1.0, 1.0).pass);
        assert!(!Check::holds("d", false).pass);
    }

    #[test]
    fn constant_criterion_passes() {
        let r = run_criterion(1).unwrap();
        assert!(r.pass, "{:?}", r.failures().collect::<Vec<_>>());
    }
}
