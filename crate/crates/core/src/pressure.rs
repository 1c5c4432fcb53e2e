//! The five pressure estimators and the relationship report.
//!
//! Limits are replaced by finite schedules. For each `ε` the limsup (liminf)
//! over `n` is surrogated by the max (min) over the last half of the `n`
//! schedule, rounded up; the headline value is the one at the smallest `ε`.

use serde::{Deserialize, Serialize};

use crate::cover::{
    fixed_cover_sum, separated_supremum, CoverFamily, CoverSum, EngineOptions, PackingFamily, Problem,
};
use crate::error::{Error, Result};
use crate::numeric::tail_range;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PressureKind {
    Classical,
    Pesin,
    Packing,
    CapacityUpper,
    CapacityLower,
}

impl PressureKind {
    pub const ALL: [PressureKind; 5] = [
        PressureKind::Classical,
        PressureKind::Pesin,
        PressureKind::Packing,
        PressureKind::CapacityUpper,
        PressureKind::CapacityLower,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PressureKind::Classical => "classical",
            PressureKind::Pesin => "pesin",
            PressureKind::Packing => "packing",
            PressureKind::CapacityUpper => "capacityUpper",
            PressureKind::CapacityLower => "capacityLower",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ClassicalMode {
    Spanning,
    Separated,
}

/// One cell of the per-scale table.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScaleEntry {
    pub eps: f64,
    pub n: usize,
    /// `ln` of the functional for fixed-length kinds, the critical value for
    /// Pesin and packing.
    pub raw: f64,
    pub normalized: f64,
    pub exact: bool,
    /// Greedy-gap allowance in pressure units (zero when exact).
    pub allowance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PressureEstimate {
    pub kind: PressureKind,
    pub value: f64,
    pub eps_schedule: Vec<f64>,
    pub n_schedule: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classical_mode: Option<ClassicalMode>,
    /// `(N, Nmax)` for the variable-length kinds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parts: Option<usize>,
    /// Final bisection bracket at the smallest `ε`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_bracket: Option<(f64, f64)>,
    /// Surrogate value per `ε`, in schedule order.
    pub per_eps: Vec<f64>,
    /// Row-major over `(ε, n)`.
    pub per_scale_table: Vec<ScaleEntry>,
    pub exact: bool,
    /// Greedy-gap allowance of the headline value.
    pub allowance: f64,
}

impl PressureEstimate {
    /// Rows `kind,eps,N,raw,normalized` with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,eps,N,raw,normalized\n");
        for e in &self.per_scale_table {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.kind.as_str(),
                crate::emit::format_f64(e.eps),
                e.n,
                crate::emit::format_f64(e.raw),
                crate::emit::format_f64(e.normalized)
            ));
        }
        out
    }

    /// Table entries at `ε = eps_schedule[i]`.
    pub fn row(&self, i: usize) -> &[ScaleEntry] {
        let w = self.per_scale_table.len() / self.eps_schedule.len();
        &self.per_scale_table[i * w..(i + 1) * w]
    }
}

/// Schedules and knobs shared by the estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureConfig {
    /// Strictly decreasing, positive.
    pub eps_schedule: Vec<f64>,
    /// Strictly increasing, positive.
    pub n_schedule: Vec<usize>,
    pub n: usize,
    pub n_max: usize,
    pub parts: usize,
    pub tol: f64,
    pub chain_tol: f64,
    /// Explicit initial bisection bracket; derived from the potential if absent.
    pub bracket: Option<(f64, f64)>,
    pub options: EngineOptions,
}

pub const DEFAULT_WINDOW: usize = 8;
pub const DEFAULT_PARTS: usize = 4;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_CHAIN_TOL: f64 = 0.05;

impl PressureConfig {
    /// Defaults: `N` is the first `n` of the schedule tail and
    /// `Nmax = max(N + 8, last n)`.
    pub fn new(eps_schedule: Vec<f64>, n_schedule: Vec<usize>) -> Result<Self> {
        validate_schedules(&eps_schedule, &n_schedule)?;
        let n = n_schedule[tail_range(n_schedule.len()).start];
        let n_max = (n + DEFAULT_WINDOW).max(*n_schedule.last().expect("nonempty"));
        Ok(PressureConfig {
            eps_schedule,
            n_schedule,
            n,
            n_max,
            parts: DEFAULT_PARTS,
            tol: DEFAULT_TOL,
            chain_tol: DEFAULT_CHAIN_TOL,
            bracket: None,
            options: EngineOptions::default(),
        })
    }

    pub fn with_window(mut self, n: usize, n_max: usize) -> Self {
        self.n = n;
        self.n_max = n_max;
        self
    }

    pub fn with_parts(mut self, parts: usize) -> Self {
        self.parts = parts;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_options(mut self, options: EngineOptions) -> Self {
        self.options = options;
        self
    }

    pub fn validate(&self) -> Result<()> {
        validate_schedules(&self.eps_schedule, &self.n_schedule)?;
        if self.n == 0 || self.n_max < self.n {
            return Err(Error::invalid(format!("window [{}, {}] is empty", self.n, self.n_max)));
        }
        if self.parts == 0 {
            return Err(Error::invalid("parts must be at least 1"));
        }
        if !(self.tol > 0.0) || !(self.chain_tol >= 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        Ok(())
    }

    /// Largest orbit horizon any estimator will request.
    pub fn horizon(&self) -> usize {
        self.n_max.max(*self.n_schedule.last().unwrap_or(&1))
    }
}

pub fn validate_schedules(eps: &[f64], n: &[usize]) -> Result<()> {
    if eps.is_empty() || n.is_empty() {
        return Err(Error::invalid("schedules must be nonempty"));
    }
    if eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::invalid("eps values must be positive and finite"));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("eps schedule must be strictly decreasing"));
    }
    if n[0] == 0 || n.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("n schedule must be strictly increasing and start at 1 or more"));
    }
    Ok(())
}

fn check_finite(kind: PressureKind, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(format!("{} estimate is not finite ({v})", kind.as_str())))
    }
}

fn tail_extreme(values: &[f64], upper: bool) -> f64 {
    let tail = &values[tail_range(values.len())];
    if upper {
        tail.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        tail.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Allowance of the tail surrogate: the largest allowance among tail entries.
fn tail_allowance(entries: &[ScaleEntry]) -> f64 {
    entries[tail_range(entries.len())].iter().map(|e| e.allowance).fold(0.0, f64::max)
}

fn fixed_length(
    problem: &Problem,
    config: &PressureConfig,
    kind: PressureKind,
    mode: Option<ClassicalMode>,
    upper: bool,
) -> Result<PressureEstimate> {
    config.validate()?;
    let grid: Vec<(f64, usize)> = config
        .eps_schedule
        .iter()
        .flat_map(|&e| config.n_schedule.iter().map(move |&n| (e, n)))
        .collect();
    let sums: Vec<CoverSum> = par::try_map_slice(&grid, |&(eps, n)| match mode {
        Some(ClassicalMode::Separated) => separated_supremum(problem, n, eps, &config.options),
        _ => fixed_cover_sum(problem, n, eps, &config.options),
    })?;
    let table: Vec<ScaleEntry> = grid
        .iter()
        .zip(&sums)
        .map(|(&(eps, n), sum)| ScaleEntry {
            eps,
            n,
            raw: sum.log_value,
            normalized: sum.log_value / n as f64,
            exact: sum.exact,
            allowance: sum.log_gap_bound / n as f64,
        })
        .collect();
    let w = config.n_schedule.len();
    let per_eps: Vec<f64> = table
        .chunks(w)
        .map(|row| tail_extreme(&row.iter().map(|e| e.normalized).collect::<Vec<_>>(), upper))
        .collect();
    let last = table.chunks(w).last().expect("nonempty schedule");
    Ok(PressureEstimate {
        kind,
        value: check_finite(kind, *per_eps.last().expect("nonempty"))?,
        eps_schedule: config.eps_schedule.clone(),
        n_schedule: config.n_schedule.clone(),
        classical_mode: mode,
        window: None,
        parts: None,
        s_bracket: None,
        exact: table.iter().all(|e| e.exact),
        allowance: tail_allowance(last),
        per_eps,
        per_scale_table: table,
    })
}

/// Classical pressure via spanning covers (`Λ` convention: open balls
/// centered in `X`) or separated sets.
pub fn classical_pressure(problem: &Problem, config: &PressureConfig, mode: ClassicalMode) -> Result<PressureEstimate> {
    fixed_length(problem, config, PressureKind::Classical, Some(mode), true)
}

/// Upper or lower capacity pressure from `(1/N) ln Λ_{ε,N}`.
pub fn capacity_pressure(problem: &Problem, config: &PressureConfig, upper: bool) -> Result<PressureEstimate> {
    let kind = if upper {
        PressureKind::CapacityUpper
    } else {
        PressureKind::CapacityLower
    };
    fixed_length(problem, config, kind, None, upper)
}

/// Outcome of a bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Critical {
    pub s: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
}

const MAX_EXPANSIONS: usize = 60;

/// Locates where a nonincreasing functional crosses `threshold`.
///
/// The bracket is widened by doubling until `f(lo) >= threshold >= f(hi)`,
/// then bisected to width `<= tol`; the midpoint is returned.
pub fn critical_value<F>(mut functional: F, bracket: (f64, f64), tol: f64, threshold: f64) -> Result<Critical>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(threshold > 0.0) {
        return Err(Error::invalid("threshold must be positive"));
    }
    critical_value_log(|s| functional(s).map(f64::ln), bracket, tol, threshold.ln())
}

/// [`critical_value`] on a functional given by its logarithm.
pub fn critical_value_log<F>(mut log_functional: F, bracket: (f64, f64), tol: f64, log_threshold: f64) -> Result<Critical>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = bracket;
    if !(tol > 0.0) || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!("bad bisection setup: bracket ({lo}, {hi}), tol {tol}")));
    }
    let mut evaluations = 0;
    let mut eval = |s: f64| {
        evaluations += 1;
        log_functional(s)
    };
    let mut width = hi - lo;
    let mut f_lo = eval(lo)?;
    let mut f_hi = eval(hi)?;
    let mut steps = 0;
    while f_lo < log_threshold || f_hi >= log_threshold {
        if steps == MAX_EXPANSIONS {
            return Err(Error::NoJump {
                lo,
                hi,
                lo_value: f_lo.exp(),
                hi_value: f_hi.exp(),
            });
        }
        steps += 1;
        width *= 2.0;
        if f_lo < log_threshold {
            lo -= width;
            f_lo = eval(lo)?;
        }
        if f_hi >= log_threshold {
            hi += width;
            f_hi = eval(hi)?;
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid)? >= log_threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Critical {
        s: 0.5 * (lo + hi),
        bracket: (lo, hi),
        evaluations,
    })
}

/// Initial bracket containing the crossing of every windowed functional.
pub fn default_bracket(problem: &Problem) -> (f64, f64) {
    let norm = problem.potential.sup_norm();
    (-norm - 1.0, norm + (problem.space.len() as f64).ln() + 1.0)
}

struct Tracked {
    exact: bool,
    gap: f64,
}

impl Tracked {
    fn new() -> Self {
        Tracked { exact: true, gap: 0.0 }
    }

    fn record(&mut self, sum: &CoverSum) -> f64 {
        self.exact &= sum.exact;
        self.gap = self.gap.max(sum.log_gap_bound);
        sum.log_value
    }
}

fn critical_kind(
    problem: &Problem,
    config: &PressureConfig,
    kind: PressureKind,
    build: impl Fn(f64) -> Result<Box<dyn Fn(f64) -> Result<CoverSum> + Send + Sync>> + Sync,
) -> Result<PressureEstimate> {
    config.validate()?;
    let bracket = config.bracket.unwrap_or_else(|| default_bracket(problem));
    let per: Vec<(Critical, Tracked)> = par::try_map_slice(&config.eps_schedule, |&eps| {
        let functional = build(eps)?;
        let mut tracked = Tracked::new();
        let crit = critical_value_log(|s| functional(s).map(|sum| tracked.record(&sum)), bracket, config.tol, 0.0)?;
        Ok::<_, Error>((crit, tracked))
    })?;
    let table: Vec<ScaleEntry> = config
        .eps_schedule
        .iter()
        .zip(&per)
        .map(|(&eps, (crit, tr))| ScaleEntry {
            eps,
            n: config.n,
            raw: crit.s,
            normalized: crit.s,
            exact: tr.exact,
            allowance: tr.gap / config.n as f64,
        })
        .collect();
    let (last_crit, _) = per.last().expect("nonempty schedule");
    let last = table.last().expect("nonempty schedule");
    Ok(PressureEstimate {
        kind,
        value: check_finite(kind, last.normalized)?,
        eps_schedule: config.eps_schedule.clone(),
        n_schedule: vec![config.n],
        classical_mode: None,
        window: Some((config.n, config.n_max)),
        parts: (kind == PressureKind::Packing).then_some(config.parts),
        s_bracket: Some(last_crit.bracket),
        per_eps: table.iter().map(|e| e.normalized).collect(),
        exact: table.iter().all(|e| e.exact),
        allowance: last.allowance,
        per_scale_table: table,
    })
}

/// Critical value of the windowed variable-length cover functional.
pub fn pesin_pressure(problem: &Problem, config: &PressureConfig) -> Result<PressureEstimate> {
    critical_kind(
        problem,
        config,
        PressureKind::Pesin,
        |eps| {
            let family = CoverFamily::new(problem, eps, config.n, config.n_max, &config.options)?;
            Ok(Box::new(move |s| family.evaluate(s)))
        },
    )
}

/// Critical value of the refined packing functional.
pub fn packing_pressure(problem: &Problem, config: &PressureConfig) -> Result<PressureEstimate> {
    let parts = config.parts;
    critical_kind(
        problem,
        config,
        PressureKind::Packing,
        |eps| {
            let family = PackingFamily::new(problem, eps, config.n, config.n_max, &config.options)?;
            Ok(Box::new(move |s| family.refined(s, parts)))
        },
    )
}

/// Any of the five estimators; classical uses separated sets.
pub fn estimate(problem: &Problem, config: &PressureConfig, kind: PressureKind) -> Result<PressureEstimate> {
    match kind {
        PressureKind::Classical => classical_pressure(problem, config, ClassicalMode::Separated),
        PressureKind::Pesin => pesin_pressure(problem, config),
        PressureKind::Packing => packing_pressure(problem, config),
        PressureKind::CapacityUpper => capacity_pressure(problem, config, true),
        PressureKind::CapacityLower => capacity_pressure(problem, config, false),
    }
}

/// One inequality `lhs <= rhs + tolerance` of the chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChainCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ChainCheck {
    fn le(name: &str, lhs: &PressureEstimate, rhs: &PressureEstimate, base: f64) -> Self {
        let tolerance = base + lhs.allowance + rhs.allowance + bisection_slack(lhs) + bisection_slack(rhs);
        ChainCheck {
            name: name.to_string(),
            lhs: lhs.value,
            rhs: rhs.value,
            tolerance,
            pass: lhs.value <= rhs.value + tolerance,
        }
    }
}

fn bisection_slack(e: &PressureEstimate) -> f64 {
    e.s_bracket.map_or(0.0, |(lo, hi)| hi - lo)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RelationshipReport {
    pub classical: PressureEstimate,
    pub classical_spanning: PressureEstimate,
    pub pesin: PressureEstimate,
    pub packing: PressureEstimate,
    pub capacity_upper: PressureEstimate,
    pub capacity_lower: PressureEstimate,
    pub checks: Vec<ChainCheck>,
    /// Largest `|ln Λ_{ε,N} - ln Q_N|` over the grid.
    pub max_scale_gap: f64,
    pub pass: bool,
}

/// All five estimators on shared schedules plus the chain checks
/// `P^B <= CP_ <= CP¯`, `P^B <= P^P <= P`, `P^P <= CP¯` and `CP¯ = P`
/// (spanning side).
pub fn relationship_report(problem: &Problem, config: &PressureConfig) -> Result<RelationshipReport> {
    config.validate()?;
    let classical = classical_pressure(problem, config, ClassicalMode::Separated)?;
    let classical_spanning = classical_pressure(problem, config, ClassicalMode::Spanning)?;
    let pesin = pesin_pressure(problem, config)?;
    let packing = packing_pressure(problem, config)?;
    let capacity_upper = capacity_pressure(problem, config, true)?;
    let capacity_lower = capacity_pressure(problem, config, false)?;
    let t = config.chain_tol;
    let max_scale_gap = capacity_upper
        .per_scale_table
        .iter()
        .zip(&classical_spanning.per_scale_table)
        .map(|(a, b)| (a.raw - b.raw).abs())
        .fold(0.0, f64::max);
    let equality = ChainCheck {
        name: "|CP_upper - P_spanning|".into(),
        lhs: (capacity_upper.value - classical_spanning.value).abs(),
        rhs: 0.0,
        tolerance: t,
        pass: (capacity_upper.value - classical_spanning.value).abs() <= t,
    };
    let checks = vec![
        ChainCheck::le("P_B <= CP_lower", &pesin, &capacity_lower, t),
        ChainCheck::le("CP_lower <= CP_upper", &capacity_lower, &capacity_upper, t),
        ChainCheck::le("P_B <= P_P", &pesin, &packing, t),
        ChainCheck::le("P_P <= P", &packing, &classical, t),
        ChainCheck::le("P_P <= CP_upper", &packing, &capacity_upper, t),
        equality,
    ];
    let pass = checks.iter().all(|c| c.pass);
    Ok(RelationshipReport {
        classical,
        classical_spanning,
        pesin,
        packing,
        capacity_upper,
        capacity_lower,
        checks,
        max_scale_gap,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::PointSet;
    use crate::systems::builtin::{builtin_system, SystemSpec};

    #[test]
    fn bisection_closed_form() {
        let c = critical_value(|s| Ok((10.0 * (0.3 - s)).exp()), (0.0, 1.0), 1e-9, 1.0).unwrap();
        assert!((c.s - 0.3).abs() < 1e-9);
        let expanded = critical_value(|s| Ok((10.0 * (7.5 - s)).exp()), (0.0, 1.0), 1e-9, 1.0).unwrap();
        assert!((expanded.s - 7.5).abs() < 1e-9);
        assert!(matches!(
            critical_value(|_| Ok(0.0), (0.0, 1.0), 1e-6, 1.0),
            Err(Error::NoJump { .. })
        ));
    }

    #[test]
    fn single_point_all_kinds() {
        let sys = builtin_system(&"single-point:phi=0.3".parse::<SystemSpec>().unwrap()).unwrap();
        let k = PointSet::all(1);
        let p = Problem::new(&sys.space, &sys.maps, &k, &sys.potential).unwrap();
        let cfg = PressureConfig::new(vec![0.5], vec![1, 2, 3]).unwrap();
        for kind in PressureKind::ALL {
            let e = estimate(&p, &cfg, kind).unwrap();
            assert!((e.value - 0.3).abs() < 1e-6, "{kind:?} {}", e.value);
        }
    }

    #[test]
    fn schedules_are_validated() {
        assert!(PressureConfig::new(vec![], vec![1]).is_err());
        assert!(PressureConfig::new(vec![0.1, 0.2], vec![1]).is_err());
        assert!(PressureConfig::new(vec![0.2], vec![2, 2]).is_err());
        let c = PressureConfig::new(vec![0.2], vec![2, 4, 6, 8]).unwrap();
        assert_eq!((c.n, c.n_max), (6, 14));
    }
}
