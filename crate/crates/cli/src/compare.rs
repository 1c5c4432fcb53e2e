//! Greedy engines against the exhaustive oracle on one configuration.

use nds_pressure::cover::{CoverFamily, CoverSum, PackingFamily, Problem, Witness};
use nds_pressure::emit::{format_f64, to_json};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Slack on the gap-bound comparison, for rounding in the log domain.
const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonRow {
    pub functional: &'static str,
    pub eps: f64,
    pub n: usize,
    pub n_max: usize,
    pub s: f64,
    pub greedy: f64,
    pub exact: f64,
    /// Proven bound on `|ln greedy - ln exact|`.
    pub log_gap_bound: f64,
    pub log_gap: f64,
    pub within_bound: bool,
    pub greedy_witnesses: Vec<Witness>,
    pub exact_witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Comparison {
    /// SHA-256 of the canonical instance description.
    pub instance_hash: String,
    pub rows: Vec<ComparisonRow>,
    pub max_log_gap: f64,
    pub pass: bool,
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("functional,eps,n,nMax,s,greedy,exact,logGapBound,logGap,withinBound\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.functional,
                format_f64(r.eps),
                r.n,
                r.n_max,
                format_f64(r.s),
                format_f64(r.greedy),
                format_f64(r.exact),
                format_f64(r.log_gap_bound),
                format_f64(r.log_gap),
                r.within_bound
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        let bad = self.rows.iter().filter(|r| !r.within_bound).count();
        format!(
            "{} comparisons, max log gap {}, {} outside the greedy bound; instance {}",
            self.rows.len(),
            format_f64(self.max_log_gap),
            bad,
            &self.instance_hash[..16]
        )
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Instance<'a> {
    system: serde_json::Value,
    subset_k: &'a [usize],
    potential: &'a [f64],
    eps_schedule: &'a [f64],
    n_schedule: &'a [usize],
    window: (usize, usize),
    s: &'a [f64],
    max_points: usize,
    max_candidates: usize,
    max_subsets: u64,
}

fn instance_hash(config: &RunConfig, s: &[f64]) -> Result<String> {
    let sched = &config.schedules;
    let budget = &config.options.budget;
    let system = serde_json::to_value(&config.system.spec)
        .map_err(|e| CliError::core("system", nds_pressure::Error::Internal(e.to_string())))?;
    let inst = Instance {
        system,
        subset_k: config.k.members(),
        potential: config.potential.values(),
        eps_schedule: &sched.eps,
        n_schedule: &sched.n,
        window: sched.window,
        s,
        max_points: budget.max_points,
        max_candidates: budget.max_candidates,
        max_subsets: budget.max_subsets,
    };
    let canonical = to_json(&inst).map_err(|e| CliError::core("oracle-compare", e))?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

fn row(functional: &'static str, eps: f64, window: (usize, usize), s: f64, greedy: CoverSum, exact: CoverSum) -> ComparisonRow {
    let log_gap = (greedy.log_value - exact.log_value).abs();
    let log_gap_bound = greedy.log_gap_bound;
    ComparisonRow {
        functional,
        eps,
        n: window.0,
        n_max: window.1,
        s,
        greedy: greedy.log_value.exp(),
        exact: exact.log_value.exp(),
        log_gap_bound,
        log_gap,
        within_bound: log_gap <= log_gap_bound + SLACK,
        greedy_witnesses: greedy.witnesses,
        exact_witnesses: exact.witnesses,
    }
}

/// Evaluates the cover and packing functionals with both engines at every
/// scale, at each single horizon of the schedule and over the window.
/// Instances beyond the oracle budget are a capacity error.
pub fn oracle_compare(config: &RunConfig, s_values: &[f64]) -> Result<Comparison> {
    let sys = &config.system;
    let ctx = "oracle-compare";
    let core = |e| CliError::core(ctx, e);
    let problem = Problem::new(&sys.space, &sys.maps, &config.k, &config.potential).map_err(core)?;
    let options = config.options;
    let mut windows: Vec<(usize, usize)> = config.schedules.n.iter().map(|&n| (n, n)).collect();
    if !windows.contains(&config.schedules.window) {
        windows.push(config.schedules.window);
    }
    let mut rows = Vec::new();
    for &eps in &config.schedules.eps {
        for &(n, n_max) in &windows {
            let cover = CoverFamily::new(&problem, eps, n, n_max, &options).map_err(core)?;
            let packing = PackingFamily::new(&problem, eps, n, n_max, &options).map_err(core)?;
            for &s in s_values {
                rows.push(row("cover", eps, (n, n_max), s, cover.greedy(s).map_err(core)?, cover.exact(s).map_err(core)?));
                rows.push(row(
                    "packing",
                    eps,
                    (n, n_max),
                    s,
                    packing.greedy(s).map_err(core)?,
                    packing.exact(s).map_err(core)?,
                ));
            }
        }
    }
    let max_log_gap = rows.iter().map(|r| r.log_gap).fold(0.0, f64::max);
    Ok(Comparison {
        instance_hash: instance_hash(config, s_values)?,
        pass: rows.iter().all(|r| r.within_bound),
        max_log_gap,
        rows,
    })
}
