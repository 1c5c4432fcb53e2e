//! Task execution. Every task yields one JSON document, an optional CSV
//! table and a one-line summary.

use nds_pressure::cover::Problem;
use nds_pressure::emit::{format_f64, to_json};
use nds_pressure::measure::{
    billingsley_bound, distribution_principle_check, local_pressure, measure_cp_pressure, non_wandering_set,
    packing_bound_on_generic, spanning_measure_pressure, uniform_limit_check, variational_gap, DiscreteMeasure,
    Outcome, TestFunctionFamily,
};
use nds_pressure::par;
use nds_pressure::pressure::{classical_pressure, estimate, relationship_report, PressureKind};
use nds_pressure::space::PointSet;
use serde::Serialize;

use crate::compare::oracle_compare;
use crate::config::{RunConfig, Task};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Verdict {
    Pass,
    Fail,
    /// The task computes values but asserts nothing.
    Report,
}

impl Verdict {
    fn of(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    fn of_outcome(outcome: Outcome) -> Self {
        Verdict::of(outcome != Outcome::ConclusionViolated)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Report => "ok",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TaskOutput {
    /// File stem, e.g. `01-relationship`.
    pub label: String,
    pub json: String,
    pub csv: Option<String>,
    pub summary: String,
    pub verdict: Verdict,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Envelope<'a, T: Serialize> {
    task: &'a str,
    index: usize,
    system: String,
    subset_k: &'a [usize],
    potential: &'a str,
    verdict: Verdict,
    report: &'a T,
}

pub fn system_label(config: &RunConfig) -> String {
    config.system.spec.to_string()
}

fn finish<T: Serialize>(
    config: &RunConfig,
    index: usize,
    task: &Task,
    report: &T,
    csv: Option<String>,
    summary: String,
    verdict: Verdict,
) -> Result<TaskOutput> {
    let label = format!("{:02}-{}", index + 1, task.name());
    let env = Envelope {
        task: task.name(),
        index: index + 1,
        system: system_label(config),
        subset_k: config.k.members(),
        potential: config.potential.name(),
        verdict,
        report,
    };
    let json = to_json(&env).map_err(|e| CliError::core(&label, e))?;
    Ok(TaskOutput {
        label,
        json,
        csv,
        summary,
        verdict,
    })
}

/// Runs every task, concurrently where the pool allows; results come back
/// in configuration order.
pub fn run_all(config: &RunConfig) -> Result<Vec<TaskOutput>> {
    let indexed: Vec<(usize, &Task)> = config.tasks.iter().enumerate().collect();
    par::try_map_slice(&indexed, |&(i, t)| run_task(config, i, t))
}

pub fn run_task(config: &RunConfig, index: usize, task: &Task) -> Result<TaskOutput> {
    let ctx = format!("tasks[{index}] ({})", task.name());
    let core = |e| CliError::core(&ctx, e);
    let sys = &config.system;
    let problem = Problem::new(&sys.space, &sys.maps, &config.k, &config.potential).map_err(core)?;
    let pc = config.pressure_config();
    let mu = || config.build_measure(&config.measure, "measure");
    let smallest_eps = *pc.eps_schedule.last().expect("nonempty");
    let last_n = *pc.n_schedule.last().expect("nonempty");

    match task {
        Task::Pressure { kind, mode } => {
            let est = if *kind == PressureKind::Classical {
                classical_pressure(&problem, &pc, *mode)
            } else {
                estimate(&problem, &pc, *kind)
            }
            .map_err(core)?;
            let summary = format!("{} = {}", kind.as_str(), format_f64(est.value));
            let csv = est.to_csv();
            finish(config, index, task, &est, Some(csv), summary, Verdict::Report)
        }
        Task::Relationship => {
            let report = relationship_report(&problem, &pc).map_err(core)?;
            let mut csv = String::from("kind,eps,N,raw,normalized\n");
            for est in [
                &report.classical,
                &report.classical_spanning,
                &report.pesin,
                &report.packing,
                &report.capacity_upper,
                &report.capacity_lower,
            ] {
                let mode = est.classical_mode.map(|m| format!("{m:?}").to_lowercase());
                for line in est.to_csv().lines().skip(1) {
                    match (&mode, line.split_once(',')) {
                        (Some(m), Some((kind, rest))) => csv.push_str(&format!("{kind}-{m},{rest}\n")),
                        _ => {
                            csv.push_str(line);
                            csv.push('\n');
                        }
                    }
                }
            }
            let failed = report.checks.iter().filter(|c| !c.pass).count();
            let summary = format!(
                "classical {} pesin {} packing {} capacity [{}, {}]; {} of {} checks failed",
                format_f64(report.classical.value),
                format_f64(report.pesin.value),
                format_f64(report.packing.value),
                format_f64(report.capacity_lower.value),
                format_f64(report.capacity_upper.value),
                failed,
                report.checks.len()
            );
            finish(config, index, task, &report, Some(csv), summary, Verdict::of(report.pass))
        }
        Task::Local { sample } => {
            let mu = mu()?;
            let sample = match sample {
                Some(s) => PointSet::new(sys.len(), s.clone()).map_err(core)?,
                None => config.k.clone(),
            };
            let profile =
                local_pressure(&mu, &sys.space, &sys.maps, &config.potential, &sample, &pc.eps_schedule, &pc.n_schedule)
                    .map_err(core)?;
            let summary = format!("{} points profiled at {} scales", profile.points.len(), profile.eps_schedule.len() * profile.n_schedule.len());
            let csv = profile.to_csv();
            finish(config, index, task, &profile, Some(csv), summary, Verdict::Report)
        }
        Task::MeasurePressure { kind } => {
            let mu = mu()?;
            let deltas = &config.schedules.delta;
            let (value, per_delta, json_task) = match kind {
                Some(kind) => {
                    let r = measure_cp_pressure(&mu, &sys.space, &sys.maps, &config.potential, *kind, deltas, &pc).map_err(core)?;
                    (r.value, r.per_delta.clone(), serde_json::to_value(&r))
                }
                None => {
                    let r = spanning_measure_pressure(&mu, &sys.space, &sys.maps, &config.potential, deltas, &pc).map_err(core)?;
                    (r.value, r.per_delta.clone(), serde_json::to_value(&r))
                }
            };
            let report = json_task.map_err(|e| CliError::core(&ctx, nds_pressure::Error::Internal(e.to_string())))?;
            let mut csv = String::from("delta,value\n");
            for (d, v) in deltas.iter().zip(&per_delta) {
                csv.push_str(&format!("{},{}\n", format_f64(*d), format_f64(*v)));
            }
            let name = kind.map_or("spanning", PressureKind::as_str);
            let summary = format!("{name} measure pressure of {} = {}", mu.name(), format_f64(value));
            finish(config, index, task, &report, Some(csv), summary, Verdict::Report)
        }
        Task::Distribution { s, big_k, copies } => {
            let mus: Vec<DiscreteMeasure> = vec![mu()?; *copies];
            let r = distribution_principle_check(&mus, &problem, *s, smallest_eps, *big_k, &pc.n_schedule, &pc).map_err(core)?;
            let summary = format!("s = {}: {:?}", format_f64(*s), r.outcome);
            finish(config, index, task, &r, None, summary, Verdict::of_outcome(r.outcome))
        }
        Task::Billingsley { s, direction } => {
            let mu = mu()?;
            let profile =
                local_pressure(&mu, &sys.space, &sys.maps, &config.potential, &config.k, &pc.eps_schedule, &pc.n_schedule)
                    .map_err(core)?;
            let r = billingsley_bound(&mu, &problem, *s, &profile, *direction, &pc).map_err(core)?;
            let summary = format!("s = {} {:?}: {:?}", format_f64(*s), direction, r.outcome);
            finish(config, index, task, &r, None, summary, Verdict::of_outcome(r.outcome))
        }
        Task::Variational { family } => {
            let measures = family
                .iter()
                .enumerate()
                .map(|(j, m)| config.build_measure(m, &format!("tasks[{index}].family[{j}]")))
                .collect::<Result<Vec<_>>>()?;
            let r = variational_gap(&problem, &measures, &pc).map_err(core)?;
            let mut csv = String::from("measure,upperOverK,packingOfMeasure\n");
            for m in &r.members {
                csv.push_str(&format!("{},{},{}\n", m.name, format_f64(m.upper_over_k), format_f64(m.packing_of_measure)));
            }
            let summary = format!(
                "sup {} at {}, packing {}",
                format_f64(r.sup_upper),
                r.argmax_upper,
                format_f64(r.packing.value)
            );
            finish(config, index, task, &r, Some(csv), summary, Verdict::of(r.pass))
        }
        Task::Generic { radius, m } => {
            let mu = mu()?;
            let family = TestFunctionFamily::standard(&sys.space).map_err(core)?;
            let r = packing_bound_on_generic(&mu, &sys.space, &sys.maps, &config.potential, &family, *radius, *m, &pc)
                .map_err(core)?;
            let summary = format!("{} generic points: {:?}", r.generic.len(), r.outcome);
            finish(config, index, task, &r, None, summary, Verdict::of_outcome(r.outcome))
        }
        Task::NonWandering { k_max, radius } => {
            let k_max = k_max.unwrap_or(last_n);
            let radius = radius.unwrap_or(smallest_eps);
            let set = non_wandering_set(&sys.space, &sys.maps, k_max, radius).map_err(core)?;
            #[derive(Serialize)]
            #[serde(rename_all = "camelCase")]
            struct NonWandering<'a> {
                k_max: usize,
                radius: f64,
                points: &'a [usize],
            }
            let report = NonWandering {
                k_max,
                radius,
                points: set.members(),
            };
            let summary = format!("{} of {} points non-wandering", set.len(), sys.len());
            finish(config, index, task, &report, None, summary, Verdict::Report)
        }
        Task::UniformLimit { horizon } => {
            let mu = mu()?;
            let limit = sys.limit_map.as_ref().expect("validated at load time");
            let family = TestFunctionFamily::standard(&sys.space).map_err(core)?;
            let r = uniform_limit_check(&mu, &sys.space, &sys.maps, limit, &family, horizon.unwrap_or(last_n)).map_err(core)?;
            let summary = format!(
                "sequence defect {}, limit defect {}",
                format_f64(r.sequence_defect),
                format_f64(r.limit_defect)
            );
            finish(config, index, task, &r, None, summary, Verdict::of(r.pass))
        }
        Task::OracleCompare { s } => {
            let r = oracle_compare(config, s).map_err(|e| match e {
                CliError::Capacity { message, .. } => CliError::Capacity { context: ctx.clone(), message },
                other => other,
            })?;
            let csv = r.to_csv();
            let summary = r.summary();
            let verdict = Verdict::of(r.pass);
            finish(config, index, task, &r, Some(csv), summary, verdict)
        }
    }
}
