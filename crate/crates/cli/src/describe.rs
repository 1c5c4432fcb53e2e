//! Summary of a built-in system.

use nds_pressure::emit::to_json;
use nds_pressure::systems::builtin::{builtin_system, SystemSpec};
use serde::Serialize;

use crate::error::{CliError, Result};

/// Pairwise statistics are skipped above this many points.
const PAIRWISE_LIMIT: usize = 4096;

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Coding {
    length: usize,
    alphabet: usize,
    base: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Description {
    descriptor: String,
    spec: serde_json::Value,
    points: usize,
    labels: Vec<String>,
    diameter: Option<f64>,
    min_separation: Option<f64>,
    /// `(preperiod, period)` of the map sequence.
    periodic: Option<(usize, usize)>,
    max_horizon: Option<usize>,
    coding: Option<Coding>,
    potential: String,
    potential_range: (f64, f64),
    has_limit_map: bool,
}

/// Parses `text` as a compact descriptor, or as a JSON table when it starts
/// with `{`.
pub fn parse_spec(text: &str) -> Result<SystemSpec> {
    let text = text.trim();
    if text.starts_with('{') {
        serde_json::from_str(text).map_err(|e| CliError::config("system", e.to_string()))
    } else {
        text.parse().map_err(|e| CliError::core("system", e))
    }
}

pub fn describe(text: &str) -> Result<String> {
    let spec = parse_spec(text)?;
    let sys = builtin_system(&spec).map_err(|e| CliError::core("system", e))?;
    let p = sys.len();
    let (diameter, min_separation) = if p <= PAIRWISE_LIMIT {
        let mut diam: f64 = 0.0;
        let mut sep = f64::INFINITY;
        for x in 0..p {
            for y in x + 1..p {
                let d = sys.space.dist(x, y);
                diam = diam.max(d);
                sep = sep.min(d);
            }
        }
        (Some(diam), sep.is_finite().then_some(sep))
    } else {
        (None, None)
    };
    let values = sys.potential.values();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let d = Description {
        descriptor: spec.to_string(),
        spec: serde_json::to_value(&spec).map_err(|e| CliError::config("system", e.to_string()))?,
        points: p,
        labels: (0..p.min(16)).map(|x| sys.space.label(x)).collect(),
        diameter,
        min_separation,
        periodic: sys.maps.periodic(),
        max_horizon: sys.max_horizon,
        coding: sys.coding.as_ref().map(|c| Coding {
            length: c.length,
            alphabet: c.alphabet,
            base: c.base,
        }),
        potential: sys.potential.name().to_string(),
        potential_range: (lo, hi),
        has_limit_map: sys.limit_map.is_some(),
    };
    to_json(&d).map_err(|e| CliError::core("describe", e))
}
