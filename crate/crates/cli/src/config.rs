//! Run configuration: parsing (JSON or TOML) and validation with field
//! paths in every diagnostic.

use std::path::{Path, PathBuf};

use nds_pressure::cover::EngineOptions;
use nds_pressure::measure::{Direction, DiscreteMeasure};
use nds_pressure::numeric::tail_range;
use nds_pressure::oracle::OracleBudget;
use nds_pressure::pressure::{ClassicalMode, PressureConfig, PressureKind, DEFAULT_CHAIN_TOL, DEFAULT_PARTS, DEFAULT_TOL, DEFAULT_WINDOW};
use nds_pressure::space::PointSet;
use nds_pressure::systems::builtin::{builtin_system, System, SystemSpec};
use nds_pressure::systems::Potential;
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u64 = 1;

/// A located view into the configuration document.
struct Field<'a> {
    value: &'a Value,
    path: String,
}

impl<'a> Field<'a> {
    fn err(&self, message: impl Into<String>) -> CliError {
        CliError::config(&self.path, message)
    }

    fn object(&self) -> Result<&'a Map<String, Value>> {
        self.value.as_object().ok_or_else(|| self.err("expected a table"))
    }

    fn get(&self, key: &str) -> Option<Field<'a>> {
        self.value.get(key).map(|value| Field {
            value,
            path: join(&self.path, key),
        })
    }

    fn require(&self, key: &str) -> Result<Field<'a>> {
        self.get(key).ok_or_else(|| CliError::config(join(&self.path, key), "missing required field"))
    }

    fn only(&self, keys: &[&str]) -> Result<()> {
        if let Some(k) = self.object()?.keys().find(|k| !keys.contains(&k.as_str())) {
            return Err(CliError::config(join(&self.path, k), "unknown field"));
        }
        Ok(())
    }

    fn f64(&self) -> Result<f64> {
        self.value
            .as_f64()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err("expected a finite number"))
    }

    fn usize(&self) -> Result<usize> {
        self.value
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| self.err("expected a nonnegative integer"))
    }

    fn str(&self) -> Result<&'a str> {
        self.value.as_str().ok_or_else(|| self.err("expected a string"))
    }

    fn bool(&self) -> Result<bool> {
        self.value.as_bool().ok_or_else(|| self.err("expected true or false"))
    }

    fn items(&self) -> Result<Vec<Field<'a>>> {
        let arr = self.value.as_array().ok_or_else(|| self.err("expected a list"))?;
        Ok(arr
            .iter()
            .enumerate()
            .map(|(i, value)| Field {
                value,
                path: format!("{}[{i}]", self.path),
            })
            .collect())
    }

    fn f64_list(&self) -> Result<Vec<f64>> {
        self.items()?.iter().map(Field::f64).collect()
    }

    fn usize_list(&self) -> Result<Vec<usize>> {
        self.items()?.iter().map(Field::usize).collect()
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Uniform,
    Dirac(usize),
    Weights(Vec<f64>),
    Bernoulli(f64),
    Product(Vec<f64>),
}

/// A measure, optionally conditioned on `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureChoice {
    pub spec: MeasureSpec,
    pub conditioned: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedules {
    pub eps: Vec<f64>,
    pub n: Vec<usize>,
    pub delta: Vec<f64>,
    pub window: (usize, usize),
    pub parts: usize,
    pub tol: f64,
    pub chain_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Pressure { kind: PressureKind, mode: ClassicalMode },
    Relationship,
    Local { sample: Option<Vec<usize>> },
    MeasurePressure { kind: Option<PressureKind> },
    Distribution { s: f64, big_k: f64, copies: usize },
    Billingsley { s: f64, direction: Direction },
    Variational { family: Vec<MeasureChoice> },
    Generic { radius: f64, m: usize },
    NonWandering { k_max: Option<usize>, radius: Option<f64> },
    UniformLimit { horizon: Option<usize> },
    OracleCompare { s: Vec<f64> },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Pressure { kind, .. } => match kind {
                PressureKind::Classical => "classical",
                PressureKind::Pesin => "pesin",
                PressureKind::Packing => "packing",
                PressureKind::CapacityUpper => "capacity-upper",
                PressureKind::CapacityLower => "capacity-lower",
            },
            Task::Relationship => "relationship",
            Task::Local { .. } => "local",
            Task::MeasurePressure { .. } => "measure-pressure",
            Task::Distribution { .. } => "distribution",
            Task::Billingsley { .. } => "billingsley",
            Task::Variational { .. } => "variational",
            Task::Generic { .. } => "generic",
            Task::NonWandering { .. } => "nonwandering",
            Task::UniformLimit { .. } => "uniform-limit",
            Task::OracleCompare { .. } => "oracle-compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub dir: PathBuf,
    pub json: bool,
    pub csv: bool,
}

/// A validated run configuration with the system already constructed.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub system: System,
    pub k: PointSet,
    pub potential: Potential,
    pub measure: MeasureChoice,
    pub schedules: Schedules,
    pub options: EngineOptions,
    pub tasks: Vec<Task>,
    pub output: Output,
}

impl RunConfig {
    pub fn pressure_config(&self) -> PressureConfig {
        let s = &self.schedules;
        let mut config = PressureConfig::new(s.eps.clone(), s.n.clone())
            .expect("schedules validated")
            .with_window(s.window.0, s.window.1)
            .with_parts(s.parts)
            .with_tol(s.tol)
            .with_options(self.options);
        config.chain_tol = s.chain_tol;
        config
    }

    pub fn build_measure(&self, choice: &MeasureChoice, field: &str) -> Result<DiscreteMeasure> {
        let len = self.system.len();
        let coding = || {
            self.system
                .coding
                .as_ref()
                .ok_or_else(|| CliError::config(field, "product measures need a cyclic-shift system"))
        };
        let mu = match &choice.spec {
            MeasureSpec::Uniform => DiscreteMeasure::uniform(len),
            MeasureSpec::Dirac(x) => {
                if *x >= len {
                    return Err(CliError::config(format!("{field}.dirac"), format!("point {x} outside 0..{len}")));
                }
                DiscreteMeasure::dirac(len, *x)
            }
            MeasureSpec::Weights(w) => {
                if w.len() != len {
                    return Err(CliError::config(
                        format!("{field}.weights"),
                        format!("expected {len} weights, got {}", w.len()),
                    ));
                }
                DiscreteMeasure::new("weights", w.clone())
            }
            MeasureSpec::Bernoulli(p) => DiscreteMeasure::bernoulli(coding()?, *p),
            MeasureSpec::Product(p) => DiscreteMeasure::product(coding()?, p),
        }
        .map_err(|e| CliError::config(field, e.to_string()))?;
        if choice.conditioned {
            mu.conditioned(&self.k).map_err(|e| CliError::config(field, e.to_string()))
        } else {
            Ok(mu)
        }
    }
}

/// Reads a configuration file. `.toml` files are read as TOML, `.json` as
/// JSON; anything else is tried as JSON first.
pub fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        action: "read config",
        path: path.to_path_buf(),
        source,
    })?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let doc = match ext {
        "toml" => parse_toml(&text)?,
        "json" => parse_json(&text)?,
        _ => parse_json(&text).or_else(|_| parse_toml(&text))?,
    };
    from_value(&doc)
}

pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| CliError::config("(document)", format!("invalid JSON: {e}")))
}

pub fn parse_toml(text: &str) -> Result<Value> {
    let v: toml::Table = toml::from_str(text).map_err(|e| CliError::config("(document)", format!("invalid TOML: {e}")))?;
    serde_json::to_value(v).map_err(|e| CliError::config("(document)", e.to_string()))
}

const TOP_KEYS: &[&str] = &[
    "version", "system", "subsetK", "potential", "measure", "schedules", "oracle", "tasks", "output",
];

pub fn from_value(doc: &Value) -> Result<RunConfig> {
    let root = Field {
        value: doc,
        path: String::new(),
    };
    root.object()?;
    root.only(TOP_KEYS)?;

    let version = root.require("version")?;
    let v = version.usize()? as u64;
    if v != SCHEMA_VERSION {
        return Err(version.err(format!("unsupported schema version {v}; this build reads version {SCHEMA_VERSION}")));
    }

    let spec = system_spec(&root.require("system")?)?;
    let system = builtin_system(&spec).map_err(|e| CliError::core("system", e))?;
    let k = subset(root.get("subsetK"), &system)?;
    let potential = potential(root.get("potential"), &system)?;
    let measure = match root.get("measure") {
        Some(f) => measure_choice(&f)?,
        None => MeasureChoice {
            spec: MeasureSpec::Uniform,
            conditioned: false,
        },
    };
    let schedules = schedules(&root.require("schedules")?, &system)?;
    let options = oracle_options(root.get("oracle"))?;

    let tasks_field = root.require("tasks")?;
    let items = tasks_field.items()?;
    if items.is_empty() {
        return Err(tasks_field.err("task list is empty; nothing to do"));
    }
    let tasks = items.iter().map(task).collect::<Result<Vec<_>>>()?;
    let output = output(root.get("output"))?;

    let config = RunConfig {
        system,
        k,
        potential,
        measure,
        schedules,
        options,
        tasks,
        output,
    };
    config.build_measure(&config.measure, "measure")?;
    for (i, t) in config.tasks.iter().enumerate() {
        match t {
            Task::Variational { family } => {
                for (j, m) in family.iter().enumerate() {
                    config.build_measure(m, &format!("tasks[{i}].family[{j}]"))?;
                }
            }
            Task::UniformLimit { .. } if config.system.limit_map.is_none() => {
                return Err(CliError::config(
                    format!("tasks[{i}]"),
                    "uniform-limit needs a system with a limit map (family uniform-limit)",
                ));
            }
            Task::Local { sample: Some(sample) } => {
                point_list(sample, config.system.len(), &format!("tasks[{i}].sample"))?;
            }
            _ => {}
        }
    }
    Ok(config)
}

fn system_spec(f: &Field) -> Result<SystemSpec> {
    match f.value {
        Value::String(s) => s.parse::<SystemSpec>().map_err(|e| CliError::core("system", e)),
        Value::Object(_) => serde_json::from_value(f.value.clone()).map_err(|e| f.err(e.to_string())),
        _ => Err(f.err("expected a descriptor string or a table")),
    }
}

fn point_list(points: &[usize], len: usize, field: &str) -> Result<PointSet> {
    if points.is_empty() {
        return Err(CliError::config(field, "point list is empty"));
    }
    if let Some(x) = points.iter().find(|&&x| x >= len) {
        return Err(CliError::config(field, format!("point {x} outside 0..{len}")));
    }
    PointSet::new(len, points.to_vec()).map_err(|e| CliError::config(field, e.to_string()))
}

fn subset(f: Option<Field>, system: &System) -> Result<PointSet> {
    let len = system.len();
    let Some(f) = f else {
        return Ok(PointSet::all(len));
    };
    match f.value {
        Value::String(s) if s == "all" => Ok(PointSet::all(len)),
        Value::Array(_) => point_list(&f.usize_list()?, len, &f.path),
        Value::Object(_) => {
            f.only(&["prefix"])?;
            let pf = f.require("prefix")?;
            let prefix = pf.str()?;
            let coding = system
                .coding
                .as_ref()
                .ok_or_else(|| pf.err("prefix selectors need a cyclic-shift system"))?;
            if prefix.len() > coding.length {
                return Err(pf.err(format!("prefix longer than the word length {}", coding.length)));
            }
            let symbols = prefix
                .chars()
                .map(|c| c.to_digit(36).map(|d| d as usize).filter(|&d| d < coding.alphabet))
                .collect::<Option<Vec<usize>>>()
                .ok_or_else(|| pf.err(format!("symbols must be below the alphabet size {}", coding.alphabet)))?;
            let mut word = symbols.clone();
            word.resize(coding.length, 0);
            let members = coding.prefix_class(coding.word(&word), symbols.len());
            point_list(&members, len, &pf.path)
        }
        _ => Err(f.err("expected \"all\", a list of point indices or {prefix = \"...\"}")),
    }
}

fn potential(f: Option<Field>, system: &System) -> Result<Potential> {
    let len = system.len();
    let Some(f) = f else {
        return Ok(system.potential.clone());
    };
    let built = match f.value {
        Value::String(s) => match s.as_str() {
            "system" => Ok(system.potential.clone()),
            "zero" => Ok(Potential::zero(len)),
            other => return Err(f.err(format!("unknown potential `{other}`; use system, zero or a table"))),
        },
        Value::Array(_) => {
            let values = f.f64_list()?;
            if values.len() != len {
                return Err(f.err(format!("expected {len} values, got {}", values.len())));
            }
            Potential::new("values", values)
        }
        Value::Object(map) => {
            f.only(&["constant", "values", "cosine", "firstSymbol"])?;
            if map.len() != 1 {
                return Err(f.err("give exactly one of constant, values, cosine, firstSymbol"));
            }
            if let Some(c) = f.get("constant") {
                Potential::constant(len, c.f64()?)
            } else if let Some(v) = f.get("values") {
                return potential(Some(v), system);
            } else if let Some(a) = f.get("cosine") {
                let a = a.f64()?;
                let tau = std::f64::consts::TAU;
                Potential::new(
                    format!("{a}*cos"),
                    (0..len).map(|i| a * (tau * i as f64 / len as f64).cos()).collect(),
                )
            } else {
                let c = f.require("firstSymbol")?;
                let value = c.f64()?;
                let coding = system
                    .coding
                    .as_ref()
                    .ok_or_else(|| c.err("firstSymbol needs a cyclic-shift system"))?;
                Potential::new(
                    format!("{value}*x0"),
                    (0..len).map(|w| value * coding.symbol(w, 0) as f64).collect(),
                )
            }
        }
        Value::Number(_) => Potential::constant(len, f.f64()?),
        _ => return Err(f.err("expected a name, a number, a list or a table")),
    };
    built.map_err(|e| f.err(e.to_string()))
}

fn measure_choice(f: &Field) -> Result<MeasureChoice> {
    if let Value::String(s) = f.value {
        return match s.as_str() {
            "uniform" => Ok(MeasureChoice {
                spec: MeasureSpec::Uniform,
                conditioned: false,
            }),
            other => Err(f.err(format!("unknown measure `{other}`"))),
        };
    }
    f.only(&["uniform", "dirac", "weights", "bernoulli", "product", "conditioned"])?;
    let conditioned = match f.get("conditioned") {
        Some(c) => c.bool()?,
        None => false,
    };
    let mut specs = Vec::new();
    if let Some(u) = f.get("uniform") {
        if u.bool()? {
            specs.push(MeasureSpec::Uniform);
        }
    }
    if let Some(d) = f.get("dirac") {
        specs.push(MeasureSpec::Dirac(d.usize()?));
    }
    if let Some(w) = f.get("weights") {
        specs.push(MeasureSpec::Weights(w.f64_list()?));
    }
    if let Some(b) = f.get("bernoulli") {
        let p = b.f64()?;
        if !(0.0..=1.0).contains(&p) {
            return Err(b.err("probability must lie in [0, 1]"));
        }
        specs.push(MeasureSpec::Bernoulli(p));
    }
    if let Some(p) = f.get("product") {
        specs.push(MeasureSpec::Product(p.f64_list()?));
    }
    if specs.len() != 1 {
        return Err(f.err("give exactly one of uniform, dirac, weights, bernoulli, product"));
    }
    Ok(MeasureChoice {
        spec: specs.remove(0),
        conditioned,
    })
}

fn strictly(values: &[f64], decreasing: bool) -> bool {
    values.windows(2).all(|w| if decreasing { w[0] > w[1] } else { w[0] < w[1] })
}

fn schedules(f: &Field, system: &System) -> Result<Schedules> {
    f.object()?;
    f.only(&["epsSchedule", "nSchedule", "deltaSchedule", "N", "Nmax", "parts", "tol", "chainTol"])?;
    let ef = f.require("epsSchedule")?;
    let eps = ef.f64_list()?;
    if eps.is_empty() {
        return Err(ef.err("schedule is empty"));
    }
    if eps.iter().any(|&e| e <= 0.0) {
        return Err(ef.err("scales must be positive"));
    }
    if !strictly(&eps, true) {
        return Err(ef.err("scales must be strictly decreasing"));
    }
    let nf = f.require("nSchedule")?;
    let n = nf.usize_list()?;
    if n.is_empty() {
        return Err(nf.err("schedule is empty"));
    }
    if n[0] == 0 {
        return Err(nf.err("horizons start at 1"));
    }
    if !n.windows(2).all(|w| w[0] < w[1]) {
        return Err(nf.err("horizons must be strictly increasing"));
    }
    let max_h = system.max_horizon;
    if let (Some(h), Some(&last)) = (max_h, n.last()) {
        if last > h {
            return Err(nf.err(format!("horizon {last} exceeds the word length {h} of the cyclic shift")));
        }
    }
    let delta = match f.get("deltaSchedule") {
        Some(df) => {
            let d = df.f64_list()?;
            if d.is_empty() {
                return Err(df.err("schedule is empty"));
            }
            if d.iter().any(|&x| !(0.0..1.0).contains(&x)) {
                return Err(df.err("values must lie in [0, 1)"));
            }
            if !strictly(&d, true) {
                return Err(df.err("values must be strictly decreasing"));
            }
            d
        }
        None => vec![0.0],
    };
    let tail_n = n[tail_range(n.len()).start];
    let big_n = match f.get("N") {
        Some(x) => {
            let v = x.usize()?;
            if v == 0 {
                return Err(x.err("must be at least 1"));
            }
            v
        }
        None => tail_n,
    };
    let n_max = match f.get("Nmax") {
        Some(x) => {
            let v = x.usize()?;
            if v < big_n {
                return Err(x.err(format!("must be at least N = {big_n}")));
            }
            if let Some(h) = max_h.filter(|&h| v > h) {
                return Err(x.err(format!("exceeds the word length {h} of the cyclic shift")));
            }
            v
        }
        None => {
            let v = (big_n + DEFAULT_WINDOW).max(*n.last().expect("nonempty"));
            max_h.map_or(v, |h| v.min(h)).max(big_n)
        }
    };
    if let Some(h) = max_h.filter(|&h| big_n > h) {
        return Err(CliError::config(join(&f.path, "N"), format!("exceeds the word length {h} of the cyclic shift")));
    }
    let parts = match f.get("parts") {
        Some(x) => {
            let v = x.usize()?;
            if v == 0 {
                return Err(x.err("must be at least 1"));
            }
            v
        }
        None => DEFAULT_PARTS,
    };
    let positive = |name: &str, default: f64| -> Result<f64> {
        match f.get(name) {
            Some(x) => {
                let v = x.f64()?;
                if v <= 0.0 {
                    return Err(x.err("must be positive"));
                }
                Ok(v)
            }
            None => Ok(default),
        }
    };
    Ok(Schedules {
        eps,
        n,
        delta,
        window: (big_n, n_max),
        parts,
        tol: positive("tol", DEFAULT_TOL)?,
        chain_tol: positive("chainTol", DEFAULT_CHAIN_TOL)?,
    })
}

fn oracle_options(f: Option<Field>) -> Result<EngineOptions> {
    let mut options = EngineOptions::default();
    let Some(f) = f else {
        return Ok(options);
    };
    f.object()?;
    f.only(&["enabled", "maxPoints", "maxCandidates", "maxSubsets"])?;
    if let Some(e) = f.get("enabled") {
        options.use_oracle = e.bool()?;
    }
    let budget: &mut OracleBudget = &mut options.budget;
    if let Some(x) = f.get("maxPoints") {
        budget.max_points = x.usize()?;
    }
    if let Some(x) = f.get("maxCandidates") {
        budget.max_candidates = x.usize()?;
    }
    if let Some(x) = f.get("maxSubsets") {
        budget.max_subsets = x.usize()? as u64;
    }
    Ok(options)
}

fn kind_name(name: &str) -> Option<PressureKind> {
    Some(match name {
        "classical" => PressureKind::Classical,
        "pesin" => PressureKind::Pesin,
        "packing" => PressureKind::Packing,
        "capacity-upper" => PressureKind::CapacityUpper,
        "capacity-lower" => PressureKind::CapacityLower,
        _ => return None,
    })
}

fn task(f: &Field) -> Result<Task> {
    let (name, params) = match f.value {
        Value::String(s) => (s.as_str(), None),
        Value::Object(_) => (f.require("task")?.str()?, Some(f)),
        _ => return Err(f.err("expected a task name or a table with a `task` field")),
    };
    let allow = |keys: &[&str]| -> Result<()> {
        if let Some(p) = params {
            let mut all = vec!["task"];
            all.extend_from_slice(keys);
            p.only(&all)?;
        }
        Ok(())
    };
    let get = |key: &str| params.and_then(|p| p.get(key));
    let need = |key: &str| -> Result<Field> {
        get(key).ok_or_else(|| CliError::config(join(&f.path, key), format!("task `{name}` requires this field")))
    };
    let opt_f64 = |key: &str, default: Option<f64>| -> Result<Option<f64>> { get(key).map(|x| x.f64()).transpose().map(|v| v.or(default)) };

    if let Some(kind) = kind_name(name) {
        allow(&["mode"])?;
        let mode = match get("mode") {
            None => ClassicalMode::Separated,
            Some(m) => match m.str()? {
                "separated" => ClassicalMode::Separated,
                "spanning" => ClassicalMode::Spanning,
                other => return Err(m.err(format!("unknown mode `{other}`; use separated or spanning"))),
            },
        };
        if kind != PressureKind::Classical && get("mode").is_some() {
            return Err(CliError::config(join(&f.path, "mode"), "only the classical pressure has a mode"));
        }
        return Ok(Task::Pressure { kind, mode });
    }
    let t = match name {
        "relationship" => {
            allow(&[])?;
            Task::Relationship
        }
        "local" => {
            allow(&["sample"])?;
            Task::Local {
                sample: get("sample").map(|s| s.usize_list()).transpose()?,
            }
        }
        "measure-pressure" => {
            allow(&["kind"])?;
            let kind = match get("kind") {
                None => Some(PressureKind::Packing),
                Some(k) => match k.str()? {
                    "spanning" => None,
                    other => match kind_name(other) {
                        Some(PressureKind::Classical) | None => {
                            return Err(k.err(format!(
                                "unknown kind `{other}`; use pesin, packing, capacity-upper, capacity-lower or spanning"
                            )))
                        }
                        Some(kind) => Some(kind),
                    },
                },
            };
            Task::MeasurePressure { kind }
        }
        "distribution" => {
            allow(&["s", "bigK", "copies"])?;
            let big_k = opt_f64("bigK", Some(1.0))?.expect("default");
            if big_k <= 0.0 {
                return Err(CliError::config(join(&f.path, "bigK"), "must be positive"));
            }
            let copies = match get("copies") {
                Some(c) => c.usize()?,
                None => 4,
            };
            if copies == 0 {
                return Err(CliError::config(join(&f.path, "copies"), "must be at least 1"));
            }
            Task::Distribution {
                s: need("s")?.f64()?,
                big_k,
                copies,
            }
        }
        "billingsley" => {
            allow(&["s", "direction"])?;
            let direction = match get("direction") {
                None => Direction::UpperLe,
                Some(d) => match d.str()? {
                    "upper-le" => Direction::UpperLe,
                    "lower-ge" => Direction::LowerGe,
                    other => return Err(d.err(format!("unknown direction `{other}`; use upper-le or lower-ge"))),
                },
            };
            Task::Billingsley {
                s: need("s")?.f64()?,
                direction,
            }
        }
        "variational" => {
            allow(&["family"])?;
            let fam = need("family")?;
            let family = fam.items()?.iter().map(measure_choice).collect::<Result<Vec<_>>>()?;
            if family.is_empty() {
                return Err(fam.err("family is empty"));
            }
            Task::Variational { family }
        }
        "generic" => {
            allow(&["radius", "m"])?;
            let r = need("radius")?;
            let radius = r.f64()?;
            if radius <= 0.0 {
                return Err(r.err("must be positive"));
            }
            Task::Generic {
                radius,
                m: get("m").map(|m| m.usize()).transpose()?.unwrap_or(1).max(1),
            }
        }
        "nonwandering" => {
            allow(&["kMax", "radius"])?;
            let radius = opt_f64("radius", None)?;
            if radius.is_some_and(|r| r <= 0.0) {
                return Err(CliError::config(join(&f.path, "radius"), "must be positive"));
            }
            let k_max = get("kMax").map(|k| k.usize()).transpose()?;
            if k_max == Some(0) {
                return Err(CliError::config(join(&f.path, "kMax"), "must be at least 1"));
            }
            Task::NonWandering {
                k_max,
                radius,
            }
        }
        "uniform-limit" => {
            allow(&["horizon"])?;
            let horizon = get("horizon").map(|h| h.usize()).transpose()?;
            if horizon == Some(0) {
                return Err(CliError::config(join(&f.path, "horizon"), "must be at least 1"));
            }
            Task::UniformLimit { horizon }
        }
        "oracle-compare" => {
            allow(&["s"])?;
            Task::OracleCompare {
                s: get("s").map(|s| s.f64_list()).transpose()?.unwrap_or_else(|| vec![0.0]),
            }
        }
        other => {
            let field = if params.is_some() { join(&f.path, "task") } else { f.path.clone() };
            return Err(CliError::config(field, format!("unknown task `{other}`")));
        }
    };
    Ok(t)
}

fn output(f: Option<Field>) -> Result<Output> {
    let mut out = Output {
        dir: PathBuf::from("ndsp-out"),
        json: true,
        csv: true,
    };
    let Some(f) = f else {
        return Ok(out);
    };
    f.object()?;
    f.only(&["dir", "formats"])?;
    if let Some(d) = f.get("dir") {
        out.dir = PathBuf::from(d.str()?);
    }
    if let Some(fm) = f.get("formats") {
        out.json = false;
        out.csv = false;
        for item in fm.items()? {
            match item.str()? {
                "json" => out.json = true,
                "csv" => out.csv = true,
                other => return Err(item.err(format!("unknown format `{other}`; use json or csv"))),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(doc: &str) -> String {
        match from_value(&parse_json(doc).unwrap()) {
            Err(CliError::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    const BASE: &str = r#""version": 1, "system": "cyclic-shift:L=6", "schedules": {"epsSchedule": [0.5], "nSchedule": [1, 2, 3]}"#;

    #[test]
    fn minimal_config() {
        let c = from_value(&parse_json(&format!("{{{BASE}, \"tasks\": [\"pesin\"]}}")).unwrap()).unwrap();
        assert_eq!(c.system.len(), 64);
        assert_eq!(c.schedules.window, (2, 6));
        assert_eq!(c.tasks, vec![Task::Pressure { kind: PressureKind::Pesin, mode: ClassicalMode::Separated }]);
        assert!(c.output.json && c.output.csv);
    }

    #[test]
    fn diagnostics_name_fields() {
        assert_eq!(field_of(&format!("{{{BASE}, \"tasks\": []}}")), "tasks");
        assert_eq!(field_of(&format!("{{{BASE}}}")), "tasks");
        assert_eq!(
            field_of(r#"{"version": 1, "system": "cyclic-shift:L=6", "schedules": {"epsSchedule": [0.5], "nSchedule": [4, 8]}, "tasks": ["pesin"]}"#),
            "schedules.nSchedule"
        );
        assert_eq!(
            field_of(r#"{"version": 1, "system": "cyclic-shift:L=6", "schedules": {"epsSchedule": [0.1, 0.5], "nSchedule": [1]}, "tasks": ["pesin"]}"#),
            "schedules.epsSchedule"
        );
        assert_eq!(field_of(&format!("{{{BASE}, \"tasks\": [\"pesin\", {{\"task\": \"billingsley\"}}]}}")), "tasks[1].s");
        assert_eq!(field_of(&format!("{{{BASE}, \"tasks\": [\"nope\"]}}")), "tasks[0]");
        assert_eq!(field_of(&format!("{{{BASE}, \"tasks\": [\"pesin\"], \"subsetK\": [0, 99]}}")), "subsetK");
        assert_eq!(field_of(&format!("{{{BASE}, \"tasks\": [\"pesin\"], \"extra\": 1}}")), "extra");
        assert_eq!(field_of(r#"{"version": 2}"#), "version");
        assert_eq!(
            field_of(r#"{"version": 1, "system": "circle-grid:q=12", "schedules": {}, "tasks": ["pesin"]}"#),
            "system.steps"
        );
    }

    #[test]
    fn toml_and_json_agree() {
        let toml_doc = parse_toml(
            r#"
version = 1
system = "cyclic-shift:L=6"
subsetK = { prefix = "01" }
tasks = ["relationship", { task = "billingsley", s = 0.7, direction = "lower-ge" }]

[schedules]
epsSchedule = [0.5]
nSchedule = [1, 2, 3]
"#,
        )
        .unwrap();
        let json_doc = parse_json(&format!(
            r#"{{{BASE}, "subsetK": {{"prefix": "01"}}, "tasks": ["relationship", {{"task": "billingsley", "s": 0.7, "direction": "lower-ge"}}]}}"#
        ))
        .unwrap();
        assert_eq!(toml_doc, json_doc);
        let c = from_value(&toml_doc).unwrap();
        assert_eq!(c.k.len(), 16);
        assert!(c.k.iter().all(|w| w % 4 == 2));
    }
}
