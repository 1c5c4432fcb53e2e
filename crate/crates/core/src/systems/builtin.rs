//! Shipped example families and the descriptor that selects them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{MapSequence, Potential};
use crate::error::{Error, Result};
use crate::space::MetricSpace;

/// Word coding of a cyclic shift: point index `k` is the word whose symbol at
/// position `i` is the `i`-th base-`alphabet` digit of `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftCoding {
    pub length: usize,
    pub alphabet: usize,
    pub base: f64,
}

impl ShiftCoding {
    pub fn points(&self) -> usize {
        self.alphabet.pow(self.length as u32)
    }

    pub fn symbol(&self, word: usize, position: usize) -> usize {
        (word / self.alphabet.pow(position as u32)) % self.alphabet
    }

    pub fn word(&self, symbols: &[usize]) -> usize {
        symbols.iter().rev().fold(0, |acc, &s| acc * self.alphabet + s)
    }

    /// Index of the first position where the words differ, or `None` if equal.
    pub fn first_difference(&self, x: usize, y: usize) -> Option<usize> {
        let (mut a, mut b) = (x, y);
        for i in 0..self.length {
            if a % self.alphabet != b % self.alphabet {
                return Some(i);
            }
            a /= self.alphabet;
            b /= self.alphabet;
        }
        None
    }

    /// Cyclic left rotation `(σw)_i = w_{i+1 mod L}`.
    pub fn rotate(&self, word: usize) -> usize {
        let top = self.alphabet.pow(self.length as u32 - 1);
        word / self.alphabet + (word % self.alphabet) * top
    }

    pub fn label(&self, word: usize) -> String {
        (0..self.length)
            .map(|i| std::char::from_digit(self.symbol(word, i) as u32, 36).unwrap_or('?'))
            .collect()
    }

    /// Words sharing the first `depth` symbols with `word`.
    pub fn prefix_class(&self, word: usize, depth: usize) -> Vec<usize> {
        let modulus = self.alphabet.pow(depth as u32);
        let head = word % modulus;
        (0..self.points()).filter(|w| w % modulus == head).collect()
    }
}

/// Which maps drive a circle grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", rename_all_fields = "camelCase")]
pub enum CircleMaps {
    /// Rotations by `steps[j mod len]` grid cells at time `j`.
    Rotations { steps: Vec<i64> },
    /// `x ↦ 2x mod 1` at odd times, `x ↦ 3x mod 1` at even times.
    DoublingTripling,
}

/// Coordinates of an inline point cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum InlineGeometry {
    Line(Vec<f64>),
    Euclidean(Vec<Vec<f64>>),
    Matrix(Vec<Vec<f64>>),
}

fn default_base() -> f64 {
    std::f64::consts::E
}

fn default_alphabet() -> usize {
    2
}

fn default_schedule() -> String {
    "gh".into()
}

/// Structured descriptor of a built-in or inline system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", rename_all_fields = "camelCase", deny_unknown_fields)]
pub enum SystemSpec {
    SinglePoint {
        #[serde(default)]
        phi: f64,
    },
    TwoPoint {
        /// `a ↦ b, b ↦ b` instead of the identity.
        #[serde(default)]
        collapse: bool,
    },
    CyclicShift {
        length: usize,
        #[serde(default = "default_alphabet")]
        alphabet: usize,
        /// `d(x, y) = base^{-k}` with `k` the first differing position.
        #[serde(default = "default_base")]
        base: f64,
    },
    NCycle {
        n: usize,
    },
    CircleGrid {
        q: usize,
        maps: CircleMaps,
    },
    Switching {
        g: Vec<usize>,
        h: Vec<usize>,
        #[serde(default = "default_schedule")]
        schedule: String,
    },
    UniformLimit {
        q: usize,
        step: i64,
    },
    Inline {
        geometry: InlineGeometry,
        tables: Vec<Vec<usize>>,
        #[serde(default)]
        preperiod: usize,
        #[serde(default)]
        labels: Option<Vec<String>>,
    },
}

/// A fully constructed system: space, maps, default potential and whatever
/// family structure later stages can exploit.
#[derive(Debug, Clone)]
pub struct System {
    pub spec: SystemSpec,
    pub space: MetricSpace,
    pub maps: MapSequence,
    pub potential: Potential,
    /// Present for cyclic shifts.
    pub coding: Option<ShiftCoding>,
    /// Largest horizon for which orbits are faithful (the word length of a
    /// cyclic shift).
    pub max_horizon: Option<usize>,
    /// Uniform limit of the map sequence, when the family has one.
    pub limit_map: Option<Vec<usize>>,
}

impl System {
    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }
}

const MAX_POINTS: usize = 1 << 20;

fn rotation(q: usize, step: i64) -> Vec<usize> {
    let q_i = q as i64;
    (0..q_i).map(|k| (k + step).rem_euclid(q_i) as usize).collect()
}

/// Grid-snapped perturbed rotation used by the uniform-limit family.
pub fn uniform_limit_step(step: i64, n: usize) -> i64 {
    let exact = step as f64 * (1.0 + 0.5_f64.powi(n.min(1000) as i32));
    exact.round() as i64
}

/// Builds a system from its descriptor. Deterministic for equal descriptors.
pub fn builtin_system(spec: &SystemSpec) -> Result<System> {
    let mut coding = None;
    let mut max_horizon = None;
    let mut limit_map = None;
    let mut potential = None;
    let (space, maps) = match spec {
        SystemSpec::SinglePoint { phi } => {
            if !phi.is_finite() {
                return Err(Error::config("system.phi", "must be finite"));
            }
            potential = Some(Potential::constant(1, *phi)?);
            (MetricSpace::discrete(1, Some(vec!["p".into()]))?, MapSequence::identity(1)?)
        }
        SystemSpec::TwoPoint { collapse } => {
            let space = MetricSpace::discrete(2, Some(vec!["a".into(), "b".into()]))?;
            let maps = if *collapse {
                MapSequence::constant(vec![1, 1])?
            } else {
                MapSequence::identity(2)?
            };
            (space, maps)
        }
        SystemSpec::CyclicShift { length, alphabet, base } => {
            if *alphabet < 2 {
                return Err(Error::config("system.alphabet", "needs at least two symbols"));
            }
            if *length == 0 {
                return Err(Error::config("system.length", "must be positive"));
            }
            if !(*base > 1.0 && base.is_finite()) {
                return Err(Error::config("system.base", "must be a finite number greater than 1"));
            }
            let points = (*alphabet as u128).checked_pow(*length as u32).unwrap_or(u128::MAX);
            if points > MAX_POINTS as u128 {
                return Err(Error::config(
                    "system.length",
                    format!("{alphabet}^{length} points exceeds the {MAX_POINTS}-point limit"),
                ));
            }
            let c = ShiftCoding {
                length: *length,
                alphabet: *alphabet,
                base: *base,
            };
            let powers: Vec<f64> = (0..*length).map(|k| base.powi(-(k as i32))).collect();
            let labels = (0..c.points()).map(|w| c.label(w)).collect();
            let space = MetricSpace::new(c.points(), Some(labels), move |x, y| match c.first_difference(x, y) {
                Some(k) => powers[k],
                None => 0.0,
            })?;
            let maps = MapSequence::constant((0..c.points()).map(|w| c.rotate(w)).collect())?;
            coding = Some(c);
            max_horizon = Some(*length);
            (space, maps)
        }
        SystemSpec::NCycle { n } => {
            if *n == 0 {
                return Err(Error::config("system.n", "must be positive"));
            }
            let labels = (0..*n)
                .map(|k| {
                    if *n <= 26 {
                        ((b'a' + k as u8) as char).to_string()
                    } else {
                        k.to_string()
                    }
                })
                .collect();
            (
                MetricSpace::discrete(*n, Some(labels))?,
                MapSequence::constant((0..*n).map(|k| (k + 1) % n).collect())?,
            )
        }
        SystemSpec::CircleGrid { q, maps } => {
            if *q == 0 {
                return Err(Error::config("system.q", "must be positive"));
            }
            let space = MetricSpace::circle_grid(*q)?;
            let seq = match maps {
                CircleMaps::Rotations { steps } => {
                    if steps.is_empty() {
                        return Err(Error::config("system.maps.steps", "needs at least one rotation"));
                    }
                    MapSequence::from_tables(steps.iter().map(|&s| rotation(*q, s)).collect(), 0)?
                }
                CircleMaps::DoublingTripling => {
                    if q % 6 != 0 {
                        return Err(Error::config("system.q", format!("doubling-tripling needs q divisible by 6, got {q}")));
                    }
                    let double = (0..*q).map(|k| (2 * k) % q).collect();
                    let triple = (0..*q).map(|k| (3 * k) % q).collect();
                    MapSequence::from_tables(vec![double, triple], 0)?
                }
            };
            (space, seq)
        }
        SystemSpec::Switching { g, h, schedule } => {
            if g.len() != h.len() || g.is_empty() {
                return Err(Error::config("system.h", "g and h must be nonempty tables of equal length"));
            }
            if schedule.is_empty() || schedule.chars().any(|c| c != 'g' && c != 'h') {
                return Err(Error::config("system.schedule", "must be a nonempty string over {g, h}"));
            }
            let tables = schedule
                .chars()
                .map(|c| if c == 'g' { g.clone() } else { h.clone() })
                .collect();
            let space = MetricSpace::line((0..g.len()).map(|k| k as f64).collect())?;
            let maps = MapSequence::from_tables(tables, 0).map_err(|e| Error::config("system.g", e.to_string()))?;
            (space, maps)
        }
        SystemSpec::UniformLimit { q, step } => {
            if *q == 0 {
                return Err(Error::config("system.q", "must be positive"));
            }
            let space = MetricSpace::circle_grid(*q)?;
            // Past this index the snapped perturbation vanishes and the maps stay put.
            let settle = (1..64)
                .find(|&n| uniform_limit_step(*step, n) == *step)
                .ok_or_else(|| Error::config("system.step", "perturbation never settles"))?;
            let (q2, s2) = (*q, *step);
            let maps = MapSequence::new(*q, Some((settle.saturating_sub(1), 1)), move |j| {
                rotation(q2, uniform_limit_step(s2, j))
            })?;
            limit_map = Some(rotation(*q, *step));
            (space, maps)
        }
        SystemSpec::Inline {
            geometry,
            tables,
            preperiod,
            labels,
        } => {
            let space = match geometry {
                InlineGeometry::Line(c) => MetricSpace::euclidean(c.iter().map(|&v| vec![v]).collect(), labels.clone()),
                InlineGeometry::Euclidean(p) => MetricSpace::euclidean(p.clone(), labels.clone()),
                InlineGeometry::Matrix(m) => MetricSpace::from_matrix(m.clone(), labels.clone()),
            }
            .map_err(|e| Error::config("system.geometry", e.to_string()))?;
            let maps = MapSequence::from_tables(tables.clone(), *preperiod)
                .map_err(|e| Error::config("system.tables", e.to_string()))?;
            if maps.len() != space.len() {
                return Err(Error::config(
                    "system.tables",
                    format!("maps act on {} points, geometry has {}", maps.len(), space.len()),
                ));
            }
            (space, maps)
        }
    };
    let potential = match potential {
        Some(p) => p,
        None => Potential::zero(space.len()),
    };
    Ok(System {
        spec: spec.clone(),
        space,
        maps,
        potential,
        coding,
        max_horizon,
        limit_map,
    })
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemSpec::SinglePoint { phi } => write!(f, "single-point:phi={phi}"),
            SystemSpec::TwoPoint { collapse } => write!(f, "two-point:collapse={collapse}"),
            SystemSpec::CyclicShift { length, alphabet, base } => {
                write!(f, "cyclic-shift:L={length},alphabet={alphabet},base={base}")
            }
            SystemSpec::NCycle { n } => write!(f, "n-cycle:n={n}"),
            SystemSpec::CircleGrid { q, maps } => match maps {
                CircleMaps::DoublingTripling => write!(f, "circle-grid:q={q},maps=doubling-tripling"),
                CircleMaps::Rotations { steps } => {
                    let s: Vec<String> = steps.iter().map(i64::to_string).collect();
                    write!(f, "circle-grid:q={q},steps={}", s.join(";"))
                }
            },
            SystemSpec::Switching { g, h, schedule } => {
                let j = |t: &Vec<usize>| t.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
                write!(f, "switching:g={},h={},schedule={schedule}", j(g), j(h))
            }
            SystemSpec::UniformLimit { q, step } => write!(f, "uniform-limit:q={q},step={step}"),
            SystemSpec::Inline { .. } => write!(f, "inline"),
        }
    }
}

/// Parses the compact form `family:key=value,key=value`, e.g.
/// `cyclic-shift:L=8,alphabet=2` or `circle-grid:q=216,maps=doubling-tripling`.
impl FromStr for SystemSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = std::collections::BTreeMap::new();
        for kv in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::config("system", format!("expected key=value, got `{kv}`")))?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut take = |key: &str| params.remove(key);
        fn num<T: FromStr>(key: &str, v: Option<String>) -> Result<Option<T>> {
            v.map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::config(format!("system.{key}"), format!("cannot parse `{v}`")))
            })
            .transpose()
        }
        fn list<T: FromStr>(key: &str, v: Option<String>) -> Result<Option<Vec<T>>> {
            v.map(|v| {
                v.split(';')
                    .map(|x| {
                        x.trim()
                            .parse::<T>()
                            .map_err(|_| Error::config(format!("system.{key}"), format!("cannot parse `{x}`")))
                    })
                    .collect()
            })
            .transpose()
        }
        let required = |key: &str| Error::config(format!("system.{key}"), "missing required parameter");
        let spec = match family {
            "single-point" => SystemSpec::SinglePoint {
                phi: num("phi", take("phi"))?.unwrap_or(0.0),
            },
            "two-point" => SystemSpec::TwoPoint {
                collapse: num("collapse", take("collapse"))?.unwrap_or(false),
            },
            "cyclic-shift" => SystemSpec::CyclicShift {
                length: num("L", take("L").or_else(|| take("length")))?.ok_or_else(|| required("length"))?,
                alphabet: num("alphabet", take("alphabet"))?.unwrap_or(2),
                base: num("base", take("base"))?.unwrap_or_else(default_base),
            },
            "n-cycle" => SystemSpec::NCycle {
                n: num("n", take("n"))?.ok_or_else(|| required("n"))?,
            },
            "circle-grid" => {
                let q = num("q", take("q"))?.ok_or_else(|| required("q"))?;
                let maps = match (take("maps").as_deref(), list("steps", take("steps"))?) {
                    (Some("doubling-tripling"), None) => CircleMaps::DoublingTripling,
                    (None | Some("rotations"), Some(steps)) => CircleMaps::Rotations { steps },
                    (Some(other), _) if other != "rotations" => {
                        return Err(Error::config("system.maps", format!("unknown circle maps `{other}`")))
                    }
                    _ => return Err(required("steps")),
                };
                SystemSpec::CircleGrid { q, maps }
            }
            "switching" => SystemSpec::Switching {
                g: list("g", take("g"))?.ok_or_else(|| required("g"))?,
                h: list("h", take("h"))?.ok_or_else(|| required("h"))?,
                schedule: take("schedule").unwrap_or_else(default_schedule),
            },
            "uniform-limit" => SystemSpec::UniformLimit {
                q: num("q", take("q"))?.ok_or_else(|| required("q"))?,
                step: num("step", take("step"))?.unwrap_or(1),
            },
            other => return Err(Error::config("system.family", format!("unknown family `{other}`"))),
        };
        if let Some(k) = params.keys().next() {
            return Err(Error::config(format!("system.{k}"), "unknown parameter"));
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::bowen_distance;

    #[test]
    fn shift_coding_roundtrip() {
        let c = ShiftCoding {
            length: 8,
            alphabet: 2,
            base: 2.0,
        };
        let y = c.word(&[1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(c.label(y), "10000000");
        assert_eq!(c.label(c.rotate(y)), "00000001");
        assert_eq!(c.first_difference(0, y), Some(0));
        assert_eq!(c.first_difference(y, y), None);
        assert_eq!(c.prefix_class(0, 3).len(), 32);
    }

    #[test]
    fn cyclic_shift_bowen_distance_fixture() {
        let sys = builtin_system(&"cyclic-shift:L=8,alphabet=2".parse().unwrap()).unwrap();
        let c = sys.coding.unwrap();
        let y = c.word(&[1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(bowen_distance(&sys.space, &sys.maps, 3, 0, y).unwrap(), 1.0);
        // Second and third orbit points differ only at positions 7 and 6.
        let z = c.word(&[0, 1, 0, 0, 0, 0, 0, 0]);
        let d = bowen_distance(&sys.space, &sys.maps, 1, 0, z).unwrap();
        assert_eq!(d, std::f64::consts::E.powi(-1));
    }

    #[test]
    fn doubling_tripling_tables() {
        let sys = builtin_system(&"circle-grid:q=216,maps=doubling-tripling".parse().unwrap()).unwrap();
        let f1 = sys.maps.map(1).unwrap();
        let f2 = sys.maps.map(2).unwrap();
        let f3 = sys.maps.map(3).unwrap();
        for k in 0..216 {
            assert_eq!(f1[k], (2 * k) % 216);
            assert_eq!(f2[k], (3 * k) % 216);
            assert_eq!(f3[k], f1[k]);
        }
        let err = builtin_system(&"circle-grid:q=100,maps=doubling-tripling".parse().unwrap()).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "system.q"));
    }

    #[test]
    fn uniform_limit_settles() {
        let sys = builtin_system(&SystemSpec::UniformLimit { q: 12, step: 1 }).unwrap();
        assert_eq!(sys.maps.map(1).unwrap()[0], 2);
        for j in 2..10 {
            assert_eq!(sys.maps.map(j).unwrap()[0], 1);
        }
        assert_eq!(sys.limit_map.unwrap()[11], 0);
    }

    #[test]
    fn descriptors_parse_and_reject() {
        assert_eq!(
            "single-point:phi=0.3".parse::<SystemSpec>().unwrap(),
            SystemSpec::SinglePoint { phi: 0.3 }
        );
        assert!(matches!(
            "bogus".parse::<SystemSpec>().unwrap_err(),
            Error::Config { ref field, .. } if field == "system.family"
        ));
        assert!(matches!(
            "n-cycle:n=3,x=1".parse::<SystemSpec>().unwrap_err(),
            Error::Config { ref field, .. } if field == "system.x"
        ));
        let json = r#"{"family":"cyclic-shift","length":8}"#;
        let spec: SystemSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec, "cyclic-shift:L=8".parse().unwrap());
        for s in ["two-point:collapse=true", "n-cycle:n=3", "circle-grid:q=12,steps=1;-2", "switching:g=1;0;2,h=2;2;0"] {
            let spec: SystemSpec = s.parse().unwrap();
            assert_eq!(spec.to_string().parse::<SystemSpec>().unwrap(), spec);
            builtin_system(&spec).unwrap();
        }
    }
}
