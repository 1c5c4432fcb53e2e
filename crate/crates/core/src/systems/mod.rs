//! Map sequences, their compositions, potentials and Birkhoff sums, plus the
//! shipped example families (see [`builtin`]).

pub mod builtin;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};

/// A map table: `table[x]` is the image of point `x`.
pub type MapTable = Arc<[usize]>;

type Generator = dyn Fn(usize) -> Vec<usize> + Send + Sync;

/// A sequence of self-maps `f_1, f_2, ...` of a finite space.
///
/// Maps are produced on demand by a generator indexed by time `j >= 1` and
/// memoized. An optional `(preperiod, period)` descriptor declares
/// `f_j = f_{j + period}` for `j > preperiod`, which bounds the memo.
#[derive(Clone)]
pub struct MapSequence {
    len: usize,
    generator: Arc<Generator>,
    periodic: Option<(usize, usize)>,
    memo: Arc<RwLock<HashMap<usize, MapTable>>>,
}

impl fmt::Debug for MapSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapSequence")
            .field("len", &self.len)
            .field("periodic", &self.periodic)
            .finish_non_exhaustive()
    }
}

impl MapSequence {
    /// Builds a sequence over `len` points. When `periodic` is given, the
    /// generator is spot-checked against it over the first three periods.
    pub fn new<F>(len: usize, periodic: Option<(usize, usize)>, generator: F) -> Result<Self>
    where
        F: Fn(usize) -> Vec<usize> + Send + Sync + 'static,
    {
        if len == 0 {
            return Err(Error::invalid("map sequence over an empty space"));
        }
        if let Some((_, 0)) = periodic {
            return Err(Error::invalid("periodic descriptor with period 0"));
        }
        let seq = MapSequence {
            len,
            generator: Arc::new(generator),
            periodic,
            memo: Arc::new(RwLock::new(HashMap::new())),
        };
        if let Some((pre, period)) = periodic {
            for j in pre + 1..=pre + 3 * period {
                let a = seq.generate(j)?;
                let b = seq.generate(j + period)?;
                if a != b {
                    return Err(Error::invalid(format!(
                        "generator violates its periodic descriptor at j={j} (period {period})"
                    )));
                }
            }
        }
        Ok(seq)
    }

    /// The same map at every time.
    pub fn constant(table: Vec<usize>) -> Result<Self> {
        let len = table.len();
        check_table(len, 1, &table)?;
        MapSequence::new(len, Some((0, 1)), move |_| table.clone())
    }

    /// Identity at every time.
    pub fn identity(len: usize) -> Result<Self> {
        MapSequence::constant((0..len).collect())
    }

    /// Cycles through `tables` after the first `preperiod` entries:
    /// `f_j = tables[j-1]` for `j <= len`, and the tail `tables[preperiod..]`
    /// repeats afterwards.
    pub fn from_tables(tables: Vec<Vec<usize>>, preperiod: usize) -> Result<Self> {
        let first = tables
            .first()
            .ok_or_else(|| Error::invalid("map sequence needs at least one table"))?;
        let len = first.len();
        if preperiod >= tables.len() {
            return Err(Error::invalid("preperiod must leave at least one repeating table"));
        }
        for (j, t) in tables.iter().enumerate() {
            check_table(len, j + 1, t)?;
        }
        let period = tables.len() - preperiod;
        let tables: Vec<MapTable> = tables.into_iter().map(Arc::from).collect();
        MapSequence::new(len, Some((preperiod, period)), move |j| {
            let idx = if j <= preperiod {
                j - 1
            } else {
                preperiod + (j - 1 - preperiod) % period
            };
            tables[idx].to_vec()
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn periodic(&self) -> Option<(usize, usize)> {
        self.periodic
    }

    fn canonical_index(&self, j: usize) -> usize {
        match self.periodic {
            Some((pre, period)) if j > pre => pre + 1 + (j - pre - 1) % period,
            _ => j,
        }
    }

    fn generate(&self, j: usize) -> Result<Vec<usize>> {
        let t = (self.generator)(j);
        check_table(self.len, j, &t)?;
        Ok(t)
    }

    /// The map `f_j`, `j >= 1`.
    pub fn map(&self, j: usize) -> Result<MapTable> {
        if j == 0 {
            return Err(Error::invalid("map index starts at 1"));
        }
        let key = self.canonical_index(j);
        if let Some(t) = self.memo.read().expect("map memo poisoned").get(&key) {
            return Ok(t.clone());
        }
        let table: MapTable = Arc::from(self.generate(key)?);
        let mut memo = self.memo.write().expect("map memo poisoned");
        Ok(memo.entry(key).or_insert(table).clone())
    }

    /// `f_i^j = f_{i+j-1} ∘ ... ∘ f_i`, with `f_i^0` the identity.
    pub fn compose(&self, i: usize, j: usize) -> Result<Vec<usize>> {
        if i == 0 {
            return Err(Error::invalid("composition start index starts at 1"));
        }
        let mut out: Vec<usize> = (0..self.len).collect();
        for step in 0..j {
            let f = self.map(i + step)?;
            for y in out.iter_mut() {
                *y = f[*y];
            }
        }
        Ok(out)
    }

    /// Orbit table `f_1^i(x)` for `0 <= i < horizon`.
    pub fn orbits(&self, horizon: usize) -> Result<Orbits> {
        let mut rows: Vec<Vec<usize>> = Vec::with_capacity(horizon);
        let mut cur: Vec<usize> = (0..self.len).collect();
        for i in 0..horizon {
            if i > 0 {
                let f = self.map(i)?;
                for y in cur.iter_mut() {
                    *y = f[*y];
                }
            }
            rows.push(cur.clone());
        }
        Ok(Orbits { rows })
    }

    /// The orbit segment `x, f_1(x), ..., f_1^{n-1}(x)`.
    pub fn orbit_of(&self, x: usize, n: usize) -> Result<Vec<usize>> {
        if x >= self.len {
            return Err(Error::invalid(format!("point {x} outside space of {} points", self.len)));
        }
        let mut out = Vec::with_capacity(n);
        let mut y = x;
        for i in 0..n {
            if i > 0 {
                y = self.map(i)?[y];
            }
            out.push(y);
        }
        Ok(out)
    }
}

fn check_table(len: usize, j: usize, table: &[usize]) -> Result<()> {
    if table.len() != len {
        return Err(Error::invalid(format!(
            "map f_{j} has {} entries, space has {len} points",
            table.len()
        )));
    }
    if let Some((x, &y)) = table.iter().enumerate().find(|(_, &y)| y >= len) {
        return Err(Error::invalid(format!("map f_{j} sends point {x} to invalid point {y}")));
    }
    Ok(())
}

/// Precomputed orbit table `rows[i][x] = f_1^i(x)`.
#[derive(Debug, Clone)]
pub struct Orbits {
    rows: Vec<Vec<usize>>,
}

impl Orbits {
    pub fn horizon(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn at(&self, i: usize, x: usize) -> usize {
        self.rows[i][x]
    }
}

/// A real-valued potential on the points of a space.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Potential {
    values: Vec<f64>,
    name: String,
    sup_norm: f64,
}

impl Potential {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("potential over an empty space"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("potential value {v} is not finite")));
        }
        let sup_norm = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(Potential {
            values,
            name: name.into(),
            sup_norm,
        })
    }

    pub fn constant(len: usize, c: f64) -> Result<Self> {
        Potential::new(format!("const({c})"), vec![c; len])
    }

    pub fn zero(len: usize) -> Self {
        Potential::constant(len, 0.0).expect("zero potential is valid")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn at(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    fn derived(&self, name: String, f: impl Fn(f64) -> f64) -> Self {
        Potential::new(name, self.values.iter().map(|&v| f(v)).collect()).expect("finite map of finite potential")
    }

    pub fn shifted(&self, c: f64) -> Self {
        self.derived(format!("{}+{c}", self.name), |v| v + c)
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.derived(format!("{c}*{}", self.name), |v| c * v)
    }

    pub fn abs(&self) -> Self {
        self.derived(format!("|{}|", self.name), f64::abs)
    }

    pub fn add(&self, other: &Potential) -> Result<Self> {
        self.combine(other, format!("{}+{}", self.name, other.name), |a, b| a + b)
    }

    /// `t·self + (1-t)·other`.
    pub fn mix(&self, other: &Potential, t: f64) -> Result<Self> {
        self.combine(other, format!("mix({t})"), |a, b| t * a + (1.0 - t) * b)
    }

    fn combine(&self, other: &Potential, name: String, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::invalid("potentials live on spaces of different size"));
        }
        Potential::new(name, self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    /// `‖self − other‖_∞`.
    pub fn distance(&self, other: &Potential) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// `S_nφ(x) = Σ_{i<n} φ(f_1^i x)`, summed left to right along the orbit.
pub fn birkhoff_sum(potential: &Potential, maps: &MapSequence, n: usize, x: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("Birkhoff sum horizon must be at least 1"));
    }
    if potential.len() != maps.len() {
        return Err(Error::invalid("potential and maps live on spaces of different size"));
    }
    Ok(maps.orbit_of(x, n)?.into_iter().fold(0.0, |acc, y| acc + potential.at(y)))
}

/// All Birkhoff sums `S_nφ(x)` for `1 <= n <= horizon`, computed with the
/// same summation order as [`birkhoff_sum`].
#[derive(Debug, Clone)]
pub struct BirkhoffTable {
    /// `sums[n-1][x] = S_nφ(x)`.
    sums: Vec<Vec<f64>>,
}

impl BirkhoffTable {
    pub fn new(potential: &Potential, orbits: &Orbits) -> Result<Self> {
        let horizon = orbits.horizon();
        if horizon == 0 {
            return Err(Error::invalid("Birkhoff table needs horizon >= 1"));
        }
        let len = potential.len();
        let mut sums = Vec::with_capacity(horizon);
        let mut acc = vec![0.0; len];
        for i in 0..horizon {
            for (x, a) in acc.iter_mut().enumerate() {
                *a += potential.at(orbits.at(i, x));
            }
            sums.push(acc.clone());
        }
        Ok(BirkhoffTable { sums })
    }

    #[inline]
    pub fn sum(&self, n: usize, x: usize) -> f64 {
        self.sums[n - 1][x]
    }

    pub fn horizon(&self) -> usize {
        self.sums.len()
    }
}
