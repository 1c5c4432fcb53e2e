//! Brute-force reference computations, written independently of the crate
//! engines. Everything here enumerates; nothing is clever.

#![allow(dead_code)]

/// A toy system given by raw data: a distance matrix and one map table per
/// time step, cycled.
pub struct Toy {
    pub dist: Vec<Vec<f64>>,
    pub tables: Vec<Vec<usize>>,
    pub phi: Vec<f64>,
}

impl Toy {
    pub fn line(coords: &[f64], tables: Vec<Vec<usize>>, phi: Vec<f64>) -> Self {
        let dist = coords
            .iter()
            .map(|a| coords.iter().map(|b| (a - b).abs()).collect())
            .collect();
        Toy { dist, tables, phi }
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    /// `f_{i+1}` as a table; time steps are zero-based here.
    fn step(&self, i: usize) -> &[usize] {
        &self.tables[i % self.tables.len()]
    }

    pub fn orbit(&self, x: usize, n: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(n);
        let mut y = x;
        for i in 0..n {
            out.push(y);
            y = self.step(i)[y];
        }
        out
    }

    pub fn bowen(&self, n: usize, x: usize, y: usize) -> f64 {
        let (ox, oy) = (self.orbit(x, n), self.orbit(y, n));
        ox.iter().zip(&oy).map(|(&a, &b)| self.dist[a][b]).fold(0.0, f64::max)
    }

    pub fn birkhoff(&self, n: usize, x: usize) -> f64 {
        self.orbit(x, n).iter().map(|&y| self.phi[y]).sum()
    }

    pub fn ball(&self, n: usize, eps: f64, x: usize, closed: bool) -> Vec<usize> {
        (0..self.len())
            .filter(|&y| {
                let d = self.bowen(n, x, y);
                if closed {
                    d <= eps
                } else {
                    d < eps
                }
            })
            .collect()
    }

    /// Open balls centered anywhere, horizons in `[n, n_max]`, with log
    /// weights `S_nφ(x) - s n`.
    pub fn cover_candidates(&self, eps: f64, s: f64, n: usize, n_max: usize) -> Vec<(Vec<usize>, f64)> {
        let mut out = Vec::new();
        for x in 0..self.len() {
            for m in n..=n_max {
                out.push((self.ball(m, eps, x, false), self.birkhoff(m, x) - s * m as f64));
            }
        }
        out
    }

    /// Closed balls centered in `k`, horizons in `[n, n_max]`.
    pub fn packing_candidates(&self, k: &[usize], eps: f64, s: f64, n: usize, n_max: usize) -> Vec<(Vec<usize>, f64)> {
        let mut out = Vec::new();
        for &x in k {
            for m in n..=n_max {
                out.push((self.ball(m, eps, x, true), self.birkhoff(m, x) - s * m as f64));
            }
        }
        out
    }

    /// Largest `(n, eps)`-separated subset of `k` by subset enumeration.
    pub fn max_separated(&self, k: &[usize], n: usize, eps: f64) -> usize {
        assert!(k.len() <= 20);
        let mut best = 0;
        for mask in 0u32..(1 << k.len()) {
            let chosen: Vec<usize> = (0..k.len()).filter(|i| mask >> i & 1 == 1).map(|i| k[i]).collect();
            let ok = chosen
                .iter()
                .enumerate()
                .all(|(i, &a)| chosen[i + 1..].iter().all(|&b| self.bowen(n, a, b) > eps));
            if ok {
                best = best.max(chosen.len());
            }
        }
        best
    }

    /// Smallest `(n, eps)`-spanning subset of `k`: every point of `k` within
    /// closed distance `eps` of a chosen point.
    pub fn min_spanning(&self, k: &[usize], n: usize, eps: f64) -> usize {
        assert!(k.len() <= 20);
        let mut best = usize::MAX;
        for mask in 1u32..(1 << k.len()) {
            let chosen: Vec<usize> = (0..k.len()).filter(|i| mask >> i & 1 == 1).map(|i| k[i]).collect();
            if k.iter().all(|&y| chosen.iter().any(|&c| self.bowen(n, c, y) <= eps)) {
                best = best.min(chosen.len());
            }
        }
        best
    }
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NEG_INFINITY;
    }
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Drops repeated member sets, keeping the best weight for each.
pub fn dedupe(cands: &[(Vec<usize>, f64)], prefer_small: bool) -> Vec<(Vec<usize>, f64)> {
    let mut out: Vec<(Vec<usize>, f64)> = Vec::new();
    for (m, w) in cands {
        match out.iter_mut().find(|(o, _)| o == m) {
            Some((_, ow)) => {
                if (prefer_small && *w < *ow) || (!prefer_small && *w > *ow) {
                    *ow = *w;
                }
            }
            None => out.push((m.clone(), *w)),
        }
    }
    out
}

/// `ln inf Σ w` over subfamilies covering `target`.
pub fn brute_cover(cands: &[(Vec<usize>, f64)], target: &[usize]) -> f64 {
    let cands = dedupe(cands, true);
    assert!(cands.len() <= 22, "too many candidates for enumeration: {}", cands.len());
    let mut best = f64::INFINITY;
    for mask in 1u64..(1 << cands.len()) {
        let chosen: Vec<&(Vec<usize>, f64)> = (0..cands.len()).filter(|i| mask >> i & 1 == 1).map(|i| &cands[i]).collect();
        if target.iter().all(|y| chosen.iter().any(|(m, _)| m.contains(y))) {
            let w: Vec<f64> = chosen.iter().map(|(_, w)| *w).collect();
            best = best.min(log_sum_exp(&w));
        }
    }
    best
}

/// `ln sup Σ w` over pairwise disjoint subfamilies.
pub fn brute_packing(cands: &[(Vec<usize>, f64)]) -> f64 {
    let cands = dedupe(cands, false);
    assert!(cands.len() <= 22, "too many candidates for enumeration: {}", cands.len());
    let mut best = f64::NEG_INFINITY;
    for mask in 1u64..(1 << cands.len()) {
        let chosen: Vec<&(Vec<usize>, f64)> = (0..cands.len()).filter(|i| mask >> i & 1 == 1).map(|i| &cands[i]).collect();
        let disjoint = chosen
            .iter()
            .enumerate()
            .all(|(i, (a, _))| chosen[i + 1..].iter().all(|(b, _)| a.iter().all(|y| !b.contains(y))));
        if disjoint {
            let w: Vec<f64> = chosen.iter().map(|(_, w)| *w).collect();
            best = best.max(log_sum_exp(&w));
        }
    }
    best
}

/// Symbols of a binary word stored least significant position first.
pub fn symbols(word: usize, len: usize) -> Vec<usize> {
    (0..len).map(|i| word >> i & 1).collect()
}

pub fn word(symbols: &[usize]) -> usize {
    symbols.iter().enumerate().map(|(i, &s)| s << i).sum()
}

/// Bowen distance on the binary cyclic shift with `d = base^{-k}`, computed
/// from symbol vectors.
pub fn shift_bowen(len: usize, base: f64, n: usize, x: usize, y: usize) -> f64 {
    let (mut a, mut b) = (symbols(x, len), symbols(y, len));
    let mut d: f64 = 0.0;
    for _ in 0..n {
        if let Some(k) = (0..len).find(|&i| a[i] != b[i]) {
            d = d.max(base.powi(-(k as i32)));
        }
        a.rotate_left(1);
        b.rotate_left(1);
    }
    d
}
