//! First-passage percolation on the complete graph: i.i.d. Exp(1) edge
//! weights, a stationary dynamics on them, and threshold sparsification.
//!
//! The dynamics is the exact transition kernel of the Laguerre
//! semigroup with Exp(1) as its stationary law: given weight x at time
//! 0, draw N ~ Poisson(x / (e^t - 1)) and output (1 - e^{-t}) *
//! Gamma(N+1, 1). This kernel leaves Exp(1) invariant, has
//! Corr(X_0, X_t) = e^{-t}, and satisfies the eigenfunction relation
//! E[L_k(X_t) | X_0 = x] = e^{-kt} L_k(x) for the Laguerre polynomials
//! L_k. Those three properties are the contract; the tests pin all of
//! them, exactly where quadrature applies and within Monte Carlo error
//! elsewhere.

use rand_distr::{Distribution, Gamma, Poisson};

use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};
use crate::graph::{slot_count, Graph};
use crate::rng::{slot_unit, SlotRng, Stream};

/// Edge weights for the complete graph on n vertices, slot-indexed
/// (same row-major upper-triangle layout as edge slots everywhere
/// else). Entries are finite and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    n: usize,
    w: Vec<f64>,
}

impl WeightVector {
    pub fn new(n: usize, w: Vec<f64>) -> Result<WeightVector> {
        if n < 2 {
            return Err(invalid("weight vector needs n >= 2"));
        }
        if w.len() as u64 != slot_count(n) {
            return Err(invalid(format!(
                "weight vector for n = {n} needs {} entries, got {}",
                slot_count(n),
                w.len()
            )));
        }
        if let Some(bad) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(invalid(format!("weight {bad} is not finite non-negative")));
        }
        Ok(WeightVector { n, w })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn slots(&self) -> &[f64] {
        &self.w
    }

    #[inline]
    pub fn get(&self, u: u32, v: u32) -> f64 {
        debug_assert!(u != v);
        let (a, b) = (u.min(v), u.max(v));
        self.w[crate::graph::slot_index(a, b, self.n) as usize]
    }

    /// Serialize as header `n <n>` then one `u v w` line per slot,
    /// 1-based, slot order.
    pub fn write_weight_list(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "n {}", self.n)?;
        let mut slot = 0usize;
        for u in 0..self.n as u32 {
            for v in (u + 1)..self.n as u32 {
                writeln!(out, "{} {} {}", u + 1, v + 1, self.w[slot])?;
                slot += 1;
            }
        }
        Ok(())
    }

    pub fn read_weight_list(r: impl BufRead) -> Result<WeightVector> {
        let mut lines = r.lines().enumerate();
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::Parse { line: 1, what: "empty input".into() })?;
        let first = first?;
        let n: usize = first
            .strip_prefix("n ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Parse { line: 1, what: format!("expected 'n <count>', got '{first}'") })?;
        if n < 2 {
            return Err(Error::Parse { line: 1, what: format!("bad n = {n}") });
        }
        let mut w = vec![f64::NAN; slot_count(n) as usize];
        for (idx, line) in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let bad = || Error::Parse { line: idx + 1, what: format!("bad weight line '{t}'") };
            let mut it = t.split_whitespace();
            let u: u32 = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let v: u32 = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let x: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            if it.next().is_some() || u < 1 || v < 1 || u == v || u as usize > n || v as usize > n {
                return Err(bad());
            }
            let (a, b) = ((u - 1).min(v - 1), (u - 1).max(v - 1));
            w[crate::graph::slot_index(a, b, n) as usize] = x;
        }
        if w.iter().any(|x| x.is_nan()) {
            return Err(Error::Parse { line: 0, what: "missing slots in weight list".into() });
        }
        WeightVector::new(n, w)
    }
}

/// A weight vector together with its time-t evolution under the
/// semigroup. time = 0 means evolved is bitwise equal to base.
#[derive(Debug, Clone)]
pub struct WeightTrajectory {
    pub base: WeightVector,
    pub evolved: WeightVector,
    pub time: f64,
}

impl WeightTrajectory {
    pub fn new(base: WeightVector, evolved: WeightVector, time: f64) -> Result<WeightTrajectory> {
        if !(time >= 0.0) {
            return Err(invalid(format!("trajectory time {time} must be >= 0")));
        }
        if base.n() != evolved.n() {
            return Err(invalid("trajectory endpoints disagree on n"));
        }
        if time == 0.0 && base != evolved {
            return Err(invalid("time-0 trajectory must have evolved == base"));
        }
        Ok(WeightTrajectory { base, evolved, time })
    }
}

#[inline]
fn exp_from_unit(u: f64) -> f64 {
    // u in [0,1): 1-u in (0,1], so the log is finite
    -(1.0 - u).ln()
}

/// i.i.d. Exp(1) weights on every edge slot.
pub fn sample_exp_weights(n: usize, seed: u64) -> Result<WeightVector> {
    if n < 2 {
        return Err(invalid("weight sampling needs n >= 2"));
    }
    let m = slot_count(n);
    let mut w = Vec::with_capacity(m as usize);
    for slot in 0..m {
        w.push(exp_from_unit(slot_unit(seed, Stream::Base, slot)));
    }
    WeightVector::new(n, w)
}

/// One step of the exact kernel for a single entry.
fn evolve_entry(x: f64, t: f64, rng: &mut SlotRng) -> f64 {
    debug_assert!(t > 0.0);
    // lambda = x * e^{-t} / (1 - e^{-t}) = x / (e^t - 1), stable for small t
    let lambda = x / t.exp_m1();
    let n = if lambda > 0.0 {
        let draw: f64 = Poisson::new(lambda).expect("positive finite mean").sample(rng);
        draw
    } else {
        0.0
    };
    let one_minus_s = -(-t).exp_m1();
    let g: f64 = Gamma::new(n + 1.0, 1.0).expect("shape >= 1").sample(rng);
    one_minus_s * g
}

/// Evolve every slot independently for time t. t = 0 returns the input
/// unchanged. The randomness at slot e is a function of (seed, e) only,
/// so trajectories are reproducible slot by slot.
pub fn evolve_weights(w: &WeightVector, t: f64, seed: u64) -> Result<WeightVector> {
    if !(t >= 0.0) {
        return Err(invalid(format!("evolution time {t} must be >= 0")));
    }
    if t == 0.0 {
        return Ok(w.clone());
    }
    let out: Vec<f64> = w
        .slots()
        .iter()
        .enumerate()
        .map(|(slot, &x)| {
            let mut rng = SlotRng::new(seed, Stream::Evolve, slot as u64);
            evolve_entry(x, t, &mut rng)
        })
        .collect();
    WeightVector::new(w.n(), out)
}

/// Classical Laguerre polynomial L_k(x), orthonormal for e^{-x} dx on
/// [0, inf). Three-term recurrence; exact for the small k used here.
pub fn laguerre_poly(k: usize, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => 1.0 - x,
        _ => {
            let (mut prev, mut cur) = (1.0, 1.0 - x);
            for j in 1..k {
                let jf = j as f64;
                let next = ((2.0 * jf + 1.0 - x) * cur - jf * prev) / (jf + 1.0);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// A scalar Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct MomentEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Estimate E[L_k(X_0) L_k(X_t)] over `trials` stationary pairs; the
/// eigenfunction relation makes the target e^{-kt}. k = 0 gives
/// exactly 1 with zero error.
pub fn check_laguerre_correlation(k: usize, t: f64, trials: usize, seed: u64) -> Result<MomentEstimate> {
    if trials < 100 {
        return Err(invalid(format!("need at least 100 trials, got {trials}")));
    }
    if !(t >= 0.0) {
        return Err(invalid(format!("time {t} must be >= 0")));
    }
    let mut sum = 0.0f64;
    let mut sumsq = 0.0f64;
    for i in 0..trials as u64 {
        let x0 = exp_from_unit(slot_unit(seed, Stream::Base, i));
        let xt = if t == 0.0 {
            x0
        } else {
            let mut rng = SlotRng::new(seed, Stream::Evolve, i);
            evolve_entry(x0, t, &mut rng)
        };
        let prod = laguerre_poly(k, x0) * laguerre_poly(k, xt);
        sum += prod;
        sumsq += prod * prod;
    }
    let nf = trials as f64;
    let mean = sum / nf;
    let var = ((sumsq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    Ok(MomentEstimate { estimate: mean, std_error: (var / nf).sqrt() })
}

/// Default sparsification threshold (1 + eps) ln(n) / n: the absolute
/// length budget of the near-optimal path set.
pub fn weight_threshold(n: usize, eps: f64) -> f64 {
    (1.0 + eps) * (n as f64).ln() / n as f64
}

/// Keep exactly the edges of weight <= threshold.
pub fn sparsify(w: &WeightVector, threshold: f64) -> Graph {
    let n = w.n();
    let mut edges = Vec::new();
    let mut slot = 0usize;
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            if w.slots()[slot] <= threshold {
                edges.push((u, v));
            }
            slot += 1;
        }
    }
    Graph::from_sorted_edges(n, edges)
}

/// 5-point Gauss-Laguerre rule: exact for polynomials of degree <= 9
/// against e^{-x} dx, which covers every product L_j L_k with j,k <= 4.
pub const GAUSS_LAGUERRE_5: [(f64, f64); 5] = [
    (0.26356031971814087, 0.5217556105828085),
    (1.4134030591065168, 0.398666811083176),
    (3.596425771040722, 0.07594244968170769),
    (7.085810005858837, 0.0036117586799220545),
    (12.640800844275782, 2.3369972385776248e-05),
];

/// Quadrature value of the orthonormality integral
/// int L_j(x) L_k(x) e^{-x} dx; equals delta_{jk} up to rounding for
/// j,k <= 4.
pub fn laguerre_orthonormality_integral(j: usize, k: usize) -> f64 {
    GAUSS_LAGUERRE_5
        .iter()
        .map(|&(x, w)| w * laguerre_poly(j, x) * laguerre_poly(k, x))
        .sum()
}
