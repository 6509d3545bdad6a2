//! Sampling from near-optimal path ensembles and exact Wasserstein
//! transport cost between two ensembles.
//!
//! Transport is solved as an integer min-cost flow after scaling both
//! uniform marginals by lcm(|E1|, |E2|): ground costs
//! |p| + |p'| - 2|p∩p'| are integers, so the optimum, the marginal
//! feasibility check and the complementary-slackness certificate are
//! all exact. No entropic approximation anywhere.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::path_engine::{Path, PathEnsemble};
use crate::rng::{SlotRng, Stream};

/// Solver guard: |E1| * |E2| may not exceed this.
pub const SOLVER_PAIR_GUARD: u64 = 10_000_000;

/// Uniform draw from an ensemble, deterministic in (ensemble, seed).
pub fn sample_uniform_path(e: &PathEnsemble, seed: u64) -> Result<Path> {
    if e.is_empty() {
        return Err(invalid("cannot sample from an empty ensemble"));
    }
    let mut rng = SlotRng::new(seed, Stream::Draw, 0);
    let i = rng.random_range(0..e.len());
    Ok(e.paths()[i].clone())
}

/// Draw member i with probability weight_fn(p_i) / sum_j weight_fn(p_j).
pub fn sample_weighted_path(
    e: &PathEnsemble,
    weight_fn: impl Fn(&Path) -> f64,
    seed: u64,
) -> Result<Path> {
    if e.is_empty() {
        return Err(invalid("cannot sample from an empty ensemble"));
    }
    let mut cum = Vec::with_capacity(e.len());
    let mut total = 0.0;
    for (index, p) in e.paths().iter().enumerate() {
        let w = weight_fn(p);
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::ZeroWeight { index });
        }
        total += w;
        cum.push(total);
    }
    let mut rng = SlotRng::new(seed, Stream::Draw, 1);
    let x: f64 = rng.random_range(0.0..total);
    let i = cum.partition_point(|&c| c <= x).min(e.len() - 1);
    Ok(e.paths()[i].clone())
}

/// Integer ground cost ||p - p'||^2 = |p| + |p'| - 2|p∩p'| between 0/1
/// edge vectors.
pub fn ground_cost(p1: &Path, p2: &Path) -> u64 {
    (p1.hopcount() + p2.hopcount() - 2 * p1.shared_edges(p2)) as u64
}

/// Exact optimal coupling of the two uniform ensemble distributions.
/// Unit flows live on the lcm scale, so marginals are integers.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    /// lcm(rows, cols): each row carries scale/rows units, each column
    /// scale/cols units
    pub scale: u64,
    units: Vec<(u32, u32, u64)>,
    /// total ground cost in flow units: sum units * ground
    pub ground_units: u128,
    /// ground_units / scale / normalizer
    pub cost: f64,
    pub normalizer: f64,
}

impl TransportPlan {
    /// Positive masses (i, j, mass) with mass = units / scale, row-major.
    pub fn masses(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        let s = self.scale as f64;
        self.units.iter().map(move |&(i, j, u)| (i, j, u as f64 / s))
    }

    pub fn unit_flows(&self) -> &[(u32, u32, u64)] {
        &self.units
    }

    /// Sparse CSV "i,j,mass" (1-based) with a trailing summary line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,mass\n");
        for (i, j, m) in self.masses() {
            out.push_str(&format!("{},{},{}\n", i + 1, j + 1, m));
        }
        out.push_str(&format!("# cost {} normalizer {}\n", self.cost, self.normalizer));
        out
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Exact minimum-cost coupling between uniform distributions on e1 and
/// e2 under the squared-edge-distance ground cost divided by
/// `normalizer`. Successive shortest paths on the scaled integer flow
/// problem; the returned plan carries a zero-reduced-cost optimality
/// certificate checked before returning.
pub fn wasserstein_cost(
    e1: &PathEnsemble,
    e2: &PathEnsemble,
    normalizer: f64,
) -> Result<TransportPlan> {
    if e1.is_empty() || e2.is_empty() {
        return Err(invalid("transport needs two non-empty ensembles"));
    }
    if !(normalizer > 0.0) {
        return Err(invalid("transport normalizer must be positive"));
    }
    let (r, c) = (e1.len(), e2.len());
    let pairs = r as u64 * c as u64;
    if pairs > SOLVER_PAIR_GUARD {
        return Err(Error::BudgetExceeded { spent: pairs, context: "transport solver" });
    }
    let cost: Vec<Vec<u64>> = e1
        .paths()
        .iter()
        .map(|p| e2.paths().iter().map(|q| ground_cost(p, q)).collect())
        .collect();
    let scale = r as u64 / gcd(r as u64, c as u64) * c as u64;
    let (flow, ground_units) = min_cost_flow(&cost, r, c, scale);

    // exact feasibility: every marginal matches the scaled uniform mass
    let mut row_sum = vec![0u64; r];
    let mut col_sum = vec![0u64; c];
    for &(i, j, u) in &flow {
        row_sum[i as usize] += u;
        col_sum[j as usize] += u;
    }
    assert!(row_sum.iter().all(|&s| s == scale / r as u64));
    assert!(col_sum.iter().all(|&s| s == scale / c as u64));

    // dominance: min ground <= cost * normalizer <= mean ground,
    // compared in integers (both sides scaled by scale * r * c)
    let min_gc = cost.iter().flatten().min().copied().unwrap() as u128;
    let sum_gc: u128 = cost.iter().flatten().map(|&x| x as u128).sum();
    let rc = (r * c) as u128;
    assert!(ground_units * rc >= min_gc * scale as u128 * rc);
    assert!(ground_units * rc <= sum_gc * scale as u128);

    Ok(TransportPlan {
        rows: r,
        cols: c,
        scale,
        units: flow,
        ground_units,
        cost: ground_units as f64 / scale as f64 / normalizer,
        normalizer,
    })
}

/// Default cost normalizer for G(n,q) ensembles: the first-order
/// optimal hopcount ln(n) / ln(nq).
pub fn gnp_normalizer(n: usize, q: f64) -> Result<f64> {
    let nq = n as f64 * q;
    if n < 3 || !(nq > 1.0) {
        return Err(invalid(format!("normalizer needs nq > 1, got n={n} nq={nq}")));
    }
    Ok((n as f64).ln() / nq.ln())
}

/// Default cost normalizer for complete-graph FPP ensembles.
pub fn fpp_normalizer(n: usize) -> f64 {
    (n as f64).ln()
}

/// Successive shortest paths with integer Johnson potentials. Nodes
/// 0..r are sources (supply scale/r), r..r+c sinks (demand scale/c).
/// Every augmentation exhausts a source or a sink, so there are at
/// most r + c rounds. Panics (never silently) if the final flow fails
/// complementary slackness.
fn min_cost_flow(cost: &[Vec<u64>], r: usize, c: usize, scale: u64) -> (Vec<(u32, u32, u64)>, u128) {
    let sup = scale / r as u64;
    let dem = scale / c as u64;
    let mut rem_a = vec![sup; r];
    let mut rem_b = vec![dem; c];
    let mut flow = vec![0u64; r * c];
    let mut pot = vec![0i64; r + c];
    let n_nodes = r + c;
    const UNSEEN: u64 = u64::MAX;

    loop {
        if rem_a.iter().all(|&x| x == 0) {
            break;
        }
        // Dijkstra on reduced costs from all sources with supply left
        let mut dist = vec![UNSEEN; n_nodes];
        let mut parent = vec![usize::MAX; n_nodes];
        let mut done = vec![false; n_nodes];
        let mut heap = BinaryHeap::new();
        for (i, &ra) in rem_a.iter().enumerate() {
            if ra > 0 {
                dist[i] = 0;
                heap.push(Reverse((0u64, i)));
            }
        }
        while let Some(Reverse((d, v))) = heap.pop() {
            if done[v] {
                continue;
            }
            done[v] = true;
            if v < r {
                for j in 0..c {
                    let w = cost[v][j] as i64 + pot[v] - pot[r + j];
                    debug_assert!(w >= 0);
                    let nd = d + w as u64;
                    if nd < dist[r + j] {
                        dist[r + j] = nd;
                        parent[r + j] = v;
                        heap.push(Reverse((nd, r + j)));
                    }
                }
            } else {
                let j = v - r;
                for i in 0..r {
                    if flow[i * c + j] > 0 {
                        let w = -(cost[i][j] as i64) + pot[v] - pot[i];
                        debug_assert!(w >= 0);
                        let nd = d + w as u64;
                        if nd < dist[i] {
                            dist[i] = nd;
                            parent[i] = v;
                            heap.push(Reverse((nd, i)));
                        }
                    }
                }
            }
        }
        // nearest sink with demand, ties to the smallest index
        let best = (0..c)
            .filter(|&j| rem_b[j] > 0)
            .min_by_key(|&j| dist[r + j])
            .expect("supply remains, so demand must remain");
        let best_d = dist[r + best];
        assert!(best_d != UNSEEN, "complete bipartite graph is connected");
        for v in 0..n_nodes {
            pot[v] += dist[v].min(best_d) as i64;
        }
        // bottleneck along the augmenting path
        let mut delta = rem_b[best];
        let mut v = r + best;
        while parent[v] != usize::MAX {
            let u = parent[v];
            if u >= r {
                // backward arc v -> u means flow on (v, u - r)... u is a
                // sink, v a source: residual arc u(sink) -> v(source)
                delta = delta.min(flow[v * c + (u - r)]);
            }
            v = u;
        }
        delta = delta.min(rem_a[v]);
        let start = v;
        // apply
        let mut v = r + best;
        while parent[v] != usize::MAX {
            let u = parent[v];
            if v >= r {
                flow[u * c + (v - r)] += delta;
            } else {
                flow[v * c + (u - r)] -= delta;
            }
            v = u;
        }
        rem_a[start] -= delta;
        rem_b[best] -= delta;
    }

    // complementary slackness on the final flow, exact in integers
    let mut ground: u128 = 0;
    let mut units = Vec::new();
    for i in 0..r {
        for j in 0..c {
            let f = flow[i * c + j];
            let rc = cost[i][j] as i64 + pot[i] - pot[r + j];
            assert!(rc >= 0, "negative reduced cost ({i},{j})");
            if f > 0 {
                assert!(rc == 0, "positive flow off the optimal support ({i},{j})");
                units.push((i as u32, j as u32, f));
                ground += f as u128 * cost[i][j] as u128;
            }
        }
    }
    (units, ground)
}
