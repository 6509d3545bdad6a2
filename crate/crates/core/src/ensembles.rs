//! Random graph ensembles: G(n,q), rho-correlated pairs, and edge
//! interpolation sequences, all driven by counter-based randomness so
//! that coupled objects read identical underlying variables.
//!
//! Slot layout: the Bernoulli variable of the base graph at edge slot
//! e comes from `Stream::Base`; the independent terminal graph from
//! `Stream::Fresh`; the coupling coin / interpolation uniform from
//! `Stream::Couple`. Consequences used by tests: the base graph of any
//! coupled object equals `sample_gnp` at the same seed, and the second
//! graph of a rho = 0 pair equals the final interpolation step.

use crate::error::{invalid, Result};
use crate::graph::{slot_count, slot_index, Graph, SINK, SOURCE};
use crate::rng::{slot_unit, Stream};

/// Default edge-density constant: q = C ln(n) / n.
pub const DEFAULT_DENSITY_C: f64 = 2.0;

/// Edge probability q = C ln(n) / n, clamped into [0,1].
pub fn gnp_q(n: usize, c: f64) -> f64 {
    (c * (n as f64).ln() / n as f64).clamp(0.0, 1.0)
}

/// A pair of G(n,q) graphs with per-edge correlation rho: the second
/// graph keeps each slot of the first with probability rho and
/// replaces it by a fresh Bernoulli(q) otherwise.
#[derive(Debug, Clone)]
pub struct CorrelatedGraphPair {
    pub first: Graph,
    pub second: Graph,
    pub rho: f64,
    pub n: usize,
    pub q: f64,
}

/// Edge-interpolation sequence: step t agrees with step 0 on slots
/// whose coupling uniform exceeds t/T and with step T on the rest, so
/// consecutive steps are (1 - 1/T)-correlated and the sequence walks
/// monotonically from G_0 to G_T.
#[derive(Debug, Clone)]
pub struct InterpolationSequence {
    /// T+1 graphs, step 0 first
    pub steps: Vec<Graph>,
    pub n: usize,
    pub q: f64,
}

impl InterpolationSequence {
    /// Number of interpolation steps T (so `steps.len() == T + 1`).
    pub fn t_max(&self) -> usize {
        self.steps.len() - 1
    }
}

/// Conditioning outcome. Rejection is an expected statistical event,
/// not an error: the caller resamples.
#[derive(Debug, Clone)]
pub enum ConditionOutcome {
    Retained(Graph),
    Rejected,
}

fn check_n_q(n: usize, q: f64) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("ensembles need n >= 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid(format!("edge probability q = {q} outside [0,1]")));
    }
    Ok(())
}

/// Sample G(n,q) with source 0 and sink 1.
pub fn sample_gnp(n: usize, q: f64, seed: u64) -> Result<Graph> {
    check_n_q(n, q)?;
    let mut edges = Vec::with_capacity((q * slot_count(n) as f64 * 1.1) as usize + 16);
    let mut slot = 0u64;
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            if slot_unit(seed, Stream::Base, slot) < q {
                edges.push((u, v));
            }
            slot += 1;
        }
    }
    Ok(Graph::from_sorted_edges(n, edges))
}

/// Sample a rho-correlated pair of G(n,q) graphs. rho = 1 duplicates
/// the first graph, rho = 0 gives an independent pair; in between,
/// P[slot in second | slot in first] = rho + (1 - rho) q.
pub fn sample_correlated_pair(n: usize, q: f64, rho: f64, seed: u64) -> Result<CorrelatedGraphPair> {
    check_n_q(n, q)?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(invalid(format!("correlation rho = {rho} outside [0,1]")));
    }
    let cap = (q * slot_count(n) as f64 * 1.1) as usize + 16;
    let mut first = Vec::with_capacity(cap);
    let mut second = Vec::with_capacity(cap);
    let mut slot = 0u64;
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            let in_first = slot_unit(seed, Stream::Base, slot) < q;
            if in_first {
                first.push((u, v));
            }
            let retained = slot_unit(seed, Stream::Couple, slot) < rho;
            let in_second = if retained {
                in_first
            } else {
                slot_unit(seed, Stream::Fresh, slot) < q
            };
            if in_second {
                second.push((u, v));
            }
            slot += 1;
        }
    }
    Ok(CorrelatedGraphPair {
        first: Graph::from_sorted_edges(n, first),
        second: Graph::from_sorted_edges(n, second),
        rho,
        n,
        q,
    })
}

/// Sample an interpolation sequence of T+1 graphs between an
/// independent G_0 and G_T. Step t keeps slot e at its G_0 value when
/// the slot's coupling uniform exceeds t/T. Every generated sequence
/// is checked for coupling monotonicity: the slots where step t
/// differs from step 0 grow with t.
pub fn sample_interpolation(n: usize, q: f64, t_steps: usize, seed: u64) -> Result<InterpolationSequence> {
    check_n_q(n, q)?;
    if t_steps == 0 {
        return Err(invalid("interpolation needs at least one step"));
    }
    let t_count = t_steps + 1;
    let mut step_edges: Vec<Vec<(u32, u32)>> = vec![Vec::new(); t_count];
    let mut slot = 0u64;
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            let e0 = slot_unit(seed, Stream::Base, slot) < q;
            let et = slot_unit(seed, Stream::Fresh, slot) < q;
            if e0 {
                step_edges[0].push((u, v));
            }
            if e0 != et {
                // only mixed slots need the coupling uniform
                let cu = slot_unit(seed, Stream::Couple, slot);
                for t in 1..t_steps {
                    let val = if cu > t as f64 / t_steps as f64 { e0 } else { et };
                    if val {
                        step_edges[t].push((u, v));
                    }
                }
            } else if e0 {
                for t in 1..t_steps {
                    step_edges[t].push((u, v));
                }
            }
            if et {
                step_edges[t_steps].push((u, v));
            }
            slot += 1;
        }
    }
    let steps: Vec<Graph> = step_edges
        .into_iter()
        .map(|edges| Graph::from_sorted_edges(n, edges))
        .collect();
    let seq = InterpolationSequence { steps, n, q };
    assert!(
        coupling_is_monotone(&seq),
        "interpolation coupling lost monotonicity"
    );
    Ok(seq)
}

/// Slots where step t differs from step 0 must be non-decreasing in t.
fn coupling_is_monotone(seq: &InterpolationSequence) -> bool {
    let n = seq.n;
    let diff_slots = |g: &Graph| -> Vec<u64> {
        // symmetric difference of sorted edge lists, as sorted slots
        let (a, b) = (seq.steps[0].edges(), g.edges());
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                }
                (Some(&x), Some(&y)) if x < y => {
                    out.push(slot_index(x.0, x.1, n));
                    i += 1;
                }
                (Some(_), Some(&y)) => {
                    out.push(slot_index(y.0, y.1, n));
                    j += 1;
                }
                (Some(&x), None) => {
                    out.push(slot_index(x.0, x.1, n));
                    i += 1;
                }
                (None, Some(&y)) => {
                    out.push(slot_index(y.0, y.1, n));
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        out
    };
    let mut prev: Vec<u64> = Vec::new();
    for g in &seq.steps[1..] {
        let cur = diff_slots(g);
        // prev must be a subset of cur; both sorted
        let mut j = 0;
        for &s in &prev {
            while j < cur.len() && cur[j] < s {
                j += 1;
            }
            if j >= cur.len() || cur[j] != s {
                return false;
            }
        }
        prev = cur;
    }
    true
}

/// Keep the graph only if the direct source-sink edge is absent.
pub fn condition_no_st_edge(g: Graph) -> ConditionOutcome {
    if g.has_edge(SOURCE, SINK) {
        ConditionOutcome::Rejected
    } else {
        ConditionOutcome::Retained(g)
    }
}
