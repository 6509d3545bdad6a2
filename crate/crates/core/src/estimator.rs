//! Path-count edge field (a degree-m polynomial in the adjacency
//! entries, evaluated exactly by enumeration) and its correlation with
//! the edge participation indicator.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::ensembles::sample_gnp;
use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::path_engine::{build_ensemble_unweighted, edge_key, BudgetMode, DEFAULT_WORK_BUDGET};
use crate::rng::derive_seed;

/// Non-negative value per unordered vertex pair. Logically the field
/// is total over all C(n,2) pairs; pairs absent from `entries` hold
/// zero, which keeps the sparse m-path supports cheap at large n.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeField {
    pub n: usize,
    /// hop length parameter the field was built with
    pub m: usize,
    entries: BTreeMap<u64, f64>,
}

impl EdgeField {
    fn new(n: usize, m: usize) -> Self {
        EdgeField { n, m, entries: BTreeMap::new() }
    }

    pub fn get(&self, u: u32, v: u32) -> f64 {
        assert!(u != v && (u as usize) < self.n && (v as usize) < self.n);
        self.entries.get(&edge_key(u, v)).copied().unwrap_or(0.0)
    }

    fn add(&mut self, key: u64, amount: f64) {
        *self.entries.entry(key).or_insert(0.0) += amount;
    }

    /// Nonzero entries in key order as ((u, v), value), u < v.
    pub fn nonzero(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.entries
            .iter()
            .filter(|(_, &v)| v != 0.0)
            .map(|(&k, &v)| (((k >> 32) as u32, k as u32), v))
    }

    pub fn support_size(&self) -> usize {
        self.entries.values().filter(|&&v| v != 0.0).count()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// 0/1 truncation of this field.
    pub fn indicator(&self) -> EdgeField {
        let mut out = EdgeField::new(self.n, self.m);
        for (&k, &v) in &self.entries {
            if v != 0.0 {
                out.entries.insert(k, 1.0);
            }
        }
        out
    }

    /// CSV rows "u,v,value" (1-based endpoints), nonzero support only;
    /// absent pairs are zero by convention.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,v,value\n");
        for ((u, v), val) in self.nonzero() {
            out.push_str(&format!("{},{},{}\n", u + 1, v + 1, val));
        }
        out
    }
}

/// values[e] = number of simple s-t paths with exactly m edges that
/// contain e, for every edge. One enumeration, per-edge tallying.
pub fn path_count_field(g: &Graph, m: usize, work_budget: u64) -> Result<EdgeField> {
    if m < 1 {
        return Err(invalid("hop length m must be >= 1"));
    }
    let mut field = EdgeField::new(g.n(), m);
    let ensemble = build_ensemble_unweighted(g, BudgetMode::FixedBudget { l: m }, work_budget)?;
    for p in ensemble.paths() {
        if p.hopcount() == m {
            for &k in p.edge_keys() {
                field.add(k, 1.0);
            }
        }
    }
    Ok(field)
}

/// values[e] = 1 iff some simple m-edge s-t path contains e; the 0/1
/// truncation of the count field.
pub fn participation_indicator(g: &Graph, m: usize, work_budget: u64) -> Result<EdgeField> {
    Ok(path_count_field(g, m, work_budget)?.indicator())
}

/// Hop parameter from the density: ceil(ln n / ln(nq)) + 1.
pub fn default_hop_parameter(n: usize, q: f64) -> Result<usize> {
    let nq = n as f64 * q;
    if n < 3 || !(nq > 1.0) {
        return Err(invalid(format!(
            "hop parameter needs nq > 1, got n={n} nq={nq}"
        )));
    }
    Ok(((n as f64).ln() / nq.ln()).ceil() as usize + 1)
}

/// Inner-product sums of one trial over a set of edges: fp = sum f*p,
/// ff = sum f^2, pp = sum p^2.
#[derive(Debug, Clone, Copy, Default)]
pub struct SumTriple {
    pub fp: f64,
    pub ff: f64,
    pub pp: f64,
}

/// Full-field sums plus the split by incidence to a terminal vertex.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrialSums {
    pub all: SumTriple,
    pub incident: SumTriple,
    pub nonincident: SumTriple,
}

/// Accumulate the sums for one instance. The indicator's support is
/// contained in the count field's, so iterating the count support is
/// exhaustive.
pub fn field_sums(f: &EdgeField, p: &EdgeField) -> TrialSums {
    let mut t = TrialSums::default();
    for ((u, v), fv) in f.nonzero() {
        let pv = p.get(u, v);
        let cell = SumTriple { fp: fv * pv, ff: fv * fv, pp: pv * pv };
        t.all.fp += cell.fp;
        t.all.ff += cell.ff;
        t.all.pp += cell.pp;
        let part = if u <= 1 || v <= 1 { &mut t.incident } else { &mut t.nonincident };
        part.fp += cell.fp;
        part.ff += cell.ff;
        part.pp += cell.pp;
    }
    t
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CorrelationEstimate {
    pub correlation: f64,
    pub std_error: f64,
}

/// ratio-of-means correlation E[fp] / sqrt(E[ff] E[pp]) with a
/// delete-one jackknife standard error. None when the denominator
/// vanishes.
pub fn correlation_from_sums(sums: &[SumTriple]) -> Option<CorrelationEstimate> {
    let t = sums.len() as f64;
    let tot: SumTriple = sums.iter().fold(SumTriple::default(), |a, s| SumTriple {
        fp: a.fp + s.fp,
        ff: a.ff + s.ff,
        pp: a.pp + s.pp,
    });
    let ratio = |fp: f64, ff: f64, pp: f64| -> Option<f64> {
        let d = ff * pp;
        (d > 0.0).then(|| fp / d.sqrt())
    };
    let correlation = ratio(tot.fp, tot.ff, tot.pp)?;
    if sums.len() < 2 {
        return Some(CorrelationEstimate { correlation, std_error: f64::NAN });
    }
    let loo: Vec<f64> = sums
        .iter()
        .map(|s| ratio(tot.fp - s.fp, tot.ff - s.ff, tot.pp - s.pp).unwrap_or(0.0))
        .collect();
    let mean = loo.iter().sum::<f64>() / t;
    let var = loo.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() * (t - 1.0) / t;
    Some(CorrelationEstimate { correlation, std_error: var.sqrt() })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CorrelationReport {
    pub correlation: f64,
    pub std_error: f64,
    /// split over edges touching a terminal, when non-degenerate
    pub incident: Option<CorrelationEstimate>,
    /// split over edges with both endpoints internal
    pub nonincident: Option<CorrelationEstimate>,
    pub m: usize,
    pub trials: usize,
}

/// Monte Carlo correlation between the path-count field and the
/// participation indicator over fresh G(n,q) instances,
/// E[sum f p] / sqrt(E[sum f^2] E[sum p^2]). `m` defaults to
/// [`default_hop_parameter`]. Errors if every trial produced empty
/// fields.
pub fn estimator_correlation(
    n: usize,
    q: f64,
    m: Option<usize>,
    trials: usize,
    seed: u64,
) -> Result<CorrelationReport> {
    estimator_correlation_budgeted(n, q, m, trials, seed, DEFAULT_WORK_BUDGET)
}

pub fn estimator_correlation_budgeted(
    n: usize,
    q: f64,
    m: Option<usize>,
    trials: usize,
    seed: u64,
    work_budget: u64,
) -> Result<CorrelationReport> {
    if trials < 20 {
        return Err(invalid("correlation estimate needs at least 20 trials"));
    }
    let m = match m {
        Some(v) => v,
        None => default_hop_parameter(n, q)?,
    };
    let sums: Vec<TrialSums> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<TrialSums> {
            let g = sample_gnp(n, q, derive_seed(seed, i as u64))?;
            let f = path_count_field(&g, m, work_budget)?;
            Ok(field_sums(&f, &f.indicator()))
        })
        .collect::<Result<_>>()?;
    let all: Vec<SumTriple> = sums.iter().map(|s| s.all).collect();
    let joint = correlation_from_sums(&all).ok_or(Error::DegenerateDenominator { trials })?;
    let inc: Vec<SumTriple> = sums.iter().map(|s| s.incident).collect();
    let non: Vec<SumTriple> = sums.iter().map(|s| s.nonincident).collect();
    Ok(CorrelationReport {
        correlation: joint.correlation,
        std_error: joint.std_error,
        incident: correlation_from_sums(&inc),
        nonincident: correlation_from_sums(&non),
        m,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_enumerate_paths;
    use crate::path_engine::count_paths_of_length;
    use std::collections::BTreeMap;

    fn k4() -> Graph {
        Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn path_graph_field() {
        let g = Graph::from_edges(3, [(0, 2), (2, 1)]).unwrap();
        let f = path_count_field(&g, 2, 1 << 20).unwrap();
        assert_eq!(f.get(0, 2), 1.0);
        assert_eq!(f.get(2, 1), 1.0);
        assert_eq!(f.get(0, 1), 0.0);
        assert_eq!(f.support_size(), 2);
        assert_eq!(f.indicator(), f, "0/1 field is its own truncation");
    }

    #[test]
    fn k4_three_hop_field() {
        let f = path_count_field(&k4(), 3, 1 << 20).unwrap();
        // the two 3-hop paths are 0-2-3-1 and 0-3-2-1; the internal
        // edge (2,3) lies on both
        assert_eq!(f.get(2, 3), 2.0);
        for &(u, v) in &[(0, 2), (0, 3), (2, 1), (3, 1)] {
            assert_eq!(f.get(u, v), 1.0);
        }
        assert_eq!(f.get(0, 1), 0.0);
        let ind = participation_indicator(&k4(), 3, 1 << 20).unwrap();
        assert_eq!(ind.get(2, 3), 1.0);
        assert_eq!(ind.support_size(), 5);
    }

    #[test]
    fn oversized_m_gives_zero_field() {
        let f = path_count_field(&k4(), 7, 1 << 20).unwrap();
        assert_eq!(f.support_size(), 0);
        assert_eq!(f.total(), 0.0);
    }

    #[test]
    fn column_sum_is_m_times_path_count() {
        for seed in 0..12u64 {
            let g = sample_gnp(10, 0.45, seed).unwrap();
            for m in 1..=4usize {
                let f = path_count_field(&g, m, 1 << 24).unwrap();
                let nm = count_paths_of_length(&g, m).unwrap();
                assert_eq!(f.total(), (m as u64 * nm) as f64, "seed {seed} m {m}");
            }
        }
    }

    #[test]
    fn fields_match_brute_enumeration() {
        for seed in 0..10u64 {
            let g = sample_gnp(8, 0.5, 400 + seed).unwrap();
            for m in 1..=5usize {
                let f = path_count_field(&g, m, 1 << 24).unwrap();
                let mut brute: BTreeMap<u64, f64> = BTreeMap::new();
                for p in brute_enumerate_paths(&g, 7) {
                    if p.len() == m + 1 {
                        for w in p.windows(2) {
                            *brute.entry(edge_key(w[0], w[1])).or_insert(0.0) += 1.0;
                        }
                    }
                }
                let got: BTreeMap<u64, f64> =
                    f.nonzero().map(|((u, v), x)| (edge_key(u, v), x)).collect();
                assert_eq!(got, brute, "seed {seed} m {m}");
                let ind = participation_indicator(&g, m, 1 << 24).unwrap();
                for ((u, v), x) in f.nonzero() {
                    assert_eq!(ind.get(u, v), 1.0, "truncation at ({u},{v}) value {x}");
                }
                assert_eq!(ind.support_size(), f.support_size());
            }
        }
    }

    #[test]
    fn default_hop_parameter_values() {
        // n = 10^4, q = 2 ln n / n: ln n / ln(nq) = 3.1615 -> 4, +1
        let n = 10_000;
        let q = 2.0 * (n as f64).ln() / n as f64;
        assert_eq!(default_hop_parameter(n, q).unwrap(), 5);
        assert!(default_hop_parameter(100, 0.001).is_err(), "nq < 1");
    }

    #[test]
    fn perfectly_aligned_sums_give_unit_correlation() {
        // 0/1 fields: f = p pointwise, so fp = ff = pp each trial
        let sums: Vec<SumTriple> = (1..=25)
            .map(|i| SumTriple { fp: i as f64, ff: i as f64, pp: i as f64 })
            .collect();
        let est = correlation_from_sums(&sums).unwrap();
        assert!((est.correlation - 1.0).abs() < 1e-12);
        assert!(est.std_error < 1e-12);
    }

    #[test]
    fn degenerate_when_no_paths_exist() {
        let err = estimator_correlation(30, 0.0, Some(2), 20, 9).unwrap_err();
        assert!(matches!(err, Error::DegenerateDenominator { trials: 20 }));
    }

    #[test]
    fn small_scale_correlation_is_in_range() {
        let rep = estimator_correlation(60, 0.12, Some(2), 24, 77).unwrap();
        assert!((0.0..=1.0).contains(&rep.correlation), "{}", rep.correlation);
        assert!(rep.std_error.is_finite());
        assert_eq!(rep.m, 2);
        assert_eq!(rep.trials, 24);
        if let Some(inc) = rep.incident {
            assert!((0.0..=1.0).contains(&inc.correlation));
        }
    }

    #[test]
    fn csv_rows_are_one_based_support() {
        let f = path_count_field(&k4(), 3, 1 << 20).unwrap();
        let csv = f.to_csv();
        let mut lines = csv.trim().lines();
        assert_eq!(lines.next(), Some("u,v,value"));
        assert!(csv.contains("3,4,2"), "{csv}");
        assert_eq!(csv.trim().lines().count(), 1 + 5);
    }
}
