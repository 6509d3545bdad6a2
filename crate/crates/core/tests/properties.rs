//! Property tests for the structural invariants: overlap geometry,
//! spectrum accounting, transport marginals, ensemble soundness and
//! text-format roundtrips.

use std::collections::BTreeSet;

use ogplab_core::ensembles::sample_gnp;
use ogplab_core::estimator::{correlation_from_sums, SumTriple};
use ogplab_core::fpp::{sample_exp_weights, WeightVector};
use ogplab_core::oracle::enumerate_st_paths_kn;
use ogplab_core::overlap_lab::{
    ogp_verdict, overlap, overlap_spectrum, Band, SpectrumMode, HISTOGRAM_BINS,
};
use ogplab_core::path_engine::{
    build_ensemble_unweighted, BudgetMode, EnsembleBudget, OptValue, Path, PathEnsemble,
    DEFAULT_WORK_BUDGET,
};
use ogplab_core::transport::{
    ground_cost, sample_uniform_path, sample_weighted_path, wasserstein_cost,
};
use ogplab_core::Graph;
use proptest::prelude::*;

/// All simple s-t paths of K_n with m edges, as Path values.
fn kn_paths(n: usize, m: usize) -> Vec<Path> {
    enumerate_st_paths_kn(n, m)
        .into_iter()
        .map(|v| Path::new(v).unwrap())
        .collect()
}

/// Strategy: one simple s-t path in K_8 with 1..=5 edges.
fn arb_path() -> impl Strategy<Value = Path> {
    (1usize..=5).prop_flat_map(|m| {
        let all = kn_paths(8, m);
        let len = all.len();
        (Just(all), 0..len).prop_map(|(all, i)| all[i].clone())
    })
}

fn edge_set(p: &Path) -> BTreeSet<u64> {
    p.edge_keys().iter().copied().collect()
}

/// Strategy: a nonempty ensemble drawn from the m-edge paths of K_7.
fn arb_ensemble() -> impl Strategy<Value = PathEnsemble> {
    (2usize..=4).prop_flat_map(|m| {
        let all = kn_paths(7, m);
        let len = all.len();
        prop::collection::vec(0..len, 1..=12).prop_map(move |idx| {
            let picked: Vec<Path> = idx.iter().map(|&i| all[i].clone()).collect();
            PathEnsemble::from_paths(picked, EnsembleBudget::Hops { l: m }, OptValue::Hops(m))
        })
    })
}

proptest! {
    #[test]
    fn overlap_is_symmetric_and_bounded(p1 in arb_path(), p2 in arb_path()) {
        let o12 = overlap(&p1, &p2);
        let o21 = overlap(&p2, &p1);
        prop_assert_eq!(o12, o21);
        prop_assert!((0.0..=1.0).contains(&o12));
    }

    #[test]
    fn overlap_full_iff_equal_edge_sets(p1 in arb_path(), p2 in arb_path()) {
        let o = overlap(&p1, &p2);
        if edge_set(&p1) == edge_set(&p2) {
            prop_assert_eq!(o, 1.0);
        } else {
            prop_assert!(o < 1.0);
        }
    }

    #[test]
    fn overlap_zero_iff_disjoint_edge_sets(p1 in arb_path(), p2 in arb_path()) {
        let shared = edge_set(&p1).intersection(&edge_set(&p2)).count();
        let o = overlap(&p1, &p2);
        prop_assert_eq!(o == 0.0, shared == 0);
    }

    #[test]
    fn ground_cost_is_the_symmetric_difference_metric(
        p1 in arb_path(),
        p2 in arb_path(),
        p3 in arb_path(),
    ) {
        let (e1, e2) = (edge_set(&p1), edge_set(&p2));
        let symdiff = e1.symmetric_difference(&e2).count() as u64;
        prop_assert_eq!(ground_cost(&p1, &p2), symdiff);
        prop_assert_eq!(ground_cost(&p1, &p2), ground_cost(&p2, &p1));
        prop_assert_eq!(ground_cost(&p1, &p1), 0);
        // triangle inequality of the symmetric-difference metric
        prop_assert!(
            ground_cost(&p1, &p3) <= ground_cost(&p1, &p2) + ground_cost(&p2, &p3)
        );
    }

    #[test]
    fn self_spectrum_accounting(e in arb_ensemble()) {
        let s = overlap_spectrum(&e, &e, SpectrumMode::SelfPairs).unwrap();
        let l = e.len() as u64;
        prop_assert_eq!(s.pair_count, l * (l - 1) / 2);
        prop_assert!(s.values_complete);
        prop_assert_eq!(s.values.len() as u64, s.pair_count);
        prop_assert_eq!(s.histogram.len(), HISTOGRAM_BINS);
        prop_assert_eq!(s.histogram.iter().sum::<u64>(), s.pair_count);
        // dedup guarantees distinct edge sets, so no self pair is full
        prop_assert_eq!(s.full_pairs, 0);
        if let Some(mv) = s.min_value {
            prop_assert!(s.values.iter().all(|&v| v >= mv));
        } else {
            prop_assert_eq!(s.pair_count, 0);
        }
    }

    #[test]
    fn cross_spectrum_accounting(a in arb_ensemble(), b in arb_ensemble()) {
        let s = overlap_spectrum(&a, &b, SpectrumMode::Cross).unwrap();
        prop_assert_eq!(s.pair_count, (a.len() * b.len()) as u64);
        prop_assert_eq!(s.histogram.iter().sum::<u64>(), s.pair_count);
        let full = s
            .values
            .iter()
            .filter(|&&v| v == 1.0)
            .count() as u64;
        prop_assert_eq!(s.full_pairs, full);
    }

    #[test]
    fn verdict_agrees_with_direct_scan(
        e in arb_ensemble(),
        lo in 0.05f64..0.9,
        width in 0.05f64..0.5,
    ) {
        let hi = (lo + width).min(1.0);
        let band = Band::new(lo, hi).unwrap();
        let s = overlap_spectrum(&e, &e, SpectrumMode::SelfPairs).unwrap();
        let v = ogp_verdict(&s, band, false).unwrap();
        let any_inside = s.values.iter().any(|&x| band.contains(x));
        prop_assert_eq!(v.gap_holds, !any_inside);
        prop_assert_eq!(v.vacuous, s.pair_count == 0);
        if let Some(mid) = v.max_midband_overlap {
            prop_assert!(band.contains(mid));
        }
    }

    #[test]
    fn transport_plan_has_exact_marginals(a in arb_ensemble(), b in arb_ensemble()) {
        let plan = wasserstein_cost(&a, &b, 1.0).unwrap();
        let (r, c) = (plan.rows as u64, plan.cols as u64);
        prop_assert_eq!(plan.scale % r, 0);
        prop_assert_eq!(plan.scale % c, 0);
        let mut row = vec![0u64; plan.rows];
        let mut col = vec![0u64; plan.cols];
        for &(i, j, u) in plan.unit_flows() {
            prop_assert!(u > 0);
            row[i as usize] += u;
            col[j as usize] += u;
        }
        prop_assert!(row.iter().all(|&x| x == plan.scale / r));
        prop_assert!(col.iter().all(|&x| x == plan.scale / c));
        let mass: f64 = plan.masses().map(|(_, _, m)| m).sum();
        prop_assert!((mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn transport_cost_symmetric_and_self_zero(a in arb_ensemble(), b in arb_ensemble()) {
        let ab = wasserstein_cost(&a, &b, 1.0).unwrap();
        let ba = wasserstein_cost(&b, &a, 1.0).unwrap();
        // ground costs are symmetric, so the integer optimum agrees up
        // to the lcm scale, which is shared
        prop_assert_eq!(ab.scale, ba.scale);
        prop_assert_eq!(ab.ground_units, ba.ground_units);
        let aa = wasserstein_cost(&a, &a, 1.0).unwrap();
        prop_assert_eq!(aa.ground_units, 0);
        prop_assert_eq!(aa.cost, 0.0);
    }

    #[test]
    fn transport_cost_dominated_by_product_coupling(a in arb_ensemble(), b in arb_ensemble()) {
        let plan = wasserstein_cost(&a, &b, 1.0).unwrap();
        let mut min_g = u64::MAX;
        let mut total: u128 = 0;
        for p in a.paths() {
            for q in b.paths() {
                let g = ground_cost(p, q);
                min_g = min_g.min(g);
                total += g as u128;
            }
        }
        let pairs = (a.len() * b.len()) as f64;
        let mean = total as f64 / pairs;
        prop_assert!(plan.cost + 1e-9 >= min_g as f64);
        prop_assert!(plan.cost <= mean + 1e-9);
    }

    #[test]
    fn samplers_stay_in_support(e in arb_ensemble(), seed in any::<u64>()) {
        let u = sample_uniform_path(&e, seed).unwrap();
        prop_assert!(e.paths().iter().any(|p| p == &u));
        let w = sample_weighted_path(&e, |p| 1.0 + p.hopcount() as f64, seed).unwrap();
        prop_assert!(e.paths().iter().any(|p| p == &w));
        let z = sample_weighted_path(&e, |_| 0.0, seed);
        prop_assert!(z.is_err());
    }

    #[test]
    fn enumerated_ensembles_are_sound(seed in any::<u64>(), np in 0usize..60) {
        let n = 5 + np % 4;
        let q = 0.25 + 0.1 * (np / 20) as f64;
        let g = sample_gnp(n, q, seed).unwrap();
        let l = 2 + np % 3;
        let e = build_ensemble_unweighted(&g, BudgetMode::FixedBudget { l }, DEFAULT_WORK_BUDGET)
            .unwrap();
        for p in e.paths() {
            let vs = p.vertices();
            prop_assert_eq!(vs[0], ogplab_core::SOURCE);
            prop_assert_eq!(*vs.last().unwrap(), ogplab_core::SINK);
            prop_assert!(p.hopcount() <= l);
            let distinct: BTreeSet<u32> = vs.iter().copied().collect();
            prop_assert_eq!(distinct.len(), vs.len());
            for w in vs.windows(2) {
                prop_assert!(g.has_edge(w[0], w[1]));
            }
        }
        // lexicographically sorted and deduplicated
        for w in e.paths().windows(2) {
            prop_assert!(w[0].vertices() < w[1].vertices());
        }
    }

    #[test]
    fn correlation_invariant_under_field_scaling(
        base in prop::collection::vec((0.1f64..5.0, 0.1f64..5.0, 0.1f64..5.0), 3..12),
        a in 0.5f64..20.0,
        b in 0.5f64..20.0,
    ) {
        let sums: Vec<SumTriple> = base
            .iter()
            .map(|&(fp, ff, pp)| SumTriple { fp, ff: ff + fp, pp: pp + fp, })
            .collect();
        let scaled: Vec<SumTriple> = sums
            .iter()
            .map(|s| SumTriple { fp: a * b * s.fp, ff: a * a * s.ff, pp: b * b * s.pp })
            .collect();
        let c0 = correlation_from_sums(&sums).unwrap();
        let c1 = correlation_from_sums(&scaled).unwrap();
        prop_assert!((c0.correlation - c1.correlation).abs() < 1e-9);
        prop_assert!((c0.std_error - c1.std_error).abs() < 1e-9);
    }

    #[test]
    fn edge_list_roundtrip(seed in any::<u64>(), n in 3usize..40) {
        let g = sample_gnp(n, 0.3, seed).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let h = Graph::read_edge_list(&buf[..]).unwrap();
        prop_assert_eq!(g.n(), h.n());
        prop_assert_eq!(g.edges(), h.edges());
    }

    #[test]
    fn weight_list_roundtrip(seed in any::<u64>(), n in 3usize..25) {
        let w = sample_exp_weights(n, seed).unwrap();
        let mut buf = Vec::new();
        w.write_weight_list(&mut buf).unwrap();
        let r = WeightVector::read_weight_list(&buf[..]).unwrap();
        prop_assert_eq!(w.n(), r.n());
        prop_assert_eq!(w.slots(), r.slots());
    }

    #[test]
    fn ensemble_dump_roundtrip(e in arb_ensemble()) {
        let mut buf = Vec::new();
        e.write_dump(7, &mut buf).unwrap();
        let r = PathEnsemble::read_dump(&buf[..]).unwrap();
        prop_assert_eq!(e.len(), r.len());
        for (p, q) in e.paths().iter().zip(r.paths()) {
            prop_assert_eq!(p.vertices(), q.vertices());
        }
    }
}
