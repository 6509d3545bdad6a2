//! Normalized path overlaps, overlap spectra between ensembles, gap
//! verdicts, and the interpolation stability probe.
//!
//! The overlap of two paths is |shared edges| / sqrt(|p1| |p2|), a
//! rational computed from integers; full overlap (value 1) is detected
//! by the integer identity k^2 = |p1| |p2| rather than a float
//! compare. The square-root normalization is used for the weighted
//! model too: the unnormalized |p∩p'|/(|p||p'|) variant that appears
//! once in the source material is treated as a typo, deliberately not
//! silently followed.

use rayon::prelude::*;
use serde::Serialize;

use crate::ensembles::InterpolationSequence;
use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::path_engine::{Path, PathEnsemble};

pub const HISTOGRAM_BINS: usize = 50;

/// Hard guard on the number of pairs a spectrum may touch.
pub const PAIR_GUARD: u128 = 1_000_000_000;

/// Stored-value cap: histograms and extremes stay exact past it, the
/// raw value list just stops growing.
pub const VALUE_CAP: usize = 1 << 20;

/// Normalized overlap |p1 ∩ p2| / sqrt(|p1| |p2|), exactly 1.0 iff the
/// edge sets coincide.
pub fn overlap(p1: &Path, p2: &Path) -> f64 {
    let k = p1.shared_edges(p2);
    let (h1, h2) = (p1.hopcount(), p2.hopcount());
    if k * k == h1 * h2 {
        return 1.0;
    }
    k as f64 / ((h1 * h2) as f64).sqrt()
}

/// Integer-exact full-overlap test: k^2 = |p1| |p2| forces k = |p1| =
/// |p2|, i.e. identical edge sets.
pub fn is_full_overlap(p1: &Path, p2: &Path) -> bool {
    let k = p1.shared_edges(p2);
    k * k == p1.hopcount() * p2.hopcount()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumMode {
    /// ordered pairs E1 x E2 (distinct instances)
    Cross,
    /// unordered distinct pairs within one ensemble
    SelfPairs,
}

/// All pairwise overlaps between two ensembles. `values` holds every
/// overlap when `values_complete`; past [`VALUE_CAP`] only the
/// histogram, extreme statistics and exact full-pair count keep
/// growing.
#[derive(Debug, Clone)]
pub struct OverlapSpectrum {
    pub values: Vec<f64>,
    pub values_complete: bool,
    pub pair_count: u64,
    pub histogram: Vec<u64>,
    /// pairs with exactly coinciding edge sets, integer-detected
    pub full_pairs: u64,
    pub min_value: Option<f64>,
    /// largest value strictly below full overlap
    pub max_below_full: Option<f64>,
    pub mode: SpectrumMode,
    /// labels of the two ensembles / instances this spectrum came from
    pub provenance: (String, String),
}

impl OverlapSpectrum {
    pub fn with_provenance(mut self, left: impl Into<String>, right: impl Into<String>) -> Self {
        self.provenance = (left.into(), right.into());
        self
    }

    /// CSV with header bin_lo,bin_hi,count.
    pub fn to_csv(&self) -> String {
        bins_to_csv(&self.histogram)
    }
}

/// Histogram bins over [0,1] as CSV with header bin_lo,bin_hi,count.
pub fn bins_to_csv(bins: &[u64]) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for (i, c) in bins.iter().enumerate() {
        let lo = i as f64 / bins.len() as f64;
        let hi = (i + 1) as f64 / bins.len() as f64;
        out.push_str(&format!("{lo},{hi},{c}\n"));
    }
    out
}

#[derive(Default)]
struct ShardStats {
    values: Vec<f64>,
    histogram: Vec<u64>,
    full_pairs: u64,
    min_value: Option<f64>,
    max_below_full: Option<f64>,
    count: u64,
}

impl ShardStats {
    fn new() -> Self {
        ShardStats { histogram: vec![0; HISTOGRAM_BINS], ..Default::default() }
    }

    #[inline]
    fn push(&mut self, v: f64, full: bool) {
        self.count += 1;
        let bin = ((v * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        self.histogram[bin] += 1;
        if full {
            self.full_pairs += 1;
        } else {
            self.max_below_full = Some(self.max_below_full.map_or(v, |m: f64| m.max(v)));
        }
        self.min_value = Some(self.min_value.map_or(v, |m: f64| m.min(v)));
        self.values.push(v);
    }
}

/// Every pairwise overlap between two ensembles. Self mode requires
/// the two arguments to be the same path set and excludes identical
/// index pairs; cross mode takes all ordered pairs. Work parallelizes
/// over the first index with shard merge in index order, so the output
/// is identical under any worker count.
pub fn overlap_spectrum(
    e1: &PathEnsemble,
    e2: &PathEnsemble,
    mode: SpectrumMode,
) -> Result<OverlapSpectrum> {
    let (a, b) = (e1.paths(), e2.paths());
    let pair_count: u128 = match mode {
        SpectrumMode::Cross => a.len() as u128 * b.len() as u128,
        SpectrumMode::SelfPairs => {
            if a != b {
                return Err(invalid("self mode needs both arguments to be the same ensemble"));
            }
            a.len() as u128 * (a.len() as u128).saturating_sub(1) / 2
        }
    };
    if pair_count > PAIR_GUARD {
        return Err(Error::TooManyPairs { count: pair_count, guard: PAIR_GUARD });
    }
    let shards: Vec<ShardStats> = (0..a.len())
        .into_par_iter()
        .map(|i| {
            let mut s = ShardStats::new();
            let p1 = &a[i];
            let js = match mode {
                SpectrumMode::Cross => 0..b.len(),
                SpectrumMode::SelfPairs => (i + 1)..b.len(),
            };
            for j in js {
                let p2 = &b[j];
                s.push(overlap(p1, p2), is_full_overlap(p1, p2));
            }
            s
        })
        .collect();

    let mut out = ShardStats::new();
    for s in shards {
        out.count += s.count;
        out.full_pairs += s.full_pairs;
        for (acc, c) in out.histogram.iter_mut().zip(&s.histogram) {
            *acc += c;
        }
        out.min_value = match (out.min_value, s.min_value) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        out.max_below_full = match (out.max_below_full, s.max_below_full) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        };
        if out.values.len() < VALUE_CAP {
            let room = VALUE_CAP - out.values.len();
            out.values.extend(s.values.into_iter().take(room));
        }
    }
    debug_assert_eq!(out.count as u128, pair_count);
    Ok(OverlapSpectrum {
        values_complete: out.values.len() as u128 == pair_count,
        values: out.values,
        pair_count: out.count,
        histogram: out.histogram,
        full_pairs: out.full_pairs,
        min_value: out.min_value,
        max_below_full: out.max_below_full,
        mode,
        provenance: ("left".into(), "right".into()),
    })
}

/// Open interval (lo, hi) inside (0,1), exclusive at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Result<Band> {
        if !(lo >= 0.0 && lo < hi && hi <= 1.0) {
            return Err(invalid(format!("band ({lo},{hi}) must satisfy 0 <= lo < hi <= 1")));
        }
        Ok(Band { lo, hi })
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        v > self.lo && v < self.hi
    }
}

pub const DEFAULT_BAND: Band = Band { lo: 0.5, hi: 1.0 };

/// Gap verdict over a spectrum: does any overlap land strictly inside
/// the forbidden band?
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OgpVerdict {
    pub gap_holds: bool,
    pub forbidden_band: Band,
    pub max_midband_overlap: Option<f64>,
    pub min_overlap: Option<f64>,
    /// no pairs at all: the gap holds trivially and is flagged
    pub vacuous: bool,
}

impl OgpVerdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("verdict serializes")
    }
}

/// gap_holds iff no spectrum value lies in the open band; with
/// require_low_pair, additionally a value strictly below band.lo must
/// exist (the near-disjoint-pair half of the dichotomy). A spectrum
/// with no pairs is vacuous and trivially holds.
pub fn ogp_verdict(s: &OverlapSpectrum, band: Band, require_low_pair: bool) -> Result<OgpVerdict> {
    let (in_band_max, min_value) = if s.values_complete {
        let mut m: Option<f64> = None;
        for &v in &s.values {
            if band.contains(v) {
                m = Some(m.map_or(v, |x: f64| x.max(v)));
            }
        }
        (m, s.min_value)
    } else if band.hi == 1.0 {
        // every non-full value is strictly below 1, so the exact
        // max-below-full statistic decides band membership
        let m = s.max_below_full.filter(|&v| v > band.lo);
        (m, s.min_value)
    } else {
        return Err(invalid(
            "spectrum values were capped; verdicts with band.hi < 1 need the full value list",
        ));
    };
    let vacuous = s.pair_count == 0;
    let mut gap_holds = in_band_max.is_none();
    if require_low_pair && !vacuous {
        gap_holds &= min_value.is_some_and(|v| v < band.lo);
    }
    Ok(OgpVerdict {
        gap_holds,
        forbidden_band: band,
        max_midband_overlap: in_band_max,
        min_overlap: min_value,
        vacuous,
    })
}

/// Per-step probe outputs: o_t = overlap(alg(G_0), alg(G_t)) and
/// c_t = overlap(alg(G_t), alg(G_{t+1})). A step where the algorithm
/// returns nothing is recorded as failed, never fatal.
#[derive(Debug, Clone, Serialize)]
pub struct StepProbe {
    pub t: usize,
    pub from_start: Option<f64>,
    pub to_next: Option<f64>,
    pub failed: bool,
}

/// First step where the overlap with the step-0 output falls from
/// exactly 1 to strictly below the band floor, with the consecutive
/// overlap across that transition as the instability witness.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct JumpReport {
    pub t: usize,
    pub witness: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub steps: Vec<StepProbe>,
    pub jump: Option<JumpReport>,
    pub failed_steps: usize,
}

/// Run a deterministic path algorithm down an interpolation sequence
/// and measure how its output decorrelates from the step-0 output.
pub fn stability_probe(
    alg: impl Fn(&Graph) -> Option<Path>,
    seq: &InterpolationSequence,
    band_floor: f64,
) -> StabilityReport {
    let outputs: Vec<Option<Path>> = seq.steps.iter().map(|g| alg(g)).collect();
    let t_max = seq.t_max();
    let base = outputs[0].as_ref();
    let mut steps = Vec::with_capacity(t_max + 1);
    for t in 0..=t_max {
        let cur = outputs[t].as_ref();
        let from_start = match (base, cur) {
            (Some(p0), Some(pt)) => Some(overlap(p0, pt)),
            _ => None,
        };
        let to_next = if t < t_max {
            match (cur, outputs[t + 1].as_ref()) {
                (Some(pt), Some(pn)) => Some(overlap(pt, pn)),
                _ => None,
            }
        } else {
            None
        };
        steps.push(StepProbe { t, from_start, to_next, failed: cur.is_none() });
    }
    let mut jump = None;
    for t in 1..=t_max {
        let prev_full = match (base, outputs[t - 1].as_ref()) {
            (Some(p0), Some(pp)) => is_full_overlap(p0, pp),
            _ => false,
        };
        let cur_low = steps[t].from_start.map_or(false, |o| o < band_floor);
        if prev_full && cur_low {
            let witness = overlap(
                outputs[t - 1].as_ref().unwrap(),
                outputs[t].as_ref().unwrap(),
            );
            jump = Some(JumpReport { t, witness });
            break;
        }
    }
    StabilityReport {
        failed_steps: outputs.iter().filter(|o| o.is_none()).count(),
        steps,
        jump,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::sample_interpolation;
    use crate::path_engine::{build_ensemble_unweighted, BudgetMode};

    fn p(vs: &[u32]) -> Path {
        Path::new(vs.to_vec()).unwrap()
    }

    #[test]
    fn overlap_examples() {
        let a = p(&[0, 2, 1]);
        assert_eq!(overlap(&a, &a), 1.0);
        let b = p(&[0, 3, 1]);
        assert_eq!(overlap(&a, &b), 0.0);
        let c = p(&[0, 2, 3, 1]);
        let v = overlap(&a, &c);
        assert!((v - 1.0 / 6.0f64.sqrt()).abs() < 1e-12);
        assert!((v - 0.4082).abs() < 1e-4);
        assert_eq!(overlap(&a, &c), overlap(&c, &a));
    }

    #[test]
    fn full_overlap_is_edge_set_equality() {
        // same edge set in both orientations
        let fwd = p(&[0, 2, 1]);
        assert!(is_full_overlap(&fwd, &fwd));
        let sub = p(&[0, 2, 3, 1]);
        assert!(!is_full_overlap(&fwd, &sub));
        assert!(overlap(&fwd, &sub) < 1.0);
    }

    fn singleton_ensemble(vs: &[u32]) -> PathEnsemble {
        let edges: Vec<(u32, u32)> = vs.windows(2).map(|w| (w[0], w[1])).collect();
        let g = Graph::from_edges(
            (*vs.iter().max().unwrap() + 1).max(2) as usize,
            edges,
        )
        .unwrap();
        build_ensemble_unweighted(&g, BudgetMode::OptRelative { eps: 0.0 }, 1 << 20).unwrap()
    }

    #[test]
    fn spectrum_examples() {
        let e = singleton_ensemble(&[0, 2, 1]);
        let selfspec = overlap_spectrum(&e, &e, SpectrumMode::SelfPairs).unwrap();
        assert_eq!(selfspec.pair_count, 0);
        assert!(selfspec.values.is_empty());
        let cross = overlap_spectrum(&e, &e, SpectrumMode::Cross).unwrap();
        assert_eq!(cross.pair_count, 1);
        assert_eq!(cross.values, vec![1.0]);
        assert_eq!(cross.full_pairs, 1);
        let other = singleton_ensemble(&[0, 3, 1]);
        let disjoint = overlap_spectrum(&e, &other, SpectrumMode::Cross).unwrap();
        assert_eq!(disjoint.values, vec![0.0]);
        assert_eq!(disjoint.min_value, Some(0.0));
    }

    #[test]
    fn spectrum_self_mode_rejects_mismatch() {
        let e = singleton_ensemble(&[0, 2, 1]);
        let other = singleton_ensemble(&[0, 3, 1]);
        assert!(overlap_spectrum(&e, &other, SpectrumMode::SelfPairs).is_err());
    }

    #[test]
    fn histogram_conserves_pairs() {
        let g = Graph::from_edges(
            6,
            (0..6u32).flat_map(|u| ((u + 1)..6).map(move |v| (u, v))),
        )
        .unwrap();
        let e = build_ensemble_unweighted(&g, BudgetMode::FixedBudget { l: 3 }, 1 << 20).unwrap();
        let s = overlap_spectrum(&e, &e, SpectrumMode::SelfPairs).unwrap();
        let n = e.len() as u64;
        assert_eq!(s.pair_count, n * (n - 1) / 2);
        assert_eq!(s.histogram.iter().sum::<u64>(), s.pair_count);
        assert!(s.values_complete);
        assert!(s.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn verdict_examples() {
        let band = Band::new(0.5, 1.0).unwrap();
        let mk = |vals: &[f64]| {
            let mut s = ShardStats::new();
            for &v in vals {
                s.push(v, v == 1.0);
            }
            OverlapSpectrum {
                values_complete: true,
                values: s.values,
                pair_count: s.count,
                histogram: s.histogram,
                full_pairs: s.full_pairs,
                min_value: s.min_value,
                max_below_full: s.max_below_full,
                mode: SpectrumMode::SelfPairs,
                provenance: ("a".into(), "b".into()),
            }
        };
        let good = mk(&[1.0, 0.1, 0.05]);
        let v = ogp_verdict(&good, band, false).unwrap();
        assert!(v.gap_holds && !v.vacuous);
        assert_eq!(v.min_overlap, Some(0.05));
        assert_eq!(v.max_midband_overlap, None);
        let vr = ogp_verdict(&good, band, true).unwrap();
        assert!(vr.gap_holds, "low pair exists at 0.05");

        let bad = mk(&[1.0, 0.7, 0.05]);
        let v = ogp_verdict(&bad, band, false).unwrap();
        assert!(!v.gap_holds);
        assert_eq!(v.max_midband_overlap, Some(0.7));

        let all_high = mk(&[1.0, 1.0]);
        let v = ogp_verdict(&all_high, band, true).unwrap();
        assert!(!v.gap_holds, "no low pair: the existence half fails");
        let v = ogp_verdict(&all_high, band, false).unwrap();
        assert!(v.gap_holds);

        let empty = mk(&[]);
        let v = ogp_verdict(&empty, band, true).unwrap();
        assert!(v.vacuous && v.gap_holds);
        assert_eq!(v.min_overlap, None);
    }

    #[test]
    fn verdict_json_has_all_fields() {
        let band = Band::new(0.5, 1.0).unwrap();
        let e = singleton_ensemble(&[0, 2, 1]);
        let s = overlap_spectrum(&e, &e, SpectrumMode::Cross).unwrap();
        let v = ogp_verdict(&s, band, false).unwrap();
        let json = v.to_json();
        for field in ["gap_holds", "forbidden_band", "max_midband_overlap", "min_overlap", "vacuous"] {
            assert!(json.contains(field), "{json}");
        }
    }

    #[test]
    fn spectrum_csv_shape() {
        let e = singleton_ensemble(&[0, 2, 1]);
        let s = overlap_spectrum(&e, &e, SpectrumMode::Cross).unwrap();
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.trim().lines().collect();
        assert_eq!(lines.len(), 1 + HISTOGRAM_BINS);
        assert_eq!(lines[0], "bin_lo,bin_hi,count");
        assert!(lines[50].starts_with("0.98,1,"));
    }

    #[test]
    fn band_validation() {
        assert!(Band::new(0.5, 1.0).is_ok());
        assert!(Band::new(0.0, 0.4).is_ok());
        assert!(Band::new(0.5, 0.5).is_err());
        assert!(Band::new(-0.1, 0.5).is_err());
        assert!(Band::new(0.5, 1.1).is_err());
        assert!(!Band { lo: 0.5, hi: 1.0 }.contains(0.5));
        assert!(!Band { lo: 0.5, hi: 1.0 }.contains(1.0));
        assert!(Band { lo: 0.5, hi: 1.0 }.contains(0.500001));
    }

    #[test]
    fn probe_constant_algorithm_never_jumps() {
        let seq = sample_interpolation(30, 0.3, 5, 3).unwrap();
        let report = stability_probe(
            |_g| Some(p(&[0, 5, 1])),
            &seq,
            0.5,
        );
        assert!(report.jump.is_none());
        assert_eq!(report.failed_steps, 0);
        assert!(report.steps.iter().all(|s| s.from_start == Some(1.0)));
    }

    #[test]
    fn probe_detects_forced_jump() {
        let seq = sample_interpolation(30, 0.3, 5, 3).unwrap();
        // switches to an edge-disjoint output from step 3 on
        let report = stability_probe(
            |g| {
                if g == &seq.steps[3] || g == &seq.steps[4] || g == &seq.steps[5] {
                    Some(p(&[0, 7, 1]))
                } else {
                    Some(p(&[0, 5, 1]))
                }
            },
            &seq,
            0.5,
        );
        let jump = report.jump.expect("jump at the switch");
        assert_eq!(jump.t, 3);
        assert_eq!(jump.witness, 0.0);
        assert_eq!(report.steps[3].from_start, Some(0.0));
    }

    #[test]
    fn probe_records_failed_steps() {
        let seq = sample_interpolation(30, 0.3, 4, 3).unwrap();
        let report = stability_probe(
            |g| {
                if g == &seq.steps[2] {
                    None
                } else {
                    Some(p(&[0, 5, 1]))
                }
            },
            &seq,
            0.5,
        );
        assert_eq!(report.failed_steps, 1);
        assert!(report.steps[2].failed);
        assert!(report.steps[2].from_start.is_none());
        assert!(report.jump.is_none());
    }
}
