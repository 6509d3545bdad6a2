//! Experiment orchestration: configuration, seed derivation, parallel
//! trial execution and aggregation for the eight named experiments.
//!
//! Determinism contract: every trial is a pure function of
//! (master_seed, trial_index) via [`derive_seed`], records come back
//! sorted by trial index, and aggregation is order-insensitive, so a
//! report is byte-identical under any worker count.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use crate::ensembles::{gnp_q, sample_correlated_pair, sample_gnp, sample_interpolation};
use crate::error::{invalid, Error, Result};
use crate::estimator::{
    correlation_from_sums, default_hop_parameter, field_sums, path_count_field, SumTriple,
};
use crate::fpp::{evolve_weights, sample_exp_weights};
use crate::graph::{Graph, SINK, SOURCE};
use crate::oracle::{brute_enumerate_paths, certification_grid, exact_expected_path_count};
use crate::overlap_lab::{
    ogp_verdict, overlap_spectrum, Band, SpectrumMode, DEFAULT_BAND, HISTOGRAM_BINS,
};
use crate::path_engine::{
    build_ensemble_unweighted, build_ensemble_weighted_thresholded, count_paths_of_length,
    edge_key,
    path_length_weighted, shortest_path_unweighted, shortest_path_weighted, BudgetMode, OptValue,
    DEFAULT_WORK_BUDGET,
};
use crate::report::{
    DisorderSummary, DisorderTrial, EstimatorSummary, EstimatorTrial, ExperimentReport,
    FppLimitSummary, FppLimitTrial, FppSummary, FppTrial, GnpSummary, GnpTrial, Histogram,
    MomentsSummary, MomentsTrial, NamedTable, OracleSummary, OracleTrial, Payload, ReportFormat,
    StabilitySummary, StabilityTrial, Summary, TrialRecord,
};
use crate::rng::derive_seed;
use crate::transport::{fpp_normalizer, gnp_normalizer, wasserstein_cost};

/// Retry cap for conditioned sampling before a trial is flagged.
pub const MAX_CONDITION_ATTEMPTS: u64 = 10_000;

/// Disorder success threshold reported in summaries.
pub const HIGH_COST_THRESHOLD: f64 = 0.9;

pub const WORKERS_ENV_VAR: &str = "OGPLAB_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    OgpGnp,
    OgpFpp,
    Estimator,
    Disorder,
    Stability,
    Moments,
    FppLimit,
    OracleCheck,
}

impl Experiment {
    pub fn all() -> [Experiment; 8] {
        [
            Experiment::OgpGnp,
            Experiment::OgpFpp,
            Experiment::Estimator,
            Experiment::Disorder,
            Experiment::Stability,
            Experiment::Moments,
            Experiment::FppLimit,
            Experiment::OracleCheck,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::OgpGnp => "ogp-gnp",
            Experiment::OgpFpp => "ogp-fpp",
            Experiment::Estimator => "estimator",
            Experiment::Disorder => "disorder",
            Experiment::Stability => "stability",
            Experiment::Moments => "moments",
            Experiment::FppLimit => "fpp-limit",
            Experiment::OracleCheck => "oracle-check",
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::all()
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| invalid(format!("unknown experiment {s:?}")))
    }
}

/// Full experiment configuration. Every run is a pure function of this
/// struct; `output` and `format` only steer where the bytes land.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    /// edge density constant: q = c ln(n) / n unless `q` overrides
    pub c: f64,
    pub q: Option<f64>,
    pub eps: f64,
    pub rho: f64,
    /// diffusion time for weight-model disorder
    pub time: f64,
    /// interpolation step count T
    pub steps: usize,
    pub m: Option<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub work_budget: u64,
    pub band: Band,
    /// sparsification cut for weight-model searches; None derives
    /// (1+eps) ln(n) / n, the weight budget itself
    pub threshold: Option<f64>,
    pub condition_no_st: bool,
    /// weight model switch for experiments with both flavors
    pub fpp: bool,
    pub output: Option<PathBuf>,
    pub format: ReportFormat,
}

impl ExperimentConfig {
    /// Calibrated defaults per experiment; every value can be
    /// overridden by flags or config file.
    pub fn new(experiment: Experiment) -> Self {
        let mut cfg = ExperimentConfig {
            experiment,
            n: 10_000,
            c: 2.0,
            q: None,
            // (1+eps)*OPT rounds up to OPT+1 for every OPT <= 10
            eps: 0.1,
            rho: 0.9,
            time: 1.0,
            steps: 10,
            m: None,
            trials: 100,
            master_seed: 1,
            work_budget: DEFAULT_WORK_BUDGET,
            band: DEFAULT_BAND,
            threshold: None,
            condition_no_st: false,
            fpp: false,
            output: None,
            format: ReportFormat::Csv,
        };
        match experiment {
            Experiment::OgpGnp => {
                cfg.rho = 0.0;
                cfg.condition_no_st = true;
            }
            Experiment::OgpFpp => {
                cfg.n = 2000;
                cfg.eps = 0.05;
                cfg.trials = 50;
                cfg.fpp = true;
            }
            Experiment::Estimator => {
                cfg.trials = 50;
            }
            Experiment::Disorder => {
                cfg.trials = 50;
            }
            Experiment::Stability => {}
            Experiment::Moments => {
                cfg.n = 100;
                cfg.q = Some(0.05);
                cfg.m = Some(3);
                cfg.trials = 10_000;
            }
            Experiment::FppLimit => {
                cfg.n = 2000;
                cfg.eps = 0.3;
                cfg.trials = 200;
                cfg.fpp = true;
            }
            Experiment::OracleCheck => {
                cfg.n = 8;
                cfg.q = Some(0.5);
                cfg.trials = 100;
            }
        }
        cfg
    }

    pub fn effective_q(&self) -> f64 {
        self.q.unwrap_or_else(|| gnp_q(self.n, self.c))
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(invalid("trials must be >= 1"));
        }
        if self.n < 3 {
            return Err(invalid("n must be >= 3"));
        }
        let q = self.effective_q();
        if !(0.0..=1.0).contains(&q) {
            return Err(invalid(format!("edge probability {q} outside [0,1]")));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(invalid(format!("rho {} outside [0,1]", self.rho)));
        }
        if !(self.time >= 0.0) {
            return Err(invalid("diffusion time must be >= 0"));
        }
        let needs_eps = matches!(
            self.experiment,
            Experiment::OgpGnp | Experiment::OgpFpp | Experiment::Disorder | Experiment::FppLimit
        );
        if needs_eps && !(self.eps > 0.0) {
            return Err(invalid("eps must be > 0 for this experiment"));
        }
        if self.experiment == Experiment::Stability && self.steps < 1 {
            return Err(invalid("stability needs at least one interpolation step"));
        }
        if self.experiment == Experiment::OracleCheck && self.n > 8 {
            return Err(invalid("oracle-check instances are capped at n = 8"));
        }
        if let Some(m) = self.m {
            if m < 1 {
                return Err(invalid("m must be >= 1"));
            }
        }
        if let Some(t) = self.threshold {
            if !(t >= 0.0) {
                return Err(invalid(format!("threshold {t} must be >= 0")));
            }
        }
        Ok(())
    }

    /// Apply one `key = value` override. Keys mirror the CLI flags.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| invalid(format!("config key {key}: bad value {value:?} ({what})"));
        match key {
            "n" => self.n = value.parse().map_err(|_| bad("integer"))?,
            "c" => self.c = value.parse().map_err(|_| bad("real"))?,
            "q" => self.q = Some(value.parse().map_err(|_| bad("real"))?),
            "eps" => self.eps = value.parse().map_err(|_| bad("real"))?,
            "rho" => self.rho = value.parse().map_err(|_| bad("real"))?,
            "time" => self.time = value.parse().map_err(|_| bad("real"))?,
            "steps" => self.steps = value.parse().map_err(|_| bad("integer"))?,
            "m" => self.m = Some(value.parse().map_err(|_| bad("integer"))?),
            "trials" => self.trials = value.parse().map_err(|_| bad("integer"))?,
            "seed" => self.master_seed = value.parse().map_err(|_| bad("integer"))?,
            "work-budget" => self.work_budget = value.parse().map_err(|_| bad("integer"))?,
            "band" => {
                let (lo, hi) = value
                    .split_once(',')
                    .ok_or_else(|| bad("expected LO,HI"))?;
                self.band = Band::new(
                    lo.trim().parse().map_err(|_| bad("real"))?,
                    hi.trim().parse().map_err(|_| bad("real"))?,
                )?;
            }
            "threshold" => self.threshold = Some(value.parse().map_err(|_| bad("real"))?),
            "condition-no-st" => {
                self.condition_no_st = value.parse().map_err(|_| bad("true|false"))?
            }
            "fpp" => self.fpp = value.parse().map_err(|_| bad("true|false"))?,
            "output" => self.output = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            other => return Err(invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Apply a config file: one `key = value` per line, `#` comments.
    /// File entries override whatever the flags set.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                what: format!("expected key=value, got {line:?}"),
            })?;
            self.apply_kv(key.trim(), value.trim())?;
        }
        Ok(())
    }
}

/// Worker count from the environment, when set. An unparseable value
/// is a configuration error, not a silent default.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV_VAR) {
        Ok(v) => {
            let w: usize = v
                .parse()
                .map_err(|_| invalid(format!("{WORKERS_ENV_VAR}={v:?} is not a worker count")))?;
            if w == 0 {
                return Err(invalid(format!("{WORKERS_ENV_VAR} must be >= 1")));
            }
            Ok(Some(w))
        }
        Err(_) => Ok(None),
    }
}

struct TrialOut {
    payload: Payload,
    hists: Vec<(&'static str, Vec<u64>)>,
}

impl TrialOut {
    fn plain(payload: Payload) -> Self {
        TrialOut { payload, hists: Vec::new() }
    }
}

/// Run trials on the current rayon pool, keeping per-trial histograms
/// alongside the records and merging them in trial order. Budget
/// exhaustion inside a trial flags that record; any other error aborts
/// the batch.
fn run_trials(
    trials: usize,
    master_seed: u64,
    run: impl Fn(usize, u64) -> Result<TrialOut> + Sync,
) -> Result<(Vec<TrialRecord>, Vec<Histogram>)> {
    let results: Vec<(TrialRecord, Vec<(&'static str, Vec<u64>)>)> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<(TrialRecord, Vec<(&'static str, Vec<u64>)>)> {
            let seed = derive_seed(master_seed, i as u64);
            let start = Instant::now();
            match run(i, seed) {
                Ok(out) => Ok((
                    TrialRecord {
                        trial_index: i,
                        derived_seed: seed,
                        budget_exceeded: false,
                        payload: Some(out.payload),
                        wall: start.elapsed(),
                    },
                    out.hists,
                )),
                Err(Error::BudgetExceeded { .. }) | Err(Error::TooManyPairs { .. }) => Ok((
                    TrialRecord {
                        trial_index: i,
                        derived_seed: seed,
                        budget_exceeded: true,
                        payload: None,
                        wall: start.elapsed(),
                    },
                    Vec::new(),
                )),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(trials);
    let mut merged: Vec<Histogram> = Vec::new();
    for (rec, hists) in results {
        records.push(rec);
        for (label, bins) in hists {
            match merged.iter_mut().find(|h| h.label == label) {
                Some(h) => {
                    for (acc, b) in h.bins.iter_mut().zip(&bins) {
                        *acc += b;
                    }
                }
                None => merged.push(Histogram { label: label.to_string(), bins }),
            }
        }
    }
    Ok((records, merged))
}

/// Execute one experiment on a dedicated pool of `workers` threads.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentReport> {
    cfg.validate()?;
    if workers == 0 {
        return Err(invalid("worker count must be >= 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("worker pool: {e}")))?;
    pool.install(|| dispatch(cfg))
}

fn dispatch(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.experiment {
        Experiment::OgpGnp => exp_ogp_gnp(cfg),
        Experiment::OgpFpp => exp_ogp_fpp(cfg),
        Experiment::Estimator => exp_estimator(cfg),
        Experiment::Disorder => exp_disorder(cfg),
        Experiment::Stability => exp_stability(cfg),
        Experiment::Moments => exp_moments(cfg),
        Experiment::FppLimit => exp_fpp_limit(cfg),
        Experiment::OracleCheck => exp_oracle_check(cfg),
    }
}

fn included<'a>(records: &'a [TrialRecord]) -> impl Iterator<Item = &'a Payload> {
    records.iter().filter_map(|r| r.payload.as_ref())
}

fn rate(hits: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| hits as f64 / den as f64)
}

fn mean_of(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn median_of(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    })
}

fn opt_hops(v: OptValue) -> u64 {
    match v {
        OptValue::Hops(h) => h as u64,
        OptValue::Weight(_) => unreachable!("hop ensemble carries a hop optimum"),
    }
}

fn report(
    cfg: &ExperimentConfig,
    records: Vec<TrialRecord>,
    summary: Summary,
    histograms: Vec<Histogram>,
    tables: Vec<NamedTable>,
) -> ExperimentReport {
    ExperimentReport { experiment: cfg.experiment, records, summary, histograms, tables }
}

/// Sample a correlated pair, honoring s-t edge conditioning on both
/// endpoints via attempt-chained seeds.
fn conditioned_pair(
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(crate::ensembles::CorrelatedGraphPair, u64)> {
    let q = cfg.effective_q();
    for attempt in 0..MAX_CONDITION_ATTEMPTS {
        let pair = sample_correlated_pair(cfg.n, q, cfg.rho, derive_seed(seed, attempt))?;
        if cfg.condition_no_st
            && (pair.first.has_edge(SOURCE, SINK) || pair.second.has_edge(SOURCE, SINK))
        {
            continue;
        }
        return Ok((pair, attempt));
    }
    Err(Error::BudgetExceeded {
        spent: MAX_CONDITION_ATTEMPTS,
        context: "s-t edge conditioning",
    })
}

fn connected(g: &Graph) -> bool {
    shortest_path_unweighted(g).is_some()
}

fn exp_ogp_gnp(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (records, hists) = run_trials(cfg.trials, cfg.master_seed, |_i, seed| {
        let (pair, retries) = conditioned_pair(cfg, seed)?;
        if !connected(&pair.first) || !connected(&pair.second) {
            // a disconnected endpoint has no s-t paths at all: the
            // verdict is vacuous by definition
            return Ok(TrialOut {
                payload: Payload::Gnp(GnpTrial {
                    size_first: 0,
                    size_second: 0,
                    opt_first: 0,
                    opt_second: 0,
                    gap_holds: true,
                    vacuous: true,
                    low_pair: false,
                    min_overlap: None,
                    max_midband: None,
                    self_full_pairs: 0,
                    self_pair_count: 0,
                    cross_full_pairs: 0,
                    cross_pair_count: 0,
                    retries,
                }),
                hists: vec![
                    ("self", vec![0; HISTOGRAM_BINS]),
                    ("cross", vec![0; HISTOGRAM_BINS]),
                ],
            });
        }
        let mode = BudgetMode::OptRelative { eps: cfg.eps };
        let e1 = build_ensemble_unweighted(&pair.first, mode, cfg.work_budget)?;
        let e2 = build_ensemble_unweighted(&pair.second, mode, cfg.work_budget)?;
        let self_spec = overlap_spectrum(&e1, &e1, SpectrumMode::SelfPairs)?;
        let cross_spec = overlap_spectrum(&e1, &e2, SpectrumMode::Cross)?;
        let verdict = ogp_verdict(&self_spec, cfg.band, false)?;
        Ok(TrialOut {
            payload: Payload::Gnp(GnpTrial {
                size_first: e1.len() as u64,
                size_second: e2.len() as u64,
                opt_first: opt_hops(e1.opt_value),
                opt_second: opt_hops(e2.opt_value),
                gap_holds: verdict.gap_holds,
                vacuous: verdict.vacuous,
                low_pair: self_spec.min_value.is_some_and(|v| v < cfg.band.lo),
                min_overlap: self_spec.min_value,
                max_midband: verdict.max_midband_overlap,
                self_full_pairs: self_spec.full_pairs,
                self_pair_count: self_spec.pair_count,
                cross_full_pairs: cross_spec.full_pairs,
                cross_pair_count: cross_spec.pair_count,
                retries,
            }),
            hists: vec![("self", self_spec.histogram), ("cross", cross_spec.histogram)],
        })
    })?;

    let mut gap = 0u64;
    let mut den = 0u64;
    let mut low = 0u64;
    let mut low_den = 0u64;
    let mut cross_full = 0u64;
    let mut max_midband: Option<f64> = None;
    let mut sizes = Vec::new();
    for p in included(&records) {
        let Payload::Gnp(t) = p else { unreachable!() };
        den += 1;
        gap += t.gap_holds as u64;
        if t.size_first >= 2 {
            low_den += 1;
            low += t.low_pair as u64;
        }
        cross_full += (t.cross_full_pairs > 0) as u64;
        if let Some(v) = t.max_midband {
            max_midband = Some(max_midband.map_or(v, |m: f64| m.max(v)));
        }
        sizes.push(t.size_first as f64);
    }
    let summary = Summary::Gnp(GnpSummary {
        trials: cfg.trials as u64,
        excluded: cfg.trials as u64 - den,
        gap_rate: rate(gap, den),
        gap_den: den,
        low_pair_rate: rate(low, low_den),
        low_pair_den: low_den,
        cross_full_rate: rate(cross_full, den),
        cross_den: den,
        max_midband,
        mean_size_first: mean_of(&sizes),
    });
    Ok(report(cfg, records, summary, hists, Vec::new()))
}

fn exp_ogp_fpp(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (records, hists) = run_trials(cfg.trials, cfg.master_seed, |_i, seed| {
        let w = sample_exp_weights(cfg.n, seed)?;
        let e =
            build_ensemble_weighted_thresholded(&w, cfg.eps, cfg.threshold, None, cfg.work_budget)?;
        let spec = overlap_spectrum(&e, &e, SpectrumMode::SelfPairs)?;
        let verdict = ogp_verdict(&spec, cfg.band, false)?;
        let opt_len = match e.opt_value {
            OptValue::Weight(x) => x,
            OptValue::Hops(_) => unreachable!("weighted ensemble carries a weight optimum"),
        };
        Ok(TrialOut {
            payload: Payload::Fpp(FppTrial {
                size: e.len() as u64,
                opt_len,
                gap_holds: verdict.gap_holds,
                strict_gap: spec.max_below_full.map_or(true, |v| v < cfg.band.lo),
                vacuous: verdict.vacuous,
                min_overlap: spec.min_value,
                max_midband: verdict.max_midband_overlap,
                full_pairs: spec.full_pairs,
                pair_count: spec.pair_count,
            }),
            hists: vec![("self", spec.histogram)],
        })
    })?;

    let mut gap = 0u64;
    let mut strict = 0u64;
    let mut den = 0u64;
    let mut max_midband: Option<f64> = None;
    let mut sizes = Vec::new();
    for p in included(&records) {
        let Payload::Fpp(t) = p else { unreachable!() };
        den += 1;
        gap += t.gap_holds as u64;
        strict += t.strict_gap as u64;
        if let Some(v) = t.max_midband {
            max_midband = Some(max_midband.map_or(v, |m: f64| m.max(v)));
        }
        sizes.push(t.size as f64);
    }
    let summary = Summary::Fpp(FppSummary {
        trials: cfg.trials as u64,
        excluded: cfg.trials as u64 - den,
        gap_rate: rate(gap, den),
        strict_gap_rate: rate(strict, den),
        den,
        max_midband,
        mean_size: mean_of(&sizes),
    });
    Ok(report(cfg, records, summary, hists, Vec::new()))
}

fn exp_estimator(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let q = cfg.effective_q();
    let m = match cfg.m {
        Some(v) => v,
        None => default_hop_parameter(cfg.n, q)?,
    };
    let (records, hists) = run_trials(cfg.trials, cfg.master_seed, |_i, seed| {
        let g = sample_gnp(cfg.n, q, seed)?;
        let f = path_count_field(&g, m, cfg.work_budget)?;
        let s = field_sums(&f, &f.indicator());
        Ok(TrialOut::plain(Payload::Estimator(EstimatorTrial {
            sum_fp: s.all.fp,
            sum_ff: s.all.ff,
            sum_pp: s.all.pp,
            inc_fp: s.incident.fp,
            inc_ff: s.incident.ff,
            inc_pp: s.incident.pp,
            non_fp: s.nonincident.fp,
            non_ff: s.nonincident.ff,
            non_pp: s.nonincident.pp,
            support: f.support_size() as u64,
            path_count: f.total() as u64 / m as u64,
        })))
    })?;

    let triple = |pick: fn(&EstimatorTrial) -> SumTriple| -> Vec<SumTriple> {
        included(&records)
            .map(|p| {
                let Payload::Estimator(t) = p else { unreachable!() };
                pick(t)
            })
            .collect()
    };
    let all = triple(|t| SumTriple { fp: t.sum_fp, ff: t.sum_ff, pp: t.sum_pp });
    let den = all.len() as u64;
    let joint = correlation_from_sums(&all)
        .ok_or(Error::DegenerateDenominator { trials: cfg.trials })?;
    let inc = correlation_from_sums(&triple(|t| SumTriple {
        fp: t.inc_fp,
        ff: t.inc_ff,
        pp: t.inc_pp,
    }));
    let non = correlation_from_sums(&triple(|t| SumTriple {
        fp: t.non_fp,
        ff: t.non_ff,
        pp: t.non_pp,
    }));
    let summary = Summary::Estimator(EstimatorSummary {
        trials: cfg.trials as u64,
        excluded: cfg.trials as u64 - den,
        m: m as u64,
        correlation: joint.correlation,
        std_error: joint.std_error,
        incident_corr: inc.map(|e| e.correlation),
        incident_se: inc.map(|e| e.std_error),
        nonincident_corr: non.map(|e| e.correlation),
        nonincident_se: non.map(|e| e.std_error),
    });
    Ok(report(cfg, records, summary, hists, Vec::new()))
}

fn exp_disorder(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.fpp {
        return exp_disorder_fpp(cfg);
    }
    let normalizer = gnp_normalizer(cfg.n, cfg.effective_q())?;
    let (records, hists) = run_trials(cfg.trials, cfg.master_seed, |_i, seed| {
        let (pair, _retries) = conditioned_pair(cfg, seed)?;
        if !connected(&pair.first) || !connected(&pair.second) {
            return Ok(TrialOut::plain(Payload::Disorder(DisorderTrial {
                eligible: false,
                cost: None,
                ground_units: 0,
                scale: 0,
                size_first: 0,
                size_second: 0,
            })));
        }
        let mode = BudgetMode::OptRelative { eps: cfg.eps };
        let e1 = build_ensemble_unweighted(&pair.first, mode, cfg.work_budget)?;
        let e2 = build_ensemble_unweighted(&pair.second, mode, cfg.work_budget)?;
        let plan = wasserstein_cost(&e1, &e2, normalizer)?;
        Ok(TrialOut::plain(Payload::Disorder(DisorderTrial {
            eligible: true,
            cost: Some(plan.cost),
            ground_units: plan.ground_units,
            scale: plan.scale,
            size_first: e1.len() as u64,
            size_second: e2.len() as u64,
        })))
    })?;
    disorder_summary(cfg, records, hists, normalizer)
}

/// Weight-model disorder: base weights against their diffusion by time
/// t, coupled per slot.
fn exp_disorder_fpp(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let normalizer = fpp_normalizer(cfg.n);
    let (records, hists) = run_trials(cfg.trials, cfg.master_seed, |_i, seed| {
        let base = sample_exp_weights(cfg.n, seed)?;
        let evolved = evolve_weights(&base, cfg.time, seed)?;
        let e1 = build_ensemble_weighted_thresholded(
            &base,
            cfg.eps,
            cfg.threshold,
            None,
            cfg.work_budget,
        )?;
        let e2 = build_ensemble_weighted_thresholded(
            &evolved,
            cfg.eps,
            cfg.threshold,
            None,
            cfg.work_budget,
        )?;
        if e1.is_empty() || e2.is_empty() {
            return Ok(TrialOut::plain(Payload::Disorder(DisorderTrial {
                eligible: false,
                cost: None,
                ground_units: 0,
                scale: 0,
                size_first: e1.len() as u64,
                size_second: e2.len() as u64,
            })));
        }
        let plan = wasserstein_cost(&e1, &e2, normalizer)?;
        Ok(TrialOut::plain(Payload::Disorder(DisorderTrial {
            eligible: true,
            cost: Some(plan.cost),
            ground_units: plan.ground_units,
            scale: plan.scale,
            size_first: e1.len() as u64,
            size_second: e2.len() as u64,
        })))
    })?;
    disorder_summary(cfg, records, hists, normalizer)
}

fn disorder_summary(
    cfg: &ExperimentConfig,
    records: Vec<TrialRecord>,
    hists: Vec<Histogram>,
    normalizer: f64,
) -> Result<ExperimentReport> {
    let mut den = 0u64;
    let mut eligible = 0u64;
    let mut high = 0u64;
    let mut costs = Vec::new();
    for p in included(&records) {
        let Payload::Disorder(t) = p else { unreachable!() };
        den += 1;
        if let Some(c) = t.cost {
            eligible += 1;
            high += (c >= HIGH_COST_THRESHOLD) as u64;
            costs.push(c);
        }
    }
    let summary = Summary::Disorder(DisorderSummary {
        trials: cfg.trials as u64,
        excluded: cfg.trials as u64 - den,
        eligible,
        high_cost_rate: rate(high, eligible),
        high_threshold: HIGH_COST_THRESHOLD,
        mean_cost: mean_of(&costs),
        median_cost: median_of(costs),
        normalizer,
    });
    Ok(report(cfg, records, summary, hists, Vec::new()))
}

fn exp_stability(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let q = cfg.effective_q();
    let (records, hists) = run_trials(cfg.trials, cfg.master_seed, |_i, seed| {
        let seq = sample_interpolation(cfg.n, q, cfg.steps, seed)?;
        let probe = crate::overlap_lab::stability_probe(
            shortest_path_unweighted,
            &seq,
            cfg.band.lo,
        );
        let defined: Vec<f64> = probe.steps.iter().filter_map(|s| s.from_start).collect();
        Ok(TrialOut::plain(Payload::Stability(StabilityTrial {
            jump_t: probe.jump.map(|j| j.t as u64),
            witness: probe.jump.map(|j| j.witness),
            failed_steps: probe.failed_steps as u64,
            end_overlap: probe.steps.last().and_then(|s| s.from_start),
            min_from_start: defined.iter().copied().reduce(f64::min),
        })))
    })?;

    let mut den = 0u64;
    let mut jumps = 0u64;
    let mut jump_ts = Vec::new();
    let mut failed_trials = 0u64;
    for p in included(&records) {
        let Payload::Stability(t) = p else { unreachable!() };
        den += 1;
        if let Some(jt) = t.jump_t {
            jumps += 1;
            jump_ts.push(jt as f64);
        }
        failed_trials += (t.failed_steps > 0) as u64;
    }
    let summary = Summary::Stability(StabilitySummary {
        trials: cfg.trials as u64,
        excluded: cfg.trials as u64 - den,
        jump_rate: rate(jumps, den),
        jump_den: den,
        mean_jump_t: mean_of(&jump_ts),
        trials_with_failed_steps: failed_trials,
    });
    Ok(report(cfg, records, summary, hists, Vec::new()))
}

fn exp_moments(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let q = cfg.effective_q();
    let m = cfg.m.unwrap_or(3);
    let exact = exact_expected_path_count(cfg.n, q, m)?;
    let (records, hists) = run_trials(cfg.trials, cfg.master_seed, |_i, seed| {
        let g = sample_gnp(cfg.n, q, seed)?;
        let count = count_paths_of_length(&g, m)?;
        Ok(TrialOut::plain(Payload::Moments(MomentsTrial { path_count: count })))
    })?;

    let counts: Vec<f64> = included(&records)
        .map(|p| {
            let Payload::Moments(t) = p else { unreachable!() };
            t.path_count as f64
        })
        .collect();
    let den = counts.len() as u64;
    let mean = mean_of(&counts);
    let std_error = (counts.len() >= 2).then(|| {
        let mu = mean.unwrap();
        let var = counts.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>()
            / (counts.len() - 1) as f64;
        (var / counts.len() as f64).sqrt()
    });
    let z_score = match (mean, std_error) {
        (Some(mu), Some(se)) if se > 0.0 => Some((mu - exact) / se),
        _ => None,
    };
    let summary = Summary::Moments(MomentsSummary {
        trials: cfg.trials as u64,
        excluded: cfg.trials as u64 - den,
        m: m as u64,
        mean,
        std_error,
        exact,
        z_score,
    });
    Ok(report(cfg, records, summary, hists, Vec::new()))
}

fn exp_fpp_limit(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let ln_n = (cfg.n as f64).ln();
    let tol = 2.0 * cfg.eps.sqrt();
    let (records, hists) = run_trials(cfg.trials, cfg.master_seed, |_i, seed| {
        let w = sample_exp_weights(cfg.n, seed)?;
        let sp = shortest_path_weighted(&w);
        let opt_len = path_length_weighted(&sp, &w);
        let e =
            build_ensemble_weighted_thresholded(&w, cfg.eps, cfg.threshold, None, cfg.work_budget)?;
        let band_ok = e
            .paths()
            .iter()
            .filter(|p| (p.hopcount() as f64 / ln_n - 1.0).abs() <= tol)
            .count();
        Ok(TrialOut::plain(Payload::FppLimit(FppLimitTrial {
            opt_len,
            centered: cfg.n as f64 * opt_len - ln_n,
            opt_hops: sp.hopcount() as u64,
            members: e.len() as u64,
            band_ok: band_ok as u64,
        })))
    })?;

    let mut centered = Vec::new();
    let mut lens = Vec::new();
    let mut members = 0u64;
    let mut band_ok = 0u64;
    let mut den = 0u64;
    for p in included(&records) {
        let Payload::FppLimit(t) = p else { unreachable!() };
        den += 1;
        centered.push(t.centered);
        lens.push(t.opt_len);
        members += t.members;
        band_ok += t.band_ok;
    }
    let summary = Summary::FppLimit(FppLimitSummary {
        trials: cfg.trials as u64,
        excluded: cfg.trials as u64 - den,
        median_centered: median_of(centered.iter().map(|x| x.abs()).collect()),
        mean_centered: mean_of(&centered),
        hop_band_rate: rate(band_ok, members),
        members_total: members,
        mean_opt_len: mean_of(&lens),
    });
    Ok(report(cfg, records, summary, hists, Vec::new()))
}

fn exp_oracle_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let q = cfg.effective_q();
    let max_hops = cfg.n - 1;
    let (records, hists) = run_trials(cfg.trials, cfg.master_seed, |_i, seed| {
        let g = sample_gnp(cfg.n, q, seed)?;
        let brute = brute_enumerate_paths(&g, max_hops);
        let e = build_ensemble_unweighted(
            &g,
            BudgetMode::FixedBudget { l: max_hops },
            cfg.work_budget,
        )?;
        let engine: Vec<Vec<u32>> = e.paths().iter().map(|p| p.vertices().to_vec()).collect();
        let paths_match = engine == brute;
        let mut fields_match = true;
        for m in 1..=max_hops {
            let f = path_count_field(&g, m, cfg.work_budget)?;
            let mut tally: std::collections::BTreeMap<u64, f64> = Default::default();
            for p in &brute {
                if p.len() == m + 1 {
                    for w in p.windows(2) {
                        *tally.entry(edge_key(w[0], w[1])).or_insert(0.0) += 1.0;
                    }
                }
            }
            let got: std::collections::BTreeMap<u64, f64> =
                f.nonzero().map(|((u, v), x)| (edge_key(u, v), x)).collect();
            if got != tally {
                fields_match = false;
            }
        }
        Ok(TrialOut::plain(Payload::Oracle(OracleTrial {
            n: cfg.n as u64,
            paths_match,
            fields_match,
        })))
    })?;

    let grid = certification_grid();
    let mut grid_csv = String::from("check,pass,detail\n");
    for row in &grid {
        grid_csv.push_str(&format!(
            "{},{},{}\n",
            row.check.replace(',', ";"),
            row.pass,
            row.detail.replace(',', ";")
        ));
    }
    let mut instance_failures = 0u64;
    let mut instances = 0u64;
    for p in included(&records) {
        let Payload::Oracle(t) = p else { unreachable!() };
        instances += 1;
        if !(t.paths_match && t.fields_match) {
            instance_failures += 1;
        }
    }
    let summary = Summary::Oracle(OracleSummary {
        grid_rows: grid.len() as u64,
        grid_failures: grid.iter().filter(|r| !r.pass).count() as u64,
        instances,
        instance_failures,
    });
    let tables = vec![NamedTable { label: "grid".to_string(), csv: grid_csv }];
    Ok(report(cfg, records, summary, hists, tables))
}
