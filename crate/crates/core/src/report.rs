//! Trial records, per-experiment summaries and report file emission.
//!
//! Emitted bytes are a pure function of the experiment configuration:
//! trial payloads carry only seed-derived results (wall time is kept
//! in memory, never serialized), floats print via the shortest
//! round-trip form, and rows are ordered by trial index.

use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::harness::Experiment;
use crate::overlap_lab::bins_to_csv;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for ReportFormat {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "jsonl" => Ok(ReportFormat::Jsonl),
            other => Err(invalid(format!("unknown report format {other:?}"))),
        }
    }
}

/// One trial's outcome. A budget-exceeded trial keeps its row (with an
/// empty payload) so exclusions stay visible in the report.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub derived_seed: u64,
    pub budget_exceeded: bool,
    pub payload: Option<Payload>,
    #[serde(skip)]
    pub wall: Duration,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Payload {
    Gnp(GnpTrial),
    Fpp(FppTrial),
    Estimator(EstimatorTrial),
    Disorder(DisorderTrial),
    Stability(StabilityTrial),
    Moments(MomentsTrial),
    FppLimit(FppLimitTrial),
    Oracle(OracleTrial),
}

#[derive(Debug, Clone, Serialize)]
pub struct GnpTrial {
    pub size_first: u64,
    pub size_second: u64,
    pub opt_first: u64,
    pub opt_second: u64,
    pub gap_holds: bool,
    pub vacuous: bool,
    pub low_pair: bool,
    pub min_overlap: Option<f64>,
    pub max_midband: Option<f64>,
    pub self_full_pairs: u64,
    pub self_pair_count: u64,
    pub cross_full_pairs: u64,
    pub cross_pair_count: u64,
    pub retries: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FppTrial {
    pub size: u64,
    pub opt_len: f64,
    pub gap_holds: bool,
    /// every non-full overlap is strictly below the band floor
    pub strict_gap: bool,
    pub vacuous: bool,
    pub min_overlap: Option<f64>,
    pub max_midband: Option<f64>,
    pub full_pairs: u64,
    pub pair_count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorTrial {
    pub sum_fp: f64,
    pub sum_ff: f64,
    pub sum_pp: f64,
    pub inc_fp: f64,
    pub inc_ff: f64,
    pub inc_pp: f64,
    pub non_fp: f64,
    pub non_ff: f64,
    pub non_pp: f64,
    pub support: u64,
    pub path_count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DisorderTrial {
    /// both ensembles non-empty, so a transport cost exists
    pub eligible: bool,
    pub cost: Option<f64>,
    pub ground_units: u128,
    pub scale: u64,
    pub size_first: u64,
    pub size_second: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityTrial {
    pub jump_t: Option<u64>,
    pub witness: Option<f64>,
    pub failed_steps: u64,
    pub end_overlap: Option<f64>,
    pub min_from_start: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentsTrial {
    pub path_count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FppLimitTrial {
    pub opt_len: f64,
    /// n * opt_len - ln n, the limit law's centering
    pub centered: f64,
    pub opt_hops: u64,
    pub members: u64,
    pub band_ok: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleTrial {
    pub n: u64,
    pub paths_match: bool,
    pub fields_match: bool,
}

fn of(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn ou(x: Option<u64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Fixed payload columns per experiment; identical for every row of a
/// report.
pub fn payload_header(e: Experiment) -> &'static str {
    match e {
        Experiment::OgpGnp => {
            "size_first,size_second,opt_first,opt_second,gap_holds,vacuous,low_pair,\
             min_overlap,max_midband,self_full_pairs,self_pair_count,cross_full_pairs,\
             cross_pair_count,retries"
        }
        Experiment::OgpFpp => {
            "size,opt_len,gap_holds,strict_gap,vacuous,min_overlap,max_midband,\
             full_pairs,pair_count"
        }
        Experiment::Estimator => {
            "sum_fp,sum_ff,sum_pp,inc_fp,inc_ff,inc_pp,non_fp,non_ff,non_pp,support,path_count"
        }
        Experiment::Disorder => "eligible,cost,ground_units,scale,size_first,size_second",
        Experiment::Stability => "jump_t,witness,failed_steps,end_overlap,min_from_start",
        Experiment::Moments => "path_count",
        Experiment::FppLimit => "opt_len,centered,opt_hops,members,band_ok",
        Experiment::OracleCheck => "n,paths_match,fields_match",
    }
}

impl Payload {
    fn csv_cells(&self) -> String {
        match self {
            Payload::Gnp(p) => format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                p.size_first,
                p.size_second,
                p.opt_first,
                p.opt_second,
                p.gap_holds,
                p.vacuous,
                p.low_pair,
                of(p.min_overlap),
                of(p.max_midband),
                p.self_full_pairs,
                p.self_pair_count,
                p.cross_full_pairs,
                p.cross_pair_count,
                p.retries
            ),
            Payload::Fpp(p) => format!(
                "{},{},{},{},{},{},{},{},{}",
                p.size,
                p.opt_len,
                p.gap_holds,
                p.strict_gap,
                p.vacuous,
                of(p.min_overlap),
                of(p.max_midband),
                p.full_pairs,
                p.pair_count
            ),
            Payload::Estimator(p) => format!(
                "{},{},{},{},{},{},{},{},{},{},{}",
                p.sum_fp,
                p.sum_ff,
                p.sum_pp,
                p.inc_fp,
                p.inc_ff,
                p.inc_pp,
                p.non_fp,
                p.non_ff,
                p.non_pp,
                p.support,
                p.path_count
            ),
            Payload::Disorder(p) => format!(
                "{},{},{},{},{},{}",
                p.eligible,
                of(p.cost),
                p.ground_units,
                p.scale,
                p.size_first,
                p.size_second
            ),
            Payload::Stability(p) => format!(
                "{},{},{},{},{}",
                ou(p.jump_t),
                of(p.witness),
                p.failed_steps,
                of(p.end_overlap),
                of(p.min_from_start)
            ),
            Payload::Moments(p) => format!("{}", p.path_count),
            Payload::FppLimit(p) => format!(
                "{},{},{},{},{}",
                p.opt_len, p.centered, p.opt_hops, p.members, p.band_ok
            ),
            Payload::Oracle(p) => format!("{},{},{}", p.n, p.paths_match, p.fields_match),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Summary {
    Gnp(GnpSummary),
    Fpp(FppSummary),
    Estimator(EstimatorSummary),
    Disorder(DisorderSummary),
    Stability(StabilitySummary),
    Moments(MomentsSummary),
    FppLimit(FppLimitSummary),
    Oracle(OracleSummary),
}

#[derive(Debug, Clone, Serialize)]
pub struct GnpSummary {
    pub trials: u64,
    pub excluded: u64,
    pub gap_rate: Option<f64>,
    pub gap_den: u64,
    /// rate of a sub-band pair existing, over trials with >= 2 members
    pub low_pair_rate: Option<f64>,
    pub low_pair_den: u64,
    /// rate of trials whose cross spectrum contains a full overlap
    pub cross_full_rate: Option<f64>,
    pub cross_den: u64,
    /// largest in-band self overlap seen across all trials
    pub max_midband: Option<f64>,
    pub mean_size_first: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FppSummary {
    pub trials: u64,
    pub excluded: u64,
    pub gap_rate: Option<f64>,
    pub strict_gap_rate: Option<f64>,
    pub den: u64,
    /// largest in-band self overlap seen across all trials
    pub max_midband: Option<f64>,
    pub mean_size: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorSummary {
    pub trials: u64,
    pub excluded: u64,
    pub m: u64,
    pub correlation: f64,
    pub std_error: f64,
    pub incident_corr: Option<f64>,
    pub incident_se: Option<f64>,
    pub nonincident_corr: Option<f64>,
    pub nonincident_se: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DisorderSummary {
    pub trials: u64,
    pub excluded: u64,
    pub eligible: u64,
    pub high_cost_rate: Option<f64>,
    pub high_threshold: f64,
    pub mean_cost: Option<f64>,
    pub median_cost: Option<f64>,
    pub normalizer: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilitySummary {
    pub trials: u64,
    pub excluded: u64,
    pub jump_rate: Option<f64>,
    pub jump_den: u64,
    pub mean_jump_t: Option<f64>,
    pub trials_with_failed_steps: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentsSummary {
    pub trials: u64,
    pub excluded: u64,
    pub m: u64,
    pub mean: Option<f64>,
    pub std_error: Option<f64>,
    pub exact: f64,
    pub z_score: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FppLimitSummary {
    pub trials: u64,
    pub excluded: u64,
    pub median_centered: Option<f64>,
    pub mean_centered: Option<f64>,
    /// pooled fraction of ensemble members inside the hop band
    pub hop_band_rate: Option<f64>,
    pub members_total: u64,
    pub mean_opt_len: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub grid_rows: u64,
    pub grid_failures: u64,
    pub instances: u64,
    pub instance_failures: u64,
}

impl Summary {
    fn csv_header(&self) -> &'static str {
        match self {
            Summary::Gnp(_) => {
                "trials,excluded,gap_rate,gap_den,low_pair_rate,low_pair_den,\
                 cross_full_rate,cross_den,max_midband,mean_size_first"
            }
            Summary::Fpp(_) => {
                "trials,excluded,gap_rate,strict_gap_rate,den,max_midband,mean_size"
            }
            Summary::Estimator(_) => {
                "trials,excluded,m,correlation,std_error,incident_corr,incident_se,\
                 nonincident_corr,nonincident_se"
            }
            Summary::Disorder(_) => {
                "trials,excluded,eligible,high_cost_rate,high_threshold,mean_cost,\
                 median_cost,normalizer"
            }
            Summary::Stability(_) => {
                "trials,excluded,jump_rate,jump_den,mean_jump_t,trials_with_failed_steps"
            }
            Summary::Moments(_) => "trials,excluded,m,mean,std_error,exact,z_score",
            Summary::FppLimit(_) => {
                "trials,excluded,median_centered,mean_centered,hop_band_rate,\
                 members_total,mean_opt_len"
            }
            Summary::Oracle(_) => "grid_rows,grid_failures,instances,instance_failures",
        }
    }

    fn csv_cells(&self) -> String {
        match self {
            Summary::Gnp(s) => format!(
                "{},{},{},{},{},{},{},{},{},{}",
                s.trials,
                s.excluded,
                of(s.gap_rate),
                s.gap_den,
                of(s.low_pair_rate),
                s.low_pair_den,
                of(s.cross_full_rate),
                s.cross_den,
                of(s.max_midband),
                of(s.mean_size_first)
            ),
            Summary::Fpp(s) => format!(
                "{},{},{},{},{},{},{}",
                s.trials,
                s.excluded,
                of(s.gap_rate),
                of(s.strict_gap_rate),
                s.den,
                of(s.max_midband),
                of(s.mean_size)
            ),
            Summary::Estimator(s) => format!(
                "{},{},{},{},{},{},{},{},{}",
                s.trials,
                s.excluded,
                s.m,
                s.correlation,
                s.std_error,
                of(s.incident_corr),
                of(s.incident_se),
                of(s.nonincident_corr),
                of(s.nonincident_se)
            ),
            Summary::Disorder(s) => format!(
                "{},{},{},{},{},{},{},{}",
                s.trials,
                s.excluded,
                s.eligible,
                of(s.high_cost_rate),
                s.high_threshold,
                of(s.mean_cost),
                of(s.median_cost),
                s.normalizer
            ),
            Summary::Stability(s) => format!(
                "{},{},{},{},{},{}",
                s.trials,
                s.excluded,
                of(s.jump_rate),
                s.jump_den,
                of(s.mean_jump_t),
                s.trials_with_failed_steps
            ),
            Summary::Moments(s) => format!(
                "{},{},{},{},{},{},{}",
                s.trials,
                s.excluded,
                s.m,
                of(s.mean),
                of(s.std_error),
                s.exact,
                of(s.z_score)
            ),
            Summary::FppLimit(s) => format!(
                "{},{},{},{},{},{},{}",
                s.trials,
                s.excluded,
                of(s.median_centered),
                of(s.mean_centered),
                of(s.hop_band_rate),
                s.members_total,
                of(s.mean_opt_len)
            ),
            Summary::Oracle(s) => format!(
                "{},{},{},{}",
                s.grid_rows, s.grid_failures, s.instances, s.instance_failures
            ),
        }
    }
}

/// Merged histogram companion, one per spectrum kind.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub label: String,
    pub bins: Vec<u64>,
}

/// Extra CSV companion (the oracle certification table).
#[derive(Debug, Clone)]
pub struct NamedTable {
    pub label: String,
    pub csv: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
    pub histograms: Vec<Histogram>,
    pub tables: Vec<NamedTable>,
}

impl ExperimentReport {
    pub fn excluded(&self) -> u64 {
        self.records.iter().filter(|r| r.budget_exceeded).count() as u64
    }
}

fn trials_csv(report: &ExperimentReport) -> String {
    let mut out = format!("trial,seed,budget_exceeded,{}\n", payload_header(report.experiment));
    let empty_cols = payload_header(report.experiment).split(',').count();
    for r in &report.records {
        let cells = match &r.payload {
            Some(p) => p.csv_cells(),
            None => vec![""; empty_cols].join(","),
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.trial_index, r.derived_seed, r.budget_exceeded, cells
        ));
    }
    out
}

fn write_file(path: &FsPath, bytes: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(bytes.as_bytes())?;
    Ok(())
}

fn suffixed(base: &FsPath, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

/// Write the per-trial file, the summary record, and any histogram or
/// table companions next to `base`. Histograms stay CSV in both
/// formats (they are plot inputs). Returns the written paths.
pub fn emit_report(
    report: &ExperimentReport,
    format: ReportFormat,
    base: &FsPath,
) -> Result<Vec<PathBuf>> {
    if report.records.is_empty() {
        return Err(invalid("refusing to emit a report with no trial records"));
    }
    let mut written = Vec::new();
    match format {
        ReportFormat::Csv => {
            let trials = suffixed(base, ".trials.csv");
            write_file(&trials, &trials_csv(report))?;
            written.push(trials);
            let summary = suffixed(base, ".summary.csv");
            write_file(
                &summary,
                &format!("{}\n{}\n", report.summary.csv_header(), report.summary.csv_cells()),
            )?;
            written.push(summary);
        }
        ReportFormat::Jsonl => {
            let trials = suffixed(base, ".trials.jsonl");
            let mut body = String::new();
            for r in &report.records {
                body.push_str(&serde_json::to_string(r).expect("record serializes"));
                body.push('\n');
            }
            write_file(&trials, &body)?;
            written.push(trials);
            let summary = suffixed(base, ".summary.json");
            write_file(
                &summary,
                &format!("{}\n", serde_json::to_string(&report.summary).expect("summary serializes")),
            )?;
            written.push(summary);
        }
    }
    for h in &report.histograms {
        let path = suffixed(base, &format!(".hist.{}.csv", h.label));
        write_file(&path, &bins_to_csv(&h.bins))?;
        written.push(path);
    }
    for t in &report.tables {
        let path = suffixed(base, &format!(".{}.csv", t.label));
        write_file(&path, &t.csv)?;
        written.push(path);
    }
    Ok(written)
}
