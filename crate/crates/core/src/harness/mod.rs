//! Experiment orchestration: independent trials, CSV persistence, trial
//! averages, a gnuplot script, horizon sweeps for the rate fit, and parameter
//! validation reports.
//!
//! Output layout under the output directory:
//!
//! ```text
//! trials/trial_000.csv   one file per trial, written as soon as it finishes
//! traces.csv             all trials merged
//! averaged.csv           per-method, per-iteration mean over trials
//! plot.gp                gap and ‖Ax‖ against iteration
//! summary.json           resolved parameters, validation, metadata
//! ```

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{
    build_objectives, resolve, AlgorithmSpec, AutoKeyword, AutoValue, BaselineSpec, ExperimentConfig, Mode,
    ObjectiveSpec, Resolved, TopologySpec, OUTPUT_DIR_ENV,
};

use crate::baseline::run_rgf;
use crate::engine::{
    run_centralized_with, run_distributed_with, AlgoParams, EngineError, MessageStats, RunOutput, StepView,
};
use crate::metrics::{rate_fit, MetricRecord, RateFit, ValidationReport};
use crate::rng::{derive_seed, purpose};

pub const CSV_HEADER: &str = "method,trial,iter,stationarity_gap,constraint_violation,potential,objective";
pub const METHOD_PRIMAL_DUAL: &str = "zo_primal_dual";
pub const METHOD_RGF: &str = "rgf_reconstruction";

/// Largest allowed per-coordinate discrepancy between the two engine modes.
pub const EQUIVALENCE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("io: {0}")]
    Io(String),
    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: EngineError,
    },
    #[error("engine modes disagree in trial {trial} at iteration {iter}: discrepancy {discrepancy:e}")]
    Equivalence { trial: usize, iter: usize, discrepancy: f64 },
    #[error("{failed} of {total} trials failed; completed trials were written to {dir}: {first}")]
    PartialFailure { failed: usize, total: usize, dir: String, first: String },
    #[error("sweep: {0}")]
    Sweep(String),
}

impl HarnessError {
    pub fn field(field: &str, message: impl std::fmt::Display) -> Self {
        HarnessError::Field { field: field.to_string(), message: message.to_string() }
    }

    /// Config and validation problems, as opposed to runtime failures.
    pub fn is_validation(&self) -> bool {
        matches!(self, HarnessError::Parse(_) | HarnessError::Field { .. } | HarnessError::Sweep(_))
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

/// One method's trace within a trial.
#[derive(Debug, Clone)]
pub struct MethodTrace {
    pub method: String,
    pub initial: MetricRecord,
    pub records: Vec<MetricRecord>,
}

impl MethodTrace {
    /// `(1/T) Σ_{r=0}^{T−1} Φ^r`, the expectation of the gap at the uniformly
    /// drawn output index.
    pub fn expected_output_gap(&self) -> f64 {
        let t = self.records.len();
        let head = std::iter::once(&self.initial).chain(&self.records[..t.saturating_sub(1)]);
        head.map(|r| r.stationarity_gap).sum::<f64>() / t as f64
    }
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub methods: Vec<MethodTrace>,
    pub output_index: usize,
    /// Largest primal and dual (`|Δλ|/ρ`) discrepancy between modes.
    pub equivalence: Option<(f64, f64)>,
    pub messages: Option<MessageStats>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AveragedRecord {
    pub iter: usize,
    pub stationarity_gap: f64,
    pub constraint_violation: f64,
    pub potential: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub final_gap: f64,
    pub final_violation: f64,
    pub first_violation: f64,
    pub expected_output_gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub version: String,
    pub config_hash: String,
    pub output_dir: PathBuf,
    pub trials: usize,
    pub rho: f64,
    pub c: f64,
    pub mu: f64,
    pub batch: usize,
    pub total_iters: usize,
    pub validation: ValidationReport,
    pub methods: Vec<MethodSummary>,
    pub output_indices: Vec<usize>,
    pub max_mode_discrepancy: Option<(f64, f64)>,
    pub messages_per_round: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

/// In-memory result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub summary: ExperimentSummary,
    pub averaged: Vec<(String, Vec<AveragedRecord>)>,
    pub trials: Vec<TrialResult>,
}

impl ExperimentResult {
    pub fn averaged_for(&self, method: &str) -> Option<&[AveragedRecord]> {
        self.averaged.iter().find(|(m, _)| m == method).map(|(_, v)| v.as_slice())
    }
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn trial_seed(base: u64, trial: usize) -> u64 {
    derive_seed(base, &[purpose::TRIAL, trial as u64])
}

fn run_mode(
    mode: Mode,
    resolved: &Resolved,
    params: &AlgoParams,
    observer: &mut dyn FnMut(&StepView<'_>),
) -> Result<RunOutput, EngineError> {
    match mode {
        Mode::Centralized => run_centralized_with(&resolved.problem, params, None, None, observer),
        Mode::Distributed => run_distributed_with(&resolved.problem, params, None, None, observer),
    }
}

pub fn run_trial(cfg: &ExperimentConfig, resolved: &Resolved, trial: usize) -> Result<TrialResult, HarnessError> {
    let seed = trial_seed(cfg.algorithm.seed, trial);
    let params = AlgoParams { seed, ..resolved.params.clone() };
    let wrap = |source| HarnessError::Trial { trial, source };

    let mut modes = cfg.modes.clone();
    modes.dedup();
    let primary = modes[0];
    let mut iterates: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let compare = modes.len() > 1;
    let main = run_mode(primary, resolved, &params, &mut |v: &StepView| {
        if compare {
            iterates.push((v.x.to_vec(), v.lambda.to_vec()));
        }
    })
    .map_err(wrap)?;
    let mut messages = main.messages.clone();
    let mut equivalence = None;
    let rho = params.rho;
    for &other in &modes[1..] {
        let mut worst = (0.0_f64, 0.0_f64);
        let mut failure = None;
        let out = run_mode(other, resolved, &params, &mut |v: &StepView| {
            let (x, lambda) = &iterates[v.iter - 1];
            let dx = x.iter().zip(v.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            // λ/ρ = Σ_s Ax^s is in primal units
            let dl = lambda.iter().zip(v.lambda).map(|(a, b)| (a - b).abs() / rho).fold(0.0, f64::max);
            worst = (worst.0.max(dx), worst.1.max(dl));
            if failure.is_none() && (dx >= EQUIVALENCE_TOL || dl >= EQUIVALENCE_TOL) {
                failure = Some((v.iter, dx.max(dl)));
            }
        })
        .map_err(wrap)?;
        if let Some((iter, discrepancy)) = failure {
            return Err(HarnessError::Equivalence { trial, iter, discrepancy });
        }
        equivalence = Some(worst);
        if messages.is_none() {
            messages = out.messages;
        }
    }

    let mut methods =
        vec![MethodTrace { method: METHOD_PRIMAL_DUAL.to_string(), initial: main.initial, records: main.trace }];
    if let Some(rgf) = &resolved.baseline {
        let rgf = crate::baseline::RgfParams { seed, ..*rgf };
        let out = run_rgf(&resolved.problem, &rgf, &params).map_err(wrap)?;
        methods.push(MethodTrace { method: METHOD_RGF.to_string(), initial: out.initial, records: out.trace });
    }
    Ok(TrialResult { trial, seed, methods, output_index: main.checkpoint.output_index, equivalence, messages })
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_rows(out: &mut String, trial: &TrialResult) {
    for m in &trial.methods {
        for r in &m.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                m.method,
                trial.trial,
                r.iter,
                fmt_f(r.stationarity_gap),
                fmt_f(r.constraint_violation),
                fmt_f(r.potential),
                fmt_f(r.objective)
            );
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn write_trial_csv(dir: &Path, trial: &TrialResult) -> Result<(), HarnessError> {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    csv_rows(&mut s, trial);
    write_file(&dir.join(format!("trial_{:03}.csv", trial.trial)), &s)
}

/// Per-iteration mean over trials, summing in trial order.
pub fn average_trials(trials: &[TrialResult]) -> Vec<(String, Vec<AveragedRecord>)> {
    let Some(first) = trials.first() else { return Vec::new() };
    first
        .methods
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let n = trials.len() as f64;
            let rows = (0..m.records.len())
                .map(|i| {
                    let mut acc = [0.0; 4];
                    for t in trials {
                        let r = &t.methods[k].records[i];
                        acc[0] += r.stationarity_gap;
                        acc[1] += r.constraint_violation;
                        acc[2] += r.potential;
                        acc[3] += r.objective;
                    }
                    AveragedRecord {
                        iter: m.records[i].iter,
                        stationarity_gap: acc[0] / n,
                        constraint_violation: acc[1] / n,
                        potential: acc[2] / n,
                        objective: acc[3] / n,
                    }
                })
                .collect();
            (m.method.clone(), rows)
        })
        .collect()
}

fn plot_script(name: &str, methods: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot script: trial-averaged curves for {name}");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set logscale y");
    let _ = writeln!(s, "set xlabel 'iteration r'");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    for (file, col, label) in [("gap.png", 4, "stationarity gap"), ("violation.png", 5, "constraint violation ||Ax||")]
    {
        let _ = writeln!(s, "set output '{file}'");
        let _ = writeln!(s, "set ylabel '{label}'");
        let plots: Vec<String> = methods
            .iter()
            .map(|m| {
                let title = if m == METHOD_RGF { format!("{m} (qualitative)") } else { m.clone() };
                format!("'averaged.csv' using ($1 eq '{m}' ? $3 : 1/0):{col} with lines title '{title}'")
            })
            .collect();
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    }
    s
}

fn mean_of<F: Fn(&MethodTrace) -> f64>(trials: &[TrialResult], k: usize, f: F) -> f64 {
    trials.iter().map(|t| f(&t.methods[k])).sum::<f64>() / trials.len() as f64
}

/// Execute all trials and persist the outputs under the configured (or
/// environment-overridden) output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    run_experiment_in(cfg, &cfg.resolved_output_dir())
}

pub fn run_experiment_in(cfg: &ExperimentConfig, dir: &Path) -> Result<ExperimentResult, HarnessError> {
    let resolved = resolve(cfg)?;
    let dir = dir.to_path_buf();
    let trials_dir = dir.join("trials");
    fs::create_dir_all(&trials_dir).map_err(|e| io_err(&trials_dir, e))?;

    let threads = cfg.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Io(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<TrialResult, HarnessError>> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let r = run_trial(cfg, &resolved, t)?;
                write_trial_csv(&trials_dir, &r)?;
                Ok(r)
            })
            .collect()
    });
    let total = outcomes.len();
    let mut trials = Vec::with_capacity(total);
    let mut errors = Vec::new();
    for o in outcomes {
        match o {
            Ok(t) => trials.push(t),
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        if errors.len() == total && total == 1 {
            return Err(errors.remove(0));
        }
        return Err(HarnessError::PartialFailure {
            failed: errors.len(),
            total,
            dir: trials_dir.display().to_string(),
            first: errors[0].to_string(),
        });
    }

    let mut merged = String::from(CSV_HEADER);
    merged.push('\n');
    for t in &trials {
        csv_rows(&mut merged, t);
    }
    write_file(&dir.join("traces.csv"), &merged)?;

    let averaged = average_trials(&trials);
    let mut avg = String::from(CSV_HEADER);
    avg.push('\n');
    for (method, rows) in &averaged {
        for r in rows {
            let _ = writeln!(
                avg,
                "{method},mean,{},{},{},{},{}",
                r.iter,
                fmt_f(r.stationarity_gap),
                fmt_f(r.constraint_violation),
                fmt_f(r.potential),
                fmt_f(r.objective)
            );
        }
    }
    write_file(&dir.join("averaged.csv"), &avg)?;
    let method_names: Vec<String> = averaged.iter().map(|(m, _)| m.clone()).collect();
    write_file(&dir.join("plot.gp"), &plot_script(&cfg.name, &method_names))?;

    let methods = averaged
        .iter()
        .enumerate()
        .map(|(k, (method, rows))| MethodSummary {
            method: method.clone(),
            final_gap: rows.last().map_or(f64::NAN, |r| r.stationarity_gap),
            final_violation: rows.last().map_or(f64::NAN, |r| r.constraint_violation),
            first_violation: rows.first().map_or(f64::NAN, |r| r.constraint_violation),
            expected_output_gap: mean_of(&trials, k, MethodTrace::expected_output_gap),
        })
        .collect();
    let max_mode_discrepancy = trials.iter().filter_map(|t| t.equivalence).reduce(|a, b| (a.0.max(b.0), a.1.max(b.1)));
    let messages_per_round =
        trials[0].messages.as_ref().map(|s| (0..resolved.problem.num_agents()).map(|i| s.per_round(i)).collect());
    let mut notes = Vec::new();
    if !resolved.validation.valid {
        notes.push(format!(
            "warning: (c, rho) = ({}, {}) do not satisfy the sufficient conditions (need c > {}, rho > {})",
            resolved.params.c, resolved.params.rho, resolved.validation.required_c, resolved.validation.required_rho
        ));
    }
    if resolved.baseline.is_some() {
        notes.push(
            "rgf_reconstruction is a reconstructed baseline; its gap uses lambda = 0 and the comparison is qualitative"
                .into(),
        );
    }
    let summary = ExperimentSummary {
        name: cfg.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(cfg),
        output_dir: dir.clone(),
        trials: cfg.trials,
        rho: resolved.params.rho,
        c: resolved.params.c,
        mu: resolved.params.mu,
        batch: resolved.params.batch,
        total_iters: resolved.params.total_iters,
        validation: resolved.validation,
        methods,
        output_indices: trials.iter().map(|t| t.output_index).collect(),
        max_mode_discrepancy,
        messages_per_round,
        notes,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&dir.join("summary.json"), &json)?;
    Ok(ExperimentResult { summary, averaged, trials })
}

/// Rate study over horizons `T` with `J = ⌈√T⌉`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateReport {
    pub name: String,
    pub horizons: Vec<usize>,
    pub batches: Vec<usize>,
    pub expected_output_gaps: Vec<f64>,
    pub fit: RateFit,
}

pub fn sweep(cfg: &ExperimentConfig, horizons: &[usize]) -> Result<RateReport, HarnessError> {
    let mut sorted = horizons.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != horizons.len() {
        return Err(HarnessError::Sweep("duplicate T values".into()));
    }
    if horizons.len() < 3 {
        return Err(HarnessError::Sweep(format!("need ≥ 3 distinct T values, got {}", horizons.len())));
    }
    if horizons.contains(&0) {
        return Err(HarnessError::Sweep("T must be positive".into()));
    }
    cfg.check()?;
    let base_dir = cfg.resolved_output_dir();
    let mut batches = Vec::new();
    let mut gaps = Vec::new();
    for &t in horizons {
        let j = (t as f64).sqrt().ceil() as usize;
        let mut c = cfg.clone();
        c.algorithm.total_iters = t;
        c.algorithm.batch = j;
        c.baseline.enabled = false;
        let result = run_experiment_in(&c, &base_dir.join(format!("T_{t}")))?;
        batches.push(j);
        gaps.push(result.summary.methods[0].expected_output_gap);
    }
    let points: Vec<(usize, f64)> = horizons.iter().copied().zip(gaps.iter().copied()).collect();
    let fit = rate_fit(&points).map_err(|e| HarnessError::Sweep(e.to_string()))?;
    let report =
        RateReport { name: cfg.name.clone(), horizons: horizons.to_vec(), batches, expected_output_gaps: gaps, fit };
    fs::create_dir_all(&base_dir).map_err(|e| io_err(&base_dir, e))?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&base_dir.join("rate_report.json"), &json)?;
    Ok(report)
}

/// Validator report for a config, without running anything.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidateReport {
    pub name: String,
    pub num_agents: usize,
    pub num_edges: usize,
    pub block_dim: usize,
    pub l0: f64,
    pub mu: f64,
    pub report: ValidationReport,
}

pub fn validate(cfg: &ExperimentConfig) -> Result<ValidateReport, HarnessError> {
    let r = resolve(cfg)?;
    Ok(ValidateReport {
        name: cfg.name.clone(),
        num_agents: r.problem.num_agents(),
        num_edges: r.problem.topology.num_edges(),
        block_dim: r.problem.block_dim(),
        l0: r.problem.lipschitz(),
        mu: r.params.mu,
        report: r.validation,
    })
}

/// Human-readable rendering of a [`ValidateReport`].
pub fn render_validation(v: &ValidateReport) -> String {
    let r = &v.report;
    let mut s = String::new();
    let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(s, "experiment      {}", v.name);
    let _ = writeln!(s, "agents N        {}", v.num_agents);
    let _ = writeln!(s, "edges E         {}", v.num_edges);
    let _ = writeln!(s, "block dim M     {}", v.block_dim);
    let _ = writeln!(s, "L0              {:.6e}", v.l0);
    let _ = writeln!(s, "mu              {:.6e}", v.mu);
    let _ = writeln!(s, "L1              {:.6e}", r.l1);
    let _ = writeln!(s, "sigma_min       {:.6e}", r.sigma_min);
    let _ = writeln!(s, "||L+||          {:.6e}", r.lplus_norm);
    let _ = writeln!(s, "c               {:.6e}  (required > {:.6e})  {}", r.c, r.required_c, mark(r.c_ok));
    let _ = writeln!(s, "rho             {:.6e}  (required > {:.6e})  {}", r.rho, r.required_rho, mark(r.rho_ok));
    let _ = writeln!(s, "k               {:.6e}", r.k);
    let _ = writeln!(s, "alpha1          {:.6e}", r.alpha1);
    let _ = writeln!(s, "alpha2 (stated) {:.6e}", r.alpha2_as_stated);
    let _ = writeln!(s, "alpha2 (descent){:.6e}", r.alpha2_descent);
    let _ = writeln!(s, "alpha3          {:.6e}", r.alpha3);
    let _ = writeln!(s, "valid           {}", r.valid);
    s
}

/// Reads a CSV written by the harness back into `(method, trial, record)` rows.
pub fn read_trace_csv(path: &Path) -> Result<Vec<(String, String, AveragedRecord)>, HarnessError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let num = |i: usize| rec[i].parse::<f64>().map_err(|e| io_err(path, e));
        out.push((
            rec[0].to_string(),
            rec[1].to_string(),
            AveragedRecord {
                iter: rec[2].parse().map_err(|e| io_err(path, e))?,
                stationarity_gap: num(3)?,
                constraint_violation: num(4)?,
                potential: num(5)?,
                objective: num(6)?,
            },
        ));
    }
    Ok(out)
}
