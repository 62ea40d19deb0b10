//! Experiment harness: declarative configs, preset reproductions, and CSV
//! and JSON output.
//!
//! The harness turns an [`ExperimentConfig`] into a run of one of the three
//! samplers, streams the states through the estimation pipeline, and writes a
//! summary report whose fields mirror the comparison-table columns (states,
//! rejection rate, autocorrelation time, mean, standard error).  Reports are
//! deterministic given the seed: identical configs produce byte-identical
//! JSON except for the trailing wall-time field.
//!
//! [`reproduce`] runs a named preset (a family of methods on one target with
//! an equal density-evaluation budget) and additionally emits comparison and
//! plot-data CSVs.

pub mod config;
pub mod presets;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

pub use config::{
    EstimatorConfig, EstimatorMode, ExperimentConfig, MethodConfig, TargetConfig, TraceEmission,
    TraceMode, VarianceMode,
};
pub use presets::{preset_configs, preset_names};

use crate::diagnostics::{act_estimate, ess_and_se, DiagnosticsError};
use crate::mh::{run_naive_adaptive, run_naive_adaptive_with, run_standard, run_standard_with, SamplerError};
use crate::rng::RandomStream;
use crate::shortcut::{run_schedule, run_schedule_with, StepsizeSummary};
use crate::targets::{by_name, Target, TargetError};
use crate::trace::{Provenance, TraceRecord};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error in field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("unknown preset `{0}`; available presets: mixture1d, mvgauss7, funnel")]
    UnknownPreset(String),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Summary of one experiment run.
///
/// The leading fields are the comparison-table columns; `config` echoes the
/// exact configuration (including the seed) that produced them.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub name: String,
    /// States entering the estimation average, after burn-in.
    pub states: u64,
    /// Rejections over every update performed or replayed.
    pub rejection_rate: f64,
    pub autocorrelation_time: f64,
    pub mean: f64,
    pub standard_error: f64,
    pub ess: f64,
    pub copy_fraction: f64,
    /// Density evaluations, excluding the seed state's.
    pub evals: u64,
    /// All update records the run produced, computed and copied.
    pub total_updates: u64,
    pub series_min: f64,
    pub series_max: f64,
    pub variance_used: f64,
    pub per_stepsize: Vec<StepsizeSummary>,
    pub warnings: Vec<String>,
    pub config: ExperimentConfig,
    /// Not covered by the determinism guarantee.
    pub wall_time_ms: u64,
}

/// Per-sequence observations used for plot-data emission.
#[derive(Debug, Clone, Copy)]
pub struct SequencePoint {
    pub index: u64,
    pub w: f64,
    /// Tracked coordinate at the start of the sequence.
    pub start_value: f64,
    /// Tracked coordinate of the sequence's final state.
    pub final_value: f64,
    pub states: u64,
    pub copied: u64,
}

/// Runs one experiment and writes its summary JSON (and optional trace CSV)
/// into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunReport, HarnessError> {
    let (report, _) = run_experiment_observed(config, out_dir)?;
    Ok(report)
}

/// [`run_experiment`] variant that also returns per-sequence observations
/// (empty for runs without a sequence structure).
pub fn run_experiment_observed(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(RunReport, Vec<SequencePoint>), HarnessError> {
    config.validate()?;
    let started = Instant::now();
    let target = by_name(&config.target.name, config.target.variances.as_deref())?;
    let x0 = initial_state(config, target.as_ref())?;
    let coord = config.estimator.tracked_coordinate;
    if coord >= target.dimension() {
        return Err(HarnessError::Config {
            field: "estimator.tracked_coordinate".into(),
            message: format!(
                "coordinate {coord} out of range for a {}-dimensional target",
                target.dimension()
            ),
        });
    }

    let mut warnings = Vec::new();
    let outcome = execute(config, target.as_ref(), &x0, coord, out_dir, &mut warnings)?;

    let mut series = outcome.series;
    let burn_in = config.estimator.burn_in as usize;
    if burn_in >= series.len() {
        return Err(HarnessError::Config {
            field: "estimator.burn_in".into(),
            message: format!(
                "burn-in {} leaves no states out of {}",
                burn_in,
                series.len()
            ),
        });
    }
    series.drain(..burn_in);

    let n = series.len();
    let mut max_lag = config.estimator.max_lag;
    if max_lag >= n {
        max_lag = n - 1;
        warnings.push(format!(
            "max_lag clamped from {} to {} (series has {} states)",
            config.estimator.max_lag, max_lag, n
        ));
    }
    if max_lag == 0 {
        return Err(HarnessError::Config {
            field: "estimator.max_lag".into(),
            message: "estimation series has a single state".into(),
        });
    }
    let tau = act_estimate(&series, max_lag)?;

    let mean = series.iter().sum::<f64>() / n as f64;
    let sample_var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let variance_used = match config.estimator.variance {
        VarianceMode::Sample => {
            warnings.push("standard error uses the sample variance of the series".into());
            sample_var
        }
        VarianceMode::Known => {
            let moments = target.moments().ok_or_else(|| HarnessError::Config {
                field: "estimator.variance".into(),
                message: format!(
                    "target `{}` has no known moments; use variance mode `sample`",
                    config.target.name
                ),
            })?;
            moments.variance[coord]
        }
    };
    let (ess, se) = ess_and_se(n as u64, tau, variance_used);

    let total_updates: u64 = outcome.per_stepsize.iter().map(|s| s.states).sum();
    let rejections: u64 = outcome.per_stepsize.iter().map(|s| s.rejections).sum();
    let copied: u64 = outcome.per_stepsize.iter().map(|s| s.copied).sum();
    let series_min = series.iter().cloned().fold(f64::INFINITY, f64::min);
    let series_max = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let report = RunReport {
        name: config.name.clone(),
        states: n as u64,
        rejection_rate: rejections as f64 / total_updates as f64,
        autocorrelation_time: tau,
        mean,
        standard_error: se,
        ess,
        copy_fraction: copied as f64 / total_updates as f64,
        evals: outcome.evals,
        total_updates,
        series_min,
        series_max,
        variance_used,
        per_stepsize: outcome.per_stepsize,
        warnings,
        config: config.clone(),
        wall_time_ms: started.elapsed().as_millis() as u64,
    };

    let json = serde_json::to_string_pretty(&report).expect("report serialization cannot fail");
    let path = out_dir.join(format!("{}.json", config.name));
    write_atomic(&path, json.as_bytes())?;
    Ok((report, outcome.points))
}

struct RunOutcome {
    series: Vec<f64>,
    evals: u64,
    per_stepsize: Vec<StepsizeSummary>,
    points: Vec<SequencePoint>,
}

fn initial_state(
    config: &ExperimentConfig,
    target: &dyn Target,
) -> Result<Vec<f64>, HarnessError> {
    if let Some(x0) = &config.initial_state {
        if x0.len() != target.dimension() {
            return Err(HarnessError::Config {
                field: "initial_state".into(),
                message: format!(
                    "state has dimension {} but the target expects {}",
                    x0.len(),
                    target.dimension()
                ),
            });
        }
        return Ok(x0.clone());
    }
    // Conventional starts: the funnel begins at v = 0 with all x_i = 1; every
    // other built-in target starts at the origin.
    let d = target.dimension();
    Ok(if config.target.name == "funnel" {
        let mut x = vec![1.0; d];
        x[0] = 0.0;
        x
    } else {
        vec![0.0; d]
    })
}

fn summary_for(per: &mut Vec<StepsizeSummary>, w: f64) -> &mut StepsizeSummary {
    if let Some(pos) = per.iter().position(|s| s.w == w) {
        return &mut per[pos];
    }
    per.push(StepsizeSummary {
        w,
        states: 0,
        computed: 0,
        copied: 0,
        rejections: 0,
        evals: 0,
        reversals: 0,
    });
    per.last_mut().unwrap()
}

fn execute(
    config: &ExperimentConfig,
    target: &dyn Target,
    x0: &[f64],
    coord: usize,
    out_dir: &Path,
    warnings: &mut Vec<String>,
) -> Result<RunOutcome, HarnessError> {
    let mut stream = RandomStream::new(config.seed);
    let method = config.scaled_method();
    let final_only = config.estimator.mode == EstimatorMode::FinalOnly;
    if let MethodConfig::NaiveAdaptive { .. } = method {
        warnings.push("naive-adaptive uses w_large until its rejection window fills".into());
    }

    if config.trace.is_some() {
        return execute_collected(config, target, x0, coord, &method, &mut stream, out_dir);
    }

    let mut series = Vec::new();
    let mut per: Vec<StepsizeSummary> = Vec::new();
    let mut points = Vec::new();
    if !final_only {
        series.push(x0[coord]);
    }

    let evals = if let MethodConfig::Shortcut { schedule, cycles } = &method {
        let (_, evals, summaries) =
            run_schedule_with(target, x0, schedule, *cycles, &mut stream, |i, tr| {
                if final_only {
                    series.push(tr.final_state()[coord]);
                } else {
                    for rec in &tr.records[1..] {
                        series.push(rec.state[coord]);
                    }
                }
                points.push(SequencePoint {
                    index: i as u64,
                    w: tr.records[1].w,
                    start_value: tr.records[0].state[coord],
                    final_value: tr.final_state()[coord],
                    states: tr.records.len() as u64 - 1,
                    copied: tr.copied_records() as u64,
                });
            })?;
        per = summaries;
        evals
    } else {
        let seq_len = config.estimator.sequence_len.unwrap_or(0);
        let mut index = 0u64;
        let mut seq_start = x0[coord];
        let mut observer = |rec: TraceRecord| {
            let s = summary_for(&mut per, rec.w);
            s.states += 1;
            s.computed += 1;
            s.evals += 1;
            if rec.rejected {
                s.rejections += 1;
            }
            index += 1;
            let value = rec.state[coord];
            if final_only {
                if index % seq_len == 0 {
                    series.push(value);
                    points.push(SequencePoint {
                        index: index / seq_len - 1,
                        w: rec.w,
                        start_value: seq_start,
                        final_value: value,
                        states: seq_len,
                        copied: 0,
                    });
                    seq_start = value;
                }
            } else {
                series.push(value);
            }
        };
        match &method {
            MethodConfig::Standard { w, updates } => {
                run_standard_with(target, x0, *w, *updates, &mut stream, &mut observer)?.2
            }
            MethodConfig::NaiveAdaptive {
                w_small,
                w_large,
                window,
                threshold,
                updates,
            } => {
                run_naive_adaptive_with(
                    target,
                    x0,
                    *w_small,
                    *w_large,
                    *window,
                    *threshold,
                    *updates,
                    &mut stream,
                    &mut observer,
                )?
                .2
            }
            MethodConfig::Shortcut { .. } => unreachable!(),
        }
    };

    Ok(RunOutcome {
        series,
        evals,
        per_stepsize: per,
        points,
    })
}

/// Trace-emitting path: the whole trace is collected in memory, written as
/// CSV, and the estimation series is then read back off the records.
fn execute_collected(
    config: &ExperimentConfig,
    target: &dyn Target,
    x0: &[f64],
    coord: usize,
    method: &MethodConfig,
    stream: &mut RandomStream,
    out_dir: &Path,
) -> Result<RunOutcome, HarnessError> {
    let (records, evals, per) = match method {
        MethodConfig::Standard { w, updates } => {
            let trace = run_standard(target, x0, *w, *updates, stream)?;
            let per = per_stepsize_of(&trace.records, false);
            (trace.records, trace.evals, per)
        }
        MethodConfig::NaiveAdaptive {
            w_small,
            w_large,
            window,
            threshold,
            updates,
        } => {
            let trace = run_naive_adaptive(
                target, x0, *w_small, *w_large, *window, *threshold, *updates, stream,
            )?;
            let per = per_stepsize_of(&trace.records, false);
            (trace.records, trace.evals, per)
        }
        MethodConfig::Shortcut { schedule, cycles } => {
            let rt = run_schedule(target, x0, schedule, *cycles, stream)?;
            (rt.records, rt.evals, rt.summaries)
        }
    };

    let emission = config.trace.as_ref().expect("collected path requires trace emission");
    emit_trace(&records, &out_dir.join(&emission.filename), emission.mode)?;

    let series = match config.estimator.mode {
        EstimatorMode::AllStates => records.iter().map(|r| r.state[coord]).collect(),
        EstimatorMode::FinalOnly => {
            let boundaries = sequence_boundaries(config, method);
            boundaries.iter().map(|&i| records[i].state[coord]).collect()
        }
    };
    Ok(RunOutcome {
        series,
        evals,
        per_stepsize: per,
        points: Vec::new(),
    })
}

/// Record indexes holding each sequence's final state.
fn sequence_boundaries(config: &ExperimentConfig, method: &MethodConfig) -> Vec<usize> {
    let mut out = Vec::new();
    let mut idx = 0usize;
    match method {
        MethodConfig::Standard { updates, .. } | MethodConfig::NaiveAdaptive { updates, .. } => {
            let len = config.estimator.sequence_len.unwrap_or(*updates) as usize;
            while idx + len <= *updates as usize {
                idx += len;
                out.push(idx);
            }
        }
        MethodConfig::Shortcut { schedule, cycles } => {
            for _ in 0..*cycles {
                for spec in schedule {
                    idx += spec.updates();
                    out.push(idx);
                }
            }
        }
    }
    out
}

fn per_stepsize_of(records: &[TraceRecord], copies_possible: bool) -> Vec<StepsizeSummary> {
    let mut per: Vec<StepsizeSummary> = Vec::new();
    for rec in &records[1..] {
        let s = summary_for(&mut per, rec.w);
        s.states += 1;
        if rec.rejected {
            s.rejections += 1;
        }
        if copies_possible && rec.provenance.is_copied() {
            s.copied += 1;
        } else {
            s.computed += 1;
            s.evals += 1;
        }
    }
    per
}

/// Serializes a float with 17 significant digits, enough for an exact
/// round-trip of any f64.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a trace as CSV.
///
/// Full mode writes one row per record with the header
/// `seq,group,step,provenance,src,rejected,w,evals_cum,c0..c{d-1}`;
/// `provenance` is `C` (computed) or `P` (copied), and `src` is the source
/// row for copies, empty otherwise.  Deduplicated mode keeps only computed
/// rows, inserts a `multiplicity` column after `evals_cum` counting the row
/// itself plus every copy that resolves to it, and the multiplicities sum to
/// the full-mode row count.
pub fn emit_trace(
    records: &[TraceRecord],
    path: &Path,
    mode: TraceMode,
) -> Result<(), HarnessError> {
    assert!(!records.is_empty(), "trace must contain the seed record");
    let dim = records[0].state.len();
    let mut body = String::new();
    write!(body, "seq,group,step,provenance,src,rejected,w,evals_cum").unwrap();
    if mode == TraceMode::Deduplicated {
        body.push_str(",multiplicity");
    }
    for c in 0..dim {
        write!(body, ",c{c}").unwrap();
    }
    body.push('\n');

    // Copies can point at copies (a sequence seeded from a copied final
    // state); resolve every record to its computed root.
    let mut roots: Vec<usize> = Vec::with_capacity(records.len());
    let mut multiplicity = vec![0u64; records.len()];
    for (i, rec) in records.iter().enumerate() {
        let root = match rec.provenance {
            Provenance::Computed => i,
            Provenance::Copied(src) => roots[src],
        };
        roots.push(root);
        multiplicity[root] += 1;
    }

    let mut evals_cum = 0u64;
    for (i, rec) in records.iter().enumerate() {
        let computed = !rec.provenance.is_copied();
        if computed && i > 0 {
            evals_cum += 1;
        }
        if mode == TraceMode::Deduplicated && !computed {
            continue;
        }
        let (tag, src) = match rec.provenance {
            Provenance::Computed => ("C", String::new()),
            Provenance::Copied(src) => ("P", src.to_string()),
        };
        write!(
            body,
            "{},{},{},{},{},{},{},{}",
            rec.sequence,
            rec.group,
            i,
            tag,
            src,
            u8::from(rec.rejected),
            fmt_f64(rec.w),
            evals_cum
        )
        .unwrap();
        if mode == TraceMode::Deduplicated {
            write!(body, ",{}", multiplicity[i]).unwrap();
        }
        for v in &rec.state {
            write!(body, ",{}", fmt_f64(*v)).unwrap();
        }
        body.push('\n');
    }
    write_atomic(path, body.as_bytes())
}

/// Writes `bytes` to `path` atomically (temp file in the same directory,
/// then rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(io_err(path))?;
        }
    }
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

/// Everything [`reproduce`] produced: one report per method, in preset order.
#[derive(Debug, Serialize)]
pub struct PresetReport {
    pub preset: String,
    pub scale: f64,
    pub base_seed: u64,
    /// Seed policy: method i runs with seed `base_seed + i`.
    pub methods: Vec<RunReport>,
}

/// Runs every method of a preset (in parallel, one thread per method) and
/// writes per-method reports, a comparison table, a copy-fraction table, and
/// plot-data CSVs into `out_dir`.
pub fn reproduce(
    preset: &str,
    scale: f64,
    base_seed: u64,
    out_dir: &Path,
) -> Result<PresetReport, HarnessError> {
    let configs = preset_configs(preset, scale, base_seed)?;
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let mut slots: Vec<Option<Result<(RunReport, Vec<SequencePoint>), HarnessError>>> =
        (0..configs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for config in &configs {
            handles.push(scope.spawn(move || run_experiment_observed(config, out_dir)));
        }
        for (slot, handle) in slots.iter_mut().zip(handles) {
            *slot = Some(handle.join().expect("experiment thread panicked"));
        }
    });
    let mut methods = Vec::new();
    let mut points = Vec::new();
    for slot in slots {
        let (report, pts) = slot.expect("all slots filled")?;
        methods.push(report);
        points.push(pts);
    }

    write_comparison_table(preset, &methods, out_dir)?;
    write_copy_fractions(preset, &methods, out_dir)?;
    emit_plot_data(preset, &configs, &methods, &points, out_dir)?;

    let report = PresetReport {
        preset: preset.to_string(),
        scale,
        base_seed,
        methods,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serialization cannot fail");
    write_atomic(&out_dir.join(format!("{preset}-report.json")), json.as_bytes())?;
    Ok(report)
}

fn write_comparison_table(
    preset: &str,
    methods: &[RunReport],
    out_dir: &Path,
) -> Result<(), HarnessError> {
    let mut body = String::from("method,states,rejection_rate,autocorrelation_time,mean,standard_error\n");
    for m in methods {
        writeln!(
            body,
            "{},{},{:.3},{:.1},{:+.3},{:.3}",
            m.name, m.total_updates, m.rejection_rate, m.autocorrelation_time, m.mean, m.standard_error
        )
        .unwrap();
    }
    write_atomic(&out_dir.join(format!("{preset}-table.csv")), body.as_bytes())
}

fn write_copy_fractions(
    preset: &str,
    methods: &[RunReport],
    out_dir: &Path,
) -> Result<(), HarnessError> {
    let mut body = String::from("method,w,states,copied,copy_fraction\n");
    for m in methods {
        for s in &m.per_stepsize {
            writeln!(
                body,
                "{},{},{},{},{:.3}",
                m.name,
                s.w,
                s.states,
                s.copied,
                s.copy_fraction()
            )
            .unwrap();
        }
    }
    write_atomic(
        &out_dir.join(format!("{preset}-copy-fractions.csv")),
        body.as_bytes(),
    )
}

/// Plot-data CSVs: a state/provenance walk for the mixture's short-cut
/// methods, per-sequence tracked-coordinate series for the funnel methods,
/// and a copy-fraction-versus-start-value scatter for the funnel short-cut
/// method.
fn emit_plot_data(
    preset: &str,
    configs: &[ExperimentConfig],
    methods: &[RunReport],
    points: &[Vec<SequencePoint>],
    out_dir: &Path,
) -> Result<(), HarnessError> {
    match preset {
        "mixture1d" => {
            for config in configs {
                if let MethodConfig::Shortcut { schedule, .. } = &config.method {
                    // A short re-run on the method's own seed: two cycles is
                    // enough to show computed runs, reversals, and copies.
                    let target = by_name(&config.target.name, None)?;
                    let x0 = initial_state(config, target.as_ref())?;
                    let mut stream = RandomStream::new(config.seed);
                    let rt = run_schedule(target.as_ref(), &x0, schedule, 2, &mut stream)?;
                    let mut body = String::from("step,sequence,group,w,provenance,rejected,x\n");
                    for (i, rec) in rt.records.iter().enumerate().skip(1) {
                        writeln!(
                            body,
                            "{},{},{},{},{},{},{}",
                            i,
                            rec.sequence,
                            rec.group,
                            rec.w,
                            if rec.provenance.is_copied() { "P" } else { "C" },
                            u8::from(rec.rejected),
                            fmt_f64(rec.state[0])
                        )
                        .unwrap();
                    }
                    write_atomic(
                        &out_dir.join(format!("figure-walk-{}.csv", config.name)),
                        body.as_bytes(),
                    )?;
                }
            }
        }
        "funnel" => {
            for (m, pts) in methods.iter().zip(points) {
                if pts.is_empty() {
                    continue;
                }
                let mut body = String::from("sequence,w,v\n");
                for p in pts {
                    writeln!(body, "{},{},{}", p.index, p.w, fmt_f64(p.final_value)).unwrap();
                }
                write_atomic(
                    &out_dir.join(format!("figure-vseries-{}.csv", m.name)),
                    body.as_bytes(),
                )?;
                let has_copies = m.copy_fraction > 0.0;
                if has_copies {
                    let mut body = String::from("sequence,w,v_start,copy_fraction\n");
                    for p in pts.iter().filter(|p| p.index % 5 == 0) {
                        writeln!(
                            body,
                            "{},{},{},{:.4}",
                            p.index,
                            p.w,
                            fmt_f64(p.start_value),
                            p.copied as f64 / p.states as f64
                        )
                        .unwrap();
                    }
                    write_atomic(
                        &out_dir.join(format!("figure-copyfrac-{}.csv", m.name)),
                        body.as_bytes(),
                    )?;
                }
            }
        }
        _ => {}
    }
    Ok(())
}
