//! Declarative experiment configuration.
//!
//! Configs are versioned JSON documents; unknown keys are rejected so that a
//! typo in a field name fails loudly instead of silently running defaults.

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::shortcut::SequenceSpec;

/// Schema version accepted by this build.
pub const CONFIG_VERSION: u32 = 1;

fn default_scale() -> f64 {
    0.1
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

/// One experiment: a target, a method, a seed, and estimator settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    /// Report and output-file stem for this experiment.
    pub name: String,
    pub target: TargetConfig,
    pub method: MethodConfig,
    pub seed: u64,
    /// Fraction of the configured run length actually executed, in (0, 1].
    #[serde(default = "default_scale")]
    pub scale: f64,
    pub estimator: EstimatorConfig,
    /// Seed state; when absent the target's conventional start is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<f64>>,
    /// Optional trace CSV emission.  Forces the full trace to be held in
    /// memory, so this is meant for small or scaled-down runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceEmission>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    /// One of `mixture1d`, `mvgauss7`, `funnel`, `diagonal-gaussian`.
    pub name: String,
    /// Per-coordinate variances, consulted only by `diagonal-gaussian`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variances: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MethodConfig {
    /// Plain Metropolis at a single stepsize.
    Standard { w: f64, updates: u64 },
    /// The biased adapt-on-recent-rejections baseline.
    NaiveAdaptive {
        w_small: f64,
        w_large: f64,
        window: usize,
        threshold: usize,
        updates: u64,
    },
    /// Short-cut sequences cycled in schedule order.
    Shortcut {
        schedule: Vec<SequenceSpec>,
        cycles: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    /// Average every state the run produces, copies included.
    AllStates,
    /// Average only the final state of each sequence.
    FinalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceMode {
    /// Use the target's known per-coordinate variance in the standard error.
    Known,
    /// Use the sample variance of the estimation series.
    Sample,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub mode: EstimatorMode,
    /// Autocorrelations are summed at lags 1..=max_lag.
    pub max_lag: usize,
    pub variance: VarianceMode,
    /// Coordinate whose mean is estimated.
    #[serde(default)]
    pub tracked_coordinate: usize,
    /// States dropped from the front of the estimation series.
    #[serde(default)]
    pub burn_in: u64,
    /// For final-only estimation with the standard and naive-adaptive
    /// methods: the run is partitioned into sequences of this many updates.
    /// Short-cut runs have natural sequence boundaries and ignore it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence_len: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceMode {
    /// One row per state, copies written out in place.
    Full,
    /// One row per distinct computed state, with a multiplicity column.
    Deduplicated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceEmission {
    pub mode: TraceMode,
    /// Written inside the run's output directory.
    pub filename: String,
}

impl ExperimentConfig {
    /// Parses and validates a JSON config document.
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let config: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| HarnessError::Config {
                field: "document".into(),
                message: e.to_string(),
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |field: &str, message: String| {
            Err(HarnessError::Config {
                field: field.into(),
                message,
            })
        };
        if self.version != CONFIG_VERSION {
            return fail(
                "version",
                format!("expected schema version {CONFIG_VERSION}, got {}", self.version),
            );
        }
        if self.name.is_empty() {
            return fail("name", "experiment name must be nonempty".into());
        }
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return fail("scale", format!("scale must be in (0, 1], got {}", self.scale));
        }
        match &self.method {
            MethodConfig::Standard { w, updates } => {
                if !(*w > 0.0) || !w.is_finite() {
                    return fail("method.w", format!("stepsize must be positive, got {w}"));
                }
                if *updates == 0 {
                    return fail("method.updates", "update count must be positive".into());
                }
            }
            MethodConfig::NaiveAdaptive {
                w_small,
                w_large,
                window,
                threshold,
                updates,
            } => {
                if !(*w_small > 0.0 && *w_large > 0.0) {
                    return fail("method.w_small", "stepsizes must be positive".into());
                }
                if *window == 0 || *threshold >= *window {
                    return fail(
                        "method.window",
                        format!("need threshold < window, got {threshold} / {window}"),
                    );
                }
                if *updates == 0 {
                    return fail("method.updates", "update count must be positive".into());
                }
            }
            MethodConfig::Shortcut { schedule, cycles } => {
                if schedule.is_empty() {
                    return fail("method.schedule", "schedule must be nonempty".into());
                }
                for (i, spec) in schedule.iter().enumerate() {
                    if let Err(e) = spec.validate() {
                        return fail(&format!("method.schedule[{i}]"), e.to_string());
                    }
                }
                if *cycles == 0 {
                    return fail("method.cycles", "cycle count must be positive".into());
                }
            }
        }
        if self.estimator.max_lag == 0 {
            return fail("estimator.max_lag", "max_lag must be positive".into());
        }
        if self.estimator.mode == EstimatorMode::FinalOnly {
            match &self.method {
                MethodConfig::Shortcut { .. } => {}
                MethodConfig::Standard { updates, .. }
                | MethodConfig::NaiveAdaptive { updates, .. } => {
                    let len = match self.estimator.sequence_len {
                        Some(len) if len > 0 => len,
                        _ => {
                            return fail(
                                "estimator.sequence_len",
                                "final-only estimation with a non-short-cut method \
                                 needs a positive sequence_len"
                                    .into(),
                            )
                        }
                    };
                    if updates % len != 0 {
                        return fail(
                            "estimator.sequence_len",
                            format!("sequence_len {len} must divide the update count {updates}"),
                        );
                    }
                }
            }
        }
        if let Some(trace) = &self.trace {
            if trace.filename.is_empty() {
                return fail("trace.filename", "trace filename must be nonempty".into());
            }
        }
        Ok(())
    }

    /// Run lengths after applying the scale factor, rounded to whole cycles
    /// (whole sequences for final-only standard runs) and floored at one.
    pub fn scaled_method(&self) -> MethodConfig {
        let scale_count = |n: u64| -> u64 { ((n as f64 * self.scale).round() as u64).max(1) };
        match &self.method {
            MethodConfig::Standard { w, updates } => {
                let updates = match self.estimator.sequence_len {
                    Some(len) if self.estimator.mode == EstimatorMode::FinalOnly => {
                        scale_count(updates / len) * len
                    }
                    _ => scale_count(*updates),
                };
                MethodConfig::Standard { w: *w, updates }
            }
            MethodConfig::NaiveAdaptive {
                w_small,
                w_large,
                window,
                threshold,
                updates,
            } => {
                let updates = match self.estimator.sequence_len {
                    Some(len) if self.estimator.mode == EstimatorMode::FinalOnly => {
                        scale_count(updates / len) * len
                    }
                    _ => scale_count(*updates),
                };
                MethodConfig::NaiveAdaptive {
                    w_small: *w_small,
                    w_large: *w_large,
                    window: *window,
                    threshold: *threshold,
                    updates,
                }
            }
            MethodConfig::Shortcut { schedule, cycles } => MethodConfig::Shortcut {
                schedule: schedule.clone(),
                cycles: scale_count(*cycles),
            },
        }
    }
}
