//! Output analysis: autocorrelations, autocorrelation time, effective sample
//! size, standard errors, block averaging, and trace statistics.
//!
//! Autocovariances use denominator n about the sample mean and are truncated
//! at a caller-chosen maximum lag; no automatic windowing is applied, so the
//! numbers are exactly the plain truncated estimator, not an "improved" one.

use crate::trace::TraceRecord;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("series of length {n} is too short for max lag {max_lag}")]
    SeriesTooShort { n: usize, max_lag: usize },
    #[error("max lag must be positive")]
    ZeroMaxLag,
    #[error("block length must be positive")]
    ZeroBlockLength,
}

/// Sample autocorrelations at lags 1..=max_lag.
///
/// A constant series has zero variance, which makes the ratio undefined; it
/// is flagged degenerate and every autocorrelation is reported as 0.
#[derive(Debug, Clone)]
pub struct Autocorrelations {
    /// rho[k-1] is the lag-k autocorrelation.
    pub rho: Vec<f64>,
    pub degenerate: bool,
}

/// Computes autocorrelations at lags 1..=max_lag of `series`, with the lag-k
/// autocovariance taken about the sample mean and divided by n.
///
/// Uses an FFT of the zero-padded, mean-removed series, so the cost is
/// O(n log n) regardless of the lag cap.
pub fn autocorrelations(
    series: &[f64],
    max_lag: usize,
) -> Result<Autocorrelations, DiagnosticsError> {
    if max_lag == 0 {
        return Err(DiagnosticsError::ZeroMaxLag);
    }
    let n = series.len();
    if n <= max_lag {
        return Err(DiagnosticsError::SeriesTooShort { n, max_lag });
    }
    let mean = series.iter().sum::<f64>() / n as f64;

    let fft_len = (n + max_lag + 1).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(fft_len);
    buf.extend(series.iter().map(|&x| Complex::new(x - mean, 0.0)));
    buf.resize(fft_len, Complex::new(0.0, 0.0));

    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(fft_len).process(&mut buf);
    for v in buf.iter_mut() {
        *v = Complex::new(v.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(fft_len).process(&mut buf);

    // buf[k].re / fft_len is now sum_t (x_t - mean)(x_{t+k} - mean).
    let scale = 1.0 / (fft_len as f64 * n as f64);
    let c0 = buf[0].re * scale;
    // A constant series has true variance zero, but cancellation noise in
    // the mean removal and FFT leaves a c0 on the order of eps^2 times the
    // squared magnitude of the data.
    let magnitude_sq = series.iter().map(|x| x * x).sum::<f64>() / n as f64;
    let floor = f64::EPSILON * f64::EPSILON * n as f64 * (magnitude_sq + 1.0);
    if c0 <= floor {
        return Ok(Autocorrelations {
            rho: vec![0.0; max_lag],
            degenerate: true,
        });
    }
    let rho = (1..=max_lag).map(|k| buf[k].re * scale / c0).collect();
    Ok(Autocorrelations {
        rho,
        degenerate: false,
    })
}

/// Autocorrelation time estimate: 1 + 2 * sum of the autocorrelations at
/// lags 1..=max_lag.
pub fn act_estimate(series: &[f64], max_lag: usize) -> Result<f64, DiagnosticsError> {
    let acf = autocorrelations(series, max_lag)?;
    Ok(1.0 + 2.0 * acf.rho.iter().sum::<f64>())
}

/// Effective sample size and standard error of a mean estimate.
///
/// ESS = n / max(tau, 1): a noise-driven tau below one must not inflate the
/// effective sample size past the actual state count.  SE = sqrt(variance /
/// ESS), where `variance` is the (known or sample) variance of the quantity
/// whose mean is being estimated.
pub fn ess_and_se(n_states: u64, tau: f64, variance: f64) -> (f64, f64) {
    let ess = n_states as f64 / tau.max(1.0);
    let se = (variance / ess).sqrt();
    (ess, se)
}

/// Means of consecutive non-overlapping blocks of `block_len` entries.
/// Returns the averages and the number of trailing entries dropped because
/// they did not fill a block.
pub fn block_averages(
    series: &[f64],
    block_len: usize,
) -> Result<(Vec<f64>, usize), DiagnosticsError> {
    if block_len == 0 {
        return Err(DiagnosticsError::ZeroBlockLength);
    }
    let blocks = series.len() / block_len;
    let dropped = series.len() - blocks * block_len;
    let averages = (0..blocks)
        .map(|b| {
            let chunk = &series[b * block_len..(b + 1) * block_len];
            chunk.iter().sum::<f64>() / block_len as f64
        })
        .collect();
    Ok((averages, dropped))
}

/// Per-stepsize counts extracted from a trace.
#[derive(Debug, Clone)]
pub struct StepsizeStats {
    pub w: f64,
    pub updates: u64,
    pub copied: u64,
    pub rejections: u64,
}

impl StepsizeStats {
    pub fn copy_fraction(&self) -> f64 {
        if self.updates == 0 {
            0.0
        } else {
            self.copied as f64 / self.updates as f64
        }
    }

    pub fn rejection_rate(&self) -> f64 {
        if self.updates == 0 {
            0.0
        } else {
            self.rejections as f64 / self.updates as f64
        }
    }
}

/// Aggregate statistics over a trace's update records.
///
/// The rejection rate counts every update, computed and copied alike; a
/// replayed rejection that was never actually performed still counts, which
/// is how the short-cut method's rates are defined.
#[derive(Debug, Clone)]
pub struct TraceStats {
    pub updates: u64,
    pub rejection_rate: f64,
    pub copy_fraction: f64,
    pub per_stepsize: Vec<StepsizeStats>,
}

/// Computes [`TraceStats`] over `records`, whose first entry is the seed
/// state and is excluded from the counts.
pub fn trace_stats(records: &[TraceRecord]) -> TraceStats {
    assert!(!records.is_empty(), "trace must contain the seed record");
    let mut per: Vec<StepsizeStats> = Vec::new();
    let mut rejections = 0u64;
    let mut copied = 0u64;
    for rec in &records[1..] {
        let entry = match per.iter_mut().find(|s| s.w == rec.w) {
            Some(e) => e,
            None => {
                per.push(StepsizeStats {
                    w: rec.w,
                    updates: 0,
                    copied: 0,
                    rejections: 0,
                });
                per.last_mut().unwrap()
            }
        };
        entry.updates += 1;
        if rec.rejected {
            entry.rejections += 1;
            rejections += 1;
        }
        if rec.provenance.is_copied() {
            entry.copied += 1;
            copied += 1;
        }
    }
    let updates = records.len() as u64 - 1;
    TraceStats {
        updates,
        rejection_rate: if updates == 0 {
            0.0
        } else {
            rejections as f64 / updates as f64
        },
        copy_fraction: if updates == 0 {
            0.0
        } else {
            copied as f64 / updates as f64
        },
        per_stepsize: per,
    }
}
