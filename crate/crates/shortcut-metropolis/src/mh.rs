//! The deterministic Metropolis step kernel and the standard runners.
//!
//! A Metropolis update is viewed as a deterministic transformation `T_met` of
//! the extended point `(x, delta, e)`: propose `x + w*delta`, and accept iff
//! `e + log pi(x + w*delta) - log pi(x) > 0`.  On acceptance the auxiliaries
//! become `(-delta, e + dlog)`; on rejection the whole triple is a fixed
//! point.  Marginally over `delta ~ N(0, I)` and `e ~ Exp(1)` this is exactly
//! the usual random-walk Metropolis update.
//!
//! Accepted steps are *exact* involutions here, not just involutions up to
//! round-off: the transformed auxiliary carries the rounding residuals of the
//! state and `e` updates, so applying the kernel a second time reproduces the
//! pre-step point bit for bit.  The short-cut reference executor replays
//! reversed segments through this kernel and must land on bitwise-identical
//! states.

use crate::rng::RandomStream;
use crate::targets::{StateVector, Target};
use crate::trace::{Provenance, Trace, TraceRecord};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("initial state has zero density (log-density is -inf)")]
    ZeroDensityStart,
    #[error("invalid sequence spec: {0}")]
    InvalidSpec(String),
}

/// Error-free transformation of a sum: returns `(fl(a+b), err)` with
/// `a + b == fl(a+b) + err` exactly.
#[inline]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let a_round = s - b;
    let b_round = s - a_round;
    let a_err = a - a_round;
    let b_err = b - b_round;
    (s, a_err + b_err)
}

/// Rounding residuals recorded when an acceptance transforms the auxiliaries,
/// consumed by the next application at the same index to undo the step
/// exactly.
#[derive(Debug, Clone, PartialEq)]
struct StepResiduals {
    state: Vec<f64>,
    exp: f64,
}

/// The temporary auxiliary variables of one Metropolis update: the proposal
/// offset `delta` and a positive exponential draw `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryPair {
    offset: Vec<f64>,
    exp_draw: f64,
    undo: Option<StepResiduals>,
}

impl AuxiliaryPair {
    /// Builds a fresh (untransformed) auxiliary pair.  `exp_draw` must be
    /// strictly positive.
    pub fn new(offset: Vec<f64>, exp_draw: f64) -> Self {
        debug_assert!(exp_draw > 0.0);
        AuxiliaryPair {
            offset,
            exp_draw,
            undo: None,
        }
    }

    /// Draws `delta` coordinate-wise standard normal and `e ~ Exp(1)`.
    pub fn draw(dimension: usize, stream: &mut RandomStream) -> Self {
        let offset = (0..dimension).map(|_| stream.next_gaussian()).collect();
        AuxiliaryPair::new(offset, stream.next_exponential())
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn exp_draw(&self) -> f64 {
        self.exp_draw
    }
}

/// Result of one kernel application.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: StateVector,
    pub log_density: f64,
    pub aux: AuxiliaryPair,
    pub rejected: bool,
}

/// Applies `T_met` to `(x, aux)` with stepsize `w`.
///
/// `logpi_x` must equal `target.log_density(x)`; exactly one density
/// evaluation is performed (at the proposal), and the outcome carries the new
/// state's log-density so the next step needs no re-evaluation.  A `-inf`
/// proposal log-density forces rejection.
pub fn t_met_apply(
    target: &dyn Target,
    x: &[f64],
    logpi_x: f64,
    w: f64,
    aux: &AuxiliaryPair,
) -> StepOutcome {
    let dim = x.len();
    let mut proposal = vec![0.0; dim];
    let mut residuals = vec![0.0; dim];
    match &aux.undo {
        None => {
            for i in 0..dim {
                let p = w * aux.offset[i];
                let (s, err) = two_sum(x[i], p);
                proposal[i] = s;
                residuals[i] = err;
            }
        }
        Some(undo) => {
            // Undoing an earlier acceptance: fold the recorded residual back
            // in so the pre-step coordinate is recovered exactly.
            for i in 0..dim {
                let p = w * aux.offset[i];
                let (s, err) = two_sum(x[i], p);
                proposal[i] = s + (err + undo.state[i]);
            }
        }
    }

    let logpi_prop = target.log_density(&proposal);
    let dlog = logpi_prop - logpi_x;
    let (exp_next, exp_residual) = match &aux.undo {
        None => two_sum(aux.exp_draw, dlog),
        Some(undo) => {
            let (s, err) = two_sum(aux.exp_draw, dlog);
            (s + (err + undo.exp), 0.0)
        }
    };

    if exp_next > 0.0 {
        let transformed = AuxiliaryPair {
            offset: aux.offset.iter().map(|d| -d).collect(),
            exp_draw: exp_next,
            undo: match aux.undo {
                None => Some(StepResiduals {
                    state: residuals,
                    exp: exp_residual,
                }),
                Some(_) => None,
            },
        };
        StepOutcome {
            state: proposal,
            log_density: logpi_prop,
            aux: transformed,
            rejected: false,
        }
    } else {
        StepOutcome {
            state: x.to_vec(),
            log_density: logpi_x,
            aux: aux.clone(),
            rejected: true,
        }
    }
}

/// One standard random-walk Metropolis update: draw fresh auxiliaries, apply
/// the kernel, forget the transformed auxiliaries.
pub fn standard_update(
    target: &dyn Target,
    x: &[f64],
    logpi_x: f64,
    w: f64,
    stream: &mut RandomStream,
) -> StepOutcome {
    let aux = AuxiliaryPair::draw(x.len(), stream);
    t_met_apply(target, x, logpi_x, w, &aux)
}

/// Runs `n_updates` standard Metropolis updates, streaming each post-update
/// record to `observer`.  Returns the final state, its log-density, and the
/// evaluation count.
pub fn run_standard_with(
    target: &dyn Target,
    x0: &[f64],
    w: f64,
    n_updates: u64,
    stream: &mut RandomStream,
    mut observer: impl FnMut(TraceRecord),
) -> Result<(StateVector, f64, u64), SamplerError> {
    let mut logpi = target.log_density(x0);
    if !logpi.is_finite() {
        return Err(SamplerError::ZeroDensityStart);
    }
    let mut x = x0.to_vec();
    for _ in 0..n_updates {
        let out = standard_update(target, &x, logpi, w, stream);
        x = out.state;
        logpi = out.log_density;
        observer(TraceRecord {
            state: x.clone(),
            log_density: logpi,
            rejected: out.rejected,
            provenance: Provenance::Computed,
            group: 0,
            sequence: 0,
            w,
        });
    }
    Ok((x, logpi, n_updates))
}

/// Runs standard Metropolis and collects the full trace (seed record first).
pub fn run_standard(
    target: &dyn Target,
    x0: &[f64],
    w: f64,
    n_updates: u64,
    stream: &mut RandomStream,
) -> Result<Trace, SamplerError> {
    let mut records = Vec::with_capacity(n_updates as usize + 1);
    records.push(TraceRecord {
        state: x0.to_vec(),
        log_density: target.log_density(x0),
        rejected: false,
        provenance: Provenance::Computed,
        group: 0,
        sequence: 0,
        w,
    });
    let (_, _, evals) =
        run_standard_with(target, x0, w, n_updates, stream, |rec| records.push(rec))?;
    Ok(Trace { records, evals })
}

/// The deliberately biased naive adaptive baseline: per update, choose
/// `w_small` when more than `threshold` of the last `window` updates were
/// rejections, `w_large` otherwise.
///
/// Conditioning the stepsize on past updates destroys the Markov property;
/// this runner exists to demonstrate the resulting bias.  Until `window`
/// updates have happened the "otherwise" arm applies, i.e. `w_large` is used.
#[allow(clippy::too_many_arguments)]
pub fn run_naive_adaptive_with(
    target: &dyn Target,
    x0: &[f64],
    w_small: f64,
    w_large: f64,
    window: usize,
    threshold: usize,
    n_updates: u64,
    stream: &mut RandomStream,
    mut observer: impl FnMut(TraceRecord),
) -> Result<(StateVector, f64, u64), SamplerError> {
    assert!(window >= 1, "window must be at least 1");
    let mut logpi = target.log_density(x0);
    if !logpi.is_finite() {
        return Err(SamplerError::ZeroDensityStart);
    }
    let mut x = x0.to_vec();
    let mut history = std::collections::VecDeque::with_capacity(window);
    let mut recent_rejections = 0usize;
    for _ in 0..n_updates {
        let w = if history.len() == window && recent_rejections > threshold {
            w_small
        } else {
            w_large
        };
        let out = standard_update(target, &x, logpi, w, stream);
        if history.len() == window {
            if history.pop_front() == Some(true) {
                recent_rejections -= 1;
            }
        }
        history.push_back(out.rejected);
        if out.rejected {
            recent_rejections += 1;
        }
        x = out.state;
        logpi = out.log_density;
        observer(TraceRecord {
            state: x.clone(),
            log_density: logpi,
            rejected: out.rejected,
            provenance: Provenance::Computed,
            group: 0,
            sequence: 0,
            w,
        });
    }
    Ok((x, logpi, n_updates))
}

/// Trace-collecting wrapper around [`run_naive_adaptive_with`].
#[allow(clippy::too_many_arguments)]
pub fn run_naive_adaptive(
    target: &dyn Target,
    x0: &[f64],
    w_small: f64,
    w_large: f64,
    window: usize,
    threshold: usize,
    n_updates: u64,
    stream: &mut RandomStream,
) -> Result<Trace, SamplerError> {
    let mut records = Vec::with_capacity(n_updates as usize + 1);
    records.push(TraceRecord {
        state: x0.to_vec(),
        log_density: target.log_density(x0),
        rejected: false,
        provenance: Provenance::Computed,
        group: 0,
        sequence: 0,
        w: w_large,
    });
    let (_, _, evals) = run_naive_adaptive_with(
        target,
        x0,
        w_small,
        w_large,
        window,
        threshold,
        n_updates,
        stream,
        |rec| records.push(rec),
    )?;
    Ok(Trace { records, evals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{DiagonalGaussian, Mixture1d};

    fn std_normal() -> DiagonalGaussian {
        DiagonalGaussian::new(vec![1.0]).unwrap()
    }

    #[test]
    fn uphill_always_accepted() {
        // logpi = -x^2/2, x = 2, w = 1, delta = -1: dlog = +1.5 > 0.
        let t = std_normal();
        for &e in &[1e-12, 0.3, 5.0] {
            let aux = AuxiliaryPair::new(vec![-1.0], e);
            let out = t_met_apply(&t, &[2.0], t.log_density(&[2.0]), 1.0, &aux);
            assert!(!out.rejected);
            assert_eq!(out.state, vec![1.0]);
            assert_eq!(out.aux.offset(), &[1.0]);
            assert!((out.aux.exp_draw() - (e + 1.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn downhill_accept_reject_boundary() {
        let t = std_normal();
        // x = 0, w = 1, delta = 2: dlog = -2.
        let rejected = t_met_apply(&t, &[0.0], 0.0, 1.0, &AuxiliaryPair::new(vec![2.0], 1.0));
        assert!(rejected.rejected);
        assert_eq!(rejected.state, vec![0.0]);
        assert_eq!(rejected.aux, AuxiliaryPair::new(vec![2.0], 1.0));

        let accepted = t_met_apply(&t, &[0.0], 0.0, 1.0, &AuxiliaryPair::new(vec![2.0], 2.5));
        assert!(!accepted.rejected);
        assert_eq!(accepted.state, vec![2.0]);
        assert!((accepted.aux.exp_draw() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn accepted_step_inverts_bit_exactly() {
        let t = Mixture1d;
        let mut stream = RandomStream::new(99);
        let mut checked = 0;
        while checked < 1000 {
            let x = vec![stream.next_gaussian() * 12.0];
            let logpi = t.log_density(&x);
            let w = stream.next_uniform() * 25.0;
            let aux = AuxiliaryPair::draw(1, &mut stream);
            let out = t_met_apply(&t, &x, logpi, w, &aux);
            if out.rejected {
                continue;
            }
            let back = t_met_apply(&t, &out.state, out.log_density, w, &out.aux);
            assert!(!back.rejected);
            assert_eq!(back.state[0].to_bits(), x[0].to_bits());
            assert_eq!(back.aux.exp_draw().to_bits(), aux.exp_draw().to_bits());
            assert_eq!(back.aux.offset()[0].to_bits(), aux.offset()[0].to_bits());
            checked += 1;
        }
    }

    #[test]
    fn zero_stepsize_always_accepts() {
        let t = std_normal();
        let mut stream = RandomStream::new(4);
        let mut x = vec![0.7];
        let mut logpi = t.log_density(&x);
        for _ in 0..100 {
            let out = standard_update(&t, &x, logpi, 0.0, &mut stream);
            assert!(!out.rejected);
            assert_eq!(out.state, x);
            x = out.state;
            logpi = out.log_density;
        }
    }

    #[test]
    fn marginal_acceptance_matches_metropolis_probability() {
        // Fixed (x, delta), random e: empirical acceptance frequency must
        // equal min(1, pi(x + w delta)/pi(x)) within 3 binomial sigma.
        let t = std_normal();
        let x = [0.4];
        let logpi = t.log_density(&x);
        let w = 1.7;
        let delta = -1.1;
        let prob = (t.log_density(&[x[0] + w * delta]) - logpi).exp().min(1.0);
        let n = 200_000u32;
        let mut stream = RandomStream::new(21);
        let mut accepts = 0u32;
        for _ in 0..n {
            let aux = AuxiliaryPair::new(vec![delta], stream.next_exponential());
            if !t_met_apply(&t, &x, logpi, w, &aux).rejected {
                accepts += 1;
            }
        }
        let freq = accepts as f64 / n as f64;
        let sigma = (prob * (1.0 - prob) / n as f64).sqrt();
        assert!(
            (freq - prob).abs() < 3.0 * sigma,
            "freq {freq} prob {prob} sigma {sigma}"
        );
    }

    #[test]
    fn stationary_rejection_rate_one_d_normal() {
        // Independent oracle: 2-point Gauss-Legendre-free quadrature of
        // E[min(1, pi(x + w d)/pi(x))] over x, d ~ N(0,1) with w = 2 gives
        // acceptance 0.500004 (rejection 0.499996).
        let t = std_normal();
        let w = 2.0;
        let n_grid = 2000;
        let span = 8.0;
        let h = 2.0 * span / n_grid as f64;
        let mut acc = 0.0;
        let mut weight = 0.0;
        for i in 0..n_grid {
            let x = -span + (i as f64 + 0.5) * h;
            let wx = (-x * x / 2.0).exp();
            for j in 0..n_grid {
                let d = -span + (j as f64 + 0.5) * h;
                let wd = (-d * d / 2.0).exp();
                let ratio = (-(x + w * d) * (x + w * d) / 2.0 + x * x / 2.0).exp();
                acc += wx * wd * ratio.min(1.0);
                weight += wx * wd;
            }
        }
        let acc = acc / weight;
        assert!((acc - 0.5).abs() < 1e-3, "quadrature acceptance {acc}");

        // Long-run empirical rejection rate of the chain matches.
        let mut stream = RandomStream::new(31);
        let trace = run_standard(&t, &[0.0], w, 400_000, &mut stream).unwrap();
        let rej = trace.records[1..].iter().filter(|r| r.rejected).count() as f64
            / trace.updates() as f64;
        assert!((rej - (1.0 - acc)).abs() < 0.01, "empirical rejection {rej}");
    }

    #[test]
    fn chain_invariance_one_update() {
        // Exact N(0,1) samples, one update each: first two moments preserved
        // within Monte Carlo error.
        let t = std_normal();
        let n = 100_000;
        let mut stream = RandomStream::new(77);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let x = vec![stream.next_gaussian()];
            let out = standard_update(&t, &x, t.log_density(&x), 2.0, &mut stream);
            sum += out.state[0];
            sum_sq += out.state[0] * out.state[0];
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 3.0 / (n as f64).sqrt() * 1.5, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn run_standard_zero_updates() {
        let t = std_normal();
        let mut stream = RandomStream::new(1);
        let trace = run_standard(&t, &[0.25], 2.0, 0, &mut stream).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].state, vec![0.25]);
        assert_eq!(trace.evals, 0);
    }

    #[test]
    fn naive_adaptive_window_logic() {
        let t = Mixture1d;
        let mut stream = RandomStream::new(5);
        let trace =
            run_naive_adaptive(&t, &[0.0], 2.0, 20.0, 10, 5, 500, &mut stream).unwrap();
        // First `window` updates use the large stepsize.
        for rec in &trace.records[1..=10] {
            assert_eq!(rec.w, 20.0);
        }
        // Whenever the last 10 flags hold more than 5 rejections, the next
        // update must use the small stepsize, and vice versa.
        let recs = &trace.records[1..];
        for i in 10..recs.len() {
            let rejections = recs[i - 10..i].iter().filter(|r| r.rejected).count();
            let expect = if rejections > 5 { 2.0 } else { 20.0 };
            assert_eq!(recs[i].w, expect, "update {i}");
        }
    }
}
