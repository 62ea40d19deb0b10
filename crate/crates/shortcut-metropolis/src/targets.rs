//! Target distributions exposed through a log-unnormalized-density interface.
//!
//! Built-in targets carry their known moments so runs against them can be
//! checked.  Log-density evaluation is pure: equal inputs give bit-identical
//! outputs, which the replay machinery depends on.  A return value of
//! `f64::NEG_INFINITY` means zero density ("reject any proposal landing
//! here"); the built-in targets never produce it, but user targets with
//! bounded support may.

use std::f64::consts::PI;
use thiserror::Error;

/// A point in a target's d-dimensional state space.
pub type StateVector = Vec<f64>;

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("unknown target name {0:?} (expected mixture1d, mvgauss7, funnel, or diagonal-gaussian)")]
    UnknownName(String),
    #[error("diagonal-gaussian target requires a non-empty list of positive variances")]
    InvalidVariances,
}

/// Known per-coordinate moments, attached where the target admits them.
#[derive(Debug, Clone)]
pub struct Moments {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// A target distribution known up to an additive constant in log space.
///
/// Immutable after construction and freely shareable across chains.
pub trait Target: Send + Sync {
    fn dimension(&self) -> usize;

    /// Log of the target density at `x`, up to the target's fixed additive
    /// convention.  Returns a finite value or `NEG_INFINITY`, never `+inf`
    /// or NaN.  Panics on a dimension mismatch: callers must not pass
    /// vectors of the wrong length.
    fn log_density(&self, x: &[f64]) -> f64;

    fn moments(&self) -> Option<Moments> {
        None
    }
}

fn check_dimension(expected: usize, x: &[f64]) {
    assert_eq!(
        x.len(),
        expected,
        "state has dimension {} but the target expects {}",
        x.len(),
        expected
    );
}

/// Equal mixture of N(0, 10^2) and N(10, 1^2), with its true normalizing
/// constants included so the density integrates to one.
///
/// Mean 5, variance exactly 75.5.
#[derive(Debug, Clone, Copy, Default)]
pub struct Mixture1d;

impl Target for Mixture1d {
    fn dimension(&self) -> usize {
        1
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        check_dimension(1, x);
        let x = x[0];
        let wide = 0.5 / ((2.0 * PI).sqrt() * 10.0) * (-(x / 10.0) * (x / 10.0) / 2.0).exp();
        let narrow = 0.5 / (2.0 * PI).sqrt() * (-(x - 10.0) * (x - 10.0) / 2.0).exp();
        (wide + narrow).ln()
    }

    fn moments(&self) -> Option<Moments> {
        Some(Moments {
            mean: vec![5.0],
            variance: vec![75.5],
        })
    }
}

/// Zero-mean Gaussian with a diagonal covariance matrix, anchored so the
/// log-density is 0 at the origin.
#[derive(Debug, Clone)]
pub struct DiagonalGaussian {
    variances: Vec<f64>,
}

impl DiagonalGaussian {
    pub fn new(variances: Vec<f64>) -> Result<Self, TargetError> {
        if variances.is_empty() || variances.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(TargetError::InvalidVariances);
        }
        Ok(DiagonalGaussian { variances })
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }
}

impl Target for DiagonalGaussian {
    fn dimension(&self) -> usize {
        self.variances.len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        check_dimension(self.variances.len(), x);
        let mut sum = 0.0;
        for (xi, var) in x.iter().zip(&self.variances) {
            sum += xi * xi / var;
        }
        -0.5 * sum
    }

    fn moments(&self) -> Option<Moments> {
        Some(Moments {
            mean: vec![0.0; self.variances.len()],
            variance: self.variances.clone(),
        })
    }
}

/// Ten-dimensional funnel: coordinates (v, x_1..x_9) with v ~ N(0, 3^2) and
/// each x_i | v ~ N(0, e^v).
///
/// The log-density is `-v^2/18 - (9/2) v - e^{-v} (sum x_i^2)/2`, anchored to
/// 0 at the origin.  The `-(9/2) v` term comes from the nine conditional
/// normalizers `1/sqrt(2 pi e^v)` and cannot be dropped.
#[derive(Debug, Clone, Copy, Default)]
pub struct Funnel;

impl Funnel {
    pub const DIM: usize = 10;
}

impl Target for Funnel {
    fn dimension(&self) -> usize {
        Self::DIM
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        check_dimension(Self::DIM, x);
        let v = x[0];
        let mut sum_sq = 0.0;
        for xi in &x[1..] {
            sum_sq += xi * xi;
        }
        -v * v / 18.0 - 4.5 * v - (-v).exp() * sum_sq / 2.0
    }

    fn moments(&self) -> Option<Moments> {
        // E[x_i] = 0; Var[x_i] = E[e^v] = e^{9/2}.
        let mut variance = vec![(4.5f64).exp(); Self::DIM];
        variance[0] = 9.0;
        Some(Moments {
            mean: vec![0.0; Self::DIM],
            variance,
        })
    }
}

/// The 7-dimensional diagonal Gaussian used in the multivariate demonstration:
/// variances (1, 1, 0.01, 0.01, 0.01, 0.01, 0.01).
pub fn mvgauss7() -> DiagonalGaussian {
    DiagonalGaussian::new(vec![1.0, 1.0, 0.01, 0.01, 0.01, 0.01, 0.01]).unwrap()
}

/// Looks a target up by its config name.  `variances` is consulted only for
/// the custom `"diagonal-gaussian"` target.
pub fn by_name(name: &str, variances: Option<&[f64]>) -> Result<Box<dyn Target>, TargetError> {
    match name {
        "mixture1d" => Ok(Box::new(Mixture1d)),
        "mvgauss7" => Ok(Box::new(mvgauss7())),
        "funnel" => Ok(Box::new(Funnel)),
        "diagonal-gaussian" => {
            let vars = variances.ok_or(TargetError::InvalidVariances)?;
            Ok(Box::new(DiagonalGaussian::new(vars.to_vec())?))
        }
        other => Err(TargetError::UnknownName(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture1d_frozen_values() {
        // Independent high-precision evaluation of the mixture density:
        //   pi(10) = 0.2115696764266735, pi(0) = 0.019947114020071634.
        let t = Mixture1d;
        let d10 = t.log_density(&[10.0]).exp();
        assert!((d10 - 0.211_569_676_426_673_5).abs() < 1e-15, "{d10}");
        let d0 = t.log_density(&[0.0]).exp();
        assert!((d0 - 0.019_947_114_020_071_634).abs() < 1e-16, "{d0}");
        assert!((t.log_density(&[10.0]) - (-1.553_200_895_379_423_7)).abs() < 1e-12);
    }

    #[test]
    fn mixture1d_moments() {
        let m = Mixture1d.moments().unwrap();
        assert_eq!(m.mean, vec![5.0]);
        assert_eq!(m.variance, vec![75.5]);
    }

    #[test]
    fn mixture1d_density_positive_everywhere() {
        let t = Mixture1d;
        for i in -120..=120 {
            let x = i as f64 / 2.0;
            assert!(t.log_density(&[x]).is_finite());
        }
    }

    #[test]
    fn mixture1d_integrates_to_one() {
        // Simpson's rule over [-60, 60]; the mass outside is below 1e-8.
        let t = Mixture1d;
        let n = 40_000;
        let (a, b) = (-60.0, 60.0);
        let h = (b - a) / n as f64;
        let mut integral = 0.0;
        for i in 0..n {
            let x0 = a + i as f64 * h;
            let x1 = x0 + h;
            let fm = t.log_density(&[(x0 + x1) / 2.0]).exp();
            let f0 = t.log_density(&[x0]).exp();
            let f1 = t.log_density(&[x1]).exp();
            integral += (f0 + 4.0 * fm + f1) * h / 6.0;
        }
        assert!((integral - 1.0).abs() < 1e-6, "integral {integral}");
    }

    #[test]
    fn mvgauss7_quadratic_form() {
        let t = mvgauss7();
        let origin = vec![0.0; 7];
        assert_eq!(t.log_density(&origin), 0.0);
        let mut x = vec![0.0; 7];
        x[0] = 1.0;
        assert!((t.log_density(&x) - (-0.5)).abs() < 1e-15);
        // Drop from the origin matches the closed form at a generic point.
        let x = vec![0.3, -0.7, 0.01, 0.02, -0.03, 0.04, 0.05];
        let expect: f64 = x
            .iter()
            .zip(t.variances())
            .map(|(xi, v)| -0.5 * xi * xi / v)
            .sum();
        assert!((t.log_density(&x) - expect).abs() < 1e-12);
        // Origin is the global maximum on a coarse grid.
        for i in 0..7 {
            let mut y = vec![0.0; 7];
            y[i] = 0.05;
            assert!(t.log_density(&y) < t.log_density(&origin));
        }
    }

    #[test]
    fn funnel_frozen_values() {
        let t = Funnel;
        let mut x = vec![0.0; 10];
        assert_eq!(t.log_density(&x), 0.0);
        x[0] = 2.0;
        assert!((t.log_density(&x) - (-4.0 / 18.0 - 9.0)).abs() < 1e-12);
        // Independent evaluation of the closed form at v=-6, x_i=0.05:
        //   -2 + 27 - e^6 * 0.01125 = 20.461426073206730.
        let mut y = vec![0.05; 10];
        y[0] = -6.0;
        assert!((t.log_density(&y) - 20.461_426_073_206_73).abs() < 1e-11);
    }

    #[test]
    fn funnel_quadratic_in_each_x_for_fixed_v() {
        let t = Funnel;
        let v = 1.3;
        for coord in 1..10 {
            let f = |xi: f64| {
                let mut x = vec![0.0; 10];
                x[0] = v;
                x[coord] = xi;
                t.log_density(&x)
            };
            // Second difference of a quadratic is constant.
            let h = 0.25;
            let d2a = f(1.0 + h) - 2.0 * f(1.0) + f(1.0 - h);
            let d2b = f(-2.0 + h) - 2.0 * f(-2.0) + f(-2.0 - h);
            assert!((d2a - d2b).abs() < 1e-9);
        }
    }

    #[test]
    fn log_density_is_pure() {
        let t = Funnel;
        let x = vec![0.37, 1.1, -0.2, 0.0, 0.5, -1.4, 2.2, 0.9, -0.8, 0.1];
        let a = t.log_density(&x);
        let b = t.log_density(&x);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    #[should_panic(expected = "dimension")]
    fn dimension_mismatch_rejected() {
        Mixture1d.log_density(&[1.0, 2.0]);
    }

    #[test]
    fn by_name_lookup() {
        assert_eq!(by_name("mixture1d", None).unwrap().dimension(), 1);
        assert_eq!(by_name("mvgauss7", None).unwrap().dimension(), 7);
        assert_eq!(by_name("funnel", None).unwrap().dimension(), 10);
        assert_eq!(
            by_name("diagonal-gaussian", Some(&[1.0, 2.0]))
                .unwrap()
                .dimension(),
            2
        );
        assert!(by_name("bogus", None).is_err());
        assert!(by_name("diagonal-gaussian", Some(&[-1.0])).is_err());
    }
}
