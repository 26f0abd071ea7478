//! Lognormal adoption curve.
//!
//! Cumulative counts follow
//!
//! ```text
//! c(t) = m * (exp(lambda * Phi((ln t - mu) / sigma)) - 1)
//! ```
//!
//! where Phi is the standard normal CDF. `lambda` scales long-run volume
//! (c(inf) = m*(e^lambda - 1)), `mu` sets the time of peak attention on a log
//! scale, and `sigma` controls how spread out that attention is. `m` is a
//! reference count shared by a whole cohort rather than fitted per paper;
//! holding it fixed keeps the remaining three parameters identifiable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reference count used when fitting cohorts. Kept fixed across papers.
pub const DEFAULT_M: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WsbParams {
    pub lambda: f64,
    pub mu: f64,
    pub sigma: f64,
    pub m: f64,
}

impl WsbParams {
    pub fn new(lambda: f64, mu: f64, sigma: f64, m: f64) -> Result<Self> {
        let p = WsbParams { lambda, mu, sigma, m };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !self.mu.is_finite() {
            return Err(Error::Domain(format!("mu must be finite, got {}", self.mu)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Domain(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::Domain(format!("m must be positive, got {}", self.m)));
        }
        Ok(())
    }
}

/// Standard normal CDF, accurate to better than 1e-14 over the real line.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Cumulative count at elapsed time `t` (years). Defined for t >= 0; the
/// curve passes through zero at t = 0 (the CDF argument tends to -inf).
pub fn wsb_value(params: &WsbParams, t: f64) -> Result<f64> {
    params.validate()?;
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("t must be non-negative, got {t}")));
    }
    Ok(value_unchecked(params, t))
}

#[inline]
pub(crate) fn value_unchecked(params: &WsbParams, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let z = (t.ln() - params.mu) / params.sigma;
    params.m * ((params.lambda * normal_cdf(z)).exp() - 1.0)
}

/// Evaluates the curve over a grid of times.
pub fn wsb_counts(params: &WsbParams, t_grid: &[f64]) -> Result<Vec<f64>> {
    params.validate()?;
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain(format!("t must be non-negative, got {t}")));
        }
        out.push(value_unchecked(params, t));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Phi(x) by composite Simpson quadrature of the density, plus symmetry.
    /// Independent of the erfc route used in production code.
    fn normal_cdf_quadrature(x: f64) -> f64 {
        let (a, b, sign) = if x >= 0.0 { (0.0, x, 1.0) } else { (0.0, -x, -1.0) };
        let n = 4000; // even
        let h = (b - a) / n as f64;
        let pdf = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = pdf(a) + pdf(b);
        for i in 1..n {
            let u = a + i as f64 * h;
            acc += if i % 2 == 1 { 4.0 * pdf(u) } else { 2.0 * pdf(u) };
        }
        0.5 + sign * acc * h / 3.0
    }

    #[test]
    fn normal_cdf_matches_quadrature() {
        for &x in &[-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0] {
            let got = normal_cdf(x);
            let want = normal_cdf_quadrature(x);
            assert!(
                (got - want).abs() < 1e-12,
                "Phi({x}): got {got}, quadrature {want}"
            );
        }
        assert_abs_diff_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn normal_cdf_symmetry_and_tails() {
        for &x in &[0.1, 0.7, 1.3, 2.9, 5.0] {
            assert_abs_diff_eq!(normal_cdf(x) + normal_cdf(-x), 1.0, epsilon = 1e-14);
        }
        assert!(normal_cdf(-40.0) >= 0.0);
        assert!(normal_cdf(40.0) <= 1.0);
        assert!((normal_cdf(8.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn midpoint_value_is_exact() {
        // At t = e^mu the CDF argument is zero, so c = m*(e^(lambda/2) - 1).
        // With lambda = 2 and m = 30 that is 30*(e - 1).
        let p = WsbParams::new(2.0, 10.0f64.ln(), 1.0, 30.0).unwrap();
        let c = wsb_value(&p, 10.0).unwrap();
        assert_abs_diff_eq!(c, 51.548454853771354, epsilon = 1e-12);
    }

    #[test]
    fn curve_starts_at_zero_and_saturates() {
        let p = WsbParams::new(1.5, 1.0, 0.8, 30.0).unwrap();
        assert_eq!(wsb_value(&p, 0.0).unwrap(), 0.0);
        let c_inf = p.m * ((p.lambda).exp() - 1.0);
        let c_far = wsb_value(&p, 1e9).unwrap();
        assert_abs_diff_eq!(c_far, c_inf, epsilon = 1e-6);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(WsbParams::new(0.0, 0.0, 1.0, 30.0).is_err());
        assert!(WsbParams::new(1.0, 0.0, -1.0, 30.0).is_err());
        assert!(WsbParams::new(1.0, f64::NAN, 1.0, 30.0).is_err());
        assert!(WsbParams::new(1.0, 0.0, 1.0, 0.0).is_err());
        let p = WsbParams::new(1.0, 0.0, 1.0, 30.0).unwrap();
        assert!(wsb_value(&p, -1.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn curve_is_nondecreasing(
            lambda in 0.05f64..6.0,
            mu in -1.0f64..4.0,
            sigma in 0.1f64..3.0,
        ) {
            let p = WsbParams::new(lambda, mu, sigma, 30.0).unwrap();
            let grid: Vec<f64> = (0..=50).map(|t| t as f64).collect();
            let c = wsb_counts(&p, &grid).unwrap();
            for w in c.windows(2) {
                proptest::prop_assert!(w[1] >= w[0], "decreasing step: {} -> {}", w[0], w[1]);
            }
            proptest::prop_assert!(c[0] == 0.0);
        }
    }
}
