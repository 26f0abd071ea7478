//! Epidemic model of citation spread.
//!
//! Potential citers are susceptible, papers currently citing are infectious,
//! and papers done citing have recovered:
//!
//! ```text
//! dS/dt = -beta * S * I / N
//! dI/dt =  beta * S * I / N - gamma * I
//! dR/dt =  gamma * I
//! ```
//!
//! with N = S(0) + I(0). The cumulative citation count is everyone who has
//! left the susceptible pool, c(t) = S(0) - S(t). I(0) is pinned at 1 (the
//! paper itself starts the outbreak), which keeps the fit three-dimensional:
//! s0, beta, gamma.
//!
//! Integration is fourth-order Runge-Kutta with a fixed step. Each year is
//! subdivided into an even number of steps so integer years are hit exactly,
//! with no accumulated phase drift over a 50-year horizon.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The initially infectious mass: the paper itself.
pub const DEFAULT_I0: f64 = 1.0;

/// Default RK4 step, in years.
pub const DEFAULT_STEP_YEARS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    /// Initial susceptible pool, the paper's total relevant audience.
    pub s0: f64,
    /// Transmission rate per year.
    pub beta: f64,
    /// Recovery rate per year.
    pub gamma: f64,
    /// Initial infectious mass. Fixed at 1 when fitting.
    pub i0: f64,
}

impl SirParams {
    pub fn new(s0: f64, beta: f64, gamma: f64) -> Result<Self> {
        let p = SirParams { s0, beta, gamma, i0: DEFAULT_I0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("s0", self.s0), ("beta", self.beta), ("gamma", self.gamma), ("i0", self.i0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Total population N = S(0) + I(0), conserved along the trajectory.
    pub fn n(&self) -> f64 {
        self.s0 + self.i0
    }

    /// Basic reproduction number beta/gamma.
    pub fn r0(&self) -> f64 {
        self.beta / self.gamma
    }
}

/// One sampled point of the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirState {
    pub t: f64,
    pub s: f64,
    pub i: f64,
    pub r: f64,
}

#[inline]
fn rk4_step(s: &mut f64, i: &mut f64, r: &mut f64, h: f64, beta: f64, gamma: f64, inv_n: f64) {
    #[inline]
    fn deriv(s: f64, i: f64, beta: f64, gamma: f64, inv_n: f64) -> (f64, f64, f64) {
        let force = beta * s * i * inv_n;
        (-force, force - gamma * i, gamma * i)
    }
    let (k1s, k1i, k1r) = deriv(*s, *i, beta, gamma, inv_n);
    let (k2s, k2i, k2r) = deriv(*s + 0.5 * h * k1s, *i + 0.5 * h * k1i, beta, gamma, inv_n);
    let (k3s, k3i, k3r) = deriv(*s + 0.5 * h * k2s, *i + 0.5 * h * k2i, beta, gamma, inv_n);
    let (k4s, k4i, k4r) = deriv(*s + h * k3s, *i + h * k3i, beta, gamma, inv_n);
    let w = h / 6.0;
    *s += w * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
    *i += w * (k1i + 2.0 * k2i + 2.0 * k3i + k4i);
    *r += w * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
}

fn steps_per_year(step: f64) -> Result<usize> {
    if !(step > 0.0 && step.is_finite() && step <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "step must lie in (0, 1] years, got {step}"
        )));
    }
    Ok((1.0 / step).ceil() as usize)
}

/// Integrates the system from t = 0 to `horizon` years and returns the full
/// trajectory, sampled at every RK4 step. `step` is an upper bound on the
/// step actually taken: each year is cut into ceil(1/step) equal pieces so
/// that integer years are sampled exactly.
pub fn sir_integrate(params: &SirParams, horizon: f64, step: f64) -> Result<Vec<SirState>> {
    params.validate()?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidInput(format!("horizon must be non-negative, got {horizon}")));
    }
    let per_year = steps_per_year(step)?;
    let h = 1.0 / per_year as f64;

    let n = params.n();
    let inv_n = 1.0 / n;
    let (mut s, mut i, mut r) = (params.s0, params.i0, 0.0);

    let whole_years = horizon.floor() as usize;
    let frac = horizon - whole_years as f64;

    let mut out = Vec::with_capacity(whole_years * per_year + per_year + 1);
    out.push(SirState { t: 0.0, s, i, r });

    let record = |t: f64, s: f64, i: f64, r: f64, out: &mut Vec<SirState>| -> Result<()> {
        if !(s.is_finite() && i.is_finite() && r.is_finite()) {
            return Err(Error::Numerical(format!("trajectory diverged at t = {t}")));
        }
        debug_assert!(
            (s + i + r - n).abs() <= 1e-9 * n,
            "conservation violated at t = {t}: {}",
            (s + i + r - n).abs()
        );
        out.push(SirState { t, s, i, r });
        Ok(())
    };

    for year in 0..whole_years {
        for k in 1..=per_year {
            rk4_step(&mut s, &mut i, &mut r, h, params.beta, params.gamma, inv_n);
            // Pin sample times to exact year boundaries.
            let t = if k == per_year {
                (year + 1) as f64
            } else {
                year as f64 + k as f64 * h
            };
            record(t, s, i, r, &mut out)?;
        }
    }
    if frac > 0.0 {
        let sub = (frac / h).ceil().max(1.0) as usize;
        let hf = frac / sub as f64;
        for k in 1..=sub {
            rk4_step(&mut s, &mut i, &mut r, hf, params.beta, params.gamma, inv_n);
            let t = if k == sub {
                horizon
            } else {
                whole_years as f64 + k as f64 * hf
            };
            record(t, s, i, r, &mut out)?;
        }
    }
    Ok(out)
}

/// Fills `out` with S(0), S(1), ..., S(t_max) at integer years. This is the
/// lean path used inside fitting objectives: no trajectory is stored.
pub(crate) fn susceptibles_at_years_into(
    params: &SirParams,
    t_max: usize,
    step: f64,
    out: &mut Vec<f64>,
) -> Result<()> {
    let per_year = steps_per_year(step)?;
    let h = 1.0 / per_year as f64;
    let inv_n = 1.0 / params.n();
    let (mut s, mut i, mut r) = (params.s0, params.i0, 0.0);

    out.clear();
    out.push(s);
    for _ in 0..t_max {
        for _ in 0..per_year {
            rk4_step(&mut s, &mut i, &mut r, h, params.beta, params.gamma, inv_n);
        }
        if !s.is_finite() {
            return Err(Error::Numerical("trajectory diverged".into()));
        }
        out.push(s);
    }
    Ok(())
}

/// Cumulative counts on the integer-year grid 0..=t_max, without storing the
/// dense trajectory. Equivalent to sampling [`sir_counts`] at whole years.
pub fn sir_counts_at_years(params: &SirParams, t_max: usize, step: f64) -> Result<Vec<f64>> {
    params.validate()?;
    let mut s = Vec::with_capacity(t_max + 1);
    susceptibles_at_years_into(params, t_max, step, &mut s)?;
    Ok(s.iter().map(|&v| (params.s0 - v).max(0.0)).collect())
}

/// Cumulative counts c(t) = S(0) - S(t) over a grid of times (years).
/// Non-integer grid points are linearly interpolated between RK4 samples,
/// which at the default step introduces error far below the integration
/// tolerance; integer grid points are exact samples.
pub fn sir_counts(params: &SirParams, t_grid: &[f64]) -> Result<Vec<f64>> {
    params.validate()?;
    for &t in t_grid {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("t must be non-negative, got {t}")));
        }
    }
    if t_grid.is_empty() {
        return Ok(Vec::new());
    }
    let t_max = t_grid.iter().cloned().fold(0.0f64, f64::max);
    if t_max == 0.0 {
        return Ok(vec![0.0; t_grid.len()]);
    }
    let traj = sir_integrate(params, t_max, DEFAULT_STEP_YEARS)?;
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let idx = traj.partition_point(|st| st.t < t);
        let s_t = if idx == 0 {
            traj[0].s
        } else if idx >= traj.len() {
            traj[traj.len() - 1].s
        } else if traj[idx].t == t {
            traj[idx].s
        } else {
            let (a, b) = (&traj[idx - 1], &traj[idx]);
            let w = (t - a.t) / (b.t - a.t);
            a.s + w * (b.s - a.s)
        };
        out.push((params.s0 - s_t).max(0.0));
    }
    Ok(out)
}

/// Limit of the cumulative count as t grows without bound.
///
/// S(inf) satisfies the classical final-size relation
/// `ln(S_inf / S0) = (beta/gamma) * (S_inf - N) / N`, which has exactly one
/// root in (0, S0); it is found here by bisection to full precision. The
/// returned value is S0 - S_inf. Entirely independent of the RK4 path, so it
/// doubles as a consistency check on long integrations.
pub fn final_size(params: &SirParams) -> Result<f64> {
    params.validate()?;
    let n = params.n();
    let r0 = params.r0();
    let f = |s_inf: f64| (s_inf / params.s0).ln() - r0 * (s_inf - n) / n;
    let mut lo = params.s0 * 1e-300;
    let mut hi = params.s0;
    debug_assert!(f(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(params.s0 - 0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn template() -> SirParams {
        SirParams::new(500.0, 0.35, 0.07).unwrap()
    }

    #[test]
    fn mass_is_conserved_along_trajectory() {
        let p = template();
        let n = p.n();
        let traj = sir_integrate(&p, 50.0, DEFAULT_STEP_YEARS).unwrap();
        let worst = traj
            .iter()
            .map(|st| (st.s + st.i + st.r - n).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-9 * n, "max conservation error {worst}");
        assert_eq!(traj.len(), 50 * 100 + 1);
    }

    #[test]
    fn integer_years_are_sampled_exactly() {
        let p = template();
        let traj = sir_integrate(&p, 50.0, DEFAULT_STEP_YEARS).unwrap();
        for year in 0..=50 {
            let found = traj.iter().any(|st| st.t == year as f64);
            assert!(found, "year {year} missing from trajectory");
        }
    }

    #[test]
    fn step_halving_changes_nothing_material() {
        // RK4 is O(h^4): halving an already-small step must leave the
        // endpoint essentially unchanged.
        let p = template();
        let coarse = sir_counts(&p, &[50.0]).unwrap()[0];
        let fine = {
            let traj = sir_integrate(&p, 50.0, DEFAULT_STEP_YEARS / 2.0).unwrap();
            p.s0 - traj.last().unwrap().s
        };
        assert!(
            (coarse - fine).abs() < 1e-8,
            "step halving moved c(50) by {}",
            (coarse - fine).abs()
        );
    }

    #[test]
    fn long_run_count_matches_final_size_relation() {
        let p = template();
        let predicted = final_size(&p).unwrap();
        let integrated = sir_counts(&p, &[2000.0]).unwrap()[0];
        assert!(
            (predicted - integrated).abs() < 1e-6 * p.n(),
            "final size {predicted} vs integrated {integrated}"
        );
    }

    #[test]
    fn year_grid_shortcut_matches_dense_sampling() {
        let p = template();
        let grid: Vec<f64> = (0..=50).map(|t| t as f64).collect();
        let dense = sir_counts(&p, &grid).unwrap();
        let lean = sir_counts_at_years(&p, 50, DEFAULT_STEP_YEARS).unwrap();
        assert_eq!(dense.len(), lean.len());
        for (a, b) in dense.iter().zip(&lean) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn subcritical_outbreak_stays_small() {
        let p = SirParams::new(1000.0, 0.05, 0.5).unwrap(); // R0 = 0.1
        let c = sir_counts(&p, &[50.0]).unwrap()[0];
        assert!(c < 0.05 * p.s0, "subcritical outbreak reached {c}");

        let q = SirParams::new(1000.0, 0.5, 0.05).unwrap(); // R0 = 10
        let c = sir_counts(&q, &[50.0]).unwrap()[0];
        assert!(c > 0.9 * q.s0, "supercritical outbreak only reached {c}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SirParams::new(0.0, 1.0, 1.0).is_err());
        assert!(SirParams::new(10.0, -1.0, 1.0).is_err());
        assert!(SirParams::new(10.0, 1.0, 0.0).is_err());
        let p = template();
        assert!(sir_integrate(&p, -1.0, 0.01).is_err());
        assert!(sir_integrate(&p, 10.0, 0.0).is_err());
        assert!(sir_integrate(&p, 10.0, 2.0).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn counts_are_nondecreasing_and_bounded(
            s0 in 5.0f64..2000.0,
            beta in 0.05f64..2.0,
            gamma in 0.02f64..1.0,
        ) {
            let p = SirParams::new(s0, beta, gamma).unwrap();
            let grid: Vec<f64> = (0..=50).map(|t| t as f64).collect();
            let c = sir_counts(&p, &grid).unwrap();
            proptest::prop_assert!(c[0] == 0.0);
            for w in c.windows(2) {
                proptest::prop_assert!(w[1] >= w[0] - 1e-9, "decreasing: {} -> {}", w[0], w[1]);
            }
            proptest::prop_assert!(*c.last().unwrap() <= s0 + 1e-9);
        }
    }
}
