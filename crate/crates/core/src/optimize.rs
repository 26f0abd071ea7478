//! Derivative-free simplex minimization.
//!
//! The models in this crate expose smooth but non-convex least-squares
//! objectives in two or three dimensions, so a plain Nelder-Mead search with
//! multiple starting points is the workhorse everywhere a fit happens. The
//! implementation follows the classic fminsearch conventions: reflection 1.0,
//! expansion 2.0, contraction 0.5, shrink 0.5, and an initial simplex built by
//! perturbing each coordinate of the start point by 5 percent (or by 0.00025
//! where the coordinate is exactly zero).

/// Tuning knobs for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    /// Hard cap on iterations of the outer reflect/expand/contract loop.
    pub max_iters: usize,
    /// Converged once the relative spread of the simplex, in both coordinates
    /// and function values, drops below this.
    pub tol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead { max_iters: 2000, tol: 1e-8 }
    }
}

/// Outcome of a single simplex run.
#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iters: usize,
    pub fn_evals: usize,
    pub converged: bool,
}

/// Minimizes `f` starting from `x0`.
///
/// The objective may return NaN for out-of-domain points; such values are
/// treated as positively infinite so the simplex backs away from them.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMead) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(n > 0, "objective must have at least one coordinate");

    let mut evals = 0usize;
    let eval = |f: &mut F, x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // Initial simplex: x0 plus one vertex per coordinate.
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        if v[i] != 0.0 {
            v[i] *= 1.05;
        } else {
            v[i] = 0.00025;
        }
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex
        .iter()
        .map(|v| eval(&mut f, v, &mut evals))
        .collect();

    let mut centroid = vec![0.0; n];
    let mut reflected = vec![0.0; n];
    let mut trial = vec![0.0; n];

    let mut iters = 0usize;
    let mut converged = false;

    while iters < opts.max_iters {
        iters += 1;

        // Order vertices best to worst.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        // Relative simplex diameter, fminsearch style.
        let mut max_dx: f64 = 0.0;
        let mut max_df: f64 = 0.0;
        for &i in &order[1..] {
            for (a, b) in simplex[i].iter().zip(&simplex[best]) {
                max_dx = max_dx.max((a - b).abs());
            }
            max_df = max_df.max((values[i] - values[best]).abs());
        }
        let scale_x = 1.0f64.max(simplex[best].iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let scale_f = 1.0f64.max(values[best].abs());
        if max_dx / scale_x < opts.tol && max_df / scale_f < opts.tol {
            converged = true;
            break;
        }

        // Centroid of all vertices except the worst.
        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in order.iter().take(n) {
            for j in 0..n {
                centroid[j] += simplex[i][j];
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }

        for j in 0..n {
            reflected[j] = centroid[j] + (centroid[j] - simplex[worst][j]);
        }
        let f_reflected = eval(&mut f, &reflected, &mut evals);

        if f_reflected < values[best] {
            // Try expanding past the reflection.
            for j in 0..n {
                trial[j] = centroid[j] + 2.0 * (centroid[j] - simplex[worst][j]);
            }
            let f_expanded = eval(&mut f, &trial, &mut evals);
            if f_expanded < f_reflected {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = f_expanded;
            } else {
                simplex[worst].copy_from_slice(&reflected);
                values[worst] = f_reflected;
            }
        } else if f_reflected < values[second_worst] {
            simplex[worst].copy_from_slice(&reflected);
            values[worst] = f_reflected;
        } else {
            // Contract toward the better of the worst vertex and its reflection.
            let (anchor, f_anchor) = if f_reflected < values[worst] {
                (&reflected, f_reflected)
            } else {
                (&simplex[worst], values[worst])
            };
            for j in 0..n {
                trial[j] = centroid[j] + 0.5 * (anchor[j] - centroid[j]);
            }
            let f_contracted = eval(&mut f, &trial, &mut evals);
            if f_contracted < f_anchor {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = f_contracted;
            } else {
                // Shrink every vertex toward the best.
                let best_point = simplex[best].clone();
                for i in 0..=n {
                    if i == best {
                        continue;
                    }
                    for j in 0..n {
                        simplex[i][j] = best_point[j] + 0.5 * (simplex[i][j] - best_point[j]);
                    }
                    values[i] = eval(&mut f, &simplex[i].clone(), &mut evals);
                }
            }
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iters,
        fn_evals: evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic_bowl() {
        let m = nelder_mead(
            |x| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2),
            &[0.0, 0.0],
            &NelderMead::default(),
        );
        assert!(m.converged);
        assert!((m.x[0] - 3.0).abs() < 1e-6, "x0 = {}", m.x[0]);
        assert!((m.x[1] + 1.0).abs() < 1e-6, "x1 = {}", m.x[1]);
        assert!(m.value < 1e-10);
    }

    #[test]
    fn minimizes_rosenbrock() {
        let m = nelder_mead(
            |x| {
                let a = 1.0 - x[0];
                let b = x[1] - x[0] * x[0];
                a * a + 100.0 * b * b
            },
            &[-1.2, 1.0],
            &NelderMead { max_iters: 5000, tol: 1e-10 },
        );
        assert!(m.converged, "did not converge in {} iters", m.iters);
        assert!((m.x[0] - 1.0).abs() < 1e-4);
        assert!((m.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn nan_regions_are_avoided() {
        // Objective undefined for x < 0; minimum sits at x = 2.
        let m = nelder_mead(
            |x| {
                if x[0] < 0.0 {
                    f64::NAN
                } else {
                    (x[0].sqrt() - 2.0f64.sqrt()).powi(2)
                }
            },
            &[5.0],
            &NelderMead::default(),
        );
        assert!((m.x[0] - 2.0).abs() < 1e-5, "x = {}", m.x[0]);
    }

    #[test]
    fn one_dimensional_works() {
        let m = nelder_mead(|x| (x[0] - 7.5).powi(2), &[0.0], &NelderMead::default());
        assert!((m.x[0] - 7.5).abs() < 1e-6);
    }

    #[test]
    fn respects_iteration_cap() {
        let m = nelder_mead(
            |x| x.iter().map(|v| v * v).sum(),
            &[100.0, 100.0, 100.0],
            &NelderMead { max_iters: 3, tol: 1e-12 },
        );
        assert!(!m.converged);
        assert_eq!(m.iters, 3);
    }
}
