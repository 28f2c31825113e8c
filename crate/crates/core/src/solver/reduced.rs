//! Scalar reduction of the sum-form system.

use super::{
    assemble, check_inputs, ln_eta_closed_form, ln_lambda_closed_form, max_norm, select_roots,
    CalibrationResult, Candidate, Diagnostics, SolveMethod, SolverConfig, SolverError, TRIVIAL_TAU,
};
use crate::model::{residual_eq3, residual_vector, EquationVariant, ModelParams};
use crate::moments::LogMoments;
use crate::Scalar;

/// Parameters on the reduced curve: `ln eta` and `ln lambda` from their
/// closed forms at `tau`.
pub fn reduced_params<T: Scalar>(tau: T, beta: T, m: &LogMoments<T>) -> ModelParams<T> {
    ModelParams {
        beta,
        tau,
        ln_eta: ln_eta_closed_form(tau, beta, m),
        ln_lambda: ln_lambda_closed_form(tau, beta, m),
    }
}

/// The risk-free residual along the reduced curve. Its zeros in `tau` are
/// exactly the solutions of the sum-form system.
pub fn reduced_residual<T: Scalar>(tau: T, beta: T, m: &LogMoments<T>) -> T {
    residual_eq3(&reduced_params(tau, beta, m), m).unwrap_or_else(|_| T::nan())
}

/// Coefficients `(a, b, c)` of `h(tau) = a tau^2 + b tau + c`, where the
/// reduced residual is `tau * h(tau)`. Fitted from `h` at `tau = 1, 2, 3`.
pub fn reduced_quadratic<T: Scalar>(beta: T, m: &LogMoments<T>) -> (T, T, T) {
    let h = |t: f64| reduced_residual(T::lit(t), beta, m) / T::lit(t);
    let (h1, h2, h3) = (h(1.0), h(2.0), h(3.0));
    let a = (h3 - T::two() * h2 + h1) / T::two();
    let b = h2 - h1 - T::lit(3.0) * a;
    (a, b, h1 - a - b)
}

/// Brent's method on a bracket `[a, b]` with `f(a) * f(b) <= 0`. Returns the
/// root and the number of function evaluations.
pub fn brent<T: Scalar, F: Fn(T) -> T>(
    f: F,
    mut a: T,
    mut b: T,
    xtol: T,
    max_iter: usize,
) -> Option<(T, usize)> {
    let two = T::two();
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == T::zero() {
        return Some((a, 1));
    }
    if fb == T::zero() {
        return Some((b, 2));
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for iter in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = two * T::epsilon() * b.abs() + T::half() * xtol;
        let mid = T::half() * (c - b);
        if mid.abs() <= tol || fb == T::zero() {
            return Some((b, iter + 2));
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            // interpolation: secant or inverse quadratic
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * mid * s;
                q = T::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * mid * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            let min1 = T::lit(3.0) * mid * q - (tol * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = mid;
                e = d;
            }
        } else {
            d = mid;
            e = d;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol {
            b + d
        } else {
            b + tol * mid.signum()
        };
        fb = f(b);
    }
    Some((b, max_iter + 2))
}

/// Sum-form calibration through the scalar reduction.
///
/// The scan points are the configured starts, the two bounds (moved inward
/// slightly, since the bounds are open and the trivial root sits at
/// `tau = 0`) and the vertex of [`reduced_quadratic`], which separates the
/// two nontrivial roots when they share a scan cell. Every sign change is
/// refined with [`brent`].
pub fn calibrate_reduced<T: Scalar>(
    m: &LogMoments<T>,
    beta: T,
    cfg: &SolverConfig<T>,
) -> Result<CalibrationResult<T>, SolverError> {
    check_inputs(m, beta, cfg)?;
    let (lo, hi) = cfg.tau_bounds;
    let nudge = (hi - lo) * T::lit(1e-7);
    let mut points = vec![lo + nudge];
    points.extend(cfg.tau_starts.iter().copied());
    points.push(hi - nudge);
    let (a, b, _) = reduced_quadratic(beta, m);
    let vertex = -b / (T::two() * a);
    if vertex.is_finite() && vertex > lo + nudge && vertex < hi - nudge {
        points.push(vertex);
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    points.dedup();

    let g = |tau: T| reduced_residual(tau, beta, m);
    let values: Vec<T> = points.iter().map(|&t| g(t)).collect();

    let mut diagnostics = Diagnostics::default();
    let mut candidates = Vec::new();
    let xtol = T::epsilon() * T::lit(4.0);
    for i in 0..points.len() - 1 {
        let (ga, gb) = (values[i], values[i + 1]);
        let exact_interior = ga == T::zero() && i > 0;
        if !(ga * gb < T::zero() || exact_interior) {
            continue;
        }
        diagnostics.attempts += 1;
        let Some((tau, evals)) = brent(g, points[i], points[i + 1], xtol, cfg.max_iter) else {
            continue;
        };
        if tau.abs() <= T::lit(TRIVIAL_TAU) {
            diagnostics.rejected_trivial += 1;
            continue;
        }
        let p = reduced_params(tau, beta, m);
        let residuals = residual_vector(&p, m, EquationVariant::Sum)?;
        if max_norm(&residuals) <= cfg.tol_residual {
            diagnostics.converged_attempts += 1;
        }
        candidates.push(Candidate {
            x: [p.tau, p.ln_eta, p.ln_lambda],
            residuals,
            iterations: evals,
        });
    }
    if candidates.is_empty() {
        return Err(SolverError::NoRoot {
            scanned: points
                .iter()
                .zip(&values)
                .map(|(&t, &v)| (t.to_f64_lossy(), v.to_f64_lossy()))
                .collect(),
        });
    }
    let roots = select_roots(candidates, cfg.tol_residual);
    let primary = roots[0];
    let converged = max_norm(&primary.residuals) <= cfg.tol_residual;
    let converged_roots: Vec<_> = roots
        .iter()
        .copied()
        .filter(|c| max_norm(&c.residuals) <= cfg.tol_residual)
        .collect();
    Ok(assemble(
        m,
        beta,
        EquationVariant::Sum,
        SolveMethod::Reduced,
        primary,
        &converged_roots,
        converged,
        diagnostics,
    ))
}
