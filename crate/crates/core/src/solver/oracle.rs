//! Brute-force verification oracle: scan `tau` on a uniform grid, set the
//! sufficiency factors in closed form, and keep the best grid point. No
//! derivatives are used.

use super::{
    assemble, check_inputs, ln_eta_closed_form, ln_lambda_closed_form, max_norm, CalibrationResult,
    Candidate, Diagnostics, SolveMethod, SolverConfig, SolverError, TRIVIAL_TAU,
};
use crate::model::{cov_xr, residual_vector, EquationVariant, ModelParams};
use crate::moments::LogMoments;
use crate::Scalar;

/// One family of grid points: the sufficiency factors follow a closed-form
/// rule in `tau`, and one residual component is left free.
struct Branch<T> {
    points: Vec<Option<Candidate<T>>>,
    /// Index of the residual component not zeroed by construction.
    live: usize,
}

fn candidate<T: Scalar>(
    p: ModelParams<T>,
    m: &LogMoments<T>,
    v: EquationVariant,
) -> Option<Candidate<T>> {
    let residuals = residual_vector(&p, m, v).ok()?;
    residuals
        .iter()
        .all(|r| r.is_finite())
        .then_some(Candidate {
            x: [p.tau, p.ln_eta, p.ln_lambda],
            residuals,
            iterations: 0,
        })
}

/// Scans `tau` over `cfg.tau_bounds` at step `resolution`.
///
/// Sum form: `ln eta` and `ln lambda` from their closed forms. Product form:
/// two branches, `ln lambda = -ln beta` (which kills the Euler product) and
/// `ln lambda` solving the risk-free equation (which leaves the Euler bracket
/// free, so its zeros are located by the scan).
///
/// Among grid points adjacent to a sign change of the free residual, the one
/// with the smallest `tau` is returned, each sign change represented by its
/// endpoint with the smaller max-norm. Without any sign change the global
/// max-norm minimizer is returned. A resolution wider than the bounds scans
/// the single point at the lower bound.
pub fn grid_oracle<T: Scalar>(
    m: &LogMoments<T>,
    beta: T,
    v: EquationVariant,
    resolution: T,
    cfg: &SolverConfig<T>,
) -> Result<CalibrationResult<T>, SolverError> {
    check_inputs(m, beta, cfg)?;
    if !(resolution > T::zero()) {
        return Err(SolverError::InvalidConfig(format!(
            "resolution must be > 0, got {resolution}"
        )));
    }
    let (lo, hi) = cfg.tau_bounds;
    let steps = ((hi - lo) / resolution).floor().to_usize().unwrap_or(0);
    let grid: Vec<T> = (0..=steps)
        .map(|i| lo + resolution * T::from_count(i))
        .collect();

    let one = T::one();
    let ln_beta = beta.ln();
    let branches: Vec<Branch<T>> = match v {
        EquationVariant::Sum => vec![Branch {
            points: grid
                .iter()
                .map(|&tau| {
                    let p = ModelParams {
                        beta,
                        tau,
                        ln_eta: ln_eta_closed_form(tau, beta, m),
                        ln_lambda: ln_lambda_closed_form(tau, beta, m),
                    };
                    candidate(p, m, v)
                })
                .collect(),
            live: 1,
        }],
        EquationVariant::Product => vec![
            Branch {
                points: grid
                    .iter()
                    .map(|&tau| {
                        let p = ModelParams {
                            beta,
                            tau,
                            ln_eta: ln_eta_closed_form(tau, beta, m),
                            ln_lambda: -ln_beta,
                        };
                        candidate(p, m, v)
                    })
                    .collect(),
                live: 1,
            },
            Branch {
                points: grid
                    .iter()
                    .map(|&tau| {
                        let a = tau * cov_xr(m);
                        let coef = one - a;
                        if coef == T::zero() {
                            return None;
                        }
                        let ln_eta = ln_eta_closed_form(tau, beta, m);
                        let ln_lambda = (m.ln_mean_rf() * coef - m.ln_mean_re()
                            + ln_beta * a
                            + ln_eta * (one + a))
                            / coef;
                        candidate(
                            ModelParams {
                                beta,
                                tau,
                                ln_eta,
                                ln_lambda,
                            },
                            m,
                            v,
                        )
                    })
                    .collect(),
                live: 2,
            },
        ],
    };

    let nontrivial = |c: &Candidate<T>| c.x[0].abs() > T::lit(TRIVIAL_TAU);
    let mut crossings: Vec<Candidate<T>> = Vec::new();
    for branch in &branches {
        for w in branch.points.windows(2) {
            let (Some(a), Some(b)) = (w[0], w[1]) else {
                continue;
            };
            // g = tau h(tau) changes sign at the trivial root itself
            let straddles_zero = a.x[0] <= T::lit(TRIVIAL_TAU) && b.x[0] >= -T::lit(TRIVIAL_TAU);
            if straddles_zero {
                continue;
            }
            let (ra, rb) = (a.residuals[branch.live], b.residuals[branch.live]);
            if ra * rb < T::zero() || ra == T::zero() {
                let best = if max_norm(&a.residuals) <= max_norm(&b.residuals) {
                    a
                } else {
                    b
                };
                crossings.push(best);
            }
        }
    }
    crossings.sort_by(|a, b| {
        a.x[0]
            .partial_cmp(&b.x[0])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let all: Vec<Candidate<T>> = branches
        .iter()
        .flat_map(|b| b.points.iter().flatten().copied())
        .collect();
    let primary = match crossings.first() {
        Some(&c) => c,
        None => {
            let pool: Vec<Candidate<T>> = if all.iter().any(nontrivial) {
                all.iter().copied().filter(nontrivial).collect()
            } else {
                all.clone()
            };
            pool.into_iter()
                .min_by(|a, b| {
                    max_norm(&a.residuals)
                        .partial_cmp(&max_norm(&b.residuals))
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .ok_or_else(|| SolverError::InvalidConfig("grid produced no finite point".into()))?
        }
    };
    let diagnostics = Diagnostics {
        attempts: all.len(),
        ..Default::default()
    };
    let converged = max_norm(&primary.residuals) <= cfg.tol_residual;
    Ok(assemble(
        m,
        beta,
        v,
        SolveMethod::Grid,
        Candidate {
            iterations: grid.len(),
            ..primary
        },
        &crossings,
        converged,
        diagnostics,
    ))
}
