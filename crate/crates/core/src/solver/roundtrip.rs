//! Random construct-then-calibrate cycles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{calibrate, construct_solvable_moments, reduced_quadratic, SolverConfig, SolverError};
use crate::jsonfmt::{self, JsonObject};
use crate::model::EquationVariant;
use crate::moments::LogMoments;
use crate::Scalar;

/// Recovery error above which a cycle counts as failed.
pub const RECOVERY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RoundtripCase<T> {
    pub tau: T,
    pub eta: T,
    pub lambda_: T,
    pub beta: T,
    pub base: LogMoments<T>,
}

/// Minimum distance between the target and the companion root.
pub const ROOT_GAP: f64 = 0.5;

/// Draws a target and a base moment set whose return moments are those of
/// `r = k x`, redrawing until the target is identifiable: the
/// smallest positive nontrivial root, at least [`ROOT_GAP`] from the other one
/// (see [`nontrivial_roots`]).
pub fn random_case<T: Scalar, R: Rng>(rng: &mut R) -> RoundtripCase<T> {
    loop {
        let case: RoundtripCase<T> = draw_case(rng);
        let Ok(m) =
            construct_solvable_moments(case.tau, case.eta, case.lambda_, case.beta, &case.base)
        else {
            continue;
        };
        // the companion root is whichever of the two lies farther from the target
        let ok = match nontrivial_roots(case.beta, &m) {
            Some((r1, r2)) => {
                let other = if (r1 - case.tau).abs() > (r2 - case.tau).abs() {
                    r1
                } else {
                    r2
                };
                !(other > T::zero() && other < case.tau)
                    && (other - case.tau).abs() > T::lit(ROOT_GAP)
            }
            None => false,
        };
        if ok {
            return case;
        }
    }
}

/// The reduced residual is `tau * h(tau)` with `h` quadratic, so the sum-form
/// system has at most two nontrivial roots. Returns the real roots of `h` in
/// ascending order (see [`reduced_quadratic`]); `None` when they are
/// complex or `h` is numerically linear.
pub fn nontrivial_roots<T: Scalar>(beta: T, m: &LogMoments<T>) -> Option<(T, T)> {
    let (a, b, c) = reduced_quadratic(beta, m);
    if a.abs() <= T::epsilon() * (b.abs() + c.abs()) {
        return None;
    }
    let disc = b * b - T::lit(4.0) * a * c;
    if disc < T::zero() {
        return None;
    }
    let s = disc.sqrt();
    let r1 = (-b - s) / (T::two() * a);
    let r2 = (-b + s) / (T::two() * a);
    Some((r1.min(r2), r1.max(r2)))
}

fn draw_case<T: Scalar, R: Rng>(rng: &mut R) -> RoundtripCase<T> {
    let mu_x = rng.random_range(0.005..0.03);
    let sigma_x: f64 = rng.random_range(0.02..0.06);
    let sigma_k: f64 = rng.random_range(0.05..0.2);
    let rho_xk: f64 = rng.random_range(-0.5..0.5);
    let mu_k = rng.random_range(-0.02..0.04);
    let c = rho_xk * sigma_x * sigma_k;
    let sigma2_r = sigma_x * sigma_x + sigma_k * sigma_k + 2.0 * c;
    let rho_xr = (sigma_x * sigma_x + c) / (sigma_x * sigma2_r.sqrt());
    let base = LogMoments {
        mu_x: T::lit(mu_x),
        sigma2_x: T::lit(sigma_x * sigma_x),
        mu_k: T::lit(mu_k),
        sigma2_k: T::lit(sigma_k * sigma_k),
        mu_r: T::lit(mu_x + mu_k),
        sigma2_r: T::lit(sigma2_r),
        rho_xk: T::lit(rho_xk),
        rho_xr: T::lit(rho_xr),
        mean_re_gross: T::lit(1.07),
        mean_rf_gross: T::lit(1.01),
        n_obs: 89,
    };
    RoundtripCase {
        tau: T::lit(rng.random_range(1.0..8.0)),
        eta: T::lit(rng.random_range(0.95..1.15)),
        lambda_: T::lit(rng.random_range(0.95..1.1)),
        beta: T::lit(rng.random_range(0.9..1.0)),
        base,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundtripOutcome<T> {
    pub case: RoundtripCase<T>,
    pub recovered: Option<(T, T, T)>,
    /// Max absolute error over `(tau, eta, lambda)`; infinite when the
    /// calibration did not converge.
    pub error: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundtripReport<T> {
    pub seed: u64,
    pub outcomes: Vec<RoundtripOutcome<T>>,
}

impl<T: Scalar> RoundtripReport<T> {
    pub fn max_error(&self) -> T {
        self.outcomes.iter().fold(T::zero(), |acc, o| {
            if o.error.is_nan() {
                T::infinity()
            } else {
                acc.max(o.error)
            }
        })
    }

    pub fn failures(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| !(o.error < T::lit(RECOVERY_TOLERANCE)))
            .count()
    }

    pub fn json_object(&self) -> JsonObject {
        let cases: Vec<String> = self
            .outcomes
            .iter()
            .map(|o| {
                let (t, e, l) = o.recovered.unwrap_or((T::nan(), T::nan(), T::nan()));
                JsonObject::new()
                    .num("tau_star", o.case.tau)
                    .num("eta_star", o.case.eta)
                    .num("lambda_star", o.case.lambda_)
                    .num("beta", o.case.beta)
                    .num("tau", t)
                    .num("eta", e)
                    .num("lambda_", l)
                    .num("error", o.error)
                    .render()
            })
            .collect();
        JsonObject::new()
            .int("seed", self.seed as i64)
            .int("count", self.outcomes.len() as i64)
            .num("max_error", self.max_error())
            .num("tolerance", T::lit(RECOVERY_TOLERANCE))
            .int("failures", self.failures() as i64)
            .raw("cases", jsonfmt::array(&cases))
    }
}

/// Runs one cycle: construct moments with the case's root, then calibrate
/// the sum form.
pub fn run_case<T: Scalar>(
    case: &RoundtripCase<T>,
    cfg: &SolverConfig<T>,
) -> Result<RoundtripOutcome<T>, SolverError> {
    let m = construct_solvable_moments(case.tau, case.eta, case.lambda_, case.beta, &case.base)?;
    let res = calibrate(&m, case.beta, EquationVariant::Sum, cfg)?;
    let (recovered, error) = if res.converged {
        let err = (res.tau - case.tau)
            .abs()
            .max((res.eta - case.eta).abs())
            .max((res.lambda_ - case.lambda_).abs());
        (Some((res.tau, res.eta, res.lambda_)), err)
    } else {
        (None, T::infinity())
    };
    Ok(RoundtripOutcome {
        case: case.clone(),
        recovered,
        error,
    })
}

/// `count` cycles from a ChaCha8 stream seeded with `seed`.
pub fn run_roundtrip<T: Scalar>(
    count: usize,
    seed: u64,
    cfg: &SolverConfig<T>,
) -> Result<RoundtripReport<T>, SolverError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<RoundtripCase<T>> = (0..count).map(|_| random_case(&mut rng)).collect();
    let outcomes = cases
        .iter()
        .map(|c| run_case(c, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RoundtripReport { seed, outcomes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifty_cycles_recover() {
        let r = run_roundtrip::<f64>(50, 7, &SolverConfig::default()).unwrap();
        assert_eq!(r.failures(), 0, "max error {}", r.max_error());
        assert!(r.max_error() < RECOVERY_TOLERANCE);
    }

    #[test]
    fn fitted_roots_contain_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let c: RoundtripCase<f64> = random_case(&mut rng);
            let m = construct_solvable_moments(c.tau, c.eta, c.lambda_, c.beta, &c.base).unwrap();
            let (r1, r2) = nontrivial_roots(c.beta, &m).unwrap();
            let near = (r1 - c.tau).abs().min((r2 - c.tau).abs());
            assert!(near < 1e-6, "{r1} {r2} vs {}", c.tau);
        }
    }

    #[test]
    fn report_is_deterministic() {
        let cfg = SolverConfig::default();
        let a = run_roundtrip::<f64>(5, 11, &cfg)
            .unwrap()
            .json_object()
            .render();
        let b = run_roundtrip::<f64>(5, 11, &cfg)
            .unwrap()
            .json_object()
            .render();
        assert_eq!(a, b);
    }
}
