//! Inverse problem: moments for which a chosen `(tau, eta, lambda)` solves
//! the sum-form system.

use super::SolverError;
use crate::model::{cov_xr, euler_bracket, premium_terms, validate_beta, ModelError};
use crate::moments::LogMoments;
use crate::Scalar;

/// Returns a copy of `base` with `mu_k`, `mean_re_gross` and `mean_rf_gross`
/// replaced so that the residual vector vanishes at
/// `(tau_star, ln eta_star, ln lambda_star)`.
///
/// `mu_k` is set from the Euler condition, the log premium
/// `ln E(Re) - ln Rf` from the equity-premium equation, and `ln Rf` from the
/// risk-free equation. The last step divides by `tau * rho_xr * sigma_x *
/// sigma_r`: adding the three residuals gives
/// `tau * [d (ln beta + ln lambda + ln eta - ln Rf) - sigma_x^2 - rho_xk sigma_x sigma_k]`
/// with `d = rho_xr sigma_x sigma_r`, so `ln Rf` is pinned only when
/// `tau * d != 0`. At `tau = 0` any `ln Rf` works and the base value is kept;
/// for `tau != 0` with `d = 0` no moments exist and a singularity error is
/// returned.
pub fn construct_solvable_moments<T: Scalar>(
    tau_star: T,
    eta_star: T,
    lambda_star: T,
    beta: T,
    base: &LogMoments<T>,
) -> Result<LogMoments<T>, SolverError> {
    validate_beta(beta)?;
    for (name, v) in [("eta_star", eta_star), ("lambda_star", lambda_star)] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(ModelError::NonPositive {
                name,
                value: v.to_f64_lossy(),
            }
            .into());
        }
    }
    if !tau_star.is_finite() {
        return Err(ModelError::NonFinite("tau_star").into());
    }
    let fields = [
        ("mu_x", base.mu_x),
        ("sigma2_x", base.sigma2_x),
        ("sigma2_k", base.sigma2_k),
        ("sigma2_r", base.sigma2_r),
        ("rho_xk", base.rho_xk),
        ("rho_xr", base.rho_xr),
    ];
    for (name, v) in fields {
        if !v.is_finite() {
            return Err(ModelError::NonFinite(name).into());
        }
    }

    let one = T::one();
    let (ln_beta, ln_eta, ln_lambda) = (beta.ln(), eta_star.ln(), lambda_star.ln());
    let mut m = *base;

    m.mu_k = T::zero();
    m.mu_k = -(ln_beta + ln_lambda) - euler_bracket(tau_star, &m);

    let premium = premium_terms(tau_star, &m) + ln_beta + ln_eta;

    let a = tau_star * cov_xr(&m);
    let ln_rf = if tau_star == T::zero() {
        if !(base.mean_rf_gross > T::zero()) {
            return Err(ModelError::NonPositive {
                name: "mean_rf_gross",
                value: base.mean_rf_gross.to_f64_lossy(),
            }
            .into());
        }
        base.mean_rf_gross.ln()
    } else {
        let rhs3 = -ln_beta * a + ln_lambda * (one - a) - ln_eta * (one + a);
        -(rhs3 + premium) / a
    };
    // exp must stay finite for both gross means
    let limit = T::max_value().ln() - premium.abs();
    if a == T::zero() && tau_star != T::zero() || !ln_rf.is_finite() || ln_rf.abs() >= limit {
        return Err(SolverError::Singular(format!(
            "tau * rho_xr * sigma_x * sigma_r = {a} at tau = {tau_star}; \
             the risk-free equation cannot pin ln Rf"
        )));
    }
    m.mean_rf_gross = ln_rf.exp();
    m.mean_re_gross = (ln_rf + premium).exp();
    Ok(m)
}
