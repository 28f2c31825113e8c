//! The three calibration equations as residual functions, and the lognormal
//! identities they are built from.
//!
//! With `d = rho_xr * sigma_x * sigma_r` and `a = tau * d`:
//!
//! * equity premium: `ln E(Re) - ln Rf = mu_x (1 - tau) + sigma_x^2 (1 + tau^2) / 2
//!   + mu_k + sigma_k^2 / 2 + rho_xk sigma_x sigma_k + ln beta + ln eta`
//! * risk-free/covariance: `ln Rf (1 - a) - ln E(Re) = -ln beta * a
//!   + ln lambda (1 - a) - ln eta (1 + a)`
//! * equity Euler condition: `0 = (ln beta + ln lambda) + B(tau)` (sum form)
//!   or `0 = (ln beta + ln lambda) * B(tau)` (product form), where
//!   `B(tau) = (1 - tau) mu_x + mu_k + sigma_x^2 (1 - tau)^2 / 2 + sigma_k^2 / 2
//!   + (1 - tau) rho_xk sigma_x sigma_k`.
//!
//! Each residual is `LHS - RHS`.

use thiserror::Error;

use crate::moments::LogMoments;
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("domain error: `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("domain error: beta must lie in (0, 1], got {0}")]
    Beta(f64),
    #[error("domain error: `{name}` must be > 0, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// Point at which the residuals are evaluated. The sufficiency factors are
/// carried as logs so they are positive by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    pub beta: T,
    pub tau: T,
    pub ln_eta: T,
    pub ln_lambda: T,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(beta: T, tau: T, ln_eta: T, ln_lambda: T) -> Result<Self, ModelError> {
        let p = Self {
            beta,
            tau,
            ln_eta,
            ln_lambda,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters from the sufficiency factors themselves.
    pub fn from_levels(beta: T, tau: T, eta: T, lambda: T) -> Result<Self, ModelError> {
        for (name, value) in [("eta", eta), ("lambda", lambda)] {
            if !(value > T::zero()) {
                return Err(ModelError::NonPositive {
                    name,
                    value: value.to_f64_lossy(),
                });
            }
        }
        Self::new(beta, tau, eta.ln(), lambda.ln())
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        validate_beta(self.beta)?;
        for (name, v) in [
            ("tau", self.tau),
            ("ln_eta", self.ln_eta),
            ("ln_lambda", self.ln_lambda),
        ] {
            if !v.is_finite() {
                return Err(ModelError::NonFinite(name));
            }
        }
        Ok(())
    }

    pub fn eta(&self) -> T {
        self.ln_eta.exp()
    }

    pub fn lambda(&self) -> T {
        self.ln_lambda.exp()
    }
}

pub fn validate_beta<T: Scalar>(beta: T) -> Result<(), ModelError> {
    if !beta.is_finite() {
        return Err(ModelError::NonFinite("beta"));
    }
    if !(beta > T::zero() && beta <= T::one()) {
        return Err(ModelError::Beta(beta.to_f64_lossy()));
    }
    Ok(())
}

/// Which form of the equity Euler condition to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum EquationVariant {
    /// `(ln beta + ln lambda) + B(tau)`: the log of the lognormal Euler
    /// condition.
    #[default]
    Sum,
    /// `(ln beta + ln lambda) * B(tau)`.
    Product,
}

impl EquationVariant {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sum => "sum",
            Self::Product => "product",
        }
    }
}

impl std::str::FromStr for EquationVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sum" => Ok(Self::Sum),
            "product" => Ok(Self::Product),
            other => Err(format!("unknown variant `{other}` (expected sum|product)")),
        }
    }
}

fn check_moments<T: Scalar>(m: &LogMoments<T>) -> Result<(), ModelError> {
    let fields = [
        ("mu_x", m.mu_x),
        ("sigma2_x", m.sigma2_x),
        ("mu_k", m.mu_k),
        ("sigma2_k", m.sigma2_k),
        ("sigma2_r", m.sigma2_r),
        ("rho_xk", m.rho_xk),
        ("rho_xr", m.rho_xr),
        ("mean_re_gross", m.mean_re_gross),
        ("mean_rf_gross", m.mean_rf_gross),
    ];
    for (name, v) in fields {
        if !v.is_finite() {
            return Err(ModelError::NonFinite(name));
        }
    }
    for (name, v) in [
        ("mean_re_gross", m.mean_re_gross),
        ("mean_rf_gross", m.mean_rf_gross),
    ] {
        if v <= T::zero() {
            return Err(ModelError::NonPositive {
                name,
                value: v.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

fn check_params<T: Scalar>(p: &ModelParams<T>) -> Result<(), ModelError> {
    for (name, v) in [
        ("beta", p.beta),
        ("tau", p.tau),
        ("ln_eta", p.ln_eta),
        ("ln_lambda", p.ln_lambda),
    ] {
        if !v.is_finite() {
            return Err(ModelError::NonFinite(name));
        }
    }
    if p.beta <= T::zero() {
        return Err(ModelError::NonPositive {
            name: "beta",
            value: p.beta.to_f64_lossy(),
        });
    }
    Ok(())
}

/// `rho_xk * sigma_x * sigma_k`.
pub fn cov_xk<T: Scalar>(m: &LogMoments<T>) -> T {
    m.rho_xk * m.sigma_x() * m.sigma_k()
}

/// `rho_xr * sigma_x * sigma_r`.
pub fn cov_xr<T: Scalar>(m: &LogMoments<T>) -> T {
    m.rho_xr * m.sigma_x() * m.sigma_r()
}

/// Right-hand side of the equity-premium equation without `ln beta + ln eta`.
pub fn premium_terms<T: Scalar>(tau: T, m: &LogMoments<T>) -> T {
    let one = T::one();
    let h = T::half();
    m.mu_x * (one - tau) + h * m.sigma2_x * (one + tau * tau) + m.mu_k + h * m.sigma2_k + cov_xk(m)
}

/// The bracket `B(tau)` of the Euler condition.
pub fn euler_bracket<T: Scalar>(tau: T, m: &LogMoments<T>) -> T {
    let one = T::one();
    let h = T::half();
    let s = one - tau;
    s * m.mu_x + m.mu_k + h * m.sigma2_x * s * s + h * m.sigma2_k + s * cov_xk(m)
}

/// `dB/dtau`.
pub fn euler_bracket_dtau<T: Scalar>(tau: T, m: &LogMoments<T>) -> T {
    -m.mu_x - m.sigma2_x * (T::one() - tau) - cov_xk(m)
}

/// Equity-premium residual.
pub fn residual_eq2<T: Scalar>(p: &ModelParams<T>, m: &LogMoments<T>) -> Result<T, ModelError> {
    check_params(p)?;
    check_moments(m)?;
    let lhs = m.ln_mean_re() - m.ln_mean_rf();
    let rhs = premium_terms(p.tau, m) + p.beta.ln() + p.ln_eta;
    Ok(lhs - rhs)
}

/// Risk-free/covariance residual.
pub fn residual_eq3<T: Scalar>(p: &ModelParams<T>, m: &LogMoments<T>) -> Result<T, ModelError> {
    check_params(p)?;
    check_moments(m)?;
    let one = T::one();
    let a = p.tau * cov_xr(m);
    let lhs = m.ln_mean_rf() * (one - a) - m.ln_mean_re();
    let rhs = -p.beta.ln() * a + p.ln_lambda * (one - a) - p.ln_eta * (one + a);
    Ok(lhs - rhs)
}

/// Equity Euler residual in the requested form.
pub fn residual_eq4<T: Scalar>(
    p: &ModelParams<T>,
    m: &LogMoments<T>,
    v: EquationVariant,
) -> Result<T, ModelError> {
    check_params(p)?;
    check_moments(m)?;
    let head = p.beta.ln() + p.ln_lambda;
    let b = euler_bracket(p.tau, m);
    Ok(match v {
        EquationVariant::Sum => head + b,
        EquationVariant::Product => head * b,
    })
}

pub fn residual_vector<T: Scalar>(
    p: &ModelParams<T>,
    m: &LogMoments<T>,
    v: EquationVariant,
) -> Result<[T; 3], ModelError> {
    Ok([
        residual_eq2(p, m)?,
        residual_eq3(p, m)?,
        residual_eq4(p, m, v)?,
    ])
}

/// Jacobian of [`residual_vector`] with respect to `(tau, ln_eta, ln_lambda)`,
/// row per equation.
pub fn analytic_jacobian<T: Scalar>(
    p: &ModelParams<T>,
    m: &LogMoments<T>,
    v: EquationVariant,
) -> Result<[[T; 3]; 3], ModelError> {
    check_params(p)?;
    check_moments(m)?;
    let one = T::one();
    let zero = T::zero();
    let d = cov_xr(m);
    let a = p.tau * d;
    let ln_beta = p.beta.ln();

    let eq2 = [m.sigma2_x * p.tau * -one + m.mu_x, -one, zero];
    let eq3 = [
        d * (-m.ln_mean_rf() + ln_beta + p.ln_lambda + p.ln_eta),
        one + a,
        -(one - a),
    ];
    let db = euler_bracket_dtau(p.tau, m);
    let eq4 = match v {
        EquationVariant::Sum => [db, zero, one],
        EquationVariant::Product => [(ln_beta + p.ln_lambda) * db, zero, euler_bracket(p.tau, m)],
    };
    Ok([eq2, eq3, eq4])
}

/// Coefficient `1 - tau * rho_xr * sigma_x * sigma_r` multiplying `ln Rf` and
/// `ln lambda` in the risk-free equation.
pub fn eq3_coefficient<T: Scalar>(tau: T, m: &LogMoments<T>) -> T {
    T::one() - tau * cov_xr(m)
}

/// Risk-free rate implied by the agent's bond Euler condition:
/// `exp(-ln beta - ln eta + tau mu_x - tau^2 sigma_x^2 / 2)`.
pub fn implied_riskfree<T: Scalar>(p: &ModelParams<T>, m: &LogMoments<T>) -> Result<T, ModelError> {
    check_params(p)?;
    Ok(implied_ln_riskfree(p, m).exp())
}

fn implied_ln_riskfree<T: Scalar>(p: &ModelParams<T>, m: &LogMoments<T>) -> T {
    -p.beta.ln() - p.ln_eta + p.tau * m.mu_x - T::half() * p.tau * p.tau * m.sigma2_x
}

/// Lognormal mean of `k * x`:
/// `exp(mu_x + mu_k + (sigma_x^2 + sigma_k^2 + 2 rho_xk sigma_x sigma_k) / 2)`.
pub fn expected_equity_gross<T: Scalar>(m: &LogMoments<T>) -> T {
    ln_expected_equity_gross(m).exp()
}

pub fn ln_expected_equity_gross<T: Scalar>(m: &LogMoments<T>) -> T {
    m.mu_x + m.mu_k + T::half() * (m.sigma2_x + m.sigma2_k + T::two() * cov_xk(m))
}

/// `cov(X^a, Y^b)` for jointly lognormal `X`, `Y` with log means `mu1`, `mu2`,
/// log standard deviations `s1`, `s2` and log correlation `rho`.
pub fn lognormal_power_cov<T: Scalar>(a: T, b: T, mu1: T, s1: T, mu2: T, s2: T, rho: T) -> T {
    let h = T::half();
    let ex = (a * mu1 + h * a * a * s1 * s1).exp();
    let ey = (b * mu2 + h * b * b * s2 * s2).exp();
    ex * ey * (a * b * rho * s1 * s2).exp_m1()
}

/// `beta * lambda * exp(B(tau))`; equals 1 exactly where the sum-form Euler
/// residual vanishes.
pub fn euler_gross<T: Scalar>(p: &ModelParams<T>, m: &LogMoments<T>) -> Result<T, ModelError> {
    check_params(p)?;
    Ok((p.beta.ln() + p.ln_lambda + euler_bracket(p.tau, m)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn zero_moments() -> LogMoments<f64> {
        LogMoments {
            mu_x: 0.0,
            sigma2_x: 0.0,
            mu_k: 0.0,
            sigma2_k: 0.0,
            mu_r: 0.0,
            sigma2_r: 0.0,
            rho_xk: 0.0,
            rho_xr: 0.0,
            mean_re_gross: 1.0,
            mean_rf_gross: 1.0,
            n_obs: 10,
        }
    }

    fn base() -> LogMoments<f64> {
        LogMoments {
            mu_x: 0.018,
            sigma2_x: 0.036 * 0.036,
            mu_k: 0.01,
            sigma2_k: 0.01,
            mu_r: 0.03,
            sigma2_r: 0.026,
            rho_xk: 0.2,
            rho_xr: 0.35,
            mean_re_gross: 1.07,
            mean_rf_gross: 1.008,
            n_obs: 89,
        }
    }

    #[test]
    fn trivial_point_eq2_vanishes() {
        let m = zero_moments();
        for tau in [-3.0, 0.0, 1.0, 4.4, 9.0] {
            let p = ModelParams::new(1.0, tau, 0.0, 0.3).unwrap();
            assert_eq!(residual_eq2(&p, &m).unwrap(), 0.0);
        }
    }

    #[test]
    fn eq3_zero_correlation_collapse() {
        let mut m = base();
        m.rho_xr = 0.0;
        let p = ModelParams::new(0.97, 4.0, 0.05, 0.02).unwrap();
        let expected = m.mean_rf_gross.ln() - m.mean_re_gross.ln() - 0.02 + 0.05;
        assert!((residual_eq3(&p, &m).unwrap() - expected).abs() < 1e-16);
    }

    #[test]
    fn eq4_forms() {
        let m = base();
        let beta: f64 = 0.98;
        let p = ModelParams::new(beta, 3.3, 0.01, -beta.ln()).unwrap();
        let b = euler_bracket(3.3, &m);
        assert!((residual_eq4(&p, &m, EquationVariant::Sum).unwrap() - b).abs() < 1e-17);
        assert_eq!(residual_eq4(&p, &m, EquationVariant::Product).unwrap(), 0.0);

        let z = zero_moments();
        let p = ModelParams::new(0.99, 1.0, 0.0, 0.004).unwrap();
        assert_eq!(euler_bracket(1.0, &z), 0.0);
        let sum = residual_eq4(&p, &z, EquationVariant::Sum).unwrap();
        assert!((sum - (0.99f64.ln() + 0.004)).abs() < 1e-17);
        assert_eq!(residual_eq4(&p, &z, EquationVariant::Product).unwrap(), 0.0);
    }

    #[test]
    fn residual_vector_stacks() {
        let m = base();
        let p = ModelParams::new(0.99, 4.4, 0.06, 0.002).unwrap();
        for v in [EquationVariant::Sum, EquationVariant::Product] {
            let r = residual_vector(&p, &m, v).unwrap();
            assert_eq!(r[0], residual_eq2(&p, &m).unwrap());
            assert_eq!(r[1], residual_eq3(&p, &m).unwrap());
            assert_eq!(r[2], residual_eq4(&p, &m, v).unwrap());
        }
    }

    #[test]
    fn non_finite_inputs_rejected() {
        let mut m = base();
        let p = ModelParams {
            beta: 0.99,
            tau: f64::NAN,
            ln_eta: 0.0,
            ln_lambda: 0.0,
        };
        assert_eq!(residual_eq2(&p, &m), Err(ModelError::NonFinite("tau")));
        m.mu_k = f64::INFINITY;
        let p = ModelParams::new(0.99, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(residual_eq3(&p, &m), Err(ModelError::NonFinite("mu_k")));
        assert!(ModelParams::new(1.5, 1.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(ModelParams::from_levels(0.9, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn implied_riskfree_limits() {
        let z = zero_moments();
        let p = ModelParams::new(1.0, 3.0, 0.0, 0.0).unwrap();
        assert_eq!(implied_riskfree(&p, &z).unwrap(), 1.0);
        let m = base();
        let p = ModelParams::new(0.97, 0.0, 0.05, 0.0).unwrap();
        let expected = (-(0.97f64.ln()) - 0.05).exp();
        assert!((implied_riskfree(&p, &m).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn expected_equity_closed_forms() {
        assert_eq!(expected_equity_gross(&zero_moments()), 1.0);
        let mut m = zero_moments();
        m.sigma2_x = 1.0;
        m.sigma2_k = 1.0;
        m.rho_xk = 1.0;
        assert!((expected_equity_gross(&m) - 2f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn power_cov_closed_forms() {
        assert_eq!(lognormal_power_cov(1.0, 1.0, 0.3, 0.2, 0.1, 0.4, 0.0), 0.0);
        let e = 1f64.exp();
        let got = lognormal_power_cov(1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0);
        // exp(1/2) * exp(1/2) * (e - 1)
        assert!((got - e * (e - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn euler_gross_unit_cases() {
        let mut m = zero_moments();
        m.mu_x = 0.02;
        m.sigma2_x = 0.001;
        let p = ModelParams::new(1.0, 1.0, 0.3, 0.0).unwrap();
        assert_eq!(euler_gross(&p, &m).unwrap(), 1.0);

        let m = base();
        let tau = 4.0;
        let beta: f64 = 0.98;
        let ln_lambda = -beta.ln() - euler_bracket(tau, &m);
        let p = ModelParams::new(beta, tau, 0.0, ln_lambda).unwrap();
        let g = euler_gross(&p, &m).unwrap();
        assert!(crate::scalar::ulp_distance(g, 1.0) <= 4, "{g}");
    }

    // Independent re-derivation: premium = ln(A.8 mean) - (A.9 ln Rf), with
    // each side coded from its own formula.
    fn eq2_oracle(p: &ModelParams<f64>, m: &LogMoments<f64>) -> f64 {
        let (sx, sk) = (m.sigma2_x.sqrt(), m.sigma2_k.sqrt());
        let ln_mean_equity = m.mu_x + m.mu_k + 0.5 * (sx * sx + sk * sk + 2.0 * m.rho_xk * sx * sk);
        let ln_rf_model = -p.beta.ln() - p.ln_eta + p.tau * m.mu_x - 0.5 * p.tau.powi(2) * sx * sx;
        let model_premium = ln_mean_equity - ln_rf_model;
        (m.mean_re_gross.ln() - m.mean_rf_gross.ln()) - model_premium
    }

    fn eq3_oracle(p: &ModelParams<f64>, m: &LogMoments<f64>) -> f64 {
        let tp = p.tau * m.rho_xr * m.sigma2_x.sqrt() * m.sigma2_r.sqrt();
        let lhs_a = m.mean_rf_gross.ln() * (1.0 - tp);
        let lhs_b = -m.mean_re_gross.ln();
        let rhs_a = -p.beta.ln() * tp;
        let rhs_b = p.ln_lambda * (1.0 - tp);
        let rhs_c = -p.ln_eta * (1.0 + tp);
        (lhs_a + lhs_b) - (rhs_a + rhs_b + rhs_c)
    }

    prop_compose! {
        fn arb_moments()(
            mu_x in -0.1f64..0.1, sx in 0.001f64..0.3, mu_k in -0.2f64..0.2, sk in 0.001f64..0.5,
            sr in 0.001f64..0.5, rho_xk in -0.99f64..0.99, rho_xr in -0.99f64..0.99,
            re in 0.8f64..1.3, rf in 0.9f64..1.1,
        ) -> LogMoments<f64> {
            LogMoments {
                mu_x, sigma2_x: sx * sx, mu_k, sigma2_k: sk * sk, mu_r: mu_x + mu_k,
                sigma2_r: sr * sr, rho_xk, rho_xr, mean_re_gross: re, mean_rf_gross: rf, n_obs: 50,
            }
        }
    }

    prop_compose! {
        fn arb_params()(beta in 0.5f64..=1.0, tau in -2.0f64..12.0,
                        ln_eta in -0.5f64..0.5, ln_lambda in -0.5f64..0.5) -> ModelParams<f64> {
            ModelParams { beta, tau, ln_eta, ln_lambda }
        }
    }

    proptest! {
        #[test]
        fn eq2_matches_rederivation(p in arb_params(), m in arb_moments()) {
            let got = residual_eq2(&p, &m).unwrap();
            prop_assert!((got - eq2_oracle(&p, &m)).abs() < 1e-12);
        }

        #[test]
        fn eq3_matches_term_by_term(p in arb_params(), m in arb_moments()) {
            let got = residual_eq3(&p, &m).unwrap();
            prop_assert!((got - eq3_oracle(&p, &m)).abs() < 1e-12);
        }

        #[test]
        fn ln_euler_gross_is_sum_residual(p in arb_params(), m in arb_moments()) {
            let sum = residual_eq4(&p, &m, EquationVariant::Sum).unwrap();
            let ln_g = euler_gross(&p, &m).unwrap().ln();
            // absolute, in units of the largest term entering the sum
            let scale = p.beta.ln().abs().max(p.ln_lambda.abs()).max(euler_bracket(p.tau, &m).abs()).max(1.0);
            prop_assert!((ln_g - sum).abs() <= 4.0 * f64::EPSILON * scale, "{} vs {}", ln_g, sum);
        }

        #[test]
        fn affine_coefficients_by_finite_differences(p in arb_params(), m in arb_moments()) {
            let h = 1e-4;
            let up = ModelParams { ln_eta: p.ln_eta + h, ..p };
            let dn = ModelParams { ln_eta: p.ln_eta - h, ..p };
            let d2 = (residual_eq2(&up, &m).unwrap() - residual_eq2(&dn, &m).unwrap()) / (2.0 * h);
            prop_assert!((d2 + 1.0).abs() < 1e-6);

            let up = ModelParams { ln_lambda: p.ln_lambda + h, ..p };
            let dn = ModelParams { ln_lambda: p.ln_lambda - h, ..p };
            let d3 = (residual_eq3(&up, &m).unwrap() - residual_eq3(&dn, &m).unwrap()) / (2.0 * h);
            let coef = eq3_coefficient(p.tau, &m);
            prop_assert!((d3 + coef).abs() <= 1e-6 * coef.abs().max(1.0), "{} vs {}", d3, -coef);
        }

        #[test]
        fn sum_form_invariant_under_beta_lambda_swap(p in arb_params(), m in arb_moments(), c in 0.5f64..1.0) {
            let q = ModelParams { beta: p.beta * c, ln_lambda: p.ln_lambda - c.ln(), ..p };
            let a = residual_eq4(&p, &m, EquationVariant::Sum).unwrap();
            let b = residual_eq4(&q, &m, EquationVariant::Sum).unwrap();
            prop_assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences_at_100_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let m = LogMoments {
                mu_x: rng.random_range(-0.05..0.05),
                sigma2_x: rng.random_range(0.0001..0.05),
                mu_k: rng.random_range(-0.1..0.1),
                sigma2_k: rng.random_range(0.001..0.1),
                mu_r: 0.0,
                sigma2_r: rng.random_range(0.001..0.1),
                rho_xk: rng.random_range(-0.9..0.9),
                rho_xr: rng.random_range(-0.9..0.9),
                mean_re_gross: rng.random_range(0.9..1.2),
                mean_rf_gross: rng.random_range(0.95..1.05),
                n_obs: 30,
            };
            let p = ModelParams {
                beta: rng.random_range(0.9..1.0),
                tau: rng.random_range(0.0..10.0),
                ln_eta: rng.random_range(-0.2..0.2),
                ln_lambda: rng.random_range(-0.2..0.2),
            };
            for v in [EquationVariant::Sum, EquationVariant::Product] {
                let jac = analytic_jacobian(&p, &m, v).unwrap();
                let h = 1e-5;
                #[allow(clippy::needless_range_loop)]
                for col in 0..3 {
                    let shift = |s: f64| {
                        let mut q = p;
                        match col {
                            0 => q.tau += s,
                            1 => q.ln_eta += s,
                            _ => q.ln_lambda += s,
                        }
                        residual_vector(&q, &m, v).unwrap()
                    };
                    let (up, dn) = (shift(h), shift(-h));
                    for row in 0..3 {
                        let fd = (up[row] - dn[row]) / (2.0 * h);
                        let an = jac[row][col];
                        let err = (fd - an).abs() / an.abs().max(1e-3);
                        assert!(err < 1e-5, "row {row} col {col}: fd {fd} analytic {an}");
                    }
                }
            }
        }
    }

    #[test]
    fn generic_over_f32() {
        let m = LogMoments::<f32> {
            mu_x: 0.018,
            sigma2_x: 0.001296,
            mu_k: 0.01,
            sigma2_k: 0.01,
            mu_r: 0.03,
            sigma2_r: 0.026,
            rho_xk: 0.2,
            rho_xr: 0.35,
            mean_re_gross: 1.07,
            mean_rf_gross: 1.008,
            n_obs: 89,
        };
        let p = ModelParams::<f32>::new(0.99, 4.4, 0.06, 0.002).unwrap();
        let m64 = base();
        let p64 = ModelParams::new(0.99, 4.4, 0.06, 0.002).unwrap();
        let r32 = residual_vector(&p, &m, EquationVariant::Sum).unwrap();
        let r64 = residual_vector(&p64, &m64, EquationVariant::Sum).unwrap();
        for i in 0..3 {
            assert!((r32[i] as f64 - r64[i]).abs() < 1e-5);
        }
    }
}
