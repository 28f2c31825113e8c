//! Synthetic jointly lognormal economies.
//!
//! `(ln x, ln k)` are drawn i.i.d. bivariate normal; dividends grow with
//! consumption (`z = x`) and the equity return is `Re = k * x`. Draws come
//! from a seeded ChaCha8 stream, two standard normals per transition in the
//! order `(u, w)`, with
//! `ln x = mu_x + sigma_x u` and
//! `ln k = mu_k + sigma_k (rho u + sqrt(1 - rho^2) w)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::dataset::DerivedSeries;
use crate::jsonfmt::{self, JsonObject};
use crate::model::{expected_equity_gross, lognormal_power_cov};
use crate::moments::LogMoments;
use crate::Scalar;

/// Recorded in every report so runs can be reproduced.
pub const GENERATOR: &str = "ChaCha8Rng (rand_chacha 0.9) + StandardNormal (rand_distr 0.5)";

/// Discrepancy threshold, in standard errors, for [`mc_identity_check`].
pub const SE_THRESHOLD: f64 = 4.0;

pub const MIN_DRAWS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulateError {
    #[error("invalid economy spec: {0}")]
    Spec(String),
    #[error("n_draws = {0} is below the minimum of {MIN_DRAWS}")]
    TooFewDraws(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EconomySpec<T> {
    pub mu_x: T,
    pub sigma_x: T,
    pub mu_k: T,
    pub sigma_k: T,
    pub rho_xk: T,
    /// Number of transitions.
    pub n: usize,
    pub seed: u64,
}

impl<T: Scalar> EconomySpec<T> {
    pub fn validate(&self) -> Result<(), SimulateError> {
        for (name, v) in [
            ("mu_x", self.mu_x),
            ("sigma_x", self.sigma_x),
            ("mu_k", self.mu_k),
            ("sigma_k", self.sigma_k),
            ("rho_xk", self.rho_xk),
        ] {
            if !v.is_finite() {
                return Err(SimulateError::Spec(format!("{name} is not finite")));
            }
        }
        if self.sigma_x < T::zero() || self.sigma_k < T::zero() {
            return Err(SimulateError::Spec(
                "standard deviations must be >= 0".into(),
            ));
        }
        if self.rho_xk.abs() > T::one() {
            return Err(SimulateError::Spec(format!(
                "rho_xk = {} outside [-1, 1]",
                self.rho_xk
            )));
        }
        if self.n < 2 {
            return Err(SimulateError::Spec(format!("n = {} < 2", self.n)));
        }
        Ok(())
    }

    /// Log moment of the equity return `ln r = ln x + ln k`.
    pub fn mu_r(&self) -> T {
        self.mu_x + self.mu_k
    }

    pub fn sigma_r(&self) -> T {
        let c = self.rho_xk * self.sigma_x * self.sigma_k;
        (self.sigma_x * self.sigma_x + self.sigma_k * self.sigma_k + T::two() * c)
            .max(T::zero())
            .sqrt()
    }

    /// `corr(ln x, ln r)`; zero when either variance vanishes.
    pub fn rho_xr(&self) -> T {
        let sr = self.sigma_r();
        if self.sigma_x == T::zero() || sr == T::zero() {
            return T::zero();
        }
        let cov = self.sigma_x * self.sigma_x + self.rho_xk * self.sigma_x * self.sigma_k;
        (cov / (self.sigma_x * sr)).max(-T::one()).min(T::one())
    }

    /// Population moments of the economy. Mean gross returns are the
    /// lognormal means; the risk-free mean is `rf`.
    pub fn true_moments(&self, rf: T) -> LogMoments<T> {
        let mut m = LogMoments {
            mu_x: self.mu_x,
            sigma2_x: self.sigma_x * self.sigma_x,
            mu_k: self.mu_k,
            sigma2_k: self.sigma_k * self.sigma_k,
            mu_r: self.mu_r(),
            sigma2_r: self.sigma_r() * self.sigma_r(),
            rho_xk: self.rho_xk,
            rho_xr: self.rho_xr(),
            mean_re_gross: T::one(),
            mean_rf_gross: rf,
            n_obs: self.n as u64,
        };
        m.mean_re_gross = expected_equity_gross(&m);
        m
    }
}

/// Draws the economy. `rf_gross` is left unset.
pub fn generate_economy<T: Scalar>(
    spec: &EconomySpec<T>,
) -> Result<DerivedSeries<T>, SimulateError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let mut x = Vec::with_capacity(n);
    let mut k = Vec::with_capacity(n);
    let mut re = Vec::with_capacity(n);
    let tail = (T::one() - spec.rho_xk * spec.rho_xk).max(T::zero()).sqrt();
    for _ in 0..n {
        let u: f64 = StandardNormal.sample(&mut rng);
        let w: f64 = StandardNormal.sample(&mut rng);
        let (u, w) = (T::lit(u), T::lit(w));
        let xi = (spec.mu_x + spec.sigma_x * u).exp();
        let ki = (spec.mu_k + spec.sigma_k * (spec.rho_xk * u + tail * w)).exp();
        x.push(xi);
        k.push(ki);
        re.push(ki * xi);
    }
    Ok(DerivedSeries {
        year: (1..=n as i32).collect(),
        z: x.clone(),
        x,
        price_dividend: None,
        k,
        re_gross: re,
        rf_gross: None,
    })
}

/// As [`generate_economy`], with a constant gross risk-free return.
pub fn generate_economy_with_riskfree<T: Scalar>(
    spec: &EconomySpec<T>,
    rf_gross: T,
) -> Result<DerivedSeries<T>, SimulateError> {
    let mut s = generate_economy(spec)?;
    s.rf_gross = Some(vec![rf_gross; s.len()]);
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck<T> {
    pub name: &'static str,
    pub closed_form: T,
    pub sample: T,
    pub std_error: T,
    /// `(sample - closed_form) / std_error`; zero when both are equal.
    pub z_score: T,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport<T> {
    pub spec: EconomySpec<T>,
    pub n_draws: usize,
    pub tau: T,
    pub checks: Vec<IdentityCheck<T>>,
}

impl<T: Scalar> McReport<T> {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn json_object(&self) -> JsonObject {
        let spec = JsonObject::new()
            .num("mu_x", self.spec.mu_x)
            .num("sigma_x", self.spec.sigma_x)
            .num("mu_k", self.spec.mu_k)
            .num("sigma_k", self.spec.sigma_k)
            .num("rho_xk", self.spec.rho_xk)
            .int("seed", self.spec.seed as i64)
            .render();
        let checks: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                JsonObject::new()
                    .str("name", c.name)
                    .num("closed_form", c.closed_form)
                    .num("sample", c.sample)
                    .num("std_error", c.std_error)
                    .num("z_score", c.z_score)
                    .bool("pass", c.pass)
                    .render()
            })
            .collect();
        JsonObject::new()
            .str("generator", GENERATOR)
            .raw("spec", spec)
            .int("n_draws", self.n_draws as i64)
            .num("tau", self.tau)
            .num("threshold_se", T::lit(SE_THRESHOLD))
            .raw("checks", jsonfmt::array(&checks))
            .bool("all_pass", self.all_pass())
    }

    pub fn to_json(&self) -> String {
        self.json_object().render()
    }
}

/// Running mean and variance; exact for constant input.
#[derive(Debug, Clone, Copy, Default)]
struct Welford<T> {
    n: usize,
    mean: T,
    m2: T,
}

impl<T: Scalar> Welford<T> {
    fn push(&mut self, v: T) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / T::from_count(self.n);
        self.m2 += d * (v - self.mean);
    }

    fn var(&self) -> T {
        if self.n < 2 {
            T::zero()
        } else {
            self.m2 / T::from_count(self.n - 1)
        }
    }

    fn std_error(&self) -> T {
        (self.var() / T::from_count(self.n)).sqrt()
    }
}

fn judge<T: Scalar>(
    name: &'static str,
    closed_form: T,
    sample: T,
    std_error: T,
) -> IdentityCheck<T> {
    let diff = sample - closed_form;
    let (z_score, pass) = if std_error > T::zero() {
        let z = diff / std_error;
        (z, z.abs() <= T::lit(SE_THRESHOLD))
    } else {
        // no sampling noise: only rounding separates the two
        let scale = closed_form
            .abs()
            .max(sample.abs())
            .max(T::min_positive_value());
        let ok = diff.abs() <= T::lit(8.0) * T::epsilon() * scale;
        (
            if diff == T::zero() {
                T::zero()
            } else {
                T::infinity() * diff.signum()
            },
            ok,
        )
    };
    IdentityCheck {
        name,
        closed_form,
        sample,
        std_error,
        z_score,
        pass,
    }
}

/// Compares two closed forms against sample statistics of `n_draws`
/// transitions of the economy:
///
/// * `E(k x)` against [`expected_equity_gross`];
/// * `cov(x^-tau, r)` with `r = k x` against [`lognormal_power_cov`].
pub fn mc_identity_check<T: Scalar>(
    spec: &EconomySpec<T>,
    n_draws: usize,
    tau: T,
) -> Result<McReport<T>, SimulateError> {
    if n_draws < MIN_DRAWS {
        return Err(SimulateError::TooFewDraws(n_draws));
    }
    let spec = EconomySpec {
        n: n_draws,
        ..*spec
    };
    let series = generate_economy(&spec)?;
    let truth = spec.true_moments(T::one());

    let mut mean_re = Welford::default();
    let mut a_stats = Welford::default();
    let mut b_stats = Welford::default();
    let powered: Vec<T> = series.x.iter().map(|&x| x.powf(-tau)).collect();
    for (&a, &r) in powered.iter().zip(&series.re_gross) {
        mean_re.push(r);
        a_stats.push(a);
        b_stats.push(r);
    }
    let mut cross = Welford::default();
    for (&a, &r) in powered.iter().zip(&series.re_gross) {
        cross.push((a - a_stats.mean) * (r - b_stats.mean));
    }
    let n = T::from_count(n_draws);
    // unbiased sample covariance
    let sample_cov = cross.mean * n / (n - T::one());

    let checks = vec![
        judge(
            "mean_equity_gross",
            expected_equity_gross(&truth),
            mean_re.mean,
            mean_re.std_error(),
        ),
        judge(
            "cov_marginal_utility_equity",
            lognormal_power_cov(
                -tau,
                T::one(),
                spec.mu_x,
                spec.sigma_x,
                spec.mu_r(),
                spec.sigma_r(),
                spec.rho_xr(),
            ),
            sample_cov,
            cross.std_error(),
        ),
    ];
    Ok(McReport {
        spec,
        n_draws,
        tau,
        checks,
    })
}
