//! Lognormal moment estimation.
//!
//! Moments are computed from the logs of consumption growth `x`, the
//! price-dividend growth factor `k` and the gross equity return `Re`. The
//! mean gross returns that enter the equations in logs (`E(Re)`, `Rf`) are
//! level means by default.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::DerivedSeries;
use crate::jsonfmt::JsonObject;
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentsError {
    #[error("insufficient data: {found} transitions, at least 2 required")]
    InsufficientData { found: usize },
    #[error("series has no risk-free returns")]
    MissingRiskFree,
    #[error("series lengths differ: {0}")]
    LengthMismatch(String),
    #[error("non-positive or non-finite value in `{series}` at index {index}")]
    NonPositive { series: &'static str, index: usize },
    #[error("moments parse error: {0}")]
    Parse(String),
    #[error("invalid moments field `{field}`: {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceMode {
    /// Divisor `n - 1`.
    #[default]
    Sample,
    /// Divisor `n`.
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeanMode {
    /// Arithmetic mean of gross returns.
    #[default]
    Arithmetic,
    /// `exp` of the mean log gross return.
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhoMode {
    /// `rho_xk = corr(ln x, ln k)` and `rho_xr = corr(ln x, ln Re)` separately.
    #[default]
    Split,
    /// Both correlations set to `corr(ln x, ln k)`.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EstimatorConfig {
    pub variance: VarianceMode,
    pub mean: MeanMode,
    pub rho: RhoMode,
}

impl EstimatorConfig {
    /// Every combination of the three estimator conventions.
    pub fn all() -> Vec<Self> {
        let mut out = Vec::with_capacity(8);
        for variance in [VarianceMode::Sample, VarianceMode::Population] {
            for mean in [MeanMode::Arithmetic, MeanMode::Geometric] {
                for rho in [RhoMode::Split, RhoMode::Shared] {
                    out.push(Self {
                        variance,
                        mean,
                        rho,
                    });
                }
            }
        }
        out
    }
}

/// Moments that parameterize the calibration equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogMoments<T> {
    pub mu_x: T,
    pub sigma2_x: T,
    pub mu_k: T,
    pub sigma2_k: T,
    pub mu_r: T,
    pub sigma2_r: T,
    pub rho_xk: T,
    pub rho_xr: T,
    pub mean_re_gross: T,
    pub mean_rf_gross: T,
    pub n_obs: u64,
}

impl<T: Scalar> LogMoments<T> {
    pub fn sigma_x(&self) -> T {
        self.sigma2_x.sqrt()
    }

    pub fn sigma_k(&self) -> T {
        self.sigma2_k.sqrt()
    }

    pub fn sigma_r(&self) -> T {
        self.sigma2_r.sqrt()
    }

    /// `ln E(Re)`.
    pub fn ln_mean_re(&self) -> T {
        self.mean_re_gross.ln()
    }

    /// `ln Rf`.
    pub fn ln_mean_rf(&self) -> T {
        self.mean_rf_gross.ln()
    }

    /// True when a log variance is zero, so a correlation was undefined and
    /// reported as 0. Calibration refuses to run on such moments.
    pub fn is_degenerate(&self) -> bool {
        self.sigma2_x == T::zero() || self.sigma2_k == T::zero() || self.sigma2_r == T::zero()
    }

    /// Checks the type invariants.
    pub fn validate(&self) -> Result<(), MomentsError> {
        let finite: [(&'static str, T); 10] = [
            ("mu_x", self.mu_x),
            ("sigma2_x", self.sigma2_x),
            ("mu_k", self.mu_k),
            ("sigma2_k", self.sigma2_k),
            ("mu_r", self.mu_r),
            ("sigma2_r", self.sigma2_r),
            ("rho_xk", self.rho_xk),
            ("rho_xr", self.rho_xr),
            ("mean_re_gross", self.mean_re_gross),
            ("mean_rf_gross", self.mean_rf_gross),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(MomentsError::Invalid {
                    field,
                    message: format!("not finite ({v})"),
                });
            }
        }
        for (field, v) in [
            ("sigma2_x", self.sigma2_x),
            ("sigma2_k", self.sigma2_k),
            ("sigma2_r", self.sigma2_r),
        ] {
            if v < T::zero() {
                return Err(MomentsError::Invalid {
                    field,
                    message: format!("negative variance {v}"),
                });
            }
        }
        for (field, v) in [("rho_xk", self.rho_xk), ("rho_xr", self.rho_xr)] {
            if v.abs() > T::one() {
                return Err(MomentsError::Invalid {
                    field,
                    message: format!("correlation {v} outside [-1, 1]"),
                });
            }
        }
        for (field, v) in [
            ("mean_re_gross", self.mean_re_gross),
            ("mean_rf_gross", self.mean_rf_gross),
        ] {
            if v <= T::zero() {
                return Err(MomentsError::Invalid {
                    field,
                    message: format!("must be > 0, got {v}"),
                });
            }
        }
        if self.n_obs == 0 {
            return Err(MomentsError::Invalid {
                field: "n_obs",
                message: "must be positive".into(),
            });
        }
        Ok(())
    }

    /// Renders the moments file: one JSON object with exactly the field
    /// names of this struct, 17 significant digits per number.
    pub fn to_json(&self) -> String {
        self.json_object().render()
    }

    pub fn json_object(&self) -> JsonObject {
        JsonObject::new()
            .num("mu_x", self.mu_x)
            .num("sigma2_x", self.sigma2_x)
            .num("mu_k", self.mu_k)
            .num("sigma2_k", self.sigma2_k)
            .num("mu_r", self.mu_r)
            .num("sigma2_r", self.sigma2_r)
            .num("rho_xk", self.rho_xk)
            .num("rho_xr", self.rho_xr)
            .num("mean_re_gross", self.mean_re_gross)
            .num("mean_rf_gross", self.mean_rf_gross)
            .int("n_obs", self.n_obs as i64)
    }
}

/// Key under which command-line outputs embed their run manifest. The moments
/// parser tolerates it and ignores its content.
pub const MANIFEST_KEY: &str = "manifest";

/// Serializes moments to the moments-file format.
pub fn serialize_moments<T: Scalar>(m: &LogMoments<T>) -> String {
    m.to_json()
}

/// Parses a moments file. Unknown fields other than [`MANIFEST_KEY`] are
/// rejected, and so is any missing field.
pub fn parse_moments<T: Scalar>(text: &str) -> Result<LogMoments<T>, MomentsError> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| MomentsError::Parse(e.to_string()))?;
    if let Some(obj) = value.as_object_mut() {
        obj.remove(MANIFEST_KEY);
    }
    let m: LogMoments<T> =
        serde_json::from_value(value).map_err(|e| MomentsError::Parse(e.to_string()))?;
    m.validate()?;
    Ok(m)
}

/// Sample statistics of a single series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary<T> {
    pub mean: T,
    /// Divisor `n - 1`.
    pub var: T,
}

pub fn summarize<T: Scalar>(xs: &[T]) -> Summary<T> {
    let n = T::from_count(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    let ss: T = xs.iter().map(|&v| (v - mean) * (v - mean)).sum();
    Summary {
        mean,
        var: ss / (n - T::one()),
    }
}

/// Sample Pearson correlation; `None` when either series has zero variance.
pub fn correlation<T: Scalar>(a: &[T], b: &[T]) -> Option<T> {
    let sa = summarize(a);
    let sb = summarize(b);
    if sa.var == T::zero() || sb.var == T::zero() {
        return None;
    }
    let n = T::from_count(a.len());
    let cov: T = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x - sa.mean) * (y - sb.mean))
        .sum::<T>()
        / (n - T::one());
    let r = cov / (sa.var.sqrt() * sb.var.sqrt());
    Some(r.max(-T::one()).min(T::one()))
}

/// Estimated moments plus estimator diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate<T> {
    pub moments: LogMoments<T>,
    /// Set when a log series had zero variance and a correlation was
    /// reported as 0.
    pub degenerate_variance: bool,
}

/// Estimates the lognormal moments of a derived series.
pub fn estimate_moments<T: Scalar>(
    series: &DerivedSeries<T>,
    cfg: EstimatorConfig,
) -> Result<MomentEstimate<T>, MomentsError> {
    let n = series.len();
    if n < 2 {
        return Err(MomentsError::InsufficientData { found: n });
    }
    let rf = series
        .rf_gross
        .as_ref()
        .ok_or(MomentsError::MissingRiskFree)?;
    for (name, s) in [
        ("k", &series.k),
        ("re_gross", &series.re_gross),
        ("rf_gross", rf),
    ] {
        if s.len() != n {
            return Err(MomentsError::LengthMismatch(format!(
                "`{name}` has {} entries, `x` has {n}",
                s.len()
            )));
        }
    }
    let logs = |name: &'static str, s: &[T]| -> Result<Vec<T>, MomentsError> {
        s.iter()
            .enumerate()
            .map(|(index, &v)| {
                if v > T::zero() && v.is_finite() {
                    Ok(v.ln())
                } else {
                    Err(MomentsError::NonPositive {
                        series: name,
                        index,
                    })
                }
            })
            .collect()
    };
    let ln_x = logs("x", &series.x)?;
    let ln_k = logs("k", &series.k)?;
    let ln_r = logs("re_gross", &series.re_gross)?;
    let ln_f = logs("rf_gross", rf)?;

    let sx = summarize(&ln_x);
    let sk = summarize(&ln_k);
    let sr = summarize(&ln_r);

    let rho_xk = correlation(&ln_x, &ln_k);
    let rho_xr = correlation(&ln_x, &ln_r);
    let degenerate_variance = rho_xk.is_none() || rho_xr.is_none();
    let rho_xk = rho_xk.unwrap_or_else(T::zero);
    let rho_xr = match cfg.rho {
        RhoMode::Split => rho_xr.unwrap_or_else(T::zero),
        RhoMode::Shared => rho_xk,
    };

    let nn = T::from_count(n);
    let scale = match cfg.variance {
        VarianceMode::Sample => T::one(),
        VarianceMode::Population => (nn - T::one()) / nn,
    };
    let (mean_re_gross, mean_rf_gross) = match cfg.mean {
        MeanMode::Arithmetic => (summarize(&series.re_gross).mean, summarize(rf).mean),
        MeanMode::Geometric => (sr.mean.exp(), summarize(&ln_f).mean.exp()),
    };

    let moments = LogMoments {
        mu_x: sx.mean,
        sigma2_x: sx.var * scale,
        mu_k: sk.mean,
        sigma2_k: sk.var * scale,
        mu_r: sr.mean,
        sigma2_r: sr.var * scale,
        rho_xk,
        rho_xr,
        mean_re_gross,
        mean_rf_gross,
        n_obs: n as u64,
    };
    Ok(MomentEstimate {
        moments,
        degenerate_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(x: Vec<f64>, k: Vec<f64>, rf: Vec<f64>) -> DerivedSeries<f64> {
        let re: Vec<f64> = x.iter().zip(&k).map(|(a, b)| a * b).collect();
        DerivedSeries {
            year: (1..=x.len() as i32).collect(),
            z: x.clone(),
            x,
            price_dividend: None,
            k,
            re_gross: re,
            rf_gross: Some(rf),
        }
    }

    #[test]
    fn constant_consumption_growth_is_degenerate() {
        let s = series(vec![1.02; 5], vec![1.0, 1.1, 0.9, 1.05, 1.2], vec![1.01; 5]);
        let est = estimate_moments(&s, EstimatorConfig::default()).unwrap();
        assert!((est.moments.mu_x - 1.02f64.ln()).abs() < 1e-15);
        assert_eq!(est.moments.sigma2_x, 0.0);
        assert!(est.degenerate_variance);
        assert_eq!(est.moments.rho_xk, 0.0);
        assert!(est.moments.is_degenerate());
    }

    #[test]
    fn two_point_hand_computation() {
        let s = series(vec![1.01, 1.03], vec![1.05, 1.02], vec![1.0, 1.02]);
        let m = estimate_moments(&s, EstimatorConfig::default())
            .unwrap()
            .moments;
        let (a, b) = (1.01f64.ln(), 1.03f64.ln());
        let mean = (a + b) / 2.0;
        // divisor n - 1 = 1
        let var = (a - mean).powi(2) + (b - mean).powi(2);
        assert!((m.mu_x - mean).abs() < 1e-16);
        assert!((m.sigma2_x - var).abs() < 1e-18);
        // two points are perfectly (anti)correlated
        assert!((m.rho_xk + 1.0).abs() < 1e-12);
        assert_eq!(m.n_obs, 2);
        assert!((m.mean_rf_gross - 1.01).abs() < 1e-15);
    }

    #[test]
    fn single_transition_rejected() {
        let s = series(vec![1.01], vec![1.05], vec![1.0]);
        assert_eq!(
            estimate_moments(&s, EstimatorConfig::default()).unwrap_err(),
            MomentsError::InsufficientData { found: 1 }
        );
    }

    #[test]
    fn population_variance_scales_by_n_minus_one_over_n() {
        let s = series(
            vec![1.01, 1.03, 0.99, 1.02],
            vec![1.05, 1.02, 1.1, 0.97],
            vec![1.0; 4],
        );
        let a = estimate_moments(&s, EstimatorConfig::default())
            .unwrap()
            .moments;
        let b = estimate_moments(
            &s,
            EstimatorConfig {
                variance: VarianceMode::Population,
                ..Default::default()
            },
        )
        .unwrap()
        .moments;
        assert!((b.sigma2_x - a.sigma2_x * 3.0 / 4.0).abs() < 1e-18);
        assert_eq!(a.rho_xk, b.rho_xk);
    }

    #[test]
    fn shared_rho_and_geometric_means() {
        let s = series(
            vec![1.01, 1.03, 0.99, 1.02],
            vec![1.05, 1.02, 1.1, 0.97],
            vec![1.0, 1.02, 1.01, 0.99],
        );
        let cfg = EstimatorConfig {
            mean: MeanMode::Geometric,
            rho: RhoMode::Shared,
            ..Default::default()
        };
        let m = estimate_moments(&s, cfg).unwrap().moments;
        assert_eq!(m.rho_xr, m.rho_xk);
        assert!((m.mean_re_gross.ln() - m.mu_r).abs() < 1e-15);
    }

    #[test]
    fn missing_field_is_named() {
        let m = LogMoments {
            mu_x: 0.018,
            sigma2_x: 0.0013,
            mu_k: 0.01,
            sigma2_k: 0.01,
            mu_r: 0.03,
            sigma2_r: 0.02,
            rho_xk: 0.2,
            rho_xr: 0.3,
            mean_re_gross: 1.07,
            mean_rf_gross: 1.008,
            n_obs: 89,
        };
        let mut v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        v.as_object_mut().unwrap().remove("rho_xr");
        let err = parse_moments::<f64>(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("rho_xr"), "{err}");
    }

    #[test]
    fn hand_written_file() {
        let text = r#"{"mu_x": 0.018, "sigma2_x": 0.0013, "mu_k": 0.01, "sigma2_k": 0.01,
            "mu_r": 0.03, "sigma2_r": 0.02, "rho_xk": 0.2, "rho_xr": 0.3,
            "mean_re_gross": 1.07, "mean_rf_gross": 1.008, "n_obs": 89,
            "manifest": {"command": "moments"}}"#;
        let m: LogMoments<f64> = parse_moments(text).unwrap();
        assert_eq!(m.mu_x, 0.018);
        assert_eq!(m.n_obs, 89);
        let bad = text.replace("\"rho_xk\": 0.2", "\"rho_xk\": 1.5");
        assert!(parse_moments::<f64>(&bad)
            .unwrap_err()
            .to_string()
            .contains("rho_xk"));
        let extra = text.replace("\"n_obs\"", "\"bogus\": 1, \"n_obs\"");
        assert!(parse_moments::<f64>(&extra).is_err());
    }

    fn arb_moments() -> impl Strategy<Value = LogMoments<f64>> {
        (
            (
                -1.0f64..1.0,
                0.0f64..1.0,
                -1.0f64..1.0,
                0.0f64..1.0,
                -1.0f64..1.0,
            ),
            (
                0.0f64..1.0,
                -1.0f64..=1.0,
                -1.0f64..=1.0,
                1e-3f64..10.0,
                1e-3f64..10.0,
                1u64..100_000,
            ),
        )
            .prop_map(|((a, b, c, d, e), (f, g, h, i, j, n))| LogMoments {
                mu_x: a,
                sigma2_x: b,
                mu_k: c,
                sigma2_k: d,
                mu_r: e,
                sigma2_r: f,
                rho_xk: g,
                rho_xr: h,
                mean_re_gross: i,
                mean_rf_gross: j,
                n_obs: n,
            })
    }

    proptest! {
        #[test]
        fn moments_file_round_trips_bit_exactly(m in arb_moments()) {
            let back: LogMoments<f64> = parse_moments(&serialize_moments(&m)).unwrap();
            prop_assert_eq!(back, m);
        }

        #[test]
        fn jensen_on_sample(xs in prop::collection::vec(0.5f64..2.0, 2..50)) {
            let k = vec![1.0; xs.len()];
            let s = series(xs.clone(), k, vec![1.0; xs.len()]);
            let m = estimate_moments(&s, EstimatorConfig::default()).unwrap().moments;
            prop_assert!(m.mean_re_gross.ln() >= m.mu_r - 1e-15);
        }
    }

    #[test]
    fn f32_round_trip() {
        let m = LogMoments::<f32> {
            mu_x: 0.018,
            sigma2_x: 0.0013,
            mu_k: 0.01,
            sigma2_k: 0.01,
            mu_r: 0.03,
            sigma2_r: 0.02,
            rho_xk: 0.2,
            rho_xr: 0.3,
            mean_re_gross: 1.07,
            mean_rf_gross: 1.008,
            n_obs: 89,
        };
        assert_eq!(parse_moments::<f32>(&m.to_json()).unwrap(), m);
    }
}
