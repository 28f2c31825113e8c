//! CRRA utility and investor risk-attitude labels.
//!
//! The label depends on the sufficiency factor first. A factor below one means
//! the investor discounts uncertain utility, which is risk aversion. A factor
//! of one is neutral. Above one, the investor assigns extra utility to
//! uncertain wealth. If the adjusted uncertain utility still falls short of
//! certain utility, the investor is an insufficient risk lover.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("domain error: consumption must be > 0, got {0}")]
    Consumption(f64),
    #[error("domain error: probabilities sum to {0}, expected 1")]
    ProbabilitySum(f64),
    #[error("domain error: probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("record {index}: {message}")]
    Record { index: usize, message: String },
    #[error("comparisons parse error: {0}")]
    Parse(String),
}

/// `(c^(1 - tau) - 1) / (1 - tau)`, or `ln c` within `1e-12` of `tau = 1`.
pub fn crra_utility<T: Scalar>(c: T, tau: T) -> Result<T, ClassifyError> {
    if !(c > T::zero()) || !c.is_finite() {
        return Err(ClassifyError::Consumption(c.to_f64_lossy()));
    }
    let s = T::one() - tau;
    if s.abs() < T::lit(1e-12) {
        return Ok(c.ln());
    }
    // exp_m1 keeps precision near the log-utility limit
    Ok((s * c.ln()).exp_m1() / s)
}

/// Probability-weighted CRRA utility over `(probability, consumption)`
/// scenarios.
pub fn expected_crra_utility<T: Scalar>(scenarios: &[(T, T)], tau: T) -> Result<T, ClassifyError> {
    let mut total = T::zero();
    let mut mass = T::zero();
    for &(p, c) in scenarios {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(ClassifyError::Probability(p.to_f64_lossy()));
        }
        mass += p;
        total += p * crra_utility(c, tau)?;
    }
    let tol = T::lit(1e-12).max(T::lit(4.0) * T::epsilon());
    if (mass - T::one()).abs() > tol {
        return Err(ClassifyError::ProbabilitySum(mass.to_f64_lossy()));
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InvestorClass {
    RiskFreeAsset,
    Equity,
}

impl InvestorClass {
    pub fn title(&self) -> &'static str {
        match self {
            Self::RiskFreeAsset => "Risk-free asset",
            Self::Equity => "Equity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InvestorType {
    RiskAverse,
    RiskNeutral,
    InsufficientRiskLoving,
    SufficientRiskLoving,
}

impl InvestorType {
    pub fn title(&self) -> &'static str {
        match self {
            Self::RiskAverse => "Risk-averse",
            Self::RiskNeutral => "Risk-neutral",
            Self::InsufficientRiskLoving => "Insufficient risk-loving",
            Self::SufficientRiskLoving => "Sufficient risk-loving",
        }
    }
}

/// Certain vs. SFOM-adjusted uncertain utility for one investor class in one
/// year. `beta` and `tau` are carried for display only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityComparison<T> {
    pub certain_utility: T,
    pub uncertain_utility: T,
    pub sfom: T,
    pub investor_class: InvestorClass,
    pub year: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<T>,
}

impl<T: Scalar> UtilityComparison<T> {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.sfom > T::zero() && self.sfom.is_finite()) {
            return Err(format!("sfom must be finite and > 0, got {}", self.sfom));
        }
        if !self.certain_utility.is_finite() || !self.uncertain_utility.is_finite() {
            return Err("utilities must be finite".into());
        }
        Ok(())
    }
}

pub fn classify_investor<T: Scalar>(u: &UtilityComparison<T>, epsilon: T) -> InvestorType {
    let one = T::one();
    if (u.sfom - one).abs() <= epsilon {
        InvestorType::RiskNeutral
    } else if u.sfom < one {
        InvestorType::RiskAverse
    } else if u.uncertain_utility < u.certain_utility {
        InvestorType::InsufficientRiskLoving
    } else {
        InvestorType::SufficientRiskLoving
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Labeled<T> {
    #[serde(flatten)]
    pub comparison: UtilityComparison<T>,
    pub label: InvestorType,
}

/// Parses a JSON array of comparison records, reporting the index of the
/// first malformed one.
pub fn parse_comparisons<T: Scalar>(
    text: &str,
) -> Result<Vec<UtilityComparison<T>>, ClassifyError> {
    let raw: Vec<serde_json::Value> =
        serde_json::from_str(text).map_err(|e| ClassifyError::Parse(e.to_string()))?;
    raw.into_iter()
        .enumerate()
        .map(|(index, v)| {
            let rec: UtilityComparison<T> =
                serde_json::from_value(v).map_err(|e| ClassifyError::Record {
                    index,
                    message: e.to_string(),
                })?;
            rec.validate()
                .map_err(|message| ClassifyError::Record { index, message })?;
            Ok(rec)
        })
        .collect()
}

pub fn classify_all<T: Scalar>(records: &[UtilityComparison<T>], epsilon: T) -> Vec<Labeled<T>> {
    records
        .iter()
        .map(|&comparison| Labeled {
            comparison,
            label: classify_investor(&comparison, epsilon),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cmp(
        certain: f64,
        uncertain: f64,
        sfom: f64,
        class: InvestorClass,
    ) -> UtilityComparison<f64> {
        UtilityComparison {
            certain_utility: certain,
            uncertain_utility: uncertain,
            sfom,
            investor_class: class,
            year: 1977,
            beta: None,
            tau: None,
        }
    }

    #[test]
    fn utility_closed_forms() {
        for tau in [-2.0, 0.0, 1.0, 4.4, 10.0] {
            assert_eq!(crra_utility(1.0, tau).unwrap(), 0.0);
        }
        assert!((crra_utility(2.0f64, 2.0).unwrap() - 0.5).abs() < 1e-16);
        assert!(crra_utility(0.0, 2.0).is_err());
        assert!(crra_utility(-1.0, 2.0).is_err());
    }

    #[test]
    fn log_limit_is_continuous() {
        for c in [0.3f64, 1.7, 25.0] {
            let ln = c.ln();
            assert_eq!(crra_utility(c, 1.0).unwrap(), ln);
            for eps in [1e-9, -1e-9] {
                let tau = 1.0 + eps;
                // series: ln c + (1 - tau) ln^2 c / 2 + ...
                let series = ln + (1.0 - tau) * ln * ln / 2.0;
                let got = crra_utility(c, tau).unwrap();
                assert!(((got - ln) / ln).abs() < 1e-6);
                assert!((got - series).abs() < 1e-15 * (1.0 + ln.abs()));
            }
        }
    }

    #[test]
    fn expected_utility_cases() {
        assert_eq!(
            expected_crra_utility(&[(1.0, 3.0)], 2.5).unwrap(),
            crra_utility(3.0, 2.5).unwrap()
        );
        assert_eq!(
            expected_crra_utility(&[(0.5, 1.0), (0.5, 1.0)], 3.0).unwrap(),
            0.0
        );
        // 0.5 * 0.5 + 0.5 * 0.75
        let v = expected_crra_utility(&[(0.5f64, 2.0), (0.5, 4.0)], 2.0).unwrap();
        assert!((v - 0.625).abs() < 1e-15);
        assert!(matches!(
            expected_crra_utility(&[(0.5, 2.0), (0.4, 4.0)], 2.0),
            Err(ClassifyError::ProbabilitySum(_))
        ));
    }

    #[test]
    fn reference_fixtures() {
        let eps = DEFAULT_EPSILON;
        // equity investors, time-varying model
        let u = cmp(0.29443806, 0.29223096, 1.0232, InvestorClass::Equity);
        assert_eq!(
            classify_investor(&u, eps),
            InvestorType::InsufficientRiskLoving
        );
        // risk-free asset investors, time-varying model
        let u = cmp(0.29443806, 0.06758363, 1.0852, InvestorClass::RiskFreeAsset);
        assert_eq!(
            classify_investor(&u, eps),
            InvestorType::InsufficientRiskLoving
        );
        // equity investors, constant-variable model
        let u = cmp(0.3, 0.9, 0.961745, InvestorClass::Equity);
        assert_eq!(classify_investor(&u, eps), InvestorType::RiskAverse);
        let u = cmp(0.3, 0.9, 1.0, InvestorClass::Equity);
        assert_eq!(classify_investor(&u, eps), InvestorType::RiskNeutral);
        let u = cmp(0.3, 0.3, 1.2, InvestorClass::Equity);
        assert_eq!(
            classify_investor(&u, eps),
            InvestorType::SufficientRiskLoving
        );
    }

    #[test]
    fn parse_reports_record_index() {
        let text = r#"[
            {"certain_utility": 0.29, "uncertain_utility": 0.28, "sfom": 1.02, "investor_class": "EQUITY", "year": 1977},
            {"certain_utility": 0.29, "uncertain_utility": 0.28, "sfom": -1.0, "investor_class": "EQUITY", "year": 1977}
        ]"#;
        match parse_comparisons::<f64>(text) {
            Err(ClassifyError::Record { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
        let text = r#"[{"certain_utility": 0.29, "sfom": 1.02, "investor_class": "EQUITY", "year": 1977}]"#;
        match parse_comparisons::<f64>(text) {
            Err(ClassifyError::Record { index: 0, message }) => {
                assert!(message.contains("uncertain_utility"))
            }
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn label_invariant_under_affine_rescaling(
            certain in -5.0f64..5.0, uncertain in -5.0f64..5.0, sfom in 0.5f64..1.5,
            scale in 0.01f64..100.0, shift in -10.0f64..10.0,
        ) {
            let a = cmp(certain, uncertain, sfom, InvestorClass::Equity);
            let b = cmp(certain * scale + shift, uncertain * scale + shift, sfom, InvestorClass::Equity);
            // ordering must survive the rescaling in floating point
            prop_assume!((certain - uncertain).abs() > 1e-9);
            prop_assert_eq!(classify_investor(&a, DEFAULT_EPSILON), classify_investor(&b, DEFAULT_EPSILON));
        }
    }

    #[test]
    fn utility_increasing_and_concave_on_grid() {
        for tau in [0.5, 1.0, 2.0, 4.4, 9.0] {
            let mut c = 0.2;
            while c < 5.0 {
                let h = 1e-3 * c;
                let f = |x: f64| crra_utility(x, tau).unwrap();
                let d1 = (f(c + h) - f(c - h)) / (2.0 * h);
                let d2 = (f(c + h) - 2.0 * f(c) + f(c - h)) / (h * h);
                assert!(d1 > 0.0, "tau {tau} c {c}");
                assert!(d2 < 0.0, "tau {tau} c {c}: {d2}");
                c *= 1.3;
            }
        }
    }
}
