use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sfm_core::model::{residual_vector, EquationVariant};
use sfm_core::solver::roundtrip::{random_case, run_case, RoundtripCase};
use sfm_core::solver::{
    calibrate, calibrate_reduced, construct_solvable_moments, grid_oracle, max_norm,
    reduced_quadratic, SolverConfig,
};
use sfm_core::LogMoments64;

fn case(seed: u64) -> (RoundtripCase<f64>, LogMoments64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = random_case(&mut rng);
    let m = construct_solvable_moments(c.tau, c.eta, c.lambda_, c.beta, &c.base).unwrap();
    (c, m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn construct_then_calibrate_recovers(seed in any::<u64>()) {
        let (c, _) = case(seed);
        let out = run_case(&c, &SolverConfig::default()).unwrap();
        prop_assert!(out.error < 1e-6, "{:?}", out);
    }

    #[test]
    fn converged_results_have_tiny_residuals(seed in any::<u64>()) {
        let (c, m) = case(seed);
        for v in [EquationVariant::Sum, EquationVariant::Product] {
            let res = calibrate(&m, c.beta, v, &SolverConfig::default()).unwrap();
            if res.converged {
                let r = residual_vector(&res.params(), &m, v).unwrap();
                prop_assert!(max_norm(&r) < 1e-10);
                prop_assert_eq!(r, res.residuals);
            }
        }
    }

    #[test]
    fn reduced_and_newton_agree(seed in any::<u64>()) {
        let (c, m) = case(seed);
        let cfg = SolverConfig::default();
        let full = calibrate(&m, c.beta, EquationVariant::Sum, &cfg).unwrap();
        let red = calibrate_reduced(&m, c.beta, &cfg).unwrap();
        prop_assert!(full.converged && red.converged);
        // where the reduced residual is nearly flat, rounding alone moves the
        // root by about eps / |g'(tau)|
        let (a, b, _) = reduced_quadratic(c.beta, &m);
        let slope = (c.tau * (2.0 * a * c.tau + b)).abs();
        let tol = 1e-8 + 1e-15 / slope;
        prop_assert!((full.tau - red.tau).abs() < tol, "{} vs {}, tol {tol:e}", full.tau, red.tau);
        prop_assert!((full.ln_eta - red.ln_eta).abs() < tol);
        prop_assert!((full.ln_lambda - red.ln_lambda).abs() < tol);
    }
}

#[test]
fn grid_oracle_agrees_with_newton() {
    let cfg = SolverConfig::default();
    for seed in 0..10 {
        let (c, m) = case(1000 + seed);
        let full = calibrate(&m, c.beta, EquationVariant::Sum, &cfg).unwrap();
        let grid = grid_oracle(&m, c.beta, EquationVariant::Sum, 1e-3, &cfg).unwrap();
        assert!(
            (full.tau - grid.tau).abs() <= 1e-3,
            "seed {seed}: newton {} grid {}",
            full.tau,
            grid.tau
        );
    }
}

#[test]
fn result_json_roundtrips_through_serde() {
    let (c, m) = case(5);
    let res = calibrate(&m, c.beta, EquationVariant::Sum, &SolverConfig::default()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&res.to_json()).unwrap();
    assert_eq!(v["tau"].as_f64().unwrap(), res.tau);
    assert_eq!(v["eta"].as_f64().unwrap(), res.eta);
    assert_eq!(v["lambda_"].as_f64().unwrap(), res.lambda_);
    assert_eq!(v["converged"], serde_json::Value::Bool(true));
}
