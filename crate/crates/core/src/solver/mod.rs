//! Calibration of `(tau, ln eta, ln lambda)` at a fixed discount factor.
//!
//! Three independent routes solve the same system:
//!
//! * [`calibrate`]: multi-start damped Newton on the full residual vector.
//! * [`calibrate_reduced`]: the equity-premium and Euler equations are affine
//!   in `ln eta` and `ln lambda`, so both are eliminated in closed form and
//!   the risk-free equation becomes a scalar function of `tau`, solved by a
//!   bracketing method.
//! * [`grid_oracle`]: derivative-free scan over `tau`.
//!
//! [`construct_solvable_moments`] runs the problem backwards, producing
//! moments with a known root.
//!
//! At `tau = 0` the risk-free residual equals minus the sum of the other two,
//! so `(0, ln eta(0), ln lambda(0))` solves the sum-form system for every
//! moment set. That root carries no information and is never reported; roots
//! with `|tau| <= TRIVIAL_TAU` are discarded.

mod construct;
mod linalg;
mod oracle;
mod reduced;
pub mod roundtrip;

use rayon::prelude::*;
use thiserror::Error;

use crate::jsonfmt::{self, JsonObject};
use crate::model::{
    self, analytic_jacobian, residual_vector, validate_beta, EquationVariant, ModelError,
    ModelParams,
};
use crate::moments::LogMoments;
use crate::Scalar;

pub use construct::construct_solvable_moments;
pub use oracle::grid_oracle;
pub use reduced::{brent, calibrate_reduced, reduced_quadratic, reduced_residual};

/// Roots with `|tau|` at or below this are the structural risk-neutral root.
pub const TRIVIAL_TAU: f64 = 1e-8;

/// Minimum distance in `(tau, ln eta, ln lambda)` between reported roots.
pub const ROOT_SEPARATION: f64 = 1e-6;

/// A Newton iterate counts as converged only if the next step moves `tau` by
/// at most this fraction of `|tau|`.
pub const RESOLVED_STEP: f64 = 1e-3;

/// `|1 - tau * rho_xr * sigma_x * sigma_r|` below this is flagged as
/// near-singular in diagnostics.
pub const NEAR_SINGULAR: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("moments have a degenerate (zero) log variance; refusing to calibrate")]
    DegenerateMoments,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("no sign change of the reduced residual in tau bounds; scanned (tau, residual): {}",
        format_scan(.scanned))]
    NoRoot { scanned: Vec<(f64, f64)> },
    #[error("singular construction: {0}")]
    Singular(String),
}

fn format_scan(scanned: &[(f64, f64)]) -> String {
    scanned
        .iter()
        .map(|(t, g)| format!("({t:.4}, {g:.3e})"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    /// Convergence threshold on the max-norm of the residual vector.
    pub tol_residual: T,
    pub max_iter: usize,
    /// Relative step of the central difference in the `tau` direction.
    pub fd_step: T,
    /// Absolute floor of the finite-difference step.
    pub fd_floor: T,
    pub tau_starts: Vec<T>,
    /// Open interval an admissible `tau` must lie in.
    pub tau_bounds: (T, T),
    pub max_halvings: usize,
    /// Run the Newton starts on the rayon pool. The result does not depend
    /// on this.
    pub parallel: bool,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        // 1e-12 is out of reach in single precision.
        let tol = T::lit(1e-12).max(T::lit(16.0) * T::epsilon());
        Self {
            tol_residual: tol,
            max_iter: 200,
            fd_step: T::lit(1e-7).max(T::epsilon().sqrt()),
            fd_floor: T::lit(1e-10),
            tau_starts: (0..10).map(|i| T::lit(0.5 + i as f64)).collect(),
            tau_bounds: (T::zero(), T::lit(10.0)),
            max_halvings: 40,
            parallel: true,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<(), SolverError> {
        let (lo, hi) = self.tau_bounds;
        if !(self.tol_residual > T::zero()) {
            return Err(SolverError::InvalidConfig(
                "tol_residual must be > 0".into(),
            ));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(SolverError::InvalidConfig(format!(
                "tau_bounds ({lo}, {hi}) is empty"
            )));
        }
        if self.max_iter == 0 {
            return Err(SolverError::InvalidConfig("max_iter must be > 0".into()));
        }
        if !(self.fd_step > T::zero()) {
            return Err(SolverError::InvalidConfig("fd_step must be > 0".into()));
        }
        if let Some(s) = self.tau_starts.iter().find(|&&s| !(s > lo && s < hi)) {
            return Err(SolverError::InvalidConfig(format!(
                "tau start {s} outside bounds ({lo}, {hi})"
            )));
        }
        Ok(())
    }

    fn admissible(&self, tau: T) -> bool {
        let (lo, hi) = self.tau_bounds;
        tau > lo && tau < hi && tau.abs() > T::lit(TRIVIAL_TAU)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Newton,
    Reduced,
    Grid,
}

impl SolveMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Newton => "newton",
            Self::Reduced => "reduced",
            Self::Grid => "grid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootInfo<T> {
    pub tau: T,
    pub eta: T,
    pub lambda_: T,
    pub residual_norm: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics<T> {
    /// Starts (Newton), brackets (reduced) or grid points (grid) examined.
    pub attempts: usize,
    /// Attempts that reached the residual tolerance.
    pub converged_attempts: usize,
    pub rejected_trivial: usize,
    pub rejected_out_of_bounds: usize,
    /// `1 - tau * rho_xr * sigma_x * sigma_r` at the reported point.
    pub eq3_coefficient: T,
    pub near_singular: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult<T> {
    pub beta: T,
    pub tau: T,
    pub eta: T,
    pub lambda_: T,
    pub ln_eta: T,
    pub ln_lambda: T,
    pub residuals: [T; 3],
    pub iterations: usize,
    pub variant: EquationVariant,
    pub method: SolveMethod,
    pub converged: bool,
    pub all_roots: Vec<RootInfo<T>>,
    pub diagnostics: Diagnostics<T>,
}

impl<T: Scalar> CalibrationResult<T> {
    pub fn residual_norm(&self) -> T {
        max_norm(&self.residuals)
    }

    pub fn params(&self) -> ModelParams<T> {
        ModelParams {
            beta: self.beta,
            tau: self.tau,
            ln_eta: self.ln_eta,
            ln_lambda: self.ln_lambda,
        }
    }

    /// Fixed-order JSON with 17 significant digits.
    pub fn to_json(&self) -> String {
        self.json_object().render()
    }

    pub fn json_object(&self) -> JsonObject {
        let roots: Vec<String> = self
            .all_roots
            .iter()
            .map(|r| {
                JsonObject::new()
                    .num("tau", r.tau)
                    .num("eta", r.eta)
                    .num("lambda_", r.lambda_)
                    .num("residual_norm", r.residual_norm)
                    .render()
            })
            .collect();
        let d = &self.diagnostics;
        let diagnostics = JsonObject::new()
            .int("attempts", d.attempts as i64)
            .int("converged_attempts", d.converged_attempts as i64)
            .int("rejected_trivial", d.rejected_trivial as i64)
            .int("rejected_out_of_bounds", d.rejected_out_of_bounds as i64)
            .num("eq3_coefficient", d.eq3_coefficient)
            .bool("near_singular", d.near_singular)
            .render();
        JsonObject::new()
            .num("beta", self.beta)
            .num("tau", self.tau)
            .num("eta", self.eta)
            .num("lambda_", self.lambda_)
            .num("ln_eta", self.ln_eta)
            .num("ln_lambda", self.ln_lambda)
            .raw("residuals", jsonfmt::num_array(&self.residuals))
            .int("iterations", self.iterations as i64)
            .str("variant", self.variant.name())
            .str("method", self.method.name())
            .bool("converged", self.converged)
            .raw("all_roots", jsonfmt::array(&roots))
            .raw("diagnostics", diagnostics)
    }
}

pub fn max_norm<T: Scalar>(r: &[T; 3]) -> T {
    r.iter().fold(T::zero(), |acc, v| {
        if v.is_nan() {
            T::infinity()
        } else {
            acc.max(v.abs())
        }
    })
}

fn l2_sq<T: Scalar>(r: &[T; 3]) -> T {
    r.iter().map(|&v| v * v).sum()
}

/// `ln eta` that zeroes the equity-premium residual at `tau`.
pub fn ln_eta_closed_form<T: Scalar>(tau: T, beta: T, m: &LogMoments<T>) -> T {
    (m.ln_mean_re() - m.ln_mean_rf()) - model::premium_terms(tau, m) - beta.ln()
}

/// `ln lambda` that zeroes the sum-form Euler residual at `tau`.
pub fn ln_lambda_closed_form<T: Scalar>(tau: T, beta: T, m: &LogMoments<T>) -> T {
    -beta.ln() - model::euler_bracket(tau, m)
}

/// Shared preconditions for every calibration entry point.
fn check_inputs<T: Scalar>(
    m: &LogMoments<T>,
    beta: T,
    cfg: &SolverConfig<T>,
) -> Result<(), SolverError> {
    validate_beta(beta)?;
    cfg.validate()?;
    if m.is_degenerate() {
        return Err(SolverError::DegenerateMoments);
    }
    // surfaces non-finite moments as a model domain error
    let probe = ModelParams {
        beta,
        tau: T::one(),
        ln_eta: T::zero(),
        ln_lambda: T::zero(),
    };
    residual_vector(&probe, m, EquationVariant::Sum)?;
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct NewtonOutcome<T> {
    x: [T; 3],
    residuals: [T; 3],
    iterations: usize,
    converged: bool,
}

fn params_of<T: Scalar>(beta: T, x: &[T; 3]) -> ModelParams<T> {
    ModelParams {
        beta,
        tau: x[0],
        ln_eta: x[1],
        ln_lambda: x[2],
    }
}

/// Jacobian with the `tau` column by central differences and the affine
/// columns analytic.
fn jacobian<T: Scalar>(
    beta: T,
    x: &[T; 3],
    m: &LogMoments<T>,
    v: EquationVariant,
    cfg: &SolverConfig<T>,
) -> Result<[[T; 3]; 3], ModelError> {
    let mut jac = analytic_jacobian(&params_of(beta, x), m, v)?;
    let h = (cfg.fd_step * x[0].abs()).max(cfg.fd_floor);
    let mut up = *x;
    let mut dn = *x;
    up[0] = x[0] + h;
    dn[0] = x[0] - h;
    let ru = residual_vector(&params_of(beta, &up), m, v)?;
    let rd = residual_vector(&params_of(beta, &dn), m, v)?;
    let width = up[0] - dn[0];
    for row in 0..3 {
        jac[row][0] = (ru[row] - rd[row]) / width;
    }
    Ok(jac)
}

/// Re-solves the variables that enter linearly at fixed `tau`: `ln eta` in
/// the equity-premium equation and, in the sum form, `ln lambda` in the Euler
/// condition. The product form is left alone so both of its branches stay
/// reachable.
fn project<T: Scalar>(x: [T; 3], beta: T, m: &LogMoments<T>, v: EquationVariant) -> [T; 3] {
    let ln_lambda = match v {
        EquationVariant::Sum => ln_lambda_closed_form(x[0], beta, m),
        EquationVariant::Product => x[2],
    };
    [x[0], ln_eta_closed_form(x[0], beta, m), ln_lambda]
}

/// Damped Newton from one start. Each trial point is compared with its
/// [`project`]ion and the better one is kept, which stops curvature in the
/// linear variables from stalling the line search when the remaining
/// residual is small. An iterate is converged when the residual meets the
/// tolerance and the next step in `tau` is below [`RESOLVED_STEP`] relative;
/// after that a couple of extra steps are taken while they still reduce the
/// residual.
fn newton<T: Scalar>(
    m: &LogMoments<T>,
    beta: T,
    v: EquationVariant,
    tau0: T,
    cfg: &SolverConfig<T>,
) -> NewtonOutcome<T> {
    const POLISH_STEPS: usize = 2;
    let mut x = [
        tau0,
        ln_eta_closed_form(tau0, beta, m),
        ln_lambda_closed_form(tau0, beta, m),
    ];
    let eval = |x: &[T; 3]| {
        residual_vector(&params_of(beta, x), m, v).unwrap_or([T::nan(), T::nan(), T::nan()])
    };
    let mut r = eval(&x);
    let mut iterations = 0;
    let mut polished = 0;
    let blowup = T::lit(1e6);

    let newton_step = |x: &[T; 3], r: &[T; 3]| {
        let jac = jacobian(beta, x, m, v, cfg).ok()?;
        linalg::solve3(jac, [-r[0], -r[1], -r[2]])
    };
    // a small residual is not enough where the system is flat, e.g. next to
    // the trivial root; the next step must also be small relative to tau
    let resolved = |x: &[T; 3], r: &[T; 3], step: Option<[T; 3]>| {
        max_norm(r) <= cfg.tol_residual
            && step.is_some_and(|s| s[0].abs() <= T::lit(RESOLVED_STEP) * x[0].abs())
    };

    while iterations < cfg.max_iter {
        let Some(step) = newton_step(&x, &r) else {
            break;
        };
        if resolved(&x, &r, Some(step)) {
            if polished >= POLISH_STEPS {
                break;
            }
            polished += 1;
        }
        let current = l2_sq(&r);
        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let trial = [
                x[0] + alpha * step[0],
                x[1] + alpha * step[1],
                x[2] + alpha * step[2],
            ];
            let projected = project(trial, beta, m, v);
            let (rt, rp) = (eval(&trial), eval(&projected));
            let (nt, np) = (l2_sq(&rt), l2_sq(&rp));
            let best = if np.is_finite() && !(np >= nt) {
                (projected, rp, np)
            } else {
                (trial, rt, nt)
            };
            if best.2.is_finite() && best.2 < current {
                accepted = Some((best.0, best.1));
                break;
            }
            alpha *= T::half();
        }
        iterations += 1;
        match accepted {
            Some((trial, rt)) => {
                x = trial;
                r = rt;
            }
            None => break,
        }
        if x.iter().any(|c| !c.is_finite() || c.abs() > blowup) {
            break;
        }
    }
    NewtonOutcome {
        x,
        residuals: r,
        iterations,
        converged: resolved(&x, &r, newton_step(&x, &r)),
    }
}

/// Candidate solution collected by any of the solvers before selection.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate<T> {
    pub x: [T; 3],
    pub residuals: [T; 3],
    pub iterations: usize,
}

fn distance<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> T {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| (p - q) * (p - q))
        .sum::<T>()
        .sqrt()
}

/// Deduplicates converged candidates and orders them by the selection
/// policy: smallest residual norm first, where norms within the tolerance of
/// each other tie, and ties go to the smallest nonnegative `tau`.
pub(crate) fn select_roots<T: Scalar>(mut roots: Vec<Candidate<T>>, tol: T) -> Vec<Candidate<T>> {
    // order first so deduplication keeps the best representative
    roots.sort_by(|a, b| compare_candidates(a, b, tol));
    let mut unique: Vec<Candidate<T>> = Vec::new();
    for c in roots {
        if unique
            .iter()
            .all(|u| distance(&u.x, &c.x) > T::lit(ROOT_SEPARATION))
        {
            unique.push(c);
        }
    }
    unique
}

fn compare_candidates<T: Scalar>(a: &Candidate<T>, b: &Candidate<T>, tol: T) -> std::cmp::Ordering {
    let (na, nb) = (max_norm(&a.residuals), max_norm(&b.residuals));
    let tie = (na - nb).abs() <= tol || (na <= tol && nb <= tol);
    if !tie {
        return na.partial_cmp(&nb).unwrap_or(std::cmp::Ordering::Equal);
    }
    let key = |t: T| (t < T::zero(), t.abs());
    let (ka, kb) = (key(a.x[0]), key(b.x[0]));
    ka.0.cmp(&kb.0)
        .then(ka.1.partial_cmp(&kb.1).unwrap_or(std::cmp::Ordering::Equal))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble<T: Scalar>(
    m: &LogMoments<T>,
    beta: T,
    v: EquationVariant,
    method: SolveMethod,
    primary: Candidate<T>,
    roots: &[Candidate<T>],
    converged: bool,
    mut diagnostics: Diagnostics<T>,
) -> CalibrationResult<T> {
    let coef = model::eq3_coefficient(primary.x[0], m);
    diagnostics.eq3_coefficient = coef;
    diagnostics.near_singular = coef.abs() < T::lit(NEAR_SINGULAR);
    CalibrationResult {
        beta,
        tau: primary.x[0],
        eta: primary.x[1].exp(),
        lambda_: primary.x[2].exp(),
        ln_eta: primary.x[1],
        ln_lambda: primary.x[2],
        residuals: primary.residuals,
        iterations: primary.iterations,
        variant: v,
        method,
        converged,
        all_roots: roots
            .iter()
            .map(|c| RootInfo {
                tau: c.x[0],
                eta: c.x[1].exp(),
                lambda_: c.x[2].exp(),
                residual_norm: max_norm(&c.residuals),
            })
            .collect(),
        diagnostics,
    }
}

/// Solves the three equations for `(tau, ln eta, ln lambda)` by damped
/// Newton from every configured start.
///
/// Each start initializes `ln eta` and `ln lambda` from their closed forms at
/// the starting `tau`. All distinct admissible roots are reported; the
/// primary one follows the selection policy of [`select_roots`]. If no start
/// converges the result carries the best iterate and `converged == false`.
pub fn calibrate<T: Scalar>(
    m: &LogMoments<T>,
    beta: T,
    v: EquationVariant,
    cfg: &SolverConfig<T>,
) -> Result<CalibrationResult<T>, SolverError> {
    check_inputs(m, beta, cfg)?;
    let run = |&tau0: &T| newton(m, beta, v, tau0, cfg);
    let outcomes: Vec<NewtonOutcome<T>> = if cfg.parallel {
        cfg.tau_starts.par_iter().map(run).collect()
    } else {
        cfg.tau_starts.iter().map(run).collect()
    };

    let mut diagnostics = Diagnostics {
        attempts: outcomes.len(),
        ..Default::default()
    };
    let mut admissible = Vec::new();
    for o in &outcomes {
        if !o.converged {
            continue;
        }
        diagnostics.converged_attempts += 1;
        if o.x[0].abs() <= T::lit(TRIVIAL_TAU) {
            diagnostics.rejected_trivial += 1;
        } else if !cfg.admissible(o.x[0]) {
            diagnostics.rejected_out_of_bounds += 1;
        } else {
            admissible.push(Candidate {
                x: o.x,
                residuals: o.residuals,
                iterations: o.iterations,
            });
        }
    }
    let roots = select_roots(admissible, cfg.tol_residual);
    if let Some(&primary) = roots.first() {
        return Ok(assemble(
            m,
            beta,
            v,
            SolveMethod::Newton,
            primary,
            &roots,
            true,
            diagnostics,
        ));
    }
    // nothing converged inside the bounds: report the best iterate
    let best = outcomes
        .iter()
        .min_by(|a, b| {
            max_norm(&a.residuals)
                .partial_cmp(&max_norm(&b.residuals))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("at least one start");
    let best = Candidate {
        x: best.x,
        residuals: best.residuals,
        iterations: best.iterations,
    };
    Ok(assemble(
        m,
        beta,
        v,
        SolveMethod::Newton,
        best,
        &[],
        false,
        diagnostics,
    ))
}
