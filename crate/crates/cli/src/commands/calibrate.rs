use anyhow::anyhow;
use sfm_core::jsonfmt::{self, fmt17, JsonObject};
use sfm_core::model::EquationVariant;
use sfm_core::moments::{parse_moments, MANIFEST_KEY};
use sfm_core::solver::{calibrate, calibrate_reduced, grid_oracle, SolverError};
use sfm_core::{CalibrationResult64, LogMoments64, SolverConfig64};

use super::{estimate_from_data, Context};
use crate::manifest::RunManifest;
use crate::output::{
    emit, human, input_error, numeric_error, read_file, table, CmdResult, Failure, EXIT_NUMERIC,
    EXIT_OK,
};
use crate::svg::{self, PlotInput, PlotPoint};
use crate::{CalibrateArgs, Format, SolverArg, VariantArg};

pub fn run(ctx: &Context, args: &CalibrateArgs) -> CmdResult {
    let format = ctx.format_or(Format::Text);
    let mut manifest = RunManifest::new("calibrate", ctx.reproducible);
    let moments = match (&args.moments, &args.data) {
        (Some(path), _) => {
            manifest = manifest.input(path);
            parse_moments::<f64>(&read_file(path)?)
                .map_err(|e| input_error(anyhow!("{}: {e}", path.display())))?
        }
        (None, Some(path)) => {
            manifest = args.estimator.record(manifest.input(path));
            estimate_from_data(path, &args.estimator)?.moments
        }
        (None, None) => {
            return Err(input_error(anyhow!(
                "one of --moments or --data is required"
            )))
        }
    };

    let betas = match &args.sweep {
        Some(b) if b.is_empty() => return Err(input_error(anyhow!("--sweep is empty"))),
        Some(b) => b.clone(),
        None => vec![args.beta],
    };
    let variant = match args.variant {
        VariantArg::Sum => EquationVariant::Sum,
        VariantArg::Product => EquationVariant::Product,
    };
    if args.solver == SolverArg::Reduced && variant != EquationVariant::Sum {
        return Err(input_error(anyhow!(
            "--solver reduced supports only --variant sum"
        )));
    }
    let cfg = solver_config(args)?;

    manifest = manifest
        .flag(
            "betas",
            betas
                .iter()
                .map(|b| b.to_string())
                .collect::<Vec<_>>()
                .join(","),
        )
        .flag("variant", variant.name())
        .flag("solver", solver_name(args.solver))
        .flag("tol", format!("{:e}", cfg.tol_residual))
        .flag("tau-bounds", format!("{},{}", args.tau_min, args.tau_max))
        .flag("format", format.name());
    if args.solver == SolverArg::Grid {
        manifest = manifest.flag("resolution", args.resolution);
    }

    let mut results = Vec::with_capacity(betas.len());
    for &beta in &betas {
        let res = match args.solver {
            SolverArg::Newton => calibrate(&moments, beta, variant, &cfg),
            SolverArg::Reduced => calibrate_reduced(&moments, beta, &cfg),
            SolverArg::Grid => grid_oracle(&moments, beta, variant, args.resolution, &cfg),
        };
        results.push(res.map_err(|e| solver_failure(beta, e))?);
    }

    let body = match format {
        Format::Json => render_json(&manifest, &moments, &results),
        Format::Text => manifest.comment_block() + &render_text(&results),
        Format::Csv => manifest.comment_block() + &render_csv(&results),
    };
    emit(args.out.as_deref(), &body)?;

    if let Some(path) = &args.plot {
        let input = PlotInput {
            moments,
            points: results.iter().map(PlotPoint::from).collect(),
        };
        let svg = svg::render(&input, &manifest.json()).map_err(input_error)?;
        emit(Some(path), &svg)?;
    }

    if results.iter().all(|r| r.converged) {
        Ok(EXIT_OK)
    } else {
        eprintln!("error: calibration did not converge for at least one discount factor");
        Ok(EXIT_NUMERIC)
    }
}

fn solver_name(s: SolverArg) -> &'static str {
    match s {
        SolverArg::Newton => "newton",
        SolverArg::Reduced => "reduced",
        SolverArg::Grid => "grid",
    }
}

fn solver_config(args: &CalibrateArgs) -> Result<SolverConfig64, Failure> {
    let mut cfg = SolverConfig64::default();
    if let Some(tol) = args.tol {
        cfg.tol_residual = tol;
    }
    let (lo, hi) = (args.tau_min, args.tau_max);
    cfg.tau_bounds = (lo, hi);
    if lo < hi {
        cfg.tau_starts.retain(|&t| t > lo && t < hi);
        if cfg.tau_starts.is_empty() {
            cfg.tau_starts.push(0.5 * (lo + hi));
        }
    }
    cfg.validate().map_err(input_error)?;
    Ok(cfg)
}

fn solver_failure(beta: f64, e: SolverError) -> Failure {
    let numeric = matches!(e, SolverError::NoRoot { .. } | SolverError::Singular(_));
    let e = anyhow!("beta {beta}: {e}");
    if numeric {
        numeric_error(e)
    } else {
        input_error(e)
    }
}

pub fn render_json(
    manifest: &RunManifest,
    m: &LogMoments64,
    results: &[CalibrationResult64],
) -> String {
    let items: Vec<String> = results.iter().map(|r| r.to_json()).collect();
    JsonObject::new()
        .raw(MANIFEST_KEY, manifest.json())
        .raw("moments", m.to_json())
        .raw("results", jsonfmt::array(&items))
        .render()
        + "\n"
}

fn render_text(results: &[CalibrationResult64]) -> String {
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            vec![
                format!("{}", r.beta),
                human(r.eta),
                human(r.lambda_),
                human(r.tau),
                if r.converged { "yes" } else { "no" }.to_string(),
                format!("{:.2e}", r.residual_norm()),
            ]
        })
        .collect();
    let mut out = table(
        &[
            "STDF",
            "SFOM (Risk-free asset)",
            "SFOM (Equity)",
            "CRRA",
            "converged",
            "max |residual|",
        ],
        &rows,
    );
    for r in results {
        if r.all_roots.len() > 1 {
            let others: Vec<String> = r.all_roots.iter().skip(1).map(|x| human(x.tau)).collect();
            out.push_str(&format!(
                "note: beta {} has further roots at tau = {}\n",
                r.beta,
                others.join(", ")
            ));
        }
        if !r.converged {
            let d = &r.diagnostics;
            out.push_str(&format!(
                "note: beta {} has no admissible root ({} of {} starts converged, {} to the trivial root tau = 0, {} outside the bounds)\n",
                r.beta, d.converged_attempts, d.attempts, d.rejected_trivial, d.rejected_out_of_bounds
            ));
        }
        if r.diagnostics.near_singular {
            out.push_str(&format!(
                "note: beta {} is near the singular risk-free equation\n",
                r.beta
            ));
        }
    }
    if results.len() > 1 {
        let (lo, hi) = results
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.tau), hi.max(r.tau))
            });
        out.push_str(&format!("CRRA spread across STDF: {}\n", human(hi - lo)));
    }
    out
}

fn render_csv(results: &[CalibrationResult64]) -> String {
    let mut out = String::from(
        "beta,sfom_riskfree,sfom_equity,crra,ln_eta,ln_lambda,converged,residual_norm,variant,method\n",
    );
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            fmt17(r.beta),
            fmt17(r.eta),
            fmt17(r.lambda_),
            fmt17(r.tau),
            fmt17(r.ln_eta),
            fmt17(r.ln_lambda),
            r.converged,
            fmt17(r.residual_norm()),
            r.variant.name(),
            r.method.name()
        ));
    }
    out
}
