use anyhow::anyhow;
use sfm_core::jsonfmt::{fmt17, JsonObject};
use sfm_core::moments::MANIFEST_KEY;
use sfm_core::simulate::{generate_economy, mc_identity_check, GENERATOR};
use sfm_core::EconomySpec64;

use super::Context;
use crate::manifest::RunManifest;
use crate::output::{emit, human, input_error, table, CmdResult, EXIT_OK};
use crate::{Format, SimulateArgs};

pub fn run(ctx: &Context, args: &SimulateArgs) -> CmdResult {
    let format = ctx.format_or(Format::Json);
    let spec = EconomySpec64 {
        mu_x: args.mu_x,
        sigma_x: args.sigma_x,
        mu_k: args.mu_k,
        sigma_k: args.sigma_k,
        rho_xk: args.rho_xk,
        n: args.draws,
        seed: args.seed,
    };
    spec.validate().map_err(input_error)?;
    let report = mc_identity_check(&spec, args.draws, args.tau).map_err(input_error)?;
    let manifest = RunManifest::new("simulate", ctx.reproducible)
        .flag("mu-x", args.mu_x)
        .flag("sigma-x", args.sigma_x)
        .flag("mu-k", args.mu_k)
        .flag("sigma-k", args.sigma_k)
        .flag("rho-xk", args.rho_xk)
        .flag("seed", args.seed)
        .flag("draws", args.draws)
        .flag("tau", args.tau)
        .flag("format", format.name());

    let body = match format {
        Format::Json => {
            JsonObject::new()
                .raw(MANIFEST_KEY, manifest.json())
                .extend(report.json_object())
                .render()
                + "\n"
        }
        Format::Csv => {
            let mut out = manifest.comment_block();
            out.push_str("identity,closed_form,sample,std_error,z_score,pass\n");
            for c in &report.checks {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    c.name,
                    fmt17(c.closed_form),
                    fmt17(c.sample),
                    fmt17(c.std_error),
                    fmt17(c.z_score),
                    c.pass
                ));
            }
            out
        }
        Format::Text => {
            let rows: Vec<Vec<String>> = report
                .checks
                .iter()
                .map(|c| {
                    vec![
                        c.name.to_string(),
                        human(c.closed_form),
                        human(c.sample),
                        human(c.std_error),
                        format!("{:.2}", c.z_score),
                        if c.pass { "ok" } else { "DISCREPANCY" }.to_string(),
                    ]
                })
                .collect();
            let mut out = manifest.comment_block();
            out.push_str(&format!("generator: {GENERATOR}, seed {}\n", args.seed));
            out.push_str(&table(
                &[
                    "identity",
                    "closed form",
                    "sample",
                    "std error",
                    "z",
                    "status",
                ],
                &rows,
            ));
            out
        }
    };
    emit(args.out.as_deref(), &body)?;

    if let Some(path) = &args.series {
        let n = args.series_len.max(2);
        let series = generate_economy(&EconomySpec64 { n, ..spec }).map_err(input_error)?;
        let mut csv = manifest.comment_block();
        csv.push_str("t,x,z,k,re_gross\n");
        for i in 0..series.len() {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                series.year[i],
                fmt17(series.x[i]),
                fmt17(series.z[i]),
                fmt17(series.k[i]),
                fmt17(series.re_gross[i])
            ));
        }
        emit(Some(path), &csv)?;
    }

    if !report.all_pass() {
        let bad: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name)
            .collect();
        eprintln!(
            "{}",
            anyhow!("warning: beyond 4 standard errors: {}", bad.join(", "))
        );
    }
    Ok(EXIT_OK)
}
