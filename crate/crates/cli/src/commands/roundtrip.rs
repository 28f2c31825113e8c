use anyhow::anyhow;
use sfm_core::jsonfmt::{fmt17, JsonObject};
use sfm_core::moments::MANIFEST_KEY;
use sfm_core::solver::roundtrip::{run_roundtrip, RECOVERY_TOLERANCE};
use sfm_core::SolverConfig64;

use super::Context;
use crate::manifest::RunManifest;
use crate::output::{emit, human, input_error, CmdResult, EXIT_NUMERIC, EXIT_OK};
use crate::{Format, RoundtripArgs};

pub fn run(ctx: &Context, args: &RoundtripArgs) -> CmdResult {
    if args.count == 0 {
        return Err(input_error(anyhow!("--count must be at least 1")));
    }
    let format = ctx.format_or(Format::Json);
    let report =
        run_roundtrip(args.count, args.seed, &SolverConfig64::default()).map_err(input_error)?;
    let manifest = RunManifest::new("roundtrip", ctx.reproducible)
        .flag("count", args.count)
        .flag("seed", args.seed)
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
            out.push_str("tau_star,eta_star,lambda_star,beta,tau,eta,lambda,error\n");
            for o in &report.outcomes {
                let (t, e, l) = o.recovered.unwrap_or((f64::NAN, f64::NAN, f64::NAN));
                let row = [
                    o.case.tau,
                    o.case.eta,
                    o.case.lambda_,
                    o.case.beta,
                    t,
                    e,
                    l,
                    o.error,
                ];
                let cells: Vec<String> = row.iter().map(|&v| fmt17(v)).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        Format::Text => format!(
            "{}cycles: {}\nseed: {}\nmax recovery error: {:.3e}\nfailures (error >= {}): {}\n",
            manifest.comment_block(),
            args.count,
            args.seed,
            report.max_error(),
            human(RECOVERY_TOLERANCE),
            report.failures()
        ),
    };
    emit(args.out.as_deref(), &body)?;
    if report.failures() > 0 {
        eprintln!(
            "error: {} of {} cycles exceeded the recovery tolerance",
            report.failures(),
            args.count
        );
        return Ok(EXIT_NUMERIC);
    }
    Ok(EXIT_OK)
}
