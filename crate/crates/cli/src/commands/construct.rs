use anyhow::anyhow;
use sfm_core::jsonfmt::JsonObject;
use sfm_core::moments::{parse_moments, MANIFEST_KEY};
use sfm_core::solver::construct_solvable_moments;

use super::Context;
use crate::manifest::RunManifest;
use crate::output::{emit, input_error, read_file, CmdResult, EXIT_OK};
use crate::ConstructArgs;

pub fn run(ctx: &Context, args: &ConstructArgs) -> CmdResult {
    let base = parse_moments::<f64>(&read_file(&args.base)?)
        .map_err(|e| input_error(anyhow!("{}: {e}", args.base.display())))?;
    let m = construct_solvable_moments(args.tau, args.eta, args.lambda, args.beta, &base)
        .map_err(input_error)?;
    let manifest = RunManifest::new("construct", ctx.reproducible)
        .input(&args.base)
        .flag("tau", args.tau)
        .flag("eta", args.eta)
        .flag("lambda", args.lambda)
        .flag("beta", args.beta);
    let body = JsonObject::new()
        .raw(MANIFEST_KEY, manifest.json())
        .extend(m.json_object())
        .render()
        + "\n";
    emit(args.out.as_deref(), &body)?;
    Ok(EXIT_OK)
}
