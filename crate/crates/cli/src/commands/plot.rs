use anyhow::anyhow;

use super::Context;
use crate::manifest::RunManifest;
use crate::output::{emit, input_error, read_file, CmdResult, EXIT_OK};
use crate::svg::{render, PlotInput};
use crate::PlotArgs;

pub fn run(ctx: &Context, args: &PlotArgs) -> CmdResult {
    let text = read_file(&args.input)?;
    let input = PlotInput::from_calibration_json(&text)
        .map_err(|e| input_error(anyhow!("{}: {e:#}", args.input.display())))?;
    let manifest = RunManifest::new("plot", ctx.reproducible).input(&args.input);
    let svg = render(&input, &manifest.json())
        .map_err(|e| input_error(anyhow!("{}: {e}", args.input.display())))?;
    emit(Some(&args.out), &svg)?;
    Ok(EXIT_OK)
}
