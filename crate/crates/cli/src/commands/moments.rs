use sfm_core::jsonfmt::JsonObject;
use sfm_core::moments::MANIFEST_KEY;
use sfm_core::LogMoments64;

use super::{estimate_from_data, Context};
use crate::manifest::RunManifest;
use crate::output::{emit, human, table, CmdResult, EXIT_OK};
use crate::{Format, MomentsArgs};

pub fn run(ctx: &Context, args: &MomentsArgs) -> CmdResult {
    let est = estimate_from_data(&args.data, &args.estimator)?;
    let format = ctx.format_or(Format::Json);
    let manifest = args
        .estimator
        .record(RunManifest::new("moments", ctx.reproducible).input(&args.data))
        .flag("format", format.name());

    let summary = summary(&est.moments, est.degenerate_variance);
    let body = match format {
        Format::Json => {
            JsonObject::new()
                .raw(MANIFEST_KEY, manifest.json())
                .extend(est.moments.json_object())
                .render()
                + "\n"
        }
        Format::Text => manifest.comment_block() + &summary,
        Format::Csv => {
            let m = &est.moments;
            let mut out = manifest.comment_block();
            out.push_str("field,value\n");
            for (k, v) in fields(m) {
                out.push_str(&format!("{k},{}\n", sfm_core::jsonfmt::fmt17(v)));
            }
            out.push_str(&format!("n_obs,{}\n", m.n_obs));
            out
        }
    };
    emit(args.out.as_deref(), &body)?;
    // a text body already is the summary
    if format != Format::Text {
        if args.out.is_some() {
            print!("{summary}");
        } else {
            eprint!("{summary}");
        }
    }
    if est.degenerate_variance {
        eprintln!("warning: a log series has zero variance; its correlations were set to 0");
    }
    Ok(EXIT_OK)
}

fn fields(m: &LogMoments64) -> [(&'static str, f64); 10] {
    [
        ("mu_x", m.mu_x),
        ("sigma2_x", m.sigma2_x),
        ("mu_k", m.mu_k),
        ("sigma2_k", m.sigma2_k),
        ("mu_r", m.mu_r),
        ("sigma2_r", m.sigma2_r),
        ("rho_xk", m.rho_xk),
        ("rho_xr", m.rho_xr),
        ("mean_re_gross", m.mean_re_gross),
        ("mean_rf_gross", m.mean_rf_gross),
    ]
}

fn summary(m: &LogMoments64, degenerate: bool) -> String {
    let rows: Vec<Vec<String>> = fields(m)
        .iter()
        .map(|(k, v)| vec![k.to_string(), human(*v)])
        .chain(std::iter::once(vec![
            "n_obs".to_string(),
            m.n_obs.to_string(),
        ]))
        .collect();
    let mut out = table(&["moment", "value"], &rows);
    out.push_str(&format!(
        "equity premium (ln E(Re) - ln Rf): {}\n",
        human(m.ln_mean_re() - m.ln_mean_rf())
    ));
    if degenerate {
        out.push_str("note: degenerate variance\n");
    }
    out
}
