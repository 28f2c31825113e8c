use anyhow::anyhow;
use sfm_core::classify::{classify_all, parse_comparisons, InvestorClass, Labeled};
use sfm_core::jsonfmt::{self, fmt17, JsonObject};
use sfm_core::moments::MANIFEST_KEY;

use super::Context;
use crate::manifest::RunManifest;
use crate::output::{emit, human, input_error, read_file, table, CmdResult, EXIT_OK};
use crate::{ClassifyArgs, Format};

pub fn run(ctx: &Context, args: &ClassifyArgs) -> CmdResult {
    if args.epsilon.is_nan() || args.epsilon <= 0.0 {
        return Err(input_error(anyhow!("--epsilon must be > 0")));
    }
    let format = ctx.format_or(Format::Text);
    let text = read_file(&args.input)?;
    let records = parse_comparisons::<f64>(&text)
        .map_err(|e| input_error(anyhow!("{}: {e}", args.input.display())))?;
    let labeled = classify_all(&records, args.epsilon);
    let manifest = RunManifest::new("classify", ctx.reproducible)
        .input(&args.input)
        .flag("epsilon", args.epsilon)
        .flag("format", format.name());

    let body = match format {
        Format::Json => {
            let items: Vec<String> = labeled.iter().map(record_json).collect();
            JsonObject::new()
                .raw(MANIFEST_KEY, manifest.json())
                .raw("records", jsonfmt::array(&items))
                .render()
                + "\n"
        }
        Format::Csv => {
            let mut out = manifest.comment_block();
            out.push_str(
                "year,investor_class,beta,tau,certain_utility,uncertain_utility,sfom,label\n",
            );
            for l in &labeled {
                let c = &l.comparison;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    c.year,
                    class_key(c.investor_class),
                    c.beta.map(fmt17).unwrap_or_default(),
                    c.tau.map(fmt17).unwrap_or_default(),
                    fmt17(c.certain_utility),
                    fmt17(c.uncertain_utility),
                    fmt17(c.sfom),
                    label_key(l)
                ));
            }
            out
        }
        Format::Text => manifest.comment_block() + &render_text(&labeled),
    };
    emit(args.out.as_deref(), &body)?;
    Ok(EXIT_OK)
}

fn class_key(c: InvestorClass) -> &'static str {
    match c {
        InvestorClass::RiskFreeAsset => "RISK_FREE_ASSET",
        InvestorClass::Equity => "EQUITY",
    }
}

fn label_key(l: &Labeled<f64>) -> String {
    serde_json::to_value(l.label)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn record_json(l: &Labeled<f64>) -> String {
    let c = &l.comparison;
    let mut o = JsonObject::new()
        .num("certain_utility", c.certain_utility)
        .num("uncertain_utility", c.uncertain_utility)
        .num("sfom", c.sfom)
        .str("investor_class", class_key(c.investor_class))
        .int("year", c.year as i64);
    if let Some(b) = c.beta {
        o = o.num("beta", b);
    }
    if let Some(t) = c.tau {
        o = o.num("tau", t);
    }
    o.str("label", &label_key(l)).render()
}

/// One table per investor class, in input order.
fn render_text(labeled: &[Labeled<f64>]) -> String {
    let mut out = String::new();
    for class in [InvestorClass::Equity, InvestorClass::RiskFreeAsset] {
        let group: Vec<&Labeled<f64>> = labeled
            .iter()
            .filter(|l| l.comparison.investor_class == class)
            .collect();
        if group.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&format!("{} investors\n", class.title()));
        let mut years: Vec<i32> = group.iter().map(|l| l.comparison.year).collect();
        years.dedup();
        let type_header = if years.len() == 1 {
            format!("Type of investor Year {}", years[0])
        } else {
            "Type of investor".to_string()
        };
        let rows: Vec<Vec<String>> = group
            .iter()
            .map(|l| {
                let c = &l.comparison;
                vec![
                    c.beta.map(|b| b.to_string()).unwrap_or_else(|| "-".into()),
                    c.tau.map(human).unwrap_or_else(|| "-".into()),
                    human(c.sfom),
                    format!("{:.8}", c.certain_utility),
                    format!("{:.8}", c.uncertain_utility),
                    l.label.title().to_string(),
                ]
            })
            .collect();
        out.push_str(&table(
            &[
                "STDF",
                "CRRA",
                "SFOM",
                "Certain Utility",
                "Uncertain Utility",
                &type_header,
            ],
            &rows,
        ));
    }
    out
}
