pub mod calibrate;
pub mod classify;
pub mod construct;
pub mod moments;
pub mod plot;
pub mod roundtrip;
pub mod simulate;

use std::fs::File;
use std::path::Path;

use sfm_core::dataset::{derive_series, parse_dataset, RiskFreeRule, YieldUnit};
use sfm_core::moments::{
    estimate_moments, EstimatorConfig, MeanMode, MomentEstimate, RhoMode, VarianceMode,
};
use sfm_core::MacroDataset64;

use crate::manifest::RunManifest;
use crate::output::{file_error, input_error, Failure};
use crate::{EstimatorArgs, Format, MeanModeArg, RfRuleArg, RhoModeArg, VarianceArg, YieldUnitArg};

pub struct Context {
    pub reproducible: bool,
    pub format: Option<Format>,
}

impl Context {
    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

impl EstimatorArgs {
    pub fn config(&self) -> EstimatorConfig {
        EstimatorConfig {
            variance: match self.variance {
                VarianceArg::Sample => VarianceMode::Sample,
                VarianceArg::Population => VarianceMode::Population,
            },
            mean: match self.mean_mode {
                MeanModeArg::Arithmetic => MeanMode::Arithmetic,
                MeanModeArg::Geometric => MeanMode::Geometric,
            },
            rho: match self.rho_mode {
                RhoModeArg::Split => RhoMode::Split,
                RhoModeArg::Shared => RhoMode::Shared,
            },
        }
    }

    pub fn record(&self, m: RunManifest) -> RunManifest {
        let mut m = m
            .flag("variance", name(&self.variance))
            .flag("mean-mode", name(&self.mean_mode))
            .flag("rho-mode", name(&self.rho_mode))
            .flag("yield-unit", name(&self.yield_unit))
            .flag("rf-rule", name(&self.rf_rule));
        if let Some(pi) = self.expected_inflation {
            m = m.flag("expected-inflation", pi);
        }
        if let Some(y) = self.from_year {
            m = m.flag("from-year", y);
        }
        if let Some(y) = self.to_year {
            m = m.flag("to-year", y);
        }
        m
    }
}

/// The command-line spelling of a value-enum flag.
pub fn name<E: clap::ValueEnum>(v: &E) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}

/// Reads a dataset, applies the year window and estimates moments.
pub fn estimate_from_data(
    path: &Path,
    args: &EstimatorArgs,
) -> Result<MomentEstimate<f64>, Failure> {
    let file = File::open(path).map_err(|e| file_error(path, e))?;
    let unit = match args.yield_unit {
        YieldUnitArg::Decimal => YieldUnit::Decimal,
        YieldUnitArg::Percent => YieldUnit::Percent,
    };
    let mut data: MacroDataset64 = parse_dataset(file, unit).map_err(|e| file_error(path, e))?;
    if args.from_year.is_some() || args.to_year.is_some() {
        let from = args.from_year.unwrap_or(data.first_year());
        let to = args.to_year.unwrap_or(data.last_year());
        data = data.window(from, to).map_err(|e| file_error(path, e))?;
    }
    let rule = match args.rf_rule {
        RfRuleArg::ExPost => RiskFreeRule::ExPost,
        RfRuleArg::ExAnte => RiskFreeRule::ExAnte {
            expected_inflation: args
                .expected_inflation
                .unwrap_or_else(|| data.mean_inflation()),
        },
    };
    if args.expected_inflation.is_some() && args.rf_rule == RfRuleArg::ExPost {
        return Err(input_error(anyhow::anyhow!(
            "--expected-inflation requires --rf-rule ex-ante"
        )));
    }
    let series = derive_series(&data, rule).map_err(|e| file_error(path, e))?;
    estimate_moments(&series, args.config()).map_err(|e| file_error(path, e))
}
