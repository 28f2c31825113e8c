//! Annual macro-finance table and the growth/return series derived from it.
//!
//! The CSV schema is fixed:
//!
//! ```text
//! year,real_price_index,real_dividend,real_consumption_pc,deflator,nominal_rf_yield
//! ```
//!
//! Price index and dividends are already in real terms. The risk-free yield is
//! nominal and is deflated with the consumption deflator when the derived
//! series are built.

use std::io::Read;

use thiserror::Error;

use crate::Scalar;

pub const COLUMNS: [&str; 6] = [
    "year",
    "real_price_index",
    "real_dividend",
    "real_consumption_pc",
    "deflator",
    "nominal_rf_yield",
];

/// Minimum number of years in a dataset.
pub const MIN_ROWS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("schema error: missing column `{0}`")]
    MissingColumn(String),
    #[error("schema error: unexpected column `{0}`")]
    ExtraColumn(String),
    #[error("schema error: empty input (header row required)")]
    Empty,
    #[error("parse error at line {line}: column `{column}`: {message}")]
    Parse {
        line: usize,
        column: String,
        message: String,
    },
    #[error(
        "domain error at line {line} (year {year}): `{column}` must be {requirement}, got {value}"
    )]
    Domain {
        line: usize,
        year: i32,
        column: String,
        requirement: &'static str,
        value: f64,
    },
    #[error("continuity error at line {line}: year {found} follows {previous}, expected {}", previous + 1)]
    Continuity {
        line: usize,
        previous: i32,
        found: i32,
    },
    #[error("insufficient data: {found} rows, at least {required} required")]
    InsufficientData { found: usize, required: usize },
    #[error("year window {from}..={to} selects fewer than {MIN_ROWS} rows")]
    EmptyWindow { from: i32, to: i32 },
    #[error("csv error: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum YieldUnit {
    /// 0.05 means five percent.
    #[default]
    Decimal,
    /// 5.0 means five percent; divided by 100 on ingest.
    Percent,
}

/// How the nominal short yield is turned into a gross real return.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RiskFreeRule<T> {
    /// Realized real return `(1 + i_t) * D_t / D_{t+1}`.
    #[default]
    ExPost,
    /// `(1 + i_t) / (1 + pi_e)` with a fixed expected inflation rate.
    ExAnte { expected_inflation: T },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YearRow<T> {
    pub year: i32,
    pub real_price_index: T,
    pub real_dividend: T,
    pub real_consumption_pc: T,
    pub deflator: T,
    pub nominal_rf_yield: T,
}

/// Validated annual table: consecutive years, positive levels, at least
/// [`MIN_ROWS`] rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroDataset<T> {
    rows: Vec<YearRow<T>>,
}

impl<T: Scalar> MacroDataset<T> {
    /// Validates `rows` and wraps them. Line numbers in errors assume row `i`
    /// came from line `i + 2` of a file with a header.
    pub fn new(rows: Vec<YearRow<T>>) -> Result<Self, DatasetError> {
        for (i, row) in rows.iter().enumerate() {
            validate_row(row, i + 2)?;
            if i > 0 {
                let previous = rows[i - 1].year;
                if row.year != previous + 1 {
                    return Err(DatasetError::Continuity {
                        line: i + 2,
                        previous,
                        found: row.year,
                    });
                }
            }
        }
        if rows.len() < MIN_ROWS {
            return Err(DatasetError::InsufficientData {
                found: rows.len(),
                required: MIN_ROWS,
            });
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[YearRow<T>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn first_year(&self) -> i32 {
        self.rows[0].year
    }

    pub fn last_year(&self) -> i32 {
        self.rows[self.rows.len() - 1].year
    }

    /// Restricts to the inclusive year range `from..=to`.
    pub fn window(&self, from: i32, to: i32) -> Result<Self, DatasetError> {
        let rows: Vec<_> = self
            .rows
            .iter()
            .filter(|r| r.year >= from && r.year <= to)
            .copied()
            .collect();
        if rows.len() < MIN_ROWS {
            return Err(DatasetError::EmptyWindow { from, to });
        }
        Self::new(rows)
    }

    /// Mean realized inflation `D_{t+1}/D_t - 1` over the sample.
    pub fn mean_inflation(&self) -> T {
        let n = T::from_count(self.rows.len() - 1);
        self.rows
            .windows(2)
            .map(|w| w[1].deflator / w[0].deflator - T::one())
            .sum::<T>()
            / n
    }

    /// Writes the dataset back out in the canonical CSV schema.
    pub fn to_csv(&self) -> String {
        let mut out = COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.year,
                r.real_price_index,
                r.real_dividend,
                r.real_consumption_pc,
                r.deflator,
                r.nominal_rf_yield
            ));
        }
        out
    }
}

fn validate_row<T: Scalar>(row: &YearRow<T>, line: usize) -> Result<(), DatasetError> {
    let positive = [
        ("real_price_index", row.real_price_index),
        ("real_dividend", row.real_dividend),
        ("real_consumption_pc", row.real_consumption_pc),
        ("deflator", row.deflator),
    ];
    for (column, value) in positive {
        if !(value.is_finite() && value > T::zero()) {
            return Err(DatasetError::Domain {
                line,
                year: row.year,
                column: column.to_string(),
                requirement: "finite and > 0",
                value: value.to_f64_lossy(),
            });
        }
    }
    if !row.nominal_rf_yield.is_finite() || row.nominal_rf_yield <= -T::one() {
        return Err(DatasetError::Domain {
            line,
            year: row.year,
            column: "nominal_rf_yield".to_string(),
            requirement: "finite and > -1",
            value: row.nominal_rf_yield.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Parses a dataset in the CSV schema above. Column order in the header is
/// free, but the set of columns must match exactly.
pub fn parse_dataset<T: Scalar, R: Read>(
    source: R,
    unit: YieldUnit,
) -> Result<MacroDataset<T>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| DatasetError::Csv(e.to_string()))?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(DatasetError::Empty);
    }
    let mut index = [0usize; COLUMNS.len()];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))?;
    }
    if let Some(extra) = headers.iter().find(|h| !COLUMNS.contains(h)) {
        return Err(DatasetError::ExtraColumn(extra.to_string()));
    }
    let percent = T::lit(100.0);

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| DatasetError::Csv(e.to_string()))?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(rows.len() + 2);
        let field = |col: usize| -> &str { record.get(index[col]).unwrap_or("") };
        let year: i32 =
            field(0)
                .parse()
                .map_err(|e: std::num::ParseIntError| DatasetError::Parse {
                    line,
                    column: COLUMNS[0].to_string(),
                    message: e.to_string(),
                })?;
        let num = |col: usize| -> Result<T, DatasetError> {
            let v: f64 =
                field(col)
                    .parse()
                    .map_err(|e: std::num::ParseFloatError| DatasetError::Parse {
                        line,
                        column: COLUMNS[col].to_string(),
                        message: e.to_string(),
                    })?;
            Ok(T::lit(v))
        };
        let mut nominal_rf_yield = num(5)?;
        if unit == YieldUnit::Percent {
            nominal_rf_yield /= percent;
        }
        let row = YearRow {
            year,
            real_price_index: num(1)?,
            real_dividend: num(2)?,
            real_consumption_pc: num(3)?,
            deflator: num(4)?,
            nominal_rf_yield,
        };
        validate_row(&row, line)?;
        if let Some(prev) = rows.last().map(|r: &YearRow<T>| r.year) {
            if year != prev + 1 {
                return Err(DatasetError::Continuity {
                    line,
                    previous: prev,
                    found: year,
                });
            }
        }
        rows.push(row);
    }
    MacroDataset::new(rows)
}

/// Growth rates and gross returns for each transition `t -> t+1`.
///
/// Column `i` describes the transition from row `i` to row `i + 1` of the
/// source table; `year[i]` is the end year `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedSeries<T> {
    pub year: Vec<i32>,
    /// Consumption growth `c_{t+1} / c_t`.
    pub x: Vec<T>,
    /// Dividend growth `y_{t+1} / y_t`.
    pub z: Vec<T>,
    /// Price-dividend ratio at the start of the transition, `p_t / y_t`.
    /// Absent for synthetic economies, which are specified through `k`.
    pub price_dividend: Option<Vec<T>>,
    /// `(v_{t+1} + 1) / v_t`.
    pub k: Vec<T>,
    /// Gross real equity return `(p_{t+1} + y_{t+1}) / p_t`.
    pub re_gross: Vec<T>,
    /// Gross real risk-free return, when a rule for it was supplied.
    pub rf_gross: Option<Vec<T>>,
}

impl<T: Scalar> DerivedSeries<T> {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Builds the per-transition series from a validated table.
pub fn derive_series<T: Scalar>(
    data: &MacroDataset<T>,
    rule: RiskFreeRule<T>,
) -> Result<DerivedSeries<T>, DatasetError> {
    let rows = data.rows();
    if rows.len() < 2 {
        return Err(DatasetError::InsufficientData {
            found: rows.len(),
            required: 2,
        });
    }
    let n = rows.len() - 1;
    let mut out = DerivedSeries {
        year: Vec::with_capacity(n),
        x: Vec::with_capacity(n),
        z: Vec::with_capacity(n),
        price_dividend: Some(Vec::with_capacity(n)),
        k: Vec::with_capacity(n),
        re_gross: Vec::with_capacity(n),
        rf_gross: Some(Vec::with_capacity(n)),
    };
    let one = T::one();
    for pair in rows.windows(2) {
        let (now, next) = (&pair[0], &pair[1]);
        let v_now = now.real_price_index / now.real_dividend;
        let v_next = next.real_price_index / next.real_dividend;
        out.year.push(next.year);
        out.x
            .push(next.real_consumption_pc / now.real_consumption_pc);
        out.z.push(next.real_dividend / now.real_dividend);
        out.k.push((v_next + one) / v_now);
        out.re_gross
            .push((next.real_price_index + next.real_dividend) / now.real_price_index);
        if let Some(v) = out.price_dividend.as_mut() {
            v.push(v_now);
        }
        let rf = match rule {
            RiskFreeRule::ExPost => (one + now.nominal_rf_yield) * (now.deflator / next.deflator),
            RiskFreeRule::ExAnte { expected_inflation } => {
                (one + now.nominal_rf_yield) / (one + expected_inflation)
            }
        };
        if let Some(v) = out.rf_gross.as_mut() {
            v.push(rf);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ulp_distance;
    use proptest::prelude::*;

    const HEADER: &str =
        "year,real_price_index,real_dividend,real_consumption_pc,deflator,nominal_rf_yield\n";

    fn parse(text: &str) -> Result<MacroDataset<f64>, DatasetError> {
        parse_dataset(text.as_bytes(), YieldUnit::Decimal)
    }

    #[test]
    fn three_valid_rows() {
        let text = format!(
            "{HEADER}1889,20,1,100,10,0.05\n1890,22,1.1,101,10.1,0.04\n1891,21,1.05,103,10.2,0.045\n"
        );
        let data = parse(&text).unwrap();
        assert_eq!(data.len(), 3);
        assert_eq!(data.first_year(), 1889);
        assert_eq!(data.rows()[1].real_dividend, 1.1);
    }

    #[test]
    fn zero_dividend_is_domain_error_at_row() {
        let text = format!(
            "{HEADER}1889,20,1,100,10,0.05\n1890,22,0,101,10.1,0.04\n1891,21,1,103,10.2,0.04\n"
        );
        match parse(&text) {
            Err(DatasetError::Domain {
                line, year, column, ..
            }) => {
                assert_eq!(line, 3);
                assert_eq!(year, 1890);
                assert_eq!(column, "real_dividend");
            }
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn year_gap_is_continuity_error() {
        let text = format!(
            "{HEADER}1889,20,1,100,10,0.05\n1891,22,1.1,101,10.1,0.04\n1892,21,1,103,10.2,0.04\n"
        );
        assert!(matches!(
            parse(&text),
            Err(DatasetError::Continuity {
                previous: 1889,
                found: 1891,
                ..
            })
        ));
    }

    #[test]
    fn schema_errors_name_the_column() {
        let text =
            "year,real_price_index,real_dividend,real_consumption_pc,deflator\n1889,1,1,1,1\n";
        assert_eq!(
            parse(text).unwrap_err(),
            DatasetError::MissingColumn("nominal_rf_yield".into())
        );
        let text = "year,real_price_index,real_dividend,real_consumption_pc,deflator,nominal_rf_yield,extra\n";
        assert_eq!(
            parse(text).unwrap_err(),
            DatasetError::ExtraColumn("extra".into())
        );
        assert_eq!(parse("").unwrap_err(), DatasetError::Empty);
    }

    #[test]
    fn too_few_rows() {
        let text = format!("{HEADER}1889,20,1,100,10,0.05\n1890,22,1.1,101,10.1,0.04\n");
        assert!(matches!(
            parse(&text),
            Err(DatasetError::InsufficientData { found: 2, .. })
        ));
    }

    #[test]
    fn percent_yield_unit() {
        let text =
            format!("{HEADER}1889,20,1,100,10,5\n1890,22,1.1,101,10.1,4\n1891,21,1,103,10.2,4.5\n");
        let data: MacroDataset<f64> = parse_dataset(text.as_bytes(), YieldUnit::Percent).unwrap();
        assert!((data.rows()[0].nominal_rf_yield - 0.05).abs() < 1e-15);
    }

    #[test]
    fn derive_hand_example() {
        // p = (20, 22), y = (1, 1.1): v = (20, 20), k = 1.05, z = 1.1, Re = 1.155
        let rows = vec![
            YearRow {
                year: 1889,
                real_price_index: 20.0,
                real_dividend: 1.0,
                real_consumption_pc: 100.0,
                deflator: 1.0,
                nominal_rf_yield: 0.0,
            },
            YearRow {
                year: 1890,
                real_price_index: 22.0,
                real_dividend: 1.1,
                real_consumption_pc: 100.0,
                deflator: 1.0,
                nominal_rf_yield: 0.0,
            },
            YearRow {
                year: 1891,
                real_price_index: 22.0,
                real_dividend: 1.1,
                real_consumption_pc: 100.0,
                deflator: 1.0,
                nominal_rf_yield: 0.0,
            },
        ];
        let data: MacroDataset<f64> = MacroDataset::new(rows).unwrap();
        let s = derive_series(&data, RiskFreeRule::ExPost).unwrap();
        assert_eq!(s.len(), 2);
        let v = s.price_dividend.as_ref().unwrap();
        assert!((v[0] - 20.0).abs() < 1e-12 && (v[1] - 20.0).abs() < 1e-12);
        assert!((s.k[0] - 1.05).abs() < 1e-15);
        assert!((s.z[0] - 1.1).abs() < 1e-15);
        assert!((s.re_gross[0] - 1.155).abs() < 1e-15);
        assert!(ulp_distance(s.re_gross[0], s.k[0] * s.z[0]) <= 4);
        // constant consumption, zero yield, constant deflator
        assert_eq!(s.x[0], 1.0);
        assert_eq!(s.rf_gross.as_ref().unwrap()[0], 1.0);
    }

    #[test]
    fn ex_post_and_ex_ante_rf() {
        let rows = vec![
            YearRow {
                year: 1,
                real_price_index: 1.0,
                real_dividend: 1.0,
                real_consumption_pc: 1.0,
                deflator: 100.0,
                nominal_rf_yield: 0.05,
            },
            YearRow {
                year: 2,
                real_price_index: 1.0,
                real_dividend: 1.0,
                real_consumption_pc: 1.0,
                deflator: 102.0,
                nominal_rf_yield: 0.03,
            },
            YearRow {
                year: 3,
                real_price_index: 1.0,
                real_dividend: 1.0,
                real_consumption_pc: 1.0,
                deflator: 104.04,
                nominal_rf_yield: 0.03,
            },
        ];
        let data: MacroDataset<f64> = MacroDataset::new(rows).unwrap();
        let post = derive_series(&data, RiskFreeRule::ExPost).unwrap();
        assert!((post.rf_gross.unwrap()[0] - 1.05 * 100.0 / 102.0).abs() < 1e-15);
        let pi = data.mean_inflation();
        assert!((pi - 0.02).abs() < 1e-12);
        let ante = derive_series(
            &data,
            RiskFreeRule::ExAnte {
                expected_inflation: pi,
            },
        )
        .unwrap();
        assert!((ante.rf_gross.unwrap()[1] - 1.03 / 1.02).abs() < 1e-12);
    }

    #[test]
    fn window_selects_sub_sample() {
        let mut text = HEADER.to_string();
        for (i, year) in (1889..1899).enumerate() {
            text.push_str(&format!("{year},{},1,{},1,0.01\n", 10 + i, 100 + i));
        }
        let data = parse(&text).unwrap();
        let w = data.window(1890, 1893).unwrap();
        assert_eq!(w.len(), 4);
        assert_eq!(w.first_year(), 1890);
        assert!(matches!(
            data.window(1897, 1950),
            Err(DatasetError::EmptyWindow { .. })
        ));
    }

    fn arb_rows() -> impl Strategy<Value = Vec<YearRow<f64>>> {
        prop::collection::vec(
            (
                1e-3f64..1e4,
                1e-3f64..1e3,
                1e-1f64..1e5,
                1e-2f64..1e3,
                -0.05f64..0.2,
            ),
            3..40,
        )
        .prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (p, y, c, d, r))| YearRow {
                    year: 1900 + i as i32,
                    real_price_index: p,
                    real_dividend: y,
                    real_consumption_pc: c,
                    deflator: d,
                    nominal_rf_yield: r,
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn equity_return_decomposes_within_4_ulp(rows in arb_rows()) {
            let data: MacroDataset<f64> = MacroDataset::new(rows).unwrap();
            let s = derive_series(&data, RiskFreeRule::ExPost).unwrap();
            for i in 0..s.len() {
                let kz = s.k[i] * s.z[i];
                prop_assert!(ulp_distance(s.re_gross[i], kz) <= 4,
                    "re={} kz={}", s.re_gross[i], kz);
                prop_assert!(s.x[i] > 0.0 && s.k[i] > 0.0 && s.re_gross[i].is_finite());
            }
        }

        #[test]
        fn csv_round_trip(rows in arb_rows()) {
            let data: MacroDataset<f64> = MacroDataset::new(rows).unwrap();
            let text = data.to_csv();
            let back: MacroDataset<f64> = parse_dataset(text.as_bytes(), YieldUnit::Decimal).unwrap();
            prop_assert_eq!(back, data);
        }
    }
}
