use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::anyhow;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub type CmdResult = Result<u8, Failure>;

pub fn input_error(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        error: e.into(),
    }
}

pub fn numeric_error(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_NUMERIC,
        error: e.into(),
    }
}

/// Context-carrying variant of [`input_error`] for file problems.
pub fn file_error(path: &Path, e: impl Display) -> Failure {
    input_error(anyhow!("{}: {e}", path.display()))
}

pub fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| file_error(path, e))
}

/// Writes `text` to `path`, or to stdout without a path.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| file_error(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(input_error)
        }
    }
}

/// Human-format number: 6 significant digits.
pub fn human(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

/// Left-aligned text table with two-space gutters.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (i, cell) in r.iter().enumerate().take(cols) {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c:<w$}", w = widths[i]))
            .collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out.push_str(&line(r.iter().map(|s| s.as_str()).collect()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn human_uses_six_significant_digits() {
        assert_eq!(human(4.39712345), "4.39712");
        assert_eq!(human(1.0633), "1.06330");
        assert_eq!(human(0.0012963), "0.00129630");
        assert_eq!(human(123456.7), "123457");
        assert_eq!(human(1234567.0), "1.23457e6");
        assert_eq!(human(0.0), "0");
    }

    #[test]
    fn table_aligns_columns() {
        let t = table(&["a", "bbb"], &[vec!["10".into(), "x".into()]]);
        assert_eq!(t, "a   bbb\n10  x\n");
    }
}
