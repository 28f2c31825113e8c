//! Static SVG rendering of calibration outputs.
//!
//! Four panels: `tau`, `eta` and `lambda` against the discount factor, and the
//! reduced scalar residual against `tau` at the first discount factor with
//! the located root marked. All coordinates are printed with fixed precision
//! so the bytes depend only on the input.

use std::fmt::Write;

use anyhow::{anyhow, bail, Result};
use sfm_core::moments::parse_moments;
use sfm_core::solver::reduced_residual;
use sfm_core::{CalibrationResult64, LogMoments64};

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 720.0;
const MARGIN: f64 = 56.0;
const CURVE_SAMPLES: usize = 241;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotPoint {
    pub beta: f64,
    pub tau: f64,
    pub eta: f64,
    pub lambda: f64,
    pub converged: bool,
}

impl From<&CalibrationResult64> for PlotPoint {
    fn from(r: &CalibrationResult64) -> Self {
        Self {
            beta: r.beta,
            tau: r.tau,
            eta: r.eta,
            lambda: r.lambda_,
            converged: r.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotInput {
    pub moments: LogMoments64,
    pub points: Vec<PlotPoint>,
}

impl PlotInput {
    /// Reads the JSON written by `calibrate --format json`.
    pub fn from_calibration_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let moments = v
            .get("moments")
            .ok_or_else(|| anyhow!("missing `moments` object"))?;
        let moments = parse_moments::<f64>(&moments.to_string())?;
        let results = v
            .get("results")
            .and_then(|r| r.as_array())
            .ok_or_else(|| anyhow!("missing `results` array"))?;
        let num = |r: &serde_json::Value, key: &str| {
            r.get(key)
                .and_then(|x| x.as_f64())
                .ok_or_else(|| anyhow!("result field `{key}` missing or not a number"))
        };
        let points = results
            .iter()
            .map(|r| {
                Ok(PlotPoint {
                    beta: num(r, "beta")?,
                    tau: num(r, "tau")?,
                    eta: num(r, "eta")?,
                    lambda: num(r, "lambda_")?,
                    converged: r
                        .get("converged")
                        .and_then(|c| c.as_bool())
                        .unwrap_or(false),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { moments, points })
    }
}

struct Panel {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let (lo, hi) = values
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        if !lo.is_finite() {
            return Self { lo: -1.0, hi: 1.0 };
        }
        let pad = if hi - lo > 0.0 {
            0.08 * (hi - lo)
        } else {
            0.01 * lo.abs().max(1.0)
        };
        Self {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    fn with(self, v: f64) -> Self {
        Self {
            lo: self.lo.min(v),
            hi: self.hi.max(v),
        }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

impl Panel {
    fn px(&self, xr: &Range, v: f64) -> f64 {
        self.x + xr.frac(v) * self.w
    }

    fn py(&self, yr: &Range, v: f64) -> f64 {
        self.y + self.h - yr.frac(v) * self.h
    }

    fn frame(&self, out: &mut String, title: &str, xlabel: &str, xr: &Range, yr: &Range) {
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
            self.x, self.y, self.w, self.h
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"#,
            self.x + self.w / 2.0,
            self.y - 10.0,
            escape(title)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
            self.x + self.w / 2.0,
            self.y + self.h + 34.0,
            escape(xlabel)
        );
        for (v, anchor) in [(xr.lo, "start"), (xr.hi, "end")] {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="{anchor}">{}</text>"#,
                self.px(xr, v),
                self.y + self.h + 14.0,
                tick(v)
            );
        }
        for v in [yr.lo, yr.hi] {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
                self.x - 4.0,
                self.py(yr, v) + 4.0,
                tick(v)
            );
        }
    }

    fn polyline(&self, out: &mut String, xr: &Range, yr: &Range, pts: &[(f64, f64)], color: &str) {
        let coords: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(xr, x), self.py(yr, y)))
            .collect();
        if coords.len() > 1 {
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                coords.join(" ")
            );
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn marker(
        &self,
        out: &mut String,
        xr: &Range,
        yr: &Range,
        x: f64,
        y: f64,
        color: &str,
        filled: bool,
    ) {
        if !(x.is_finite() && y.is_finite()) {
            return;
        }
        let fill = if filled { color } else { "white" };
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{fill}" stroke="{color}"/>"#,
            self.px(xr, x),
            self.py(yr, y)
        );
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.4}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn series_panel(
    out: &mut String,
    panel: &Panel,
    title: &str,
    points: &[PlotPoint],
    value: impl Fn(&PlotPoint) -> f64,
    color: &str,
) {
    let xr = Range::of(points.iter().map(|p| p.beta));
    let yr = Range::of(points.iter().map(&value));
    panel.frame(out, title, "discount factor (beta)", &xr, &yr);
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.beta.total_cmp(&b.beta));
    let line: Vec<(f64, f64)> = sorted.iter().map(|p| (p.beta, value(p))).collect();
    panel.polyline(out, &xr, &yr, &line, color);
    for p in &sorted {
        panel.marker(out, &xr, &yr, p.beta, value(p), color, p.converged);
    }
}

/// `manifest` (rendered JSON) goes into a `<metadata>` element.
pub fn render(input: &PlotInput, manifest: &str) -> Result<String> {
    if input.points.is_empty() {
        bail!("no calibration results to plot");
    }
    let pw = (WIDTH - 3.0 * MARGIN) / 2.0;
    let ph = (HEIGHT - 3.0 * MARGIN) / 2.0 - 10.0;
    let panels = [
        Panel {
            x: MARGIN * 1.4,
            y: MARGIN,
            w: pw - 0.4 * MARGIN,
            h: ph,
        },
        Panel {
            x: 2.4 * MARGIN + pw,
            y: MARGIN,
            w: pw - 0.4 * MARGIN,
            h: ph,
        },
        Panel {
            x: MARGIN * 1.4,
            y: 2.0 * MARGIN + ph + 20.0,
            w: pw - 0.4 * MARGIN,
            h: ph,
        },
        Panel {
            x: 2.4 * MARGIN + pw,
            y: 2.0 * MARGIN + ph + 20.0,
            w: pw - 0.4 * MARGIN,
            h: ph,
        },
    ];

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(
        out,
        "<metadata><![CDATA[{}]]></metadata>",
        manifest.replace("]]>", "]]&gt;")
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);

    series_panel(
        &mut out,
        &panels[0],
        "CRRA (tau) vs beta",
        &input.points,
        |p| p.tau,
        "#1f77b4",
    );
    series_panel(
        &mut out,
        &panels[1],
        "SFOM risk-free (eta) vs beta",
        &input.points,
        |p| p.eta,
        "#2ca02c",
    );
    series_panel(
        &mut out,
        &panels[2],
        "SFOM equity (lambda) vs beta",
        &input.points,
        |p| p.lambda,
        "#9467bd",
    );

    // residual curve at the first discount factor
    let first = input.points[0];
    let tau_hi = if first.tau.is_finite() {
        (1.25 * first.tau).max(10.0)
    } else {
        10.0
    };
    let curve: Vec<(f64, f64)> = (0..CURVE_SAMPLES)
        .map(|i| {
            let t = tau_hi * i as f64 / (CURVE_SAMPLES - 1) as f64;
            (t, reduced_residual(t, first.beta, &input.moments))
        })
        .collect();
    let panel = &panels[3];
    let xr = Range::of(curve.iter().map(|c| c.0));
    let yr = Range::of(curve.iter().map(|c| c.1)).with(0.0);
    panel.frame(
        &mut out,
        &format!("reduced residual at beta = {}", first.beta),
        "CRRA (tau)",
        &xr,
        &yr,
    );
    panel.polyline(&mut out, &xr, &yr, &[(xr.lo, 0.0), (xr.hi, 0.0)], "#bbbbbb");
    panel.polyline(&mut out, &xr, &yr, &curve, "#ff7f0e");
    panel.marker(
        &mut out,
        &xr,
        &yr,
        first.tau,
        0.0,
        "#d62728",
        first.converged,
    );

    out.push_str("</svg>\n");
    Ok(out)
}
