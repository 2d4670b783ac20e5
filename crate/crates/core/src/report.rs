//! Text tables, plot data and run manifests.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::encoding::{ENCODED_COLUMNS, INTERCEPT};
use crate::error::{Error, Result};
use crate::linreg::OlsFit;
use crate::meta_db::SummaryStats;
use crate::pdp::PdpGrid;

/// Format with `digits` significant digits in positional notation.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return format!("{:.*}", digits.saturating_sub(1), 0.0);
    }
    let mag = v.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - mag).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Significance stars at the 0.1 / 0.05 / 0.01 levels.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

/// `0.334*** (0.043)` for coefficient `j` of `fit`.
pub fn coefficient_cell(fit: &OlsFit, j: usize, decimals: usize) -> String {
    format!(
        "{:.decimals$}{} ({:.decimals$})",
        fit.coefficients[j],
        stars(fit.p_values[j]),
        fit.standard_errors[j]
    )
}

fn row_order(fits: &[(&str, &OlsFit)]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    let mut push = |n: &str| {
        if n != INTERCEPT && !names.iter().any(|m| m == n) {
            names.push(n.to_string());
        }
    };
    for fit in fits {
        fit.1.column_names.iter().for_each(|n| push(n));
        fit.1.dropped_columns.iter().for_each(|d| push(&d.name));
    }
    let rank = |n: &String| {
        ENCODED_COLUMNS
            .iter()
            .position(|c| c == n)
            .unwrap_or(ENCODED_COLUMNS.len())
    };
    names.sort_by_key(|n| rank(n));
    names
}

/// Side-by-side regression table: one column per fit, blank cells for
/// columns a fit does not contain, constant last, then n, R² and adjusted R².
pub fn format_regression_columns(fits: &[(&str, &OlsFit)], decimals: usize) -> String {
    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    let cells = |name: &str| -> Vec<String> {
        fits.iter()
            .map(|(_, f)| {
                f.index(name)
                    .map(|j| coefficient_cell(f, j, decimals))
                    .unwrap_or_default()
            })
            .collect()
    };
    for name in row_order(fits) {
        let c = cells(&name);
        rows.push((name, c));
    }
    if fits.iter().any(|(_, f)| f.index(INTERCEPT).is_some()) {
        rows.push((INTERCEPT.to_string(), cells(INTERCEPT)));
    }
    rows.push((
        "Observations".into(),
        fits.iter().map(|(_, f)| f.n.to_string()).collect(),
    ));
    rows.push((
        "R²".into(),
        fits.iter()
            .map(|(_, f)| format!("{:.decimals$}", f.r_squared))
            .collect(),
    ));
    rows.push((
        "Adjusted R²".into(),
        fits.iter()
            .map(|(_, f)| format!("{:.decimals$}", f.adj_r_squared))
            .collect(),
    ));

    let name_w = rows
        .iter()
        .map(|(n, _)| n.chars().count())
        .max()
        .unwrap_or(0);
    let col_w: Vec<usize> = (0..fits.len())
        .map(|k| {
            rows.iter()
                .map(|(_, c)| c[k].chars().count())
                .chain(std::iter::once(fits[k].0.chars().count()))
                .max()
                .unwrap_or(0)
        })
        .collect();

    let mut out = String::new();
    let pad = |s: &str, w: usize| format!("{s}{}", " ".repeat(w.saturating_sub(s.chars().count())));
    let mut header = pad("", name_w);
    for (k, (label, _)) in fits.iter().enumerate() {
        header.push_str("  ");
        header.push_str(&pad(label, col_w[k]));
    }
    let _ = writeln!(out, "{}", header.trim_end());
    for (name, c) in &rows {
        let mut line = pad(name, name_w);
        for (k, cell) in c.iter().enumerate() {
            line.push_str("  ");
            line.push_str(&pad(cell, col_w[k]));
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
    let _ = writeln!(out, "Note: *: p < 0.1, **: p < 0.05, ***: p < 0.01");
    out
}

/// Regression table for a single fit.
pub fn format_regression_table(fit: &OlsFit, decimals: usize) -> String {
    format_regression_columns(&[("SS", fit)], decimals)
}

pub const SUMMARY_HEADER: [&str; 13] = [
    "Variable", "N", "Mean", "SD", "Median", "Trim", "MAD", "Min", "Max", "Range", "Skew",
    "Kurtosis", "SE",
];

pub fn summary_fields(s: &SummaryStats, digits: usize) -> Vec<String> {
    let f = |v: f64| fmt_sig(v, digits);
    vec![
        s.variable.clone(),
        s.n.to_string(),
        f(s.mean),
        f(s.sd),
        f(s.median),
        f(s.trimmed_mean),
        f(s.mad),
        f(s.min),
        f(s.max),
        f(s.range),
        f(s.skew),
        f(s.kurtosis),
        f(s.se),
    ]
}

/// Delimited summary table with a header row.
pub fn format_summary_table(stats: &[SummaryStats], digits: usize, delimiter: char) -> String {
    let sep = delimiter.to_string();
    let mut out = SUMMARY_HEADER.join(&sep);
    out.push('\n');
    for s in stats {
        out.push_str(&summary_fields(s, digits).join(&sep));
        out.push('\n');
    }
    out
}

/// Long-format CSV: feature columns then `pdp`.
pub fn pdp_csv(grid: &PdpGrid) -> String {
    let mut out = grid.features.join(",");
    out.push_str(",pdp\n");
    for (tuple, v) in grid.grid_values.iter().zip(&grid.averaged_predictions) {
        for x in tuple {
            let _ = write!(out, "{x},");
        }
        let _ = writeln!(out, "{v}");
    }
    out
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 420.0;
const MARGIN: f64 = 56.0;

fn extent(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" viewBox=\"0 0 {SVG_W} {SVG_H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{title}</text>\n",
        SVG_W / 2.0
    )
}

/// Minimal line chart (one feature) or heatmap (two features).
pub fn pdp_svg(grid: &PdpGrid) -> String {
    let plot_w = SVG_W - 2.0 * MARGIN;
    let plot_h = SVG_H - 2.0 * MARGIN;
    let (ylo, yhi) = extent(grid.averaged_predictions.iter().copied());
    let (x0lo, x0hi) = extent(grid.grid_values.iter().map(|t| t[0]));
    let sx = |x: f64| MARGIN + (x - x0lo) / (x0hi - x0lo) * plot_w;
    let mut s = svg_open(&format!("Partial dependence: {}", grid.features.join(" × ")));
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"black\"/>"
    );
    let label = |s: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        let _ = writeln!(
            s,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"{anchor}\">{text}</text>"
        );
    };
    label(&mut s, MARGIN, SVG_H - MARGIN + 16.0, "start", fmt_sig(x0lo, 4));
    label(&mut s, SVG_W - MARGIN, SVG_H - MARGIN + 16.0, "end", fmt_sig(x0hi, 4));
    label(&mut s, SVG_W / 2.0, SVG_H - 12.0, "middle", grid.features[0].clone());

    if grid.features.len() == 1 {
        let sy = |y: f64| SVG_H - MARGIN - (y - ylo) / (yhi - ylo) * plot_h;
        let pts: Vec<String> = grid
            .grid_values
            .iter()
            .zip(&grid.averaged_predictions)
            .map(|(t, &v)| format!("{:.2},{:.2}", sx(t[0]), sy(v)))
            .collect();
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"{}\"/>",
            pts.join(" ")
        );
        label(&mut s, MARGIN - 4.0, SVG_H - MARGIN, "end", fmt_sig(ylo, 4));
        label(&mut s, MARGIN - 4.0, MARGIN + 10.0, "end", fmt_sig(yhi, 4));
    } else {
        let mut xs: Vec<f64> = grid.grid_values.iter().map(|t| t[0]).collect();
        let mut ys: Vec<f64> = grid.grid_values.iter().map(|t| t[1]).collect();
        for v in [&mut xs, &mut ys] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        let cell_w = plot_w / xs.len() as f64;
        let cell_h = plot_h / ys.len() as f64;
        for (t, &v) in grid.grid_values.iter().zip(&grid.averaged_predictions) {
            let i = xs.iter().position(|&x| x == t[0]).unwrap_or(0);
            let j = ys.iter().position(|&y| y == t[1]).unwrap_or(0);
            let f = (v - ylo) / (yhi - ylo);
            let (r, g, b) = (
                (68.0 + f * (253.0 - 68.0)) as u8,
                (1.0 + f * (231.0 - 1.0)) as u8,
                (84.0 + f * (37.0 - 84.0)) as u8,
            );
            let _ = writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"rgb({r},{g},{b})\"/>",
                MARGIN + i as f64 * cell_w,
                SVG_H - MARGIN - (j + 1) as f64 * cell_h,
                cell_w + 0.5,
                cell_h + 0.5
            );
        }
        let (y1lo, y1hi) = extent(ys.iter().copied());
        label(&mut s, MARGIN - 4.0, SVG_H - MARGIN, "end", fmt_sig(y1lo, 4));
        label(&mut s, MARGIN - 4.0, MARGIN + 10.0, "end", fmt_sig(y1hi, 4));
        label(&mut s, 14.0, SVG_H / 2.0, "middle", grid.features[1].clone());
    }
    s.push_str("</svg>\n");
    s
}

/// Write to a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// PDP data file at `path` and an SVG rendering next to it.
pub fn emit_pdp_artifacts(grid: &PdpGrid, path: &Path) -> Result<Vec<PathBuf>> {
    let svg_path = path.with_extension("svg");
    write_atomic(path, pdp_csv(grid).as_bytes())?;
    write_atomic(&svg_path, pdp_svg(grid).as_bytes())?;
    Ok(vec![path.to_path_buf(), svg_path])
}

/// Reproducibility record written next to every run's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub started_at: String,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn manifest_path(output: &Path) -> PathBuf {
        let mut name = output
            .file_name()
            .map(|s| s.to_os_string())
            .unwrap_or_default();
        name.push(".manifest.json");
        output.with_file_name(name)
    }
}
