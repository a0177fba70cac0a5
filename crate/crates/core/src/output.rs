//! CSV, JSON and SVG emission for scan tables and density tables.

use crate::error::Result;
use crate::ideal::CycleDensityTable;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Writes a CSV file; floats use the exponent form so reruns are
/// byte-identical.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Pretty-printed JSON for any serializable table.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| crate::error::Error::Config(format!("json serialization failed: {e}")))?;
    fs::write(path, body)?;
    Ok(())
}

/// Density table as CSV with the documented columns
/// `n, rho_n, rho_n/rho, cumulative`.
pub fn density_table_csv(path: &Path, table: &CycleDensityTable) -> Result<()> {
    let rho = table.system.density();
    let mut cumulative = 0.0;
    let rows: Vec<Vec<f64>> = table
        .rho
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            cumulative += r / rho;
            vec![(i + 1) as f64, r, r / rho, cumulative]
        })
        .collect();
    write_csv(path, &["n", "rho_n", "rho_n_over_rho", "cumulative"], &rows)
}

/// A minimal non-interactive SVG line plot: one polyline per series over a
/// shared linear frame.
pub fn write_svg_lines(
    path: &Path,
    title: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> Result<()> {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 50.0;
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for (_, pts) in series {
        for &(x, y) in pts {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
    }
    if !xmin.is_finite() || xmax == xmin {
        xmax = xmin + 1.0;
    }
    if !ymin.is_finite() || ymax == ymin {
        ymax = ymin + 1.0;
    }
    let sx = |x: f64| M + (x - xmin) / (xmax - xmin) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - ymin) / (ymax - ymin) * (H - 2.0 * M);
    let colors = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2",
    ];

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        W / 2.0
    );
    // axes
    let _ = write!(
        svg,
        "<line x1=\"{M}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - M,
        W - M,
        H - M,
        H - M
    );
    let _ = write!(
        svg,
        "<text x=\"{M}\" y=\"{}\" font-size=\"10\">{xmin:.3e}</text>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{xmax:.3e}</text>\n\
         <text x=\"4\" y=\"{}\" font-size=\"10\">{ymin:.3e}</text>\n\
         <text x=\"4\" y=\"{}\" font-size=\"10\">{ymax:.3e}</text>\n",
        H - M + 14.0,
        W - M,
        H - M + 14.0,
        H - M,
        M + 4.0
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = colors[i % colors.len()];
        let body: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = write!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n\
             <text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{name}</text>\n",
            body.join(" "),
            W - M + 4.0 - 120.0,
            M + 16.0 * (i as f64 + 1.0)
        );
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg)?;
    Ok(())
}
