//! Self-contained SVG line plots from the crate's own CSV output. Purely
//! presentational: axes, legend from the header row, one polyline per column.

use std::fmt::Write as _;

use crate::error::{Error, Result};

const WIDTH: f64 = 840.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 78.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 24.0;
const MARGIN_B: f64 = 52.0;

const PALETTE: [&str; 6] = ["#1f6fb2", "#d1495b", "#3c8d5a", "#8d6fb8", "#c88a2d", "#4f5d75"];

struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn parse_csv(text: &str) -> Result<Table> {
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match &columns {
            None => {
                let cols: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
                if cols.len() < 2 {
                    return Err(Error::Csv {
                        line: line_no,
                        reason: format!("need at least 2 columns, found {}", cols.len()),
                    });
                }
                columns = Some(cols);
            }
            Some(cols) => {
                let cells: Vec<&str> = line.split(',').collect();
                if cells.len() != cols.len() {
                    return Err(Error::Csv {
                        line: line_no,
                        reason: format!("expected {} cells, found {}", cols.len(), cells.len()),
                    });
                }
                let mut row = Vec::with_capacity(cells.len());
                for cell in cells {
                    let v: f64 = cell.trim().parse().map_err(|_| Error::Csv {
                        line: line_no,
                        reason: format!("cell '{}' is not numeric", cell.trim()),
                    })?;
                    row.push(v);
                }
                rows.push(row);
            }
        }
    }
    let columns = columns.ok_or(Error::Csv { line: 1, reason: "no header row".to_string() })?;
    if rows.len() < 2 {
        return Err(Error::Csv {
            line: text.lines().count(),
            reason: format!("cannot plot a line from {} data row(s)", rows.len()),
        });
    }
    Ok(Table { columns, rows })
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw_step = (hi - lo) / target as f64;
    let magnitude = 10f64.powf(raw_step.abs().log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * magnitude)
        .find(|&s| s >= raw_step)
        .unwrap_or(magnitude * 10.0);
    let first = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut t = first;
    while t <= hi + step * 1e-9 {
        ticks.push(t);
        t += step;
    }
    ticks
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        if s.is_empty() {
            "0".to_string()
        } else {
            s
        }
    } else {
        format!("{v:.2e}")
    }
}

/// Render a CSV (as produced by the scenario runners: optional `#` comment
/// lines, a header row, then numeric rows) into a standalone SVG line plot.
/// The first column is the x axis; every other column becomes one series.
pub fn emit_svg(csv: &str) -> Result<String> {
    let table = parse_csv(csv)?;
    let n_series = table.columns.len() - 1;
    let xs: Vec<f64> = table.rows.iter().map(|r| r[0]).collect();
    let (x_lo, x_hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for row in &table.rows {
        for &v in &row[1..] {
            y_lo = y_lo.min(v);
            y_hi = y_hi.max(v);
        }
    }
    if !(x_hi > x_lo) {
        return Err(Error::Csv { line: 1, reason: "x column is constant".to_string() });
    }
    if y_hi == y_lo {
        y_hi = y_lo + 1.0;
    }
    let pad = 0.04 * (y_hi - y_lo);
    let (y_lo, y_hi) = (y_lo - pad, y_hi + pad);

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x_of = |v: f64| MARGIN_L + (v - x_lo) / (x_hi - x_lo) * plot_w;
    let y_of = |v: f64| MARGIN_T + (1.0 - (v - y_lo) / (y_hi - y_lo)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");

    for tick in nice_ticks(x_lo, x_hi, 6) {
        let x = x_of(tick);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>",
            MARGIN_T,
            MARGIN_T + plot_h
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            MARGIN_T + plot_h + 18.0,
            fmt_tick(tick)
        );
    }
    for tick in nice_ticks(y_lo, y_hi, 6) {
        let y = y_of(tick);
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#dddddd\"/>",
            MARGIN_L,
            MARGIN_L + plot_w
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            MARGIN_L - 8.0,
            y + 4.0,
            fmt_tick(tick)
        );
    }
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333333\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 14.0,
        table.columns[0]
    );

    for (s, name) in table.columns[1..].iter().enumerate() {
        let color = PALETTE[s % PALETTE.len()];
        let mut points = String::new();
        for row in &table.rows {
            let _ = write!(points, "{:.2},{:.2} ", x_of(row[0]), y_of(row[1 + s]));
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            points.trim_end()
        );
        let ly = MARGIN_T + 16.0 + 16.0 * s as f64;
        let lx = MARGIN_L + plot_w - 150.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" \
             stroke=\"{color}\" stroke-width=\"2\"/>",
            lx + 22.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\">{name}</text>",
            lx + 28.0,
            ly + 4.0
        );
        let _ = n_series;
    }
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}
