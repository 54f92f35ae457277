//! CSV and SVG emitters for experiment results.
//!
//! CSV is the primary output; the SVG plots are a thin, dependency-free
//! convenience for eyeballing curves. All formatting uses the shortest
//! round-tripping decimal form, so identical results produce identical
//! bytes.

use crate::experiments::figures::{CurveRow, Fig4Row, NwRow};
use std::io::Write;

/// Mean-BER curve CSV: `scenario,<index name>,mean_ber,map_ber`.
pub fn write_curve_csv(
    rows: &[CurveRow],
    index_name: &str,
    w: &mut impl Write,
) -> std::io::Result<()> {
    writeln!(w, "scenario,{index_name},mean_ber,map_ber")?;
    for row in rows {
        writeln!(w, "{},{},{},{}", row.scenario, row.index, row.mean_ber, row.map_ber)?;
    }
    Ok(())
}

/// Weight-count statistics CSV: `scenario,pilot,mean_nw,min_nw,max_nw`.
pub fn write_nw_csv(rows: &[NwRow], w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "scenario,pilot,mean_nw,min_nw,max_nw")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            row.scenario, row.index, row.mean_nw, row.min_nw, row.max_nw
        )?;
    }
    Ok(())
}

/// Time-variant tracking CSV: `pilot,mean_nw,min_nw,max_nw,opt_nu`.
pub fn write_fig4_csv(rows: &[Fig4Row], w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "pilot,mean_nw,min_nw,max_nw,opt_nu")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            row.pilot, row.mean_nw, row.min_nw, row.max_nw, row.opt_nu
        )?;
    }
    Ok(())
}

/// A named polyline for the SVG emitter.
pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
];

/// Minimal line chart. With `log_y`, values are plotted on a log10 axis and
/// nonpositive values are clamped to the smallest positive value present.
pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, series: &[Series], log_y: bool) -> String {
    let (width, height) = (760.0, 420.0);
    let (left, right, top, bottom) = (70.0, 180.0, 40.0, 50.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let floor = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let transform = |v: f64| -> f64 {
        if log_y {
            v.max(if floor.is_finite() { floor } else { 1e-12 }).log10()
        } else {
            v
        }
    };

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            let ty = transform(y);
            y_min = y_min.min(ty);
            y_max = y_max.max(ty);
        }
    }
    if !x_min.is_finite() || x_max <= x_min {
        x_max = x_min + 1.0;
    }
    if !y_min.is_finite() || y_max <= y_min {
        y_max = y_min + 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    let (y_min, y_max) = (y_min - pad, y_max + pad);

    let px = |x: f64| left + (x - x_min) / (x_max - x_min) * plot_w;
    let py = |y: f64| top + (1.0 - (transform(y) - y_min) / (y_max - y_min)) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        left + plot_w / 2.0
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        top + plot_h,
        left + plot_w,
        top + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{}\" stroke=\"black\"/>\n",
        top + plot_h
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>\n",
        left + plot_w / 2.0,
        height - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        if log_y { format!("log10 {y_label}") } else { y_label.to_string() }
    ));
    // axis extremes
    svg.push_str(&format!(
        "<text x=\"{left}\" y=\"{}\" text-anchor=\"middle\">{x_min}</text>\n",
        top + plot_h + 16.0
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_max}</text>\n",
        left + plot_w,
        top + plot_h + 16.0
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>\n",
        left - 6.0,
        top + plot_h,
        y_min
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{top}\" text-anchor=\"end\">{:.3}</text>\n",
        left - 6.0,
        y_max
    ));

    for (idx, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let color = PALETTE[idx % PALETTE.len()];
        let path: Vec<String> =
            s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let dash = if s.dashed { " stroke-dasharray=\"6,4\"" } else { "" };
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>\n",
            path.join(" ")
        ));
        let legend_y = top + 16.0 * idx as f64;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{legend_y}\" x2=\"{}\" y2=\"{legend_y}\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>\n",
            left + plot_w + 10.0,
            left + plot_w + 34.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            left + plot_w + 40.0,
            legend_y + 4.0,
            s.name
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Scenario name with its mean-BER points and reference-line points.
pub type ScenarioSeries = (String, Vec<(f64, f64)>, Vec<(f64, f64)>);

/// Group curve rows by scenario into plot series, with one dashed reference
/// line per scenario.
pub fn curve_series(rows: &[CurveRow]) -> Vec<ScenarioSeries> {
    let mut out: Vec<ScenarioSeries> = Vec::new();
    for row in rows {
        let entry = match out.iter_mut().find(|(name, _, _)| name == &row.scenario) {
            Some(entry) => entry,
            None => {
                out.push((row.scenario.clone(), Vec::new(), Vec::new()));
                out.last_mut().unwrap()
            }
        };
        entry.1.push((row.index as f64, row.mean_ber));
        entry.2.push((row.index as f64, row.map_ber));
    }
    out
}
