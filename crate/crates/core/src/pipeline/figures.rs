//! Hand-written SVG figures: rule-distance heatmap with dendrogram, the
//! dendrogram alone, and grouped metric bars.

use std::fmt::Write as _;
use std::path::Path;

use super::report::RunReport;
use super::{write_text, Clustered, PipelineConfig};
use crate::error::Result;
use crate::rule_clustering::{Dendrogram, DistanceMatrix};

type Rgb = (u8, u8, u8);

const WHITE: Rgb = (255, 255, 255);
const BLUE: Rgb = (8, 48, 107);
const ORANGE: Rgb = (230, 85, 13);
const GREEN: Rgb = (0, 109, 44);
const RED: Rgb = (165, 15, 21);

fn mix(to: Rgb, t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let c = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(WHITE.0, to.0), c(WHITE.1, to.1), c(WHITE.2, to.2))
}

pub fn distance_color(d: f64) -> String {
    mix(BLUE, d)
}

pub fn support_color(s: f64) -> String {
    mix(ORANGE, s)
}

/// Green for positive, red for negative, intensity relative to `max_abs`.
pub fn importance_color(w: f64, max_abs: f64) -> String {
    let t = if max_abs > 0.0 { w.abs() / max_abs } else { 0.0 };
    mix(if w >= 0.0 { GREEN } else { RED }, t)
}

fn esc(s: &str) -> String {
    quick_xml::escape::escape(s).into_owned()
}

pub fn placeholder_svg(message: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"420\" height=\"80\" viewBox=\"0 0 420 80\">\n<rect width=\"420\" height=\"80\" fill=\"#ffffff\"/>\n<text x=\"210\" y=\"45\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n</svg>\n",
        esc(message)
    )
}

/// Line segments of a dendrogram drawn right-to-left: leaves at `x0 + width`,
/// the root towards `x0`. `ys[leaf]` gives the vertical centre of each leaf.
fn dendrogram_paths(g: &Dendrogram, ys: &[f64], x0: f64, width: f64) -> String {
    let max_h = g.merges.iter().map(|m| m.distance).fold(0.0f64, f64::max).max(1e-12);
    let x_of = |h: f64| x0 + width * (1.0 - h / max_h);
    let mut pos: Vec<(f64, f64)> = ys.iter().map(|&y| (x0 + width, y)).collect();
    let mut s = String::new();
    for m in &g.merges {
        let (xa, ya) = pos[m.a];
        let (xb, yb) = pos[m.b];
        let x = x_of(m.distance);
        let _ = writeln!(
            s,
            "<path d=\"M{xa:.1},{ya:.1} H{x:.1} V{yb:.1} H{xb:.1}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>"
        );
        pos.push((x, (ya + yb) / 2.0));
    }
    s
}

/// Heatmap of rule distances in dendrogram leaf order with support and
/// importance side columns and the dendrogram on the left.
pub fn heatmap_svg(
    distances: &DistanceMatrix,
    dendrogram: &Dendrogram,
    supports: &[(f64, f64)],
    coefficients: &[f64],
) -> String {
    let n = distances.len();
    let order = dendrogram.leaf_order();
    let cell = (560.0 / n.max(1) as f64).clamp(4.0, 28.0);
    let dendro_w = 120.0;
    let side = cell.max(12.0);
    let top = 40.0;
    let label_w = 60.0;
    let grid_x = dendro_w + 3.0 * side + label_w;
    let width = grid_x + cell * n as f64 + 20.0;
    let height = top + cell * n as f64 + 20.0;
    let max_abs = coefficients.iter().map(|w| w.abs()).fold(0.0, f64::max);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"10\">"
    );
    let _ = writeln!(s, "<rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"#ffffff\"/>");
    for (label, i) in [("sup+", 0.0), ("sup-", 1.0), ("coef", 2.0)] {
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{label}</text>",
            dendro_w + side * (i + 0.5),
            top - 6.0
        );
    }
    let mut ys = vec![0.0; n];
    for (row, &r) in order.iter().enumerate() {
        let y = top + cell * row as f64;
        ys[r] = y + cell / 2.0;
        let (sp, sn) = supports.get(r).copied().unwrap_or((0.0, 0.0));
        let w = coefficients.get(r).copied().unwrap_or(0.0);
        let side_cells = [support_color(sp), support_color(sn), importance_color(w, max_abs)];
        for (i, fill) in side_cells.iter().enumerate() {
            let _ = writeln!(
                s,
                "<rect class=\"side\" data-rule=\"{r}\" x=\"{:.1}\" y=\"{y:.1}\" width=\"{side:.1}\" height=\"{cell:.1}\" fill=\"{fill}\"/>",
                dendro_w + side * i as f64
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" dominant-baseline=\"middle\">rule {r}</text>",
            dendro_w + 3.0 * side + 4.0,
            y + cell / 2.0
        );
        for (col, &c) in order.iter().enumerate() {
            let _ = writeln!(
                s,
                "<rect class=\"cell\" data-i=\"{r}\" data-j=\"{c}\" x=\"{:.1}\" y=\"{y:.1}\" width=\"{cell:.1}\" height=\"{cell:.1}\" fill=\"{}\"/>",
                grid_x + cell * col as f64,
                distance_color(distances.get(r, c))
            );
        }
    }
    s.push_str(&dendrogram_paths(dendrogram, &ys, 4.0, dendro_w - 8.0));
    s.push_str("</svg>\n");
    s
}

pub fn dendrogram_svg(dendrogram: &Dendrogram) -> String {
    let n = dendrogram.n;
    let order = dendrogram.leaf_order();
    let row = 18.0;
    let width = 460.0;
    let height = 20.0 + row * n as f64;
    let mut ys = vec![0.0; n];
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"10\">"
    );
    let _ = writeln!(s, "<rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"#ffffff\"/>");
    for (i, &leaf) in order.iter().enumerate() {
        let y = 10.0 + row * (i as f64 + 0.5);
        ys[leaf] = y;
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{y:.1}\" dominant-baseline=\"middle\">rule {leaf}</text>", width - 56.0);
    }
    s.push_str(&dendrogram_paths(dendrogram, &ys, 10.0, width - 76.0));
    s.push_str("</svg>\n");
    s
}

pub fn write_cluster_figures(cfg: &PipelineConfig, clustered: &Clustered) -> Result<()> {
    let dir = cfg.output_dir.join("figures");
    let (heat, dendro) = match (&clustered.distances, &clustered.dendrogram) {
        (Some(d), Some(g)) => {
            let mut supports = vec![(0.0, 0.0); clustered.important.len()];
            for s in &clustered.report.support {
                supports[s.rule] = (s.positive, s.negative);
            }
            (heatmap_svg(d, g, &supports, &clustered.coefficients), dendrogram_svg(g))
        }
        _ => {
            let msg = "no important rules: nothing to cluster";
            (placeholder_svg(msg), placeholder_svg(msg))
        }
    };
    write_text(&dir.join("heatmap.svg"), &heat)?;
    write_text(&dir.join("dendrogram.svg"), &dendro)
}

/// One panel per metric; bars per trace group in report order.
pub fn metrics_svg(report: &RunReport) -> String {
    type Get = fn(&crate::conformance::MetricsReport) -> f64;
    let metrics: [(&str, Get, bool); 10] = [
        ("t-fit(L+)", |m| m.t_fit_pos, false),
        ("t-fit(L-)", |m| m.t_fit_neg, false),
        ("a-fit(L+)", |m| m.a_fit_pos, false),
        ("a-fit(L-)", |m| m.a_fit_neg, false),
        ("prc(L+)", |m| m.prc_pos, false),
        ("prc(L-)", |m| m.prc_neg, false),
        ("a-acc", |m| m.a_acc, true),
        ("t-acc", |m| m.t_acc, true),
        ("a-F1", |m| m.a_f1, false),
        ("t-F1", |m| m.t_f1, false),
    ];
    let groups = &report.metrics;
    let bar = 14.0;
    let panel_w = 30.0 + bar * groups.len().max(1) as f64 + 10.0;
    let panel_h = 160.0;
    let cols = 5usize;
    let width = panel_w * cols as f64 + 20.0;
    let legend_h = 18.0 * groups.len() as f64 + 10.0;
    let height = panel_h * 2.0 + 20.0 + legend_h;
    let palette = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"10\">"
    );
    let _ = writeln!(s, "<rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"#ffffff\"/>");
    for (pi, (name, get, signed)) in metrics.iter().enumerate() {
        let px = 10.0 + panel_w * (pi % cols) as f64;
        let py = 10.0 + panel_h * (pi / cols) as f64;
        let plot_top = py + 18.0;
        let plot_h = panel_h - 40.0;
        let (lo, hi) = if *signed { (-1.0, 1.0) } else { (0.0, 1.0) };
        let y_of = |v: f64| plot_top + plot_h * (hi - v) / (hi - lo);
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{name}</text>", px + panel_w / 2.0, py + 10.0);
        let _ = writeln!(
            s,
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#999999\"/>",
            px + 24.0,
            y_of(0.0),
            px + panel_w - 8.0,
            y_of(0.0)
        );
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{hi}</text>", px + 20.0, y_of(hi) + 3.0);
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{lo}</text>", px + 20.0, y_of(lo) + 3.0);
        for (gi, row) in groups.iter().enumerate() {
            if let Some(m) = &row.metrics {
                let v = get(m);
                let (y0, y1) = (y_of(v.max(0.0)), y_of(v.min(0.0)));
                let _ = writeln!(
                    s,
                    "<rect x=\"{:.1}\" y=\"{y0:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"{}\"><title>{} {name} = {v:.3}</title></rect>",
                    px + 28.0 + bar * gi as f64,
                    bar - 2.0,
                    (y1 - y0).max(0.5),
                    palette[gi % palette.len()],
                    esc(&row.group)
                );
            }
        }
    }
    for (gi, row) in groups.iter().enumerate() {
        let y = panel_h * 2.0 + 20.0 + 18.0 * gi as f64;
        let _ = writeln!(s, "<rect x=\"10\" y=\"{y:.1}\" width=\"12\" height=\"12\" fill=\"{}\"/>", palette[gi % palette.len()]);
        let label = if row.metrics.is_some() {
            esc(&row.group)
        } else {
            format!("{} (no model)", esc(&row.group))
        };
        let _ = writeln!(s, "<text x=\"28\" y=\"{:.1}\">{label}</text>", y + 10.0);
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_metrics_figure(out: &Path, report: &RunReport) -> Result<()> {
    write_text(&out.join("figures").join("metrics.svg"), &metrics_svg(report))
}
