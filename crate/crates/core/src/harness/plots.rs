//! Hand-written SVG plots: space-time heatmaps, region overlays and margin
//! bars. Time runs upward.

use std::fmt::Write as _;

use super::report::{Comparison, SpinStatReport};
use crate::causal::Region;

const CELL_MAX: usize = 192;

fn header(w: usize, h: usize, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="monospace" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="8" y="16">{}</text>"#, escape(title));
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Block sizes so that the plotted grid has at most `CELL_MAX` cells a side.
fn blocks(nt: usize, nx: usize) -> (usize, usize) {
    (nt.div_ceil(CELL_MAX).max(1), nx.div_ceil(CELL_MAX).max(1))
}

/// Heatmap of `log10 |u|` over the lattice, clipped 12 decades below the maximum.
pub fn heatmap(values: &[f64], nt: usize, nx: usize, title: &str) -> String {
    let (bt, bx) = blocks(nt, nx);
    let (rows, cols) = (nt.div_ceil(bt), nx.div_ceil(bx));
    let px = 3;
    let (w, h) = (cols * px + 16, rows * px + 40);
    let mut s = header(w, h, title);
    let top = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if top > 0.0 {
        for r in 0..rows {
            for c in 0..cols {
                let mut m = 0.0_f64;
                for i in r * bt..((r + 1) * bt).min(nt) {
                    for j in c * bx..((c + 1) * bx).min(nx) {
                        m = m.max(values[i * nx + j].abs());
                    }
                }
                if m == 0.0 {
                    continue;
                }
                let level = ((m / top).log10() / 12.0 + 1.0).clamp(0.0, 1.0);
                let shade = (255.0 * (1.0 - level)) as u8;
                let y = 24 + (rows - 1 - r) * px;
                let _ = writeln!(
                    s,
                    r#"<rect x="{}" y="{y}" width="{px}" height="{px}" fill="rgb(255,{shade},{shade})"/>"#,
                    8 + c * px
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Overlay of named regions; later regions are drawn on top.
pub fn regions(list: &[(String, Region)], title: &str) -> String {
    let Some((_, first)) = list.first() else {
        let mut s = header(200, 40, title);
        s.push_str("</svg>\n");
        return s;
    };
    let (nt, nx) = (first.nt, first.nx);
    let (bt, bx) = blocks(nt, nx);
    let (rows, cols) = (nt.div_ceil(bt), nx.div_ceil(bx));
    let px = 3;
    let legend = 16 * list.len();
    let (w, h) = (cols * px + 16, rows * px + 40 + legend);
    let mut s = header(w, h, title);
    let _ = writeln!(s, r##"<rect x="8" y="24" width="{}" height="{}" fill="none" stroke="#999"/>"##, cols * px, rows * px);
    for (k, (name, r)) in list.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let mut cells = vec![false; rows * cols];
        for site in r.sites() {
            let (i, j) = (site / nx, site % nx);
            cells[(i / bt) * cols + j / bx] = true;
        }
        for (idx, _) in cells.iter().enumerate().filter(|(_, &c)| c) {
            let (row, col) = (idx / cols, idx % cols);
            let y = 24 + (rows - 1 - row) * px;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{y}" width="{px}" height="{px}" fill="{colour}" fill-opacity="0.55"/>"#,
                8 + col * px
            );
        }
        let ly = 24 + rows * px + 14 + 16 * k;
        let _ = writeln!(s, r#"<rect x="8" y="{}" width="10" height="10" fill="{colour}"/>"#, ly - 10);
        let _ = writeln!(s, r#"<text x="24" y="{ly}">{}</text>"#, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

/// Bars of `log10(threshold / value)` for upper bounds and `log10(value / threshold)`
/// for lower bounds, so that positive bars pass. Margins with a zero
/// threshold or value are drawn at the clamp.
pub fn margin_bars(report: &SpinStatReport) -> String {
    let rows: Vec<(String, f64, bool)> = report
        .stages
        .iter()
        .flat_map(|s| {
            s.margins.iter().map(move |m| {
                let ratio = match m.comparison {
                    Comparison::Lt | Comparison::Le => m.threshold / m.value.abs(),
                    Comparison::Gt | Comparison::Ge => m.value / m.threshold,
                };
                let lr = if ratio.is_finite() && ratio > 0.0 {
                    ratio.log10()
                } else if m.pass {
                    16.0
                } else {
                    -16.0
                };
                (format!("{}:{}", s.id, m.name), lr.clamp(-16.0, 16.0), m.pass)
            })
        })
        .collect();
    let (label_w, bar_w, row_h) = (360, 320, 14);
    let (w, h) = (label_w + bar_w + 24, rows.len() * row_h + 48);
    let mut s = header(w, h, &format!("margins (log10 slack), verdict: {}", report.verdict));
    let zero = label_w + bar_w / 2;
    let _ = writeln!(s, r#"<line x1="{zero}" y1="24" x2="{zero}" y2="{}" stroke="black"/>"#, h - 8);
    for (k, (name, lr, pass)) in rows.iter().enumerate() {
        let y = 28 + k * row_h;
        let len = (lr.abs() / 16.0 * (bar_w / 2) as f64) as usize;
        let x = if *lr >= 0.0 { zero } else { zero - len };
        let colour = if *pass { "#2ca02c" } else { "#d62728" };
        let _ = writeln!(s, r#"<text x="8" y="{}">{}</text>"#, y + 10, escape(name));
        let _ = writeln!(s, r#"<rect x="{x}" y="{y}" width="{len}" height="{}" fill="{colour}"/>"#, row_h - 3);
    }
    s.push_str("</svg>\n");
    s
}
