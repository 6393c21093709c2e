//! Deterministic SVG line and scatter plots.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Curve,
    Scatter,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 40.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn range_of(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn tick_label(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e9 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Same input, same bytes: no timestamps, no randomness, fixed float widths.
pub fn render_plot(series: &[Series], kind: PlotKind) -> Result<String> {
    if series.is_empty() {
        return Err(Error::Empty("no series to plot".into()));
    }
    for s in series {
        if s.points.is_empty() {
            return Err(Error::Empty(format!("series {:?} has no points", s.name)));
        }
    }
    let (x_lo, x_hi) = range_of(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y_lo, y_hi) = range_of(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let map_x = |v: f64| LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w;
    let map_y = |v: f64| TOP + (1.0 - (v - y_lo) / (y_hi - y_lo)) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    svg.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"#333333\"/>\n",
        HEIGHT - BOTTOM,
        WIDTH - RIGHT,
        HEIGHT - BOTTOM
    ));
    svg.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{:.3}\" stroke=\"#333333\"/>\n",
        HEIGHT - BOTTOM
    ));
    for i in 0..5 {
        let fx = x_lo + (x_hi - x_lo) * i as f64 / 4.0;
        let fy = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let px = map_x(fx);
        let py = map_y(fy);
        svg.push_str(&format!(
            "<line x1=\"{px:.3}\" y1=\"{:.3}\" x2=\"{px:.3}\" y2=\"{:.3}\" stroke=\"#333333\"/>\n",
            HEIGHT - BOTTOM,
            HEIGHT - BOTTOM + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.3}\" y=\"{:.3}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            HEIGHT - BOTTOM + 18.0,
            tick_label(fx)
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.3}\" y1=\"{py:.3}\" x2=\"{LEFT}\" y2=\"{py:.3}\" stroke=\"#333333\"/>\n",
            LEFT - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.3}\" y=\"{:.3}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            LEFT - 8.0,
            py + 4.0,
            tick_label(fy)
        ));
    }
    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        if kind == PlotKind::Curve {
            let coords: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.3},{:.3}", map_x(x), map_y(y)))
                .collect();
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                coords.join(" ")
            ));
        }
        for &(x, y) in &s.points {
            svg.push_str(&format!(
                "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"3\" fill=\"{color}\"/>\n",
                map_x(x),
                map_y(y)
            ));
        }
        let ly = TOP + 14.0 * (idx as f64 + 1.0);
        svg.push_str(&format!(
            "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n",
            WIDTH - RIGHT - 170.0,
            ly - 9.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.3}\" y=\"{ly:.3}\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
            WIDTH - RIGHT - 155.0,
            escape_text(&s.name)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape_text(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
