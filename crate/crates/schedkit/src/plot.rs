//! Minimal static SVG plots: stacked panels, one polyline per series,
//! linear axes with an optional log-scale ordinate. Output is a pure
//! function of the input — identical data renders byte-identical files.

use std::fmt::Write as _;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

const PANEL_WIDTH: f64 = 640.0;
const PANEL_HEIGHT: f64 = 240.0;
const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 32.0;

/// One polyline.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    /// Values plotted against steps `1..=n`.
    pub fn from_values(label: impl Into<String>, values: &[f64]) -> Series {
        Series {
            label: label.into(),
            points: values
                .iter()
                .enumerate()
                .map(|(i, &v)| ((i + 1) as f64, v))
                .collect(),
        }
    }

    /// Values plotted against explicit step indices.
    pub fn from_steps(label: impl Into<String>, steps: &[u64], values: &[f64]) -> Series {
        Series {
            label: label.into(),
            points: steps
                .iter()
                .zip(values)
                .map(|(&s, &v)| (s as f64, v))
                .collect(),
        }
    }
}

/// One coordinate box with its own scales and legend.
#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
    pub log_y: bool,
}

impl Panel {
    pub fn new(title: impl Into<String>, series: Vec<Series>) -> Panel {
        Panel {
            title: title.into(),
            series,
            log_y: false,
        }
    }
}

/// Render stacked panels into one SVG document.
pub fn render_svg(panels: &[Panel]) -> String {
    let total_height = PANEL_HEIGHT * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {PANEL_WIDTH} {total_height}\" \
         font-family=\"sans-serif\" font-size=\"11\">"
    );
    for (i, panel) in panels.iter().enumerate() {
        render_panel(&mut out, panel, i as f64 * PANEL_HEIGHT);
    }
    out.push_str("</svg>\n");
    out
}

fn render_panel(out: &mut String, panel: &Panel, y_offset: f64) {
    let left = MARGIN_LEFT;
    let right = PANEL_WIDTH - MARGIN_RIGHT;
    let top = y_offset + MARGIN_TOP;
    let bottom = y_offset + PANEL_HEIGHT - MARGIN_BOTTOM;

    // data ranges over all series, in plot space (log-mapped if requested)
    let mapped: Vec<Vec<(f64, f64)>> = panel
        .series
        .iter()
        .map(|s| map_points(&s.points, panel.log_y))
        .collect();
    let (x_min, x_max) = span(mapped.iter().flatten().map(|p| p.0));
    let (y_min, y_max) = span(mapped.iter().flatten().map(|p| p.1));

    let sx = |x: f64| left + (x - x_min) / (x_max - x_min).max(f64::MIN_POSITIVE) * (right - left);
    let sy = |y: f64| bottom - (y - y_min) / (y_max - y_min).max(f64::MIN_POSITIVE) * (bottom - top);

    let _ = writeln!(
        out,
        "<text x=\"{left}\" y=\"{:.3}\" font-size=\"13\">{}</text>",
        top - 10.0,
        escape(&panel.title)
    );
    // axis frame
    let _ = writeln!(
        out,
        "<path d=\"M {left} {top:.3} L {left} {bottom:.3} L {right} {bottom:.3}\" \
         fill=\"none\" stroke=\"#666\" stroke-width=\"1\"/>"
    );
    // corner tick labels
    let y_label = |v: f64| {
        if panel.log_y {
            format!("1e{v:.2}")
        } else {
            format!("{v:.4}")
        }
    };
    let _ = writeln!(
        out,
        "<text x=\"{:.3}\" y=\"{bottom:.3}\" text-anchor=\"end\">{}</text>",
        left - 4.0,
        y_label(y_min)
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.3}\" y=\"{:.3}\" text-anchor=\"end\">{}</text>",
        left - 4.0,
        top + 4.0,
        y_label(y_max)
    );
    let _ = writeln!(
        out,
        "<text x=\"{left}\" y=\"{:.3}\">{x_min:.0}</text>",
        bottom + 14.0
    );
    let _ = writeln!(
        out,
        "<text x=\"{right}\" y=\"{:.3}\" text-anchor=\"end\">{x_max:.0}</text>",
        bottom + 14.0
    );

    for (k, (series, points)) in panel.series.iter().zip(&mapped).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut path = String::new();
        for (x, y) in points {
            let _ = write!(path, "{:.3},{:.3} ", sx(*x), sy(*y));
        }
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            path.trim_end()
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.3}\" y=\"{:.3}\" fill=\"{color}\" text-anchor=\"end\">{}</text>",
            right - 4.0,
            top + 14.0 + 13.0 * k as f64,
            escape(&series.label)
        );
    }
}

/// Log-map ordinates when requested; nonpositive values are clamped to a
/// tenth of the smallest positive ordinate so decayed-to-zero tails stay
/// visible instead of vanishing.
fn map_points(points: &[(f64, f64)], log_y: bool) -> Vec<(f64, f64)> {
    if !log_y {
        return points.to_vec();
    }
    let floor = points
        .iter()
        .map(|p| p.1)
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor / 10.0 } else { 1e-12 };
    points
        .iter()
        .map(|&(x, y)| (x, y.max(floor).log10()))
        .collect()
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        (0.0, 1.0) // empty panel
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
