//! SVG serialization of a [`Figure`]. Output depends only on the figure, so
//! identical figures give byte-identical documents.

use std::fmt::Write;

use super::style::{colormap, colormap_index, Color, LineDash};
use super::{Contour, Element, Figure, Result};

const MAX_TICKS: usize = 8;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 52.0;
const COLORBAR_SPACE: f64 = 76.0;

struct Frame {
    x_range: (f64, f64),
    y_range: (f64, f64),
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    fn sx(&self, x: f64) -> f64 {
        self.left + (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * (self.right - self.left)
    }

    /// Logical y grows upwards; SVG y grows downwards.
    fn sy(&self, y: f64) -> f64 {
        self.bottom - (y - self.y_range.0) / (self.y_range.1 - self.y_range.0) * (self.bottom - self.top)
    }
}

fn px(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn dash_attr(dash: LineDash) -> String {
    dash.dasharray().map(|d| format!(" stroke-dasharray=\"{d}\"")).unwrap_or_default()
}

/// At most `max` round-number ticks inside `[lo, hi]`, with the decimals
/// needed to print them.
pub(crate) fn nice_ticks(lo: f64, hi: f64, max: usize) -> (Vec<f64>, usize) {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return (vec![lo], 2);
    }
    let magnitude = 10f64.powf((span / max as f64).log10().floor());
    for mult in [1.0, 2.0, 2.5, 5.0, 10.0, 20.0] {
        let step = mult * magnitude;
        let first = (lo / step).ceil();
        let last = (hi / step).floor();
        let count = (last - first) as i64 + 1;
        if count >= 1 && count as usize <= max {
            let ticks = (0..count)
                .map(|k| {
                    let v = (first + k as f64) * step;
                    if v.abs() < step * 1e-9 {
                        0.0
                    } else {
                        v
                    }
                })
                .collect();
            let decimals = (0..=10).find(|&d| {
                let scaled = step * 10f64.powi(d as i32);
                (scaled - scaled.round()).abs() < 1e-6 * scaled.max(1.0)
            });
            return (ticks, decimals.unwrap_or(10));
        }
    }
    (vec![lo, hi], 2)
}

fn tick_label(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_owned()
    } else {
        s
    }
}

pub(super) fn render(fig: &Figure) -> Result<String> {
    let (width, height) = (fig.width as f64, fig.height as f64);
    let (x_range, y_range) = fig.ranges()?;
    let color_range = if fig.colorbar { fig.color_range() } else { None };
    let right_space = MARGIN_RIGHT + if color_range.is_some() { COLORBAR_SPACE } else { 0.0 };
    let frame = Frame {
        x_range,
        y_range,
        left: MARGIN_LEFT,
        right: width - right_space,
        top: MARGIN_TOP,
        bottom: height - MARGIN_BOTTOM,
    };

    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        w,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        fig.width, fig.height, fig.width, fig.height
    );
    let clamped = fig.clamped_samples();
    if clamped > 0 {
        let _ = writeln!(w, "<metadata>non-finite samples clamped: {clamped}</metadata>");
    }
    let _ = writeln!(
        w,
        "<defs><clipPath id=\"plot-area\"><rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/></clipPath></defs>",
        px(frame.left),
        px(frame.top),
        px(frame.right - frame.left),
        px(frame.bottom - frame.top)
    );
    let _ = writeln!(w, "<rect class=\"background\" width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>");
    let _ = writeln!(w, "<g clip-path=\"url(#plot-area)\">");
    for element in &fig.elements {
        match element {
            Element::Contour(c) => write_contour(w, &frame, c),
            Element::Scatter(s) => {
                let range = s.color_values.as_ref().map(|v| {
                    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
                });
                let _ = writeln!(w, "<g class=\"scatter\">");
                for k in 0..s.x.len() {
                    let fill = match (&s.color_values, range) {
                        (Some(v), Some((lo, hi))) => colormap()[colormap_index(v[k], lo, hi)],
                        _ => s.color,
                    };
                    let _ = writeln!(
                        w,
                        "<circle class=\"marker\" cx=\"{}\" cy=\"{}\" r=\"3.5\" fill=\"{fill}\" stroke=\"#222222\" stroke-width=\"0.5\"/>",
                        px(frame.sx(s.x[k])),
                        px(frame.sy(s.y[k]))
                    );
                }
                let _ = writeln!(w, "</g>");
            }
            Element::Line(l) => {
                let points: Vec<String> =
                    l.x.iter().zip(&l.y).map(|(&x, &y)| format!("{},{}", px(frame.sx(x)), px(frame.sy(y)))).collect();
                let _ = writeln!(
                    w,
                    "<polyline class=\"line\" points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{}/>",
                    points.join(" "),
                    l.color,
                    dash_attr(l.dash)
                );
            }
        }
    }
    let _ = writeln!(w, "</g>");
    write_axes(w, fig, &frame, height);
    if !fig.legend.is_empty() {
        write_legend(w, fig, &frame);
    }
    if let Some(range) = color_range {
        write_colorbar(w, &frame, range);
    }
    let _ = writeln!(w, "</svg>");
    Ok(out)
}

fn write_contour(w: &mut String, frame: &Frame, c: &Contour) {
    let grid = &c.grid;
    if c.filled {
        let (lo, hi) = grid.value_range();
        let map = colormap();
        let _ = writeln!(w, "<g class=\"filled-contour\" shape-rendering=\"crispEdges\">");
        for j in 0..grid.ny - 1 {
            let (y_top, y_bottom) = (frame.sy(grid.y(j + 1)), frame.sy(grid.y(j)));
            let mut i = 0;
            while i < grid.nx - 1 {
                let cell = |i: usize| {
                    let mean = (grid.at(i, j) + grid.at(i + 1, j) + grid.at(i, j + 1) + grid.at(i + 1, j + 1)) / 4.0;
                    colormap_index(mean, lo, hi)
                };
                let index = cell(i);
                let mut end = i + 1;
                while end < grid.nx - 1 && cell(end) == index {
                    end += 1;
                }
                let (x0, x1) = (frame.sx(grid.x(i)), frame.sx(grid.x(end)));
                let _ = writeln!(
                    w,
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
                    px(x0),
                    px(y_top),
                    px(x1 - x0),
                    px(y_bottom - y_top),
                    map[index]
                );
                i = end;
            }
        }
        let _ = writeln!(w, "</g>");
    }
    for level in &c.levels {
        let width = if c.filled { "0.8" } else { "1.5" };
        for chain in &level.chains {
            let mut d = String::new();
            for (k, &(x, y)) in chain.points.iter().enumerate() {
                let _ = write!(d, "{}{} {}", if k == 0 { "M" } else { " L" }, px(frame.sx(x)), px(frame.sy(y)));
            }
            if chain.closed {
                d.push_str(" Z");
            }
            let _ = writeln!(
                w,
                "<path class=\"contour-line\" data-level=\"{}\" d=\"{d}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{width}\"{}/>",
                level.level,
                level.color,
                dash_attr(level.dash)
            );
        }
    }
}

fn write_axes(w: &mut String, fig: &Figure, frame: &Frame, height: f64) {
    let _ = writeln!(w, "<g class=\"axes\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#000000\">");
    let _ = writeln!(
        w,
        "<rect class=\"frame\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\"/>",
        px(frame.left),
        px(frame.top),
        px(frame.right - frame.left),
        px(frame.bottom - frame.top)
    );
    let (xt, xd) = nice_ticks(frame.x_range.0, frame.x_range.1, MAX_TICKS);
    for v in xt {
        let x = px(frame.sx(v));
        let _ = writeln!(
            w,
            "<line class=\"tick\" x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#000000\"/>",
            px(frame.bottom),
            px(frame.bottom + 5.0)
        );
        let _ = writeln!(
            w,
            "<text class=\"tick-label\" x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            px(frame.bottom + 18.0),
            tick_label(v, xd)
        );
    }
    let (yt, yd) = nice_ticks(frame.y_range.0, frame.y_range.1, MAX_TICKS);
    for v in yt {
        let y = px(frame.sy(v));
        let _ = writeln!(
            w,
            "<line class=\"tick\" x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#000000\"/>",
            px(frame.left - 5.0),
            px(frame.left)
        );
        let _ = writeln!(
            w,
            "<text class=\"tick-label\" x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            px(frame.left - 8.0),
            px(frame.sy(v) + 4.0),
            tick_label(v, yd)
        );
    }
    if let Some(label) = &fig.xlabel {
        let _ = writeln!(
            w,
            "<text class=\"xlabel\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\">{}</text>",
            px((frame.left + frame.right) / 2.0),
            px(height - 12.0),
            escape(label)
        );
    }
    if let Some(label) = &fig.ylabel {
        let _ = writeln!(
            w,
            "<text class=\"ylabel\" transform=\"translate(16,{}) rotate(-90)\" text-anchor=\"middle\" font-size=\"13\">{}</text>",
            px((frame.top + frame.bottom) / 2.0),
            escape(label)
        );
    }
    let _ = writeln!(w, "</g>");
}

enum Swatch {
    Marker(Color),
    Stroke(Color, LineDash),
    Fill(Color),
}

fn swatch(element: Option<&Element>) -> Swatch {
    match element {
        Some(Element::Scatter(s)) => match &s.color_values {
            Some(v) => {
                let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
                Swatch::Marker(colormap()[colormap_index(v[0], lo, hi)])
            }
            None => Swatch::Marker(s.color),
        },
        Some(Element::Line(l)) => Swatch::Stroke(l.color, l.dash),
        Some(Element::Contour(c)) if c.filled => Swatch::Fill(colormap()[128]),
        Some(Element::Contour(c)) => match c.levels.first() {
            Some(level) => Swatch::Stroke(level.color, level.dash),
            None => Swatch::Stroke(Color::BLACK, LineDash::Solid),
        },
        None => Swatch::Stroke(Color(0x80, 0x80, 0x80), LineDash::Solid),
    }
}

fn write_legend(w: &mut String, fig: &Figure, frame: &Frame) {
    const ROW: f64 = 18.0;
    let longest = fig.legend.iter().map(|s| s.chars().count()).max().unwrap_or(0) as f64;
    let box_w = 40.0 + 6.2 * longest;
    let box_h = 8.0 + ROW * fig.legend.len() as f64;
    let x0 = frame.right - box_w - 8.0;
    let y0 = frame.top + 8.0;
    let _ = writeln!(w, "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"11\">");
    let _ = writeln!(
        w,
        "<rect class=\"legend-box\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#ffffff\" fill-opacity=\"0.85\" stroke=\"#999999\"/>",
        px(x0),
        px(y0),
        px(box_w),
        px(box_h)
    );
    for (k, entry) in fig.legend.iter().enumerate() {
        let cy = y0 + 4.0 + ROW * (k as f64 + 0.5);
        let _ = write!(w, "<g class=\"legend-entry\">");
        match swatch(fig.elements.get(k)) {
            Swatch::Marker(c) => {
                let _ = write!(
                    w,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"3.5\" fill=\"{c}\" stroke=\"#222222\" stroke-width=\"0.5\"/>",
                    px(x0 + 17.0),
                    px(cy)
                );
            }
            Swatch::Stroke(c, dash) => {
                let _ = write!(
                    w,
                    "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{c}\" stroke-width=\"1.5\"{}/>",
                    px(x0 + 6.0),
                    px(x0 + 28.0),
                    dash_attr(dash),
                    y = px(cy)
                );
            }
            Swatch::Fill(c) => {
                let _ = write!(
                    w,
                    "<rect x=\"{}\" y=\"{}\" width=\"22\" height=\"10\" fill=\"{c}\"/>",
                    px(x0 + 6.0),
                    px(cy - 5.0)
                );
            }
        }
        let _ = writeln!(w, "<text x=\"{}\" y=\"{}\">{}</text></g>", px(x0 + 34.0), px(cy + 4.0), escape(entry));
    }
    let _ = writeln!(w, "</g>");
}

fn write_colorbar(w: &mut String, frame: &Frame, (lo, hi): (f64, f64)) {
    const STEPS: usize = 64;
    let x0 = frame.right + 16.0;
    let bar_w = 16.0;
    let height = frame.bottom - frame.top;
    let map = colormap();
    let _ = writeln!(w, "<g class=\"colorbar\" font-family=\"sans-serif\" font-size=\"11\" shape-rendering=\"crispEdges\">");
    for k in 0..STEPS {
        let y1 = frame.bottom - height * k as f64 / STEPS as f64;
        let y0 = frame.bottom - height * (k + 1) as f64 / STEPS as f64;
        let index = ((k as f64 + 0.5) / STEPS as f64 * 255.0).round() as usize;
        let _ = writeln!(
            w,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
            px(x0),
            px(y0),
            px(bar_w),
            px(y1 - y0),
            map[index]
        );
    }
    let _ = writeln!(
        w,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\"/>",
        px(x0),
        px(frame.top),
        px(bar_w),
        px(height)
    );
    if hi > lo {
        let (ticks, decimals) = nice_ticks(lo, hi, MAX_TICKS);
        for v in ticks {
            let y = frame.bottom - (v - lo) / (hi - lo) * height;
            let _ = writeln!(
                w,
                "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#000000\"/><text x=\"{}\" y=\"{}\">{}</text>",
                px(x0 + bar_w),
                px(x0 + bar_w + 4.0),
                px(x0 + bar_w + 6.0),
                px(y + 4.0),
                tick_label(v, decimals),
                y = px(y)
            );
        }
    } else {
        let _ = writeln!(
            w,
            "<text x=\"{}\" y=\"{}\">{}</text>",
            px(x0 + bar_w + 6.0),
            px((frame.top + frame.bottom) / 2.0),
            tick_label(lo, 2)
        );
    }
    let _ = writeln!(w, "</g>");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round_and_bounded() {
        let (t, d) = nice_ticks(-1.1, 1.1, 8);
        assert_eq!(t, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(d, 1);
        let (t, d) = nice_ticks(0.0, 1000.0, 8);
        assert!(t.len() <= 8 && t.len() >= 3);
        assert_eq!(d, 0);
        for (lo, hi) in [(0.001, 0.0042), (-37.0, 512.0), (5.0, 5.5), (-1e6, 3e6)] {
            let (t, _) = nice_ticks(lo, hi, 8);
            assert!(!t.is_empty() && t.len() <= 8, "{lo} {hi}: {t:?}");
            assert!(t.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
        }
        assert_eq!(tick_label(-0.0001, 2), "0.00");
        assert_eq!(nice_ticks(0.0, 2.5, 8).1, 1);
    }

    #[test]
    fn escapes_markup() {
        assert_eq!(escape("a<b & 'c'"), "a&lt;b &amp; &apos;c&apos;");
    }
}
