//! Two-dimensional figures rendered to standalone SVG: scatter plots, lines
//! and contours of a scalar function, with axis labels, a legend and an
//! optional colorbar.
//!
//! ```
//! use matcha::plot::{ContourOptions, Figure};
//!
//! let mut fig = Figure::new();
//! fig.contour_decision_function(-1.0, 1.0, -1.0, 1.0, &ContourOptions::levels(vec![0.5]), |x, y| x * x + y * y)
//!     .unwrap();
//! fig.xlabel("x");
//! let svg = fig.render().unwrap();
//! assert!(svg.contains("contour-line"));
//! ```

use std::path::Path;

use thiserror::Error;

use crate::matrix::Matrix;

pub mod contour;
pub mod style;
mod svg;

pub use self::contour::{marching_squares, Chain, Grid};
pub use self::style::{colormap, Color, LineDash};

/// Samples per axis for contour evaluation.
pub const DEFAULT_GRID: usize = 100;
pub const DEFAULT_WIDTH: u32 = 640;
pub const DEFAULT_HEIGHT: u32 = 480;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid range: {0}")]
    Range(String),
    #[error("invalid style: {0}")]
    Style(String),
    #[error("figure has no elements to draw")]
    EmptyFigure,
    #[error("cannot write figure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = PlotError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq)]
pub struct Scatter {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Per-point values mapped through the colormap.
    pub color_values: Option<Vec<f64>>,
    pub color: Color,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub color: Color,
    pub dash: LineDash,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContourLevel {
    pub level: f64,
    pub color: Color,
    pub dash: LineDash,
    pub chains: Vec<Chain>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Contour {
    pub grid: Grid,
    /// Pseudocolour fill under the lines (drawn when no levels are given).
    pub filled: bool,
    pub levels: Vec<ContourLevel>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Element {
    Scatter(Scatter),
    Line(Line),
    Contour(Contour),
}

/// Options for [`Figure::contour_decision_function`].
#[derive(Clone, Debug, PartialEq)]
pub struct ContourOptions {
    /// Iso-values to draw. `None` draws a filled map with evenly spaced
    /// default levels.
    pub levels: Option<Vec<f64>>,
    /// Colours cycled over levels; empty means black lines.
    pub colors: Vec<Color>,
    /// Dash patterns cycled over levels; empty means solid.
    pub linestyles: Vec<LineDash>,
    pub grid: usize,
}

impl Default for ContourOptions {
    fn default() -> Self {
        ContourOptions { levels: None, colors: Vec::new(), linestyles: Vec::new(), grid: DEFAULT_GRID }
    }
}

impl ContourOptions {
    pub fn levels(levels: Vec<f64>) -> Self {
        ContourOptions { levels: Some(levels), ..ContourOptions::default() }
    }

    /// Parses colour and line-style names, e.g. `"r"` and `"solid"`.
    pub fn styled(mut self, colors: &[&str], linestyles: &[&str]) -> Result<Self> {
        self.colors = colors.iter().map(|c| c.parse()).collect::<Result<_>>()?;
        self.linestyles = linestyles.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        Ok(self)
    }
}

/// Number of default levels drawn on filled contours.
const DEFAULT_LEVELS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Figure {
    elements: Vec<Element>,
    xlabel: Option<String>,
    ylabel: Option<String>,
    legend: Vec<String>,
    colorbar: bool,
    width: u32,
    height: u32,
}

impl Default for Figure {
    fn default() -> Self {
        Figure::new()
    }
}

fn vector_values(m: &Matrix, what: &str) -> Result<Vec<f64>> {
    if m.rows() != 1 && m.cols() != 1 {
        return Err(PlotError::Shape(format!("{what} must be a vector, got {}x{}", m.rows(), m.cols())));
    }
    Ok(m.to_f64_vec())
}

fn check_series(x: &[f64], y: &[f64]) -> Result<()> {
    if x.is_empty() || x.len() != y.len() {
        return Err(PlotError::Shape(format!("x has {} values, y has {}", x.len(), y.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(PlotError::Range("coordinates must be finite".into()));
    }
    Ok(())
}

impl Figure {
    pub fn new() -> Self {
        Figure {
            elements: Vec::new(),
            xlabel: None,
            ylabel: None,
            legend: Vec::new(),
            colorbar: false,
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
        }
    }

    pub fn with_size(width: u32, height: u32) -> Self {
        Figure { width: width.max(160), height: height.max(120), ..Figure::new() }
    }

    pub fn size(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    fn next_color(&self) -> Color {
        style::PALETTE[self.elements.len() % style::PALETTE.len()]
    }

    /// Markers at `(x[k], y[k])`; with `color`, each marker's fill comes
    /// from the colormap over the range of `color`.
    pub fn scatter(&mut self, x: &Matrix, y: &Matrix, color: Option<&Matrix>) -> Result<()> {
        let cv = color.map(|c| vector_values(c, "color")).transpose()?;
        self.scatter_values(&vector_values(x, "x")?, &vector_values(y, "y")?, cv.as_deref())
    }

    pub fn scatter_values(&mut self, x: &[f64], y: &[f64], color: Option<&[f64]>) -> Result<()> {
        check_series(x, y)?;
        if let Some(c) = color {
            if c.len() != x.len() {
                return Err(PlotError::Shape(format!("{} points but {} colour values", x.len(), c.len())));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(PlotError::Range("colour values must be finite".into()));
            }
        }
        let color_fixed = self.next_color();
        self.elements.push(Element::Scatter(Scatter {
            x: x.to_vec(),
            y: y.to_vec(),
            color_values: color.map(<[f64]>::to_vec),
            color: color_fixed,
        }));
        Ok(())
    }

    pub fn line(&mut self, x: &[f64], y: &[f64], color: Option<Color>, dash: LineDash) -> Result<()> {
        check_series(x, y)?;
        let color = color.unwrap_or_else(|| self.next_color());
        self.elements.push(Element::Line(Line { x: x.to_vec(), y: y.to_vec(), color, dash }));
        Ok(())
    }

    /// Samples `f` on a grid over the rectangle and draws its iso-lines at
    /// `opts.levels`, or a filled pseudocolour map with default levels when
    /// no levels are given. Non-finite samples are clamped to the finite
    /// range and counted in [`Figure::clamped_samples`].
    pub fn contour_decision_function(
        &mut self,
        xmin: f64,
        xmax: f64,
        ymin: f64,
        ymax: f64,
        opts: &ContourOptions,
        f: impl FnMut(f64, f64) -> f64,
    ) -> Result<()> {
        if !(xmin < xmax && ymin < ymax) || ![xmin, xmax, ymin, ymax].iter().all(|v| v.is_finite()) {
            return Err(PlotError::Range(format!("rectangle [{xmin}, {xmax}] x [{ymin}, {ymax}] is empty")));
        }
        if opts.grid < 2 {
            return Err(PlotError::Range(format!("grid needs at least 2 samples per axis, got {}", opts.grid)));
        }
        if let Some(levels) = &opts.levels {
            if levels.is_empty() || levels.iter().any(|l| !l.is_finite()) {
                return Err(PlotError::Range("levels must be a non-empty list of finite values".into()));
            }
        }
        let grid = Grid::sample((xmin, xmax), (ymin, ymax), opts.grid, opts.grid, f);
        let filled = opts.levels.is_none();
        let values = match &opts.levels {
            Some(levels) => levels.clone(),
            None => {
                let (lo, hi) = grid.value_range();
                if hi > lo {
                    (1..=DEFAULT_LEVELS).map(|k| lo + (hi - lo) * k as f64 / (DEFAULT_LEVELS + 1) as f64).collect()
                } else {
                    Vec::new()
                }
            }
        };
        let default_line = if filled { Color(0x33, 0x33, 0x33) } else { Color::BLACK };
        let levels = values
            .iter()
            .enumerate()
            .map(|(k, &level)| ContourLevel {
                level,
                color: if opts.colors.is_empty() { default_line } else { opts.colors[k % opts.colors.len()] },
                dash: if opts.linestyles.is_empty() {
                    LineDash::Solid
                } else {
                    opts.linestyles[k % opts.linestyles.len()]
                },
                chains: marching_squares(&grid, level),
            })
            .collect();
        self.elements.push(Element::Contour(Contour { grid, filled, levels }));
        Ok(())
    }

    pub fn xlabel(&mut self, text: &str) {
        self.xlabel = Some(text.to_owned());
    }

    pub fn ylabel(&mut self, text: &str) {
        self.ylabel = Some(text.to_owned());
    }

    /// Legend rows, matched to elements in the order they were added.
    pub fn legend<S: AsRef<str>>(&mut self, entries: &[S]) {
        self.legend = entries.iter().map(|s| s.as_ref().to_owned()).collect();
    }

    /// Adds a vertical colorbar for the most recent colour-mapped element
    /// (a filled contour or a scatter with colour values).
    pub fn colorbar(&mut self) -> Result<()> {
        if self.color_range().is_none() {
            return Err(PlotError::Style("colorbar needs a filled contour or colour-mapped scatter".into()));
        }
        self.colorbar = true;
        Ok(())
    }

    pub fn has_colorbar(&self) -> bool {
        self.colorbar
    }

    /// Non-finite contour samples clamped so far.
    pub fn clamped_samples(&self) -> usize {
        self.elements
            .iter()
            .map(|e| match e {
                Element::Contour(c) => c.grid.clamped,
                _ => 0,
            })
            .sum()
    }

    fn color_range(&self) -> Option<(f64, f64)> {
        self.elements.iter().rev().find_map(|e| match e {
            Element::Contour(c) if c.filled => Some(c.grid.value_range()),
            Element::Scatter(Scatter { color_values: Some(v), .. }) => {
                Some(v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x))))
            }
            _ => None,
        })
    }

    /// Axis ranges covering every element with a 5% margin on each side.
    pub fn ranges(&self) -> Result<((f64, f64), (f64, f64))> {
        let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
        let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
        let grow = |r: &mut (f64, f64), v: f64| {
            r.0 = r.0.min(v);
            r.1 = r.1.max(v);
        };
        for e in &self.elements {
            match e {
                Element::Scatter(Scatter { x, y, .. }) | Element::Line(Line { x, y, .. }) => {
                    x.iter().for_each(|&v| grow(&mut xs, v));
                    y.iter().for_each(|&v| grow(&mut ys, v));
                }
                Element::Contour(c) => {
                    grow(&mut xs, c.grid.x_range.0);
                    grow(&mut xs, c.grid.x_range.1);
                    grow(&mut ys, c.grid.y_range.0);
                    grow(&mut ys, c.grid.y_range.1);
                }
            }
        }
        if xs.0 > xs.1 {
            return Err(PlotError::EmptyFigure);
        }
        Ok((pad(xs), pad(ys)))
    }

    /// The SVG document for this figure.
    pub fn render(&self) -> Result<String> {
        if self.elements.is_empty() {
            return Err(PlotError::EmptyFigure);
        }
        svg::render(self)
    }

    /// Writes the SVG document to `path` and returns it.
    pub fn show(&self, path: impl AsRef<Path>) -> Result<String> {
        let doc = self.render()?;
        std::fs::write(path, &doc)?;
        Ok(doc)
    }
}

fn pad((lo, hi): (f64, f64)) -> (f64, f64) {
    let span = hi - lo;
    let margin = if span > 0.0 { 0.05 * span } else { 0.5 * lo.abs().max(1.0) };
    (lo - margin, hi + margin)
}
