//! Colours, dash patterns and the embedded colormap.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use super::PlotError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Color(pub u8, pub u8, pub u8);

impl Color {
    pub const BLACK: Color = Color(0, 0, 0);

    pub fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

/// Accepts single-letter codes (`r g b c m y k w`), a few names, and
/// `#rrggbb`.
impl FromStr for Color {
    type Err = PlotError;

    fn from_str(s: &str) -> Result<Self, PlotError> {
        let c = match s.trim() {
            "r" | "red" => Color(255, 0, 0),
            "g" | "green" => Color(0, 128, 0),
            "b" | "blue" => Color(0, 0, 255),
            "c" | "cyan" => Color(0, 191, 191),
            "m" | "magenta" => Color(191, 0, 191),
            "y" | "yellow" => Color(191, 191, 0),
            "k" | "black" => Color(0, 0, 0),
            "w" | "white" => Color(255, 255, 255),
            "gray" | "grey" => Color(128, 128, 128),
            hex if hex.len() == 7 && hex.starts_with('#') => {
                let part = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16);
                match (part(1), part(3), part(5)) {
                    (Ok(r), Ok(g), Ok(b)) => Color(r, g, b),
                    _ => return Err(PlotError::Style(format!("invalid colour {s:?}"))),
                }
            }
            _ => return Err(PlotError::Style(format!("unknown colour {s:?}"))),
        };
        Ok(c)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum LineDash {
    #[default]
    Solid,
    Dashed,
    Dotted,
    DashDot,
}

impl LineDash {
    /// SVG `stroke-dasharray`, if any.
    pub fn dasharray(self) -> Option<&'static str> {
        match self {
            LineDash::Solid => None,
            LineDash::Dashed => Some("6,4"),
            LineDash::Dotted => Some("1.5,3"),
            LineDash::DashDot => Some("6,3,1.5,3"),
        }
    }
}

impl FromStr for LineDash {
    type Err = PlotError;

    fn from_str(s: &str) -> Result<Self, PlotError> {
        match s.trim() {
            "solid" | "-" => Ok(LineDash::Solid),
            "dashed" | "--" => Ok(LineDash::Dashed),
            "dotted" | ":" => Ok(LineDash::Dotted),
            "dashdot" | "-." => Ok(LineDash::DashDot),
            other => Err(PlotError::Style(format!("unknown line style {other:?}"))),
        }
    }
}

/// Default colours for successive series.
pub const PALETTE: [Color; 6] = [
    Color(0x1f, 0x77, 0xb4),
    Color(0xff, 0x7f, 0x0e),
    Color(0x2c, 0xa0, 0x2c),
    Color(0xd6, 0x27, 0x28),
    Color(0x94, 0x67, 0xbd),
    Color(0x8c, 0x56, 0x4b),
];

const VIRIDIS_STOPS: [Color; 9] = [
    Color(0x44, 0x01, 0x54),
    Color(0x48, 0x28, 0x78),
    Color(0x3e, 0x49, 0x89),
    Color(0x31, 0x68, 0x8e),
    Color(0x26, 0x82, 0x8e),
    Color(0x1f, 0x9e, 0x89),
    Color(0x35, 0xb7, 0x79),
    Color(0x6e, 0xce, 0x58),
    Color(0xfd, 0xe7, 0x25),
];

/// 256-entry viridis-like table interpolated from nine anchor colours.
pub fn colormap() -> &'static [Color; 256] {
    static TABLE: OnceLock<[Color; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [Color::BLACK; 256];
        let segments = (VIRIDIS_STOPS.len() - 1) as f64;
        for (k, entry) in table.iter_mut().enumerate() {
            let pos = k as f64 / 255.0 * segments;
            let lo = (pos.floor() as usize).min(VIRIDIS_STOPS.len() - 2);
            let t = pos - lo as f64;
            let (a, b) = (VIRIDIS_STOPS[lo], VIRIDIS_STOPS[lo + 1]);
            let mix = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * t).round() as u8;
            *entry = Color(mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2));
        }
        table
    })
}

/// Table index for `value` mapped linearly over `[lo, hi]`; a degenerate
/// range maps to the middle of the table.
pub fn colormap_index(value: f64, lo: f64, hi: f64) -> usize {
    if !(hi > lo) {
        return 128;
    }
    let t = ((value - lo) / (hi - lo)).clamp(0.0, 1.0);
    (t * 255.0).round() as usize
}
