//! Scalar grids and iso-line extraction by marching squares.

use std::collections::BTreeMap;

/// Samples of `f` on a regular `nx × ny` lattice spanning the rectangle
/// inclusively. `values[j * nx + i]` is the sample at `(x(i), y(j))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub values: Vec<f64>,
    /// Samples that were non-finite and got clamped to the finite range.
    pub clamped: usize,
}

impl Grid {
    /// Evaluates `f` on the lattice. Non-finite samples are replaced by the
    /// finite maximum (`+∞`) or minimum (`−∞`, NaN) and counted.
    pub fn sample(
        x_range: (f64, f64),
        y_range: (f64, f64),
        nx: usize,
        ny: usize,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Grid {
        let mut grid = Grid { nx, ny, x_range, y_range, values: Vec::with_capacity(nx * ny), clamped: 0 };
        for j in 0..ny {
            let y = grid.y(j);
            for i in 0..nx {
                let x = grid.x(i);
                grid.values.push(f(x, y));
            }
        }
        let finite = grid.values.iter().copied().filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (0.0, 0.0) };
        for v in &mut grid.values {
            if !v.is_finite() {
                *v = if *v == f64::INFINITY { hi } else { lo };
                grid.clamped += 1;
            }
        }
        grid
    }

    pub fn x(&self, i: usize) -> f64 {
        lerp(self.x_range, i, self.nx)
    }

    pub fn y(&self, j: usize) -> f64 {
        lerp(self.y_range, j, self.ny)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Point where the iso-line for `level` crosses `edge`.
    fn crossing(&self, edge: Edge, level: f64) -> (f64, f64) {
        let (i, j) = (edge.i, edge.j);
        let (i2, j2) = if edge.horizontal { (i + 1, j) } else { (i, j + 1) };
        let (a, b) = (self.at(i, j), self.at(i2, j2));
        let t = if b != a { ((level - a) / (b - a)).clamp(0.0, 1.0) } else { 0.5 };
        let (x0, y0) = (self.x(i), self.y(j));
        let (x1, y1) = (self.x(i2), self.y(j2));
        (x0 + t * (x1 - x0), y0 + t * (y1 - y0))
    }
}

fn lerp((lo, hi): (f64, f64), k: usize, n: usize) -> f64 {
    if n < 2 {
        return lo;
    }
    lo + (hi - lo) * k as f64 / (n - 1) as f64
}

/// Lattice edge from `(i, j)` to `(i + 1, j)` (horizontal) or `(i, j + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Edge {
    horizontal: bool,
    i: usize,
    j: usize,
}

/// Connected polyline of an iso-line. Closed chains do not repeat their
/// first point.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

/// Iso-lines of `grid` at `level`, with cell segments joined into chains.
/// Corners at or above the level count as inside; saddle cells are
/// resolved by the mean of their four corners.
pub fn marching_squares(grid: &Grid, level: f64) -> Vec<Chain> {
    if grid.nx < 2 || grid.ny < 2 {
        return Vec::new();
    }
    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx - 1 {
            let corners = [grid.at(i, j), grid.at(i + 1, j), grid.at(i + 1, j + 1), grid.at(i, j + 1)];
            let case = corners.iter().enumerate().fold(0u8, |acc, (k, &v)| acc | (u8::from(v >= level) << k));
            let bottom = Edge { horizontal: true, i, j };
            let right = Edge { horizontal: false, i: i + 1, j };
            let top = Edge { horizontal: true, i, j: j + 1 };
            let left = Edge { horizontal: false, i, j };
            // Corner k sits between edges [left, bottom, right, top][k] and
            // the next one anticlockwise.
            let crossings: Vec<Edge> = [(0, 1, bottom), (1, 2, right), (3, 2, top), (0, 3, left)]
                .iter()
                .filter(|(a, b, _)| (case >> a) & 1 != (case >> b) & 1)
                .map(|&(_, _, e)| e)
                .collect();
            match crossings.len() {
                2 => segments.push((crossings[0], crossings[1])),
                4 => {
                    let centre_inside = corners.iter().sum::<f64>() / 4.0 >= level;
                    // Either cut off corners 1 and 3, or corners 0 and 2.
                    let cut_odd = (case == 0b0101) == centre_inside;
                    if cut_odd {
                        segments.push((bottom, right));
                        segments.push((top, left));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                _ => {}
            }
        }
    }
    join(grid, level, &segments)
}

fn join(grid: &Grid, level: f64, segments: &[(Edge, Edge)]) -> Vec<Chain> {
    let mut by_edge: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(s);
        by_edge.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut chains = Vec::new();
    let walk = |start: Edge, first: usize, used: &mut Vec<bool>| -> Vec<Edge> {
        let mut path = vec![start];
        let (mut at, mut seg) = (start, first);
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            at = if a == at { b } else { a };
            path.push(at);
            match by_edge[&at].iter().find(|&&s| !used[s]) {
                Some(&next) => seg = next,
                None => break,
            }
        }
        path
    };
    // Open chains start at boundary edges (touched by one segment).
    let ends: Vec<(Edge, usize)> =
        by_edge.iter().filter(|(_, segs)| segs.len() == 1).map(|(&e, segs)| (e, segs[0])).collect();
    for (edge, seg) in ends {
        if !used[seg] {
            let path = walk(edge, seg, &mut used);
            chains.push(Chain { points: path.iter().map(|&e| grid.crossing(e, level)).collect(), closed: false });
        }
    }
    for seg in 0..segments.len() {
        if !used[seg] {
            let mut path = walk(segments[seg].0, seg, &mut used);
            let closed = path.len() > 2 && path.first() == path.last();
            if closed {
                path.pop();
            }
            chains.push(Chain { points: path.iter().map(|&e| grid.crossing(e, level)).collect(), closed });
        }
    }
    chains
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(n: usize, f: impl Fn(f64, f64) -> f64) -> Grid {
        Grid::sample((-1.0, 1.0), (-1.0, 1.0), n, n, f)
    }

    #[test]
    fn lattice_is_inclusive() {
        let g = unit_grid(5, |x, y| x + 10.0 * y);
        assert_eq!(g.x(0), -1.0);
        assert_eq!(g.x(4), 1.0);
        assert_eq!(g.at(4, 0), 1.0 - 10.0);
        assert_eq!(g.value_range(), (-11.0, 11.0));
    }

    #[test]
    fn circle_is_one_closed_chain() {
        let g = unit_grid(40, |x, y| x * x + y * y);
        let chains = marching_squares(&g, 0.5);
        assert_eq!(chains.len(), 1);
        assert!(chains[0].closed);
    }

    #[test]
    fn straight_boundary_is_one_open_chain() {
        let g = unit_grid(11, |x, _| x);
        let chains = marching_squares(&g, 0.05);
        assert_eq!(chains.len(), 1);
        assert!(!chains[0].closed);
        assert_eq!(chains[0].points.len(), 11);
        assert!(chains[0].points.iter().all(|p| (p.0 - 0.05).abs() < 1e-12));
    }

    #[test]
    fn empty_level_set() {
        let g = unit_grid(10, |_, _| 3.0);
        assert!(marching_squares(&g, 4.0).is_empty());
        assert!(marching_squares(&g, 2.0).is_empty());
    }

    #[test]
    fn saddle_is_resolved_by_centre() {
        // Corners 0 and 2 high, 1 and 3 low.
        let mut g = unit_grid(2, |_, _| 0.0);
        g.values = vec![1.0, 0.0, 0.0, 1.0];
        // In grid order: (0,0)=1, (1,0)=0, (0,1)=0, (1,1)=1.
        let high_centre = marching_squares(&g, 0.4);
        assert_eq!(high_centre.len(), 2);
        let low_centre = marching_squares(&g, 0.6);
        assert_eq!(low_centre.len(), 2);
        assert_ne!(high_centre, low_centre);
    }

    #[test]
    fn clamps_non_finite() {
        let g = unit_grid(3, |x, y| if x > 0.5 { f64::INFINITY } else if y > 0.5 { f64::NAN } else { x + y });
        assert_eq!(g.clamped, 5);
        assert!(g.values.iter().all(|v| v.is_finite()));
        assert_eq!(g.value_range(), (-2.0, 0.0));
    }
}
