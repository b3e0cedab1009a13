//! Planar point patterns on a rectangular window.
//!
//! Provides homogeneous Poisson sampling, plain and toroidal distances, and a
//! uniform-grid index for fixed-radius neighbourhood queries.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Finite window, Euclidean distance.
    #[default]
    Plain,
    /// Opposite edges identified; distances use the nearest periodic image.
    Torus,
}

impl BoundaryMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryMode::Plain => "plain",
            BoundaryMode::Torus => "torus",
        }
    }
}

impl std::str::FromStr for BoundaryMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "plain" => Ok(BoundaryMode::Plain),
            "torus" => Ok(BoundaryMode::Torus),
            other => Err(format!("unknown boundary mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Axis-aligned observation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    mode: BoundaryMode,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, mode: BoundaryMode) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::invalid(
                "window",
                format!("need x_max > x_min, got [{x_min}, {x_max}]"),
            ));
        }
        if !(y_min.is_finite() && y_max.is_finite() && y_max > y_min) {
            return Err(Error::invalid(
                "window",
                format!("need y_max > y_min, got [{y_min}, {y_max}]"),
            ));
        }
        Ok(Window {
            x_min,
            x_max,
            y_min,
            y_max,
            mode,
        })
    }

    /// The square `[-half, half]²`.
    pub fn centered_square(half: f64, mode: BoundaryMode) -> Result<Self> {
        Self::new(-half, half, -half, half, mode)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }
    pub fn mode(&self) -> BoundaryMode {
        self.mode
    }
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }
    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn with_mode(self, mode: BoundaryMode) -> Self {
        Window { mode, ..self }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Distance between two points under the window's boundary mode.
    pub fn distance(&self, a: Point, b: Point) -> f64 {
        self.distance_sq(a, b).sqrt()
    }

    pub fn distance_sq(&self, a: Point, b: Point) -> f64 {
        let mut dx = (a.x - b.x).abs();
        let mut dy = (a.y - b.y).abs();
        if self.mode == BoundaryMode::Torus {
            dx = dx.min(self.width() - dx);
            dy = dy.min(self.height() - dy);
        }
        dx * dx + dy * dy
    }

    fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::new(
            rng.random_range(self.x_min..self.x_max),
            rng.random_range(self.y_min..self.y_max),
        )
    }
}

/// Indexed points inside a window. Index `i` refers to `points()[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    window: Window,
    points: Vec<Point>,
}

impl PointSet {
    /// Fails if any point lies outside the window.
    pub fn new(window: Window, points: Vec<Point>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !window.contains(**p)) {
            return Err(Error::invalid(
                "points",
                format!("({}, {}) lies outside the window", p.x, p.y),
            ));
        }
        Ok(PointSet { window, points })
    }

    pub fn empty(window: Window) -> Self {
        PointSet {
            window,
            points: Vec::new(),
        }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }
    pub fn points(&self) -> &[Point] {
        &self.points
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn get(&self, i: usize) -> Point {
        self.points[i]
    }
}

/// Homogeneous Poisson point process of the given intensity on `window`.
pub fn sample_ppp<R: Rng + ?Sized>(intensity: f64, window: Window, rng: &mut R) -> Result<PointSet> {
    if !(intensity >= 0.0 && intensity.is_finite()) {
        return Err(Error::invalid(
            "intensity",
            format!("must be finite and >= 0, got {intensity}"),
        ));
    }
    let mean = intensity * window.area();
    if mean == 0.0 {
        return Ok(PointSet::empty(window));
    }
    let count = Poisson::new(mean)
        .map_err(|e| Error::invalid("intensity", e.to_string()))?
        .sample(rng) as usize;
    let points = (0..count).map(|_| window.sample_uniform(rng)).collect();
    Ok(PointSet { window, points })
}

/// Uniform bucket grid over a [`PointSet`] for ball queries.
///
/// Queries with any radius are exact; the build radius only sets the bucket
/// size, which is `max(radius, side / 64)` per axis.
#[derive(Debug, Clone)]
pub struct NeighborIndex<'a> {
    set: &'a PointSet,
    nx: usize,
    ny: usize,
    cell_w: f64,
    cell_h: f64,
    /// Point indices grouped by cell, cell `c` owns `items[starts[c]..starts[c + 1]]`.
    starts: Vec<usize>,
    items: Vec<usize>,
}

const GRID_RESOLUTION: f64 = 64.0;

impl<'a> NeighborIndex<'a> {
    pub fn new(set: &'a PointSet, radius: f64) -> Self {
        let w = set.window();
        let radius = if radius.is_finite() { radius.max(0.0) } else { f64::MAX };
        let cells = |side: f64| -> usize {
            let size = radius.max(side / GRID_RESOLUTION);
            ((side / size).floor() as usize).max(1)
        };
        let nx = cells(w.width());
        let ny = cells(w.height());
        let cell_w = w.width() / nx as f64;
        let cell_h = w.height() / ny as f64;

        let mut index = NeighborIndex {
            set,
            nx,
            ny,
            cell_w,
            cell_h,
            starts: vec![0; nx * ny + 1],
            items: vec![0; set.len()],
        };
        // counting sort into buckets
        let cell_of: Vec<usize> = set.points().iter().map(|&p| index.cell_of(p)).collect();
        for &c in &cell_of {
            index.starts[c + 1] += 1;
        }
        for c in 0..nx * ny {
            index.starts[c + 1] += index.starts[c];
        }
        let mut fill = index.starts.clone();
        for (i, &c) in cell_of.iter().enumerate() {
            index.items[fill[c]] = i;
            fill[c] += 1;
        }
        index
    }

    pub fn point_set(&self) -> &'a PointSet {
        self.set
    }

    fn cell_coords(&self, p: Point) -> (usize, usize) {
        let w = self.set.window();
        let cx = ((p.x - w.x_min()) / self.cell_w).floor();
        let cy = ((p.y - w.y_min()) / self.cell_h).floor();
        let clamp = |v: f64, n: usize| (v.max(0.0) as usize).min(n - 1);
        (clamp(cx, self.nx), clamp(cy, self.ny))
    }

    fn cell_of(&self, p: Point) -> usize {
        let (cx, cy) = self.cell_coords(p);
        cy * self.nx + cx
    }

    fn axis_cells(&self, center: usize, reach: usize, n: usize, torus: bool) -> Vec<usize> {
        if torus {
            if 2 * reach + 1 >= n {
                return (0..n).collect();
            }
            (0..=2 * reach).map(|k| (center + n + k - reach) % n).collect()
        } else {
            let lo = center.saturating_sub(reach);
            let hi = (center + reach).min(n - 1);
            (lo..=hi).collect()
        }
    }

    /// Calls `f(index, distance)` for every point within `radius` of `center`.
    pub fn for_each_within(&self, center: Point, radius: f64, mut f: impl FnMut(usize, f64)) {
        if !(radius >= 0.0) || self.set.is_empty() {
            return;
        }
        let window = self.set.window();
        let torus = window.mode() == BoundaryMode::Torus;
        let (cx, cy) = self.cell_coords(center);
        let reach = |cell: f64, n: usize| -> usize {
            let k = (radius / cell).ceil();
            if k >= n as f64 {
                n
            } else {
                k as usize
            }
        };
        let xs = self.axis_cells(cx, reach(self.cell_w, self.nx), self.nx, torus);
        let ys = self.axis_cells(cy, reach(self.cell_h, self.ny), self.ny, torus);
        for &gy in &ys {
            for &gx in &xs {
                let c = gy * self.nx + gx;
                for &i in &self.items[self.starts[c]..self.starts[c + 1]] {
                    let d = window.distance(center, self.set.get(i));
                    if d <= radius {
                        f(i, d);
                    }
                }
            }
        }
    }

    /// Indices within `radius` of an arbitrary location, in ascending order.
    pub fn ball(&self, center: Point, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(center, radius, |i, _| out.push(i));
        out.sort_unstable();
        out
    }

    /// Indices within `radius` of member point `i`, excluding `i` itself.
    pub fn neighbors(&self, i: usize, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(self.set.get(i), radius, |j, _| {
            if j != i {
                out.push(j)
            }
        });
        out.sort_unstable();
        out
    }
}

/// Ball query over a point set, excluding `exclude` when it is a member index.
pub fn ball_query(index: &NeighborIndex<'_>, center: Point, radius: f64, exclude: Option<usize>) -> Vec<usize> {
    let mut out = index.ball(center, radius);
    if let Some(e) = exclude {
        out.retain(|&i| i != e);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn square(mode: BoundaryMode) -> Window {
        Window::centered_square(5.0, mode).unwrap()
    }

    #[test]
    fn rejects_degenerate_window() {
        assert!(Window::new(1.0, 1.0, 0.0, 1.0, BoundaryMode::Plain).is_err());
        assert!(Window::new(0.0, 1.0, 2.0, 1.0, BoundaryMode::Plain).is_err());
    }

    #[test]
    fn zero_intensity_is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_ppp(0.0, square(BoundaryMode::Plain), &mut rng)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn negative_intensity_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_ppp(-1.0, square(BoundaryMode::Plain), &mut rng).is_err());
    }

    #[test]
    fn plain_and_torus_distances() {
        let plain = square(BoundaryMode::Plain);
        let torus = square(BoundaryMode::Torus);
        let a = Point::new(0.0, 0.0);
        assert_eq!(plain.distance(a, a), 0.0);
        assert_eq!(plain.distance(a, Point::new(3.0, 4.0)), 5.0);
        let d = torus.distance(Point::new(-4.5, 0.0), Point::new(4.5, 0.0));
        assert!((d - 1.0).abs() < 1e-12);
        assert!((plain.distance(Point::new(-4.5, 0.0), Point::new(4.5, 0.0)) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_ball() {
        let w = square(BoundaryMode::Plain);
        let set = PointSet::new(
            w,
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)],
        )
        .unwrap();
        let idx = NeighborIndex::new(&set, 1.5);
        assert_eq!(idx.neighbors(0, 1.5), vec![1]);
        assert_eq!(ball_query(&idx, set.get(0), 1.5, Some(0)), vec![1]);
        assert!(idx.neighbors(0, 0.0).is_empty());
    }

    #[test]
    fn point_outside_window_rejected() {
        let w = square(BoundaryMode::Plain);
        assert!(PointSet::new(w, vec![Point::new(6.0, 0.0)]).is_err());
    }

    #[test]
    fn large_radius_on_small_torus_visits_each_cell_once() {
        let w = Window::new(0.0, 1.0, 0.0, 1.0, BoundaryMode::Torus).unwrap();
        let set = PointSet::new(w, vec![Point::new(0.1, 0.1), Point::new(0.9, 0.9)]).unwrap();
        let idx = NeighborIndex::new(&set, 0.01);
        assert_eq!(idx.ball(Point::new(0.5, 0.5), 10.0), vec![0, 1]);
    }
}
