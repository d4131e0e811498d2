//! Plane points and axis-parallel rectangles shared by every module.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    /// Rotation by a quarter turn about the origin.
    pub fn rotate_quarter(self) -> Self {
        Point2::new(-self.y, self.x)
    }

    pub fn offset(self, dx: f64, dy: f64) -> Self {
        Point2::new(self.x + dx, self.y + dy)
    }
}

/// Closed axis-parallel rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect {
            x0: x0.min(x1),
            y0: y0.min(y1),
            x1: x0.max(x1),
            y1: y0.max(y1),
        }
    }

    pub fn from_size(width: f64, height: f64) -> Self {
        Rect::new(0.0, 0.0, width, height)
    }

    /// Rectangle of the given size centred on the origin.
    pub fn centered(width: f64, height: f64) -> Self {
        Rect::new(-width / 2.0, -height / 2.0, width / 2.0, height / 2.0)
    }

    pub fn square(x0: f64, y0: f64, side: f64) -> Self {
        Rect::new(x0, y0, x0 + side, y0 + side)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.width() > 0.0 && self.height() > 0.0)
    }

    pub fn center(&self) -> Point2 {
        Point2::new((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    pub fn expand(&self, by: f64) -> Rect {
        Rect::new(self.x0 - by, self.y0 - by, self.x1 + by, self.y1 + by)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Rect {
        Rect::new(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)
    }

    pub fn contains(&self, q: Point2) -> bool {
        q.x >= self.x0 && q.x <= self.x1 && q.y >= self.y0 && q.y <= self.y1
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 && other.x1 <= self.x1 && other.y0 >= self.y0 && other.y1 <= self.y1
    }

    /// Euclidean distance from `q` to the nearest point of the rectangle (0 inside).
    pub fn distance_to(&self, q: Point2) -> f64 {
        let (dx, dy) = self.axis_gaps(q);
        dx.hypot(dy)
    }

    /// Per-axis gap between `q` and the rectangle, zero along an axis where `q` is inside the span.
    pub fn axis_gaps(&self, q: Point2) -> (f64, f64) {
        let dx = (self.x0 - q.x).max(q.x - self.x1).max(0.0);
        let dy = (self.y0 - q.y).max(q.y - self.y1).max(0.0);
        (dx, dy)
    }

    /// Per-axis distance from `q` to the farthest edge of the rectangle.
    pub fn axis_reach(&self, q: Point2) -> (f64, f64) {
        let dx = (q.x - self.x0).abs().max((q.x - self.x1).abs());
        let dy = (q.y - self.y0).abs().max((q.y - self.y1).abs());
        (dx, dy)
    }

    /// Distance from `q` to the farthest corner.
    pub fn farthest_corner_distance(&self, q: Point2) -> f64 {
        let (dx, dy) = self.axis_reach(q);
        dx.hypot(dy)
    }

    pub fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.x0, self.y0),
            Point2::new(self.x1, self.y0),
            Point2::new(self.x1, self.y1),
            Point2::new(self.x0, self.y1),
        ]
    }
}
