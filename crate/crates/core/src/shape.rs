//! Leaf footprints and their coverage predicates.
//!
//! A leaf dropped at centre `c` covers the closed set `c + A`, where `A` is the
//! footprint. Besides plain point coverage, the discretization needs two
//! quantified predicates over a whole square of possible centres: whether
//! *some* centre in the square covers a point, and whether *every* centre does.
//!
//! Boundary comparisons use a tolerance of [`COVER_EPS`] and break ties toward
//! coverage.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfettiError;
use crate::geometry::{Point2, Rect};

pub const COVER_EPS: f64 = 1e-12;

/// Coverage behaviour a footprint must provide.
///
/// Implementors must be symmetric under quarter turns and axis reflections and
/// contain a neighbourhood of the origin. Both quantified predicates have to be
/// supplied explicitly; there is no generic fallback.
pub trait Footprint {
    /// Does a leaf centred at `center` cover `q`?
    fn covers(&self, center: Point2, q: Point2) -> bool;

    /// Does some centre inside `cube` (a closed square) cover `q`?
    fn cube_can_cover(&self, cube: &Rect, q: Point2) -> bool;

    /// Does every centre inside `cube` cover `q`?
    fn cube_always_covers(&self, cube: &Rect, q: Point2) -> bool;

    /// Largest distance between two points of the footprint.
    fn diameter(&self) -> f64;

    /// Largest distance from the centre to a point of the footprint.
    fn reach(&self) -> f64;

    fn area(&self) -> f64;

    /// Half-width of the horizontal chord at vertical offset `dy`, or `None`
    /// when the row misses the footprint.
    fn chord_half_width(&self, dy: f64) -> Option<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ConfettiShape {
    /// Closed disk of radius one.
    UnitDisk,
    /// Axis-parallel closed square `[-h, h]²`.
    Square { halfwidth: f64 },
}

impl ConfettiShape {
    pub fn square(halfwidth: f64) -> Result<Self, ConfettiError> {
        if !(halfwidth.is_finite() && halfwidth > 0.0) {
            return Err(ConfettiError::InvalidParams(format!(
                "square halfwidth must be positive, got {halfwidth}"
            )));
        }
        Ok(ConfettiShape::Square { halfwidth })
    }
}

impl Default for ConfettiShape {
    fn default() -> Self {
        ConfettiShape::UnitDisk
    }
}

impl Footprint for ConfettiShape {
    fn covers(&self, center: Point2, q: Point2) -> bool {
        let dx = q.x - center.x;
        let dy = q.y - center.y;
        match *self {
            ConfettiShape::UnitDisk => dx * dx + dy * dy <= 1.0 + COVER_EPS,
            ConfettiShape::Square { halfwidth } => {
                dx.abs() <= halfwidth + COVER_EPS && dy.abs() <= halfwidth + COVER_EPS
            }
        }
    }

    fn cube_can_cover(&self, cube: &Rect, q: Point2) -> bool {
        match *self {
            ConfettiShape::UnitDisk => {
                let (dx, dy) = cube.axis_gaps(q);
                dx * dx + dy * dy <= 1.0 + COVER_EPS
            }
            ConfettiShape::Square { halfwidth } => {
                let (dx, dy) = cube.axis_gaps(q);
                dx <= halfwidth + COVER_EPS && dy <= halfwidth + COVER_EPS
            }
        }
    }

    fn cube_always_covers(&self, cube: &Rect, q: Point2) -> bool {
        // Both footprints are convex, so the farthest corner decides.
        match *self {
            ConfettiShape::UnitDisk => {
                let (dx, dy) = cube.axis_reach(q);
                dx * dx + dy * dy <= 1.0 + COVER_EPS
            }
            ConfettiShape::Square { halfwidth } => {
                let (dx, dy) = cube.axis_reach(q);
                dx <= halfwidth + COVER_EPS && dy <= halfwidth + COVER_EPS
            }
        }
    }

    fn diameter(&self) -> f64 {
        match *self {
            ConfettiShape::UnitDisk => 2.0,
            ConfettiShape::Square { halfwidth } => 2.0 * halfwidth * std::f64::consts::SQRT_2,
        }
    }

    fn reach(&self) -> f64 {
        match *self {
            ConfettiShape::UnitDisk => 1.0,
            ConfettiShape::Square { halfwidth } => halfwidth * std::f64::consts::SQRT_2,
        }
    }

    fn area(&self) -> f64 {
        match *self {
            ConfettiShape::UnitDisk => std::f64::consts::PI,
            ConfettiShape::Square { halfwidth } => 4.0 * halfwidth * halfwidth,
        }
    }

    fn chord_half_width(&self, dy: f64) -> Option<f64> {
        match *self {
            ConfettiShape::UnitDisk => {
                let r2 = 1.0 - dy * dy;
                if r2 < -COVER_EPS {
                    None
                } else {
                    Some(r2.max(0.0).sqrt())
                }
            }
            ConfettiShape::Square { halfwidth } => {
                if dy.abs() <= halfwidth + COVER_EPS {
                    Some(halfwidth)
                } else {
                    None
                }
            }
        }
    }
}

impl fmt::Display for ConfettiShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfettiShape::UnitDisk => write!(f, "disk"),
            ConfettiShape::Square { halfwidth } => write!(f, "square:{halfwidth}"),
        }
    }
}

impl FromStr for ConfettiShape {
    type Err = ConfettiError;

    /// Parses `disk` or `square:<halfwidth>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("disk") {
            return Ok(ConfettiShape::UnitDisk);
        }
        if let Some(rest) = s.strip_prefix("square:") {
            let h: f64 = rest.trim().parse().map_err(|_| {
                ConfettiError::InvalidParams(format!("bad square halfwidth '{rest}'"))
            })?;
            return ConfettiShape::square(h);
        }
        Err(ConfettiError::InvalidParams(format!(
            "unknown shape '{s}' (expected disk or square:<halfwidth>)"
        )))
    }
}

impl TryFrom<String> for ConfettiShape {
    type Error = ConfettiError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<ConfettiShape> for String {
    fn from(value: ConfettiShape) -> Self {
        value.to_string()
    }
}
