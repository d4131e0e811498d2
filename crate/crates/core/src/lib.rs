//! Monte Carlo laboratory for confetti percolation: the two-colour dead-leaves
//! model, its cube discretization, raster crossing events, and an exact
//! small-`n` toolkit for influences and boosters of monotone boolean functions.

pub mod crossing;
pub mod discretize;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod model;
pub mod rng;
pub mod shape;
pub mod threshold;

pub use crossing::{
    annulus_event, crossing_result, has_crossing, rasterize, ColorGrid, CrossingResult, Direction,
    LeafRaster,
};
pub use discretize::{
    occupancy, robust_color_at, robust_crossing, sample_k_perturbation, CubeGrid, OccupancyVector,
    RobustColor,
};
pub use error::{ConfettiError, Result};
pub use geometry::{Point2, Rect};
pub use model::{
    sample_configuration, Color, ColorParams, ConfettiPoint, Configuration, DepthPolicy,
    InterpolationPath,
};
pub use shape::{ConfettiShape, Footprint};
