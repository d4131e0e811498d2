//! The marked space-time Poisson process and exact point-colour queries.
//!
//! Leaves arrive at times `z ≤ 0`; each carries an independent colour mark
//! `u ∈ [0, 1)`. A leaf is black at parameter `p` iff `u < p`, so a single
//! sample serves every `p` at once and raising `p` only ever turns white
//! leaves black. The colour of a point of the plane is the colour of the
//! highest (latest) leaf covering it.
//!
//! The process is sampled on `(window ⊕ margin) × [−T, 0]` and deepened in
//! independent slabs `[−2T, −T)` on demand.

use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{ConfettiError, Result};
use crate::geometry::{Point2, Rect};
use crate::rng::{derive_seed, rng_from_seed};
use crate::shape::{ConfettiShape, Footprint};

/// Hard cap on depth doublings when probing for coverage.
pub const MAX_DOUBLINGS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Black,
    White,
}

impl Color {
    pub fn flip(self) -> Color {
        match self {
            Color::Black => Color::White,
            Color::White => Color::Black,
        }
    }

    /// Colour of a leaf with mark `u` at parameter `p`.
    #[inline]
    pub fn of_mark(u: f64, p: f64) -> Color {
        if u < p {
            Color::Black
        } else {
            Color::White
        }
    }
}

/// Intensities of the black and white leaf processes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorParams {
    pub lambda_black: f64,
    pub lambda_white: f64,
}

impl ColorParams {
    pub fn new(lambda_black: f64, lambda_white: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(lambda_black) || !ok(lambda_white) || lambda_black + lambda_white <= 0.0 {
            return Err(ConfettiError::InvalidParams(format!(
                "intensities must be non-negative and not both zero (got {lambda_black}, {lambda_white})"
            )));
        }
        Ok(ColorParams {
            lambda_black,
            lambda_white,
        })
    }

    /// Total intensity `lambda` split into black fraction `p`.
    pub fn from_lambda_p(lambda: f64, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ConfettiError::InvalidParams(format!(
                "p must lie in [0, 1], got {p}"
            )));
        }
        ColorParams::new(lambda * p, lambda * (1.0 - p))
    }

    pub fn lambda_total(&self) -> f64 {
        self.lambda_black + self.lambda_white
    }

    pub fn p(&self) -> f64 {
        self.lambda_black / self.lambda_total()
    }
}

/// Linear path `λb(t) = 1 + t(2p − 1)`, `λw(t) = 1 − t(2p − 1)` at total intensity 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationPath {
    pub p_target: f64,
}

impl InterpolationPath {
    pub fn new(p_target: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&p_target) {
            return Err(ConfettiError::InvalidParams(format!(
                "interpolation target must lie in [1/2, 1], got {p_target}"
            )));
        }
        Ok(InterpolationPath { p_target })
    }

    pub fn lambda_black(&self, t: f64) -> f64 {
        1.0 + t * (2.0 * self.p_target - 1.0)
    }

    pub fn lambda_white(&self, t: f64) -> f64 {
        1.0 - t * (2.0 * self.p_target - 1.0)
    }

    pub fn params(&self, t: f64) -> ColorParams {
        ColorParams {
            lambda_black: self.lambda_black(t),
            lambda_white: self.lambda_white(t),
        }
    }

    /// Mark threshold realising the path on a total-intensity-2 sample.
    pub fn threshold(&self, t: f64) -> f64 {
        self.lambda_black(t) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfettiPoint {
    pub x: f64,
    pub y: f64,
    /// Arrival time, `≤ 0`; larger is higher.
    pub z: f64,
    /// Colour mark in `[0, 1)`.
    pub u: f64,
    pub id: u64,
}

impl ConfettiPoint {
    pub fn center(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn color(&self, p: f64) -> Color {
        Color::of_mark(self.u, p)
    }

    /// Strict "higher than" order: larger `z`, ties broken by larger id.
    #[inline]
    pub fn is_above(&self, other: &ConfettiPoint) -> bool {
        self.z > other.z || (self.z == other.z && self.id > other.id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DepthPolicy {
    /// Initial depth chosen so that a point is uncovered with probability `e^{-8}`.
    #[default]
    Auto,
    Fixed(f64),
}

/// Uniform bucket grid over the sampled footprint; buckets list point indices
/// in storage order, which is top-down.
#[derive(Debug, Clone)]
struct SpatialIndex {
    origin: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl SpatialIndex {
    fn new(region: &Rect, cell: f64) -> Self {
        let nx = ((region.width() / cell).ceil() as usize).max(1);
        let ny = ((region.height() / cell).ceil() as usize).max(1);
        SpatialIndex {
            origin: Point2::new(region.x0, region.y0),
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
        }
    }

    fn bucket_coord(&self, v: f64, origin: f64, n: usize) -> usize {
        let i = ((v - origin) / self.cell).floor();
        if i < 0.0 {
            0
        } else {
            (i as usize).min(n - 1)
        }
    }

    fn insert(&mut self, idx: u32, p: &ConfettiPoint) {
        let ix = self.bucket_coord(p.x, self.origin.x, self.nx);
        let iy = self.bucket_coord(p.y, self.origin.y, self.ny);
        self.buckets[iy * self.nx + ix].push(idx);
    }

    fn buckets_near(&self, q: Point2, radius: f64) -> impl Iterator<Item = &Vec<u32>> {
        let ix0 = self.bucket_coord(q.x - radius, self.origin.x, self.nx);
        let ix1 = self.bucket_coord(q.x + radius, self.origin.x, self.nx);
        let iy0 = self.bucket_coord(q.y - radius, self.origin.y, self.ny);
        let iy1 = self.bucket_coord(q.y + radius, self.origin.y, self.ny);
        (iy0..=iy1).flat_map(move |iy| (ix0..=ix1).map(move |ix| &self.buckets[iy * self.nx + ix]))
    }
}

/// A realised sample of the leaf process over a window.
#[derive(Debug, Clone)]
pub struct Configuration {
    points: Vec<ConfettiPoint>,
    window: Rect,
    margin: f64,
    depth: f64,
    initial_depth: f64,
    slabs: u32,
    intensity: f64,
    shape: ConfettiShape,
    seed: u64,
    next_id: u64,
    index: SpatialIndex,
}

/// Samples the leaf process of total intensity `params.lambda_total()` on
/// `(window ⊕ diameter) × [−T, 0]`.
pub fn sample_configuration(
    window: Rect,
    shape: ConfettiShape,
    params: ColorParams,
    seed: u64,
    depth_policy: DepthPolicy,
) -> Result<Configuration> {
    let intensity = params.lambda_total();
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(ConfettiError::InvalidParams(format!(
            "total intensity must be positive, got {intensity}"
        )));
    }
    let depth = match depth_policy {
        DepthPolicy::Auto => 8.0 / (intensity * shape.area()),
        DepthPolicy::Fixed(t) if t > 0.0 && t.is_finite() => t,
        DepthPolicy::Fixed(t) => {
            return Err(ConfettiError::InvalidParams(format!(
                "fixed depth must be positive, got {t}"
            )))
        }
    };
    let mut config = Configuration::empty(window, shape, intensity, seed, depth);
    config.slabs = 0;
    config.depth = 0.0;
    config.push_slab();
    Ok(config)
}

impl Configuration {
    fn empty(window: Rect, shape: ConfettiShape, intensity: f64, seed: u64, depth: f64) -> Self {
        let margin = shape.diameter();
        let region = window.expand(margin);
        Configuration {
            points: Vec::new(),
            window,
            margin,
            depth,
            initial_depth: depth,
            slabs: 1,
            intensity,
            shape,
            seed,
            next_id: 0,
            index: SpatialIndex::new(&region, shape.diameter()),
        }
    }

    /// Builds a configuration from explicit points. Deepening, if needed,
    /// samples fresh leaves of the given `intensity` below `depth`.
    pub fn from_points(
        window: Rect,
        shape: ConfettiShape,
        intensity: f64,
        depth: f64,
        seed: u64,
        points: impl IntoIterator<Item = ConfettiPoint>,
    ) -> Result<Self> {
        if !(depth > 0.0) || !(intensity >= 0.0) {
            return Err(ConfettiError::InvalidParams(
                "depth must be positive and intensity non-negative".into(),
            ));
        }
        let mut config = Configuration::empty(window, shape, intensity, seed, depth);
        let region = config.sample_region();
        let mut pts: Vec<ConfettiPoint> = points.into_iter().collect();
        for pt in &pts {
            if !(pt.z <= 0.0 && pt.z >= -depth) || !(0.0..1.0).contains(&pt.u) {
                return Err(ConfettiError::InvalidParams(format!(
                    "point {pt:?} outside [-{depth}, 0] or mark outside [0, 1)"
                )));
            }
            if !region.contains(pt.center()) {
                return Err(ConfettiError::InvalidParams(format!(
                    "point {pt:?} outside the sampled region"
                )));
            }
        }
        pts.sort_by(|a, b| b.z.total_cmp(&a.z).then(b.id.cmp(&a.id)));
        for w in pts.windows(2) {
            if w[0].id == w[1].id {
                return Err(ConfettiError::InvalidParams("duplicate point ids".into()));
            }
        }
        config.next_id = pts.iter().map(|p| p.id + 1).max().unwrap_or(0);
        config.points = pts;
        config.rebuild_index();
        Ok(config)
    }

    fn rebuild_index(&mut self) {
        self.index = SpatialIndex::new(&self.sample_region(), self.shape.diameter());
        for (i, p) in self.points.iter().enumerate() {
            self.index.insert(i as u32, p);
        }
    }

    /// Appends the next independent slab below the current depth, doubling it.
    /// Returns the index range of the new points.
    pub fn push_slab(&mut self) -> Range<usize> {
        let (top, bottom) = if self.slabs == 0 {
            (0.0, self.initial_depth)
        } else {
            (self.depth, self.depth * 2.0)
        };
        let slab = self.slabs as u64;
        let region = self.sample_region();
        let mut rng = rng_from_seed(derive_seed(self.seed, slab));
        let mean = if self.window.is_degenerate() {
            0.0
        } else {
            self.intensity * region.area() * (bottom - top)
        };
        let count = if mean > 0.0 {
            Poisson::new(mean).map(|d| d.sample(&mut rng) as usize).unwrap_or(0)
        } else {
            0
        };
        let mut fresh: Vec<ConfettiPoint> = (0..count)
            .map(|_| {
                let x = region.x0 + rng.random::<f64>() * region.width();
                let y = region.y0 + rng.random::<f64>() * region.height();
                // z in (-bottom, -top]
                let z = -top - rng.random::<f64>() * (bottom - top);
                let u = rng.random::<f64>();
                ConfettiPoint { x, y, z, u, id: 0 }
            })
            .collect();
        fresh.sort_by(|a, b| b.z.total_cmp(&a.z));
        let start = self.points.len();
        for mut p in fresh {
            p.id = self.next_id;
            self.next_id += 1;
            let idx = self.points.len() as u32;
            self.index.insert(idx, &p);
            self.points.push(p);
        }
        self.depth = bottom;
        self.slabs += 1;
        start..self.points.len()
    }

    /// Deepens until at least `min_depth` has been sampled.
    pub fn deepen_to(&mut self, min_depth: f64) {
        while self.depth < min_depth {
            self.push_slab();
        }
    }

    /// Returns a copy extended by fresh slabs until every probe is covered.
    pub fn deepen_until_covered(&self, probes: &[Point2]) -> Result<Configuration> {
        let mut out = self.clone();
        out.deepen_in_place(probes)?;
        Ok(out)
    }

    pub fn deepen_in_place(&mut self, probes: &[Point2]) -> Result<()> {
        if let Some(q) = probes.iter().find(|q| !self.window.contains(**q)) {
            return Err(ConfettiError::Precondition(format!(
                "probe ({}, {}) lies outside the window",
                q.x, q.y
            )));
        }
        let mut pending: Vec<Point2> = probes
            .iter()
            .copied()
            .filter(|q| self.top_leaf(*q).is_none())
            .collect();
        let mut doublings = 0;
        while !pending.is_empty() {
            if doublings == MAX_DOUBLINGS {
                return Err(ConfettiError::DeepeningExhausted {
                    doublings,
                    depth: self.depth,
                });
            }
            let fresh = self.push_slab();
            doublings += 1;
            let shape = self.shape;
            let new_points = &self.points[fresh];
            pending.retain(|q| !new_points.iter().any(|p| shape.covers(p.center(), *q)));
        }
        Ok(())
    }

    /// Index of the highest leaf covering `q`, if any.
    pub fn top_leaf(&self, q: Point2) -> Option<usize> {
        let mut best: Option<u32> = None;
        for bucket in self.index.buckets_near(q, self.shape.reach()) {
            // buckets are in top-down order, so the first hit is the bucket's top
            if let Some(&i) = bucket
                .iter()
                .find(|&&i| self.shape.covers(self.points[i as usize].center(), q))
            {
                best = match best {
                    Some(b) if self.points[b as usize].is_above(&self.points[i as usize]) => Some(b),
                    _ => Some(i),
                };
            }
        }
        best.map(|i| i as usize)
    }

    /// Colour of `q` at parameter `p`.
    pub fn color_at(&self, q: Point2, p: f64) -> Result<Color> {
        if !self.window.contains(q) {
            return Err(ConfettiError::Precondition(format!(
                "query ({}, {}) lies outside the window",
                q.x, q.y
            )));
        }
        self.top_leaf(q)
            .map(|i| self.points[i].color(p))
            .ok_or(ConfettiError::Uncovered { x: q.x, y: q.y })
    }

    /// Colour view of the same leaves at parameter `p`.
    pub fn recolor_threshold(&self, p: f64) -> ColoringView<'_> {
        ColoringView { config: self, p }
    }

    /// Points sorted top-down (decreasing `z`, ties by decreasing id).
    pub fn points(&self) -> &[ConfettiPoint] {
        &self.points
    }

    pub fn window(&self) -> Rect {
        self.window
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Region in which leaf centres are sampled: the window grown by the margin.
    pub fn sample_region(&self) -> Rect {
        self.window.expand(self.margin)
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn shape(&self) -> ConfettiShape {
        self.shape
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// The configuration's leaves coloured by the threshold coupling at `p`.
#[derive(Debug, Clone, Copy)]
pub struct ColoringView<'a> {
    config: &'a Configuration,
    p: f64,
}

impl<'a> ColoringView<'a> {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn color(&self, index: usize) -> Color {
        self.config.points[index].color(self.p)
    }

    pub fn black(&self) -> impl Iterator<Item = &'a ConfettiPoint> + 'a {
        let p = self.p;
        self.config.points.iter().filter(move |pt| pt.u < p)
    }

    pub fn white(&self) -> impl Iterator<Item = &'a ConfettiPoint> + 'a {
        let p = self.p;
        self.config.points.iter().filter(move |pt| pt.u >= p)
    }

    pub fn black_count(&self) -> usize {
        self.black().count()
    }
}
