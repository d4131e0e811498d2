//! The cube dissection `C_k` and perturbation-robust colours.
//!
//! For `k ≥ 1` the box `[−k, k]² × [−k, 0]` is cut into cubes of side `2^{−k}`;
//! everything else in the half-space is one extra "outside" cell. Two
//! configurations are `k`-perturbations of each other when they hit exactly
//! the same cells with black points and with white points.
//!
//! A point `q` is robustly black when it is black in every `k`-perturbation.
//! That holds iff some black cube whose every position covers `q` lies in a
//! strictly higher z-layer than every white-capable cell that can cover `q`.
//! The outside cell below the box acts as layer `−1`; the outside cell beside
//! the box reaches up to `z = 0`, so points within reach of it are never robust.
//!
//! Crossings of the robust region are a sound under-approximation of the
//! perturbation-stable crossing event: they imply the crossing in the
//! original configuration and in every perturbation.

use std::collections::BTreeMap;

use bitvec::vec::BitVec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::crossing::{has_crossing, ColorGrid, Direction};
use crate::error::{ConfettiError, Result};
use crate::geometry::{Point2, Rect};
use crate::model::{Color, ConfettiPoint, Configuration};
use crate::rng::{derive_seed, rng_from_seed};
use crate::shape::{ConfettiShape, Footprint};

/// Largest `k` accepted by [`occupancy`] unless a different cap is given.
pub const DEFAULT_MAX_K: u32 = 7;

const NO_LAYER: i64 = i64::MIN;
const BELOW_BOX_LAYER: i64 = -1;

/// Number of cubes of side `2^{−k}` in `[−k, k]² × [−k, 0]`: `4 k³ 2^{3k}`.
pub fn cube_count(k: u32) -> u64 {
    let k = k as u64;
    4 * k * k * k * (1u64 << (3 * k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RobustColor {
    RobustBlack,
    RobustWhite,
    Mixed,
}

impl RobustColor {
    pub fn is_robust(self, color: Color) -> bool {
        matches!(
            (self, color),
            (RobustColor::RobustBlack, Color::Black) | (RobustColor::RobustWhite, Color::White)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CubeBits {
    pub has_black: bool,
    pub has_white: bool,
}

#[derive(Debug, Clone, Copy)]
struct OccupiedCube {
    footprint: Rect,
    layer: i64,
    bits: CubeBits,
}

/// Occupancy of the cubes of `C_k` by a configuration coloured at `p`.
///
/// Only occupied cubes are stored. Occupancy is exact inside the region where
/// the source configuration sampled leaf centres; probes whose neighbourhood
/// leaves that region are reported as [`RobustColor::Mixed`].
#[derive(Debug, Clone)]
pub struct CubeGrid {
    k: u32,
    side: f64,
    per_axis: usize,
    layers: usize,
    cubes: BTreeMap<u64, CubeBits>,
    outside: CubeBits,
    known_region: Rect,
    source: SourceInfo,
    buckets: Buckets,
}

#[derive(Debug, Clone, Copy)]
struct SourceInfo {
    window: Rect,
    shape: ConfettiShape,
    intensity: f64,
    p: f64,
    depth: f64,
}

#[derive(Debug, Clone)]
struct Buckets {
    size: f64,
    n: usize,
    origin: f64,
    lists: Vec<Vec<OccupiedCube>>,
}

impl Buckets {
    fn coord(&self, v: f64) -> usize {
        let i = ((v - self.origin) / self.size).floor();
        if i < 0.0 {
            0
        } else {
            (i as usize).min(self.n - 1)
        }
    }
}

impl CubeGrid {
    /// Builds the occupancy of `C_k` from `config` coloured at `p`.
    ///
    /// The outside cell is treated as capable of each colour that has positive
    /// intensity: the unbounded process hits it with both colours almost surely.
    pub fn from_configuration(config: &Configuration, p: f64, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(ConfettiError::InvalidParams("k must be at least 1".into()));
        }
        if k > 20 {
            return Err(ConfettiError::Infeasible(format!("k = {k} overflows cube indexing")));
        }
        if config.depth() < k as f64 {
            return Err(ConfettiError::Precondition(format!(
                "configuration depth {} is below k = {k}",
                config.depth()
            )));
        }
        let side = (-(k as f64)).exp2();
        let per_axis = 2 * k as usize * (1usize << k);
        let layers = k as usize * (1usize << k);
        let mut grid = CubeGrid {
            k,
            side,
            per_axis,
            layers,
            cubes: BTreeMap::new(),
            outside: CubeBits {
                has_black: p > 0.0,
                has_white: p < 1.0,
            },
            known_region: config.sample_region(),
            source: SourceInfo {
                window: config.window(),
                shape: config.shape(),
                intensity: config.intensity(),
                p,
                depth: config.depth(),
            },
            buckets: Buckets {
                size: 0.0,
                n: 0,
                origin: 0.0,
                lists: Vec::new(),
            },
        };
        for pt in config.points() {
            if let Some(idx) = grid.cube_of(pt) {
                let bits = grid.cubes.entry(idx).or_default();
                if pt.u < p {
                    bits.has_black = true;
                } else {
                    bits.has_white = true;
                }
            }
        }
        grid.rebuild_buckets();
        Ok(grid)
    }

    /// Overrides the colours the outside cell is able to host.
    pub fn with_outside(mut self, outside: CubeBits) -> Self {
        self.outside = outside;
        self
    }

    fn rebuild_buckets(&mut self) {
        let k = self.k as f64;
        let size = 0.5;
        let n = ((2.0 * k) / size).ceil() as usize;
        let mut buckets = Buckets {
            size,
            n,
            origin: -k,
            lists: vec![Vec::new(); n * n],
        };
        for (&idx, &bits) in &self.cubes {
            let (ix, iy, iz) = self.unflatten(idx);
            let footprint = self.footprint(ix, iy);
            let c = footprint.center();
            let b = buckets.coord(c.y) * n + buckets.coord(c.x);
            buckets.lists[b].push(OccupiedCube {
                footprint,
                layer: iz as i64,
                bits,
            });
        }
        self.buckets = buckets;
    }

    /// Half-open cube containing the point, or `None` for the outside cell.
    pub fn cube_of(&self, pt: &ConfettiPoint) -> Option<u64> {
        let k = self.k as f64;
        if !(pt.x >= -k && pt.x < k && pt.y >= -k && pt.y < k && pt.z >= -k && pt.z <= 0.0) {
            return None;
        }
        let ix = (((pt.x + k) / self.side) as usize).min(self.per_axis - 1);
        let iy = (((pt.y + k) / self.side) as usize).min(self.per_axis - 1);
        let iz = (((pt.z + k) / self.side) as usize).min(self.layers - 1);
        Some(self.flatten(ix, iy, iz))
    }

    fn flatten(&self, ix: usize, iy: usize, iz: usize) -> u64 {
        ((iz * self.per_axis + iy) * self.per_axis + ix) as u64
    }

    fn unflatten(&self, idx: u64) -> (usize, usize, usize) {
        let idx = idx as usize;
        let ix = idx % self.per_axis;
        let iy = (idx / self.per_axis) % self.per_axis;
        let iz = idx / (self.per_axis * self.per_axis);
        (ix, iy, iz)
    }

    fn footprint(&self, ix: usize, iy: usize) -> Rect {
        let k = self.k as f64;
        Rect::square(-k + ix as f64 * self.side, -k + iy as f64 * self.side, self.side)
    }

    /// Axis-parallel cube `[x0, x0+s) × [y0, y0+s) × [z0, z0+s)` for a flat index.
    pub fn cube_bounds(&self, idx: u64) -> ([f64; 3], f64) {
        let (ix, iy, iz) = self.unflatten(idx);
        let k = self.k as f64;
        (
            [
                -k + ix as f64 * self.side,
                -k + iy as f64 * self.side,
                -k + iz as f64 * self.side,
            ],
            self.side,
        )
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn cube_count(&self) -> u64 {
        (self.per_axis * self.per_axis * self.layers) as u64
    }

    pub fn bits(&self, idx: u64) -> CubeBits {
        self.cubes.get(&idx).copied().unwrap_or_default()
    }

    pub fn occupied(&self) -> impl Iterator<Item = (u64, CubeBits)> + '_ {
        self.cubes.iter().map(|(&i, &b)| (i, b))
    }

    pub fn outside(&self) -> CubeBits {
        self.outside
    }

    /// Box footprint shrunk so that no leaf from beside the box can reach it.
    pub fn safe_region(&self, shape: &ConfettiShape) -> Rect {
        let k = self.k as f64;
        let r = shape.reach();
        Rect::new(-k + r, -k + r, k - r, k - r)
    }

    /// Dense occupancy vector; fails above `max_k`.
    pub fn occupancy_vector(&self, max_k: u32) -> Result<OccupancyVector> {
        if self.k > max_k {
            return Err(ConfettiError::Infeasible(format!(
                "k = {} exceeds the occupancy cap {max_k} ({} bits)",
                self.k,
                2 * cube_count(self.k)
            )));
        }
        let n = self.cube_count() as usize;
        let mut bits = BitVec::repeat(false, 2 * n);
        // "no white point" bits start at one
        bits[n..].fill(true);
        for (&idx, b) in &self.cubes {
            let i = idx as usize;
            if b.has_black {
                bits.set(i, true);
            }
            if b.has_white {
                bits.set(n + i, false);
            }
        }
        Ok(OccupancyVector { k: self.k, bits })
    }
}

/// The flattened Bernoulli vector `X`: `X_i = 1` iff cube `i` holds a black
/// point, and `X_{n+i} = 1` iff cube `i` holds no white point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyVector {
    pub k: u32,
    pub bits: BitVec,
}

impl OccupancyVector {
    pub fn cube_count(&self) -> usize {
        self.bits.len() / 2
    }

    pub fn has_black(&self, cube: usize) -> bool {
        self.bits[cube]
    }

    pub fn has_no_white(&self, cube: usize) -> bool {
        self.bits[self.cube_count() + cube]
    }
}

/// Occupancy variables of `config` coloured at `p` on `C_k`, with the default cap on `k`.
pub fn occupancy(config: &Configuration, p: f64, k: u32) -> Result<OccupancyVector> {
    occupancy_with_cap(config, p, k, DEFAULT_MAX_K)
}

pub fn occupancy_with_cap(config: &Configuration, p: f64, k: u32, max_k: u32) -> Result<OccupancyVector> {
    if k > max_k {
        return Err(ConfettiError::Infeasible(format!(
            "k = {k} exceeds the occupancy cap {max_k}"
        )));
    }
    CubeGrid::from_configuration(config, p, k)?.occupancy_vector(max_k)
}

/// Colour of `q` under every `k`-perturbation, or `Mixed` when it can vary.
pub fn robust_color_at(grid: &CubeGrid, shape: &ConfettiShape, q: Point2) -> RobustColor {
    let reach = shape.reach();
    if !grid.safe_region(shape).contains(q) {
        return RobustColor::Mixed;
    }
    let slack = reach + grid.side * std::f64::consts::SQRT_2;
    if !grid.known_region.expand(-slack).contains(q) {
        return RobustColor::Mixed;
    }
    let mut black_always = NO_LAYER;
    let mut black_can = NO_LAYER;
    let mut white_always = NO_LAYER;
    let mut white_can = NO_LAYER;
    if grid.outside.has_black {
        black_can = BELOW_BOX_LAYER;
    }
    if grid.outside.has_white {
        white_can = BELOW_BOX_LAYER;
    }
    let b = &grid.buckets;
    let reach_b = slack + b.size;
    let (x0, x1) = (b.coord(q.x - reach_b), b.coord(q.x + reach_b));
    let (y0, y1) = (b.coord(q.y - reach_b), b.coord(q.y + reach_b));
    for by in y0..=y1 {
        for bx in x0..=x1 {
            for cube in &b.lists[by * b.n + bx] {
                if !shape.cube_can_cover(&cube.footprint, q) {
                    continue;
                }
                let always = shape.cube_always_covers(&cube.footprint, q);
                if cube.bits.has_black {
                    black_can = black_can.max(cube.layer);
                    if always {
                        black_always = black_always.max(cube.layer);
                    }
                }
                if cube.bits.has_white {
                    white_can = white_can.max(cube.layer);
                    if always {
                        white_always = white_always.max(cube.layer);
                    }
                }
            }
        }
    }
    if black_always != NO_LAYER && black_always > white_can {
        RobustColor::RobustBlack
    } else if white_always != NO_LAYER && white_always > black_can {
        RobustColor::RobustWhite
    } else {
        RobustColor::Mixed
    }
}

/// Robust colours at the cell centres of `rect` sampled at `pitch` (row-major, bottom row first).
pub fn robust_raster(
    grid: &CubeGrid,
    shape: &ConfettiShape,
    rect: Rect,
    pitch: f64,
) -> (usize, usize, Vec<RobustColor>) {
    let ncols = ((rect.width() / pitch).round() as usize).max(1);
    let nrows = ((rect.height() / pitch).round() as usize).max(1);
    let mut out = Vec::with_capacity(ncols * nrows);
    for row in 0..nrows {
        for col in 0..ncols {
            let q = Point2::new(
                rect.x0 + (col as f64 + 0.5) * pitch,
                rect.y0 + (row as f64 + 0.5) * pitch,
            );
            out.push(robust_color_at(grid, shape, q));
        }
    }
    (ncols, nrows, out)
}

/// Colour grid in which a cell has `color` iff it is robustly `color`.
pub fn robust_color_grid(grid: &CubeGrid, shape: &ConfettiShape, rect: Rect, pitch: f64, color: Color) -> ColorGrid {
    let (ncols, nrows, robust) = robust_raster(grid, shape, rect, pitch);
    let cells = robust
        .into_iter()
        .map(|r| if r.is_robust(color) { color } else { color.flip() })
        .collect();
    ColorGrid::new(Point2::new(rect.x0, rect.y0), pitch, ncols, nrows, cells)
        .expect("grid dimensions are consistent")
}

/// Crossing of `rect` by the robust `color` region, sampled at `pitch`.
pub fn robust_crossing(
    grid: &CubeGrid,
    shape: &ConfettiShape,
    rect: Rect,
    direction: Direction,
    color: Color,
    pitch: f64,
) -> Result<bool> {
    if !(pitch > 0.0) {
        return Err(ConfettiError::InvalidParams(format!("pitch must be positive, got {pitch}")));
    }
    let safe = grid.safe_region(shape);
    if !safe.contains_rect(&rect) {
        return Err(ConfettiError::Precondition(format!(
            "rectangle {rect:?} is not inside {safe:?} for k = {}",
            grid.k
        )));
    }
    let g = robust_color_grid(grid, shape, rect, pitch, color);
    Ok(has_crossing(&g, direction, color))
}

/// Zero-truncated Poisson draw by CDF inversion.
fn positive_poisson(rng: &mut impl Rng, mean: f64) -> usize {
    if !(mean > 0.0) {
        return 1;
    }
    let norm = -(-mean).exp_m1();
    let target = rng.random::<f64>() * norm;
    let mut term = (-mean).exp() * mean;
    let mut acc = term;
    let mut k = 1;
    while acc < target && k < 10_000 {
        k += 1;
        term *= mean / k as f64;
        acc += term;
    }
    k
}

/// A random `k`-perturbation of the configuration the grid was built from.
///
/// Each occupied cube receives a zero-truncated Poisson number of points of
/// each colour it holds, uniformly placed; empty cubes stay empty. The outside
/// cell is repopulated with a fresh sample over the source region and depth.
pub fn sample_k_perturbation(grid: &CubeGrid, seed: u64) -> Result<Configuration> {
    let src = grid.source;
    let mut rng = rng_from_seed(derive_seed(seed, 0x5045_5254));
    let volume = grid.side.powi(3);
    let mut points = Vec::new();
    let mut next_id = 0u64;
    let mut push = |points: &mut Vec<ConfettiPoint>, x: f64, y: f64, z: f64, u: f64| {
        points.push(ConfettiPoint { x, y, z, u, id: next_id });
        next_id += 1;
    };
    let region = grid.known_region;
    for (&idx, bits) in &grid.cubes {
        let ([cx, cy, cz], s) = grid.cube_bounds(idx);
        let colors = [
            (bits.has_black, src.p, 0.0, src.p),
            (bits.has_white, 1.0 - src.p, src.p, 1.0),
        ];
        for (present, fraction, u_lo, u_hi) in colors {
            if !present {
                continue;
            }
            let n = positive_poisson(&mut rng, src.intensity * fraction * volume);
            for _ in 0..n {
                let x = cx + rng.random::<f64>() * s;
                let y = cy + rng.random::<f64>() * s;
                let z = (cz + rng.random::<f64>() * s).min(0.0);
                let u = u_lo + rng.random::<f64>() * (u_hi - u_lo);
                // cubes straddling the sampled region keep their points inside it
                let x = x.clamp(region.x0, region.x1);
                let y = y.clamp(region.y0, region.y1);
                push(&mut points, x, y, z, u.min(u_hi - f64::EPSILON).max(u_lo));
            }
        }
    }
    // fresh outside cell
    let k = grid.k as f64;
    let mean = src.intensity * region.area() * src.depth;
    let count = rand_distr::Distribution::sample(
        &rand_distr::Poisson::new(mean.max(1e-300)).map_err(|e| ConfettiError::InvalidParams(e.to_string()))?,
        &mut rng,
    ) as usize;
    for _ in 0..count {
        let x = region.x0 + rng.random::<f64>() * region.width();
        let y = region.y0 + rng.random::<f64>() * region.height();
        let z = -rng.random::<f64>() * src.depth;
        let u: f64 = rng.random();
        let inside = x >= -k && x < k && y >= -k && y < k && z >= -k;
        let allowed = if u < src.p { grid.outside.has_black } else { grid.outside.has_white };
        if !inside && allowed {
            push(&mut points, x, y, z, u);
        }
    }
    Configuration::from_points(
        src.window,
        src.shape,
        src.intensity,
        src.depth,
        derive_seed(seed, 1),
        points,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_configuration, ColorParams, DepthPolicy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const DISK: ConfettiShape = ConfettiShape::UnitDisk;

    fn pt(x: f64, y: f64, z: f64, u: f64, id: u64) -> ConfettiPoint {
        ConfettiPoint { x, y, z, u, id }
    }

    fn sampled(window: Rect, seed: u64, depth: f64) -> Configuration {
        let params = ColorParams::from_lambda_p(2.0, 0.5).unwrap();
        sample_configuration(window, DISK, params, seed, DepthPolicy::Fixed(depth)).unwrap()
    }

    #[test]
    fn cube_count_matches_enumeration() {
        for k in 1..=3u32 {
            let side = (-(k as f64)).exp2();
            let per_axis = ((2.0 * k as f64) / side).round() as u64;
            let layers = (k as f64 / side).round() as u64;
            let mut n = 0u64;
            for _ in 0..layers {
                for _ in 0..per_axis {
                    n += per_axis;
                }
            }
            assert_eq!(cube_count(k), n);
        }
        assert_eq!(cube_count(1), 32);
        assert_eq!(cube_count(6), 4 * 216 * (1 << 18));
    }

    #[test]
    fn empty_configuration_occupancy() {
        let w = Rect::centered(1.0, 1.0);
        let c = Configuration::from_points(w, DISK, 2.0, 2.0, 0, []).unwrap();
        let v = occupancy(&c, 0.5, 1).unwrap();
        let n = v.cube_count();
        assert_eq!(n, 32);
        assert!((0..n).all(|i| !v.has_black(i) && v.has_no_white(i)));
    }

    #[test]
    fn single_black_point_sets_one_bit() {
        let w = Rect::centered(1.0, 1.0);
        let c = Configuration::from_points(w, DISK, 2.0, 2.0, 0, [pt(0.1, 0.1, -0.1, 0.2, 0)]).unwrap();
        let v = occupancy(&c, 0.5, 1).unwrap();
        assert_eq!(v.bits[..32].count_ones(), 1);
        assert_eq!(v.bits[32..].count_ones(), 32);
        // cube [0, 0.5)² × [-0.5, 0): ix = iy = 2, iz = 1, per_axis = 4
        assert!(v.has_black((1 * 4 + 2) * 4 + 2));
    }

    #[test]
    fn occupancy_matches_point_in_cube_scan() {
        for seed in 0..5 {
            let c = sampled(Rect::centered(2.0, 2.0), seed, 2.5);
            for k in 1..=2u32 {
                let v = occupancy(&c, 0.4, k).unwrap();
                let kf = k as f64;
                let side = (-kf).exp2();
                let per_axis = (2.0 * kf / side) as usize;
                let layers = (kf / side) as usize;
                for iz in 0..layers {
                    for iy in 0..per_axis {
                        for ix in 0..per_axis {
                            let (x0, y0, z0) = (-kf + ix as f64 * side, -kf + iy as f64 * side, -kf + iz as f64 * side);
                            let inside = |p: &&ConfettiPoint| {
                                p.x >= x0 && p.x < x0 + side && p.y >= y0 && p.y < y0 + side && p.z >= z0 && p.z < z0 + side
                            };
                            let black = c.points().iter().filter(inside).any(|p| p.u < 0.4);
                            let white = c.points().iter().filter(inside).any(|p| p.u >= 0.4);
                            let i = (iz * per_axis + iy) * per_axis + ix;
                            assert_eq!(v.has_black(i), black);
                            assert_eq!(v.has_no_white(i), !white);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn occupancy_errors() {
        let c = sampled(Rect::centered(1.0, 1.0), 0, 1.0);
        assert!(matches!(occupancy(&c, 0.5, 2), Err(ConfettiError::Precondition(_))));
        assert!(matches!(occupancy(&c, 0.5, 8), Err(ConfettiError::Infeasible(_))));
        assert!(occupancy(&c, 0.5, 0).is_err());
    }

    #[test]
    fn boundary_probes_are_mixed() {
        let c = sampled(Rect::centered(4.0, 4.0), 1, 3.0);
        let g = CubeGrid::from_configuration(&c, 0.5, 2).unwrap();
        assert_eq!(robust_color_at(&g, &DISK, Point2::new(1.5, 0.0)), RobustColor::Mixed);
        assert_eq!(robust_color_at(&g, &DISK, Point2::new(0.0, -1.01)), RobustColor::Mixed);
    }

    #[test]
    fn single_always_covering_black_cube_is_robust() {
        let w = Rect::centered(2.0, 2.0);
        let c = Configuration::from_points(w, DISK, 2.0, 3.0, 0, [pt(0.1, 0.1, -0.2, 0.1, 0)]).unwrap();
        let g = CubeGrid::from_configuration(&c, 0.5, 3).unwrap();
        let q = Point2::new(0.3, 0.2);
        assert_eq!(robust_color_at(&g, &DISK, q), RobustColor::RobustBlack);
        // far from the only leaf the colour depends on the outside cell below
        assert_eq!(robust_color_at(&g, &DISK, Point2::new(1.5, 1.5)), RobustColor::Mixed);
        // every sampled perturbation agrees
        for s in 0..100 {
            let pc = sample_k_perturbation(&g, s).unwrap().deepen_until_covered(&[q]).unwrap();
            assert_eq!(pc.color_at(q, 0.5).unwrap(), Color::Black);
        }
    }

    #[test]
    fn higher_white_cube_defeats_robustness() {
        let w = Rect::centered(2.0, 2.0);
        // white leaf one layer above the black one, able to cover q from its cube
        let pts = [pt(0.1, 0.1, -0.2, 0.1, 0), pt(1.12, 0.1, -0.1, 0.9, 1)];
        let c = Configuration::from_points(w, DISK, 2.0, 3.0, 0, pts).unwrap();
        let g = CubeGrid::from_configuration(&c, 0.5, 3).unwrap();
        let q = Point2::new(0.1, 0.1);
        // in the original configuration the white leaf misses q
        assert_eq!(c.color_at(q, 0.5).unwrap(), Color::Black);
        assert_eq!(robust_color_at(&g, &DISK, q), RobustColor::Mixed);
        // explicit adversary: move the white point inside its cube to cover q
        let (idx, _) = g.occupied().find(|(_, b)| b.has_white).unwrap();
        let ([x0, y0, z0], s) = g.cube_bounds(idx);
        assert!(x0 <= 1.12 && 1.12 < x0 + s);
        let moved = [pt(0.1, 0.1, -0.2, 0.1, 0), pt(x0, y0 + s / 2.0, z0 + s * 0.99, 0.9, 1)];
        let adv = Configuration::from_points(w, DISK, 2.0, 3.0, 0, moved).unwrap();
        assert_eq!(
            CubeGrid::from_configuration(&adv, 0.5, 3).unwrap().occupancy_vector(7).unwrap(),
            g.occupancy_vector(7).unwrap()
        );
        assert_eq!(adv.color_at(q, 0.5).unwrap(), Color::White);
    }

    #[test]
    fn perturbation_preserves_occupancy() {
        for seed in 0..5 {
            let c = sampled(Rect::centered(2.0, 2.0), seed, 3.0);
            let g = CubeGrid::from_configuration(&c, 0.5, 2).unwrap();
            let v = g.occupancy_vector(7).unwrap();
            for s in 0..3 {
                let pc = sample_k_perturbation(&g, s).unwrap();
                let pg = CubeGrid::from_configuration(&pc, 0.5, 2).unwrap();
                assert_eq!(pg.occupancy_vector(7).unwrap(), v);
            }
        }
    }

    #[test]
    fn empty_grid_perturbation_is_empty_in_box() {
        let w = Rect::centered(1.0, 1.0);
        let c = Configuration::from_points(w, DISK, 2.0, 2.0, 0, []).unwrap();
        let g = CubeGrid::from_configuration(&c, 0.5, 2).unwrap();
        let pc = sample_k_perturbation(&g, 3).unwrap();
        assert!(pc.points().iter().all(|p| g.cube_of(p).is_none()));
    }

    #[test]
    fn robust_colours_are_sound_and_refine() {
        let window = Rect::centered(2.0, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for seed in 0..4 {
            let c = sampled(window, seed, 5.0);
            let g3 = CubeGrid::from_configuration(&c, 0.5, 3).unwrap();
            let g4 = CubeGrid::from_configuration(&c, 0.5, 4).unwrap();
            let probes: Vec<Point2> = (0..200)
                .map(|_| Point2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let robust3: Vec<_> = probes.iter().map(|q| robust_color_at(&g3, &DISK, *q)).collect();
            for (q, r) in probes.iter().zip(&robust3) {
                let r4 = robust_color_at(&g4, &DISK, *q);
                match r {
                    RobustColor::RobustBlack => assert_eq!(r4, RobustColor::RobustBlack),
                    RobustColor::RobustWhite => assert_eq!(r4, RobustColor::RobustWhite),
                    RobustColor::Mixed => {}
                }
                let truth = c.color_at(*q, 0.5).unwrap();
                if r.is_robust(Color::Black) {
                    assert_eq!(truth, Color::Black);
                }
                if r.is_robust(Color::White) {
                    assert_eq!(truth, Color::White);
                }
            }
            for s in 0..20 {
                let pc = sample_k_perturbation(&g3, s).unwrap().deepen_until_covered(&probes).unwrap();
                for (q, r) in probes.iter().zip(&robust3) {
                    let col = pc.color_at(*q, 0.5).unwrap();
                    if *r != RobustColor::Mixed {
                        assert!(r.is_robust(col), "probe {q:?} robust {r:?} but {col:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn robust_crossing_rules() {
        let c = sampled(Rect::centered(2.0, 2.0), 0, 4.0);
        let g = CubeGrid::from_configuration(&c, 1.0, 3)
            .unwrap()
            .with_outside(CubeBits { has_black: true, has_white: false });
        // every cube is black and the outside cannot host white: all robustly black
        let r = Rect::centered(2.0, 2.0);
        let h = g.side();
        assert!(robust_crossing(&g, &DISK, r, Direction::Horizontal, Color::Black, h).unwrap());
        assert!(robust_crossing(&g, &DISK, r, Direction::Vertical, Color::Black, h).unwrap());
        assert!(robust_crossing(&g, &DISK, Rect::centered(8.0, 2.0), Direction::Horizontal, Color::Black, h).is_err());

        // a mixed column blocks any horizontal robust crossing
        let (nc, nr, mut cells) = robust_raster(&g, &DISK, r, h);
        for row in 0..nr {
            cells[row * nc + nc / 2] = RobustColor::Mixed;
        }
        let grid = ColorGrid::from_fn(nc, nr, |col, row| {
            if cells[row * nc + col].is_robust(Color::Black) { Color::Black } else { Color::White }
        });
        assert!(!has_crossing(&grid, Direction::Horizontal, Color::Black));
    }

    #[test]
    fn zero_truncated_poisson() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = 1.5;
        let n = 50_000;
        let mean = (0..n).map(|_| positive_poisson(&mut rng, m) as f64).sum::<f64>() / n as f64;
        let expected = m / (1.0 - (-m).exp());
        assert!((mean - expected).abs() < 0.02, "{mean} vs {expected}");
        assert!((0..1000).all(|_| positive_poisson(&mut rng, 1e-9) == 1));
    }
}
