//! Raster colourings and crossing events.
//!
//! Connectivity is fixed as black 8-connected / white 4-connected. With this
//! matching pair, on every rectangular grid exactly one of "black left-right"
//! and "white top-bottom" holds, and exactly one of "black top-bottom" and
//! "white left-right".

use serde::{Deserialize, Serialize};

use crate::error::{ConfettiError, Result};
use crate::geometry::{Point2, Rect};
use crate::model::{Color, Configuration, MAX_DOUBLINGS};
use crate::shape::Footprint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Left side to right side.
    Horizontal,
    /// Bottom side to top side.
    Vertical,
}

/// Raster of top-leaf colour marks; thresholding at `p` yields the colouring at `p`.
#[derive(Debug, Clone)]
pub struct LeafRaster {
    origin: Point2,
    pitch: f64,
    ncols: usize,
    nrows: usize,
    marks: Vec<f64>,
}

fn cell_count(extent: f64, pitch: f64) -> usize {
    ((extent / pitch).round() as usize).max(1)
}

/// Per-row "next unpainted column" forest with path halving.
struct RowSkip {
    stride: usize,
    next: Vec<u32>,
}

impl RowSkip {
    fn new(ncols: usize, nrows: usize) -> Self {
        let stride = ncols + 1;
        let next = (0..nrows)
            .flat_map(|_| (0..stride as u32).collect::<Vec<_>>())
            .collect();
        RowSkip { stride, next }
    }

    #[inline]
    fn find(&mut self, row: usize, mut i: usize) -> usize {
        let base = row * self.stride;
        loop {
            let n = self.next[base + i] as usize;
            if n == i {
                return i;
            }
            let nn = self.next[base + n];
            self.next[base + i] = nn;
            i = nn as usize;
        }
    }

    #[inline]
    fn mark_painted(&mut self, row: usize, i: usize) {
        self.next[row * self.stride + i] = (i + 1) as u32;
    }
}

impl LeafRaster {
    /// Paints the top leaf of every cell centre in `rect`, deepening the
    /// configuration until every centre is covered.
    pub fn paint(config: &mut Configuration, rect: Rect, pitch: f64) -> Result<LeafRaster> {
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(ConfettiError::InvalidParams(format!("pitch must be positive, got {pitch}")));
        }
        if !config.window().contains_rect(&rect) {
            return Err(ConfettiError::Precondition(format!(
                "raster rectangle {rect:?} exceeds the window {:?}",
                config.window()
            )));
        }
        let ncols = cell_count(rect.width(), pitch);
        let nrows = cell_count(rect.height(), pitch);
        let mut raster = LeafRaster {
            origin: Point2::new(rect.x0, rect.y0),
            pitch,
            ncols,
            nrows,
            marks: vec![f64::NAN; ncols * nrows],
        };
        let mut skip = RowSkip::new(ncols, nrows);
        let mut remaining = ncols * nrows;
        let mut range = 0..config.len();
        let mut doublings = 0;
        loop {
            for idx in range {
                if remaining == 0 {
                    break;
                }
                let leaf = config.points()[idx];
                remaining -= raster.paint_leaf(config, &mut skip, leaf.center(), leaf.u);
            }
            if remaining == 0 {
                return Ok(raster);
            }
            if doublings == MAX_DOUBLINGS {
                return Err(ConfettiError::DeepeningExhausted {
                    doublings,
                    depth: config.depth(),
                });
            }
            range = config.push_slab();
            doublings += 1;
        }
    }

    fn paint_leaf(&mut self, config: &Configuration, skip: &mut RowSkip, c: Point2, u: f64) -> usize {
        let shape = config.shape();
        let h = self.pitch;
        let reach = shape.reach();
        let (x0, y0) = (self.origin.x, self.origin.y);
        let j_lo = ((c.y - reach - y0) / h - 0.5).ceil() - 1.0;
        let j_hi = ((c.y + reach - y0) / h - 0.5).floor() + 1.0;
        if j_hi < 0.0 || j_lo > (self.nrows - 1) as f64 {
            return 0;
        }
        let j_lo = j_lo.max(0.0) as usize;
        let j_hi = (j_hi as usize).min(self.nrows - 1);
        let last_col = (self.ncols - 1) as f64;
        let mut painted = 0;
        for j in j_lo..=j_hi {
            let yc = y0 + (j as f64 + 0.5) * h;
            let Some(w) = shape.chord_half_width(yc - c.y) else {
                continue;
            };
            let lo = ((c.x - w - x0) / h - 0.5).ceil() - 1.0;
            let hi = ((c.x + w - x0) / h - 0.5).floor() + 1.0;
            if hi < 0.0 || lo > last_col {
                continue;
            }
            let mut lo = lo.max(0.0) as usize;
            let mut hi = hi.min(last_col) as usize;
            let center = |i: usize| Point2::new(x0 + (i as f64 + 0.5) * h, yc);
            // trim to the exact closed-footprint test; the covered cells form an interval
            while lo <= hi && !shape.covers(c, center(lo)) {
                lo += 1;
            }
            while hi >= lo && !shape.covers(c, center(hi)) {
                if hi == 0 {
                    break;
                }
                hi -= 1;
            }
            if lo > hi || !shape.covers(c, center(hi)) {
                continue;
            }
            let mut i = skip.find(j, lo);
            while i <= hi {
                self.marks[j * self.ncols + i] = u;
                skip.mark_painted(j, i);
                painted += 1;
                i = skip.find(j, i + 1);
            }
        }
        painted
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn mark(&self, col: usize, row: usize) -> f64 {
        self.marks[row * self.ncols + col]
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point2 {
        Point2::new(
            self.origin.x + (col as f64 + 0.5) * self.pitch,
            self.origin.y + (row as f64 + 0.5) * self.pitch,
        )
    }

    /// Colouring at parameter `p`.
    pub fn threshold(&self, p: f64) -> ColorGrid {
        ColorGrid {
            origin: self.origin,
            pitch: self.pitch,
            ncols: self.ncols,
            nrows: self.nrows,
            cells: self.marks.iter().map(|&u| Color::of_mark(u, p)).collect(),
        }
    }

    /// Smallest mark threshold above which the black horizontal crossing holds:
    /// the minimax mark over black-8 paths. Returned as the bottleneck mark `m`;
    /// the crossing holds at `p` iff `m < p`.
    pub fn bottleneck(&self, direction: Direction) -> f64 {
        bottleneck_mark(&self.marks, self.ncols, self.nrows, direction)
    }
}

fn bottleneck_mark(marks: &[f64], ncols: usize, nrows: usize, direction: Direction) -> f64 {
    // Kruskal-style: add cells in increasing mark order until source and sink join.
    let n = ncols * nrows;
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| marks[a as usize].total_cmp(&marks[b as usize]));
    let source = n;
    let sink = n + 1;
    let mut uf = UnionFind::new(n + 2);
    let mut open = vec![false; n];
    for &c in &order {
        let c = c as usize;
        open[c] = true;
        let (col, row) = (c % ncols, c / ncols);
        let (on_source, on_sink) = match direction {
            Direction::Horizontal => (col == 0, col == ncols - 1),
            Direction::Vertical => (row == 0, row == nrows - 1),
        };
        if on_source {
            uf.union(c, source);
        }
        if on_sink {
            uf.union(c, sink);
        }
        for (dc, dr) in NEIGHBORS_8 {
            let nc = col as isize + dc;
            let nr = row as isize + dr;
            if nc < 0 || nr < 0 || nc >= ncols as isize || nr >= nrows as isize {
                continue;
            }
            let nb = nr as usize * ncols + nc as usize;
            if open[nb] {
                uf.union(c, nb);
            }
        }
        if uf.find(source) == uf.find(sink) {
            return marks[c];
        }
    }
    f64::INFINITY
}

struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let gp = self.parent[self.parent[x] as usize];
            self.parent[x] = gp;
            x = gp as usize;
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb as u32,
            std::cmp::Ordering::Greater => self.parent[rb] = ra as u32,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra as u32;
                self.rank[ra] += 1;
            }
        }
    }
}

const NEIGHBORS_4: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const NEIGHBORS_8: [(isize, isize); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// A finite colouring of a rectangle sampled at cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorGrid {
    origin: Point2,
    pitch: f64,
    ncols: usize,
    nrows: usize,
    cells: Vec<Color>,
}

impl ColorGrid {
    /// Builds a grid from row-major cells (row 0 at the bottom).
    pub fn new(origin: Point2, pitch: f64, ncols: usize, nrows: usize, cells: Vec<Color>) -> Result<Self> {
        if !(pitch > 0.0) || ncols == 0 || nrows == 0 || cells.len() != ncols * nrows {
            return Err(ConfettiError::InvalidParams(format!(
                "grid needs positive pitch and {ncols}x{nrows} cells, got {}",
                cells.len()
            )));
        }
        Ok(ColorGrid {
            origin,
            pitch,
            ncols,
            nrows,
            cells,
        })
    }

    pub fn from_fn(ncols: usize, nrows: usize, mut f: impl FnMut(usize, usize) -> Color) -> Self {
        let mut cells = Vec::with_capacity(ncols * nrows);
        for row in 0..nrows {
            for col in 0..ncols {
                cells.push(f(col, row));
            }
        }
        ColorGrid {
            origin: Point2::new(0.0, 0.0),
            pitch: 1.0,
            ncols,
            nrows,
            cells,
        }
    }

    /// Parses rows of `#` (black) and `.` (white), top row first.
    pub fn from_ascii(rows: &[&str]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        ColorGrid::from_fn(ncols, nrows, |c, r| {
            if rows[nrows - 1 - r].as_bytes()[c] == b'#' {
                Color::Black
            } else {
                Color::White
            }
        })
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn get(&self, col: usize, row: usize) -> Color {
        self.cells[row * self.ncols + col]
    }

    pub fn cells(&self) -> &[Color] {
        &self.cells
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point2 {
        Point2::new(
            self.origin.x + (col as f64 + 0.5) * self.pitch,
            self.origin.y + (row as f64 + 0.5) * self.pitch,
        )
    }

    /// Colour swap composed with a reflection across the diagonal: maps
    /// black horizontal crossings to white vertical ones of the swapped grid.
    pub fn transpose(&self) -> ColorGrid {
        let mut g = ColorGrid::from_fn(self.nrows, self.ncols, |c, r| self.get(r, c));
        g.origin = Point2::new(self.origin.y, self.origin.x);
        g.pitch = self.pitch;
        g
    }

    pub fn invert(&self) -> ColorGrid {
        let mut g = self.clone();
        for c in &mut g.cells {
            *c = c.flip();
        }
        g
    }
}

/// Rasterizes the colouring at `p` over `rect` at cell centres.
pub fn rasterize(config: &Configuration, p: f64, rect: Rect, pitch: f64) -> Result<ColorGrid> {
    let mut config = config.clone();
    Ok(LeafRaster::paint(&mut config, rect, pitch)?.threshold(p))
}

/// Is there a path of `color` cells from the source side to the opposite side?
pub fn has_crossing(grid: &ColorGrid, direction: Direction, color: Color) -> bool {
    let (ncols, nrows) = (grid.ncols, grid.nrows);
    let neighbors: &[(isize, isize)] = match color {
        Color::Black => &NEIGHBORS_8,
        Color::White => &NEIGHBORS_4,
    };
    let mut seen = vec![false; ncols * nrows];
    let mut stack = Vec::new();
    let sources: Box<dyn Iterator<Item = (usize, usize)>> = match direction {
        Direction::Horizontal => Box::new((0..nrows).map(|r| (0, r))),
        Direction::Vertical => Box::new((0..ncols).map(|c| (c, 0))),
    };
    for (c, r) in sources {
        let i = r * ncols + c;
        if grid.cells[i] == color && !seen[i] {
            seen[i] = true;
            stack.push(i);
        }
    }
    while let Some(i) = stack.pop() {
        let (col, row) = (i % ncols, i / ncols);
        let reached = match direction {
            Direction::Horizontal => col == ncols - 1,
            Direction::Vertical => row == nrows - 1,
        };
        if reached {
            return true;
        }
        for &(dc, dr) in neighbors {
            let nc = col as isize + dc;
            let nr = row as isize + dr;
            if nc < 0 || nr < 0 || nc >= ncols as isize || nr >= nrows as isize {
                continue;
            }
            let j = nr as usize * ncols + nc as usize;
            if !seen[j] && grid.cells[j] == color {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingResult {
    pub black_horizontal: bool,
    pub black_vertical: bool,
    pub white_horizontal: bool,
    pub white_vertical: bool,
}

impl CrossingResult {
    pub fn duality_holds(&self) -> bool {
        (self.black_horizontal ^ self.white_vertical) && (self.black_vertical ^ self.white_horizontal)
    }

    pub fn check_duality(&self) -> Result<()> {
        if self.duality_holds() {
            Ok(())
        } else {
            Err(ConfettiError::DualityViolation(format!("{self:?}")))
        }
    }
}

/// All four crossings of `grid`.
pub fn crossing_result(grid: &ColorGrid) -> CrossingResult {
    let result = CrossingResult {
        black_horizontal: has_crossing(grid, Direction::Horizontal, Color::Black),
        black_vertical: has_crossing(grid, Direction::Vertical, Color::Black),
        white_horizontal: has_crossing(grid, Direction::Horizontal, Color::White),
        white_vertical: has_crossing(grid, Direction::Vertical, Color::White),
    };
    debug_assert!(result.duality_holds(), "pixel duality violated: {result:?}");
    result
}

/// The four rectangles of the annulus event around `q` at scale `r`:
/// left, right, top, bottom.
pub fn annulus_rects(q: Point2, r: f64) -> [Rect; 4] {
    let (a, b) = (r / 2.0, 3.0 * r / 2.0);
    [
        Rect::new(q.x - b, q.y - b, q.x - a, q.y + b),
        Rect::new(q.x + a, q.y - b, q.x + b, q.y + b),
        Rect::new(q.x - b, q.y + a, q.x + b, q.y + b),
        Rect::new(q.x - b, q.y - b, q.x + b, q.y - a),
    ]
}

/// Black vertical crossings of the left and right rectangles and black
/// horizontal crossings of the top and bottom ones, each rasterized separately.
pub fn annulus_event(config: &Configuration, p: f64, q: Point2, r: f64, pitch: f64) -> Result<bool> {
    let rects = annulus_rects(q, r);
    let window = config.window();
    if let Some(rect) = rects.iter().find(|rect| !window.contains_rect(rect)) {
        return Err(ConfettiError::Precondition(format!(
            "annulus rectangle {rect:?} exits the window {window:?}"
        )));
    }
    let mut config = config.clone();
    let directions = [
        Direction::Vertical,
        Direction::Vertical,
        Direction::Horizontal,
        Direction::Horizontal,
    ];
    for (rect, dir) in rects.into_iter().zip(directions) {
        let grid = LeafRaster::paint(&mut config, rect, pitch)?.threshold(p);
        if !has_crossing(&grid, dir, Color::Black) {
            return Ok(false);
        }
    }
    Ok(true)
}
