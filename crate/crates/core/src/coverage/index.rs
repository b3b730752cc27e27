//! Point-in-union queries for Monte Carlo coverage.
//!
//! A point `p` is covered iff `max_i ⟨p, X_i⟩ ≥ cos r_N`. Caps are bucketed
//! into a uniform Euclidean grid over `[-1, 1]^d`: every point of a cap lies
//! within chord distance `2 sin(r_N / 2)` of its center, so each cap is filed
//! under all cells its bounding box touches and a query only scans the caps
//! filed under the query point's cell. The grid is a pure candidate filter;
//! the membership decision is always the inner-product test.
//!
//! Each cell's candidates are stored in blocks of [`LANES`] centers, one
//! coordinate axis at a time, padded with NaN (which never passes the test).
//! A query then runs one or two fixed-width iterations instead of a loop of
//! unpredictable length.

use std::f64::consts::PI;

use rand::Rng;

use super::CapConfiguration;
use crate::sphere::{dot, fill_uniform_direction};

/// Upper bound on grid cells, per cap.
const CELLS_PER_CAP: usize = 64;
/// Upper bound on (cap, cell) insertions, per cap.
const INSERTIONS_PER_CAP: usize = 512;
/// Centers per candidate block.
const LANES: usize = 4;

#[derive(Debug)]
struct Grid {
    cells_per_axis: usize,
    scale: f64,
    /// Block range of each cell.
    offsets: Vec<u32>,
    /// `LANES × d` values per block, axis-major.
    blocks: Vec<f64>,
}

impl Grid {
    #[inline]
    fn axis_cell(&self, x: f64) -> usize {
        // The float-to-int cast truncates toward zero and saturates negative
        // values and NaN to 0, which is floor on the range that matters.
        (((x + 1.0) * self.scale) as usize).min(self.cells_per_axis - 1)
    }

    #[inline(always)]
    fn cell_of(&self, p: &[f64]) -> usize {
        p.iter()
            .rev()
            .fold(0, |acc, &x| acc * self.cells_per_axis + self.axis_cell(x))
    }

    fn build(config: &CapConfiguration, chord: f64) -> Option<Self> {
        let d = config.params().d();
        let n = config.len();
        let by_size = (2.0 / chord).floor();
        let by_budget = ((CELLS_PER_CAP * n) as f64).powf(1.0 / d as f64).floor();
        let g = by_size.min(by_budget);
        if g.is_nan() || g < 3.0 {
            return None;
        }
        let g = g as usize;
        let mut grid = Grid {
            cells_per_axis: g,
            scale: g as f64 / 2.0,
            offsets: Vec::new(),
            blocks: Vec::new(),
        };

        // Per-cap inclusive cell ranges along each axis.
        let mut ranges = Vec::with_capacity(n * d);
        let mut insertions = 0usize;
        for i in 0..n {
            let mut count = 1usize;
            for &x in config.center(i) {
                let lo = grid.axis_cell(x - chord);
                let hi = grid.axis_cell(x + chord);
                ranges.push((lo, hi));
                count = count.saturating_mul(hi - lo + 1);
            }
            insertions = insertions.saturating_add(count);
            if insertions > INSERTIONS_PER_CAP * n {
                return None;
            }
        }

        let cells = g.pow(d as u32);
        let mut counts = vec![0u32; cells];
        let mut cursor = vec![0usize; d];
        for_each_cell(&ranges, d, g, &mut cursor, |_, cell| counts[cell] += 1);
        let mut offsets = vec![0u32; cells + 1];
        for k in 0..cells {
            offsets[k + 1] = offsets[k] + counts[k].div_ceil(LANES as u32);
        }
        let block_len = LANES * d;
        let mut blocks = vec![f64::NAN; offsets[cells] as usize * block_len];
        counts.iter_mut().for_each(|c| *c = 0);
        for_each_cell(&ranges, d, g, &mut cursor, |cap, cell| {
            let slot = counts[cell] as usize;
            let base = (offsets[cell] as usize + slot / LANES) * block_len + slot % LANES;
            for (axis, &x) in config.center(cap).iter().enumerate() {
                blocks[base + axis * LANES] = x;
            }
            counts[cell] += 1;
        });
        grid.offsets = offsets;
        grid.blocks = blocks;
        Some(grid)
    }
}

/// Calls `visit(cap, cell)` for every cell in every cap's box, caps in order.
fn for_each_cell<F: FnMut(usize, usize)>(
    ranges: &[(usize, usize)],
    d: usize,
    g: usize,
    cursor: &mut [usize],
    mut visit: F,
) {
    for (cap, r) in ranges.chunks_exact(d).enumerate() {
        for (c, &(lo, _)) in cursor.iter_mut().zip(r) {
            *c = lo;
        }
        'odometer: loop {
            let cell = cursor.iter().rev().fold(0, |acc, &c| acc * g + c);
            visit(cap, cell);
            for (axis, c) in cursor.iter_mut().enumerate() {
                if *c < r[axis].1 {
                    *c += 1;
                    continue 'odometer;
                }
                *c = r[axis].0;
            }
            break;
        }
    }
}

/// Membership oracle for the union of a configuration's caps.
#[derive(Debug)]
pub struct CoverageIndex<'a> {
    centers: &'a [f64],
    d: usize,
    cos_radius: f64,
    full: bool,
    grid: Option<Grid>,
}

impl<'a> CoverageIndex<'a> {
    pub fn new(config: &'a CapConfiguration) -> Self {
        let params = config.params();
        let radius = params.radius();
        let full = radius >= PI;
        // Margin absorbs rounding in both the chord and the sampled points.
        let chord = 2.0 * (0.5 * radius).sin() * (1.0 + 1e-9) + 1e-9;
        let grid = if full { None } else { Grid::build(config, chord) };
        Self {
            centers: config.centers_flat(),
            d: params.d(),
            cos_radius: params.cos_radius(),
            full,
            grid,
        }
    }

    /// Same decision without the grid; kept for cross-checks.
    pub fn brute_force(config: &'a CapConfiguration) -> Self {
        let params = config.params();
        Self {
            centers: config.centers_flat(),
            d: params.d(),
            cos_radius: params.cos_radius(),
            full: params.radius() >= PI,
            grid: None,
        }
    }

    pub fn uses_grid(&self) -> bool {
        self.grid.is_some()
    }

    #[inline]
    pub fn is_covered(&self, p: &[f64]) -> bool {
        self.query(p, self.d)
    }

    /// Number of rows of `points` (row-major, `d` columns) that are covered.
    pub fn count_covered(&self, points: &[f64]) -> u64 {
        fn count<const D: usize>(index: &CoverageIndex<'_>, points: &[f64]) -> u64 {
            points.chunks_exact(D).filter(|p| index.query(p, D)).count() as u64
        }
        match self.d {
            2 => count::<2>(self, points),
            3 => count::<3>(self, points),
            4 => count::<4>(self, points),
            5 => count::<5>(self, points),
            6 => count::<6>(self, points),
            7 => count::<7>(self, points),
            8 => count::<8>(self, points),
            d => points.chunks_exact(d).filter(|p| self.query(p, d)).count() as u64,
        }
    }

    /// Covered count among `m` fresh uniform points drawn from `rng`.
    pub(crate) fn count_sampled<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> u64 {
        // Points are drawn and tested in batches, which keeps the sampler and
        // the query in separate tight loops.
        fn count<const D: usize, R: Rng + ?Sized>(index: &CoverageIndex<'_>, m: u64, rng: &mut R) -> u64 {
            const BATCH: usize = 256;
            let mut buf = [[0.0; D]; BATCH];
            let mut hits = 0;
            let mut left = m;
            while left > 0 {
                let k = (left as usize).min(BATCH);
                for p in &mut buf[..k] {
                    fill_uniform_direction(p, rng);
                }
                hits += buf[..k].iter().filter(|p| index.query(*p, D)).count() as u64;
                left -= k as u64;
            }
            hits
        }
        match self.d {
            2 => count::<2, R>(self, m, rng),
            3 => count::<3, R>(self, m, rng),
            4 => count::<4, R>(self, m, rng),
            5 => count::<5, R>(self, m, rng),
            6 => count::<6, R>(self, m, rng),
            7 => count::<7, R>(self, m, rng),
            8 => count::<8, R>(self, m, rng),
            d => {
                let mut p = vec![0.0; d];
                let mut hits = 0;
                for _ in 0..m {
                    fill_uniform_direction(&mut p, rng);
                    hits += self.query(&p, d) as u64;
                }
                hits
            }
        }
    }

    /// Membership test. Always inlined so that callers passing a constant
    /// `d` get a kernel unrolled for that dimension.
    #[inline(always)]
    fn query(&self, p: &[f64], d: usize) -> bool {
        if self.full {
            return true;
        }
        let p = &p[..d];
        match &self.grid {
            Some(grid) => {
                let cell = grid.cell_of(p);
                let block_len = LANES * d;
                let (lo, hi) = (grid.offsets[cell] as usize, grid.offsets[cell + 1] as usize);
                grid.blocks[lo * block_len..hi * block_len]
                    .chunks_exact(block_len)
                    .fold(false, |hit, block| {
                        // Same summation order as `dot`.
                        let mut acc = [0.0; LANES];
                        for (&x, column) in p.iter().zip(block.chunks_exact(LANES)) {
                            for (a, &c) in acc.iter_mut().zip(column) {
                                *a += x * c;
                            }
                        }
                        acc.iter().fold(hit, |hit, &v| hit | (v >= self.cos_radius))
                    })
            }
            None => self.centers.chunks_exact(d).any(|c| dot(p, c) >= self.cos_radius),
        }
    }
}
