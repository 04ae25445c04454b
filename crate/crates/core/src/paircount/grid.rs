//! Dense uniform cell grid over the bounding box of a point set.
//!
//! Points are stored in cell order (row-major, last axis fastest), so a run of
//! consecutive cells along the last axis is one contiguous slice of
//! coordinates. Cells along the last axis are `SPLIT` times thinner than along
//! the others: that axis only costs index lookups, and thin cells there trim
//! the ends of each run.
//!
//! A band query visits, for each point, only the cell runs that can meet the
//! Euclidean shell `r_in <= |x| <= r_out` enclosing the gauge band; the shell
//! comes from the body's equivalence constants and is padded so that no cell
//! holding a band partner is ever skipped. Gauges of `x - y` and `y - x` agree
//! bit for bit, so each unordered pair is examined once, from its
//! earlier point in cell order.

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::geometry::NormBody;
use crate::pointsets::PointSet;

use super::Band;

/// Relative and absolute padding on the Euclidean shell, far above the
/// rounding error of any distance or cell-boundary computation.
const PAD: f64 = 1e-9;

/// Last-axis cells per cell side.
const SPLIT: f64 = 4.0;

#[derive(Clone, Debug)]
pub struct CellGrid {
    dim: usize,
    /// Cell side per axis, and its reciprocal.
    sides: Vec<f64>,
    inv_sides: Vec<f64>,
    origin: Vec<f64>,
    shape: Vec<usize>,
    strides: Vec<usize>,
    /// `starts[c]..starts[c + 1]` indexes the points of cell `c`.
    starts: Vec<usize>,
    /// Point coordinates permuted into cell order.
    coords: Vec<f64>,
    /// Largest coordinate magnitude, for absolute padding.
    scale: f64,
}

/// `floor` without a libm call on baseline x86-64. Saturates far outside the
/// grid, which every caller clamps anyway.
#[inline]
fn floor_i64(v: f64) -> i64 {
    let t = v as i64;
    if (t as f64) > v {
        t - 1
    } else {
        t
    }
}

impl CellGrid {
    /// Grid with cell side `4 max(1, separation)`: a well-distributed set then
    /// has O(1) points per cell. Wider slabs mean fewer runs per point at the
    /// price of more rejected candidates; 4 balances the two on thin bands.
    pub fn for_set(set: &PointSet) -> Result<Self> {
        let side = set.separation().map_or(1.0, |c| c.max(1.0));
        CellGrid::build(set, 4.0 * side)
    }

    /// Build with the requested cell side (the last axis is split further).
    /// The side is doubled until the grid has at most `max(4n, 4096)` cells,
    /// so sparse or spread-out inputs stay bounded in memory.
    pub fn build(set: &PointSet, cell: f64) -> Result<Self> {
        if !(cell.is_finite() && cell > 0.0) {
            return Err(Error::input(format!("cell side must be positive, got {cell}")));
        }
        let d = set.dim();
        let n = set.len();
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        if n > 0 {
            lo.fill(f64::INFINITY);
            hi.fill(f64::NEG_INFINITY);
            for p in set.points() {
                for a in 0..d {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
        }
        let max_cells = (4 * n).max(4096) as f64;
        let mut cell = cell;
        let (sides, shape) = loop {
            let sides: Vec<f64> = (0..d).map(|a| if a + 1 == d { cell / SPLIT } else { cell }).collect();
            let shape: Vec<f64> = (0..d).map(|a| ((hi[a] - lo[a]) / sides[a]).floor() + 1.0).collect();
            if shape.iter().product::<f64>() <= max_cells {
                break (sides, shape.into_iter().map(|s| s as usize).collect::<Vec<_>>());
            }
            cell *= 2.0;
        };
        let mut strides = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * shape[a + 1];
        }
        let ncells: usize = shape.iter().product();
        let inv_sides = sides.iter().map(|s| 1.0 / s).collect();
        let mut grid = CellGrid { dim: d, sides, inv_sides, origin: lo, shape, strides, starts: vec![0; ncells + 1], coords: vec![], scale: 0.0 };

        let ids: Vec<usize> =
            set.points().map(|p| (0..d).map(|a| grid.axis_cell(p[a], a) * grid.strides[a]).sum()).collect();
        for &c in &ids {
            grid.starts[c + 1] += 1;
        }
        for c in 0..ncells {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        let mut coords = vec![0.0; n * d];
        for (p, &c) in set.points().zip(&ids) {
            let slot = fill[c];
            fill[c] += 1;
            coords[slot * d..(slot + 1) * d].copy_from_slice(p);
        }
        grid.coords = coords;
        grid.scale = grid.origin.iter().chain(&hi).fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(grid)
    }

    /// Cell index of coordinate `v` along `axis`, clamped to the grid.
    fn axis_cell(&self, v: f64, axis: usize) -> usize {
        let c = floor_i64((v - self.origin[axis]) * self.inv_sides[axis]).max(0) as usize;
        c.min(self.shape[axis] - 1)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Cell side along every axis but the last.
    pub fn cell_side(&self) -> f64 {
        self.sides[0]
    }

    pub fn cell_count(&self) -> usize {
        self.starts.len() - 1
    }

    /// Ordered pairs `(p, p')`, `p != p'`, with `band.contains(gauge(p - p'))`.
    pub fn count_band(&self, exec: Execution, body: &NormBody, band: Band) -> u64 {
        assert_eq!(body.dim(), self.dim, "body and grid dimensions differ");
        assert!(band.lo > 0.0, "band must exclude zero");
        let (c1, c2) = body.equivalence_constants();
        let widest = self.sides.iter().fold(0.0f64, |m, &s| m.max(s));
        let abs_pad = PAD * (self.scale + widest);
        let r_in = ((band.lo / c2) * (1.0 - PAD) - abs_pad).max(0.0);
        let r_out = (band.hi / c1) * (1.0 + PAD) + abs_pad;
        let shell = Shell { r_in2: r_in * r_in, r_out2: r_out * r_out, r_out };
        let d = self.dim;
        let unordered = exec::sum_u64(exec, self.len(), |i| {
            let x = &self.coords[i * d..(i + 1) * d];
            let mut count = 0u64;
            let mut scan = |s: usize, e: usize| {
                let s = s.max(i + 1);
                if s < e {
                    let run = &self.coords[s * d..e * d];
                    count += match d {
                        2 => scan_run::<2>(x, run, &shell, body, band),
                        3 => scan_run::<3>(x, run, &shell, body, band),
                        _ => scan_run_dyn(x, run, &shell, body, band),
                    };
                }
            };
            // Partners later in cell order live in this slab or beyond.
            let first = self.axis_cell(x[0], 0) as i64;
            self.visit(x, &shell, 0, first, 0, 0.0, 0.0, &mut scan);
            count
        });
        2 * unordered
    }

    /// Walk the cells that may meet the shell around `x`, handing each
    /// contiguous run of points (as a position range) to `f`. Along `axis`,
    /// cells below `first` are skipped. `min2` / `max2` accumulate the squared
    /// minimum / maximum distance from `x` to the cell box along fixed axes.
    #[allow(clippy::too_many_arguments)]
    fn visit<F: FnMut(usize, usize)>(
        &self,
        x: &[f64],
        shell: &Shell,
        axis: usize,
        first: i64,
        base: usize,
        min2: f64,
        max2: f64,
        f: &mut F,
    ) {
        let o = self.origin[axis];
        let h = self.sides[axis];
        let xa = x[axis];
        let last = self.shape[axis] as i64 - 1;
        let stride = self.strides[axis];
        if axis + 1 < self.dim {
            let (a, b) = self.cell_range(xa - shell.r_out, xa + shell.r_out, axis);
            for c in a.max(first)..=b {
                let lo = o + c as f64 * h;
                let hi = lo + h;
                let dmin = (lo - xa).max(xa - hi).max(0.0);
                let dmax = (xa - lo).max(hi - xa);
                let nmin2 = min2 + dmin * dmin;
                if nmin2 > shell.r_out2 {
                    continue;
                }
                self.visit(x, shell, axis + 1, 0, base + c as usize * stride, nmin2, max2 + dmax * dmax, f);
            }
            return;
        }
        let reach = (shell.r_out2 - min2).max(0.0).sqrt();
        let (a, b) = self.cell_range(xa - reach, xa + reach, axis);
        let a = a.max(first);
        if a > b {
            return;
        }
        // Cells lying strictly inside (xa - hole, xa + hole) are entirely closer than r_in.
        let (mut ex_a, mut ex_b) = (1, 0);
        if max2 < shell.r_in2 {
            let hole = (shell.r_in2 - max2).sqrt();
            let inv = self.inv_sides[axis];
            ex_a = floor_i64((xa - hole - o) * inv) + 1;
            ex_b = -floor_i64(-(xa + hole - o) * inv) - 2;
        }
        let mut emit = |from: i64, to: i64| {
            let from = from.max(a);
            let to = to.min(b).min(last);
            if from <= to {
                f(self.starts[base + from as usize], self.starts[base + to as usize + 1]);
            }
        };
        if ex_a <= ex_b {
            emit(a, ex_a - 1);
            emit(ex_b + 1, b);
        } else {
            emit(a, b);
        }
    }

    /// Cells along `axis` whose closed extent meets `[from, to]`, clamped.
    fn cell_range(&self, from: f64, to: f64, axis: usize) -> (i64, i64) {
        let o = self.origin[axis];
        let last = self.shape[axis] as i64 - 1;
        let inv = self.inv_sides[axis];
        let a = floor_i64((from - o) * inv).max(0);
        let b = floor_i64((to - o) * inv).min(last);
        (a, b)
    }
}

fn scan_run<const D: usize>(x: &[f64], run: &[f64], shell: &Shell, body: &NormBody, band: Band) -> u64 {
    let x: &[f64; D] = x.try_into().expect("point of grid dimension");
    let mut count = 0;
    for y in run.chunks_exact(D) {
        let mut e2 = 0.0;
        for a in 0..D {
            let t = x[a] - y[a];
            e2 += t * t;
        }
        if (e2 >= shell.r_in2) & (e2 <= shell.r_out2) && band.contains(body.gauge_diff(x, y)) {
            count += 1;
        }
    }
    count
}

fn scan_run_dyn(x: &[f64], run: &[f64], shell: &Shell, body: &NormBody, band: Band) -> u64 {
    let mut count = 0;
    for y in run.chunks_exact(x.len()) {
        let e2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        if (e2 >= shell.r_in2) & (e2 <= shell.r_out2) && band.contains(body.gauge_diff(x, y)) {
            count += 1;
        }
    }
    count
}

struct Shell {
    r_in2: f64,
    r_out2: f64,
    r_out: f64,
}
