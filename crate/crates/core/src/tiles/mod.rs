//! Tile supports: the compact solution of `Q A_j = ∪_i (D_ij + A_i)`.

mod interval;
mod render;
mod volume;

pub use interval::{exact_intervals, ExactInterval};
pub use render::{render_svg, write_pgm};
pub use volume::{covering_density, volume_check, VolumeVector};

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{inf_norm, mat_mul_f64, mat_vec_f64};
use crate::substitution::SubstitutionSystem;

/// Cap on cells per attractor grid.
pub const DEFAULT_CELL_BUDGET: usize = 1 << 22;
/// Automatic iteration counts leave a fringe of at most `h / FRINGE_DIVISOR`.
const FRINGE_DIVISOR: f64 = 64.0;
/// Offset of the sample point from the cell center, in cells per axis
/// index; an irrational value keeps samples off the dyadic lines that
/// tile boundaries often contain.
const SAMPLE_OFFSET: f64 = std::f64::consts::SQRT_2 / 100.0;
/// Cap on path-search nodes per sample point.
const NODE_BUDGET: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RasterMode {
    /// A cell is set when its sample point survives.
    Outer,
    /// A cell is set when its sample point and every corner survive.
    Inner,
}

/// Bit grid of cells `[(origin + k) h, (origin + k + 1) h)` per axis, in
/// ambient coordinates, first axis varying slowest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub h: f64,
    pub origin: Vec<i64>,
    pub shape: Vec<usize>,
    #[serde(skip)]
    pub cells: Vec<bool>,
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.h.powi(self.dim() as i32)
    }

    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for c in (0..self.dim()).rev() {
            out[c] = idx % self.shape[c];
            idx /= self.shape[c];
        }
        out
    }

    pub fn ravel(&self, k: &[usize]) -> usize {
        k.iter().zip(&self.shape).fold(0, |acc, (x, n)| acc * n + x)
    }

    /// Whether the cell with absolute index `abs` (in units of `h`) is set.
    pub fn get_abs(&self, abs: &[i64]) -> bool {
        let mut idx = 0usize;
        for c in 0..self.dim() {
            let k = abs[c] - self.origin[c];
            if k < 0 || k as usize >= self.shape[c] {
                return false;
            }
            idx = idx * self.shape[c] + k as usize;
        }
        self.cells[idx]
    }

    pub fn center(&self, k: &[usize]) -> Vec<f64> {
        k.iter()
            .zip(&self.origin)
            .map(|(&x, &o)| (o as f64 + x as f64 + 0.5) * self.h)
            .collect()
    }

    /// Absolute indices of the set cells.
    pub fn set_cells(&self) -> Vec<Vec<i64>> {
        (0..self.len())
            .filter(|&i| self.cells[i])
            .map(|i| {
                self.unravel(i)
                    .iter()
                    .zip(&self.origin)
                    .map(|(&k, &o)| k as i64 + o)
                    .collect()
            })
            .collect()
    }

    fn neighbors(&self, idx: usize) -> Vec<usize> {
        let k = self.unravel(idx);
        let d = self.dim();
        let mut out = Vec::new();
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let mut nb = k.clone();
            let mut ok = true;
            let mut moved = false;
            for axis in 0..d {
                let step = (c % 3) as i64 - 1;
                c /= 3;
                moved |= step != 0;
                let v = nb[axis] as i64 + step;
                if v < 0 || v as usize >= self.shape[axis] {
                    ok = false;
                    break;
                }
                nb[axis] = v as usize;
            }
            if ok && moved {
                out.push(self.ravel(&nb));
            }
        }
        out
    }

    /// The set cells all of whose neighbors are set.
    pub fn eroded(&self) -> Grid {
        let full = 3usize.pow(self.dim() as u32) - 1;
        let cells = (0..self.len())
            .into_par_iter()
            .map(|i| {
                self.cells[i] && {
                    let nb = self.neighbors(i);
                    nb.len() == full && nb.iter().all(|&n| self.cells[n])
                }
            })
            .collect();
        Grid {
            cells,
            ..self.clone()
        }
    }

    /// Fraction of set cells with an unset (or outside) neighbor.
    pub fn boundary_fraction(&self) -> f64 {
        let total = self.count();
        if total == 0 {
            return 0.0;
        }
        let full = 3usize.pow(self.dim() as u32) - 1;
        let boundary = (0..self.len())
            .into_par_iter()
            .filter(|&i| {
                self.cells[i] && {
                    let nb = self.neighbors(i);
                    nb.len() < full || nb.iter().any(|&n| !self.cells[n])
                }
            })
            .count();
        boundary as f64 / total as f64
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TileAttractor {
    pub color: usize,
    pub grid: Grid,
    pub mode: RasterMode,
    pub iterations: u32,
    /// Largest distance from a cell dropped in the last iteration to the
    /// retained set, in ambient units.
    pub hausdorff_gap: f64,
    pub converged: bool,
    /// Exact support in ambient coordinates when it is an interval.
    pub exact_interval: Option<ExactInterval>,
}

/// Largest dimension the rasterizer handles.
const MAX_DIM: usize = 4;
type Point = [f64; MAX_DIM];

/// Float data for the path search `y ↦ Q y - d`.
struct Search {
    dim: usize,
    q: Vec<Vec<f64>>,
    /// `moves[j]` lists `(i, d)` with `d ∈ D_ij`.
    moves: Vec<Vec<(usize, Point)>>,
    /// Per-color boxes `(center, half-width)` containing the attractors.
    boxes: Vec<(Point, Point)>,
    binv: Vec<Vec<f64>>,
}

impl Search {
    fn in_box(&self, y: &Point, color: usize) -> bool {
        let (c, r) = &self.boxes[color];
        (0..self.dim).all(|k| (y[k] - c[k]).abs() <= r[k])
    }

    fn lattice_point(&self, x: &[f64]) -> Point {
        let mut y = [0.0; MAX_DIM];
        for (r, row) in self.binv.iter().enumerate() {
            y[r] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }

    /// Longest color-respecting orbit of the ambient point `x` that stays in
    /// the boxes, capped at `limit`; `None` when `x` itself is outside. An
    /// exhausted search reports `limit` when `optimistic` is set and the
    /// depth reached otherwise.
    fn depth(&self, x: &[f64], color: usize, limit: u32, optimistic: bool) -> Option<u32> {
        let y0 = self.lattice_point(x);
        if !self.in_box(&y0, color) {
            return None;
        }
        let d = self.dim;
        let mut best = 0u32;
        let mut nodes = 0usize;
        let mut stack = vec![(y0, color, 0u32)];
        while let Some((y, c, depth)) = stack.pop() {
            best = best.max(depth);
            if best >= limit {
                break;
            }
            if nodes >= NODE_BUDGET {
                return Some(if optimistic { limit } else { best });
            }
            nodes += 1;
            let mut qy = [0.0; MAX_DIM];
            for r in 0..d {
                qy[r] = (0..d).map(|k| self.q[r][k] * y[k]).sum();
            }
            for (i, dg) in &self.moves[c] {
                let mut z = [0.0; MAX_DIM];
                for r in 0..d {
                    z[r] = qy[r] - dg[r];
                }
                if self.in_box(&z, *i) {
                    stack.push((z, *i, depth + 1));
                }
            }
        }
        Some(best)
    }
}

/// Shrinks boxes around 0 of the given radius, one per color, while each
/// still contains its attractor: `A_j ⊂ hull ∪ Q^{-1} (d + B_i)`.
fn refine_boxes(sys: &SubstitutionSystem, radius: &[f64], qinv: &[Vec<f64>]) -> Vec<(Point, Point)> {
    let d = sys.dim();
    let m = sys.num_colors();
    let mut lo: Vec<Point> = vec![[0.0; MAX_DIM]; m];
    let mut hi: Vec<Point> = vec![[0.0; MAX_DIM]; m];
    for j in 0..m {
        for k in 0..d {
            lo[j][k] = -radius[k];
            hi[j][k] = radius[k];
        }
    }
    for _ in 0..200 {
        let mut changed = false;
        for j in 0..m {
            let mut nlo = [f64::INFINITY; MAX_DIM];
            let mut nhi = [f64::NEG_INFINITY; MAX_DIM];
            for i in 0..m {
                for dg in &sys.digits[i][j] {
                    for r in 0..d {
                        let mut c = 0.0;
                        let mut w = 0.0;
                        for k in 0..d {
                            let mid = 0.5 * (lo[i][k] + hi[i][k]) + dg[k] as f64;
                            c += qinv[r][k] * mid;
                            w += qinv[r][k].abs() * 0.5 * (hi[i][k] - lo[i][k]);
                        }
                        nlo[r] = nlo[r].min(c - w);
                        nhi[r] = nhi[r].max(c + w);
                    }
                }
            }
            for r in 0..d {
                let (a, b) = (lo[j][r].max(nlo[r] - 1e-9), hi[j][r].min(nhi[r] + 1e-9));
                if a > lo[j][r] + 1e-12 || b < hi[j][r] - 1e-12 {
                    changed = true;
                }
                lo[j][r] = a;
                hi[j][r] = b;
            }
        }
        if !changed {
            break;
        }
    }
    (0..m)
        .map(|j| {
            let mut c = [0.0; MAX_DIM];
            let mut r = [0.0; MAX_DIM];
            for k in 0..d {
                c[k] = 0.5 * (lo[j][k] + hi[j][k]);
                r[k] = 0.5 * (hi[j][k] - lo[j][k]) + 1e-9;
            }
            (c, r)
        })
        .collect()
}

/// Coordinate-wise radius of a box around 0 containing every attractor, in
/// lattice coordinates: `Σ_k |Q^{-k}| max|D|`.
pub fn prune_radius(sys: &SubstitutionSystem) -> Result<Vec<f64>> {
    let d = sys.dim();
    let qinv = sys.q.matrix().inverse_f64()?;
    let maxd: Vec<f64> = (0..d)
        .map(|c| {
            sys.all_digits()
                .iter()
                .map(|v| v[c].abs() as f64)
                .fold(0.0, f64::max)
        })
        .collect();
    let mut p = qinv.clone();
    let mut radius = vec![0.0; d];
    for _ in 0..10_000 {
        let contrib = p
            .iter()
            .map(|row| row.iter().zip(&maxd).map(|(a, m)| a.abs() * m).sum::<f64>());
        for (r, c) in radius.iter_mut().zip(contrib) {
            *r += c;
        }
        if inf_norm(&p) < 1e-16 {
            return Ok(radius.iter().map(|r| r * (1.0 + 1e-9) + 1e-9).collect());
        }
        p = mat_mul_f64(&p, &qinv);
        if !inf_norm(&p).is_finite() {
            break;
        }
    }
    Err(Error::NonContraction(
        "inverse expansion powers do not decay".into(),
    ))
}
/// Iterations after which surviving points lie within `h / FRINGE_DIVISOR`
/// of the attractor.
fn auto_iterations(sys: &SubstitutionSystem, radius: &[f64], h: f64) -> Result<u32> {
    let qinv = sys.q.matrix().inverse_f64()?;
    let b = sys.lattice.rows_f64();
    let rmax = radius.iter().cloned().fold(0.0, f64::max);
    let scale = 2.0 * rmax * inf_norm(&b);
    let mut p = qinv.clone();
    for n in 1..=200u32 {
        if inf_norm(&p) * scale <= h / FRINGE_DIVISOR {
            return Ok(n + 2);
        }
        p = mat_mul_f64(&p, &qinv);
    }
    Err(Error::NonContraction("no resolution-level contraction within 200 steps".into()))
}

/// Chessboard distance, in cells, from each removed cell to the nearest
/// retained cell; the maximum over removed cells.
fn gap_cells(prev: &[bool], cur: &Grid) -> Option<usize> {
    let mut dist = vec![usize::MAX; cur.len()];
    let mut queue = VecDeque::new();
    for (i, &b) in cur.cells.iter().enumerate() {
        if b {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    if queue.is_empty() {
        return None;
    }
    while let Some(i) = queue.pop_front() {
        for n in cur.neighbors(i) {
            if dist[n] == usize::MAX {
                dist[n] = dist[i] + 1;
                queue.push_back(n);
            }
        }
    }
    Some(
        (0..cur.len())
            .filter(|&i| prev[i] && !cur.cells[i])
            .map(|i| dist[i])
            .max()
            .unwrap_or(0),
    )
}

/// Rasterizes the attractors at cell size `h` (ambient units).
///
/// Cells are tested by following orbits `y ↦ Q y - d` backwards through
/// the set equations: a point lies in the `n`-th outer iterate of color
/// `j` exactly when some color-respecting orbit of length `n` stays inside
/// the a-priori box.
pub fn solve_adjoint(
    sys: &SubstitutionSystem,
    h: f64,
    max_iter: Option<u32>,
    mode: RasterMode,
) -> Result<Vec<TileAttractor>> {
    if !(h > 0.0) {
        return Err(Error::InvalidSystem("cell size must be positive".into()));
    }
    let d = sys.dim();
    if d > MAX_DIM {
        return Err(Error::Unsupported(format!("rasterizing {d}-dimensional tiles")));
    }
    let m = sys.num_colors();
    let radius = prune_radius(sys)?;
    let iterations = match max_iter {
        Some(n) => n.max(1),
        None => auto_iterations(sys, &radius, h)?,
    };
    let qinv = sys.q.matrix().inverse_f64()?;
    let boxes = refine_boxes(sys, &radius, &qinv);
    let b = sys.lattice.rows_f64();
    // ambient bounding box of the union of the lattice-coordinate boxes
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for (center, half) in &boxes {
        for code in 0..(1usize << d) {
            let corner: Vec<f64> = (0..d)
                .map(|c| center[c] + if code >> c & 1 == 1 { half[c] } else { -half[c] })
                .collect();
            let a = mat_vec_f64(&b, &corner);
            for c in 0..d {
                lo[c] = lo[c].min(a[c]);
                hi[c] = hi[c].max(a[c]);
            }
        }
    }
    let origin: Vec<i64> = lo.iter().map(|x| (x / h).floor() as i64).collect();
    let shape: Vec<usize> = hi
        .iter()
        .zip(&origin)
        .map(|(x, o)| ((x / h).ceil() as i64 - o).max(1) as usize)
        .collect();
    let ncells: usize = shape.iter().product();
    if ncells > DEFAULT_CELL_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "attractor grid",
            limit: DEFAULT_CELL_BUDGET,
        });
    }
    let to_point = |v: &[i64]| {
        let mut p = [0.0; MAX_DIM];
        for (x, y) in p.iter_mut().zip(v) {
            *x = *y as f64;
        }
        p
    };
    let search = Search {
        dim: d,
        q: sys
            .q
            .matrix()
            .to_rows()
            .iter()
            .map(|r| r.iter().map(|&x| x as f64).collect())
            .collect(),
        moves: (0..m)
            .map(|j| {
                (0..m)
                    .flat_map(|i| sys.digits[i][j].iter().map(move |v| (i, to_point(v))))
                    .collect()
            })
            .collect(),
        boxes,
        binv: sys.lattice.inverse_f64(),
    };
    let exact = if d == 1 { exact_intervals(sys)? } else { None };
    let template = Grid {
        h,
        origin,
        shape,
        cells: Vec::new(),
    };
    (0..m)
        .map(|color| {
            let depths: Vec<Option<u32>> = (0..ncells)
                .into_par_iter()
                .map(|idx| {
                    let k = template.unravel(idx);
                    let center: Vec<f64> = template
                        .center(&k)
                        .iter()
                        .enumerate()
                        .map(|(c, x)| x + SAMPLE_OFFSET * (c + 1) as f64 * h)
                        .collect();
                    let outer = mode == RasterMode::Outer;
                    let mut best = search.depth(&center, color, iterations, outer);
                    if !outer {
                        for code in 0..(1usize << d) {
                            let corner: Vec<f64> = center
                                .iter()
                                .enumerate()
                                .map(|(c, x)| x + if code >> c & 1 == 1 { h / 2.0 } else { -h / 2.0 })
                                .collect();
                            best = match (best, search.depth(&corner, color, iterations, false)) {
                                (Some(a), Some(b)) => Some(a.min(b)),
                                _ => None,
                            };
                        }
                    }
                    best
                })
                .collect();
            let at_least = |n: u32| -> Vec<bool> {
                depths.iter().map(|x| x.is_some_and(|v| v >= n)).collect()
            };
            let grid = Grid {
                cells: at_least(iterations),
                ..template.clone()
            };
            let prev = at_least(iterations - 1);
            let gap = gap_cells(&prev, &grid);
            let hausdorff_gap = gap.map_or(f64::INFINITY, |g| g as f64 * h);
            Ok(TileAttractor {
                color,
                converged: gap.is_some_and(|g| g <= 2),
                grid,
                mode,
                iterations,
                hausdorff_gap,
                exact_interval: exact.as_ref().map(|e| e[color].clone()),
            })
        })
        .collect()
}
