use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lattice::LatticeBasis;
use crate::substitution::Cluster;

use super::{Grid, TileAttractor};

const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn f(x: f64) -> String {
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

/// Unit edges between set and unset cells, as an SVG path in ambient units.
fn contour_path(grid: &Grid) -> String {
    let h = grid.h;
    let mut out = String::new();
    if grid.dim() == 1 {
        // maximal runs of set cells
        let mut k = 0;
        while k < grid.shape[0] {
            if grid.cells[k] {
                let start = k;
                while k < grid.shape[0] && grid.cells[k] {
                    k += 1;
                }
                let a = (grid.origin[0] + start as i64) as f64 * h;
                let b = (grid.origin[0] + k as i64) as f64 * h;
                let _ = write!(out, "M{} 0H{}", f(a), f(b));
            } else {
                k += 1;
            }
        }
        return out;
    }
    for cell in grid.set_cells() {
        let (x, y) = (cell[0], cell[1]);
        let (x0, y0) = (x as f64 * h, y as f64 * h);
        let (x1, y1) = (x0 + h, y0 + h);
        if !grid.get_abs(&[x - 1, y]) {
            let _ = write!(out, "M{} {}V{}", f(x0), f(y0), f(y1));
        }
        if !grid.get_abs(&[x + 1, y]) {
            let _ = write!(out, "M{} {}V{}", f(x1), f(y0), f(y1));
        }
        if !grid.get_abs(&[x, y - 1]) {
            let _ = write!(out, "M{} {}H{}", f(x0), f(y0), f(x1));
        }
        if !grid.get_abs(&[x, y + 1]) {
            let _ = write!(out, "M{} {}H{}", f(x0), f(y1), f(x1));
        }
    }
    out
}

/// Colored points of `patch` in ambient coordinates, with tile outlines
/// `x + A_i` when attractors are given. Only the first two coordinates are
/// drawn.
pub fn render_svg(
    patch: &Cluster,
    lattice: &LatticeBasis,
    attractors: Option<&[TileAttractor]>,
    path: &Path,
) -> Result<()> {
    std::fs::write(path, svg_string(patch, lattice, attractors))?;
    Ok(())
}

pub(crate) fn svg_string(
    patch: &Cluster,
    lattice: &LatticeBasis,
    attractors: Option<&[TileAttractor]>,
) -> String {
    let d = lattice.dim();
    let plane = |x: &[i64]| -> (f64, f64) {
        let a = lattice.to_ambient(x);
        (a[0], if d > 1 { a[1] } else { 0.0 })
    };
    let pts: Vec<(usize, f64, f64)> = patch
        .lists()
        .iter()
        .enumerate()
        .flat_map(|(c, l)| l.iter().map(move |p| (c, p)))
        .map(|(c, p)| {
            let (x, y) = plane(p);
            (c, x, y)
        })
        .collect();
    let (mut x0, mut y0, mut x1, mut y1) = (0.0f64, 0.0f64, 1.0f64, 1.0f64);
    if !pts.is_empty() {
        x0 = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min) - 1.0;
        x1 = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max) + 2.0;
        y0 = pts.iter().map(|p| p.2).fold(f64::INFINITY, f64::min) - 1.0;
        y1 = pts.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max) + 2.0;
    }
    let scale = 800.0 / (x1 - x0).max(y1 - y0);
    let (w, h) = ((x1 - x0) * scale, (y1 - y0) * scale);
    let r = (0.15f64).min(0.25 * (x1 - x0).max(y1 - y0) / (pts.len().max(1) as f64).sqrt());
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        f(w),
        f(h),
        f(w),
        f(h)
    );
    if let Some(att) = attractors {
        s.push_str("<defs>\n");
        for a in att {
            let _ = writeln!(s, r#"<path id="tile{}" d="{}"/>"#, a.color, contour_path(&a.grid));
        }
        s.push_str("</defs>\n");
    }
    // flip y so that the picture has the usual orientation
    let _ = writeln!(
        s,
        r#"<g transform="matrix({} 0 0 {} {} {})">"#,
        f(scale),
        f(-scale),
        f(-x0 * scale),
        f(y1 * scale)
    );
    if attractors.is_some() {
        let stroke = 1.0 / scale;
        for (c, x, y) in &pts {
            let _ = writeln!(
                s,
                r##"<use xlink:href="#tile{c}" transform="translate({} {})" fill="none" stroke="{}" stroke-width="{}"/>"##,
                f(*x),
                f(*y),
                PALETTE[c % PALETTE.len()],
                f(stroke)
            );
        }
    }
    for (c, x, y) in &pts {
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{}"/>"#,
            f(*x),
            f(*y),
            f(r),
            PALETTE[c % PALETTE.len()]
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}

/// Writes a one- or two-dimensional grid as a plain PGM image, set cells
/// black, highest second coordinate on top.
pub fn write_pgm(grid: &Grid, path: &Path) -> Result<()> {
    let (rows, cols) = match grid.dim() {
        1 => (1, grid.shape[0]),
        2 => (grid.shape[1], grid.shape[0]),
        d => return Err(Error::Unsupported(format!("PGM dump of a {d}-dimensional grid"))),
    };
    let mut s = format!("P2\n{cols} {rows}\n1\n");
    for r in (0..rows).rev() {
        let line: Vec<&str> = (0..cols)
            .map(|c| {
                let idx = if grid.dim() == 1 { c } else { grid.ravel(&[c, r]) };
                if grid.cells[idx] {
                    "0"
                } else {
                    "1"
                }
            })
            .collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}
