use serde::Serialize;

use crate::error::{Error, Result};
use crate::substitution::{fill_region, Region, SubstitutionSystem};

/// `F_n = Q^n D_0` with `D_0 = [lo, hi)` in lattice coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VanHoveSequence {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    pub scales: Vec<u32>,
}

impl VanHoveSequence {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>, scales: Vec<u32>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::InvalidSystem("empty base region".into()));
        }
        Ok(VanHoveSequence { lo, hi, scales })
    }

    /// `D_0 = [0, 1)^d`.
    pub fn unit(dim: usize, scales: Vec<u32>) -> Self {
        VanHoveSequence {
            lo: vec![0; dim],
            hi: vec![1; dim],
            scales,
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn window(&self, sys: &SubstitutionSystem, n: u32) -> Result<Window> {
        Window::new(sys, &self.lo, &self.hi, n)
    }
}

/// The lattice points of `offset + Q^n [lo, hi)`.
#[derive(Clone, Debug)]
pub struct Window {
    /// Smallest box containing the window.
    pub bounds: Region,
    offset: Vec<i64>,
    adj: Vec<Vec<i128>>,
    det: i128,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl Window {
    pub fn new(sys: &SubstitutionSystem, lo: &[i64], hi: &[i64], n: u32) -> Result<Self> {
        let d = sys.dim();
        if lo.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: lo.len(),
            });
        }
        let qn = sys.q.pow(n)?;
        let det = qn.det()?;
        let adj = qn.adjugate()?;
        let mut blo = vec![i64::MAX; d];
        let mut bhi = vec![i64::MIN; d];
        for code in 0..(1usize << d) {
            let corner: Vec<i64> = (0..d)
                .map(|c| if code >> c & 1 == 1 { hi[c] } else { lo[c] })
                .collect();
            let img = qn.mul_vec(&corner)?;
            for c in 0..d {
                blo[c] = blo[c].min(img[c]);
                bhi[c] = bhi[c].max(img[c]);
            }
        }
        Ok(Window {
            bounds: Region::new(blo, bhi)?,
            offset: vec![0; d],
            adj,
            det,
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        })
    }

    pub fn translate(&self, h: &[i64]) -> Window {
        let shift = |v: &[i64]| -> Vec<i64> { v.iter().zip(h).map(|(a, b)| a + b).collect() };
        Window {
            bounds: Region {
                lo: shift(&self.bounds.lo),
                hi: shift(&self.bounds.hi),
            },
            offset: shift(&self.offset),
            ..self.clone()
        }
    }

    /// Whether `Q^{-n} (y - offset) ∈ [lo, hi)`.
    pub fn contains(&self, y: &[i64]) -> bool {
        if !self.bounds.contains(y) {
            return false;
        }
        let (det, sign) = (self.det.abs(), self.det.signum());
        self.adj.iter().enumerate().all(|(r, row)| {
            let v: i128 = sign
                * row
                    .iter()
                    .zip(y.iter().zip(&self.offset))
                    .map(|(a, (&b, &o))| a * (b - o) as i128)
                    .sum::<i128>();
            v >= self.lo[r] as i128 * det && v < self.hi[r] as i128 * det
        })
    }

    /// Lattice points of the window, in lexicographic order.
    pub fn points(&self) -> Vec<Vec<i64>> {
        let d = self.bounds.dim();
        let mut out = Vec::new();
        let mut cur = self.bounds.lo.clone();
        loop {
            if self.contains(&cur) {
                out.push(cur.clone());
            }
            let mut c = d;
            loop {
                if c == 0 {
                    return out;
                }
                c -= 1;
                if cur[c] < self.bounds.hi[c] {
                    cur[c] += 1;
                    break;
                }
                cur[c] = self.bounds.lo[c];
            }
        }
    }
}

/// Colors present at each lattice point of a box, as bit masks.
#[derive(Clone, Debug)]
pub struct ColorField {
    pub region: Region,
    masks: Vec<u64>,
}

impl ColorField {
    /// `Λ ∩ region` for the multiset generated by the seed.
    pub fn build(sys: &SubstitutionSystem, region: &Region, budget: usize) -> Result<Self> {
        if sys.num_colors() > 64 {
            return Err(Error::Unsupported("more than 64 colors".into()));
        }
        let count = region.lattice_count();
        if count > budget as u128 {
            return Err(Error::BudgetExceeded {
                what: "color field",
                limit: budget,
            });
        }
        let patch = fill_region(sys, region, budget)?;
        let mut f = ColorField {
            region: region.clone(),
            masks: vec![0; count as usize],
        };
        for (c, list) in patch.lists().iter().enumerate() {
            for p in list {
                let i = f.index(p).expect("patch restricted to region");
                f.masks[i] |= 1 << c;
            }
        }
        Ok(f)
    }

    fn index(&self, p: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for c in 0..p.len() {
            if p[c] < self.region.lo[c] || p[c] > self.region.hi[c] {
                return None;
            }
            let w = (self.region.hi[c] - self.region.lo[c] + 1) as usize;
            idx = idx * w + (p[c] - self.region.lo[c]) as usize;
        }
        Some(idx)
    }

    /// Color mask at `p`; `None` outside the box.
    pub fn mask(&self, p: &[i64]) -> Option<u64> {
        self.index(p).map(|i| self.masks[i])
    }

    pub fn has(&self, color: usize, p: &[i64]) -> bool {
        self.mask(p).is_some_and(|m| m >> color & 1 == 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::substitution::test_systems::*;

    #[test]
    fn windows_are_inflated_unit_cells() {
        let s = period_doubling();
        let w = Window::new(&s, &[0], &[1], 4).unwrap();
        assert_eq!(w.points().len(), 16);
        assert!(w.contains(&[15]) && !w.contains(&[16]) && !w.contains(&[-1]));
        let neg = one_dim("neg", -2, vec![vec![vec![0, 1]]], vec![vec![0]]);
        let w = Window::new(&neg, &[0], &[1], 3).unwrap();
        let pts: Vec<i64> = w.points().iter().map(|p| p[0]).collect();
        assert_eq!(pts, (-7..=0).collect::<Vec<_>>());
        let g = gasket();
        assert_eq!(Window::new(&g, &[0, 0], &[1, 1], 3).unwrap().points().len(), 64);
        let w = Window::new(&s, &[0], &[1], 2).unwrap().translate(&[10]);
        let pts: Vec<i64> = w.points().iter().map(|p| p[0]).collect();
        assert_eq!(pts, vec![10, 11, 12, 13]);
    }
}
