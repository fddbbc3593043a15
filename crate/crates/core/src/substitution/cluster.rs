use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `lo <= x <= hi` (inclusive) in lattice coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl Region {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        Ok(Region { lo, hi })
    }

    /// The cube `[-r, r]^dim`.
    pub fn centered(dim: usize, r: i64) -> Self {
        Region {
            lo: vec![-r; dim],
            hi: vec![r; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| l <= x && x <= h)
    }

    /// Number of lattice points in the box.
    pub fn lattice_count(&self) -> u128 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l + 1).max(0) as u128)
            .product()
    }

    /// Whether the box meets the interval box `[lo, hi]` given in i128.
    pub(crate) fn meets(&self, lo: &[i128], hi: &[i128]) -> bool {
        (0..self.dim())
            .all(|c| lo[c] <= self.hi[c] as i128 && hi[c] >= self.lo[c] as i128)
    }
}

/// Finite colored point set: one sorted, duplicate-free list per color.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cluster {
    points: Vec<Vec<Vec<i64>>>,
}

impl Cluster {
    pub fn empty(colors: usize) -> Self {
        Cluster {
            points: vec![Vec::new(); colors],
        }
    }

    /// Builds a cluster, sorting and deduplicating each color.
    pub fn from_lists(mut points: Vec<Vec<Vec<i64>>>) -> Self {
        for c in &mut points {
            c.sort_unstable();
            c.dedup();
        }
        Cluster { points }
    }

    /// Cluster with one point `p` of color `color`.
    pub fn singleton(colors: usize, color: usize, p: Vec<i64>) -> Self {
        let mut c = Self::empty(colors);
        c.points[color].push(p);
        c
    }

    pub fn colors(&self) -> usize {
        self.points.len()
    }

    pub fn color(&self, i: usize) -> &[Vec<i64>] {
        &self.points[i]
    }

    pub fn lists(&self) -> &[Vec<Vec<i64>>] {
        &self.points
    }

    pub fn into_lists(self) -> Vec<Vec<Vec<i64>>> {
        self.points
    }

    pub fn counts(&self) -> Vec<usize> {
        self.points.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.points.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn contains(&self, color: usize, p: &[i64]) -> bool {
        self.points[color]
            .binary_search_by(|q| q.as_slice().cmp(p))
            .is_ok()
    }

    /// Color-wise inclusion.
    pub fn is_subset(&self, other: &Cluster) -> bool {
        self.colors() == other.colors()
            && self
                .points
                .iter()
                .enumerate()
                .all(|(i, ps)| ps.iter().all(|p| other.contains(i, p)))
    }

    pub fn restrict(&self, region: &Region) -> Cluster {
        Cluster {
            points: self
                .points
                .iter()
                .map(|ps| ps.iter().filter(|p| region.contains(p)).cloned().collect())
                .collect(),
        }
    }

    pub fn translate(&self, t: &[i64]) -> Cluster {
        Cluster {
            points: self
                .points
                .iter()
                .map(|ps| {
                    ps.iter()
                        .map(|p| p.iter().zip(t).map(|(a, b)| a + b).collect())
                        .collect()
                })
                .collect(),
        }
    }

    /// Color of `p`, the first color containing it.
    pub fn color_of(&self, p: &[i64]) -> Option<usize> {
        (0..self.colors()).find(|&i| self.contains(i, p))
    }

    /// Points that carry more than one color, with the colors involved.
    pub fn cross_color_overlaps(&self) -> Vec<(Vec<i64>, Vec<usize>)> {
        let mut all: Vec<(&Vec<i64>, usize)> = self
            .points
            .iter()
            .enumerate()
            .flat_map(|(i, ps)| ps.iter().map(move |p| (p, i)))
            .collect();
        all.sort_unstable();
        let mut out = Vec::new();
        let mut k = 0;
        while k < all.len() {
            let mut e = k + 1;
            while e < all.len() && all[e].0 == all[k].0 {
                e += 1;
            }
            if e - k > 1 {
                out.push((all[k].0.clone(), all[k..e].iter().map(|x| x.1).collect()));
            }
            k = e;
        }
        out
    }
}
