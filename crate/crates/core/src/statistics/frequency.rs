use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::window::{ColorField, VanHoveSequence, Window};
use crate::error::{Error, Result};
use crate::substitution::{
    apply_n, pf_data, substitution_matrix, Cluster, Region, SubstitutionSystem,
};

/// `count` lattice vectors with coordinates uniform in `[0, extent)`.
pub fn random_translates(seed: u64, count: usize, extent: &[i64]) -> Vec<Vec<i64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| extent.iter().map(|&e| rng.gen_range(0..e.max(1))).collect())
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ScaleEstimate {
    pub n: u32,
    /// `L_P(h + F_n) / Vol(F_n)` for each translate `h`.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FrequencyEstimate {
    pub scales: Vec<ScaleEstimate>,
    /// Mean over translates at the largest scale.
    pub mean: f64,
    /// `max - min` over translates at the largest scale.
    pub spread: f64,
}

/// Points of `P` as `(color, point)` pairs, anchor first.
fn cluster_points(p: &Cluster) -> Vec<(usize, Vec<i64>)> {
    p.lists()
        .iter()
        .enumerate()
        .flat_map(|(c, l)| l.iter().map(move |x| (c, x.clone())))
        .collect()
}

/// Translates `t` with `t + P ⊂ Λ ∩ window`.
fn occurrences(field: &ColorField, pts: &[(usize, Vec<i64>)], window: &Window) -> usize {
    let Some((c0, p0)) = pts.first() else {
        return 0;
    };
    window
        .points()
        .par_iter()
        .filter(|x| {
            if !field.has(*c0, x) {
                return false;
            }
            let t: Vec<i64> = x.iter().zip(p0).map(|(a, b)| a - b).collect();
            pts[1..].iter().all(|(c, p)| {
                let y: Vec<i64> = p.iter().zip(&t).map(|(a, b)| a + b).collect();
                window.contains(&y) && field.has(*c, &y)
            })
        })
        .count()
}

/// Frequency of `P` per unit volume in `h + F_n`, for each translate and
/// scale of the sequence.
pub fn cluster_frequency(
    sys: &SubstitutionSystem,
    p: &Cluster,
    seq: &VanHoveSequence,
    translates: &[Vec<i64>],
    budget: usize,
) -> Result<FrequencyEstimate> {
    let d = sys.dim();
    if seq.dim() != d || p.colors() != sys.num_colors() {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: seq.dim(),
        });
    }
    let Some(&top) = seq.scales.iter().max() else {
        return Err(Error::InvalidSystem("van Hove sequence has no scales".into()));
    };
    let zero = vec![vec![0; d]];
    let translates = if translates.is_empty() { &zero[..] } else { translates };
    // one field covering every shifted window
    let base = seq.window(sys, top)?.bounds;
    let mut lo = base.lo.clone();
    let mut hi = base.hi.clone();
    for h in translates {
        for c in 0..d {
            lo[c] = lo[c].min(base.lo[c] + h[c]);
            hi[c] = hi[c].max(base.hi[c] + h[c]);
        }
    }
    let field = ColorField::build(sys, &Region::new(lo, hi)?, budget)?;
    let pts = cluster_points(p);
    let cell = sys.lattice.covolume()
        * seq.lo.iter().zip(&seq.hi).map(|(a, b)| (b - a) as f64).product::<f64>();
    let mut scales = Vec::new();
    for &n in &seq.scales {
        let vol = cell * (sys.q.q() as f64).powi(n as i32);
        let values = translates
            .iter()
            .map(|h| Ok(occurrences(&field, &pts, &seq.window(sys, n)?.translate(h)) as f64 / vol))
            .collect::<Result<Vec<f64>>>()?;
        scales.push(ScaleEstimate { n, values });
    }
    let last = scales
        .iter()
        .find(|s| s.n == top)
        .expect("top scale present");
    let mean = last.values.iter().sum::<f64>() / last.values.len() as f64;
    let max = last.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = last.values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(FrequencyEstimate {
        mean,
        spread: max - min,
        scales,
    })
}

/// `Σ_i L_P(Φ^k(i)) r_i q^{-k}` with `r` the right PF eigenvector scaled so
/// that `Σ r_i Vol(A_i) = 1`.
pub fn supertile_frequency(
    sys: &SubstitutionSystem,
    p: &Cluster,
    k: u32,
    volumes: &[f64],
    budget: usize,
) -> Result<f64> {
    let m = sys.num_colors();
    if volumes.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: volumes.len(),
        });
    }
    let pf = pf_data(&substitution_matrix(sys), &sys.q)?;
    let scale: f64 = pf.right_vector.iter().zip(volumes).map(|(r, v)| r * v).sum();
    let pts = cluster_points(p);
    let qk = (sys.q.q() as f64).powi(k as i32);
    let mut total = 0.0;
    for i in 0..m {
        let tile = apply_n(sys, &Cluster::singleton(m, i, vec![0; sys.dim()]), k, budget)?;
        total += count_in_cluster(&tile, &pts) as f64 * pf.right_vector[i] / scale;
    }
    Ok(total / qk)
}

/// Translates `t` with `t + P ⊂ c`.
fn count_in_cluster(c: &Cluster, pts: &[(usize, Vec<i64>)]) -> usize {
    let Some((c0, p0)) = pts.first() else {
        return 0;
    };
    c.color(*c0)
        .iter()
        .filter(|x| {
            let t: Vec<i64> = x.iter().zip(p0).map(|(a, b)| a - b).collect();
            pts[1..].iter().all(|(col, p)| {
                let y: Vec<i64> = p.iter().zip(&t).map(|(a, b)| a + b).collect();
                c.contains(*col, &y)
            })
        })
        .count()
}
