use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::substitution::Cluster;

#[derive(Clone, Debug, Serialize)]
pub struct DiffractionConfig {
    /// Fewer weighted points than this is an error.
    pub min_points: usize,
    /// Fraction of bins counted as "top" for the concentration score.
    pub top_fraction: f64,
    /// Number of strongest bins reported.
    pub peaks: usize,
}

impl Default for DiffractionConfig {
    fn default() -> Self {
        DiffractionConfig {
            min_points: 64,
            top_fraction: 0.01,
            peaks: 16,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Peak {
    /// Frequency in dual lattice coordinates, reduced to `[0, 1)^d`.
    pub k: Vec<f64>,
    pub intensity: f64,
}

/// Finite-window intensity `|Σ w_c e^{-2πi k·x}|^2 / N` on the grid
/// `k ∈ (ℤ/N_1) × … × (ℤ/N_d)` of the patch's bounding box.
#[derive(Clone, Debug, Serialize)]
pub struct DiffractionEstimate {
    /// Always true: a finite DFT cannot certify anything about the spectrum.
    pub heuristic: bool,
    pub shape: Vec<usize>,
    pub points: usize,
    /// Share of the total intensity carried by the top bins.
    pub concentration: f64,
    pub peaks: Vec<Peak>,
}

pub fn diffraction_estimate(
    patch: &Cluster,
    weights: &[f64],
    config: &DiffractionConfig,
) -> Result<DiffractionEstimate> {
    if weights.len() != patch.colors() {
        return Err(Error::DimensionMismatch {
            expected: patch.colors(),
            found: weights.len(),
        });
    }
    let pts: Vec<(&Vec<i64>, f64)> = patch
        .lists()
        .iter()
        .zip(weights)
        .flat_map(|(l, &w)| l.iter().map(move |p| (p, w)))
        .filter(|(_, w)| *w != 0.0)
        .collect();
    if pts.len() < config.min_points.max(1) {
        return Err(Error::WindowTooSmall {
            size: pts.len(),
            minimum: config.min_points.max(1),
        });
    }
    let d = pts[0].0.len();
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    for (p, _) in &pts {
        for c in 0..d {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    let shape: Vec<usize> = (0..d).map(|c| (hi[c] - lo[c] + 1) as usize).collect();
    let len: usize = shape.iter().product();
    if len > 1 << 26 {
        return Err(Error::BudgetExceeded {
            what: "diffraction grid",
            limit: 1 << 26,
        });
    }
    let mut data = vec![Complex::new(0.0, 0.0); len];
    for (p, w) in &pts {
        let idx = (0..d).fold(0, |acc, c| acc * shape[c] + (p[c] - lo[c]) as usize);
        data[idx].re += w;
    }
    fft_nd(&mut data, &shape);
    let n = pts.len() as f64;
    let mut intensity: Vec<(usize, f64)> = data
        .iter()
        .map(|z| z.norm_sqr() / n)
        .enumerate()
        .collect();
    let total: f64 = intensity.iter().map(|x| x.1).sum();
    intensity.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let top = ((len as f64 * config.top_fraction).ceil() as usize).max(1);
    let concentration = if total > 0.0 {
        intensity[..top].iter().map(|x| x.1).sum::<f64>() / total
    } else {
        0.0
    };
    let peaks = intensity[..config.peaks.min(len)]
        .iter()
        .map(|&(idx, v)| {
            let mut k = vec![0.0; d];
            let mut r = idx;
            for c in (0..d).rev() {
                k[c] = (r % shape[c]) as f64 / shape[c] as f64;
                r /= shape[c];
            }
            Peak { k, intensity: v }
        })
        .collect();
    Ok(DiffractionEstimate {
        heuristic: true,
        shape,
        points: pts.len(),
        concentration,
        peaks,
    })
}

/// In-place forward DFT along every axis of a row-major array.
fn fft_nd(data: &mut [Complex<f64>], shape: &[usize]) {
    let mut planner = FftPlanner::<f64>::new();
    let mut stride = 1;
    for axis in (0..shape.len()).rev() {
        let n = shape[axis];
        let fft = planner.plan_fft_forward(n);
        let block = n * stride;
        let mut line = vec![Complex::new(0.0, 0.0); n];
        for start in (0..data.len()).step_by(block) {
            for off in 0..stride {
                for (k, z) in line.iter_mut().enumerate() {
                    *z = data[start + off + k * stride];
                }
                fft.process(&mut line);
                for (k, z) in line.iter().enumerate() {
                    data[start + off + k * stride] = *z;
                }
            }
        }
        stride = block;
    }
}
