use num_rational::Ratio;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use super::window::{ColorField, VanHoveSequence};
use crate::error::{Error, Result};
use crate::lattice::SubgroupHnf;
use crate::serde_util::ratio_vec;
use crate::substitution::{Region, SubstitutionSystem};

/// `dens(Λ △ (Q^n α + Λ))` per lattice point of a fixed window, for
/// `n = 0 ..= N`.
#[derive(Clone, Debug, Serialize)]
pub struct DensitySeries {
    pub alpha: Vec<i64>,
    #[serde(serialize_with = "ratio_vec")]
    pub values: Vec<Ratio<i128>>,
    /// Scale of the window `F_N` used for every term.
    pub window_n: u32,
    pub window_points: usize,
    /// Fraction of the window discarded at each `n` because the shifted
    /// partner falls outside.
    pub discarded: Vec<f64>,
}

impl DensitySeries {
    pub fn values_f64(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// Whether each term exceeds the previous one by at most `margin` plus
    /// the discarded fraction.
    pub fn is_monotone_within(&self, margin: f64) -> bool {
        let v = self.values_f64();
        (1..v.len()).all(|n| v[n] <= v[n - 1] + margin + self.discarded[n])
    }
}

/// Compares the colors at `x` and `x - Q^n α` over the window `F_N` of the
/// sequence's largest scale, counting only `x` whose partner is in the
/// window.
pub fn density_symdiff_series(
    sys: &SubstitutionSystem,
    lprime: &SubgroupHnf,
    alpha: &[i64],
    n_max: u32,
    seq: &VanHoveSequence,
    budget: usize,
) -> Result<DensitySeries> {
    let d = sys.dim();
    if alpha.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: alpha.len(),
        });
    }
    if !lprime.contains(alpha) {
        return Err(Error::NotInLprime(alpha.to_vec()));
    }
    let Some(&window_n) = seq.scales.iter().max() else {
        return Err(Error::InvalidSystem("van Hove sequence has no scales".into()));
    };
    let window = seq.window(sys, window_n)?;
    let points = window.points();
    let field = ColorField::build(sys, &window.bounds, budget)?;
    let minimum = points.len() / 4;
    let mut values = Vec::new();
    let mut discarded = Vec::new();
    for n in 0..=n_max {
        let s = sys.q.pow(n)?.mul_vec(alpha)?;
        let (compared, differ) = points
            .par_iter()
            .map(|x| {
                let y: Vec<i64> = x.iter().zip(&s).map(|(a, b)| a - b).collect();
                if !window.contains(&y) {
                    return (0u64, 0u64);
                }
                (1, (field.mask(x) != field.mask(&y)) as u64)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        if (compared as usize) < minimum.max(1) {
            return Err(Error::WindowTooSmall {
                size: compared as usize,
                minimum: minimum.max(1),
            });
        }
        values.push(Ratio::new(differ as i128, compared as i128));
        discarded.push(1.0 - compared as f64 / points.len() as f64);
    }
    Ok(DensitySeries {
        alpha: alpha.to_vec(),
        values,
        window_n,
        window_points: points.len(),
        discarded,
    })
}

/// Largest window scale `n` whose bounding box has at most `target` lattice
/// points.
pub fn window_scale_for(sys: &SubstitutionSystem, target: u128) -> Result<u32> {
    let mut n = 0;
    while n < 64 {
        let w = super::window::Window::new(sys, &vec![0; sys.dim()], &vec![1; sys.dim()], n + 1)?;
        if w.bounds.lattice_count() > target {
            break;
        }
        n += 1;
    }
    Ok(n)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateFit {
    /// `values[n] ≈ C r^n` over the tail; `r = 0` for a series that is
    /// identically zero there.
    Decay { r: f64, c: f64 },
    NonVanishing { tail_min: f64 },
}

pub const NON_VANISHING_FLOOR: f64 = 0.05;

/// Least-squares fit of `log values[n]` against `n` over the second half of
/// the series.
pub fn rate_fit(series: &DensitySeries) -> Result<RateFit> {
    let v = series.values_f64();
    if v.len() < 5 {
        return Err(Error::InvalidSystem(format!(
            "rate fit needs at least 5 terms, got {}",
            v.len()
        )));
    }
    let tail = &v[v.len() / 2..];
    let tail_min = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    if tail_min > NON_VANISHING_FLOOR {
        return Ok(RateFit::NonVanishing { tail_min });
    }
    let start = v.len() / 2;
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(k, &x)| ((start + k) as f64, x.ln()))
        .collect();
    if pts.len() < 2 {
        return Ok(RateFit::Decay { r: 0.0, c: 0.0 });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(RateFit::Decay {
        r: slope.exp(),
        c: (my - slope * mx).exp(),
    })
}

/// Default shifts: the basis of `L'`.
pub fn default_alphas(lprime: &SubgroupHnf) -> Vec<Vec<i64>> {
    lprime.columns().to_vec()
}

/// Whether a region is big enough for the density series: used to pick
/// `N` so that `Q^N α` stays within a quarter of the window extent.
pub fn max_shift_level(sys: &SubstitutionSystem, alpha: &[i64], window: &Region, cap: u32) -> u32 {
    let extent: Vec<i64> = window.lo.iter().zip(&window.hi).map(|(a, b)| b - a + 1).collect();
    let mut n = 0;
    while n < cap {
        let Ok(s) = sys.q.pow(n + 1).and_then(|m| m.mul_vec(alpha)) else {
            break;
        };
        if s.iter().zip(&extent).any(|(x, e)| 4 * x.abs() > *e) {
            break;
        }
        n += 1;
    }
    n
}
