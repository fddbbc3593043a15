use serde::Serialize;

use crate::error::{Error, Result};
use crate::substitution::{central_patch, substitution_matrix, SubstitutionSystem};

use super::TileAttractor;

#[derive(Clone, Debug, Serialize)]
pub struct VolumeVector {
    pub volumes: Vec<f64>,
    /// Points of each color per unit volume, from a generated patch.
    pub densities: Vec<f64>,
    /// `Σ_i dens(Λ_i) Vol(A_i)`.
    pub covering_multiplicity: f64,
    /// `max_j |q Vol_j - Σ_i S_ij Vol_i| / max Vol`.
    pub residual: f64,
}

/// Point densities per unit volume on a box around the middle of a large
/// generated patch.
pub fn covering_density(sys: &SubstitutionSystem, budget: usize) -> Result<Vec<f64>> {
    let radius = match sys.dim() {
        1 => 1024,
        2 => 24,
        _ => 8,
    };
    let (region, patch) = central_patch(sys, radius, budget)?;
    let vol = region.lattice_count() as f64 * sys.lattice.covolume();
    Ok(patch.counts().iter().map(|&c| c as f64 / vol).collect())
}

/// Measures the rasterized tiles and checks that their volumes form a left
/// eigenvector of `S` for `q`.
pub fn volume_check(
    sys: &SubstitutionSystem,
    attractors: &[TileAttractor],
    budget: usize,
) -> Result<VolumeVector> {
    let m = sys.num_colors();
    if attractors.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: attractors.len(),
        });
    }
    for a in attractors {
        if !a.converged {
            return Err(Error::NotConverged {
                gap: a.hausdorff_gap,
                threshold: 2.0 * a.grid.h,
            });
        }
    }
    let volumes: Vec<f64> = attractors.iter().map(|a| a.grid.volume()).collect();
    let s = substitution_matrix(sys);
    let q = sys.q.q() as f64;
    let vmax = volumes.iter().cloned().fold(0.0, f64::max);
    let residual = (0..m)
        .map(|j| {
            let sv: f64 = (0..m).map(|i| s.get(i, j) as f64 * volumes[i]).sum();
            (q * volumes[j] - sv).abs()
        })
        .fold(0.0, f64::max)
        / vmax;
    let densities = covering_density(sys, budget)?;
    let covering_multiplicity = densities.iter().zip(&volumes).map(|(a, b)| a * b).sum();
    Ok(VolumeVector {
        volumes,
        densities,
        covering_multiplicity,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli_io::bundled;
    use crate::substitution::DEFAULT_POINT_BUDGET;
    use crate::tiles::{solve_adjoint, RasterMode};

    #[test]
    fn period_doubling_tiles_the_line() {
        let s = bundled("period-doubling").unwrap();
        let att = solve_adjoint(&s, 1.0 / 64.0, None, RasterMode::Outer).unwrap();
        let v = volume_check(&s, &att, DEFAULT_POINT_BUDGET).unwrap();
        assert!((v.covering_multiplicity - 1.0).abs() < 0.05);
        assert!(v.volumes.iter().all(|x| (x - 1.0).abs() < 0.05));
    }

    #[test]
    fn unconverged_attractors_are_rejected() {
        let s = bundled("gasket").unwrap();
        let att = solve_adjoint(&s, 1.0 / 64.0, Some(2), RasterMode::Outer).unwrap();
        assert!(matches!(
            volume_check(&s, &att, DEFAULT_POINT_BUDGET),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn shipped_systems_refine_with_the_cell_size() {
        for name in crate::cli_io::bundled_names() {
            let sys = bundled(name).unwrap();
            let mut prev: Option<(f64, Vec<f64>)> = None;
            for k in [16.0, 32.0, 64.0] {
                let h = 1.0 / k;
                let att = solve_adjoint(&sys, h, None, RasterMode::Outer).unwrap();
                let v = volume_check(&sys, &att, DEFAULT_POINT_BUDGET).unwrap();
                let fractions: Vec<f64> = att.iter().map(|a| a.grid.boundary_fraction()).collect();
                let boundary_cells: f64 = att
                    .iter()
                    .zip(&fractions)
                    .map(|(a, f)| f * a.grid.count() as f64)
                    .sum();
                let min_vol = v.volumes.iter().cloned().fold(f64::INFINITY, f64::min);
                assert!(v.residual <= 3.0 * h * boundary_cells / min_vol, "{name} h = {h}");
                if let Some((r, f)) = &prev {
                    assert!(v.residual <= *r, "{name} h = {h}");
                    for (now, before) in fractions.iter().zip(f) {
                        assert!(now < before, "{name} h = {h}: {now} vs {before}");
                    }
                }
                let c = v.covering_multiplicity;
                if k == 64.0 {
                    assert!((c - c.round()).abs() <= 0.05 && c.round() >= 1.0, "{name}: {c}");
                    let expected = if name == "ex310" { 2.0 } else { 1.0 };
                    assert_eq!(c.round(), expected, "{name}");
                }
                prev = Some((v.residual, fractions));
            }
        }
    }
}
