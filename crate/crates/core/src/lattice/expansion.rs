use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use super::{IntMatrix, LatticeBasis};
use crate::error::{Error, Result};

/// Eigenvalues this close to the unit circle cannot be classified.
pub const INDETERMINATE_MARGIN: f64 = 1e-6;
/// Tolerance for deciding that a numerically reconstructed coefficient is
/// an integer.
pub const EIGEN_TOL: f64 = 1e-9;

/// Integer expansion map in lattice coordinates, with `q = |det Q| >= 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpansionMatrix {
    entries: IntMatrix,
    absdet: u64,
}

impl ExpansionMatrix {
    pub fn new(entries: IntMatrix) -> Result<Self> {
        if !entries.is_square() || entries.rows() == 0 {
            return Err(Error::InvalidSystem(
                "expansion matrix must be square and non-empty".into(),
            ));
        }
        let det = entries.det()?;
        let absdet = u64::try_from(det.unsigned_abs())
            .map_err(|_| Error::Overflow("expansion determinant"))?;
        if absdet < 2 {
            return Err(Error::InvalidSystem(format!(
                "|det Q| = {absdet}, must be at least 2"
            )));
        }
        Ok(ExpansionMatrix { entries, absdet })
    }

    pub fn scalar(dim: usize, s: i64) -> Result<Self> {
        Self::new(IntMatrix::scalar(dim, s))
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.entries
    }

    /// `q = |det Q|`.
    pub fn q(&self) -> u64 {
        self.absdet
    }

    pub fn apply(&self, v: &[i64]) -> Result<Vec<i64>> {
        self.entries.mul_vec(v)
    }

    /// Q x + d.
    pub fn affine(&self, x: &[i64], d: &[i64]) -> Result<Vec<i64>> {
        let mut y = self.entries.mul_vec(x)?;
        for (yi, di) in y.iter_mut().zip(d) {
            *yi = yi.checked_add(*di).ok_or(Error::Overflow("affine map"))?;
        }
        Ok(y)
    }

    pub fn pow(&self, k: u32) -> Result<IntMatrix> {
        self.entries.pow(k)
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|r| (0..n).all(|c| r == c || self.entries.get(r, c) == 0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansivityVerdict {
    Expansive,
    NotExpansive,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Expansivity {
    pub verdict: ExpansivityVerdict,
    /// `min |eigenvalue| - 1`.
    pub margin: f64,
    pub eigen_moduli: Vec<f64>,
}

impl Expansivity {
    pub fn is_expansive(&self) -> bool {
        self.verdict == ExpansivityVerdict::Expansive
    }
}

/// Eigenvalues as roots of the exact characteristic polynomial, taken from
/// the eigenvalues of its companion matrix.
pub fn eigenvalues(q: &IntMatrix) -> Result<Vec<Complex<f64>>> {
    let n = q.rows();
    if !q.is_square() {
        return Err(Error::DimensionMismatch {
            expected: q.rows(),
            found: q.cols(),
        });
    }
    let poly = q.char_poly()?;
    if n == 1 {
        return Ok(vec![Complex::new(-poly[0] as f64, 0.0)]);
    }
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        companion[(i, n - 1)] = -(poly[i] as f64);
    }
    Ok(companion.complex_eigenvalues().iter().copied().collect())
}

pub fn is_expansive(q: &IntMatrix) -> Expansivity {
    let eig = match eigenvalues(q) {
        Ok(e) if e.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => e,
        _ => {
            return Expansivity {
                verdict: ExpansivityVerdict::Indeterminate,
                margin: 0.0,
                eigen_moduli: Vec::new(),
            }
        }
    };
    let mut moduli: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    let margin = moduli.first().copied().unwrap_or(0.0) - 1.0;
    let verdict = if margin.abs() < INDETERMINATE_MARGIN {
        ExpansivityVerdict::Indeterminate
    } else if margin > EIGEN_TOL {
        ExpansivityVerdict::Expansive
    } else {
        ExpansivityVerdict::NotExpansive
    };
    Expansivity {
        verdict,
        margin,
        eigen_moduli: moduli,
    }
}

/// Whether `q` is an inflation for the lattice: nonsingular and with
/// `∩_k Q^k L = {0}`.
///
/// For non-expansive matrices the intersection is nontrivial exactly when
/// the characteristic polynomial has a monic integer factor with constant
/// term ±1; factors are searched over subsets of the numeric roots.
pub fn is_inflation(q: &IntMatrix, lattice: &LatticeBasis) -> Result<bool> {
    if q.rows() != lattice.dim() || !q.is_square() {
        return Err(Error::DimensionMismatch {
            expected: lattice.dim(),
            found: q.rows(),
        });
    }
    if q.det()? == 0 {
        return Ok(false);
    }
    if is_expansive(q).is_expansive() {
        return Ok(true);
    }
    let roots = eigenvalues(q)?;
    let n = roots.len();
    if n > 16 {
        return Err(Error::Unsupported(format!(
            "inflation check for dimension {n}"
        )));
    }
    for mask in 1u32..(1 << n) {
        let mut coeffs = vec![Complex::new(1.0, 0.0)];
        for (i, r) in roots.iter().enumerate() {
            if mask & (1 << i) != 0 {
                let mut next = vec![Complex::new(0.0, 0.0); coeffs.len() + 1];
                for (k, c) in coeffs.iter().enumerate() {
                    next[k + 1] += *c;
                    next[k] -= *c * r;
                }
                coeffs = next;
            }
        }
        let integral = coeffs.iter().all(|c| {
            c.im.abs() < 1e-6 && (c.re - c.re.round()).abs() < 1e-6
        });
        if integral && (coeffs[0].re.round().abs() - 1.0).abs() < EIGEN_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}
