//! Integer lattice arithmetic: bases, Hermite normal forms, expansion maps
//! and the finite quotients `L / Q^k L'`.

mod coset;
mod expansion;
mod hnf;
mod matrix;

pub use coset::{coset_relation, quotient_index, reduce_mod, Coset, CosetRelation, CosetSpace};
pub use expansion::{
    eigenvalues, is_expansive, is_inflation, ExpansionMatrix, Expansivity, ExpansivityVerdict,
    EIGEN_TOL, INDETERMINATE_MARGIN,
};
pub use hnf::{hnf, SubgroupHnf};
pub use matrix::IntMatrix;
pub(crate) use matrix::{inf_norm, mat_mul_f64, mat_vec_f64};

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// A lattice in R^d given by the columns of a rational matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBasis {
    dim: usize,
    /// Row-major `dim x dim` matrix; column `c` is the c-th basis vector.
    entries: Vec<Rational>,
}

impl LatticeBasis {
    pub fn new(rows: &[Vec<Rational>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidSystem("lattice of dimension 0".into()));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            entries.extend_from_slice(r);
        }
        let b = LatticeBasis { dim, entries };
        if b.det_exact()?.is_zero() {
            return Err(Error::InvalidSystem("lattice basis is singular".into()));
        }
        Ok(b)
    }

    /// The standard lattice Z^d.
    pub fn standard(dim: usize) -> Self {
        Self::scaled(dim, Rational::from_integer(1))
    }

    pub fn scaled(dim: usize, s: Rational) -> Self {
        let mut entries = vec![Rational::zero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = s;
        }
        LatticeBasis { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> Rational {
        self.entries[r * self.dim + c]
    }

    pub fn rows(&self) -> Vec<Vec<Rational>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn rows_f64(&self) -> Vec<Vec<f64>> {
        self.entries
            .chunks(self.dim)
            .map(|r| r.iter().map(ratio_f64).collect())
            .collect()
    }

    /// Exact determinant by Gaussian elimination over 128-bit rationals.
    pub fn det_exact(&self) -> Result<Ratio<i128>> {
        let n = self.dim;
        let mut a: Vec<Vec<Ratio<i128>>> = self
            .entries
            .chunks(n)
            .map(|r| {
                r.iter()
                    .map(|x| Ratio::new(*x.numer() as i128, *x.denom() as i128))
                    .collect()
            })
            .collect();
        let mut det = Ratio::from_integer(1i128);
        for k in 0..n {
            let Some(p) = (k..n).find(|&r| !a[r][k].is_zero()) else {
                return Ok(Ratio::zero());
            };
            if p != k {
                a.swap(p, k);
                det = -det;
            }
            let pivot = a[k][k];
            det *= pivot;
            for i in k + 1..n {
                let f = a[i][k] / pivot;
                if f.is_zero() {
                    continue;
                }
                for j in k..n {
                    let v = a[k][j] * f;
                    a[i][j] -= v;
                }
            }
        }
        Ok(det)
    }

    /// Volume of a fundamental domain.
    pub fn covolume(&self) -> f64 {
        self.det_exact()
            .map(|d| d.abs().to_f64().unwrap_or(f64::NAN))
            .unwrap_or(f64::NAN)
    }

    /// Ambient coordinates `B x` of a lattice point.
    pub fn to_ambient(&self, x: &[i64]) -> Vec<f64> {
        self.to_ambient_f64(&x.iter().map(|&v| v as f64).collect::<Vec<_>>())
    }

    pub fn to_ambient_f64(&self, x: &[f64]) -> Vec<f64> {
        mat_vec_f64(&self.rows_f64(), x)
    }

    /// `B^{-1}` as floats, mapping ambient to lattice coordinates.
    pub fn inverse_f64(&self) -> Vec<Vec<f64>> {
        let n = self.dim;
        let mut a = self.rows_f64();
        let mut inv: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs()))
                .unwrap_or(k);
            a.swap(k, p);
            inv.swap(k, p);
            let piv = a[k][k];
            for j in 0..n {
                a[k][j] /= piv;
                inv[k][j] /= piv;
            }
            for i in 0..n {
                if i != k {
                    let f = a[i][k];
                    for j in 0..n {
                        a[i][j] -= f * a[k][j];
                        inv[i][j] -= f * inv[k][j];
                    }
                }
            }
        }
        inv
    }
}

pub(crate) fn ratio_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_integer_lattice() {
        let b = LatticeBasis::scaled(1, Rational::new(1, 2));
        assert_eq!(b.covolume(), 0.5);
        assert_eq!(b.to_ambient(&[3]), vec![1.5]);
        assert_eq!(b.inverse_f64(), vec![vec![2.0]]);
    }

    #[test]
    fn singular_basis_rejected() {
        let one = Rational::from_integer(1);
        let rows = vec![vec![one, one], vec![one, one]];
        assert!(LatticeBasis::new(&rows).is_err());
    }

    #[test]
    fn triangular_lattice_covolume() {
        let h = Rational::new(1, 2);
        let rows = vec![
            vec![Rational::from_integer(1), h],
            vec![Rational::zero(), Rational::from_integer(2)],
        ];
        let b = LatticeBasis::new(&rows).unwrap();
        assert_eq!(b.covolume(), 2.0);
        let inv = b.inverse_f64();
        let x = b.to_ambient(&[1, 1]);
        let back = mat_vec_f64(&inv, &x);
        assert!((back[0] - 1.0).abs() < 1e-12 && (back[1] - 1.0).abs() < 1e-12);
    }
}
