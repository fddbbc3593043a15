use std::fmt;

use crate::error::{Error, Result};

/// Dense row-major integer matrix with overflow-checked arithmetic.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(IntMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(IntMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn scalar(n: usize, s: i64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = s;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        self.data.chunks(self.cols.max(1)).map(|c| c.to_vec()).collect()
    }

    pub fn column(&self, c: usize) -> Vec<i64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc: i128 = 0;
                for k in 0..self.cols {
                    acc += self.get(r, k) as i128 * other.get(k, c) as i128;
                }
                out.set(r, c, i64::try_from(acc).map_err(|_| Error::Overflow("matrix product"))?);
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[i64]) -> Result<Vec<i64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        (0..self.rows)
            .map(|r| {
                let acc: i128 = (0..self.cols)
                    .map(|k| self.get(r, k) as i128 * v[k] as i128)
                    .sum();
                i64::try_from(acc).map_err(|_| Error::Overflow("matrix-vector product"))
            })
            .collect()
    }

    /// `self * v` for a real vector.
    pub fn mul_vec_f64(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|k| self.get(r, k) as f64 * v[k]).sum())
            .collect()
    }

    pub fn pow(&self, k: u32) -> Result<IntMatrix> {
        let mut acc = Self::identity(self.rows);
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> Result<i128> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(1);
        }
        let mut a: Vec<Vec<i128>> = self
            .to_rows()
            .into_iter()
            .map(|r| r.into_iter().map(|x| x as i128).collect())
            .collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n - 1 {
            if a[k][k] == 0 {
                match (k + 1..n).find(|&r| a[r][k] != 0) {
                    Some(r) => {
                        a.swap(k, r);
                        sign = -sign;
                    }
                    None => return Ok(0),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = a[i][j]
                        .checked_mul(a[k][k])
                        .and_then(|x| x.checked_sub(a[i][k].checked_mul(a[k][j])?))
                        .ok_or(Error::Overflow("determinant"))?;
                    a[i][j] = v / prev;
                }
            }
            prev = a[k][k];
        }
        Ok(sign * a[n - 1][n - 1])
    }

    /// Adjugate matrix, so that `adj(A) * A = det(A) * I`.
    pub fn adjugate(&self) -> Result<Vec<Vec<i128>>> {
        let n = self.rows;
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        if n == 1 {
            return Ok(vec![vec![1]]);
        }
        let mut adj = vec![vec![0i128; n]; n];
        for r in 0..n {
            for c in 0..n {
                let mut minor = Vec::with_capacity((n - 1) * (n - 1));
                for i in (0..n).filter(|&i| i != r) {
                    for j in (0..n).filter(|&j| j != c) {
                        minor.push(self.get(i, j));
                    }
                }
                let m = IntMatrix::new(n - 1, n - 1, minor)?.det()?;
                let sign = if (r + c) % 2 == 0 { 1 } else { -1 };
                // transpose of the cofactor matrix
                adj[c][r] = sign * m;
            }
        }
        Ok(adj)
    }

    /// Characteristic polynomial coefficients, lowest degree first and monic,
    /// via Faddeev-LeVerrier (all intermediate values stay integral).
    pub fn char_poly(&self) -> Result<Vec<i128>> {
        let n = self.rows;
        let a: Vec<Vec<i128>> = self
            .to_rows()
            .into_iter()
            .map(|r| r.into_iter().map(|x| x as i128).collect())
            .collect();
        let mut coeffs = vec![0i128; n + 1];
        coeffs[n] = 1;
        let mut m = vec![vec![0i128; n]; n];
        for k in 1..=n {
            // M_k = A M_{k-1} + c_{n-k+1} I
            let mut next = vec![vec![0i128; n]; n];
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0i128;
                    for l in 0..n {
                        acc = acc
                            .checked_add(a[i][l].checked_mul(m[l][j]).ok_or(Error::Overflow("char poly"))?)
                            .ok_or(Error::Overflow("char poly"))?;
                    }
                    next[i][j] = acc;
                }
                next[i][i] += coeffs[n - k + 1];
            }
            m = next;
            let mut tr = 0i128;
            for i in 0..n {
                for l in 0..n {
                    tr = tr
                        .checked_add(a[i][l].checked_mul(m[l][i]).ok_or(Error::Overflow("char poly"))?)
                        .ok_or(Error::Overflow("char poly"))?;
                }
            }
            coeffs[n - k] = -tr / k as i128;
        }
        Ok(coeffs)
    }

    pub fn inverse_f64(&self) -> Result<Vec<Vec<f64>>> {
        let det = self.det()?;
        if det == 0 {
            return Err(Error::InvalidSystem("singular matrix".into()));
        }
        let adj = self.adjugate()?;
        Ok(adj
            .into_iter()
            .map(|r| r.into_iter().map(|x| x as f64 / det as f64).collect())
            .collect())
    }
}

/// Induced infinity norm (max absolute row sum).
pub(crate) fn inf_norm(m: &[Vec<f64>]) -> f64 {
    m.iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn mat_mul_f64(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let p = b.first().map_or(0, |r| r.len());
    let k = b.len();
    (0..n)
        .map(|i| (0..p).map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum()).collect())
        .collect()
}

pub(crate) fn mat_vec_f64(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_adjugate() {
        let m = IntMatrix::from_rows(&[vec![2, 1], vec![1, 3]]).unwrap();
        assert_eq!(m.det().unwrap(), 5);
        let adj = m.adjugate().unwrap();
        assert_eq!(adj, vec![vec![3, -1], vec![-1, 2]]);
        let z = IntMatrix::from_rows(&[vec![0, 0], vec![0, 2]]).unwrap();
        assert_eq!(z.det().unwrap(), 0);
        let p = IntMatrix::from_rows(&[vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]]).unwrap();
        assert_eq!(p.det().unwrap(), 1);
    }

    #[test]
    fn char_poly_of_rotation_scaling() {
        // [[1,-1],[1,1]] has characteristic polynomial x^2 - 2x + 2
        let m = IntMatrix::from_rows(&[vec![1, -1], vec![1, 1]]).unwrap();
        assert_eq!(m.char_poly().unwrap(), vec![2, -2, 1]);
        let q = IntMatrix::scalar(1, 3);
        assert_eq!(q.char_poly().unwrap(), vec![-3, 1]);
    }

    #[test]
    fn pow_and_overflow() {
        let q = IntMatrix::scalar(2, 2);
        assert_eq!(q.pow(3).unwrap(), IntMatrix::scalar(2, 8));
        let big = IntMatrix::scalar(1, 1 << 40);
        assert!(matches!(big.pow(2), Err(Error::Overflow(_))));
    }
}
