use serde::Serialize;

use super::SubstitutionSystem;
use crate::error::{Error, Result};
use crate::lattice::{ExpansionMatrix, IntMatrix};

/// `S_ij = |D_ij|`.
pub fn substitution_matrix(sys: &SubstitutionSystem) -> IntMatrix {
    let m = sys.num_colors();
    let mut s = IntMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            s.set(i, j, sys.digits[i][j].len() as i64);
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Primitivity {
    pub primitive: bool,
    /// Least `l` with `S^l > 0`.
    pub power: Option<u32>,
}

/// Searches `l = 1 ..= m^2 - 2m + 2` for a strictly positive power.
pub fn is_primitive(s: &IntMatrix) -> Primitivity {
    let m = s.rows();
    if m == 0 || !s.is_square() {
        return Primitivity { primitive: false, power: None };
    }
    let pattern: Vec<Vec<bool>> = (0..m).map(|i| (0..m).map(|j| s.get(i, j) > 0).collect()).collect();
    let bound = (m * m + 2 - 2 * m) as u32;
    let mut cur = pattern.clone();
    for l in 1..=bound {
        if cur.iter().flatten().all(|&b| b) {
            return Primitivity { primitive: true, power: Some(l) };
        }
        cur = (0..m)
            .map(|i| (0..m).map(|j| (0..m).any(|k| cur[i][k] && pattern[k][j])).collect())
            .collect();
    }
    Primitivity { primitive: false, power: None }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PfData {
    pub eigenvalue: f64,
    /// Scaled so that `Σ r_i l_i = 1`.
    pub left_vector: Vec<f64>,
    /// Scaled to sum 1.
    pub right_vector: Vec<f64>,
    pub residual: f64,
    /// `|eigenvalue - |det Q|| <= 1e-6`.
    pub consistent: bool,
}

const PF_TOL: f64 = 1e-6;

fn power_vector(s: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let m = s.len();
    let mut v = vec![1.0 / m as f64; m];
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        // iterate with S + I, which has the same eigenvectors and no
        // other eigenvalue of maximal modulus
        let mut w: Vec<f64> = (0..m)
            .map(|i| v[i] + (0..m).map(|j| s[i][j] * v[j]).sum::<f64>())
            .collect();
        let norm: f64 = w.iter().sum();
        for x in &mut w {
            *x /= norm;
        }
        let diff = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = w;
        lambda = norm - 1.0;
        if diff < 1e-16 {
            break;
        }
    }
    (lambda, v)
}

/// Perron-Frobenius eigenvalue and eigenvectors by power iteration.
pub fn pf_data(s: &IntMatrix, q: &ExpansionMatrix) -> Result<PfData> {
    if !is_primitive(s).primitive {
        return Err(Error::NotPrimitive);
    }
    let m = s.rows();
    let sf: Vec<Vec<f64>> = s.to_rows().iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
    let st: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| sf[j][i]).collect()).collect();
    let (lambda, right) = power_vector(&sf);
    let (_, left_raw) = power_vector(&st);
    let dot: f64 = right.iter().zip(&left_raw).map(|(a, b)| a * b).sum();
    let left: Vec<f64> = left_raw.iter().map(|x| x / dot).collect();
    let residual = (0..m)
        .map(|i| {
            let sv: f64 = (0..m).map(|j| sf[i][j] * right[j]).sum();
            let vs: f64 = (0..m).map(|j| left[j] * sf[j][i]).sum();
            (sv - lambda * right[i]).abs().max((vs - lambda * left[i]).abs())
        })
        .fold(0.0, f64::max);
    Ok(PfData {
        eigenvalue: lambda,
        consistent: (lambda - q.q() as f64).abs() <= PF_TOL,
        left_vector: left,
        right_vector: right,
        residual,
    })
}
