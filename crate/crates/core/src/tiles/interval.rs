use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::Result;
use crate::serde_util::ratio_str;
use crate::substitution::SubstitutionSystem;

type R = Ratio<i128>;

/// A closed interval of the line with exact endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExactInterval {
    #[serde(serialize_with = "ratio_str")]
    pub lo: R,
    #[serde(serialize_with = "ratio_str")]
    pub hi: R,
}

impl ExactInterval {
    pub fn length(&self) -> R {
        self.hi - self.lo
    }

    pub fn contains(&self, x: R) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Index of `l_j` or `u_j` in the unknown vector `(l, u)`.
fn var(end_is_upper: bool, j: usize, m: usize) -> usize {
    if end_is_upper {
        m + j
    } else {
        j
    }
}

/// For each equation `Q x_k = opt_{(i,d)} (d + x_{src})`, the chosen
/// `(source variable, digit)`.
type Policy = Vec<(usize, i64)>;

/// The candidates `(source variable, digit)` of every equation and whether
/// it takes the minimum.
fn equations(sys: &SubstitutionSystem) -> Vec<(bool, Vec<(usize, i64)>)> {
    let m = sys.num_colors();
    let q = sys.q.matrix().get(0, 0);
    let mut eqs = Vec::with_capacity(2 * m);
    for upper in [false, true] {
        for j in 0..m {
            // Q A_j = [Q l_j, Q u_j] when Q > 0 and [Q u_j, Q l_j] otherwise
            let takes_min = (q > 0) != upper;
            let cands = (0..m)
                .flat_map(|i| {
                    sys.digits[i][j]
                        .iter()
                        .map(move |d| (var(!takes_min, i, m), d[0]))
                })
                .collect();
            eqs.push((takes_min, cands));
        }
    }
    eqs
}

fn pick<T: PartialOrd + Copy>(takes_min: bool, vals: impl Iterator<Item = (usize, T)>) -> usize {
    let mut best: Option<(usize, T)> = None;
    for (k, v) in vals {
        best = match best {
            None => Some((k, v)),
            Some((_, b)) if (takes_min && v < b) || (!takes_min && v > b) => Some((k, v)),
            keep => keep,
        };
    }
    best.map_or(0, |b| b.0)
}

/// Solves `Q x = P x + c` exactly for a fixed policy.
fn solve_policy(q: i64, policy: &Policy) -> Option<Vec<R>> {
    let n = policy.len();
    let mut a = vec![vec![R::zero(); n + 1]; n];
    for (k, &(src, d)) in policy.iter().enumerate() {
        a[k][k] += R::from_integer(q as i128);
        a[k][src] -= R::from_integer(1);
        a[k][n] = R::from_integer(d as i128);
    }
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let p = a[col][col];
        for x in a[col].iter_mut() {
            *x /= p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col];
                for c in col..=n {
                    let v = a[col][c] * f;
                    a[r][c] -= v;
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n]).collect())
}

/// Exact supports of a one-dimensional system whose attractors are all
/// intervals, in ambient coordinates; `None` when some attractor is not an
/// interval.
pub fn exact_intervals(sys: &SubstitutionSystem) -> Result<Option<Vec<ExactInterval>>> {
    if sys.dim() != 1 {
        return Ok(None);
    }
    let m = sys.num_colors();
    let q = sys.q.matrix().get(0, 0);
    let eqs = equations(sys);
    if eqs.iter().any(|(_, c)| c.is_empty()) {
        return Ok(None);
    }
    // value iteration for a starting policy
    let mut x = vec![0.0f64; 2 * m];
    for _ in 0..200 {
        x = eqs
            .iter()
            .map(|(takes_min, c)| {
                let k = pick(*takes_min, c.iter().enumerate().map(|(k, &(s, d))| (k, d as f64 + x[s])));
                let (s, d) = c[k];
                (d as f64 + x[s]) / q as f64
            })
            .collect();
    }
    let mut policy: Policy = eqs
        .iter()
        .map(|(takes_min, c)| {
            let k = pick(*takes_min, c.iter().enumerate().map(|(k, &(s, d))| (k, d as f64 + x[s])));
            c[k]
        })
        .collect();
    for _ in 0..(4 * m + 4) {
        let Some(sol) = solve_policy(q, &policy) else {
            return Ok(None);
        };
        let value = |&(s, d): &(usize, i64)| R::from_integer(d as i128) + sol[s];
        let improved: Policy = eqs
            .iter()
            .map(|(takes_min, c)| c[pick(*takes_min, c.iter().enumerate().map(|(k, e)| (k, value(e))))])
            .collect();
        let consistent = (0..eqs.len())
            .all(|k| value(&improved[k]) == R::from_integer(q as i128) * sol[k]);
        if !consistent {
            policy = improved;
            continue;
        }
        let iv: Vec<(R, R)> = (0..m).map(|j| (sol[j], sol[m + j])).collect();
        if iv.iter().any(|(l, u)| l >= u) {
            return Ok(None);
        }
        // the pieces d + A_i must leave no gap inside Q A_j
        for j in 0..m {
            let mut pieces: Vec<(R, R)> = (0..m)
                .flat_map(|i| {
                    let (l, u) = iv[i];
                    sys.digits[i][j].iter().map(move |d| {
                        let d = R::from_integer(d[0] as i128);
                        (d + l, d + u)
                    })
                })
                .collect();
            pieces.sort();
            let mut reach = pieces[0].1;
            for p in &pieces[1..] {
                if p.0 > reach {
                    return Ok(None);
                }
                reach = reach.max(p.1);
            }
        }
        let b = sys.lattice.get(0, 0);
        let b = R::new(*b.numer() as i128, *b.denom() as i128);
        return Ok(Some(
            iv.into_iter()
                .map(|(l, u)| {
                    let (a, c) = (l * b, u * b);
                    if b.is_negative() {
                        ExactInterval { lo: c, hi: a }
                    } else {
                        ExactInterval { lo: a, hi: c }
                    }
                })
                .collect(),
        ));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::substitution::test_systems::*;

    fn ends(v: &[ExactInterval]) -> Vec<(String, String)> {
        v.iter().map(|e| (e.lo.to_string(), e.hi.to_string())).collect()
    }

    #[test]
    fn period_doubling_unit_intervals() {
        let iv = exact_intervals(&period_doubling()).unwrap().unwrap();
        assert_eq!(ends(&iv), vec![("0".into(), "1".into()); 2]);
    }

    #[test]
    fn abcd_unit_intervals() {
        let iv = exact_intervals(&abcd()).unwrap().unwrap();
        assert_eq!(ends(&iv), vec![("0".into(), "1".into()); 4]);
    }

    #[test]
    fn negative_expansion() {
        // -2A = A ∪ (A + 1): -2u = l and -2l = u + 1
        let s = one_dim("neg", -2, vec![vec![vec![0, 1]]], vec![vec![0]]);
        let iv = exact_intervals(&s).unwrap().unwrap();
        assert_eq!(ends(&iv), vec![("-2/3".into(), "1/3".into())]);
    }

    #[test]
    fn cantor_set_is_not_an_interval() {
        let s = one_dim("cantor", 3, vec![vec![vec![0, 2]]], vec![vec![0]]);
        assert!(exact_intervals(&s).unwrap().is_none());
    }
}
