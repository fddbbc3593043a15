//! Hermite normal form of integer subgroups of Z^d.
//!
//! Subgroups are stored as lower-triangular column echelon bases: column `c`
//! has its first nonzero entry (the pivot, always positive) in row
//! `pivots[c]`, pivot rows increase strictly, and every entry to the left of
//! a pivot lies in `[0, pivot)`. This form is unique for a given subgroup.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Canonical basis of a subgroup of Z^d.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubgroupHnf {
    dim: usize,
    columns: Vec<Vec<i64>>,
    pivots: Vec<usize>,
}

/// Arithmetic needed by the elimination; implemented for a fast checked
/// machine-word path and an arbitrary-precision fallback.
trait HnfInt: Clone + PartialEq + std::fmt::Debug {
    fn from_i64(v: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn add(&self, o: &Self) -> Option<Self>;
    fn sub(&self, o: &Self) -> Option<Self>;
    fn mul(&self, o: &Self) -> Option<Self>;
    fn neg(&self) -> Option<Self>;
    fn div_floor(&self, o: &Self) -> Self;
    fn div_exact(&self, o: &Self) -> Self;
    fn to_i64(&self) -> Option<i64>;
    fn zero() -> Self {
        Self::from_i64(0)
    }
    fn one() -> Self {
        Self::from_i64(1)
    }
}

impl HnfInt for i128 {
    fn from_i64(v: i64) -> Self {
        v as i128
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn is_negative(&self) -> bool {
        *self < 0
    }
    fn add(&self, o: &Self) -> Option<Self> {
        self.checked_add(*o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        self.checked_sub(*o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(*o)
    }
    fn neg(&self) -> Option<Self> {
        self.checked_neg()
    }
    fn div_floor(&self, o: &Self) -> Self {
        Integer::div_floor(self, o)
    }
    fn div_exact(&self, o: &Self) -> Self {
        self / o
    }
    fn to_i64(&self) -> Option<i64> {
        i64::try_from(*self).ok()
    }
}

impl HnfInt for BigInt {
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn add(&self, o: &Self) -> Option<Self> {
        Some(self + o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn neg(&self) -> Option<Self> {
        Some(-self)
    }
    fn div_floor(&self, o: &Self) -> Self {
        Integer::div_floor(self, o)
    }
    fn div_exact(&self, o: &Self) -> Self {
        self / o
    }
    fn to_i64(&self) -> Option<i64> {
        ToPrimitive::to_i64(self)
    }
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
}

/// Returns (g, s, t) with g = s*a + t*b, g > 0 (a, b not both zero).
fn ext_gcd<T: HnfInt>(a: &T, b: &T) -> Option<(T, T, T)> {
    let (mut r0, mut r1) = (a.clone(), b.clone());
    let (mut s0, mut s1) = (T::one(), T::zero());
    let (mut t0, mut t1) = (T::zero(), T::one());
    while !r1.is_zero() {
        let q = r0.div_floor(&r1);
        let r2 = r0.sub(&q.mul(&r1)?)?;
        let s2 = s0.sub(&q.mul(&s1)?)?;
        let t2 = t0.sub(&q.mul(&t1)?)?;
        r0 = std::mem::replace(&mut r1, r2);
        s0 = std::mem::replace(&mut s1, s2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if r0.is_negative() {
        Some((r0.neg()?, s0.neg()?, t0.neg()?))
    } else {
        Some((r0, s0, t0))
    }
}

fn axpby<T: HnfInt>(a: &T, x: &[T], b: &T, y: &[T]) -> Option<Vec<T>> {
    x.iter()
        .zip(y)
        .map(|(xi, yi)| a.mul(xi)?.add(&b.mul(yi)?))
        .collect()
}

fn first_nonzero<T: HnfInt>(v: &[T]) -> Option<usize> {
    v.iter().position(|x| !x.is_zero())
}

/// Column-echelon elimination; `None` signals overflow in the word path.
fn hnf_columns<T: HnfInt>(gens: &[Vec<i64>]) -> Option<(Vec<Vec<T>>, Vec<usize>)> {
    let mut cols: Vec<Vec<T>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for g in gens {
        let mut v: Vec<T> = g.iter().map(|&x| T::from_i64(x)).collect();
        loop {
            let Some(r) = first_nonzero(&v) else { break };
            match pivots.iter().position(|&p| p == r) {
                Some(c) => {
                    let a = cols[c][r].clone();
                    let b = v[r].clone();
                    let (g, s, t) = ext_gcd(&a, &b)?;
                    let new_col = axpby(&s, &cols[c], &t, &v)?;
                    let ag = a.div_exact(&g);
                    let bg = b.div_exact(&g).neg()?;
                    v = axpby(&ag, &v, &bg, &cols[c])?;
                    cols[c] = new_col;
                }
                None => {
                    if v[r].is_negative() {
                        v = v.iter().map(|x| x.neg()).collect::<Option<Vec<_>>>()?;
                    }
                    let at = pivots.iter().position(|&p| p > r).unwrap_or(pivots.len());
                    pivots.insert(at, r);
                    cols.insert(at, v);
                    break;
                }
            }
        }
        reduce_off_pivot(&mut cols, &pivots)?;
    }
    Some((cols, pivots))
}

fn reduce_off_pivot<T: HnfInt>(cols: &mut [Vec<T>], pivots: &[usize]) -> Option<()> {
    for c in 0..cols.len() {
        let p = pivots[c];
        let piv = cols[c][p].clone();
        for e in 0..c {
            let f = cols[e][p].div_floor(&piv);
            if !f.is_zero() {
                let nf = f.neg()?;
                let pc = cols[c].clone();
                cols[e] = axpby(&T::one(), &cols[e], &nf, &pc)?;
            }
        }
    }
    Some(())
}

/// Hermite normal form of the subgroup generated by `generators` in Z^dim.
///
/// Runs on 128-bit integers and falls back to arbitrary precision when an
/// intermediate value overflows. Fails only when a final entry does not fit
/// in an `i64`.
pub fn hnf(dim: usize, generators: &[Vec<i64>]) -> Result<SubgroupHnf> {
    for g in generators {
        if g.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: g.len(),
            });
        }
    }
    let (columns, pivots) = match hnf_columns::<i128>(generators) {
        Some((cols, pivots)) => (to_i64_columns(&cols)?, pivots),
        None => {
            let (cols, pivots) =
                hnf_columns::<BigInt>(generators).ok_or(Error::Overflow("hnf"))?;
            (to_i64_columns(&cols)?, pivots)
        }
    };
    Ok(SubgroupHnf {
        dim,
        columns,
        pivots,
    })
}

fn to_i64_columns<T: HnfInt>(cols: &[Vec<T>]) -> Result<Vec<Vec<i64>>> {
    cols.iter()
        .map(|c| {
            c.iter()
                .map(|x| x.to_i64().ok_or(Error::Overflow("hnf result")))
                .collect()
        })
        .collect()
}

impl SubgroupHnf {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.dim
    }

    /// Basis vectors (columns of the HNF matrix).
    pub fn columns(&self) -> &[Vec<i64>] {
        &self.columns
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// The d x rank matrix, row by row.
    pub fn basis_rows(&self) -> Vec<Vec<i64>> {
        (0..self.dim)
            .map(|r| self.columns.iter().map(|c| c[r]).collect())
            .collect()
    }

    /// Index in Z^d (product of pivots); `None` when not of full rank.
    pub fn index(&self) -> Option<u128> {
        if !self.is_full_rank() {
            return None;
        }
        self.pivots
            .iter()
            .zip(&self.columns)
            .try_fold(1u128, |acc, (&p, c)| acc.checked_mul(c[p] as u128))
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        if v.len() != self.dim {
            return false;
        }
        let mut w: Vec<i128> = v.iter().map(|&x| x as i128).collect();
        let mut row = 0;
        for (c, &p) in self.pivots.iter().enumerate() {
            if w[row..p].iter().any(|&x| x != 0) {
                return false;
            }
            let piv = self.columns[c][p] as i128;
            if w[p] % piv != 0 {
                return false;
            }
            let f = w[p] / piv;
            for (wi, &ci) in w.iter_mut().zip(&self.columns[c]) {
                *wi -= f * ci as i128;
            }
            row = p + 1;
        }
        w.iter().all(|&x| x == 0)
    }

    /// Canonical representative of `v` modulo this (full-rank) subgroup:
    /// the unique element of the coset with `0 <= rep[pivot] < pivot`.
    pub fn reduce(&self, v: &[i64]) -> Result<Vec<i64>> {
        if !self.is_full_rank() {
            return Err(Error::NotFullRank {
                rank: self.rank(),
                dim: self.dim,
            });
        }
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        let mut w: Vec<i128> = v.iter().map(|&x| x as i128).collect();
        for (c, &p) in self.pivots.iter().enumerate() {
            let piv = self.columns[c][p] as i128;
            let f = w[p].div_euclid(piv);
            if f != 0 {
                for (wi, &ci) in w.iter_mut().zip(&self.columns[c]) {
                    *wi = (ci as i128)
                        .checked_mul(f)
                        .and_then(|x| wi.checked_sub(x))
                        .ok_or(Error::Overflow("coset reduction"))?;
                }
            }
        }
        w.into_iter()
            .map(|x| i64::try_from(x).map_err(|_| Error::Overflow("coset reduction")))
            .collect()
    }

    /// Whether every basis vector of `other` lies in `self`.
    pub fn contains_subgroup(&self, other: &SubgroupHnf) -> bool {
        other.columns.iter().all(|c| self.contains(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_basis() {
        let h = hnf(2, &[vec![2, 0], vec![0, 2]]).unwrap();
        assert_eq!(h.basis_rows(), vec![vec![2, 0], vec![0, 2]]);
        assert_eq!(h.index(), Some(4));
    }

    #[test]
    fn empty_generates_zero() {
        let h = hnf(2, &[]).unwrap();
        assert_eq!(h.rank(), 0);
        assert!(h.contains(&[0, 0]));
        assert!(!h.contains(&[1, 0]));
        assert!(matches!(h.reduce(&[1, 1]), Err(Error::NotFullRank { .. })));
    }

    #[test]
    fn even_sum_sublattice() {
        let h = hnf(2, &[vec![2, 0], vec![0, 2], vec![1, 1]]).unwrap();
        assert_eq!(h.basis_rows(), vec![vec![1, 0], vec![1, 2]]);
        assert_eq!(h.index(), Some(2));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            hnf(2, &[vec![1, 2, 3]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rank_deficient() {
        let h = hnf(3, &[vec![0, 2, 4], vec![0, 3, 6]]).unwrap();
        assert_eq!(h.rank(), 1);
        assert_eq!(h.columns()[0], vec![0, 1, 2]);
        assert!(h.contains(&[0, -5, -10]));
        assert!(!h.contains(&[0, 1, 3]));
    }

    #[test]
    fn bigint_fallback_agrees() {
        // huge coprime entries force the i128 path to overflow mid-elimination
        let a = i64::MAX / 3;
        let gens = vec![vec![a, 1], vec![a - 1, 1], vec![7, a]];
        let fast = hnf(2, &gens).unwrap();
        let (cols, pivots) = hnf_columns::<BigInt>(&gens).unwrap();
        assert_eq!(fast.columns().to_vec(), to_i64_columns(&cols).unwrap());
        assert_eq!(fast.pivots().to_vec(), pivots);
        for g in &gens {
            assert!(fast.contains(g));
        }
    }

    #[test]
    fn reduce_is_canonical() {
        let h = hnf(1, &[vec![6]]).unwrap();
        assert_eq!(h.reduce(&[7]).unwrap(), vec![1]);
        assert_eq!(h.reduce(&[-1]).unwrap(), vec![5]);
    }

    use proptest::prelude::*;

    fn generator_lists() -> impl Strategy<Value = (usize, Vec<Vec<i64>>)> {
        (1usize..=3).prop_flat_map(|d| {
            (Just(d), prop::collection::vec(prop::collection::vec(-20i64..=20, d), 0..6))
        })
    }

    /// Unimodular column operations and redundant generators leave the
    /// generated subgroup unchanged.
    fn shuffle(gens: &[Vec<i64>], ops: &[(usize, usize, i64, u8)]) -> Vec<Vec<i64>> {
        let mut g = gens.to_vec();
        if g.is_empty() {
            return g;
        }
        for &(a, b, f, kind) in ops {
            let (a, b) = (a % g.len(), b % g.len());
            match kind % 4 {
                0 => g.swap(a, b),
                1 => g[a].iter_mut().for_each(|x| *x = -*x),
                2 if a != b => {
                    let src = g[b].clone();
                    g[a].iter_mut().zip(&src).for_each(|(x, y)| *x += f * y);
                }
                _ => {
                    let extra: Vec<i64> = g[a].iter().zip(&g[b]).map(|(x, y)| x - f * y).collect();
                    g.push(extra);
                }
            }
        }
        g
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn same_subgroup_gives_same_hnf(
            (d, gens) in generator_lists(),
            ops in prop::collection::vec((0usize..8, 0usize..8, -3i64..=3, 0u8..4), 0..12),
        ) {
            let other = shuffle(&gens, &ops);
            let a = hnf(d, &gens).unwrap();
            let b = hnf(d, &other).unwrap();
            prop_assert!(gens.iter().all(|g| b.contains(g)));
            prop_assert!(other.iter().all(|g| a.contains(g)));
            prop_assert_eq!(a, b);
        }
    }
}
