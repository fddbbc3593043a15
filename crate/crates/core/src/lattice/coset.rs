use serde::Serialize;

use super::{hnf, ExpansionMatrix, SubgroupHnf};
use crate::error::{Error, Result};

/// The coset `rep + Q^level L'`, with `rep` canonical.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Coset {
    pub level: u32,
    pub rep: Vec<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CosetRelation {
    Equal,
    FirstInSecond,
    SecondInFirst,
    Disjoint,
}

/// Moduli `Q^k L'` for a fixed full-rank `L'`, computed once per level.
#[derive(Clone, Debug)]
pub struct CosetSpace {
    q: ExpansionMatrix,
    levels: Vec<SubgroupHnf>,
}

impl CosetSpace {
    pub fn new(lprime: SubgroupHnf, q: ExpansionMatrix) -> Result<Self> {
        if !lprime.is_full_rank() {
            return Err(Error::NotFullRank {
                rank: lprime.rank(),
                dim: lprime.dim(),
            });
        }
        if lprime.dim() != q.dim() {
            return Err(Error::DimensionMismatch {
                expected: lprime.dim(),
                found: q.dim(),
            });
        }
        let space = CosetSpace {
            q,
            levels: vec![lprime],
        };
        let next = space.image(&space.levels[0])?;
        if !space.levels[0].contains_subgroup(&next) {
            return Err(Error::InvalidSystem("Q L' is not contained in L'".into()));
        }
        Ok(space)
    }

    fn image(&self, h: &SubgroupHnf) -> Result<SubgroupHnf> {
        let gens = h
            .columns()
            .iter()
            .map(|c| self.q.apply(c))
            .collect::<Result<Vec<_>>>()?;
        hnf(h.dim(), &gens)
    }

    pub fn lprime(&self) -> &SubgroupHnf {
        &self.levels[0]
    }

    pub fn expansion(&self) -> &ExpansionMatrix {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    /// Make sure `Q^k L'` is cached.
    pub fn ensure_level(&mut self, k: u32) -> Result<()> {
        while self.levels.len() <= k as usize {
            let next = self.image(self.levels.last().expect("level 0 present"))?;
            self.levels.push(next);
        }
        Ok(())
    }

    /// `Q^k L'`; call [`CosetSpace::ensure_level`] first or use
    /// [`CosetSpace::modulus_owned`].
    pub fn modulus(&self, k: u32) -> Option<&SubgroupHnf> {
        self.levels.get(k as usize)
    }

    pub fn modulus_owned(&self, k: u32) -> Result<SubgroupHnf> {
        if let Some(h) = self.modulus(k) {
            return Ok(h.clone());
        }
        let mut h = self.levels.last().expect("level 0 present").clone();
        for _ in self.levels.len() - 1..k as usize {
            h = self.image(&h)?;
        }
        Ok(h)
    }

    pub fn reduce(&self, x: &[i64], k: u32) -> Result<Coset> {
        let rep = match self.modulus(k) {
            Some(h) => h.reduce(x)?,
            None => self.modulus_owned(k)?.reduce(x)?,
        };
        Ok(Coset { level: k, rep })
    }

    /// `|L / Q^k L'|`.
    pub fn index(&self, k: u32) -> Result<u128> {
        quotient_index(self.lprime(), &self.q, k)
    }

    pub fn relation(&self, c1: &Coset, c2: &Coset) -> Result<CosetRelation> {
        let (coarse, fine, swapped) = if c1.level <= c2.level {
            (c1, c2, false)
        } else {
            (c2, c1, true)
        };
        let diff: Vec<i64> = fine
            .rep
            .iter()
            .zip(&coarse.rep)
            .map(|(a, b)| a.checked_sub(*b).ok_or(Error::Overflow("coset difference")))
            .collect::<Result<_>>()?;
        let contained = match self.modulus(coarse.level) {
            Some(h) => h.contains(&diff),
            None => self.modulus_owned(coarse.level)?.contains(&diff),
        };
        Ok(match (contained, c1.level == c2.level, swapped) {
            (false, _, _) => CosetRelation::Disjoint,
            (true, true, _) => CosetRelation::Equal,
            (true, false, false) => CosetRelation::SecondInFirst,
            (true, false, true) => CosetRelation::FirstInSecond,
        })
    }
}

/// `|L / Q^k L'| = q^k [L : L']`, with `L'` given in coordinates of `L`.
pub fn quotient_index(lprime: &SubgroupHnf, q: &ExpansionMatrix, k: u32) -> Result<u128> {
    let base = lprime.index().ok_or(Error::NotFullRank {
        rank: lprime.rank(),
        dim: lprime.dim(),
    })?;
    (q.q() as u128)
        .checked_pow(k)
        .and_then(|p| p.checked_mul(base))
        .ok_or(Error::Overflow("quotient index"))
}

/// Canonical coset of `x` modulo `Q^k L'`.
pub fn reduce_mod(x: &[i64], lprime: &SubgroupHnf, q: &ExpansionMatrix, k: u32) -> Result<Coset> {
    CosetSpace::new(lprime.clone(), q.clone())?.reduce(x, k)
}

pub fn coset_relation(space: &CosetSpace, c1: &Coset, c2: &Coset) -> Result<CosetRelation> {
    space.relation(c1, c2)
}
