//! Modular coincidence over the finite quotients `L / Q^M L'`, and window
//! approximations built from the same residue classes.

mod windows;

pub use windows::{
    interior_disjointness, model_set_report, window_measures, window_tree, window_trees,
    CpsDescription, DisjointnessReport, Membership, ModelSetReport, QuotientLevel, WindowCosetTree,
    WindowMeasures, WindowSummary,
};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Coset, CosetSpace, SubgroupHnf};
use crate::substitution::{
    central_patch, color_representatives, compute_lprime, LPrime, SubstitutionSystem,
};

pub const DEFAULT_M_MAX: u32 = 8;
/// Cap on the number of composite maps enumerated for one table.
pub const DEFAULT_TABLE_BUDGET: usize = 4_000_000;

/// Data shared by every level of the coincidence analysis.
#[derive(Clone, Debug)]
pub struct CoincidenceContext {
    pub lprime: LPrime,
    pub space: CosetSpace,
    /// A point `y_j` of each color, so that `Λ_j ⊂ y_j + L'`.
    pub representatives: Vec<Vec<i64>>,
    pub budget: usize,
}

impl CoincidenceContext {
    pub fn new(sys: &SubstitutionSystem, lprime: LPrime, budget: usize) -> Result<Self> {
        let representatives = color_representatives(sys, budget)?;
        let space = CosetSpace::new(lprime.lprime.clone(), sys.q.clone())?;
        Ok(CoincidenceContext {
            lprime,
            space,
            representatives,
            budget,
        })
    }

    /// Computes `L'` with a stabilization window of 2.
    pub fn prepare(sys: &SubstitutionSystem) -> Result<Self> {
        let lp = compute_lprime(sys, 2, crate::substitution::DEFAULT_POINT_BUDGET)?;
        Self::new(sys, lp, DEFAULT_TABLE_BUDGET)
    }

    pub fn lprime_hnf(&self) -> &SubgroupHnf {
        self.space.lprime()
    }

    pub fn index(&self, level: u32) -> Result<u128> {
        self.space.index(level)
    }
}

/// One composite map `x ↦ Q^M x + t` of `Φ^M`, applied to color `source`
/// and landing in `row`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ClassEntry {
    pub row: usize,
    pub source: usize,
    pub translation: Vec<i64>,
}

/// Composite maps of `Φ^M` grouped by the coset of `Q^M L'` containing
/// their image.
#[derive(Clone, Debug, Serialize)]
pub struct ResidueClassTable {
    pub level: u32,
    pub index: u128,
    pub classes: BTreeMap<Coset, Vec<ClassEntry>>,
}

impl ResidueClassTable {
    pub fn total_entries(&self) -> usize {
        self.classes.values().map(Vec::len).sum()
    }

    /// The row of a class whose entries all lie in one row.
    pub fn single_row(entries: &[ClassEntry]) -> Option<usize> {
        let first = entries.first()?.row;
        entries.iter().all(|e| e.row == first).then_some(first)
    }
}

/// Enumerates all composite maps of `Φ^level` symbolically: the class of a
/// map acting on color `j` is the coset of its image of `y_j`.
pub fn residue_table(
    ctx: &mut CoincidenceContext,
    sys: &SubstitutionSystem,
    level: u32,
) -> Result<ResidueClassTable> {
    if level == 0 {
        return Err(Error::InvalidSystem("residue table level must be at least 1".into()));
    }
    let index = ctx.index(level)?;
    ctx.space.ensure_level(level)?;
    let m = sys.num_colors();
    let qm = sys.q.pow(level)?;
    let per_source: Vec<Result<Vec<(Coset, ClassEntry)>>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let y = &ctx.representatives[j];
            let mut frontier: Vec<(usize, Vec<i64>)> = vec![(j, y.clone())];
            for _ in 0..level {
                let mut next = Vec::new();
                for (c, x) in &frontier {
                    let qx = sys.q.apply(x)?;
                    for i in 0..m {
                        for d in &sys.digits[i][*c] {
                            next.push((i, qx.iter().zip(d).map(|(a, b)| a + b).collect()));
                        }
                    }
                }
                if next.len() > ctx.budget {
                    return Err(Error::BudgetExceeded {
                        what: "residue table",
                        limit: ctx.budget,
                    });
                }
                frontier = next;
            }
            let qy = qm.mul_vec(y)?;
            frontier
                .into_iter()
                .map(|(row, image)| {
                    let coset = ctx.space.reduce(&image, level)?;
                    let translation = image.iter().zip(&qy).map(|(a, b)| a - b).collect();
                    Ok((
                        coset,
                        ClassEntry {
                            row,
                            source: j,
                            translation,
                        },
                    ))
                })
                .collect()
        })
        .collect();
    let mut classes: BTreeMap<Coset, Vec<ClassEntry>> = BTreeMap::new();
    let mut total = 0usize;
    for part in per_source {
        for (coset, entry) in part? {
            total += 1;
            if total > ctx.budget {
                return Err(Error::BudgetExceeded {
                    what: "residue table",
                    limit: ctx.budget,
                });
            }
            classes.entry(coset).or_default().push(entry);
        }
    }
    for v in classes.values_mut() {
        v.sort();
    }
    Ok(ResidueClassTable {
        level,
        index,
        classes,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub coset: Coset,
    pub row: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoincidenceReport {
    pub found: bool,
    /// Level of the witnesses, or the last level searched.
    pub level: u32,
    pub witnesses: Vec<Witness>,
    pub search_bound: u32,
    /// Whether every lattice point of a test box carries a color.
    pub covering_verified: bool,
}

/// Whether every lattice point of a box around the middle of a large
/// generated patch carries a color.
pub fn check_covering(sys: &SubstitutionSystem, budget: usize) -> Result<bool> {
    let radius: i64 = match sys.dim() {
        1 => 32,
        2 => 6,
        _ => 2,
    };
    let (region, patch) = match central_patch(sys, radius, budget) {
        Ok(x) => x,
        Err(e) if e.is_budget() => return Ok(false),
        Err(e) => return Err(e),
    };
    let mut all: Vec<&Vec<i64>> = patch.lists().iter().flatten().collect();
    all.sort_unstable();
    all.dedup();
    Ok(all.len() as u128 == region.lattice_count())
}

/// Scans levels `1..=m_max` for a class of `Φ^M` lying in a single row.
pub fn find_modular_coincidence(
    ctx: &mut CoincidenceContext,
    sys: &SubstitutionSystem,
    m_max: u32,
) -> Result<CoincidenceReport> {
    let covering_verified = check_covering(sys, ctx.budget)?;
    for level in 1..=m_max {
        let table = residue_table(ctx, sys, level)?;
        let witnesses: Vec<Witness> = table
            .classes
            .iter()
            .filter_map(|(c, e)| {
                ResidueClassTable::single_row(e).map(|row| Witness {
                    coset: c.clone(),
                    row,
                })
            })
            .collect();
        if !witnesses.is_empty() {
            return Ok(CoincidenceReport {
                found: true,
                level,
                witnesses,
                search_bound: m_max,
                covering_verified,
            });
        }
    }
    Ok(CoincidenceReport {
        found: false,
        level: m_max,
        witnesses: Vec::new(),
        search_bound: m_max,
        covering_verified,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::substitution::test_systems::*;

    #[test]
    fn abcd_level_one() {
        let sys = abcd();
        let mut ctx = CoincidenceContext::prepare(&sys).unwrap();
        let table = residue_table(&mut ctx, &sys, 1).unwrap();
        assert_eq!(table.index, 6);
        assert_eq!(table.total_entries(), 12);
        // x ↦ 3x + 1 in row b acting on color a lies in 1 + 6Z
        let one = &table.classes[&Coset { level: 1, rep: vec![1] }];
        assert!(one.contains(&ClassEntry { row: 1, source: 0, translation: vec![1] }));
        let rep = find_modular_coincidence(&mut ctx, &sys, 8).unwrap();
        assert!(rep.found && rep.covering_verified);
        assert_eq!(rep.level, 1);
        let w: Vec<(i64, usize)> = rep.witnesses.iter().map(|w| (w.coset.rep[0], w.row)).collect();
        assert_eq!(w, vec![(3, 3), (5, 1)]);
    }

    #[test]
    fn period_doubling_and_thue_morse() {
        let pd = period_doubling();
        let mut ctx = CoincidenceContext::prepare(&pd).unwrap();
        let rep = find_modular_coincidence(&mut ctx, &pd, 8).unwrap();
        assert_eq!((rep.found, rep.level), (true, 1));
        assert_eq!(rep.witnesses.len(), 1);
        assert_eq!((rep.witnesses[0].coset.rep.clone(), rep.witnesses[0].row), (vec![0], 0));

        let tm = thue_morse();
        let mut ctx = CoincidenceContext::prepare(&tm).unwrap();
        let rep = find_modular_coincidence(&mut ctx, &tm, 8).unwrap();
        assert!(!rep.found);
        assert_eq!(rep.search_bound, 8);
    }

    #[test]
    fn one_color_system_is_a_single_row() {
        let s = one_dim("full", 2, vec![vec![vec![0, 1]]], vec![vec![0]]);
        let mut ctx = CoincidenceContext::prepare(&s).unwrap();
        let t = residue_table(&mut ctx, &s, 1).unwrap();
        assert_eq!(t.classes.len(), 2);
        assert!(t.classes.values().all(|e| ResidueClassTable::single_row(e) == Some(0)));
    }

    use crate::cli_io::{bundled, bundled_names};
    use crate::substitution::substitution_matrix;

    #[test]
    fn classes_partition_the_composite_maps() {
        for name in bundled_names() {
            let sys = bundled(name).unwrap();
            let mut ctx = CoincidenceContext::prepare(&sys).unwrap();
            let s = substitution_matrix(&sys);
            for level in 1..=3 {
                let table = residue_table(&mut ctx, &sys, level).unwrap();
                let sm = s.pow(level).unwrap();
                let total: i64 = sm.to_rows().iter().flatten().sum();
                assert_eq!(table.total_entries() as i64, total, "{name} level {level}");
            }
        }
    }

    #[test]
    fn refined_classes_sit_in_one_coarse_class() {
        for name in bundled_names() {
            let sys = bundled(name).unwrap();
            let mut ctx = CoincidenceContext::prepare(&sys).unwrap();
            for level in 1..=2 {
                let coarse = residue_table(&mut ctx, &sys, level).unwrap();
                let fine = residue_table(&mut ctx, &sys, level + 1).unwrap();
                for (c, entries) in &fine.classes {
                    let parent = ctx.space.reduce(&c.rep, level).unwrap();
                    let containing: Vec<_> = coarse
                        .classes
                        .keys()
                        .filter(|k| {
                            ctx.space.relation(c, k).unwrap()
                                == crate::lattice::CosetRelation::FirstInSecond
                        })
                        .collect();
                    assert_eq!(containing, vec![&parent], "{name} {c:?}");
                    if let Some(row) = ResidueClassTable::single_row(&coarse.classes[&parent]) {
                        assert_eq!(ResidueClassTable::single_row(entries), Some(row), "{name} {c:?}");
                    }
                }
            }
        }
    }
}
