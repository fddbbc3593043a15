use std::collections::HashSet;

use serde::Serialize;

use super::{apply, Cluster, SubstitutionSystem};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Legality {
    /// `translation + P ⊆ Φ^k({0} in color `color`)`.
    Legal {
        color: usize,
        k: u32,
        translation: Vec<i64>,
    },
    /// No witness with `k <= K_max`; says nothing about larger `k`.
    NotFoundUpTo(u32),
}

impl Legality {
    pub fn is_legal(&self) -> bool {
        matches!(self, Legality::Legal { .. })
    }
}

/// Searches supertiles `Φ^k` of single points for a translate of `p`.
pub fn legality_check(
    sys: &SubstitutionSystem,
    p: &Cluster,
    k_max: u32,
    budget: usize,
) -> Result<Legality> {
    let m = sys.num_colors();
    let d = sys.dim();
    if p.colors() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: p.colors(),
        });
    }
    let Some(anchor_color) = (0..m).find(|&i| !p.color(i).is_empty()) else {
        return Ok(Legality::Legal {
            color: 0,
            k: 0,
            translation: vec![0; d],
        });
    };
    let anchor = &p.color(anchor_color)[0];
    let mut tiles: Vec<Cluster> = (0..m).map(|j| Cluster::singleton(m, j, vec![0; d])).collect();
    for k in 0..=k_max {
        if k > 0 {
            for t in tiles.iter_mut() {
                *t = apply(sys, t)?;
                if t.total() > budget {
                    return Err(Error::BudgetExceeded {
                        what: "legality search",
                        limit: budget,
                    });
                }
            }
        }
        for (j, tile) in tiles.iter().enumerate() {
            if let Some(t) = find_translate(tile, p, anchor_color, anchor) {
                return Ok(Legality::Legal {
                    color: j,
                    k,
                    translation: t,
                });
            }
        }
    }
    Ok(Legality::NotFoundUpTo(k_max))
}

fn find_translate(tile: &Cluster, p: &Cluster, anchor_color: usize, anchor: &[i64]) -> Option<Vec<i64>> {
    let sets: Vec<HashSet<&Vec<i64>>> = tile.lists().iter().map(|l| l.iter().collect()).collect();
    tile.color(anchor_color).iter().find_map(|y| {
        let t: Vec<i64> = y.iter().zip(anchor).map(|(a, b)| a - b).collect();
        let fits = p.lists().iter().enumerate().all(|(i, ps)| {
            ps.iter().all(|x| {
                let s: Vec<i64> = x.iter().zip(&t).map(|(a, b)| a + b).collect();
                sets[i].contains(&s)
            })
        });
        fits.then_some(t)
    })
}

#[cfg(test)]
mod tests {
    use super::super::test_systems::*;
    use super::*;

    #[test]
    fn gasket_seed_is_legal() {
        let g = gasket();
        let r = legality_check(&g, &g.seed, 4, 1 << 20).unwrap();
        match r {
            Legality::Legal { k, .. } => assert!(k <= 3),
            _ => panic!("gasket seed should be legal"),
        }
    }

    #[test]
    fn single_point_is_legal_at_level_zero() {
        let pd = period_doubling();
        let p = Cluster::singleton(2, 1, vec![5]);
        assert_eq!(
            legality_check(&pd, &p, 3, 1000).unwrap(),
            Legality::Legal { color: 1, k: 0, translation: vec![-5] }
        );
    }

    #[test]
    fn witness_is_exact() {
        let s = abcd();
        let p = s.seed.clone();
        if let Legality::Legal { color, k, translation } = legality_check(&s, &p, 5, 1 << 20).unwrap() {
            let mut tile = Cluster::singleton(4, color, vec![0]);
            for _ in 0..k {
                tile = apply(&s, &tile).unwrap();
            }
            assert!(p.translate(&translation).is_subset(&tile));
        } else {
            panic!("abcd seed should be legal");
        }
    }

    #[test]
    fn legality_is_stable_in_the_bound() {
        for name in crate::cli_io::bundled_names() {
            let sys = crate::cli_io::bundled(name).unwrap();
            let first = legality_check(&sys, &sys.seed, 6, crate::substitution::DEFAULT_POINT_BUDGET).unwrap();
            if let Legality::Legal { k, .. } = first {
                for kmax in k..=k + 2 {
                    let again = legality_check(&sys, &sys.seed, kmax, crate::substitution::DEFAULT_POINT_BUDGET).unwrap();
                    assert!(matches!(again, Legality::Legal { .. }), "{name} at K_max = {kmax}");
                }
            }
        }
    }
}
