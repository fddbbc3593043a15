use serde::Serialize;

use super::{apply, Cluster, SubstitutionSystem};
use crate::error::{Error, Result};
use crate::lattice::{hnf, SubgroupHnf};

const MAX_LEVELS: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LPrime {
    pub lprime: SubgroupHnf,
    /// `L_i = <Λ_i - Λ_i>` as seen at the accepted level.
    pub per_color: Vec<SubgroupHnf>,
    /// First level of the stable run.
    pub level: u32,
    /// Set when the budget ran out before the stable run was long enough.
    pub provisional: bool,
    /// `Q L' ⊆ L_i` for every color.
    pub inflation_inclusion: bool,
}

#[derive(Serialize)]
struct LPrimeView<'a> {
    basis: Vec<Vec<i64>>,
    index: Option<u128>,
    level: u32,
    provisional: bool,
    inflation_inclusion: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
}

impl Serialize for LPrime {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LPrimeView {
            basis: self.lprime.columns().to_vec(),
            index: self.lprime.index(),
            level: self.level,
            provisional: self.provisional,
            inflation_inclusion: self.inflation_inclusion,
            note: self.provisional.then_some("stabilization not confirmed within budget"),
        }
        .serialize(s)
    }
}

fn difference_groups(sys: &SubstitutionSystem, c: &Cluster) -> Result<(SubgroupHnf, Vec<SubgroupHnf>)> {
    let d = sys.dim();
    let mut per_color = Vec::with_capacity(c.colors());
    let mut all_gens = Vec::new();
    for ps in c.lists() {
        let gens: Vec<Vec<i64>> = match ps.first() {
            Some(p0) => ps
                .iter()
                .skip(1)
                .map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect())
                .collect(),
            None => Vec::new(),
        };
        let h = hnf(d, &gens)?;
        all_gens.extend(h.columns().iter().cloned());
        per_color.push(h);
    }
    Ok((hnf(d, &all_gens)?, per_color))
}

/// `L' = L_1 + ... + L_m` read off from `Φ^k(seed)` once it stops growing
/// for `window` consecutive levels.
pub fn compute_lprime(sys: &SubstitutionSystem, window: u32, budget: usize) -> Result<LPrime> {
    let window = window.max(1);
    let mut cluster = sys.seed.clone();
    let (mut current, mut per_color) = difference_groups(sys, &cluster)?;
    let mut run_start = 0u32;
    let mut provisional = true;
    for k in 1..=MAX_LEVELS {
        let next = apply(sys, &cluster)?;
        if next.total() > budget {
            break;
        }
        cluster = next;
        let (h, pc) = difference_groups(sys, &cluster)?;
        if h != current || !h.is_full_rank() {
            current = h;
            run_start = k;
        }
        per_color = pc;
        if current.is_full_rank() && k - run_start >= window {
            provisional = false;
            break;
        }
    }
    let image: Vec<Vec<i64>> = current
        .columns()
        .iter()
        .map(|c| sys.q.apply(c))
        .collect::<Result<_>>()?;
    let image = hnf(sys.dim(), &image)?;
    let inflation_inclusion = per_color.iter().all(|li| li.contains_subgroup(&image));
    Ok(LPrime {
        lprime: current,
        per_color,
        level: run_start,
        provisional,
        inflation_inclusion,
    })
}

/// One point of each color of the fixed point, found by iterating Φ on the
/// seed until every color is present.
pub fn color_representatives(sys: &SubstitutionSystem, budget: usize) -> Result<Vec<Vec<i64>>> {
    let m = sys.num_colors();
    let mut c = sys.seed.clone();
    for _ in 0..=m as u32 + MAX_LEVELS {
        if (0..m).all(|i| !c.color(i).is_empty()) {
            return Ok((0..m).map(|i| c.color(i)[0].clone()).collect());
        }
        c = apply(sys, &c)?;
        if c.total() > budget {
            return Err(Error::BudgetExceeded {
                what: "color representatives",
                limit: budget,
            });
        }
    }
    Err(Error::InvalidSystem("some color never appears in the fixed point".into()))
}
