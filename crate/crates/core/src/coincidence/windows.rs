use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::{residue_table, CoincidenceContext, CoincidenceReport, ResidueClassTable};
use crate::error::{Error, Result};
use crate::lattice::Coset;
use crate::serde_util::{ratio_str, ratio_vec};
use crate::substitution::{substitution_matrix, SubstitutionSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Membership {
    In,
    Out,
    Boundary,
}

/// Classification of the cosets of `Q^depth L'` against one window.
/// Cosets missing from `classification` carry no point and count as OUT.
#[derive(Clone, Debug, Serialize)]
pub struct WindowCosetTree {
    pub color: usize,
    pub depth: u32,
    pub index: u128,
    #[serde(skip)]
    pub classification: BTreeMap<Coset, Membership>,
    pub in_count: usize,
    pub boundary_count: usize,
    #[serde(serialize_with = "ratio_str")]
    pub measure_in: Ratio<i128>,
    #[serde(serialize_with = "ratio_str")]
    pub measure_boundary: Ratio<i128>,
}

impl WindowCosetTree {
    pub fn in_cosets(&self) -> impl Iterator<Item = &Coset> {
        self.classification
            .iter()
            .filter(|(_, m)| **m == Membership::In)
            .map(|(c, _)| c)
    }
}

/// Rows reached by each distinct composite map of a class. A map listed in
/// several rows (a corrupt system) yields one group with several rows.
fn image_groups(entries: &[crate::coincidence::ClassEntry]) -> Vec<BTreeSet<usize>> {
    let mut groups: BTreeMap<(usize, &[i64]), BTreeSet<usize>> = BTreeMap::new();
    for e in entries {
        groups
            .entry((e.source, e.translation.as_slice()))
            .or_default()
            .insert(e.row);
    }
    groups.into_values().collect()
}

fn classify(groups: &[BTreeSet<usize>], color: usize) -> Membership {
    let hits = groups.iter().filter(|g| g.contains(&color)).count();
    if hits == 0 {
        Membership::Out
    } else if hits == groups.len() {
        Membership::In
    } else {
        Membership::Boundary
    }
}

fn trees_from_table(table: &ResidueClassTable, colors: usize) -> Vec<WindowCosetTree> {
    let groups: Vec<(&Coset, Vec<BTreeSet<usize>>)> = table
        .classes
        .iter()
        .map(|(c, e)| (c, image_groups(e)))
        .collect();
    (0..colors)
        .map(|color| {
            let classification: BTreeMap<Coset, Membership> = groups
                .iter()
                .map(|(c, g)| ((*c).clone(), classify(g, color)))
                .collect();
            let in_count = classification.values().filter(|m| **m == Membership::In).count();
            let boundary_count = classification
                .values()
                .filter(|m| **m == Membership::Boundary)
                .count();
            let idx = table.index as i128;
            WindowCosetTree {
                color,
                depth: table.level,
                index: table.index,
                classification,
                in_count,
                boundary_count,
                measure_in: Ratio::new(in_count as i128, idx),
                measure_boundary: Ratio::new(boundary_count as i128, idx),
            }
        })
        .collect()
}

/// Window trees of every color at one depth, sharing one residue table.
pub fn window_trees(
    ctx: &mut CoincidenceContext,
    sys: &SubstitutionSystem,
    depth: u32,
) -> Result<Vec<WindowCosetTree>> {
    let table = residue_table(ctx, sys, depth)?;
    Ok(trees_from_table(&table, sys.num_colors()))
}

pub fn window_tree(
    ctx: &mut CoincidenceContext,
    sys: &SubstitutionSystem,
    color: usize,
    depth: u32,
) -> Result<WindowCosetTree> {
    if color >= sys.num_colors() {
        return Err(Error::InvalidSystem(format!("no color {color}")));
    }
    Ok(window_trees(ctx, sys, depth)?.swap_remove(color))
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowMeasures {
    pub depth: u32,
    #[serde(serialize_with = "ratio_vec")]
    pub inner: Vec<Ratio<i128>>,
    #[serde(serialize_with = "ratio_vec")]
    pub outer: Vec<Ratio<i128>>,
    /// `max_i |w_i - (S w)_i / q|` for the outer estimate.
    pub residual: f64,
}

fn eigen_residual(sys: &SubstitutionSystem, w: &[Ratio<i128>]) -> f64 {
    let s = substitution_matrix(sys);
    let q = sys.q.q() as i128;
    let m = w.len();
    (0..m)
        .map(|i| {
            let sw = (0..m).fold(Ratio::zero(), |acc: Ratio<i128>, j| {
                acc + w[j] * Ratio::from_integer(s.get(i, j) as i128)
            });
            (w[i] - sw / Ratio::from_integer(q)).to_f64().unwrap_or(f64::NAN).abs()
        })
        .fold(0.0, f64::max)
}

pub fn window_measures(
    ctx: &mut CoincidenceContext,
    sys: &SubstitutionSystem,
    depth: u32,
) -> Result<WindowMeasures> {
    let trees = window_trees(ctx, sys, depth)?;
    let inner: Vec<_> = trees.iter().map(|t| t.measure_in).collect();
    let outer: Vec<_> = trees
        .iter()
        .map(|t| t.measure_in + t.measure_boundary)
        .collect();
    Ok(WindowMeasures {
        depth,
        residual: eigen_residual(sys, &outer),
        inner,
        outer,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DisjointnessReport {
    pub depth: u32,
    pub disjoint: bool,
    /// Cosets that are IN for more than one color, with those colors.
    pub violations: Vec<(Coset, Vec<usize>)>,
}

pub fn interior_disjointness(
    ctx: &mut CoincidenceContext,
    sys: &SubstitutionSystem,
    depth: u32,
) -> Result<DisjointnessReport> {
    let trees = window_trees(ctx, sys, depth)?;
    Ok(disjointness_from_trees(&trees, depth))
}

fn disjointness_from_trees(trees: &[WindowCosetTree], depth: u32) -> DisjointnessReport {
    let mut owners: BTreeMap<&Coset, Vec<usize>> = BTreeMap::new();
    for t in trees {
        for c in t.in_cosets() {
            owners.entry(c).or_default().push(t.color);
        }
    }
    let violations: Vec<(Coset, Vec<usize>)> = owners
        .into_iter()
        .filter(|(_, v)| v.len() > 1)
        .map(|(c, v)| (c.clone(), v))
        .collect();
    DisjointnessReport {
        depth,
        disjoint: violations.is_empty(),
        violations,
    }
}

/// Replaces complete families of `q` sibling cosets by their parent,
/// repeatedly, giving the coarsest description of a union of cosets.
fn coarsen(ctx: &CoincidenceContext, q: u64, cosets: Vec<Coset>) -> Result<Vec<Coset>> {
    let mut current: BTreeSet<Coset> = cosets.into_iter().collect();
    let top = current.iter().map(|c| c.level).max().unwrap_or(0);
    for level in (1..=top).rev() {
        let mut families: BTreeMap<Coset, Vec<Coset>> = BTreeMap::new();
        for c in current.iter().filter(|c| c.level == level) {
            families
                .entry(ctx.space.reduce(&c.rep, level - 1)?)
                .or_default()
                .push(c.clone());
        }
        for (parent, children) in families {
            if children.len() as u64 == q {
                for c in &children {
                    current.remove(c);
                }
                current.insert(parent);
            }
        }
    }
    Ok(current.into_iter().collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientLevel {
    pub level: u32,
    /// Basis vectors of `Q^level L'`.
    pub modulus: Vec<Vec<i64>>,
    pub index: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct CpsDescription {
    pub physical_space: String,
    pub internal_group: Vec<QuotientLevel>,
    pub embedding: String,
    /// `[L : L']`, carried explicitly next to the tower.
    pub lattice_quotient_index: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowSummary {
    pub color: String,
    /// Coarsest cosets whose union is the IN part at the final depth.
    pub in_cosets: Vec<Coset>,
    #[serde(serialize_with = "ratio_str")]
    pub measure_in: Ratio<i128>,
    #[serde(serialize_with = "ratio_str")]
    pub measure_boundary: Ratio<i128>,
    /// Boundary measure at depths `1..=depth`.
    #[serde(serialize_with = "ratio_vec")]
    pub boundary_sequence: Vec<Ratio<i128>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelSetReport {
    pub depth: u32,
    pub cps: CpsDescription,
    pub windows: Vec<WindowSummary>,
    pub interior_disjoint: bool,
    pub empty_interior_colors: Vec<String>,
    pub pure_point: Option<bool>,
    pub verdict: String,
}

/// Describes the cut and project scheme and windows to depth `depth` and
/// states the verdict the coincidence data supports.
pub fn model_set_report(
    ctx: &mut CoincidenceContext,
    sys: &SubstitutionSystem,
    depth: u32,
    coincidence: &CoincidenceReport,
    density_nonvanishing: Option<bool>,
) -> Result<ModelSetReport> {
    let m = sys.num_colors();
    let mut boundary_seq: Vec<Vec<Ratio<i128>>> = vec![Vec::new(); m];
    let mut last = Vec::new();
    let mut disjoint = true;
    for k in 1..=depth {
        let trees = window_trees(ctx, sys, k)?;
        disjoint &= disjointness_from_trees(&trees, k).disjoint;
        for t in &trees {
            boundary_seq[t.color].push(t.measure_boundary);
        }
        last = trees;
    }
    let tower = (0..=depth)
        .map(|l| {
            Ok(QuotientLevel {
                level: l,
                modulus: ctx.space.modulus_owned(l)?.columns().to_vec(),
                index: ctx.index(l)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cps = CpsDescription {
        physical_space: format!("R^{}", sys.dim()),
        internal_group: tower,
        embedding: "t -> (t, t)".into(),
        lattice_quotient_index: ctx.index(0)?,
    };
    let mut windows = Vec::with_capacity(m);
    let mut empty_interior = Vec::new();
    for t in &last {
        let ins: Vec<Coset> = t.in_cosets().cloned().collect();
        if ins.is_empty() {
            empty_interior.push(sys.colors[t.color].clone());
        }
        windows.push(WindowSummary {
            color: sys.colors[t.color].clone(),
            in_cosets: coarsen(ctx, sys.q.q(), ins)?,
            measure_in: t.measure_in,
            measure_boundary: t.measure_boundary,
            boundary_sequence: boundary_seq[t.color].clone(),
        });
    }
    let (pure_point, verdict) = if coincidence.found && disjoint && coincidence.covering_verified {
        (Some(true), "pure point; regular model set".to_string())
    } else if coincidence.found {
        (
            None,
            "modular coincidence found, but window disjointness or covering unverified".to_string(),
        )
    } else {
        let mut v = format!(
            "no modular coincidence found up to M_max={}; coincidence, density and model-set criteria unverified",
            coincidence.search_bound
        );
        if density_nonvanishing == Some(true) {
            v.push_str("; density series non-vanishing");
        }
        (None, v)
    };
    Ok(ModelSetReport {
        depth,
        cps,
        windows,
        interior_disjoint: disjoint,
        empty_interior_colors: empty_interior,
        pure_point,
        verdict,
    })
}
