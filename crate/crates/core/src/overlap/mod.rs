//! Overlaps of tiles against shifted tiles, and the graph they span under
//! subdivision.

mod dump;

pub use dump::{edge_list_string, write_edge_list};

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{hnf, SubgroupHnf};
use crate::statistics::{density_symdiff_series, rate_fit, RateFit, VanHoveSequence};
use crate::substitution::{central_patch, SubstitutionSystem};
use crate::tiles::{ExactInterval, Grid, TileAttractor};

/// Interior-intersection threshold as a fraction of the smaller tile.
pub const DEFAULT_THETA: f64 = 0.02;
/// Cap on overlap classes.
pub const MAX_VERTICES: usize = 1 << 18;
/// Longest list of stuck classes kept in a verdict.
const MAX_WITNESSES: usize = 16;

/// The overlap `(A_i + z, A_j)`, standing for every pair of tiles at
/// `u ∈ Λ_i`, `v ∈ Λ_j` with `u + y - v = z`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct OverlapClass {
    pub left_color: usize,
    pub right_color: usize,
    pub displacement: Vec<i64>,
    pub is_coincidence: bool,
}

impl OverlapClass {
    fn new(i: usize, j: usize, z: Vec<i64>) -> Self {
        let is_coincidence = i == j && z.iter().all(|&x| x == 0);
        OverlapClass {
            left_color: i,
            right_color: j,
            displacement: z,
            is_coincidence,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub to: usize,
    /// False when the interior test for the target was borderline.
    pub certain: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OverlapGraph {
    pub vertices: Vec<OverlapClass>,
    /// Whether the interior test of each vertex was clear-cut.
    pub certain: Vec<bool>,
    pub edges: Vec<Vec<Edge>>,
    pub roots: Vec<usize>,
    pub shifts: Vec<Vec<i64>>,
    /// Interior tests used exact interval arithmetic.
    pub exact: bool,
    pub theta: f64,
}

/// Whether two tiles share interior.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Interior {
    No,
    Uncertain,
    Yes,
}

enum Tester {
    Exact {
        intervals: Vec<ExactInterval>,
        basis: Ratio<i128>,
    },
    Raster {
        h: f64,
        basis: Vec<Vec<f64>>,
        full: Vec<usize>,
        cores: Vec<Grid>,
        core_cells: Vec<Vec<Vec<i64>>>,
        theta: f64,
    },
}

impl Tester {
    fn new(sys: &SubstitutionSystem, att: &[TileAttractor], theta: f64) -> Self {
        if let Some(intervals) = exact_tiles(sys, att) {
            let b = sys.lattice.get(0, 0);
            return Tester::Exact {
                intervals,
                basis: Ratio::new(*b.numer() as i128, *b.denom() as i128),
            };
        }
        let cores: Vec<Grid> = att.iter().map(|a| a.grid.eroded()).collect();
        Tester::Raster {
            h: att[0].grid.h,
            basis: sys.lattice.rows_f64(),
            full: att.iter().map(|a| a.grid.count()).collect(),
            core_cells: cores.iter().map(|g| g.set_cells()).collect(),
            cores,
            theta,
        }
    }

    /// Interior test for `(A_i + z) ∩ A_j`.
    fn test(&self, i: usize, j: usize, z: &[i64]) -> Interior {
        match self {
            Tester::Exact { intervals, basis } => {
                let s = *basis * Ratio::from_integer(z[0] as i128);
                let (a, b) = (&intervals[i], &intervals[j]);
                if (a.lo + s).max(b.lo) < (a.hi + s).min(b.hi) {
                    Interior::Yes
                } else {
                    Interior::No
                }
            }
            Tester::Raster {
                h,
                basis,
                full,
                cores,
                core_cells,
                theta,
            } => {
                let shift: Vec<i64> = basis
                    .iter()
                    .map(|row| {
                        let s: f64 = row.iter().zip(z).map(|(b, &x)| b * x as f64).sum();
                        (s / h).round() as i64
                    })
                    .collect();
                let hits = core_cells[i]
                    .iter()
                    .filter(|c| {
                        let t: Vec<i64> = c.iter().zip(&shift).map(|(a, b)| a + b).collect();
                        cores[j].get_abs(&t)
                    })
                    .count();
                let frac = hits as f64 / full[i].min(full[j]).max(1) as f64;
                if frac > *theta {
                    Interior::Yes
                } else if frac >= theta / 4.0 {
                    Interior::Uncertain
                } else {
                    Interior::No
                }
            }
        }
    }
}

/// Exact intervals when the system is one-dimensional and every raster
/// lies within one cell of its exact interval.
fn exact_tiles(sys: &SubstitutionSystem, att: &[TileAttractor]) -> Option<Vec<ExactInterval>> {
    if sys.dim() != 1 {
        return None;
    }
    att.iter()
        .map(|a| {
            let e = a.exact_interval.clone()?;
            let cells = a.grid.set_cells();
            let h = a.grid.h;
            let lo = cells.first()?[0] as f64 * h;
            let hi = (cells.last()?[0] + 1) as f64 * h;
            let (elo, ehi) = (to_f64(e.lo), to_f64(e.hi));
            ((lo - elo).abs() <= h + 1e-12 && (hi - ehi).abs() <= h + 1e-12).then_some(e)
        })
        .collect()
}

fn to_f64(r: Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Lattice vectors `z` for which the bounding boxes of `A_i + z` and `A_j`
/// can meet, as a box in lattice coordinates.
fn displacement_box(sys: &SubstitutionSystem, gi: &Grid, gj: &Grid) -> (Vec<i64>, Vec<i64>) {
    let d = sys.dim();
    let (ilo, ihi) = bounds(gi);
    let (jlo, jhi) = bounds(gj);
    let h = gi.h;
    let binv = sys.lattice.inverse_f64();
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    for code in 0..(1usize << d) {
        let corner: Vec<f64> = (0..d)
            .map(|c| {
                if code >> c & 1 == 1 {
                    jhi[c] - ilo[c] + h
                } else {
                    jlo[c] - ihi[c] - h
                }
            })
            .collect();
        let x: Vec<f64> = binv
            .iter()
            .map(|row| row.iter().zip(&corner).map(|(a, b)| a * b).sum())
            .collect();
        for c in 0..d {
            lo[c] = lo[c].min(x[c].floor() as i64);
            hi[c] = hi[c].max(x[c].ceil() as i64);
        }
    }
    (lo, hi)
}

/// Ambient bounding box of the set cells.
fn bounds(g: &Grid) -> (Vec<f64>, Vec<f64>) {
    let d = g.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for c in g.set_cells() {
        for k in 0..d {
            lo[k] = lo[k].min(c[k] as f64 * g.h);
            hi[k] = hi[k].max((c[k] + 1) as f64 * g.h);
        }
    }
    (lo, hi)
}

fn box_points(lo: &[i64], hi: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for c in 0..lo.len() {
        out = out
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                (lo[c]..=hi[c]).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// Short same-color differences of a generated patch that generate `L'`,
/// picked greedily by norm.
pub fn default_shifts(
    sys: &SubstitutionSystem,
    lprime: &SubgroupHnf,
    budget: usize,
) -> Result<Vec<Vec<i64>>> {
    let d = sys.dim();
    let radius = match d {
        1 => 64,
        2 => 8,
        _ => 3,
    };
    let (_, patch) = central_patch(sys, radius, budget)?;
    let reach = match d {
        1 => 16,
        2 => 4,
        _ => 2,
    };
    let mut diffs = BTreeSet::new();
    for l in patch.lists() {
        for (a, u) in l.iter().enumerate() {
            for v in &l[a + 1..] {
                let x: Vec<i64> = v.iter().zip(u).map(|(p, q)| p - q).collect();
                if x.iter().all(|c| c.abs() <= reach) {
                    let neg: Vec<i64> = x.iter().map(|c| -c).collect();
                    diffs.insert((x.iter().map(|c| c.abs()).max(), x.clone().max(neg)));
                }
            }
        }
    }
    let mut picked: Vec<Vec<i64>> = Vec::new();
    let mut span = hnf(d, &[])?;
    for (_, x) in diffs {
        if span == *lprime {
            break;
        }
        if !span.contains(&x) {
            picked.push(x);
            span = hnf(d, &picked)?;
        }
    }
    if span != *lprime {
        return Err(Error::InvalidSystem(
            "short same-color differences do not generate L'".into(),
        ));
    }
    Ok(picked)
}

/// Builds the subdivision graph from the overlaps realized by `shifts` in
/// a generated patch.
pub fn build_overlap_graph(
    sys: &SubstitutionSystem,
    attractors: &[TileAttractor],
    shifts: &[Vec<i64>],
    theta: f64,
    budget: usize,
) -> Result<OverlapGraph> {
    let m = sys.num_colors();
    let d = sys.dim();
    if attractors.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: attractors.len(),
        });
    }
    for a in attractors {
        if !a.converged {
            return Err(Error::NotConverged {
                gap: a.hausdorff_gap,
                threshold: 2.0 * a.grid.h,
            });
        }
    }
    if let Some(s) = shifts.iter().find(|s| s.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: s.len(),
        });
    }
    let tester = Tester::new(sys, attractors, theta);
    let radius = match d {
        1 => 256,
        2 => 16,
        _ => 6,
    };
    let (_, patch) = central_patch(sys, radius, budget)?;
    let sets: Vec<HashSet<&Vec<i64>>> = patch.lists().iter().map(|l| l.iter().collect()).collect();
    let displacements: Vec<Vec<Vec<Vec<i64>>>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let (lo, hi) = displacement_box(sys, &attractors[i].grid, &attractors[j].grid);
                    box_points(&lo, &hi)
                })
                .collect()
        })
        .collect();

    let mut vertices: Vec<OverlapClass> = Vec::new();
    let mut certain: Vec<bool> = Vec::new();
    let mut index: HashMap<OverlapClass, usize> = HashMap::new();
    let mut cache: HashMap<(usize, usize, Vec<i64>), Interior> = HashMap::new();
    let mut interior = |i: usize, j: usize, z: &[i64]| -> Interior {
        *cache
            .entry((i, j, z.to_vec()))
            .or_insert_with(|| tester.test(i, j, z))
    };

    let mut roots = BTreeSet::new();
    let mut root_status = Vec::new();
    for alpha in shifts {
        let in_xi = alpha.iter().all(|&x| x == 0)
            || patch.lists().iter().enumerate().any(|(c, l)| {
                l.iter().any(|u| {
                    let v: Vec<i64> = u.iter().zip(alpha).map(|(a, b)| a + b).collect();
                    sets[c].contains(&v)
                })
            });
        if !in_xi {
            return Err(Error::NotAlmostPeriod(alpha.clone()));
        }
        for i in 0..m {
            for j in 0..m {
                for z in &displacements[i][j] {
                    // some u ∈ Λ_i with u + α - z ∈ Λ_j
                    let realized = patch.color(i).iter().any(|u| {
                        let v: Vec<i64> = (0..d).map(|c| u[c] + alpha[c] - z[c]).collect();
                        sets[j].contains(&v)
                    });
                    if !realized {
                        continue;
                    }
                    let st = interior(i, j, z);
                    if st != Interior::No {
                        let cls = OverlapClass::new(i, j, z.clone());
                        if roots.insert(cls.clone()) {
                            root_status.push((cls, st));
                        }
                    }
                }
            }
        }
    }
    root_status.sort_by(|a, b| a.0.cmp(&b.0));
    let mut queue = VecDeque::new();
    for (cls, st) in root_status {
        index.insert(cls.clone(), vertices.len());
        queue.push_back(vertices.len());
        vertices.push(cls);
        certain.push(st == Interior::Yes);
    }
    let roots: Vec<usize> = (0..vertices.len()).collect();
    let mut edges: Vec<Vec<Edge>> = vec![Vec::new(); vertices.len()];
    while let Some(v) = queue.pop_front() {
        let cls = vertices[v].clone();
        let (i, j) = (cls.left_color, cls.right_color);
        let qz = sys.q.apply(&cls.displacement)?;
        let mut out = BTreeSet::new();
        for k in 0..m {
            for a in &sys.digits[k][i] {
                for l in 0..m {
                    for b in &sys.digits[l][j] {
                        let z: Vec<i64> = (0..d).map(|c| qz[c] + a[c] - b[c]).collect();
                        let st = interior(k, l, &z);
                        if st == Interior::No {
                            continue;
                        }
                        let child = OverlapClass::new(k, l, z);
                        let id = match index.get(&child) {
                            Some(&id) => id,
                            None => {
                                if vertices.len() >= MAX_VERTICES {
                                    return Err(Error::BudgetExceeded {
                                        what: "overlap classes",
                                        limit: MAX_VERTICES,
                                    });
                                }
                                let id = vertices.len();
                                index.insert(child.clone(), id);
                                vertices.push(child);
                                certain.push(st == Interior::Yes);
                                edges.push(Vec::new());
                                queue.push_back(id);
                                id
                            }
                        };
                        out.insert(id);
                    }
                }
            }
        }
        edges[v] = out
            .into_iter()
            .map(|to| Edge {
                to,
                certain: certain[to],
            })
            .collect();
    }
    Ok(OverlapGraph {
        vertices,
        certain,
        edges,
        roots,
        shifts: shifts.to_vec(),
        exact: matches!(tester, Tester::Exact { .. }),
        theta,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reach {
    AllReach,
    /// Classes with no path to a coincidence.
    Stuck { classes: Vec<OverlapClass> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certainty {
    /// Both readings agree and every interior test was exact.
    Certified,
    /// Both readings agree on rasterized tiles.
    Evidence,
    /// The readings disagree.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReachabilityVerdict {
    /// Uncertain edges counted as present.
    pub optimistic: Reach,
    /// Uncertain edges counted as absent.
    pub pessimistic: Reach,
    pub certainty: Certainty,
}

impl ReachabilityVerdict {
    /// The common reading of both verdicts.
    pub fn agreed(&self) -> Option<&Reach> {
        match (&self.optimistic, &self.pessimistic) {
            (Reach::AllReach, Reach::AllReach) => Some(&self.optimistic),
            (Reach::Stuck { .. }, Reach::Stuck { .. }) => Some(&self.pessimistic),
            _ => None,
        }
    }
}

impl OverlapGraph {
    /// Vertices reachable from the roots, through certain edges only
    /// unless `all`.
    fn closure(&self, all: bool) -> Vec<bool> {
        let mut seen = vec![false; self.vertices.len()];
        let mut queue: VecDeque<usize> = self
            .roots
            .iter()
            .copied()
            .filter(|&r| all || self.certain[r])
            .collect();
        for &r in &queue {
            seen[r] = true;
        }
        while let Some(v) = queue.pop_front() {
            for e in &self.edges[v] {
                if (all || e.certain) && !seen[e.to] {
                    seen[e.to] = true;
                    queue.push_back(e.to);
                }
            }
        }
        seen
    }

    /// Vertices with a path to a coincidence.
    fn reaches_coincidence(&self, all: bool) -> Vec<bool> {
        let n = self.vertices.len();
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (v, out) in self.edges.iter().enumerate() {
            for e in out {
                if all || e.certain {
                    rev[e.to].push(v);
                }
            }
        }
        let mut good = vec![false; n];
        let mut queue = VecDeque::new();
        for (v, c) in self.vertices.iter().enumerate() {
            if c.is_coincidence {
                good[v] = true;
                queue.push_back(v);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &u in &rev[v] {
                if !good[u] {
                    good[u] = true;
                    queue.push_back(u);
                }
            }
        }
        good
    }

    fn reach(&self, closure_all: bool, edges_all: bool) -> Reach {
        let live = self.closure(closure_all);
        let good = self.reaches_coincidence(edges_all);
        let mut stuck: Vec<OverlapClass> = (0..self.vertices.len())
            .filter(|&v| live[v] && !good[v])
            .map(|v| self.vertices[v].clone())
            .collect();
        if stuck.is_empty() {
            Reach::AllReach
        } else {
            stuck.sort();
            stuck.truncate(MAX_WITNESSES);
            Reach::Stuck { classes: stuck }
        }
    }

    /// Whether every edge out of a coincidence lands on a coincidence.
    pub fn coincidences_absorb(&self) -> bool {
        self.vertices.iter().enumerate().all(|(v, c)| {
            !c.is_coincidence || self.edges[v].iter().all(|e| self.vertices[e.to].is_coincidence)
        })
    }
}

/// Whether every overlap class has a path to a coincidence, read once with
/// and once without the uncertain edges.
pub fn coincidence_reachability(g: &OverlapGraph) -> ReachabilityVerdict {
    // every class that might exist must reach through edges that surely do
    let pessimistic = g.reach(true, false);
    // only classes that surely exist, through any edge that might
    let optimistic = g.reach(false, true);
    let agree = matches!(
        (&optimistic, &pessimistic),
        (Reach::AllReach, Reach::AllReach) | (Reach::Stuck { .. }, Reach::Stuck { .. })
    );
    let certainty = match (agree, g.exact) {
        (true, true) => Certainty::Certified,
        (true, false) => Certainty::Evidence,
        (false, _) => Certainty::Inconclusive,
    };
    ReachabilityVerdict {
        optimistic,
        pessimistic,
        certainty,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LinkRow {
    pub shift: Vec<i64>,
    /// `dens(Λ △ (Q^n x + Λ))` for `n = 0 ..= N`.
    pub complement: Vec<f64>,
    pub density_vanishes: bool,
    pub graph: ReachabilityVerdict,
    /// `None` when the graph verdict is inconclusive.
    pub consistent: Option<bool>,
}

/// Compares, shift by shift, the density series with the overlap verdict
/// of the graph rooted at that shift alone.
#[allow(clippy::too_many_arguments)]
pub fn overlap_density_link(
    sys: &SubstitutionSystem,
    attractors: &[TileAttractor],
    lprime: &SubgroupHnf,
    shifts: &[Vec<i64>],
    n: u32,
    seq: &VanHoveSequence,
    theta: f64,
    budget: usize,
) -> Result<Vec<LinkRow>> {
    shifts
        .iter()
        .map(|x| {
            let series = density_symdiff_series(sys, lprime, x, n, seq, budget)?;
            let density_vanishes = matches!(rate_fit(&series)?, RateFit::Decay { .. });
            let g = build_overlap_graph(sys, attractors, std::slice::from_ref(x), theta, budget)?;
            let graph = coincidence_reachability(&g);
            let consistent = graph
                .agreed()
                .map(|r| (*r == Reach::AllReach) == density_vanishes);
            Ok(LinkRow {
                shift: x.clone(),
                complement: series.values_f64(),
                density_vanishes,
                graph,
                consistent,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli_io::bundled;
    use crate::lattice::hnf;
    use crate::substitution::test_systems::one_dim;
    use crate::substitution::DEFAULT_POINT_BUDGET;
    use crate::tiles::{solve_adjoint, RasterMode};

    fn graph(sys: &SubstitutionSystem, shift: i64) -> OverlapGraph {
        let att = solve_adjoint(sys, 1.0 / 64.0, None, RasterMode::Outer).unwrap();
        build_overlap_graph(sys, &att, &[vec![shift]], DEFAULT_THETA, DEFAULT_POINT_BUDGET).unwrap()
    }

    #[test]
    fn full_lattice_has_only_the_coincidence() {
        let s = one_dim("z", 2, vec![vec![vec![0, 1]]], vec![vec![0]]);
        let g = graph(&s, 1);
        assert!(g.exact);
        assert_eq!(g.vertices, vec![OverlapClass::new(0, 0, vec![0])]);
        let v = coincidence_reachability(&g);
        assert_eq!(v.agreed(), Some(&Reach::AllReach));
        assert_eq!(v.certainty, Certainty::Certified);
    }

    #[test]
    fn period_doubling_reaches_coincidence() {
        let g = graph(&bundled("period-doubling").unwrap(), 1);
        assert!(g.exact);
        assert!(g.vertices.iter().all(|c| c.displacement == vec![0]));
        assert!(g.coincidences_absorb());
        let v = coincidence_reachability(&g);
        assert_eq!(v.agreed(), Some(&Reach::AllReach));
        assert_eq!(v.certainty, Certainty::Certified);
    }

    #[test]
    fn thue_morse_is_stuck() {
        let g = graph(&bundled("thue-morse").unwrap(), 1);
        let v = coincidence_reachability(&g);
        assert_eq!(v.certainty, Certainty::Certified);
        match v.agreed() {
            Some(Reach::Stuck { classes }) => {
                assert!(classes.contains(&OverlapClass::new(0, 1, vec![0])))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_coincidence_vertex_reaches() {
        let g = OverlapGraph {
            vertices: vec![OverlapClass::new(0, 0, vec![0])],
            certain: vec![true],
            edges: vec![vec![Edge { to: 0, certain: true }]],
            roots: vec![0],
            shifts: vec![vec![0]],
            exact: true,
            theta: DEFAULT_THETA,
        };
        assert_eq!(coincidence_reachability(&g).agreed(), Some(&Reach::AllReach));
    }

    #[test]
    fn uncertain_edges_split_the_readings() {
        // 0 -> 1 (uncertain) -> 2 (coincidence)
        let g = OverlapGraph {
            vertices: vec![
                OverlapClass::new(0, 1, vec![0]),
                OverlapClass::new(1, 0, vec![0]),
                OverlapClass::new(0, 0, vec![0]),
            ],
            certain: vec![true, false, true],
            edges: vec![
                vec![Edge { to: 1, certain: false }],
                vec![Edge { to: 2, certain: true }],
                vec![],
            ],
            roots: vec![0],
            shifts: vec![vec![1]],
            exact: false,
            theta: DEFAULT_THETA,
        };
        let v = coincidence_reachability(&g);
        assert_eq!(v.optimistic, Reach::AllReach);
        assert!(matches!(v.pessimistic, Reach::Stuck { .. }));
        assert_eq!(v.certainty, Certainty::Inconclusive);
    }

    #[test]
    fn shifts_outside_xi_are_rejected() {
        // Λ = 2ℤ has no odd differences
        let s = one_dim("even", 2, vec![vec![vec![0, 2]]], vec![vec![0]]);
        let att = solve_adjoint(&s, 1.0 / 64.0, None, RasterMode::Outer).unwrap();
        assert!(matches!(
            build_overlap_graph(&s, &att, &[vec![1]], DEFAULT_THETA, DEFAULT_POINT_BUDGET),
            Err(Error::NotAlmostPeriod(_))
        ));
    }

    #[test]
    fn density_and_overlaps_agree() {
        let z = hnf(1, &[vec![1]]).unwrap();
        let seq = VanHoveSequence::unit(1, vec![14]);
        for (name, vanishes) in [("period-doubling", true), ("thue-morse", false)] {
            let s = bundled(name).unwrap();
            let att = solve_adjoint(&s, 1.0 / 64.0, None, RasterMode::Outer).unwrap();
            let rows = overlap_density_link(
                &s,
                &att,
                &z,
                &[vec![0], vec![1]],
                8,
                &seq,
                DEFAULT_THETA,
                DEFAULT_POINT_BUDGET,
            )
            .unwrap();
            assert_eq!(rows[0].consistent, Some(true));
            assert!(rows[0].complement.iter().all(|&x| x == 0.0));
            assert_eq!(rows[1].density_vanishes, vanishes, "{name}");
            assert_eq!(rows[1].consistent, Some(true), "{name}");
        }
    }

    use crate::cli_io::bundled_names;
    use crate::coincidence::{find_modular_coincidence, CoincidenceContext};
    use crate::substitution::compute_lprime;
    use proptest::prelude::*;

    fn shipped_graph(name: &str) -> (SubstitutionSystem, OverlapGraph) {
        let sys = bundled(name).unwrap();
        let lp = compute_lprime(&sys, 2, DEFAULT_POINT_BUDGET).unwrap().lprime;
        let shifts = default_shifts(&sys, &lp, DEFAULT_POINT_BUDGET).unwrap();
        let att = solve_adjoint(&sys, 1.0 / 64.0, None, RasterMode::Outer).unwrap();
        let g = build_overlap_graph(&sys, &att, &shifts, DEFAULT_THETA, DEFAULT_POINT_BUDGET).unwrap();
        (sys, g)
    }

    #[test]
    fn shipped_graphs_follow_the_edge_rule() {
        for name in bundled_names() {
            let (sys, g) = shipped_graph(name);
            assert!(g.coincidences_absorb(), "{name}");
            assert!(g.closure(true).iter().all(|&x| x), "{name}: unreachable class");
            for (v, out) in g.edges.iter().enumerate() {
                let c = &g.vertices[v];
                let qz = sys.q.apply(&c.displacement).unwrap();
                for e in out {
                    let t = &g.vertices[e.to];
                    let ok = sys.digit_set(t.left_color, c.left_color).iter().any(|a| {
                        sys.digit_set(t.right_color, c.right_color).iter().any(|b| {
                            qz.iter().zip(a).zip(b).map(|((z, a), b)| z + a - b).eq(t.displacement.iter().copied())
                        })
                    });
                    assert!(ok, "{name}: edge {c:?} -> {t:?}");
                }
            }
        }
    }

    #[test]
    fn one_dimensional_verdicts_match_modular_coincidence() {
        for name in bundled_names() {
            let (sys, g) = shipped_graph(name);
            if sys.dim() != 1 {
                continue;
            }
            assert!(g.exact, "{name}");
            let v = coincidence_reachability(&g);
            assert_eq!(v.certainty, Certainty::Certified, "{name}");
            let mut ctx = CoincidenceContext::prepare(&sys).unwrap();
            let found = find_modular_coincidence(&mut ctx, &sys, 8).unwrap().found;
            assert_eq!(v.agreed() == Some(&Reach::AllReach), found, "{name}");
        }
    }

    fn random_graph() -> impl Strategy<Value = OverlapGraph> {
        (1usize..10).prop_flat_map(|n| {
            (
                prop::collection::vec(any::<bool>(), n),
                prop::collection::vec(any::<bool>(), n),
                prop::collection::vec(prop::collection::vec((0..n, any::<bool>()), 0..4), n),
                prop::collection::vec(0..n, 1..4),
            )
                .prop_map(|(coin, certain, edges, roots)| OverlapGraph {
                    vertices: coin
                        .iter()
                        .enumerate()
                        .map(|(k, &c)| OverlapClass::new(0, if c { 0 } else { 1 }, vec![k as i64 * (!c) as i64]))
                        .collect(),
                    certain,
                    edges: edges
                        .into_iter()
                        .map(|out| out.into_iter().map(|(to, certain)| Edge { to, certain }).collect())
                        .collect(),
                    roots,
                    shifts: vec![vec![1]],
                    exact: true,
                    theta: DEFAULT_THETA,
                })
        })
    }

    proptest! {
        #[test]
        fn uncertain_edges_only_add_reach(g in random_graph(), from in 0usize..10, to in 0usize..10) {
            let certain_only = g.reaches_coincidence(false);
            let all = g.reaches_coincidence(true);
            prop_assert!(certain_only.iter().zip(&all).all(|(a, b)| !a || *b));
            let v = coincidence_reachability(&g);
            if v.pessimistic == Reach::AllReach {
                prop_assert_eq!(&v.optimistic, &Reach::AllReach);
            }
            let n = g.vertices.len();
            let mut more = g.clone();
            more.edges[from % n].push(Edge { to: to % n, certain: false });
            let grown = more.reaches_coincidence(true);
            prop_assert!(all.iter().zip(&grown).all(|(a, b)| !a || *b));
        }
    }
}
