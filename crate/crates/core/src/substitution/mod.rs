//! Lattice substitution systems `Λ_i = ∪_j (Q Λ_j + D_ij)`.

mod cluster;
mod legality;
mod lprime;
mod perron;

pub use cluster::{Cluster, Region};
pub use legality::{legality_check, Legality};
pub use lprime::{color_representatives, compute_lprime, LPrime};
pub use perron::{is_primitive, pf_data, substitution_matrix, PfData, Primitivity};

use rayon::prelude::*;

use crate::error::{Error, Provenance, Result};
use crate::lattice::{is_expansive, ExpansionMatrix, LatticeBasis};

/// Default cap on the number of points held by any generated cluster.
pub const DEFAULT_POINT_BUDGET: usize = 4_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstitutionSystem {
    pub name: String,
    pub colors: Vec<String>,
    pub lattice: LatticeBasis,
    pub q: ExpansionMatrix,
    /// `digits[i][j]` is `D_ij`: maps from color `j` into color `i`.
    pub digits: Vec<Vec<Vec<Vec<i64>>>>,
    pub seed: Cluster,
}

impl SubstitutionSystem {
    pub fn new(
        name: impl Into<String>,
        colors: Vec<String>,
        lattice: LatticeBasis,
        q: ExpansionMatrix,
        mut digits: Vec<Vec<Vec<Vec<i64>>>>,
        seed: Cluster,
    ) -> Result<Self> {
        let m = colors.len();
        let d = lattice.dim();
        if m == 0 {
            return Err(Error::InvalidSystem("no colors".into()));
        }
        if q.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: q.dim(),
            });
        }
        if digits.len() != m || digits.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidSystem(format!("digit array must be {m} x {m}")));
        }
        for row in &mut digits {
            for set in row.iter_mut() {
                if let Some(v) = set.iter().find(|v| v.len() != d) {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: v.len(),
                    });
                }
                set.sort_unstable();
                set.dedup();
            }
        }
        if seed.colors() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: seed.colors(),
            });
        }
        if let Some(p) = seed.lists().iter().flatten().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.len(),
            });
        }
        let exp = is_expansive(q.matrix());
        if !exp.is_expansive() {
            return Err(Error::InvalidSystem(format!(
                "expansion matrix is not expansive (margin {:.3e})",
                exp.margin
            )));
        }
        Ok(SubstitutionSystem {
            name: name.into(),
            colors,
            lattice,
            q,
            digits,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn num_colors(&self) -> usize {
        self.colors.len()
    }

    pub fn digit_set(&self, i: usize, j: usize) -> &[Vec<i64>] {
        &self.digits[i][j]
    }

    /// Every digit of every `D_ij`, deduplicated.
    pub fn all_digits(&self) -> Vec<Vec<i64>> {
        let mut all: Vec<Vec<i64>> = self.digits.iter().flatten().flatten().cloned().collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    /// Coordinate-wise hull of all digits.
    pub(crate) fn digit_box(&self) -> (Vec<i128>, Vec<i128>) {
        let d = self.dim();
        let all = self.all_digits();
        let mut lo = vec![0i128; d];
        let mut hi = vec![0i128; d];
        for c in 0..d {
            lo[c] = all.iter().map(|v| v[c] as i128).min().unwrap_or(0);
            hi[c] = all.iter().map(|v| v[c] as i128).max().unwrap_or(0);
        }
        (lo, hi)
    }

    pub fn max_digit_norm(&self) -> i64 {
        self.all_digits()
            .iter()
            .flat_map(|v| v.iter().map(|x| x.abs()))
            .max()
            .unwrap_or(0)
    }
}

/// One candidate image point, with enough data to rebuild its provenance.
struct Image {
    color: usize,
    point: Vec<i64>,
    source_color: usize,
    source_index: usize,
    digit_index: usize,
}

/// One application of Φ, keeping only images accepted by `keep`.
fn step<F>(sys: &SubstitutionSystem, cluster: &Cluster, keep: F) -> Result<Cluster>
where
    F: Fn(usize, &[i64]) -> bool + Sync,
{
    let m = sys.num_colors();
    if cluster.colors() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: cluster.colors(),
        });
    }
    let mut images: Vec<Image> = Vec::new();
    for j in 0..m {
        let part: Vec<Result<Vec<Image>>> = cluster
            .color(j)
            .par_iter()
            .enumerate()
            .map(|(idx, x)| {
                let qx = sys.q.apply(x)?;
                let mut out = Vec::new();
                for i in 0..m {
                    for (di, d) in sys.digits[i][j].iter().enumerate() {
                        let y: Vec<i64> = qx
                            .iter()
                            .zip(d)
                            .map(|(a, b)| a.checked_add(*b).ok_or(Error::Overflow("substitution")))
                            .collect::<Result<_>>()?;
                        if keep(i, &y) {
                            out.push(Image {
                                color: i,
                                point: y,
                                source_color: j,
                                source_index: idx,
                                digit_index: di,
                            });
                        }
                    }
                }
                Ok(out)
            })
            .collect();
        for r in part {
            images.extend(r?);
        }
    }
    images.par_sort_unstable_by(|a, b| {
        (a.color, &a.point, a.source_color, a.source_index, a.digit_index).cmp(&(
            b.color,
            &b.point,
            b.source_color,
            b.source_index,
            b.digit_index,
        ))
    });
    for w in images.windows(2) {
        if w[0].color == w[1].color && w[0].point == w[1].point {
            let prov = |im: &Image| Provenance {
                source_color: im.source_color,
                source_point: cluster.color(im.source_color)[im.source_index].clone(),
                digit: sys.digits[im.color][im.source_color][im.digit_index].clone(),
            };
            return Err(Error::DisjointnessViolation {
                color: w[0].color,
                point: w[0].point.clone(),
                first: prov(&w[0]),
                second: prov(&w[1]),
            });
        }
    }
    let mut lists = vec![Vec::new(); m];
    for im in images {
        lists[im.color].push(im.point);
    }
    Ok(Cluster::from_lists(lists))
}

/// `Φ(cluster)`; fails when two maps of one row send points to the same place.
pub fn apply(sys: &SubstitutionSystem, cluster: &Cluster) -> Result<Cluster> {
    step(sys, cluster, |_, _| true)
}

/// `Φ^n(cluster)`.
pub fn apply_n(sys: &SubstitutionSystem, cluster: &Cluster, n: u32, budget: usize) -> Result<Cluster> {
    let mut c = cluster.clone();
    for _ in 0..n {
        c = apply(sys, &c)?;
        if c.total() > budget {
            return Err(Error::BudgetExceeded {
                what: "cluster iteration",
                limit: budget,
            });
        }
    }
    Ok(c)
}

/// Whether the seed is contained in its own image.
pub fn verify_fixed_point(sys: &SubstitutionSystem) -> Result<bool> {
    Ok(sys.seed.is_subset(&apply(sys, &sys.seed)?))
}

/// `Φ^n(seed) ∩ region`.
///
/// A point is dropped as soon as no descendant after the remaining steps
/// can land in the region.
pub fn generate_patch(
    sys: &SubstitutionSystem,
    n: u32,
    region: &Region,
    budget: usize,
) -> Result<Cluster> {
    generate_from(sys, &sys.seed, n, region, budget)
}

pub fn generate_from(
    sys: &SubstitutionSystem,
    start: &Cluster,
    n: u32,
    region: &Region,
    budget: usize,
) -> Result<Cluster> {
    let d = sys.dim();
    if region.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: region.dim(),
        });
    }
    // offsets[k] bounds Σ_{s<k} Q^s d_s coordinate-wise
    let (dlo, dhi) = sys.digit_box();
    let mut offsets: Vec<(Vec<i128>, Vec<i128>)> = vec![(vec![0; d], vec![0; d])];
    for k in 1..=n as usize {
        let (plo, phi) = &offsets[k - 1];
        let (mut lo, mut hi) = interval_apply(sys, plo, phi)?;
        for c in 0..d {
            lo[c] += dlo[c];
            hi[c] += dhi[c];
        }
        offsets.push((lo, hi));
    }
    let qpow: Vec<_> = (0..=n).map(|k| sys.q.pow(k)).collect::<Result<_>>()?;
    let reachable = |remaining: usize, p: &[i64]| -> bool {
        let mut lo = vec![0i128; d];
        let mut hi = vec![0i128; d];
        let mq = &qpow[remaining];
        for r in 0..d {
            let mut acc: i128 = 0;
            for c in 0..d {
                acc = acc.saturating_add((mq.get(r, c) as i128).saturating_mul(p[c] as i128));
            }
            lo[r] = acc.saturating_add(offsets[remaining].0[r]);
            hi[r] = acc.saturating_add(offsets[remaining].1[r]);
        }
        region.meets(&lo, &hi)
    };
    let mut lists = start.lists().to_vec();
    for l in &mut lists {
        l.retain(|p| reachable(n as usize, p));
    }
    let mut c = Cluster::from_lists(lists);
    for t in 1..=n as usize {
        let remaining = n as usize - t;
        c = step(sys, &c, |_, y| reachable(remaining, y))?;
        if c.total() > budget {
            return Err(Error::BudgetExceeded {
                what: "patch generation",
                limit: budget,
            });
        }
    }
    Ok(c.restrict(region))
}

/// `Λ ∩ region` for the multiset generated by the seed: `Φ^n(seed) ∩ region`
/// once it is non-empty and has stopped changing for two consecutive levels.
pub fn fill_region(sys: &SubstitutionSystem, region: &Region, budget: usize) -> Result<Cluster> {
    let mut prev = generate_patch(sys, 0, region, budget)?;
    let mut stable = 0;
    for n in 1..=MAX_FILL_LEVEL {
        let c = match generate_patch(sys, n, region, budget) {
            Ok(c) => c,
            // the region lies outside everything the seed ever reaches
            Err(Error::Overflow(_)) if prev.is_empty() => return Ok(prev),
            Err(e) => return Err(e),
        };
        stable = if c == prev && !c.is_empty() { stable + 1 } else { 0 };
        if stable == 2 {
            return Ok(c);
        }
        prev = c;
    }
    Err(Error::BudgetExceeded {
        what: "region fill levels",
        limit: MAX_FILL_LEVEL as usize,
    })
}

const MAX_FILL_LEVEL: u32 = 96;

/// A box of half-width `radius` around the coordinate-wise median of a
/// generated patch with at least `16` times as many points as the box, and
/// the patch restricted to it. Generated multisets may be one-sided, so the
/// box is not centered at the origin.
pub fn central_patch(
    sys: &SubstitutionSystem,
    radius: i64,
    budget: usize,
) -> Result<(Region, Cluster)> {
    let d = sys.dim();
    let want = 16 * (2 * radius as usize + 1).pow(d as u32);
    let mut patch = sys.seed.clone();
    let mut n = 0;
    while patch.total() < want {
        patch = apply(sys, &patch)?;
        n += 1;
        if patch.total() > budget || n > MAX_FILL_LEVEL {
            return Err(Error::BudgetExceeded {
                what: "central patch",
                limit: budget,
            });
        }
    }
    // one more level so that the box sits well inside the support
    let patch = apply(sys, &patch)?;
    let all: Vec<&Vec<i64>> = patch.lists().iter().flatten().collect();
    let center: Vec<i64> = (0..d)
        .map(|c| {
            let mut xs: Vec<i64> = all.iter().map(|p| p[c]).collect();
            xs.sort_unstable();
            xs[xs.len() / 2]
        })
        .collect();
    let region = Region::new(
        center.iter().map(|x| x - radius).collect(),
        center.iter().map(|x| x + radius).collect(),
    )?;
    let c = patch.restrict(&region);
    Ok((region, c))
}

/// Interval image `Q [lo, hi]`.
fn interval_apply(
    sys: &SubstitutionSystem,
    lo: &[i128],
    hi: &[i128],
) -> Result<(Vec<i128>, Vec<i128>)> {
    let d = sys.dim();
    let m = sys.q.matrix();
    let mut olo = vec![0i128; d];
    let mut ohi = vec![0i128; d];
    for r in 0..d {
        for c in 0..d {
            let a = m.get(r, c) as i128;
            let (x, y) = (a * lo[c], a * hi[c]);
            olo[r] = olo[r].checked_add(x.min(y)).ok_or(Error::Overflow("patch bounds"))?;
            ohi[r] = ohi[r].checked_add(x.max(y)).ok_or(Error::Overflow("patch bounds"))?;
        }
    }
    Ok((olo, ohi))
}

#[cfg(test)]
pub(crate) mod test_systems {
    use super::*;
    use crate::lattice::IntMatrix;

    pub fn one_dim(name: &str, q: i64, digits: Vec<Vec<Vec<i64>>>, seed: Vec<Vec<i64>>) -> SubstitutionSystem {
        let m = digits.len();
        let colors = (0..m).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
        let digits = digits
            .into_iter()
            .map(|r| r.into_iter().map(|s| s.into_iter().map(|x| vec![x]).collect()).collect())
            .collect();
        let seed = Cluster::from_lists(
            seed.into_iter()
                .map(|s| s.into_iter().map(|x| vec![x]).collect())
                .collect(),
        );
        SubstitutionSystem::new(
            name,
            colors,
            LatticeBasis::standard(1),
            ExpansionMatrix::new(IntMatrix::scalar(1, q)).unwrap(),
            digits,
            seed,
        )
        .unwrap()
    }

    /// a -> ab, b -> a on Z.
    pub fn period_doubling() -> SubstitutionSystem {
        one_dim(
            "period-doubling",
            2,
            vec![vec![vec![0], vec![0, 1]], vec![vec![1], vec![]]],
            vec![vec![0], vec![]],
        )
    }

    /// a -> ab, b -> ba on Z.
    pub fn thue_morse() -> SubstitutionSystem {
        one_dim(
            "thue-morse",
            2,
            vec![vec![vec![0], vec![1]], vec![vec![1], vec![0]]],
            vec![vec![0], vec![]],
        )
    }

    pub fn abcd() -> SubstitutionSystem {
        one_dim(
            "abcd",
            3,
            vec![
                vec![vec![0], vec![], vec![2], vec![1]],
                vec![vec![1], vec![2], vec![], vec![2]],
                vec![vec![2], vec![1], vec![0], vec![]],
                vec![vec![], vec![0], vec![1], vec![0]],
            ],
            vec![vec![0], vec![-1], vec![], vec![]],
        )
    }

    pub fn gasket() -> SubstitutionSystem {
        let f1 = vec![0, 0];
        let f2 = vec![1, 0];
        let f3 = vec![0, 1];
        let f4 = vec![-1, -1];
        let e = Vec::new;
        let digits = vec![
            vec![vec![f1.clone(), f4.clone()], vec![f1.clone()], vec![f1.clone()], e()],
            vec![vec![f2.clone()], vec![f2.clone(), f3.clone()], e(), vec![f2.clone()]],
            vec![vec![f3.clone()], e(), vec![f2.clone(), f3.clone()], vec![f3.clone()]],
            vec![e(), vec![f4.clone()], vec![f4.clone()], vec![f1, f4]],
        ];
        let seed = Cluster::from_lists(vec![
            vec![vec![0, 0], vec![1, 1]],
            vec![vec![0, -1]],
            vec![vec![-1, 0]],
            vec![],
        ]);
        SubstitutionSystem::new(
            "gasket",
            vec!["1".into(), "2".into(), "3".into(), "4".into()],
            LatticeBasis::standard(2),
            ExpansionMatrix::scalar(2, 2).unwrap(),
            digits,
            seed,
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::test_systems::*;
    use super::*;

    fn c1(lists: Vec<Vec<i64>>) -> Cluster {
        Cluster::from_lists(
            lists
                .into_iter()
                .map(|s| s.into_iter().map(|x| vec![x]).collect())
                .collect(),
        )
    }

    #[test]
    fn period_doubling_step() {
        let pd = period_doubling();
        let out = apply(&pd, &c1(vec![vec![0], vec![]])).unwrap();
        assert_eq!(out, c1(vec![vec![0], vec![1]]));
        assert!(apply(&pd, &Cluster::empty(2)).unwrap().is_empty());
    }

    #[test]
    fn fixed_point_checks() {
        let mut pd = period_doubling();
        assert!(verify_fixed_point(&pd).unwrap());
        pd.seed = c1(vec![vec![1], vec![]]);
        assert!(!verify_fixed_point(&pd).unwrap());
        assert!(verify_fixed_point(&gasket()).unwrap());
    }

    #[test]
    fn gasket_counts() {
        let g = gasket();
        let out = apply(&g, &g.seed).unwrap();
        assert_eq!(out.counts(), vec![6, 4, 4, 2]);
    }

    #[test]
    fn abcd_word() {
        let s = abcd();
        let patch = generate_patch(&s, 2, &Region::new(vec![-6], vec![8]).unwrap(), 1000).unwrap();
        let word: String = (-6..=8)
            .map(|x| match patch.color_of(&[x]) {
                Some(i) => (b'a' + i as u8) as char,
                None => '.',
            })
            .collect();
        assert_eq!(word, "cdadcbabcdcbcda");
    }

    #[test]
    fn pruned_patch_matches_full_iteration() {
        let g = gasket();
        let region = Region::new(vec![-5, -3], vec![4, 6]).unwrap();
        let pruned = generate_patch(&g, 4, &region, 1 << 20).unwrap();
        let full = apply_n(&g, &g.seed, 4, 1 << 20).unwrap().restrict(&region);
        assert_eq!(pruned, full);
    }

    #[test]
    fn corrupted_digits_collide() {
        let bad = one_dim("bad", 2, vec![vec![vec![0, 2]]], vec![vec![0, 1]]);
        match apply(&bad, &bad.seed) {
            Err(Error::DisjointnessViolation { color, point, first, second }) => {
                assert_eq!((color, point), (0, vec![2]));
                assert_eq!(first.source_point, vec![0]);
                assert_eq!(second.source_point, vec![1]);
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    use crate::cli_io::{bundled, bundled_names};
    use proptest::prelude::*;

    fn all_bundled() -> Vec<SubstitutionSystem> {
        bundled_names().map(|n| bundled(n).unwrap()).collect()
    }

    fn legal_patches() -> Vec<(SubstitutionSystem, Cluster)> {
        all_bundled()
            .into_iter()
            .map(|s| {
                let n = if s.dim() == 1 { 4 } else { 3 };
                let p = apply_n(&s, &s.seed, n, DEFAULT_POINT_BUDGET).unwrap();
                (s, p)
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn counts_follow_the_substitution_matrix(
            which in 0usize..6,
            mask in prop::collection::vec(any::<bool>(), 64),
            n in 0u32..=4,
        ) {
            let patches = legal_patches();
            let (sys, patch) = &patches[which % patches.len()];
            // a sub-cluster of a legal patch
            let mut k = 0;
            let lists: Vec<Vec<Vec<i64>>> = patch
                .lists()
                .iter()
                .map(|l| {
                    l.iter()
                        .filter(|_| {
                            k += 1;
                            mask[k % mask.len()]
                        })
                        .cloned()
                        .collect()
                })
                .collect();
            let c = Cluster::from_lists(lists);
            let image = apply_n(sys, &c, n, DEFAULT_POINT_BUDGET).unwrap();
            let counts: Vec<i64> = c.counts().iter().map(|&x| x as i64).collect();
            let expected = substitution_matrix(sys).pow(n).unwrap().mul_vec(&counts).unwrap();
            let got: Vec<i64> = image.counts().iter().map(|&x| x as i64).collect();
            prop_assert_eq!(got, expected);
        }
    }

    #[test]
    fn generation_is_monotone() {
        for sys in all_bundled() {
            let r = if sys.dim() == 1 { 40 } else { 10 };
            let region = Region::centered(sys.dim(), r);
            let mut prev = generate_patch(&sys, 0, &region, DEFAULT_POINT_BUDGET).unwrap();
            for n in 1..=8 {
                let next = generate_patch(&sys, n, &region, DEFAULT_POINT_BUDGET).unwrap();
                assert!(prev.is_subset(&next), "{} at n = {n}", sys.name);
                prev = next;
            }
        }
    }

    #[test]
    fn shipped_systems_never_collide() {
        for sys in all_bundled() {
            let mut c = sys.seed.clone();
            for _ in 0..4 {
                c = apply(&sys, &c).unwrap_or_else(|e| panic!("{}: {e}", sys.name));
            }
        }
    }
}
