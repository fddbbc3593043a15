use serde::Serialize;
use serde_json::json;

use super::report::{AnalysisReport, Check, Grade, Overall, Signals};
use crate::coincidence::{
    find_modular_coincidence, model_set_report, window_measures, CoincidenceContext,
    CoincidenceReport, DEFAULT_M_MAX, DEFAULT_TABLE_BUDGET,
};
use crate::error::{Error, Result};
use crate::lattice::{is_expansive, is_inflation, Coset};
use crate::overlap::{
    build_overlap_graph, coincidence_reachability, default_shifts, OverlapGraph, Reach,
    DEFAULT_THETA,
};
use crate::statistics::{
    default_alphas, density_symdiff_series, diffraction_estimate, max_shift_level, random_translates,
    rate_fit, cluster_frequency, window_scale_for, DiffractionConfig, RateFit, VanHoveSequence,
};
use crate::substitution::{
    central_patch, compute_lprime, is_primitive, legality_check, pf_data, substitution_matrix,
    verify_fixed_point, Cluster, LPrime, Legality, SubstitutionSystem, DEFAULT_POINT_BUDGET,
};
use crate::tiles::{solve_adjoint, volume_check, RasterMode, TileAttractor};

/// Bounds and parameters of every check.
#[derive(Clone, Debug, Serialize)]
pub struct Config {
    pub k_max: u32,
    pub m_max: u32,
    pub depth: u32,
    /// Cell size for the tiles; by dimension when unset.
    pub cell: Option<f64>,
    pub iters: Option<u32>,
    pub density_n: u32,
    /// Density shifts; the basis of `L'` when unset.
    pub alphas: Option<Vec<Vec<i64>>>,
    /// Overlap roots; short differences generating `L'` when unset.
    pub shifts: Option<Vec<Vec<i64>>>,
    pub theta: f64,
    pub translates: usize,
    /// Half-width of the diffraction patch; by dimension when unset.
    pub diffraction_radius: Option<i64>,
    pub rng_seed: u64,
    pub budget: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            k_max: 6,
            m_max: DEFAULT_M_MAX,
            depth: 6,
            cell: None,
            iters: None,
            density_n: 8,
            alphas: None,
            shifts: None,
            theta: DEFAULT_THETA,
            translates: 10,
            diffraction_radius: None,
            rng_seed: 0x5eed,
            budget: DEFAULT_POINT_BUDGET,
        }
    }
}

impl Config {
    pub fn cell_size(&self, dim: usize) -> f64 {
        self.cell.unwrap_or(match dim {
            1 | 2 => 1.0 / 64.0,
            3 => 1.0 / 16.0,
            _ => 1.0 / 8.0,
        })
    }
}

/// One system under analysis, with the intermediate results later checks
/// reuse.
pub struct Analysis<'a> {
    pub sys: &'a SubstitutionSystem,
    pub cfg: Config,
    lprime: Option<LPrime>,
    ctx: Option<CoincidenceContext>,
    coincidence: Option<CoincidenceReport>,
    attractors: Option<Vec<TileAttractor>>,
    legal: Option<bool>,
    density_nonvanishing: Option<bool>,
}

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

fn coset_text(c: &Coset, modulus: &[Vec<i64>]) -> String {
    if c.rep.len() == 1 && modulus.len() == 1 {
        format!("{} mod {}", c.rep[0], modulus[0][0])
    } else {
        format!("{:?} + Q^{} L'", c.rep, c.level)
    }
}

impl<'a> Analysis<'a> {
    pub fn new(sys: &'a SubstitutionSystem, cfg: Config) -> Self {
        Analysis {
            sys,
            cfg,
            lprime: None,
            ctx: None,
            coincidence: None,
            attractors: None,
            legal: None,
            density_nonvanishing: None,
        }
    }

    pub fn expansivity(&mut self) -> Result<Check> {
        let e = is_expansive(self.sys.q.matrix());
        let inflation = is_inflation(self.sys.q.matrix(), &self.sys.lattice)?;
        let holds = match e.verdict {
            crate::lattice::ExpansivityVerdict::Indeterminate => None,
            _ => Some(e.is_expansive() && inflation),
        };
        Check::new(
            holds,
            false,
            format!("{:?}, margin {}", e.verdict, fmt(e.margin)),
            "eigenvalue tolerance 1e-9",
            json!({ "expansivity": e, "inflation": inflation }),
        )
    }

    pub fn primitivity(&mut self) -> Result<Check> {
        let s = substitution_matrix(self.sys);
        let p = is_primitive(&s);
        let summary = match p.power {
            Some(l) => format!("primitive, S^{l} > 0"),
            None => "not primitive".into(),
        };
        Check::new(
            Some(p.primitive),
            true,
            summary,
            "l <= m^2 - 2m + 2",
            json!({ "matrix": s.to_rows(), "primitive": p.primitive, "power": p.power }),
        )
    }

    pub fn pf_consistency(&mut self) -> Result<Check> {
        let s = substitution_matrix(self.sys);
        match pf_data(&s, &self.sys.q) {
            Ok(pf) => Check::new(
                Some(pf.consistent),
                false,
                format!("PF eigenvalue {} vs |det Q| = {}", fmt(pf.eigenvalue), self.sys.q.q()),
                "tolerance 1e-6",
                &pf,
            ),
            Err(Error::NotPrimitive) => Check::new(None, false, "matrix not primitive", "", ()),
            Err(e) => Err(e),
        }
    }

    pub fn fixed_point(&mut self) -> Result<Check> {
        let ok = verify_fixed_point(self.sys)?;
        let summary = if ok {
            "seed is contained in its image"
        } else {
            "seed is not contained in its image"
        };
        Check::new(Some(ok), true, summary, "", json!({ "seed": self.sys.seed }))
    }

    pub fn legality(&mut self) -> Result<Check> {
        let l = legality_check(self.sys, &self.sys.seed, self.cfg.k_max, self.cfg.budget)?;
        let (holds, summary) = match &l {
            Legality::Legal {
                color,
                k,
                translation,
            } => (
                Some(true),
                format!(
                    "Legal(color {}, k = {k}, translation {translation:?})",
                    self.sys.colors[*color]
                ),
            ),
            Legality::NotFoundUpTo(k) => (None, format!("NotFoundUpTo({k})")),
        };
        self.legal = holds;
        Check::new(holds, true, summary, format!("K_max = {}", self.cfg.k_max), &l)
    }

    fn lprime_data(&mut self) -> Result<&LPrime> {
        if self.lprime.is_none() {
            self.lprime = Some(compute_lprime(self.sys, 2, self.cfg.budget)?);
        }
        Ok(self.lprime.as_ref().expect("just set"))
    }

    pub fn lprime(&mut self) -> Result<Check> {
        let lp = self.lprime_data()?.clone();
        let holds = Some(!lp.provisional && lp.inflation_inclusion);
        Check::new(
            holds,
            false,
            format!(
                "L' basis {:?}, index {}",
                lp.lprime.columns(),
                lp.lprime.index().map_or("infinite".into(), |i| i.to_string())
            ),
            "stable for 2 levels",
            &lp,
        )
    }

    fn context(&mut self) -> Result<&mut CoincidenceContext> {
        if self.ctx.is_none() {
            let lp = self.lprime_data()?.clone();
            self.ctx = Some(CoincidenceContext::new(self.sys, lp, DEFAULT_TABLE_BUDGET)?);
        }
        Ok(self.ctx.as_mut().expect("just set"))
    }

    fn coincidence_data(&mut self) -> Result<CoincidenceReport> {
        if self.coincidence.is_none() {
            let (sys, m_max) = (self.sys, self.cfg.m_max);
            let r = find_modular_coincidence(self.context()?, sys, m_max)?;
            self.coincidence = Some(r);
        }
        Ok(self.coincidence.clone().expect("just set"))
    }

    pub fn modular_coincidence(&mut self) -> Result<Check> {
        let r = self.coincidence_data()?;
        let modulus = self.context()?.space.modulus_owned(r.level)?.columns().to_vec();
        let witnesses: Vec<String> = r
            .witnesses
            .iter()
            .map(|w| format!("{} -> {}", coset_text(&w.coset, &modulus), self.sys.colors[w.row]))
            .collect();
        let summary = if r.found {
            format!("modular coincidence at M={}: {}", r.level, witnesses.join(", "))
        } else {
            format!("no coincidence found (M≤{})", r.search_bound)
        };
        let exact = r.covering_verified;
        let holds = r.found.then_some(true);
        Check::new(
            holds,
            exact,
            summary,
            format!("M_max = {}", self.cfg.m_max),
            json!({ "report": r, "modulus": modulus, "witnesses": witnesses }),
        )
    }

    pub fn windows(&mut self) -> Result<Check> {
        let coin = self.coincidence_data()?;
        let (sys, depth, dn) = (self.sys, self.cfg.depth, self.density_nonvanishing);
        let ctx = self.context()?;
        let report = model_set_report(ctx, sys, depth, &coin, dn)?;
        let measures = window_measures(ctx, sys, depth)?;
        Check::new(
            report.pure_point,
            true,
            format!("{}; outer measure residual {:.3e}", report.verdict, measures.residual),
            format!("depth {depth}"),
            json!({ "model_set": report, "measures": measures }),
        )
    }

    fn attractors_data(&mut self) -> Result<&[TileAttractor]> {
        if self.attractors.is_none() {
            let h = self.cfg.cell_size(self.sys.dim());
            self.attractors = Some(solve_adjoint(self.sys, h, self.cfg.iters, RasterMode::Outer)?);
        }
        Ok(self.attractors.as_deref().expect("just set"))
    }

    pub fn tiles(&mut self) -> Result<Check> {
        let (sys, budget) = (self.sys, self.cfg.budget);
        let att = self.attractors_data()?.to_vec();
        let h = att[0].grid.h;
        let shape = json!({
            "cell": h,
            "iterations": att[0].iterations,
            "converged": att.iter().map(|a| a.converged).collect::<Vec<_>>(),
            "hausdorff_gap": att.iter().map(|a| a.hausdorff_gap).collect::<Vec<_>>(),
            "boundary_fraction": att.iter().map(|a| a.grid.boundary_fraction()).collect::<Vec<_>>(),
            "exact_intervals": att.iter().map(|a| a.exact_interval.clone()).collect::<Vec<_>>(),
        });
        match volume_check(sys, &att, budget) {
            Ok(v) => {
                let k = v.covering_multiplicity.round();
                let near = (v.covering_multiplicity - k).abs() <= 0.05;
                let (holds, what) = match (near, k as i64) {
                    (true, 1) => (Some(true), "tiling".to_string()),
                    (true, k) => (Some(false), format!("covers {k} times")),
                    _ => (None, "non-integral covering".to_string()),
                };
                Check::new(
                    holds,
                    false,
                    format!(
                        "{what}: covering multiplicity {}, volumes {:?}",
                        fmt(v.covering_multiplicity),
                        v.volumes.iter().map(|x| fmt(*x)).collect::<Vec<_>>()
                    ),
                    format!("cell {h}"),
                    json!({ "volumes": v, "attractors": shape }),
                )
            }
            Err(Error::NotConverged { gap, threshold }) => Check::new(
                None,
                false,
                format!("attractors not converged (gap {gap} > {threshold})"),
                format!("cell {h}"),
                json!({ "attractors": shape }),
            ),
            Err(e) => Err(e),
        }
    }

    pub fn overlap_graph(&mut self) -> Result<OverlapGraph> {
        let (sys, budget, theta) = (self.sys, self.cfg.budget, self.cfg.theta);
        let shifts = match self.cfg.shifts.clone() {
            Some(s) => s,
            None => {
                let lp = self.lprime_data()?.lprime.clone();
                default_shifts(sys, &lp, budget)?
            }
        };
        let att = self.attractors_data()?.to_vec();
        build_overlap_graph(sys, &att, &shifts, theta, budget)
    }

    pub fn overlap(&mut self) -> Result<Check> {
        let g = match self.overlap_graph() {
            Ok(g) => g,
            Err(Error::NotConverged { gap, threshold }) => {
                return Check::new(
                    None,
                    false,
                    format!("attractors not converged (gap {gap} > {threshold})"),
                    "",
                    (),
                )
            }
            Err(e) => return Err(e),
        };
        let v = coincidence_reachability(&g);
        let holds = v.agreed().map(|r| *r == Reach::AllReach);
        let conditional = self.legal != Some(true);
        let mut summary = match holds {
            Some(true) => "overlap AllReach".to_string(),
            Some(false) => "overlap Stuck".to_string(),
            None => "overlap inconclusive".to_string(),
        };
        if conditional {
            summary.push_str(" (conditional: seed legality not established)");
        }
        let mut check = Check::new(
            holds,
            g.exact,
            summary,
            format!("theta {}, {} classes", g.theta, g.vertices.len()),
            json!({
                "shifts": g.shifts,
                "classes": g.vertices.len(),
                "exact": g.exact,
                "conditional": conditional,
                "coincidences_absorb": g.coincidences_absorb(),
                "verdict": v,
            }),
        )?;
        if conditional && matches!(check.grade, Grade::Certified | Grade::Refuted) {
            check.grade = Grade::Evidence;
        }
        Ok(check)
    }

    pub fn density(&mut self) -> Result<Check> {
        let (sys, budget) = (self.sys, self.cfg.budget);
        let lp = self.lprime_data()?.lprime.clone();
        let alphas = self.cfg.alphas.clone().unwrap_or_else(|| default_alphas(&lp));
        let target: u128 = if sys.dim() == 1 { 1 << 17 } else { 1 << 19 };
        let scale = window_scale_for(sys, target)?;
        let seq = VanHoveSequence::unit(sys.dim(), vec![scale]);
        let window = seq.window(sys, scale)?;
        let mut rows = Vec::new();
        let mut all_decay = true;
        let mut any_flat = false;
        for alpha in &alphas {
            let n = max_shift_level(sys, alpha, &window.bounds, self.cfg.density_n);
            let series = density_symdiff_series(sys, &lp, alpha, n, &seq, budget)?;
            let fit = rate_fit(&series).ok();
            let ratio = tail_ratio(&series.values_f64());
            match &fit {
                Some(RateFit::Decay { .. }) => {}
                Some(RateFit::NonVanishing { .. }) if ratio.is_some_and(|r| r <= STILL_FALLING) => {
                    all_decay = false;
                }
                Some(RateFit::NonVanishing { .. }) => {
                    all_decay = false;
                    any_flat = true;
                }
                None => all_decay = false,
            }
            rows.push(json!({
                "monotone_within_margin": series.is_monotone_within(1e-3),
                "tail_ratio": ratio,
                "series": series,
                "fit": fit,
            }));
        }
        let holds = if any_flat {
            Some(false)
        } else if all_decay {
            Some(true)
        } else {
            None
        };
        self.density_nonvanishing = holds.map(|h| !h);
        let summary = match holds {
            Some(true) => "density vanishing",
            Some(false) => "density non-vanishing",
            None => "density unresolved (above floor, still decreasing)",
        };
        Check::new(
            holds,
            false,
            summary,
            format!("window F_{scale}, n <= {}", self.cfg.density_n),
            json!({ "alphas": alphas, "rows": rows }),
        )
    }

    fn frequency_setup(&self) -> Result<(u32, VanHoveSequence, Vec<Vec<i64>>)> {
        let sys = self.sys;
        let d = sys.dim();
        let target: u128 = if d == 1 { 1 << 13 } else { 1 << 14 };
        let top = window_scale_for(sys, target)?;
        let seq = VanHoveSequence::unit(d, vec![top.saturating_sub(2), top]);
        let extent: Vec<i64> = {
            let b = seq.window(sys, top)?.bounds;
            b.lo.iter().zip(&b.hi).map(|(l, h)| h - l + 1).collect()
        };
        let tr = random_translates(self.cfg.rng_seed, self.cfg.translates, &extent);
        Ok((top, seq, tr))
    }

    /// Frequency of one cluster; holds when the spread over translates is
    /// at most `0.02`.
    pub fn cluster_frequency(&mut self, p: &Cluster) -> Result<Check> {
        let (top, seq, tr) = self.frequency_setup()?;
        let f = cluster_frequency(self.sys, p, &seq, &tr, self.cfg.budget)?;
        Check::new(
            Some(f.spread <= 0.02),
            false,
            format!("frequency {}, spread {}", fmt(f.mean), fmt(f.spread)),
            format!("window F_{top}, {} translates", tr.len()),
            json!({ "cluster": p, "estimate": f }),
        )
    }

    pub fn frequency(&mut self) -> Result<Check> {
        let sys = self.sys;
        let m = sys.num_colors();
        let d = sys.dim();
        let (top, seq, tr) = self.frequency_setup()?;
        let mut means = Vec::with_capacity(m);
        let mut spreads = Vec::with_capacity(m);
        for i in 0..m {
            let p = Cluster::singleton(m, i, vec![0; d]);
            let f = cluster_frequency(sys, &p, &seq, &tr, self.cfg.budget)?;
            means.push(f.mean);
            spreads.push(f.spread);
        }
        let total: f64 = means.iter().sum();
        let predicted: Vec<f64> = match pf_data(&substitution_matrix(sys), &sys.q) {
            Ok(pf) => pf.right_vector.iter().map(|r| r * total).collect(),
            Err(_) => Vec::new(),
        };
        let spread = spreads.iter().cloned().fold(0.0, f64::max);
        let deviation = predicted
            .iter()
            .zip(&means)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Check::new(
            Some(spread <= 0.02 && deviation <= 0.02),
            false,
            format!(
                "point frequencies {:?}, spread {}",
                means.iter().map(|x| fmt(*x)).collect::<Vec<_>>(),
                fmt(spread)
            ),
            format!("window F_{top}, {} translates", tr.len()),
            json!({
                "means": means,
                "spreads": spreads,
                "pf_prediction": predicted,
                "max_deviation": deviation,
            }),
        )
    }

    pub fn diffraction(&mut self) -> Result<Check> {
        let radius = self.cfg.diffraction_radius.unwrap_or(match self.sys.dim() {
            1 => 8192,
            2 => 64,
            _ => 8,
        });
        let (_, patch) = central_patch(self.sys, radius, self.cfg.budget)?;
        let mut weights = vec![0.0; self.sys.num_colors()];
        weights[0] = 1.0;
        let e = diffraction_estimate(&patch, &weights, &DiffractionConfig::default())?;
        Check::new(
            None,
            false,
            format!("heuristic: concentration {}", fmt(e.concentration)),
            format!("patch radius {radius}"),
            json!({ "weights": weights, "estimate": e }),
        )
    }

    /// Runs every check; failures of one check are recorded in its block.
    pub fn full(&mut self) -> Result<AnalysisReport> {
        let mut r = AnalysisReport::empty(self.sys.name.clone());
        let c = &mut r.checks;
        c.expansivity = guard(self.expansivity())?;
        c.primitivity = guard(self.primitivity())?;
        c.pf_consistency = guard(self.pf_consistency())?;
        c.fixed_point = guard(self.fixed_point())?;
        c.legality = guard(self.legality())?;
        c.lprime = guard(self.lprime())?;
        c.modular_coincidence = guard(self.modular_coincidence())?;
        c.density = guard(self.density())?;
        c.windows = guard(self.windows())?;
        c.tiles = guard(self.tiles())?;
        c.overlap = guard(self.overlap())?;
        c.frequency = guard(self.frequency())?;
        c.diffraction = guard(self.diffraction())?;
        r.overall = overall(&r.checks, self.coincidence.as_ref());
        Ok(r)
    }
}

/// Per-level ratio above which a series over the floor counts as flat.
const STILL_FALLING: f64 = 0.9;

/// Geometric mean of `v[n] / v[n-1]` over the second half of the series.
fn tail_ratio(v: &[f64]) -> Option<f64> {
    let mid = v.len() / 2;
    let last = v.len().checked_sub(1)?;
    if last <= mid || v[mid] <= 0.0 {
        return None;
    }
    Some((v[last] / v[mid]).powf(1.0 / (last - mid) as f64))
}

/// Budget exhaustion and unsupported inputs become an inconclusive block.
fn guard(r: Result<Check>) -> Result<Check> {
    match r {
        Ok(c) => Ok(c),
        Err(e @ (Error::BudgetExceeded { .. } | Error::Unsupported(_) | Error::Overflow(_))) => {
            Ok(Check {
                grade: Grade::Inconclusive,
                holds: None,
                summary: format!("not completed: {e}"),
                bound: String::new(),
                detail: serde_json::Value::Null,
            })
        }
        Err(e) => Err(e),
    }
}

fn overall(c: &super::report::Checks, coin: Option<&CoincidenceReport>) -> Overall {
    let signals = Signals {
        modular_coincidence: c.modular_coincidence.holds,
        regular_model_set: c.windows.holds,
        density_vanishing: c.density.holds,
        overlap_coincidence: c.overlap.holds,
    };
    let consistent = signals.consistent();
    let known = [
        signals.modular_coincidence,
        signals.regular_model_set,
        signals.density_vanishing,
        signals.overlap_coincidence,
    ];
    let pure_point = if !consistent {
        None
    } else if known.contains(&Some(true)) {
        Some(true)
    } else if known.contains(&Some(false)) {
        Some(false)
    } else {
        None
    };
    let coin_part = match coin {
        Some(r) if r.found => format!("modular coincidence at M={}", r.level),
        Some(r) => format!("no coincidence found (M≤{})", r.search_bound),
        None => "modular coincidence not run".into(),
    };
    let parts = [
        coin_part.clone(),
        c.density.summary.clone(),
        c.overlap.summary.clone(),
    ]
    .join("; ");
    let (grade, verdict) = match pure_point {
        Some(true) => {
            let certified = c.modular_coincidence.grade == Grade::Certified
                && c.windows.grade == Grade::Certified;
            let verdict = if signals.regular_model_set == Some(true) {
                format!("pure point ({coin_part}); regular model set")
            } else {
                format!("pure point ({parts})")
            };
            (if certified { Grade::Certified } else { Grade::Evidence }, verdict)
        }
        Some(false) => {
            let grade = if c.overlap.grade == Grade::Refuted {
                Grade::Refuted
            } else {
                Grade::Evidence
            };
            (grade, format!("not pure point: {parts}"))
        }
        None if !consistent => (Grade::Inconclusive, format!("conflicting criteria: {parts}")),
        None => (Grade::Inconclusive, format!("undetermined: {parts}")),
    };
    Overall {
        grade,
        pure_point,
        verdict,
        signals,
        consistent,
    }
}
