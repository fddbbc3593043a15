use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// Strength of a check's outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Grade {
    /// Established by exact arithmetic.
    Certified,
    /// Supported by numerical, rasterized or finite-window data.
    Evidence,
    /// Neither established nor ruled out within the bound used.
    Inconclusive,
    /// Ruled out by exact arithmetic.
    Refuted,
    NotRun,
}

impl Grade {
    /// The grade of an outcome from a check that is exact or not.
    pub fn of(holds: Option<bool>, exact: bool) -> Grade {
        match (holds, exact) {
            (None, _) => Grade::Inconclusive,
            (Some(true), true) => Grade::Certified,
            (Some(false), true) => Grade::Refuted,
            (Some(_), false) => Grade::Evidence,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub grade: Grade,
    /// Whether the checked property holds, when known.
    pub holds: Option<bool>,
    pub summary: String,
    /// Bound or budget the outcome is relative to.
    pub bound: String,
    pub detail: Value,
}

impl Check {
    pub fn not_run() -> Self {
        Check {
            grade: Grade::NotRun,
            holds: None,
            summary: "not run".into(),
            bound: String::new(),
            detail: Value::Null,
        }
    }

    pub fn new(
        holds: Option<bool>,
        exact: bool,
        summary: impl Into<String>,
        bound: impl Into<String>,
        detail: impl Serialize,
    ) -> Result<Self> {
        Ok(Check {
            grade: Grade::of(holds, exact),
            holds,
            summary: summary.into(),
            bound: bound.into(),
            detail: serde_json::to_value(detail)?,
        })
    }
}

impl Default for Check {
    fn default() -> Self {
        Check::not_run()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Checks {
    pub expansivity: Check,
    pub primitivity: Check,
    pub pf_consistency: Check,
    pub fixed_point: Check,
    pub legality: Check,
    pub lprime: Check,
    pub modular_coincidence: Check,
    pub windows: Check,
    pub overlap: Check,
    pub density: Check,
    pub tiles: Check,
    pub frequency: Check,
    pub diffraction: Check,
}

/// The pure-point criteria read off the individual checks.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Signals {
    pub modular_coincidence: Option<bool>,
    pub regular_model_set: Option<bool>,
    pub density_vanishing: Option<bool>,
    pub overlap_coincidence: Option<bool>,
}

impl Signals {
    /// No criterion says yes while another says no.
    pub fn consistent(&self) -> bool {
        let known = [
            self.modular_coincidence,
            self.regular_model_set,
            self.density_vanishing,
            self.overlap_coincidence,
        ];
        !(known.contains(&Some(true)) && known.contains(&Some(false)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Overall {
    pub grade: Grade,
    pub pure_point: Option<bool>,
    pub verdict: String,
    pub signals: Signals,
    pub consistent: bool,
}

impl Default for Overall {
    fn default() -> Self {
        Overall {
            grade: Grade::NotRun,
            pure_point: None,
            verdict: "not run".into(),
            signals: Signals::default(),
            consistent: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub system: String,
    pub checks: Checks,
    pub overall: Overall,
}

impl AnalysisReport {
    /// A report with every block "not run".
    pub fn empty(system: impl Into<String>) -> Self {
        AnalysisReport {
            schema_version: SCHEMA_VERSION,
            system: system.into(),
            checks: Checks::default(),
            overall: Overall::default(),
        }
    }
}

/// Pretty JSON with a trailing newline. Struct fields keep declaration
/// order and map keys are sorted, so equal reports give equal bytes.
pub fn report_json(value: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn emit_report(report: &AnalysisReport, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(report_json(report)?.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_all_not_run() {
        let r = AnalysisReport::empty("x");
        let v: Value = serde_json::from_str(&report_json(&r).unwrap()).unwrap();
        assert_eq!(v["schema_version"], 1);
        let checks = v["checks"].as_object().unwrap();
        assert_eq!(checks.len(), 13);
        assert!(checks.values().all(|c| c["grade"] == "not_run"));
        assert_eq!(v["overall"]["verdict"], "not run");
    }

    #[test]
    fn grades() {
        assert_eq!(Grade::of(Some(true), true), Grade::Certified);
        assert_eq!(Grade::of(Some(false), true), Grade::Refuted);
        assert_eq!(Grade::of(Some(false), false), Grade::Evidence);
        assert_eq!(Grade::of(None, true), Grade::Inconclusive);
    }

    #[test]
    fn mixed_signals_are_inconsistent() {
        let s = Signals {
            modular_coincidence: Some(true),
            overlap_coincidence: Some(false),
            ..Signals::default()
        };
        assert!(!s.consistent());
        let s = Signals {
            modular_coincidence: None,
            density_vanishing: Some(false),
            overlap_coincidence: Some(false),
            ..Signals::default()
        };
        assert!(s.consistent());
    }

    #[test]
    fn emitted_files_are_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
        let r = AnalysisReport::empty("x");
        emit_report(&r, &a).unwrap();
        emit_report(&r, &b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }
}
