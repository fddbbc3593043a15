//! Spec files, analysis reports and the command-line pipeline.

mod pipeline;
mod report;
mod spec;

pub use pipeline::{Analysis, Config};
pub use report::{
    emit_report, report_json, AnalysisReport, Check, Checks, Grade, Overall, Signals, SCHEMA_VERSION,
};
pub use spec::{bundled, bundled_names, parse_spec, parse_spec_str, serialize_spec, BUNDLED};
