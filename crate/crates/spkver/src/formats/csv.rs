//! Diagnostics report CSV.

use std::fmt::Write as _;

use spkver_core::adaptation::Normalization;

pub const DIAGNOSTICS_HEADER: &str = "M,P,normalization,avg_between_class_distance,mean_tau,mean_mismatch,mean_positive_sv,mean_negative_sv,vapnik_bound";

/// One row of the diagnostics report. Unmeasured quantities are `None` and
/// are written as empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub order: usize,
    pub partitions: usize,
    pub normalization: Normalization,
    pub avg_between_class_distance: Option<f64>,
    pub mean_tau: Option<f64>,
    pub mean_mismatch: Option<f64>,
    pub mean_positive_sv: Option<f64>,
    pub mean_negative_sv: Option<f64>,
    pub vapnik_bound: Option<f64>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn format_diagnostics(rows: &[DiagnosticsRow]) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.order,
            r.partitions,
            r.normalization.as_str(),
            cell(r.avg_between_class_distance),
            cell(r.mean_tau),
            cell(r.mean_mismatch),
            cell(r.mean_positive_sv),
            cell(r.mean_negative_sv),
            cell(r.vapnik_bound),
        )
        .expect("string write");
    }
    out
}
