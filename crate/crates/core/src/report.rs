//! The x² worked example: computed constants against the printed ones, and the
//! conversion of dimensionless times to seconds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bounds::{
    approx_bound_h3, chain_threshold, printed, theorem_threshold, BoundReport, Constants, ConstantsMode, CORRECTION_HORIZON,
};
use crate::error::Result;
use crate::spectral::{coupling_x2, operator_norm, printed_x_squared_entry, x_squared_entry, NormKind, NORM_CUTOFF};

/// Seconds per dimensionless time unit.
pub const TIME_SCALE: f64 = 1e-2;
/// Metres per dimensionless length unit.
pub const LENGTH_SCALE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Relative difference within the tolerance.
    Relative,
    /// `log10` difference within the tolerance.
    Order,
    /// Computed value does not exceed the printed bound.
    UpperBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub computed: f64,
    pub printed: f64,
    pub comparison: Comparison,
    pub tolerance: f64,
    pub matched: bool,
    pub note: String,
}

impl Row {
    fn new(name: &str, computed: f64, printed: f64, comparison: Comparison, tolerance: f64, note: &str) -> Self {
        let matched = match comparison {
            Comparison::Relative if printed == 0.0 => computed.abs() <= tolerance,
            Comparison::Relative => ((computed - printed) / printed).abs() <= tolerance,
            Comparison::Order => (computed.log10() - printed.log10()).abs() <= tolerance,
            Comparison::UpperBound => computed <= printed,
        };
        Self {
            name: name.into(),
            computed,
            printed,
            comparison,
            tolerance,
            matched,
            note: note.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalUnitReport {
    pub time_scale_s: f64,
    pub length_scale_m: f64,
    /// `(label, dimensionless duration, seconds)`.
    pub durations: Vec<(String, f64, f64)>,
}

impl PhysicalUnitReport {
    pub fn new(durations: &[(&str, f64)]) -> Self {
        Self {
            time_scale_s: TIME_SCALE,
            length_scale_m: LENGTH_SCALE,
            durations: durations.iter().map(|&(l, t)| (l.to_string(), t, to_seconds(t))).collect(),
        }
    }
}

pub fn to_seconds(t: f64) -> f64 {
    t * TIME_SCALE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section4 {
    pub rows: Vec<Row>,
    pub units: PhysicalUnitReport,
    pub paper_literal: BoundReport,
    pub scanned: BoundReport,
}

impl Section4 {
    pub fn row(&self, name: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Printed-vs-computed table for the transfer `φ₂ → φ₁` under `B = x²`.
pub fn section4() -> Result<Section4> {
    let b = coupling_x2(NORM_CUTOFF);
    let lit = Constants::new(&b, 2, 1, ConstantsMode::PaperLiteral)?;
    let scan = Constants::new(&b, 2, 1, ConstantsMode::Scanned)?;
    let n_ref = 1.0;
    let lit_report = BoundReport::new(n_ref, &lit)?;
    let scan_report = BoundReport::new(n_ref, &scan)?;
    let thr = theorem_threshold(&lit)?;
    let h3 = approx_bound_h3(1e100, &lit)?;
    let radius = thr.radius;
    let n_printed_chain = printed::H3_COEFFICIENT / radius.powi(8);
    let n_derived_chain = chain_threshold(&lit)?;
    let tstar = lit_report.Tstar;
    let l2 = operator_norm(&b, NormKind::L2)?.value;
    let h2 = operator_norm(&b, NormKind::H2Op)?.value;
    let h3n = operator_norm(&b, NormKind::H3Op)?.value;
    use Comparison::*;
    let rows = vec![
        Row::new("B_12 printed closed form", printed_x_squared_entry(1, 2).abs(), printed::B12, Relative, 1e-12, "4jk/((j²−k²)²π²)"),
        Row::new("B_12 matrix element", x_squared_entry(1, 2).abs(), printed::B12, Relative, 1e-12, "quadrature of √2sin(πx)·x²·√2sin(2πx)"),
        Row::new("norm_H3", h3n, printed::NORM_H3, UpperBound, 0.0, "cutoff 40"),
        Row::new("norm_H2", h2, printed::NORM_H2, UpperBound, 0.0, "cutoff 40"),
        Row::new("norm_L2", l2, printed::NORM_L2, UpperBound, 0.0, "cutoff 40"),
        Row::new("Cprime", lit.c_prime, 0.0, Relative, 0.0, "Λ′ is empty"),
        Row::new("Tstar", tstar, 9.0 * PI.powi(3) / 8.0, Relative, 1e-12, "paper-literal B_12"),
        Row::new("K", lit_report.K, 9.0 * PI * PI / 4.0, Relative, 1e-12, ""),
        Row::new("I", lit_report.I, 4.0 / (3.0 * PI * PI), Relative, 1e-12, ""),
        Row::new("radius", radius, printed::RADIUS, Relative, 0.01, "C₁ = (2π−3)/(6π²), ‖B‖₃ = 5.2"),
        Row::new("H3_coefficient", h3.leading_coefficient, printed::H3_COEFFICIENT, Order, 1.0, "lim n·bound"),
        Row::new("n_threshold", n_printed_chain, printed::N_THRESHOLD, Relative, 0.2, "10⁸⁰/radius⁸"),
        Row::new("n_threshold_derived", n_derived_chain, printed::N_THRESHOLD, Relative, 0.2, "assembled H³ bound ≤ radius⁸"),
        Row::new("n_star_general", thr.n_star, printed::N_THRESHOLD, Order, 1.0, "general threshold formula"),
        Row::new(
            "physical_time_s",
            to_seconds(n_printed_chain * tstar + CORRECTION_HORIZON),
            10f64.powf(printed::PHYSICAL_TIME_LOG10),
            Order,
            1.0,
            "n·T* + 4/π at 10⁻² s per unit",
        ),
    ];
    let units = PhysicalUnitReport::new(&[
        ("correction phase", CORRECTION_HORIZON),
        ("averaging phase at n_threshold", n_printed_chain * tstar),
        ("total", n_printed_chain * tstar + CORRECTION_HORIZON),
    ]);
    Ok(Section4 { rows, units, paper_literal: lit_report, scanned: scan_report })
}
