//! JSON report documents.

use fisurf_core::boxdim::{BoxCountSeries, CellExtremaMatrix, Remark1, SlopeFit};
use fisurf_core::grid::SectionAxis;
use fisurf_core::ifs::{CellMatrix, FieldSign};
use fisurf_core::{Containment, DimensionVerdict, HeightReport, SurfaceSystem, VerdictCase};
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "fisurf/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema: String,
    pub tool_version: String,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub system: Option<SystemSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub extrema: Option<ExtremaSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub verdict: Option<VerdictSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub global_bounds: Option<GlobalBoundsSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub box_counts: Vec<BoxCountRow>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fit: Option<FitSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub containment: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub points: Vec<PointRow>,
    /// Chaos-game points `[x, y, z]`.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub cloud: Vec<[f64; 3]>,
    /// Wall-clock seconds per stage; the only field that varies between
    /// identical runs.
    pub timings: Vec<Timing>,
}

impl ReportDocument {
    pub fn new(config: ConfigEcho) -> Self {
        ReportDocument {
            schema: SCHEMA.to_owned(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            config,
            system: None,
            extrema: None,
            verdict: None,
            global_bounds: None,
            box_counts: Vec::new(),
            fit: None,
            containment: None,
            points: Vec::new(),
            cloud: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report fields are finite");
        text.push('\n');
        text
    }
}

/// The effective configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub command: String,
    pub grid: String,
    pub s: String,
    pub g: Option<String>,
    pub h: Option<String>,
    pub resolution: usize,
    pub allow_negative_s: bool,
    pub depth: Option<usize>,
    pub scales: Option<(usize, usize)>,
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
    pub points: Option<usize>,
    pub burn_in: Option<usize>,
    pub at: Vec<(f64, f64)>,
    pub format: String,
    pub out: Option<String>,
    /// `FISURF_THREADS`, 0 meaning automatic.
    pub threads: usize,
    /// Dimension commands work on the grid mapped onto the unit square.
    pub normalized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub n: usize,
    pub m: usize,
    /// `[x0, x1, y0, y1]` of the grid as loaded.
    pub extent: [f64; 4],
    pub uniform: bool,
    pub max_spacing_deviation: f64,
    pub s_max: f64,
    pub s_sign: String,
    pub s_certified: bool,
    pub resolution: usize,
    pub height: HeightSummary,
}

impl SystemSummary {
    pub fn new(system: &SurfaceSystem) -> Self {
        let grid = system.grid();
        let e = grid.source_extent();
        let u = fisurf_core::is_uniform(grid);
        SystemSummary {
            n: system.n(),
            m: system.m(),
            extent: [e.x0, e.x1, e.y0, e.y1],
            uniform: u.uniform,
            max_spacing_deviation: u.max_deviation,
            s_max: system.s_max(),
            s_sign: match system.s_sign() {
                FieldSign::Positive => "positive",
                FieldSign::Negative => "negative",
                FieldSign::Mixed => "mixed",
            }
            .to_owned(),
            s_certified: system.s_certified(),
            resolution: system.resolution(),
            height: HeightSummary::new(&fisurf_core::height_report(grid)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightSummary {
    /// `column` (fixed x) or `row` (fixed y).
    pub best_axis: String,
    pub best_index: usize,
    pub height: f64,
    pub per_column: Vec<f64>,
    pub per_row: Vec<f64>,
    pub collinear_threshold: f64,
}

impl HeightSummary {
    pub fn new(h: &HeightReport) -> Self {
        HeightSummary {
            best_axis: match h.best_axis {
                SectionAxis::Column => "column",
                SectionAxis::Row => "row",
            }
            .to_owned(),
            best_index: h.best_index,
            height: h.height,
            per_column: h.per_column.clone(),
            per_row: h.per_row.clone(),
            collinear_threshold: h.collinear_threshold,
        }
    }
}

fn rows(c: &CellMatrix<f64>) -> Vec<Vec<f64>> {
    let (n, m) = c.dims();
    (1..=m).map(|j| (1..=n).map(|i| *c.get(i, j)).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremaSummary {
    pub a_tilde: f64,
    pub a_bar: f64,
    /// `s_min[j-1][i-1]` is `s̃_ij`.
    pub s_min: Vec<Vec<f64>>,
    pub s_max: Vec<Vec<f64>>,
    pub resolution: usize,
    pub certified: bool,
    pub lipschitz_slack: f64,
}

impl ExtremaSummary {
    pub fn new(e: &CellExtremaMatrix) -> Self {
        ExtremaSummary {
            a_tilde: e.a_tilde(),
            a_bar: e.a_bar(),
            s_min: rows(&e.s_min),
            s_max: rows(&e.s_max),
            resolution: e.resolution,
            certified: e.certified,
            lipschitz_slack: e.lipschitz_slack,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictSummary {
    /// `bounds`, `exact_two`, `inconclusive` or `hypothesis_failed`.
    pub case: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub a_tilde: f64,
    pub a_bar: f64,
    pub n: usize,
    pub height: f64,
}

impl VerdictSummary {
    pub fn new(v: &DimensionVerdict) -> Self {
        let (case, lower, upper) = match v.case {
            VerdictCase::Bounds { lower, upper } => ("bounds", Some(lower), Some(upper)),
            VerdictCase::ExactTwo => ("exact_two", Some(2.0), Some(2.0)),
            VerdictCase::Inconclusive => ("inconclusive", None, None),
            VerdictCase::HypothesisFailed => ("hypothesis_failed", None, None),
        };
        VerdictSummary { case: case.to_owned(), lower, upper, a_tilde: v.a_tilde, a_bar: v.a_bar, n: v.n, height: v.height }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalBoundsSummary {
    /// `dimension_two` or `bounds`.
    pub case: String,
    pub lower: f64,
    pub upper: f64,
    pub lower_clamped: bool,
}

impl GlobalBoundsSummary {
    pub fn new(r: &Remark1) -> Self {
        match *r {
            Remark1::DimensionTwo => {
                GlobalBoundsSummary { case: "dimension_two".to_owned(), lower: 2.0, upper: 2.0, lower_clamped: false }
            }
            Remark1::Bounds { lower, upper, lower_clamped } => {
                GlobalBoundsSummary { case: "bounds".to_owned(), lower, upper, lower_clamped }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCountRow {
    pub r: usize,
    pub epsilon: f64,
    pub count: u64,
}

pub fn box_count_rows(series: &BoxCountSeries) -> Vec<BoxCountRow> {
    series
        .scales
        .iter()
        .zip(&series.counts)
        .map(|(&(r, epsilon), &count)| BoxCountRow { r, epsilon, count })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
    pub lattice_depth: usize,
}

impl FitSummary {
    pub fn new(fit: &SlopeFit, lattice_depth: usize) -> Self {
        FitSummary { slope: fit.slope, stderr: fit.stderr, intercept: fit.intercept, points: fit.points, lattice_depth }
    }
}

pub fn containment_label(c: Containment) -> String {
    match c {
        Containment::Contained => "contained",
        Containment::NotContained => "not_contained",
        Containment::NotApplicable => "not_applicable",
    }
    .to_owned()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub x: f64,
    pub y: f64,
    pub f: f64,
    pub error_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}
