//! Theoretical box-dimension verdict from the extrema of `|s|`, mesh box
//! counting on rendered lattices, and the containment check between them.

use alloc::vec;
use alloc::vec::Vec;

use crate::attractor::{self, LatticeBudget, LatticeError, LatticeValues};
use crate::grid::{height_report, DataGrid, HeightReport};
use crate::ifs::{validate_vertical, CellMatrix, SignMode, SurfaceSystem, SystemError, VerticalField};

/// `log_n(a)`, computed as a ratio of binary logarithms so that powers of two
/// come out exact.
pub fn log_base(n: usize, a: f64) -> f64 {
    libm::log2(a) / libm::log2(n as f64)
}

/// Per-cell extrema of `|s|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellExtremaMatrix {
    pub s_min: CellMatrix<f64>,
    pub s_max: CellMatrix<f64>,
    pub resolution: usize,
    pub certified: bool,
    /// Largest `L_s δ` over the cells.
    pub lipschitz_slack: f64,
}

impl CellExtremaMatrix {
    /// `ã = Σ s̃_ij`
    pub fn a_tilde(&self) -> f64 {
        self.s_min.iter().sum()
    }

    /// `ā = Σ s̄_ij`
    pub fn a_bar(&self) -> f64 {
        self.s_max.iter().sum()
    }

    pub fn global_min(&self) -> f64 {
        self.s_min.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn global_max(&self) -> f64 {
        self.s_max.iter().copied().fold(0.0, f64::max)
    }
}

/// Samples `|s|` on `(resolution + 1)²` points per cell.
pub fn cell_extrema(
    s: &VerticalField,
    grid: &DataGrid,
    resolution: usize,
    mode: SignMode,
) -> Result<CellExtremaMatrix, SystemError> {
    if resolution < 2 {
        return Err(SystemError::Resolution(resolution));
    }
    let meta = validate_vertical(s, grid, resolution, mode)?;
    let (n, m) = meta.dims();
    let slack = CellMatrix::from_fn(n, m, |i, j| {
        meta.get(i, j).lipschitz_estimate * grid.cell_rect(i, j).diameter() / resolution as f64
    });
    let certified = (1..=n).all(|i| {
        (1..=m).all(|j| {
            let (c, d) = (meta.get(i, j), *slack.get(i, j));
            c.max_abs + d < 1.0 && c.min_abs - d > 0.0
        })
    });
    Ok(CellExtremaMatrix {
        s_min: CellMatrix::from_fn(n, m, |i, j| meta.get(i, j).min_abs),
        s_max: CellMatrix::from_fn(n, m, |i, j| meta.get(i, j).max_abs),
        resolution,
        certified,
        lipschitz_slack: slack.iter().copied().fold(0.0, f64::max),
    })
}

/// [`cell_extrema`] from the metadata a system computed when it was built.
pub fn system_extrema(system: &SurfaceSystem) -> CellExtremaMatrix {
    let meta = system.s_meta();
    let (n, m) = meta.dims();
    let grid = system.grid();
    let resolution = system.resolution();
    let slack = CellMatrix::from_fn(n, m, |i, j| {
        meta.get(i, j).lipschitz_estimate * grid.cell_rect(i, j).diameter() / resolution as f64
    });
    CellExtremaMatrix {
        s_min: CellMatrix::from_fn(n, m, |i, j| meta.get(i, j).min_abs),
        s_max: CellMatrix::from_fn(n, m, |i, j| meta.get(i, j).max_abs),
        resolution,
        certified: system.s_certified(),
        lipschitz_slack: slack.iter().copied().fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VerdictCase {
    Bounds { lower: f64, upper: f64 },
    ExactTwo,
    /// `ã ≤ n < ā`: neither case of the theorem applies.
    Inconclusive,
    /// `ã > n` but every section of the data is collinear.
    HypothesisFailed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionVerdict {
    pub case: VerdictCase,
    pub a_tilde: f64,
    pub a_bar: f64,
    pub n: usize,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerdictError {
    #[error("dimension bounds need at least 2 cells per axis, got {0}")]
    TooFewCells(usize),
    #[error("extrema matrix is {found:?}, expected {n} x {n}")]
    Shape { n: usize, found: (usize, usize) },
}

pub fn theorem_verdict(extrema: &CellExtremaMatrix, height: &HeightReport, n: usize) -> Result<DimensionVerdict, VerdictError> {
    if n < 2 {
        return Err(VerdictError::TooFewCells(n));
    }
    let found = extrema.s_min.dims();
    if found != (n, n) {
        return Err(VerdictError::Shape { n, found });
    }
    let (a_tilde, a_bar) = (extrema.a_tilde(), extrema.a_bar());
    let nf = n as f64;
    let case = if a_bar <= nf {
        VerdictCase::ExactTwo
    } else if a_tilde <= nf {
        VerdictCase::Inconclusive
    } else if height.has_noncollinear_section() {
        VerdictCase::Bounds { lower: 1.0 + log_base(n, a_tilde), upper: 1.0 + log_base(n, a_bar) }
    } else {
        VerdictCase::HypothesisFailed
    };
    Ok(DimensionVerdict { case, a_tilde, a_bar, n, height: height.height })
}

/// Bounds from the global extrema of `|s|` alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Remark1 {
    /// `s̄ ≤ 1/n`, so `ā ≤ n` and the dimension is 2.
    DimensionTwo,
    /// `lower` is `max(2, 3 + log_n s̃)`; `lower_clamped` records whether the
    /// clamp applied.
    Bounds { lower: f64, upper: f64, lower_clamped: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum Remark1Error {
    #[error("need 0 < s_min <= s_max < 1, got s_min = {s_min}, s_max = {s_max}")]
    Range { s_min: f64, s_max: f64 },
    #[error("need n >= 2, got {0}")]
    TooFewCells(usize),
}

pub fn remark1_bounds(s_min: f64, s_max: f64, n: usize) -> Result<Remark1, Remark1Error> {
    if n < 2 {
        return Err(Remark1Error::TooFewCells(n));
    }
    if !(s_min > 0.0 && s_min <= s_max && s_max < 1.0) {
        return Err(Remark1Error::Range { s_min, s_max });
    }
    if s_max <= 1.0 / n as f64 {
        return Ok(Remark1::DimensionTwo);
    }
    let raw = 3.0 + log_base(n, s_min);
    Ok(Remark1::Bounds { lower: raw.max(2.0), upper: 3.0 + log_base(n, s_max), lower_clamped: raw < 2.0 })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoxCountError {
    #[error("scale r = {r} must lie in 1..={depth} for a depth-{depth} lattice")]
    ScaleOutOfRange { r: usize, depth: usize },
    #[error("scale range {lo}..={hi} is empty")]
    EmptyRange { lo: usize, hi: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Running per-column minima and maxima for several scales, fed one lattice
/// row at a time.
#[derive(Debug, Clone)]
pub struct ColumnAccumulator {
    total: usize,
    scales: Vec<Scale>,
}

#[derive(Debug, Clone)]
struct Scale {
    r: usize,
    columns: usize,
    /// Column index of every lattice index.
    column_of: Vec<usize>,
    min: Vec<f64>,
    max: Vec<f64>,
}

impl ColumnAccumulator {
    /// For a lattice of `side` samples per axis with `n` cells per axis.
    pub fn new(n: usize, side: usize, scales: &[usize]) -> ColumnAccumulator {
        let total = side - 1;
        let scales = scales
            .iter()
            .map(|&r| {
                let columns = n.pow(r as u32);
                let width = total / columns;
                let column_of = (0..side).map(|q| (q / width).min(columns - 1)).collect();
                Scale {
                    r,
                    columns,
                    column_of,
                    min: vec![f64::INFINITY; columns * columns],
                    max: vec![f64::NEG_INFINITY; columns * columns],
                }
            })
            .collect();
        ColumnAccumulator { total, scales }
    }

    pub fn push_row(&mut self, a: usize, row: &[f64]) {
        debug_assert_eq!(row.len(), self.total + 1);
        for scale in &mut self.scales {
            let base = scale.column_of[a] * scale.columns;
            let (min, max) = (&mut scale.min[base..base + scale.columns], &mut scale.max[base..base + scale.columns]);
            for (&c, &v) in scale.column_of.iter().zip(row) {
                if v < min[c] {
                    min[c] = v;
                }
                if v > max[c] {
                    max[c] = v;
                }
            }
        }
    }

    /// `(r, N(ε_r))` for every scale.
    pub fn counts(&self) -> Vec<(usize, u64)> {
        self.scales
            .iter()
            .map(|scale| {
                let inv = scale.columns as f64;
                let n: u64 = scale
                    .min
                    .iter()
                    .zip(&scale.max)
                    .map(|(&lo, &hi)| (libm::floor(hi * inv) - libm::floor(lo * inv)) as u64 + 1)
                    .sum();
                (scale.r, n)
            })
            .collect()
    }
}

/// Number of `ε_r`-mesh cubes (`ε_r = n^-r`) meeting the sampled graph:
/// columns are half-open in index space with the last one closed, and a
/// column with sample range `[lo, hi]` needs `⌊hi/ε⌋ − ⌊lo/ε⌋ + 1` cubes.
pub fn count_boxes(lattice: &LatticeValues, r: usize) -> Result<u64, BoxCountError> {
    if r == 0 || r > lattice.depth() {
        return Err(BoxCountError::ScaleOutOfRange { r, depth: lattice.depth() });
    }
    let mut acc = ColumnAccumulator::new(lattice.n(), lattice.side(), &[r]);
    for a in 0..lattice.side() {
        acc.push_row(a, lattice.row(a));
    }
    Ok(acc.counts()[0].1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxCountSeries {
    pub n: usize,
    pub lattice_depth: usize,
    /// `(r, ε_r)`
    pub scales: Vec<(usize, f64)>,
    pub counts: Vec<u64>,
}

impl BoxCountSeries {
    pub fn from_counts(n: usize, lattice_depth: usize, counts: &[(usize, u64)]) -> BoxCountSeries {
        BoxCountSeries {
            n,
            lattice_depth,
            scales: counts.iter().map(|&(r, _)| (r, 1.0 / n.pow(r as u32) as f64)).collect(),
            counts: counts.iter().map(|&(_, c)| c).collect(),
        }
    }
}

fn scale_range(lo: usize, hi: usize, depth: usize) -> Result<Vec<usize>, BoxCountError> {
    if lo > hi {
        return Err(BoxCountError::EmptyRange { lo, hi });
    }
    for r in [lo, hi] {
        if r == 0 || r > depth {
            return Err(BoxCountError::ScaleOutOfRange { r, depth });
        }
    }
    Ok((lo..=hi).collect())
}

pub fn box_count_series_from_lattice(lattice: &LatticeValues, r_lo: usize, r_hi: usize) -> Result<BoxCountSeries, BoxCountError> {
    let scales = scale_range(r_lo, r_hi, lattice.depth())?;
    let mut acc = ColumnAccumulator::new(lattice.n(), lattice.side(), &scales);
    for a in 0..lattice.side() {
        acc.push_row(a, lattice.row(a));
    }
    Ok(BoxCountSeries::from_counts(lattice.n(), lattice.depth(), &acc.counts()))
}

/// Box counts of the depth-`depth` lattice of `system`. Only the level below
/// is stored; the final level is counted row by row as it is produced.
pub fn box_count_series(
    system: &SurfaceSystem,
    depth: usize,
    r_lo: usize,
    r_hi: usize,
    budget: LatticeBudget,
) -> Result<BoxCountSeries, BoxCountError> {
    let scales = scale_range(r_lo, r_hi, depth)?;
    attractor::check_streaming(system)?;
    let n = system.n();
    let prev = attractor::evaluate_lattice_with_budget(system, depth - 1, budget)?;
    let side = attractor::lattice_side(n, depth).ok_or(LatticeError::BudgetExceeded { required: u128::MAX, budget: budget.0 })?;
    let mut acc = ColumnAccumulator::new(n, side, &scales);
    attractor::refine_streaming(system, &prev, |a, row| acc.push_row(a, row))?;
    Ok(BoxCountSeries::from_counts(n, depth, &acc.counts()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least 3 scales in {lo}..={hi}, found {found}")]
    TooFewScales { lo: usize, hi: usize, found: usize },
    #[error("count at scale {r} is zero")]
    ZeroCount { r: usize },
}

/// Least-squares slope of `log_n N(ε_r)` against `r = log_n(1/ε_r)` over the
/// scales with `r_lo ≤ r ≤ r_hi`.
pub fn estimate_dimension(series: &BoxCountSeries, r_lo: usize, r_hi: usize) -> Result<SlopeFit, FitError> {
    let mut pts = Vec::new();
    for (&(r, _), &c) in series.scales.iter().zip(&series.counts) {
        if r < r_lo || r > r_hi {
            continue;
        }
        if c == 0 {
            return Err(FitError::ZeroCount { r });
        }
        pts.push((r as f64, log_base(series.n, c as f64)));
    }
    let k = pts.len();
    if k < 3 {
        return Err(FitError::TooFewScales { lo: r_lo, hi: r_hi, found: k });
    }
    let kf = k as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / kf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / kf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts
        .iter()
        .map(|p| {
            let e = p.1 - intercept - slope * p.0;
            e * e
        })
        .sum();
    let stderr = libm::sqrt(ssr / (kf - 2.0) / sxx);
    Ok(SlopeFit { slope, stderr, intercept, points: k })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    Contained,
    NotContained,
    /// The verdict gives no interval to test against.
    NotApplicable,
}

pub fn verify_containment(verdict: &DimensionVerdict, slope: f64, tolerance: f64) -> Containment {
    let inside = match verdict.case {
        VerdictCase::Bounds { lower, upper } => slope >= lower - tolerance && slope <= upper + tolerance,
        VerdictCase::ExactTwo => (slope - 2.0).abs() <= tolerance,
        VerdictCase::Inconclusive | VerdictCase::HypothesisFailed => return Containment::NotApplicable,
    };
    if inside {
        Containment::Contained
    } else {
        Containment::NotContained
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionOptions {
    pub depth: usize,
    pub r_lo: usize,
    pub r_hi: usize,
    pub tolerance: f64,
    pub budget: LatticeBudget,
}

impl DimensionOptions {
    /// Fit range `2..=depth-1`, tolerance 0.1.
    pub fn with_depth(depth: usize) -> DimensionOptions {
        DimensionOptions {
            depth,
            r_lo: 2,
            r_hi: depth.saturating_sub(1),
            tolerance: 0.1,
            budget: LatticeBudget::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionReport {
    pub height: HeightReport,
    pub extrema: CellExtremaMatrix,
    pub verdict: DimensionVerdict,
    pub remark1: Option<Remark1>,
    pub series: BoxCountSeries,
    pub fit: SlopeFit,
    pub containment: Containment,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DimensionError {
    #[error("largest scale r = {r_hi} needs lattice depth at least {} (got {depth})", r_hi + 1)]
    DepthTooShallow { r_hi: usize, depth: usize },
    #[error(transparent)]
    Verdict(#[from] VerdictError),
    #[error(transparent)]
    BoxCount(#[from] BoxCountError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Height, extrema, verdict, box counts, slope and containment in one pass.
/// The largest scale must stay one level above the lattice depth so that
/// every column holds more than one refinement level of samples.
pub fn analyze_dimension(system: &SurfaceSystem, options: &DimensionOptions) -> Result<DimensionReport, DimensionError> {
    if options.r_hi + 1 > options.depth {
        return Err(DimensionError::DepthTooShallow { r_hi: options.r_hi, depth: options.depth });
    }
    let height = height_report(system.grid());
    let extrema = system_extrema(system);
    let verdict = theorem_verdict(&extrema, &height, system.n())?;
    let remark1 = remark1_bounds(extrema.global_min(), extrema.global_max(), system.n()).ok();
    let series = box_count_series(system, options.depth, options.r_lo, options.r_hi, options.budget)?;
    let fit = estimate_dimension(&series, options.r_lo, options.r_hi)?;
    let containment = verify_containment(&verdict, fit.slope, options.tolerance);
    Ok(DimensionReport { height, extrema, verdict, remark1, series, fit, containment, tolerance: options.tolerance })
}
