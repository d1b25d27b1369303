//! The iterated function system `W_ij = (L_ij, F_ij)` over a data grid.
//!
//! Domain maps are affine. Consecutive maps alternate orientation so that
//! neighbouring cells share a pre-image endpoint on their common knot:
//! with `L_i` increasing, `L_i(last) = t_i = L_{i+1}(last)`.

use alloc::vec::Vec;
use core::fmt;

use crate::attractor::{self, LatticeValues};
use crate::expr::{lerp, sample_meta, EvalError, FieldMeta};
use crate::field::{default_g, default_h, Field};
use crate::grid::{DataGrid, KnotVector, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Increasing,
    Decreasing,
}

/// Affine bijection of the knot span onto one subinterval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalMap {
    pub orientation: Orientation,
    domain: (f64, f64),
    image: (f64, f64),
}

impl IntervalMap {
    pub fn new(domain: (f64, f64), image: (f64, f64), orientation: Orientation) -> Self {
        IntervalMap { orientation, domain, image }
    }

    /// Slope `a` of `t ↦ a t + b`.
    pub fn slope(&self) -> f64 {
        let s = (self.image.1 - self.image.0) / (self.domain.1 - self.domain.0);
        match self.orientation {
            Orientation::Increasing => s,
            Orientation::Decreasing => -s,
        }
    }

    /// Offset `b` of `t ↦ a t + b`.
    pub fn offset(&self) -> f64 {
        self.apply(self.domain.0) - self.slope() * self.domain.0
    }

    pub fn contraction(&self) -> f64 {
        self.slope().abs()
    }

    // Both directions interpolate between end points so that knots map to
    // knots without rounding.
    #[inline]
    pub fn apply(&self, t: f64) -> f64 {
        let w = (t - self.domain.0) / (self.domain.1 - self.domain.0);
        match self.orientation {
            Orientation::Increasing => lerp(self.image.0, self.image.1, w),
            Orientation::Decreasing => lerp(self.image.1, self.image.0, w),
        }
    }

    #[inline]
    pub fn invert(&self, u: f64) -> f64 {
        let w = (u - self.image.0) / (self.image.1 - self.image.0);
        match self.orientation {
            Orientation::Increasing => lerp(self.domain.0, self.domain.1, w),
            Orientation::Decreasing => lerp(self.domain.1, self.domain.0, w),
        }
    }
}

/// The maps `L_1, …, L_n` of one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisMaps {
    knots: KnotVector,
    maps: Vec<IntervalMap>,
}

impl AxisMaps {
    /// Alternating orientation starting with an increasing map.
    pub fn alternating(knots: &KnotVector) -> AxisMaps {
        let orientations: Vec<Orientation> = (0..knots.intervals())
            .map(|k| if k % 2 == 0 { Orientation::Increasing } else { Orientation::Decreasing })
            .collect();
        AxisMaps::with_orientations(knots, &orientations)
    }

    /// Arbitrary orientation pattern; not every pattern satisfies the shared
    /// end point condition (see [`AxisMaps::matching_defect`]).
    ///
    /// Panics if `orientations` does not have one entry per interval.
    pub fn with_orientations(knots: &KnotVector, orientations: &[Orientation]) -> AxisMaps {
        assert_eq!(orientations.len(), knots.intervals(), "one orientation per interval");
        let t = knots.values();
        let domain = (knots.first(), knots.last());
        let maps = orientations
            .iter()
            .enumerate()
            .map(|(k, &o)| IntervalMap::new(domain, (t[k], t[k + 1]), o))
            .collect();
        AxisMaps { knots: knots.clone(), maps }
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// The 1-based map `L_i`.
    pub fn map(&self, i: usize) -> &IntervalMap {
        &self.maps[i - 1]
    }

    pub fn maps(&self) -> &[IntervalMap] {
        &self.maps
    }

    pub fn contraction_factors(&self) -> Vec<f64> {
        self.maps.iter().map(IntervalMap::contraction).collect()
    }

    /// First interior knot index `i` for which no end point `e` of the span
    /// has `L_i(e) = L_{i+1}(e) = t_i`.
    pub fn matching_defect(&self) -> Option<usize> {
        let t = self.knots.values();
        let tol = 1e-14 * self.knots.span().max(t[0].abs()).max(t[t.len() - 1].abs());
        let ends = [self.knots.first(), self.knots.last()];
        (1..self.maps.len()).find(|&i| {
            let (left, right) = (self.map(i), self.map(i + 1));
            !ends.iter().any(|&e| {
                (left.apply(e) - t[i]).abs() <= tol && (right.apply(e) - t[i]).abs() <= tol
            })
        })
    }
}

/// Values of a per-cell quantity, 1-based `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMatrix<T> {
    n: usize,
    m: usize,
    data: Vec<T>,
}

impl<T> CellMatrix<T> {
    pub fn from_fn(n: usize, m: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * m);
        for i in 1..=n {
            for j in 1..=m {
                data.push(f(i, j));
            }
        }
        CellMatrix { n, m, data }
    }

    pub fn try_from_fn<E>(n: usize, m: usize, mut f: impl FnMut(usize, usize) -> Result<T, E>) -> Result<Self, E> {
        let mut data = Vec::with_capacity(n * m);
        for i in 1..=n {
            for j in 1..=m {
                data.push(f(i, j)?);
            }
        }
        Ok(CellMatrix { n, m, data })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[(i - 1) * self.m + (j - 1)]
    }

    /// Entries in `(i, j)` order, `j` fastest.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }
}

impl<T: Clone> CellMatrix<T> {
    pub fn filled(n: usize, m: usize, value: T) -> Self {
        CellMatrix { n, m, data: alloc::vec![value; n * m] }
    }
}

/// The vertical contraction field `s`.
#[derive(Debug, Clone)]
pub enum VerticalField {
    /// Constant on each cell.
    Constant(CellMatrix<f64>),
    /// One field over the whole domain.
    Global(Field),
    /// A separate field `s_ij` on each cell.
    PerCell(CellMatrix<Field>),
}

impl VerticalField {
    pub fn uniform(value: f64, n: usize, m: usize) -> Self {
        VerticalField::Constant(CellMatrix::filled(n, m, value))
    }

    /// Value of `s` at `(x, y)` taken as a point of cell `(i, j)`.
    #[inline]
    pub fn value(&self, i: usize, j: usize, x: f64, y: f64) -> Result<f64, EvalError> {
        match self {
            VerticalField::Constant(c) => Ok(*c.get(i, j)),
            VerticalField::Global(f) => f.eval(x, y),
            VerticalField::PerCell(cells) => cells.get(i, j).eval(x, y),
        }
    }

    fn shape(&self) -> Option<(usize, usize)> {
        match self {
            VerticalField::Constant(c) => Some(c.dims()),
            VerticalField::Global(_) => None,
            VerticalField::PerCell(c) => Some(c.dims()),
        }
    }

    /// Sampled metadata of `s` on every cell of `grid`.
    pub fn cell_meta(&self, grid: &DataGrid, resolution: usize) -> Result<CellMatrix<FieldMeta>, EvalError> {
        CellMatrix::try_from_fn(grid.n(), grid.m(), |i, j| {
            sample_meta(grid.cell_rect(i, j), resolution, |x, y| self.value(i, j, x, y))
        })
    }
}

impl fmt::Display for VerticalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerticalField::Constant(c) => {
                let first = c.iter().next().copied().unwrap_or(0.0);
                if c.iter().all(|&v| v == first) {
                    write!(f, "{first:?}")
                } else {
                    f.write_str("per-cell constants")
                }
            }
            VerticalField::Global(field) => write!(f, "{field}"),
            VerticalField::PerCell(_) => f.write_str("per-cell fields"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignMode {
    /// `0 < s < 1`
    Positive,
    /// `0 < |s| < 1`
    AllowNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldSign {
    Positive,
    Negative,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SystemError {
    #[error("evaluating {field}: {source}")]
    Eval { field: &'static str, source: EvalError },
    #[error("vertical field out of range on cell ({i}, {j}) at ({x}, {y}): s = {value}, required {required}")]
    ContractionOutOfRange { i: usize, j: usize, x: f64, y: f64, value: f64, required: &'static str },
    #[error("g({x}, {y}) = {found} but the corner value is {expected}")]
    CornerMismatch { x: f64, y: f64, expected: f64, found: f64 },
    #[error("h({x}, {y}) = {found} but the knot value is {expected}")]
    KnotMismatch { x: f64, y: f64, expected: f64, found: f64 },
    #[error("{axis:?}-maps do not share an end point at interior knot {knot}")]
    UnmatchedMaps { axis: Axis, knot: usize },
    #[error("per-cell field has shape {found:?}, grid has {expected:?} cells")]
    ShapeMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("cell ({i}, {j}) out of range")]
    CellOutOfRange { i: usize, j: usize },
    #[error("point ({x}, {y}) lies outside the domain")]
    PointOutside { x: f64, y: f64 },
    #[error("sampling resolution must be at least 2, got {0}")]
    Resolution(usize),
}

fn eval_err(field: &'static str) -> impl Fn(EvalError) -> SystemError {
    move |source| SystemError::Eval { field, source }
}

pub const DEFAULT_RESOLUTION: usize = 64;

/// Configures and validates a [`SurfaceSystem`].
#[derive(Debug, Clone)]
pub struct SystemBuilder {
    grid: DataGrid,
    s: VerticalField,
    g: Option<Field>,
    h: Option<Field>,
    sign_mode: SignMode,
    resolution: usize,
    x_orientations: Option<Vec<Orientation>>,
    y_orientations: Option<Vec<Orientation>>,
    allow_unmatched: bool,
}

impl SystemBuilder {
    pub fn g(mut self, g: Field) -> Self {
        self.g = Some(g);
        self
    }

    pub fn h(mut self, h: Field) -> Self {
        self.h = Some(h);
        self
    }

    pub fn allow_negative_s(mut self, allow: bool) -> Self {
        self.sign_mode = if allow { SignMode::AllowNegative } else { SignMode::Positive };
        self
    }

    /// Samples per cell axis used to validate `s` and estimate constants.
    pub fn resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution;
        self
    }

    /// Overrides the orientation pattern of the domain maps.
    pub fn orientations(mut self, x: Vec<Orientation>, y: Vec<Orientation>) -> Self {
        self.x_orientations = Some(x);
        self.y_orientations = Some(y);
        self
    }

    /// Accept domain maps that violate the shared end point condition. The
    /// result is not a graph of a continuous function; only useful as a
    /// negative control.
    pub fn allow_unmatched_maps(mut self) -> Self {
        self.allow_unmatched = true;
        self
    }

    pub fn build(self) -> Result<SurfaceSystem, SystemError> {
        let grid = self.grid;
        let (n, m) = (grid.n(), grid.m());
        if self.resolution < 2 {
            return Err(SystemError::Resolution(self.resolution));
        }
        if let Some(found) = self.s.shape() {
            if found != (n, m) {
                return Err(SystemError::ShapeMismatch { expected: (n, m), found });
            }
        }

        let x_maps = match &self.x_orientations {
            Some(o) => AxisMaps::with_orientations(grid.xs(), o),
            None => AxisMaps::alternating(grid.xs()),
        };
        let y_maps = match &self.y_orientations {
            Some(o) => AxisMaps::with_orientations(grid.ys(), o),
            None => AxisMaps::alternating(grid.ys()),
        };
        if !self.allow_unmatched {
            if let Some(knot) = x_maps.matching_defect() {
                return Err(SystemError::UnmatchedMaps { axis: Axis::X, knot });
            }
            if let Some(knot) = y_maps.matching_defect() {
                return Err(SystemError::UnmatchedMaps { axis: Axis::Y, knot });
            }
        }

        let g = self.g.unwrap_or_else(|| default_g(&grid));
        let h = self.h.unwrap_or_else(|| default_h(&grid));
        let tol = 1e-9 * (1.0 + grid.max_abs_z());
        let (xs, ys) = (grid.xs().values(), grid.ys().values());
        for &a in &[0, n] {
            for &b in &[0, m] {
                let found = g.eval(xs[a], ys[b]).map_err(eval_err("g"))?;
                let expected = grid.z(a, b);
                if (found - expected).abs() > tol {
                    return Err(SystemError::CornerMismatch { x: xs[a], y: ys[b], expected, found });
                }
            }
        }
        for (a, &x) in xs.iter().enumerate() {
            for (b, &y) in ys.iter().enumerate() {
                let found = h.eval(x, y).map_err(eval_err("h"))?;
                let expected = grid.z(a, b);
                if (found - expected).abs() > tol {
                    return Err(SystemError::KnotMismatch { x, y, expected, found });
                }
            }
        }

        let s = self.s;
        let sign_mode = self.sign_mode;
        let resolution = self.resolution;
        let s_meta = validate_vertical(&s, &grid, resolution, sign_mode)?;

        let cx = x_maps.contraction_factors();
        let cy = y_maps.contraction_factors();
        let contraction = CellMatrix::from_fn(n, m, |i, j| cx[i - 1].max(cy[j - 1]));

        let s_max = s_meta.iter().fold(0.0f64, |acc, meta| acc.max(meta.max_abs));
        let sign = {
            let pos = s_meta.iter().all(|meta| meta.min_value > 0.0);
            let neg = s_meta.iter().all(|meta| meta.max_value < 0.0);
            if pos {
                FieldSign::Positive
            } else if neg {
                FieldSign::Negative
            } else {
                FieldSign::Mixed
            }
        };
        let certified = (1..=n).all(|i| {
            (1..=m).all(|j| {
                let meta = s_meta.get(i, j);
                let slack = meta.lipschitz_estimate * grid.cell_rect(i, j).diameter() / resolution as f64;
                meta.max_abs + slack < 1.0 && meta.min_abs - slack > 0.0
            })
        });

        // sup |h - g|, exact at the knots for the default interpolants
        let mut hg_sup = 0.0f64;
        for (a, &x) in xs.iter().enumerate() {
            for &y in ys {
                let _ = a;
                hg_sup = hg_sup.max((h.eval(x, y).map_err(eval_err("h"))? - g.eval(x, y).map_err(eval_err("g"))?).abs());
            }
        }
        let defaults = matches!(g, Field::CornerBilinear(_)) && matches!(h, Field::PiecewiseBilinear(_));
        if !defaults {
            for i in 1..=n {
                for j in 1..=m {
                    let meta = sample_meta(grid.cell_rect(i, j), resolution, |x, y| {
                        Ok::<_, SystemError>(h.eval(x, y).map_err(eval_err("h"))? - g.eval(x, y).map_err(eval_err("g"))?)
                    })?;
                    hg_sup = hg_sup.max(meta.max_abs);
                }
            }
        }

        Ok(SurfaceSystem {
            grid,
            x_maps,
            y_maps,
            s,
            g,
            h,
            contraction,
            s_meta,
            s_max,
            sign,
            sign_mode,
            certified,
            resolution,
            hg_sup,
        })
    }
}

pub(crate) fn validate_vertical(
    s: &VerticalField,
    grid: &DataGrid,
    resolution: usize,
    mode: SignMode,
) -> Result<CellMatrix<FieldMeta>, SystemError> {
    CellMatrix::try_from_fn(grid.n(), grid.m(), |i, j| {
        sample_meta(grid.cell_rect(i, j), resolution, |x, y| {
            let value = s.value(i, j, x, y).map_err(eval_err("s"))?;
            let ok = match mode {
                SignMode::Positive => value > 0.0 && value < 1.0,
                SignMode::AllowNegative => value != 0.0 && value.abs() < 1.0,
            };
            if ok {
                Ok(value)
            } else {
                let required = match mode {
                    SignMode::Positive => "0 < s < 1",
                    SignMode::AllowNegative => "0 < |s| < 1",
                };
                Err(SystemError::ContractionOutOfRange { i, j, x, y, value, required })
            }
        })
    })
}

/// A point of `E × ℝ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }
}

/// The IFS `{W_ij}` together with validated metadata.
#[derive(Debug, Clone)]
pub struct SurfaceSystem {
    grid: DataGrid,
    x_maps: AxisMaps,
    y_maps: AxisMaps,
    s: VerticalField,
    g: Field,
    h: Field,
    contraction: CellMatrix<f64>,
    s_meta: CellMatrix<FieldMeta>,
    s_max: f64,
    sign: FieldSign,
    sign_mode: SignMode,
    certified: bool,
    resolution: usize,
    hg_sup: f64,
}

impl SurfaceSystem {
    pub fn builder(grid: DataGrid, s: VerticalField) -> SystemBuilder {
        SystemBuilder {
            grid,
            s,
            g: None,
            h: None,
            sign_mode: SignMode::Positive,
            resolution: DEFAULT_RESOLUTION,
            x_orientations: None,
            y_orientations: None,
            allow_unmatched: false,
        }
    }

    /// Default `g`, `h` and alternating domain maps.
    pub fn new(grid: DataGrid, s: VerticalField) -> Result<SurfaceSystem, SystemError> {
        SurfaceSystem::builder(grid, s).build()
    }

    pub fn grid(&self) -> &DataGrid {
        &self.grid
    }

    pub fn x_maps(&self) -> &AxisMaps {
        &self.x_maps
    }

    pub fn y_maps(&self) -> &AxisMaps {
        &self.y_maps
    }

    pub fn vertical(&self) -> &VerticalField {
        &self.s
    }

    pub fn g(&self) -> &Field {
        &self.g
    }

    pub fn h(&self) -> &Field {
        &self.h
    }

    /// `c_ij = max(c_{x_i}, c_{y_j})`.
    pub fn contraction(&self) -> &CellMatrix<f64> {
        &self.contraction
    }

    pub fn s_meta(&self) -> &CellMatrix<FieldMeta> {
        &self.s_meta
    }

    /// Sampled `max |s|` over the domain.
    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn s_sign(&self) -> FieldSign {
        self.sign
    }

    pub fn sign_mode(&self) -> SignMode {
        self.sign_mode
    }

    /// Whether the sampled range of `s` stays inside the admissible interval
    /// after widening by the Lipschitz slack.
    pub fn s_certified(&self) -> bool {
        self.certified
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// `sup |h - g|` (exact for the default fields, sampled otherwise).
    pub fn hg_sup(&self) -> f64 {
        self.hg_sup
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn m(&self) -> usize {
        self.grid.m()
    }

    pub fn domain(&self) -> Rect {
        self.grid.domain()
    }

    pub fn cell_count(&self) -> usize {
        self.n() * self.m()
    }

    fn check_cell(&self, i: usize, j: usize) -> Result<(), SystemError> {
        if i == 0 || j == 0 || i > self.n() || j > self.m() {
            Err(SystemError::CellOutOfRange { i, j })
        } else {
            Ok(())
        }
    }

    /// Cell containing `(x, y)` under the half-open rule.
    pub fn cell_of(&self, x: f64, y: f64) -> Result<(usize, usize), SystemError> {
        if !self.domain().contains(x, y) {
            return Err(SystemError::PointOutside { x, y });
        }
        Ok((self.grid.xs().interval_of(x), self.grid.ys().interval_of(y)))
    }

    #[inline]
    pub fn domain_map(&self, i: usize, j: usize, x: f64, y: f64) -> (f64, f64) {
        (self.x_maps.map(i).apply(x), self.y_maps.map(j).apply(y))
    }

    #[inline]
    pub fn domain_inverse(&self, i: usize, j: usize, x: f64, y: f64) -> (f64, f64) {
        (self.x_maps.map(i).invert(x), self.y_maps.map(j).invert(y))
    }

    /// `W_ij(x, y, z) = (L_ij(x, y), s(L_ij(x, y)) (z - g(x, y)) + h(L_ij(x, y)))`.
    pub fn apply_w(&self, i: usize, j: usize, p: Point3) -> Result<Point3, SystemError> {
        self.check_cell(i, j)?;
        let (u, v) = self.domain_map(i, j, p.x, p.y);
        let s = self.s.value(i, j, u, v).map_err(eval_err("s"))?;
        let g = self.g.eval(p.x, p.y).map_err(eval_err("g"))?;
        let h = self.h.eval(u, v).map_err(eval_err("h"))?;
        Ok(Point3::new(u, v, s * (p.z - g) + h))
    }

    /// `Q(x, y) = h(x, y) - s(x, y) g(L_ij⁻¹(x, y))` on the cell containing
    /// `(x, y)`.
    pub fn q_field(&self, x: f64, y: f64) -> Result<f64, SystemError> {
        let (i, j) = self.cell_of(x, y)?;
        self.q_field_in_cell(i, j, x, y)
    }

    pub fn q_field_in_cell(&self, i: usize, j: usize, x: f64, y: f64) -> Result<f64, SystemError> {
        self.check_cell(i, j)?;
        let (u, v) = self.domain_inverse(i, j, x, y);
        let s = self.s.value(i, j, x, y).map_err(eval_err("s"))?;
        let g = self.g.eval(u, v).map_err(eval_err("g"))?;
        let h = self.h.eval(x, y).map_err(eval_err("h"))?;
        Ok(h - s * g)
    }
}

/// Depth of the pointwise evaluation used for graph points on cell borders.
pub const BORDER_PROBE_DEPTH: usize = 8;

/// Largest z-discrepancy between the two maps that write each shared cell
/// border, applied to graph points of the attractor over the pre-images.
pub fn check_border_consistency(system: &SurfaceSystem, samples_per_edge: usize) -> Result<f64, SystemError> {
    let samples = samples_per_edge.max(2);
    let (n, m) = (system.n(), system.m());
    let (xs, ys) = (system.grid.xs().values(), system.grid.ys().values());
    let mut worst = 0.0f64;

    let through = |i: usize, j: usize, x: f64, y: f64| -> Result<f64, SystemError> {
        let (u, v) = system.domain_inverse(i, j, x, y);
        let z = attractor::eval_point(system, u, v, BORDER_PROBE_DEPTH)?.value;
        Ok(system.apply_w(i, j, Point3::new(u, v, z))?.z)
    };

    // vertical borders x = x_i between cells (i, j) and (i + 1, j)
    for i in 1..n {
        for j in 1..=m {
            for k in 0..samples {
                let y = lerp(ys[j - 1], ys[j], k as f64 / (samples - 1) as f64);
                let a = through(i, j, xs[i], y)?;
                let b = through(i + 1, j, xs[i], y)?;
                worst = worst.max((a - b).abs());
            }
        }
    }
    // horizontal borders y = y_j between cells (i, j) and (i, j + 1)
    for j in 1..m {
        for i in 1..=n {
            for k in 0..samples {
                let x = lerp(xs[i - 1], xs[i], k as f64 / (samples - 1) as f64);
                let a = through(i, j, x, ys[j])?;
                let b = through(i, j + 1, x, ys[j])?;
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}

/// Both sides of the range inequality for one map applied to a sampled
/// function, together with the constants that enter the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaGap {
    /// Sampled range of the transformed function over `L(E)`.
    pub lhs: f64,
    /// `s̄ R_f[E] + diam(E) (c_s f̄ + L_Q)`.
    pub rhs: f64,
    pub s_bar: f64,
    pub c_s: f64,
    pub f_bar: f64,
    pub l_q: f64,
    pub range_f: f64,
    pub diam: f64,
}

/// Evaluates the range bound for `W_ij` applied to the graph of the sampled
/// function `f_samples`.
///
/// The constants are estimated from the same samples: `c_s` and `L_Q` are the
/// larger of the adjacent-pair slope and range/diameter, both lower bounds
/// of the true constants.
pub fn lemma_gap(system: &SurfaceSystem, i: usize, j: usize, f_samples: &LatticeValues) -> Result<LemmaGap, SystemError> {
    system.check_cell(i, j)?;
    let side = f_samples.side();
    let (px, py) = (f_samples.x_coords(), f_samples.y_coords());
    let mut q_values = Vec::with_capacity(side * side);
    let (mut f_lo, mut f_hi, mut f_bar) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    let (mut t_lo, mut t_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut s_lo, mut s_hi, mut s_bar) = (f64::INFINITY, f64::NEG_INFINITY, system.s_max);

    for a in 0..side {
        for b in 0..side {
            let (x, y) = (px[a], py[b]);
            let f = f_samples.value(a, b);
            let (u, v) = system.domain_map(i, j, x, y);
            let s = system.s.value(i, j, u, v).map_err(eval_err("s"))?;
            let q = system.h.eval(u, v).map_err(eval_err("h"))? - s * system.g.eval(x, y).map_err(eval_err("g"))?;
            let t = s * f + q;
            q_values.push(q);
            f_lo = f_lo.min(f);
            f_hi = f_hi.max(f);
            f_bar = f_bar.max(f.abs());
            t_lo = t_lo.min(t);
            t_hi = t_hi.max(t);
            s_lo = s_lo.min(s);
            s_hi = s_hi.max(s);
            s_bar = s_bar.max(s.abs());
        }
    }

    let domain = system.domain();
    let cell = system.grid.cell_rect(i, j);
    let diam = domain.diameter();

    let mut l_q = 0.0f64;
    let (mut q_lo, mut q_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for a in 0..side {
        for b in 0..side {
            let q = q_values[a * side + b];
            q_lo = q_lo.min(q);
            q_hi = q_hi.max(q);
            if a > 0 {
                l_q = l_q.max((q - q_values[(a - 1) * side + b]).abs() / (px[a] - px[a - 1]));
            }
            if b > 0 {
                l_q = l_q.max((q - q_values[a * side + b - 1]).abs() / (py[b] - py[b - 1]));
            }
        }
    }
    l_q = l_q.max((q_hi - q_lo) / diam);

    let meta = system.s_meta.get(i, j);
    let c_s = meta.lipschitz_estimate.max((s_hi - s_lo) / cell.diameter());
    let range_f = f_hi - f_lo;
    let rhs = s_bar * range_f + diam * (c_s * f_bar + l_q);
    Ok(LemmaGap { lhs: t_hi - t_lo, rhs, s_bar, c_s, f_bar, l_q, range_f, diam })
}
