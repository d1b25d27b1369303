//! Interpolation data on a rectangular grid.

use alloc::vec::Vec;

/// Closed axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Rect {
        Rect { x0, x1, y0, y1 }
    }

    pub fn unit() -> Rect {
        Rect::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn diameter(&self) -> f64 {
        libm::hypot(self.width(), self.height())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("a knot vector needs at least 2 entries, found {0}")]
    TooFewKnots(usize),
    #[error("knot {index} is not finite")]
    NonFiniteKnot { index: usize },
    #[error("knots not strictly increasing at index {index}")]
    NotIncreasing { index: usize },
    #[error("dimension mismatch: expected {expected_rows} rows of {expected_cols} values, found {found} at row {row}")]
    DimensionMismatch { expected_rows: usize, expected_cols: usize, row: usize, found: usize },
    #[error("z value at (i={i}, j={j}) is not finite")]
    NonFiniteValue { i: usize, j: usize },
}

/// Strictly increasing coordinates `t_0 < t_1 < … < t_n`, `n ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector(Vec<f64>);

impl KnotVector {
    pub fn new(values: Vec<f64>) -> Result<KnotVector, GridError> {
        if values.len() < 2 {
            return Err(GridError::TooFewKnots(values.len()));
        }
        for (index, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(GridError::NonFiniteKnot { index });
            }
            if index > 0 && values[index - 1] >= *v {
                return Err(GridError::NotIncreasing { index });
            }
        }
        Ok(KnotVector(values))
    }

    /// `count + 1` equally spaced knots from `lo` to `hi`.
    pub fn uniform(lo: f64, hi: f64, count: usize) -> Result<KnotVector, GridError> {
        let values = (0..=count)
            .map(|k| crate::expr::lerp(lo, hi, k as f64 / count as f64))
            .collect();
        KnotVector::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.0.len() - 1
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn span(&self) -> f64 {
        self.last() - self.first()
    }

    /// 1-based interval index containing `t` under the half-open rule
    /// `[t_{i-1}, t_i)`, the last interval closed. Values outside the span
    /// clamp to the first or last interval.
    pub fn interval_of(&self, t: f64) -> usize {
        let n = self.intervals();
        // number of interior knots <= t
        let interior = &self.0[1..n];
        let k = interior.partition_point(|&knot| knot <= t);
        k + 1
    }

    /// Largest relative deviation of the spacings from their mean.
    pub fn spacing_deviation(&self) -> f64 {
        let n = self.intervals() as f64;
        let mean = self.span() / n;
        self.0
            .windows(2)
            .map(|w| ((w[1] - w[0]) - mean).abs() / mean)
            .fold(0.0, f64::max)
    }
}

/// Interpolation points `(x_i, y_j, z_ij)`, `0 ≤ i ≤ n`, `0 ≤ j ≤ m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataGrid {
    xs: KnotVector,
    ys: KnotVector,
    /// x-major: `z[i * (m + 1) + j]`
    z: Vec<f64>,
    source_extent: Rect,
}

impl DataGrid {
    /// Builds a grid from rows indexed by `y`: `rows[j][i] = z_ij`. This is
    /// the layout of the grid CSV format.
    pub fn from_rows(xs: KnotVector, ys: KnotVector, rows: &[Vec<f64>]) -> Result<DataGrid, GridError> {
        let (cols, nrows) = (xs.values().len(), ys.values().len());
        if rows.len() != nrows {
            return Err(GridError::DimensionMismatch {
                expected_rows: nrows,
                expected_cols: cols,
                row: rows.len().min(nrows),
                found: rows.get(nrows).map_or(0, Vec::len),
            });
        }
        for (row, values) in rows.iter().enumerate() {
            if values.len() != cols {
                return Err(GridError::DimensionMismatch {
                    expected_rows: nrows,
                    expected_cols: cols,
                    row,
                    found: values.len(),
                });
            }
        }
        DataGrid::from_fn(xs, ys, |i, j| rows[j][i])
    }

    pub fn from_fn(xs: KnotVector, ys: KnotVector, mut z: impl FnMut(usize, usize) -> f64) -> Result<DataGrid, GridError> {
        let (nx, ny) = (xs.values().len(), ys.values().len());
        let mut values = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                let v = z(i, j);
                if !v.is_finite() {
                    return Err(GridError::NonFiniteValue { i, j });
                }
                values.push(v);
            }
        }
        let source_extent = Rect::new(xs.first(), xs.last(), ys.first(), ys.last());
        Ok(DataGrid { xs, ys, z: values, source_extent })
    }

    pub fn xs(&self) -> &KnotVector {
        &self.xs
    }

    pub fn ys(&self) -> &KnotVector {
        &self.ys
    }

    /// Number of x-intervals `n`.
    pub fn n(&self) -> usize {
        self.xs.intervals()
    }

    /// Number of y-intervals `m`.
    pub fn m(&self) -> usize {
        self.ys.intervals()
    }

    pub fn z(&self, i: usize, j: usize) -> f64 {
        self.z[i * (self.m() + 1) + j]
    }

    pub fn domain(&self) -> Rect {
        Rect::new(self.xs.first(), self.xs.last(), self.ys.first(), self.ys.last())
    }

    /// The 1-based cell `E_ij = [x_{i-1}, x_i] × [y_{j-1}, y_j]`.
    pub fn cell_rect(&self, i: usize, j: usize) -> Rect {
        let (xs, ys) = (self.xs.values(), self.ys.values());
        Rect::new(xs[i - 1], xs[i], ys[j - 1], ys[j])
    }

    /// Extent of the grid this one was derived from by [`normalize_to_unit`].
    pub fn source_extent(&self) -> Rect {
        self.source_extent
    }

    pub fn max_abs_z(&self) -> f64 {
        self.z.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Returns a copy with every z value transformed.
    pub fn map_z(&self, mut f: impl FnMut(f64, f64, f64) -> f64) -> Result<DataGrid, GridError> {
        let (xs, ys) = (self.xs.values(), self.ys.values());
        let mut out = DataGrid::from_fn(self.xs.clone(), self.ys.clone(), |i, j| f(xs[i], ys[j], self.z(i, j)))?;
        out.source_extent = self.source_extent;
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionAxis {
    /// `P_{x_α}`: fixed `x_α`, varying `y`.
    Column,
    /// `P_{y_β}`: fixed `y_β`, varying `x`.
    Row,
}

/// Vertical distances of every grid section from the chord through its end
/// points.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightReport {
    pub best_axis: SectionAxis,
    pub best_index: usize,
    pub height: f64,
    pub per_column: Vec<f64>,
    pub per_row: Vec<f64>,
    /// Heights at or below this count as collinear.
    pub collinear_threshold: f64,
}

impl HeightReport {
    pub fn has_noncollinear_section(&self) -> bool {
        self.height > self.collinear_threshold
    }
}

fn section_height(ts: &[f64], zs: impl Fn(usize) -> f64) -> f64 {
    let last = ts.len() - 1;
    let (t0, t1, z0, z1) = (ts[0], ts[last], zs(0), zs(last));
    (0..=last)
        .map(|l| {
            let w = (ts[l] - t0) / (t1 - t0);
            (zs(l) - crate::expr::lerp(z0, z1, w)).abs()
        })
        .fold(0.0, f64::max)
}

pub fn height_report(grid: &DataGrid) -> HeightReport {
    let (xs, ys) = (grid.xs.values(), grid.ys.values());
    let per_column: Vec<f64> = (0..xs.len()).map(|a| section_height(ys, |l| grid.z(a, l))).collect();
    let per_row: Vec<f64> = (0..ys.len()).map(|b| section_height(xs, |k| grid.z(k, b))).collect();

    let mut best = (SectionAxis::Column, 0, f64::NEG_INFINITY);
    for (axis, heights) in [(SectionAxis::Column, &per_column), (SectionAxis::Row, &per_row)] {
        for (index, &h) in heights.iter().enumerate() {
            if h > best.2 {
                best = (axis, index, h);
            }
        }
    }
    HeightReport {
        best_axis: best.0,
        best_index: best.1,
        height: best.2,
        per_column,
        per_row,
        collinear_threshold: 1e-12 * (grid.max_abs_z() + 1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniformity {
    pub uniform: bool,
    pub max_deviation: f64,
}

pub const UNIFORM_TOLERANCE: f64 = 1e-12;

/// Both axes equally spaced (relative tolerance 1e-12) and `n == m`.
pub fn is_uniform(grid: &DataGrid) -> Uniformity {
    let max_deviation = grid.xs.spacing_deviation().max(grid.ys.spacing_deviation());
    Uniformity { uniform: max_deviation <= UNIFORM_TOLERANCE && grid.n() == grid.m(), max_deviation }
}

/// Rescales both knot vectors affinely onto `[0, 1]`, keeping `z` and
/// remembering the original extent.
pub fn normalize_to_unit(grid: &DataGrid) -> DataGrid {
    let rescale = |k: &KnotVector| {
        let (lo, span) = (k.first(), k.span());
        let n = k.intervals();
        let values = k
            .values()
            .iter()
            .enumerate()
            .map(|(idx, v)| if idx == n { 1.0 } else { (v - lo) / span })
            .collect();
        KnotVector(values)
    };
    DataGrid { xs: rescale(&grid.xs), ys: rescale(&grid.ys), z: grid.z.clone(), source_extent: grid.source_extent }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn knots(v: &[f64]) -> KnotVector {
        KnotVector::new(v.to_vec()).unwrap()
    }

    pub(crate) fn center_bump() -> DataGrid {
        let k = knots(&[0.0, 0.5, 1.0]);
        DataGrid::from_rows(k.clone(), k, &[vec![0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0]]).unwrap()
    }

    #[test]
    fn load_examples() {
        let k = knots(&[0.0, 0.5, 1.0]);
        let g = DataGrid::from_fn(k.clone(), k.clone(), |_, _| 0.0).unwrap();
        assert_eq!((g.n(), g.m()), (2, 2));
        let err = KnotVector::new(vec![0.0, 0.5, 0.5]).unwrap_err();
        assert_eq!(err.to_string(), "knots not strictly increasing at index 2");
        let rows = vec![vec![0.0; 4]; 3];
        assert!(matches!(DataGrid::from_rows(k.clone(), k, &rows), Err(GridError::DimensionMismatch { .. })));
    }

    #[test]
    fn interval_lookup_is_half_open() {
        let k = knots(&[0.0, 0.25, 0.5, 1.0]);
        assert_eq!(k.interval_of(0.0), 1);
        assert_eq!(k.interval_of(0.2), 1);
        assert_eq!(k.interval_of(0.25), 2);
        assert_eq!(k.interval_of(0.5), 3);
        assert_eq!(k.interval_of(1.0), 3);
    }

    #[test]
    fn plane_has_zero_height() {
        let k = knots(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let xs = k.values().to_vec();
        let g = DataGrid::from_fn(k.clone(), k, |i, j| xs[i] + 2.0 * xs[j]).unwrap();
        let r = height_report(&g);
        assert!(r.height <= 1e-15);
        assert!(!r.has_noncollinear_section());
    }

    #[test]
    fn center_bump_height() {
        let r = height_report(&center_bump());
        assert_eq!(r.height, 1.0);
        assert_eq!((r.best_axis, r.best_index), (SectionAxis::Column, 1));
        assert!(r.has_noncollinear_section());
    }

    #[test]
    fn skewed_bump_matches_exhaustive_oracle() {
        // rows indexed by y, as in the file layout
        let k = knots(&[0.0, 0.5, 1.0]);
        let rows = vec![vec![0.0, 0.0, 0.0], vec![0.0, 0.5, 1.0], vec![0.0, 0.0, 0.0]];
        let g = DataGrid::from_rows(k.clone(), k, &rows).unwrap();
        let r = height_report(&g);

        // brute force: every section, every interior point, distance to chord
        let z = |i: usize, j: usize| rows[j][i];
        let mut cols = [0.0f64; 3];
        let mut rws = [0.0f64; 3];
        for a in 0..3 {
            for l in 0..3 {
                let chord = z(a, 0) + (z(a, 2) - z(a, 0)) * l as f64 / 2.0;
                cols[a] = cols[a].max((z(a, l) - chord).abs());
                let chord = z(0, a) + (z(2, a) - z(0, a)) * l as f64 / 2.0;
                rws[a] = rws[a].max((z(l, a) - chord).abs());
            }
        }
        assert_eq!(r.per_column, cols.to_vec());
        assert_eq!(r.per_row, rws.to_vec());
        assert_eq!(cols, [0.0, 0.5, 1.0]);
        assert_eq!(rws, [0.0, 0.0, 0.0]);
        assert_eq!(r.height, 1.0);
        assert_eq!((r.best_axis, r.best_index), (SectionAxis::Column, 2));
    }

    #[test]
    fn uniformity() {
        let q = knots(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = DataGrid::from_fn(q.clone(), q, |_, _| 0.0).unwrap();
        assert!(is_uniform(&g).uniform);

        let g = DataGrid::from_fn(knots(&[0.0, 0.3, 1.0]), knots(&[0.0, 0.5, 1.0]), |_, _| 0.0).unwrap();
        assert!(!is_uniform(&g).uniform);

        let g = DataGrid::from_fn(knots(&[0.0, 0.5, 1.0]), KnotVector::uniform(0.0, 1.0, 3).unwrap(), |_, _| 0.0)
            .unwrap();
        let u = is_uniform(&g);
        assert!(!u.uniform);
        assert!(u.max_deviation < 1e-12);
    }

    #[test]
    fn normalization() {
        let k = knots(&[0.0, 0.5, 1.0]);
        let g = DataGrid::from_fn(knots(&[2.0, 3.0, 4.0]), k.clone(), |i, j| (i + j) as f64).unwrap();
        let u = normalize_to_unit(&g);
        assert_eq!(u.xs().values(), &[0.0, 0.5, 1.0]);
        assert_eq!(u.source_extent(), Rect::new(2.0, 4.0, 0.0, 1.0));
        assert_eq!(u.z(2, 1), 3.0);

        let g = DataGrid::from_fn(k.clone(), k, |_, _| 1.0).unwrap();
        assert_eq!(normalize_to_unit(&g), g);

        let g = DataGrid::from_fn(knots(&[0.0, 1.0, 4.0]), knots(&[0.0, 1.0]), |_, _| 0.0).unwrap();
        assert_eq!(normalize_to_unit(&g).xs().values(), &[0.0, 0.25, 1.0]);
        let once = normalize_to_unit(&g);
        assert_eq!(normalize_to_unit(&once), once);
    }
}
