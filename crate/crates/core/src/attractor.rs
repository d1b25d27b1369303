//! Sampling the attractor: exact values on n-adic lattices, pointwise
//! evaluation by address expansion, and chaos-game clouds.
//!
//! Lattice indices: level `t` has `N_t = n^(t+1)` intervals per axis, so level
//! 0 is the knot lattice. A cell `i` covers indices `(i-1) N_t ..= i N_t` of
//! level `t+1`, and its pre-image index in level `t` is `q - (i-1) N_t` for an
//! increasing map or `i N_t - q` for a decreasing one.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::expr::lerp;
use crate::grid::{is_uniform, Rect};
use crate::ifs::{Orientation, Point3, SurfaceSystem, SystemError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LatticeError {
    #[error("lattice evaluation needs uniform knots (spacing deviation {deviation:e})")]
    NonUniform { deviation: f64 },
    #[error("lattice evaluation needs a square grid, got {n} x {m} cells")]
    NotSquare { n: usize, m: usize },
    #[error("lattice of {required} values exceeds the budget of {budget}")]
    BudgetExceeded { required: u128, budget: usize },
    #[error("cells disagree by {delta:e} at ({x}, {y})")]
    BorderMismatch { x: f64, y: f64, delta: f64 },
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Largest number of samples a materialised lattice may hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeBudget(pub usize);

impl Default for LatticeBudget {
    fn default() -> Self {
        LatticeBudget(1 << 27)
    }
}

/// Side length of the level-`depth` lattice, `n^(depth+1) + 1`, or `None` on
/// overflow.
pub fn lattice_side(n: usize, depth: usize) -> Option<usize> {
    let exp = u32::try_from(depth + 1).ok()?;
    n.checked_pow(exp)?.checked_add(1)
}

/// Samples of `f` on a square n-adic lattice, x-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeValues {
    n: usize,
    depth: usize,
    side: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Vec<f64>,
}

impl LatticeValues {
    /// Tabulates `f` on the lattice over `rect` with `n` uniform cells per axis.
    pub fn from_fn(n: usize, depth: usize, rect: Rect, mut f: impl FnMut(f64, f64) -> f64) -> LatticeValues {
        let side = lattice_side(n, depth).expect("lattice side overflows");
        let xk: Vec<f64> = (0..=n).map(|k| lerp(rect.x0, rect.x1, k as f64 / n as f64)).collect();
        let yk: Vec<f64> = (0..=n).map(|k| lerp(rect.y0, rect.y1, k as f64 / n as f64)).collect();
        let xs = axis_coords(&xk, side - 1);
        let ys = axis_coords(&yk, side - 1);
        let mut values = Vec::with_capacity(side * side);
        for &x in &xs {
            for &y in &ys {
                values.push(f(x, y));
            }
        }
        LatticeValues { n, depth, side, xs, ys, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn x_coords(&self) -> &[f64] {
        &self.xs
    }

    pub fn y_coords(&self) -> &[f64] {
        &self.ys
    }

    #[inline]
    pub fn value(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.side + b]
    }

    /// All samples, x-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.values[a * self.side..(a + 1) * self.side]
    }

    /// Lattice index nearest to `(x, y)` on each axis.
    pub fn nearest_index(&self, x: f64, y: f64) -> (usize, usize) {
        (nearest(&self.xs, x), nearest(&self.ys, y))
    }

    pub fn nearest_value(&self, x: f64, y: f64) -> f64 {
        let (a, b) = self.nearest_index(x, y);
        self.value(a, b)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

fn nearest(coords: &[f64], t: f64) -> usize {
    let k = coords.partition_point(|&c| c < t);
    if k == 0 {
        0
    } else if k == coords.len() || t - coords[k - 1] <= coords[k] - t {
        k - 1
    } else {
        k
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Coordinates of indices `0..=total` where `knots` are `n + 1` uniform knots.
/// Knot positions take the knot values; other positions interpolate the
/// span at the reduced fraction `q / total`, so a position gets the same
/// coordinate on every level.
fn axis_coords(knots: &[f64], total: usize) -> Vec<f64> {
    let n = knots.len() - 1;
    let step = total / n;
    let (lo, hi) = (knots[0], knots[n]);
    (0..=total)
        .map(|q| {
            if q % step == 0 {
                knots[q / step]
            } else {
                let d = gcd(q, total);
                lerp(lo, hi, (q / d) as f64 / (total / d) as f64)
            }
        })
        .collect()
}

/// Cells writing one target index and the matching pre-image index.
#[derive(Debug, Clone, Copy)]
struct Source {
    cells: [(usize, usize); 2],
    count: usize,
}

/// Per-axis gather table from level `t` to level `t + 1`.
struct AxisPlan {
    coords: Vec<f64>,
    sources: Vec<Source>,
}

impl AxisPlan {
    fn new(knots: &[f64], orientations: &[Orientation], level: usize) -> AxisPlan {
        let n = orientations.len();
        let prev = n.pow(level as u32 + 1);
        let total = prev * n;
        let coords = axis_coords(knots, total);
        let sources = (0..=total)
            .map(|q| {
                let pre = |i: usize| match orientations[i - 1] {
                    Orientation::Increasing => q - (i - 1) * prev,
                    Orientation::Decreasing => i * prev - q,
                };
                if q % prev == 0 && q != 0 && q != total {
                    // interior knot: cells q/prev and q/prev + 1
                    let i = q / prev;
                    Source { cells: [(i, pre(i)), (i + 1, pre(i + 1))], count: 2 }
                } else {
                    let i = if q == total { n } else { q / prev + 1 };
                    Source { cells: [(i, pre(i)), (0, 0)], count: 1 }
                }
            })
            .collect();
        AxisPlan { coords, sources }
    }
}

struct Refinement<'a> {
    system: &'a SurfaceSystem,
    x: AxisPlan,
    y: AxisPlan,
    /// `f_t - g` on the previous level, x-major.
    gdiff: Vec<f64>,
    prev_side: usize,
    tol: f64,
}

impl<'a> Refinement<'a> {
    fn new(system: &'a SurfaceSystem, prev: &LatticeValues) -> Result<Refinement<'a>, LatticeError> {
        let grid = system.grid();
        let xo: Vec<Orientation> = system.x_maps().maps().iter().map(|m| m.orientation).collect();
        let yo: Vec<Orientation> = system.y_maps().maps().iter().map(|m| m.orientation).collect();
        let x = AxisPlan::new(grid.xs().values(), &xo, prev.depth);
        let y = AxisPlan::new(grid.ys().values(), &yo, prev.depth);
        let g = system.g();
        let mut gdiff = Vec::with_capacity(prev.values.len());
        for (a, &px) in prev.xs.iter().enumerate() {
            for (b, &py) in prev.ys.iter().enumerate() {
                gdiff.push(prev.value(a, b) - g.eval(px, py).map_err(|source| SystemError::Eval { field: "g", source })?);
            }
        }
        Ok(Refinement {
            system,
            x,
            y,
            gdiff,
            prev_side: prev.side,
            tol: 1e-10 * (1.0 + grid.max_abs_z()),
        })
    }

    fn side(&self) -> usize {
        self.x.coords.len()
    }

    fn fill_row(&self, q: usize, row: &mut [f64]) -> Result<(), LatticeError> {
        let s = self.system.vertical();
        let h = self.system.h();
        let x = self.x.coords[q];
        let xs = self.x.sources[q];
        let err = |field: &'static str| move |source| LatticeError::System(SystemError::Eval { field, source });
        for (qy, out) in row.iter_mut().enumerate() {
            let y = self.y.coords[qy];
            let ys = self.y.sources[qy];
            let hv = h.eval(x, y).map_err(err("h"))?;
            let mut value = f64::NAN;
            for &(i, p) in &xs.cells[..xs.count] {
                for &(j, pp) in &ys.cells[..ys.count] {
                    let sv = s.value(i, j, x, y).map_err(err("s"))?;
                    let v = sv * self.gdiff[p * self.prev_side + pp] + hv;
                    if !value.is_nan() && (v - value).abs() > self.tol {
                        return Err(LatticeError::BorderMismatch { x, y, delta: (v - value).abs() });
                    }
                    value = v;
                }
            }
            *out = value;
        }
        Ok(())
    }

    /// Rows `start..start + out.len() / side` into `out`.
    fn fill_rows(&self, start: usize, out: &mut [f64]) -> Result<(), LatticeError> {
        let side = self.side();
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            out.par_chunks_mut(side)
                .enumerate()
                .try_for_each(|(k, row)| self.fill_row(start + k, row))
        }
        #[cfg(not(feature = "parallel"))]
        {
            for (k, row) in out.chunks_mut(side).enumerate() {
                self.fill_row(start + k, row)?;
            }
            Ok(())
        }
    }
}

fn check_lattice_system(system: &SurfaceSystem) -> Result<(), LatticeError> {
    let (n, m) = (system.n(), system.m());
    if n != m {
        return Err(LatticeError::NotSquare { n, m });
    }
    let u = is_uniform(system.grid());
    if !u.uniform {
        return Err(LatticeError::NonUniform { deviation: u.max_deviation });
    }
    Ok(())
}

fn knot_lattice(system: &SurfaceSystem) -> LatticeValues {
    let grid = system.grid();
    let n = grid.n();
    let xs = grid.xs().values().to_vec();
    let ys = grid.ys().values().to_vec();
    let mut values = Vec::with_capacity((n + 1) * (n + 1));
    for i in 0..=n {
        for j in 0..=n {
            values.push(grid.z(i, j));
        }
    }
    LatticeValues { n, depth: 0, side: n + 1, xs, ys, values }
}

/// Lattice one level finer than `prev`.
pub fn refine(system: &SurfaceSystem, prev: &LatticeValues) -> Result<LatticeValues, LatticeError> {
    let r = Refinement::new(system, prev)?;
    let side = r.side();
    let mut values = vec![0.0; side * side];
    r.fill_rows(0, &mut values)?;
    Ok(LatticeValues {
        n: prev.n,
        depth: prev.depth + 1,
        side,
        xs: r.x.coords.clone(),
        ys: r.y.coords.clone(),
        values,
    })
}

/// Computes the level after `prev` row by row without storing it, passing
/// each row index and its values to `sink`.
pub fn refine_streaming(
    system: &SurfaceSystem,
    prev: &LatticeValues,
    mut sink: impl FnMut(usize, &[f64]),
) -> Result<(), LatticeError> {
    let r = Refinement::new(system, prev)?;
    let side = r.side();
    let block = 64.min(side);
    let mut buf = vec![0.0; block * side];
    let mut start = 0;
    while start < side {
        let rows = block.min(side - start);
        let out = &mut buf[..rows * side];
        r.fill_rows(start, out)?;
        for (k, row) in out.chunks(side).enumerate() {
            sink(start + k, row);
        }
        start += rows;
    }
    Ok(())
}

pub fn evaluate_lattice(system: &SurfaceSystem, depth: usize) -> Result<LatticeValues, LatticeError> {
    evaluate_lattice_with_budget(system, depth, LatticeBudget::default())
}

pub fn evaluate_lattice_with_budget(
    system: &SurfaceSystem,
    depth: usize,
    budget: LatticeBudget,
) -> Result<LatticeValues, LatticeError> {
    check_lattice_system(system)?;
    check_budget(system.n(), depth, budget)?;
    let mut lattice = knot_lattice(system);
    for _ in 0..depth {
        lattice = refine(system, &lattice)?;
    }
    Ok(lattice)
}

pub(crate) fn check_budget(n: usize, depth: usize, budget: LatticeBudget) -> Result<(), LatticeError> {
    let required = lattice_side(n, depth).map_or(u128::MAX, |s| (s as u128) * (s as u128));
    if required > budget.0 as u128 {
        Err(LatticeError::BudgetExceeded { required, budget: budget.0 })
    } else {
        Ok(())
    }
}

pub(crate) fn check_streaming(system: &SurfaceSystem) -> Result<(), LatticeError> {
    check_lattice_system(system)
}

/// An approximation of `f` with an upper bound on its error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEstimate {
    pub value: f64,
    pub error_bound: f64,
}

/// Approximates `f(x, y)` by following the cell address `depth` levels down,
/// starting from `h` there and applying the fixed-point equation back up.
/// Works on non-uniform grids.
pub fn eval_point(system: &SurfaceSystem, x: f64, y: f64, depth: usize) -> Result<PointEstimate, SystemError> {
    let mut path = Vec::with_capacity(depth);
    let (mut px, mut py) = (x, y);
    let (_, _) = system.cell_of(px, py)?;
    for _ in 0..depth {
        let (i, j) = system.cell_of(px, py)?;
        path.push((i, j, px, py));
        let (u, v) = system.domain_inverse(i, j, px, py);
        // rounding may leave the span by an ulp
        let d = system.domain();
        px = u.clamp(d.x0, d.x1);
        py = v.clamp(d.y0, d.y1);
    }
    let eval = |field: &'static str| move |source| SystemError::Eval { field, source };
    let mut value = system.h().eval(px, py).map_err(eval("h"))?;
    let (mut below_x, mut below_y) = (px, py);
    for &(i, j, ax, ay) in path.iter().rev() {
        let s = system.vertical().value(i, j, ax, ay).map_err(eval("s"))?;
        let g = system.g().eval(below_x, below_y).map_err(eval("g"))?;
        value = s * (value - g) + system.h().eval(ax, ay).map_err(eval("h"))?;
        (below_x, below_y) = (ax, ay);
    }
    let s = system.s_max();
    let error_bound = if s < 1.0 {
        libm::pow(s, depth as f64 + 1.0) * system.hg_sup() / (1.0 - s)
    } else {
        f64::INFINITY
    };
    Ok(PointEstimate { value, error_bound })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub seed: u64,
    pub count: usize,
    pub burn_in: usize,
}

/// Random iteration from `(x_0, y_0, z_00)`. Maps are drawn uniformly with
/// ChaCha8 seeded by `seed_from_u64(seed)`: the cell index is
/// `(next_u64 * cells) >> 64`, read as `i = k / m + 1`, `j = k % m + 1`.
pub fn chaos_game(system: &SurfaceSystem, count: usize, seed: u64, burn_in: usize) -> Result<PointCloud, SystemError> {
    let grid = system.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = system.cell_count() as u128;
    let m = system.m();
    let mut p = Point3::new(grid.xs().first(), grid.ys().first(), grid.z(0, 0));
    let mut points = Vec::with_capacity(count);
    for step in 0..burn_in + count {
        let k = ((rng.next_u64() as u128 * cells) >> 64) as usize;
        p = system.apply_w(k / m + 1, k % m + 1, p)?;
        if step >= burn_in {
            points.push(p);
        }
    }
    Ok(PointCloud { points, seed, count, burn_in })
}

/// Largest `|f(p) - s(p) f(L⁻¹p) - Q(p)|` over the lattice points `p` and
/// every cell containing them, with `f(L⁻¹p)` read from the lattice itself.
pub fn fixed_point_residual(system: &SurfaceSystem, lattice: &LatticeValues) -> Result<f64, SystemError> {
    assert!(lattice.depth >= 1, "residual needs a lattice of depth at least 1");
    let n = lattice.n;
    let prev = n.pow(lattice.depth as u32);
    let xo: Vec<Orientation> = system.x_maps().maps().iter().map(|m| m.orientation).collect();
    let yo: Vec<Orientation> = system.y_maps().maps().iter().map(|m| m.orientation).collect();
    // pre-image of a level-t point is a level-(t-1) point, stored at n times
    // its index
    let plan = |o: &[Orientation]| -> Vec<Vec<(usize, usize)>> {
        (0..lattice.side)
            .map(|q| {
                (1..=n)
                    .filter(|&i| (i - 1) * prev <= q && q <= i * prev)
                    .map(|i| {
                        let p = match o[i - 1] {
                            Orientation::Increasing => q - (i - 1) * prev,
                            Orientation::Decreasing => i * prev - q,
                        };
                        (i, p * n)
                    })
                    .collect()
            })
            .collect()
    };
    let (px, py) = (plan(&xo), plan(&yo));
    let mut worst = 0.0f64;
    for a in 0..lattice.side {
        for b in 0..lattice.side {
            let (x, y) = (lattice.xs[a], lattice.ys[b]);
            let f = lattice.value(a, b);
            for &(i, pa) in &px[a] {
                for &(j, pb) in &py[b] {
                    let s = system
                        .vertical()
                        .value(i, j, x, y)
                        .map_err(|source| SystemError::Eval { field: "s", source })?;
                    let q = system.q_field_in_cell(i, j, x, y)?;
                    worst = worst.max((f - s * lattice.value(pa, pb) - q).abs());
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::grid::{DataGrid, KnotVector};
    use crate::ifs::VerticalField;

    fn bump() -> DataGrid {
        let k = KnotVector::uniform(0.0, 1.0, 2).unwrap();
        DataGrid::from_rows(k.clone(), k, &[vec![0.0; 3], vec![0.0, 1.0, 0.0], vec![0.0; 3]]).unwrap()
    }

    fn constant(grid: DataGrid, s: f64) -> SurfaceSystem {
        let n = grid.n();
        SurfaceSystem::new(grid, VerticalField::uniform(s, n, n)).unwrap()
    }

    #[test]
    fn axis_coordinates_are_level_independent() {
        let knots = [0.0, 0.25, 0.5, 0.75, 1.0];
        let coarse = axis_coords(&knots, 16);
        let fine = axis_coords(&knots, 64);
        for q in 0..=16 {
            assert_eq!(coarse[q].to_bits(), fine[4 * q].to_bits());
        }
    }

    #[test]
    fn plan_assigns_shared_knots_to_both_cells() {
        let o = [Orientation::Increasing, Orientation::Decreasing];
        let plan = AxisPlan::new(&[0.0, 0.5, 1.0], &o, 0);
        // level 1 has 4 intervals; index 2 is the interior knot
        assert_eq!(plan.sources[2].count, 2);
        assert_eq!(&plan.sources[2].cells, &[(1, 2), (2, 2)]);
        assert_eq!(plan.sources[1].cells[0], (1, 1));
        assert_eq!(plan.sources[3].cells[0], (2, 1));
        assert_eq!(plan.sources[4].cells[0], (2, 0));
        assert_eq!(plan.sources[0].cells[0], (1, 0));
    }

    #[test]
    fn zero_data_gives_zero_surface() {
        let k = KnotVector::uniform(0.0, 1.0, 3).unwrap();
        let sys = constant(DataGrid::from_fn(k.clone(), k, |_, _| 0.0).unwrap(), 0.5);
        let lat = evaluate_lattice(&sys, 3).unwrap();
        assert_eq!(lat.side(), 3usize.pow(4) + 1);
        assert!(lat.values().iter().all(|&v| v == 0.0));
        assert_eq!(eval_point(&sys, 0.31, 0.77, 5).unwrap().value, 0.0);
        let cloud = chaos_game(&sys, 500, 3, 10).unwrap();
        assert!(cloud.points.iter().all(|p| p.z == 0.0));
    }

    #[test]
    fn plane_is_reproduced() {
        let k = KnotVector::uniform(0.0, 1.0, 2).unwrap();
        let grid = DataGrid::from_fn(k.clone(), k.clone(), |i, j| k.values()[i] + 2.0 * k.values()[j]).unwrap();
        let sys = SurfaceSystem::new(grid, VerticalField::Global(Field::from_expr("0.2+0.5*x*y".parse().unwrap())))
            .unwrap();
        for depth in 0..5 {
            let lat = evaluate_lattice(&sys, depth).unwrap();
            for a in 0..lat.side() {
                for b in 0..lat.side() {
                    let plane = lat.x_coords()[a] + 2.0 * lat.y_coords()[b];
                    assert!((lat.value(a, b) - plane).abs() < 1e-12);
                }
            }
        }
        let cloud = chaos_game(&sys, 2000, 11, 50).unwrap();
        for p in &cloud.points {
            assert!((p.z - (p.x + 2.0 * p.y)).abs() < 1e-9);
        }
    }

    #[test]
    fn bump_depth_one_matches_hand_value() {
        let sys = constant(bump(), 0.5);
        let lat = evaluate_lattice(&sys, 1).unwrap();
        // g ≡ 0, h(0.25, 0.25) = 0.25, f(0.5, 0.5) = 1
        assert_eq!(lat.value(1, 1), 0.5 * (1.0 - 0.0) + 0.25);
        let p = eval_point(&sys, 0.25, 0.25, 1).unwrap();
        // one level of expansion reaches (0.5, 0.5) where h = f
        assert_eq!(p.value, lat.value(1, 1));
    }

    #[test]
    fn knots_are_interpolated_exactly() {
        let k = KnotVector::uniform(-1.0, 2.0, 3).unwrap();
        let data = [0.3, -0.8, 0.1, 0.9, -0.2, 0.4, 0.0, 0.7, -0.5, 0.6, 0.2, -0.9, 0.8, -0.1, 0.5, -0.6];
        let grid = DataGrid::from_fn(k.clone(), k, |i, j| data[i * 4 + j]).unwrap();
        let sys = SurfaceSystem::new(grid.clone(), VerticalField::Global(Field::from_expr("0.4+0.1*sin(3*x*y)".parse().unwrap())))
            .unwrap();
        let lat = evaluate_lattice(&sys, 3).unwrap();
        let step = (lat.side() - 1) / 3;
        for i in 0..=3 {
            for j in 0..=3 {
                assert_eq!(lat.value(i * step, j * step), grid.z(i, j));
                let (x, y) = (grid.xs().values()[i], grid.ys().values()[j]);
                assert_eq!(eval_point(&sys, x, y, 7).unwrap().value, grid.z(i, j));
            }
        }
    }

    #[test]
    fn refinement_is_monotone() {
        let sys = SurfaceSystem::new(bump(), VerticalField::Global(Field::from_expr("0.3+0.4*x*y".parse().unwrap())))
            .unwrap();
        let coarse = evaluate_lattice(&sys, 3).unwrap();
        let fine = evaluate_lattice(&sys, 4).unwrap();
        for a in 0..coarse.side() {
            for b in 0..coarse.side() {
                assert_eq!(coarse.value(a, b).to_bits(), fine.value(2 * a, 2 * b).to_bits());
            }
        }
    }

    #[test]
    fn streaming_matches_materialised() {
        let sys = constant(bump(), 0.6);
        let prev = evaluate_lattice(&sys, 3).unwrap();
        let full = refine(&sys, &prev).unwrap();
        let mut rows = 0;
        refine_streaming(&sys, &prev, |q, row| {
            assert_eq!(row, full.row(q));
            rows += 1;
        })
        .unwrap();
        assert_eq!(rows, full.side());
    }

    #[test]
    fn eval_point_within_bound_of_lattice() {
        let sys = SurfaceSystem::new(bump(), VerticalField::Global(Field::from_expr("0.5+0.2*x".parse().unwrap())))
            .unwrap();
        let lat = evaluate_lattice(&sys, 6).unwrap();
        for a in (0..lat.side()).step_by(7) {
            for b in (0..lat.side()).step_by(5) {
                let p = eval_point(&sys, lat.x_coords()[a], lat.y_coords()[b], 12).unwrap();
                assert!((p.value - lat.value(a, b)).abs() <= p.error_bound + 1e-12);
            }
        }
    }

    #[test]
    fn budget_and_shape_errors() {
        let sys = constant(bump(), 0.5);
        assert!(matches!(
            evaluate_lattice_with_budget(&sys, 4, LatticeBudget(100)),
            Err(LatticeError::BudgetExceeded { required: 1089, budget: 100 })
        ));
        let grid = DataGrid::from_fn(
            KnotVector::new(vec![0.0, 0.3, 1.0]).unwrap(),
            KnotVector::uniform(0.0, 1.0, 2).unwrap(),
            |_, _| 0.0,
        )
        .unwrap();
        let sys = constant(grid, 0.5);
        assert!(matches!(evaluate_lattice(&sys, 1), Err(LatticeError::NonUniform { .. })));
        // non-uniform grids still evaluate pointwise
        assert_eq!(eval_point(&sys, 0.4, 0.4, 4).unwrap().value, 0.0);
    }

    #[test]
    fn chaos_game_is_deterministic() {
        let sys = constant(bump(), 0.5);
        let a = chaos_game(&sys, 300, 42, 20).unwrap();
        let b = chaos_game(&sys, 300, 42, 20).unwrap();
        let c = chaos_game(&sys, 300, 43, 20).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points, c.points);
        assert_eq!(a.points.len(), 300);
        let d = sys.domain();
        assert!(a.points.iter().all(|p| d.contains(p.x, p.y)));
    }

    #[test]
    fn residual_vanishes_on_lattice() {
        let sys = SurfaceSystem::new(bump(), VerticalField::Global(Field::from_expr("0.3+0.4*x*y".parse().unwrap())))
            .unwrap();
        let lat = evaluate_lattice(&sys, 4).unwrap();
        assert!(fixed_point_residual(&sys, &lat).unwrap() <= 1e-12);
    }

    #[test]
    fn corrupted_maps_are_caught_during_recursion() {
        let k = KnotVector::uniform(0.0, 1.0, 2).unwrap();
        let grid = DataGrid::from_fn(k.clone(), k, |i, j| [0.1, 0.7, -0.4][i] * [1.0, -0.5, 0.8][j] + i as f64 * 0.2)
            .unwrap();
        let sys = SurfaceSystem::builder(grid, VerticalField::uniform(0.5, 2, 2))
            .orientations(vec![Orientation::Increasing; 2], vec![Orientation::Increasing; 2])
            .allow_unmatched_maps()
            .build()
            .unwrap();
        assert!(matches!(evaluate_lattice(&sys, 2), Err(LatticeError::BorderMismatch { .. })));
    }
}
