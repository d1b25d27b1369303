//! Scalar fields over the grid domain: parsed expressions, the default
//! interpolants for `g` and `h`, and caller-supplied closures.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::expr::{lerp, EvalError, Expr};
use crate::grid::{DataGrid, KnotVector, Rect};

/// A scalar field `E → ℝ`.
#[derive(Clone)]
pub enum Field {
    Constant(f64),
    Expr(Expr),
    /// Bilinear interpolant of the four domain corners (default `g`).
    CornerBilinear(CornerBilinear),
    /// Bilinear on every cell through all knot values (default `h`).
    PiecewiseBilinear(PiecewiseBilinear),
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl Field {
    pub fn from_expr(expr: Expr) -> Field {
        match expr.as_constant() {
            Some(c) => Field::Constant(c),
            None => Field::Expr(expr),
        }
    }

    pub fn custom(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Field {
        Field::Custom(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        match self {
            Field::Constant(c) => Ok(*c),
            Field::Expr(e) => e.eval(x, y),
            Field::CornerBilinear(b) => Ok(b.eval(x, y)),
            Field::PiecewiseBilinear(p) => Ok(p.eval(x, y)),
            Field::Custom(f) => {
                let v = f(x, y);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(EvalError::new(0, crate::expr::DomainError::NonFinite))
                }
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Field::Constant(_))
    }
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Constant(c) => write!(f, "Constant({c:?})"),
            Field::Expr(e) => write!(f, "Expr({:?})", e.source()),
            Field::CornerBilinear(_) => f.write_str("CornerBilinear"),
            Field::PiecewiseBilinear(_) => f.write_str("PiecewiseBilinear"),
            Field::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Constant(c) => write!(f, "{c:?}"),
            Field::Expr(e) => f.write_str(e.source()),
            Field::CornerBilinear(_) => f.write_str("default (corner bilinear)"),
            Field::PiecewiseBilinear(_) => f.write_str("default (piecewise bilinear)"),
            Field::Custom(_) => f.write_str("custom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CornerBilinear {
    rect: Rect,
    /// `z_00, z_n0, z_0m, z_nm`
    corners: [f64; 4],
}

impl CornerBilinear {
    pub fn new(rect: Rect, corners: [f64; 4]) -> Self {
        CornerBilinear { rect, corners }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let u = (x - self.rect.x0) / self.rect.width();
        let v = (y - self.rect.y0) / self.rect.height();
        let [a, b, c, d] = self.corners;
        lerp(lerp(a, b, u), lerp(c, d, u), v)
    }

    /// Exact Lipschitz constant (Euclidean) over the rectangle.
    pub fn lipschitz(&self) -> f64 {
        let [a, b, c, d] = self.corners;
        let gx = (b - a).abs().max((d - c).abs()) / self.rect.width();
        let gy = (c - a).abs().max((d - b).abs()) / self.rect.height();
        libm::hypot(gx, gy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseBilinear {
    xs: KnotVector,
    ys: KnotVector,
    /// x-major knot values
    z: Vec<f64>,
}

impl PiecewiseBilinear {
    pub fn new(grid: &DataGrid) -> Self {
        let (nx, ny) = (grid.n() + 1, grid.m() + 1);
        let mut z = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                z.push(grid.z(i, j));
            }
        }
        PiecewiseBilinear { xs: grid.xs().clone(), ys: grid.ys().clone(), z }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let i = self.xs.interval_of(x);
        let j = self.ys.interval_of(y);
        self.eval_in_cell(i, j, x, y)
    }

    #[inline]
    pub fn eval_in_cell(&self, i: usize, j: usize, x: f64, y: f64) -> f64 {
        let (xs, ys) = (self.xs.values(), self.ys.values());
        let stride = ys.len();
        let u = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        let v = (y - ys[j - 1]) / (ys[j] - ys[j - 1]);
        let z = |a: usize, b: usize| self.z[a * stride + b];
        lerp(lerp(z(i - 1, j - 1), z(i, j - 1), u), lerp(z(i - 1, j), z(i, j), u), v)
    }
}

/// Default `g`: bilinear through `z_00, z_n0, z_0m, z_nm`.
pub fn default_g(grid: &DataGrid) -> Field {
    let (n, m) = (grid.n(), grid.m());
    Field::CornerBilinear(CornerBilinear::new(
        grid.domain(),
        [grid.z(0, 0), grid.z(n, 0), grid.z(0, m), grid.z(n, m)],
    ))
}

/// Default `h`: piecewise bilinear through every `z_ij`.
pub fn default_h(grid: &DataGrid) -> Field {
    Field::PiecewiseBilinear(PiecewiseBilinear::new(grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn unit_grid(rows: &[Vec<f64>]) -> DataGrid {
        let k = KnotVector::uniform(0.0, 1.0, rows.len() - 1).unwrap();
        DataGrid::from_rows(k.clone(), k, rows).unwrap()
    }

    #[test]
    fn g_examples() {
        let zero = unit_grid(&[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]]);
        assert_eq!(default_g(&zero).eval(0.3, 0.7).unwrap(), 0.0);

        // z_00 = 0, z_n0 = 1, z_0m = 0, z_nm = 1
        let g = default_g(&unit_grid(&[vec![0.0, 5.0, 1.0], vec![3.0, 3.0, 3.0], vec![0.0, -2.0, 1.0]]));
        for &(x, y) in &[(0.0, 0.0), (0.3, 0.9), (1.0, 0.5), (0.77, 0.01)] {
            assert!((g.eval(x, y).unwrap() - x).abs() < 1e-15);
        }

        // corners 0, 1, 2, 3
        let g = default_g(&unit_grid(&[vec![0.0, 9.0, 1.0], vec![9.0, 9.0, 9.0], vec![2.0, 9.0, 3.0]]));
        assert_eq!(g.eval(0.5, 0.5).unwrap(), 1.5);
    }

    #[test]
    fn h_examples() {
        let bump = unit_grid(&[vec![0.0; 3], vec![0.0, 1.0, 0.0], vec![0.0; 3]]);
        let h = default_h(&bump);
        assert_eq!(h.eval(0.5, 0.5).unwrap(), 1.0);
        assert_eq!(h.eval(0.25, 0.25).unwrap(), 0.25);
        assert_eq!(h.eval(0.75, 0.5).unwrap(), 0.5);
    }

    #[test]
    fn corner_bilinear_lipschitz_bounds_samples() {
        let b = CornerBilinear::new(Rect::new(0.0, 2.0, 1.0, 2.0), [0.0, 1.0, -3.0, 4.0]);
        let l = b.lipschitz();
        let meta = crate::expr::sample_meta(Rect::new(0.0, 2.0, 1.0, 2.0), 32, |x, y| {
            Ok::<_, ()>(b.eval(x, y))
        })
        .unwrap();
        assert!(meta.lipschitz_estimate <= l + 1e-12);
    }
}
