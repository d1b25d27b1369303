//! Text serialisations of lattices and point clouds.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! value reads back bit-exactly.

use std::fmt::Write;

use fisurf_core::{LatticeValues, Point3};
use serde::{Deserialize, Serialize};

/// Wavefront OBJ, y-up: grid `x` is OBJ x, data `z` is OBJ y (up) and grid
/// `y` becomes OBJ `-z`, which keeps the mesh right-handed. Quads are
/// counter-clockwise seen from above.
pub fn lattice_obj(lattice: &LatticeValues) -> String {
    let side = lattice.side();
    let (xs, ys) = (lattice.x_coords(), lattice.y_coords());
    let mut out = String::with_capacity(side * side * 32);
    let _ = writeln!(out, "# fisurf lattice n={} depth={} side={}", lattice.n(), lattice.depth(), side);
    for a in 0..side {
        let row = lattice.row(a);
        for b in 0..side {
            let _ = writeln!(out, "v {} {} {}", xs[a], row[b], -ys[b]);
        }
    }
    let idx = |a: usize, b: usize| a * side + b + 1;
    for a in 0..side - 1 {
        for b in 0..side - 1 {
            let _ = writeln!(out, "f {} {} {} {}", idx(a, b), idx(a + 1, b), idx(a + 1, b + 1), idx(a, b + 1));
        }
    }
    out
}

/// `x,y,f` rows, x-major.
pub fn lattice_csv(lattice: &LatticeValues) -> String {
    let side = lattice.side();
    let (xs, ys) = (lattice.x_coords(), lattice.y_coords());
    let mut out = String::from("x,y,f\n");
    for a in 0..side {
        for (b, f) in lattice.row(a).iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", xs[a], ys[b], f);
        }
    }
    out
}

pub fn lattice_xyz(lattice: &LatticeValues) -> String {
    let side = lattice.side();
    let (xs, ys) = (lattice.x_coords(), lattice.y_coords());
    let mut out = String::new();
    for a in 0..side {
        for (b, f) in lattice.row(a).iter().enumerate() {
            let _ = writeln!(out, "{} {} {}", xs[a], ys[b], f);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeDocument {
    pub schema: String,
    pub n: usize,
    pub depth: usize,
    pub side: usize,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `values[a * side + b]` is `f(xs[a], ys[b])`.
    pub values: Vec<f64>,
}

impl LatticeDocument {
    pub fn new(lattice: &LatticeValues) -> Self {
        LatticeDocument {
            schema: crate::report::SCHEMA.to_owned(),
            n: lattice.n(),
            depth: lattice.depth(),
            side: lattice.side(),
            xs: lattice.x_coords().to_vec(),
            ys: lattice.y_coords().to_vec(),
            values: lattice.values().to_vec(),
        }
    }
}

pub fn points_xyz(points: &[Point3]) -> String {
    let mut out = String::with_capacity(points.len() * 48);
    for p in points {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    out
}

pub fn points_csv(points: &[Point3]) -> String {
    let mut out = String::from("x,y,z\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.x, p.y, p.z);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use fisurf_core::Rect;

    #[test]
    fn obj_counts_and_orientation() {
        let lat = LatticeValues::from_fn(2, 0, Rect::unit(), |x, y| x + 2.0 * y);
        let obj = lattice_obj(&lat);
        let verts: Vec<&str> = obj.lines().filter(|l| l.starts_with("v ")).collect();
        let faces: Vec<&str> = obj.lines().filter(|l| l.starts_with("f ")).collect();
        assert_eq!((verts.len(), faces.len()), (9, 4));
        // vertex 2 is (x = 0, y = 0.5): up axis carries f, depth axis -y
        assert_eq!(verts[1], "v 0 1 -0.5");
        assert_eq!(faces[0], "f 1 4 5 2");
    }

    #[test]
    fn csv_values_read_back_exactly() {
        let lat = LatticeValues::from_fn(3, 1, Rect::new(-1.0, 2.0, 0.0, 0.3), |x, y| (x * 7.1).sin() + y / 3.0);
        let csv = lattice_csv(&lat);
        let parsed: Vec<f64> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
        assert_eq!(parsed, lat.values());
    }
}
