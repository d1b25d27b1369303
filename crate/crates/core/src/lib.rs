//! Fractal interpolation surfaces on rectangular grids with a variable
//! vertical contraction `s(x, y)`.
//!
//! A [`SurfaceSystem`] is built from a [`DataGrid`] and a [`VerticalField`];
//! its attractor is the graph of a continuous `f` interpolating the data.
//! [`attractor`] renders `f`, [`boxdim`] compares the box dimension predicted
//! from the extrema of `|s|` with box counts of the rendered surface.
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is enabled;
//! `parallel` adds rayon-based lattice evaluation.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod attractor;
pub mod boxdim;
pub mod expr;
pub mod field;
pub mod grid;
pub mod ifs;

pub use attractor::{
    chaos_game, eval_point, evaluate_lattice, evaluate_lattice_with_budget, fixed_point_residual, LatticeBudget,
    LatticeError, LatticeValues, PointCloud, PointEstimate,
};
pub use boxdim::{
    analyze_dimension, box_count_series, cell_extrema, count_boxes, estimate_dimension, remark1_bounds,
    theorem_verdict, verify_containment, BoxCountSeries, CellExtremaMatrix, Containment, DimensionOptions,
    DimensionReport, DimensionVerdict, Remark1, SlopeFit, VerdictCase,
};
pub use expr::{field_meta, EvalError, Expr, FieldMeta, ParseError};
pub use field::{default_g, default_h, Field};
pub use grid::{height_report, is_uniform, normalize_to_unit, DataGrid, GridError, HeightReport, KnotVector, Rect};
pub use ifs::{
    check_border_consistency, lemma_gap, CellMatrix, Orientation, Point3, SignMode, SurfaceSystem, SystemBuilder,
    SystemError, VerticalField,
};
