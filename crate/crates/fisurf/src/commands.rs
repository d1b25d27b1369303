//! Argument definitions and the six subcommands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fisurf_core::boxdim::{box_count_series, system_extrema};
use fisurf_core::ifs::{CellMatrix, DEFAULT_RESOLUTION};
use fisurf_core::{
    analyze_dimension, chaos_game, eval_point, evaluate_lattice, estimate_dimension, height_report, is_uniform,
    normalize_to_unit, remark1_bounds, theorem_verdict, Containment, DataGrid, DimensionOptions, Expr, Field,
    LatticeBudget, SurfaceSystem, VerticalField,
};

use crate::export::{self, LatticeDocument};
use crate::io::{load_cell_fields, load_grid, read_file, write_output};
use crate::report::{
    box_count_rows, containment_label, ConfigEcho, ExtremaSummary, FitSummary, GlobalBoundsSummary, PointRow,
    ReportDocument, SystemSummary, Timing, VerdictSummary,
};

#[derive(Debug, Parser)]
#[command(name = "fisurf", version, about = "Fractal interpolation surfaces on rectangular grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the surface on the level-DEPTH lattice and write it out.
    ///
    /// OBJ output is y-up: grid x is OBJ x, the data value is OBJ y and grid
    /// y becomes OBJ -z. Quads are counter-clockwise seen from above.
    Generate(GenerateArgs),
    /// Evaluate the surface at given points, with an error bound per point.
    Eval(EvalArgs),
    /// Dimension bounds from the per-cell extrema of |s| (no rendering).
    Bounds(BoundsArgs),
    /// Empirical box-counting dimension from a lattice.
    Dim(DimArgs),
    /// Bounds, box counting, slope fit and the containment check.
    ///
    /// Exits with 3 when the slope falls outside the bounds widened by the
    /// tolerance.
    Verify(DimArgs),
    /// Random-iteration point cloud on the attractor.
    Chaos(ChaosArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    /// Grid CSV: header row of x-knots after an empty cell, then one row per
    /// y-knot.
    #[arg(long, value_name = "PATH")]
    pub grid: PathBuf,
    /// Vertical contraction: an expression in x and y, a constant, or
    /// @FILE with one expression per cell.
    #[arg(long = "s", value_name = "EXPR|@FILE", allow_hyphen_values = true)]
    pub s: String,
    /// Replaces the bilinear interpolant of the corner values.
    #[arg(long, value_name = "EXPR", allow_hyphen_values = true)]
    pub g: Option<String>,
    /// Replaces the piecewise bilinear interpolant of the data.
    #[arg(long, value_name = "EXPR", allow_hyphen_values = true)]
    pub h: Option<String>,
    /// Samples per cell axis when validating s and taking its extrema.
    #[arg(long, value_name = "R", default_value_t = DEFAULT_RESOLUTION)]
    pub resolution: usize,
    /// Accept 0 < |s| < 1 instead of 0 < s < 1.
    #[arg(long)]
    pub allow_negative_s: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file, written atomically; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Obj,
    Xyz,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Obj => "obj",
            Format::Xyz => "xyz",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, value_name = "K", default_value_t = 4)]
    pub depth: usize,
    /// obj (default), csv, json or xyz.
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Point to evaluate; repeat for several.
    #[arg(long, value_name = "X,Y", required = true, value_parser = parse_point, allow_hyphen_values = true)]
    pub at: Vec<(f64, f64)>,
    #[arg(long, value_name = "K", default_value_t = 20)]
    pub depth: usize,
    /// csv (default) or json.
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// json only.
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DimArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, value_name = "K", default_value_t = 6)]
    pub depth: usize,
    /// Fit range of r, where ε = n^-r; defaults to 2:DEPTH-1.
    #[arg(long, value_name = "LO:HI", value_parser = parse_scales)]
    pub scales: Option<(usize, usize)>,
    /// Allowed distance of the slope from the bounds.
    #[arg(long = "tol", value_name = "T", default_value_t = 0.1)]
    pub tolerance: f64,
    /// json (default) or csv (the box-count table).
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ChaosArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, value_name = "N", default_value_t = 10_000)]
    pub points: usize,
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "N", default_value_t = 100)]
    pub burn_in: usize,
    /// xyz (default), csv or json.
    #[command(flatten)]
    pub output: OutputArgs,
}

fn parse_point(text: &str) -> Result<(f64, f64), String> {
    let (x, y) = text.split_once(',').ok_or_else(|| format!("expected X,Y, got {text:?}"))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("not a finite number: {t:?}"))
    };
    Ok((num(x)?, num(y)?))
}

fn parse_scales(text: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = text.split_once(':').ok_or_else(|| format!("expected LO:HI, got {text:?}"))?;
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    let (lo, hi) = (num(lo)?, num(hi)?);
    if lo == 0 || lo > hi {
        return Err(format!("need 1 <= LO <= HI, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ContainmentFailed,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::ContainmentFailed => 3,
        }
    }
}

/// Reads `FISURF_THREADS` and sizes the global pool; returns the setting.
pub fn configure_threads() -> Result<usize, CliError> {
    let Ok(text) = std::env::var("FISURF_THREADS") else {
        return Ok(0);
    };
    let threads: usize = text
        .trim()
        .parse()
        .map_err(|_| CliError::Validation(format!("FISURF_THREADS: not a thread count: {text:?}")))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(invalid)?;
    }
    Ok(threads)
}

struct Timer {
    start: Instant,
    last: Instant,
    stages: Vec<Timing>,
}

impl Timer {
    fn new() -> Self {
        let now = Instant::now();
        Timer { start: now, last: now, stages: Vec::new() }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.stages.push(Timing { stage: stage.to_owned(), seconds: (now - self.last).as_secs_f64() });
        self.last = now;
    }

    fn finish(mut self) -> Vec<Timing> {
        self.stages.push(Timing { stage: "total".to_owned(), seconds: self.start.elapsed().as_secs_f64() });
        self.stages
    }
}

/// `(offset, scale)` per axis taking unit coordinates back to the grid's.
type Affine = ((f64, f64), (f64, f64));

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    read_file(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse_expr(flag: &str, text: &str, back: Option<Affine>) -> Result<Expr, CliError> {
    let e = Expr::parse(text).map_err(|e| CliError::Validation(format!("--{flag} {text:?}: {e}")))?;
    Ok(match back {
        Some((x, y)) => e.rescaled(x, y),
        None => e,
    })
}

fn rescale_field(field: Field, back: Option<Affine>) -> Field {
    match (field, back) {
        (Field::Expr(e), Some((x, y))) => Field::Expr(e.rescaled(x, y)),
        (f, _) => f,
    }
}

fn load_vertical(spec: &str, grid: &DataGrid, back: Option<Affine>) -> Result<VerticalField, CliError> {
    if let Some(path) = spec.strip_prefix('@') {
        let path = Path::new(path);
        let bytes = read(path)?;
        let cells = load_cell_fields(bytes.as_slice(), grid.n(), grid.m())
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let (n, m) = cells.dims();
        let cells = CellMatrix::from_fn(n, m, |i, j| rescale_field(cells.get(i, j).clone(), back));
        Ok(VerticalField::PerCell(cells))
    } else {
        Ok(VerticalField::Global(Field::from_expr(parse_expr("s", spec, back)?)))
    }
}

/// Loads the grid and builds the system. With `normalize` the grid is mapped
/// onto the unit square and the expressions follow, so they stay written in
/// the grid's own coordinates.
fn build_system(args: &SystemArgs, normalize: bool) -> Result<SurfaceSystem, CliError> {
    let bytes = read(&args.grid)?;
    let grid = load_grid(bytes.as_slice()).map_err(|e| CliError::Validation(format!("{}: {e}", args.grid.display())))?;
    let (grid, back) = if normalize {
        let back = ((grid.xs().first(), grid.xs().span()), (grid.ys().first(), grid.ys().span()));
        (normalize_to_unit(&grid), Some(back))
    } else {
        (grid, None)
    };
    let s = load_vertical(&args.s, &grid, back)?;
    let mut builder = SurfaceSystem::builder(grid, s)
        .resolution(args.resolution)
        .allow_negative_s(args.allow_negative_s);
    if let Some(g) = &args.g {
        builder = builder.g(Field::from_expr(parse_expr("g", g, back)?));
    }
    if let Some(h) = &args.h {
        builder = builder.h(Field::from_expr(parse_expr("h", h, back)?));
    }
    builder.build().map_err(|e| CliError::Validation(format!("invalid system: {e}")))
}

fn require_uniform_square(system: &SurfaceSystem) -> Result<(), CliError> {
    let u = is_uniform(system.grid());
    if u.uniform {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "dimension analysis needs equally spaced knots and n = m (got {} x {} cells, spacing deviation {:e})",
            system.n(),
            system.m(),
            u.max_deviation
        )))
    }
}

fn pick(format: Option<Format>, default: Format, allowed: &[Format], command: &str) -> Result<Format, CliError> {
    let f = format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        let names: Vec<&str> = allowed.iter().map(|f| f.name()).collect();
        Err(CliError::Validation(format!("{command} writes {}, not {}", names.join(", "), f.name())))
    }
}

fn emit(output: &OutputArgs, text: &str) -> Result<(), CliError> {
    write_output(output.out.as_deref(), text.as_bytes()).map_err(|e| {
        let target = output.out.as_ref().map_or("stdout".to_owned(), |p| p.display().to_string());
        CliError::Io(format!("writing {target}: {e}"))
    })
}

fn echo(command: &str, system: &SystemArgs, output: &OutputArgs, format: Format, threads: usize) -> ConfigEcho {
    ConfigEcho {
        command: command.to_owned(),
        grid: system.grid.display().to_string(),
        s: system.s.clone(),
        g: system.g.clone(),
        h: system.h.clone(),
        resolution: system.resolution,
        allow_negative_s: system.allow_negative_s,
        depth: None,
        scales: None,
        tolerance: None,
        seed: None,
        points: None,
        burn_in: None,
        at: Vec::new(),
        format: format.name().to_owned(),
        out: output.out.as_ref().map(|p| p.display().to_string()),
        threads,
        normalized: false,
    }
}

pub fn run(cli: Cli, threads: usize) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Eval(a) => eval(&a, threads),
        Command::Bounds(a) => bounds(&a, threads),
        Command::Dim(a) => dim(&a, threads, false),
        Command::Verify(a) => dim(&a, threads, true),
        Command::Chaos(a) => chaos(&a, threads),
    }
}

fn generate(a: &GenerateArgs) -> Result<Outcome, CliError> {
    let format = pick(a.output.format, Format::Obj, &[Format::Obj, Format::Csv, Format::Json, Format::Xyz], "generate")?;
    let system = build_system(&a.system, false)?;
    let lattice = evaluate_lattice(&system, a.depth).map_err(invalid)?;
    let text = match format {
        Format::Obj => export::lattice_obj(&lattice),
        Format::Csv => export::lattice_csv(&lattice),
        Format::Xyz => export::lattice_xyz(&lattice),
        Format::Json => {
            let mut t = serde_json::to_string(&LatticeDocument::new(&lattice)).map_err(invalid)?;
            t.push('\n');
            t
        }
    };
    emit(&a.output, &text)?;
    Ok(Outcome::Success)
}

fn eval(a: &EvalArgs, threads: usize) -> Result<Outcome, CliError> {
    let format = pick(a.output.format, Format::Csv, &[Format::Csv, Format::Json], "eval")?;
    let mut timer = Timer::new();
    let system = build_system(&a.system, false)?;
    timer.lap("build");
    let points = a
        .at
        .iter()
        .map(|&(x, y)| {
            let p = eval_point(&system, x, y, a.depth).map_err(invalid)?;
            Ok(PointRow { x, y, f: p.value, error_bound: p.error_bound })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    timer.lap("eval");
    let text = match format {
        Format::Json => {
            let mut config = echo("eval", &a.system, &a.output, format, threads);
            config.depth = Some(a.depth);
            config.at = a.at.clone();
            let mut doc = ReportDocument::new(config);
            doc.system = Some(SystemSummary::new(&system));
            doc.points = points;
            doc.timings = timer.finish();
            doc.to_json()
        }
        _ => {
            let mut out = String::from("x,y,f,error_bound\n");
            for p in &points {
                let _ = writeln!(out, "{},{},{},{}", p.x, p.y, p.f, p.error_bound);
            }
            out
        }
    };
    emit(&a.output, &text)?;
    Ok(Outcome::Success)
}

fn bounds(a: &BoundsArgs, threads: usize) -> Result<Outcome, CliError> {
    let format = pick(a.output.format, Format::Json, &[Format::Json], "bounds")?;
    let mut timer = Timer::new();
    let system = build_system(&a.system, true)?;
    require_uniform_square(&system)?;
    timer.lap("build");
    let extrema = system_extrema(&system);
    let verdict = theorem_verdict(&extrema, &height_report(system.grid()), system.n()).map_err(invalid)?;
    let global = remark1_bounds(extrema.global_min(), extrema.global_max(), system.n()).ok();
    timer.lap("bounds");

    let mut config = echo("bounds", &a.system, &a.output, format, threads);
    config.normalized = true;
    let mut doc = ReportDocument::new(config);
    doc.system = Some(SystemSummary::new(&system));
    doc.extrema = Some(ExtremaSummary::new(&extrema));
    doc.verdict = Some(VerdictSummary::new(&verdict));
    doc.global_bounds = global.as_ref().map(GlobalBoundsSummary::new);
    doc.timings = timer.finish();
    emit(&a.output, &doc.to_json())?;
    Ok(Outcome::Success)
}

fn dim(a: &DimArgs, threads: usize, verify: bool) -> Result<Outcome, CliError> {
    let command = if verify { "verify" } else { "dim" };
    let format = pick(a.output.format, Format::Json, &[Format::Json, Format::Csv], command)?;
    if !(a.tolerance > 0.0 && a.tolerance.is_finite()) {
        return Err(CliError::Validation(format!("--tol must be positive, got {}", a.tolerance)));
    }
    let (r_lo, r_hi) = a.scales.unwrap_or((2, a.depth.saturating_sub(1)));
    if r_hi + 1 > a.depth {
        return Err(CliError::Validation(format!(
            "largest scale {r_hi} needs --depth at least {} (got {})",
            r_hi + 1,
            a.depth
        )));
    }
    let mut timer = Timer::new();
    let system = build_system(&a.system, true)?;
    require_uniform_square(&system)?;
    timer.lap("build");

    let mut config = echo(command, &a.system, &a.output, format, threads);
    config.depth = Some(a.depth);
    config.scales = Some((r_lo, r_hi));
    config.normalized = true;
    if verify {
        config.tolerance = Some(a.tolerance);
    }
    let mut doc = ReportDocument::new(config);
    doc.system = Some(SystemSummary::new(&system));

    let mut outcome = Outcome::Success;
    if verify {
        let options = DimensionOptions { depth: a.depth, r_lo, r_hi, tolerance: a.tolerance, budget: LatticeBudget::default() };
        let report = analyze_dimension(&system, &options).map_err(invalid)?;
        timer.lap("analysis");
        doc.extrema = Some(ExtremaSummary::new(&report.extrema));
        doc.verdict = Some(VerdictSummary::new(&report.verdict));
        doc.global_bounds = report.remark1.as_ref().map(GlobalBoundsSummary::new);
        doc.box_counts = box_count_rows(&report.series);
        doc.fit = Some(FitSummary::new(&report.fit, report.series.lattice_depth));
        doc.containment = Some(containment_label(report.containment));
        let v = &doc.verdict.as_ref().expect("set above");
        let interval = match (v.lower, v.upper) {
            (Some(lo), Some(hi)) => format!("[{lo:.4}, {hi:.4}]"),
            _ => "no interval".to_owned(),
        };
        eprintln!(
            "verdict {} {interval}, slope {:.4} ± {:.2e}: {}",
            v.case,
            report.fit.slope,
            report.fit.stderr,
            containment_label(report.containment)
        );
        if report.containment == Containment::NotContained {
            outcome = Outcome::ContainmentFailed;
        }
    } else {
        let series = box_count_series(&system, a.depth, r_lo, r_hi, LatticeBudget::default()).map_err(invalid)?;
        let fit = estimate_dimension(&series, r_lo, r_hi).map_err(invalid)?;
        timer.lap("box counting");
        doc.box_counts = box_count_rows(&series);
        doc.fit = Some(FitSummary::new(&fit, series.lattice_depth));
    }
    doc.timings = timer.finish();

    let text = match format {
        Format::Csv => {
            let mut out = String::from("r,epsilon,count\n");
            for row in &doc.box_counts {
                let _ = writeln!(out, "{},{},{}", row.r, row.epsilon, row.count);
            }
            out
        }
        _ => doc.to_json(),
    };
    emit(&a.output, &text)?;
    Ok(outcome)
}

fn chaos(a: &ChaosArgs, threads: usize) -> Result<Outcome, CliError> {
    let format = pick(a.output.format, Format::Xyz, &[Format::Xyz, Format::Csv, Format::Json], "chaos")?;
    let mut timer = Timer::new();
    let system = build_system(&a.system, false)?;
    timer.lap("build");
    let cloud = chaos_game(&system, a.points, a.seed, a.burn_in).map_err(invalid)?;
    timer.lap("iterate");
    let text = match format {
        Format::Xyz => export::points_xyz(&cloud.points),
        Format::Csv => export::points_csv(&cloud.points),
        _ => {
            let mut config = echo("chaos", &a.system, &a.output, format, threads);
            config.seed = Some(a.seed);
            config.points = Some(a.points);
            config.burn_in = Some(a.burn_in);
            let mut doc = ReportDocument::new(config);
            doc.system = Some(SystemSummary::new(&system));
            doc.cloud = cloud.points.iter().map(|p| [p.x, p.y, p.z]).collect();
            doc.timings = timer.finish();
            doc.to_json()
        }
    };
    emit(&a.output, &text)?;
    Ok(Outcome::Success)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_and_scale_syntax() {
        assert_eq!(parse_point("0.25,-1e-3"), Ok((0.25, -1e-3)));
        assert!(parse_point("0.25").is_err());
        assert!(parse_point("nan,0").is_err());
        assert_eq!(parse_scales("2:5"), Ok((2, 5)));
        assert!(parse_scales("5:2").is_err());
        assert!(parse_scales("0:2").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
