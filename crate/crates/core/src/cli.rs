//! Command-line front end.
//!
//! Exit codes: 0 ok or member, 1 non-member or empty, 2 invalid input,
//! 3 I/O failure, 4 indeterminate, 5 unsupported operation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::ccg_ops::{ccg_halfspace, ccg_intersect, ccg_linear_map, ccg_minkowski};
use crate::error::SetError;
use crate::feasibility::{
    ccg_member, rcg_member, FeasibilityVerdict, RcgVerdict, SolverConfig, Status,
    DEFAULT_MAX_ITER, DEFAULT_TOL_FEAS, DEFAULT_TOL_INFEAS,
};
use crate::json::{emit_set_json, parse_set_json, SetDescription};
use crate::oracle::{raster_membership, sample_members, BBox, Cell, RasterGrid, DEFAULT_SEED};
use crate::rcg_ops::{
    common_generator_form, rcg_from_difference, rcg_intersect_ccg, rcg_intersect_rcg,
    rcg_linear_map, rcg_minkowski_ccg, rcg_minkowski_rcg, rz_intersect_zonotope,
    try_annulus_form, ExclusionForm,
};
use crate::render::{export_csv, render_svg, RenderStyle};
use crate::set::{CutResult, Halfspace, LinearMap, Rcg};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_INDETERMINATE: i32 = 4;
pub const EXIT_UNSUPPORTED: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "rcg", version, about = "Constrained convex generators and roundabout sets")]
pub struct Cli {
    /// Residual at or below which a feasibility problem is declared feasible.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL_FEAS)]
    pub tol_feas: f64,
    /// Stalled residual above which a problem is declared infeasible.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL_INFEAS)]
    pub tol_infeas: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Disable closed-form membership shortcuts.
    #[arg(long, global = true)]
    pub force_general: bool,
    /// Write a JSON run report to this path.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a set description.
    Validate { file: PathBuf },
    /// Decide membership of a point.
    Member {
        file: PathBuf,
        #[arg(long, value_parser = parse_floats, allow_hyphen_values = true)]
        point: FloatList,
    },
    /// Apply a set operation and write the result.
    #[command(subcommand)]
    Op(OpCommand),
    /// Rasterize a planar set to CSV and/or SVG.
    #[command(visible_alias = "render")]
    Raster(RasterArgs),
    /// Run raster jobs listed in a manifest.
    Batch {
        manifest: PathBuf,
        /// Directory that output paths in the manifest are relative to.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Draw members by rejection sampling and write them as CSV.
    Sample {
        file: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum OpCommand {
    /// Linear image `T S`.
    Map {
        file: PathBuf,
        /// Row-major matrix, rows separated by `;`, e.g. `1,0;0,2`.
        #[arg(long, value_parser = parse_matrix, allow_hyphen_values = true)]
        matrix: DMatrix<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Minkowski sum.
    Minksum {
        first: PathBuf,
        second: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Intersection with a set or a halfspace.
    Intersect {
        first: PathBuf,
        second: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Intersection with a halfspace; prints the slack bound `d_max`.
    Halfspace {
        file: PathBuf,
        halfspace: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Roundabout set `outer ∖ inner` from two sets.
    Annulus {
        outer: PathBuf,
        inner: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Roundabout zonotope intersected with a zonotope.
    RzIntersect {
        rz: PathBuf,
        zonotope: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RasterArgs {
    pub file: PathBuf,
    /// `xmin,xmax,ymin,ymax`
    #[arg(long, value_parser = parse_bbox, allow_hyphen_values = true)]
    pub bbox: BBox,
    /// `nx,ny` or a single count for a square grid.
    #[arg(long, value_parser = parse_res, default_value = "200,200")]
    pub res: Resolution,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Sets painted underneath the main set, in order.
    #[arg(long)]
    pub overlay: Vec<PathBuf>,
    #[arg(long)]
    pub legend: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub nx: usize,
    pub ny: usize,
}

fn floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| {
            let v = v.trim();
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("{v:?} is not a finite number"))
        })
        .collect()
}

pub fn parse_floats(s: &str) -> Result<FloatList, String> {
    floats(s).map(FloatList)
}

pub fn parse_bbox(s: &str) -> Result<BBox, String> {
    match floats(s)?.as_slice() {
        [xmin, xmax, ymin, ymax] => BBox::new(*xmin, *xmax, *ymin, *ymax).map_err(|e| e.to_string()),
        v => Err(format!("expected xmin,xmax,ymin,ymax, got {} values", v.len())),
    }
}

pub fn parse_res(s: &str) -> Result<Resolution, String> {
    let counts = s
        .split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let (nx, ny) = match counts.as_slice() {
        [n] => (*n, *n),
        [nx, ny] => (*nx, *ny),
        v => return Err(format!("expected nx,ny, got {} values", v.len())),
    };
    if nx < 2 || ny < 2 {
        return Err(format!("resolution {nx}x{ny} is below 2x2"));
    }
    Ok(Resolution { nx, ny })
}

pub fn parse_matrix(s: &str) -> Result<DMatrix<f64>, String> {
    let rows = s.split(';').map(floats).collect::<Result<Vec<_>, _>>()?;
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err("matrix rows have different lengths".into());
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        cols,
        rows.into_iter().flatten(),
    ))
}

#[derive(Debug)]
enum CliError {
    Set(SetError),
    Io { path: PathBuf, message: String },
}

impl From<SetError> for CliError {
    fn from(e: SetError) -> Self {
        CliError::Set(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            CliError::Set(SetError::UnsupportedOperation(_)) => EXIT_UNSUPPORTED,
            CliError::Set(SetError::SamplingExhausted { .. }) => EXIT_NEGATIVE,
            CliError::Set(_) => EXIT_INVALID,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Io { path, message } => format!("{}: {message}", path.display()),
            CliError::Set(e) => e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct SolverSettings {
    tol_feas: f64,
    tol_infeas: f64,
    max_iter: usize,
    force_general: bool,
    band_width: f64,
}

/// Machine-readable record of one invocation.
#[derive(Debug, Serialize)]
struct RunReport {
    command: Vec<String>,
    inputs: Vec<InputDigest>,
    outputs: Vec<Value>,
    exit_code: i32,
    error: Option<String>,
    seed: u64,
    solver: SolverSettings,
    wall_time_s: f64,
}

struct Session<'a> {
    cfg: SolverConfig,
    seed: u64,
    inputs: Vec<InputDigest>,
    outputs: Vec<Value>,
    out: &'a mut dyn Write,
}

// Residuals may be infinite (inconsistent equalities); JSON has no infinity.
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

fn verdict_json(v: &FeasibilityVerdict) -> Value {
    json!({
        "status": v.status.to_string(),
        "residual": num(v.residual),
        "iterations": v.iterations,
    })
}

fn rcg_verdict_json(v: &RcgVerdict) -> Value {
    json!({
        "status": v.status.to_string(),
        "residual": num(deciding_residual(v)),
        "path": format!("{:?}", v.path).to_lowercase(),
        "outer": verdict_json(&v.outer),
        "inner": v.inner.as_ref().map(verdict_json),
    })
}

fn deciding_residual(v: &RcgVerdict) -> f64 {
    match (&v.outer.status, &v.inner) {
        (Status::Feasible, Some(inner)) => inner.residual,
        _ => v.outer.residual,
    }
}

fn status_code(s: Status) -> i32 {
    match s {
        Status::Feasible => EXIT_OK,
        Status::Infeasible => EXIT_NEGATIVE,
        Status::Indeterminate => EXIT_INDETERMINATE,
    }
}

impl Session<'_> {
    fn say(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", line.as_ref());
    }

    fn read(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(bytes)
    }

    fn load(&mut self, path: &Path) -> CliResult<SetDescription> {
        let bytes = self.read(path)?;
        Ok(parse_set_json(&bytes)?)
    }

    fn write(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::Io {
                path: dir.to_path_buf(),
                message: e.to_string(),
            })?;
        }
        fs::write(path, bytes).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    fn write_set(&mut self, path: &Path, set: SetDescription) -> CliResult<()> {
        let mut text = emit_set_json(&set);
        text.push('\n');
        self.write(path, text.as_bytes())?;
        self.say(format!("wrote {} to {}", set.kind(), path.display()));
        self.outputs.push(json!({"written": path.display().to_string(), "kind": set.kind()}));
        Ok(())
    }

    fn dispatch(&mut self, command: &Command) -> CliResult<i32> {
        match command {
            Command::Validate { file } => self.validate(file),
            Command::Member { file, point } => self.member(file, &point.0),
            Command::Op(op) => self.op(op),
            Command::Raster(args) => self.raster(args),
            Command::Batch { manifest, out_dir } => self.batch(manifest, out_dir),
            Command::Sample {
                file,
                count,
                output,
            } => self.sample(file, *count, output.as_deref()),
        }
    }

    fn validate(&mut self, file: &Path) -> CliResult<i32> {
        let set = self.load(file)?;
        let summary = match &set {
            SetDescription::Ccg(s) => format!(
                "valid ccg: n={} m={} groups={} constraints={}",
                s.dim(),
                s.n_coeffs(),
                s.groups().len(),
                s.n_constraints()
            ),
            SetDescription::Rcg(r) => format!(
                "valid rcg: n={} outer m={} inner m={} radii={:?}",
                r.dim(),
                r.outer().n_coeffs(),
                r.inner().n_coeffs(),
                r.radii()
            ),
            SetDescription::Halfspace(h) => format!("valid halfspace: n={}", h.dim()),
        };
        self.say(&summary);
        self.outputs.push(json!({"valid": true, "kind": set.kind()}));
        Ok(EXIT_OK)
    }

    fn member(&mut self, file: &Path, point: &[f64]) -> CliResult<i32> {
        let set = self.load(file)?;
        let x = DVector::from_column_slice(point);
        let (status, line, report) = match &set {
            SetDescription::Ccg(s) => {
                let v = ccg_member(&x, s, &self.cfg)?;
                let line = format!(
                    "{} residual={:.3e} iterations={}",
                    v.status, v.residual, v.iterations
                );
                (v.status, line, verdict_json(&v))
            }
            SetDescription::Rcg(r) => {
                let v = rcg_member(&x, r, &self.cfg)?;
                let mut line = format!(
                    "{} residual={:.3e} path={} outer={}({:.3e})",
                    v.status,
                    deciding_residual(&v),
                    format!("{:?}", v.path).to_lowercase(),
                    v.outer.status,
                    v.outer.residual,
                );
                if let Some(inner) = &v.inner {
                    line.push_str(&format!(" inner={}({:.3e})", inner.status, inner.residual));
                }
                (v.status, line, rcg_verdict_json(&v))
            }
            SetDescription::Halfspace(h) => {
                if x.len() != h.dim() {
                    return Err(SetError::Shape(format!(
                        "point has dimension {} but the halfspace lives in R^{}",
                        x.len(),
                        h.dim()
                    ))
                    .into());
                }
                let slack = h.normal().dot(&x) - h.offset();
                let status = if slack <= self.cfg.tol_feas {
                    Status::Feasible
                } else {
                    Status::Infeasible
                };
                let residual = slack.max(0.0) / h.normal().norm();
                (
                    status,
                    format!("{status} residual={residual:.3e}"),
                    json!({"status": status.to_string(), "residual": num(residual)}),
                )
            }
        };
        self.say(line);
        self.outputs.push(json!({"point": point, "verdict": report}));
        Ok(status_code(status))
    }

    fn op(&mut self, op: &OpCommand) -> CliResult<i32> {
        use SetDescription as D;
        match op {
            OpCommand::Map {
                file,
                matrix,
                output,
            } => {
                let t = LinearMap::new(matrix.clone())?;
                let result: D = match self.load(file)? {
                    D::Ccg(s) => ccg_linear_map(&t, &s)?.into(),
                    D::Rcg(r) => rcg_linear_map(&t, &r)?.into(),
                    D::Halfspace(_) => {
                        return Err(SetError::UnsupportedOperation(
                            "linear images of halfspaces are not supported".into(),
                        )
                        .into())
                    }
                };
                self.write_set(output, result)?;
                Ok(EXIT_OK)
            }
            OpCommand::Minksum {
                first,
                second,
                output,
            } => {
                let result: D = match (self.load(first)?, self.load(second)?) {
                    (D::Ccg(a), D::Ccg(b)) => ccg_minkowski(&a, &b)?.into(),
                    (D::Rcg(r), D::Ccg(t)) | (D::Ccg(t), D::Rcg(r)) => {
                        rcg_minkowski_ccg(&r, &t)?.into()
                    }
                    (D::Rcg(a), D::Rcg(b)) => rcg_minkowski_rcg(&a, &b)?.into(),
                    _ => {
                        return Err(SetError::UnsupportedOperation(
                            "Minkowski sums with halfspaces are not supported".into(),
                        )
                        .into())
                    }
                };
                self.write_set(output, result)?;
                Ok(EXIT_OK)
            }
            OpCommand::Intersect {
                first,
                second,
                output,
            } => {
                let result: D = match (self.load(first)?, self.load(second)?) {
                    (D::Ccg(a), D::Ccg(b)) => ccg_intersect(&a, &b)?.into(),
                    (D::Rcg(r), D::Ccg(t)) | (D::Ccg(t), D::Rcg(r)) => {
                        rcg_intersect_ccg(&r, &t)?.into()
                    }
                    (D::Rcg(a), D::Rcg(b)) => rcg_intersect_rcg(&a, &b)?.into(),
                    (s, D::Halfspace(h)) | (D::Halfspace(h), s) => {
                        return self.cut(s, &h, output)
                    }
                };
                self.write_set(output, result)?;
                Ok(EXIT_OK)
            }
            OpCommand::Halfspace {
                file,
                halfspace,
                output,
            } => {
                let set = self.load(file)?;
                let h = match self.load(halfspace)? {
                    D::Halfspace(h) => h,
                    other => {
                        return Err(SetError::Parse(format!(
                            "expected a halfspace, found a {}",
                            other.kind()
                        ))
                        .into())
                    }
                };
                self.cut(set, &h, output)
            }
            OpCommand::Annulus {
                outer,
                inner,
                output,
            } => {
                let (o, i) = match (self.load(outer)?, self.load(inner)?) {
                    (D::Ccg(o), D::Ccg(i)) => (o, i),
                    _ => {
                        return Err(SetError::Parse(
                            "both operands of annulus must be ccg descriptions".into(),
                        )
                        .into())
                    }
                };
                let r = rcg_from_difference(o, i)?;
                self.describe_exclusion(&r);
                self.write_set(output, r.into())?;
                Ok(EXIT_OK)
            }
            OpCommand::RzIntersect {
                rz,
                zonotope,
                output,
            } => {
                let (r, y) = match (self.load(rz)?, self.load(zonotope)?) {
                    (D::Rcg(r), D::Ccg(y)) => (r, y),
                    _ => {
                        return Err(SetError::Parse(
                            "rz-intersect expects an rcg followed by a ccg".into(),
                        )
                        .into())
                    }
                };
                let result = rz_intersect_zonotope(&r, &y)?;
                let concentric = result.concentric.is_some();
                self.say(format!("concentric coefficient form: {}", yes_no(concentric)));
                self.outputs.push(json!({"concentric": concentric}));
                self.write_set(output, result.rcg.into())?;
                Ok(EXIT_OK)
            }
        }
    }

    fn describe_exclusion(&mut self, r: &Rcg) {
        let annulus = try_annulus_form(r).is_some();
        let form = match common_generator_form(r) {
            ExclusionForm::SharedCenterAndGenerators { .. } => "shared center and generators",
            ExclusionForm::SharedGenerators { .. } => "shared generators",
            ExclusionForm::Concentric { .. } => "concentric",
            ExclusionForm::NotApplicable => "general",
        };
        self.say(format!("annulus form: {} ({form})", yes_no(annulus)));
        self.outputs.push(json!({"annulus_form": annulus, "exclusion_form": form}));
    }

    fn cut(&mut self, set: SetDescription, h: &Halfspace, output: &Path) -> CliResult<i32> {
        let (cut, inner) = match set {
            SetDescription::Ccg(s) => (ccg_halfspace(&s, h)?, None),
            SetDescription::Rcg(r) => {
                let (outer, inner) = r.into_parts();
                (ccg_halfspace(&outer, h)?, Some(inner))
            }
            SetDescription::Halfspace(_) => {
                return Err(SetError::UnsupportedOperation(
                    "intersections of two halfspaces are not supported".into(),
                )
                .into())
            }
        };
        self.say(format!("d_max={}", cut.d_max));
        self.outputs.push(json!({"d_max": num(cut.d_max), "empty": cut.is_empty()}));
        match cut.result {
            CutResult::Empty => {
                self.say("empty: the halfspace misses the set");
                Ok(EXIT_NEGATIVE)
            }
            CutResult::Set(s) => {
                let result: SetDescription = match inner {
                    None => s.into(),
                    Some(inner) => Rcg::new(s, inner)?.into(),
                };
                self.write_set(output, result)?;
                Ok(EXIT_OK)
            }
        }
    }

    fn raster_one(&mut self, file: &Path, bbox: BBox, res: Resolution) -> CliResult<RasterGrid> {
        let grid = match self.load(file)? {
            SetDescription::Ccg(s) => raster_membership(&s, bbox, res.nx, res.ny, &self.cfg)?,
            SetDescription::Rcg(r) => raster_membership(&r, bbox, res.nx, res.ny, &self.cfg)?,
            SetDescription::Halfspace(_) => {
                return Err(SetError::UnsupportedOperation(
                    "halfspaces are unbounded and cannot be rasterized".into(),
                )
                .into())
            }
        };
        Ok(grid)
    }

    fn raster(&mut self, args: &RasterArgs) -> CliResult<i32> {
        let job = RasterJob {
            set: args.file.clone(),
            bbox: None,
            res: None,
            csv: args.csv.clone(),
            svg: args.svg.clone(),
            overlay: args.overlay.clone(),
            legend: args.legend,
        };
        self.run_job(&job, args.bbox, args.res, Path::new(""), Path::new(""))
    }

    fn run_job(
        &mut self,
        job: &RasterJob,
        bbox: BBox,
        res: Resolution,
        in_dir: &Path,
        out_dir: &Path,
    ) -> CliResult<i32> {
        let bbox = job
            .bbox
            .map(|[a, b, c, d]| BBox::new(a, b, c, d))
            .transpose()?
            .unwrap_or(bbox);
        let res = job.res.unwrap_or(res);
        let mut layers = Vec::new();
        for path in &job.overlay {
            layers.push((self.raster_one(&in_dir.join(path), bbox, res)?, RenderStyle::operand()));
        }
        let main_path = in_dir.join(&job.set);
        let grid = self.raster_one(&main_path, bbox, res)?;
        let fraction = grid.filled_fraction();
        let band = grid.count(Cell::Band);
        self.say(format!(
            "{}: filled_fraction={fraction} filled_area={} band_cells={band} grid={}x{}",
            main_path.display(),
            grid.filled_area(),
            res.nx,
            res.ny,
        ));
        self.outputs.push(json!({
            "set": main_path.display().to_string(),
            "bbox": [bbox.xmin, bbox.xmax, bbox.ymin, bbox.ymax],
            "res": [res.nx, res.ny],
            "filled_cells": grid.filled_count(),
            "band_cells": band,
            "filled_fraction": fraction,
        }));
        if let Some(csv) = &job.csv {
            self.write(&out_dir.join(csv), &export_csv(&grid))?;
        }
        if let Some(svg) = &job.svg {
            let main_style = if job.overlay.is_empty() {
                RenderStyle::feasible()
            } else {
                RenderStyle::intersection()
            };
            layers.push((grid, main_style));
            let legend = job.legend;
            let styled: Vec<_> = layers
                .iter()
                .map(|(g, s)| (g, RenderStyle { legend, ..s.clone() }))
                .collect();
            let refs: Vec<_> = styled.iter().map(|(g, s)| (*g, s)).collect();
            let bytes = render_svg(&refs)?;
            self.write(&out_dir.join(svg), &bytes)?;
        }
        Ok(EXIT_OK)
    }

    fn batch(&mut self, manifest: &Path, out_dir: &Path) -> CliResult<i32> {
        let bytes = self.read(manifest)?;
        let m: Manifest = serde_json::from_slice(&bytes)
            .map_err(|e| SetError::Parse(format!("manifest: {e}")))?;
        let bbox = BBox::new(m.bbox[0], m.bbox[1], m.bbox[2], m.bbox[3])?;
        let res = m.res.unwrap_or(Resolution { nx: 200, ny: 200 });
        let in_dir = manifest.parent().unwrap_or(Path::new("")).to_path_buf();
        let mut code = EXIT_OK;
        for job in &m.jobs {
            code = code.max(self.run_job(job, bbox, res, &in_dir, out_dir)?);
        }
        self.say(format!("batch: {} jobs", m.jobs.len()));
        Ok(code)
    }

    fn sample(&mut self, file: &Path, count: usize, output: Option<&Path>) -> CliResult<i32> {
        if count == 0 {
            return Err(SetError::Shape("sample count must be at least 1".into()).into());
        }
        let points = match self.load(file)? {
            SetDescription::Ccg(s) => sample_members(&s, count, self.seed, &self.cfg)?,
            SetDescription::Rcg(r) => sample_members(&r, count, self.seed, &self.cfg)?,
            SetDescription::Halfspace(_) => {
                return Err(SetError::UnsupportedOperation(
                    "halfspaces are unbounded and cannot be sampled".into(),
                )
                .into())
            }
        };
        let mut text = String::new();
        for p in &points {
            let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        match output {
            Some(path) => self.write(path, text.as_bytes())?,
            None => {
                let _ = self.out.write_all(text.as_bytes());
            }
        }
        self.outputs.push(json!({"samples": points.len(), "seed": self.seed}));
        Ok(EXIT_OK)
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// One raster job in a batch manifest. Input paths are relative to the
/// manifest, output paths to the batch output directory.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterJob {
    pub set: PathBuf,
    #[serde(default)]
    pub bbox: Option<[f64; 4]>,
    #[serde(default)]
    pub res: Option<Resolution>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub svg: Option<PathBuf>,
    #[serde(default)]
    pub overlay: Vec<PathBuf>,
    #[serde(default)]
    pub legend: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub bbox: [f64; 4],
    #[serde(default)]
    pub res: Option<Resolution>,
    pub jobs: Vec<RasterJob>,
}

/// Runs a parsed command line, writing human-readable lines to `out`, and
/// returns the exit code.
pub fn run(cli: &Cli, argv: &[String], out: &mut dyn Write) -> i32 {
    let started = Instant::now();
    let cfg = SolverConfig {
        tol_feas: cli.tol_feas,
        tol_infeas: cli.tol_infeas,
        max_iter: cli.max_iter,
        force_general: cli.force_general,
        ..SolverConfig::default()
    };
    let mut session = Session {
        cfg,
        seed: cli.seed,
        inputs: Vec::new(),
        outputs: Vec::new(),
        out,
    };
    let (code, error) = if !(cfg.tol_feas > 0.0 && cfg.tol_infeas >= cfg.tol_feas && cfg.max_iter > 0) {
        (
            EXIT_INVALID,
            Some("tolerances must satisfy 0 < tol-feas <= tol-infeas and max-iter must be positive".to_string()),
        )
    } else {
        match session.dispatch(&cli.command) {
            Ok(code) => (code, None),
            Err(e) => (e.exit_code(), Some(e.message())),
        }
    };
    if let Some(msg) = &error {
        eprintln!("error: {msg}");
    }
    if let Some(path) = &cli.report {
        let report = RunReport {
            command: argv.to_vec(),
            inputs: session.inputs,
            outputs: session.outputs,
            exit_code: code,
            error,
            seed: cli.seed,
            solver: SolverSettings {
                tol_feas: cfg.tol_feas,
                tol_infeas: cfg.tol_infeas,
                max_iter: cfg.max_iter,
                force_general: cfg.force_general,
                band_width: cfg.band_width(),
            },
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        if let Err(e) = fs::write(path, text + "\n") {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_IO;
        }
    }
    code
}

/// Entry point for the binary.
pub fn main_with_args(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    run(&cli, &argv, &mut lock)
}
