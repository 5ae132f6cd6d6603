//! Brute-force ground truth: membership rasters on planar grids, rejection
//! sampling of members, and closed-form membership tests that share no code
//! with the iterative solver.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{Result, SetError};
use crate::feasibility::{ccg_member, rcg_member, AffineProjector, SolverConfig};
use crate::set::{Ccg, Norm, NormGroup, Rcg};

pub const DEFAULT_SEED: u64 = 42;

/// Axis-aligned planar box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl BBox {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<BBox> {
        let ok = [xmin, xmax, ymin, ymax].iter().all(|v| v.is_finite()) && xmin < xmax && ymin < ymax;
        if !ok {
            return Err(SetError::Shape(format!(
                "bounding box [{xmin}, {xmax}] x [{ymin}, {ymax}] is degenerate"
            )));
        }
        Ok(BBox {
            xmin,
            xmax,
            ymin,
            ymax,
        })
    }

    pub fn square(half: f64) -> BBox {
        BBox::new(-half, half, -half, half).expect("positive half width")
    }

    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin) * (self.ymax - self.ymin)
    }
}

/// One raster cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Outside = 0,
    Inside = 1,
    /// Within the solver tolerance of a constraint boundary.
    Band = 2,
}

impl Cell {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Cell> {
        match code {
            0 => Some(Cell::Outside),
            1 => Some(Cell::Inside),
            2 => Some(Cell::Band),
            _ => None,
        }
    }
}

/// Planar membership bitmap. Cell `(i, j)` covers column `i` from `xmin` and
/// row `j` from `ymin`; it is evaluated at its center.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    bbox: BBox,
    nx: usize,
    ny: usize,
    cells: Vec<Cell>,
}

impl RasterGrid {
    pub fn new(bbox: BBox, nx: usize, ny: usize, cells: Vec<Cell>) -> Result<RasterGrid> {
        if nx < 2 || ny < 2 {
            return Err(SetError::Shape(format!(
                "raster must be at least 2x2, got {nx}x{ny}"
            )));
        }
        if cells.len() != nx * ny {
            return Err(SetError::Shape(format!(
                "{} cells given for a {nx}x{ny} raster",
                cells.len()
            )));
        }
        Ok(RasterGrid { bbox, nx, ny, cells })
    }

    /// Evaluates `classify` at every cell center, in parallel.
    pub fn from_fn<F>(bbox: BBox, nx: usize, ny: usize, classify: F) -> Result<RasterGrid>
    where
        F: Fn(f64, f64) -> Result<Cell> + Sync,
    {
        if nx < 2 || ny < 2 {
            return Err(SetError::Shape(format!(
                "raster must be at least 2x2, got {nx}x{ny}"
            )));
        }
        let dx = (bbox.xmax - bbox.xmin) / nx as f64;
        let dy = (bbox.ymax - bbox.ymin) / ny as f64;
        let cells = (0..nx * ny)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k % nx, k / nx);
                classify(
                    bbox.xmin + (i as f64 + 0.5) * dx,
                    bbox.ymin + (j as f64 + 0.5) * dy,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        RasterGrid::new(bbox, nx, ny, cells)
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, i: usize, j: usize) -> Cell {
        self.cells[j * self.nx + i]
    }

    pub fn is_member(&self, i: usize, j: usize) -> bool {
        self.cell(i, j) == Cell::Inside
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        self.cell(i, j) == Cell::Band
    }

    /// Center of cell `(i, j)`.
    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        let dx = (self.bbox.xmax - self.bbox.xmin) / self.nx as f64;
        let dy = (self.bbox.ymax - self.bbox.ymin) / self.ny as f64;
        (
            self.bbox.xmin + (i as f64 + 0.5) * dx,
            self.bbox.ymin + (j as f64 + 0.5) * dy,
        )
    }

    pub fn count(&self, cell: Cell) -> usize {
        self.cells.iter().filter(|c| **c == cell).count()
    }

    pub fn filled_count(&self) -> usize {
        self.count(Cell::Inside)
    }

    pub fn filled_fraction(&self) -> f64 {
        self.filled_count() as f64 / self.cells.len() as f64
    }

    /// Filled area in bbox units.
    pub fn filled_area(&self) -> f64 {
        self.filled_fraction() * self.bbox.area()
    }

    pub fn same_layout(&self, other: &RasterGrid) -> bool {
        self.bbox == other.bbox && self.nx == other.nx && self.ny == other.ny
    }
}

/// Anything whose membership can be decided pointwise.
pub trait Membership: Sync {
    fn dim(&self) -> usize;

    fn classify(&self, x: &DVector<f64>, cfg: &SolverConfig) -> Result<Cell>;
}

fn cell_of(member: bool, near: bool) -> Cell {
    if near {
        Cell::Band
    } else if member {
        Cell::Inside
    } else {
        Cell::Outside
    }
}

impl Membership for Ccg {
    fn dim(&self) -> usize {
        Ccg::dim(self)
    }

    fn classify(&self, x: &DVector<f64>, cfg: &SolverConfig) -> Result<Cell> {
        let v = ccg_member(x, self, cfg)?;
        Ok(cell_of(v.is_feasible(), v.near_threshold(cfg.band_width())))
    }
}

impl Membership for Rcg {
    fn dim(&self) -> usize {
        Rcg::dim(self)
    }

    fn classify(&self, x: &DVector<f64>, cfg: &SolverConfig) -> Result<Cell> {
        let v = rcg_member(x, self, cfg)?;
        Ok(cell_of(v.is_member(), v.near_threshold(cfg.band_width())))
    }
}

/// Evaluates membership at every cell center of a planar grid.
pub fn raster_membership<S: Membership + ?Sized>(
    set: &S,
    bbox: BBox,
    nx: usize,
    ny: usize,
    cfg: &SolverConfig,
) -> Result<RasterGrid> {
    if set.dim() != 2 {
        return Err(SetError::Dimension {
            expected: 2,
            actual: set.dim(),
        });
    }
    RasterGrid::from_fn(bbox, nx, ny, |x, y| {
        set.classify(&DVector::from_vec(vec![x, y]), cfg)
    })
}

/// Disagreement between two rasters of the same layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MismatchReport {
    pub total_cells: usize,
    /// Disagreeing cells where at least one side is in the tolerance band.
    pub band_mismatches: usize,
    /// Disagreeing cells where both sides made a definite call.
    pub off_band_mismatches: usize,
    pub filled_a: usize,
    pub filled_b: usize,
}

impl MismatchReport {
    pub fn mismatches(&self) -> usize {
        self.band_mismatches + self.off_band_mismatches
    }

    /// Off-band mismatches over all cells.
    pub fn off_band_fraction(&self) -> f64 {
        self.off_band_mismatches as f64 / self.total_cells as f64
    }

    /// Off-band mismatches relative to the larger filled count.
    pub fn filled_fraction(&self) -> f64 {
        let filled = self.filled_a.max(self.filled_b);
        if filled == 0 {
            0.0
        } else {
            self.off_band_mismatches as f64 / filled as f64
        }
    }
}

pub fn compare_rasters(a: &RasterGrid, b: &RasterGrid) -> Result<MismatchReport> {
    if !a.same_layout(b) {
        return Err(SetError::Shape(
            "rasters differ in bounding box or resolution".into(),
        ));
    }
    let mut band = 0;
    let mut off = 0;
    for (ca, cb) in a.cells.iter().zip(&b.cells) {
        if ca == cb {
            continue;
        }
        if *ca == Cell::Band || *cb == Cell::Band {
            band += 1;
        } else {
            off += 1;
        }
    }
    Ok(MismatchReport {
        total_cells: a.cells.len(),
        band_mismatches: band,
        off_band_mismatches: off,
        filled_a: a.filled_count(),
        filled_b: b.filled_count(),
    })
}

/// Cellwise combination of two rasters; a band cell on either side gives a
/// band cell.
pub fn combine_rasters(
    a: &RasterGrid,
    b: &RasterGrid,
    op: impl Fn(bool, bool) -> bool,
) -> Result<RasterGrid> {
    if !a.same_layout(b) {
        return Err(SetError::Shape(
            "rasters differ in bounding box or resolution".into(),
        ));
    }
    let cells = a
        .cells
        .iter()
        .zip(&b.cells)
        .map(|(ca, cb)| {
            if *ca == Cell::Band || *cb == Cell::Band {
                Cell::Band
            } else {
                cell_of(op(*ca == Cell::Inside, *cb == Cell::Inside), false)
            }
        })
        .collect();
    RasterGrid::new(a.bbox, a.nx, a.ny, cells)
}

fn sample_ball<R: Rng>(rng: &mut R, norm: Norm, dim: usize, radius: f64) -> Vec<f64> {
    match norm {
        Norm::Inf => (0..dim).map(|_| rng.random_range(-radius..=radius)).collect(),
        Norm::L2 => {
            let dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
            let len = Norm::L2.eval(&dir);
            let scale = radius * rng.random::<f64>().powf(1.0 / dim as f64) / len.max(f64::MIN_POSITIVE);
            dir.into_iter().map(|v| v * scale).collect()
        }
        Norm::L1 => {
            // uniform on the simplex {t ≥ 0, Σt ≤ 1} via d+1 exponential spacings
            let e: Vec<f64> = (0..=dim).map(|_| Exp1.sample(rng)).collect();
            let total: f64 = e.iter().sum();
            e[..dim]
                .iter()
                .map(|v| {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    sign * radius * v / total
                })
                .collect()
        }
    }
}

fn sample_coefficients<R: Rng>(rng: &mut R, groups: &[NormGroup], m: usize) -> DVector<f64> {
    let mut beta = DVector::zeros(m);
    for g in groups {
        let v = sample_ball(rng, g.norm(), g.indices().len(), g.radius());
        for (&i, x) in g.indices().iter().zip(v) {
            beta[i] = x;
        }
    }
    beta
}

/// Source of candidate members for [`sample_members`].
pub enum Sampled<'a> {
    Ccg(&'a Ccg),
    Rcg(&'a Rcg),
}

impl<'a> From<&'a Ccg> for Sampled<'a> {
    fn from(s: &'a Ccg) -> Self {
        Sampled::Ccg(s)
    }
}

impl<'a> From<&'a Rcg> for Sampled<'a> {
    fn from(s: &'a Rcg) -> Self {
        Sampled::Rcg(s)
    }
}

const MIN_ATTEMPTS: usize = 10_000;
const MIN_ACCEPTANCE: f64 = 1e-4;

/// Rejection sampling: coefficients drawn uniformly from each group ball,
/// projected onto the equality constraints, re-checked against the balls and
/// mapped through `c + G β`. Candidates the membership solver does not
/// confirm are rejected: for constrained sets the projection can leave a
/// point it cannot settle within `cfg`, and roundabout candidates may fall
/// in the hole. Reproducible for a fixed `seed`.
pub fn sample_members<'a>(
    set: impl Into<Sampled<'a>>,
    count: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<Vec<DVector<f64>>> {
    let (outer, hole) = match set.into() {
        Sampled::Ccg(s) => (s, None),
        Sampled::Rcg(r) => (r.outer(), Some(r)),
    };
    let exhausted = |accepted, attempts| SetError::SamplingExhausted { accepted, attempts };
    let projector = AffineProjector::new(
        outer.constraint_matrix(),
        outer.constraint_rhs(),
        cfg.tol_feas,
    )
    .map_err(|_| exhausted(0, 0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        let raw = sample_coefficients(&mut rng, outer.groups(), outer.n_coeffs());
        let beta = projector.project(&raw);
        let in_balls = outer
            .groups()
            .iter()
            .all(|g| g.norm_of(beta.as_slice()) <= g.radius() + cfg.tol_feas);
        if in_balls {
            let x = outer.point_at(&beta);
            let keep = match hole {
                None if outer.has_constraints() => ccg_member(&x, outer, cfg)?.is_feasible(),
                None => true,
                Some(r) => rcg_member(&x, r, cfg)?.is_member(),
            };
            if keep {
                out.push(x);
            }
        }
        if attempts >= MIN_ATTEMPTS && (out.len() as f64) < MIN_ACCEPTANCE * attempts as f64 {
            return Err(exhausted(out.len(), attempts));
        }
    }
    Ok(out)
}

/// Uniform points in a box, reproducible for a fixed `seed`.
pub fn uniform_points(bbox: BBox, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            DVector::from_vec(vec![
                rng.random_range(bbox.xmin..bbox.xmax),
                rng.random_range(bbox.ymin..bbox.ymax),
            ])
        })
        .collect()
}

/// Independent closed-form tests for planar sets, written without the
/// solver or the pseudo-inverse machinery.
pub mod planar {
    use super::*;

    /// Explicit inverse of a 2×2 matrix.
    pub fn inverse2(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        if g.shape() != (2, 2) {
            return None;
        }
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        if det.abs() < 1e-12 {
            return None;
        }
        Some(DMatrix::from_row_slice(
            2,
            2,
            &[g[(1, 1)] / det, -g[(0, 1)] / det, -g[(1, 0)] / det, g[(0, 0)] / det],
        ))
    }

    /// Worst group-norm excess of the preimage of `x` in an unconstrained set
    /// with invertible 2×2 generators (positive = outside).
    pub fn square_margin(s: &Ccg, x: &DVector<f64>) -> Option<f64> {
        if s.has_constraints() {
            return None;
        }
        let inv = inverse2(s.generators())?;
        let beta = inv * (x - s.center());
        Some(
            s.groups()
                .iter()
                .map(|g| g.norm_of(beta.as_slice()) - g.radius())
                .fold(f64::NEG_INFINITY, f64::max),
        )
    }

    /// Signed distance-like margin of `x` against a full-dimensional planar
    /// zonotope, from its edge normals (positive = outside).
    pub fn zonotope_margin(c: &DVector<f64>, g: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
        let d = x - c;
        g.column_iter()
            .filter(|col| col.norm() > 0.0)
            .map(|col| {
                let n = [-col[1], col[0]];
                let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
                let reach: f64 = g
                    .column_iter()
                    .map(|h| (n[0] * h[0] + n[1] * h[1]).abs())
                    .sum();
                ((n[0] * d[0] + n[1] * d[1]).abs() - reach) / len
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cell from a margin: band when `|margin| ≤ band`.
    pub fn cell_from_margin(margin: f64, band: f64) -> Cell {
        if margin.abs() <= band {
            Cell::Band
        } else if margin < 0.0 {
            Cell::Inside
        } else {
            Cell::Outside
        }
    }
}
