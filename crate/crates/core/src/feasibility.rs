//! Membership and emptiness through convex feasibility.
//!
//! Every question asked of a set reduces to: is there a coefficient vector
//! `β` in the product of the group norm balls that also satisfies a stacked
//! equality system `A β = b`? The solver alternates exact projections onto
//! the two sets (Dykstra's scheme). When the sets intersect the distance
//! between the iterates drops to zero; when they are disjoint it settles at
//! the gap between them, which is reported as an infeasibility certificate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SetError};
use crate::linalg::{has_full_column_rank, pseudo_inverse, unique_preimage};
use crate::rcg_ops::try_annulus_form;
use crate::set::{Ccg, Norm, NormGroup, Rcg};

pub const DEFAULT_TOL_FEAS: f64 = 1e-7;
pub const DEFAULT_TOL_INFEAS: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Residual at or below which a problem is declared feasible.
    pub tol_feas: f64,
    /// A stalled residual above this value certifies infeasibility.
    pub tol_infeas: f64,
    pub max_iter: usize,
    /// Iterations over which the residual must be stable to count as stalled.
    pub stall_window: usize,
    /// Relative residual change below which the residual counts as stalled.
    pub stall_rel: f64,
    /// Disable the closed-form fast paths in [`rcg_member`].
    pub force_general: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_feas: DEFAULT_TOL_FEAS,
            tol_infeas: DEFAULT_TOL_INFEAS,
            max_iter: DEFAULT_MAX_ITER,
            stall_window: 50,
            stall_rel: 1e-10,
            force_general: false,
        }
    }
}

impl SolverConfig {
    pub fn general(mut self) -> Self {
        self.force_general = true;
        self
    }

    /// Width of the tolerance band: infeasible verdicts whose residual is
    /// below this value sit too close to a boundary to be trusted.
    pub fn band_width(&self) -> f64 {
        10.0 * self.tol_infeas
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Feasible,
    Infeasible,
    Indeterminate,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Feasible => "Feasible",
            Status::Infeasible => "Infeasible",
            Status::Indeterminate => "Indeterminate",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityVerdict {
    pub status: Status,
    /// Present iff `status` is `Feasible`.
    pub witness: Option<DVector<f64>>,
    /// Final distance between the two constraint sets (`inf` when the
    /// equality system itself is inconsistent).
    pub residual: f64,
    pub iterations: usize,
}

impl FeasibilityVerdict {
    pub fn is_feasible(&self) -> bool {
        self.status == Status::Feasible
    }

    fn infeasible(residual: f64, iterations: usize) -> Self {
        FeasibilityVerdict {
            status: Status::Infeasible,
            witness: None,
            residual,
            iterations,
        }
    }

    /// Verdict from a residual that was computed exactly rather than iterated.
    fn from_exact(residual: f64, witness: DVector<f64>, cfg: &SolverConfig) -> Self {
        let status = if residual <= cfg.tol_feas {
            Status::Feasible
        } else if residual > cfg.tol_infeas {
            Status::Infeasible
        } else {
            Status::Indeterminate
        };
        FeasibilityVerdict {
            status,
            witness: (status == Status::Feasible).then_some(witness),
            residual,
            iterations: 0,
        }
    }

    /// Undecided, or infeasible with a gap inside the tolerance band.
    pub fn near_threshold(&self, band: f64) -> bool {
        match self.status {
            Status::Indeterminate => true,
            Status::Infeasible => self.residual < band,
            Status::Feasible => false,
        }
    }
}

/// Find `β` with `‖β_J‖_p ≤ radius` for every group and `A β = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityProblem {
    affine_a: DMatrix<f64>,
    affine_b: DVector<f64>,
    groups: Vec<NormGroup>,
    dim: usize,
}

impl FeasibilityProblem {
    pub fn new(
        affine_a: DMatrix<f64>,
        affine_b: DVector<f64>,
        groups: Vec<NormGroup>,
        dim: usize,
    ) -> Result<FeasibilityProblem> {
        if affine_a.ncols() != dim || affine_a.nrows() != affine_b.len() {
            return Err(SetError::Shape(format!(
                "affine system is {}×{} with rhs {}, expected {dim} columns",
                affine_a.nrows(),
                affine_a.ncols(),
                affine_b.len()
            )));
        }
        let mut seen = vec![false; dim];
        for g in &groups {
            for &i in g.indices() {
                if i >= dim || std::mem::replace(&mut seen[i], true) {
                    return Err(SetError::Partition(format!(
                        "index {} is out of range or repeated",
                        i + 1
                    )));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(SetError::Partition(
                "groups do not cover every coefficient".into(),
            ));
        }
        Ok(FeasibilityProblem {
            affine_a,
            affine_b,
            groups,
            dim,
        })
    }

    /// Emptiness problem of a set: its norm balls and `A β = b`.
    pub fn for_set(s: &Ccg) -> FeasibilityProblem {
        FeasibilityProblem {
            affine_a: s.constraint_matrix().clone(),
            affine_b: s.constraint_rhs().clone(),
            groups: s.groups().to_vec(),
            dim: s.n_coeffs(),
        }
    }

    /// Membership problem of `x`: stacks `[A; G] β = [b; x − c]`.
    pub fn for_point(s: &Ccg, x: &DVector<f64>) -> Result<FeasibilityProblem> {
        if x.len() != s.dim() {
            return Err(SetError::Shape(format!(
                "point has dimension {} but the set lives in R^{}",
                x.len(),
                s.dim()
            )));
        }
        let (q, m, n) = (s.n_constraints(), s.n_coeffs(), s.dim());
        let mut a = DMatrix::zeros(q + n, m);
        a.rows_mut(0, q).copy_from(s.constraint_matrix());
        a.rows_mut(q, n).copy_from(s.generators());
        let mut b = DVector::zeros(q + n);
        b.rows_mut(0, q).copy_from(s.constraint_rhs());
        b.rows_mut(q, n).copy_from(&(x - s.center()));
        Ok(FeasibilityProblem {
            affine_a: a,
            affine_b: b,
            groups: s.groups().to_vec(),
            dim: m,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn groups(&self) -> &[NormGroup] {
        &self.groups
    }

    pub fn affine_a(&self) -> &DMatrix<f64> {
        &self.affine_a
    }

    pub fn affine_b(&self) -> &DVector<f64> {
        &self.affine_b
    }
}

/// Euclidean projection onto `{u : ‖u‖_p ≤ radius}`.
pub fn project_ball(v: &[f64], p: Norm, radius: f64) -> Vec<f64> {
    debug_assert!(radius >= 0.0);
    match p {
        Norm::Inf => v.iter().map(|x| x.clamp(-radius, radius)).collect(),
        Norm::L2 => {
            let n = Norm::L2.eval(v);
            if n <= radius {
                v.to_vec()
            } else {
                let s = radius / n;
                v.iter().map(|x| x * s).collect()
            }
        }
        Norm::L1 => project_l1_ball(v, radius),
    }
}

// Sort-and-threshold projection onto the l1 ball.
fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    if Norm::L1.eval(v) <= radius {
        return v.to_vec();
    }
    if radius == 0.0 {
        return vec![0.0; v.len()];
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - radius) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    v.iter()
        .map(|x| x.signum() * (x.abs() - theta).max(0.0))
        .collect()
}

fn project_product(v: &DVector<f64>, groups: &[NormGroup]) -> DVector<f64> {
    let mut out = v.clone();
    let mut buf = Vec::new();
    for g in groups {
        buf.clear();
        buf.extend(g.indices().iter().map(|&i| v[i]));
        let p = project_ball(&buf, g.norm(), g.radius());
        for (&i, val) in g.indices().iter().zip(p) {
            out[i] = val;
        }
    }
    out
}

/// Projector onto a nonempty affine set `{β : A β = b}`.
#[derive(Debug, Clone)]
pub struct AffineProjector {
    a: DMatrix<f64>,
    b: DVector<f64>,
    pinv: DMatrix<f64>,
    /// Minimal-norm solution `A⁺ b`.
    base: DVector<f64>,
}

impl AffineProjector {
    pub fn new(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<AffineProjector> {
        let pinv = pseudo_inverse(a);
        let base = &pinv * b;
        let residual = (a * &base - b).norm();
        if residual > tol {
            return Err(SetError::AffineInfeasible { residual });
        }
        Ok(AffineProjector {
            a: a.clone(),
            b: b.clone(),
            pinv,
            base,
        })
    }

    pub fn base(&self) -> &DVector<f64> {
        &self.base
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.a.nrows() == 0 {
            return v.clone();
        }
        v - &self.pinv * (&self.a * v - &self.b)
    }

    /// Component of `d` in the row space of `A`, i.e. orthogonal to the
    /// affine set's directions.
    fn normal_part(&self, d: &DVector<f64>) -> DVector<f64> {
        if self.a.nrows() == 0 {
            return DVector::zeros(d.len());
        }
        &self.pinv * (&self.a * d)
    }
}

/// Separation margin of the hyperplane with normal `n` between the affine
/// set through `y` and the ball product: `nᵀy − max_{z∈B} nᵀz`, divided by
/// `‖n‖`. Positive only when the two sets are disjoint, and then it is a
/// lower bound on their distance.
fn separation(proj: &AffineProjector, y: &DVector<f64>, z: &DVector<f64>, groups: &[NormGroup]) -> f64 {
    let n = proj.normal_part(&(y - z));
    let len = n.norm();
    if len == 0.0 {
        return f64::NEG_INFINITY;
    }
    let support: f64 = groups
        .iter()
        .map(|g| g.radius() * g.norm().dual().eval(g.indices().iter().map(|&i| &n[i])))
        .sum();
    let margin = (n.dot(y) - support) / len;
    // rounding in nᵀy and the support sum
    let slack = 1e-12 * (1.0 + y.norm());
    if margin > slack {
        margin
    } else {
        f64::NEG_INFINITY
    }
}

/// Euclidean projection of `v` onto `{β : A β = b}`.
pub fn project_affine(v: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.ncols() != v.len() || a.nrows() != b.len() {
        return Err(SetError::Shape(format!(
            "affine system is {}×{} with rhs {}, vector has length {}",
            a.nrows(),
            a.ncols(),
            b.len(),
            v.len()
        )));
    }
    Ok(AffineProjector::new(a, b, DEFAULT_TOL_FEAS)?.project(v))
}

/// Dykstra alternating projections between the affine set and the product of
/// norm balls, started at the minimal-norm affine solution.
///
/// A stalled residual is only reported as infeasible once the gap vector,
/// restricted to the affine set's normal space, strictly separates the two
/// sets. Dykstra iterates can sit still for hundreds of steps while the
/// correction term drains, so a stall alone proves nothing.
pub fn solve_feasibility(prob: &FeasibilityProblem, cfg: &SolverConfig) -> FeasibilityVerdict {
    let proj = match AffineProjector::new(&prob.affine_a, &prob.affine_b, cfg.tol_feas) {
        Ok(p) => p,
        Err(_) => return FeasibilityVerdict::infeasible(f64::INFINITY, 0),
    };
    let mut y = proj.base.clone();
    let mut q = DVector::zeros(prob.dim);
    let mut history: Vec<f64> = Vec::with_capacity(cfg.max_iter.min(1024));
    let mut residual = f64::INFINITY;
    let mut last_z = y.clone();
    for k in 1..=cfg.max_iter {
        let w = &y + &q;
        let z = project_product(&w, &prob.groups);
        q = w - &z;
        y = proj.project(&z);
        residual = (&y - &z).norm();
        if residual <= cfg.tol_feas {
            return FeasibilityVerdict {
                status: Status::Feasible,
                witness: Some(z),
                residual,
                iterations: k,
            };
        }
        history.push(residual);
        if k > cfg.stall_window && residual > cfg.tol_infeas {
            let old = history[k - 1 - cfg.stall_window];
            if (old - residual).abs() <= cfg.stall_rel * residual
                && separation(&proj, &y, &z, &prob.groups) > 0.0
            {
                return FeasibilityVerdict::infeasible(residual, k);
            }
        }
        last_z = z;
    }
    if residual > cfg.tol_infeas && separation(&proj, &y, &last_z, &prob.groups) > 0.0 {
        return FeasibilityVerdict::infeasible(residual, cfg.max_iter);
    }
    FeasibilityVerdict {
        status: Status::Indeterminate,
        witness: None,
        residual,
        iterations: cfg.max_iter,
    }
}

/// Is `x` in `s`?
pub fn ccg_member(x: &DVector<f64>, s: &Ccg, cfg: &SolverConfig) -> Result<FeasibilityVerdict> {
    Ok(solve_feasibility(&FeasibilityProblem::for_point(s, x)?, cfg))
}

/// Feasible iff `s` is nonempty.
pub fn ccg_empty(s: &Ccg, cfg: &SolverConfig) -> FeasibilityVerdict {
    solve_feasibility(&FeasibilityProblem::for_set(s), cfg)
}

/// How a roundabout membership verdict was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MembershipPath {
    /// Shared center and full-column-rank shared generators: one preimage.
    Annulus,
    /// Each member decided from its unique preimage or the iterative solver.
    PerMember,
    /// Iterative solver for both members.
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RcgVerdict {
    pub status: Status,
    pub outer: FeasibilityVerdict,
    /// Exclusion check; absent when the outer check already decided.
    pub inner: Option<FeasibilityVerdict>,
    pub path: MembershipPath,
}

impl RcgVerdict {
    pub fn is_member(&self) -> bool {
        self.status == Status::Feasible
    }

    pub fn near_threshold(&self, band: f64) -> bool {
        self.outer.near_threshold(band)
            || self.inner.as_ref().is_some_and(|v| v.near_threshold(band))
    }

    pub(crate) fn combine(
        outer: FeasibilityVerdict,
        inner: Option<FeasibilityVerdict>,
        path: MembershipPath,
    ) -> RcgVerdict {
        let status = match (outer.status, inner.as_ref().map(|v| v.status)) {
            (Status::Feasible, Some(Status::Infeasible)) => Status::Feasible,
            (Status::Feasible, Some(Status::Feasible)) => Status::Infeasible,
            (Status::Feasible, _) => Status::Indeterminate,
            (other, _) => other,
        };
        RcgVerdict {
            status,
            outer,
            inner,
            path,
        }
    }
}

/// Closed-form verdict for a coefficient vector that is the unique preimage
/// of the point: the residual is the worst group-norm excess.
pub(crate) fn verdict_from_coefficients(
    beta: DVector<f64>,
    groups: &[NormGroup],
    cfg: &SolverConfig,
) -> FeasibilityVerdict {
    let excess = groups
        .iter()
        .map(|g| g.norm_of(beta.as_slice()) - g.radius())
        .fold(0.0_f64, f64::max);
    FeasibilityVerdict::from_exact(excess, beta, cfg)
}

// Unique-preimage decision for an unconstrained member with full column rank.
fn closed_form_member(x: &DVector<f64>, s: &Ccg, cfg: &SolverConfig) -> Option<FeasibilityVerdict> {
    if s.has_constraints() || !has_full_column_rank(s.generators()) {
        return None;
    }
    let pinv = pseudo_inverse(s.generators());
    let v = match unique_preimage(&pinv, s.generators(), &(x - s.center()), cfg.tol_feas) {
        Ok(beta) => verdict_from_coefficients(beta, s.groups(), cfg),
        Err(_) => FeasibilityVerdict::infeasible(f64::INFINITY, 0),
    };
    Some(v)
}

/// Is `x` in `outer ∖ inner`?
///
/// Because `x = c_o + G_o β`, the exclusion right-hand side
/// `(c_o − c_in) + G_o β` equals `x − c_in`, so the inner check is an
/// ordinary membership test of `x` in the inner set. Closed-form paths are
/// used when a member has a unique preimage, unless `cfg.force_general`.
pub fn rcg_member(x: &DVector<f64>, s: &Rcg, cfg: &SolverConfig) -> Result<RcgVerdict> {
    if x.len() != s.dim() {
        return Err(SetError::Shape(format!(
            "point has dimension {} but the set lives in R^{}",
            x.len(),
            s.dim()
        )));
    }
    if !cfg.force_general {
        if let Some(form) = try_annulus_form(s) {
            return Ok(form.classify(x, cfg));
        }
    }
    let (outer_fast, inner_fast) = if cfg.force_general {
        (None, None)
    } else {
        (
            closed_form_member(x, s.outer(), cfg),
            closed_form_member(x, s.inner(), cfg),
        )
    };
    let path = if outer_fast.is_some() || inner_fast.is_some() {
        MembershipPath::PerMember
    } else {
        MembershipPath::General
    };
    let outer = match outer_fast {
        Some(v) => v,
        None => ccg_member(x, s.outer(), cfg)?,
    };
    if outer.status != Status::Feasible {
        return Ok(RcgVerdict::combine(outer, None, path));
    }
    let inner = match inner_fast {
        Some(v) => v,
        None => ccg_member(x, s.inner(), cfg)?,
    };
    Ok(RcgVerdict::combine(outer, Some(inner), path))
}
