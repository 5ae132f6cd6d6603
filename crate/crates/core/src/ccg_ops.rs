//! Closed-form calculus on constrained convex generators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SetError};
use crate::set::{Ccg, CcgParts, CutResult, Halfspace, HalfspaceCut, LinearMap, Norm, NormGroup};

fn check_same_dim(s1: &Ccg, s2: &Ccg) -> Result<()> {
    if s1.dim() != s2.dim() {
        return Err(SetError::Shape(format!(
            "operands live in R^{} and R^{}",
            s1.dim(),
            s2.dim()
        )));
    }
    Ok(())
}

/// `[A₁ 0; 0 A₂]`.
pub(crate) fn block_diag(a1: &DMatrix<f64>, a2: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a1.nrows() + a2.nrows(), a1.ncols() + a2.ncols());
    out.view_mut((0, 0), a1.shape()).copy_from(a1);
    out.view_mut((a1.nrows(), a1.ncols()), a2.shape()).copy_from(a2);
    out
}

pub(crate) fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert_eq!(a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

pub(crate) fn vstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert_eq!(a.ncols(), b.ncols());
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}

pub(crate) fn vcat(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

fn concat_groups(g1: &[NormGroup], g2: &[NormGroup], offset: usize) -> Vec<NormGroup> {
    g1.iter()
        .cloned()
        .chain(g2.iter().map(|g| g.shifted(offset)))
        .collect()
}

/// `T(s) = ⟨T c, T G, groups, A, b⟩`.
pub fn ccg_linear_map(t: &LinearMap, s: &Ccg) -> Result<Ccg> {
    t.check_input(s.dim())?;
    let CcgParts { c, g, groups, a, b } = s.to_parts();
    Ccg::new(t.matrix() * c, t.matrix() * g, groups, a, b)
}

/// Minkowski sum: generators side by side, constraints block-diagonal, the
/// second operand's groups shifted past the first's coefficients.
pub fn ccg_minkowski(s1: &Ccg, s2: &Ccg) -> Result<Ccg> {
    check_same_dim(s1, s2)?;
    Ccg::new(
        s1.center() + s2.center(),
        hstack(s1.generators(), s2.generators()),
        concat_groups(s1.groups(), s2.groups(), s1.n_coeffs()),
        block_diag(s1.constraint_matrix(), s2.constraint_matrix()),
        vcat(s1.constraint_rhs(), s2.constraint_rhs()),
    )
}

/// Intersection over the augmented coefficients `[β; γ]`: the point is
/// `c₁ + G₁ β` and the coupling rows enforce `G₁ β − G₂ γ = c₂ − c₁`.
pub fn ccg_intersect(s1: &Ccg, s2: &Ccg) -> Result<Ccg> {
    check_same_dim(s1, s2)?;
    let (m1, m2) = (s1.n_coeffs(), s2.n_coeffs());
    let g = hstack(s1.generators(), &DMatrix::zeros(s1.dim(), m2));
    let coupling = hstack(s1.generators(), &(-s2.generators()));
    let a = vstack(
        &block_diag(s1.constraint_matrix(), s2.constraint_matrix()),
        &coupling,
    );
    let b = vcat(
        &vcat(s1.constraint_rhs(), s2.constraint_rhs()),
        &(s2.center() - s1.center()),
    );
    Ccg::new(
        s1.center().clone(),
        g,
        concat_groups(s1.groups(), s2.groups(), m1),
        a,
        b,
    )
}

/// Generator bound on the support function in direction `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportBound {
    /// `hᵀc + Σ_j |hᵀg_j|`.
    pub value: f64,
}

/// Upper bound on `max_{x∈s} hᵀx`; exact for unconstrained unit-radius
/// infinity-norm sets, and it ignores the equality constraints entirely.
pub fn support_upper_bound(h: &DVector<f64>, s: &Ccg) -> Result<SupportBound> {
    if h.len() != s.dim() {
        return Err(SetError::Shape(format!(
            "direction has dimension {} but the set lives in R^{}",
            h.len(),
            s.dim()
        )));
    }
    let spread: f64 = (h.transpose() * s.generators()).iter().map(|v| v.abs()).sum();
    Ok(SupportBound {
        value: h.dot(s.center()) + spread,
    })
}

/// Intersection with a halfspace.
///
/// A negative `d_max` certifies the intersection is empty. Otherwise one
/// infinity-norm slack coefficient is appended together with the row
/// `hᵀG β + (d_max/2) β_{m+1} = f − hᵀc − d_max/2`, which forces
/// `hᵀx = f − (d_max/2)(1 + β_{m+1}) ≤ f`.
pub fn ccg_halfspace(s: &Ccg, hs: &Halfspace) -> Result<HalfspaceCut> {
    let h = hs.normal();
    let f = hs.offset();
    if h.len() != s.dim() {
        return Err(SetError::Shape(format!(
            "halfspace lives in R^{} but the set in R^{}",
            h.len(),
            s.dim()
        )));
    }
    let hg = h.transpose() * s.generators();
    let hc = h.dot(s.center());
    let d_max = f - hc + hg.iter().map(|v| v.abs()).sum::<f64>();
    if d_max < 0.0 {
        return Ok(HalfspaceCut {
            d_max,
            result: CutResult::Empty,
        });
    }
    let (n, m, q) = (s.dim(), s.n_coeffs(), s.n_constraints());
    let g = hstack(s.generators(), &DMatrix::zeros(n, 1));
    let mut a = DMatrix::zeros(q + 1, m + 1);
    a.view_mut((0, 0), (q, m)).copy_from(s.constraint_matrix());
    a.view_mut((q, 0), (1, m)).copy_from(&hg);
    a[(q, m)] = d_max / 2.0;
    let mut b = DVector::zeros(q + 1);
    b.rows_mut(0, q).copy_from(s.constraint_rhs());
    b[q] = f - hc - d_max / 2.0;
    let mut groups = s.groups().to_vec();
    groups.push(NormGroup::unit(m..m + 1, Norm::Inf));
    Ok(HalfspaceCut {
        d_max,
        result: CutResult::Set(Ccg::new(s.center().clone(), g, groups, a, b)?),
    })
}
