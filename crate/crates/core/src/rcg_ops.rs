//! Calculus on roundabout sets `outer ∖ inner`.
//!
//! An [`Rcg`] is stored as its (outer, inner) pair. Membership of `x` follows
//! the unified form: some `β` reaches `x = c_o + G_o β` under the outer
//! constraints, and no `η` satisfies `G_in η = (c_o − c_in) + G_o β` under
//! the inner constraints. Every operation below rewrites the pair; none of
//! them changes how membership is decided.

use nalgebra::{DMatrix, DVector};

use crate::ccg_ops::{ccg_intersect, ccg_linear_map, ccg_minkowski, hstack};
use crate::error::{Result, SetError};
use crate::feasibility::{
    ccg_member, verdict_from_coefficients, FeasibilityVerdict, MembershipPath, RcgVerdict,
    SolverConfig, Status,
};
use crate::linalg::{has_full_column_rank, pseudo_inverse, unique_preimage};
use crate::set::{Ccg, LinearMap, Norm, NormGroup, Rcg};

/// Radius given to summand groups folded into an inner member; their
/// generators are rescaled so the represented set is unchanged.
const FOLDED_INNER_RADIUS: f64 = 0.5;

const NOT_CLOSED: &str = "sums and intersections of two roundabout sets do not maintain \
closure within the RCG class: the result may have several holes";

/// Builds `outer ∖ inner`.
pub fn rcg_from_difference(outer: Ccg, inner: Ccg) -> Result<Rcg> {
    Rcg::new(outer, inner)
}

/// Maps both members: `⟨T G_o, T G_in, T c_o, T c_in, …⟩`.
///
/// Exact for injective `T`. For a non-injective map the result is
/// `T(outer) ∖ T(inner)`, which can be smaller than the true image
/// `T(outer ∖ inner)` when the projected hole is covered by the ring.
pub fn rcg_linear_map(t: &LinearMap, s: &Rcg) -> Result<Rcg> {
    Rcg::new(ccg_linear_map(t, s.outer())?, ccg_linear_map(t, s.inner())?)
}

// Rewrites every group of `t` to radius FOLDED_INNER_RADIUS (radius-0 groups stay).
fn with_folded_radii(t: &Ccg) -> Result<Ccg> {
    let mut g = t.generators().clone();
    let mut a = t.constraint_matrix().clone();
    let mut groups = Vec::with_capacity(t.groups().len());
    for grp in t.groups() {
        if grp.radius() == 0.0 {
            groups.push(grp.clone());
            continue;
        }
        let scale = grp.radius() / FOLDED_INNER_RADIUS;
        for &j in grp.indices() {
            g.column_mut(j).scale_mut(scale);
            a.column_mut(j).scale_mut(scale);
        }
        groups.push(grp.with_radius(FOLDED_INNER_RADIUS));
    }
    Ccg::new(
        t.center().clone(),
        g,
        groups,
        a,
        t.constraint_rhs().clone(),
    )
}

/// Sum with a convex set: `(outer ⊕ t) ∖ (inner ⊕ t)`.
///
/// The inner sum is `⟨c_in + c_t, [G_in G_t], …⟩`. Its `t` groups are stored
/// at radius 0.5 with doubled generators so the inner radii stay below 1.
/// This is not the true Minkowski sum in general: the true sum's hole
/// shrinks as `t` grows, while this hole grows.
pub fn rcg_minkowski_ccg(s: &Rcg, t: &Ccg) -> Result<Rcg> {
    let outer = ccg_minkowski(s.outer(), t)?;
    let inner = ccg_minkowski(s.inner(), &with_folded_radii(t)?)?;
    Rcg::new(outer, inner)
}

/// Intersection with a convex set. The outer member becomes the augmented
/// `ccg_intersect(outer, t)` over `[β; γ]`; the exclusion only reads the
/// `β` block, and since `c_o + G_o β = x` the inner member is unchanged.
pub fn rcg_intersect_ccg(s: &Rcg, t: &Ccg) -> Result<Rcg> {
    Rcg::new(ccg_intersect(s.outer(), t)?, s.inner().clone())
}

pub fn rcg_minkowski_rcg(_s1: &Rcg, _s2: &Rcg) -> Result<Rcg> {
    Err(SetError::UnsupportedOperation(format!("minkowski sum: {NOT_CLOSED}")))
}

pub fn rcg_intersect_rcg(_s1: &Rcg, _s2: &Rcg) -> Result<Rcg> {
    Err(SetError::UnsupportedOperation(format!("intersection: {NOT_CLOSED}")))
}

fn require_norm(s: &Ccg, norm: Norm, role: &str) -> Result<()> {
    match s.groups().iter().find(|g| g.norm() != norm) {
        None => Ok(()),
        Some(g) => Err(SetError::Norm(format!(
            "{role} group uses the {}-norm; this constructor requires the {}-norm",
            g.norm(),
            norm
        ))),
    }
}

/// Roundabout ellipsotope: every group uses the 2-norm.
pub fn make_roundabout_ellipsotope(outer: Ccg, inner: Ccg) -> Result<Rcg> {
    require_norm(&outer, Norm::L2, "outer")?;
    require_norm(&inner, Norm::L2, "inner")?;
    Rcg::new(outer, inner)
}

/// Roundabout constrained zonotope: every group uses the infinity norm;
/// equality constraints are allowed on both members.
pub fn make_roundabout_constrained_zonotope(outer: Ccg, inner: Ccg) -> Result<Rcg> {
    require_norm(&outer, Norm::Inf, "outer")?;
    require_norm(&inner, Norm::Inf, "inner")?;
    Rcg::new(outer, inner)
}

/// Roundabout zonotope `Z(c_o, G_o) ∖ Z(c_in, r·G_in)`.
///
/// `radii` holds either one factor for all inner generators or one per
/// inner generator. The stored form keeps `G_in` unscaled with the factors
/// as group radii; [`prescaled_inner`] gives the equivalent view with the
/// factors folded into the generators.
pub fn make_roundabout_zonotope(
    c_outer: DVector<f64>,
    g_outer: DMatrix<f64>,
    c_inner: DVector<f64>,
    g_inner: DMatrix<f64>,
    radii: &[f64],
) -> Result<Rcg> {
    let m_in = g_inner.ncols();
    if let Some(r) = radii.iter().find(|r| !(0.0..1.0).contains(*r)) {
        return Err(SetError::Radius(format!(
            "scale factor {r} is outside [0, 1)"
        )));
    }
    let groups = match radii.len() {
        _ if m_in == 0 => Vec::new(),
        1 => vec![NormGroup::new((0..m_in).collect(), Norm::Inf, radii[0])?],
        k if k == m_in => radii
            .iter()
            .enumerate()
            .map(|(j, &r)| NormGroup::new(vec![j], Norm::Inf, r))
            .collect::<Result<_>>()?,
        k => {
            return Err(SetError::Shape(format!(
                "expected 1 or {m_in} scale factors, got {k}"
            )))
        }
    };
    let outer = Ccg::zonotope(c_outer, g_outer)?;
    let inner = Ccg::unconstrained(c_inner, g_inner, groups)?;
    Rcg::new(outer, inner)
}

/// The inner member with each group's radius folded into its generator
/// columns (and constraint columns), leaving unit radii. Pointwise equal to
/// `s.inner()`.
pub fn prescaled_inner(s: &Rcg) -> Ccg {
    let inner = s.inner();
    let mut g = inner.generators().clone();
    let mut a = inner.constraint_matrix().clone();
    let mut groups = Vec::with_capacity(inner.groups().len());
    for grp in inner.groups() {
        for &j in grp.indices() {
            g.column_mut(j).scale_mut(grp.radius());
            a.column_mut(j).scale_mut(grp.radius());
        }
        groups.push(grp.with_radius(1.0));
    }
    Ccg::new(
        inner.center().clone(),
        g,
        groups,
        a,
        inner.constraint_rhs().clone(),
    )
    .expect("rescaling preserves validity")
}

/// One shell `lower < ‖β_J‖_p ≤ upper` of an [`AnnulusForm`] whose outer and
/// inner partitions coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct Shell {
    pub indices: Vec<usize>,
    pub outer_norm: Norm,
    pub inner_norm: Norm,
    pub lower: f64,
    pub upper: f64,
}

/// Parameter-space form of a set with shared center and shared
/// full-column-rank generators and no equality constraints: `x` has the
/// unique preimage `β = G⁺(x − c)`, and `x` is a member iff every outer group
/// satisfies `‖β_J‖ ≤ 1` and some inner group has `‖β_K‖ > r_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusForm {
    c: DVector<f64>,
    g: DMatrix<f64>,
    pinv: DMatrix<f64>,
    outer_groups: Vec<NormGroup>,
    inner_groups: Vec<NormGroup>,
}

impl AnnulusForm {
    pub fn center(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// Per-group bounds, when the outer and inner partitions coincide.
    pub fn shells(&self) -> Option<Vec<Shell>> {
        if self.outer_groups.len() != self.inner_groups.len() {
            return None;
        }
        self.outer_groups
            .iter()
            .zip(&self.inner_groups)
            .map(|(o, i)| {
                (o.indices() == i.indices()).then(|| Shell {
                    indices: o.indices().to_vec(),
                    outer_norm: o.norm(),
                    inner_norm: i.norm(),
                    lower: i.radius(),
                    upper: o.radius(),
                })
            })
            .collect()
    }

    /// Unique preimage of `x`, or the least-squares residual when `x` lies
    /// outside the range of the generators.
    pub fn preimage(&self, x: &DVector<f64>, tol: f64) -> std::result::Result<DVector<f64>, f64> {
        unique_preimage(&self.pinv, &self.g, &(x - &self.c), tol)
    }

    /// Membership decided directly on coefficients.
    pub fn classify_coefficients(&self, beta: &DVector<f64>, cfg: &SolverConfig) -> RcgVerdict {
        let outer = verdict_from_coefficients(beta.clone(), &self.outer_groups, cfg);
        if outer.status != Status::Feasible {
            return RcgVerdict::combine(outer, None, MembershipPath::Annulus);
        }
        let inner = verdict_from_coefficients(beta.clone(), &self.inner_groups, cfg);
        RcgVerdict::combine(outer, Some(inner), MembershipPath::Annulus)
    }

    pub fn classify(&self, x: &DVector<f64>, cfg: &SolverConfig) -> RcgVerdict {
        match self.preimage(x, cfg.tol_feas) {
            Ok(beta) => self.classify_coefficients(&beta, cfg),
            Err(_) => RcgVerdict::combine(
                FeasibilityVerdict {
                    status: Status::Infeasible,
                    witness: None,
                    residual: f64::INFINITY,
                    iterations: 0,
                },
                None,
                MembershipPath::Annulus,
            ),
        }
    }
}

/// Returns the parameter-space form when the members share center and
/// generators, have no equality constraints, and the generators have full
/// column rank.
pub fn try_annulus_form(s: &Rcg) -> Option<AnnulusForm> {
    let (o, i) = (s.outer(), s.inner());
    if o.center() != i.center()
        || o.generators() != i.generators()
        || o.has_constraints()
        || i.has_constraints()
        || !has_full_column_rank(o.generators())
    {
        return None;
    }
    Some(AnnulusForm {
        c: o.center().clone(),
        g: o.generators().clone(),
        pinv: pseudo_inverse(o.generators()),
        outer_groups: o.groups().to_vec(),
        inner_groups: i.groups().to_vec(),
    })
}

/// Which shared structure simplifies the exclusion equation.
#[derive(Debug, Clone, PartialEq)]
pub enum ExclusionForm {
    /// `c_o = c_in` and `G_o = G_in = G`: `G η = G β`.
    SharedCenterAndGenerators { g: DMatrix<f64> },
    /// `G_o = G_in = G`: `G η = (c_o − c_in) + G β`.
    SharedGenerators { g: DMatrix<f64>, offset: DVector<f64> },
    /// `c_o = c_in`: `G_in η = G_o β`.
    Concentric {
        g_outer: DMatrix<f64>,
        g_inner: DMatrix<f64>,
    },
    NotApplicable,
}

pub fn common_generator_form(s: &Rcg) -> ExclusionForm {
    let (o, i) = (s.outer(), s.inner());
    let same_g = o.generators() == i.generators();
    let same_c = o.center() == i.center();
    match (same_c, same_g) {
        (true, true) => ExclusionForm::SharedCenterAndGenerators {
            g: o.generators().clone(),
        },
        (false, true) => ExclusionForm::SharedGenerators {
            g: o.generators().clone(),
            offset: s.center_offset(),
        },
        (true, false) => ExclusionForm::Concentric {
            g_outer: o.generators().clone(),
            g_inner: i.generators().clone(),
        },
        (false, false) => ExclusionForm::NotApplicable,
    }
}

/// Parameter-space description of a concentric shared-generator roundabout
/// zonotope intersected with a zonotope `Y`: `β` is feasible iff the annulus
/// condition holds and some `γ` with `‖γ‖_∞ ≤ 1` solves
/// `[G, −G_y] [β; γ] = c_y − c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentricIntersection {
    annulus: AnnulusForm,
    y: Ccg,
}

impl ConcentricIntersection {
    pub fn annulus(&self) -> &AnnulusForm {
        &self.annulus
    }

    /// `[G, −G_y]`.
    pub fn coupling_matrix(&self) -> DMatrix<f64> {
        hstack(&self.annulus.g, &(-self.y.generators()))
    }

    /// `c_y − c`.
    pub fn coupling_rhs(&self) -> DVector<f64> {
        self.y.center() - &self.annulus.c
    }

    /// Is `β` in the feasible parameter set?
    pub fn classify_coefficients(
        &self,
        beta: &DVector<f64>,
        cfg: &SolverConfig,
    ) -> Result<RcgVerdict> {
        let ring = self.annulus.classify_coefficients(beta, cfg);
        if ring.status != Status::Feasible {
            return Ok(ring);
        }
        let x = &self.annulus.c + &self.annulus.g * beta;
        let coupling = ccg_member(&x, &self.y, cfg)?;
        let status = coupling.status;
        // The coupling verdict is reported as the outer verdict so the
        // tolerance-band logic sees its residual.
        Ok(RcgVerdict {
            status,
            outer: coupling,
            inner: ring.inner,
            path: MembershipPath::Annulus,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RzIntersection {
    pub rcg: Rcg,
    /// Present when the roundabout zonotope is concentric with shared
    /// full-column-rank generators.
    pub concentric: Option<ConcentricIntersection>,
}

fn require_unconstrained(s: &Ccg, role: &str) -> Result<()> {
    if s.has_constraints() {
        return Err(SetError::Shape(format!(
            "{role} must not carry equality constraints"
        )));
    }
    Ok(())
}

/// Intersection of a roundabout zonotope with a zonotope.
pub fn rz_intersect_zonotope(s: &Rcg, y: &Ccg) -> Result<RzIntersection> {
    require_norm(s.outer(), Norm::Inf, "outer")?;
    require_norm(s.inner(), Norm::Inf, "inner")?;
    require_norm(y, Norm::Inf, "zonotope")?;
    require_unconstrained(s.outer(), "outer zonotope")?;
    require_unconstrained(s.inner(), "inner zonotope")?;
    require_unconstrained(y, "zonotope")?;
    let rcg = rcg_intersect_ccg(s, y)?;
    let concentric = try_annulus_form(s).map(|annulus| ConcentricIntersection {
        annulus,
        y: y.clone(),
    });
    Ok(RzIntersection { rcg, concentric })
}
