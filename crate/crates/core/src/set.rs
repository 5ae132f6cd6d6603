//! Set representations: constrained convex generators ([`Ccg`]), roundabout
//! (single-hole) sets ([`Rcg`]), halfspaces and linear maps.
//!
//! A [`Ccg`] is the set
//!
//! ```text
//! { c + G β  :  ‖β_J‖_p ≤ radius  for every norm group J,  A β = b }
//! ```
//!
//! and an [`Rcg`] is the set difference `outer ∖ inner` of two such sets, where
//! the inner member carries radii in `[0, 1)`. Every value returned by the
//! constructors here has been validated and is immutable afterwards.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SetError};

/// Norm selector for one coefficient group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Norm {
    L1,
    L2,
    Inf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Inf];

    /// Maps a numeric `p` onto a supported norm.
    pub fn from_p(p: f64) -> Result<Norm> {
        if p == 1.0 {
            Ok(Norm::L1)
        } else if p == 2.0 {
            Ok(Norm::L2)
        } else if p == f64::INFINITY {
            Ok(Norm::Inf)
        } else {
            Err(SetError::Norm(format!(
                "p = {p} is not supported; only 1, 2 and inf are"
            )))
        }
    }

    /// Token used by the JSON format: `"1"`, `"2"` or `"inf"`.
    pub fn token(self) -> &'static str {
        match self {
            Norm::L1 => "1",
            Norm::L2 => "2",
            Norm::Inf => "inf",
        }
    }

    pub fn from_token(s: &str) -> Result<Norm> {
        match s {
            "1" => Ok(Norm::L1),
            "2" => Ok(Norm::L2),
            "inf" => Ok(Norm::Inf),
            other => Err(SetError::Norm(format!(
                "norm \"{other}\" is not one of \"1\", \"2\", \"inf\""
            ))),
        }
    }

    /// The dual norm: `1 ↔ ∞`, `2 ↔ 2`.
    pub fn dual(self) -> Norm {
        match self {
            Norm::L1 => Norm::Inf,
            Norm::L2 => Norm::L2,
            Norm::Inf => Norm::L1,
        }
    }

    pub fn eval<'a>(self, values: impl IntoIterator<Item = &'a f64>) -> f64 {
        let it = values.into_iter();
        match self {
            Norm::L1 => it.map(|v| v.abs()).sum(),
            Norm::L2 => it.map(|v| v * v).sum::<f64>().sqrt(),
            Norm::Inf => it.fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One block of the coefficient partition with its norm and radius bound.
///
/// Indices are stored zero-based; the JSON format uses one-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct NormGroup {
    indices: Vec<usize>,
    norm: Norm,
    radius: f64,
}

impl NormGroup {
    /// Builds a group. Indices must be nonempty and strictly increasing; the
    /// range check against the coefficient count happens in [`Ccg::new`].
    pub fn new(indices: Vec<usize>, norm: Norm, radius: f64) -> Result<NormGroup> {
        if indices.is_empty() {
            return Err(SetError::Partition("norm group with no indices".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SetError::Partition(format!(
                "group indices {:?} are not strictly increasing",
                one_based(&indices)
            )));
        }
        if !radius.is_finite() || radius < 0.0 {
            return Err(SetError::Radius(format!(
                "group radius {radius} must be finite and nonnegative"
            )));
        }
        Ok(NormGroup {
            indices,
            norm,
            radius,
        })
    }

    /// Unit-radius group over a contiguous index range.
    pub fn unit(range: std::ops::Range<usize>, norm: Norm) -> NormGroup {
        NormGroup::new(range.collect(), norm, 1.0).expect("contiguous nonempty range")
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Norm of the group's slice of `coeffs`.
    pub fn norm_of(&self, coeffs: &[f64]) -> f64 {
        self.norm.eval(self.indices.iter().map(|&i| &coeffs[i]))
    }

    pub(crate) fn shifted(&self, offset: usize) -> NormGroup {
        NormGroup {
            indices: self.indices.iter().map(|i| i + offset).collect(),
            norm: self.norm,
            radius: self.radius,
        }
    }

    pub(crate) fn with_radius(&self, radius: f64) -> NormGroup {
        NormGroup {
            indices: self.indices.clone(),
            norm: self.norm,
            radius,
        }
    }
}

fn one_based(indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|i| i + 1).collect()
}

fn check_finite<'a>(what: &str, values: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SetError::Shape(format!("{what} contains a non-finite entry")))
    }
}

/// Unvalidated parts of a [`Ccg`].
#[derive(Debug, Clone)]
pub struct CcgParts {
    pub c: DVector<f64>,
    pub g: DMatrix<f64>,
    pub groups: Vec<NormGroup>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

/// Constrained convex generator `⟨c, G, groups, A, b⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ccg {
    c: DVector<f64>,
    g: DMatrix<f64>,
    groups: Vec<NormGroup>,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl Ccg {
    pub fn new(
        c: DVector<f64>,
        g: DMatrix<f64>,
        groups: Vec<NormGroup>,
        a: DMatrix<f64>,
        b: DVector<f64>,
    ) -> Result<Ccg> {
        validate_ccg(CcgParts { c, g, groups, a, b })
    }

    /// Set with no equality constraints.
    pub fn unconstrained(c: DVector<f64>, g: DMatrix<f64>, groups: Vec<NormGroup>) -> Result<Ccg> {
        let m = g.ncols();
        Ccg::new(c, g, groups, DMatrix::zeros(0, m), DVector::zeros(0))
    }

    /// Zonotope: a single unit infinity-norm group over all generators.
    pub fn zonotope(c: DVector<f64>, g: DMatrix<f64>) -> Result<Ccg> {
        let m = g.ncols();
        let groups = if m == 0 {
            Vec::new()
        } else {
            vec![NormGroup::unit(0..m, Norm::Inf)]
        };
        Ccg::unconstrained(c, g, groups)
    }

    /// Ellipsotope with one unit 2-norm group over all generators.
    pub fn ellipsoid(c: DVector<f64>, g: DMatrix<f64>) -> Result<Ccg> {
        let m = g.ncols();
        let groups = if m == 0 {
            Vec::new()
        } else {
            vec![NormGroup::unit(0..m, Norm::L2)]
        };
        Ccg::unconstrained(c, g, groups)
    }

    /// Singleton `{c}` (no generators).
    pub fn point(c: DVector<f64>) -> Result<Ccg> {
        let n = c.len();
        Ccg::unconstrained(c, DMatrix::zeros(n, 0), Vec::new())
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    /// Coefficient count `m`.
    pub fn n_coeffs(&self) -> usize {
        self.g.ncols()
    }

    /// Number of equality constraints `q`.
    pub fn n_constraints(&self) -> usize {
        self.a.nrows()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn groups(&self) -> &[NormGroup] {
        &self.groups
    }

    pub fn constraint_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn constraint_rhs(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn has_constraints(&self) -> bool {
        self.a.nrows() > 0
    }

    /// True when every group uses `norm`.
    pub fn uses_only(&self, norm: Norm) -> bool {
        self.groups.iter().all(|g| g.norm == norm)
    }

    /// Point `c + G β`.
    pub fn point_at(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.c + &self.g * beta
    }

    pub fn into_parts(self) -> CcgParts {
        CcgParts {
            c: self.c,
            g: self.g,
            groups: self.groups,
            a: self.a,
            b: self.b,
        }
    }

    pub fn to_parts(&self) -> CcgParts {
        self.clone().into_parts()
    }

    /// Re-validates the value; validated sets always pass unchanged.
    pub fn validate(&self) -> Result<Ccg> {
        validate_ccg(self.to_parts())
    }
}

/// Checks every [`Ccg`] invariant and returns the validated set.
pub fn validate_ccg(raw: CcgParts) -> Result<Ccg> {
    let CcgParts { c, g, groups, a, b } = raw;
    let n = c.len();
    let m = g.ncols();
    if n == 0 {
        return Err(SetError::Shape("ambient dimension must be at least 1".into()));
    }
    if g.nrows() != n {
        return Err(SetError::Shape(format!(
            "generator matrix has {} rows but the center has length {n}",
            g.nrows()
        )));
    }
    if a.ncols() != m {
        return Err(SetError::Shape(format!(
            "constraint matrix has {} columns but there are {m} generators",
            a.ncols()
        )));
    }
    if a.nrows() != b.len() {
        return Err(SetError::Shape(format!(
            "constraint matrix has {} rows but rhs has length {}",
            a.nrows(),
            b.len()
        )));
    }
    check_finite("center", c.iter())?;
    check_finite("generator matrix", g.iter())?;
    check_finite("constraint matrix", a.iter())?;
    check_finite("constraint rhs", b.iter())?;

    let mut owner: Vec<Option<usize>> = vec![None; m];
    for (gi, group) in groups.iter().enumerate() {
        // re-run the per-group checks so hand-assembled parts cannot bypass them
        NormGroup::new(group.indices.clone(), group.norm, group.radius)?;
        for &idx in &group.indices {
            if idx >= m {
                return Err(SetError::Partition(format!(
                    "index {} is outside 1..={m}",
                    idx + 1
                )));
            }
            if let Some(prev) = owner[idx] {
                return Err(SetError::Partition(format!(
                    "index {} appears in groups {} and {}",
                    idx + 1,
                    prev + 1,
                    gi + 1
                )));
            }
            owner[idx] = Some(gi);
        }
    }
    if let Some(missing) = owner.iter().position(Option::is_none) {
        return Err(SetError::Partition(format!(
            "index {} is not covered by any group",
            missing + 1
        )));
    }
    Ok(Ccg { c, g, groups, a, b })
}

/// Roundabout constrained convex generator: `outer ∖ inner`.
///
/// The inner member's group radii are the scaling factors `r_j ∈ [0, 1)`;
/// the outer member's radii are all 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Rcg {
    outer: Ccg,
    inner: Ccg,
}

impl Rcg {
    pub fn new(outer: Ccg, inner: Ccg) -> Result<Rcg> {
        validate_rcg(outer, inner)
    }

    pub fn outer(&self) -> &Ccg {
        &self.outer
    }

    pub fn inner(&self) -> &Ccg {
        &self.inner
    }

    pub fn dim(&self) -> usize {
        self.outer.dim()
    }

    /// Inner radii `r`, one per inner group.
    pub fn radii(&self) -> Vec<f64> {
        self.inner.groups.iter().map(|g| g.radius).collect()
    }

    /// Offset `c_o − c_in` of the exclusion mapping.
    pub fn center_offset(&self) -> DVector<f64> {
        &self.outer.c - &self.inner.c
    }

    /// Right-hand side of the exclusion equation, `(c_o − c_in) + G_o β`.
    pub fn exclusion_rhs(&self, beta: &DVector<f64>) -> DVector<f64> {
        self.center_offset() + &self.outer.g * beta
    }

    pub fn into_parts(self) -> (Ccg, Ccg) {
        (self.outer, self.inner)
    }

    pub fn validate(&self) -> Result<Rcg> {
        validate_rcg(self.outer.validate()?, self.inner.validate()?)
    }
}

/// Checks the pair invariants of an [`Rcg`].
pub fn validate_rcg(outer: Ccg, inner: Ccg) -> Result<Rcg> {
    if outer.dim() != inner.dim() {
        return Err(SetError::Shape(format!(
            "outer set lives in R^{} but inner set in R^{}",
            outer.dim(),
            inner.dim()
        )));
    }
    if let Some(g) = outer.groups.iter().find(|g| g.radius != 1.0) {
        return Err(SetError::Radius(format!(
            "outer group {:?} has radius {}; outer groups must have radius 1",
            one_based(&g.indices),
            g.radius
        )));
    }
    if let Some(g) = inner
        .groups
        .iter()
        .find(|g| !(0.0..1.0).contains(&g.radius))
    {
        return Err(SetError::Radius(format!(
            "inner group {:?} has radius {}; inner radii must lie in [0, 1)",
            one_based(&g.indices),
            g.radius
        )));
    }
    Ok(Rcg { outer, inner })
}

/// Halfspace `{x : hᵀx ≤ f}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    h: DVector<f64>,
    f: f64,
}

impl Halfspace {
    pub fn new(h: DVector<f64>, f: f64) -> Result<Halfspace> {
        if h.is_empty() {
            return Err(SetError::Shape("halfspace normal is empty".into()));
        }
        check_finite("halfspace normal", h.iter())?;
        if !f.is_finite() {
            return Err(SetError::Shape("halfspace offset is not finite".into()));
        }
        if h.iter().all(|v| *v == 0.0) {
            return Err(SetError::Shape("halfspace normal is the zero vector".into()));
        }
        Ok(Halfspace { h, f })
    }

    pub fn normal(&self) -> &DVector<f64> {
        &self.h
    }

    pub fn offset(&self) -> f64 {
        self.f
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.h.dot(x) <= self.f + tol
    }
}

/// Outcome of intersecting a [`Ccg`] with a [`Halfspace`].
#[derive(Debug, Clone, PartialEq)]
pub enum CutResult {
    /// Certified empty by the negative slack.
    Empty,
    Set(Ccg),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfspaceCut {
    /// Maximum slack `f − hᵀc + Σ_j |hᵀg_j|`.
    pub d_max: f64,
    pub result: CutResult,
}

impl HalfspaceCut {
    pub fn is_empty(&self) -> bool {
        matches!(self.result, CutResult::Empty)
    }

    pub fn set(&self) -> Option<&Ccg> {
        match &self.result {
            CutResult::Set(s) => Some(s),
            CutResult::Empty => None,
        }
    }
}

/// Linear map `x ↦ T x` with `T ∈ R^{p×n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap(DMatrix<f64>);

impl LinearMap {
    pub fn new(t: DMatrix<f64>) -> Result<LinearMap> {
        if t.nrows() == 0 || t.ncols() == 0 {
            return Err(SetError::Shape("linear map must be at least 1×1".into()));
        }
        check_finite("linear map", t.iter())?;
        Ok(LinearMap(t))
    }

    pub fn identity(n: usize) -> LinearMap {
        LinearMap(DMatrix::identity(n, n))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn input_dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.0 * x
    }

    pub(crate) fn check_input(&self, n: usize) -> Result<()> {
        if self.0.ncols() != n {
            return Err(SetError::Shape(format!(
                "linear map expects R^{} but the set lives in R^{n}",
                self.0.ncols()
            )));
        }
        Ok(())
    }
}
