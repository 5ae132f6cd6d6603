//! JSON set descriptions.
//!
//! ```text
//! ccg:       {"kind":"ccg","c":[..],"G":[[row],..],"groups":[{"idx":[..],"p":"1"|"2"|"inf","r":x}],"A":[[row],..],"b":[..]}
//! rcg:       {"kind":"rcg","outer":<ccg>,"inner":<ccg>}
//! halfspace: {"kind":"halfspace","h":[..],"f":x}
//! ```
//!
//! Matrices are row-major, group indices are one-based, and unknown keys are
//! rejected. [`emit_set_json`] writes the canonical compact form, which
//! [`parse_set_json`] reads back to an identical value.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SetError};
use crate::set::{validate_ccg, validate_rcg, Ccg, CcgParts, Halfspace, Norm, NormGroup, Rcg};

/// Any value the JSON format can describe.
#[derive(Debug, Clone, PartialEq)]
pub enum SetDescription {
    Ccg(Ccg),
    Rcg(Rcg),
    Halfspace(Halfspace),
}

impl SetDescription {
    pub fn kind(&self) -> &'static str {
        match self {
            SetDescription::Ccg(_) => "ccg",
            SetDescription::Rcg(_) => "rcg",
            SetDescription::Halfspace(_) => "halfspace",
        }
    }
}

impl From<Ccg> for SetDescription {
    fn from(s: Ccg) -> Self {
        SetDescription::Ccg(s)
    }
}

impl From<Rcg> for SetDescription {
    fn from(s: Rcg) -> Self {
        SetDescription::Rcg(s)
    }
}

impl From<Halfspace> for SetDescription {
    fn from(s: Halfspace) -> Self {
        SetDescription::Halfspace(s)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroup {
    idx: Vec<usize>,
    p: String,
    r: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCcg {
    c: Vec<f64>,
    #[serde(rename = "G")]
    g: Vec<Vec<f64>>,
    groups: Vec<RawGroup>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum TaggedCcg {
    Ccg(RawCcg),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRcg {
    outer: TaggedCcg,
    inner: TaggedCcg,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHalfspace {
    h: Vec<f64>,
    f: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawSet {
    Ccg(RawCcg),
    Rcg(RawRcg),
    Halfspace(RawHalfspace),
}

fn matrix_from_rows(what: &str, rows: &[Vec<f64>], ncols: usize) -> Result<DMatrix<f64>> {
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(SetError::Shape(format!(
            "{what} row {} has {} entries, expected {ncols}",
            i + 1,
            row.len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl RawCcg {
    fn into_ccg(self) -> Result<Ccg> {
        let n = self.c.len();
        if self.g.len() != n {
            return Err(SetError::Shape(format!(
                "G has {} rows but c has length {n}",
                self.g.len()
            )));
        }
        let m = self.g.first().map_or(0, Vec::len);
        let g = matrix_from_rows("G", &self.g, m)?;
        let a = matrix_from_rows("A", &self.a, m)?;
        let groups = self
            .groups
            .into_iter()
            .map(|raw| {
                if raw.idx.contains(&0) {
                    return Err(SetError::Partition(
                        "group indices are one-based; found 0".into(),
                    ));
                }
                let norm = Norm::from_token(&raw.p)?;
                NormGroup::new(raw.idx.iter().map(|i| i - 1).collect(), norm, raw.r)
            })
            .collect::<Result<Vec<_>>>()?;
        validate_ccg(CcgParts {
            c: DVector::from_vec(self.c),
            g,
            groups,
            a,
            b: DVector::from_vec(self.b),
        })
    }

    fn from_ccg(s: &Ccg) -> RawCcg {
        RawCcg {
            c: s.center().iter().copied().collect(),
            g: matrix_to_rows(s.generators()),
            groups: s
                .groups()
                .iter()
                .map(|g| RawGroup {
                    idx: g.indices().iter().map(|i| i + 1).collect(),
                    p: g.norm().token().to_string(),
                    r: g.radius(),
                })
                .collect(),
            a: matrix_to_rows(s.constraint_matrix()),
            b: s.constraint_rhs().iter().copied().collect(),
        }
    }
}

/// Decodes and validates a set description.
pub fn parse_set_json(text: &[u8]) -> Result<SetDescription> {
    let text = std::str::from_utf8(text).map_err(|e| SetError::Parse(e.to_string()))?;
    let raw: RawSet = serde_json::from_str(text).map_err(|e| SetError::Parse(e.to_string()))?;
    match raw {
        RawSet::Ccg(c) => c.into_ccg().map(SetDescription::Ccg),
        RawSet::Rcg(r) => {
            let TaggedCcg::Ccg(outer) = r.outer;
            let TaggedCcg::Ccg(inner) = r.inner;
            validate_rcg(outer.into_ccg()?, inner.into_ccg()?).map(SetDescription::Rcg)
        }
        RawSet::Halfspace(h) => {
            Halfspace::new(DVector::from_vec(h.h), h.f).map(SetDescription::Halfspace)
        }
    }
}

/// Writes the canonical compact JSON form.
pub fn emit_set_json(set: &SetDescription) -> String {
    let raw = match set {
        SetDescription::Ccg(s) => RawSet::Ccg(RawCcg::from_ccg(s)),
        SetDescription::Rcg(r) => RawSet::Rcg(RawRcg {
            outer: TaggedCcg::Ccg(RawCcg::from_ccg(r.outer())),
            inner: TaggedCcg::Ccg(RawCcg::from_ccg(r.inner())),
        }),
        SetDescription::Halfspace(h) => RawSet::Halfspace(RawHalfspace {
            h: h.normal().iter().copied().collect(),
            f: h.offset(),
        }),
    };
    serde_json::to_string(&raw).expect("set descriptions always serialize")
}

pub fn parse_ccg_json(text: &[u8]) -> Result<Ccg> {
    match parse_set_json(text)? {
        SetDescription::Ccg(s) => Ok(s),
        other => Err(SetError::Parse(format!("expected a ccg, found {}", other.kind()))),
    }
}

pub fn parse_rcg_json(text: &[u8]) -> Result<Rcg> {
    match parse_set_json(text)? {
        SetDescription::Rcg(s) => Ok(s),
        other => Err(SetError::Parse(format!("expected an rcg, found {}", other.kind()))),
    }
}
