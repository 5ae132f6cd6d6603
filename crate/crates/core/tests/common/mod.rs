#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rcg::json::{parse_set_json, SetDescription};
use rcg::oracle::BBox;
use rcg::{Ccg, Halfspace, Norm, NormGroup, Rcg};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("golden")
        .join(name)
}

pub fn load(name: &str) -> SetDescription {
    let bytes = std::fs::read(data_path(name)).expect("data file");
    parse_set_json(&bytes).expect("valid description")
}

pub fn load_rcg(name: &str) -> Rcg {
    match load(name) {
        SetDescription::Rcg(r) => r,
        other => panic!("{name} holds a {}", other.kind()),
    }
}

pub fn load_ccg(name: &str) -> Ccg {
    match load(name) {
        SetDescription::Ccg(s) => s,
        other => panic!("{name} holds a {}", other.kind()),
    }
}

pub fn v2(x: f64, y: f64) -> DVector<f64> {
    DVector::from_vec(vec![x, y])
}

/// Coordinate-wise bounding box of a set: `|β_j| ≤ r_j` holds for every
/// p-norm group.
pub fn bounding_box(s: &Ccg, pad: f64) -> BBox {
    let mut half = [0.0; 2];
    for grp in s.groups() {
        for &j in grp.indices() {
            for (i, h) in half.iter_mut().enumerate() {
                *h += s.generators()[(i, j)].abs() * grp.radius();
            }
        }
    }
    let c = s.center();
    BBox::new(
        c[0] - half[0] - pad,
        c[0] + half[0] + pad,
        c[1] - half[1] - pad,
        c[1] + half[1] + pad,
    )
    .unwrap()
}

pub fn random_norm<R: Rng>(rng: &mut R) -> Norm {
    Norm::ALL[rng.random_range(0..3)]
}

/// Random partition of `0..m` into consecutive-free groups with random norms.
pub fn random_groups<R: Rng>(rng: &mut R, m: usize) -> Vec<NormGroup> {
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(rng);
    let mut groups = Vec::new();
    let mut rest = idx.as_slice();
    while !rest.is_empty() {
        let k = rng.random_range(1..=rest.len());
        let mut part = rest[..k].to_vec();
        part.sort_unstable();
        groups.push(NormGroup::new(part, random_norm(rng), 1.0).unwrap());
        rest = &rest[k..];
    }
    groups
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

/// Random nonempty planar CCG with `m` generators. With `constrained`, one
/// equality row is added whose right-hand side is hit by an interior point.
pub fn random_ccg<R: Rng>(rng: &mut R, m: usize, constrained: bool) -> Ccg {
    let c = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
    let g = random_matrix(rng, 2, m, 1.5);
    let groups = random_groups(rng, m);
    if !constrained {
        return Ccg::unconstrained(c, g, groups).unwrap();
    }
    // interior point: every group norm at most 1/2
    let beta0 = DVector::from_fn(m, |_, _| rng.random_range(-0.5..0.5) / m as f64);
    let a = random_matrix(rng, 1, m, 1.0);
    let b = &a * &beta0;
    Ccg::new(c, g, groups, a, b).unwrap()
}

/// Random halfspace whose boundary passes anywhere from well before to well
/// past the set, so that some cuts are empty.
pub fn random_halfspace<R: Rng>(rng: &mut R, s: &Ccg) -> Halfspace {
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let h = DVector::from_vec(vec![angle.cos(), angle.sin()]);
    let reach: f64 = s
        .groups()
        .iter()
        .map(|grp| {
            grp.indices()
                .iter()
                .map(|&j| h.dot(&s.generators().column(j)).abs())
                .sum::<f64>()
        })
        .sum();
    let f = h.dot(s.center()) + rng.random_range(-1.4..1.0) * reach;
    Halfspace::new(h, f).unwrap()
}

/// Ring with shared center and generators, 2-norm on both boundaries.
pub fn example1() -> Rcg {
    load_rcg("example1.json")
}
