mod common;

use common::{example1, golden_path, load_rcg};
use rcg::oracle::{raster_membership, BBox, Cell};
use rcg::render::{export_csv, import_csv, render_svg, RenderStyle};
use rcg::SolverConfig;

/// Coefficients of the constrained outer member of the second example, solved
/// by hand: with `t = β3`, `x = (3β1 + t, 2β2 + t)` and `β1 + β2/2 + t = 1`
/// pin `t = (1 − x1/3 − x2/4)·12/5`.
fn example2_coefficients(x: f64, y: f64) -> [f64; 3] {
    let t = (1.0 - x / 3.0 - y / 4.0) * 12.0 / 5.0;
    [(x - t) / 3.0, (y - t) / 2.0, t]
}

#[test]
fn example2_matches_golden_csv() {
    let set = load_rcg("example2.json");
    let grid = raster_membership(&set, BBox::square(5.0), 200, 200, &SolverConfig::default())
        .unwrap();
    let golden = std::fs::read(golden_path("example2.csv")).unwrap();
    assert!(export_csv(&grid) == golden, "raster differs from golden");
}

#[test]
fn example2_golden_agrees_with_hand_solution() {
    let grid = import_csv(&std::fs::read(golden_path("example2.csv")).unwrap()).unwrap();
    let mut checked = 0;
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let (x, y) = grid.cell_center(i, j);
            let excess = example2_coefficients(x, y)
                .iter()
                .fold(f64::NEG_INFINITY, |m, b| m.max(b.abs() - 1.0));
            // the hole is empty: ‖η‖₂ ≤ 0.2 rules out η1 + η3 = 1
            if excess.abs() > 1e-6 {
                checked += 1;
                assert_eq!(grid.is_member(i, j), excess < 0.0, "cell ({i}, {j}) at ({x}, {y})");
            }
        }
    }
    assert!(checked > 39_000);
    // half of the β-square, area 2, scaled by the determinant 5/2
    assert!((grid.filled_area() - 5.0).abs() < 0.1, "{}", grid.filled_area());
}

#[test]
fn ring_svg_matches_golden() {
    let grid = raster_membership(&example1(), BBox::square(3.0), 100, 100, &SolverConfig::default())
        .unwrap();
    let svg = render_svg(&[(&grid, &RenderStyle::feasible())]).unwrap();
    let golden = std::fs::read(golden_path("fig_re.svg")).unwrap();
    assert!(svg == golden, "svg differs from golden");
}

#[test]
fn golden_csv_round_trips() {
    let bytes = std::fs::read(golden_path("example2.csv")).unwrap();
    let grid = import_csv(&bytes).unwrap();
    assert_eq!((grid.nx(), grid.ny()), (200, 200));
    assert_eq!(grid.count(Cell::Band) + grid.filled_count() + grid.count(Cell::Outside), 40_000);
    assert!(export_csv(&grid) == bytes);
}
