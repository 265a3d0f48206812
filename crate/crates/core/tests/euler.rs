use qboltz::euler::{
    exact_riemann, exact_riemann_averages, run_euler, star_state, EulerField, Primitive,
};
use qboltz::grid::{Boundary, SpatialGrid};
use qboltz::phase_space::Conserved;

const GAMMA: f64 = 2.0;

fn sod() -> (Primitive, Primitive) {
    (
        Primitive {
            rho: 1.0,
            u: [0.0, 0.0],
            p: 1.0,
        },
        Primitive {
            rho: 0.125,
            u: [0.0, 0.0],
            p: 0.0625,
        },
    )
}

fn shock_tube_error(n_x: usize) -> f64 {
    let (l, r) = sod();
    let sgrid = SpatialGrid::new(n_x, -1.0, 1.0, Boundary::Outflow).unwrap();
    let cells: Vec<Conserved> = (0..n_x)
        .map(|i| {
            if sgrid.center(i) < 0.0 {
                l.conserved(GAMMA)
            } else {
                r.conserved(GAMMA)
            }
        })
        .collect();
    let field = EulerField::new(cells, 2).unwrap();
    let t = 0.2;
    let out = run_euler(&field, &sgrid, t, 0.4).unwrap();
    let exact = exact_riemann_averages(&l, &r, GAMMA, &sgrid, 0.0, t, 8).unwrap();
    let num: f64 = out
        .cells
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a[0] - b[0]).abs())
        .sum();
    let den: f64 = exact.iter().map(|b| b[0]).sum();
    num / den
}

#[test]
fn shock_tube_converges_to_the_exact_solution() {
    let coarse = shock_tube_error(100);
    let fine = shock_tube_error(400);
    assert!(fine < 0.01, "{fine}");
    // Discontinuities limit the rate to about first order.
    assert!(coarse / fine > 2.5, "{coarse} / {fine}");
}

#[test]
fn exact_solution_limits() {
    let (l, r) = sod();
    let (ps, us) = star_state(&l, &r, GAMMA).unwrap();
    assert!(ps > r.p && ps < l.p && us > 0.0);
    let far = exact_riemann(&l, &r, GAMMA, &[-10.0, 10.0]).unwrap();
    assert_eq!(far[0], l);
    assert_eq!(far[1], r);
    let mid = exact_riemann(&l, &r, GAMMA, &[us]).unwrap();
    assert!((mid[0].p - ps).abs() < 1e-12);
}

#[test]
fn periodic_totals_are_conserved() {
    let n = 64;
    let sgrid = SpatialGrid::new(n, 0.0, 1.0, Boundary::Periodic).unwrap();
    let cells: Vec<Conserved> = (0..n)
        .map(|i| {
            let x = sgrid.center(i);
            let rho = 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).sin();
            Primitive {
                rho,
                u: [0.3, -0.1],
                p: 1.0 + 0.2 * (4.0 * std::f64::consts::PI * x).cos(),
            }
            .conserved(GAMMA)
        })
        .collect();
    let field = EulerField::new(cells, 2).unwrap();
    let before = field.totals(sgrid.dx);
    let after = run_euler(&field, &sgrid, 0.3, 0.4)
        .unwrap()
        .totals(sgrid.dx);
    for a in 0..4 {
        assert!(
            (after[a] - before[a]).abs() <= 1e-13 * before[a].abs().max(1.0),
            "{a}"
        );
    }
}
