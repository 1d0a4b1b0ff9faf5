use std::sync::Arc;

use freebound::solver::{exact_small_oracle, kkt_residual, solve};
use freebound::{BoundaryData, DomainSpec, Grid, Method, SolveOptions, SourceTerm};
use proptest::prelude::*;

fn tight(omega: f64) -> SolveOptions {
    SolveOptions {
        method: Method::ProjectedSor { omega },
        tol_residual: Some(1e-11),
        max_iters: Some(100_000),
        ..SolveOptions::default()
    }
}

fn interval(res: usize) -> Arc<Grid> {
    Arc::new(Grid::new(DomainSpec::interval(0.0, 1.0), res).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Larger data gives a larger minimizer.
    #[test]
    fn comparison_principle(
        f1 in -4.0f64..4.0,
        df in 0.0f64..3.0,
        g1 in 0.0f64..1.0,
        dg in 0.0f64..0.5,
        res in 9usize..40,
    ) {
        let grid = interval(res);
        let lo = solve(&grid, &SourceTerm::constant(f1, 1), &BoundaryData::Constant(g1), &tight(1.5)).unwrap();
        let hi = solve(&grid, &SourceTerm::constant(f1 + df, 1), &BoundaryData::Constant(g1 + dg), &tight(1.5)).unwrap();
        prop_assert!(lo.converged && hi.converged);
        for (a, b) in lo.u.values().iter().zip(hi.u.values()) {
            prop_assert!(*a <= *b + 1e-9);
        }
    }

    #[test]
    fn sor_reaches_the_enumerated_minimizer(
        f in -5.0f64..5.0,
        g0 in 0.0f64..1.0,
        g1 in 0.0f64..1.0,
        res in 3usize..14,
    ) {
        let grid = interval(res);
        let src = SourceTerm::constant(f, 1);
        let bc = BoundaryData::Function(Arc::new(move |x| g0 + (g1 - g0) * x[0]));
        let exact = exact_small_oracle(&grid, &src, &bc).unwrap();
        let rep = solve(&grid, &src, &bc, &tight(1.2)).unwrap();
        prop_assert!(exact.sup_distance(&rep.u) < 1e-9);
    }
}

#[test]
fn energy_never_increases_along_sweeps() {
    let grid = Arc::new(Grid::new(DomainSpec::square(-1.0, 1.0), 33).unwrap());
    let f = SourceTerm::constant(-3.0, 2);
    for omega in [0.7, 1.0, 1.6, 1.9] {
        let rep = solve(&grid, &f, &BoundaryData::Constant(0.3), &tight(omega)).unwrap();
        assert!(rep.converged);
        for w in rep.energy_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "omega {omega}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn converged_solution_satisfies_complementarity() {
    let grid = Arc::new(Grid::new(DomainSpec::disc([0.0, 0.0], 1.0), 49).unwrap());
    let f = SourceTerm::constant(-4.0, 2);
    let rep = solve(&grid, &f, &BoundaryData::Constant(0.5), &SolveOptions::default()).unwrap();
    assert!(rep.converged);
    assert!(rep.u.values().iter().all(|v| *v >= 0.0));
    assert!(kkt_residual(&rep.u, &f) < 1e-8);
    // the centre is far enough from the boundary to be in the zero set
    let k = grid.nearest_node([0.0, 0.0]);
    assert_eq!(rep.u.value(k), 0.0);
}
