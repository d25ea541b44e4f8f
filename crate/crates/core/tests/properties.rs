use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use fpqsdc::config::Config;
use fpqsdc::linalg::{hermitian_eigen, CMatrix};
use fpqsdc::lp::{solve_lp, LpProblem, LpStatus, RowKind, Sense};
use fpqsdc::params::{SourceParams, SystemParams};
use fpqsdc::pipeline::{evaluate, EvalOptions};
use fpqsdc::quadrature::QuadratureSpec;
use fpqsdc::source::{Basis, IntensityClass, SelectionInterval};
use fpqsdc::states::{density_matrix, trace_distance, MatrixMode};

fn hermitian(dim: usize, raw: &[f64]) -> CMatrix {
    CMatrix::from_fn(dim, |r, c| {
        let k = 2 * (r.min(c) * dim + r.max(c));
        if r == c {
            Complex64::new(raw[k], 0.0)
        } else if r < c {
            Complex64::new(raw[k], raw[k + 1])
        } else {
            Complex64::new(raw[k], -raw[k + 1])
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eigen_residual_is_tiny(dim in 1usize..=11, raw in prop::collection::vec(-5.0f64..5.0, 242)) {
        let m = hermitian(dim, &raw);
        let e = hermitian_eigen(&m).unwrap();
        prop_assert!(e.residual(&m) <= 1e-10 * m.frobenius().max(1.0));
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let trace: f64 = e.values.iter().sum();
        prop_assert!((trace - m.trace().re).abs() <= 1e-10 * m.frobenius().max(1.0));
    }

    #[test]
    fn lp_two_variables_matches_vertex_enumeration(
        c in prop::array::uniform2(-2.0f64..2.0),
        a in prop::array::uniform2(0.1f64..2.0),
        b in 0.2f64..3.0,
    ) {
        // max c.x s.t. a.x <= b, 0 <= x <= 1
        let mut p = LpProblem::new("t", Sense::Maximize);
        let x0 = p.add_var("x0", 0.0, 1.0, c[0]);
        let x1 = p.add_var("x1", 0.0, 1.0, c[1]);
        p.add_row("cap", vec![(x0, a[0]), (x1, a[1])], RowKind::Le, b);
        let sol = solve_lp(&p);
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        let mut best = f64::NEG_INFINITY;
        let cands = [0.0, 1.0, b / a[0], (b - a[1]) / a[0]];
        for &u in &cands {
            for &v in &[0.0, 1.0, b / a[1], (b - a[0] * u) / a[1]] {
                if (0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v) && a[0] * u + a[1] * v <= b + 1e-12 {
                    best = best.max(c[0] * u + c[1] * v);
                }
            }
        }
        prop_assert!((sol.objective - best).abs() <= 1e-9, "{} vs {}", sol.objective, best);
        prop_assert!(p.max_violation(&sol.x) <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trace_distances_are_metric(
        i in 0.02f64..0.3,
        dx in 0.01f64..0.15,
        n in 1usize..6,
        basis in prop::sample::select(vec![Basis::X, Basis::Y, Basis::Z]),
    ) {
        let s = SourceParams::new(i, dx * PI, dx * PI);
        let spec = QuadratureSpec::default();
        let rho: Vec<_> = IntensityClass::ALL
            .iter()
            .map(|&c| density_matrix(&s, &SelectionInterval::for_basis(&s, basis, c), n, MatrixMode::Full, &spec).unwrap())
            .collect();
        let d = |a: usize, b: usize| trace_distance(&rho[a], &rho[b]).unwrap();
        for a in 0..3 {
            prop_assert!(d(a, a) <= 1e-12);
            prop_assert!((rho[a].trace() - 1.0).abs() <= 1e-12);
            for b in 0..3 {
                prop_assert!((d(a, b) - d(b, a)).abs() <= 1e-12);
                prop_assert!(d(a, b) <= 2.0 + 1e-12);
                for c in 0..3 {
                    prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn capacities_are_clamped_and_x_equals_y(
        i in 0.01f64..0.3,
        dx in 0.01f64..0.15,
        dz in 0.01f64..0.15,
        db in 0.0f64..12.0,
    ) {
        let s = SourceParams::new(i, dx * PI, dz * PI);
        let r = evaluate(&SystemParams::default(), &s, db, &EvalOptions::default()).unwrap();
        for b in &r.bases {
            prop_assert!(b.capacity >= 0.0);
            prop_assert!(b.capacity >= b.margin - 1e-18);
        }
        let (x, y) = (r.basis(Basis::X).unwrap(), r.basis(Basis::Y).unwrap());
        prop_assert!((x.capacity - y.capacity).abs() <= 1e-9 * x.capacity.max(1e-300));
    }
}

#[test]
fn config_round_trips() {
    let mut c = Config::default();
    c.params.n_cut = 9;
    c.source.i_vac = Some(0.003);
    c.mode = MatrixMode::PaperDiagonal;
    assert_eq!(Config::from_json(&c.to_json()).unwrap(), c);
}

#[test]
fn rate_decreases_with_attenuation() {
    let s = SourceParams::new(0.0895, 0.049 * PI, 0.0546 * PI);
    let opts = EvalOptions {
        mirror_y: true,
        ..Default::default()
    };
    let mut last = f64::INFINITY;
    for k in 0..10 {
        let r = evaluate(&SystemParams::default(), &s, 0.5 * k as f64, &opts).unwrap();
        assert!(r.rate <= last);
        last = r.rate;
    }
}
