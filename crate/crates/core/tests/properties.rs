//! Property tests of the algebra, the generator and the closed forms.

use fbnet_core::analytic::{g2_analytic, g2_analytic_general};
use fbnet_core::fock::{realize, FockSpace};
use fbnet_core::liouvillian::{build_liouvillian, steady_state_with, SolverOptions};
use fbnet_core::meanfield::cubic::{solve_cubic, thresholds};
use fbnet_core::meanfield::{dimensionless, PhysicalBase};
use fbnet_core::network::{DrivePlacement, FeedbackParams};
use fbnet_core::slh::{feedback_registry, series, Monomial, OperatorExpr, Registry, SlhTriple};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn coeff() -> impl Strategy<Value = Complex64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(re, im)| Complex64::new(re, im))
}

/// Polynomials in the three feedback modes, powers up to `max_power`.
fn expr(max_power: u32, max_terms: usize) -> impl Strategy<Value = OperatorExpr> {
    let powers = prop::collection::vec((0..=max_power, 0..=max_power), 3);
    prop::collection::vec((powers, coeff()), 0..=max_terms).prop_map(|terms| {
        let reg = feedback_registry();
        OperatorExpr::from_terms(&reg, terms.into_iter().map(|(p, c)| (Monomial::from_powers(p), c))).unwrap()
    })
}

fn hermitian(max_power: u32) -> impl Strategy<Value = OperatorExpr> {
    expr(max_power, 3).prop_map(|x| &x + &x.dagger())
}

fn triple() -> impl Strategy<Value = SlhTriple> {
    (expr(1, 3), hermitian(1), -3.0f64..3.0).prop_map(|(l, h, phase)| {
        let s = DMatrix::from_element(1, 1, Complex64::from_polar(1.0, phase));
        SlhTriple::new(s, vec![l], h).unwrap()
    })
}

fn same_triple(a: &SlhTriple, b: &SlhTriple, tol: f64) -> bool {
    (a.s() - b.s()).norm() <= tol
        && a.l().iter().zip(b.l()).all(|(x, y)| x.approx_eq(y, tol))
        && a.h().approx_eq(b.h(), tol)
}

fn params() -> impl Strategy<Value = FeedbackParams> {
    (
        (0.1f64..3.0, 0.0f64..3.0, 0.2f64..2.0, 0.0f64..1.5),
        (1.0f64..10.0, 0.01f64..0.5, 0.0f64..0.5),
        (-3.0f64..3.0, -3.0f64..3.0, 0.0f64..0.3, any::<bool>()),
    )
        .prop_map(|((kappa, kappa_f, gamma, g0), (omega_m, gamma_m, eps), (delta_s, delta_c, n_th, on_a))| FeedbackParams {
            kappa,
            kappa_f,
            gamma,
            g0,
            omega_m,
            gamma_m,
            eps,
            delta_s,
            delta_c,
            omega_d: 0.0,
            n_th,
            drive: if on_a { DrivePlacement::ControlledCavity } else { DrivePlacement::ControllerCavity },
        })
}

fn space(reg: &Registry, n: usize) -> FockSpace {
    FockSpace::from_dims(reg, &[n, n, n]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dagger_is_an_involution(x in expr(2, 4)) {
        prop_assert!(x.dagger().dagger().approx_eq(&x, 0.0));
    }

    #[test]
    fn dagger_reverses_products(x in expr(2, 3), y in expr(2, 3)) {
        let lhs = (&x * &y).dagger();
        let rhs = &y.dagger() * &x.dagger();
        prop_assert!(lhs.approx_eq(&rhs, 1e-10 * (1.0 + lhs.max_abs_coefficient())));
    }

    #[test]
    fn products_are_associative(x in expr(1, 3), y in expr(1, 3), z in expr(1, 3)) {
        let l = &(&x * &y) * &z;
        let r = &x * &(&y * &z);
        prop_assert!(l.approx_eq(&r, 1e-10 * (1.0 + l.max_abs_coefficient())));
    }

    #[test]
    fn series_is_associative(g1 in triple(), g2 in triple(), g3 in triple()) {
        let l = series(&series(&g1, &g2).unwrap(), &g3).unwrap();
        let r = series(&g1, &series(&g2, &g3).unwrap()).unwrap();
        prop_assert!(same_triple(&l, &r, 1e-10));
    }

    #[test]
    fn series_with_identity_is_neutral(g in triple()) {
        let id = SlhTriple::identity(g.registry(), 1);
        prop_assert!(same_triple(&series(&g, &id).unwrap(), &g, 1e-12));
        prop_assert!(same_triple(&series(&id, &g).unwrap(), &g, 1e-12));
    }

    #[test]
    fn realization_respects_dagger_and_sums(x in expr(2, 3), y in expr(2, 3)) {
        let sp = space(x.registry(), 3);
        let (rx, ry) = (realize(&x, &sp).unwrap(), realize(&y, &sp).unwrap());
        let dag = realize(&x.dagger(), &sp).unwrap().to_dense() - rx.adjoint().to_dense();
        prop_assert!(dag.norm() <= 1e-12 * (1.0 + rx.frobenius_norm()));
        let sum = realize(&(&x + &y), &sp).unwrap().to_dense() - rx.add(&ry).to_dense();
        prop_assert!(sum.norm() <= 1e-12 * (1.0 + rx.frobenius_norm() + ry.frobenius_norm()));
    }

    #[test]
    fn realization_is_multiplicative_below_the_cutoff(x in expr(1, 2), y in expr(1, 2)) {
        // Away from the truncation edge the truncated ladders obey the
        // canonical commutator, so products realize exactly.
        let n = 6;
        let sp = space(x.registry(), n);
        let prod = realize(&(&x * &y), &sp).unwrap().to_dense();
        let fact = realize(&x, &sp).unwrap().matmul(&realize(&y, &sp).unwrap()).to_dense();
        let reach = 2; // creation powers of x and y, at most one each.
        for j in 0..sp.dim() {
            if sp.occupations(j).iter().all(|&k| k + reach < n) {
                let diff = (prod.column(j) - fact.column(j)).norm();
                prop_assert!(diff <= 1e-10 * (1.0 + prod.column(j).norm()), "column {j}: {diff:e}");
            }
        }
    }

    #[test]
    fn general_closed_form_reduces_on_the_diagonal(d in -5.0f64..5.0, chi in 0.01f64..3.0, ka in 0.1f64..10.0, g in 0.1f64..5.0) {
        let a = g2_analytic(d, chi, ka, g);
        let b = g2_analytic_general(d, d, chi, ka, g);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn closed_form_is_scale_invariant(d in -5.0f64..5.0, chi in 0.01f64..3.0, ka in 0.1f64..10.0, g in 0.1f64..5.0, e in -3.0f64..3.0) {
        let s = 10f64.powf(e);
        let a = g2_analytic(d, chi, ka, g);
        let b = g2_analytic(s * d, s * chi, s * ka, s * g);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn closed_form_is_positive_and_coherent_without_kerr(d in -5.0f64..5.0, chi in 0.01f64..3.0, ka in 0.1f64..10.0, g in 0.1f64..5.0) {
        prop_assert!(g2_analytic(d, chi, ka, g) > 0.0);
        prop_assert!((g2_analytic(d, 0.0, ka, g) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn cubic_roots_have_small_residuals(x in 0.0f64..0.5, y in -3.0f64..3.0, z in 0.0f64..1.0) {
        let r = solve_cubic(x, y, z);
        prop_assert!(r.count() >= 1 && r.count() <= 3);
        for (&l, &res) in r.roots.iter().zip(&r.residuals) {
            prop_assert!(l >= 0.0 && res < 1e-10, "root {l} residual {res:e}");
        }
    }

    #[test]
    fn three_roots_only_above_threshold(x in 0.0f64..0.5, y in -3.0f64..3.0, z in 0.0f64..1.0) {
        let (yt, _) = thresholds(x);
        if solve_cubic(x, y, z).count() == 3 {
            prop_assert!(y >= yt - 1e-9);
        }
    }

    #[test]
    fn realized_parameters_have_the_requested_coordinates(x in 0.35f64..0.5, y in -2.0f64..3.0, z in 0.0f64..0.5) {
        let base = PhysicalBase::default();
        prop_assume!(x >= base.x_min());
        let d = dimensionless(&base.realize(x, y, z).unwrap()).unwrap();
        prop_assert!((d.x - x).abs() <= 1e-10 && (d.y - y).abs() <= 1e-10 && (d.z - z).abs() <= 1e-10, "{d:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generator_preserves_trace_and_hermiticity(p in params(), seed in any::<u64>()) {
        let sop = build_liouvillian(&p.lindblad_model([2, 3, 3]).unwrap()).unwrap();
        let d = 18;
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let x = DMatrix::from_fn(d, d, |_, _| Complex64::new(next(), next()));
        let scale = sop.frobenius_norm() * x.norm();
        let lx = sop.apply(&x);
        prop_assert!(lx.trace().norm() <= 1e-12 * scale);
        prop_assert!((sop.apply(&x.adjoint()) - lx.adjoint()).norm() <= 1e-12 * scale);
    }

    #[test]
    fn steady_states_are_physical(p in params(), iterative in any::<bool>()) {
        let dims = if iterative { [3, 3, 4] } else { [2, 2, 3] };
        let sop = build_liouvillian(&p.lindblad_model(dims).unwrap()).unwrap();
        let ss = steady_state_with(&sop, &SolverOptions::default()).unwrap();
        prop_assert!(ss.residual < 1e-9, "residual {:e}", ss.residual);
        let rho = &ss.rho;
        prop_assert!((rho.trace().re - 1.0).abs() <= 1e-9);
        prop_assert!((rho.matrix() - rho.matrix().adjoint()).norm() <= 1e-9);
        let min_eig = rho.matrix().clone().symmetric_eigenvalues().min();
        prop_assert!(min_eig >= -1e-8, "eigenvalue {min_eig:e}");
    }
}
