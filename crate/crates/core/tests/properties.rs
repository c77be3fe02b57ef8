use ncquant::expr::{parse, point, Func, Point, ScalarExpr};
use ncquant::poisson::{bracket, hamiltonian_vector_field, PoissonBivector};
use ncquant::quantize::{
    gauge_spectrum_check, quantize_observable, spectrum, AffineObservable, PhaseSpace, QuantizationParams,
};
use ncquant::so3::{structure_constants, So3Model};
use ncquant::Chart;
use proptest::prelude::*;

fn coalgebra() -> Chart {
    Chart::noncompact(&["x1", "x2", "x3"]).unwrap()
}

/// Random expressions over x1..x3 whose evaluation is safe on the sample box.
fn expr_strategy() -> impl Strategy<Value = ScalarExpr> {
    let leaf = prop_oneof![
        (-3i32..=3).prop_map(|c| ScalarExpr::Const(c as f64 * 0.5)),
        prop_oneof![Just("x1"), Just("x2"), Just("x3")].prop_map(ScalarExpr::coord),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(ScalarExpr::sum),
            prop::collection::vec(inner.clone(), 2..3).prop_map(ScalarExpr::product),
            (inner.clone(), 0i32..4).prop_map(|(b, k)| ScalarExpr::pow(b, k)),
            inner.clone().prop_map(ScalarExpr::neg),
            inner.clone().prop_map(|e| ScalarExpr::call(Func::Sin, e)),
            inner.clone().prop_map(|e| ScalarExpr::call(Func::Cos, e)),
            // Denominator bounded away from zero.
            (inner.clone(), inner.clone()).prop_map(|(n, d)| {
                ScalarExpr::quot(n, ScalarExpr::sum([ScalarExpr::Const(2.0), ScalarExpr::call(Func::Cos, d)]))
            }),
        ]
    })
}

/// Polynomials of degree ≤ 3 in x1..x3.
fn poly_strategy() -> impl Strategy<Value = ScalarExpr> {
    prop::collection::vec((-2i32..=2, 0i32..=1, 0i32..=2, 0i32..=1), 1..4).prop_map(|terms| {
        ScalarExpr::sum(
            terms
                .into_iter()
                .map(|(c, a, b, d)| {
                    ScalarExpr::product([
                        ScalarExpr::Const(c as f64),
                        ScalarExpr::pow(ScalarExpr::coord("x1"), a),
                        ScalarExpr::pow(ScalarExpr::coord("x2"), b),
                        ScalarExpr::pow(ScalarExpr::coord("x3"), d),
                    ])
                })
                .collect::<Vec<_>>(),
        )
    })
}

fn point_strategy() -> impl Strategy<Value = Point> {
    prop::array::uniform3(-1.5f64..1.5).prop_map(|x| point([("x1", x[0]), ("x2", x[1]), ("x3", x[2])]))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn lie_poisson() -> PoissonBivector {
    PoissonBivector::lie_poisson(coalgebra(), &structure_constants()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn printed_expressions_reparse_to_the_same_function(e in expr_strategy(), p in point_strategy()) {
        let back = parse(&e.to_string(), &coalgebra()).unwrap();
        prop_assert!(close(e.evaluate(&p).unwrap(), back.evaluate(&p).unwrap(), 1e-12), "{}", e);
    }

    #[test]
    fn derivative_is_linear_and_leibniz(f in expr_strategy(), g in expr_strategy(), p in point_strategy(), c in -2.0f64..2.0) {
        let lin = ScalarExpr::sum([f.clone(), ScalarExpr::product([ScalarExpr::Const(c), g.clone()])]).derivative("x2");
        let expected = f.derivative("x2").evaluate(&p).unwrap() + c * g.derivative("x2").evaluate(&p).unwrap();
        prop_assert!(close(lin.evaluate(&p).unwrap(), expected, 1e-10));
        let prod = ScalarExpr::product([f.clone(), g.clone()]).derivative("x1").evaluate(&p).unwrap();
        let leibniz = f.derivative("x1").evaluate(&p).unwrap() * g.evaluate(&p).unwrap()
            + f.evaluate(&p).unwrap() * g.derivative("x1").evaluate(&p).unwrap();
        prop_assert!(close(prod, leibniz, 1e-10));
    }

    #[test]
    fn derivative_matches_central_difference(e in expr_strategy(), p in point_strategy()) {
        let h = 1e-5;
        let shifted = |d: f64| {
            let mut q = p.clone();
            *q.get_mut("x3").unwrap() += d;
            e.evaluate(&q).unwrap()
        };
        let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
        let exact = e.derivative("x3").evaluate(&p).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "{} fd {} exact {}", e, fd, exact);
    }

    #[test]
    fn lie_poisson_bracket_axioms(f in poly_strategy(), g in poly_strategy(), h in poly_strategy(), p in point_strategy()) {
        let w = lie_poisson();
        let b = |a: &ScalarExpr, c: &ScalarExpr| bracket(a, c, &w).unwrap();
        let at = |e: &ScalarExpr| e.evaluate(&p).unwrap();
        // antisymmetry
        prop_assert!(close(at(&b(&f, &g)), -at(&b(&g, &f)), 1e-12));
        // Leibniz
        let gh = ScalarExpr::product([g.clone(), h.clone()]);
        prop_assert!(close(at(&b(&f, &gh)), at(&g) * at(&b(&f, &h)) + at(&h) * at(&b(&f, &g)), 1e-10));
        // Jacobi
        let jac = at(&b(&f, &b(&g, &h))) + at(&b(&g, &b(&h, &f))) + at(&b(&h, &b(&f, &g)));
        prop_assert!(jac.abs() < 1e-9 * (1.0 + at(&b(&f, &b(&g, &h))).abs()));
    }

    #[test]
    fn hamiltonian_vector_field_applies_the_bracket(f in poly_strategy(), g in expr_strategy(), p in point_strategy()) {
        let w = lie_poisson();
        let v = hamiltonian_vector_field(&f, &w).unwrap();
        prop_assert!(close(v.apply(&g).unwrap().evaluate(&p).unwrap(), bracket(&f, &g, &w).unwrap().evaluate(&p).unwrap(), 1e-10));
    }

    #[test]
    fn casimir_brackets_vanish_on_random_points(g in poly_strategy(), p in point_strategy()) {
        let m = So3Model::new(1.0).unwrap();
        prop_assume!(p.values().map(|x| x * x).sum::<f64>() > 1e-2);
        let b = bracket(&m.casimir, &g, &m.lie_poisson).unwrap();
        prop_assert!(b.evaluate(&p).unwrap().abs() < 1e-10);
    }
}

fn canonical(kmax: usize, points: usize, lambda: f64) -> QuantizationParams {
    QuantizationParams::uniform(PhaseSpace::canonical(), kmax, points, 6.0).unwrap().with_lambda(vec![lambda]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quantization_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -3.0f64..3.0, lambda in -1.0f64..1.0) {
        let params = canonical(3, 15, lambda);
        let ps = &params.phase_space;
        let f = AffineObservable::parse(&format!("{:?}*sin(alpha)*J + q*p + {:?}", a, b), ps).unwrap();
        let g = AffineObservable::parse("cos(q)*p + cos(2*alpha) + J", ps).unwrap();
        let sum = AffineObservable::from_expr(&(f.to_expr() + ScalarExpr::Const(c) * g.to_expr()), ps).unwrap();
        let lhs = quantize_observable(&sum, &params).unwrap();
        let rhs = quantize_observable(&f, &params).unwrap().matrix()
            .add(&quantize_observable(&g, &params).unwrap().matrix().scale_real(c));
        prop_assert!(lhs.matrix().max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn real_trig_coefficients_give_hermitian_operators(c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, lambda in -1.0f64..1.0) {
        let params = canonical(3, 15, lambda);
        let src = format!("({:?}*cos(alpha) + {:?}*sin(2*alpha))*J + sin(q)*p + cos(alpha + q)", c1, c2);
        let op = quantize_observable(&AffineObservable::parse(&src, &params.phase_space).unwrap(), &params).unwrap();
        prop_assert!(op.matrix().hermiticity_residual() < 1e-12);
    }

    #[test]
    fn action_spectrum_is_shifted_integers(lambda in -3.0f64..3.0, kmax in 1usize..6) {
        let params = canonical(kmax, 3, lambda).restrict(["J"]);
        let j = quantize_observable(&AffineObservable::action(&params.phase_space, "J").unwrap(), &params).unwrap();
        let levels = spectrum(&j, None).unwrap();
        let expected: Vec<f64> = (-(kmax as i64)..=kmax as i64).map(|n| n as f64 - lambda).collect();
        prop_assert_eq!(levels.iter().map(|l| l.value).collect::<Vec<_>>(), expected);
        prop_assert!(levels.iter().all(|l| l.mult == 1));
    }

    #[test]
    fn integer_gauge_shifts_match_on_the_window(lambda in -0.99f64..0.99, shift in -3i64..=3, kmax in 4usize..7) {
        let params = canonical(kmax, 3, 0.0).restrict(["J"]);
        let r = gauge_spectrum_check(lambda, lambda + shift as f64, &params).unwrap();
        prop_assert!(r.agree && r.integer_difference);
        prop_assert_eq!(r.matched, 2 * (kmax - shift.unsigned_abs() as usize) + 1);
    }
}
