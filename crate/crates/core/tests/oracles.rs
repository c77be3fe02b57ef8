//! Reference values computed independently of the library: finite-difference
//! gradients, hand-expanded cofactors, closed-form spectra and stencil sums.

use nalgebra::DMatrix;
use ncquant::expr::parse;
use ncquant::poisson::bracket;
use ncquant::quantize::{
    hamiltonian_operator, multiplication_operator, noncommutativity_witness, spectrum, PhaseSpace, QuantizationParams,
};
use ncquant::so3::{aa_point, coalgebra_point, sample_chart_points, sample_coalgebra_points, So3Model};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let h = 1e-6;
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[i] += h;
            down[i] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

fn levi_civita(i: usize, j: usize, h: usize) -> f64 {
    match (i, j, h) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

#[test]
fn lie_poisson_bracket_matches_finite_difference_oracle() {
    let m = So3Model::new(1.0).unwrap();
    let chart = &m.coalgebra_chart;
    let f = parse("x1^2*x2 - 3*x3 + x1*x3", chart).unwrap();
    let g = parse("sin(x2) + x1*x2*x3", chart).unwrap();
    let b = bracket(&f, &g, &m.lie_poisson).unwrap();
    let eval = |e: &ncquant::ScalarExpr| {
        let e = e.clone();
        move |x: &[f64]| e.evaluate(&coalgebra_point([x[0], x[1], x[2]])).unwrap()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for x in sample_coalgebra_points(&mut rng, 50) {
        let (df, dg) = (gradient(&eval(&f), &x), gradient(&eval(&g), &x));
        let mut oracle = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for h in 0..3 {
                    oracle += levi_civita(i, j, h) * x[h] * df[i] * dg[j];
                }
            }
        }
        let got = b.evaluate(&coalgebra_point(x)).unwrap();
        assert!((got - oracle).abs() < 1e-6 * (1.0 + oracle.abs()), "{} vs {}", got, oracle);
    }
}

#[test]
fn wedge_of_integral_fields_matches_cofactor_oracle() {
    // ϑ_i^j = Σ_k W^{kj} ∂_k H_i with W = ∂r∧∂α + ∂x1∧∂γ, gradients by finite differences,
    // then the (x1, γ, α) minor expanded by hand.
    let m = So3Model::new(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for [r, x1, gamma, alpha] in sample_chart_points(&mut rng, 50) {
        let x = [r, x1, gamma, alpha];
        let fields: Vec<[f64; 4]> = m
            .integrals_aa
            .iter()
            .map(|h| {
                let grad = gradient(&|y: &[f64]| h.evaluate(&aa_point(y[0], y[1], y[2], y[3])).unwrap(), &x);
                // (∂r, ∂x1, ∂γ, ∂α) components: W^{r α} = 1, W^{x1 γ} = 1
                [-grad[3], -grad[2], grad[1], grad[0]]
            })
            .collect();
        let c = |i: usize, j: usize| fields[i][j];
        let det = c(0, 1) * (c(1, 2) * c(2, 3) - c(1, 3) * c(2, 2)) - c(0, 2) * (c(1, 1) * c(2, 3) - c(1, 3) * c(2, 1))
            + c(0, 3) * (c(1, 1) * c(2, 2) - c(1, 2) * c(2, 1));
        assert!((det.abs() - r).abs() < 1e-6, "det {} r {}", det, r);
    }
}

#[test]
fn spherical_top_spectrum_matches_closed_form() {
    for (lambda, inertia, kmax) in [(0.0, 1.0, 3), (0.5, 2.0, 3), (0.25, 1.0, 4), (1.0, 0.5, 5)] {
        let params = QuantizationParams::uniform(PhaseSpace::so3().restrict(["r"]), kmax, 3, 1.0)
            .unwrap()
            .with_lambda(vec![lambda])
            .unwrap();
        let h = hamiltonian_operator(&So3Model::new(inertia).unwrap().hamiltonian(), &params).unwrap();
        let mut oracle: Vec<f64> =
            (-(kmax as i64)..=kmax as i64).map(|k| 0.5 * inertia * (k as f64 - lambda).powi(2)).collect();
        oracle.sort_by(f64::total_cmp);
        let got: Vec<f64> = spectrum(&h, None)
            .unwrap()
            .iter()
            .flat_map(|l| std::iter::repeat_n(l.value, l.mult))
            .collect();
        assert_eq!(got, oracle, "lambda {} inertia {}", lambda, inertia);
    }
}

#[test]
fn spec_examples_for_spherical_top_levels() {
    let params = QuantizationParams::uniform(PhaseSpace::so3().restrict(["r"]), 3, 3, 1.0).unwrap();
    let h = hamiltonian_operator(&So3Model::new(1.0).unwrap().hamiltonian(), &params).unwrap();
    let levels: Vec<(f64, usize)> = spectrum(&h, None).unwrap().iter().map(|l| (l.value, l.mult)).collect();
    assert_eq!(levels, vec![(0.0, 1), (0.5, 2), (2.0, 2), (4.5, 2)]);
}

#[test]
fn witness_matches_stencil_column_sums() {
    // ½[sin γ, −i D] has entries ∓(sin γ_i − sin γ_j)/(4h) on the off-diagonals; its
    // column sums are written out directly here.
    let (n, l) = (201, 10.0);
    let params = QuantizationParams::uniform(PhaseSpace::so3().restrict(["x1"]), 1, n, l).unwrap();
    let a = parse("sin(gamma)", &params.phase_space.chart()).unwrap();
    let w = noncommutativity_witness(&a, "x1", &params).unwrap();
    let h = 2.0 * l / (n - 1) as f64;
    let q = |j: usize| -l + j as f64 * h;
    let oracle = (2..n - 2)
        .map(|j| {
            let rows = [j - 1, j + 1].into_iter().filter(|&i| (2..n - 2).contains(&i));
            rows.map(|i| (q(i).sin() - q(j).sin()).abs() / (4.0 * h)).sum::<f64>()
        })
        .fold(0.0, f64::max);
    assert!((w.measured - oracle).abs() < 1e-12, "{} vs {}", w.measured, oracle);
    let analytic = (2..n - 2).map(|j| 0.5 * q(j).cos().abs()).fold(0.0, f64::max);
    assert!((w.analytic - analytic).abs() < 1e-15);
    assert!((w.measured - 0.5).abs() < 1e-3);
}

#[test]
fn cubic_cosine_convolution_matches_expanded_harmonics() {
    // cos³α = (3 cos α + cos 3α) / 4
    let params = QuantizationParams::uniform(PhaseSpace::canonical().restrict(["J"]), 4, 3, 1.0).unwrap();
    let m = multiplication_operator(&parse("cos(alpha)^3", &params.phase_space.chart()).unwrap(), &params).unwrap();
    let mut oracle = DMatrix::<Complex64>::zeros(9, 9);
    for col in 0..9i64 {
        for (shift, c) in [(1, 3.0 / 8.0), (-1, 3.0 / 8.0), (3, 1.0 / 8.0), (-3, 1.0 / 8.0)] {
            let row = col + shift;
            if (0..9).contains(&row) {
                oracle[(row as usize, col as usize)] = Complex64::new(c, 0.0);
            }
        }
    }
    assert!((m.to_dense() - oracle).iter().all(|d| d.norm() < 1e-15));
}

#[test]
fn multiplication_by_line_function_is_its_grid_values() {
    let params = QuantizationParams::uniform(PhaseSpace::canonical().restrict(["p"]), 1, 11, 2.0).unwrap();
    let m = multiplication_operator(&parse("q^3 - q", &params.phase_space.chart()).unwrap(), &params).unwrap();
    let b = params.basis();
    for g in 0..11 {
        let x: f64 = b.grid_point(g)[0];
        assert_eq!(m.get(g, g), Complex64::new(x.powi(3) - x, 0.0));
    }
    assert!(m.is_diagonal());
}
