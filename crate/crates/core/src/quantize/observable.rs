use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{Basis, DiscreteOperator, PhaseSpace, QuantizationParams, QuantizeError, Result, SparseMatrix};
use crate::expr::{parse, ScalarExpr};
use crate::poisson::{bracket, PoissonError};

/// Samples per periodic angle used to read off Fourier coefficients. Harmonics
/// up to `FOURIER_SAMPLES / 2 - 2` are accepted.
const FOURIER_SAMPLES: usize = 32;

/// `f = Σ_c a^c P_c + b` with `a^c`, `b` functions of the angles only.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineObservable {
    phase_space: PhaseSpace,
    coefficients: Vec<ScalarExpr>,
    constant: ScalarExpr,
}

impl AffineObservable {
    /// Splits `f` into its action coefficients and angle-only remainder, rejecting
    /// expressions whose action derivatives still depend on an action.
    pub fn from_expr(f: &ScalarExpr, phase_space: &PhaseSpace) -> Result<Self> {
        let chart = phase_space.chart();
        f.check_chart(&chart).map_err(PoissonError::CoordinateMismatch)?;
        let mut coefficients = Vec::with_capacity(phase_space.pairs().len());
        for pair in phase_space.pairs() {
            let a = f.derivative(&pair.action);
            if let Some(p) = phase_space.pairs().iter().find(|p| a.mentions(&p.action)) {
                return Err(QuantizeError::NotAffine { action: p.action.clone(), expr: f.to_string() });
            }
            coefficients.push(a);
        }
        let constant = phase_space
            .pairs()
            .iter()
            .fold(f.clone(), |acc, p| acc.substitute(&p.action, &ScalarExpr::zero()));
        Ok(AffineObservable { phase_space: phase_space.clone(), coefficients, constant })
    }

    pub fn parse(src: &str, phase_space: &PhaseSpace) -> Result<Self> {
        let e = parse(src, &phase_space.chart())?;
        AffineObservable::from_expr(&e, phase_space)
    }

    /// The bare action variable `P_c`.
    pub fn action(phase_space: &PhaseSpace, action: &str) -> Result<Self> {
        if !phase_space.is_action(action) {
            return Err(QuantizeError::UnknownAction(action.to_string()));
        }
        AffineObservable::from_expr(&ScalarExpr::coord(action), phase_space)
    }

    /// Multiplication by a function of the angles.
    pub fn function(phase_space: &PhaseSpace, b: ScalarExpr) -> Result<Self> {
        AffineObservable::from_expr(&b, phase_space)
    }

    pub fn phase_space(&self) -> &PhaseSpace {
        &self.phase_space
    }

    pub fn coefficient(&self, action: &str) -> Option<&ScalarExpr> {
        self.phase_space.pairs().iter().position(|p| p.action == action).map(|i| &self.coefficients[i])
    }

    pub fn constant(&self) -> &ScalarExpr {
        &self.constant
    }

    pub fn to_expr(&self) -> ScalarExpr {
        let terms = self
            .phase_space
            .pairs()
            .iter()
            .zip(&self.coefficients)
            .map(|(p, a)| ScalarExpr::product([a.clone(), ScalarExpr::coord(&p.action)]))
            .chain(std::iter::once(self.constant.clone()));
        ScalarExpr::sum(terms.collect::<Vec<_>>())
    }

    /// Classical bracket under the canonical bivector; affine again.
    pub fn bracket(&self, other: &AffineObservable) -> Result<AffineObservable> {
        let b = bracket(&self.to_expr(), &other.to_expr(), &self.phase_space.bivector())?;
        AffineObservable::from_expr(&b, &self.phase_space)
    }

    pub fn is_constant(&self) -> bool {
        self.coefficients.iter().all(ScalarExpr::is_zero) && self.constant.coordinates().is_empty()
    }
}

/// Fourier coefficients `c_m` of a real function on the torus `T^r`, with
/// `f(α) = Σ_m c_m e^{i m·α}`. Rejects functions that are not finite
/// trigonometric polynomials.
fn torus_coefficients(
    eval: &dyn Fn(&[f64]) -> Result<f64>,
    rank: usize,
    label: &ScalarExpr,
) -> Result<Vec<(Vec<i64>, Complex64)>> {
    let m = FOURIER_SAMPLES;
    let total = m.pow(rank as u32);
    let angle = |j: usize| TAU * j as f64 / m as f64;
    let multi = |mut flat: usize| {
        let mut idx = vec![0usize; rank];
        for slot in idx.iter_mut().rev() {
            *slot = flat % m;
            flat /= m;
        }
        idx
    };
    let mut data = Vec::with_capacity(total);
    let mut scale: f64 = 0.0;
    for flat in 0..total {
        let alphas: Vec<f64> = multi(flat).into_iter().map(angle).collect();
        let v = eval(&alphas)?;
        scale = scale.max(v.abs());
        data.push(Complex64::new(v, 0.0));
    }
    // Separable DFT, one axis at a time.
    let twiddle: Vec<Complex64> = (0..m).map(|t| Complex64::from_polar(1.0, -angle(t))).collect();
    for axis in 0..rank {
        let stride = m.pow((rank - 1 - axis) as u32);
        let mut out = vec![Complex64::default(); total];
        for flat in 0..total {
            let pos = (flat / stride) % m;
            let base = flat - pos * stride;
            let mut acc = Complex64::default();
            for j in 0..m {
                acc += data[base + j * stride] * twiddle[(pos * j) % m];
            }
            out[flat] = acc / m as f64;
        }
        data = out;
    }
    let signed = |k: usize| if k < m / 2 { k as i64 } else { k as i64 - m as i64 };
    let tol = 1e-13 * scale;
    let coeffs: Vec<(Vec<i64>, Complex64)> = (0..total)
        .filter(|&flat| data[flat].norm() > tol)
        .map(|flat| (multi(flat).into_iter().map(signed).collect(), data[flat]))
        .collect();
    let limit = (m / 2 - 2) as i64;
    if coeffs.iter().any(|(k, _)| k.iter().any(|x| x.abs() > limit)) {
        return Err(QuantizeError::NotTrigPolynomial(label.to_string()));
    }
    // Off-grid reconstruction check.
    const GOLDEN: f64 = 0.618_033_988_749_895;
    for probe in 1..=5 {
        let alphas: Vec<f64> = (0..rank).map(|mu| TAU * ((probe as f64 * GOLDEN + mu as f64 * 0.381_966) % 1.0)).collect();
        let series: f64 = coeffs
            .iter()
            .map(|(k, c)| {
                let phase: f64 = k.iter().zip(&alphas).map(|(&ki, a)| ki as f64 * a).sum();
                (c * Complex64::from_polar(1.0, phase)).re
            })
            .sum();
        if (series - eval(&alphas)?).abs() > 1e-10 * scale.max(1.0) {
            return Err(QuantizeError::NotTrigPolynomial(label.to_string()));
        }
    }
    Ok(coeffs)
}

/// Matrix of multiplication by a real function of the angles: diagonal on the
/// grid and a truncated Fourier convolution across modes.
pub fn multiplication_operator(u: &ScalarExpr, params: &QuantizationParams) -> Result<SparseMatrix> {
    let ps = &params.phase_space;
    let basis = Basis::new(params);
    for name in u.coordinates() {
        if ps.is_action(&name) {
            return Err(QuantizeError::NotAffine { action: name, expr: u.to_string() });
        }
        if !ps.is_angle(&name) {
            return Err(PoissonError::CoordinateMismatch(name).into());
        }
    }
    if let Some(c) = u.as_const() {
        if c == 0.0 {
            return Ok(SparseMatrix::zeros(basis.dim()));
        }
        return Ok(SparseMatrix::identity(basis.dim()).scale_real(c));
    }
    let torus: Vec<&str> = ps.torus_pairs().map(|p| p.angle.as_str()).collect();
    let line: Vec<&str> = ps.line_pairs().map(|p| p.angle.as_str()).collect();
    let uses_torus = torus.iter().any(|a| u.mentions(a));
    let mut out = SparseMatrix::zeros(basis.dim());
    for g in 0..basis.grid_len() {
        let q = basis.grid_point(g);
        let eval = |alphas: &[f64]| -> Result<f64> {
            let lookup = |n: &str| {
                torus
                    .iter()
                    .position(|a| *a == n)
                    .map(|i| alphas[i])
                    .or_else(|| line.iter().position(|a| *a == n).map(|i| q[i]))
            };
            Ok(u.eval_with(&lookup)?)
        };
        if !uses_torus {
            let v = Complex64::new(eval(&vec![0.0; torus.len()])?, 0.0);
            for m in 0..basis.mode_count() {
                let i = basis.index(m, g);
                out.add_to(i, i, v);
            }
            continue;
        }
        let coeffs = torus_coefficients(&eval, torus.len(), u)?;
        for col_mode in 0..basis.mode_count() {
            let n_col = basis.mode(col_mode);
            for (shift, c) in &coeffs {
                let n_row: Vec<i64> = n_col.iter().zip(shift).map(|(a, b)| a + b).collect();
                if let Some(row_mode) = basis.mode_position(&n_row) {
                    out.add_to(basis.index(row_mode, g), basis.index(col_mode, g), *c);
                }
            }
        }
    }
    Ok(out)
}

/// `P̂` for every pair, in phase-space order: `diag(n_μ − λ_μ)` on torus
/// pairs, `−i ∂` by central differences on noncompact ones.
pub(crate) fn action_operators(params: &QuantizationParams) -> Vec<SparseMatrix> {
    let basis = Basis::new(params);
    let (mut mu, mut axis) = (0, 0);
    params
        .phase_space
        .pairs()
        .iter()
        .map(|p| {
            if p.periodic {
                let lambda = params.lambda[mu];
                let diag: Vec<Complex64> =
                    basis.mode_numbers(mu).into_iter().map(|n| Complex64::new(n - lambda, 0.0)).collect();
                mu += 1;
                SparseMatrix::from_diagonal(&diag)
            } else {
                let d = basis.central_difference(axis);
                axis += 1;
                d.scale(Complex64::new(0.0, -1.0))
            }
        })
        .collect()
}

/// Operator of an affine observable: `Σ_c ½ (a^c P̂_c + P̂_c a^c) + b`.
pub fn quantize_observable(f: &AffineObservable, params: &QuantizationParams) -> Result<DiscreteOperator> {
    params.validate()?;
    let ps = &params.phase_space;
    for pair in f.phase_space().pairs() {
        let a = f.coefficient(&pair.action).expect("own pair");
        if !a.is_zero() && !ps.is_action(&pair.action) {
            return Err(QuantizeError::UnknownAction(pair.action.clone()));
        }
    }
    let mut op = multiplication_operator(f.constant(), params)?;
    let actions = action_operators(params);
    for (pair, p_hat) in ps.pairs().iter().zip(&actions) {
        let Some(a) = f.coefficient(&pair.action) else { continue };
        if a.is_zero() {
            continue;
        }
        let ma = multiplication_operator(a, params)?;
        op = op.add(&ma.mul(p_hat).add(&p_hat.mul(&ma)).scale_real(0.5));
    }
    Ok(DiscreteOperator::new(op, params.clone(), f.to_expr().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::PhaseSpace;

    fn torus_params(k: usize, lambda: f64) -> QuantizationParams {
        QuantizationParams::uniform(PhaseSpace::canonical().restrict(["J"]), k, 3, 1.0)
            .unwrap()
            .with_lambda(vec![lambda])
            .unwrap()
    }

    fn line_params(n: usize) -> QuantizationParams {
        QuantizationParams::uniform(PhaseSpace::canonical().restrict(["p"]), 1, n, 10.0).unwrap()
    }

    #[test]
    fn affine_decomposition() {
        let ps = PhaseSpace::canonical();
        let f = AffineObservable::parse("sin(alpha)*J + q^2*p + cos(q)", &ps).unwrap();
        assert_eq!(f.coefficient("J").unwrap().to_string(), "sin(alpha)");
        assert_eq!(f.constant().to_string(), "cos(q)");
        assert!(matches!(AffineObservable::parse("J^2", &ps), Err(QuantizeError::NotAffine { .. })));
        assert!(matches!(AffineObservable::parse("J*p", &ps), Err(QuantizeError::NotAffine { .. })));
        assert!(AffineObservable::parse("x1", &ps).is_err());
        assert!(matches!(AffineObservable::action(&ps, "q"), Err(QuantizeError::UnknownAction(_))));
        let g = AffineObservable::parse("sin(alpha)", &ps).unwrap();
        let j = AffineObservable::action(&ps, "J").unwrap();
        // {J, sin α} = cos α
        assert_eq!(j.bracket(&g).unwrap().constant().to_string(), "cos(alpha)");
    }

    #[test]
    fn torus_action_is_diagonal_shifted() {
        let p = torus_params(3, 0.25);
        let op = quantize_observable(&AffineObservable::action(&p.phase_space, "J").unwrap(), &p).unwrap();
        assert!(op.matrix().is_diagonal());
        let diag: Vec<f64> = op.matrix().diagonal().iter().map(|c| c.re).collect();
        assert_eq!(diag, vec![-3.25, -2.25, -1.25, -0.25, 0.75, 1.75, 2.75]);
    }

    #[test]
    fn constant_is_scaled_identity() {
        let p = QuantizationParams::uniform(PhaseSpace::canonical(), 2, 5, 1.0).unwrap();
        let op = quantize_observable(&AffineObservable::parse("2.5", &p.phase_space).unwrap(), &p).unwrap();
        assert_eq!(op.matrix(), &SparseMatrix::identity(25).scale_real(2.5));
    }

    #[test]
    fn fourier_convolution_of_trig_coefficients() {
        let p = torus_params(2, 0.0);
        let m = multiplication_operator(&parse("cos(alpha)^2", &p.phase_space.chart()).unwrap(), &p).unwrap();
        // cos² = 1/2 + (e^{2iα} + e^{-2iα})/4
        assert!((m.get(2, 2).re - 0.5).abs() < 1e-15);
        assert!((m.get(4, 2).re - 0.25).abs() < 1e-15);
        assert_eq!(m.get(3, 2), Complex64::default());
        let s = multiplication_operator(&parse("sin(alpha)", &p.phase_space.chart()).unwrap(), &p).unwrap();
        // sin α = (e^{iα} − e^{−iα}) / 2i
        assert!((s.get(3, 2) - Complex64::new(0.0, -0.5)).norm() < 1e-15);
        assert!((s.get(1, 2) - Complex64::new(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn non_trig_coefficient_rejected() {
        let p = torus_params(2, 0.0);
        let e = parse("alpha", &p.phase_space.chart()).unwrap();
        assert!(matches!(multiplication_operator(&e, &p), Err(QuantizeError::NotTrigPolynomial(_))));
        let e = parse("1/(2 + cos(alpha))", &p.phase_space.chart()).unwrap();
        assert!(matches!(multiplication_operator(&e, &p), Err(QuantizeError::NotTrigPolynomial(_))));
    }

    #[test]
    fn momentum_differentiates_gaussian_to_second_order() {
        // p̂ = −i∂ on a Gaussian against the analytic derivative, at N = 51, 101, 201
        let mut errors = Vec::new();
        for n in [51, 101, 201] {
            let p = line_params(n);
            let op = quantize_observable(&AffineObservable::action(&p.phase_space, "p").unwrap(), &p).unwrap();
            let b = p.basis();
            let psi: Vec<Complex64> =
                (0..n).map(|g| Complex64::new((-b.grid_point(g)[0].powi(2)).exp(), 0.0)).collect();
            let out = op.matrix().apply(&psi);
            let err = (2..n - 2)
                .map(|g| {
                    let x = b.grid_point(g)[0];
                    let exact = Complex64::new(0.0, 2.0 * x * (-x * x).exp());
                    (out[g] - exact).norm()
                })
                .fold(0.0, f64::max);
            errors.push(err);
        }
        for w in errors.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.8..2.2).contains(&order), "order {} from {:?}", order, errors);
        }
    }
}
