use std::cmp::Reverse;
use std::collections::BTreeMap;

use super::observable::action_operators;
use super::{DiscreteOperator, PhaseSpace, QuantizationParams, QuantizeError, Result, SparseMatrix};
use crate::expr::ScalarExpr;
use crate::poisson::PoissonError;

/// Highest total degree accepted by [`hamiltonian_operator`].
pub const MAX_DEGREE: u32 = 8;

/// Real polynomial in the action variables, keyed by exponent vectors in
/// phase-space pair order.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionPolynomial {
    actions: Vec<String>,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl ActionPolynomial {
    fn constant(actions: &[String], c: f64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(vec![0; actions.len()], c);
        }
        ActionPolynomial { actions: actions.to_vec(), terms }
    }

    fn add(mut self, other: &ActionPolynomial) -> Self {
        for (e, c) in &other.terms {
            *self.terms.entry(e.clone()).or_default() += c;
        }
        self.terms.retain(|_, c| *c != 0.0);
        self
    }

    fn mul(&self, other: &ActionPolynomial) -> Self {
        let mut out = ActionPolynomial::constant(&self.actions, 0.0);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                *out.terms.entry(e).or_default() += c1 * c2;
            }
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    fn scale(mut self, c: f64) -> Self {
        self.terms.values_mut().for_each(|v| *v *= c);
        self.terms.retain(|_, c| *c != 0.0);
        self
    }

    /// Converts an expression built from the actions with `+ − ×`, non-negative
    /// integer powers and constant subexpressions.
    pub fn from_expr(e: &ScalarExpr, phase_space: &PhaseSpace) -> Result<Self> {
        let actions: Vec<String> = phase_space.pairs().iter().map(|p| p.action.clone()).collect();
        for name in e.coordinates() {
            if phase_space.is_angle(&name) {
                return Err(QuantizeError::UnknownAction(name));
            }
            if !phase_space.is_action(&name) {
                return Err(PoissonError::CoordinateMismatch(name).into());
            }
        }
        let poly = convert(e, &actions)?;
        if poly.degree() > MAX_DEGREE {
            return Err(QuantizeError::DegreeTooHigh { degree: poly.degree(), max: MAX_DEGREE });
        }
        Ok(poly)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    /// Monomials as `(exponents, coefficient)`, constant first, then by
    /// increasing degree with earlier actions first within a degree.
    pub fn terms(&self) -> Vec<(&[u32], f64)> {
        let mut out: Vec<(&[u32], f64)> = self.terms.iter().map(|(e, &c)| (e.as_slice(), c)).collect();
        out.sort_by_key(|(e, _)| (e.iter().sum::<u32>(), Reverse(e.to_vec())));
        out
    }

    pub fn depends_on(&self, action: &str) -> bool {
        match self.actions.iter().position(|a| a == action) {
            Some(i) => self.terms.keys().any(|e| e[i] > 0),
            None => false,
        }
    }
}

fn convert(e: &ScalarExpr, actions: &[String]) -> Result<ActionPolynomial> {
    let not_poly = || QuantizeError::NotPolynomial(e.to_string());
    if e.coordinates().is_empty() {
        return Ok(ActionPolynomial::constant(actions, e.eval_with(&|_| None)?));
    }
    Ok(match e {
        ScalarExpr::Const(c) => ActionPolynomial::constant(actions, *c),
        ScalarExpr::Coord(name) => {
            let i = actions.iter().position(|a| a == name).ok_or_else(not_poly)?;
            let mut exps = vec![0; actions.len()];
            exps[i] = 1;
            ActionPolynomial { actions: actions.to_vec(), terms: BTreeMap::from([(exps, 1.0)]) }
        }
        ScalarExpr::Sum(terms) => {
            let mut acc = ActionPolynomial::constant(actions, 0.0);
            for t in terms {
                acc = acc.add(&convert(t, actions)?);
            }
            acc
        }
        ScalarExpr::Product(factors) => {
            let mut acc = ActionPolynomial::constant(actions, 1.0);
            for f in factors {
                acc = acc.mul(&convert(f, actions)?);
            }
            acc
        }
        ScalarExpr::Pow(base, k) => {
            if *k < 0 {
                return Err(not_poly());
            }
            let b = convert(base, actions)?;
            if b.degree() * (*k as u32) > MAX_DEGREE {
                return Err(QuantizeError::DegreeTooHigh { degree: b.degree() * *k as u32, max: MAX_DEGREE });
            }
            (0..*k).fold(ActionPolynomial::constant(actions, 1.0), |acc, _| acc.mul(&b))
        }
        ScalarExpr::Neg(inner) => convert(inner, actions)?.scale(-1.0),
        ScalarExpr::Quot(num, den) => {
            if !den.coordinates().is_empty() {
                return Err(not_poly());
            }
            let d = den.eval_with(&|_| None)?;
            if d == 0.0 {
                return Err(crate::expr::EvalError::DivisionByZero { subexpr: e.to_string() }.into());
            }
            convert(num, actions)?.scale(1.0 / d)
        }
        ScalarExpr::Call(..) => return Err(not_poly()),
    })
}

fn polynomial_operator(poly: &ActionPolynomial, params: &QuantizationParams, description: String) -> DiscreteOperator {
    let dim = params.basis().dim();
    let p_hats = action_operators(params);
    let mut op = SparseMatrix::zeros(dim);
    for (exps, c) in poly.terms() {
        let monomial = exps
            .iter()
            .zip(&p_hats)
            .filter(|(&e, _)| e > 0)
            .flat_map(|(&e, p)| std::iter::repeat_n(p, e as usize))
            .fold(None, |acc: Option<SparseMatrix>, p| Some(acc.map_or_else(|| p.clone(), |m| m.mul(p))))
            .unwrap_or_else(|| SparseMatrix::identity(dim));
        op = op.add(&monomial.scale_real(c));
    }
    DiscreteOperator::new(op, params.clone(), description)
}

/// `H(P̂)` for a polynomial in the actions: block-diagonal in the Fourier
/// modes, with torus actions replaced by `n_μ − λ_μ` and noncompact ones by
/// central differences.
pub fn hamiltonian_operator(h: &ScalarExpr, params: &QuantizationParams) -> Result<DiscreteOperator> {
    params.validate()?;
    let poly = ActionPolynomial::from_expr(h, &params.phase_space)?;
    Ok(polynomial_operator(&poly, params, h.to_string()))
}

/// Same construction as [`hamiltonian_operator`], for a Casimir written in the actions.
pub fn casimir_operator(c: &ScalarExpr, params: &QuantizationParams) -> Result<DiscreteOperator> {
    hamiltonian_operator(c, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::quantize::{quantize_observable, AffineObservable};

    fn so3_params(kmax: usize, lambda: f64) -> QuantizationParams {
        QuantizationParams::uniform(PhaseSpace::so3().restrict(["r"]), kmax, 3, 1.0)
            .unwrap()
            .with_lambda(vec![lambda])
            .unwrap()
    }

    #[test]
    fn polynomial_conversion() {
        let ps = PhaseSpace::canonical();
        let e = parse("(J + 1)^2 / 2 - p*J", &ps.chart()).unwrap();
        let poly = ActionPolynomial::from_expr(&e, &ps).unwrap();
        assert_eq!(poly.degree(), 2);
        let terms: Vec<(Vec<u32>, f64)> = poly.terms().into_iter().map(|(e, c)| (e.to_vec(), c)).collect();
        assert_eq!(terms, vec![(vec![0, 0], 0.5), (vec![1, 0], 1.0), (vec![2, 0], 0.5), (vec![1, 1], -1.0)]);
        let bad = |s: &str| ActionPolynomial::from_expr(&parse(s, &ps.chart()).unwrap(), &ps);
        assert!(matches!(bad("sin(J)"), Err(QuantizeError::NotPolynomial(_))));
        assert!(matches!(bad("1/J"), Err(QuantizeError::NotPolynomial(_))));
        assert!(matches!(bad("J^-1"), Err(QuantizeError::NotPolynomial(_))));
        assert!(matches!(bad("J*alpha"), Err(QuantizeError::UnknownAction(_))));
        assert!(matches!(bad("J^9"), Err(QuantizeError::DegreeTooHigh { degree: 9, max: 8 })));
        assert!(matches!(bad("(J*p)^5"), Err(QuantizeError::DegreeTooHigh { .. })));
        assert_eq!(bad("sqrt(4)*J").unwrap().terms()[0].1, 2.0);
    }

    #[test]
    fn spherical_top_is_diagonal_with_closed_form_entries() {
        for (lambda, inertia) in [(0.0, 1.0), (0.5, 2.0), (0.25, 0.7)] {
            let p = so3_params(3, lambda);
            let h = parse(&format!("0.5*{:?}*r^2", inertia), &p.phase_space.chart()).unwrap();
            let op = hamiltonian_operator(&h, &p).unwrap();
            assert!(op.matrix().is_diagonal());
            for (i, v) in op.matrix().diagonal().iter().enumerate() {
                let k = i as f64 - 3.0;
                assert!((v.re - 0.5 * inertia * (k - lambda).powi(2)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn casimir_entries_and_commutation() {
        let p = so3_params(4, 0.25);
        let c = casimir_operator(&parse("r", &p.phase_space.chart()).unwrap(), &p).unwrap();
        let diag: Vec<f64> = c.matrix().diagonal().iter().map(|v| v.re).collect();
        assert_eq!(diag, (-4..=4).map(|k| k as f64 - 0.25).collect::<Vec<_>>());
        let h = hamiltonian_operator(&parse("0.5*r^2", &p.phase_space.chart()).unwrap(), &p).unwrap();
        assert!(h.matrix().commutator(c.matrix()).column_sum_norm(|_| true) < 1e-12);
    }

    #[test]
    fn affine_hamiltonian_matches_quantized_observable() {
        let p = QuantizationParams::uniform(PhaseSpace::canonical(), 2, 11, 3.0).unwrap().with_lambda(vec![0.3]).unwrap();
        for src in ["2*J - 0.5*p + 3", "J", "-1.5*p", "0.25"] {
            let e = parse(src, &p.phase_space.chart()).unwrap();
            let h = hamiltonian_operator(&e, &p).unwrap();
            let f = quantize_observable(&AffineObservable::from_expr(&e, &p.phase_space).unwrap(), &p).unwrap();
            assert_eq!(h.matrix().max_abs_diff(f.matrix()), 0.0, "{}", src);
        }
    }

    #[test]
    fn noncompact_action_squared_is_block_diagonal() {
        let p = QuantizationParams::uniform(PhaseSpace::canonical(), 2, 11, 3.0).unwrap();
        let op = hamiltonian_operator(&parse("p^2 + J^2", &p.phase_space.chart()).unwrap(), &p).unwrap();
        assert!(op.is_block_diagonal());
        assert!(!op.matrix().is_diagonal());
        assert!(op.matrix().hermiticity_residual() < 1e-14);
    }
}
