//! Quantization in the angle polarization.
//!
//! Wavefunctions are Fourier series in the periodic angles, `ψ = Σ_n φ_n(q) e^{i n·α}`,
//! with the coefficients `φ_n` sampled on a uniform grid over the noncompact angles.
//! An observable affine in the actions, `f = Σ_c a^c(angles) P_c + b(angles)`, is
//! represented by
//!
//! ```text
//! f̂ = Σ_c ½ (a^c P̂_c + P̂_c a^c) + b,   P̂_c = −i∂_c (noncompact),   P̂_μ = −i∂_μ − λ_μ (periodic)
//! ```
//!
//! which expands to `−i a^c ∂_c − (i/2) ∂_c a^c − a^μ λ_μ + b`. Periodic derivatives act
//! exactly on mode indices; noncompact ones are second-order central differences.

mod basis;
mod checks;
mod observable;
mod operator;
mod polynomial;
mod sparse;
mod spectrum;
mod wavefunction;

use serde::Serialize;
use thiserror::Error;

use crate::chart::{Chart, Coordinate};
use crate::expr::{EvalError, ParseError, ScalarExpr};
use crate::poisson::{PoissonBivector, PoissonError};

pub use basis::Basis;
pub use checks::{
    convergence_order, dirac_convergence, dirac_residual, noncommutativity_witness, self_adjointness_residual,
    ConvergenceReport, DiracReport, WitnessReport,
};
pub use observable::{multiplication_operator, quantize_observable, AffineObservable};
pub use operator::DiscreteOperator;
pub use polynomial::{casimir_operator, hamiltonian_operator, ActionPolynomial, MAX_DEGREE};
pub use sparse::SparseMatrix;
pub use spectrum::{
    gauge_spectrum_check, merge_levels, mode_spectrum, spectrum, GaugeReport, Level, ModeLevel, MERGE_TOLERANCE,
};
pub use wavefunction::{compact_support_battery, inner_product, WaveFunction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantizeError {
    #[error("invalid quantization parameters: {0}")]
    InvalidParams(String),
    #[error("invalid phase space: {0}")]
    InvalidPhaseSpace(String),
    #[error("`{expr}` is not affine in the action `{action}`")]
    NotAffine { action: String, expr: String },
    #[error("coefficient `{0}` is not a finite trigonometric polynomial in the periodic angles")]
    NotTrigPolynomial(String),
    #[error("`{0}` is not a polynomial in the action variables")]
    NotPolynomial(String),
    #[error("`{0}` is not an action variable of the phase space")]
    UnknownAction(String),
    #[error("polynomial degree {degree} exceeds the cap of {max}")]
    DegreeTooHigh { degree: u32, max: u32 },
    #[error("operator is not Hermitian: residual {0:e} exceeds 1e-8")]
    NotHermitian(f64),
    #[error("operator is not block-diagonal in the Fourier modes")]
    NotBlockDiagonal,
    #[error("wavefunction shapes differ ({0} vs {1})")]
    ShapeMismatch(usize, usize),
    #[error("mode truncation K = {kmax} leaves no interior band (margin {margin})")]
    NoInterior { kmax: usize, margin: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Poisson(#[from] PoissonError),
}

pub type Result<T> = std::result::Result<T, QuantizeError>;

/// An action variable and its conjugate angle, `{action, angle} = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugatePair {
    pub action: String,
    pub angle: String,
    /// Periodic angles have period 2π; the rest range over the real line.
    pub periodic: bool,
}

impl ConjugatePair {
    pub fn periodic(action: &str, angle: &str) -> Self {
        ConjugatePair { action: action.into(), angle: angle.into(), periodic: true }
    }

    pub fn noncompact(action: &str, angle: &str) -> Self {
        ConjugatePair { action: action.into(), angle: angle.into(), periodic: false }
    }
}

/// Cotangent bundle of a toroidal cylinder: canonical pairs with symplectic
/// form `Σ dP_c ∧ dθ^c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PhaseSpace {
    pairs: Vec<ConjugatePair>,
}

impl PhaseSpace {
    pub fn new(pairs: Vec<ConjugatePair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(QuantizeError::InvalidPhaseSpace("no conjugate pairs".into()));
        }
        let ps = PhaseSpace { pairs };
        ps.try_chart()?;
        Ok(ps)
    }

    /// `(J, alpha)` on the circle and `(p, q)` on the line.
    pub fn canonical() -> Self {
        PhaseSpace::new(vec![ConjugatePair::periodic("J", "alpha"), ConjugatePair::noncompact("p", "q")])
            .expect("static phase space")
    }

    /// The spherical-top action-angle chart: `(r, alpha)` on the circle, `(x1, gamma)` on the line.
    pub fn so3() -> Self {
        PhaseSpace::new(vec![ConjugatePair::periodic("r", "alpha"), ConjugatePair::noncompact("x1", "gamma")])
            .expect("static phase space")
    }

    pub fn pairs(&self) -> &[ConjugatePair] {
        &self.pairs
    }

    pub fn torus_pairs(&self) -> impl Iterator<Item = &ConjugatePair> {
        self.pairs.iter().filter(|p| p.periodic)
    }

    pub fn line_pairs(&self) -> impl Iterator<Item = &ConjugatePair> {
        self.pairs.iter().filter(|p| !p.periodic)
    }

    pub fn torus_rank(&self) -> usize {
        self.torus_pairs().count()
    }

    pub fn is_action(&self, name: &str) -> bool {
        self.pairs.iter().any(|p| p.action == name)
    }

    pub fn is_angle(&self, name: &str) -> bool {
        self.pairs.iter().any(|p| p.angle == name)
    }

    fn try_chart(&self) -> Result<Chart> {
        let mut coords: Vec<Coordinate> = self.pairs.iter().map(|p| Coordinate::action(&p.action)).collect();
        coords.extend(self.pairs.iter().map(|p| {
            if p.periodic {
                Coordinate::periodic(&p.angle, std::f64::consts::TAU)
            } else {
                Coordinate::noncompact(&p.angle)
            }
        }));
        Chart::new(coords).map_err(|e| QuantizeError::InvalidPhaseSpace(e.to_string()))
    }

    /// Chart listing all actions, then all angles.
    pub fn chart(&self) -> Chart {
        self.try_chart().expect("validated on construction")
    }

    /// The canonical bivector `Σ ∂_{P_c} ∧ ∂_{θ^c}`.
    pub fn bivector(&self) -> PoissonBivector {
        let terms: Vec<_> =
            self.pairs.iter().map(|p| (p.action.as_str(), p.angle.as_str(), ScalarExpr::one())).collect();
        PoissonBivector::from_wedges(self.chart(), &terms).expect("chart holds every pair")
    }

    /// Sub-phase-space of the pairs whose action or angle is named in `names`.
    /// Falls back to the first periodic pair (or the first pair) when nothing matches.
    pub fn restrict<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> PhaseSpace {
        let names: Vec<&str> = names.into_iter().collect();
        let mut pairs: Vec<ConjugatePair> = self
            .pairs
            .iter()
            .filter(|p| names.contains(&p.action.as_str()) || names.contains(&p.angle.as_str()))
            .cloned()
            .collect();
        if pairs.is_empty() {
            pairs.push(self.torus_pairs().next().unwrap_or(&self.pairs[0]).clone());
        }
        PhaseSpace { pairs }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }
}

/// Truncation and gauge data for one quantization. `ħ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantizationParams {
    pub phase_space: PhaseSpace,
    /// One flat-connection parameter per periodic pair, stored as given.
    pub lambda: Vec<f64>,
    /// Fourier truncation: modes with `|n_μ| ≤ kmax`.
    pub kmax: usize,
    /// One grid per noncompact pair.
    pub grid: Vec<GridSpec>,
}

impl QuantizationParams {
    pub fn new(phase_space: PhaseSpace, lambda: Vec<f64>, kmax: usize, grid: Vec<GridSpec>) -> Result<Self> {
        let p = QuantizationParams { phase_space, lambda, kmax, grid };
        p.validate()?;
        Ok(p)
    }

    /// All λ zero and the same grid along every noncompact direction.
    pub fn uniform(phase_space: PhaseSpace, kmax: usize, points: usize, half_width: f64) -> Result<Self> {
        let lambda = vec![0.0; phase_space.torus_rank()];
        let grid = vec![GridSpec { half_width, points }; phase_space.line_pairs().count()];
        QuantizationParams::new(phase_space, lambda, kmax, grid)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(QuantizeError::InvalidParams(m));
        if self.kmax < 1 {
            return bad("kmax must be at least 1".into());
        }
        if self.lambda.len() != self.phase_space.torus_rank() {
            return bad(format!(
                "expected {} lambda values, got {}",
                self.phase_space.torus_rank(),
                self.lambda.len()
            ));
        }
        if let Some(l) = self.lambda.iter().find(|l| !l.is_finite()) {
            return bad(format!("lambda must be finite, got {}", l));
        }
        let lines = self.phase_space.line_pairs().count();
        if self.grid.len() != lines {
            return bad(format!("expected {} grids, got {}", lines, self.grid.len()));
        }
        for g in &self.grid {
            if g.points < 3 || g.points % 2 == 0 {
                return bad(format!("grid point count must be odd and at least 3, got {}", g.points));
            }
            if !(g.half_width > 0.0 && g.half_width.is_finite()) {
                return bad(format!("grid half-width must be positive, got {}", g.half_width));
            }
        }
        Ok(())
    }

    /// Each λ reduced into `[0, 1)` together with the integer removed;
    /// `λ = reduced + shift`, and λ values differing by integers are gauge equivalent.
    pub fn canonical_lambda(&self) -> Vec<(f64, i64)> {
        self.lambda
            .iter()
            .map(|&l| {
                let shift = l.floor();
                (l - shift, shift as i64)
            })
            .collect()
    }

    pub fn with_lambda(mut self, lambda: Vec<f64>) -> Result<Self> {
        self.lambda = lambda;
        self.validate()?;
        Ok(self)
    }

    /// Same truncation on the phase space restricted to the pairs named in `names`.
    pub fn restrict<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> QuantizationParams {
        let phase_space = self.phase_space.restrict(names);
        let lambda = phase_space
            .torus_pairs()
            .map(|p| {
                let idx = self.phase_space.torus_pairs().position(|q| q == p).expect("subset");
                self.lambda[idx]
            })
            .collect();
        let grid = phase_space
            .line_pairs()
            .map(|p| {
                let idx = self.phase_space.line_pairs().position(|q| q == p).expect("subset");
                self.grid[idx]
            })
            .collect();
        QuantizationParams { phase_space, lambda, kmax: self.kmax, grid }
    }

    pub fn basis(&self) -> Basis {
        Basis::new(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_validation() {
        let ps = PhaseSpace::canonical();
        assert!(QuantizationParams::uniform(ps.clone(), 3, 51, 10.0).is_ok());
        assert!(QuantizationParams::uniform(ps.clone(), 0, 51, 10.0).is_err());
        assert!(QuantizationParams::uniform(ps.clone(), 3, 2, 10.0).is_err());
        assert!(QuantizationParams::uniform(ps.clone(), 3, 50, 10.0).is_err());
        assert!(QuantizationParams::uniform(ps.clone(), 3, 51, -1.0).is_err());
        let p = QuantizationParams::uniform(ps, 3, 51, 10.0).unwrap();
        assert!(p.clone().with_lambda(vec![0.1, 0.2]).is_err());
    }

    #[test]
    fn lambda_canonicalization() {
        let p = QuantizationParams::uniform(PhaseSpace::canonical(), 3, 5, 1.0).unwrap();
        let p = p.with_lambda(vec![2.25]).unwrap();
        assert_eq!(p.canonical_lambda(), vec![(0.25, 2)]);
        let p = p.with_lambda(vec![-0.75]).unwrap();
        assert_eq!(p.canonical_lambda(), vec![(0.25, -1)]);
    }

    #[test]
    fn phase_space_restriction() {
        let ps = PhaseSpace::canonical();
        assert_eq!(ps.restrict(["q"]).pairs(), &[ConjugatePair::noncompact("p", "q")]);
        assert_eq!(ps.restrict(["J", "alpha"]).pairs(), &[ConjugatePair::periodic("J", "alpha")]);
        assert_eq!(ps.restrict([]).pairs(), &[ConjugatePair::periodic("J", "alpha")]);
        assert!(PhaseSpace::new(vec![]).is_err());
        assert!(PhaseSpace::new(vec![ConjugatePair::periodic("J", "J")]).is_err());
        let p = QuantizationParams::uniform(ps, 2, 5, 1.0).unwrap().with_lambda(vec![0.4]).unwrap();
        let r = p.restrict(["alpha"]);
        assert_eq!(r.lambda, vec![0.4]);
        assert!(r.grid.is_empty());
    }
}
