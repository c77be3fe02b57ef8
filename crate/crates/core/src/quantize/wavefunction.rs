use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Basis, QuantizationParams, QuantizeError, Result};

/// Coefficients `φ_n(q_g)` in the flat layout of [`Basis`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    values: Vec<Complex64>,
}

impl WaveFunction {
    pub fn from_values(values: Vec<Complex64>) -> Self {
        WaveFunction { values }
    }

    pub fn zeros(basis: &Basis) -> Self {
        WaveFunction { values: vec![Complex64::default(); basis.dim()] }
    }

    /// Samples `f(n, q)` at every mode and grid point.
    pub fn from_fn(basis: &Basis, f: impl Fn(&[i64], &[f64]) -> Complex64) -> Self {
        let values = (0..basis.dim())
            .map(|flat| {
                let (m, g) = basis.split(flat);
                f(&basis.mode(m), &basis.grid_point(g))
            })
            .collect();
        WaveFunction { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn norm(&self, basis: &Basis) -> Result<f64> {
        Ok(inner_product(basis, self, self)?.re.sqrt())
    }

    pub fn scaled(&self, c: f64) -> WaveFunction {
        WaveFunction { values: self.values.iter().map(|v| v * c).collect() }
    }
}

/// `⟨ψ, ψ'⟩ = Σ_n Σ_g w_g ψ_n(q_g) conj(ψ'_n(q_g))` with trapezoid weights `w_g`.
/// Linear in the first argument.
pub fn inner_product(basis: &Basis, a: &WaveFunction, b: &WaveFunction) -> Result<Complex64> {
    if a.len() != basis.dim() || b.len() != basis.dim() {
        return Err(QuantizeError::ShapeMismatch(a.len(), b.len()));
    }
    let weights: Vec<f64> = (0..basis.grid_len()).map(|g| basis.grid_weight(g)).collect();
    Ok(a.values
        .iter()
        .zip(&b.values)
        .enumerate()
        .map(|(flat, (x, y))| x * y.conj() * weights[basis.split(flat).1])
        .sum())
}

fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// Seeded smooth test functions: decaying random Fourier amplitudes times a
/// modulated C∞ bump in each noncompact direction, vanishing on the two outer
/// grid layers and normalized. The random draws do not depend on the grid
/// resolution, so the same seed gives samplings of the same functions at every `N`.
pub fn compact_support_battery(params: &QuantizationParams, count: usize, seed: u64) -> Vec<WaveFunction> {
    let basis = Basis::new(params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let amplitudes: Vec<Complex64> = basis
                .modes()
                .map(|n| {
                    let decay = (-0.5 * n.iter().map(|x| x.abs() as f64).sum::<f64>()).exp();
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * decay
                })
                .collect();
            let profiles: Vec<(f64, f64, f64, f64)> = params
                .grid
                .iter()
                .map(|g| {
                    let l = g.half_width;
                    (
                        rng.gen_range(-0.05 * l..0.05 * l),
                        rng.gen_range(0.75 * l..0.85 * l),
                        rng.gen_range(-1.5..1.5),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    )
                })
                .collect();
            let psi = WaveFunction::from_values(
                (0..basis.dim())
                    .map(|flat| {
                        let (m, g) = basis.split(flat);
                        if !basis.grid_interior(g, 2) {
                            return Complex64::default();
                        }
                        let q = basis.grid_point(g);
                        let envelope: Complex64 = profiles
                            .iter()
                            .zip(&q)
                            .map(|(&(center, radius, k, phi), &x)| {
                                Complex64::from_polar(bump((x - center) / radius), k * x + phi)
                            })
                            .product();
                        amplitudes[m] * envelope
                    })
                    .collect(),
            );
            let norm = psi.norm(&basis).expect("battery matches basis");
            psi.scaled(1.0 / norm)
        })
        .collect()
}
