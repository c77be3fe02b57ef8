use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use super::{quantize_observable, AffineObservable, DiscreteOperator, QuantizationParams, QuantizeError, Result};

/// Eigenvalues closer than this are counted as one level.
pub const MERGE_TOLERANCE: f64 = 1e-9;

const HERMITIAN_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub value: f64,
    pub mult: usize,
}

/// A level of one Fourier block of a block-diagonal operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeLevel {
    pub mode: Vec<i64>,
    pub value: f64,
    pub mult: usize,
}

/// Sorts and groups values into levels; consecutive values within
/// [`MERGE_TOLERANCE`] join the same level, reported at their mean.
pub fn merge_levels(mut values: Vec<f64>) -> Vec<Level> {
    values.sort_by(f64::total_cmp);
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for v in values {
        match groups.last_mut() {
            Some(g) if v - g[g.len() - 1] <= MERGE_TOLERANCE => g.push(v),
            _ => groups.push(vec![v]),
        }
    }
    groups
        .into_iter()
        .map(|g| Level { value: g.iter().sum::<f64>() / g.len() as f64, mult: g.len() })
        .collect()
}

fn hermitian_eigenvalues(m: DMatrix<Complex64>) -> Vec<f64> {
    SymmetricEigen::new(m).eigenvalues.iter().copied().collect()
}

fn check_hermitian(op: &DiscreteOperator) -> Result<()> {
    let r = op.matrix().hermiticity_residual();
    if r > HERMITIAN_TOLERANCE {
        return Err(QuantizeError::NotHermitian(r));
    }
    Ok(())
}

/// Dense block of the operator on one Fourier mode.
fn mode_block(op: &DiscreteOperator, mode: usize) -> DMatrix<Complex64> {
    let b = op.basis();
    let n = b.grid_len();
    DMatrix::from_fn(n, n, |i, j| op.matrix().get(b.index(mode, i), b.index(mode, j)))
}

fn eigenvalues(op: &DiscreteOperator) -> Vec<f64> {
    if op.matrix().is_diagonal() {
        return op.matrix().diagonal().iter().map(|v| v.re).collect();
    }
    if op.is_block_diagonal() {
        let b = op.basis();
        return (0..b.mode_count()).flat_map(|m| hermitian_eigenvalues(mode_block(op, m))).collect();
    }
    hermitian_eigenvalues(op.matrix().to_dense())
}

/// Ascending levels with multiplicities, truncated to the first `count`
/// levels when given. Diagonal operators are read off without an eigensolver.
pub fn spectrum(op: &DiscreteOperator, count: Option<usize>) -> Result<Vec<Level>> {
    check_hermitian(op)?;
    let mut levels = merge_levels(eigenvalues(op));
    if let Some(c) = count {
        levels.truncate(c);
    }
    Ok(levels)
}

/// Levels of each Fourier block separately, modes in basis order.
pub fn mode_spectrum(op: &DiscreteOperator) -> Result<Vec<ModeLevel>> {
    check_hermitian(op)?;
    if !op.is_block_diagonal() {
        return Err(QuantizeError::NotBlockDiagonal);
    }
    let b = op.basis();
    let mut out = Vec::new();
    for m in 0..b.mode_count() {
        let values = if b.grid_len() == 1 {
            vec![op.matrix().get(b.index(m, 0), b.index(m, 0)).re]
        } else {
            hermitian_eigenvalues(mode_block(op, m))
        };
        out.extend(merge_levels(values).into_iter().map(|l| ModeLevel { mode: b.mode(m), value: l.value, mult: l.mult }));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeReport {
    pub lambda: f64,
    pub lambda_prime: f64,
    /// Whether `λ − λ'` is an integer, i.e. the connections are gauge equivalent.
    pub integer_difference: bool,
    pub window: (f64, f64),
    /// Number of values present in both spectra inside the window.
    pub matched: usize,
    /// Values inside the window present in only one spectrum.
    pub mismatches: Vec<f64>,
    pub agree: bool,
}

/// Compares the spectra of `Ĵ` on the first periodic pair at `λ` and `λ'`.
/// Truncation to `|n| ≤ K` shifts the two spectra against each other, so they
/// are compared on the window `[−K + d − λ_min, K − d − λ_min]`, `d = |λ − λ'|`,
/// which both cover completely when `d` is an integer.
pub fn gauge_spectrum_check(lambda: f64, lambda_prime: f64, params: &QuantizationParams) -> Result<GaugeReport> {
    params.validate()?;
    let pair = params
        .phase_space
        .torus_pairs()
        .next()
        .ok_or_else(|| QuantizeError::InvalidPhaseSpace("no periodic pair".into()))?
        .clone();
    let base = params.restrict([pair.angle.as_str()]);
    let values = |l: f64| -> Result<Vec<f64>> {
        let p = base.clone().with_lambda(vec![l])?;
        let op = quantize_observable(&AffineObservable::action(&p.phase_space, &pair.action)?, &p)?;
        Ok(spectrum(&op, None)?.into_iter().flat_map(|lv| std::iter::repeat_n(lv.value, lv.mult)).collect())
    };
    let d = (lambda - lambda_prime).abs();
    let lmin = lambda.min(lambda_prime);
    let k = params.kmax as f64;
    let window = (-k + d - lmin, k - d - lmin);
    let inside = |v: &f64| *v >= window.0 - MERGE_TOLERANCE && *v <= window.1 + MERGE_TOLERANCE;
    let a: Vec<f64> = values(lambda)?.into_iter().filter(inside).collect();
    let mut b: Vec<f64> = values(lambda_prime)?.into_iter().filter(inside).collect();
    let mut matched = 0;
    let mut mismatches = Vec::new();
    for v in a {
        match b.iter().position(|w| (v - w).abs() <= MERGE_TOLERANCE) {
            Some(i) => {
                b.remove(i);
                matched += 1;
            }
            None => mismatches.push(v),
        }
    }
    mismatches.extend(b);
    mismatches.sort_by(f64::total_cmp);
    let diff = lambda - lambda_prime;
    Ok(GaugeReport {
        lambda,
        lambda_prime,
        integer_difference: (diff - diff.round()).abs() <= MERGE_TOLERANCE,
        window,
        matched,
        agree: mismatches.is_empty(),
        mismatches,
    })
}
