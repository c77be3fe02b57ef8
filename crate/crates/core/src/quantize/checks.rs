use num_complex::Complex64;
use serde::Serialize;

use super::{
    compact_support_battery, inner_product, multiplication_operator, quantize_observable, AffineObservable, Basis,
    DiscreteOperator, GridSpec, QuantizationParams, QuantizeError, Result,
};
use crate::expr::ScalarExpr;

const SELF_ADJOINT_PAIRS: usize = 20;
const DIRAC_BATTERY: usize = 8;
const TORUS_SAMPLES: usize = 64;

/// `max |⟨Aψ, ψ'⟩ − ⟨ψ, Aψ'⟩|` over seeded pairs from the compact-support battery.
pub fn self_adjointness_residual(op: &DiscreteOperator, seed: u64) -> f64 {
    let b = op.basis();
    let battery = compact_support_battery(op.params(), 2 * SELF_ADJOINT_PAIRS, seed);
    battery
        .chunks(2)
        .map(|pair| {
            let (psi, phi) = (&pair[0], &pair[1]);
            let a_psi = op.apply(psi).expect("battery matches operator");
            let a_phi = op.apply(phi).expect("battery matches operator");
            let lhs = inner_product(&b, &a_psi, phi).expect("same basis");
            let rhs = inner_product(&b, psi, &a_phi).expect("same basis");
            (lhs - rhs).norm()
        })
        .fold(0.0, f64::max)
}

/// Norm of the restriction of `ψ` to the indices selected by `keep`.
fn restricted_norm(b: &Basis, psi: &[Complex64], keep: &dyn Fn(usize) -> bool) -> f64 {
    psi.iter()
        .enumerate()
        .filter(|(i, _)| keep(*i))
        .map(|(i, v)| v.norm_sqr() * b.grid_weight(b.split(i).1))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiracReport {
    /// The classical bracket `{f, g}`.
    pub bracket: String,
    /// `max ‖1_int ([f̂, ĝ] + i {f,g}^) ψ‖` over the normalized smooth battery.
    pub residual: f64,
    /// Max column-sum norm of the same operator restricted to the interior indices.
    pub column_sum: f64,
    /// Number of outer Fourier bands excluded on each side.
    pub band_margin: usize,
}

/// Residual of `[f̂, ĝ] = −i {f, g}^` away from the truncation edges: the
/// outer Fourier bands reachable by one application of either operator and the
/// two outer grid layers are excluded.
pub fn dirac_residual(
    f: &AffineObservable,
    g: &AffineObservable,
    params: &QuantizationParams,
    seed: u64,
) -> Result<DiracReport> {
    let h = f.bracket(g)?;
    let (fq, gq, hq) = (quantize_observable(f, params)?, quantize_observable(g, params)?, quantize_observable(&h, params)?);
    let band_margin = 2.max(fq.mode_bandwidth()).max(gq.mode_bandwidth());
    let b = params.basis();
    if b.torus_rank() > 0 && band_margin >= params.kmax {
        return Err(QuantizeError::NoInterior { kmax: params.kmax, margin: band_margin });
    }
    let r = fq.matrix().commutator(gq.matrix()).add(&hq.matrix().scale(Complex64::new(0.0, 1.0)));
    let keep = |i: usize| b.interior(i, band_margin);
    let residual = compact_support_battery(params, DIRAC_BATTERY, seed)
        .iter()
        .map(|psi| restricted_norm(&b, &r.apply(psi.values()), &keep) / psi.norm(&b).expect("same basis"))
        .fold(0.0, f64::max);
    Ok(DiracReport { bracket: h.to_expr().to_string(), residual, column_sum: r.column_sum_norm(keep), band_margin })
}

/// Least-squares slope of `ln r` against `ln h`.
pub fn convergence_order(spacings: &[f64], residuals: &[f64]) -> f64 {
    let xs: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub points: Vec<usize>,
    pub spacings: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Fitted order; meaningless when every residual is at rounding level.
    pub order: f64,
    /// True when every residual is below `1e-12`.
    pub exact: bool,
}

/// Dirac residual over a ladder of grid resolutions, keeping the battery
/// seed fixed so each level samples the same test functions.
pub fn dirac_convergence(
    f: &AffineObservable,
    g: &AffineObservable,
    params: &QuantizationParams,
    ladder: &[usize],
    seed: u64,
) -> Result<ConvergenceReport> {
    let mut spacings = Vec::new();
    let mut residuals = Vec::new();
    for &n in ladder {
        let grid: Vec<GridSpec> = params.grid.iter().map(|g| GridSpec { half_width: g.half_width, points: n }).collect();
        let p = QuantizationParams::new(params.phase_space.clone(), params.lambda.clone(), params.kmax, grid)?;
        spacings.push(p.grid.first().map_or(1.0, GridSpec::spacing));
        residuals.push(dirac_residual(f, g, &p, seed)?.residual);
    }
    let exact = residuals.iter().all(|r| *r < 1e-12);
    let order = convergence_order(&spacings, &residuals);
    Ok(ConvergenceReport { points: ladder.to_vec(), spacings, residuals, order, exact })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    /// Interior column-sum norm of `â P̂ − (a P)^`.
    pub measured: f64,
    /// `max ½ |∂a|` along the angle conjugate to `P`.
    pub analytic: f64,
}

/// Ordering defect of a product quantization: `â P̂ − (a P)^ = ½ [â, P̂]`,
/// which acts as multiplication by `(i/2) ∂a` in the continuum.
pub fn noncommutativity_witness(a: &ScalarExpr, action: &str, params: &QuantizationParams) -> Result<WitnessReport> {
    let ps = &params.phase_space;
    let pair = ps
        .pairs()
        .iter()
        .find(|p| p.action == action)
        .ok_or_else(|| QuantizeError::UnknownAction(action.to_string()))?;
    let ma = multiplication_operator(a, params)?;
    let p_hat = quantize_observable(&AffineObservable::action(ps, action)?, params)?;
    let product = quantize_observable(
        &AffineObservable::from_expr(&ScalarExpr::product([a.clone(), ScalarExpr::coord(action)]), ps)?,
        params,
    )?;
    let defect = ma.mul(p_hat.matrix()).sub(product.matrix());
    let b = params.basis();
    let margin = DiscreteOperator::new(ma.clone(), params.clone(), a.to_string()).mode_bandwidth();
    let measured = defect.column_sum_norm(|i| b.interior(i, margin));

    let da = a.derivative(&pair.angle);
    let torus: Vec<&str> = ps.torus_pairs().map(|p| p.angle.as_str()).collect();
    let line: Vec<&str> = ps.line_pairs().map(|p| p.angle.as_str()).collect();
    let lattice = TORUS_SAMPLES.pow(torus.len() as u32);
    let mut analytic: f64 = 0.0;
    for g in (0..b.grid_len()).filter(|&g| b.grid_interior(g, 2)) {
        let q = b.grid_point(g);
        for t in 0..lattice {
            let alphas: Vec<f64> = (0..torus.len())
                .map(|mu| {
                    let j = (t / TORUS_SAMPLES.pow(mu as u32)) % TORUS_SAMPLES;
                    std::f64::consts::TAU * j as f64 / TORUS_SAMPLES as f64
                })
                .collect();
            let lookup = |n: &str| {
                torus
                    .iter()
                    .position(|x| *x == n)
                    .map(|i| alphas[i])
                    .or_else(|| line.iter().position(|x| *x == n).map(|i| q[i]))
            };
            analytic = analytic.max(0.5 * da.eval_with(&lookup)?.abs());
        }
    }
    Ok(WitnessReport { measured, analytic })
}
