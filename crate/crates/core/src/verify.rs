//! The full invariant battery behind `ncquant verify`: bracket identities of
//! the spherical top, its action-angle chart, and the properties of the
//! quantized operators. Every random draw comes from one seeded generator, and
//! the report is keyed by check name so its serialization is deterministic.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{parse, EvalError, Point, ScalarExpr};
use crate::poisson::{
    bracket, casimir_residual, corank_at, hamiltonian_vector_field, structure_matrix, wedge_determinant, PoissonError,
};
use crate::quantize::{
    casimir_operator, dirac_convergence, dirac_residual, gauge_spectrum_check, hamiltonian_operator, mode_spectrum,
    noncommutativity_witness, quantize_observable, self_adjointness_residual, AffineObservable, GridSpec,
    PhaseSpace, QuantizationParams, QuantizeError, SparseMatrix,
};
use crate::so3::{
    aa_point, coalgebra_point, from_action_angle, sample_chart_points, sample_coalgebra_points, to_action_angle,
    So3Error, So3Model,
};

/// Grid resolutions used for convergence fits.
pub const DIRAC_LADDER: [usize; 3] = [51, 101, 201];

/// Grid resolution of the ordering-defect check, independent of the configured grid.
pub const WITNESS_POINTS: usize = 201;

/// Torus-sector pairs whose quantum brackets are exact.
pub const TORUS_PAIRS: [(&str, &str); 4] =
    [("J", "sin(alpha)"), ("J", "cos(2*alpha) + sin(alpha)"), ("cos(alpha)*J", "sin(alpha)"), ("J", "J")];

/// Pairs involving a noncompact direction; second-order convergent.
pub const LINE_PAIRS: [(&str, &str); 3] =
    [("p", "q^2*(1 - q^2/200)"), ("p", "sin(q)"), ("cos(q)*p", "q*p")];

/// Real affine observables used for the Hermitian-form battery.
pub const SELF_ADJOINT_OBSERVABLES: [&str; 6] =
    ["J", "p", "sin(alpha)*J", "cos(q)*p", "q*p + cos(alpha)*J + sin(q)", "sin(alpha) + q^2"];

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
    #[error(transparent)]
    So3(#[from] So3Error),
    #[error(transparent)]
    Poisson(#[from] PoissonError),
}

impl From<EvalError> for VerifyError {
    fn from(e: EvalError) -> Self {
        VerifyError::Poisson(e.into())
    }
}

pub type Result<T> = std::result::Result<T, VerifyError>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Each value is checked separately; residuals report the worst case.
    pub lambda: Vec<f64>,
    pub kmax: usize,
    pub grid_points: usize,
    pub grid_half_width: f64,
    pub inertia: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { seed: 42, lambda: vec![0.0], kmax: 4, grid_points: 201, grid_half_width: 10.0, inertia: 1.0 }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda.is_empty() {
            return Err(VerifyError::Config("at least one lambda value is required".into()));
        }
        if !(self.inertia > 0.0 && self.inertia.is_finite()) {
            return Err(VerifyError::Config(format!("inertia must be positive, got {}", self.inertia)));
        }
        // The Dirac checks exclude two outer bands on each side.
        if self.kmax < 3 {
            return Err(VerifyError::Config(format!("kmax must be at least 3 for verification, got {}", self.kmax)));
        }
        for &l in &self.lambda {
            if !l.is_finite() || l.abs() >= self.kmax as f64 {
                return Err(VerifyError::Config(format!("lambda must satisfy |lambda| < kmax, got {}", l)));
            }
            self.params(PhaseSpace::canonical(), l)?;
        }
        Ok(())
    }

    /// Quantization parameters on `phase_space` with `λ` on every periodic pair.
    pub fn params(&self, phase_space: PhaseSpace, lambda: f64) -> Result<QuantizationParams> {
        let lambdas = vec![lambda; phase_space.torus_rank()];
        let grid = vec![
            GridSpec { half_width: self.grid_half_width, points: self.grid_points };
            phase_space.line_pairs().count()
        ];
        QuantizationParams::new(phase_space, lambdas, self.kmax, grid).map_err(|e| VerifyError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckResult {
    pub pass: bool,
    pub residual: f64,
    pub tolerance: f64,
}

impl CheckResult {
    /// Passes when `residual ≤ tolerance`; NaN never passes.
    pub fn new(residual: f64, tolerance: f64) -> Self {
        CheckResult { pass: residual <= tolerance, residual, tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub config: VerifyConfig,
    pub checks: BTreeMap<String, CheckResult>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.values().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &str> {
        self.checks.iter().filter(|(_, c)| !c.pass).map(|(k, _)| k.as_str())
    }

    pub fn to_json(&self, pretty: bool) -> String {
        if pretty {
            serde_json::to_string_pretty(self).expect("report serializes")
        } else {
            serde_json::to_string(self).expect("report serializes")
        }
    }
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    // NaN propagates so that a broken evaluation cannot pass.
    values.into_iter().fold(0.0, |a: f64, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

pub fn run_verify(config: &VerifyConfig) -> Result<VerifyReport> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut checks = BTreeMap::new();
    so3_checks(config, &mut rng, &mut checks)?;
    quantize_checks(config, &mut checks)?;
    Ok(VerifyReport { seed: config.seed, config: config.clone(), checks })
}

fn so3_checks(config: &VerifyConfig, rng: &mut ChaCha8Rng, out: &mut BTreeMap<String, CheckResult>) -> Result<()> {
    let model = So3Model::new(config.inertia)?;
    let mut put = |name: &str, residual: f64, tol: f64| {
        out.insert(name.to_string(), CheckResult::new(residual, tol));
    };

    let coalgebra = sample_coalgebra_points(rng, 100);
    let coalgebra_pts: Vec<Point> = coalgebra.iter().map(|x| coalgebra_point(*x)).collect();
    let [h1, h2, h3] = &model.integrals;
    let mut table = Vec::new();
    for (f, g, h) in [(h1, h2, h3), (h2, h3, h1), (h3, h1, h2)] {
        let b = bracket(f, g, &model.lie_poisson)?;
        for p in &coalgebra_pts {
            table.push((b.evaluate(p)? - h.evaluate(p)?).abs());
        }
    }
    put("so3.bracket_table", worst(table), 1e-10);

    let s = structure_matrix(&model.integrals, &model.lie_poisson)?;
    let generic: Vec<f64> = coalgebra_pts[..50]
        .iter()
        .map(|p| Ok((corank_at(&s, p)? as f64 - 1.0).abs()))
        .collect::<Result<_>>()?;
    put("so3.corank_generic", worst(generic), 0.0);
    put("so3.corank_origin", (corank_at(&s, &coalgebra_point([0.0; 3]))? as f64 - 3.0).abs(), 0.0);

    put("so3.casimir", casimir_residual(&model.casimir, &model.lie_poisson, &coalgebra_pts)?, 1e-10);
    put("poisson.antisymmetry", model.lie_poisson.antisymmetry_residual(&coalgebra_pts)?, 0.0);
    put("poisson.jacobi_lie_poisson", model.lie_poisson.jacobi_residual(&coalgebra_pts)?, 1e-10);

    let roundtrip: Vec<f64> = coalgebra
        .iter()
        .map(|x| {
            let [r, x1, gamma] = to_action_angle(*x)?;
            let y = from_action_angle(r, x1, gamma)?;
            Ok(x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    put("so3.chart_roundtrip", worst(roundtrip), 1e-12);
    put("so3.pullback", model.pullback_residual(&coalgebra)?, 1e-10);
    let expected = nalgebra::Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0);
    let pushforward: Vec<f64> =
        coalgebra.iter().map(|x| Ok((model.pushforward_at(*x)? - expected).amax())).collect::<Result<_>>()?;
    put("so3.darboux_pushforward", worst(pushforward), 1e-10);

    let chart = sample_chart_points(rng, 100);
    let chart_pts: Vec<Point> = chart.iter().map(|&[r, x1, g, a]| aa_point(r, x1, g, a)).collect();
    put("so3.chart_relations", model.chart_cis_relations(&chart_pts)?.max_deviation, 1e-12);
    put("poisson.jacobi_action_angle", model.aa_bivector.jacobi_residual(&chart_pts)?, 1e-10);

    let fields = model.integral_vector_fields();
    let wedge: Vec<f64> = chart_pts[..50]
        .iter()
        .map(|p| Ok((wedge_determinant(&fields, p)? - p["r"]).abs()))
        .collect::<Result<_>>()?;
    put("so3.wedge", worst(wedge), 1e-9);

    let mut field_dev = Vec::new();
    for (h, closed) in model.integrals_aa.iter().zip(&fields) {
        let v = hamiltonian_vector_field(h, &model.aa_bivector)?;
        for p in &chart_pts {
            let (a, b) = (v.evaluate(p)?, closed.evaluate(p)?);
            field_dev.extend(a.iter().zip(&b).map(|(x, y)| (x - y).abs()));
        }
    }
    put("so3.vector_fields", worst(field_dev), 1e-10);

    let (h, hi) = (model.hamiltonian(), model.hamiltonian_from_integrals());
    let energy: Vec<f64> =
        chart_pts.iter().map(|p| Ok((h.evaluate(p)? - hi.evaluate(p)?).abs())).collect::<Result<_>>()?;
    put("so3.hamiltonian_form", worst(energy), 1e-10);
    Ok(())
}

fn observable(src: &str, params: &QuantizationParams) -> Result<AffineObservable> {
    Ok(AffineObservable::parse(src, &params.phase_space)?)
}

fn quantize_checks(config: &VerifyConfig, out: &mut BTreeMap<String, CheckResult>) -> Result<()> {
    let mut results: BTreeMap<&str, (Vec<f64>, f64)> = BTreeMap::new();
    let mut put = |name: &'static str, residual: f64, tol: f64| {
        results.entry(name).or_insert_with(|| (Vec::new(), tol)).0.push(residual);
    };
    let k = config.kmax as i64;

    for &lambda in &config.lambda {
        let full = config.params(PhaseSpace::canonical(), lambda)?;
        let torus = full.restrict(["J"]);
        let line = full.restrict(["p"]);
        let top = config.params(PhaseSpace::so3(), lambda)?.restrict(["r"]);

        let j_hat = quantize_observable(&observable("J", &torus)?, &torus)?;
        let j_diag = j_hat.matrix().diagonal();
        let action_dev = j_diag
            .iter()
            .zip(-k..=k)
            .map(|(v, n)| (v.re - (n as f64 - lambda)).abs() + v.im.abs())
            .chain(std::iter::once(if j_hat.matrix().is_diagonal() { 0.0 } else { f64::INFINITY }));
        put("quantize.action_spectrum", worst(action_dev), 0.0);

        let gauge = gauge_spectrum_check(lambda, lambda + 1.0, &torus)?;
        let expected_matched = 2 * config.kmax - 1;
        put(
            "quantize.gauge",
            gauge.mismatches.len() as f64 + (gauge.matched as f64 - expected_matched as f64).abs(),
            0.0,
        );

        let torus_dirac: Vec<f64> = TORUS_PAIRS
            .iter()
            .map(|(f, g)| {
                let r = dirac_residual(&observable(f, &torus)?, &observable(g, &torus)?, &torus, config.seed)?;
                Ok(r.residual.max(r.column_sum))
            })
            .collect::<Result<_>>()?;
        put("quantize.dirac_torus", worst(torus_dirac), 1e-12);

        let orders: Vec<f64> = LINE_PAIRS
            .iter()
            .map(|(f, g)| {
                let c = dirac_convergence(&observable(f, &line)?, &observable(g, &line)?, &line, &DIRAC_LADDER, config.seed)?;
                Ok((c.order - 2.0).abs())
            })
            .collect::<Result<_>>()?;
        put("quantize.dirac_order", worst(orders), 0.2);

        let witness_config = VerifyConfig { grid_points: WITNESS_POINTS, ..config.clone() };
        let gamma_line = witness_config.params(PhaseSpace::so3(), lambda)?.restrict(["x1"]);
        let sin_gamma = parse("sin(gamma)", &gamma_line.phase_space.chart()).map_err(QuantizeError::from)?;
        let w = noncommutativity_witness(&sin_gamma, "x1", &gamma_line)?;
        put("quantize.witness", (w.measured - w.analytic).abs(), 1e-3);

        let h_expr = So3Model::new(config.inertia)?.hamiltonian();
        let h = hamiltonian_operator(&h_expr, &top)?;
        let closed = |n: i64| 0.5 * config.inertia * (n as f64 - lambda).powi(2);
        let h_diag = h.matrix().diagonal();
        let top_dev = h_diag
            .iter()
            .zip(-k..=k)
            .map(|(v, n)| (v.re - closed(n)).abs() + v.im.abs())
            .chain(std::iter::once(if h.matrix().is_diagonal() { 0.0 } else { f64::INFINITY }));
        put("quantize.spherical_top", worst(top_dev), 1e-12);
        put("quantize.degeneracy", degeneracy_mismatch(&h, lambda, config.kmax)?, 0.0);
        let r_hat = casimir_operator(&ScalarExpr::coord("r"), &top)?;
        put("quantize.hamiltonian_casimir_commute", h.matrix().commutator(r_hat.matrix()).column_sum_norm(|_| true), 1e-12);

        let mut sa = Vec::new();
        let mut herm = Vec::new();
        for src in SELF_ADJOINT_OBSERVABLES {
            let op = quantize_observable(&observable(src, &full)?, &full)?;
            sa.push(self_adjointness_residual(&op, config.seed));
            herm.push(op.matrix().hermiticity_residual());
        }
        put("quantize.self_adjoint", worst(sa), 1e-10);
        put("quantize.hermitian", worst(herm), 1e-10);

        let one = quantize_observable(&observable("1", &full)?, &full)?;
        put("quantize.identity", one.matrix().max_abs_diff(&SparseMatrix::identity(one.dim())), 0.0);

        let (fs, gs, c) = ("sin(alpha)*J + q*p", "cos(q)*p + J + cos(2*alpha)", -1.75);
        let f = observable(fs, &full)?;
        let g = observable(gs, &full)?;
        let combined = AffineObservable::from_expr(
            &(f.to_expr() + ScalarExpr::Const(c) * g.to_expr()),
            &full.phase_space,
        )?;
        let lhs = quantize_observable(&combined, &full)?;
        let rhs = quantize_observable(&f, &full)?.matrix().add(&quantize_observable(&g, &full)?.matrix().scale_real(c));
        put("quantize.linearity", lhs.matrix().max_abs_diff(&rhs), 1e-12);

        let affine = parse("2*J - 0.5*p + 3", &full.phase_space.chart()).map_err(QuantizeError::from)?;
        let via_h = hamiltonian_operator(&affine, &full)?;
        let via_q = quantize_observable(&AffineObservable::from_expr(&affine, &full.phase_space)?, &full)?;
        put("quantize.affine_agreement", via_h.matrix().max_abs_diff(via_q.matrix()), 0.0);
    }
    for (name, (residuals, tol)) in results {
        out.insert(name.to_string(), CheckResult::new(worst(residuals), tol));
    }
    Ok(())
}

/// 0 when the spherical-top levels inside the symmetric window
/// `|k − λ| ≤ K − |λ|` show "one simple zero level, every other level twofold"
/// exactly when `λ` is an integer, 1 otherwise.
pub fn degeneracy_mismatch(h: &crate::quantize::DiscreteOperator, lambda: f64, kmax: usize) -> Result<f64> {
    let reach = kmax as f64 - lambda.abs();
    let values: Vec<f64> = mode_spectrum(h)?
        .into_iter()
        .filter(|l| (l.mode[0] as f64 - lambda).abs() <= reach + 1e-12)
        .flat_map(|l| std::iter::repeat_n(l.value, l.mult))
        .collect();
    let levels = crate::quantize::merge_levels(values);
    let simple: Vec<_> = levels.iter().filter(|l| l.mult == 1).collect();
    let paired = simple.len() == 1 && simple[0].value.abs() < 1e-12 && levels.iter().all(|l| l.mult <= 2);
    let integer = (lambda - lambda.round()).abs() < 1e-12;
    Ok(if paired == integer { 0.0 } else { 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_run_passes_and_is_deterministic() {
        let config = VerifyConfig { grid_points: 101, ..VerifyConfig::default() };
        let a = run_verify(&config).unwrap();
        let failures: Vec<_> = a.checks.iter().filter(|(_, c)| !c.pass).collect();
        assert!(failures.is_empty(), "{:#?}", failures);
        assert_eq!(a.to_json(false), run_verify(&config).unwrap().to_json(false));
    }

    #[test]
    fn degeneracy_pattern_follows_integrality() {
        for (lambda, k) in [(0.0, 3), (0.5, 3), (0.25, 4), (1.0, 4), (-2.0, 4)] {
            let config = VerifyConfig { kmax: k, ..VerifyConfig::default() };
            let top = config.params(PhaseSpace::so3(), lambda).unwrap().restrict(["r"]);
            let h = hamiltonian_operator(&So3Model::new(1.0).unwrap().hamiltonian(), &top).unwrap();
            assert_eq!(degeneracy_mismatch(&h, lambda, k).unwrap(), 0.0, "lambda {}", lambda);
        }
    }

    #[test]
    fn bad_configs_rejected() {
        let bad = |c: VerifyConfig| matches!(run_verify(&c), Err(VerifyError::Config(_)));
        assert!(bad(VerifyConfig { grid_points: 2, ..VerifyConfig::default() }));
        assert!(bad(VerifyConfig { grid_points: 100, ..VerifyConfig::default() }));
        assert!(bad(VerifyConfig { lambda: vec![], ..VerifyConfig::default() }));
        assert!(bad(VerifyConfig { kmax: 2, ..VerifyConfig::default() }));
        assert!(bad(VerifyConfig { inertia: 0.0, ..VerifyConfig::default() }));
    }
}
