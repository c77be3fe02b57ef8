//! The spherical top: integrals `H_i = x_i` on the dual of so(3) with the
//! Lie–Poisson bracket, and the action-angle chart `(r, x1, gamma, alpha)` in which
//! `x2 = sqrt(r^2 - x1^2) sin(gamma)` and `x3 = sqrt(r^2 - x1^2) cos(gamma)`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, Matrix3};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::chart::{Chart, Coordinate};
use crate::expr::{parse, point, Point, ScalarExpr};
use crate::poisson::{bracket, PoissonBivector, PoissonError, VectorField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum So3Error {
    #[error("point ({x1}, {x2}, {x3}) lies on the singular locus x2 = x3 = 0 of the action-angle chart")]
    SingularLocus { x1: f64, x2: f64, x3: f64 },
    #[error("action-angle chart needs r > |x1|, got r = {r}, x1 = {x1}")]
    OutOfDomain { r: f64, x1: f64 },
    #[error("so(3) index must be 1, 2 or 3, got {0}")]
    IndexOutOfRange(usize),
    #[error("rotational constant must be positive and finite, got {0}")]
    BadInertia(f64),
    #[error(transparent)]
    Poisson(#[from] PoissonError),
}

pub type Result<T> = std::result::Result<T, So3Error>;

/// Structure constants `c_{ij}^h = ε_{ijh}` of so(3), indexed `[i][j][h]`.
pub fn structure_constants() -> Vec<Vec<Vec<f64>>> {
    let mut c = vec![vec![vec![0.0; 3]; 3]; 3];
    for (i, j, h) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        c[i][j][h] = 1.0;
        c[j][i][h] = -1.0;
    }
    c
}

#[derive(Debug, Clone)]
pub struct So3Model {
    pub coalgebra_chart: Chart,
    pub aa_chart: Chart,
    pub lie_poisson: PoissonBivector,
    pub aa_bivector: PoissonBivector,
    /// `H_1, H_2, H_3` on the coalgebra chart.
    pub integrals: [ScalarExpr; 3],
    /// `H_1, H_2, H_3` written in action-angle coordinates.
    pub integrals_aa: [ScalarExpr; 3],
    /// `r` on the coalgebra chart.
    pub casimir: ScalarExpr,
    pub inertia: f64,
}

/// Closed-form components of the Hamiltonian vector fields of the integrals,
/// in the order `(r, x1, gamma, alpha)`.
const INTEGRAL_FIELDS: [[&str; 4]; 3] = [
    ["0", "0", "1", "0"],
    [
        "0",
        "-sqrt(r^2 - x1^2)*cos(gamma)",
        "-x1/sqrt(r^2 - x1^2)*sin(gamma)",
        "r/sqrt(r^2 - x1^2)*sin(gamma)",
    ],
    [
        "0",
        "sqrt(r^2 - x1^2)*sin(gamma)",
        "-x1/sqrt(r^2 - x1^2)*cos(gamma)",
        "r/sqrt(r^2 - x1^2)*cos(gamma)",
    ],
];

impl So3Model {
    pub fn new(inertia: f64) -> Result<Self> {
        if !(inertia > 0.0 && inertia.is_finite()) {
            return Err(So3Error::BadInertia(inertia));
        }
        let coalgebra_chart = Chart::noncompact(&["x1", "x2", "x3"]).expect("static chart");
        let aa_chart = Chart::new(vec![
            Coordinate::action("r"),
            Coordinate::action("x1"),
            Coordinate::noncompact("gamma"),
            Coordinate::periodic("alpha", TAU),
        ])
        .expect("static chart");
        let lie_poisson = PoissonBivector::lie_poisson(coalgebra_chart.clone(), &structure_constants())?;
        let aa_bivector = PoissonBivector::from_wedges(
            aa_chart.clone(),
            &[("r", "alpha", ScalarExpr::one()), ("x1", "gamma", ScalarExpr::one())],
        )?;
        let c = |s: &str| parse(s, &coalgebra_chart).expect("static formula");
        let a = |s: &str| parse(s, &aa_chart).expect("static formula");
        Ok(So3Model {
            integrals: [c("x1"), c("x2"), c("x3")],
            integrals_aa: [a("x1"), a("sqrt(r^2 - x1^2)*sin(gamma)"), a("sqrt(r^2 - x1^2)*cos(gamma)")],
            casimir: c("sqrt(x1^2 + x2^2 + x3^2)"),
            coalgebra_chart,
            aa_chart,
            lie_poisson,
            aa_bivector,
            inertia,
        })
    }

    /// `½ I r²` on the action-angle chart.
    pub fn hamiltonian(&self) -> ScalarExpr {
        ScalarExpr::product([
            ScalarExpr::Const(0.5 * self.inertia),
            ScalarExpr::pow(ScalarExpr::coord("r"), 2),
        ])
    }

    /// `½ I (H_1² + H_2² + H_3²)` with the integrals written in action-angle coordinates.
    pub fn hamiltonian_from_integrals(&self) -> ScalarExpr {
        ScalarExpr::product([
            ScalarExpr::Const(0.5 * self.inertia),
            ScalarExpr::sum(self.integrals_aa.iter().map(|h| ScalarExpr::pow(h.clone(), 2))),
        ])
    }

    /// The symplectic-leaf Darboux form `∂_{x1} ∧ ∂_gamma` on the chart `(r, x1, gamma)`.
    pub fn leaf_darboux(&self) -> PoissonBivector {
        let chart = Chart::new(vec![Coordinate::action("r"), Coordinate::action("x1"), Coordinate::noncompact("gamma")])
            .expect("static chart");
        PoissonBivector::from_wedges(chart, &[("x1", "gamma", ScalarExpr::one())]).expect("static bivector")
    }

    /// Coadjoint vector field `ε_i = Σ_j c_{ij}^h x_h ∂^j`, `i` in 1..=3.
    pub fn coadjoint_field(&self, i: usize) -> Result<VectorField> {
        if !(1..=3).contains(&i) {
            return Err(So3Error::IndexOutOfRange(i));
        }
        let c = structure_constants();
        let names = ["x1", "x2", "x3"];
        let components = (0..3)
            .map(|j| {
                ScalarExpr::sum(
                    (0..3)
                        .filter(|&h| c[i - 1][j][h] != 0.0)
                        .map(|h| ScalarExpr::product([ScalarExpr::Const(c[i - 1][j][h]), ScalarExpr::coord(names[h])]))
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        Ok(VectorField::new(self.coalgebra_chart.clone(), components)?)
    }

    /// The Hamiltonian vector fields `ϑ_1, ϑ_2, ϑ_3` of the integrals in their closed form.
    pub fn integral_vector_fields(&self) -> [VectorField; 3] {
        INTEGRAL_FIELDS.map(|row| {
            let comps = row.iter().map(|s| parse(s, &self.aa_chart).expect("static formula")).collect();
            VectorField::new(self.aa_chart.clone(), comps).expect("static field")
        })
    }

    /// Evaluates the chart relations `{r, H_1} = 0`, `{r, gamma} = 0`,
    /// `{H_1, gamma} = 1` under the action-angle bivector.
    pub fn chart_cis_relations(&self, points: &[Point]) -> Result<CisReport> {
        let r = ScalarExpr::coord("r");
        let h1 = ScalarExpr::coord("x1");
        let gamma = ScalarExpr::coord("gamma");
        let pairs = [(&r, &h1, 0.0), (&r, &gamma, 0.0), (&h1, &gamma, 1.0)];
        let mut deviation = [0.0f64; 3];
        for (k, (f, g, expected)) in pairs.iter().enumerate() {
            let b = bracket(f, g, &self.aa_bivector)?;
            for p in points {
                deviation[k] = deviation[k].max((b.evaluate(p).map_err(PoissonError::from)? - expected).abs());
            }
        }
        Ok(CisReport {
            r_h1: deviation[0],
            r_gamma: deviation[1],
            h1_gamma: deviation[2],
            max_deviation: deviation.iter().copied().fold(0.0, f64::max),
            samples: points.len(),
        })
    }

    /// Largest deviation between `{H_i, H_j}` under the Lie–Poisson bracket at a
    /// coalgebra point and the same bracket computed in action-angle coordinates.
    pub fn pullback_residual(&self, points: &[[f64; 3]]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in (i + 1)..3 {
                let lp = bracket(&self.integrals[i], &self.integrals[j], &self.lie_poisson)?;
                let aa = bracket(&self.integrals_aa[i], &self.integrals_aa[j], &self.aa_bivector)?;
                for x in points {
                    let [r, x1, gamma] = to_action_angle(*x)?;
                    let p_lp = point([("x1", x[0]), ("x2", x[1]), ("x3", x[2])]);
                    let p_aa = aa_point(r, x1, gamma, 0.0);
                    let diff = lp.evaluate(&p_lp).map_err(PoissonError::from)?
                        - aa.evaluate(&p_aa).map_err(PoissonError::from)?;
                    worst = worst.max(diff.abs());
                }
            }
        }
        Ok(worst)
    }

    /// The Lie–Poisson bivector pushed forward through `x ↦ (r, x1, gamma)`
    /// at a coalgebra point: `J w Jᵀ` with `J` the Jacobian of the chart map.
    pub fn pushforward_at(&self, x: [f64; 3]) -> Result<Matrix3<f64>> {
        let [x1, x2, x3] = x;
        let rho2 = x2 * x2 + x3 * x3;
        if rho2 == 0.0 {
            return Err(So3Error::SingularLocus { x1, x2, x3 });
        }
        let r = (x1 * x1 + rho2).sqrt();
        let jac = Matrix3::new(
            x1 / r, x2 / r, x3 / r, //
            1.0, 0.0, 0.0, //
            0.0, x3 / rho2, -x2 / rho2,
        );
        let w: DMatrix<f64> = self.lie_poisson.evaluate(&point([("x1", x1), ("x2", x2), ("x3", x3)]))?;
        let w = Matrix3::from_fn(|i, j| w[(i, j)]);
        Ok(jac * w * jac.transpose())
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CisReport {
    pub r_h1: f64,
    pub r_gamma: f64,
    pub h1_gamma: f64,
    pub max_deviation: f64,
    pub samples: usize,
}

pub fn aa_point(r: f64, x1: f64, gamma: f64, alpha: f64) -> Point {
    point([("r", r), ("x1", x1), ("gamma", gamma), ("alpha", alpha)])
}

pub fn coalgebra_point(x: [f64; 3]) -> Point {
    point([("x1", x[0]), ("x2", x[1]), ("x3", x[2])])
}

/// `(x1, x2, x3) ↦ (r, x1, gamma)` with `gamma = atan2(x2, x3)` in `(−π, π]`.
pub fn to_action_angle(x: [f64; 3]) -> Result<[f64; 3]> {
    let [x1, x2, x3] = x;
    if x2 == 0.0 && x3 == 0.0 {
        return Err(So3Error::SingularLocus { x1, x2, x3 });
    }
    let r = (x1 * x1 + x2 * x2 + x3 * x3).sqrt();
    let mut gamma = x2.atan2(x3);
    if gamma <= -PI {
        gamma = PI;
    }
    Ok([r, x1, gamma])
}

pub fn from_action_angle(r: f64, x1: f64, gamma: f64) -> Result<[f64; 3]> {
    if !(r > x1.abs()) {
        return Err(So3Error::OutOfDomain { r, x1 });
    }
    let rho = (r * r - x1 * x1).sqrt();
    Ok([x1, rho * gamma.sin(), rho * gamma.cos()])
}

/// Coalgebra points with `|x_i| ≤ 2` and `x2² + x3² ≥ 0.01`.
pub fn sample_coalgebra_points(rng: &mut impl Rng, count: usize) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        if x[1] * x[1] + x[2] * x[2] >= 0.01 {
            out.push(x);
        }
    }
    out
}

/// Action-angle points `(r, x1, gamma, alpha)` with `r ∈ [0.5, 3]`, `|x1| ≤ 0.9 r`.
pub fn sample_chart_points(rng: &mut impl Rng, count: usize) -> Vec<[f64; 4]> {
    (0..count)
        .map(|_| {
            let r = rng.gen_range(0.5..3.0);
            [r, r * rng.gen_range(-0.9..0.9), rng.gen_range(-PI..PI), rng.gen_range(0.0..TAU)]
        })
        .collect()
}
