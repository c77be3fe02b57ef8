//! Poisson bivectors over a chart: brackets, Hamiltonian vector fields, and
//! rank analysis of the bracket matrix of a family of integrals.
//!
//! Sign convention: `{f, g} = Σ W^{ij} ∂_i f ∂_j g`, so a bivector with
//! `W^{p,q} = 1` gives `{p, q} = 1` and the Hamiltonian vector field of `p` is `∂_q`.

use nalgebra::DMatrix;
use serde::Deserialize;
use thiserror::Error;

use crate::chart::{Chart, ChartError};
use crate::expr::{parse, EvalError, ParseError, Point, ScalarExpr};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoissonError {
    #[error("expression refers to `{0}`, which is not a coordinate of the chart")]
    CoordinateMismatch(String),
    #[error("expected {expected} components, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error("invalid bivector document: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, PoissonError>;

fn check(e: &ScalarExpr, chart: &Chart) -> Result<()> {
    e.check_chart(chart).map_err(PoissonError::CoordinateMismatch)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonBivector {
    chart: Chart,
    components: Vec<Vec<ScalarExpr>>,
}

impl PoissonBivector {
    /// Full component matrix `W^{ij}`. Antisymmetry is not enforced here; see
    /// [`PoissonBivector::antisymmetry_residual`].
    pub fn new(chart: Chart, components: Vec<Vec<ScalarExpr>>) -> Result<Self> {
        let k = chart.dim();
        if components.len() != k {
            return Err(PoissonError::Dimension { expected: k, got: components.len() });
        }
        for row in &components {
            if row.len() != k {
                return Err(PoissonError::Dimension { expected: k, got: row.len() });
            }
            for e in row {
                check(e, &chart)?;
            }
        }
        Ok(PoissonBivector { chart, components })
    }

    /// Builds `Σ e ∂_i ∧ ∂_j` from `(i, j, e)` terms, filling both `W^{ij}` and `W^{ji}`.
    pub fn from_wedges(chart: Chart, terms: &[(&str, &str, ScalarExpr)]) -> Result<Self> {
        let k = chart.dim();
        let mut components = vec![vec![ScalarExpr::zero(); k]; k];
        for (a, b, e) in terms {
            let i = chart.index_of(a).ok_or_else(|| ChartError::UnknownCoordinate(a.to_string()))?;
            let j = chart.index_of(b).ok_or_else(|| ChartError::UnknownCoordinate(b.to_string()))?;
            components[i][j] = components[i][j].clone() + e.clone();
            components[j][i] = components[j][i].clone() - e.clone();
        }
        PoissonBivector::new(chart, components)
    }

    /// Lie–Poisson bivector `w^{ij} = c_{ij}^h x_h` for structure constants
    /// indexed `constants[i][j][h]`.
    pub fn lie_poisson(chart: Chart, constants: &[Vec<Vec<f64>>]) -> Result<Self> {
        let k = chart.dim();
        if constants.len() != k || constants.iter().any(|r| r.len() != k || r.iter().any(|c| c.len() != k)) {
            return Err(PoissonError::Dimension { expected: k, got: constants.len() });
        }
        let names: Vec<&str> = chart.names().collect();
        let components = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        ScalarExpr::sum((0..k).filter(|&h| constants[i][j][h] != 0.0).map(|h| {
                            ScalarExpr::product([ScalarExpr::Const(constants[i][j][h]), ScalarExpr::coord(names[h])])
                        }))
                    })
                    .collect()
            })
            .collect();
        PoissonBivector::new(chart, components)
    }

    /// Loads `{"chart": [...], "components": [["expr", ...], ...]}`.
    pub fn from_json(doc: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            chart: Chart,
            components: Vec<Vec<String>>,
        }
        let doc: Doc = serde_json::from_str(doc).map_err(|e| PoissonError::Json(e.to_string()))?;
        let components = doc
            .components
            .iter()
            .map(|row| row.iter().map(|s| parse(s, &doc.chart)).collect::<std::result::Result<Vec<_>, _>>())
            .collect::<std::result::Result<Vec<_>, _>>()?;
        PoissonBivector::new(doc.chart, components)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn component(&self, i: usize, j: usize) -> &ScalarExpr {
        &self.components[i][j]
    }

    pub fn evaluate(&self, point: &Point) -> Result<DMatrix<f64>> {
        let k = self.chart.dim();
        let mut m = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] = self.components[i][j].evaluate(point)?;
            }
        }
        Ok(m)
    }

    pub fn antisymmetry_residual(&self, points: &[Point]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for p in points {
            let m = self.evaluate(p)?;
            worst = worst.max((&m + m.transpose()).amax());
        }
        Ok(worst)
    }

    /// Largest component of the Jacobiator
    /// `Σ_l (W^{li} ∂_l W^{jk} + W^{lj} ∂_l W^{ki} + W^{lk} ∂_l W^{ij})` over `points`.
    pub fn jacobi_residual(&self, points: &[Point]) -> Result<f64> {
        let k = self.chart.dim();
        let names: Vec<&str> = self.chart.names().collect();
        // grad[l][i][j] = ∂_l W^{ij}
        let grad: Vec<Vec<Vec<ScalarExpr>>> = names
            .iter()
            .map(|x| self.components.iter().map(|row| row.iter().map(|e| e.derivative(x)).collect()).collect())
            .collect();
        let mut worst: f64 = 0.0;
        for p in points {
            let w = self.evaluate(p)?;
            let mut dw = vec![DMatrix::<f64>::zeros(k, k); k];
            for l in 0..k {
                for i in 0..k {
                    for j in 0..k {
                        dw[l][(i, j)] = grad[l][i][j].evaluate(p)?;
                    }
                }
            }
            for i in 0..k {
                for j in 0..k {
                    for kk in 0..k {
                        let s: f64 = (0..k)
                            .map(|l| w[(l, i)] * dw[l][(j, kk)] + w[(l, j)] * dw[l][(kk, i)] + w[(l, kk)] * dw[l][(i, j)])
                            .sum();
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// `{f, g} = Σ_{i<j} W^{ij} (∂_i f ∂_j g − ∂_j f ∂_i g)`.
pub fn bracket(f: &ScalarExpr, g: &ScalarExpr, w: &PoissonBivector) -> Result<ScalarExpr> {
    check(f, &w.chart)?;
    check(g, &w.chart)?;
    let names: Vec<&str> = w.chart.names().collect();
    let df: Vec<ScalarExpr> = names.iter().map(|x| f.derivative(x)).collect();
    let dg: Vec<ScalarExpr> = names.iter().map(|x| g.derivative(x)).collect();
    let k = names.len();
    let mut terms = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            let wij = &w.components[i][j];
            if wij.is_zero() {
                continue;
            }
            let cross = ScalarExpr::sum([
                ScalarExpr::product([df[i].clone(), dg[j].clone()]),
                ScalarExpr::neg(ScalarExpr::product([df[j].clone(), dg[i].clone()])),
            ]);
            if !cross.is_zero() {
                terms.push(ScalarExpr::product([wij.clone(), cross]));
            }
        }
    }
    Ok(ScalarExpr::sum(terms))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    chart: Chart,
    components: Vec<ScalarExpr>,
}

impl VectorField {
    pub fn new(chart: Chart, components: Vec<ScalarExpr>) -> Result<Self> {
        if components.len() != chart.dim() {
            return Err(PoissonError::Dimension { expected: chart.dim(), got: components.len() });
        }
        for e in &components {
            check(e, &chart)?;
        }
        Ok(VectorField { chart, components })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.components
    }

    /// Directional derivative `Σ v^j ∂_j g`.
    pub fn apply(&self, g: &ScalarExpr) -> Result<ScalarExpr> {
        check(g, &self.chart)?;
        Ok(ScalarExpr::sum(
            self.chart
                .names()
                .zip(&self.components)
                .map(|(x, v)| ScalarExpr::product([v.clone(), g.derivative(x)]))
                .collect::<Vec<_>>(),
        ))
    }

    pub fn evaluate(&self, point: &Point) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.evaluate(point).map_err(Into::into)).collect()
    }
}

/// Hamiltonian vector field with `ϑ_f(g) = {f, g}`, i.e. `(ϑ_f)^j = Σ_i W^{ij} ∂_i f`.
pub fn hamiltonian_vector_field(f: &ScalarExpr, w: &PoissonBivector) -> Result<VectorField> {
    check(f, &w.chart)?;
    let names: Vec<&str> = w.chart.names().collect();
    let df: Vec<ScalarExpr> = names.iter().map(|x| f.derivative(x)).collect();
    let k = names.len();
    let components = (0..k)
        .map(|j| {
            ScalarExpr::sum(
                (0..k)
                    .filter(|&i| !w.components[i][j].is_zero() && !df[i].is_zero())
                    .map(|i| ScalarExpr::product([w.components[i][j].clone(), df[i].clone()]))
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    VectorField::new(w.chart.clone(), components)
}

/// Matrix of pairwise brackets `s_{ij} = {H_i, H_j}` of a family of integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrix {
    entries: Vec<Vec<ScalarExpr>>,
}

impl StructureMatrix {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarExpr {
        &self.entries[i][j]
    }

    pub fn evaluate(&self, point: &Point) -> Result<DMatrix<f64>> {
        let k = self.size();
        let mut m = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] = self.entries[i][j].evaluate(point)?;
            }
        }
        Ok(m)
    }
}

pub fn structure_matrix(integrals: &[ScalarExpr], w: &PoissonBivector) -> Result<StructureMatrix> {
    let k = integrals.len();
    let mut entries = vec![vec![ScalarExpr::zero(); k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let b = bracket(&integrals[i], &integrals[j], w)?;
            entries[j][i] = ScalarExpr::neg(b.clone());
            entries[i][j] = b;
        }
    }
    // Diagonal stays zero, but validate the lone integral of a 1×1 family too.
    for h in integrals {
        check(h, &w.chart)?;
    }
    Ok(StructureMatrix { entries })
}

/// Rank by Gaussian elimination with partial pivoting; pivots below
/// `1e-10 × max(max |entry|, 1)` count as zero.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let tau = 1e-10 * a.amax().max(1.0);
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let (pivot, val) = (rank..rows)
            .map(|r| (r, a[(r, col)].abs()))
            .fold((rank, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if val < tau {
            continue;
        }
        a.swap_rows(rank, pivot);
        for r in (rank + 1)..rows {
            let factor = a[(r, col)] / a[(rank, col)];
            for c in col..cols {
                a[(r, c)] -= factor * a[(rank, c)];
            }
        }
        rank += 1;
    }
    rank
}

pub fn corank_at(s: &StructureMatrix, point: &Point) -> Result<usize> {
    let m = s.evaluate(point)?;
    Ok(s.size() - numerical_rank(&m))
}

/// `max |{C, x_j}|` over the sample points and every chart coordinate `x_j`.
pub fn casimir_residual(c: &ScalarExpr, w: &PoissonBivector, points: &[Point]) -> Result<f64> {
    let brackets = w
        .chart
        .names()
        .map(|x| bracket(c, &ScalarExpr::coord(x), w))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for p in points {
        for b in &brackets {
            worst = worst.max(b.evaluate(p)?.abs());
        }
    }
    Ok(worst)
}

/// Independence measure of `fields` at `point`: the largest absolute maximal
/// minor of the component matrix (one row per field).
pub fn wedge_determinant(fields: &[VectorField], point: &Point) -> Result<f64> {
    let Some(first) = fields.first() else {
        return Err(PoissonError::Dimension { expected: 1, got: 0 });
    };
    let dim = first.chart.dim();
    if fields.len() > dim {
        return Err(PoissonError::Dimension { expected: dim, got: fields.len() });
    }
    if let Some(other) = fields.iter().find(|v| v.chart != first.chart) {
        let name = other.chart.names().find(|n| !first.chart.contains(n)).unwrap_or("?");
        return Err(PoissonError::CoordinateMismatch(name.to_string()));
    }
    let m = fields.len();
    let rows: Vec<Vec<f64>> = fields.iter().map(|v| v.evaluate(point)).collect::<Result<_>>()?;
    let mut best: f64 = 0.0;
    for cols in combinations(dim, m) {
        let minor = DMatrix::from_fn(m, m, |r, c| rows[r][cols[c]]);
        best = best.max(minor.determinant().abs());
    }
    Ok(best)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Coordinate;
    use crate::expr::point;

    fn so3() -> PoissonBivector {
        let chart = Chart::noncompact(&["x1", "x2", "x3"]).unwrap();
        let x = |n: &str| ScalarExpr::coord(n);
        PoissonBivector::from_wedges(
            chart,
            &[("x3", "x1", x("x2")), ("x1", "x2", x("x3")), ("x2", "x3", x("x1"))],
        )
        .unwrap()
    }

    fn darboux() -> PoissonBivector {
        let chart = Chart::new(vec![
            Coordinate::action("r"),
            Coordinate::action("x1"),
            Coordinate::noncompact("gamma"),
            Coordinate::periodic("alpha", std::f64::consts::TAU),
        ])
        .unwrap();
        PoissonBivector::from_wedges(chart, &[("r", "alpha", ScalarExpr::one()), ("x1", "gamma", ScalarExpr::one())])
            .unwrap()
    }

    #[test]
    fn so3_bracket_of_coordinates() {
        let w = so3();
        let b = bracket(&ScalarExpr::coord("x1"), &ScalarExpr::coord("x2"), &w).unwrap();
        assert_eq!(b, ScalarExpr::coord("x3"));
        let f = crate::expr::parse("x1*x2 + sin(x3)", w.chart()).unwrap();
        assert!(bracket(&f, &f, &w).unwrap().evaluate(&point([("x1", 0.2), ("x2", 1.0), ("x3", -0.4)])).unwrap().abs() < 1e-15);
    }

    #[test]
    fn darboux_bracket_and_fields() {
        let w = darboux();
        let b = bracket(&ScalarExpr::coord("x1"), &ScalarExpr::coord("gamma"), &w).unwrap();
        assert_eq!(b, ScalarExpr::one());
        let v = hamiltonian_vector_field(&ScalarExpr::coord("x1"), &w).unwrap();
        assert_eq!(v.components(), &[ScalarExpr::zero(), ScalarExpr::zero(), ScalarExpr::one(), ScalarExpr::zero()]);
        let v = hamiltonian_vector_field(&ScalarExpr::coord("r"), &w).unwrap();
        assert_eq!(v.components(), &[ScalarExpr::zero(), ScalarExpr::zero(), ScalarExpr::zero(), ScalarExpr::one()]);
        let v = hamiltonian_vector_field(&ScalarExpr::constant(3.0), &w).unwrap();
        assert!(v.components().iter().all(ScalarExpr::is_zero));
    }

    #[test]
    fn mismatched_coordinates_are_rejected() {
        let w = so3();
        let e = bracket(&ScalarExpr::coord("gamma"), &ScalarExpr::coord("x1"), &w);
        assert_eq!(e, Err(PoissonError::CoordinateMismatch("gamma".into())));
        assert!(hamiltonian_vector_field(&ScalarExpr::coord("q"), &w).is_err());
    }

    #[test]
    fn structure_matrix_entries() {
        let w = so3();
        let hs: Vec<_> = ["x1", "x2", "x3"].iter().map(|n| ScalarExpr::coord(n)).collect();
        let s = structure_matrix(&hs, &w).unwrap();
        assert_eq!(s.entry(0, 1), &ScalarExpr::coord("x3"));
        assert_eq!(s.entry(1, 2), &ScalarExpr::coord("x1"));
        assert_eq!(s.entry(2, 0), &ScalarExpr::coord("x2"));
        let single = structure_matrix(&hs[..1], &w).unwrap();
        assert_eq!(single.size(), 1);
        assert!(single.entry(0, 0).is_zero());
        // integrals in involution on the action-angle chart
        let d = darboux();
        let abelian: Vec<_> = ["r", "x1"].iter().map(|n| ScalarExpr::coord(n)).collect();
        let s = structure_matrix(&abelian, &d).unwrap();
        assert!((0..2).all(|i| (0..2).all(|j| s.entry(i, j).is_zero())));
    }

    #[test]
    fn corank_by_elimination() {
        let w = so3();
        let hs: Vec<_> = ["x1", "x2", "x3"].iter().map(|n| ScalarExpr::coord(n)).collect();
        let s = structure_matrix(&hs, &w).unwrap();
        // [[0,0,0],[0,0,1],[0,-1,0]] has rank 2
        assert_eq!(corank_at(&s, &point([("x1", 1.0), ("x2", 0.0), ("x3", 0.0)])).unwrap(), 1);
        assert_eq!(corank_at(&s, &point([("x1", 0.0), ("x2", 0.0), ("x3", 0.0)])).unwrap(), 3);
        assert_eq!(numerical_rank(&DMatrix::zeros(4, 4)), 0);
        assert_eq!(numerical_rank(&DMatrix::identity(3, 3)), 3);
    }

    #[test]
    fn casimir_residuals() {
        let w = so3();
        let pts = vec![point([("x1", 0.3), ("x2", -1.2), ("x3", 1.0)]), point([("x1", 2.0), ("x2", 0.5), ("x3", -0.7)])];
        let r = crate::expr::parse("sqrt(x1^2+x2^2+x3^2)", w.chart()).unwrap();
        assert!(casimir_residual(&r, &w, &pts).unwrap() < 1e-10);
        // {x1, x2} = x3 = 1 at the first point
        assert!(casimir_residual(&ScalarExpr::coord("x1"), &w, &pts[..1]).unwrap() >= 1.0);
        assert_eq!(casimir_residual(&ScalarExpr::constant(2.0), &w, &pts).unwrap(), 0.0);
    }

    #[test]
    fn wedge_of_dependent_fields_vanishes() {
        let w = darboux();
        let v = hamiltonian_vector_field(&ScalarExpr::coord("x1"), &w).unwrap();
        let p = point([("r", 1.0), ("x1", 0.0), ("gamma", 0.0), ("alpha", 0.0)]);
        assert_eq!(wedge_determinant(&[v.clone(), v.clone()], &p).unwrap(), 0.0);
        let u = hamiltonian_vector_field(&ScalarExpr::coord("r"), &w).unwrap();
        assert_eq!(wedge_determinant(&[v.clone(), u], &p).unwrap(), 1.0);
        let too_many = vec![v; 5];
        assert!(matches!(wedge_determinant(&too_many, &p), Err(PoissonError::Dimension { .. })));
    }

    #[test]
    fn json_round_trip_of_lie_poisson() {
        let doc = r#"{"chart": ["x1", "x2", "x3"],
            "components": [["0", "x3", "-x2"], ["-x3", "0", "x1"], ["x2", "-x1", "0"]]}"#;
        let w = PoissonBivector::from_json(doc).unwrap();
        let p = point([("x1", 0.7), ("x2", -0.1), ("x3", 1.9)]);
        assert_eq!(w.evaluate(&p).unwrap(), so3().evaluate(&p).unwrap());
        assert!(matches!(PoissonBivector::from_json("{}"), Err(PoissonError::Json(_))));
        assert!(matches!(
            PoissonBivector::from_json(r#"{"chart": ["x"], "components": [["y"]]}"#),
            Err(PoissonError::Parse(_))
        ));
    }

    #[test]
    fn lie_poisson_from_structure_constants() {
        let mut c = vec![vec![vec![0.0; 3]; 3]; 3];
        for (i, j, h) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            c[i][j][h] = 1.0;
            c[j][i][h] = -1.0;
        }
        let w = PoissonBivector::lie_poisson(Chart::noncompact(&["x1", "x2", "x3"]).unwrap(), &c).unwrap();
        let p = point([("x1", 0.7), ("x2", -0.1), ("x3", 1.9)]);
        assert_eq!(w.evaluate(&p).unwrap(), so3().evaluate(&p).unwrap());
        assert_eq!(w.jacobi_residual(std::slice::from_ref(&p)).unwrap(), 0.0);
        assert_eq!(w.antisymmetry_residual(&[p]).unwrap(), 0.0);
    }
}
