use super::{Func, ScalarExpr};
use crate::chart::{Chart, ChartError};

/// Exact partial derivative of `e` with respect to chart coordinate `coord`.
pub fn differentiate(e: &ScalarExpr, coord: &str, chart: &Chart) -> Result<ScalarExpr, ChartError> {
    if !chart.contains(coord) {
        return Err(ChartError::UnknownCoordinate(coord.to_string()));
    }
    Ok(derive(e, coord))
}

pub(super) fn derive(e: &ScalarExpr, x: &str) -> ScalarExpr {
    if !e.mentions(x) {
        return ScalarExpr::zero();
    }
    match e {
        ScalarExpr::Const(_) => ScalarExpr::zero(),
        ScalarExpr::Coord(n) => ScalarExpr::Const(if n == x { 1.0 } else { 0.0 }),
        ScalarExpr::Sum(ts) => ScalarExpr::sum(ts.iter().map(|t| derive(t, x))),
        ScalarExpr::Product(fs) => {
            // Leibniz: sum over factors of (d factor) * (other factors).
            let terms = (0..fs.len()).filter(|&i| fs[i].mentions(x)).map(|i| {
                let others = fs.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, f)| f.clone());
                ScalarExpr::product(std::iter::once(derive(&fs[i], x)).chain(others))
            });
            ScalarExpr::sum(terms.collect::<Vec<_>>())
        }
        ScalarExpr::Pow(b, n) => ScalarExpr::product([
            ScalarExpr::Const(*n as f64),
            ScalarExpr::pow((**b).clone(), n - 1),
            derive(b, x),
        ]),
        ScalarExpr::Neg(b) => ScalarExpr::neg(derive(b, x)),
        ScalarExpr::Quot(num, den) => {
            let dn = derive(num, x);
            let dd = derive(den, x);
            if dd.is_zero() {
                return ScalarExpr::quot(dn, (**den).clone());
            }
            ScalarExpr::quot(
                ScalarExpr::sum([
                    ScalarExpr::product([dn, (**den).clone()]),
                    ScalarExpr::neg(ScalarExpr::product([(**num).clone(), dd])),
                ]),
                ScalarExpr::pow((**den).clone(), 2),
            )
        }
        ScalarExpr::Call(f, arg) => {
            let inner = derive(arg, x);
            let a = (**arg).clone();
            let outer = match f {
                Func::Sin => ScalarExpr::cos(a),
                Func::Cos => ScalarExpr::neg(ScalarExpr::sin(a)),
                Func::Exp => ScalarExpr::exp(a),
                Func::Sqrt => ScalarExpr::quot(
                    ScalarExpr::Const(0.5),
                    ScalarExpr::sqrt(a),
                ),
            };
            ScalarExpr::product([outer, inner])
        }
    }
}
