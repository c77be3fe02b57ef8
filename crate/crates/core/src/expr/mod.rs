//! Symbolic scalar expressions over named chart coordinates.
//!
//! Expressions are immutable trees built through smart constructors that fold
//! constants and drop additive zeros and multiplicative ones. There is no
//! canonical form: two expressions are compared by evaluating them at sample
//! points (see [`numerically_equal`]).

mod diff;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops;

use thiserror::Error;

use crate::chart::Chart;

pub use diff::differentiate;
pub use parse::{parse, parse_with_constants, ParseError};

/// Assignment of real values to coordinate names.
pub type Point = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Sqrt,
    Exp,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "sqrt" => Some(Func::Sqrt),
            "exp" => Some(Func::Exp),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    Const(f64),
    Coord(String),
    Sum(Vec<ScalarExpr>),
    Product(Vec<ScalarExpr>),
    Pow(Box<ScalarExpr>, i32),
    Neg(Box<ScalarExpr>),
    Quot(Box<ScalarExpr>, Box<ScalarExpr>),
    Call(Func, Box<ScalarExpr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no value for coordinate `{0}`")]
    Unbound(String),
    #[error("square root of negative value {value} in `{subexpr}`")]
    NegativeSqrt { subexpr: String, value: f64 },
    #[error("division by zero in `{subexpr}`")]
    DivisionByZero { subexpr: String },
}

impl ScalarExpr {
    pub fn constant(c: f64) -> Self {
        ScalarExpr::Const(c)
    }

    pub fn zero() -> Self {
        ScalarExpr::Const(0.0)
    }

    pub fn one() -> Self {
        ScalarExpr::Const(1.0)
    }

    pub fn coord(name: &str) -> Self {
        ScalarExpr::Coord(name.to_string())
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            ScalarExpr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn sum(terms: impl IntoIterator<Item = ScalarExpr>) -> Self {
        let mut constant = 0.0;
        let mut out = Vec::new();
        for t in terms {
            match t {
                ScalarExpr::Const(c) => constant += c,
                ScalarExpr::Sum(inner) => {
                    for u in inner {
                        match u {
                            ScalarExpr::Const(c) => constant += c,
                            u => out.push(u),
                        }
                    }
                }
                t => out.push(t),
            }
        }
        if constant != 0.0 {
            out.push(ScalarExpr::Const(constant));
        }
        match out.len() {
            0 => ScalarExpr::zero(),
            1 => out.pop().unwrap(),
            _ => ScalarExpr::Sum(out),
        }
    }

    pub fn product(factors: impl IntoIterator<Item = ScalarExpr>) -> Self {
        let mut constant = 1.0;
        let mut out = Vec::new();
        for f in factors {
            match f {
                ScalarExpr::Const(c) => constant *= c,
                ScalarExpr::Product(inner) => {
                    for u in inner {
                        match u {
                            ScalarExpr::Const(c) => constant *= c,
                            u => out.push(u),
                        }
                    }
                }
                f => out.push(f),
            }
        }
        if constant == 0.0 {
            return ScalarExpr::zero();
        }
        let rest = match out.len() {
            0 => return ScalarExpr::Const(constant),
            1 => out.pop().unwrap(),
            _ => ScalarExpr::Product(out),
        };
        if constant == 1.0 {
            rest
        } else if constant == -1.0 {
            ScalarExpr::neg(rest)
        } else {
            match rest {
                ScalarExpr::Product(mut fs) => {
                    fs.insert(0, ScalarExpr::Const(constant));
                    ScalarExpr::Product(fs)
                }
                r => ScalarExpr::Product(vec![ScalarExpr::Const(constant), r]),
            }
        }
    }

    pub fn neg(e: ScalarExpr) -> Self {
        match e {
            ScalarExpr::Const(c) => ScalarExpr::Const(-c),
            ScalarExpr::Neg(inner) => *inner,
            e => ScalarExpr::Neg(Box::new(e)),
        }
    }

    pub fn pow(base: ScalarExpr, exp: i32) -> Self {
        match (base, exp) {
            (_, 0) => ScalarExpr::one(),
            (b, 1) => b,
            (ScalarExpr::Const(c), n) if c != 0.0 || n > 0 => ScalarExpr::Const(c.powi(n)),
            (b, n) => ScalarExpr::Pow(Box::new(b), n),
        }
    }

    pub fn quot(num: ScalarExpr, den: ScalarExpr) -> Self {
        match (num, den) {
            (n, ScalarExpr::Const(1.0)) => n,
            (ScalarExpr::Const(n), ScalarExpr::Const(d)) if d != 0.0 => ScalarExpr::Const(n / d),
            (n, d) if n.is_zero() && matches!(d, ScalarExpr::Const(c) if c != 0.0) => n,
            (n, d) => ScalarExpr::Quot(Box::new(n), Box::new(d)),
        }
    }

    pub fn call(f: Func, arg: ScalarExpr) -> Self {
        if let ScalarExpr::Const(c) = arg {
            let folded = match f {
                Func::Sin => Some(c.sin()),
                Func::Cos => Some(c.cos()),
                Func::Exp => Some(c.exp()),
                Func::Sqrt if c >= 0.0 => Some(c.sqrt()),
                Func::Sqrt => None,
            };
            if let Some(v) = folded {
                return ScalarExpr::Const(v);
            }
        }
        ScalarExpr::Call(f, Box::new(arg))
    }

    pub fn sin(arg: ScalarExpr) -> Self {
        ScalarExpr::call(Func::Sin, arg)
    }

    pub fn cos(arg: ScalarExpr) -> Self {
        ScalarExpr::call(Func::Cos, arg)
    }

    pub fn sqrt(arg: ScalarExpr) -> Self {
        ScalarExpr::call(Func::Sqrt, arg)
    }

    pub fn exp(arg: ScalarExpr) -> Self {
        ScalarExpr::call(Func::Exp, arg)
    }

    /// Names of all coordinates referenced by the expression.
    pub fn coordinates(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_coords(&mut |n| {
            out.insert(n.to_string());
        });
        out
    }

    pub fn mentions(&self, name: &str) -> bool {
        let mut found = false;
        self.visit_coords(&mut |n| found |= n == name);
        found
    }

    fn visit_coords(&self, f: &mut impl FnMut(&str)) {
        match self {
            ScalarExpr::Const(_) => {}
            ScalarExpr::Coord(n) => f(n),
            ScalarExpr::Sum(ts) | ScalarExpr::Product(ts) => ts.iter().for_each(|t| t.visit_coords(f)),
            ScalarExpr::Pow(b, _) | ScalarExpr::Neg(b) | ScalarExpr::Call(_, b) => b.visit_coords(f),
            ScalarExpr::Quot(n, d) => {
                n.visit_coords(f);
                d.visit_coords(f);
            }
        }
    }

    /// Every referenced coordinate is declared in `chart`; returns the first offender otherwise.
    pub fn check_chart(&self, chart: &Chart) -> Result<(), String> {
        match self.coordinates().into_iter().find(|n| !chart.contains(n)) {
            Some(n) => Err(n),
            None => Ok(()),
        }
    }

    /// Replaces every occurrence of coordinate `name` by `with`, re-folding constants.
    pub fn substitute(&self, name: &str, with: &ScalarExpr) -> ScalarExpr {
        match self {
            ScalarExpr::Const(_) => self.clone(),
            ScalarExpr::Coord(n) if n == name => with.clone(),
            ScalarExpr::Coord(_) => self.clone(),
            ScalarExpr::Sum(ts) => ScalarExpr::sum(ts.iter().map(|t| t.substitute(name, with))),
            ScalarExpr::Product(ts) => ScalarExpr::product(ts.iter().map(|t| t.substitute(name, with))),
            ScalarExpr::Pow(b, n) => ScalarExpr::pow(b.substitute(name, with), *n),
            ScalarExpr::Neg(b) => ScalarExpr::neg(b.substitute(name, with)),
            ScalarExpr::Quot(n, d) => ScalarExpr::quot(n.substitute(name, with), d.substitute(name, with)),
            ScalarExpr::Call(f, b) => ScalarExpr::call(*f, b.substitute(name, with)),
        }
    }

    /// Evaluates with coordinate values supplied by `lookup`.
    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        Ok(match self {
            ScalarExpr::Const(c) => *c,
            ScalarExpr::Coord(n) => lookup(n).ok_or_else(|| EvalError::Unbound(n.clone()))?,
            ScalarExpr::Sum(ts) => {
                let mut acc = 0.0;
                for t in ts {
                    acc += t.eval_with(lookup)?;
                }
                acc
            }
            ScalarExpr::Product(ts) => {
                let mut acc = 1.0;
                for t in ts {
                    acc *= t.eval_with(lookup)?;
                }
                acc
            }
            ScalarExpr::Pow(b, n) => {
                let v = b.eval_with(lookup)?;
                if v == 0.0 && *n < 0 {
                    return Err(EvalError::DivisionByZero { subexpr: self.to_string() });
                }
                v.powi(*n)
            }
            ScalarExpr::Neg(b) => -b.eval_with(lookup)?,
            ScalarExpr::Quot(n, d) => {
                let num = n.eval_with(lookup)?;
                let den = d.eval_with(lookup)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero { subexpr: self.to_string() });
                }
                num / den
            }
            ScalarExpr::Call(f, b) => {
                let v = b.eval_with(lookup)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(EvalError::NegativeSqrt { subexpr: self.to_string(), value: v });
                        }
                        v.sqrt()
                    }
                }
            }
        })
    }

    pub fn evaluate(&self, point: &Point) -> Result<f64, EvalError> {
        self.eval_with(&|n| point.get(n).copied())
    }

    /// Evaluates at a point given as coordinate values in chart order.
    pub fn evaluate_on(&self, chart: &Chart, values: &[f64]) -> Result<f64, EvalError> {
        self.eval_with(&|n| chart.index_of(n).and_then(|i| values.get(i).copied()))
    }

    /// Exact partial derivative with respect to `name`.
    pub fn derivative(&self, name: &str) -> ScalarExpr {
        diff::derive(self, name)
    }
}

/// Builds a [`Point`] from `(name, value)` pairs.
pub fn point<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Point {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Builds a [`Point`] from chart-ordered values.
pub fn chart_point(chart: &Chart, values: &[f64]) -> Point {
    chart.names().zip(values).map(|(n, v)| (n.to_string(), *v)).collect()
}

/// Largest absolute difference of `a` and `b` over `points`.
pub fn max_abs_difference(a: &ScalarExpr, b: &ScalarExpr, points: &[Point]) -> Result<f64, EvalError> {
    let mut worst: f64 = 0.0;
    for p in points {
        worst = worst.max((a.evaluate(p)? - b.evaluate(p)?).abs());
    }
    Ok(worst)
}

/// Numerical equality at sample points, relative to the magnitude of the values.
pub fn numerically_equal(a: &ScalarExpr, b: &ScalarExpr, points: &[Point], tol: f64) -> Result<bool, EvalError> {
    for p in points {
        let (x, y) = (a.evaluate(p)?, b.evaluate(p)?);
        if (x - y).abs() > tol * x.abs().max(y.abs()).max(1.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Prec {
    Sum,
    Product,
    Power,
    Atom,
}

fn write_const(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    // Whole numbers print without a fraction; otherwise Debug formatting,
    // which round-trips exactly.
    if c.fract() == 0.0 && c.abs() < 1e15 {
        write!(f, "{}", c)
    } else {
        write!(f, "{:?}", c)
    }
}

fn write_expr(e: &ScalarExpr, need: Prec, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let own = match e {
        ScalarExpr::Const(c) if *c < 0.0 || c.is_sign_negative() => Prec::Product,
        ScalarExpr::Const(_) | ScalarExpr::Coord(_) | ScalarExpr::Call(..) => Prec::Atom,
        ScalarExpr::Sum(_) => Prec::Sum,
        ScalarExpr::Product(_) | ScalarExpr::Quot(..) | ScalarExpr::Neg(_) => Prec::Product,
        ScalarExpr::Pow(..) => Prec::Power,
    };
    if own < need {
        f.write_str("(")?;
        write_expr(e, Prec::Sum, f)?;
        return f.write_str(")");
    }
    match e {
        ScalarExpr::Const(c) if c.is_sign_negative() => {
            f.write_str("-")?;
            write_const(-c, f)
        }
        ScalarExpr::Const(c) => write_const(*c, f),
        ScalarExpr::Coord(n) => f.write_str(n),
        ScalarExpr::Sum(ts) => {
            for (i, t) in ts.iter().enumerate() {
                match t {
                    ScalarExpr::Neg(inner) if i > 0 => {
                        f.write_str(" - ")?;
                        write_expr(inner, Prec::Product, f)?;
                    }
                    ScalarExpr::Const(c) if i > 0 && c.is_sign_negative() => {
                        f.write_str(" - ")?;
                        write_const(-c, f)?;
                    }
                    t => {
                        if i > 0 {
                            f.write_str(" + ")?;
                        }
                        write_expr(t, Prec::Product, f)?;
                    }
                }
            }
            Ok(())
        }
        ScalarExpr::Product(ts) => {
            for (i, t) in ts.iter().enumerate() {
                if i > 0 {
                    f.write_str("*")?;
                }
                write_expr(t, Prec::Power, f)?;
            }
            Ok(())
        }
        ScalarExpr::Quot(n, d) => {
            write_expr(n, Prec::Product, f)?;
            f.write_str("/")?;
            write_expr(d, Prec::Power, f)
        }
        ScalarExpr::Neg(inner) => {
            f.write_str("-")?;
            write_expr(inner, Prec::Atom, f)
        }
        ScalarExpr::Pow(b, n) => {
            write_expr(b, Prec::Atom, f)?;
            write!(f, "^{}", n)
        }
        ScalarExpr::Call(func, arg) => {
            write!(f, "{}(", func.name())?;
            write_expr(arg, Prec::Sum, f)?;
            f.write_str(")")
        }
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, Prec::Sum, f)
    }
}

impl ops::Add for ScalarExpr {
    type Output = ScalarExpr;
    fn add(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::sum([self, rhs])
    }
}

impl ops::Sub for ScalarExpr {
    type Output = ScalarExpr;
    fn sub(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::sum([self, ScalarExpr::neg(rhs)])
    }
}

impl ops::Mul for ScalarExpr {
    type Output = ScalarExpr;
    fn mul(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::product([self, rhs])
    }
}

impl ops::Div for ScalarExpr {
    type Output = ScalarExpr;
    fn div(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::quot(self, rhs)
    }
}

impl ops::Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr::neg(self)
    }
}
