//! Symbolic expressions over named real variables.
//!
//! Every coordinate function the library manipulates (Hamiltonians, current
//! coefficients, bracket outputs) is an [`Expr`]. Trees are immutable values:
//! operations return new trees and never mutate their input, so an `Expr` can
//! be shared freely between threads.
//!
//! Exponents are restricted to constant integers, which keeps
//! differentiation closed-form. Non-integer powers are written as
//! `exp(a*ln(x))`.

mod compile;
pub mod gen;
mod parse;
mod simplify;

pub use compile::CompiledExpr;
pub use parse::{parse, ParseError};
pub use simplify::simplify;

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

/// Elementary functions admitted by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sin, Func::Cos, Func::Exp, Func::Ln, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn apply(self, x: f64) -> Result<f64, EvalError> {
        match self {
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Exp => Ok(x.exp()),
            Func::Ln if x <= 0.0 => Err(EvalError::Domain(format!("ln of non-positive value {x}"))),
            Func::Ln => Ok(x.ln()),
            Func::Sqrt if x < 0.0 => Err(EvalError::Domain(format!("sqrt of negative value {x}"))),
            Func::Sqrt => Ok(x.sqrt()),
        }
    }
}

/// Expression tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Integer power.
    Pow(Box<Expr>, i32),
    Func(Func, Box<Expr>),
}

/// Variable name to value map used by [`Expr::eval`].
pub type Binding = HashMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain error: {0}")]
    Domain(String),
}

pub(crate) fn pow_checked(base: f64, exp: i32) -> Result<f64, EvalError> {
    if base == 0.0 && exp == 0 {
        return Err(EvalError::Domain("0^0 is undefined".into()));
    }
    if base == 0.0 && exp < 0 {
        return Err(EvalError::Domain(format!("0^{exp} is undefined")));
    }
    Ok(base.powi(exp))
}

pub(crate) fn div_checked(num: f64, den: f64) -> Result<f64, EvalError> {
    if den == 0.0 {
        return Err(EvalError::Domain("division by zero".into()));
    }
    Ok(num / den)
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        // -0.0 and 0.0 must compare equal structurally
        Expr::Const(c + 0.0)
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn powi(self, n: i32) -> Expr {
        Expr::Pow(Box::new(self), n)
    }

    pub fn apply(f: Func, arg: Expr) -> Expr {
        Expr::Func(f, Box::new(arg))
    }

    pub fn sin(self) -> Expr {
        Expr::apply(Func::Sin, self)
    }

    pub fn cos(self) -> Expr {
        Expr::apply(Func::Cos, self)
    }

    pub fn exp(self) -> Expr {
        Expr::apply(Func::Exp, self)
    }

    pub fn ln(self) -> Expr {
        Expr::apply(Func::Ln, self)
    }

    pub fn sqrt(self) -> Expr {
        Expr::apply(Func::Sqrt, self)
    }

    /// Sum of an iterator of expressions; the empty sum is `0`.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms
            .into_iter()
            .reduce(|a, b| a + b)
            .unwrap_or_else(Expr::zero)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    /// Names of every variable referenced by the tree.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => v == name,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.contains_var(name),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.contains_var(name) || b.contains_var(name)
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => 1 + a.size(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    pub fn eval(&self, binding: &Binding) -> Result<f64, EvalError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(v) => binding
                .get(v)
                .copied()
                .ok_or_else(|| EvalError::Unbound(v.clone())),
            Expr::Neg(a) => Ok(-a.eval(binding)?),
            Expr::Add(a, b) => Ok(a.eval(binding)? + b.eval(binding)?),
            Expr::Sub(a, b) => Ok(a.eval(binding)? - b.eval(binding)?),
            Expr::Mul(a, b) => Ok(a.eval(binding)? * b.eval(binding)?),
            Expr::Div(a, b) => div_checked(a.eval(binding)?, b.eval(binding)?),
            Expr::Pow(a, n) => pow_checked(a.eval(binding)?, *n),
            Expr::Func(f, a) => f.apply(a.eval(binding)?),
        }
    }

    /// Replace every occurrence of variable `name` by `with`.
    pub fn substitute(&self, name: &str, with: &Expr) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) if v == name => with.clone(),
            Expr::Var(_) => self.clone(),
            Expr::Neg(a) => -a.substitute(name, with),
            Expr::Add(a, b) => a.substitute(name, with) + b.substitute(name, with),
            Expr::Sub(a, b) => a.substitute(name, with) - b.substitute(name, with),
            Expr::Mul(a, b) => a.substitute(name, with) * b.substitute(name, with),
            Expr::Div(a, b) => a.substitute(name, with) / b.substitute(name, with),
            Expr::Pow(a, n) => a.substitute(name, with).powi(*n),
            Expr::Func(f, a) => Expr::apply(*f, a.substitute(name, with)),
        }
    }

    /// Exact symbolic partial derivative with respect to `var`, simplified.
    pub fn diff(&self, var: &str) -> Expr {
        simplify(&self.derivative(var))
    }

    /// Unsimplified derivative; callers normally want [`Expr::diff`].
    pub fn derivative(&self, var: &str) -> Expr {
        if !self.contains_var(var) {
            return Expr::zero();
        }
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(v) => {
                if v == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Neg(a) => -a.derivative(var),
            Expr::Add(a, b) => a.derivative(var) + b.derivative(var),
            Expr::Sub(a, b) => a.derivative(var) - b.derivative(var),
            Expr::Mul(a, b) => {
                a.derivative(var) * (**b).clone() + (**a).clone() * b.derivative(var)
            }
            Expr::Div(a, b) => {
                (a.derivative(var) * (**b).clone() - (**a).clone() * b.derivative(var))
                    / (**b).clone().powi(2)
            }
            Expr::Pow(a, n) => {
                if *n == 0 {
                    Expr::zero()
                } else {
                    Expr::constant(*n as f64) * (**a).clone().powi(n - 1) * a.derivative(var)
                }
            }
            Expr::Func(f, a) => {
                let inner = a.derivative(var);
                let arg = (**a).clone();
                match f {
                    Func::Sin => arg.cos() * inner,
                    Func::Cos => -(arg.sin()) * inner,
                    Func::Exp => arg.exp() * inner,
                    Func::Ln => inner / arg,
                    Func::Sqrt => inner / (Expr::constant(2.0) * arg.sqrt()),
                }
            }
        }
    }

    /// Resolve variable names to slots of `names` for fast repeated evaluation.
    pub fn compile(&self, names: &[String]) -> Result<CompiledExpr, EvalError> {
        CompiledExpr::new(self, names)
    }

    /// Total order used to put sums and products in canonical form.
    pub fn canonical_cmp(&self, other: &Expr) -> Ordering {
        fn rank(e: &Expr) -> u8 {
            match e {
                Expr::Const(_) => 0,
                Expr::Var(_) => 1,
                Expr::Pow(..) => 2,
                Expr::Func(..) => 3,
                Expr::Neg(_) => 4,
                Expr::Add(..) => 5,
                Expr::Sub(..) => 6,
                Expr::Mul(..) => 7,
                Expr::Div(..) => 8,
            }
        }
        match (self, other) {
            (Expr::Const(a), Expr::Const(b)) => a.total_cmp(b),
            (Expr::Var(a), Expr::Var(b)) => a.cmp(b),
            (Expr::Pow(a, n), Expr::Pow(b, k)) => a.canonical_cmp(b).then(n.cmp(k)),
            (Expr::Func(f, a), Expr::Func(g, b)) => f.cmp(g).then_with(|| a.canonical_cmp(b)),
            (Expr::Neg(a), Expr::Neg(b)) => a.canonical_cmp(b),
            (Expr::Add(a1, b1), Expr::Add(a2, b2))
            | (Expr::Sub(a1, b1), Expr::Sub(a2, b2))
            | (Expr::Mul(a1, b1), Expr::Mul(a2, b2))
            | (Expr::Div(a1, b1), Expr::Div(a2, b2)) => {
                a1.canonical_cmp(a2).then_with(|| b1.canonical_cmp(b2))
            }
            _ => rank(self).cmp(&rank(other)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if c.is_sign_negative() => 3,
            Expr::Pow(..) => 4,
            Expr::Const(_) | Expr::Var(_) | Expr::Func(..) => 5,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

/// Prints in the input grammar. Right operands of equal precedence are
/// parenthesised so that re-parsing rebuilds the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.fmt_child(f, 3)
            }
            Expr::Add(a, b) => {
                a.fmt_child(f, 1)?;
                f.write_str(" + ")?;
                b.fmt_child(f, 2)
            }
            Expr::Sub(a, b) => {
                a.fmt_child(f, 1)?;
                f.write_str(" - ")?;
                b.fmt_child(f, 2)
            }
            Expr::Mul(a, b) => {
                a.fmt_child(f, 2)?;
                f.write_str("*")?;
                b.fmt_child(f, 3)
            }
            Expr::Div(a, b) => {
                a.fmt_child(f, 2)?;
                f.write_str("/")?;
                b.fmt_child(f, 3)
            }
            Expr::Pow(a, n) => {
                a.fmt_child(f, 5)?;
                write!(f, "^{n}")
            }
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::constant(c)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl std::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            }
        }

        impl std::ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$variant(Box::new(self), Box::new(Expr::constant(rhs)))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&str, f64)]) -> Binding {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn eval_examples() {
        let e = parse("x1^2").unwrap();
        assert_eq!(e.eval(&bind(&[("x1", 3.0)])).unwrap(), 9.0);
        let e = parse("sin(x1)").unwrap();
        assert_eq!(e.eval(&bind(&[("x1", 0.0)])).unwrap(), 0.0);
        let e = parse("u1*p1_1").unwrap();
        assert_eq!(e.eval(&bind(&[("u1", 2.0), ("p1_1", 5.0)])).unwrap(), 10.0);
    }

    #[test]
    fn eval_errors() {
        let e = parse("u1 + x1").unwrap();
        assert_eq!(
            e.eval(&bind(&[("u1", 1.0)])),
            Err(EvalError::Unbound("x1".into()))
        );
        let b = bind(&[("x", 0.0), ("y", -1.0)]);
        assert!(matches!(
            parse("ln(x)").unwrap().eval(&b),
            Err(EvalError::Domain(_))
        ));
        assert!(matches!(
            parse("sqrt(y)").unwrap().eval(&b),
            Err(EvalError::Domain(_))
        ));
        assert!(matches!(
            parse("x^0").unwrap().eval(&b),
            Err(EvalError::Domain(_))
        ));
        assert!(matches!(
            parse("1/x").unwrap().eval(&b),
            Err(EvalError::Domain(_))
        ));
    }

    #[test]
    fn left_association() {
        let e = parse("8 - 4 - 2").unwrap();
        assert_eq!(e.eval(&Binding::new()).unwrap(), 2.0);
        let e = parse("8 / 4 / 2").unwrap();
        assert_eq!(e.eval(&Binding::new()).unwrap(), 1.0);
    }

    #[test]
    fn diff_examples() {
        assert_eq!(parse("u1^2").unwrap().diff("u1").to_string(), "2*u1");
        assert_eq!(parse("u1").unwrap().diff("x1").to_string(), "0");
        assert_eq!(
            parse("sin(u1)*p1_1").unwrap().diff("p1_1").to_string(),
            "sin(u1)"
        );
    }

    #[test]
    fn display_reparses_to_same_tree() {
        for text in [
            "a - (b - c)",
            "a / (b * c)",
            "-x^2",
            "(-x)^2",
            "a * -b",
            "2^-1",
            "exp(-(a + b))",
            "(a + b) * (c - d) / e",
        ] {
            let e = parse(text).unwrap();
            let again = parse(&e.to_string()).unwrap();
            assert_eq!(e, again, "{text} printed as {e}");
        }
    }

    #[test]
    fn substitute_replaces_all_occurrences() {
        let e = parse("u1*u1 + x1").unwrap();
        let s = e.substitute("u1", &Expr::constant(3.0));
        assert_eq!(s.eval(&bind(&[("x1", 1.0)])).unwrap(), 10.0);
        assert!(!s.contains_var("u1"));
    }
}
