//! Coordinate model of the configuration bundle and the objects living on the
//! restricted multimomentum bundle.
//!
//! A [`Chart`] with base dimension `m` and fiber dimension `n` names its
//! coordinates `x1..xm` (base), `u1..un` (fiber) and `pI_A` for the momentum
//! `p^I_A` paired with `u^A` in the direction `x^I`. The extended momentum of
//! the full multimomentum bundle is the single reserved name `pext`.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{parse, simplify, Binding, Expr};

/// Reserved name of the extended momentum coordinate.
pub const PEXT: &str = "pext";

/// Classification of a chart variable. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Base(usize),
    Fiber(usize),
    Momentum { dir: usize, fiber: usize },
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Chart {
    m: usize,
    n: usize,
}

impl Chart {
    pub fn new(m: usize, n: usize) -> Result<Chart> {
        if m == 0 || n == 0 {
            return Err(Error::Shape(format!(
                "chart dimensions must be positive, got m={m}, n={n}"
            )));
        }
        Ok(Chart { m, n })
    }

    /// Base dimension.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Fiber dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x(&self, i: usize) -> String {
        debug_assert!(i < self.m);
        format!("x{}", i + 1)
    }

    pub fn u(&self, a: usize) -> String {
        debug_assert!(a < self.n);
        format!("u{}", a + 1)
    }

    pub fn p(&self, i: usize, a: usize) -> String {
        debug_assert!(i < self.m && a < self.n);
        format!("p{}_{}", i + 1, a + 1)
    }

    pub fn x_var(&self, i: usize) -> Expr {
        Expr::var(self.x(i))
    }

    pub fn u_var(&self, a: usize) -> Expr {
        Expr::var(self.u(a))
    }

    pub fn p_var(&self, i: usize, a: usize) -> Expr {
        Expr::var(self.p(i, a))
    }

    pub fn base_names(&self) -> Vec<String> {
        (0..self.m).map(|i| self.x(i)).collect()
    }

    pub fn fiber_names(&self) -> Vec<String> {
        (0..self.n).map(|a| self.u(a)).collect()
    }

    /// Momenta in direction-major order: `p1_1, p1_2, .., p2_1, ..`.
    pub fn momentum_names(&self) -> Vec<String> {
        (0..self.m)
            .flat_map(|i| (0..self.n).map(move |a| (i, a)))
            .map(|(i, a)| self.p(i, a))
            .collect()
    }

    /// Base and fiber names: the coordinates a current may depend on.
    pub fn configuration_names(&self) -> Vec<String> {
        let mut v = self.base_names();
        v.extend(self.fiber_names());
        v
    }

    /// All coordinates of the restricted multimomentum bundle, in the order
    /// base, fiber, momenta. Value vectors throughout the crate use this order.
    pub fn names(&self) -> Vec<String> {
        let mut v = self.configuration_names();
        v.extend(self.momentum_names());
        v
    }

    pub fn dim(&self) -> usize {
        self.m + self.n + self.m * self.n
    }

    pub fn classify(&self, name: &str) -> Option<VarKind> {
        if name == PEXT {
            return Some(VarKind::Extended);
        }
        let index = |s: &str, bound: usize| -> Option<usize> {
            if s.starts_with('0') {
                return None;
            }
            let k: usize = s.parse().ok()?;
            (1..=bound).contains(&k).then(|| k - 1)
        };
        if let Some(rest) = name.strip_prefix('x') {
            return index(rest, self.m).map(VarKind::Base);
        }
        if let Some(rest) = name.strip_prefix('u') {
            return index(rest, self.n).map(VarKind::Fiber);
        }
        if let Some(rest) = name.strip_prefix('p') {
            let (dir, fiber) = rest.split_once('_')?;
            return Some(VarKind::Momentum {
                dir: index(dir, self.m)?,
                fiber: index(fiber, self.n)?,
            });
        }
        None
    }

    /// Binding from a value vector laid out as [`Chart::names`].
    pub fn binding(&self, values: &[f64]) -> Binding {
        self.names()
            .into_iter()
            .zip(values.iter().copied())
            .collect()
    }

    /// Variables of `e` that are not coordinates of this chart (`pext` is
    /// rejected too).
    pub fn foreign_variables(&self, e: &Expr) -> Vec<String> {
        e.variables()
            .into_iter()
            .filter(|v| !matches!(self.classify(v), Some(k) if k != VarKind::Extended))
            .collect()
    }
}

/// A Hamiltonian section, determined locally by one function `H(x, u, p)`;
/// the section itself is `(x, u, -H, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSection {
    h: Expr,
}

impl HamiltonianSection {
    pub fn new(chart: &Chart, h: Expr) -> Result<Self> {
        let foreign = chart.foreign_variables(&h);
        if !foreign.is_empty() {
            return Err(Error::Model(format!(
                "Hamiltonian references variables outside the chart: {}",
                foreign.join(", ")
            )));
        }
        Ok(HamiltonianSection { h })
    }

    pub fn parse(chart: &Chart, text: &str) -> Result<Self> {
        Self::new(chart, parse(text)?)
    }

    pub fn expr(&self) -> &Expr {
        &self.h
    }

    /// Same section with `H` replaced by `H + s·G`.
    pub fn shifted(&self, s: f64, g: &Expr) -> HamiltonianSection {
        HamiltonianSection {
            h: simplify(&(self.h.clone() + Expr::constant(s) * g.clone())),
        }
    }
}

/// Coefficient `F⁰(x, u, p)` of `dᵐx` of a density on the restricted
/// multimomentum bundle.
pub type DensityCoefficient = Expr;

/// Extended Hamiltonian density `pext + H`.
pub fn extended_density(h: &HamiltonianSection) -> Expr {
    simplify(&(Expr::var(PEXT) + h.expr().clone()))
}

/// A current stored as its decomposition `α^{0i} = Y^α p^i_α + β^i`:
/// a vertical field `Y` (n components) and a semibasic form `β`
/// (m components), all functions of `(x, u)` only.
#[derive(Debug, Clone, PartialEq)]
pub struct Current {
    pub y: Vec<Expr>,
    pub beta: Vec<Expr>,
}

impl Current {
    pub fn new(y: Vec<Expr>, beta: Vec<Expr>) -> Current {
        Current { y, beta }
    }

    pub fn parse<S: AsRef<str>>(y: &[S], beta: &[S]) -> Result<Current> {
        let y = y
            .iter()
            .map(|s| parse(s.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        let beta = beta
            .iter()
            .map(|s| parse(s.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Current { y, beta })
    }

    pub fn zero(chart: &Chart) -> Current {
        Current {
            y: vec![Expr::zero(); chart.n()],
            beta: vec![Expr::zero(); chart.m()],
        }
    }

    fn zip_with(&self, other: &Current, f: impl Fn(Expr, Expr) -> Expr) -> Current {
        let z = |a: &[Expr], b: &[Expr]| -> Vec<Expr> {
            a.iter()
                .zip(b)
                .map(|(x, y)| simplify(&f(x.clone(), y.clone())))
                .collect()
        };
        Current {
            y: z(&self.y, &other.y),
            beta: z(&self.beta, &other.beta),
        }
    }

    pub fn plus(&self, other: &Current) -> Current {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn minus(&self, other: &Current) -> Current {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scaled(&self, s: f64) -> Current {
        let f = |v: &[Expr]| {
            v.iter()
                .map(|e| simplify(&(Expr::constant(s) * e.clone())))
                .collect()
        };
        Current {
            y: f(&self.y),
            beta: f(&self.beta),
        }
    }

    /// Recover `(Y, β)` from raw coefficients `α^{0i}` of a current:
    /// `Y^α = ∂α^{01}/∂p^1_α`, `β^i = α^{0i}|_{p=0}`. Requires the
    /// coefficients to have the affine shape of a current.
    pub fn from_coefficients(coeffs: &[Expr], chart: &Chart) -> Result<Current> {
        if coeffs.len() != chart.m() {
            return Err(Error::Shape(format!(
                "expected {} coefficients, got {}",
                chart.m(),
                coeffs.len()
            )));
        }
        let y: Vec<Expr> = (0..chart.n())
            .map(|a| coeffs[0].diff(&chart.p(0, a)))
            .collect();
        let zero = Expr::zero();
        let beta = coeffs
            .iter()
            .map(|c| {
                let at_zero = chart
                    .momentum_names()
                    .iter()
                    .fold(c.clone(), |acc, p| acc.substitute(p, &zero));
                simplify(&at_zero)
            })
            .collect();
        let current = Current { y, beta };
        let report = validate_current(&current, chart);
        if !report.valid {
            return Err(Error::InvalidCurrent(report.to_string()));
        }
        // the affine shape must be reproduced exactly
        for (i, c) in coeffs.iter().enumerate() {
            let rebuilt = &current_coefficients(&current, chart)[i];
            if !simplify(&(c.clone() - rebuilt.clone())).is_zero() {
                return Err(Error::InvalidCurrent(format!(
                    "coefficient {} is not of the form Y^a p^{}_a + beta^{}",
                    i + 1,
                    i + 1,
                    i + 1
                )));
            }
        }
        Ok(current)
    }
}

/// Any observable of the theory. For `m = 1` every function on the
/// restricted multimomentum bundle is a current and is stored directly.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    Function(Expr),
    Current(Current),
}

impl Observable {
    /// Coefficients `α^{0i}` of the (m−1)-form.
    pub fn coefficients(&self, chart: &Chart) -> Vec<Expr> {
        match self {
            Observable::Function(f) => vec![f.clone()],
            Observable::Current(c) => current_coefficients(c, chart),
        }
    }
}

impl From<Current> for Observable {
    fn from(c: Current) -> Observable {
        Observable::Current(c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Offense {
    pub component: String,
    pub variable: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    /// `m = 1`: every function is a current, nothing to check.
    pub skipped: bool,
    pub shape_errors: Vec<String>,
    pub offending: Vec<Offense>,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.valid {
            return f.write_str("valid");
        }
        let mut parts: Vec<String> = self.shape_errors.clone();
        parts.extend(
            self.offending
                .iter()
                .map(|o| format!("{} depends on {}", o.component, o.variable)),
        );
        f.write_str(&parts.join("; "))
    }
}

/// Check that `Y` and `β` depend on `(x, u)` only. For `m ≥ 2` this is exactly
/// the condition for `Y^α p^i_α + β^i` to define a current.
pub fn validate_current(c: &Current, chart: &Chart) -> ValidationReport {
    let mut report = ValidationReport {
        valid: true,
        skipped: false,
        shape_errors: Vec::new(),
        offending: Vec::new(),
    };
    if c.y.len() != chart.n() {
        report.shape_errors.push(format!(
            "Y has {} components, expected {}",
            c.y.len(),
            chart.n()
        ));
    }
    if c.beta.len() != chart.m() {
        report.shape_errors.push(format!(
            "beta has {} components, expected {}",
            c.beta.len(),
            chart.m()
        ));
    }
    let allowed: BTreeSet<String> = chart.configuration_names().into_iter().collect();
    let labelled =
        c.y.iter()
            .enumerate()
            .map(|(a, e)| (format!("Y[{}]", a + 1), e))
            .chain(
                c.beta
                    .iter()
                    .enumerate()
                    .map(|(i, e)| (format!("beta[{}]", i + 1), e)),
            );
    for (label, e) in labelled {
        for v in e.variables() {
            if !allowed.contains(&v) {
                report.offending.push(Offense {
                    component: label.clone(),
                    variable: v,
                });
            }
        }
    }
    report.valid = report.shape_errors.is_empty() && report.offending.is_empty();
    if chart.m() == 1 && report.valid {
        report.skipped = true;
    }
    report
}

pub(crate) fn require_valid(c: &Current, chart: &Chart) -> Result<()> {
    let report = validate_current(c, chart);
    if report.valid {
        Ok(())
    } else {
        Err(Error::InvalidCurrent(report.to_string()))
    }
}

/// Coefficients `α^{0i} = Y^α p^i_α + β^i` of the current.
pub fn current_coefficients(c: &Current, chart: &Chart) -> Vec<Expr> {
    (0..chart.m())
        .map(|i| {
            let momentum = Expr::sum((0..chart.n()).map(|a| c.y[a].clone() * chart.p_var(i, a)));
            simplify(&(momentum + c.beta[i].clone()))
        })
        .collect()
}

/// Exterior derivative of a current in the basis
/// `{dᵐx, du^β ∧ d^{m-1}x_i, Σ_i dp^i_α ∧ d^{m-1}x_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentDifferential {
    /// Coefficient of `dᵐx`.
    pub c0: Expr,
    /// `cu[β][i]`: coefficient of `du^β ∧ d^{m-1}x_i`.
    pub cu: Vec<Vec<Expr>>,
    /// `cp[α]`: coefficient of `Σ_i dp^i_α ∧ d^{m-1}x_i`.
    pub cp: Vec<Expr>,
}

pub fn d_current(c: &Current, chart: &Chart) -> Result<CurrentDifferential> {
    require_valid(c, chart)?;
    let (m, n) = (chart.m(), chart.n());
    let c0 = Expr::sum((0..m).map(|i| {
        let xi = chart.x(i);
        let ys = Expr::sum((0..n).map(|a| c.y[a].diff(&xi) * chart.p_var(i, a)));
        c.beta[i].diff(&xi) + ys
    }));
    let cu = (0..n)
        .map(|b| {
            let ub = chart.u(b);
            (0..m)
                .map(|i| {
                    let ys = Expr::sum((0..n).map(|a| c.y[a].diff(&ub) * chart.p_var(i, a)));
                    simplify(&(c.beta[i].diff(&ub) + ys))
                })
                .collect()
        })
        .collect();
    Ok(CurrentDifferential {
        c0: simplify(&c0),
        cu,
        cp: c.y.iter().map(simplify).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart(m: usize, n: usize) -> Chart {
        Chart::new(m, n).unwrap()
    }

    #[test]
    fn names_are_disjoint_and_classified() {
        let c = chart(2, 3);
        let names = c.names();
        assert_eq!(names.len(), c.dim());
        let set: BTreeSet<_> = names.iter().collect();
        assert_eq!(set.len(), names.len());
        assert_eq!(
            c.classify("p2_3"),
            Some(VarKind::Momentum { dir: 1, fiber: 2 })
        );
        assert_eq!(c.classify("x3"), None);
        assert_eq!(c.classify("u0"), None);
        assert_eq!(c.classify("u01"), None);
        assert_eq!(c.classify("pext"), Some(VarKind::Extended));
        assert!(Chart::new(0, 1).is_err());
    }

    #[test]
    fn validate_examples() {
        let c = chart(2, 1);
        let ok = Current::parse(&["1"], &["0", "0"]).unwrap();
        assert!(validate_current(&ok, &c).valid);

        let bad = Current::parse(&["p1_1"], &["0", "0"]).unwrap();
        let r = validate_current(&bad, &c);
        assert!(!r.valid);
        assert_eq!(r.offending[0].variable, "p1_1");

        let ok2 = Current::parse(&["sin(u1)"], &["x2", "x1"]).unwrap();
        assert!(validate_current(&ok2, &c).valid);

        let short = Current::parse(&["1"], &["0"]).unwrap();
        assert!(!validate_current(&short, &c).valid);
    }

    #[test]
    fn coefficient_examples() {
        let c11 = chart(1, 1);
        let cur = Current::parse(&["u1"], &["0"]).unwrap();
        assert_eq!(current_coefficients(&cur, &c11)[0].to_string(), "p1_1*u1");

        let c21 = chart(2, 1);
        let cur = Current::parse(&["0"], &["x1*u1", "x2"]).unwrap();
        let co = current_coefficients(&cur, &c21);
        assert_eq!(co[0].to_string(), "u1*x1");
        assert_eq!(co[1].to_string(), "x2");

        let cur = Current::parse(&["1"], &["0", "0"]).unwrap();
        let co = current_coefficients(&cur, &c21);
        assert_eq!(co[0].to_string(), "p1_1");
        assert_eq!(co[1].to_string(), "p2_1");
    }

    #[test]
    fn differential_examples() {
        let c21 = chart(2, 1);
        let cur = Current::parse(&["0"], &["3", "-2"]).unwrap();
        let d = d_current(&cur, &c21).unwrap();
        assert!(d.c0.is_zero() && d.cp[0].is_zero());
        assert!(d.cu.iter().flatten().all(Expr::is_zero));

        let c11 = chart(1, 1);
        let cur = Current::parse(&["1"], &["0"]).unwrap();
        let d = d_current(&cur, &c11).unwrap();
        assert!(d.c0.is_zero() && d.cu[0][0].is_zero());
        assert!(d.cp[0].is_one());

        let cur = Current::parse(&["u1"], &["0", "0"]).unwrap();
        let d = d_current(&cur, &c21).unwrap();
        assert!(d.c0.is_zero());
        assert_eq!(d.cu[0][0].to_string(), "p1_1");
        assert_eq!(d.cu[0][1].to_string(), "p2_1");
        assert_eq!(d.cp[0].to_string(), "u1");
    }

    #[test]
    fn differential_rejects_invalid_current() {
        let c21 = chart(2, 1);
        let bad = Current::parse(&["p2_1"], &["0", "0"]).unwrap();
        assert!(matches!(
            d_current(&bad, &c21),
            Err(Error::InvalidCurrent(_))
        ));
    }

    #[test]
    fn extended_density_examples() {
        let c = chart(1, 1);
        let h0 = HamiltonianSection::parse(&c, "0").unwrap();
        assert_eq!(extended_density(&h0).to_string(), "pext");
        let h = HamiltonianSection::parse(&c, "u1^2/2").unwrap();
        let f = extended_density(&h);
        assert_eq!(f.diff(PEXT), Expr::one());
        let b: Binding = [("pext".to_string(), 1.0), ("u1".to_string(), 2.0)].into();
        assert_eq!(f.eval(&b).unwrap(), 3.0);
    }

    #[test]
    fn hamiltonian_rejects_foreign_variables() {
        let c = chart(1, 1);
        assert!(HamiltonianSection::parse(&c, "u2 + p1_1").is_err());
        assert!(HamiltonianSection::parse(&c, "pext").is_err());
    }

    #[test]
    fn coefficient_round_trip() {
        let c = chart(2, 2);
        let cur = Current::parse(&["u1*x2", "sin(u2)"], &["x1*u2", "u1^2"]).unwrap();
        let back = Current::from_coefficients(&current_coefficients(&cur, &c), &c).unwrap();
        for (a, b) in cur
            .y
            .iter()
            .chain(&cur.beta)
            .zip(back.y.iter().chain(&back.beta))
        {
            assert!(simplify(&(a.clone() - b.clone())).is_zero(), "{a} vs {b}");
        }
        let not_current = vec![
            crate::expr::parse("p1_1*p1_1").unwrap(),
            crate::expr::parse("p2_1").unwrap(),
        ];
        assert!(Current::from_coefficients(&not_current, &c).is_err());
    }
}
