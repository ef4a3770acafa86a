//! Algebraic simplification.
//!
//! Bottom-up rewrite into a light canonical form:
//! - sums are flattened into `constant + Σ coef·term` with like terms merged,
//! - products are flattened into `coef · Π base^k / Π base^k` with equal bases
//!   merged and factors sorted by [`Expr::canonical_cmp`],
//! - constant subtrees are folded whenever the result is finite.
//!
//! No expansion of products over sums is attempted.

use std::cmp::Ordering;

use super::{div_checked, pow_checked, Expr};

/// Simplify `e`. The result evaluates to the same value as `e` wherever both
/// are defined.
pub fn simplify(e: &Expr) -> Expr {
    match e {
        Expr::Const(c) => Expr::constant(*c),
        Expr::Var(_) => e.clone(),
        Expr::Neg(a) => build_sum(&(-simplify(a))),
        Expr::Add(a, b) => build_sum(&(simplify(a) + simplify(b))),
        Expr::Sub(a, b) => build_sum(&(simplify(a) - simplify(b))),
        Expr::Mul(a, b) => build_product(&(simplify(a) * simplify(b))),
        Expr::Div(a, b) => {
            let (a, b) = (simplify(a), simplify(b));
            if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
                if let Ok(v) = div_checked(x, y) {
                    if v.is_finite() {
                        return Expr::constant(v);
                    }
                }
                return a / b;
            }
            if b.is_zero() {
                return a / b;
            }
            build_product(&(a / b))
        }
        Expr::Pow(a, n) => {
            let a = simplify(a);
            match *n {
                0 => Expr::one(),
                1 => a,
                _ => {
                    if let Some(c) = a.as_const() {
                        return match pow_checked(c, *n) {
                            Ok(v) if v.is_finite() => Expr::constant(v),
                            _ => a.powi(*n),
                        };
                    }
                    build_product(&a.powi(*n))
                }
            }
        }
        Expr::Func(f, a) => {
            let a = simplify(a);
            if let Some(c) = a.as_const() {
                if let Ok(v) = f.apply(c) {
                    if v.is_finite() {
                        return Expr::constant(v);
                    }
                }
            }
            Expr::apply(*f, a)
        }
    }
}

/// Split off the numeric coefficient sitting at the leftmost leaf of a
/// product/quotient chain.
fn split_coef(e: &Expr) -> (f64, Expr) {
    match e {
        Expr::Const(c) => (*c, Expr::one()),
        Expr::Mul(l, r) => {
            let (c, l2) = split_coef(l);
            if l2.is_one() {
                (c, (**r).clone())
            } else {
                (c, l2 * (**r).clone())
            }
        }
        Expr::Div(l, r) => {
            let (c, l2) = split_coef(l);
            (c, l2 / (**r).clone())
        }
        _ => (1.0, e.clone()),
    }
}

/// Multiply `term` by `c`, placing the constant at the leftmost leaf.
fn scale(c: f64, term: Expr) -> Expr {
    if c == 1.0 {
        return term;
    }
    match term {
        Expr::Const(k) => Expr::constant(c * k),
        Expr::Mul(l, r) => Expr::Mul(Box::new(scale(c, *l)), r),
        Expr::Div(l, r) => Expr::Div(Box::new(scale(c, *l)), r),
        other => Expr::constant(c) * other,
    }
}

struct SumAcc {
    constant: f64,
    terms: Vec<(f64, Expr)>,
}

impl SumAcc {
    fn push(&mut self, coef: f64, term: Expr) {
        if let Some(slot) = self
            .terms
            .iter_mut()
            .find(|(_, t)| t.canonical_cmp(&term) == Ordering::Equal)
        {
            slot.0 += coef;
        } else {
            self.terms.push((coef, term));
        }
    }

    fn collect(&mut self, e: &Expr, sign: f64) {
        match e {
            Expr::Const(c) => self.constant += sign * c,
            Expr::Add(a, b) => {
                self.collect(a, sign);
                self.collect(b, sign);
            }
            Expr::Sub(a, b) => {
                self.collect(a, sign);
                self.collect(b, -sign);
            }
            Expr::Neg(a) => self.collect(a, -sign),
            _ => {
                let (c, term) = split_coef(e);
                match term {
                    Expr::Add(..) | Expr::Sub(..) | Expr::Neg(_) | Expr::Const(_) => {
                        self.collect(&term, sign * c)
                    }
                    _ => self.push(sign * c, term),
                }
            }
        }
    }
}

fn build_sum(e: &Expr) -> Expr {
    let mut acc = SumAcc {
        constant: 0.0,
        terms: Vec::new(),
    };
    acc.collect(e, 1.0);
    let mut terms: Vec<(f64, Expr)> = acc.terms.into_iter().filter(|(c, _)| *c != 0.0).collect();
    terms.sort_by(|a, b| a.1.canonical_cmp(&b.1));

    let mut out: Option<Expr> = None;
    for (c, t) in terms {
        out = Some(match out {
            None if c == -1.0 => -t,
            None => scale(c, t),
            Some(acc) if c < 0.0 => acc - scale(-c, t),
            Some(acc) => acc + scale(c, t),
        });
    }
    let k = acc.constant + 0.0;
    match out {
        None => Expr::constant(k),
        Some(e) if k == 0.0 => e,
        Some(e) if k < 0.0 => e - Expr::constant(-k),
        Some(e) => e + Expr::constant(k),
    }
}

struct ProdAcc {
    coef: f64,
    factors: Vec<(Expr, i32)>,
}

impl ProdAcc {
    fn push(&mut self, base: Expr, k: i32) {
        if let Some(slot) = self
            .factors
            .iter_mut()
            .find(|(b, _)| b.canonical_cmp(&base) == Ordering::Equal)
        {
            slot.1 += k;
        } else {
            self.factors.push((base, k));
        }
    }

    fn collect(&mut self, e: &Expr, k: i32) {
        match e {
            Expr::Const(c) => match pow_checked(*c, k) {
                Ok(v) if v.is_finite() => self.coef *= v,
                _ => self.push(e.clone(), k),
            },
            Expr::Mul(a, b) => {
                self.collect(a, k);
                self.collect(b, k);
            }
            Expr::Div(a, b) => {
                self.collect(a, k);
                self.collect(b, -k);
            }
            Expr::Neg(a) => {
                if k % 2 != 0 {
                    self.coef = -self.coef;
                }
                self.collect(a, k);
            }
            Expr::Pow(a, n) => self.collect(a, k.saturating_mul(*n)),
            _ => self.push(e.clone(), k),
        }
    }
}

fn power(base: Expr, k: i32) -> Expr {
    if k == 1 {
        base
    } else {
        base.powi(k)
    }
}

fn build_product(e: &Expr) -> Expr {
    let mut acc = ProdAcc {
        coef: 1.0,
        factors: Vec::new(),
    };
    acc.collect(e, 1);
    let has_zero_denominator = acc.factors.iter().any(|(b, k)| *k < 0 && b.is_zero());
    if acc.coef == 0.0 && !has_zero_denominator {
        return Expr::zero();
    }
    let mut factors: Vec<(Expr, i32)> = acc.factors.into_iter().filter(|(_, k)| *k != 0).collect();
    factors.sort_by(|a, b| a.0.canonical_cmp(&b.0));

    let mut num: Option<Expr> = None;
    let mut den: Option<Expr> = None;
    for (base, k) in factors {
        if k > 0 {
            let f = power(base, k);
            num = Some(match num {
                None => f,
                Some(n) => n * f,
            });
        } else {
            let f = power(base, -k);
            den = Some(match den {
                None => f,
                Some(d) => d * f,
            });
        }
    }
    let mono = match (num, den) {
        (None, None) => Expr::one(),
        (Some(n), None) => n,
        (None, Some(d)) => Expr::one() / d,
        (Some(n), Some(d)) => n / d,
    };
    if acc.coef == -1.0 {
        if mono.is_one() {
            return Expr::constant(-1.0);
        }
        return -mono;
    }
    scale(acc.coef, mono)
}
