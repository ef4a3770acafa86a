//! Seeded random expression generators for property checks.

use rand::Rng;

use super::{simplify, Expr, Func};

/// All monomials (as multisets of variable indices) of total degree ≤ `degree`.
pub fn monomials(nvars: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..degree {
        let mut next = Vec::new();
        for mono in &frontier {
            let start = mono.last().copied().unwrap_or(0);
            for v in start..nvars {
                let mut m: Vec<usize> = mono.clone();
                m.push(v);
                next.push(m);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Dense polynomial of total degree ≤ `degree` in `vars`, coefficients drawn
/// uniformly from `[-1, 1]`.
pub fn random_polynomial<R: Rng + ?Sized>(rng: &mut R, vars: &[String], degree: usize) -> Expr {
    let terms = monomials(vars.len(), degree).into_iter().map(|mono| {
        let c: f64 = rng.gen_range(-1.0..=1.0);
        mono.into_iter()
            .fold(Expr::constant(c), |acc, v| acc * Expr::var(vars[v].clone()))
    });
    simplify(&Expr::sum(terms))
}

/// Random expression tree of depth ≤ `depth` using every node kind of the
/// grammar. The result can have singular points; callers filter bindings.
pub fn random_expression<R: Rng + ?Sized>(rng: &mut R, vars: &[String], depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.7) && !vars.is_empty() {
            Expr::var(vars[rng.gen_range(0..vars.len())].clone())
        } else {
            Expr::constant((rng.gen_range(-2.0f64..2.0) * 4.0).round() / 4.0)
        };
    }
    let sub = |rng: &mut R| random_expression(rng, vars, depth - 1);
    match rng.gen_range(0..10) {
        0 => -sub(rng),
        1 | 2 => sub(rng) + sub(rng),
        3 => sub(rng) - sub(rng),
        4 | 5 => sub(rng) * sub(rng),
        6 => sub(rng) / sub(rng),
        7 => sub(rng).powi(rng.gen_range(2..=3)),
        _ => {
            let f = Func::ALL[rng.gen_range(0..Func::ALL.len())];
            Expr::apply(f, sub(rng))
        }
    }
}
