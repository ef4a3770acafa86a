//! Yang–Mills theory on a trivial bundle over an `m`-dimensional base with a
//! diagonal constant metric.
//!
//! Conventions:
//! - the fiber coordinate `u^α_i` is chart variable `u{A+1}` with `A = α·m + i`;
//! - its momentum in direction `x^j` is `p{j+1}_{A+1}`;
//! - `π^{ij}_α` (`i < j`) is represented on the whole chart by the
//!   antisymmetrised combination `p^j_{(α,i)} − p^i_{(α,j)}`, which equals
//!   `2 p^{ij}_α` on the constraint submanifold where `p` is antisymmetric;
//! - `u^γ_{kl}` denotes `∂u^γ_k/∂x^l`;
//! - the pairing on the Lie algebra is the identity.

use serde::Serialize;

use crate::bundle::{Chart, HamiltonianSection};
use crate::error::{Error, Result};
use crate::expr::{simplify, Expr};
use crate::solver::Norms;

/// Structure constants `c^γ_{αβ}` of a Lie algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebraSpec {
    n: usize,
    c: Vec<f64>,
}

impl LieAlgebraSpec {
    /// `c` is laid out as `c[(γ·n + α)·n + β]`.
    pub fn new(n: usize, c: Vec<f64>) -> Result<LieAlgebraSpec> {
        if n == 0 || c.len() != n * n * n {
            return Err(Error::Shape(format!(
                "structure constants of a {n}-dimensional algebra need {} entries, got {}",
                n * n * n,
                c.len()
            )));
        }
        let la = LieAlgebraSpec { n, c };
        la.validate()?;
        Ok(la)
    }

    pub fn abelian(n: usize) -> LieAlgebraSpec {
        LieAlgebraSpec {
            n,
            c: vec![0.0; n * n * n],
        }
    }

    /// `su(2) ≅ so(3)` with `c^γ_{αβ} = ε_{αβγ}`.
    pub fn su2() -> LieAlgebraSpec {
        let mut c = vec![0.0; 27];
        for (a, b, g, s) in [
            (0, 1, 2, 1.0),
            (1, 2, 0, 1.0),
            (2, 0, 1, 1.0),
            (1, 0, 2, -1.0),
            (2, 1, 0, -1.0),
            (0, 2, 1, -1.0),
        ] {
            c[(g * 3 + a) * 3 + b] = s;
        }
        LieAlgebraSpec { n: 3, c }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn c(&self, g: usize, a: usize, b: usize) -> f64 {
        self.c[(g * self.n + a) * self.n + b]
    }

    pub fn is_abelian(&self) -> bool {
        self.c.iter().all(|&v| v == 0.0)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        for g in 0..n {
            for a in 0..n {
                for b in 0..n {
                    if (self.c(g, a, b) + self.c(g, b, a)).abs() > 1e-12 {
                        return Err(Error::Model(format!(
                            "structure constants are not antisymmetric: c[{g}][{a}][{b}] = {}, c[{g}][{b}][{a}] = {}",
                            self.c(g, a, b),
                            self.c(g, b, a)
                        )));
                    }
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                for g in 0..n {
                    for s in 0..n {
                        let j: f64 = (0..n)
                            .map(|mu| {
                                self.c(mu, a, b) * self.c(s, mu, g)
                                    + self.c(mu, b, g) * self.c(s, mu, a)
                                    + self.c(mu, g, a) * self.c(s, mu, b)
                            })
                            .sum();
                        if j.abs() > 1e-12 {
                            return Err(Error::Model(format!(
                                "structure constants violate the Jacobi identity (residual {j:e})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `[x, y]^γ = c^γ_{αβ} x^α y^β`.
    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|g| {
                let mut s = 0.0;
                for a in 0..self.n {
                    for b in 0..self.n {
                        s += self.c(g, a, b) * x[a] * y[b];
                    }
                }
                s
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct YangMillsModel {
    pub algebra: LieAlgebraSpec,
    pub m: usize,
    /// Diagonal of the base metric `g_{ii}`.
    pub metric: Vec<f64>,
    pub chart: Chart,
    pub h: HamiltonianSection,
}

/// Antisymmetric field strength-type data `π^{ij}_α` stored for `i < j` only.
#[derive(Debug, Clone, PartialEq)]
pub struct PiField {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl PiField {
    pub fn zeros(m: usize, n: usize) -> PiField {
        PiField {
            m,
            n,
            data: vec![0.0; n * m * (m - 1) / 2],
        }
    }

    fn slot(&self, a: usize, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.m && a < self.n);
        let pair = i * (2 * self.m - i - 1) / 2 + (j - i - 1);
        a * self.m * (self.m - 1) / 2 + pair
    }

    /// `π^{ij}_α` with `π^{ji} = −π^{ij}` and `π^{ii} = 0`.
    pub fn get(&self, a: usize, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.data[self.slot(a, i, j)],
            std::cmp::Ordering::Greater => -self.data[self.slot(a, j, i)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    /// Set `π^{ij}_α`; `i = j` is rejected.
    pub fn set(&mut self, a: usize, i: usize, j: usize, v: f64) -> Result<()> {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => {
                let s = self.slot(a, i, j);
                self.data[s] = v;
            }
            std::cmp::Ordering::Greater => {
                let s = self.slot(a, j, i);
                self.data[s] = -v;
            }
            std::cmp::Ordering::Equal => {
                return Err(Error::Shape("pi^{ii} is identically zero".into()));
            }
        }
        Ok(())
    }
}

impl YangMillsModel {
    pub fn fiber_index(&self, a: usize, i: usize) -> usize {
        a * self.m + i
    }

    pub fn u_name(&self, a: usize, i: usize) -> String {
        self.chart.u(self.fiber_index(a, i))
    }

    /// Chart expression of `π^{ij}_α`.
    pub fn pi_expr(&self, a: usize, i: usize, j: usize) -> Expr {
        let c = &self.chart;
        simplify(&(c.p_var(j, self.fiber_index(a, i)) - c.p_var(i, self.fiber_index(a, j))))
    }

    /// `H₁` in the π-form, `(1/16) π_{ij}^α π^{ij}_α + ¼ c^γ_{αβ} u^α_i u^β_j π^{ij}_γ`,
    /// with `u` indexed `[α][i]`.
    pub fn h1_from_pi(&self, u: &[Vec<f64>], pi: &PiField) -> f64 {
        let (m, n) = (self.m, self.algebra.dim());
        let mut quad = 0.0;
        let mut cubic = 0.0;
        for i in 0..m {
            for j in 0..m {
                for a in 0..n {
                    let v = pi.get(a, i, j);
                    quad += self.metric[i] * self.metric[j] * v * v;
                }
                for g in 0..n {
                    for a in 0..n {
                        for b in 0..n {
                            cubic += self.algebra.c(g, a, b) * u[a][i] * u[b][j] * pi.get(g, i, j);
                        }
                    }
                }
            }
        }
        quad / 16.0 + cubic / 4.0
    }

    /// `H₁` in the `p`-form, `¼ p_{ij}^α p^{ij}_α + ½ c^γ_{αβ} u^α_i u^β_j p^{ij}_γ`,
    /// with `p^{ij}_α = π^{ij}_α / 2`.
    pub fn h1_from_p(&self, u: &[Vec<f64>], pi: &PiField) -> f64 {
        let (m, n) = (self.m, self.algebra.dim());
        let p = |a, i, j| 0.5 * pi.get(a, i, j);
        let mut quad = 0.0;
        let mut cubic = 0.0;
        for i in 0..m {
            for j in 0..m {
                for a in 0..n {
                    quad += self.metric[i] * self.metric[j] * p(a, i, j) * p(a, i, j);
                }
                for g in 0..n {
                    for a in 0..n {
                        for b in 0..n {
                            cubic += self.algebra.c(g, a, b) * u[a][i] * u[b][j] * p(g, i, j);
                        }
                    }
                }
            }
        }
        quad / 4.0 + cubic / 2.0
    }

    /// Chart binding of a point of the constraint submanifold: antisymmetric
    /// momenta `p^{ij}_α = π^{ij}_α/2`.
    pub fn binding(&self, u: &[Vec<f64>], pi: &PiField) -> crate::expr::Binding {
        let mut b = crate::expr::Binding::new();
        for name in self.chart.base_names() {
            b.insert(name, 0.0);
        }
        for a in 0..self.algebra.dim() {
            for i in 0..self.m {
                b.insert(self.u_name(a, i), u[a][i]);
                for j in 0..self.m {
                    // p^j_{(α,i)} = p^{ij}_α
                    b.insert(
                        self.chart.p(j, self.fiber_index(a, i)),
                        0.5 * pi.get(a, i, j),
                    );
                }
            }
        }
        b
    }
}

/// Constrained Yang–Mills Hamiltonian `H₁` on the chart with base dimension
/// `m` and fiber dimension `n·m`. `metric` is the diagonal of the base metric
/// (Euclidean if `None`).
pub fn model_yang_mills(
    la: &LieAlgebraSpec,
    m: usize,
    metric: Option<Vec<f64>>,
) -> Result<YangMillsModel> {
    la.validate()?;
    if m < 2 {
        return Err(Error::Model(
            "Yang-Mills needs a base of dimension at least 2".into(),
        ));
    }
    let metric = metric.unwrap_or_else(|| vec![1.0; m]);
    if metric.len() != m || metric.iter().any(|&g| g <= 0.0) {
        return Err(Error::Model(format!(
            "base metric must have {m} positive diagonal entries"
        )));
    }
    let n = la.dim();
    let chart = Chart::new(m, n * m)?;
    let mut model = YangMillsModel {
        algebra: la.clone(),
        m,
        metric,
        chart,
        h: HamiltonianSection::new(&chart, Expr::zero())?,
    };
    let mut terms = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            for a in 0..n {
                let w = model.metric[i] * model.metric[j] / 16.0;
                terms.push(Expr::constant(w) * model.pi_expr(a, i, j).powi(2));
            }
            for g in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let c = la.c(g, a, b);
                        if c != 0.0 {
                            terms.push(
                                Expr::constant(c / 4.0)
                                    * Expr::var(model.u_name(a, i))
                                    * Expr::var(model.u_name(b, j))
                                    * model.pi_expr(g, i, j),
                            );
                        }
                    }
                }
            }
        }
    }
    model.h = HamiltonianSection::new(&chart, simplify(&Expr::sum(terms)))?;
    Ok(model)
}

/// Curvature `F^γ_{kl} = u^γ_{lk} − u^γ_{kl} + c^γ_{αβ} u^α_k u^β_l`.
/// `u` is indexed `[γ][k]`, `du[γ][k][l] = ∂u^γ_k/∂x^l`; the result `[γ][k][l]`.
pub fn curvature(
    u: &[Vec<f64>],
    du: &[Vec<Vec<f64>>],
    la: &LieAlgebraSpec,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let n = la.dim();
    let m = u.first().map_or(0, Vec::len);
    let shape_ok = u.len() == n
        && u.iter().all(|r| r.len() == m)
        && du.len() == n
        && du
            .iter()
            .all(|r| r.len() == m && r.iter().all(|c| c.len() == m));
    if !shape_ok || m == 0 {
        return Err(Error::Shape(format!(
            "curvature needs u of shape ({n}, m) and du of shape ({n}, m, m)"
        )));
    }
    let mut f = vec![vec![vec![0.0; m]; m]; n];
    for g in 0..n {
        for k in 0..m {
            for l in 0..m {
                let mut v = du[g][l][k] - du[g][k][l];
                for a in 0..n {
                    for b in 0..n {
                        v += la.c(g, a, b) * u[a][k] * u[b][l];
                    }
                }
                f[g][k][l] = v;
            }
        }
    }
    Ok(f)
}

/// One time level of a 1+1-dimensional Yang–Mills field on a periodic grid:
/// `u0[α][k] = u^α_0`, `u1[α][k] = u^α_1`, `e[α][k] = π^{01}_α`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YmSnapshot {
    pub t: f64,
    pub u0: Vec<Vec<f64>>,
    pub u1: Vec<Vec<f64>>,
    pub e: Vec<Vec<f64>>,
}

/// Equally spaced time levels on a periodic spatial grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YmGrid {
    pub dx: f64,
    pub dt: f64,
    pub snapshots: Vec<YmSnapshot>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YmResidual {
    /// `−F^{01}_α − ½ π^{01}_α`.
    pub constitutive: Norms,
    /// `∂_0 π^{01}_α + c^γ_{αβ} u^β_0 π^{01}_γ`.
    pub evolution: Norms,
    /// `∂_1 π^{10}_α + c^γ_{αβ} u^β_1 π^{10}_γ` (the Gauss law).
    pub gauss: Norms,
}

fn periodic_dx(v: &[f64], k: usize, dx: f64) -> f64 {
    let n = v.len();
    (v[(k + 1) % n] - v[(k + n - 1) % n]) / (2.0 * dx)
}

/// Gauss-law residual `∂_x π^{10}_α + c^γ_{αβ} u^β_1 π^{10}_γ` of one snapshot
/// (periodic central differences).
pub fn gauss_residual(snap: &YmSnapshot, dx: f64, la: &LieAlgebraSpec) -> Result<Norms> {
    let n = la.dim();
    let k_len = snap.e.first().map_or(0, Vec::len);
    if snap.e.len() != n || snap.u1.len() != n || k_len < 8 {
        return Err(Error::Shape(
            "Gauss residual needs n components on at least 8 grid points".into(),
        ));
    }
    let mut acc = Norms::accumulator();
    for k in 0..k_len {
        let u: Vec<f64> = (0..n).map(|a| snap.u1[a][k]).collect();
        let pi10: Vec<f64> = (0..n).map(|a| -snap.e[a][k]).collect();
        for a in 0..n {
            let mut r = -periodic_dx(&snap.e[a], k, dx);
            for g in 0..n {
                for b in 0..n {
                    r += la.c(g, a, b) * u[b] * pi10[g];
                }
            }
            acc.push(r);
        }
    }
    Ok(acc.finish())
}

/// Residuals of the Hamiltonian Yang–Mills equations on a 1+1-dimensional
/// grid, at every interior time level (central differences in time,
/// periodic central differences in space). `metric` is the diagonal
/// `(g_00, g_11)`.
pub fn ym_residual(grid: &YmGrid, la: &LieAlgebraSpec, metric: [f64; 2]) -> Result<YmResidual> {
    let snaps = &grid.snapshots;
    if snaps.len() < 3 {
        return Err(Error::Shape(format!(
            "need at least 3 time levels for the stencil, got {}",
            snaps.len()
        )));
    }
    let n = la.dim();
    let k_len = snaps[0].e.first().map_or(0, Vec::len);
    for s in snaps {
        let ok = [&s.u0, &s.u1, &s.e]
            .iter()
            .all(|f| f.len() == n && f.iter().all(|r| r.len() == k_len));
        if !ok || k_len < 8 {
            return Err(Error::Shape(format!(
                "every snapshot needs {n} components on the same grid of at least 8 points"
            )));
        }
    }
    let raise = 1.0 / (metric[0] * metric[1]);
    let (dt, dx) = (grid.dt, grid.dx);
    let mut cons = Norms::accumulator();
    let mut evo = Norms::accumulator();
    let mut gauss = Norms::accumulator();
    for t in 1..snaps.len() - 1 {
        let (prev, cur, next) = (&snaps[t - 1], &snaps[t], &snaps[t + 1]);
        for k in 0..k_len {
            let u0: Vec<f64> = (0..n).map(|a| cur.u0[a][k]).collect();
            let u1: Vec<f64> = (0..n).map(|a| cur.u1[a][k]).collect();
            let e: Vec<f64> = (0..n).map(|a| cur.e[a][k]).collect();
            let u0u1 = la.bracket(&u0, &u1);
            for a in 0..n {
                // F_{01} = ∂_0 u_1 − ∂_1 u_0 + [u_0, u_1]
                let dtu1 = (next.u1[a][k] - prev.u1[a][k]) / (2.0 * dt);
                let f01 = dtu1 - periodic_dx(&cur.u0[a], k, dx) + u0u1[a];
                cons.push(-raise * f01 - 0.5 * e[a]);

                let dte = (next.e[a][k] - prev.e[a][k]) / (2.0 * dt);
                let mut r = dte;
                let mut g_term = -periodic_dx(&cur.e[a], k, dx);
                for g in 0..n {
                    for b in 0..n {
                        r += la.c(g, a, b) * u0[b] * e[g];
                        g_term -= la.c(g, a, b) * u1[b] * e[g];
                    }
                }
                evo.push(r);
                gauss.push(g_term);
            }
        }
    }
    Ok(YmResidual {
        constitutive: cons.finish(),
        evolution: evo.finish(),
        gauss: gauss.finish(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shipped_algebras_validate() {
        LieAlgebraSpec::su2().validate().unwrap();
        LieAlgebraSpec::abelian(2).validate().unwrap();
        let mut c = vec![0.0; 8];
        c[1] = 1.0; // c^0_{01} without its antisymmetric partner
        assert!(LieAlgebraSpec::new(2, c).is_err());
        // antisymmetric but not Jacobi: [e0,e1] = e0 + e2? use a made-up 3-d table
        let mut c = vec![0.0; 27];
        let mut set = |g: usize, a: usize, b: usize, v: f64| {
            c[(g * 3 + a) * 3 + b] = v;
            c[(g * 3 + b) * 3 + a] = -v;
        };
        set(2, 0, 1, 1.0);
        set(0, 1, 2, 1.0);
        set(0, 2, 0, 1.0);
        assert!(LieAlgebraSpec::new(3, c).is_err());
    }

    #[test]
    fn abelian_h1_value() {
        let ym = model_yang_mills(&LieAlgebraSpec::abelian(1), 2, None).unwrap();
        assert_eq!(ym.chart.n(), 2);
        let mut pi = PiField::zeros(2, 1);
        pi.set(0, 0, 1, 4.0).unwrap();
        let u = vec![vec![0.3, -0.2]];
        assert_eq!(ym.h1_from_pi(&u, &pi), 2.0);
        assert_eq!(ym.h1_from_p(&u, &pi), 2.0);
        let b = ym.binding(&u, &pi);
        assert_eq!(ym.h.expr().eval(&b).unwrap(), 2.0);
    }

    #[test]
    fn su2_h1_forms_agree() {
        let la = LieAlgebraSpec::su2();
        let ym = model_yang_mills(&la, 3, Some(vec![1.0, 2.0, 0.5])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let u: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let mut pi = PiField::zeros(3, 3);
            for a in 0..3 {
                for i in 0..3 {
                    for j in i + 1..3 {
                        pi.set(a, i, j, rng.gen_range(-1.0..1.0)).unwrap();
                    }
                }
            }
            let a = ym.h1_from_pi(&u, &pi);
            let b = ym.h1_from_p(&u, &pi);
            let c = ym.h.expr().eval(&ym.binding(&u, &pi)).unwrap();
            assert!(
                (a - b).abs() < 1e-14 && (a - c).abs() < 1e-13,
                "{a} {b} {c}"
            );
        }
    }

    #[test]
    fn pi_field_antisymmetry() {
        let mut pi = PiField::zeros(3, 2);
        pi.set(1, 2, 0, 5.0).unwrap();
        assert_eq!(pi.get(1, 0, 2), -5.0);
        assert_eq!(pi.get(1, 2, 0), 5.0);
        assert_eq!(pi.get(1, 1, 1), 0.0);
        assert!(pi.set(0, 1, 1, 1.0).is_err());
    }

    #[test]
    fn curvature_examples() {
        let la = LieAlgebraSpec::abelian(1);
        let u = vec![vec![0.0, 0.0]];
        // du[0][k][l] = ∂u_k/∂x^l: ∂_1 u_2 = 5, ∂_2 u_1 = 2
        let du = vec![vec![vec![0.0, 2.0], vec![5.0, 0.0]]];
        let f = curvature(&u, &du, &la).unwrap();
        assert_eq!(f[0][0][1], 3.0);
        assert_eq!(f[0][1][0], -3.0);
        let zero = curvature(&[vec![1.0, 2.0]], &[vec![vec![0.0; 2]; 2]], &la).unwrap();
        assert!(zero.iter().flatten().flatten().all(|&v| v == 0.0));
        assert!(curvature(&u, &[vec![vec![0.0]]], &la).is_err());

        let su2 = LieAlgebraSpec::su2();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let du: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|_| {
                (0..3)
                    .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .collect()
            })
            .collect();
        let f = curvature(&u, &du, &su2).unwrap();
        for g in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    assert!((f[g][k][l] + f[g][l][k]).abs() < 1e-15);
                }
            }
        }
    }

    fn constant_grid(e: f64, k: usize, levels: usize) -> YmGrid {
        let snap = |t| YmSnapshot {
            t,
            u0: vec![vec![0.0; k]],
            u1: vec![(0..k).map(|_| -0.5 * e * t).collect()],
            e: vec![vec![e; k]],
        };
        YmGrid {
            dx: 0.1,
            dt: 0.05,
            snapshots: (0..levels).map(|l| snap(l as f64 * 0.05)).collect(),
        }
    }

    #[test]
    fn constant_field_solves_equations() {
        let la = LieAlgebraSpec::abelian(1);
        let r = ym_residual(&constant_grid(3.0, 16, 4), &la, [1.0, 1.0]).unwrap();
        assert!(r.constitutive.max < 1e-14);
        assert_eq!(r.evolution.max, 0.0);
        assert_eq!(r.gauss.max, 0.0);
        assert!(ym_residual(&constant_grid(3.0, 16, 2), &la, [1.0, 1.0]).is_err());
        assert!(ym_residual(&constant_grid(3.0, 4, 3), &la, [1.0, 1.0]).is_err());
    }

    #[test]
    fn random_fields_have_residual() {
        let la = LieAlgebraSpec::su2();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut field = |_: usize| -> Vec<Vec<f64>> {
            (0..3)
                .map(|_| (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect()
        };
        let snaps = (0..3)
            .map(|l| YmSnapshot {
                t: l as f64,
                u0: field(0),
                u1: field(1),
                e: field(2),
            })
            .collect();
        let grid = YmGrid {
            dx: 0.1,
            dt: 0.1,
            snapshots: snaps,
        };
        let r = ym_residual(&grid, &la, [1.0, 1.0]).unwrap();
        assert!(r.constitutive.max > 0.0 && r.evolution.max > 0.0 && r.gauss.max > 0.0);
    }
}
