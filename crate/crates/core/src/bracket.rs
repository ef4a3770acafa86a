//! Brackets, the affine isomorphisms between `dh` and `Γ_h`, Hamiltonian
//! connections and the Lie algebra of currents, all in local coordinates.
//!
//! Every bracket returns a simplified symbolic expression; evaluation at
//! points is left to the caller.

use serde::Serialize;

use crate::bundle::{require_valid, Chart, Current, HamiltonianSection, Observable};
use crate::error::{Error, Result};
use crate::expr::{simplify, Binding, Expr};

/// Sign flip used by the affine isomorphisms, for symbolic and numeric data.
pub trait Negate {
    fn negate(&self) -> Self;
}

impl Negate for f64 {
    fn negate(&self) -> f64 {
        -self
    }
}

impl Negate for Expr {
    fn negate(&self) -> Expr {
        simplify(&(-self.clone()))
    }
}

/// Fiber coordinates `(𝒜_α, 𝒜^α_i)` of a differential: `au[α]`, `ap[i][α]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseComponents<T> {
    pub au: Vec<T>,
    pub ap: Vec<Vec<T>>,
}

/// Components `(û^α_i, p̂_α)` of a section of the Γ-bundle: `hu[i][α]`, `hp[α]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaComponents<T> {
    pub hu: Vec<Vec<T>>,
    pub hp: Vec<T>,
}

pub type GammaSection = GammaComponents<Expr>;

/// `(𝒜_α, 𝒜^α_i) ↦ (û^α_i = 𝒜^α_i, p̂_α = −𝒜_α)`.
pub fn sharp_aff<T: Clone + Negate>(pc: &PhaseComponents<T>) -> GammaComponents<T> {
    GammaComponents {
        hu: pc.ap.clone(),
        hp: pc.au.iter().map(Negate::negate).collect(),
    }
}

/// Inverse of [`sharp_aff`]: `(û^α_i, p̂_α) ↦ (𝒜_α = −p̂_α, 𝒜^α_i = û^α_i)`.
pub fn a_hat<T: Clone + Negate>(g: &GammaComponents<T>) -> PhaseComponents<T> {
    PhaseComponents {
        au: g.hp.iter().map(Negate::negate).collect(),
        ap: g.hu.clone(),
    }
}

/// Components of `dh`: `au[α] = ∂H/∂u^α`, `ap[i][α] = ∂H/∂p^i_α`.
pub fn dh_components(h: &HamiltonianSection, chart: &Chart) -> PhaseComponents<Expr> {
    let e = h.expr();
    PhaseComponents {
        au: (0..chart.n()).map(|a| e.diff(&chart.u(a))).collect(),
        ap: (0..chart.m())
            .map(|i| (0..chart.n()).map(|a| e.diff(&chart.p(i, a))).collect())
            .collect(),
    }
}

/// `Γ_h = ♯^aff(dh)`: `hu[i][α] = ∂H/∂p^i_α`, `hp[α] = −∂H/∂u^α`.
pub fn gamma_h(h: &HamiltonianSection, chart: &Chart) -> GammaSection {
    sharp_aff(&dh_components(h, chart))
}

/// Local coefficients of an Ehresmann connection on the restricted
/// multimomentum bundle: `hu[i][α] = H^α_i`, `hp[j][α][i] = H^j_{αi}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCoefficients {
    pub hu: Vec<Vec<Expr>>,
    pub hp: Vec<Vec<Vec<Expr>>>,
}

impl ConnectionCoefficients {
    /// Representative of `Γ_h` with the trace spread evenly over the
    /// diagonal: `H^j_{αi} = −δ_{ij} (∂H/∂u^α)/m`.
    pub fn canonical(h: &HamiltonianSection, chart: &Chart) -> ConnectionCoefficients {
        let g = gamma_h(h, chart);
        let (m, n) = (chart.m(), chart.n());
        let inv_m = 1.0 / m as f64;
        let hp = (0..m)
            .map(|j| {
                (0..n)
                    .map(|a| {
                        (0..m)
                            .map(|i| {
                                if i == j {
                                    simplify(&(Expr::constant(inv_m) * g.hp[a].clone()))
                                } else {
                                    Expr::zero()
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        ConnectionCoefficients { hu: g.hu, hp }
    }

    fn check_shape(&self, chart: &Chart) -> Result<()> {
        let (m, n) = (chart.m(), chart.n());
        let ok = self.hu.len() == m
            && self.hu.iter().all(|r| r.len() == n)
            && self.hp.len() == m
            && self
                .hp
                .iter()
                .all(|r| r.len() == n && r.iter().all(|c| c.len() == m));
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "connection coefficients must have shapes ({m},{n}) and ({m},{n},{m})"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectionReport {
    pub hamiltonian: bool,
    /// Whether the decision was reached by simplification alone.
    pub symbolic: bool,
    pub max_residual: f64,
}

/// Pointwise tolerance of the numeric fallback in [`connection_is_hamiltonian`].
pub const CONNECTION_TOL: f64 = 1e-12;

/// Decide whether a connection belongs to the class `Γ_h`. Only
/// `H^α_i = ∂H/∂p^i_α` and the traces `Σ_i H^i_{αi} = −∂H/∂u^α` are
/// constrained; the trace-free part of `H^j_{αi}` is free (it lies in `Ker A`).
///
/// The conditions are first simplified symbolically; if some residual does not
/// simplify to zero it is evaluated at `samples` and the connection is
/// accepted only if every value is within [`CONNECTION_TOL`].
pub fn connection_is_hamiltonian(
    hc: &ConnectionCoefficients,
    h: &HamiltonianSection,
    chart: &Chart,
    samples: &[Binding],
) -> Result<ConnectionReport> {
    hc.check_shape(chart)?;
    let dh = dh_components(h, chart);
    let mut residuals = Vec::new();
    for i in 0..chart.m() {
        for a in 0..chart.n() {
            residuals.push(simplify(&(hc.hu[i][a].clone() - dh.ap[i][a].clone())));
        }
    }
    for a in 0..chart.n() {
        let trace = Expr::sum((0..chart.m()).map(|i| hc.hp[i][a][i].clone()));
        residuals.push(simplify(&(trace + dh.au[a].clone())));
    }
    residuals.retain(|r| !r.is_zero());
    if residuals.is_empty() {
        return Ok(ConnectionReport {
            hamiltonian: true,
            symbolic: true,
            max_residual: 0.0,
        });
    }
    if samples.is_empty() {
        return Ok(ConnectionReport {
            hamiltonian: false,
            symbolic: false,
            max_residual: f64::INFINITY,
        });
    }
    let mut max: f64 = 0.0;
    for b in samples {
        for r in &residuals {
            max = max.max(r.eval(b)?.abs());
        }
    }
    Ok(ConnectionReport {
        hamiltonian: max <= CONNECTION_TOL,
        symbolic: false,
        max_residual: max,
    })
}

/// `∂α^i/∂u^β + ∂Y^α/∂u^β p^i_α` for all `(β, i)`, indexed `[β][i]`.
fn u_gradient(c: &Current, chart: &Chart) -> Vec<Vec<Expr>> {
    (0..chart.n())
        .map(|b| {
            let ub = chart.u(b);
            (0..chart.m())
                .map(|i| {
                    let ys =
                        Expr::sum((0..chart.n()).map(|a| c.y[a].diff(&ub) * chart.p_var(i, a)));
                    c.beta[i].diff(&ub) + ys
                })
                .collect()
        })
        .collect()
}

/// `Σ_i ∂α^i/∂x^i + ∂Y^α/∂x^i p^i_α`.
fn x_divergence(c: &Current, chart: &Chart) -> Expr {
    Expr::sum((0..chart.m()).map(|i| {
        let xi = chart.x(i);
        let ys = Expr::sum((0..chart.n()).map(|a| c.y[a].diff(&xi) * chart.p_var(i, a)));
        c.beta[i].diff(&xi) + ys
    }))
}

/// Bilinear part shared by both brackets:
/// `(∂α^i/∂u^α + ∂Y^β/∂u^α p^i_β) ∂F/∂p^i_α − ∂F/∂u^α Y^α`.
fn linear_part(c: &Current, f: &Expr, chart: &Chart) -> Expr {
    let grad = u_gradient(c, chart);
    let mut terms = Vec::new();
    for a in 0..chart.n() {
        for i in 0..chart.m() {
            terms.push(grad[a][i].clone() * f.diff(&chart.p(i, a)));
        }
        terms.push(-(f.diff(&chart.u(a)) * c.y[a].clone()));
    }
    Expr::sum(terms)
}

/// Poisson-type part for a plain function on the `m = 1` phase space:
/// `Σ_α ∂f/∂u^α ∂g/∂p_α − ∂f/∂p_α ∂g/∂u^α`.
fn poisson_m1(f: &Expr, g: &Expr, chart: &Chart) -> Expr {
    Expr::sum((0..chart.n()).map(|a| {
        let (u, p) = (chart.u(a), chart.p(0, a));
        f.diff(&u) * g.diff(&p) - f.diff(&p) * g.diff(&u)
    }))
}

fn check_function(f: &Expr, chart: &Chart) -> Result<()> {
    if chart.m() != 1 {
        return Err(Error::Unsupported(format!(
            "plain functions are observables only for m = 1 (chart has m = {}); supply a current (Y, beta)",
            chart.m()
        )));
    }
    let foreign = chart.foreign_variables(f);
    if !foreign.is_empty() {
        return Err(Error::Model(format!(
            "observable references variables outside the chart: {}",
            foreign.join(", ")
        )));
    }
    Ok(())
}

/// Linear-affine bracket `{α⁰, h}` as the coefficient of `dᵐx`.
///
/// For a current `(Y, α)`:
/// `∂α^i/∂x^i + ∂Y^α/∂x^i p^i_α + (∂α^i/∂u^α + ∂Y^β/∂u^α p^i_β) ∂H/∂p^i_α − ∂H/∂u^α Y^α`.
/// For `m = 1` a plain function `f` gives `∂f/∂x1 + ∂f/∂u ∂H/∂p − ∂f/∂p ∂H/∂u`.
pub fn bracket_affine(obs: &Observable, h: &HamiltonianSection, chart: &Chart) -> Result<Expr> {
    match obs {
        Observable::Function(f) => {
            check_function(f, chart)?;
            Ok(simplify(
                &(f.diff(&chart.x(0)) + poisson_m1(f, h.expr(), chart)),
            ))
        }
        Observable::Current(c) => {
            require_valid(c, chart)?;
            Ok(simplify(
                &(x_divergence(c, chart) + linear_part(c, h.expr(), chart)),
            ))
        }
    }
}

/// Bilinear bracket `{α⁰, F⁰}_l`, the linear part of [`bracket_affine`].
pub fn bracket_linear(obs: &Observable, f: &Expr, chart: &Chart) -> Result<Expr> {
    match obs {
        Observable::Function(g) => {
            check_function(g, chart)?;
            Ok(simplify(&poisson_m1(g, f, chart)))
        }
        Observable::Current(c) => {
            require_valid(c, chart)?;
            Ok(simplify(&linear_part(c, f, chart)))
        }
    }
}

/// Lie bracket of currents,
/// `{(Y,α),(Z,β)}_O = −([Y,Z], i_Y dβ − i_Z dα)`, for `m ≥ 2`.
pub fn current_bracket(a: &Current, b: &Current, chart: &Chart) -> Result<Current> {
    if chart.m() < 2 {
        return Err(Error::Unsupported(
            "the current bracket needs m >= 2; for m = 1 use the Poisson bracket of functions"
                .into(),
        ));
    }
    require_valid(a, chart)?;
    require_valid(b, chart)?;
    let n = chart.n();
    // Σ_β V^β ∂W/∂u^β
    let along = |v: &[Expr], w: &Expr| -> Expr {
        Expr::sum((0..n).map(|k| v[k].clone() * w.diff(&chart.u(k))))
    };
    let y = (0..n)
        .map(|al| simplify(&-(along(&a.y, &b.y[al]) - along(&b.y, &a.y[al]))))
        .collect();
    let beta = (0..chart.m())
        .map(|i| simplify(&-(along(&a.y, &b.beta[i]) - along(&b.y, &a.beta[i]))))
        .collect();
    Ok(Current { y, beta })
}

/// Lie bracket on observables: the Poisson bracket `{f, g}_l` for `m = 1`,
/// [`current_bracket`] otherwise.
pub fn observable_bracket(a: &Observable, b: &Observable, chart: &Chart) -> Result<Observable> {
    match (a, b) {
        (Observable::Current(x), Observable::Current(y)) if chart.m() >= 2 => {
            Ok(Observable::Current(current_bracket(x, y, chart)?))
        }
        _ if chart.m() == 1 => {
            let f = a.coefficients(chart).remove(0);
            let g = b.coefficients(chart).remove(0);
            check_function(&f, chart)?;
            check_function(&g, chart)?;
            Ok(Observable::Function(simplify(&poisson_m1(&f, &g, chart))))
        }
        _ => Err(Error::Unsupported(
            "plain functions are observables only for m = 1".into(),
        )),
    }
}

/// Hamiltonian vector field of a current on the restricted multimomentum
/// bundle: `vu[α]`, `vp[i][β]`, plus the `∂/∂pext` component of its
/// extension when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalField {
    pub vu: Vec<Expr>,
    pub vp: Vec<Vec<Expr>>,
    pub vext: Option<Expr>,
}

pub fn hamiltonian_field(c: &Current, chart: &Chart, extended: bool) -> Result<VerticalField> {
    require_valid(c, chart)?;
    let grad = u_gradient(c, chart);
    let vp = (0..chart.m())
        .map(|i| (0..chart.n()).map(|b| grad[b][i].negate()).collect())
        .collect();
    Ok(VerticalField {
        vu: c.y.iter().map(simplify).collect(),
        vp,
        vext: extended.then(|| x_divergence(c, chart).negate()),
    })
}

/// The affine-representation defect
/// `{{a,b}_O, h} − {a, {b,h}}_l + {b, {a,h}}_l` as a symbolic expression.
pub fn representation_defect(
    a: &Observable,
    b: &Observable,
    h: &HamiltonianSection,
    chart: &Chart,
) -> Result<Expr> {
    let ab = observable_bracket(a, b, chart)?;
    let lhs = bracket_affine(&ab, h, chart)?;
    let bh = bracket_affine(b, h, chart)?;
    let ah = bracket_affine(a, h, chart)?;
    let rhs = bracket_linear(a, &bh, chart)? - bracket_linear(b, &ah, chart)?;
    Ok(lhs - rhs)
}

/// Maximum absolute value of [`representation_defect`] over `samples`.
pub fn representation_residual(
    a: &Observable,
    b: &Observable,
    h: &HamiltonianSection,
    chart: &Chart,
    samples: &[Binding],
) -> Result<f64> {
    let defect = representation_defect(a, b, h, chart)?;
    let compiled = defect.compile(&chart.names())?;
    let names = chart.names();
    let mut max: f64 = 0.0;
    for s in samples {
        let values = names
            .iter()
            .map(|v| {
                s.get(v)
                    .copied()
                    .ok_or_else(|| Error::Shape(format!("sample does not bind {v}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        max = max.max(compiled.eval(&values)?.abs());
    }
    Ok(max)
}
