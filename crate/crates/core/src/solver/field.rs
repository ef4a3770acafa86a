use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{Boundary, Norms, Reconstruction, SolverConfig};
use crate::bundle::{Chart, HamiltonianSection};
use crate::error::{Error, Result};
use crate::expr::{Binding, CompiledExpr, Expr};
use crate::models::{model_wave, ContinuumSpec, PerfectGas};

/// Closed-form solution of `∂H/∂P = ∂u/∂x` at one grid point:
/// `(base = [t, x], u, u_x) ↦ P`.
pub type ClosedFormP = Arc<dyn Fn(&[f64], &[f64], &[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// A Hamiltonian on a chart with `m = 2`, compiled for the method of lines.
pub struct FieldSystem {
    pub name: String,
    pub chart: Chart,
    pub h: HamiltonianSection,
    closed_form: Option<ClosedFormP>,
    dh_du: Vec<CompiledExpr>,
    dh_dm: Vec<CompiledExpr>,
    dh_dp: Vec<CompiledExpr>,
    d2h_dp2: Vec<Vec<CompiledExpr>>,
}

impl std::fmt::Debug for FieldSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldSystem")
            .field("name", &self.name)
            .field("chart", &self.chart)
            .field("h", &self.h.expr().to_string())
            .field("closed_form", &self.closed_form.is_some())
            .finish()
    }
}

impl FieldSystem {
    pub fn new(
        name: impl Into<String>,
        chart: &Chart,
        h: HamiltonianSection,
    ) -> Result<FieldSystem> {
        if chart.m() != 2 {
            return Err(Error::Unsupported(format!(
                "the field solver handles m = 2 (time and one space direction), got m = {}",
                chart.m()
            )));
        }
        let names = chart.names();
        let n = chart.n();
        let e = h.expr();
        let c = |var: &str| e.diff(var).compile(&names);
        let dh_dp = (0..n)
            .map(|a| c(&chart.p(1, a)))
            .collect::<Result<Vec<_>, _>>()?;
        let d2h_dp2 = (0..n)
            .map(|a| {
                let first = e.diff(&chart.p(1, a));
                (0..n)
                    .map(|b| first.diff(&chart.p(1, b)).compile(&names))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FieldSystem {
            name: name.into(),
            chart: *chart,
            dh_du: (0..n).map(|a| c(&chart.u(a))).collect::<Result<_, _>>()?,
            dh_dm: (0..n)
                .map(|a| c(&chart.p(0, a)))
                .collect::<Result<_, _>>()?,
            dh_dp,
            d2h_dp2,
            h,
            closed_form: None,
        })
    }

    pub fn with_closed_form(mut self, f: ClosedFormP) -> FieldSystem {
        self.closed_form = Some(f);
        self
    }

    pub fn has_closed_form(&self) -> bool {
        self.closed_form.is_some()
    }

    /// One-dimensional wave / simplified elasticity model with its closed-form
    /// stress `P = −G^{11} g_{11} ϱ̄ u_x`.
    pub fn wave(spec: &ContinuumSpec) -> Result<FieldSystem> {
        let (chart, h) = model_wave(spec)?;
        let coef = spec.cometric[(0, 0)] * spec.metric[(0, 0)];
        let density = spec.density.clone();
        let closed: ClosedFormP = Arc::new(move |base: &[f64], _u: &[f64], ux: &[f64]| {
            let rho = match density.as_const() {
                Some(r) => r,
                None => {
                    let b: Binding =
                        [("x1".to_string(), base[0]), ("x2".to_string(), base[1])].into();
                    density.eval(&b)?
                }
            };
            Ok(vec![-coef * rho * ux[0]])
        });
        Ok(FieldSystem::new("wave", &chart, h)?.with_closed_form(closed))
    }

    /// One-dimensional perfect gas with the closed-form stress `P = f(F)/F`.
    pub fn perfect_gas(gas: &PerfectGas) -> Result<FieldSystem> {
        let chart = Chart::new(2, 1)?;
        let h = gas.hamiltonian(&chart)?;
        let g = gas.clone();
        let closed: ClosedFormP =
            Arc::new(move |_b: &[f64], _u: &[f64], ux: &[f64]| Ok(vec![g.stress(ux[0])?]));
        Ok(FieldSystem::new("perfect_gas", &chart, h)?.with_closed_form(closed))
    }

    fn eval_all(list: &[CompiledExpr], vals: &[f64]) -> Result<Vec<f64>> {
        Ok(list
            .iter()
            .map(|e| e.eval(vals))
            .collect::<Result<Vec<_>, _>>()?)
    }

    /// `∂H/∂M`, `∂H/∂u` and `∂H/∂P` at a point with values in chart order.
    pub fn partials(&self, vals: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        Ok((
            Self::eval_all(&self.dh_dm, vals)?,
            Self::eval_all(&self.dh_du, vals)?,
            Self::eval_all(&self.dh_dp, vals)?,
        ))
    }

    /// Solve `∂H/∂P(t, x, u, M, P) = u_x` for `P` at one point. Returns the
    /// solution and the number of Newton iterations used.
    #[allow(clippy::too_many_arguments)]
    fn solve_point(
        &self,
        cfg: &SolverConfig,
        index: usize,
        base: [f64; 2],
        u: &[f64],
        m: &[f64],
        ux: &[f64],
        guess: &[f64],
    ) -> Result<(Vec<f64>, usize)> {
        let n = u.len();
        let use_closed = cfg.reconstruction == Reconstruction::ClosedForm;
        if use_closed {
            let f = self.closed_form.as_ref().ok_or_else(|| {
                Error::Config(format!(
                    "model `{}` has no closed-form stress; use reconstruction = \"newton\"",
                    self.name
                ))
            })?;
            return Ok((f(&base, u, ux).map_err(|e| at_index(e, index))?, 0));
        }
        let mut vals = Vec::with_capacity(2 + 3 * n);
        vals.extend(base);
        vals.extend(u);
        vals.extend(m);
        vals.extend(guess);
        let p_at = 2 + 2 * n;
        let scale = 1.0 + ux.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let residual = |vals: &[f64]| -> Result<Vec<f64>> {
            let g = Self::eval_all(&self.dh_dp, vals)?;
            Ok(g.iter().zip(ux).map(|(a, b)| a - b).collect())
        };
        let mut r = residual(&vals).map_err(|e| at_index(e, index))?;
        for it in 0..=cfg.newton_max_iter {
            let norm = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if norm <= cfg.newton_tol * scale {
                return Ok((vals[p_at..].to_vec(), it));
            }
            if it == cfg.newton_max_iter {
                return Err(Error::Numeric(format!(
                    "Newton reconstruction of P did not converge at grid index {index} after {it} iterations (last residual {norm:e})"
                )));
            }
            let jac = DMatrix::from_fn(n, n, |a, b| {
                self.d2h_dp2[a][b].eval(&vals).unwrap_or(f64::NAN)
            });
            let step = jac
                .lu()
                .solve(&DVector::from_iterator(n, r.iter().map(|v| -v)))
                .filter(|s| s.iter().all(|v| v.is_finite()))
                .ok_or_else(|| {
                    Error::Numeric(format!(
                        "singular stress Jacobian at grid index {index} (residual {norm:e})"
                    ))
                })?;
            // halve the step until the Hamiltonian can be evaluated
            let mut lambda = 1.0;
            let base_p = vals[p_at..].to_vec();
            loop {
                for a in 0..n {
                    vals[p_at + a] = base_p[a] + lambda * step[a];
                }
                match residual(&vals) {
                    Ok(next) if next.iter().all(|v| v.is_finite()) => {
                        r = next;
                        break;
                    }
                    _ if lambda > 1e-9 => lambda *= 0.5,
                    _ => {
                        return Err(Error::Numeric(format!(
                            "Newton step left the domain of the Hamiltonian at grid index {index}"
                        )))
                    }
                }
            }
        }
        unreachable!("loop returns on the last iteration")
    }
}

fn at_index(e: Error, index: usize) -> Error {
    match e {
        Error::Numeric(msg) => Error::Numeric(format!("{msg} (grid index {index})")),
        Error::Eval(err) => Error::Numeric(format!("{err} (grid index {index})")),
        other => other,
    }
}

/// Initial data as functions of `x1` (set to `t0`) and `x2`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u: Vec<Expr>,
    pub m: Vec<Expr>,
    /// Starting guess for Newton reconstruction (defaults to 1 everywhere).
    pub p_guess: Option<Vec<Expr>>,
}

/// Discrete section at one time level: `u[α][k]`, `m[α][k] = p1_α`, `p[α][k] = p2_α`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSection {
    pub t: f64,
    pub u: Vec<Vec<f64>>,
    pub m: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub x: Vec<f64>,
    pub dx: f64,
    /// Step actually used.
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
    pub boundary: Boundary,
    pub snapshots: Vec<GridSection>,
    pub warnings: Vec<String>,
    pub newton_iterations: usize,
}

/// Spatial derivative with the boundary treatment of the grid.
pub(crate) fn d_x(v: &[f64], dx: f64, boundary: Boundary) -> Vec<f64> {
    let k = v.len();
    (0..k)
        .map(|i| match boundary {
            Boundary::Periodic => (v[(i + 1) % k] - v[(i + k - 1) % k]) / (2.0 * dx),
            Boundary::Dirichlet if i == 0 => (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx),
            Boundary::Dirichlet if i == k - 1 => {
                (3.0 * v[k - 1] - 4.0 * v[k - 2] + v[k - 3]) / (2.0 * dx)
            }
            Boundary::Dirichlet => (v[i + 1] - v[i - 1]) / (2.0 * dx),
        })
        .collect()
}

fn grid(cfg: &SolverConfig) -> Vec<f64> {
    (0..cfg.k).map(|i| cfg.x0 + i as f64 * cfg.dx).collect()
}

/// Pointwise solve of `∂H/∂P = D_x u` for the whole grid.
pub fn reconstruct_p(
    sys: &FieldSystem,
    cfg: &SolverConfig,
    t: f64,
    u: &[Vec<f64>],
    m: &[Vec<f64>],
    guess: Option<&[Vec<f64>]>,
) -> Result<Vec<Vec<f64>>> {
    Ok(reconstruct_counted(sys, cfg, t, u, m, guess)?.0)
}

fn reconstruct_counted(
    sys: &FieldSystem,
    cfg: &SolverConfig,
    t: f64,
    u: &[Vec<f64>],
    m: &[Vec<f64>],
    guess: Option<&[Vec<f64>]>,
) -> Result<(Vec<Vec<f64>>, usize)> {
    let n = sys.chart.n();
    let k_len = cfg.k;
    if u.len() != n || m.len() != n || u.iter().chain(m).any(|r| r.len() != k_len) {
        return Err(Error::Shape(format!(
            "fields must have {n} components of length {k_len}"
        )));
    }
    let ux: Vec<Vec<f64>> = u.iter().map(|r| d_x(r, cfg.dx, cfg.boundary)).collect();
    let xs = grid(cfg);
    let mut p = vec![vec![0.0; k_len]; n];
    let mut iters = 0;
    for k in 0..k_len {
        let col = |f: &[Vec<f64>]| -> Vec<f64> { (0..n).map(|a| f[a][k]).collect() };
        let g = guess.map_or_else(|| vec![1.0; n], col);
        let (pk, it) = sys.solve_point(cfg, k, [t, xs[k]], &col(u), &col(m), &col(&ux), &g)?;
        iters += it;
        for a in 0..n {
            p[a][k] = pk[a];
        }
    }
    Ok((p, iters))
}

struct Stage {
    du: Vec<Vec<f64>>,
    dm: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
}

#[allow(clippy::too_many_arguments)]
fn stage(
    sys: &FieldSystem,
    cfg: &SolverConfig,
    xs: &[f64],
    t: f64,
    u: &[Vec<f64>],
    m: &[Vec<f64>],
    guess: &[Vec<f64>],
    iters: &mut usize,
) -> Result<Stage> {
    let n = sys.chart.n();
    let (p, it) = reconstruct_counted(sys, cfg, t, u, m, Some(guess))?;
    *iters += it;
    let px: Vec<Vec<f64>> = p.iter().map(|r| d_x(r, cfg.dx, cfg.boundary)).collect();
    let mut du = vec![vec![0.0; cfg.k]; n];
    let mut dm = vec![vec![0.0; cfg.k]; n];
    let mut vals = vec![0.0; 2 + 3 * n];
    for k in 0..cfg.k {
        if cfg.boundary == Boundary::Dirichlet && (k == 0 || k == cfg.k - 1) {
            continue;
        }
        vals[0] = t;
        vals[1] = xs[k];
        for a in 0..n {
            vals[2 + a] = u[a][k];
            vals[2 + n + a] = m[a][k];
            vals[2 + 2 * n + a] = p[a][k];
        }
        let (hm, hu, _) = sys.partials(&vals).map_err(|e| at_index(e, k))?;
        for a in 0..n {
            du[a][k] = hm[a];
            dm[a][k] = -hu[a] - px[a][k];
        }
    }
    Ok(Stage { du, dm, p })
}

fn axpy(base: &[Vec<f64>], c: f64, d: &[Vec<f64>]) -> Vec<Vec<f64>> {
    base.iter()
        .zip(d)
        .map(|(b, d)| b.iter().zip(d).map(|(x, y)| x + c * y).collect())
        .collect()
}

/// Method-of-lines RK4 integration of `u_t = ∂H/∂M`, `M_t = −∂H/∂u − D_x P`
/// with `P` reconstructed from `D_x u = ∂H/∂P` at every stage.
pub fn evolve_field(
    sys: &FieldSystem,
    cfg: &SolverConfig,
    init: &InitialData,
) -> Result<Trajectory> {
    cfg.validate()?;
    let n = sys.chart.n();
    if init.u.len() != n || init.m.len() != n {
        return Err(Error::Shape(format!(
            "initial data needs {n} u and {n} M expressions"
        )));
    }
    let xs = grid(cfg);
    let eval_on_grid = |e: &Expr| -> Result<Vec<f64>> {
        xs.iter()
            .map(|&x| {
                let b: Binding = [("x1".to_string(), cfg.t0), ("x2".to_string(), x)].into();
                e.eval(&b).map_err(Error::from)
            })
            .collect()
    };
    let mut u: Vec<Vec<f64>> = init.u.iter().map(eval_on_grid).collect::<Result<_>>()?;
    let mut m: Vec<Vec<f64>> = init.m.iter().map(eval_on_grid).collect::<Result<_>>()?;
    let guess0: Vec<Vec<f64>> = match &init.p_guess {
        Some(g) => g.iter().map(eval_on_grid).collect::<Result<_>>()?,
        None => vec![vec![1.0; cfg.k]; n],
    };
    let (steps, dt) = cfg.steps();
    let mut warnings = Vec::new();
    if (dt - cfg.dt).abs() > 1e-15 * cfg.dt {
        warnings.push(format!(
            "dt reduced from {:e} to {dt:e} so that {steps} steps reach t_final exactly",
            cfg.dt
        ));
    }
    if let Some(w) = cfg.cfl_warning() {
        warnings.push(w);
    }
    let mut iters = 0usize;
    let (mut p, it) = reconstruct_counted(sys, cfg, cfg.t0, &u, &m, Some(&guess0))?;
    iters += it;
    let mut snapshots = vec![GridSection {
        t: cfg.t0,
        u: u.clone(),
        m: m.clone(),
        p: p.clone(),
    }];
    for s in 0..steps {
        let t = cfg.t0 + s as f64 * dt;
        let k1 = stage(sys, cfg, &xs, t, &u, &m, &p, &mut iters)?;
        let k2 = stage(
            sys,
            cfg,
            &xs,
            t + 0.5 * dt,
            &axpy(&u, 0.5 * dt, &k1.du),
            &axpy(&m, 0.5 * dt, &k1.dm),
            &k1.p,
            &mut iters,
        )?;
        let k3 = stage(
            sys,
            cfg,
            &xs,
            t + 0.5 * dt,
            &axpy(&u, 0.5 * dt, &k2.du),
            &axpy(&m, 0.5 * dt, &k2.dm),
            &k2.p,
            &mut iters,
        )?;
        let k4 = stage(
            sys,
            cfg,
            &xs,
            t + dt,
            &axpy(&u, dt, &k3.du),
            &axpy(&m, dt, &k3.dm),
            &k3.p,
            &mut iters,
        )?;
        for a in 0..n {
            for k in 0..cfg.k {
                u[a][k] +=
                    dt / 6.0 * (k1.du[a][k] + 2.0 * k2.du[a][k] + 2.0 * k3.du[a][k] + k4.du[a][k]);
                m[a][k] +=
                    dt / 6.0 * (k1.dm[a][k] + 2.0 * k2.dm[a][k] + 2.0 * k3.dm[a][k] + k4.dm[a][k]);
            }
        }
        let t_next = if s + 1 == steps {
            cfg.t_final
        } else {
            cfg.t0 + (s + 1) as f64 * dt
        };
        let (pn, it) = reconstruct_counted(sys, cfg, t_next, &u, &m, Some(&k4.p))?;
        iters += it;
        p = pn;
        if (s + 1) % cfg.record_every == 0 {
            snapshots.push(GridSection {
                t: t_next,
                u: u.clone(),
                m: m.clone(),
                p: p.clone(),
            });
        }
    }
    Ok(Trajectory {
        x: xs,
        dx: cfg.dx,
        dt,
        steps,
        record_every: cfg.record_every,
        boundary: cfg.boundary,
        snapshots,
        warnings,
        newton_iterations: iters,
    })
}

impl Trajectory {
    /// Spacing between recorded time levels.
    pub fn record_dt(&self) -> f64 {
        self.dt * self.record_every as f64
    }

    /// Spatial points where central stencils apply.
    pub fn interior(&self) -> std::ops::Range<usize> {
        match self.boundary {
            Boundary::Periodic => 0..self.x.len(),
            Boundary::Dirichlet => 1..self.x.len() - 1,
        }
    }

    /// Values in chart order `[t, x, u, M, P]` at snapshot `s`, point `k`.
    pub fn values(&self, s: usize, k: usize) -> Vec<f64> {
        let g = &self.snapshots[s];
        let mut v = vec![g.t, self.x[k]];
        v.extend(g.u.iter().map(|r| r[k]));
        v.extend(g.m.iter().map(|r| r[k]));
        v.extend(g.p.iter().map(|r| r[k]));
        v
    }

    /// Max over all recorded levels of `|u^α − exact(t, x)|`, component `alpha`.
    pub fn max_error(&self, alpha: usize, exact: impl Fn(f64, f64) -> f64) -> f64 {
        let mut e: f64 = 0.0;
        for g in &self.snapshots {
            for (k, &x) in self.x.iter().enumerate() {
                e = e.max((g.u[alpha][k] - exact(g.t, x)).abs());
            }
        }
        e
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldHdwResidual {
    /// `∂u/∂t − ∂H/∂M`.
    pub velocity: Norms,
    /// `∂u/∂x − ∂H/∂P`.
    pub gradient: Norms,
    /// `∂M/∂t + ∂P/∂x + ∂H/∂u`.
    pub balance: Norms,
}

/// Finite-difference residuals of the Hamilton–deDonder–Weyl equations
/// along a trajectory (second-order central differences in `t` and `x`).
pub fn hdw_residual(traj: &Trajectory, sys: &FieldSystem) -> Result<FieldHdwResidual> {
    let snaps = &traj.snapshots;
    if snaps.len() < 3 {
        return Err(Error::Shape(format!(
            "need at least 3 snapshots for the time stencil, got {}",
            snaps.len()
        )));
    }
    let n = sys.chart.n();
    let mut vel = Norms::accumulator();
    let mut grad = Norms::accumulator();
    let mut bal = Norms::accumulator();
    for s in 1..snaps.len() - 1 {
        let h2 = snaps[s + 1].t - snaps[s - 1].t;
        let ux: Vec<Vec<f64>> = snaps[s]
            .u
            .iter()
            .map(|r| d_x(r, traj.dx, traj.boundary))
            .collect();
        let px: Vec<Vec<f64>> = snaps[s]
            .p
            .iter()
            .map(|r| d_x(r, traj.dx, traj.boundary))
            .collect();
        for k in traj.interior() {
            let (hm, hu, hp) = sys.partials(&traj.values(s, k))?;
            for a in 0..n {
                let ut = (snaps[s + 1].u[a][k] - snaps[s - 1].u[a][k]) / h2;
                let mt = (snaps[s + 1].m[a][k] - snaps[s - 1].m[a][k]) / h2;
                vel.push(ut - hm[a]);
                grad.push(ux[a][k] - hp[a]);
                bal.push(mt + px[a][k] + hu[a]);
            }
        }
    }
    Ok(FieldHdwResidual {
        velocity: vel.finish(),
        gradient: grad.finish(),
        balance: bal.finish(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::models::GasConstants;

    fn wave() -> FieldSystem {
        FieldSystem::wave(&ContinuumSpec::unit(1)).unwrap()
    }

    fn sine_data() -> InitialData {
        InitialData {
            u: vec![parse("sin(x2)").unwrap()],
            m: vec![parse("-cos(x2)").unwrap()],
            p_guess: None,
        }
    }

    #[test]
    fn wave_matches_dalembert() {
        let cfg = SolverConfig::periodic_2pi(128, 1.0);
        let traj = evolve_field(&wave(), &cfg, &sine_data()).unwrap();
        assert_eq!(traj.snapshots.last().unwrap().t, 1.0);
        let err = traj.max_error(0, |t, x| (x - t).sin());
        assert!(err <= 1e-3, "error {err}");
    }

    #[test]
    fn wave_error_converges_at_second_order() {
        let err = |k| {
            let cfg = SolverConfig::periodic_2pi(k, 1.0);
            evolve_field(&wave(), &cfg, &sine_data())
                .unwrap()
                .max_error(0, |t, x| (x - t).sin())
        };
        let ratio = err(64) / err(128);
        assert!((ratio - 4.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn zero_data_stays_zero() {
        let cfg = SolverConfig::periodic_2pi(16, 0.5);
        let init = InitialData {
            u: vec![Expr::zero()],
            m: vec![Expr::zero()],
            p_guess: None,
        };
        let traj = evolve_field(&wave(), &cfg, &init).unwrap();
        for g in &traj.snapshots {
            assert!(g.u[0]
                .iter()
                .chain(&g.m[0])
                .chain(&g.p[0])
                .all(|&v| v == 0.0));
        }
    }

    #[test]
    fn newton_agrees_with_closed_form() {
        let mut cfg = SolverConfig::periodic_2pi(32, 0.25);
        let a = evolve_field(&wave(), &cfg, &sine_data()).unwrap();
        cfg.reconstruction = Reconstruction::Newton;
        let b = evolve_field(&wave(), &cfg, &sine_data()).unwrap();
        let last = |t: &Trajectory| t.snapshots.last().unwrap().u[0].clone();
        for (x, y) in last(&a).iter().zip(last(&b)) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(b.newton_iterations > 0);
    }

    #[test]
    fn reconstruct_examples() {
        let cfg = SolverConfig::periodic_2pi(64, 1.0);
        let xs = grid(&cfg);
        let u = vec![xs.iter().map(|x| x.sin()).collect::<Vec<_>>()];
        let m = vec![vec![0.0; 64]];
        let p = reconstruct_p(&wave(), &cfg, 0.0, &u, &m, None).unwrap();
        let err = xs
            .iter()
            .zip(&p[0])
            .map(|(x, p)| (p + x.cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 2e-3, "{err}");
        let flat = reconstruct_p(&wave(), &cfg, 0.0, &[vec![2.0; 64]], &m, None).unwrap();
        assert!(flat[0].iter().all(|&v| v == 0.0));
    }

    fn gas() -> PerfectGas {
        let mut spec = ContinuumSpec::unit(1);
        spec.gas = Some(GasConstants::default());
        PerfectGas::new(&spec).unwrap()
    }

    #[test]
    fn gas_newton_reconstruction_round_trips() {
        let g = gas();
        let sys = FieldSystem::perfect_gas(&g).unwrap();
        let mut cfg = SolverConfig::periodic_2pi(16, 1.0);
        cfg.reconstruction = Reconstruction::Newton;
        // u = 1.2 x + 0.1 sin x is not periodic, so use Dirichlet ends
        cfg.boundary = Boundary::Dirichlet;
        let xs = grid(&cfg);
        let u = vec![xs
            .iter()
            .map(|x| 1.2 * x + 0.1 * x.sin())
            .collect::<Vec<_>>()];
        let m = vec![vec![0.0; 16]];
        let p = reconstruct_p(&sys, &cfg, 0.0, &u, &m, None).unwrap();
        let ux = d_x(&u[0], cfg.dx, cfg.boundary);
        for k in 0..16 {
            assert!((g.deformation_closed(p[0][k]).unwrap() - ux[k]).abs() < 1e-10);
            assert!((p[0][k] - g.stress(ux[k]).unwrap()).abs() < 1e-10 * p[0][k]);
        }
    }

    #[test]
    fn gas_bad_state_reports_index() {
        let sys = FieldSystem::perfect_gas(&gas()).unwrap();
        let cfg = SolverConfig::periodic_2pi(16, 1.0);
        let xs = grid(&cfg);
        let u = vec![xs.iter().map(|x| x.sin()).collect::<Vec<_>>()];
        let err = reconstruct_p(&sys, &cfg, 0.0, &u, &[vec![0.0; 16]], None).unwrap_err();
        assert!(err.to_string().contains("grid index"), "{err}");
    }

    #[test]
    fn residual_of_exact_wave_converges() {
        let sample = |k: usize| {
            let cfg = SolverConfig::periodic_2pi(k, 0.5);
            let (steps, dt) = cfg.steps();
            let xs = grid(&cfg);
            let snaps = (0..=steps)
                .map(|s| {
                    let t = s as f64 * dt;
                    let c: Vec<f64> = xs.iter().map(|x| -(x - t).cos()).collect();
                    GridSection {
                        t,
                        u: vec![xs.iter().map(|x| (x - t).sin()).collect()],
                        m: vec![c.clone()],
                        p: vec![c],
                    }
                })
                .collect();
            let traj = Trajectory {
                x: xs,
                dx: cfg.dx,
                dt,
                steps,
                record_every: 1,
                boundary: Boundary::Periodic,
                snapshots: snaps,
                warnings: vec![],
                newton_iterations: 0,
            };
            let r = hdw_residual(&traj, &wave()).unwrap();
            r.velocity.max.max(r.gradient.max).max(r.balance.max)
        };
        let ratio = sample(64) / sample(128);
        assert!((ratio - 4.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn dirichlet_keeps_boundary_values() {
        let mut cfg = SolverConfig::periodic_2pi(32, 0.5);
        cfg.boundary = Boundary::Dirichlet;
        let traj = evolve_field(&wave(), &cfg, &sine_data()).unwrap();
        let first = &traj.snapshots[0];
        let last = traj.snapshots.last().unwrap();
        assert_eq!(first.u[0][0], last.u[0][0]);
        assert_eq!(first.m[0][31], last.m[0][31]);
    }

    #[test]
    fn runs_are_bit_identical() {
        let cfg = SolverConfig::periodic_2pi(32, 0.5);
        let a = evolve_field(&wave(), &cfg, &sine_data()).unwrap();
        let b = evolve_field(&wave(), &cfg, &sine_data()).unwrap();
        assert_eq!(a, b);
    }
}
