use serde::Serialize;

use super::{time_steps, Norms};
use crate::bundle::{Chart, HamiltonianSection};
use crate::error::{Error, Result};
use crate::expr::CompiledExpr;

/// Discrete section for `m = 1`: the point `(u, p)` at time `t = x1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeState {
    pub t: f64,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
}

impl OdeState {
    /// Values in [`Chart::names`] order.
    pub fn values(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(1 + 2 * self.u.len());
        v.push(self.t);
        v.extend(&self.u);
        v.extend(&self.p);
        v
    }
}

/// Compiled Hamilton equations `u̇ = ∂H/∂p`, `ṗ = −∂H/∂u`.
pub struct OdeSystem {
    chart: Chart,
    h: CompiledExpr,
    dh_du: Vec<CompiledExpr>,
    dh_dp: Vec<CompiledExpr>,
}

impl OdeSystem {
    pub fn new(h: &HamiltonianSection, chart: &Chart) -> Result<OdeSystem> {
        if chart.m() != 1 {
            return Err(Error::Unsupported(format!(
                "the ODE integrator needs m = 1, got m = {}",
                chart.m()
            )));
        }
        let names = chart.names();
        let e = h.expr();
        let compile = |var: String| e.diff(&var).compile(&names);
        Ok(OdeSystem {
            chart: *chart,
            h: e.compile(&names)?,
            dh_du: chart
                .fiber_names()
                .into_iter()
                .map(compile)
                .collect::<Result<_, _>>()?,
            dh_dp: chart
                .momentum_names()
                .into_iter()
                .map(compile)
                .collect::<Result<_, _>>()?,
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn energy(&self, s: &OdeState) -> Result<f64> {
        Ok(self.h.eval(&s.values())?)
    }

    /// `(u̇, ṗ)` at a state.
    pub fn rhs(&self, s: &OdeState) -> Result<(Vec<f64>, Vec<f64>)> {
        let v = s.values();
        let du = self
            .dh_dp
            .iter()
            .map(|e| e.eval(&v))
            .collect::<Result<Vec<_>, _>>()?;
        let dp = self
            .dh_du
            .iter()
            .map(|e| e.eval(&v).map(|x| -x))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((du, dp))
    }

    /// One classical RK4 step; `t` advances by `dt`.
    pub fn step(&self, s: &OdeState, dt: f64) -> Result<OdeState> {
        let shifted = |k: &(Vec<f64>, Vec<f64>), c: f64| OdeState {
            t: s.t + c * dt,
            u: s.u.iter().zip(&k.0).map(|(a, b)| a + c * dt * b).collect(),
            p: s.p.iter().zip(&k.1).map(|(a, b)| a + c * dt * b).collect(),
        };
        let k1 = self.rhs(s)?;
        let k2 = self.rhs(&shifted(&k1, 0.5))?;
        let k3 = self.rhs(&shifted(&k2, 0.5))?;
        let k4 = self.rhs(&shifted(&k3, 1.0))?;
        let comb = |x: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
            (0..x.len())
                .map(|i| x[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
                .collect()
        };
        Ok(OdeState {
            t: s.t + dt,
            u: comb(&s.u, &k1.0, &k2.0, &k3.0, &k4.0),
            p: comb(&s.p, &k1.1, &k2.1, &k3.1, &k4.1),
        })
    }
}

/// One RK4 step of Hamilton's equations for a Hamiltonian on an `m = 1` chart.
pub fn step_ode_rk4(
    state: &OdeState,
    h: &HamiltonianSection,
    chart: &Chart,
    dt: f64,
) -> Result<OdeState> {
    OdeSystem::new(h, chart)?.step(state, dt)
}

/// Integrate from `start.t` to `t_final`, returning every time level
/// (including the initial one). `dt` is reduced to land on `t_final`.
pub fn integrate_ode(
    sys: &OdeSystem,
    start: &OdeState,
    dt: f64,
    t_final: f64,
) -> Result<Vec<OdeState>> {
    if !(dt > 0.0) || !(t_final > start.t) {
        return Err(Error::Config("need dt > 0 and t_final > t0".into()));
    }
    let n = sys.chart.n();
    if start.u.len() != n || start.p.len() != n {
        return Err(Error::Shape(format!(
            "state must have {n} positions and momenta"
        )));
    }
    let (steps, dt) = time_steps(t_final - start.t, dt);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(start.clone());
    for k in 0..steps {
        let mut next = sys.step(&out[k], dt)?;
        next.t = start.t + (k + 1) as f64 * dt;
        out.push(next);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeHdwResidual {
    /// `du/dt − ∂H/∂p`.
    pub velocity: Norms,
    /// `dp/dt + ∂H/∂u`.
    pub balance: Norms,
}

/// Central-difference residual of Hamilton's equations along equally spaced states.
pub fn hdw_residual_ode(states: &[OdeState], sys: &OdeSystem) -> Result<OdeHdwResidual> {
    if states.len() < 3 {
        return Err(Error::Shape(format!(
            "need at least 3 states for the stencil, got {}",
            states.len()
        )));
    }
    let mut vel = Norms::accumulator();
    let mut bal = Norms::accumulator();
    for w in states.windows(3) {
        let h2 = w[2].t - w[0].t;
        let (du, dp) = sys.rhs(&w[1])?;
        for a in 0..du.len() {
            vel.push((w[2].u[a] - w[0].u[a]) / h2 - du[a]);
            bal.push((w[2].p[a] - w[0].p[a]) / h2 - dp[a]);
        }
    }
    Ok(OdeHdwResidual {
        velocity: vel.finish(),
        balance: bal.finish(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn oscillator() -> OdeSystem {
        let c = Chart::new(1, 1).unwrap();
        let h = HamiltonianSection::new(&c, parse("(u1^2 + p1_1^2)/2").unwrap()).unwrap();
        OdeSystem::new(&h, &c).unwrap()
    }

    fn start() -> OdeState {
        OdeState {
            t: 0.0,
            u: vec![1.0],
            p: vec![0.0],
        }
    }

    #[test]
    fn oscillator_single_step() {
        let s = oscillator().step(&start(), 0.01).unwrap();
        assert!((s.u[0] - 0.01f64.cos()).abs() < 1e-10);
        assert!((s.p[0] + 0.01f64.sin()).abs() < 1e-10);
        assert_eq!(s.t, 0.01);
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let c = Chart::new(1, 2).unwrap();
        let h = HamiltonianSection::new(&c, parse("0").unwrap()).unwrap();
        let s = OdeState {
            t: 0.0,
            u: vec![1.5, -2.0],
            p: vec![0.25, 3.0],
        };
        let next = step_ode_rk4(&s, &h, &c, 0.1).unwrap();
        assert_eq!(next.u, s.u);
        assert_eq!(next.p, s.p);
    }

    #[test]
    fn energy_drift_is_small() {
        let sys = oscillator();
        let traj = integrate_ode(&sys, &start(), 1e-3, 10.0).unwrap();
        let e0 = sys.energy(&traj[0]).unwrap();
        let drift = traj
            .iter()
            .map(|s| (sys.energy(s).unwrap() - e0).abs())
            .fold(0.0, f64::max);
        assert!(drift <= 1e-8, "drift {drift}");
        assert_eq!(traj.last().unwrap().t, 10.0);
    }

    #[test]
    fn global_error_is_fourth_order() {
        let sys = oscillator();
        let err = |dt: f64| {
            let traj = integrate_ode(&sys, &start(), dt, 10.0).unwrap();
            traj.iter()
                .map(|s| (s.u[0] - s.t.cos()).abs().max((s.p[0] + s.t.sin()).abs()))
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.04), err(0.02));
        let ratio = e1 / e2;
        assert!((ratio - 16.0).abs() < 0.2 * 16.0, "ratio {ratio}");
    }

    #[test]
    fn residual_of_exact_solution() {
        let sys = oscillator();
        let states: Vec<OdeState> = (0..50)
            .map(|k| {
                let t = k as f64 * 0.01;
                OdeState {
                    t,
                    u: vec![t.cos()],
                    p: vec![-t.sin()],
                }
            })
            .collect();
        let r = hdw_residual_ode(&states, &sys).unwrap();
        assert!(r.velocity.max < 2e-5 && r.balance.max < 2e-5);
        assert!(hdw_residual_ode(&states[..2], &sys).is_err());
    }

    #[test]
    fn rejects_field_charts() {
        let c = Chart::new(2, 1).unwrap();
        let h = HamiltonianSection::new(&c, parse("p1_1").unwrap()).unwrap();
        assert!(OdeSystem::new(&h, &c).is_err());
    }
}
