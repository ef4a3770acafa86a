//! Numerical integration of the Hamilton–deDonder–Weyl equations: RK4 for
//! `m = 1`, a method-of-lines RK4 scheme for `m = 2` (`x1` is time, `x2`
//! space), and the temporal-gauge Yang–Mills evolution in 1+1 dimensions.
//!
//! All loops run in a fixed order, so identical inputs give bit-identical
//! outputs.

mod field;
mod ode;
pub mod output;
mod ym;

use serde::{Deserialize, Serialize};

pub use field::{
    evolve_field, hdw_residual, reconstruct_p, ClosedFormP, FieldHdwResidual, FieldSystem,
    GridSection, InitialData, Trajectory,
};
pub use ode::{hdw_residual_ode, integrate_ode, step_ode_rk4, OdeHdwResidual, OdeState, OdeSystem};
pub use ym::evolve_ym_temporal;

/// Max and root-mean-square norms of a residual field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub max: f64,
    pub l2: f64,
}

impl Norms {
    pub fn accumulator() -> NormAccumulator {
        NormAccumulator::default()
    }
}

/// Sequential accumulator for [`Norms`]; summation order is the push order.
#[derive(Debug, Default)]
pub struct NormAccumulator {
    max: f64,
    sum_sq: f64,
    count: usize,
}

impl NormAccumulator {
    pub fn push(&mut self, v: f64) {
        self.max = self.max.max(v.abs());
        if v.is_nan() {
            self.max = f64::NAN;
        }
        self.sum_sq += v * v;
        self.count += 1;
    }

    pub fn finish(&self) -> Norms {
        Norms {
            max: self.max,
            l2: if self.count == 0 {
                0.0
            } else {
                (self.sum_sq / self.count as f64).sqrt()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Periodic,
    /// `u` and `M` at both end points stay at their initial values.
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Reconstruction {
    #[default]
    ClosedForm,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub dx: f64,
    /// Number of spatial grid points.
    pub k: usize,
    pub t0: f64,
    pub t_final: f64,
    /// Position of grid point 0.
    pub x0: f64,
    pub boundary: Boundary,
    pub scheme: Scheme,
    pub reconstruction: Reconstruction,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Keep every `record_every`-th time level in the trajectory.
    pub record_every: usize,
}

impl SolverConfig {
    /// Periodic grid of `k` points on `[0, 2π)` with `Δt = Δx/4`.
    pub fn periodic_2pi(k: usize, t_final: f64) -> SolverConfig {
        let dx = 2.0 * std::f64::consts::PI / k as f64;
        SolverConfig {
            dt: dx / 4.0,
            dx,
            k,
            t0: 0.0,
            t_final,
            x0: 0.0,
            boundary: Boundary::Periodic,
            scheme: Scheme::Rk4,
            reconstruction: Reconstruction::ClosedForm,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            record_every: 1,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::Config(format!(
                "dx must be positive, got {}",
                self.dx
            )));
        }
        if self.k < 8 {
            return Err(Error::Config(format!(
                "the grid needs at least 8 points, got {}",
                self.k
            )));
        }
        if !(self.t_final > self.t0) {
            return Err(Error::Config("t_final must exceed t0".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps and the step actually used: `Δt` is reduced so that
    /// an integer number of steps lands exactly on `t_final`.
    pub fn steps(&self) -> (usize, f64) {
        time_steps(self.t_final - self.t0, self.dt)
    }

    /// Advisory CFL check for wave-type models.
    pub fn cfl_warning(&self) -> Option<String> {
        let (_, dt) = self.steps();
        (dt > 0.5 * self.dx).then(|| {
            format!(
                "CFL advisory: dt = {dt:e} exceeds 0.5*dx = {:e}; the explicit scheme may be unstable",
                0.5 * self.dx
            )
        })
    }
}

pub(crate) fn time_steps(span: f64, dt: f64) -> (usize, f64) {
    let n = (span / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (n, span / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_land_on_final_time() {
        let (n, dt) = time_steps(1.0, 0.3);
        assert_eq!(n, 4);
        assert_eq!(dt, 0.25);
        let (n, dt) = time_steps(10.0, 1e-3);
        assert_eq!(n, 10000);
        assert!((dt - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn norms() {
        let mut a = Norms::accumulator();
        for v in [3.0, -4.0] {
            a.push(v);
        }
        let n = a.finish();
        assert_eq!(n.max, 4.0);
        assert!((n.l2 - (12.5f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::periodic_2pi(64, 1.0);
        c.validate().unwrap();
        assert!(c.cfl_warning().is_none());
        c.dt = c.dx;
        assert!(c.cfl_warning().is_some());
        c.k = 4;
        assert!(c.validate().is_err());
    }
}
