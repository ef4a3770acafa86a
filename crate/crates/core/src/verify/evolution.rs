use std::f64::consts::PI;

use super::sampling::rng;
use super::{Level, RatioBand, VerificationReport, VerifyConfig};
use crate::bracket::bracket_affine;
use crate::bundle::{d_current, Chart, HamiltonianSection, Observable};
use crate::error::{Error, Result};
use crate::expr::parse;
use crate::models::{
    gauss_residual, shipped_currents, ym_residual, ContinuumSpec, GasConstants, LieAlgebraSpec,
    PerfectGas,
};
use crate::solver::{
    evolve_field, evolve_ym_temporal, integrate_ode, FieldSystem, InitialData, OdeState, OdeSystem,
    SolverConfig, Trajectory,
};
use rand::Rng;

/// Max over interior time levels of `|d/dt f(s(t)) − {f, h}(s(t))|` along an
/// RK4 trajectory, with the time derivative taken by the fourth-order
/// five-point stencil.
pub fn bracket_evolution_ode(
    h: &HamiltonianSection,
    chart: &Chart,
    f: &Observable,
    start: &OdeState,
    dt: f64,
    t_final: f64,
) -> Result<f64> {
    let sys = OdeSystem::new(h, chart)?;
    let states = integrate_ode(&sys, start, dt, t_final)?;
    if states.len() < 5 {
        return Err(Error::Shape(
            "need at least 5 time levels for the stencil".into(),
        ));
    }
    let names = chart.names();
    let fc = f.coefficients(chart).remove(0).compile(&names)?;
    let rhs = bracket_affine(f, h, chart)?.compile(&names)?;
    let g: Vec<f64> = states
        .iter()
        .map(|s| fc.eval(&s.values()))
        .collect::<Result<_, _>>()?;
    let step = states[1].t - states[0].t;
    let mut worst: f64 = 0.0;
    for k in 2..states.len() - 2 {
        let lhs = (g[k - 2] - 8.0 * g[k - 1] + 8.0 * g[k + 1] - g[k + 2]) / (12.0 * step);
        worst = worst.max((lhs - rhs.eval(&states[k].values())?).abs());
    }
    Ok(worst)
}

/// Max over interior points of a field trajectory of the difference between
/// the pulled-back coefficient of `dα⁰` and `{α⁰, h}` on the trajectory.
/// Derivatives are second-order central differences.
pub fn bracket_evolution_field(
    sys: &FieldSystem,
    current: &Observable,
    traj: &Trajectory,
) -> Result<f64> {
    let chart = &sys.chart;
    let Observable::Current(c) = current else {
        return Err(Error::Unsupported(
            "field trajectories pair with currents (m = 2)".into(),
        ));
    };
    let snaps = &traj.snapshots;
    if snaps.len() < 3 {
        return Err(Error::Shape(
            "need at least 3 snapshots for the time stencil".into(),
        ));
    }
    let names = chart.names();
    let n = chart.n();
    let dc = d_current(c, chart)?;
    let c0 = dc.c0.compile(&names)?;
    let cu = dc
        .cu
        .iter()
        .map(|row| {
            row.iter()
                .map(|e| e.compile(&names))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let cp = dc
        .cp
        .iter()
        .map(|e| e.compile(&names))
        .collect::<Result<Vec<_>, _>>()?;
    let rhs = bracket_affine(current, &sys.h, chart)?.compile(&names)?;
    let dx = traj.dx;
    let k_len = traj.x.len();
    let central = |v: &[f64], k: usize| -> f64 {
        match traj.boundary {
            crate::solver::Boundary::Periodic => {
                (v[(k + 1) % k_len] - v[(k + k_len - 1) % k_len]) / (2.0 * dx)
            }
            crate::solver::Boundary::Dirichlet => (v[k + 1] - v[k - 1]) / (2.0 * dx),
        }
    };
    let mut worst: f64 = 0.0;
    for s in 1..snaps.len() - 1 {
        let h2 = snaps[s + 1].t - snaps[s - 1].t;
        for k in traj.interior() {
            let vals = traj.values(s, k);
            let mut lhs = c0.eval(&vals)?;
            for b in 0..n {
                let ut = (snaps[s + 1].u[b][k] - snaps[s - 1].u[b][k]) / h2;
                let ux = central(&snaps[s].u[b], k);
                lhs += cu[b][0].eval(&vals)? * ut + cu[b][1].eval(&vals)? * ux;
            }
            for a in 0..n {
                let mt = (snaps[s + 1].m[a][k] - snaps[s - 1].m[a][k]) / h2;
                let px = central(&snaps[s].p[a], k);
                lhs += cp[a].eval(&vals)? * (mt + px);
            }
            worst = worst.max((lhs - rhs.eval(&vals)?).abs());
        }
    }
    Ok(worst)
}

const ODE_F: &str = "u1^5 + x1*p1_1^3 + u1*p1_1";

/// Harmonic oscillator, `f = u1^5 + x1 p1_1^3 + u1 p1_1`, `t ∈ [0, 10]`,
/// `Δt = 4e-3 · 2^{-l}`.
pub fn check_bracket_evolution_ode(cfg: &VerifyConfig) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new(
        "bracket_evolution_ode",
        "along a solution of Hamilton's equations d/dt f(s(t)) = {f, h}(s(t)); the discrete residual \
         converges at the order of the integrator",
        cfg.seed,
        1e-8,
    );
    let chart = Chart::new(1, 1)?;
    let h = HamiltonianSection::parse(&chart, "(u1^2 + p1_1^2)/2")?;
    let f = Observable::Function(parse(ODE_F)?);
    let start = OdeState {
        t: 0.0,
        u: vec![1.0],
        p: vec![0.0],
    };
    let mut rows = Vec::new();
    for l in 0..cfg.levels {
        let dt = 4e-3 / f64::powi(2.0, l as i32);
        let r = bracket_evolution_ode(&h, &chart, &f, &start, dt, 10.0)?;
        rows.push((format!("dt={dt:e}"), dt, r));
        rep.sample_count += (10.0 / dt).round() as usize;
    }
    rep.levels = Level::ladder(rows);
    rep.max_residual = rep.levels.last().map_or(f64::NAN, |l| l.residual);
    rep.ratio_band = Some(RatioBand {
        expected: 16.0,
        rel: 0.2,
    });
    rep.details.push(format!("observable f = {ODE_F}"));
    rep.decide(true);
    Ok(rep)
}

fn wave_runs(levels: usize) -> Result<(FieldSystem, Vec<(usize, Trajectory)>)> {
    let sys = FieldSystem::wave(&ContinuumSpec::unit(1))?;
    let init = InitialData {
        u: vec![parse("sin(x2)")?],
        m: vec![parse("-cos(x2)")?],
        p_guess: None,
    };
    let mut runs = Vec::new();
    for l in 0..levels {
        let k = 64 << l;
        let cfg = SolverConfig::periodic_2pi(k, 1.0);
        runs.push((k, evolve_field(&sys, &cfg, &init)?));
    }
    Ok((sys, runs))
}

/// Wave model on `[0, 2π)`, `u = sin x`, `M = −cos x`, `K = 64 · 2^l`,
/// `Δt = Δx/4`, `T = 1`.
pub fn check_bracket_evolution_field(cfg: &VerifyConfig) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new(
        "bracket_evolution_field",
        "along a solution of the field equations the pulled-back differential of a current equals \
         its bracket with h; the discrete residual converges at second order",
        cfg.seed,
        1e-3,
    );
    let (sys, runs) = wave_runs(cfg.levels)?;
    let currents = shipped_currents(&sys.chart);
    let primary = &currents[0].1;
    let mut rows = Vec::new();
    let mut accurate = true;
    for (k, traj) in &runs {
        let r = bracket_evolution_field(&sys, primary, traj)?;
        rows.push((format!("K={k}"), traj.dx, r));
        let err = traj.max_error(0, |t, x| (x - t).sin());
        rep.details
            .push(format!("K={k}: max |u - sin(x - t)| = {err:.3e}"));
        if *k >= 128 {
            accurate &= err <= 1e-3;
        }
        rep.sample_count += traj.x.len() * traj.snapshots.len();
    }
    for (name, obs) in &currents[1..] {
        let rs: Vec<String> = runs
            .iter()
            .map(|(_, t)| bracket_evolution_field(&sys, obs, t).map(|r| format!("{r:.3e}")))
            .collect::<Result<_>>()?;
        rep.details
            .push(format!("current {name}: residuals [{}]", rs.join(", ")));
    }
    rep.levels = Level::ladder(rows);
    rep.max_residual = rep.levels.last().map_or(f64::NAN, |l| l.residual);
    rep.ratio_band = Some(RatioBand {
        expected: 4.0,
        rel: 0.25,
    });
    rep.details
        .push(format!("primary current: {}", currents[0].0));
    rep.decide(accurate);
    Ok(rep)
}

/// Size of the perturbation of `M` in the converse check.
pub const CONVERSE_PERTURBATION: f64 = 1e-3;
/// Minimum residual the perturbed trajectory must show.
pub const CONVERSE_FLOOR: f64 = 1e-4;
/// A residual "does not decrease" when each level keeps at least this
/// fraction of the previous one.
pub const CONVERSE_KEEP: f64 = 0.75;

/// Wave trajectories with `M` shifted by `1e-3`: at least one shipped current
/// must show a residual of at least `1e-4` that does not decrease under
/// refinement.
pub fn check_bracket_evolution_converse(cfg: &VerifyConfig) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new(
        "bracket_evolution_converse",
        "a section that is not a solution violates the bracket form of the equations for some current",
        cfg.seed,
        f64::INFINITY,
    );
    let (sys, runs) = wave_runs(cfg.levels)?;
    let perturbed: Vec<(usize, Trajectory)> = runs
        .into_iter()
        .map(|(k, mut t)| {
            for s in &mut t.snapshots {
                for row in &mut s.m {
                    for v in row {
                        *v += CONVERSE_PERTURBATION;
                    }
                }
            }
            (k, t)
        })
        .collect();
    let mut best: Option<(String, Vec<Level>)> = None;
    for (name, obs) in shipped_currents(&sys.chart) {
        let rows = perturbed
            .iter()
            .map(|(k, t)| {
                Ok((
                    format!("K={k}"),
                    t.dx,
                    bracket_evolution_field(&sys, &obs, t)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let levels = Level::ladder(rows);
        let floor = levels.iter().all(|l| l.residual >= CONVERSE_FLOOR);
        let kept = levels
            .windows(2)
            .all(|w| w[1].residual >= CONVERSE_KEEP * w[0].residual);
        let rs: Vec<String> = levels
            .iter()
            .map(|l| format!("{:.3e}", l.residual))
            .collect();
        rep.details.push(format!(
            "current {name}: residuals [{}], floor {floor}, non-decreasing {kept}",
            rs.join(", ")
        ));
        if floor && kept && best.is_none() {
            best = Some((name, levels));
        }
    }
    rep.sample_count = perturbed
        .iter()
        .map(|(_, t)| t.x.len() * t.snapshots.len())
        .sum();
    match best {
        Some((name, levels)) => {
            rep.details.push(format!("detecting current: {name}"));
            rep.max_residual = levels.last().map_or(f64::NAN, |l| l.residual);
            rep.levels = levels;
            rep.decide(true);
        }
        None => {
            rep.max_residual = f64::NAN;
            rep.decide(false);
        }
    }
    Ok(rep)
}

/// su(2) configuration solving the Gauss law: `u_1 = (0, 0, 1)`,
/// `E = (cos x, −sin x, 0)` on `k` periodic points; returns `(u1, E, dx)`.
pub fn su2_gauss_config(k: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, f64) {
    let dx = 2.0 * PI / k as f64;
    let xs: Vec<f64> = (0..k).map(|i| i as f64 * dx).collect();
    let u1 = vec![vec![0.0; k], vec![0.0; k], vec![1.0; k]];
    let e = vec![
        xs.iter().map(|x| x.cos()).collect(),
        xs.iter().map(|x| -x.sin()).collect(),
        vec![0.0; k],
    ];
    (u1, e, dx)
}

/// Abelian 1+1 run in temporal gauge with constant `E` (1000 steps) plus a
/// Gauss-law convergence study on an su(2) solution.
pub fn check_ym_conservation(cfg: &VerifyConfig) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new(
        "ym_conservation",
        "temporal-gauge Yang-Mills: a constant electric field is preserved and the Gauss law holds \
         to second order in the grid spacing",
        cfg.seed,
        1e-12,
    );
    let metric = [1.0, 1.0];
    let abelian = LieAlgebraSpec::abelian(1);
    let k = 64;
    let dx = 2.0 * PI / k as f64;
    let mut r = rng(cfg.seed.wrapping_add(7));
    let e0: f64 = r.gen_range(0.5..1.5);
    let u1: Vec<f64> = (0..k).map(|i| 0.3 * (i as f64 * dx).sin()).collect();
    let grid = evolve_ym_temporal(
        &abelian,
        metric,
        vec![u1],
        vec![vec![e0; k]],
        dx,
        1e-3,
        1000,
        1,
    )?;
    let drift = grid
        .snapshots
        .iter()
        .flat_map(|s| s.e[0].iter())
        .map(|v| (v - e0).abs())
        .fold(0.0, f64::max);
    let res = ym_residual(&grid, &abelian, metric)?;
    rep.details.push(format!(
        "abelian: E0 = {e0}, max |E(t) - E0| over 1000 steps = {drift:.3e}"
    ));
    rep.details.push(format!(
        "abelian residuals: constitutive {:.3e}, evolution {:.3e}, gauss {:.3e}",
        res.constitutive.max, res.evolution.max, res.gauss.max
    ));
    rep.sample_count += k * grid.snapshots.len();

    let su2 = LieAlgebraSpec::su2();
    let mut rows = Vec::new();
    for l in 0..cfg.levels {
        let k = 32 << l;
        let (u1, e, dx) = su2_gauss_config(k);
        let dt = dx / 4.0;
        let steps = (1.0 / dt).ceil() as usize;
        let grid = evolve_ym_temporal(&su2, metric, u1, e, dx, dt, steps, steps)?;
        let g = gauss_residual(
            grid.snapshots.last().expect("final level recorded"),
            dx,
            &su2,
        )?;
        rows.push((format!("K={k}"), dx, g.max));
        rep.sample_count += k;
    }
    rep.levels = Level::ladder(rows);
    rep.ratio_band = Some(RatioBand {
        expected: 4.0,
        rel: 0.25,
    });
    rep.details.push(
        "Gauss-law ladder: su(2), u1 = (0,0,1), E = (cos x, -sin x, 0); the abelian Gauss residual of a constant \
         field vanishes identically"
            .into(),
    );
    rep.max_residual = drift.max(res.evolution.max);
    rep.decide(res.constitutive.max <= 1e-12);
    Ok(rep)
}

/// Perfect gas with default constants: `F → P → F` through the numerical
/// inverse of the determinant map on `F ∈ [0.5, 2]`, and the identity
/// `ε̄ + N p√g = (1 + N(γ−1)) ε̄`.
pub fn check_perfect_gas(cfg: &VerifyConfig) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new(
        "perfect_gas",
        "the perfect-gas stress relation is inverted exactly and its energy identity holds",
        cfg.seed,
        1e-10,
    );
    let mut spec = ContinuumSpec::unit(1);
    spec.gas = Some(GasConstants::default());
    let gas = PerfectGas::new(&spec)?;
    gas.check_invertible(0.5, 2.0, 200)?;
    let mut round_trip: f64 = 0.0;
    for i in 0..100 {
        let f = 0.5 + 1.5 * i as f64 / 99.0;
        let back = gas.deformation(gas.stress(f)?)?;
        round_trip = round_trip.max((back - f).abs());
    }
    let mut r = rng(cfg.seed.wrapping_add(11));
    let gamma = gas.consts.gamma;
    let n = PerfectGas::N as f64;
    let mut identity: f64 = 0.0;
    for _ in 0..100 {
        let rho: f64 = r.gen_range(0.5..2.0);
        let s: f64 = r.gen_range(-1.0..1.0);
        let eps = gas.energy_density(rho, s);
        let lhs = eps + n * gas.pressure_density(rho, s);
        identity = identity.max((lhs - (1.0 + n * (gamma - 1.0)) * eps).abs());
    }
    rep.sample_count = 200;
    rep.max_residual = round_trip;
    rep.details
        .push(format!("F round trip: max {round_trip:.3e} (tol 1e-10)"));
    rep.details
        .push(format!("energy identity: max {identity:.3e} (tol 1e-12)"));
    rep.decide(identity <= 1e-12);
    Ok(rep)
}
