use std::f64::consts::PI;

use fieldbracket::bundle::Chart;
use fieldbracket::expr::parse;
use fieldbracket::models::{model_td_mechanics, ContinuumSpec, GasConstants, PerfectGas};
use fieldbracket::solver::{
    evolve_field, hdw_residual, hdw_residual_ode, integrate_ode, Boundary, FieldSystem,
    InitialData, OdeState, OdeSystem, Reconstruction, SolverConfig,
};

fn wave_init() -> InitialData {
    InitialData {
        u: vec![parse("sin(x2)").unwrap()],
        m: vec![parse("-cos(x2)").unwrap()],
        p_guess: None,
    }
}

fn wave_error(k: usize) -> f64 {
    let sys = FieldSystem::wave(&ContinuumSpec::unit(1)).unwrap();
    let traj = evolve_field(&sys, &SolverConfig::periodic_2pi(k, 1.0), &wave_init()).unwrap();
    let mut e: f64 = 0.0;
    for s in &traj.snapshots {
        for (x, u) in traj.x.iter().zip(&s.u[0]) {
            e = e.max((u - (x - s.t).sin()).abs());
        }
    }
    e
}

#[test]
fn wave_error_is_second_order() {
    let e: Vec<f64> = [32, 64, 128].iter().map(|&k| wave_error(k)).collect();
    for w in e.windows(2) {
        let r = w[0] / w[1];
        assert!((3.0..5.0).contains(&r), "{e:?}");
    }
}

#[test]
fn wave_satisfies_discrete_hdw_equations() {
    let sys = FieldSystem::wave(&ContinuumSpec::unit(1)).unwrap();
    let traj = evolve_field(&sys, &SolverConfig::periodic_2pi(128, 0.5), &wave_init()).unwrap();
    let r = hdw_residual(&traj, &sys).unwrap();
    assert!(r.gradient.max < 1e-12, "{r:?}");
    assert!(r.velocity.max < 1e-3 && r.balance.max < 1e-2, "{r:?}");
}

#[test]
fn final_time_is_hit_exactly() {
    let sys = FieldSystem::wave(&ContinuumSpec::unit(1)).unwrap();
    let mut cfg = SolverConfig::periodic_2pi(32, 0.3);
    cfg.dt = 0.07;
    let traj = evolve_field(&sys, &cfg, &wave_init()).unwrap();
    assert_eq!(traj.snapshots.last().unwrap().t, 0.3);
    assert!(traj.dt <= 0.07);
    assert!((traj.dt * traj.steps as f64 - 0.3).abs() < 1e-15);
}

#[test]
fn field_evolution_is_deterministic() {
    let sys = FieldSystem::wave(&ContinuumSpec::unit(1)).unwrap();
    let cfg = SolverConfig::periodic_2pi(48, 0.4);
    let a = evolve_field(&sys, &cfg, &wave_init()).unwrap();
    let b = evolve_field(&sys, &cfg, &wave_init()).unwrap();
    assert_eq!(a, b);
}

fn gas_config(k: usize, reconstruction: Reconstruction) -> SolverConfig {
    let mut cfg = SolverConfig::periodic_2pi(k, 0.2);
    cfg.boundary = Boundary::Dirichlet;
    cfg.dx = 2.0 * PI / (k - 1) as f64;
    cfg.dt = cfg.dx / 4.0;
    cfg.reconstruction = reconstruction;
    cfg
}

#[test]
fn gas_newton_agrees_with_closed_form() {
    let mut spec = ContinuumSpec::unit(1);
    spec.gas = Some(GasConstants::default());
    let sys = FieldSystem::perfect_gas(&PerfectGas::new(&spec).unwrap()).unwrap();
    let init = InitialData {
        u: vec![parse("x2 + 0.05*sin(x2)").unwrap()],
        m: vec![parse("0").unwrap()],
        p_guess: None,
    };
    let a = evolve_field(&sys, &gas_config(64, Reconstruction::ClosedForm), &init).unwrap();
    let b = evolve_field(&sys, &gas_config(64, Reconstruction::Newton), &init).unwrap();
    assert!(b.newton_iterations > 0);
    let (sa, sb) = (a.snapshots.last().unwrap(), b.snapshots.last().unwrap());
    for (x, y) in sa.u[0]
        .iter()
        .chain(&sa.p[0])
        .zip(sb.u[0].iter().chain(&sb.p[0]))
    {
        assert!((x - y).abs() < 1e-9, "{x} vs {y}");
    }
    // boundary values stay frozen
    let s0 = &a.snapshots[0];
    assert_eq!(s0.u[0][0], sa.u[0][0]);
    assert_eq!(s0.u[0][63], sa.u[0][63]);
}

#[test]
fn oscillator_is_fourth_order_and_conserves_energy() {
    let chart = Chart::new(1, 1).unwrap();
    let (chart2, h) = model_td_mechanics(1, &parse("u1^2/2").unwrap()).unwrap();
    assert_eq!(chart, chart2);
    let sys = OdeSystem::new(&h, &chart).unwrap();
    let start = OdeState {
        t: 0.0,
        u: vec![1.0],
        p: vec![0.0],
    };
    let err = |dt: f64| {
        let states = integrate_ode(&sys, &start, dt, 2.0).unwrap();
        let last = states.last().unwrap();
        assert_eq!(last.t, 2.0);
        (last.u[0] - 2f64.cos())
            .abs()
            .max((last.p[0] + 2f64.sin()).abs())
    };
    let r = err(0.02) / err(0.01);
    assert!((12.0..20.0).contains(&r), "ratio {r}");
    let states = integrate_ode(&sys, &start, 1e-2, 10.0).unwrap();
    let e0 = sys.energy(&states[0]).unwrap();
    let drift = states
        .iter()
        .map(|s| (sys.energy(s).unwrap() - e0).abs())
        .fold(0.0, f64::max);
    assert!(drift < 1e-8, "{drift}");
    let res = hdw_residual_ode(&states, &sys).unwrap();
    assert!(res.velocity.max < 1e-4 && res.balance.max < 1e-4, "{res:?}");
}
