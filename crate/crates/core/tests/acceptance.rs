//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use fieldbracket::bracket::{bracket_affine, bracket_linear, current_bracket};
use fieldbracket::bundle::{current_coefficients, Chart, HamiltonianSection, Observable};
use fieldbracket::expr::gen::random_polynomial;
use fieldbracket::expr::{parse, Binding, Expr};
use fieldbracket::models::{
    gauss_residual, ContinuumSpec, GasConstants, LieAlgebraSpec, PerfectGas,
};
use fieldbracket::solver::{
    evolve_field, evolve_ym_temporal, FieldSystem, InitialData, SolverConfig,
};
use fieldbracket::verify::sampling::{random_current, random_values, rng};
use fieldbracket::verify::{
    check_affine_round_trip, check_bracket_evolution_converse, check_bracket_evolution_field,
    check_bracket_evolution_ode, check_connection_class, check_expr_derivatives,
    check_jacobi_currents, check_m1_reduction, check_representation, su2_gauss_config,
    VerificationReport, VerifyConfig,
};
use rand::Rng;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn cfg() -> VerifyConfig {
    VerifyConfig::default()
}

fn ratios(rep: &VerificationReport) -> Vec<f64> {
    rep.levels.iter().filter_map(|l| l.ratio).collect()
}

fn in_band(r: f64, expected: f64, rel: f64) -> bool {
    (r - expected).abs() <= rel * expected
}

fn fmt_list(v: &[f64]) -> String {
    let s: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", s.join(", "))
}

fn representation() -> Outcome {
    let t = Instant::now();
    let rep = check_representation(&cfg()).expect("representation check runs");
    let el = t.elapsed();
    let ok = rep.passed()
        && rep.max_residual <= 1e-9
        && rep.sample_count >= 2000
        && el < Duration::from_secs(10);
    (
        ok,
        format!(
            "max residual {:.3e} over {} samples in {:.2?}",
            rep.max_residual, rep.sample_count, el
        ),
    )
}

fn jacobi() -> Outcome {
    let t = Instant::now();
    let rep = check_jacobi_currents(&cfg()).expect("jacobi check runs");
    let el = t.elapsed();
    // antisymmetry recomputed here on independent draws
    let chart = Chart::new(2, 2).unwrap();
    let mut r = rng(99);
    let mut skew: f64 = 0.0;
    for _ in 0..20 {
        let a = random_current(&mut r, &chart);
        let b = random_current(&mut r, &chart);
        let ab = current_coefficients(&current_bracket(&a, &b, &chart).unwrap(), &chart);
        let ba = current_coefficients(&current_bracket(&b, &a, &chart).unwrap(), &chart);
        let names = chart.names();
        for (x, y) in ab.iter().zip(&ba) {
            let s = (x.clone() + y.clone()).compile(&names).unwrap();
            for _ in 0..100 {
                skew = skew.max(s.eval(&random_values(&mut r, &chart)).unwrap().abs());
            }
        }
    }
    let ok =
        rep.passed() && rep.max_residual <= 1e-9 && skew <= 1e-12 && el < Duration::from_secs(10);
    (
        ok,
        format!(
            "cyclic residual {:.3e}, antisymmetry {skew:.3e}, in {:.2?}",
            rep.max_residual, el
        ),
    )
}

/// Canonical Poisson bracket on `(u1, u2, p1_1, p1_2)` computed from
/// numerically evaluated symbolic gradients.
fn poisson(f: &Expr, g: &Expr, names: &[String], v: &[f64]) -> f64 {
    let b: Binding = names.iter().cloned().zip(v.iter().copied()).collect();
    let d = |e: &Expr, x: &str| e.derivative(x).eval(&b).unwrap();
    (1..=2)
        .map(|k| {
            let (u, p) = (format!("u{k}"), format!("p1_{k}"));
            d(f, &u) * d(g, &p) - d(f, &p) * d(g, &u)
        })
        .sum()
}

fn m1_reduction() -> Outcome {
    let rep = check_m1_reduction(&cfg()).expect("m1 check runs");
    let chart = Chart::new(1, 2).unwrap();
    let names = chart.names();
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    let mut self_zero = true;
    for _ in 0..20 {
        let f = random_polynomial(&mut r, &names, 2);
        let g = random_polynomial(&mut r, &names, 2);
        let of = Observable::Function(f.clone());
        let lin = bracket_linear(&of, &g, &chart)
            .unwrap()
            .compile(&names)
            .unwrap();
        let h = HamiltonianSection::new(&chart, g.clone()).unwrap();
        let aff = bracket_affine(&of, &h, &chart)
            .unwrap()
            .compile(&names)
            .unwrap();
        self_zero &= bracket_linear(&of, &f, &chart).unwrap().is_zero();
        for _ in 0..100 {
            let v = random_values(&mut r, &chart);
            let pb = poisson(&f, &g, &names, &v);
            let b: Binding = names.iter().cloned().zip(v.iter().copied()).collect();
            let dt = f.derivative("x1").eval(&b).unwrap();
            worst = worst.max((lin.eval(&v).unwrap() - pb).abs());
            worst = worst.max((aff.eval(&v).unwrap() - (dt + pb)).abs());
        }
    }
    let ok = rep.passed() && worst <= 1e-12 && self_zero;
    (
        ok,
        format!("max deviation from Poisson {worst:.3e} (suite {:.3e}), {{f,f}} = 0 exactly: {self_zero}", rep.max_residual),
    )
}

fn round_trip() -> Outcome {
    let rep = check_affine_round_trip(&cfg()).expect("round trip runs");
    let ok = rep.passed() && rep.max_residual <= 1e-15 && rep.sample_count == 1000;
    (
        ok,
        format!(
            "max deviation {:.3e} on {} tuples",
            rep.max_residual, rep.sample_count
        ),
    )
}

fn ode_evolution() -> Outcome {
    let rep = check_bracket_evolution_ode(&cfg()).expect("ode evolution runs");
    let dts: Vec<f64> = rep.levels.iter().map(|l| l.h).collect();
    let res: Vec<f64> = rep.levels.iter().map(|l| l.residual).collect();
    let rs = ratios(&rep);
    let ladder_ok =
        dts.len() == 3 && (dts[0] - 4e-3).abs() < 1e-18 && (dts[2] - 1e-3).abs() < 1e-18;
    let ok = ladder_ok && rs.iter().all(|&r| in_band(r, 16.0, 0.2)) && res[2] <= 1e-8;
    (
        ok,
        format!(
            "dt {} residuals {} ratios {}",
            fmt_list(&dts),
            fmt_list(&res),
            fmt_list(&rs)
        ),
    )
}

fn field_evolution() -> Outcome {
    let t = Instant::now();
    let rep = check_bracket_evolution_field(&cfg()).expect("field evolution runs");
    let rs = ratios(&rep);
    let res: Vec<f64> = rep.levels.iter().map(|l| l.residual).collect();
    // exact solution u = sin(x - t) evaluated here
    let sys = FieldSystem::wave(&ContinuumSpec::unit(1)).unwrap();
    let init = InitialData {
        u: vec![parse("sin(x2)").unwrap()],
        m: vec![parse("-cos(x2)").unwrap()],
        p_guess: None,
    };
    let traj = evolve_field(&sys, &SolverConfig::periodic_2pi(128, 1.0), &init).unwrap();
    let last = traj.snapshots.last().unwrap();
    let err = traj
        .x
        .iter()
        .zip(&last.u[0])
        .map(|(x, u)| (u - (x - last.t).sin()).abs())
        .fold(0.0, f64::max);
    let el = t.elapsed();
    let ok = rep.levels.len() == 3
        && rs.iter().all(|&r| in_band(r, 4.0, 0.25))
        && (last.t - 1.0).abs() < 1e-12
        && err <= 1e-3
        && el < Duration::from_secs(30);
    (
        ok,
        format!(
            "K=64,128,256 residuals {} ratios {}; L-inf error at K=128, T=1: {err:.3e}; {:.2?}",
            fmt_list(&res),
            fmt_list(&rs),
            el
        ),
    )
}

fn converse() -> Outcome {
    let rep = check_bracket_evolution_converse(&cfg()).expect("converse runs");
    let res: Vec<f64> = rep.levels.iter().map(|l| l.residual).collect();
    let floor = !res.is_empty() && res.iter().all(|&r| r >= 1e-4);
    let ok = rep.passed() && floor;
    let who = rep
        .details
        .iter()
        .find(|d| d.starts_with("detecting"))
        .cloned()
        .unwrap_or_default();
    (
        ok,
        format!("{who}; residuals {} under refinement", fmt_list(&res)),
    )
}

fn connection() -> Outcome {
    let rep = check_connection_class(&cfg()).expect("connection check runs");
    let ok = rep.passed() && rep.max_residual == 0.0;
    (
        ok,
        format!("{} outcomes, {} wrong", rep.sample_count, rep.max_residual),
    )
}

fn yang_mills() -> Outcome {
    let abelian = LieAlgebraSpec::abelian(1);
    let k = 64;
    let dx = 2.0 * PI / k as f64;
    let e0 = 0.7;
    let u1: Vec<f64> = (0..k).map(|i| 0.3 * (i as f64 * dx).sin()).collect();
    let grid = evolve_ym_temporal(
        &abelian,
        [1.0, 1.0],
        vec![u1],
        vec![vec![e0; k]],
        dx,
        1e-3,
        1000,
        1,
    )
    .unwrap();
    let drift = grid
        .snapshots
        .iter()
        .flat_map(|s| s.e[0].iter())
        .map(|v| (v - e0).abs())
        .fold(0.0, f64::max);
    let su2 = LieAlgebraSpec::su2();
    let mut gauss = Vec::new();
    for k in [32usize, 64, 128] {
        let (u1, e, dx) = su2_gauss_config(k);
        let steps = (4.0 / dx).ceil() as usize;
        let g = evolve_ym_temporal(&su2, [1.0, 1.0], u1, e, dx, dx / 4.0, steps, steps).unwrap();
        gauss.push(
            gauss_residual(g.snapshots.last().unwrap(), dx, &su2)
                .unwrap()
                .max,
        );
    }
    let rs: Vec<f64> = gauss.windows(2).map(|w| w[0] / w[1]).collect();
    let ok =
        grid.snapshots.len() == 1001 && drift <= 1e-12 && rs.iter().all(|&r| in_band(r, 4.0, 0.25));
    (
        ok,
        format!(
            "E drift over 1000 steps {drift:.3e}; Gauss residuals {} ratios {}",
            fmt_list(&gauss),
            fmt_list(&rs)
        ),
    )
}

fn derivatives() -> Outcome {
    let rep = check_expr_derivatives(&cfg()).expect("derivative check runs");
    let ok = rep.passed() && rep.sample_count == 500 && rep.max_residual <= 1e-5;
    (
        ok,
        format!(
            "max relative error {:.3e} on {} triples",
            rep.max_residual, rep.sample_count
        ),
    )
}

fn perfect_gas() -> Outcome {
    let consts = GasConstants::default();
    let mut spec = ContinuumSpec::unit(1);
    spec.gas = Some(consts);
    let gas = PerfectGas::new(&spec).unwrap();
    // closed form: with rho = g = 1 and s = s0 = 0, P = (gamma - 1) eps0 F^{-gamma}
    let c = (consts.gamma - 1.0) * consts.eps0 * consts.rho0.powf(-consts.gamma);
    let (mut recover, mut stress): (f64, f64) = (0.0, 0.0);
    for i in 0..100 {
        let f = 0.5 + 1.5 * i as f64 / 99.0;
        let p = gas.stress(f).unwrap();
        stress = stress.max((p - c * f.powf(-consts.gamma)).abs());
        recover = recover.max((gas.deformation(p).unwrap() - f).abs());
    }
    // pressure from the thermodynamic relation p√g = ρ̄ ∂ε̄/∂ρ̄ + s̄ ∂ε̄/∂s̄ − ε̄
    let e = gas.energy_expr();
    let (de_drho, de_ds) = (e.derivative("rho"), e.derivative("s"));
    let mut r = rng(5);
    let mut identity: f64 = 0.0;
    for _ in 0..100 {
        let rho: f64 = r.gen_range(0.5..2.0);
        let s: f64 = r.gen_range(-1.0..1.0);
        let b: Binding = [("rho".to_string(), rho), ("s".to_string(), s)].into();
        let eps = gas.energy_density(rho, s);
        let p = rho * de_drho.eval(&b).unwrap() + s * de_ds.eval(&b).unwrap() - eps;
        identity = identity.max((eps + p - (1.0 + (consts.gamma - 1.0)) * eps).abs());
        identity = identity.max((gas.pressure_density(rho, s) - p).abs());
    }
    let ok = recover <= 1e-10 && identity <= 1e-12 && stress <= 1e-12;
    (
        ok,
        format!("F recovery {recover:.3e}, stress vs closed form {stress:.3e}, energy identity {identity:.3e}"),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("representation identity", representation),
        ("Jacobi identity of the current bracket", jacobi),
        ("m = 1 reduction to the Poisson bracket", m1_reduction),
        ("affine isomorphism round trip", round_trip),
        ("bracket evolution, ODE case", ode_evolution),
        ("bracket evolution, field case", field_evolution),
        ("bracket evolution, converse", converse),
        ("Hamiltonian connection class", connection),
        ("Yang-Mills temporal gauge", yang_mills),
        ("expression derivatives", derivatives),
        ("perfect gas round trip", perfect_gas),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = f();
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
