use rand::Rng;

use super::sampling::{random_binding, random_current, random_hamiltonian, random_values, rng};
use super::{VerificationReport, VerifyConfig};
use crate::bracket::{
    a_hat, bracket_affine, bracket_linear, connection_is_hamiltonian, current_bracket,
    representation_residual, sharp_aff, ConnectionCoefficients, GammaComponents, PhaseComponents,
};
use crate::bundle::{current_coefficients, Chart, Current, HamiltonianSection, Observable};
use crate::error::Result;
use crate::expr::gen::{random_expression, random_polynomial};
use crate::expr::{simplify, Binding, Expr};
use crate::models::{model_elasticity_simple, model_wave, ContinuumSpec};

const TRIALS: usize = 20;
const SAMPLES: usize = 100;

fn eval_at(e: &Expr, names: &[String], points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let c = e.compile(names)?;
    Ok(points
        .iter()
        .map(|p| c.eval(p))
        .collect::<Result<Vec<_>, _>>()?)
}

/// Maximum over `points` of `|a_i − b_i|` for two coefficient lists.
fn max_diff(a: &[Expr], b: &[Expr], chart: &Chart, points: &[Vec<f64>]) -> Result<f64> {
    let names = chart.names();
    let mut m: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = simplify(&(x.clone() - y.clone()));
        if d.is_zero() {
            continue;
        }
        for v in eval_at(&d, &names, points)? {
            m = m.max(v.abs());
        }
    }
    Ok(m)
}

fn max_abs(list: &[Expr], chart: &Chart, points: &[Vec<f64>]) -> Result<f64> {
    let zeros = vec![Expr::zero(); list.len()];
    max_diff(list, &zeros, chart, points)
}

/// Affine representation identity for random polynomial currents and
/// Hamiltonians with `m = 2`, `n = 2`.
pub fn check_representation(cfg: &VerifyConfig) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new(
        "representation",
        "currents act on Hamiltonian sections by an affine representation: \
         {{a,b},h} = {a,{b,h}} - {b,{a,h}}",
        cfg.seed,
        1e-9,
    );
    let chart = Chart::new(2, 2)?;
    let mut r = rng(cfg.seed);
    let mut worst: f64 = 0.0;
    let mut self_pair: f64 = 0.0;
    for _ in 0..TRIALS {
        let a: Observable = random_current(&mut r, &chart).into();
        let b: Observable = random_current(&mut r, &chart).into();
        let h = random_hamiltonian(&mut r, &chart);
        let samples: Vec<Binding> = (0..SAMPLES)
            .map(|_| random_binding(&mut r, &chart))
            .collect();
        worst = worst.max(representation_residual(&a, &b, &h, &chart, &samples)?);
        self_pair = self_pair.max(representation_residual(&a, &a, &h, &chart, &samples[..10])?);
        rep.sample_count += SAMPLES;
    }
    // a constant Hamiltonian shifts every {a,h} by the same divergence term
    let h0 = HamiltonianSection::new(&chart, Expr::constant(0.75))?;
    let a: Observable = random_current(&mut r, &chart).into();
    let b: Observable = random_current(&mut r, &chart).into();
    let samples: Vec<Binding> = (0..SAMPLES)
        .map(|_| random_binding(&mut r, &chart))
        .collect();
    let constant = representation_residual(&a, &b, &h0, &chart, &samples)?;
    rep.max_residual = worst.max(self_pair).max(constant);
    rep.details.push(format!(
        "random trials: {TRIALS} x {SAMPLES}, max {worst:.3e}"
    ));
    rep.details.push(format!("b = a: max {self_pair:.3e}"));
    rep.details
        .push(format!("constant Hamiltonian: max {constant:.3e}"));
    rep.decide(true);
    Ok(rep)
}

/// The bracket of two currents computed from their raw coefficients
/// `α^{0i}`, `β^{0i}`: `Z^γ ∂α^{0i}/∂u^γ − Y^γ ∂β^{0i}/∂u^γ`, with `Y`, `Z`
/// read off as `∂α^{0i}/∂p^i_γ`. Independent of the `(Y, β)` route of
/// [`current_bracket`].
pub fn bracket_by_coefficients(a: &Current, b: &Current, chart: &Chart) -> Vec<Expr> {
    let ca = current_coefficients(a, chart);
    let cb = current_coefficients(b, chart);
    let n = chart.n();
    (0..chart.m())
        .map(|i| {
            let y: Vec<Expr> = (0..n).map(|g| ca[i].diff(&chart.p(i, g))).collect();
            let z: Vec<Expr> = (0..n).map(|g| cb[i].diff(&chart.p(i, g))).collect();
            let terms = (0..n).map(|g| {
                let ug = chart.u(g);
                z[g].clone() * ca[i].diff(&ug) - y[g].clone() * cb[i].diff(&ug)
            });
            simplify(&Expr::sum(terms))
        })
        .collect()
}

/// Jacobi identity and antisymmetry of the current bracket, plus agreement
/// with [`bracket_by_coefficients`].
pub fn check_jacobi_currents(cfg: &VerifyConfig) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new(
        "jacobi",
        "the bracket of currents is a Lie bracket and equals -([Y,Z], i_Y d beta - i_Z d alpha)",
        cfg.seed,
        1e-9,
    );
    let chart = Chart::new(2, 2)?;
    let mut r = rng(cfg.seed.wrapping_add(1));
    let (mut cyclic, mut antisym, mut oracle, mut repeated): (f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0);
    for _ in 0..TRIALS {
        let a = random_current(&mut r, &chart);
        let b = random_current(&mut r, &chart);
        let c = random_current(&mut r, &chart);
        let points: Vec<Vec<f64>> = (0..SAMPLES)
            .map(|_| random_values(&mut r, &chart))
            .collect();
        let br = |x: &Current, y: &Current| current_bracket(x, y, &chart);
        let sum = br(&br(&a, &b)?, &c)?
            .plus(&br(&br(&b, &c)?, &a)?)
            .plus(&br(&br(&c, &a)?, &b)?);
        cyclic = cyclic.max(max_abs(
            &current_coefficients(&sum, &chart),
            &chart,
            &points,
        )?);
        let ab = br(&a, &b)?;
        let skew = ab.plus(&br(&b, &a)?);
        antisym = antisym.max(max_abs(
            &current_coefficients(&skew, &chart),
            &chart,
            &points,
        )?);
        oracle = oracle.max(max_diff(
            &current_coefficients(&ab, &chart),
            &bracket_by_coefficients(&a, &b, &chart),
            &chart,
            &points,
        )?);
        repeated = repeated.max(max_abs(
            &current_coefficients(&br(&a, &a)?, &chart),
            &chart,
            &points,
        )?);
        rep.sample_count += SAMPLES;
    }
    rep.max_residual = cyclic.max(oracle);
    rep.details.push(format!("cyclic sum: max {cyclic:.3e}"));
    rep.details
        .push(format!("antisymmetry: max {antisym:.3e} (tol 1e-12)"));
    rep.details
        .push(format!("coefficient oracle: max {oracle:.3e}"));
    rep.details
        .push(format!("repeated argument: max {repeated:.3e}"));
    rep.decide(antisym <= 1e-12 && repeated <= 1e-12);
    Ok(rep)
}

/// Canonical Poisson bracket `∇f · J ∇g` on the `(u, p)` coordinates of an
/// `m = 1` chart, evaluated at `values` (chart order).
pub fn poisson_oracle(f: &Expr, g: &Expr, chart: &Chart, values: &[f64]) -> Result<f64> {
    let n = chart.n();
    let b = chart.binding(values);
    let z: Vec<String> = chart
        .fiber_names()
        .into_iter()
        .chain(chart.momentum_names())
        .collect();
    let grad = |e: &Expr| -> Result<Vec<f64>> {
        z.iter()
            .map(|v| e.derivative(v).eval(&b).map_err(Into::into))
            .collect()
    };
    let (df, dg) = (grad(f)?, grad(g)?);
    // J = [[0, I], [-I, 0]]
    let mut s = 0.0;
    for k in 0..n {
        s += df[k] * dg[n + k] - df[n + k] * dg[k];
    }
    Ok(s)
}

/// `m = 1`: both brackets against the canonical time-dependent Poisson
/// bracket, exact vanishing of `{f, f}`, and the Jacobi identity.
pub fn check_m1_reduction(cfg: &VerifyConfig) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new(
        "m1_reduction",
        "for m = 1 the brackets reduce to the canonical Poisson bracket {f,g} and df/dt + {f,H}",
        cfg.seed,
        1e-12,
    );
    let chart = Chart::new(1, 2)?;
    let names = chart.names();
    let mut r = rng(cfg.seed.wrapping_add(2));
    let (mut linear, mut affine, mut jacobi): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut self_zero = true;
    for _ in 0..TRIALS {
        let f = random_polynomial(&mut r, &names, 2);
        let g = random_polynomial(&mut r, &names, 2);
        let k = random_polynomial(&mut r, &names, 2);
        let h = HamiltonianSection::new(&chart, g.clone())?;
        let of = Observable::Function(f.clone());
        let lin = bracket_linear(&of, &g, &chart)?.compile(&names)?;
        let aff = bracket_affine(&of, &h, &chart)?.compile(&names)?;
        self_zero &= bracket_linear(&of, &f, &chart)?.is_zero();
        let pb = |x: &Expr, y: &Expr| bracket_linear(&Observable::Function(x.clone()), y, &chart);
        let cyc =
            simplify(&(pb(&pb(&f, &g)?, &k)? + pb(&pb(&g, &k)?, &f)? + pb(&pb(&k, &f)?, &g)?));
        let cyc = cyc.compile(&names)?;
        let dfdt = f.derivative(&chart.x(0));
        for _ in 0..SAMPLES {
            let v = random_values(&mut r, &chart);
            let oracle = poisson_oracle(&f, &g, &chart, &v)?;
            linear = linear.max((lin.eval(&v)? - oracle).abs());
            let t_part = dfdt.eval(&chart.binding(&v))?;
            affine = affine.max((aff.eval(&v)? - (t_part + oracle)).abs());
            jacobi = jacobi.max(cyc.eval(&v)?.abs());
        }
        rep.sample_count += SAMPLES;
    }
    rep.max_residual = linear.max(affine).max(jacobi);
    rep.details
        .push(format!("bilinear vs Poisson: max {linear:.3e}"));
    rep.details
        .push(format!("affine vs df/dt + Poisson: max {affine:.3e}"));
    rep.details.push(format!("Jacobi: max {jacobi:.3e}"));
    rep.details
        .push(format!("{{f,f}} simplifies to 0: {self_zero}"));
    rep.decide(self_zero);
    Ok(rep)
}

/// `Â ∘ ♯^aff` and `♯^aff ∘ Â` are the identity on random numeric tuples.
pub fn check_affine_round_trip(cfg: &VerifyConfig) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new(
        "affine_round_trip",
        "the affine isomorphism between dh and Gamma_h and its inverse compose to the identity",
        cfg.seed,
        1e-15,
    );
    let mut r = rng(cfg.seed.wrapping_add(3));
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (m, n) = (r.gen_range(1..=3), r.gen_range(1..=3));
        let mut draw =
            |k: usize| -> Vec<f64> { (0..k).map(|_| r.gen_range(-10.0..=10.0)).collect() };
        let pc = PhaseComponents {
            au: draw(n),
            ap: (0..m).map(|_| draw(n)).collect(),
        };
        let gc = GammaComponents {
            hu: (0..m).map(|_| draw(n)).collect(),
            hp: draw(n),
        };
        let back = a_hat(&sharp_aff(&pc));
        let fwd = sharp_aff(&a_hat(&gc));
        let d = |x: &[f64], y: &[f64]| {
            x.iter()
                .zip(y)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        worst = worst.max(d(&back.au, &pc.au)).max(d(&fwd.hp, &gc.hp));
        for i in 0..m {
            worst = worst
                .max(d(&back.ap[i], &pc.ap[i]))
                .max(d(&fwd.hu[i], &gc.hu[i]));
        }
        rep.sample_count += 1;
    }
    rep.max_residual = worst;
    rep.decide(true);
    Ok(rep)
}

fn perturbed(hc: &ConnectionCoefficients, k: &[Vec<Vec<Expr>>]) -> ConnectionCoefficients {
    let hp = hc
        .hp
        .iter()
        .zip(k)
        .map(|(row, kr)| {
            row.iter()
                .zip(kr)
                .map(|(c, kc)| {
                    c.iter()
                        .zip(kc)
                        .map(|(a, b)| simplify(&(a.clone() + b.clone())))
                        .collect()
                })
                .collect()
        })
        .collect();
    ConnectionCoefficients {
        hu: hc.hu.clone(),
        hp,
    }
}

/// Trace-free perturbation `K^j_{αi}` (`Σ_i K^i_{αi} = 0`) with random
/// polynomial entries in `(x, u)`.
fn ker_a_element<R: Rng>(r: &mut R, chart: &Chart) -> Vec<Vec<Vec<Expr>>> {
    let (m, n) = (chart.m(), chart.n());
    let vars = chart.configuration_names();
    let mut k = vec![vec![vec![Expr::zero(); m]; n]; m];
    for a in 0..n {
        let mut trace = Expr::zero();
        for j in 0..m {
            for i in 0..m {
                if i != j || j + 1 < m {
                    let e = random_polynomial(r, &vars, 2);
                    if i == j {
                        trace = trace + e.clone();
                    }
                    k[j][a][i] = e;
                }
            }
        }
        k[m - 1][a][m - 1] = simplify(&-trace);
    }
    k
}

/// Connections differing from the canonical representative of `Γ_h` by a
/// trace-free element stay Hamiltonian; trace perturbations and changes of
/// `H^α_i` do not.
pub fn check_connection_class(cfg: &VerifyConfig) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new(
        "connection_class",
        "a connection is Hamiltonian for h iff it differs from Gamma_h by an element of Ker A",
        cfg.seed,
        0.0,
    );
    let mut r = rng(cfg.seed.wrapping_add(4));
    let mut models: Vec<(String, Chart, HamiltonianSection)> = Vec::new();
    let c22 = Chart::new(2, 2)?;
    models.push((
        "random m=2 n=2".into(),
        c22,
        random_hamiltonian(&mut r, &c22),
    ));
    let (cw, hw) = model_wave(&ContinuumSpec::unit(1))?;
    models.push(("wave".into(), cw, hw));
    let (ce, he) = model_elasticity_simple(&ContinuumSpec::unit(2))?;
    models.push(("elasticity N=2".into(), ce, he));
    let mut wrong = 0usize;
    for (label, chart, h) in &models {
        let samples: Vec<Binding> = (0..20).map(|_| random_binding(&mut r, chart)).collect();
        let canonical = ConnectionCoefficients::canonical(h, chart);
        let vars = chart.configuration_names();
        let mut outcome = |what: &str, hc: &ConnectionCoefficients, expect: bool| -> Result<()> {
            let got = connection_is_hamiltonian(hc, h, chart, &samples)?.hamiltonian;
            if got != expect {
                wrong += 1;
            }
            rep.details.push(format!(
                "{label}: {what}: accepted {got}, expected {expect}"
            ));
            rep.sample_count += 1;
            Ok(())
        };
        outcome("canonical representative", &canonical, true)?;
        let k = ker_a_element(&mut r, chart);
        outcome("trace-free perturbation", &perturbed(&canonical, &k), true)?;
        let mut trace = vec![vec![vec![Expr::zero(); chart.m()]; chart.n()]; chart.m()];
        trace[0][0][0] = simplify(&(random_polynomial(&mut r, &vars, 2) + Expr::constant(2.0)));
        outcome("trace perturbation", &perturbed(&canonical, &trace), false)?;
        let mut shifted = canonical.clone();
        shifted.hu[0][0] = simplify(&(shifted.hu[0][0].clone() + Expr::constant(0.5)));
        outcome("u-coefficient perturbation", &shifted, false)?;
    }
    rep.max_residual = wrong as f64;
    rep.decide(true);
    Ok(rep)
}

/// Symbolic derivatives against central finite differences (`h = 1e-6`)
/// on random expressions, away from singular points.
pub fn check_expr_derivatives(cfg: &VerifyConfig) -> Result<VerificationReport> {
    const H: f64 = 1e-6;
    let mut rep = VerificationReport::new(
        "expr_derivatives",
        "symbolic derivatives agree with central finite differences",
        cfg.seed,
        1e-5,
    );
    let vars: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
    let mut r = rng(cfg.seed.wrapping_add(5));
    let mut worst: f64 = 0.0;
    let mut skipped = 0usize;
    while rep.sample_count < 500 {
        let e = random_expression(&mut r, &vars, 4);
        let var = vars[r.gen_range(0..3)].clone();
        let point: Vec<f64> = (0..3).map(|_| r.gen_range(-2.0..=2.0)).collect();
        match derivative_sample(&e, &vars, &var, &point, H)? {
            Some(err) => {
                worst = worst.max(err);
                rep.sample_count += 1;
            }
            None => skipped += 1,
        }
    }
    rep.max_residual = worst;
    rep.details.push(format!(
        "{skipped} draws rejected as singular or ill-conditioned"
    ));
    rep.decide(true);
    Ok(rep)
}

/// Relative error `|d_sym − d_fd| / max(1, |d_sym|)` at one point, or `None`
/// when the point is near a singularity (undefined values, huge magnitudes,
/// or finite differences at `h` and `100 h` disagreeing).
fn derivative_sample(
    e: &Expr,
    vars: &[String],
    var: &str,
    point: &[f64],
    h: f64,
) -> Result<Option<f64>> {
    let c = e.compile(vars)?;
    let d = e.diff(var).compile(vars)?;
    let idx = vars
        .iter()
        .position(|v| v == var)
        .expect("var drawn from vars");
    let at = |shift: f64| -> Option<f64> {
        let mut p = point.to_vec();
        p[idx] += shift;
        c.eval(&p).ok().filter(|v| v.is_finite() && v.abs() < 1e6)
    };
    let fd = |step: f64| -> Option<f64> { Some((at(step)? - at(-step)?) / (2.0 * step)) };
    let (Some(f0), Some(fd1), Some(fd2)) = (at(0.0), fd(h), fd(100.0 * h)) else {
        return Ok(None);
    };
    let Some(sym) = d.eval(point).ok().filter(|v| v.is_finite()) else {
        return Ok(None);
    };
    let scale = 1.0f64.max(sym.abs()).max(f0.abs());
    if (fd1 - fd2).abs() > 1e-3 * scale {
        return Ok(None);
    }
    Ok(Some((sym - fd1).abs() / 1.0f64.max(sym.abs())))
}
