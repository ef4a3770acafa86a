//! Command-line front end: `bracket`, `simulate`, `verify` and `parse-check`.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage, parse, model or
//! configuration error, 3 numeric failure.

mod model_file;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

pub use model_file::{
    field_config, resolve, CurrentSpec, Dynamics, InitialSection, ModelFile, ModelSection,
    OutputSection, Params, ResolvedModel, SolverSection,
};

use crate::bracket::{bracket_affine, observable_bracket};
use crate::bundle::{Chart, Observable};
use crate::error::{Error, Result};
use crate::expr::{parse, simplify, Binding, Expr};
use crate::models::yang_mills::YmGrid;
use crate::models::ym_residual;
use crate::solver::output::{field_csv, field_plot, manifest_json, ode_csv, write_file};
use crate::solver::{
    evolve_field, evolve_ym_temporal, hdw_residual, hdw_residual_ode, integrate_ode, InitialData,
    OdeState, OdeSystem,
};
use crate::verify::{run_suites, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "fieldbracket",
    version,
    about = "Brackets and solvers for first-order Hamiltonian field theories"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print {current, h} symbolically and at evaluation points.
    Bracket {
        /// Model file (TOML).
        #[arg(long)]
        model: PathBuf,
        /// Current name (default: every current of the model).
        #[arg(long)]
        current: Option<String>,
        /// Also print the Lie bracket of `--current` with this current.
        #[arg(long)]
        with: Option<String>,
        /// Extra evaluation point, e.g. `u1=1,p1_1=2`.
        #[arg(long)]
        at: Vec<String>,
    },
    /// Integrate the model and write CSV, manifest and plot data.
    Simulate {
        /// Model file (TOML).
        #[arg(long)]
        model: PathBuf,
        /// Directory for CSV, manifest and plot files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run verification suites (all when no `--suite` is given).
    Verify {
        /// Suite name; repeat to run several.
        #[arg(long)]
        suite: Vec<String>,
        /// Seed for all random sampling.
        #[arg(long, default_value_t = VerifyConfig::default().seed)]
        seed: u64,
        /// Number of refinement levels in convergence studies.
        #[arg(long, default_value_t = VerifyConfig::default().levels)]
        levels: usize,
        /// Directory for one JSON report per check.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse expressions and/or validate a model file.
    ParseCheck {
        /// Model file to validate.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Expressions to parse.
        exprs: Vec<String>,
    },
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numeric(_) | Error::Eval(_) => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Bracket {
            model,
            current,
            with,
            at,
        } => cmd_bracket(&model, current.as_deref(), with.as_deref(), &at, out),
        Command::Simulate { model, out: dir } => cmd_simulate(&model, &dir, out, err),
        Command::Verify {
            suite,
            seed,
            levels,
            out: dir,
        } => cmd_verify(&suite, VerifyConfig { seed, levels }, dir.as_deref(), out),
        Command::ParseCheck { model, exprs } => cmd_parse_check(model.as_deref(), &exprs, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn load(path: &Path) -> Result<(ModelFile, ResolvedModel)> {
    let file = ModelFile::load(path)?;
    let model = resolve(&file)?;
    Ok((file, model))
}

/// Parse `name=value,name=value`.
pub fn parse_point(text: &str, chart: &Chart) -> Result<Binding> {
    let mut b = Binding::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "point entry `{part}` is not of the form name=value"
            ))
        })?;
        let k = k.trim();
        if chart.classify(k).is_none() {
            return Err(Error::Config(format!(
                "`{k}` is not a coordinate of the chart"
            )));
        }
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("`{v}` is not a number")))?;
        b.insert(k.to_string(), v);
    }
    Ok(b)
}

fn point_label(b: &Binding, chart: &Chart) -> String {
    let parts: Vec<String> = chart
        .names()
        .into_iter()
        .filter_map(|n| b.get(&n).map(|v| format!("{n}={v}")))
        .collect();
    if parts.is_empty() {
        "(empty)".into()
    } else {
        parts.join(",")
    }
}

fn describe(obs: &Observable) -> String {
    match obs {
        Observable::Function(f) => format!("f = {f}"),
        Observable::Current(c) => {
            let y: Vec<String> = c.y.iter().map(|e| e.to_string()).collect();
            let b: Vec<String> = c.beta.iter().map(|e| e.to_string()).collect();
            format!("Y = [{}], beta = [{}]", y.join(", "), b.join(", "))
        }
    }
}

fn eval_point(e: &Expr, b: &Binding, chart: &Chart) -> Result<f64> {
    let missing: Vec<String> = e
        .variables()
        .into_iter()
        .filter(|v| !b.contains_key(v))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Config(format!(
            "point {} does not bind {}",
            point_label(b, chart),
            missing.join(", ")
        )));
    }
    Ok(e.eval(b)?)
}

fn cmd_bracket(
    path: &Path,
    current: Option<&str>,
    with: Option<&str>,
    at: &[String],
    out: &mut dyn Write,
) -> Result<i32> {
    let (file, model) = load(path)?;
    let chart = &model.chart;
    let mut points: Vec<Binding> = file
        .points
        .iter()
        .map(|p| {
            for k in p.keys() {
                if chart.classify(k).is_none() {
                    return Err(Error::Config(format!(
                        "point key `{k}` is not a coordinate of the chart"
                    )));
                }
            }
            Ok(p.iter().map(|(k, v)| (k.clone(), *v)).collect())
        })
        .collect::<Result<_>>()?;
    for a in at {
        points.push(parse_point(a, chart)?);
    }
    let selected: Vec<(String, Observable)> = match current {
        Some(name) => vec![(name.to_string(), model.current(name)?.clone())],
        None => model.currents.clone(),
    };
    writeln!(
        out,
        "model: {} (m = {}, n = {})",
        model.name,
        chart.m(),
        chart.n()
    )?;
    writeln!(out, "H = {}", model.h.expr())?;
    for (name, obs) in &selected {
        let b = bracket_affine(obs, &model.h, chart)?;
        writeln!(out, "current {name}: {}", describe(obs))?;
        writeln!(out, "{{{name}, h}} = {b}")?;
        if !points.is_empty() {
            writeln!(out, "point\tvalue")?;
            for p in &points {
                writeln!(
                    out,
                    "{}\t{:.16e}",
                    point_label(p, chart),
                    eval_point(&b, p, chart)?
                )?;
            }
        }
    }
    if let Some(other) = with {
        let (name, a) = selected
            .first()
            .filter(|_| current.is_some())
            .ok_or_else(|| Error::Config("--with needs --current".into()))?;
        let b = model.current(other)?;
        let ab = observable_bracket(a, b, chart)?;
        writeln!(out, "{{{name}, {other}}} : {}", describe(&ab))?;
    }
    Ok(EXIT_OK)
}

fn output_path(dir: &Path, given: Option<&String>, default: &str) -> (PathBuf, String) {
    let name = given.map(String::as_str).unwrap_or(default);
    (dir.join(name), name.to_string())
}

fn eval_initial(list: &[String], n: usize, what: &str, binding: &Binding) -> Result<Vec<f64>> {
    if list.len() != n {
        return Err(Error::Shape(format!(
            "[initial] {what} needs {n} entries, got {}",
            list.len()
        )));
    }
    list.iter().map(|s| Ok(parse(s)?.eval(binding)?)).collect()
}

fn cmd_simulate(path: &Path, dir: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let (file, model) = load(path)?;
    let solver = file
        .solver
        .as_ref()
        .ok_or_else(|| Error::Config("simulate needs a [solver] table".into()))?;
    let init = file
        .initial
        .clone()
        .ok_or_else(|| Error::Config("simulate needs an [initial] table".into()))?;
    let output = file.output.clone().unwrap_or_default();
    let (csv_path, csv_name) = output_path(dir, output.csv.as_ref(), "trajectory.csv");
    let (manifest_path, _) = output_path(dir, output.manifest.as_ref(), "manifest.json");
    let chart = &model.chart;
    let n = chart.n();
    let manifest = match &model.dynamics {
        Dynamics::Ode => {
            let dt = solver
                .dt
                .ok_or_else(|| Error::Config("[solver] needs `dt` for m = 1 models".into()))?;
            let t0 = solver.t0.unwrap_or(0.0);
            let base: Binding = [(chart.x(0), t0)].into();
            let start = OdeState {
                t: t0,
                u: eval_initial(&init.u, n, "u", &base)?,
                p: eval_initial(&init.p, n, "p", &base)?,
            };
            let sys = OdeSystem::new(&model.h, chart)?;
            let states = integrate_ode(&sys, &start, dt, solver.t_final)?;
            let e0 = sys.energy(&states[0])?;
            let mut drift: f64 = 0.0;
            for s in &states {
                drift = drift.max((sys.energy(s)? - e0).abs());
            }
            let res = hdw_residual_ode(&states, &sys).ok();
            write_file(&csv_path, &ode_csv(&states))?;
            let dt_used = states[1].t - states[0].t;
            writeln!(
                out,
                "integrated {} steps of dt = {dt_used:e} to t = {}",
                states.len() - 1,
                solver.t_final
            )?;
            writeln!(out, "max |H(t) - H(t0)| = {drift:.3e}")?;
            json!({
                "model": model.name,
                "kind": "ode",
                "chart": {"m": chart.m(), "n": n},
                "hamiltonian": model.h.expr().to_string(),
                "config": {"dt": dt, "dt_used": dt_used, "steps": states.len() - 1, "t0": t0, "t_final": solver.t_final},
                "norms": {"energy_drift": drift, "hdw_residual": res},
                "files": {"csv": csv_name},
            })
        }
        Dynamics::Field(sys) => {
            let cfg = field_config(solver)?;
            let data = InitialData {
                u: model_file::parse_all(&init.u)?,
                m: model_file::parse_all(&init.p)?,
                p_guess: None,
            };
            let traj = evolve_field(sys, &cfg, &data)?;
            for w in &traj.warnings {
                writeln!(err, "warning: {w}")?;
            }
            let res = hdw_residual(&traj, sys).ok();
            write_file(&csv_path, &field_csv(&traj))?;
            let mut files = json!({"csv": csv_name});
            if let Some(plot) = &output.plot {
                let p = dir.join(plot);
                write_file(&p, &field_plot(&traj, output.every.unwrap_or(1)))?;
                files["plot"] = json!(plot);
            }
            writeln!(
                out,
                "integrated {} steps of dt = {:e} on {} points to t = {}",
                traj.steps, traj.dt, cfg.k, cfg.t_final
            )?;
            if let Some(r) = &res {
                writeln!(
                    out,
                    "residuals (max): velocity {:.3e}, gradient {:.3e}, balance {:.3e}",
                    r.velocity.max, r.gradient.max, r.balance.max
                )?;
            }
            json!({
                "model": model.name,
                "kind": "field",
                "chart": {"m": chart.m(), "n": n},
                "hamiltonian": model.h.expr().to_string(),
                "config": cfg,
                "dt_used": traj.dt,
                "steps": traj.steps,
                "newton_iterations": traj.newton_iterations,
                "warnings": traj.warnings,
                "norms": {"hdw_residual": res},
                "files": files,
            })
        }
        Dynamics::YangMills { algebra, metric } => {
            let cfg = field_config(solver)?;
            if cfg.boundary != crate::solver::Boundary::Periodic {
                return Err(Error::Unsupported(
                    "the Yang-Mills solver uses periodic boundaries".into(),
                ));
            }
            let xs: Vec<f64> = (0..cfg.k).map(|i| cfg.x0 + i as f64 * cfg.dx).collect();
            let on_grid = |list: &[String], what: &str| -> Result<Vec<Vec<f64>>> {
                if list.len() != algebra.dim() {
                    return Err(Error::Shape(format!(
                        "[initial] {what} needs {} entries, got {}",
                        algebra.dim(),
                        list.len()
                    )));
                }
                list.iter()
                    .map(|s| {
                        let e = parse(s)?;
                        xs.iter()
                            .map(|&x| {
                                Ok(e.eval(
                                    &[("x1".to_string(), cfg.t0), ("x2".to_string(), x)].into(),
                                )?)
                            })
                            .collect()
                    })
                    .collect()
            };
            let u1 = on_grid(&init.u, "u")?;
            let e = on_grid(&init.e, "e")?;
            let (steps, dt) = cfg.steps();
            let grid =
                evolve_ym_temporal(algebra, *metric, u1, e, cfg.dx, dt, steps, cfg.record_every)?;
            let e0 = &grid.snapshots[0].e;
            let drift = grid
                .snapshots
                .iter()
                .flat_map(|s| {
                    s.e.iter()
                        .zip(e0)
                        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
                })
                .fold(0.0, f64::max);
            let res = if grid.snapshots.len() >= 3 {
                Some(ym_residual(&grid, algebra, *metric)?)
            } else {
                None
            };
            write_file(&csv_path, &ym_csv(&grid, &xs, cfg.t0, chart.m()))?;
            writeln!(
                out,
                "integrated {steps} steps of dt = {dt:e} on {} points",
                cfg.k
            )?;
            writeln!(out, "max |E(t) - E(0)| = {drift:.3e}")?;
            if let Some(r) = &res {
                writeln!(out, "Gauss residual (max) = {:.3e}", r.gauss.max)?;
            }
            json!({
                "model": model.name,
                "kind": "yang_mills_temporal_gauge",
                "chart": {"m": chart.m(), "n": n},
                "config": cfg,
                "dt_used": dt,
                "steps": steps,
                "norms": {"e_drift": drift, "residual": res},
                "files": {"csv": csv_name},
            })
        }
        Dynamics::None(why) => {
            return Err(Error::Unsupported(format!(
                "cannot simulate {}: {why}",
                model.name
            )))
        }
    };
    write_file(&manifest_path, &manifest_json(&manifest)?)?;
    writeln!(
        out,
        "wrote {} and {}",
        csv_path.display(),
        manifest_path.display()
    )?;
    Ok(EXIT_OK)
}

/// Yang–Mills CSV: `t,x`, the spatial potentials `u^α_1` (chart names) and `E1..`.
fn ym_csv(grid: &YmGrid, xs: &[f64], t0: f64, m: usize) -> String {
    use std::fmt::Write as _;
    let n = grid.snapshots.first().map_or(0, |s| s.e.len());
    let mut s = String::from("t,x");
    for a in 0..n {
        let _ = write!(s, ",u{}", a * m + 2);
    }
    for a in 1..=n {
        let _ = write!(s, ",E{a}");
    }
    s.push('\n');
    for snap in &grid.snapshots {
        for (k, x) in xs.iter().enumerate() {
            let _ = write!(s, "{:.16e},{:.16e}", t0 + snap.t, x);
            for row in snap.u1.iter().chain(&snap.e) {
                let _ = write!(s, ",{:.16e}", row[k]);
            }
            s.push('\n');
        }
    }
    s
}

fn cmd_verify(
    suites: &[String],
    cfg: VerifyConfig,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let reports = run_suites(suites, &cfg)?;
    let mut all = true;
    for r in &reports {
        writeln!(out, "{}", r.summary())?;
        for d in &r.details {
            writeln!(out, "    {d}")?;
        }
        all &= r.passed();
    }
    if let Some(dir) = dir {
        for r in &reports {
            write_file(&dir.join(format!("{}.json", r.name)), &manifest_json(r)?)?;
        }
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    writeln!(
        out,
        "{} checks, {failed} failed (seed {}, {} levels)",
        reports.len(),
        cfg.seed,
        cfg.levels
    )?;
    Ok(if all { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

fn cmd_parse_check(
    model: Option<&Path>,
    exprs: &[String],
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    if model.is_none() && exprs.is_empty() {
        return Err(Error::Config(
            "parse-check needs --model and/or expressions".into(),
        ));
    }
    let mut code = EXIT_OK;
    for text in exprs {
        match parse(text) {
            Ok(e) => {
                let vars: Vec<String> = e.variables().into_iter().collect();
                writeln!(
                    out,
                    "ok: {}\tvariables: [{}]",
                    simplify(&e),
                    vars.join(", ")
                )?;
            }
            Err(e) => {
                writeln!(err, "error: {e}")?;
                code = EXIT_USAGE;
            }
        }
    }
    if let Some(path) = model {
        let (_, m) = load(path)?;
        writeln!(
            out,
            "model {}: m = {}, n = {}",
            m.name,
            m.chart.m(),
            m.chart.n()
        )?;
        writeln!(out, "H = {}", m.h.expr())?;
        for (name, obs) in &m.currents {
            writeln!(out, "current {name}: {}", describe(obs))?;
        }
    }
    Ok(code)
}
