//! TOML model files: schema, validation and resolution into charts,
//! Hamiltonians, currents and solver settings.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bundle::{validate_current, Chart, Current, HamiltonianSection, Observable};
use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::models::{
    model_elasticity_simple, model_td_mechanics, model_yang_mills, shipped_currents, ContinuumSpec,
    GasConstants, LieAlgebraSpec, PerfectGas, BUILTIN_MODELS,
};
use crate::solver::{Boundary, FieldSystem, Reconstruction, SolverConfig};

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub model: ModelSection,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub currents: Vec<CurrentSpec>,
    /// Evaluation points for `bracket`: coordinate name to value.
    #[serde(default)]
    pub points: Vec<BTreeMap<String, f64>>,
    pub solver: Option<SolverSection>,
    pub initial: Option<InitialSection>,
    pub output: Option<OutputSection>,
}

/// Either `builtin = "<name>"` or an explicit chart `m`, `n` with a
/// Hamiltonian expression.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub builtin: Option<String>,
    pub name: Option<String>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub hamiltonian: Option<String>,
}

/// Parameters of builtin models; each model reads only its own keys.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Degrees of freedom (`td_mechanics`).
    pub dof: Option<usize>,
    /// Potential `V(x1, u)` (`td_mechanics`).
    pub potential: Option<String>,
    /// Body dimension `N` (`elasticity_simple`).
    pub dim: Option<usize>,
    /// Diagonal of the fiber metric `g` (continua) or of the base metric (Yang–Mills).
    pub metric: Option<Vec<f64>>,
    /// Diagonal of the base cometric `G` (continua).
    pub cometric: Option<Vec<f64>>,
    /// Reference density `ϱ̄` as an expression in the base coordinates.
    pub density: Option<String>,
    pub entropy: Option<f64>,
    pub gamma: Option<f64>,
    pub eps0: Option<f64>,
    pub rho0: Option<f64>,
    pub s0: Option<f64>,
    pub cv: Option<f64>,
    /// Lie algebra dimension (`yang_mills_abelian`).
    pub algebra_dim: Option<usize>,
    /// Base dimension `m` (Yang–Mills).
    pub base_dim: Option<usize>,
}

/// A named current: `Y` and `beta` for `m ≥ 2`, a function `f` for `m = 1`.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CurrentSpec {
    pub name: String,
    #[serde(rename = "Y")]
    pub y: Option<Vec<String>>,
    pub beta: Option<Vec<String>>,
    pub f: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Time step; for fields defaults to `dx/4`.
    pub dt: Option<f64>,
    pub t_final: f64,
    pub t0: Option<f64>,
    /// Number of grid points.
    pub k: Option<usize>,
    /// Length of the spatial domain (default `2π`).
    pub length: Option<f64>,
    pub x0: Option<f64>,
    pub boundary: Option<Boundary>,
    pub reconstruction: Option<Reconstruction>,
    pub newton_tol: Option<f64>,
    pub newton_max_iter: Option<usize>,
    pub record_every: Option<usize>,
}

/// Initial data: `u` (fiber values or expressions in `x1`, `x2`), `p`
/// (momenta for `m = 1`, `M = p1_α` for fields) and `e` (Yang–Mills
/// electric field `π^{01}`).
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub u: Vec<String>,
    #[serde(default)]
    pub p: Vec<String>,
    #[serde(default)]
    pub e: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub csv: Option<String>,
    pub manifest: Option<String>,
    pub plot: Option<String>,
    /// Keep every `every`-th recorded level in the plot file.
    pub every: Option<usize>,
}

impl ModelFile {
    pub fn from_toml(text: &str) -> Result<ModelFile> {
        toml::from_str(text)
            .map_err(|e| Error::Config(format!("model file: {}", e.message().trim())))
    }

    pub fn load(path: &Path) -> Result<ModelFile> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// What the model can be simulated with.
pub enum Dynamics {
    Ode,
    Field(FieldSystem),
    YangMills {
        algebra: LieAlgebraSpec,
        metric: [f64; 2],
    },
    None(String),
}

/// A model file resolved into mathematical objects.
pub struct ResolvedModel {
    pub name: String,
    pub chart: Chart,
    pub h: HamiltonianSection,
    /// Shipped currents followed by the file's own (a file entry replaces a
    /// shipped one of the same name).
    pub currents: Vec<(String, Observable)>,
    pub dynamics: Dynamics,
}

impl ResolvedModel {
    pub fn current(&self, name: &str) -> Result<&Observable> {
        self.currents
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c)
            .ok_or_else(|| {
                let names: Vec<&str> = self.currents.iter().map(|(n, _)| n.as_str()).collect();
                Error::InvalidCurrent(format!(
                    "unknown current `{name}`; available: {}",
                    names.join(", ")
                ))
            })
    }
}

fn diag(values: &Option<Vec<f64>>, n: usize, what: &str) -> Result<DMatrix<f64>> {
    match values {
        None => Ok(DMatrix::identity(n, n)),
        Some(v) if v.len() == n => Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            v.clone(),
        ))),
        Some(v) => Err(Error::Shape(format!(
            "{what} needs {n} diagonal entries, got {}",
            v.len()
        ))),
    }
}

fn continuum_spec(p: &Params, dim: usize) -> Result<ContinuumSpec> {
    let mut spec = ContinuumSpec::unit(dim);
    spec.metric = diag(&p.metric, dim, "metric")?;
    spec.cometric = diag(&p.cometric, dim, "cometric")?;
    if let Some(d) = &p.density {
        spec.density = parse(d)?;
    }
    if let Some(s) = p.entropy {
        spec.entropy = s;
    }
    spec.validate()?;
    Ok(spec)
}

fn gas_constants(p: &Params) -> GasConstants {
    let d = GasConstants::default();
    GasConstants {
        gamma: p.gamma.unwrap_or(d.gamma),
        eps0: p.eps0.unwrap_or(d.eps0),
        rho0: p.rho0.unwrap_or(d.rho0),
        s0: p.s0.unwrap_or(d.s0),
        cv: p.cv.unwrap_or(d.cv),
    }
}

fn parse_current(spec: &CurrentSpec, chart: &Chart) -> Result<Observable> {
    let obs = match (&spec.f, &spec.y, &spec.beta) {
        (Some(f), None, None) if chart.m() == 1 => Observable::Function(parse(f)?),
        (Some(_), _, _) => {
            return Err(Error::InvalidCurrent(format!(
                "current `{}`: `f` is allowed only for m = 1 and without Y/beta",
                spec.name
            )))
        }
        (None, y, beta) => {
            let y = y.clone().unwrap_or_else(|| vec!["0".into(); chart.n()]);
            let beta = beta.clone().unwrap_or_else(|| vec!["0".into(); chart.m()]);
            let c = Current::parse(&y, &beta)?;
            let report = validate_current(&c, chart);
            if !report.valid {
                return Err(Error::InvalidCurrent(format!(
                    "current `{}`: {report}",
                    spec.name
                )));
            }
            if chart.m() == 1 {
                Observable::Function(crate::bundle::current_coefficients(&c, chart).remove(0))
            } else {
                Observable::Current(c)
            }
        }
    };
    if let Observable::Function(f) = &obs {
        let foreign = chart.foreign_variables(f);
        if !foreign.is_empty() {
            return Err(Error::InvalidCurrent(format!(
                "current `{}` uses unknown variables: {}",
                spec.name,
                foreign.join(", ")
            )));
        }
    }
    Ok(obs)
}

/// Build the chart, Hamiltonian, currents and dynamics of a model file.
pub fn resolve(file: &ModelFile) -> Result<ResolvedModel> {
    let p = &file.params;
    let sec = &file.model;
    let (name, chart, h, dynamics) = match sec.builtin.as_deref() {
        Some(b) => {
            if sec.m.is_some() || sec.n.is_some() || sec.hamiltonian.is_some() {
                return Err(Error::Config(
                    "builtin models take their chart and Hamiltonian from [params]; remove m, n and hamiltonian"
                        .into(),
                ));
            }
            match b {
                "td_mechanics" => {
                    let pot = parse(p.potential.as_deref().unwrap_or("0"))?;
                    let (c, h) = model_td_mechanics(p.dof.unwrap_or(1), &pot)?;
                    (b, c, h, Dynamics::Ode)
                }
                "wave" => {
                    let spec = continuum_spec(p, 1)?;
                    let sys = FieldSystem::wave(&spec)?;
                    (b, sys.chart, sys.h.clone(), Dynamics::Field(sys))
                }
                "elasticity_simple" => {
                    let dim = p.dim.unwrap_or(1);
                    let spec = continuum_spec(p, dim)?;
                    if dim == 1 {
                        let sys = FieldSystem::wave(&spec)?;
                        (b, sys.chart, sys.h.clone(), Dynamics::Field(sys))
                    } else {
                        let (c, h) = model_elasticity_simple(&spec)?;
                        (
                            b,
                            c,
                            h,
                            Dynamics::None(format!("no solver for m = {}", dim + 1)),
                        )
                    }
                }
                "perfect_gas" => {
                    let mut spec = continuum_spec(p, 1)?;
                    spec.gas = Some(gas_constants(p));
                    let gas = PerfectGas::new(&spec)?;
                    let sys = FieldSystem::perfect_gas(&gas)?;
                    (b, sys.chart, sys.h.clone(), Dynamics::Field(sys))
                }
                "yang_mills_abelian" | "yang_mills_su2" => {
                    let la = if b == "yang_mills_su2" {
                        LieAlgebraSpec::su2()
                    } else {
                        LieAlgebraSpec::abelian(p.algebra_dim.unwrap_or(1))
                    };
                    let m = p.base_dim.unwrap_or(2);
                    let ym = model_yang_mills(&la, m, p.metric.clone())?;
                    let dynamics = if m == 2 {
                        Dynamics::YangMills {
                            metric: [ym.metric[0], ym.metric[1]],
                            algebra: la,
                        }
                    } else {
                        Dynamics::None("the Yang-Mills solver handles 1+1 dimensions only".into())
                    };
                    (b, ym.chart, ym.h.clone(), dynamics)
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown builtin model `{other}`; available: {}",
                        BUILTIN_MODELS.join(", ")
                    )))
                }
            }
        }
        None => {
            let (Some(m), Some(n), Some(text)) = (sec.m, sec.n, sec.hamiltonian.as_deref()) else {
                return Err(Error::Config(
                    "[model] needs either `builtin` or all of `m`, `n` and `hamiltonian`".into(),
                ));
            };
            let chart = Chart::new(m, n)?;
            let h = HamiltonianSection::parse(&chart, text)?;
            let dynamics = match m {
                1 => Dynamics::Ode,
                2 => Dynamics::Field(FieldSystem::new("custom", &chart, h.clone())?),
                _ => Dynamics::None(format!("no solver for m = {m}")),
            };
            ("custom", chart, h, dynamics)
        }
    };
    let mut currents = shipped_currents(&chart);
    for spec in &file.currents {
        let obs = parse_current(spec, &chart)?;
        match currents.iter_mut().find(|(n, _)| *n == spec.name) {
            Some(slot) => slot.1 = obs,
            None => currents.push((spec.name.clone(), obs)),
        }
    }
    Ok(ResolvedModel {
        name: sec.name.clone().unwrap_or_else(|| name.to_string()),
        chart,
        h,
        currents,
        dynamics,
    })
}

/// Field solver configuration from the `[solver]` table.
pub fn field_config(s: &SolverSection) -> Result<SolverConfig> {
    let k = s.k.ok_or_else(|| {
        Error::Config("[solver] needs `k` (number of grid points) for field models".into())
    })?;
    let boundary = s.boundary.unwrap_or_default();
    let length = s.length.unwrap_or(2.0 * std::f64::consts::PI);
    let intervals = match boundary {
        Boundary::Periodic => k,
        Boundary::Dirichlet => k.saturating_sub(1).max(1),
    };
    let dx = length / intervals as f64;
    let mut cfg = SolverConfig::periodic_2pi(k.max(1), s.t_final);
    cfg.dx = dx;
    cfg.dt = s.dt.unwrap_or(dx / 4.0);
    cfg.t0 = s.t0.unwrap_or(0.0);
    cfg.x0 = s.x0.unwrap_or(0.0);
    cfg.boundary = boundary;
    cfg.reconstruction = s.reconstruction.unwrap_or_default();
    if let Some(t) = s.newton_tol {
        cfg.newton_tol = t;
    }
    if let Some(n) = s.newton_max_iter {
        cfg.newton_max_iter = n;
    }
    cfg.record_every = s.record_every.unwrap_or(1);
    cfg.validate()?;
    Ok(cfg)
}

pub(crate) fn parse_all(list: &[String]) -> Result<Vec<Expr>> {
    list.iter().map(|s| parse(s).map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ModelFile::from_toml("[model]\nbuiltin = \"wave\"\ncolour = 3\n").unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
        assert!(ModelFile::from_toml("[model]\nbuiltin = \"wave\"\n[extra]\n").is_err());
    }

    #[test]
    fn builtins_resolve() {
        for b in BUILTIN_MODELS {
            let f = ModelFile::from_toml(&format!("[model]\nbuiltin = \"{b}\"\n")).unwrap();
            let r = resolve(&f).unwrap();
            assert!(!r.currents.is_empty(), "{b}");
        }
    }

    #[test]
    fn custom_model_and_currents() {
        let text = r#"
[model]
m = 2
n = 1
hamiltonian = "p1_1^2/2 - p2_1^2/2"

[[currents]]
name = "mine"
Y = ["u1"]
beta = ["x1", "0"]
"#;
        let r = resolve(&ModelFile::from_toml(text).unwrap()).unwrap();
        assert_eq!(r.name, "custom");
        assert!(r.current("mine").is_ok());
        let err = r.current("nope").unwrap_err().to_string();
        assert!(err.contains("momentum_1") && err.contains("mine"), "{err}");
    }

    #[test]
    fn invalid_current_is_reported() {
        let text = "[model]\nbuiltin = \"wave\"\n[[currents]]\nname = \"bad\"\nY = [\"p1_1\"]\n";
        let err = resolve(&ModelFile::from_toml(text).unwrap()).err().unwrap();
        assert!(matches!(err, Error::InvalidCurrent(_)), "{err}");
    }

    #[test]
    fn missing_chart_is_a_config_error() {
        let err = resolve(&ModelFile::from_toml("[model]\nm = 2\n").unwrap())
            .err()
            .unwrap();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn field_config_defaults() {
        let s = SolverSection {
            dt: None,
            t_final: 1.0,
            t0: None,
            k: Some(64),
            length: None,
            x0: None,
            boundary: None,
            reconstruction: None,
            newton_tol: None,
            newton_max_iter: None,
            record_every: None,
        };
        let c = field_config(&s).unwrap();
        assert_eq!(c, SolverConfig::periodic_2pi(64, 1.0));
    }
}
