//! Continuum mechanics on a reference body of dimension `N`: base
//! coordinates `x1 = t, x2.. = material points`, fiber coordinates
//! `u1..uN` (the placement), momenta `M_α = p1_α` and `P^i_α = p(i+1)_α`.

use nalgebra::{DMatrix, DVector};

use crate::bundle::{Chart, HamiltonianSection, VarKind};
use crate::error::{Error, Result};
use crate::expr::{parse, simplify, Binding, Expr};

/// Constants of the perfect-gas state law
/// `ε̄(ρ̄, s̄) = ε₀ exp((s̄/ρ̄ − s₀/ρ₀)/C_v) (ρ̄/(ρ₀√g))^γ √g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasConstants {
    pub gamma: f64,
    pub eps0: f64,
    pub rho0: f64,
    pub s0: f64,
    pub cv: f64,
}

impl Default for GasConstants {
    fn default() -> Self {
        GasConstants {
            gamma: 1.4,
            eps0: 1.0,
            rho0: 1.0,
            s0: 0.0,
            cv: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumSpec {
    /// Dimension `N` of the body and of the ambient space.
    pub dim: usize,
    /// Fiber metric `g_{αβ}` (constant).
    pub metric: DMatrix<f64>,
    /// Base cometric `G^{ij}` (constant).
    pub cometric: DMatrix<f64>,
    /// Reference mass density `ϱ̄`, a function of the base coordinates.
    pub density: Expr,
    /// Reference entropy density `ς̄` (constant).
    pub entropy: f64,
    pub gas: Option<GasConstants>,
}

impl ContinuumSpec {
    /// `N = 1`, `g = G = 1`, `ϱ̄ = 1`: the setting of the wave model.
    pub fn unit(dim: usize) -> ContinuumSpec {
        ContinuumSpec {
            dim,
            metric: DMatrix::identity(dim, dim),
            cometric: DMatrix::identity(dim, dim),
            density: Expr::one(),
            entropy: 0.0,
            gas: None,
        }
    }

    pub fn chart(&self) -> Result<Chart> {
        Chart::new(self.dim + 1, self.dim)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::Model(
                "continuum dimension must be at least 1".into(),
            ));
        }
        for (name, mat) in [("metric", &self.metric), ("cometric", &self.cometric)] {
            if mat.nrows() != n || mat.ncols() != n {
                return Err(Error::Shape(format!("{name} must be {n}x{n}")));
            }
            if (mat - mat.transpose()).amax() > 1e-12 {
                return Err(Error::Model(format!("{name} is not symmetric")));
            }
            if mat.clone().cholesky().is_none() {
                return Err(Error::Model(format!("{name} is not positive definite")));
            }
        }
        let chart = self.chart()?;
        for v in self.density.variables() {
            if !matches!(chart.classify(&v), Some(VarKind::Base(_))) {
                return Err(Error::Model(format!(
                    "reference density may depend on base coordinates only, found `{v}`"
                )));
            }
        }
        if let Some(c) = self.density.as_const() {
            if c <= 0.0 {
                return Err(Error::Model(format!(
                    "reference density must be positive, got {c}"
                )));
            }
        }
        Ok(())
    }

    /// Value of `ϱ̄` at a point of the base.
    pub fn density_at(&self, base: &Binding) -> Result<f64> {
        let rho = self.density.eval(base)?;
        if rho <= 0.0 {
            return Err(Error::Numeric(format!(
                "reference density {rho} is not positive"
            )));
        }
        Ok(rho)
    }
}

fn inverse(mat: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    mat.clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric(format!("{what} is singular")))
}

/// Simplified elasticity `ε = ½ Tr_g(b) ρ`:
/// `H = ½ g^{αβ} M_α M_β / ϱ̄ − ½ P^i_α G_{ij} P^j_β g^{αβ} / ϱ̄`.
pub fn model_elasticity_simple(spec: &ContinuumSpec) -> Result<(Chart, HamiltonianSection)> {
    spec.validate()?;
    let chart = spec.chart()?;
    let n = spec.dim;
    let ginv = inverse(&spec.metric, "metric")?;
    let glow = inverse(&spec.cometric, "cometric")?;
    let mut terms = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if ginv[(a, b)] != 0.0 {
                terms.push(
                    Expr::constant(0.5 * ginv[(a, b)]) * chart.p_var(0, a) * chart.p_var(0, b),
                );
            }
            for i in 0..n {
                for j in 0..n {
                    let c = glow[(i, j)] * ginv[(a, b)];
                    if c != 0.0 {
                        terms.push(
                            Expr::constant(-0.5 * c)
                                * chart.p_var(i + 1, a)
                                * chart.p_var(j + 1, b),
                        );
                    }
                }
            }
        }
    }
    let body = Expr::sum(terms);
    let h = match spec.density.as_const() {
        Some(rho) => body * Expr::constant(1.0 / rho),
        None => body / spec.density.clone(),
    };
    Ok((chart, HamiltonianSection::new(&chart, simplify(&h))?))
}

/// The one-dimensional wave model: simplified elasticity with `N = 1`.
/// With `g = G = ϱ̄ = 1` this is `H = M²/2 − P²/2`.
pub fn model_wave(spec: &ContinuumSpec) -> Result<(Chart, HamiltonianSection)> {
    if spec.dim != 1 {
        return Err(Error::Model(format!(
            "the wave model is one-dimensional, got N = {}",
            spec.dim
        )));
    }
    model_elasticity_simple(spec)
}

/// Legendre map of simplified elasticity at one point:
/// `M_α = g_{αβ} V^β ϱ̄`, `P^i_α = −G^{ij} F^β_j g_{αβ} ϱ̄`.
/// `f` is indexed `F[α][i]`; the returned `P` is indexed `P[i][α]`.
pub fn legendre_momenta(
    v: &DVector<f64>,
    f: &DMatrix<f64>,
    spec: &ContinuumSpec,
    rho: f64,
) -> (DVector<f64>, DMatrix<f64>) {
    let m = &spec.metric * v * rho;
    let p = -(&spec.cometric * f.transpose() * &spec.metric) * rho;
    (m, p)
}

/// Inverse of the stress part of [`legendre_momenta`]: `F` from `P`.
pub fn elasticity_deformation(
    p: &DMatrix<f64>,
    spec: &ContinuumSpec,
    rho: f64,
) -> Result<DMatrix<f64>> {
    let glow = inverse(&spec.cometric, "cometric")?;
    let ginv = inverse(&spec.metric, "metric")?;
    Ok(-(glow * p * ginv).transpose() / rho)
}

/// Piola transformation `σ^{αβ} = −F^α_i P^i_γ g^{βγ} / det F`.
pub fn piola_transform(
    f: &DMatrix<f64>,
    p: &DMatrix<f64>,
    g: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let det = f.determinant();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Numeric("deformation gradient is singular".into()));
    }
    let ginv = inverse(g, "metric")?;
    Ok(-(f * p * ginv) / det)
}

/// Inverse Piola transformation `P^i_α = −det F (F⁻¹)^i_γ σ^{γβ} g_{βα}`.
pub fn inverse_piola(
    f: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    g: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let det = f.determinant();
    let finv = f
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("deformation gradient is singular".into()))?;
    Ok(-(finv * sigma * g) * det)
}

/// One-dimensional perfect gas. With `x = det F` the first Piola–Kirchhoff
/// stress reads `P = f(x)/x`, `f(x) = x · p√g` evaluated at the spatial
/// densities `ϱ̄/x`, `ς̄/x`; for this state law `f(x) = C x^{1−γ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfectGas {
    pub consts: GasConstants,
    /// Reference mass density `ϱ̄` (constant).
    pub rho: f64,
    /// Reference entropy density `ς̄`.
    pub entropy: f64,
    /// Fiber metric `g_{11}`.
    pub g: f64,
}

impl PerfectGas {
    pub const N: usize = 1;

    pub fn new(spec: &ContinuumSpec) -> Result<PerfectGas> {
        spec.validate()?;
        if spec.dim != 1 {
            return Err(Error::Unsupported(format!(
                "the perfect gas model is implemented for N = 1 only, got N = {}",
                spec.dim
            )));
        }
        let consts = spec
            .gas
            .ok_or_else(|| Error::Model("perfect gas needs gas constants".into()))?;
        let rho = spec.density.as_const().ok_or_else(|| {
            Error::Unsupported("the perfect gas model needs a constant reference density".into())
        })?;
        if consts.rho0 <= 0.0 || consts.cv <= 0.0 || consts.eps0 <= 0.0 {
            return Err(Error::Model("rho0, cv and eps0 must be positive".into()));
        }
        if consts.gamma < 1.0 {
            return Err(Error::Model(format!(
                "adiabatic index must be at least 1, got {}",
                consts.gamma
            )));
        }
        Ok(PerfectGas {
            consts,
            rho,
            entropy: spec.entropy,
            g: spec.metric[(0, 0)],
        })
    }

    /// Spatial internal energy density `ε̄(ρ̄, s̄)`.
    pub fn energy_density(&self, rho_bar: f64, s_bar: f64) -> f64 {
        let c = &self.consts;
        let sg = self.g.sqrt();
        c.eps0
            * ((s_bar / rho_bar - c.s0 / c.rho0) / c.cv).exp()
            * (rho_bar / (c.rho0 * sg)).powf(c.gamma)
            * sg
    }

    /// `ε̄` as an expression in the variables `rho` and `s`.
    pub fn energy_expr(&self) -> Expr {
        let c = &self.consts;
        let sg = self.g.sqrt();
        let text = format!(
            "{eps0}*exp((s/rho - {ratio})/{cv})*exp({gamma}*ln(rho/{scale}))*{sg}",
            eps0 = c.eps0,
            ratio = c.s0 / c.rho0,
            cv = c.cv,
            gamma = c.gamma,
            scale = c.rho0 * sg,
            sg = sg,
        );
        parse(&text).expect("generated energy expression parses")
    }

    /// Pressure density `p√det g = (γ − 1) ε̄`.
    pub fn pressure_density(&self, rho_bar: f64, s_bar: f64) -> f64 {
        (self.consts.gamma - 1.0) * self.energy_density(rho_bar, s_bar)
    }

    /// `f(x) = x · p√g(ϱ̄/x, ς̄/x)`.
    pub fn f(&self, x: f64) -> f64 {
        x * self.pressure_density(self.rho / x, self.entropy / x)
    }

    /// Forward relation `P = f(det F) F⁻¹`.
    pub fn stress(&self, f_grad: f64) -> Result<f64> {
        if f_grad <= 0.0 {
            return Err(Error::Numeric(format!(
                "deformation gradient must be positive, got {f_grad}"
            )));
        }
        Ok(self.f(f_grad) / f_grad)
    }

    /// `x ↦ f(x)^N / x`, the function whose inverse recovers `det F` from `det P`.
    pub fn det_map(&self, x: f64) -> f64 {
        self.f(x).powi(Self::N as i32) / x
    }

    /// Numerical inverse of [`PerfectGas::det_map`] by bisection in `ln x`.
    pub fn det_map_inverse(&self, y: f64) -> Result<f64> {
        let h = |lx: f64| self.det_map(lx.exp()) - y;
        let (mut lo, mut hi) = (-40.0f64, 40.0f64);
        let (hlo, hhi) = (h(lo), h(hi));
        if !(hlo.is_finite() && hhi.is_finite()) || hlo * hhi > 0.0 {
            return Err(Error::Numeric(format!(
                "det P = {y} is outside the range of the state relation"
            )));
        }
        let increasing = hhi > hlo;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (h(mid) > 0.0) == increasing {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok((0.5 * (lo + hi)).exp())
    }

    /// Inverse relation `F = f(g⁻¹(det P)) P⁻¹`, with `g` the inverse of
    /// [`PerfectGas::det_map`].
    pub fn deformation(&self, p: f64) -> Result<f64> {
        if p <= 0.0 {
            return Err(Error::Numeric(format!("stress must be positive, got {p}")));
        }
        let x = self.det_map_inverse(p)?;
        Ok(self.f(x) / p)
    }

    /// `C` in `f(x) = C x^{1−γ}`.
    pub fn stress_constant(&self) -> f64 {
        let c = &self.consts;
        let sg = self.g.sqrt();
        let k = c.eps0
            * ((self.entropy / self.rho - c.s0 / c.rho0) / c.cv).exp()
            * (c.rho0 * sg).powf(-c.gamma)
            * sg;
        (c.gamma - 1.0) * k * self.rho.powf(c.gamma)
    }

    /// Closed-form inverse `F = (C/P)^{1/γ}`.
    pub fn deformation_closed(&self, p: f64) -> Result<f64> {
        let c = self.stress_constant();
        if c <= 0.0 {
            return Err(Error::Model(
                "the state relation is not invertible (pressure vanishes identically)".into(),
            ));
        }
        if p <= 0.0 {
            return Err(Error::Numeric(format!("stress must be positive, got {p}")));
        }
        Ok((c / p).powf(1.0 / self.consts.gamma))
    }

    /// Confirm that [`PerfectGas::det_map`] is strictly monotone on
    /// `[lo, hi]`, sampled at `samples` points; otherwise report the first
    /// offending sub-interval.
    pub fn check_invertible(&self, lo: f64, hi: f64, samples: usize) -> Result<()> {
        let samples = samples.max(2);
        let xs: Vec<f64> = (0..samples)
            .map(|k| lo + (hi - lo) * k as f64 / (samples - 1) as f64)
            .collect();
        let ys: Vec<f64> = xs.iter().map(|&x| self.det_map(x)).collect();
        let sign = (ys[1] - ys[0]).signum();
        for k in 0..samples - 1 {
            let d = ys[k + 1] - ys[k];
            if d == 0.0 || d.signum() != sign || !d.is_finite() {
                return Err(Error::Model(format!(
                    "state relation is not invertible on [{}, {}]",
                    xs[k],
                    xs[k + 1]
                )));
            }
        }
        Ok(())
    }

    /// Energy density of a state, `M²/(2gϱ̄) + (ε̄ + N p√g) det F`, computed
    /// directly from the deformation. Valid for every `γ ≥ 1`.
    pub fn energy(&self, m: f64, f_grad: f64) -> f64 {
        let (rb, sb) = (self.rho / f_grad, self.entropy / f_grad);
        let internal = self.energy_density(rb, sb) + Self::N as f64 * self.pressure_density(rb, sb);
        m * m / (2.0 * self.g * self.rho) + internal * f_grad
    }

    /// Hamiltonian `M²/(2gϱ̄) + (1 + N(γ−1)) ε̄ det F` with `det F` expressed
    /// through `P`: `ε̄ det F = (C/(γ−1)) (C/P)^{(1−γ)/γ}`.
    pub fn hamiltonian(&self, chart: &Chart) -> Result<HamiltonianSection> {
        let c = self.stress_constant();
        if c <= 0.0 {
            return Err(Error::Model(
                "the state relation is not invertible (pressure vanishes identically); no Hamiltonian exists"
                    .into(),
            ));
        }
        let gamma = self.consts.gamma;
        let factor = (1.0 + Self::N as f64 * (gamma - 1.0)) * c / (gamma - 1.0);
        let expo = (1.0 - gamma) / gamma;
        let text = format!(
            "p1_1^2/{kin} + {factor}*exp({expo}*({lnc} - ln(p2_1)))",
            kin = 2.0 * self.g * self.rho,
            lnc = c.ln(),
        );
        HamiltonianSection::new(chart, parse(&text)?)
    }
}
