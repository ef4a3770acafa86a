//! Built-in theories: time-dependent mechanics, continua (wave equation,
//! simplified elasticity, perfect gas) and Yang–Mills.

pub mod continuum;
pub mod mechanics;
pub mod yang_mills;

pub use continuum::{
    inverse_piola, legendre_momenta, model_elasticity_simple, model_wave, piola_transform,
    ContinuumSpec, GasConstants, PerfectGas,
};
pub use mechanics::model_td_mechanics;
pub use yang_mills::{
    curvature, gauss_residual, model_yang_mills, ym_residual, LieAlgebraSpec, PiField,
    YangMillsModel, YmGrid, YmResidual, YmSnapshot,
};

/// Names accepted by the `model` key of a model file.
pub const BUILTIN_MODELS: [&str; 6] = [
    "td_mechanics",
    "wave",
    "perfect_gas",
    "elasticity_simple",
    "yang_mills_abelian",
    "yang_mills_su2",
];

use crate::bundle::{Chart, Current, Observable};
use crate::expr::Expr;

/// Named observables that ship with a builtin model. For `m = 1` these are
/// functions; otherwise currents `(Y, β)`:
/// - `momentum_a`: translation `Y = e_a`, `β = 0`;
/// - `field_a`: `Y = 0`, `β = (u_a, 0, …)`;
/// - `dilation`: `Y = u`, `β = 0`.
pub fn shipped_currents(chart: &Chart) -> Vec<(String, Observable)> {
    let (m, n) = (chart.m(), chart.n());
    if m == 1 {
        let mut out: Vec<(String, Observable)> = (0..n)
            .map(|a| {
                (
                    format!("position_{}", a + 1),
                    Observable::Function(chart.u_var(a)),
                )
            })
            .collect();
        out.extend((0..n).map(|a| {
            (
                format!("momentum_{}", a + 1),
                Observable::Function(chart.p_var(0, a)),
            )
        }));
        return out;
    }
    let mut out = Vec::new();
    for a in 0..n {
        let mut y = vec![Expr::zero(); n];
        y[a] = Expr::one();
        out.push((
            format!("momentum_{}", a + 1),
            Current::new(y, vec![Expr::zero(); m]).into(),
        ));
    }
    for a in 0..n {
        let mut beta = vec![Expr::zero(); m];
        beta[0] = chart.u_var(a);
        out.push((
            format!("field_{}", a + 1),
            Current::new(vec![Expr::zero(); n], beta).into(),
        ));
    }
    let y = (0..n).map(|a| chart.u_var(a)).collect();
    out.push((
        "dilation".into(),
        Current::new(y, vec![Expr::zero(); m]).into(),
    ));
    out
}
