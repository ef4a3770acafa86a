use crate::error::{Error, Result};
use crate::models::yang_mills::{YmGrid, YmSnapshot};
use crate::models::LieAlgebraSpec;

/// Right-hand side in temporal gauge `u_0 = 0`:
/// `∂_t u_1 = −½ g_00 g_11 E`, `∂_t E = −c(u_0, E) = 0`.
fn rhs(metric: [f64; 2], e: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let s = -0.5 * metric[0] * metric[1];
    let du1 = e
        .iter()
        .map(|r| r.iter().map(|v| s * v).collect())
        .collect();
    let de = e.iter().map(|r| vec![0.0; r.len()]).collect();
    (du1, de)
}

fn axpy(a: &[Vec<f64>], c: f64, d: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .zip(d)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + c * q).collect())
        .collect()
}

/// RK4 evolution of the 1+1-dimensional Yang–Mills equations in temporal
/// gauge on a periodic grid with spacing `dx`. `u1_0[α][k]` and `e0[α][k]`
/// are the initial `u^α_1` and `E_α = π^{01}_α`; `metric` is `(g_00, g_11)`.
/// Every `record_every`-th level is kept (the first is always kept).
#[allow(clippy::too_many_arguments)]
pub fn evolve_ym_temporal(
    la: &LieAlgebraSpec,
    metric: [f64; 2],
    u1_0: Vec<Vec<f64>>,
    e0: Vec<Vec<f64>>,
    dx: f64,
    dt: f64,
    steps: usize,
    record_every: usize,
) -> Result<YmGrid> {
    let n = la.dim();
    let k_len = e0.first().map_or(0, Vec::len);
    if u1_0.len() != n
        || e0.len() != n
        || u1_0.iter().chain(&e0).any(|r| r.len() != k_len)
        || k_len < 8
    {
        return Err(Error::Shape(format!(
            "u1 and E need {n} components on the same grid of at least 8 points"
        )));
    }
    if !(dx > 0.0 && dt > 0.0) || record_every == 0 {
        return Err(Error::Config(
            "need dx > 0, dt > 0 and record_every >= 1".into(),
        ));
    }
    if metric.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::Model(
            "base metric must have positive diagonal entries".into(),
        ));
    }
    let zero = vec![vec![0.0; k_len]; n];
    let snap = |t: f64, u1: &[Vec<f64>], e: &[Vec<f64>]| YmSnapshot {
        t,
        u0: zero.clone(),
        u1: u1.to_vec(),
        e: e.to_vec(),
    };
    let (mut u1, mut e) = (u1_0, e0);
    let mut snapshots = vec![snap(0.0, &u1, &e)];
    for s in 0..steps {
        let k1 = rhs(metric, &e);
        let k2 = rhs(metric, &axpy(&e, 0.5 * dt, &k1.1));
        let k3 = rhs(metric, &axpy(&e, 0.5 * dt, &k2.1));
        let k4 = rhs(metric, &axpy(&e, dt, &k3.1));
        for a in 0..n {
            for k in 0..k_len {
                u1[a][k] +=
                    dt / 6.0 * (k1.0[a][k] + 2.0 * k2.0[a][k] + 2.0 * k3.0[a][k] + k4.0[a][k]);
                e[a][k] +=
                    dt / 6.0 * (k1.1[a][k] + 2.0 * k2.1[a][k] + 2.0 * k3.1[a][k] + k4.1[a][k]);
            }
        }
        if (s + 1) % record_every == 0 {
            snapshots.push(snap((s + 1) as f64 * dt, &u1, &e));
        }
    }
    Ok(YmGrid {
        dx,
        dt: dt * record_every as f64,
        snapshots,
    })
}
