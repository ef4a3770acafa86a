//! Plain-text outputs of the solvers: CSV tables, a JSON run manifest and a
//! downsampled whitespace-separated plot table.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{OdeState, Trajectory};
use crate::error::Result;

/// Field trajectory as CSV with header `t,x,u1..,M1..,P1..`, one row per
/// recorded time level and grid point.
pub fn field_csv(traj: &Trajectory) -> String {
    let n = traj.snapshots.first().map_or(0, |s| s.u.len());
    let mut out = String::from("t,x");
    for prefix in ["u", "M", "P"] {
        for a in 1..=n {
            let _ = write!(out, ",{prefix}{a}");
        }
    }
    out.push('\n');
    for g in &traj.snapshots {
        for (k, x) in traj.x.iter().enumerate() {
            let _ = write!(out, "{:.16e},{:.16e}", g.t, x);
            for f in [&g.u, &g.m, &g.p] {
                for r in f {
                    let _ = write!(out, ",{:.16e}", r[k]);
                }
            }
            out.push('\n');
        }
    }
    out
}

/// ODE trajectory as CSV with header `t,u1..,p1..`.
pub fn ode_csv(states: &[OdeState]) -> String {
    let n = states.first().map_or(0, |s| s.u.len());
    let mut out = String::from("t");
    for a in 1..=n {
        let _ = write!(out, ",u{a}");
    }
    for a in 1..=n {
        let _ = write!(out, ",p1_{a}");
    }
    out.push('\n');
    for s in states {
        let _ = write!(out, "{:.16e}", s.t);
        for v in s.u.iter().chain(&s.p) {
            let _ = write!(out, ",{v:.16e}");
        }
        out.push('\n');
    }
    out
}

/// Whitespace-separated `x u1 ..` blocks for every `every`-th recorded level,
/// separated by blank lines (gnuplot `index` layout).
pub fn field_plot(traj: &Trajectory, every: usize) -> String {
    let mut out = String::new();
    for g in traj.snapshots.iter().step_by(every.max(1)) {
        let _ = writeln!(out, "# t = {:.6e}", g.t);
        for (k, x) in traj.x.iter().enumerate() {
            let _ = write!(out, "{x:.8e}");
            for r in &g.u {
                let _ = write!(out, " {:.8e}", r[k]);
            }
            out.push('\n');
        }
        out.push_str("\n\n");
    }
    out
}

/// Pretty JSON with keys in sorted order.
pub fn manifest_json<T: Serialize>(value: &T) -> Result<String> {
    let v =
        serde_json::to_value(value).map_err(|e| crate::Error::Config(format!("manifest: {e}")))?;
    Ok(serde_json::to_string_pretty(&v)
        .map_err(|e| crate::Error::Config(format!("manifest: {e}")))?
        + "\n")
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ode_csv_layout() {
        let s = OdeState {
            t: 0.5,
            u: vec![1.0],
            p: vec![-2.0],
        };
        let csv = ode_csv(&[s]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,u1,p1_1"));
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(row, vec![0.5, 1.0, -2.0]);
    }

    #[test]
    fn manifest_keys_sorted() {
        #[derive(Serialize)]
        struct M {
            zeta: u8,
            alpha: u8,
        }
        let j = manifest_json(&M { zeta: 1, alpha: 2 }).unwrap();
        assert!(j.find("alpha").unwrap() < j.find("zeta").unwrap());
    }
}
