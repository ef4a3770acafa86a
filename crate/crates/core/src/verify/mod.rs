//! Executable checks of the bracket identities and of the bracket form of the
//! field equations. Every check is seeded and returns a
//! [`VerificationReport`]; suites group checks by name.

mod algebra;
mod evolution;
pub mod sampling;

use serde::Serialize;

use crate::error::{Error, Result};

pub use algebra::{
    bracket_by_coefficients, check_affine_round_trip, check_connection_class,
    check_expr_derivatives, check_jacobi_currents, check_m1_reduction, check_representation,
    poisson_oracle,
};
pub use evolution::{
    bracket_evolution_field, bracket_evolution_ode, check_bracket_evolution_converse,
    check_bracket_evolution_field, check_bracket_evolution_ode, check_perfect_gas,
    check_ym_conservation, su2_gauss_config,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

/// One rung of a refinement ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level {
    pub label: String,
    /// Step or grid spacing of the level.
    pub h: f64,
    pub residual: f64,
    /// `residual(previous level) / residual(this level)`.
    pub ratio: Option<f64>,
}

impl Level {
    /// Build a ladder from `(label, h, residual)` and fill in the ratios.
    pub fn ladder(rows: Vec<(String, f64, f64)>) -> Vec<Level> {
        let mut out: Vec<Level> = Vec::with_capacity(rows.len());
        for (label, h, residual) in rows {
            let ratio = out.last().map(|p| p.residual / residual);
            out.push(Level {
                label,
                h,
                residual,
                ratio,
            });
        }
        out
    }
}

/// Target convergence ratio with its relative pass band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioBand {
    pub expected: f64,
    pub rel: f64,
}

impl RatioBand {
    pub fn contains(&self, r: f64) -> bool {
        (r - self.expected).abs() <= self.rel * self.expected
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub name: String,
    pub status: Status,
    /// Largest residual over all samples (for ladders: at the finest level).
    pub max_residual: f64,
    pub tolerance: f64,
    pub sample_count: usize,
    pub levels: Vec<Level>,
    pub ratio_band: Option<RatioBand>,
    /// Plain-language statement of what is certified.
    pub claim: String,
    pub seed: u64,
    pub details: Vec<String>,
}

impl VerificationReport {
    pub fn new(name: &str, claim: &str, seed: u64, tolerance: f64) -> VerificationReport {
        VerificationReport {
            name: name.into(),
            status: Status::Fail,
            max_residual: 0.0,
            tolerance,
            sample_count: 0,
            levels: Vec::new(),
            ratio_band: None,
            claim: claim.into(),
            seed,
            details: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Every ratio of the ladder lies in the band (true without a band).
    pub fn ratios_ok(&self) -> bool {
        match self.ratio_band {
            None => true,
            Some(band) => self
                .levels
                .iter()
                .filter_map(|l| l.ratio)
                .all(|r| band.contains(r)),
        }
    }

    /// Set the status from the residual, the ratio band and an extra condition.
    pub fn decide(&mut self, extra: bool) {
        let ok = self.max_residual.is_finite()
            && self.max_residual <= self.tolerance
            && self.ratios_ok()
            && extra;
        self.status = if ok { Status::Pass } else { Status::Fail };
    }

    /// One-line summary.
    pub fn summary(&self) -> String {
        let status = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        };
        let ratios: Vec<String> = self
            .levels
            .iter()
            .filter_map(|l| l.ratio.map(|r| format!("{r:.3}")))
            .collect();
        let mut s = format!(
            "{status} {}: max residual {:.3e} (tol {:.1e}), {} samples",
            self.name, self.max_residual, self.tolerance, self.sample_count
        );
        if !ratios.is_empty() {
            s.push_str(&format!(", ratios [{}]", ratios.join(", ")));
        }
        s
    }
}

/// Knobs shared by all checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Number of refinement levels for convergence studies.
    pub levels: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 20240611,
            levels: 3,
        }
    }
}

/// Suite names in declaration order.
pub const SUITES: [&str; 9] = [
    "representation",
    "jacobi",
    "m1_reduction",
    "affine_round_trip",
    "bracket_evolution",
    "connection_class",
    "ym_conservation",
    "expr_derivatives",
    "perfect_gas",
];

/// Run one suite.
pub fn run_suite(name: &str, cfg: &VerifyConfig) -> Result<Vec<VerificationReport>> {
    if cfg.levels < 2 {
        return Err(Error::Config(
            "a refinement ladder needs at least 2 levels".into(),
        ));
    }
    Ok(match name {
        "representation" => vec![check_representation(cfg)?],
        "jacobi" => vec![check_jacobi_currents(cfg)?],
        "m1_reduction" => vec![check_m1_reduction(cfg)?],
        "affine_round_trip" => vec![check_affine_round_trip(cfg)?],
        "bracket_evolution" => vec![
            check_bracket_evolution_ode(cfg)?,
            check_bracket_evolution_field(cfg)?,
            check_bracket_evolution_converse(cfg)?,
        ],
        "connection_class" => vec![check_connection_class(cfg)?],
        "ym_conservation" => vec![check_ym_conservation(cfg)?],
        "expr_derivatives" => vec![check_expr_derivatives(cfg)?],
        "perfect_gas" => vec![check_perfect_gas(cfg)?],
        other => {
            return Err(Error::Config(format!(
                "unknown suite `{other}`; available: {}",
                SUITES.join(", ")
            )))
        }
    })
}

/// Run the selected suites (all of them when `names` is empty), merging the
/// reports in declaration order.
pub fn run_suites(names: &[String], cfg: &VerifyConfig) -> Result<Vec<VerificationReport>> {
    for n in names {
        if !SUITES.contains(&n.as_str()) {
            return Err(Error::Config(format!(
                "unknown suite `{n}`; available: {}",
                SUITES.join(", ")
            )));
        }
    }
    let mut out = Vec::new();
    for s in SUITES {
        if names.is_empty() || names.iter().any(|n| n == s) {
            out.extend(run_suite(s, cfg)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_ratios() {
        let l = Level::ladder(vec![
            ("a".into(), 0.1, 16.0),
            ("b".into(), 0.05, 4.0),
            ("c".into(), 0.025, 1.0),
        ]);
        assert_eq!(l[0].ratio, None);
        assert_eq!(l[1].ratio, Some(4.0));
        assert_eq!(l[2].ratio, Some(4.0));
    }

    #[test]
    fn decide_uses_band() {
        let mut r = VerificationReport::new("x", "claim", 1, 1.0);
        r.levels = Level::ladder(vec![("a".into(), 0.1, 0.8), ("b".into(), 0.05, 0.4)]);
        r.max_residual = 0.4;
        r.ratio_band = Some(RatioBand {
            expected: 4.0,
            rel: 0.25,
        });
        r.decide(true);
        assert!(!r.passed());
        r.ratio_band = Some(RatioBand {
            expected: 2.0,
            rel: 0.25,
        });
        r.decide(true);
        assert!(r.passed());
        r.decide(false);
        assert!(!r.passed());
    }

    #[test]
    fn unknown_suite_is_rejected() {
        let err = run_suites(&["nope".into()], &VerifyConfig::default()).unwrap_err();
        assert!(err.to_string().contains("representation"));
    }
}
