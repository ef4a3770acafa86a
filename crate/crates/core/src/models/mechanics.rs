use crate::bundle::{Chart, HamiltonianSection, VarKind};
use crate::error::{Error, Result};
use crate::expr::{simplify, Expr};

/// Time-dependent mechanics with `n` degrees of freedom:
/// `H = Σ_α p1_α²/2 + V(x1, u)` on the chart `m = 1`.
pub fn model_td_mechanics(n: usize, potential: &Expr) -> Result<(Chart, HamiltonianSection)> {
    let chart = Chart::new(1, n)?;
    for v in potential.variables() {
        match chart.classify(&v) {
            Some(VarKind::Base(_)) | Some(VarKind::Fiber(_)) => {}
            _ => {
                return Err(Error::Model(format!(
                    "potential may depend on x1 and u1..u{n} only, found `{v}`"
                )))
            }
        }
    }
    let kinetic = Expr::sum((0..n).map(|a| chart.p_var(0, a).powi(2) / Expr::constant(2.0)));
    let h = HamiltonianSection::new(&chart, simplify(&(kinetic + potential.clone())))?;
    Ok((chart, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::gamma_h;
    use crate::expr::{parse, Binding};

    #[test]
    fn oscillator_and_free_particle() {
        let (c, h) = model_td_mechanics(1, &parse("u1^2/2").unwrap()).unwrap();
        let g = gamma_h(&h, &c);
        assert_eq!(g.hu[0][0].to_string(), "p1_1");
        assert_eq!(g.hp[0].to_string(), "-u1");

        let (c, h) = model_td_mechanics(2, &Expr::zero()).unwrap();
        let g = gamma_h(&h, &c);
        assert!(g.hp.iter().all(Expr::is_zero));

        let (_, h) = model_td_mechanics(1, &parse("sin(x1)*u1").unwrap()).unwrap();
        let b: Binding = [("x1", 0.5), ("u1", 2.0), ("p1_1", 1.0)]
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        assert!((h.expr().eval(&b).unwrap() - (0.5 + 0.5f64.sin() * 2.0)).abs() < 1e-15);
    }

    #[test]
    fn potential_must_not_use_momenta() {
        assert!(model_td_mechanics(1, &parse("p1_1*u1").unwrap()).is_err());
        assert!(model_td_mechanics(1, &parse("u2").unwrap()).is_err());
    }
}
