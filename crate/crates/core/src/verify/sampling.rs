//! Seeded random currents, Hamiltonians and bindings.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bundle::{Chart, Current, HamiltonianSection};
use crate::expr::gen::random_polynomial;
use crate::expr::Binding;

/// Degree of the random polynomials.
pub const DEGREE: usize = 2;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Current with dense polynomial `Y^α`, `β^i` in `(x, u)`.
pub fn random_current<R: Rng + ?Sized>(rng: &mut R, chart: &Chart) -> Current {
    let vars = chart.configuration_names();
    Current {
        y: (0..chart.n())
            .map(|_| random_polynomial(rng, &vars, DEGREE))
            .collect(),
        beta: (0..chart.m())
            .map(|_| random_polynomial(rng, &vars, DEGREE))
            .collect(),
    }
}

/// Dense polynomial Hamiltonian in all chart coordinates.
pub fn random_hamiltonian<R: Rng + ?Sized>(rng: &mut R, chart: &Chart) -> HamiltonianSection {
    HamiltonianSection::new(chart, random_polynomial(rng, &chart.names(), DEGREE))
        .expect("polynomial in chart names is a valid Hamiltonian")
}

/// Values uniform in `[-1, 1]`, in [`Chart::names`] order.
pub fn random_values<R: Rng + ?Sized>(rng: &mut R, chart: &Chart) -> Vec<f64> {
    (0..chart.dim())
        .map(|_| rng.gen_range(-1.0..=1.0))
        .collect()
}

pub fn random_binding<R: Rng + ?Sized>(rng: &mut R, chart: &Chart) -> Binding {
    chart.binding(&random_values(rng, chart))
}
