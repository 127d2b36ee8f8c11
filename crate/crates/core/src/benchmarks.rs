//! Reference delay/seed catalogs: a fast sinusoidal delay whose derivative
//! nearly reaches one, and a slow sinusoidal delay.

use crate::delay::DelaySpec;
use crate::seed::{
    affine_sinusoidal_seed, exponential_seed, quadratic_seed, recover_parameter, SeedConstraints, SeedFunction,
    SeedParameter,
};
use std::f64::consts::PI;

/// A seed given both as its parameter `nu` and in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedSeed {
    pub name: &'static str,
    pub parameter: SeedParameter,
    pub closed_form: SeedFunction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub name: &'static str,
    pub delay: DelaySpec,
    pub tau_star: f64,
    /// Quadratic, exponential and affine-plus-sinusoidal seeds, in that order.
    pub seeds: Vec<NamedSeed>,
}

impl Benchmark {
    pub fn constraints(&self) -> SeedConstraints {
        SeedConstraints::from_delay(&self.delay, self.tau_star).expect("catalog delays are valid")
    }

    pub fn seed(&self, name: &str) -> Option<&NamedSeed> {
        self.seeds.iter().find(|s| s.name == name)
    }
}

/// Growth rate of the exponential seed.
pub const EXPONENTIAL_RATE: f64 = 2.0;

/// The three standard seeds for `delay` on `[-tau_star, 0]`.
pub fn standard_seeds(delay: &DelaySpec, tau_star: f64) -> Vec<NamedSeed> {
    let c = SeedConstraints::from_delay(delay, tau_star).expect("valid delay");
    [
        ("quadratic", quadratic_seed(&c)),
        ("exponential", exponential_seed(&c, EXPONENTIAL_RATE)),
        ("affine_sinusoidal", affine_sinusoidal_seed(&c)),
    ]
    .into_iter()
    .map(|(name, closed_form)| NamedSeed {
        name,
        parameter: recover_parameter(&closed_form).expect("closed forms have exact third derivatives"),
        closed_form,
    })
    .collect()
}

fn build(name: &'static str, delay: DelaySpec, tau_star: f64) -> Benchmark {
    let seeds = standard_seeds(&delay, tau_star);
    Benchmark {
        name,
        delay,
        tau_star,
        seeds,
    }
}

/// `tau(t) = g0 sin(2 pi t) + g1`, `g0 = 1/(2 pi) - 0.001`, `g1 = 1/(2 pi) + 0.001`,
/// with `tau_star = 1`, the period of the delay. `tau'` peaks at `1 - 0.002 pi`.
pub fn fast_sinusoid() -> Benchmark {
    let g0 = 1.0 / (2.0 * PI) - 0.001;
    let g1 = 1.0 / (2.0 * PI) + 0.001;
    build("fast_sinusoid", DelaySpec::sinusoidal(g0, 2.0 * PI, 0.0, g1), 1.0)
}

/// `tau(t) = 1 + 0.3 sin(t)` with `tau_star = 1`.
pub fn slow_sinusoid() -> Benchmark {
    build("slow_sinusoid", DelaySpec::sinusoidal(0.3, 1.0, 0.0, 1.0), 1.0)
}

pub fn all() -> Vec<Benchmark> {
    vec![fast_sinusoid(), slow_sinusoid()]
}
