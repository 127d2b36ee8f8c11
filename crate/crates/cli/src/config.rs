use crate::error::CliError;
use abel_core::delay::{DelaySpec, NewtonOptions};
use abel_core::seed::{
    affine_sinusoidal_seed, apply_t, exponential_seed, identity_seed, plain_exponential_seed, quadratic_seed,
    recover_parameter, SeedConstraints, SeedFunction, SeedParameter,
};
use abel_core::sim::History;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const DEFAULT_HORIZON: f64 = 100.0;
pub const DEFAULT_GRID_N: usize = 10_000;
pub const DEFAULT_ADMISSIBILITY_TOL: f64 = 1e-8;

/// One experiment. Sections are optional at parse time; each subcommand
/// asks for the ones it needs.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub tau_star: Option<f64>,
    pub horizon: Option<f64>,
    pub grid_n: Option<usize>,
    /// Tolerance on the boundary conditions of the admissible set.
    pub admissibility_tol: Option<f64>,
    pub delay: Option<DelaySpec>,
    pub constraints: Option<SeedConstraints>,
    pub seed: Option<SeedSpec>,
    #[serde(default)]
    pub seeds: Vec<NamedSeedSpec>,
    pub newton: Option<NewtonOptions>,
    pub simulation: Option<SimulationConfig>,
    pub search: Option<SearchConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A seed given by its parameter `nu` or by a closed-form selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedSpec {
    Zero {},
    /// Shifted Legendre coefficients of `nu`.
    Poly { coeffs: Vec<f64> },
    /// `nu = c exp(a l)`.
    Exponential { c: f64, a: f64 },
    /// `nu = c sin(omega l + phase)`.
    Sinusoidal {
        c: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Parameter of a named standard seed for the configured constraints.
    Standard { name: StandardSeed },
    /// A closed-form seed used directly.
    ClosedForm {
        form: ClosedForm,
        #[serde(default)]
        rate: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardSeed {
    Quadratic,
    Exponential,
    AffineSinusoidal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedForm {
    Identity,
    Quadratic,
    Exponential,
    PlainExponential,
    AffineSinusoidal,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSeedSpec {
    pub name: String,
    pub seed: SeedSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub a0: Vec<Vec<f64>>,
    pub a1: Vec<Vec<f64>>,
    pub history: History,
    pub lambda_end: f64,
    pub dt: f64,
    /// Step of the fixed-delay integration; defaults to `dt`.
    pub dlambda: Option<f64>,
    #[serde(default = "default_sim_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_n_check")]
    pub n_check: usize,
    #[serde(default)]
    pub halving: bool,
}

fn default_sim_tolerance() -> f64 {
    1e-4
}

fn default_n_check() -> usize {
    20_001
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub basis_dim: usize,
    pub budget: usize,
    #[serde(default)]
    pub seed_rng: u64,
    pub penalty_weight: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub horizon: Option<f64>,
    pub grid_n: Option<usize>,
    pub out: Option<PathBuf>,
}

fn missing(section: &str) -> CliError {
    CliError::Usage(format!("config is missing required section or key `{section}`"))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config parse error: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(h) = o.horizon {
            self.horizon = Some(h);
        }
        if let Some(n) = o.grid_n {
            self.grid_n = Some(n);
        }
        if let Some(d) = &o.out {
            self.output.dir = Some(d.clone());
        }
    }

    pub fn horizon(&self) -> Result<f64, CliError> {
        let h = self.horizon.unwrap_or(DEFAULT_HORIZON);
        if !(h > 0.0) || !h.is_finite() {
            return Err(CliError::Usage(format!("horizon must be positive and finite, got {h}")));
        }
        Ok(h)
    }

    pub fn grid_n(&self) -> Result<usize, CliError> {
        let n = self.grid_n.unwrap_or(DEFAULT_GRID_N);
        if n < 2 {
            return Err(CliError::Usage(format!("grid_n must be at least 2, got {n}")));
        }
        Ok(n)
    }

    pub fn admissibility_tol(&self) -> f64 {
        self.admissibility_tol.unwrap_or(DEFAULT_ADMISSIBILITY_TOL)
    }

    pub fn newton(&self) -> NewtonOptions {
        self.newton.unwrap_or_default()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output.dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn delay(&self) -> Result<&DelaySpec, CliError> {
        self.delay.as_ref().ok_or_else(|| missing("delay"))
    }

    pub fn tau_star(&self) -> Result<f64, CliError> {
        match (self.tau_star, &self.constraints) {
            (Some(t), Some(c)) if t != c.tau_star => Err(CliError::Usage(format!(
                "tau_star = {t} disagrees with constraints.tau_star = {}",
                c.tau_star
            ))),
            (Some(t), _) => Ok(t),
            (None, Some(c)) => Ok(c.tau_star),
            (None, None) => Err(missing("tau_star")),
        }
    }

    /// Explicit constraints when given, otherwise the ones implied by the delay.
    /// When both are present they must agree.
    pub fn constraints(&self) -> Result<SeedConstraints, CliError> {
        let tau_star = self.tau_star()?;
        let derived = match &self.delay {
            Some(d) => Some(SeedConstraints::from_delay(d, tau_star).map_err(CliError::from)?),
            None => None,
        };
        match (&self.constraints, derived) {
            (Some(c), Some(d)) => {
                let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
                if !close(c.tau0, d.tau0) || !close(c.tau0p, d.tau0p) {
                    return Err(CliError::Usage(format!(
                        "constraints (tau0 {}, tau0p {}) disagree with the delay (tau0 {}, tau0p {})",
                        c.tau0, c.tau0p, d.tau0, d.tau0p
                    )));
                }
                c.validate().map_err(CliError::from)?;
                Ok(*c)
            }
            (Some(c), None) => {
                c.validate().map_err(CliError::from)?;
                Ok(*c)
            }
            (None, Some(d)) => Ok(d),
            (None, None) => Err(missing("delay or constraints")),
        }
    }

    pub fn seed_spec(&self) -> Result<&SeedSpec, CliError> {
        self.seed.as_ref().ok_or_else(|| missing("seed"))
    }

    pub fn simulation(&self) -> Result<&SimulationConfig, CliError> {
        self.simulation.as_ref().ok_or_else(|| missing("simulation"))
    }

    pub fn search(&self) -> Result<&SearchConfig, CliError> {
        self.search.as_ref().ok_or_else(|| missing("search"))
    }

    /// The seed list for comparisons; names double as file stems.
    pub fn seed_list(&self) -> Result<&[NamedSeedSpec], CliError> {
        if self.seeds.is_empty() {
            return Err(missing("seeds"));
        }
        for (i, s) in self.seeds.iter().enumerate() {
            let ok = !s.name.is_empty() && s.name.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-');
            if !ok {
                return Err(CliError::Usage(format!(
                    "seed name {:?} must be non-empty and use only letters, digits, '_' or '-'",
                    s.name
                )));
            }
            if self.seeds[..i].iter().any(|t| t.name == s.name) {
                return Err(CliError::Usage(format!("duplicate seed name {:?}", s.name)));
            }
        }
        Ok(&self.seeds)
    }
}

impl SeedSpec {
    pub fn parameter(&self, c: &SeedConstraints) -> Result<Option<SeedParameter>, CliError> {
        let ts = c.tau_star;
        Ok(Some(match self {
            SeedSpec::Zero {} => SeedParameter::zero(ts),
            SeedSpec::Poly { coeffs } => SeedParameter::legendre(coeffs.clone(), ts),
            SeedSpec::Exponential { c: amp, a } => SeedParameter::exponential(*amp, *a, ts),
            SeedSpec::Sinusoidal { c: amp, omega, phase } => SeedParameter::sinusoidal(*amp, *omega, *phase, ts),
            SeedSpec::Standard { name } => recover_parameter(&standard_closed_form(*name, c))?,
            SeedSpec::ClosedForm { .. } => return Ok(None),
        }))
    }

    pub fn build(&self, c: &SeedConstraints) -> Result<SeedFunction, CliError> {
        if let SeedSpec::ClosedForm { form, rate } = self {
            let rate = rate.unwrap_or(abel_core::benchmarks::EXPONENTIAL_RATE);
            return Ok(match form {
                ClosedForm::Identity => identity_seed(c.tau_star),
                ClosedForm::Quadratic => quadratic_seed(c),
                ClosedForm::Exponential => exponential_seed(c, rate),
                ClosedForm::PlainExponential => plain_exponential_seed(c, rate),
                ClosedForm::AffineSinusoidal => affine_sinusoidal_seed(c),
            });
        }
        let nu = self.parameter(c)?.expect("non-closed-form seeds have a parameter");
        Ok(apply_t(&nu, c)?)
    }
}

fn standard_closed_form(name: StandardSeed, c: &SeedConstraints) -> SeedFunction {
    match name {
        StandardSeed::Quadratic => quadratic_seed(c),
        StandardSeed::Exponential => exponential_seed(c, abel_core::benchmarks::EXPONENTIAL_RATE),
        StandardSeed::AffineSinusoidal => affine_sinusoidal_seed(c),
    }
}

/// The `[seed]` section reproducing a polynomial parameter.
pub fn seed_fragment(coeffs: &[f64]) -> Result<String, CliError> {
    #[derive(Serialize)]
    struct Fragment {
        seed: SeedSpec,
    }
    let seed = if coeffs.is_empty() {
        SeedSpec::Zero {}
    } else {
        SeedSpec::Poly { coeffs: coeffs.to_vec() }
    };
    toml::to_string(&Fragment { seed }).map_err(|e| CliError::Io(format!("cannot serialize seed fragment: {e}")))
}
