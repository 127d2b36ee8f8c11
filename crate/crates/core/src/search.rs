//! Search over shifted-Legendre coefficients of the seed parameter for seeds
//! whose transformation keeps `max h'` small over a horizon.

use crate::delay::{DelaySpec, NewtonOptions};
use crate::error::{Error, Result};
use crate::positivity::{self, UnivariatePoly};
use crate::seed::{apply_t, SeedConstraints, SeedFunction, SeedParameter};
use crate::transform::TimeTransform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchProblem {
    pub delay: DelaySpec,
    pub constraints: SeedConstraints,
    pub basis_dim: usize,
    pub horizon: f64,
    pub grid_n: usize,
    /// Maximum number of coarse-grid objective evaluations.
    pub budget: usize,
    #[serde(default = "default_penalty")]
    pub penalty_weight: f64,
    #[serde(default)]
    pub newton: NewtonOptions,
}

fn default_penalty() -> f64 {
    1e3
}

impl SearchProblem {
    pub fn new(delay: DelaySpec, tau_star: f64, basis_dim: usize, horizon: f64, grid_n: usize, budget: usize) -> Result<Self> {
        let constraints = SeedConstraints::from_delay(&delay, tau_star)?;
        let p = Self {
            delay,
            constraints,
            basis_dim,
            horizon,
            grid_n,
            budget,
            penalty_weight: default_penalty(),
            newton: NewtonOptions::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.constraints.validate()?;
        if !(self.horizon > 0.0) || self.grid_n < 2 || !(self.penalty_weight > 0.0) {
            return Err(Error::InvalidInput(format!(
                "need horizon > 0, grid_n >= 2 and a positive penalty weight; got {}, {}, {}",
                self.horizon, self.grid_n, self.penalty_weight
            )));
        }
        Ok(())
    }

    pub fn coarse_grid(&self) -> usize {
        (self.grid_n / 10).max(2)
    }

    pub fn parameter(&self, coeffs: &[f64]) -> SeedParameter {
        if coeffs.is_empty() {
            SeedParameter::zero(self.constraints.tau_star)
        } else {
            SeedParameter::legendre(coeffs.to_vec(), self.constraints.tau_star)
        }
    }

    pub fn seed(&self, coeffs: &[f64]) -> Result<SeedFunction> {
        apply_t(&self.parameter(coeffs), &self.constraints)
    }
}

/// Outcome of one objective evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Evaluation {
    /// Seed certified increasing; value is the grid maximum of `h'`.
    Admissible { value: f64 },
    /// Seed not increasing; `min_derivative` is the sampled minimum of `phi'`.
    Violation { value: f64, min_derivative: f64 },
    /// The transform could not be evaluated.
    Failed { value: f64 },
}

impl Evaluation {
    pub fn value(&self) -> f64 {
        match *self {
            Evaluation::Admissible { value } | Evaluation::Violation { value, .. } | Evaluation::Failed { value } => value,
        }
    }

    pub fn is_admissible(&self) -> bool {
        matches!(self, Evaluation::Admissible { .. })
    }
}

/// Scores `coeffs` using `n_grid` points on `[0, horizon]`.
pub fn evaluate(coeffs: &[f64], p: &SearchProblem, n_grid: usize) -> Result<Evaluation> {
    if coeffs.len() != p.basis_dim {
        return Err(Error::InvalidInput(format!(
            "expected {} coefficients, got {}",
            p.basis_dim,
            coeffs.len()
        )));
    }
    let failed = Evaluation::Failed {
        value: 10.0 * p.penalty_weight,
    };
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Ok(failed);
    }
    let ts = p.constraints.tau_star;
    let phi = p.seed(coeffs)?;
    let dp = UnivariatePoly::new(
        phi.as_polynomial().expect("Legendre parameters give polynomial seeds").derivative(),
        [-ts, 0.0],
    );
    let certified = match positivity::sturm_positive_on_interval(&dp, -ts, 0.0) {
        Ok(r) => r.is_positive(),
        Err(Error::CoefficientOverflow { .. }) => false,
        Err(e) => return Err(e),
    };
    if !certified {
        let (min, _) = positivity::sampled_min(|l| dp.eval(l), -ts, 0.0, 1001);
        let min = min.min(0.0);
        return Ok(Evaluation::Violation {
            value: p.penalty_weight * (1.0 + min.abs()),
            min_derivative: min,
        });
    }
    let tt = TimeTransform::new_unchecked(p.delay.clone(), phi, ts, p.newton);
    Ok(match grid_max_h_prime(&tt, p.horizon, n_grid) {
        Ok(v) if v.is_finite() => Evaluation::Admissible { value: v },
        _ => failed,
    })
}

/// Search objective on the coarse grid.
pub fn objective(coeffs: &[f64], p: &SearchProblem) -> Result<f64> {
    Ok(evaluate(coeffs, p, p.coarse_grid())?.value())
}

/// Objective on the full grid, used for reporting.
pub fn objective_full(coeffs: &[f64], p: &SearchProblem) -> Result<f64> {
    Ok(evaluate(coeffs, p, p.grid_n)?.value())
}

fn grid_max_h_prime(tt: &TimeTransform, horizon: f64, n: usize) -> Result<f64> {
    use rayon::prelude::*;
    let vals = (0..n)
        .into_par_iter()
        .map(|i| tt.eval_h_prime(crate::transform::grid_point(horizon, n, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_coeffs: Vec<f64>,
    /// Full-grid objective of `best_coeffs`.
    pub best_value: f64,
    /// Full-grid objective of the zero parameter (the quadratic seed).
    pub baseline_value: f64,
    /// Coarse-grid evaluations spent by the simplex search.
    pub evaluations: usize,
    pub restarts: usize,
    /// Best coarse-grid value after each evaluation.
    pub history: Vec<f64>,
}

struct Tracker<'a> {
    p: &'a SearchProblem,
    evals: usize,
    history: Vec<f64>,
    best: f64,
    /// Every admissible point with its coarse value.
    admissible: Vec<(f64, Vec<f64>)>,
    least_violation: Option<(f64, Vec<f64>)>,
}

impl Tracker<'_> {
    fn exhausted(&self) -> bool {
        self.evals >= self.p.budget
    }

    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        let e = evaluate(x, self.p, self.p.coarse_grid())?;
        self.evals += 1;
        let v = e.value();
        match e {
            Evaluation::Admissible { value } => self.admissible.push((value, x.to_vec())),
            Evaluation::Violation { min_derivative, .. } => {
                if self.least_violation.as_ref().is_none_or(|(m, _)| min_derivative > *m) {
                    self.least_violation = Some((min_derivative, x.to_vec()));
                }
            }
            Evaluation::Failed { .. } => {}
        }
        self.best = self.best.min(v);
        self.history.push(self.best);
        Ok(v)
    }
}

/// Nelder–Mead from the zero parameter with simplex radius `0.1 tau0`,
/// restarted up to three times from the best vertex with halved radius.
/// The best few admissible points, plus the start, are re-scored on the full
/// grid and the winner reported.
pub fn optimize_seed(p: &SearchProblem, seed_rng: u64) -> Result<SearchResult> {
    p.validate()?;
    let n = p.basis_dim;
    if p.budget < n + 1 {
        return Err(Error::InvalidInput(format!(
            "budget {} is below basis_dim + 1 = {}",
            p.budget,
            n + 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed_rng);
    let mut t = Tracker {
        p,
        evals: 0,
        history: Vec::new(),
        best: f64::INFINITY,
        admissible: Vec::new(),
        least_violation: None,
    };
    let mut start = vec![0.0; n];
    let mut radius = 0.1 * p.constraints.tau0;
    let mut restarts = 0;
    let mut f_start = t.eval(&start)?;
    if n > 0 {
        for round in 0..4 {
            if t.exhausted() {
                break;
            }
            if round > 0 {
                restarts += 1;
                radius *= 0.5;
            }
            let signs: Vec<f64> = (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
            (f_start, start) = nelder_mead(&mut t, &start, f_start, radius, &signs)?;
        }
    }

    let baseline_value = objective_full(&vec![0.0; n], p)?;
    if t.admissible.is_empty() {
        let (least, coeffs) = t.least_violation.unwrap_or((f64::NEG_INFINITY, vec![0.0; n]));
        return Err(Error::NoAdmissiblePoint {
            least_violation: least,
            coeffs,
        });
    }
    let mut pool = t.admissible.clone();
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    pool.dedup_by(|a, b| a.1 == b.1);
    let mut best = (baseline_value, vec![0.0; n]);
    for (_, x) in pool.iter().take(5) {
        let e = evaluate(x, p, p.grid_n)?;
        if e.is_admissible() && e.value() < best.0 {
            best = (e.value(), x.clone());
        }
    }
    Ok(SearchResult {
        best_coeffs: best.1,
        best_value: best.0,
        baseline_value,
        evaluations: t.evals,
        restarts,
        history: t.history,
    })
}

fn nelder_mead(t: &mut Tracker, x0: &[f64], f0: f64, radius: f64, signs: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = x0.len();
    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
    simplex.push((f0, x0.to_vec()));
    for i in 0..n {
        if t.exhausted() {
            break;
        }
        let mut x = x0.to_vec();
        x[i] += radius * signs[i];
        let f = t.eval(&x)?;
        simplex.push((f, x));
    }
    if simplex.len() < n + 1 {
        return Ok(best_of(&simplex));
    }
    let combine = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a + s * (b - a)).collect() };

    while !t.exhausted() {
        simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
        let spread = simplex[n].0 - simplex[0].0;
        let size = simplex[1..]
            .iter()
            .map(|(_, x)| x.iter().zip(&simplex[0].1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread.abs() <= 1e-10 * (1.0 + simplex[0].0.abs()) && size <= 1e-8 * radius.max(1.0) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (_, x) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let xr = combine(&centroid, &worst.1, -1.0);
        let fr = t.eval(&xr)?;
        if fr < simplex[0].0 {
            if t.exhausted() {
                simplex[n] = (fr, xr);
                break;
            }
            let xe = combine(&centroid, &worst.1, -2.0);
            let fe = t.eval(&xe)?;
            simplex[n] = if fe < fr { (fe, xe) } else { (fr, xr) };
        } else if fr < simplex[n - 1].0 {
            simplex[n] = (fr, xr);
        } else {
            if t.exhausted() {
                break;
            }
            let (xc, fc) = if fr < worst.0 {
                let xc = combine(&centroid, &xr, 0.5);
                let fc = t.eval(&xc)?;
                (xc, fc)
            } else {
                let xc = combine(&centroid, &worst.1, 0.5);
                let fc = t.eval(&xc)?;
                (xc, fc)
            };
            if fc < fr.min(worst.0) {
                simplex[n] = (fc, xc);
            } else {
                let best = simplex[0].1.clone();
                for v in simplex.iter_mut().skip(1) {
                    if t.exhausted() {
                        break;
                    }
                    let x = combine(&best, &v.1, 0.5);
                    let f = t.eval(&x)?;
                    *v = (f, x);
                }
            }
        }
    }
    Ok(best_of(&simplex))
}

fn best_of(simplex: &[(f64, Vec<f64>)]) -> (f64, Vec<f64>) {
    simplex
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .cloned()
        .expect("non-empty simplex")
}
