//! Time-varying delays `tau(t)`, the lag function `theta(t) = t - tau(t)` and
//! its inverse.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Closed-form delay catalog. Every entry carries its exact derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelaySpec {
    /// `tau(t) = b`.
    Constant { b: f64 },
    /// `tau(t) = a sin(omega t + phase) + b`.
    Sinusoidal {
        a: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
        b: f64,
    },
    /// `tau(t) = sum_k coeffs[k] t^k`.
    Polynomial { coeffs: Vec<f64> },
    /// Sum of the listed delays.
    Sum { terms: Vec<DelaySpec> },
}

impl DelaySpec {
    pub fn constant(c: f64) -> Self {
        DelaySpec::Constant { b: c }
    }

    pub fn sinusoidal(a: f64, omega: f64, phase: f64, b: f64) -> Self {
        DelaySpec::Sinusoidal { a, omega, phase, b }
    }

    pub fn tau(&self, t: f64) -> f64 {
        match self {
            DelaySpec::Constant { b } => *b,
            DelaySpec::Sinusoidal { a, omega, phase, b } => a * (omega * t + phase).sin() + b,
            DelaySpec::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            DelaySpec::Sum { terms } => terms.iter().map(|d| d.tau(t)).sum(),
        }
    }

    pub fn tau_dot(&self, t: f64) -> f64 {
        match self {
            DelaySpec::Constant { .. } => 0.0,
            DelaySpec::Sinusoidal { a, omega, phase, .. } => a * omega * (omega * t + phase).cos(),
            DelaySpec::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * t + k as f64 * c),
            DelaySpec::Sum { terms } => terms.iter().map(|d| d.tau_dot(t)).sum(),
        }
    }

    pub fn theta(&self, t: f64) -> f64 {
        t - self.tau(t)
    }

    pub fn theta_dot(&self, t: f64) -> f64 {
        1.0 - self.tau_dot(t)
    }

    /// `tau(0)`.
    pub fn tau0(&self) -> f64 {
        self.tau(0.0)
    }

    /// `tau'(0)`.
    pub fn tau0_dot(&self) -> f64 {
        self.tau_dot(0.0)
    }
}

pub fn eval_tau(spec: &DelaySpec, t: f64) -> f64 {
    spec.tau(t)
}

pub fn eval_tau_dot(spec: &DelaySpec, t: f64) -> f64 {
    spec.tau_dot(t)
}

pub fn eval_theta(spec: &DelaySpec, t: f64) -> f64 {
    spec.theta(t)
}

pub fn eval_theta_dot(spec: &DelaySpec, t: f64) -> f64 {
    spec.theta_dot(t)
}

/// Newton settings for inverting the lag function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonOptions {
    /// Absolute tolerance on `|theta(t) - s|`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
        }
    }
}

/// Solves `theta(t) = s` by Newton iteration from `guess`, falling back to
/// bisection whenever a step leaves the maintained bracket.
///
/// The bracket starts at `[s, guess]` (for `tau > 0`, `theta(s) < s`) and is
/// widened geometrically until it contains the root. Bracket growth counts
/// against `max_iter`.
pub fn theta_inverse(spec: &DelaySpec, s: f64, guess: f64, opts: NewtonOptions) -> Result<f64> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let f = |t: f64| spec.theta(t) - s;
    let no_conv = |residual: f64| Error::NoConvergence {
        iterations: opts.max_iter,
        residual,
        level: None,
    };

    let mut t = guess;
    let mut ft = f(t);
    if ft.abs() <= opts.tol {
        return Ok(t);
    }

    // Establish lo < root < hi with f(lo) < 0 < f(hi).
    let (mut lo, mut flo, mut hi, mut fhi);
    let mut step = spec.tau(s).abs().max(1.0);
    let mut budget = opts.max_iter;
    if ft < 0.0 {
        lo = t;
        flo = ft;
        hi = t + step;
        fhi = f(hi);
        while fhi < 0.0 {
            if budget == 0 {
                return Err(no_conv(ft.abs()));
            }
            budget -= 1;
            lo = hi;
            flo = fhi;
            step *= 2.0;
            hi += step;
            fhi = f(hi);
        }
    } else {
        hi = t;
        fhi = ft;
        lo = s.min(t - step);
        flo = f(lo);
        while flo > 0.0 {
            if budget == 0 {
                return Err(no_conv(ft.abs()));
            }
            budget -= 1;
            hi = lo;
            fhi = flo;
            step *= 2.0;
            lo -= step;
            flo = f(lo);
        }
    }
    if flo.abs() <= opts.tol {
        return Ok(lo);
    }
    if fhi.abs() <= opts.tol {
        return Ok(hi);
    }

    for _ in 0..opts.max_iter {
        let d = spec.theta_dot(t);
        if !(d > 0.0) {
            return Err(Error::DerivativeVanished {
                at: t,
                value: d,
                level: None,
            });
        }
        let mut next = t - ft / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        t = next;
        ft = f(t);
        if ft.abs() <= opts.tol {
            return Ok(t);
        }
        if ft < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        // Bracket collapsed to adjacent floats: t is the best representable root.
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
            return Ok(t);
        }
    }
    Err(no_conv(ft.abs()))
}

/// [`theta_inverse`] with the first-order predictor `s + tau(s)` as guess.
pub fn theta_inverse_default(spec: &DelaySpec, s: f64, opts: NewtonOptions) -> Result<f64> {
    theta_inverse(spec, s, s + spec.tau(s), opts)
}

/// Sampled check of the delay assumptions `tau > 0` and `tau' < 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub interval: [f64; 2],
    pub n_samples: usize,
    pub min_tau: f64,
    pub argmin_tau: f64,
    pub max_tau: f64,
    pub max_tau_dot: f64,
    pub argmax_tau_dot: f64,
    pub tau_positive: bool,
    pub tau_dot_below_one: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.tau_positive && self.tau_dot_below_one
    }

    /// Location of the worst sample for the first failing condition.
    pub fn worst_location(&self) -> Option<f64> {
        if !self.tau_positive {
            Some(self.argmin_tau)
        } else if !self.tau_dot_below_one {
            Some(self.argmax_tau_dot)
        } else {
            None
        }
    }
}

/// Grid check of `tau > 0` and `tau' < 1` with golden-section refinement of
/// the extreme samples. This is a sampled check, not a global proof.
pub fn validate_delay(spec: &DelaySpec, interval: [f64; 2], n_samples: usize) -> Result<ValidationReport> {
    if n_samples < 2 {
        return Err(Error::InvalidInput("validate_delay needs at least 2 samples".into()));
    }
    let [a, b] = interval;
    if !(b > a) {
        return Err(Error::InvalidInput(format!("empty interval [{a}, {b}]")));
    }
    let h = (b - a) / (n_samples - 1) as f64;
    let grid = |i: usize| if i + 1 == n_samples { b } else { a + h * i as f64 };

    let (mut min_tau, mut imin) = (f64::INFINITY, 0);
    let mut max_tau = f64::NEG_INFINITY;
    let (mut max_td, mut imax) = (f64::NEG_INFINITY, 0);
    for i in 0..n_samples {
        let t = grid(i);
        let v = spec.tau(t);
        let d = spec.tau_dot(t);
        if v < min_tau {
            min_tau = v;
            imin = i;
        }
        max_tau = max_tau.max(v);
        if d > max_td {
            max_td = d;
            imax = i;
        }
    }

    let window = |i: usize| (grid(i.saturating_sub(1)), grid((i + 1).min(n_samples - 1)));
    let (lo, hi) = window(imin);
    let (x, v) = golden_section_min(|t| spec.tau(t), lo, hi, 60);
    let (argmin_tau, min_tau) = if v < min_tau { (x, v) } else { (grid(imin), min_tau) };
    let (lo, hi) = window(imax);
    let (x, v) = golden_section_min(|t| -spec.tau_dot(t), lo, hi, 60);
    let (argmax_tau_dot, max_tau_dot) = if -v > max_td { (x, -v) } else { (grid(imax), max_td) };

    Ok(ValidationReport {
        interval,
        n_samples,
        min_tau,
        argmin_tau,
        max_tau,
        max_tau_dot,
        argmax_tau_dot,
        tau_positive: min_tau > 0.0,
        tau_dot_below_one: max_tau_dot < 1.0,
    })
}

/// Golden-section search for a local minimum of `f` on `[a, b]`.
pub(crate) fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
