//! The time transformation `h`, built pointwise from a seed `phi` on
//! `[-tau_star, 0]` by composing the inverse lag function:
//! for `l` in `[(k-1) tau_star, k tau_star)`, `h(l) = (theta^-1)^k (phi(l - k tau_star))`.

use crate::delay::{theta_inverse, DelaySpec, NewtonOptions};
use crate::error::{Error, Result};
use crate::seed::{check_admissible, SeedConstraints, SeedFunction};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

/// Boundary residual tolerance a seed must meet before a transform is built.
pub const ADMISSIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeTransform {
    pub delay: DelaySpec,
    pub seed: SeedFunction,
    pub tau_star: f64,
    pub newton: NewtonOptions,
}

/// The composition chain `h_0, ..., h_k` behind one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Levels {
    pub k: usize,
    pub levels: Vec<f64>,
}

impl Levels {
    pub fn h(&self) -> f64 {
        *self.levels.last().expect("at least the seed level")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub lambda: f64,
    pub h: f64,
    pub h_prime: f64,
    pub abel_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPrimeMax {
    pub max_value: f64,
    pub argmax: f64,
    pub max_abs_residual: f64,
    pub trace: Vec<TracePoint>,
}

/// Index `k` of the interval `[(k-1) tau_star, k tau_star)` holding `l`;
/// `k = 0` covers `[-tau_star, 0)`.
pub fn interval_index(lambda: f64, tau_star: f64) -> Result<usize> {
    if !(lambda >= -tau_star) || !lambda.is_finite() {
        return Err(Error::OutOfDomain {
            value: lambda,
            domain: format!("[-{tau_star}, inf)"),
        });
    }
    if lambda < 0.0 {
        return Ok(0);
    }
    Ok((lambda / tau_star).floor() as usize + 1)
}

impl TimeTransform {
    /// Builds a transform after checking the seed is admissible for `delay`
    /// (boundary residuals within `ADMISSIBILITY_TOL` and strictly increasing).
    pub fn new(delay: DelaySpec, seed: SeedFunction, tau_star: f64, newton: NewtonOptions) -> Result<Self> {
        let c = SeedConstraints::from_delay(&delay, tau_star)?;
        if (seed.tau_star() - tau_star).abs() > 1e-14 * tau_star {
            return Err(Error::InvalidInput(format!(
                "seed lives on [-{}, 0] but the transform uses tau_star = {tau_star}",
                seed.tau_star()
            )));
        }
        let report = check_admissible(&seed, &c, ADMISSIBILITY_TOL)?;
        if !report.admissible() {
            return Err(Error::NotAdmissible(format!(
                "|phi(0)| = {:.3e}, |phi(-tau*) + tau0| = {:.3e}, ratio residual = {:.3e}, monotone = {}",
                report.value_at_zero,
                report.value_at_start,
                report.derivative_ratio,
                report.monotonicity.is_monotone()
            )));
        }
        Ok(Self::new_unchecked(delay, seed, tau_star, newton))
    }

    /// Skips the admissibility check. Used to study deliberately broken seeds.
    pub fn new_unchecked(delay: DelaySpec, seed: SeedFunction, tau_star: f64, newton: NewtonOptions) -> Self {
        Self {
            delay,
            seed,
            tau_star,
            newton,
        }
    }

    pub fn interval_index(&self, lambda: f64) -> Result<usize> {
        interval_index(lambda, self.tau_star)
    }

    /// Composition chain using interval index `k`. `l - k tau_star` must lie
    /// in `[-tau_star, 0]`, so at a boundary both neighbouring indices work.
    pub fn levels_with_index(&self, lambda: f64, k: usize) -> Result<Levels> {
        let mu = lambda - k as f64 * self.tau_star;
        let slack = 1e-12 * self.tau_star.max(lambda.abs());
        if mu < -self.tau_star - slack || mu > slack {
            return Err(Error::OutOfDomain {
                value: lambda,
                domain: format!("interval index {k}"),
            });
        }
        let mu = mu.clamp(-self.tau_star, 0.0);
        let mut levels = Vec::with_capacity(k + 1);
        let mut h = self.seed.value(mu)?;
        levels.push(h);
        for j in 1..=k {
            let guess = h + self.delay.tau(h);
            h = theta_inverse(&self.delay, h, guess, self.newton).map_err(|e| e.at_level(j))?;
            levels.push(h);
        }
        Ok(Levels { k, levels })
    }

    pub fn levels(&self, lambda: f64) -> Result<Levels> {
        self.levels_with_index(lambda, self.interval_index(lambda)?)
    }

    pub fn eval_h(&self, lambda: f64) -> Result<f64> {
        Ok(self.levels(lambda)?.h())
    }

    pub fn eval_h_with_index(&self, lambda: f64, k: usize) -> Result<f64> {
        Ok(self.levels_with_index(lambda, k)?.h())
    }

    fn h_prime_from(&self, lambda: f64, lv: &Levels) -> Result<f64> {
        let mu = (lambda - lv.k as f64 * self.tau_star).clamp(-self.tau_star, 0.0);
        let mut d = self.seed.derivative(mu)?;
        for (j, &hj) in lv.levels.iter().enumerate().skip(1) {
            let td = self.delay.theta_dot(hj);
            if !(td > 0.0) {
                return Err(Error::DerivativeVanished {
                    at: hj,
                    value: td,
                    level: Some(j),
                });
            }
            d /= td;
        }
        Ok(d)
    }

    /// `h'(l) = phi'(l - k tau_star) / prod_{j=1..k} theta'(h_j)`.
    pub fn eval_h_prime(&self, lambda: f64) -> Result<f64> {
        let lv = self.levels(lambda)?;
        self.h_prime_from(lambda, &lv)
    }

    pub fn eval_h_prime_with_index(&self, lambda: f64, k: usize) -> Result<f64> {
        let lv = self.levels_with_index(lambda, k)?;
        self.h_prime_from(lambda, &lv)
    }

    /// `(h(l), h'(l))` from a single composition chain.
    pub fn eval_h_and_prime(&self, lambda: f64) -> Result<(f64, f64)> {
        let lv = self.levels(lambda)?;
        Ok((lv.h(), self.h_prime_from(lambda, &lv)?))
    }

    /// `h(l) - tau(h(l)) - h(l - tau_star)`, with `h(l - tau_star)` evaluated
    /// on its own rather than read off the chain.
    pub fn abel_residual(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::OutOfDomain {
                value: lambda,
                domain: "[0, inf)".into(),
            });
        }
        let h = self.eval_h(lambda)?;
        let back = self.eval_h(lambda - self.tau_star)?;
        Ok(self.delay.theta(h) - back)
    }

    /// Abel residual with `h(l)` taken from interval index `k`. On the natural
    /// branch the residual only measures root-finding error; at `l = 0` with
    /// `k = 0` it exposes a seed that misses `phi(0) = 0`.
    pub fn abel_residual_with_index(&self, lambda: f64, k: usize) -> Result<f64> {
        let h = self.eval_h_with_index(lambda, k)?;
        let back = self.eval_h(lambda - self.tau_star)?;
        Ok(self.delay.theta(h) - back)
    }

    /// `|h(k tau_star^-) - h(k tau_star^+)|`, evaluating both index branches.
    pub fn boundary_jump(&self, k: usize) -> Result<f64> {
        let l = k as f64 * self.tau_star;
        Ok((self.eval_h_with_index(l, k)? - self.eval_h_with_index(l, k + 1)?).abs())
    }

    pub fn trace_point(&self, lambda: f64) -> Result<TracePoint> {
        let (h, h_prime) = self.eval_h_and_prime(lambda)?;
        Ok(TracePoint {
            lambda,
            h,
            h_prime,
            abel_residual: self.abel_residual(lambda)?,
        })
    }

    /// Evaluates `h`, `h'` and the Abel residual on `n_grid` uniform points of
    /// `[0, horizon]`. Points are evaluated in parallel; ties for the maximum
    /// go to the smallest `l`, so the result does not depend on scheduling.
    pub fn max_h_prime(&self, horizon: f64, n_grid: usize) -> Result<HPrimeMax> {
        if !(horizon > 0.0) || n_grid < 2 {
            return Err(Error::InvalidInput(format!(
                "need horizon > 0 and at least 2 grid points, got {horizon} and {n_grid}"
            )));
        }
        let trace = (0..n_grid)
            .into_par_iter()
            .map(|i| self.trace_point(grid_point(horizon, n_grid, i)))
            .collect::<Result<Vec<_>>>()?;
        let mut best = 0;
        let mut max_abs_residual = 0.0f64;
        for (i, p) in trace.iter().enumerate() {
            if p.h_prime > trace[best].h_prime {
                best = i;
            }
            max_abs_residual = max_abs_residual.max(p.abel_residual.abs());
        }
        Ok(HPrimeMax {
            max_value: trace[best].h_prime,
            argmax: trace[best].lambda,
            max_abs_residual,
            trace,
        })
    }

    /// `l` with `|h(l) - t| <= tol`.
    ///
    /// Stepping `t` back through `theta` until it goes negative gives the
    /// interval index; the seed is inverted there and the result polished by
    /// safeguarded Newton on `h` itself.
    pub fn eval_h_inverse(&self, t: f64, tol: f64) -> Result<f64> {
        let tau0 = self.delay.tau0();
        if !(t >= -tau0) || !t.is_finite() {
            return Err(Error::OutOfDomain {
                value: t,
                domain: format!("[-{tau0}, inf)"),
            });
        }
        let ts = self.tau_star;
        let mut s = t;
        let mut k = 0usize;
        while s >= 0.0 {
            s = self.delay.theta(s);
            k += 1;
            if k > 100_000_000 {
                return Err(Error::NoConvergence {
                    iterations: k,
                    residual: s,
                    level: None,
                });
            }
        }
        let s = s.max(-tau0);
        let mu = solve_increasing(
            |m| Ok((self.seed.value(m)?, self.seed.derivative(m)?)),
            s,
            -ts,
            0.0,
            tol,
            self.newton.max_iter.max(100),
        )?;
        let lo = (k as f64 - 1.0) * ts;
        let hi = k as f64 * ts;
        let guess = (mu + k as f64 * ts).clamp(lo.max(-ts), hi);
        if k == 0 {
            return Ok(guess);
        }
        polish_increasing(|l| self.eval_h_and_prime(l), t, lo, hi, guess, tol, self.newton.max_iter.max(100))
    }
}

pub fn grid_point(horizon: f64, n_grid: usize, i: usize) -> f64 {
    if i + 1 == n_grid {
        horizon
    } else {
        horizon * i as f64 / (n_grid - 1) as f64
    }
}

/// Solves `f(x) = target` for increasing `f` on `[lo, hi]`, starting from the
/// bracket midpoint.
fn solve_increasing<F>(f: F, target: f64, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    polish_increasing(f, target, lo, hi, 0.5 * (lo + hi), tol, max_iter)
}

/// Newton on `f(x) = target` for increasing `f`, falling back to bisection
/// whenever a step leaves the current bracket.
fn polish_increasing<F>(f: F, target: f64, mut lo: f64, mut hi: f64, mut x: f64, tol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let mut last = f64::INFINITY;
    for _ in 0..max_iter {
        let (v, d) = f(x)?;
        let r = v - target;
        last = r;
        if r.abs() <= tol {
            return Ok(x);
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
            return Ok(x);
        }
        let step = x - r / d;
        x = if d > 0.0 && step > lo && step < hi {
            step
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: last,
        level: None,
    })
}

/// Writes `lambda,h,h_prime,abel_residual` rows at full double precision.
pub fn write_trace_csv<W: Write>(trace: &[TracePoint], mut w: W) -> io::Result<()> {
    writeln!(w, "lambda,h,h_prime,abel_residual")?;
    for p in trace {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            p.lambda, p.h, p.h_prime, p.abel_residual
        )?;
    }
    Ok(())
}
