//! Fixed-step RK4 integration of the linear delay system
//! `x'(t) = A0 x(t) + A1 x(t - tau(t))` and of its transformed counterpart
//! `y'(l) = h'(l) (A0 y(l) + A1 y(l - tau_star))`, with cubic Hermite dense
//! output for delayed reads.
//!
//! Steps are aligned with the points where the delayed argument crosses an
//! earlier derivative discontinuity, so each step sees a smooth right-hand
//! side.

use crate::delay::{theta_inverse_default, DelaySpec, NewtonOptions};
use crate::error::{Error, Result};
use crate::transform::TimeTransform;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

/// Initial function on the history interval, one component per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum History {
    Constant { value: Vec<f64> },
    /// Component `i` is `sum_k coeffs[i][k] t^k`.
    Polynomial { coeffs: Vec<Vec<f64>> },
    /// Component `i` is `offset[i] + amp[i] sin(omega t + phase)`.
    Sinusoidal {
        offset: Vec<f64>,
        amp: Vec<f64>,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl History {
    pub fn dim(&self) -> usize {
        match self {
            History::Constant { value } => value.len(),
            History::Polynomial { coeffs } => coeffs.len(),
            History::Sinusoidal { offset, .. } => offset.len(),
        }
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        match self {
            History::Constant { value } => DVector::from_column_slice(value),
            History::Polynomial { coeffs } => {
                DVector::from_iterator(coeffs.len(), coeffs.iter().map(|c| horner(c, t)))
            }
            History::Sinusoidal {
                offset,
                amp,
                omega,
                phase,
            } => {
                let s = (omega * t + phase).sin();
                DVector::from_iterator(offset.len(), offset.iter().zip(amp).map(|(o, a)| o + a * s))
            }
        }
    }

    pub fn derivative(&self, t: f64) -> DVector<f64> {
        match self {
            History::Constant { value } => DVector::zeros(value.len()),
            History::Polynomial { coeffs } => DVector::from_iterator(
                coeffs.len(),
                coeffs.iter().map(|c| {
                    c.iter()
                        .enumerate()
                        .skip(1)
                        .rev()
                        .fold(0.0, |acc, (k, ck)| acc * t + k as f64 * ck)
                }),
            ),
            History::Sinusoidal {
                amp, omega, phase, ..
            } => {
                let c = omega * (omega * t + phase).cos();
                DVector::from_iterator(amp.len(), amp.iter().map(|a| a * c))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let History::Sinusoidal { offset, amp, .. } = self {
            if offset.len() != amp.len() {
                return Err(Error::InvalidInput(
                    "sinusoidal history needs matching offset and amp lengths".into(),
                ));
            }
        }
        Ok(())
    }
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, ck| acc * t + ck)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearDDE {
    pub a0: DMatrix<f64>,
    pub a1: DMatrix<f64>,
    pub history: History,
}

impl LinearDDE {
    pub fn new(a0: DMatrix<f64>, a1: DMatrix<f64>, history: History) -> Result<Self> {
        let n = a0.nrows();
        if !a0.is_square() || a1.shape() != (n, n) || history.dim() != n {
            return Err(Error::InvalidInput(format!(
                "A0 is {:?}, A1 is {:?}, history has {} components",
                a0.shape(),
                a1.shape(),
                history.dim()
            )));
        }
        history.validate()?;
        Ok(Self { a0, a1, history })
    }

    pub fn scalar(a0: f64, a1: f64, history: History) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, a0), DMatrix::from_element(1, 1, a1), history)
    }

    pub fn dim(&self) -> usize {
        self.a0.nrows()
    }

    fn rhs(&self, x: &DVector<f64>, xd: &DVector<f64>) -> DVector<f64> {
        &self.a0 * x + &self.a1 * xd
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeAxis {
    Original,
    Transformed,
}

impl TimeAxis {
    pub fn label(self) -> &'static str {
        match self {
            TimeAxis::Original => "t",
            TimeAxis::Transformed => "lambda",
        }
    }
}

/// Samples with one-sided derivatives at every node; segment `[t_i, t_{i+1}]`
/// is interpolated by the cubic Hermite polynomial matching `x_i`, the right
/// derivative at `t_i`, `x_{i+1}` and the left derivative at `t_{i+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub axis: TimeAxis,
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub left: Vec<DVector<f64>>,
    pub right: Vec<DVector<f64>>,
}

impl Trajectory {
    fn new(axis: TimeAxis) -> Self {
        Self {
            axis,
            times: Vec::new(),
            states: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
        }
    }

    fn push(&mut self, t: f64, x: DVector<f64>, left: DVector<f64>, right: DVector<f64>) {
        debug_assert!(self.times.last().is_none_or(|&l| t > l));
        self.times.push(t);
        self.states.push(x);
        self.left.push(left);
        self.right.push(right);
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn covers(&self, t: f64) -> bool {
        !self.is_empty() && t >= self.start() && t <= self.end()
    }

    /// Dense output at `t`; exact at nodes.
    pub fn eval(&self, t: f64) -> Result<DVector<f64>> {
        if !self.covers(t) {
            return Err(Error::DomainMismatch {
                start: self.times.first().copied().unwrap_or(f64::NAN),
                end: self.times.last().copied().unwrap_or(f64::NAN),
                needed: t,
            });
        }
        let i = self.times.partition_point(|&s| s <= t);
        if i > 0 && self.times[i - 1] == t {
            return Ok(self.states[i - 1].clone());
        }
        let (a, b) = (i - 1, i);
        let h = self.times[b] - self.times[a];
        let s = (t - self.times[a]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Ok(&self.states[a] * h00 + &self.right[a] * (h10 * h) + &self.states[b] * h01 + &self.left[b] * (h11 * h))
    }

    /// Writes `t,x_1,...,x_n` (or `lambda,...`) rows at full double precision.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.states.first().map_or(0, |x| x.len());
        write!(w, "{}", self.axis.label())?;
        for i in 1..=n {
            write!(w, ",x_{i}")?;
        }
        writeln!(w)?;
        for (t, x) in self.times.iter().zip(&self.states) {
            write!(w, "{t:.16e}")?;
            for v in x.iter() {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// One delay equation `x' = g(t) f(x(t), x(lag(t)))` ready for integration.
struct Problem<'a, G, L, H, D> {
    dde: &'a LinearDDE,
    gain: G,
    lag: L,
    history: H,
    history_derivative: D,
    history_start: f64,
}

impl<G, L, H, D> Problem<'_, G, L, H, D>
where
    G: Fn(f64) -> Result<f64>,
    L: Fn(f64) -> f64,
    H: Fn(f64) -> Result<DVector<f64>>,
    D: Fn(f64) -> Result<DVector<f64>>,
{
    fn delayed(&self, traj: &Trajectory, step_start: f64, t: f64) -> Result<DVector<f64>> {
        let d = (self.lag)(t);
        let slack = 1e-12 * (1.0 + self.history_start.abs());
        if d < self.history_start - slack {
            return Err(Error::DelayBeyondHistory {
                t,
                delayed: d,
                history_start: self.history_start,
            });
        }
        if d <= 0.0 {
            return (self.history)(d.max(self.history_start));
        }
        if d > step_start {
            return Err(Error::Unsupported(format!(
                "delayed argument {d} at {t} falls inside the current step; reduce the step below the smallest delay"
            )));
        }
        traj.eval(d)
    }

    fn f(&self, traj: &Trajectory, step_start: f64, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let xd = self.delayed(traj, step_start, t)?;
        Ok(self.dde.rhs(x, &xd) * (self.gain)(t)?)
    }

    /// RK4 on `[0, t_end]`, splitting each interval between consecutive
    /// breakpoints into equal steps no longer than `dt`. History nodes are
    /// sampled on `[history_start, 0)` at spacing `dt` for output.
    fn integrate(&self, axis: TimeAxis, breakpoints: &[f64], t_end: f64, dt: f64) -> Result<Trajectory> {
        let mut traj = Trajectory::new(axis);
        let n_hist = (-self.history_start / dt).ceil().max(1.0) as usize;
        for i in 0..n_hist {
            let t = self.history_start * (1.0 - i as f64 / n_hist as f64);
            let dx = (self.history_derivative)(t)?;
            traj.push(t, (self.history)(t)?, dx.clone(), dx);
        }
        let mut t = 0.0;
        let mut x = (self.history)(0.0)?;
        let hist_slope = (self.history_derivative)(0.0)?;
        let mut k1 = self.f(&traj, 0.0, 0.0, &x)?;
        traj.push(0.0, x.clone(), hist_slope, k1.clone());

        let mut marks: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > 0.0 && b < t_end).collect();
        marks.push(t_end);
        for &stop in &marks {
            let n = ((stop - t) / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let seg_start = t;
            let h_seg = (stop - seg_start) / n as f64;
            for i in 1..=n {
                let t_next = if i == n { stop } else { seg_start + i as f64 * h_seg };
                let h = t_next - t;
                let half = t + 0.5 * h;
                let k2 = self.f(&traj, t, half, &(&x + &k1 * (0.5 * h)))?;
                let k3 = self.f(&traj, t, half, &(&x + &k2 * (0.5 * h)))?;
                let k4 = self.f(&traj, t, t_next, &(&x + &k3 * h))?;
                x += (&k1 + (&k2 + &k3) * 2.0 + &k4) * (h / 6.0);
                t = t_next;
                // The slope at the new node closes this segment's Hermite
                // interpolant and starts the next step.
                k1 = self.f(&traj, t, t, &x)?;
                traj.push(t, x.clone(), k1.clone(), k1.clone());
            }
        }
        Ok(traj)
    }
}

fn check_steps(t_end: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidInput(format!("need end > 0 and step > 0, got {t_end} and {dt}")));
    }
    Ok(())
}

/// Points `xi_0 = 0`, `xi_k = theta^-1(xi_{k-1})` up to `t_end`.
pub fn varying_breakpoints(delay: &DelaySpec, t_end: f64, newton: NewtonOptions) -> Result<Vec<f64>> {
    let mut out = vec![0.0];
    let mut xi = 0.0;
    while xi < t_end {
        let next = theta_inverse_default(delay, xi, newton)?;
        if !(next > xi) {
            return Err(Error::InvalidInput(format!(
                "breakpoint sequence stalls at {xi}: theta^-1 gives {next}"
            )));
        }
        xi = next;
        out.push(xi);
    }
    Ok(out)
}

/// Integrates `x'(t) = A0 x(t) + A1 x(t - tau(t))` on `[0, t_end]` with
/// history `x = zeta` on `[-tau(0), 0]`.
pub fn simulate_varying(dde: &LinearDDE, delay: &DelaySpec, t_end: f64, dt: f64) -> Result<Trajectory> {
    check_steps(t_end, dt)?;
    let tau0 = delay.tau0();
    if !(tau0 > 0.0) {
        return Err(Error::InvalidInput(format!("tau(0) must be positive, got {tau0}")));
    }
    let breakpoints = varying_breakpoints(delay, t_end, NewtonOptions::default());
    let p = Problem {
        dde,
        gain: |_| Ok(1.0),
        lag: |t| delay.theta(t),
        history: |t| Ok(dde.history.eval(t)),
        history_derivative: |t| Ok(dde.history.derivative(t)),
        history_start: -tau0,
    };
    match breakpoints {
        Ok(b) => p.integrate(TimeAxis::Original, &b, t_end, dt),
        // theta is not invertible; an unaligned run tells whether the delayed
        // argument also leaves the history interval.
        Err(e) => match p.integrate(TimeAxis::Original, &[], t_end, dt) {
            Err(inner @ Error::DelayBeyondHistory { .. }) => Err(inner),
            _ => Err(e),
        },
    }
}

/// Integrates `y'(l) = h'(l) (A0 y(l) + A1 y(l - tau_star))` on
/// `[0, lambda_end]` with history `y(l) = zeta(h(l))` on `[-tau_star, 0]`.
pub fn simulate_fixed(dde: &LinearDDE, tt: &TimeTransform, lambda_end: f64, dlambda: f64) -> Result<Trajectory> {
    check_steps(lambda_end, dlambda)?;
    let ts = tt.tau_star;
    let n_marks = (lambda_end / ts).ceil() as usize;
    let breakpoints: Vec<f64> = (0..=n_marks).map(|k| k as f64 * ts).collect();
    // On the history interval h is the seed itself.
    let p = Problem {
        dde,
        gain: |l| tt.eval_h_prime(l),
        lag: |l| l - ts,
        history: |l| Ok(dde.history.eval(tt.seed.value(l)?)),
        history_derivative: |l| {
            let h = tt.seed.value(l)?;
            Ok(dde.history.derivative(h) * tt.seed.derivative(l)?)
        },
        history_start: -ts,
    };
    p.integrate(TimeAxis::Transformed, &breakpoints, lambda_end, dlambda)
}

fn uniform(a: f64, b: f64, n: usize, i: usize) -> f64 {
    if n < 2 {
        a
    } else if i + 1 == n {
        b
    } else {
        a + (b - a) * i as f64 / (n - 1) as f64
    }
}

fn sup_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}

fn check_axes(x: &Trajectory, xbar: &Trajectory) -> Result<()> {
    if x.axis != TimeAxis::Original || xbar.axis != TimeAxis::Transformed {
        return Err(Error::InvalidInput(
            "expected an original-time trajectory and a transformed-time trajectory".into(),
        ));
    }
    Ok(())
}

/// `max ||x(h(l)) - y(l)||_inf` over `n_check` uniform `l` in `[0, l_end]`,
/// `l_end` being the end of `xbar`.
pub fn equivalence_error(x: &Trajectory, xbar: &Trajectory, tt: &TimeTransform, n_check: usize) -> Result<f64> {
    check_axes(x, xbar)?;
    let l_end = xbar.end();
    let needed = tt.eval_h(l_end)?;
    if !(xbar.start() <= 0.0) || !x.covers(0.0) || !x.covers(needed) {
        return Err(Error::DomainMismatch {
            start: x.start(),
            end: x.end(),
            needed,
        });
    }
    let mut worst = 0.0f64;
    for i in 0..n_check.max(2) {
        let l = uniform(0.0, l_end, n_check.max(2), i);
        let t = tt.eval_h(l)?.min(x.end());
        worst = worst.max(sup_diff(&x.eval(t)?, &xbar.eval(l)?));
    }
    Ok(worst)
}

/// `max ||x(t) - y(h^-1(t))||_inf` over `n_check` uniform `t` in
/// `[0, min(x end, h(l_end))]`.
pub fn converse_error(x: &Trajectory, xbar: &Trajectory, tt: &TimeTransform, n_check: usize, tol: f64) -> Result<f64> {
    check_axes(x, xbar)?;
    let t_end = x.end().min(tt.eval_h(xbar.end())?);
    let mut worst = 0.0f64;
    for i in 0..n_check.max(2) {
        let t = uniform(0.0, t_end, n_check.max(2), i);
        let l = tt.eval_h_inverse(t, tol)?.clamp(0.0, xbar.end());
        worst = worst.max(sup_diff(&x.eval(t)?, &xbar.eval(l)?));
    }
    Ok(worst)
}
