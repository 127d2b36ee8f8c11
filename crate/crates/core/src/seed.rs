//! Seed functions on `[-tau_star, 0]` and the affine operator `T` mapping
//! square-integrable seed parameters onto them.
//!
//! For a parameter `nu`,
//!
//! ```text
//! (T nu)(l) = -tau0 + tau0 beta(l)
//!           + int_{-tau_star}^{0} K(l, eta) nu(eta) d eta
//!           + int_{-tau_star}^{l} (l - eta)^2 / 2 nu(eta) d eta
//! ```
//!
//! satisfies `phi(0) = 0`, `phi(-tau_star) = -tau0`,
//! `phi'(-tau_star) = (1 - tau0') phi'(0)` and `phi''' = nu`. Because `K` is
//! quadratic in `eta`, the first integral only needs the moments
//! `int eta nu` and `int eta^2 nu`.

use crate::delay::DelaySpec;
use crate::error::{Error, Result};
use crate::legendre;
use crate::poly::Polynomial;
use crate::positivity::{self, CertificateResult};
use crate::quadrature::{self, AdaptiveOptions, GaussLegendre};
use serde::{Deserialize, Serialize};

/// Boundary data a seed must match: `tau(0)`, `tau'(0)` and the fixed delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConstraints {
    pub tau0: f64,
    pub tau0p: f64,
    pub tau_star: f64,
}

impl SeedConstraints {
    pub fn new(tau0: f64, tau0p: f64, tau_star: f64) -> Result<Self> {
        let c = Self { tau0, tau0p, tau_star };
        c.validate()?;
        Ok(c)
    }

    pub fn from_delay(delay: &DelaySpec, tau_star: f64) -> Result<Self> {
        Self::new(delay.tau0(), delay.tau0_dot(), tau_star)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau0 > 0.0) || !(self.tau_star > 0.0) || !(self.tau0p < 1.0) {
            return Err(Error::InvalidInput(format!(
                "seed constraints need tau0 > 0, tau_star > 0, tau0' < 1; got {self:?}"
            )));
        }
        Ok(())
    }

    /// Coefficients `(b1, b2)` of `beta(l) = b1 (l + tau_star) + b2 (l + tau_star)^2`.
    fn beta_coeffs(&self) -> (f64, f64) {
        let Self { tau0p, tau_star, .. } = *self;
        (
            2.0 * (1.0 - tau0p) / ((2.0 - tau0p) * tau_star),
            tau0p / ((2.0 - tau0p) * tau_star * tau_star),
        )
    }

    /// Coefficients of `(l + tau_star)` and `(l + tau_star)^2` contributed by
    /// `int K(l, eta) nu(eta) d eta`, given the first and second moments of `nu`.
    fn kernel_coeffs(&self, m1: f64, m2: f64) -> (f64, f64) {
        let Self { tau0p, tau_star, .. } = *self;
        let k1 = (1.0 - tau0p) / (2.0 - tau0p) * (-m1 - m2 / tau_star);
        let k2 = -1.0 / (2.0 - tau0p)
            * (tau0p * m2 / (2.0 * tau_star * tau_star) - (1.0 - tau0p) * m1 / tau_star);
        (k1, k2)
    }
}

pub fn beta(l: f64, c: &SeedConstraints) -> f64 {
    let (b1, b2) = c.beta_coeffs();
    let x = l + c.tau_star;
    b1 * x + b2 * x * x
}

pub fn beta_prime(l: f64, c: &SeedConstraints) -> f64 {
    let (b1, b2) = c.beta_coeffs();
    b1 + 2.0 * b2 * (l + c.tau_star)
}

pub fn kernel_k(l: f64, eta: f64, c: &SeedConstraints) -> f64 {
    let SeedConstraints { tau0p, tau_star, .. } = *c;
    let x = l + tau_star;
    (1.0 - tau0p) / (2.0 - tau0p) * (-eta - eta * eta / tau_star) * x
        - 1.0 / (2.0 - tau0p)
            * (tau0p * eta * eta / (2.0 * tau_star * tau_star) - (1.0 - tau0p) * eta / tau_star)
            * x
            * x
}

pub fn kernel_k_dlambda(l: f64, eta: f64, c: &SeedConstraints) -> f64 {
    let SeedConstraints { tau0p, tau_star, .. } = *c;
    let x = l + tau_star;
    (1.0 - tau0p) / (2.0 - tau0p) * (-eta - eta * eta / tau_star)
        - 2.0 / (2.0 - tau0p)
            * (tau0p * eta * eta / (2.0 * tau_star * tau_star) - (1.0 - tau0p) * eta / tau_star)
            * x
}

/// Catalog of seed parameters `nu` on `[-tau_star, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NuKind {
    Zero,
    /// Coefficients in the shifted Legendre basis on `[-tau_star, 0]`.
    Poly { coeffs: Vec<f64> },
    /// `c exp(a l)`.
    Exponential { c: f64, a: f64 },
    /// `c sin(omega l + phase)`.
    Sinusoidal {
        c: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    Sum { terms: Vec<NuKind> },
}

impl NuKind {
    fn eval(&self, tau_star: f64, l: f64) -> f64 {
        match self {
            NuKind::Zero => 0.0,
            NuKind::Poly { coeffs } => legendre::eval(coeffs, tau_star, l),
            NuKind::Exponential { c, a } => c * (a * l).exp(),
            NuKind::Sinusoidal { c, omega, phase } => c * (omega * l + phase).sin(),
            NuKind::Sum { terms } => terms.iter().map(|t| t.eval(tau_star, l)).sum(),
        }
    }

    fn as_monomial(&self, tau_star: f64) -> Option<Polynomial> {
        match self {
            NuKind::Zero => Some(Polynomial::zero()),
            NuKind::Poly { coeffs } => Some(legendre::to_monomial(coeffs, tau_star)),
            NuKind::Sum { terms } => terms
                .iter()
                .map(|t| t.as_monomial(tau_star))
                .try_fold(Polynomial::zero(), |acc, p| p.map(|p| &acc + &p)),
            _ => None,
        }
    }
}

/// A seed parameter together with the interval length it lives on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedParameter {
    pub kind: NuKind,
    pub tau_star: f64,
}

impl SeedParameter {
    pub fn zero(tau_star: f64) -> Self {
        Self { kind: NuKind::Zero, tau_star }
    }

    pub fn legendre(coeffs: Vec<f64>, tau_star: f64) -> Self {
        Self {
            kind: NuKind::Poly { coeffs },
            tau_star,
        }
    }

    pub fn exponential(c: f64, a: f64, tau_star: f64) -> Self {
        Self {
            kind: NuKind::Exponential { c, a },
            tau_star,
        }
    }

    pub fn sinusoidal(c: f64, omega: f64, phase: f64, tau_star: f64) -> Self {
        Self {
            kind: NuKind::Sinusoidal { c, omega, phase },
            tau_star,
        }
    }

    pub fn eval(&self, l: f64) -> f64 {
        self.kind.eval(self.tau_star, l)
    }

    /// Exact monomial form in `l`, when `nu` is polynomial.
    pub fn as_polynomial(&self) -> Option<Polynomial> {
        self.kind.as_monomial(self.tau_star)
    }

    pub fn is_polynomial(&self) -> bool {
        self.as_polynomial().is_some()
    }
}

/// `amp * exp(rate * l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub amp: f64,
    pub rate: f64,
}

/// `amp * cos(freq * l + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosTerm {
    pub amp: f64,
    pub freq: f64,
    pub phase: f64,
}

/// Analytic seed `poly(l) + sum exp terms + sum cos terms`, with exact
/// derivatives of every order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormSeed {
    pub poly: Polynomial,
    pub exp_terms: Vec<ExpTerm>,
    pub cos_terms: Vec<CosTerm>,
    pub tau_star: f64,
}

impl ClosedFormSeed {
    pub fn polynomial(poly: Polynomial, tau_star: f64) -> Self {
        Self {
            poly,
            exp_terms: Vec::new(),
            cos_terms: Vec::new(),
            tau_star,
        }
    }

    pub fn derivative(&self, l: f64, order: u32) -> f64 {
        let p = self.poly.nth_derivative(order as usize).eval(l);
        let e: f64 = self
            .exp_terms
            .iter()
            .map(|t| t.amp * t.rate.powi(order as i32) * (t.rate * l).exp())
            .sum();
        // d^n/dl^n cos(w l + p) = w^n cos(w l + p + n pi / 2)
        let c: f64 = self
            .cos_terms
            .iter()
            .map(|t| {
                let shift = order as f64 * std::f64::consts::FRAC_PI_2;
                t.amp * t.freq.powi(order as i32) * (t.freq * l + t.phase + shift).cos()
            })
            .sum();
        p + e + c
    }

    /// `phi'''` as a seed parameter.
    pub fn third_derivative(&self) -> SeedParameter {
        let mut terms = Vec::new();
        let p3 = self.poly.nth_derivative(3);
        if !p3.is_zero() {
            let n = p3.degree().map_or(0, |d| d + 1);
            let coeffs = legendre::project(|l| p3.eval(l), n, self.tau_star);
            terms.push(NuKind::Poly { coeffs });
        }
        for t in &self.exp_terms {
            terms.push(NuKind::Exponential {
                c: t.amp * t.rate.powi(3),
                a: t.rate,
            });
        }
        for t in &self.cos_terms {
            terms.push(NuKind::Sinusoidal {
                c: t.amp * t.freq.powi(3),
                omega: t.freq,
                phase: t.phase,
            });
        }
        let kind = match terms.len() {
            0 => NuKind::Zero,
            1 => terms.pop().unwrap(),
            _ => NuKind::Sum { terms },
        };
        SeedParameter {
            kind,
            tau_star: self.tau_star,
        }
    }

    /// Exact monomial form when the seed has no transcendental terms.
    pub fn as_polynomial(&self) -> Option<Polynomial> {
        (self.exp_terms.is_empty() && self.cos_terms.is_empty()).then(|| self.poly.clone())
    }
}

/// `T nu`, evaluated either from an exact polynomial or by quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct TImage {
    pub parameter: SeedParameter,
    pub constraints: SeedConstraints,
    pub quadrature: AdaptiveOptions,
    /// `(l + tau_star)` and `(l + tau_star)^2` coefficients of the affine part.
    affine: (f64, f64),
    exact: Option<Polynomial>,
}

impl TImage {
    pub fn exact_polynomial(&self) -> Option<&Polynomial> {
        self.exact.as_ref()
    }

    fn affine_value(&self, l: f64) -> f64 {
        let c = &self.constraints;
        let x = l + c.tau_star;
        -c.tau0 + c.tau0 * beta(l, c) + self.affine.0 * x + self.affine.1 * x * x
    }

    fn affine_derivative(&self, l: f64) -> f64 {
        let c = &self.constraints;
        c.tau0 * beta_prime(l, c) + self.affine.0 + 2.0 * self.affine.1 * (l + c.tau_star)
    }

    /// `int_{-tau_star}^{l} (l - eta)^p / p! nu(eta) d eta`.
    fn volterra(&self, l: f64, power: i32) -> Result<f64> {
        let ts = self.constraints.tau_star;
        let fact = if power == 2 { 2.0 } else { 1.0 };
        quadrature::adaptive(
            |eta| (l - eta).powi(power) / fact * self.parameter.eval(eta),
            -ts,
            l,
            self.quadrature,
        )
    }
}

/// A seed function on `[-tau_star, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedFunction {
    ClosedForm(ClosedFormSeed),
    TImage(Box<TImage>),
}

impl SeedFunction {
    pub fn tau_star(&self) -> f64 {
        match self {
            SeedFunction::ClosedForm(s) => s.tau_star,
            SeedFunction::TImage(t) => t.constraints.tau_star,
        }
    }

    pub fn value(&self, l: f64) -> Result<f64> {
        match self {
            SeedFunction::ClosedForm(s) => Ok(s.derivative(l, 0)),
            SeedFunction::TImage(t) => match &t.exact {
                Some(p) => Ok(p.eval(l)),
                None => Ok(t.affine_value(l) + t.volterra(l, 2)?),
            },
        }
    }

    pub fn derivative(&self, l: f64) -> Result<f64> {
        match self {
            SeedFunction::ClosedForm(s) => Ok(s.derivative(l, 1)),
            SeedFunction::TImage(t) => match &t.exact {
                Some(p) => Ok(p.derivative().eval(l)),
                None => Ok(t.affine_derivative(l) + t.volterra(l, 1)?),
            },
        }
    }

    /// Exact monomial form of `phi`, when available.
    pub fn as_polynomial(&self) -> Option<Polynomial> {
        match self {
            SeedFunction::ClosedForm(s) => s.as_polynomial(),
            SeedFunction::TImage(t) => t.exact.clone(),
        }
    }

    pub fn closed_form(&self) -> Option<&ClosedFormSeed> {
        match self {
            SeedFunction::ClosedForm(s) => Some(s),
            SeedFunction::TImage(_) => None,
        }
    }
}

impl From<ClosedFormSeed> for SeedFunction {
    fn from(s: ClosedFormSeed) -> Self {
        SeedFunction::ClosedForm(s)
    }
}

fn check_tau_star(nu: &SeedParameter, c: &SeedConstraints) -> Result<()> {
    c.validate()?;
    if (nu.tau_star - c.tau_star).abs() > 1e-14 * c.tau_star {
        return Err(Error::InvalidInput(format!(
            "parameter lives on [-{}, 0] but constraints use tau_star = {}",
            nu.tau_star, c.tau_star
        )));
    }
    Ok(())
}

/// `T nu` with default quadrature settings.
pub fn apply_t(nu: &SeedParameter, c: &SeedConstraints) -> Result<SeedFunction> {
    apply_t_with(nu, c, AdaptiveOptions::default())
}

/// `T nu`. Polynomial parameters give an exact polynomial seed of degree
/// `deg nu + 3`; other parameters are integrated adaptively on evaluation.
pub fn apply_t_with(nu: &SeedParameter, c: &SeedConstraints, quad: AdaptiveOptions) -> Result<SeedFunction> {
    check_tau_star(nu, c)?;
    let ts = c.tau_star;
    let (m1, m2, exact) = match nu.as_polynomial() {
        Some(p) => {
            let x = Polynomial::new(vec![0.0, 1.0]);
            let m1 = (&x * &p).integrate(-ts, 0.0);
            let m2 = (&(&x * &x) * &p).integrate(-ts, 0.0);
            // Repeated integration from -tau_star equals the (l - eta)^2 / 2 kernel.
            let i3 = p
                .antiderivative_from(-ts)
                .antiderivative_from(-ts)
                .antiderivative_from(-ts);
            (m1, m2, Some(i3))
        }
        None => {
            let m1 = quadrature::adaptive(|e| e * nu.eval(e), -ts, 0.0, quad)?;
            let m2 = quadrature::adaptive(|e| e * e * nu.eval(e), -ts, 0.0, quad)?;
            (m1, m2, None)
        }
    };
    let affine = c.kernel_coeffs(m1, m2);
    let exact = exact.map(|i3| {
        let (b1, b2) = c.beta_coeffs();
        let x = Polynomial::new(vec![ts, 1.0]);
        let x2 = &x * &x;
        let base = &Polynomial::constant(-c.tau0)
            + &(&x.scale(c.tau0 * b1 + affine.0) + &x2.scale(c.tau0 * b2 + affine.1));
        &base + &i3
    });
    let image = TImage {
        parameter: nu.clone(),
        constraints: *c,
        quadrature: quad,
        affine,
        exact,
    };
    if image.exact.is_none() {
        // Surface quadrature trouble at construction rather than mid-transform.
        let probe = SeedFunction::TImage(Box::new(image.clone()));
        probe.value(0.0)?;
        probe.derivative(-ts)?;
    }
    Ok(SeedFunction::TImage(Box::new(image)))
}

/// `(T nu)'(l)` evaluated straight from the kernel form,
/// `tau0 beta'(l) + int dK/dl(l, eta) nu(eta) + int_{-tau_star}^{l} (l - eta) nu(eta)`.
///
/// Polynomial `nu` uses a 30-point Gauss–Legendre rule (exact up to degree
/// 57 in `nu`); other parameters use adaptive quadrature.
pub fn apply_t_prime(nu: &SeedParameter, c: &SeedConstraints, l: f64) -> Result<f64> {
    check_tau_star(nu, c)?;
    let ts = c.tau_star;
    if !(-ts..=0.0).contains(&l) {
        return Err(Error::OutOfDomain {
            value: l,
            domain: format!("[-{ts}, 0]"),
        });
    }
    let kernel = |e: f64| kernel_k_dlambda(l, e, c) * nu.eval(e);
    let volterra = |e: f64| (l - e) * nu.eval(e);
    let (a, b) = if nu.is_polynomial() {
        let rule = GaussLegendre::thirty();
        (rule.integrate(kernel, -ts, 0.0), rule.integrate(volterra, -ts, l))
    } else {
        let opts = AdaptiveOptions::default();
        (
            quadrature::adaptive(kernel, -ts, 0.0, opts)?,
            quadrature::adaptive(volterra, -ts, l, opts)?,
        )
    };
    Ok(c.tau0 * beta_prime(l, c) + a + b)
}

/// `(T nu)(l)` evaluated straight from the kernel form by quadrature.
pub fn apply_t_kernel_form(nu: &SeedParameter, c: &SeedConstraints, l: f64) -> Result<f64> {
    check_tau_star(nu, c)?;
    let ts = c.tau_star;
    let opts = AdaptiveOptions::default();
    let a = quadrature::adaptive(|e| kernel_k(l, e, c) * nu.eval(e), -ts, 0.0, opts)?;
    let b = quadrature::adaptive(|e| (l - e).powi(2) / 2.0 * nu.eval(e), -ts, l, opts)?;
    Ok(-c.tau0 + c.tau0 * beta(l, c) + a + b)
}

/// The `nu = 0` seed `-tau0 + tau0 beta(l)`, a quadratic.
pub fn quadratic_seed(c: &SeedConstraints) -> SeedFunction {
    let (b1, b2) = c.beta_coeffs();
    let x = Polynomial::new(vec![c.tau_star, 1.0]);
    let p = &Polynomial::constant(-c.tau0) + &(&x.scale(c.tau0 * b1) + &(&x * &x).scale(c.tau0 * b2));
    ClosedFormSeed::polynomial(p, c.tau_star).into()
}

/// `phi(l) = l`, admissible for constant delay `tau0 = tau_star`.
pub fn identity_seed(tau_star: f64) -> SeedFunction {
    ClosedFormSeed::polynomial(Polynomial::new(vec![0.0, 1.0]), tau_star).into()
}

/// Admissible exponential seed
/// `C (exp(rate l) - 1) + q l (l + tau_star)`, `C = tau0 / (1 - exp(-rate tau_star))`.
///
/// The quadratic term enforces the derivative-ratio condition; its third
/// derivative is `C rate^3 exp(rate l)`.
pub fn exponential_seed(c: &SeedConstraints, rate: f64) -> SeedFunction {
    let ts = c.tau_star;
    let amp = c.tau0 / (1.0 - (-rate * ts).exp());
    let q = amp * rate * ((-rate * ts).exp() - (1.0 - c.tau0p)) / (ts * (2.0 - c.tau0p));
    ClosedFormSeed {
        poly: Polynomial::new(vec![-amp, q * ts, q]),
        exp_terms: vec![ExpTerm { amp, rate }],
        cos_terms: Vec::new(),
        tau_star: ts,
    }
    .into()
}

/// `C (exp(rate l) - 1)` without the ratio correction. Only admissible when
/// `exp(-rate tau_star) = 1 - tau0'`.
pub fn plain_exponential_seed(c: &SeedConstraints, rate: f64) -> SeedFunction {
    let amp = c.tau0 / (1.0 - (-rate * c.tau_star).exp());
    ClosedFormSeed {
        poly: Polynomial::constant(-amp),
        exp_terms: vec![ExpTerm { amp, rate }],
        cos_terms: Vec::new(),
        tau_star: c.tau_star,
    }
    .into()
}

/// Amplitudes `(lambda1, slope)` of the admissible affine-plus-cosine seed.
pub fn affine_sinusoidal_amplitudes(c: &SeedConstraints) -> (f64, f64) {
    let pi = std::f64::consts::PI;
    let lambda1 = 2.0 * c.tau0 * c.tau0p / (2.0 * c.tau0p + pi * (1.0 - c.tau0p));
    let slope = (c.tau0 - lambda1) / c.tau_star;
    (lambda1, slope)
}

/// Admissible affine-plus-sinusoidal seed
/// `-tau0 + s (l + tau_star) + L1 (1 - cos(w (l + tau_star)))`, `w = pi / (2 tau_star)`,
/// with `L1`, `s` solving `phi(0) = 0` and the derivative-ratio condition.
pub fn affine_sinusoidal_seed(c: &SeedConstraints) -> SeedFunction {
    let ts = c.tau_star;
    let w = std::f64::consts::PI / (2.0 * ts);
    let (l1, s) = affine_sinusoidal_amplitudes(c);
    ClosedFormSeed {
        poly: Polynomial::new(vec![-c.tau0 + s * ts + l1, s]),
        exp_terms: Vec::new(),
        cos_terms: vec![CosTerm {
            amp: -l1,
            freq: w,
            phase: w * ts,
        }],
        tau_star: ts,
    }
    .into()
}

/// Recovers `nu = phi'''`. Needs an exact third derivative: closed forms and
/// polynomial `T` images qualify, quadrature-backed images do not.
pub fn recover_parameter(phi: &SeedFunction) -> Result<SeedParameter> {
    match phi {
        SeedFunction::ClosedForm(s) => Ok(s.third_derivative()),
        SeedFunction::TImage(t) => match &t.exact {
            Some(p) => {
                let p3 = p.nth_derivative(3);
                let ts = t.constraints.tau_star;
                let n = p3.degree().map_or(0, |d| d + 1);
                if n == 0 {
                    return Ok(SeedParameter::zero(ts));
                }
                Ok(SeedParameter::legendre(legendre::project(|l| p3.eval(l), n, ts), ts))
            }
            None => Err(Error::Unsupported(
                "third derivative of a quadrature-backed seed is not available exactly".into(),
            )),
        },
    }
}

/// How monotonicity of a seed was decided.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MonotonicityCheck {
    /// Exact Sturm certificate on the polynomial `phi'`.
    Certified { result: CertificateResult },
    /// Grid minimum of `phi'` (non-polynomial seeds, or exact path overflowed).
    Sampled { min: f64, argmin: f64, samples: usize },
}

impl MonotonicityCheck {
    pub fn is_monotone(&self) -> bool {
        match self {
            MonotonicityCheck::Certified { result } => matches!(result, CertificateResult::Positive),
            MonotonicityCheck::Sampled { min, .. } => *min > 0.0,
        }
    }

    /// A point where `phi' <= 0`, if one was found.
    pub fn witness(&self) -> Option<f64> {
        match self {
            MonotonicityCheck::Certified {
                result: CertificateResult::NotPositive { witness, .. },
            } => Some(*witness),
            MonotonicityCheck::Sampled { min, argmin, .. } if *min <= 0.0 => Some(*argmin),
            _ => None,
        }
    }

    /// Smallest observed `phi'` (exact certificates report the witness value).
    pub fn min_derivative(&self) -> Option<f64> {
        match self {
            MonotonicityCheck::Certified {
                result: CertificateResult::NotPositive { value, .. },
            } => Some(*value),
            MonotonicityCheck::Sampled { min, .. } => Some(*min),
            _ => None,
        }
    }
}

/// Number of grid points used when monotonicity has to be sampled.
pub const MONOTONICITY_SAMPLES: usize = 10_001;

/// Decides whether `phi' > 0` on `[-tau_star, 0]`.
pub fn check_monotone(phi: &SeedFunction) -> Result<MonotonicityCheck> {
    let ts = phi.tau_star();
    if let Some(p) = phi.as_polynomial() {
        let dp = positivity::UnivariatePoly::new(p.derivative(), [-ts, 0.0]);
        match positivity::sturm_positive_on_interval(&dp, -ts, 0.0) {
            Ok(result) => return Ok(MonotonicityCheck::Certified { result }),
            Err(Error::CoefficientOverflow { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let failure = std::cell::RefCell::new(None);
    let (min, argmin) = positivity::sampled_min(
        |l| match phi.derivative(l) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        -ts,
        0.0,
        MONOTONICITY_SAMPLES,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(MonotonicityCheck::Sampled {
        min,
        argmin,
        samples: MONOTONICITY_SAMPLES,
    })
}

/// Residuals of the admissible-set conditions plus the monotonicity verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// `|phi(0)|`
    pub value_at_zero: f64,
    /// `|phi(-tau_star) + tau0|`
    pub value_at_start: f64,
    /// `|phi'(0) (1 - tau0') - phi'(-tau_star)|`
    pub derivative_ratio: f64,
    pub tol: f64,
    pub monotonicity: MonotonicityCheck,
}

impl AdmissibilityReport {
    pub fn boundary_ok(&self) -> bool {
        self.value_at_zero <= self.tol && self.value_at_start <= self.tol && self.derivative_ratio <= self.tol
    }

    pub fn admissible(&self) -> bool {
        self.boundary_ok() && self.monotonicity.is_monotone()
    }
}

pub fn check_admissible(phi: &SeedFunction, c: &SeedConstraints, tol: f64) -> Result<AdmissibilityReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let ts = c.tau_star;
    let d0 = phi.derivative(0.0)?;
    let dstart = phi.derivative(-ts)?;
    Ok(AdmissibilityReport {
        value_at_zero: phi.value(0.0)?.abs(),
        value_at_start: (phi.value(-ts)? + c.tau0).abs(),
        derivative_ratio: (d0 * (1.0 - c.tau0p) - dstart).abs(),
        tol,
        monotonicity: check_monotone(phi)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn c(tau0: f64, tau0p: f64, tau_star: f64) -> SeedConstraints {
        SeedConstraints::new(tau0, tau0p, tau_star).unwrap()
    }

    #[test]
    fn constraints_are_validated() {
        assert!(SeedConstraints::new(0.0, 0.3, 1.0).is_err());
        assert!(SeedConstraints::new(1.0, 1.0, 1.0).is_err());
        assert!(SeedConstraints::new(1.0, 0.3, -1.0).is_err());
    }

    #[test]
    fn beta_values() {
        let k = c(1.0, 0.3, 1.0);
        assert_eq!(beta(-1.0, &k), 0.0);
        assert_relative_eq!(beta(0.0, &k), 1.0, epsilon = 1e-15);
        let want = (1.4 / 1.7) * 0.5 + (0.3 / 1.7) * 0.25;
        assert_relative_eq!(beta(-0.5, &k), want, epsilon = 1e-15);
        assert_relative_eq!(want, 0.455_882_352_941_176_5, epsilon = 1e-15);
    }

    #[test]
    fn kernel_boundary_identities() {
        let k = c(0.8, -0.4, 1.7);
        for i in 0..=20 {
            let eta = -1.7 * i as f64 / 20.0;
            assert_eq!(kernel_k(-1.7, eta, &k), 0.0);
            assert!((kernel_k(0.0, eta, &k) + eta * eta / 2.0).abs() < 1e-15);
            let want = (1.0 + 0.4) / (2.0 + 0.4) * (-eta - eta * eta / 1.7);
            assert!((kernel_k_dlambda(-1.7, eta, &k) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_parameter_gives_quadratic_seed() {
        let k = c(1.0, 0.3, 1.0);
        let t = apply_t(&SeedParameter::zero(1.0), &k).unwrap();
        let q = quadratic_seed(&k);
        for i in 0..=100 {
            let l = -(i as f64) / 100.0;
            let want = -1.0 + beta(l, &k);
            assert!((t.value(l).unwrap() - want).abs() < 1e-14);
            assert!((q.value(l).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn quadratic_seed_boundary_values() {
        let k = c(1.0, 0.3, 1.0);
        let q = quadratic_seed(&k);
        assert!(q.value(0.0).unwrap().abs() < 1e-15);
        assert_relative_eq!(q.value(-1.0).unwrap(), -1.0, epsilon = 1e-15);
        let ratio = q.derivative(-1.0).unwrap() / q.derivative(0.0).unwrap();
        assert_relative_eq!(ratio, 0.7, epsilon = 1e-14);
        assert_relative_eq!(q.derivative(-1.0).unwrap(), 1.4 / 1.7, epsilon = 1e-14);
        assert_relative_eq!(q.derivative(0.0).unwrap(), 2.0 / 1.7, epsilon = 1e-14);
        assert_eq!(q.closed_form().unwrap().derivative(-0.3, 3), 0.0);
    }

    #[test]
    fn quadratic_seed_is_identity_for_matched_constant_delay() {
        let q = quadratic_seed(&c(2.0, 0.0, 2.0));
        for &l in &[-2.0, -1.3, -0.2, 0.0] {
            assert!((q.value(l).unwrap() - l).abs() < 1e-15);
        }
    }

    #[test]
    fn t_prime_of_zero_parameter_at_endpoints() {
        let k = c(1.3, 0.3, 0.9);
        let nu = SeedParameter::zero(0.9);
        let start = apply_t_prime(&nu, &k, -0.9).unwrap();
        let end = apply_t_prime(&nu, &k, 0.0).unwrap();
        assert_relative_eq!(start, 1.3 * 2.0 * 0.7 / (1.7 * 0.9), epsilon = 1e-14);
        assert_relative_eq!(end, 1.3 * 2.0 / (1.7 * 0.9), epsilon = 1e-14);
        assert_relative_eq!(start / end, 0.7, epsilon = 1e-14);
    }

    #[test]
    fn polynomial_images_match_kernel_quadrature() {
        let k = c(0.7, -0.2, 1.3);
        let nu = SeedParameter::legendre(vec![0.4, -0.8, 0.3, 0.9, -0.5], 1.3);
        let phi = apply_t(&nu, &k).unwrap();
        assert!(phi.as_polynomial().is_some());
        for i in 0..=12 {
            let l = -1.3 * i as f64 / 12.0;
            let direct = apply_t_kernel_form(&nu, &k, l).unwrap();
            assert!((phi.value(l).unwrap() - direct).abs() < 1e-12);
            let dp = apply_t_prime(&nu, &k, l).unwrap();
            assert!((phi.derivative(l).unwrap() - dp).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_parameter_maps_onto_exponential_seed() {
        let g0 = 1.0 / (2.0 * PI) - 0.001;
        let g1 = 1.0 / (2.0 * PI) + 0.001;
        let k = c(g1, 2.0 * PI * g0, 1.0);
        let e2 = 1.0 - (-2.0f64).exp();
        let nu = SeedParameter::exponential(8.0 * g1 / e2, 2.0, 1.0);
        let phi = apply_t(&nu, &k).unwrap();
        let closed = exponential_seed(&k, 2.0);
        let mut worst = 0.0f64;
        for i in 0..=200 {
            let l = -(i as f64) / 200.0;
            worst = worst.max((phi.value(l).unwrap() - closed.value(l).unwrap()).abs());
        }
        assert!(worst <= 1e-8, "{worst}");
    }

    #[test]
    fn uncorrected_exponential_fails_the_ratio_condition() {
        let k = c(1.0, 0.3, 1.0);
        let r = check_admissible(&plain_exponential_seed(&k, 2.0), &k, 1e-8).unwrap();
        assert!(r.value_at_zero < 1e-14 && r.value_at_start < 1e-14);
        assert!(r.derivative_ratio > 0.1);
        assert!(!r.admissible());
        assert!(check_admissible(&exponential_seed(&k, 2.0), &k, 1e-12).unwrap().admissible());
    }

    #[test]
    fn sinusoidal_parameter_maps_onto_affine_sinusoidal_seed() {
        let k = c(1.0, 0.3, 1.0);
        let (l1, s) = affine_sinusoidal_amplitudes(&k);
        assert_relative_eq!(l1, 0.6 / (0.6 + 0.7 * PI), epsilon = 1e-15);
        assert_relative_eq!(s, 0.7 * PI / (0.6 + 0.7 * PI), epsilon = 1e-15);
        let w = PI / 2.0;
        let nu = SeedParameter::sinusoidal(-l1 * w.powi(3), w, w, 1.0);
        let phi = apply_t(&nu, &k).unwrap();
        let closed = affine_sinusoidal_seed(&k);
        for i in 0..=50 {
            let l = -(i as f64) / 50.0;
            let want = s - 1.0 + s * l + l1 * (1.0 - (w * (l + 1.0)).cos());
            assert!((closed.value(l).unwrap() - want).abs() < 1e-14);
            assert!((phi.value(l).unwrap() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn admissibility_of_simple_seeds() {
        let k = c(1.0, 0.3, 1.0);
        assert!(check_admissible(&quadratic_seed(&k), &k, 1e-12).unwrap().admissible());

        let matched = c(1.5, 0.0, 1.5);
        assert!(check_admissible(&identity_seed(1.5), &matched, 1e-12).unwrap().admissible());

        let r = check_admissible(&identity_seed(1.0), &k, 1e-8).unwrap();
        assert!(!r.admissible());
        assert_relative_eq!(r.derivative_ratio, 0.3, epsilon = 1e-15);
        assert!(r.monotonicity.is_monotone());
    }

    #[test]
    fn non_monotone_image_is_flagged() {
        let k = c(1.0, 0.3, 1.0);
        let nu = SeedParameter::legendre(vec![0.0, 0.0, 60.0], 1.0);
        let r = check_admissible(&apply_t(&nu, &k).unwrap(), &k, 1e-10).unwrap();
        assert!(r.boundary_ok());
        assert!(!r.monotonicity.is_monotone());
        let w = r.monotonicity.witness().unwrap();
        assert!(apply_t_prime(&nu, &k, w).unwrap() <= 1e-12);
    }

    #[test]
    fn recovery_from_closed_forms() {
        let k = c(1.0, 0.3, 1.0);
        assert_eq!(recover_parameter(&quadratic_seed(&k)).unwrap().kind, NuKind::Zero);
        let e2 = 1.0 - (-2.0f64).exp();
        match recover_parameter(&exponential_seed(&k, 2.0)).unwrap().kind {
            NuKind::Exponential { c, a } => {
                assert_relative_eq!(c, 8.0 / e2, epsilon = 1e-13);
                assert_eq!(a, 2.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        let (l1, _) = affine_sinusoidal_amplitudes(&k);
        match recover_parameter(&affine_sinusoidal_seed(&k)).unwrap().kind {
            NuKind::Sinusoidal { c, omega, phase } => {
                // -L1 (pi/2)^3 sin(pi (l + 1) / 2)
                assert_relative_eq!(c, -l1 * (PI / 2.0).powi(3), epsilon = 1e-14);
                assert_relative_eq!(omega, PI / 2.0);
                assert_relative_eq!(phase, PI / 2.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn recovery_from_quadrature_image_is_unsupported() {
        let k = c(1.0, 0.3, 1.0);
        let phi = apply_t(&SeedParameter::exponential(1.0, 1.0, 1.0), &k).unwrap();
        assert!(matches!(recover_parameter(&phi), Err(Error::Unsupported(_))));
    }

    #[test]
    fn mismatched_interval_is_rejected() {
        let k = c(1.0, 0.3, 1.0);
        assert!(apply_t(&SeedParameter::zero(2.0), &k).is_err());
        assert!(apply_t_prime(&SeedParameter::zero(1.0), &k, 0.5).is_err());
    }
}
