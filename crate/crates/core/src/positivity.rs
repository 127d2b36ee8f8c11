//! Strict positivity of univariate polynomials on a closed interval, decided
//! exactly with Sturm sequences over the rationals, plus a sampling fallback
//! for seeds that are not polynomial.

use crate::delay::golden_section_min;
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::seed::{self, SeedConstraints, SeedParameter};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Default denominator budget, in bits, for rationalizing coefficients.
pub const DEFAULT_BITS: u32 = 64;

/// A monomial-basis polynomial together with the interval it is studied on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariatePoly {
    pub poly: Polynomial,
    pub domain: [f64; 2],
}

impl UnivariatePoly {
    pub fn new(poly: Polynomial, domain: [f64; 2]) -> Self {
        Self { poly, domain }
    }

    pub fn coeffs(&self) -> &[f64] {
        self.poly.coeffs()
    }

    pub fn degree(&self) -> Option<usize> {
        self.poly.degree()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.poly.eval(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum CertificateResult {
    Positive,
    NotPositive { witness: f64, value: f64 },
    /// The polynomial is identically zero.
    Degenerate,
}

impl CertificateResult {
    pub fn is_positive(&self) -> bool {
        matches!(self, CertificateResult::Positive)
    }
}

/// `(T nu)'` for a polynomial `nu`, as an exact polynomial on `[-tau_star, 0]`.
pub fn phi_prime_as_poly(nu: &SeedParameter, c: &SeedConstraints) -> Result<UnivariatePoly> {
    if !nu.is_polynomial() {
        return Err(Error::InvalidInput("seed parameter is not polynomial".into()));
    }
    let phi = seed::apply_t(nu, c)?;
    let p = phi.as_polynomial().expect("polynomial parameters give polynomial images");
    Ok(UnivariatePoly::new(p.derivative(), [-c.tau_star, 0.0]))
}

pub fn sturm_positive_on_interval(p: &UnivariatePoly, a: f64, b: f64) -> Result<CertificateResult> {
    sturm_positive_with_budget(p, a, b, DEFAULT_BITS)
}

/// Decides `p > 0` on `[a, b]`.
///
/// Coefficients are scaled by a power of two and rounded to multiples of
/// `2^-bits`, giving an exact rational `q` and a bound `eps` on `|p - q|` over
/// the interval. `q - eps > 0` certifies positivity; a point where
/// `q + eps <= 0` is a witness of non-positivity. If neither can be shown the
/// rounding was too coarse and `CoefficientOverflow` is returned.
pub fn sturm_positive_with_budget(p: &UnivariatePoly, a: f64, b: f64, bits: u32) -> Result<CertificateResult> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!("need a finite interval a < b, got [{a}, {b}]")));
    }
    if p.poly.is_zero() {
        return Ok(CertificateResult::Degenerate);
    }
    if p.coeffs().iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("polynomial has non-finite coefficients".into()));
    }
    let (q, eps) = rationalize(p.coeffs(), a, b, bits);
    let ra = to_rational(a);
    let rb = to_rational(b);

    let lower = add_constant(&q, &-eps.clone());
    if first_nonpositive(&lower, &ra, &rb).is_none() {
        return Ok(CertificateResult::Positive);
    }
    let upper = add_constant(&q, &eps);
    if let Some(x) = first_nonpositive(&upper, &ra, &rb) {
        let witness = x.to_f64().unwrap_or(a).clamp(a, b);
        return Ok(CertificateResult::NotPositive {
            witness,
            value: p.eval(witness),
        });
    }
    Err(Error::CoefficientOverflow { bits })
}

/// Number of distinct real roots of `p` in the open interval `(a, b)`, with
/// roots at either endpoint divided out first.
pub fn count_interior_roots(p: &Polynomial, a: f64, b: f64) -> Result<usize> {
    if p.is_zero() {
        return Err(Error::InvalidInput("zero polynomial has infinitely many roots".into()));
    }
    let q: Vec<BigRational> = p.coeffs().iter().map(|&c| to_rational(c)).collect();
    let ra = to_rational(a);
    let rb = to_rational(b);
    let q = deflate(deflate(q, &ra), &rb);
    let chain = sturm_chain(&q);
    Ok(sign_changes(&chain, &ra) - sign_changes(&chain, &rb))
}

/// Minimum of `f` over a uniform `n`-point grid on `[a, b]`, refined by
/// golden-section search between the neighbours of the grid minimizer.
pub fn sampled_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> (f64, f64) {
    let n = n.max(2);
    let h = (b - a) / (n - 1) as f64;
    let at = |i: usize| if i == n - 1 { b } else { a + i as f64 * h };
    let mut best = (f64::INFINITY, a);
    for i in 0..n {
        let x = at(i);
        let v = f(x);
        if v < best.0 || v.is_nan() {
            best = (v, x);
            if v.is_nan() {
                return best;
            }
        }
    }
    let i = ((best.1 - a) / h).round() as usize;
    let lo = at(i.saturating_sub(1));
    let hi = at((i + 1).min(n - 1));
    let (x, v) = golden_section_min(&f, lo, hi, 60);
    if v < best.0 {
        (v, x)
    } else {
        best
    }
}

fn to_rational(x: f64) -> BigRational {
    BigRational::from_f64(x).expect("finite value")
}

fn scale_exponent(max_abs: f64) -> i32 {
    // 2^e * max_abs lies in [1, 2)
    -(max_abs.log2().floor() as i32)
}

fn rationalize(coeffs: &[f64], a: f64, b: f64, bits: u32) -> (Vec<BigRational>, BigRational) {
    let max_abs = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let e = scale_exponent(max_abs);
    let denom = BigInt::one() << bits as usize;
    let two_e = if e >= 0 {
        BigRational::from_integer(BigInt::one() << e as usize)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << (-e) as usize)
    };
    let m = to_rational(a.abs().max(b.abs()));
    let mut m_pow = BigRational::one();
    let mut eps = BigRational::zero();
    let mut q = Vec::with_capacity(coeffs.len());
    for &c in coeffs {
        let exact = to_rational(c) * &two_e;
        let k = (&exact * BigRational::from_integer(denom.clone())).round();
        let rounded = k / BigRational::from_integer(denom.clone());
        eps += (&exact - &rounded).abs() * &m_pow;
        m_pow *= &m;
        q.push(rounded);
    }
    (trim(q), eps)
}

fn trim(mut q: Vec<BigRational>) -> Vec<BigRational> {
    while q.last().is_some_and(|c| c.is_zero()) {
        q.pop();
    }
    q
}

fn add_constant(q: &[BigRational], c: &BigRational) -> Vec<BigRational> {
    let mut out = q.to_vec();
    if out.is_empty() {
        out.push(c.clone());
    } else {
        out[0] += c;
    }
    trim(out)
}

fn eval(q: &[BigRational], x: &BigRational) -> BigRational {
    q.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
}

fn derivative(q: &[BigRational]) -> Vec<BigRational> {
    q.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
        .collect()
}

/// Remainder of `n` divided by `d`.
fn remainder(n: &[BigRational], d: &[BigRational]) -> Vec<BigRational> {
    let mut r = n.to_vec();
    let dl = d.last().expect("nonzero divisor");
    while r.len() >= d.len() && !r.is_empty() {
        let shift = r.len() - d.len();
        let f = r.last().unwrap() / dl;
        for (i, c) in d.iter().enumerate() {
            r[shift + i] -= &f * c;
        }
        r.pop();
        r = trim(r);
    }
    r
}

/// Scales by a positive constant so the leading coefficient is `+-1`.
fn normalize(q: Vec<BigRational>) -> Vec<BigRational> {
    match q.last() {
        Some(l) => {
            let s = l.abs();
            q.into_iter().map(|c| c / &s).collect()
        }
        None => q,
    }
}

fn sturm_chain(q: &[BigRational]) -> Vec<Vec<BigRational>> {
    let mut chain = vec![normalize(q.to_vec())];
    let d = normalize(derivative(q));
    if d.is_empty() {
        return chain;
    }
    chain.push(d);
    loop {
        let n = chain.len();
        let r = remainder(&chain[n - 2], &chain[n - 1]);
        if r.is_empty() {
            break;
        }
        chain.push(normalize(r.into_iter().map(|c| -c).collect()));
    }
    chain
}

fn sign_changes(chain: &[Vec<BigRational>], x: &BigRational) -> usize {
    let mut count = 0;
    let mut last = 0i8;
    for p in chain {
        let v = eval(p, x);
        let s = if v.is_positive() {
            1
        } else if v.is_negative() {
            -1
        } else {
            0
        };
        if s != 0 {
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
    }
    count
}

/// Divides out every factor `(x - r)`.
fn deflate(mut q: Vec<BigRational>, r: &BigRational) -> Vec<BigRational> {
    while q.len() > 1 && eval(&q, r).is_zero() {
        // synthetic division
        let n = q.len() - 1;
        let mut out = vec![BigRational::zero(); n];
        let mut carry = BigRational::zero();
        for i in (0..n).rev() {
            carry = &q[i + 1] + carry * r;
            out[i] = carry.clone();
        }
        q = out;
    }
    q
}

/// A point of `[a, b]` where `q <= 0`, if any.
fn first_nonpositive(q: &[BigRational], a: &BigRational, b: &BigRational) -> Option<BigRational> {
    if q.is_empty() {
        return Some(a.clone());
    }
    for x in [a, b] {
        if !eval(q, x).is_positive() {
            return Some(x.clone());
        }
    }
    let chain = sturm_chain(q);
    let roots = |lo: &BigRational, hi: &BigRational| sign_changes(&chain, lo) - sign_changes(&chain, hi);
    if roots(a, b) == 0 {
        return None;
    }
    // Bisect towards a root: (lo, hi] keeps at least one root and q(lo), q(hi) > 0.
    let two = BigRational::from_integer(BigInt::from(2));
    let mut lo = a.clone();
    let mut hi = b.clone();
    for _ in 0..200 {
        let mid = (&lo + &hi) / &two;
        if !eval(q, &mid).is_positive() {
            return Some(mid);
        }
        if roots(&lo, &mid) > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Even-multiplicity root isolated below any representable width.
    Some((&lo + &hi) / &two)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn up(c: Vec<f64>, a: f64, b: f64) -> UnivariatePoly {
        UnivariatePoly::new(Polynomial::new(c), [a, b])
    }

    #[test]
    fn positive_quadratic() {
        let p = up(vec![1.0, 0.0, 1.0], -1.0, 0.0);
        assert_eq!(sturm_positive_on_interval(&p, -1.0, 0.0).unwrap(), CertificateResult::Positive);
    }

    #[test]
    fn sign_change_gives_witness() {
        let p = up(vec![0.5, 1.0], -1.0, 0.0);
        match sturm_positive_on_interval(&p, -1.0, 0.0).unwrap() {
            CertificateResult::NotPositive { witness, value } => {
                assert!((-1.0..=-0.5).contains(&witness));
                assert!(value <= 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_polynomial_is_degenerate() {
        let p = up(vec![], -1.0, 0.0);
        assert_eq!(sturm_positive_on_interval(&p, -1.0, 0.0).unwrap(), CertificateResult::Degenerate);
    }

    #[test]
    fn endpoint_zero_is_not_positive() {
        // (x + 1)(x + 2) vanishes at -1 only
        let p = up(vec![2.0, 3.0, 1.0], -1.0, 0.0);
        assert_eq!(
            sturm_positive_on_interval(&p, -1.0, 0.0).unwrap(),
            CertificateResult::NotPositive { witness: -1.0, value: 0.0 }
        );
        assert_eq!(count_interior_roots(&p.poly, -1.0, 0.0).unwrap(), 0);
    }

    #[test]
    fn double_root_inside_is_found() {
        // (x + 0.5)^2
        let p = up(vec![0.25, 1.0, 1.0], -1.0, 0.0);
        match sturm_positive_on_interval(&p, -1.0, 0.0).unwrap() {
            CertificateResult::NotPositive { witness, value } => {
                assert!((witness + 0.5).abs() < 1e-12);
                assert!(value <= 1e-24);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn interior_root_count() {
        // (x + 0.25)(x + 0.5)(x + 0.75)(x + 1)
        let p = &(&Polynomial::linear_factor(-0.25) * &Polynomial::linear_factor(-0.5))
            * &(&Polynomial::linear_factor(-0.75) * &Polynomial::linear_factor(-1.0));
        assert_eq!(count_interior_roots(&p, -1.0, 0.0).unwrap(), 3);
    }

    #[test]
    fn tiny_margin_overflows_small_budget() {
        let p = up(vec![1e-30, 0.0, 1.0], -1.0, 0.0);
        assert!(matches!(
            sturm_positive_with_budget(&p, -1.0, 0.0, 16),
            Err(Error::CoefficientOverflow { bits: 16 })
        ));
        let mut big = up(vec![1e-3, 0.0, 1.0], -1.0, 0.0);
        assert!(sturm_positive_with_budget(&big, -1.0, 0.0, 64).unwrap().is_positive());
        big.poly = Polynomial::new(vec![-1e-3, 0.0, 1.0]);
        assert!(!sturm_positive_with_budget(&big, -1.0, 0.0, 64).unwrap().is_positive());
    }

    #[test]
    fn quadratic_seed_derivative_is_certified() {
        let c = SeedConstraints::new(1.0, 0.3, 1.0).unwrap();
        let dp = phi_prime_as_poly(&SeedParameter::zero(1.0), &c).unwrap();
        let want = [2.0 / 1.7, 0.6 / 1.7];
        assert_eq!(dp.coeffs().len(), 2);
        for (got, want) in dp.coeffs().iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!((dp.eval(0.0) - 2.0 / 1.7).abs() < 1e-15);
        assert!(sturm_positive_on_interval(&dp, -1.0, 0.0).unwrap().is_positive());
        let (min, _) = sampled_min(|x| dp.eval(x), -1.0, 0.0, 100_000);
        assert!(min > 0.0);
    }

    #[test]
    fn phi_prime_matches_kernel_route() {
        let c = SeedConstraints::new(0.9, 0.2, 1.2).unwrap();
        let nu = SeedParameter::legendre(vec![0.3, -0.7, 0.2, 0.5], 1.2);
        let dp = phi_prime_as_poly(&nu, &c).unwrap();
        assert!(dp.degree().unwrap() <= 5);
        for i in 0..50 {
            let l = -1.2 * (i as f64 + 0.37) / 50.0;
            let want = seed::apply_t_prime(&nu, &c, l).unwrap();
            assert!((dp.eval(l) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn sampled_min_of_cosine() {
        let (v, x) = sampled_min(f64::cos, 0.0, std::f64::consts::PI, 10_000);
        assert!((v + 1.0).abs() < 1e-12);
        assert!((x - std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn sampled_min_finds_interior_minimum_between_nodes() {
        let (v, x) = sampled_min(|x| (x - 0.123_456_7).powi(2), 0.0, 1.0, 11);
        assert!(v < 1e-15);
        assert!((x - 0.123_456_7).abs() < 1e-7);
    }
}
