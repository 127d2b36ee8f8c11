//! Shifted Legendre basis on `[-tau_star, 0]`.
//!
//! `L_n(l) = P_n(2 l / tau_star + 1)`, orthogonal with
//! `int L_m L_n = tau_star / (2n + 1) delta_mn`.

use crate::poly::Polynomial;
use crate::quadrature::GaussLegendre;

/// Monomial form (in `l`) of the first `n` shifted Legendre polynomials.
pub fn basis(n: usize, tau_star: f64) -> Vec<Polynomial> {
    let x = Polynomial::new(vec![1.0, 2.0 / tau_star]);
    let mut out: Vec<Polynomial> = Vec::with_capacity(n);
    for k in 0..n {
        let p = match k {
            0 => Polynomial::constant(1.0),
            1 => x.clone(),
            _ => {
                let kf = k as f64;
                let a = (&x * &out[k - 1]).scale((2.0 * kf - 1.0) / kf);
                let b = out[k - 2].scale((kf - 1.0) / kf);
                &a - &b
            }
        };
        out.push(p);
    }
    out
}

/// Monomial form of `sum_k coeffs[k] L_k`.
pub fn to_monomial(coeffs: &[f64], tau_star: f64) -> Polynomial {
    basis(coeffs.len(), tau_star)
        .iter()
        .zip(coeffs)
        .fold(Polynomial::zero(), |acc, (p, &c)| &acc + &p.scale(c))
}

/// Evaluates `sum_k coeffs[k] L_k(l)` by the three-term recurrence.
pub fn eval(coeffs: &[f64], tau_star: f64, l: f64) -> f64 {
    let x = 2.0 * l / tau_star + 1.0;
    let mut p0 = 1.0;
    let mut p1 = x;
    let mut sum = 0.0;
    for (k, &c) in coeffs.iter().enumerate() {
        let pk = match k {
            0 => 1.0,
            1 => x,
            _ => {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
                p2
            }
        };
        sum += c * pk;
    }
    sum
}

/// L2 projection of `f` onto the first `n` basis functions, using a
/// 30-point Gauss–Legendre rule on the whole interval.
pub fn project<F: Fn(f64) -> f64>(f: F, n: usize, tau_star: f64) -> Vec<f64> {
    let rule = GaussLegendre::thirty();
    (0..n)
        .map(|k| {
            let mut unit = vec![0.0; k + 1];
            unit[k] = 1.0;
            let ip = rule.integrate(|l| f(l) * eval(&unit, tau_star, l), -tau_star, 0.0);
            ip * (2.0 * k as f64 + 1.0) / tau_star
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn recurrence_matches_monomial_form() {
        let c = [0.3, -1.0, 0.25, 0.7, -0.1, 0.05];
        let p = to_monomial(&c, 1.7);
        for i in 0..=10 {
            let l = -1.7 * i as f64 / 10.0;
            assert_relative_eq!(p.eval(l), eval(&c, 1.7, l), epsilon = 1e-12);
        }
    }

    #[test]
    fn endpoint_values() {
        // L_n(0) = 1, L_n(-tau_star) = (-1)^n
        for (k, p) in basis(7, 2.0).iter().enumerate() {
            assert_relative_eq!(p.eval(0.0), 1.0, epsilon = 1e-12);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert_relative_eq!(p.eval(-2.0), sign, epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_recovers_polynomials() {
        let c = [1.0, 0.5, -0.25, 0.125];
        let got = project(|l| eval(&c, 1.0, l), 6, 1.0);
        for (k, g) in got.iter().enumerate() {
            let want = c.get(k).copied().unwrap_or(0.0);
            assert!((g - want).abs() < 1e-13, "{k}: {g} vs {want}");
        }
    }
}
