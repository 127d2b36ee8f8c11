use abel_core::poly::Polynomial;
use abel_core::seed::*;
use abel_core::{benchmarks, legendre};
use proptest::prelude::*;

fn constraints() -> impl Strategy<Value = SeedConstraints> {
    (0.1..3.0f64, -2.0..0.95f64, 0.2..3.0f64).prop_map(|(a, b, c)| SeedConstraints::new(a, b, c).unwrap())
}

fn poly_nu() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 1..=9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn images_meet_the_boundary_conditions(c in constraints(), coeffs in poly_nu()) {
        let nu = SeedParameter::legendre(coeffs, c.tau_star);
        let r = check_admissible(&apply_t(&nu, &c).unwrap(), &c, 1e-10).unwrap();
        prop_assert!(r.boundary_ok(), "{r:?}");
    }

    #[test]
    fn third_derivative_of_image_is_the_parameter(c in constraints(), coeffs in poly_nu()) {
        let nu = SeedParameter::legendre(coeffs, c.tau_star);
        let p = apply_t(&nu, &c).unwrap().as_polynomial().unwrap();
        let d3 = p.nth_derivative(3);
        let want = nu.as_polynomial().unwrap();
        let n = d3.coeffs().len().max(want.coeffs().len());
        for i in 0..n {
            let a = d3.coeffs().get(i).copied().unwrap_or(0.0);
            let b = want.coeffs().get(i).copied().unwrap_or(0.0);
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "coefficient {i}: {a} vs {b}");
        }
    }

    #[test]
    fn derivative_ratio_from_kernel_route(c in constraints(), coeffs in poly_nu()) {
        let nu = SeedParameter::legendre(coeffs, c.tau_star);
        let start = apply_t_prime(&nu, &c, -c.tau_star).unwrap();
        let end = apply_t_prime(&nu, &c, 0.0).unwrap();
        prop_assert!((start - (1.0 - c.tau0p) * end).abs() <= 1e-10 * (1.0 + end.abs()));
    }

    #[test]
    fn kernel_route_matches_exact_derivative(c in constraints(), coeffs in poly_nu(), u in 0.0..1.0f64) {
        let nu = SeedParameter::legendre(coeffs, c.tau_star);
        let l = -u * c.tau_star;
        let exact = apply_t(&nu, &c).unwrap().derivative(l).unwrap();
        prop_assert!((apply_t_prime(&nu, &c, l).unwrap() - exact).abs() <= 1e-10 * (1.0 + exact.abs()));
    }

    #[test]
    fn kernel_identities(c in constraints(), u in 0.0..1.0f64) {
        let eta = -u * c.tau_star;
        prop_assert_eq!(kernel_k(-c.tau_star, eta, &c), 0.0);
        prop_assert!((kernel_k(0.0, eta, &c) + eta * eta / 2.0).abs() <= 1e-14 * (1.0 + eta * eta));
        prop_assert_eq!(beta(-c.tau_star, &c), 0.0);
        prop_assert!((beta(0.0, &c) - 1.0).abs() <= 1e-15);
    }
}

#[test]
fn quadratic_seed_equals_zero_image() {
    let c = SeedConstraints::new(1.7, -0.4, 0.8).unwrap();
    let q = quadratic_seed(&c);
    let t = apply_t(&SeedParameter::zero(0.8), &c).unwrap();
    for i in 0..=100 {
        let l = -0.8 * i as f64 / 100.0;
        assert!((q.value(l).unwrap() - t.value(l).unwrap()).abs() <= 1e-14);
    }
}

#[test]
fn non_polynomial_derivatives_match_finite_differences() {
    let c = SeedConstraints::new(1.0, 0.3, 1.0).unwrap();
    for nu in [
        SeedParameter::exponential(1.5, 2.0, 1.0),
        SeedParameter::sinusoidal(-0.7, 3.0, 0.4, 1.0),
    ] {
        let phi = apply_t(&nu, &c).unwrap();
        for i in 1..20 {
            let l = -(i as f64) / 20.0;
            let h = 1e-5;
            let fd = (phi.value(l + h).unwrap() - phi.value(l - h).unwrap()) / (2.0 * h);
            assert!((apply_t_prime(&nu, &c, l).unwrap() - fd).abs() <= 1e-6);
            assert!((phi.derivative(l).unwrap() - fd).abs() <= 1e-6);
        }
    }
}

#[test]
fn closed_form_catalog_round_trips_through_t() {
    for b in benchmarks::all() {
        let c = b.constraints();
        for s in &b.seeds {
            let nu = recover_parameter(&s.closed_form).unwrap();
            let back = apply_t(&nu, &c).unwrap();
            let mut worst = 0.0f64;
            for i in 0..=200 {
                let l = -c.tau_star * i as f64 / 200.0;
                worst = worst.max((back.value(l).unwrap() - s.closed_form.value(l).unwrap()).abs());
            }
            assert!(worst <= 1e-8, "{} {}: {worst:e}", b.name, s.name);
        }
    }
}

#[test]
fn polynomial_seed_round_trips_through_legendre_recovery() {
    let c = SeedConstraints::new(0.6, 0.1, 1.4).unwrap();
    let nu = SeedParameter::legendre(vec![0.2, -0.5, 0.9, 0.1], 1.4);
    let phi = apply_t(&nu, &c).unwrap();
    let back = recover_parameter(&phi).unwrap();
    for i in 0..=20 {
        let l = -1.4 * i as f64 / 20.0;
        assert!((back.eval(l) - nu.eval(l)).abs() <= 1e-10);
    }
}

#[test]
fn legendre_projection_reproduces_polynomials() {
    let p = Polynomial::new(vec![0.3, -1.0, 0.5, 2.0]);
    let coeffs = legendre::project(|l| p.eval(l), 4, 2.0);
    let back = legendre::to_monomial(&coeffs, 2.0);
    for (a, b) in back.coeffs().iter().zip(p.coeffs()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn uncorrected_catalog_forms_are_not_admissible() {
    // The plain exponential misses the derivative-ratio condition.
    let b = benchmarks::fast_sinusoid();
    let c = b.constraints();
    let r = check_admissible(&plain_exponential_seed(&c, 2.0), &c, 1e-8).unwrap();
    assert!(!r.boundary_ok());
}
