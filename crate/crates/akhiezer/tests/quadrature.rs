mod common;

use akhiezer::quadrature::{build_rules, Exponent, JacobiRule, QuadratureError};
use common::*;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Closed-form Chebyshev rules of the four kinds, (left, right) exponents.
fn chebyshev_rule(n: usize, left: Exponent, right: Exponent) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let mut pts: Vec<(f64, f64)> = (1..=n)
        .map(|k| {
            let kf = k as f64;
            match (left, right) {
                (Exponent::MinusHalf, Exponent::MinusHalf) => {
                    ((((2.0 * kf - 1.0) * PI) / (2.0 * nf)).cos(), PI / nf)
                }
                (Exponent::PlusHalf, Exponent::PlusHalf) => {
                    let th = kf * PI / (nf + 1.0);
                    (th.cos(), PI / (nf + 1.0) * th.sin().powi(2))
                }
                (Exponent::MinusHalf, Exponent::PlusHalf) => {
                    let x = (2.0 * kf * PI / (2.0 * nf + 1.0)).cos();
                    (x, 2.0 * PI / (2.0 * nf + 1.0) * (1.0 - x))
                }
                (Exponent::PlusHalf, Exponent::MinusHalf) => {
                    let x = ((2.0 * kf - 1.0) * PI / (2.0 * nf + 1.0)).cos();
                    (x, 2.0 * PI / (2.0 * nf + 1.0) * (1.0 + x))
                }
            }
        })
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pts.into_iter().unzip()
}

#[test]
fn jacobi_rules_match_chebyshev_closed_forms() {
    use Exponent::*;
    for (l, r) in [(MinusHalf, MinusHalf), (PlusHalf, PlusHalf), (MinusHalf, PlusHalf), (PlusHalf, MinusHalf)] {
        for n in [4, 17, 200] {
            let rule = JacobiRule::new(n, l, r);
            let (x, w) = chebyshev_rule(n, l, r);
            for k in 0..n {
                assert!((rule.nodes[k] - x[k]).abs() < 1e-14, "{l:?} {r:?} n={n} node {k}");
                // Nodes next to ±1 are only representable to ~1e-16, which the
                // weight amplifies by about n/sin θ.
                assert!(rel(rule.weights[k], w[k]) < 1e-12, "{l:?} {r:?} n={n} weight {k}");
            }
        }
    }
}

#[test]
fn jacobi_rule_is_exact_for_monomials() {
    // ∫ x^{2m} (1−x²)^{−1/2} dx = π·binom(2m,m)/4^m
    let rule = JacobiRule::new(12, Exponent::MinusHalf, Exponent::MinusHalf);
    let mut exact = PI;
    for m in 0..12 {
        if m > 0 {
            exact *= (2 * m - 1) as f64 / (2 * m) as f64;
        }
        let q: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(2 * m)).sum();
        assert!((q - exact).abs() < 1e-14, "m={m}");
    }
}

#[test]
fn chebyshev_mass_and_moments() {
    let e = build_rules(&chebyshev(), 64).unwrap();
    assert_eq!(e.rules.len(), 1);
    assert_eq!(e.rules[0].exponent_pair, (Exponent::MinusHalf, Exponent::MinusHalf));
    let mu = e.moments(4);
    let expected = [1.0, 0.0, 0.5, 0.0, 0.375];
    for k in 0..5 {
        assert!((mu[k] - expected[k]).abs() < 1e-14, "mu_{k} = {}", mu[k]);
    }
    let m2 = e.integrate(|t| t * t).unwrap();
    assert!((m2 - 0.5).abs() < 1e-14);
}

#[test]
fn two_band_rules_have_matching_exponents() {
    let e = build_rules(&two_bands(), 128).unwrap();
    assert_eq!(e.rules[0].band, (-1.0, -0.3));
    assert_eq!(e.rules[0].exponent_pair, (Exponent::MinusHalf, Exponent::PlusHalf));
    assert_eq!(e.rules[1].band, (0.1, 1.0));
    assert_eq!(e.rules[1].exponent_pair, (Exponent::MinusHalf, Exponent::MinusHalf));
    for r in &e.rules {
        assert!(r.weights.iter().all(|&w| w > 0.0));
        assert!(r.nodes.windows(2).all(|p| p[0] < p[1]));
        assert!(r.nodes.iter().all(|&t| r.band.0 < t && t < r.band.1));
    }
}

#[test]
fn self_convergence_of_low_moments() {
    for set in [two_bands(), three_bands(), four_bands()] {
        let lo = build_rules(&set, 128).unwrap().moments(20);
        let hi = build_rules(&set, 256).unwrap().moments(20);
        assert!((lo[0] - 1.0).abs() < 1e-13);
        for k in 0..=20 {
            assert!((lo[k] - hi[k]).abs() < 1e-12, "k={k}");
        }
    }
}

#[test]
fn cauchy_transform_matches_closed_form() {
    let set = two_bands();
    let e = build_rules(&set, 200).unwrap();
    let q = e.integrate(|t| 1.0 / (2.5 - t)).unwrap();
    let psi = set.psi(Complex64::new(2.5, 0.0)).unwrap();
    assert!((q - psi.re).abs() < 1e-10 && psi.im.abs() < 1e-15);
    let z = Complex64::new(2.0, 1.0);
    let re = e.integrate(|t| (1.0 / (z - t)).re).unwrap();
    let im = e.integrate(|t| (1.0 / (z - t)).im).unwrap();
    assert!((Complex64::new(re, im) - set.psi(z).unwrap()).norm() < 1e-10);
}

#[test]
fn rejects_non_finite_samples_and_low_order() {
    let e = build_rules(&chebyshev(), 8).unwrap();
    assert!(matches!(e.integrate(|_| f64::NAN), Err(QuadratureError::NonFiniteSample { .. })));
    assert_eq!(build_rules(&chebyshev(), 3).unwrap_err(), QuadratureError::OrderTooLow(3));
}
