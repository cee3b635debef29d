mod common;

use akhiezer::geometry::{Endpoint, GeometryError, IntervalSet};
use common::*;
use num_complex::Complex64;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn construction_and_layout() {
    let e = chebyshev();
    assert_eq!(e.genus(), 0);
    assert_eq!(e.bands(), vec![(-1.0, 1.0)]);
    assert!(e.is_normalized());

    let e = two_bands();
    assert_eq!(e.genus(), 1);
    assert_eq!(e.bands(), vec![(-1.0, -0.3), (0.1, 1.0)]);
    assert_eq!(e.gaps(), vec![(-0.3, 0.1)]);
    assert_eq!(e.deltas(), &[-0.3, -1.0, 0.1, 1.0]);
    assert_eq!(e.endpoint(0), Endpoint::Alpha(1));
    assert_eq!(e.endpoint(1), Endpoint::Beta(0));
    assert_eq!(IntervalSet::from_deltas(e.deltas()).unwrap(), e);
}

#[test]
fn validation_errors() {
    assert!(matches!(
        IntervalSet::new(&[0.2], &[-1.0, 0.1, 1.0]),
        Err(GeometryError::InterlacingViolation { .. })
    ));
    assert!(matches!(
        IntervalSet::new(&[0.2], &[-1.0, 1.0]),
        Err(GeometryError::ArityMismatch { .. })
    ));
    assert!(matches!(
        IntervalSet::new(&[-0.3], &[-1.0, -0.3 + 1e-9, 1.0]),
        Err(GeometryError::DegenerateEndpoint { .. })
    ));
    assert!(matches!(
        IntervalSet::new(&[f64::NAN], &[-1.0, 0.1, 1.0]),
        Err(GeometryError::NonFinite { .. })
    ));
}

#[test]
fn weight_values() {
    let e = chebyshev();
    assert!((e.weight_plus(0.0).unwrap() - 1.0 / PI).abs() < 1e-15);
    assert!(matches!(two_bands().weight_plus(0.0), Err(GeometryError::OutsideSupport { .. })));

    let e = two_bands();
    let limit = |eps: f64| e.weight_plus(0.1 + eps).unwrap() * eps.sqrt();
    assert!((limit(1e-8) - limit(1e-10)).abs() < 1e-6 * limit(1e-10));
    assert!(limit(1e-10) > 0.0);
    for (lo, hi) in e.bands() {
        for k in 1..1000 {
            let t = lo + (hi - lo) * k as f64 / 1000.0;
            assert!(e.weight_plus(t).unwrap() > 0.0);
        }
    }
}

#[test]
fn complex_continuation() {
    let e = chebyshev();
    let w = e.w_complex(c(2.0, 0.0)).unwrap();
    assert!((w - c(0.0, 1.0 / (PI * 3f64.sqrt()))).norm() < 1e-15);
    assert!((e.psi(c(2.0, 0.0)).unwrap().re - 0.577_350_269_189_625_8).abs() < 1e-15);
    for set in [chebyshev(), two_bands(), three_bands()] {
        let z = c(1e6, 3e5);
        assert!((z * set.w_complex(z).unwrap() - c(0.0, 1.0 / PI)).norm() < 1e-5 / PI);
        assert!((z * set.psi(z).unwrap() - 1.0).norm() < 1e-5);
        assert!(matches!(set.psi(c(set.right() - 1e-3, 0.0)), Err(GeometryError::OnCut { .. })));
    }
}

#[test]
fn boundary_values_on_bands() {
    let e = two_bands();
    for (lo, hi) in e.bands() {
        for k in 1..=50 {
            let t = lo + (hi - lo) * k as f64 / 51.0;
            let up = e.w_limit(t, true).unwrap();
            let down = e.w_limit(t, false).unwrap();
            let wp = e.weight_plus(t).unwrap();
            assert!((up - wp).norm() < 1e-10 * wp.max(1.0), "t={t}");
            assert!((down + wp).norm() < 1e-10 * wp.max(1.0));
            assert!((e.psi_plus(t).unwrap() - c(0.0, -PI * wp)).norm() < 1e-15);
        }
    }
}

#[test]
fn psi_plus_i_pi_w_vanishes_and_gaps_are_continuous() {
    for set in [two_bands(), three_bands()] {
        for z in akhiezer::numerics::sample_points(&set, 20) {
            let r = set.psi(z).unwrap() + c(0.0, PI) * set.w_complex(z).unwrap();
            assert!(r.norm() < 1e-15);
        }
        for (a, b) in set.gaps() {
            let m = 0.5 * (a + b);
            let up = set.w_complex(c(m, 1e-12)).unwrap();
            let down = set.w_complex(c(m, -1e-12)).unwrap();
            assert!((up - down).norm() < 1e-10);
        }
    }
}

#[test]
fn psi_matches_cauchy_quadrature() {
    let set = two_bands();
    let e = akhiezer::quadrature::build_rules(&set, 200).unwrap();
    let z = c(2.0, 1.0);
    let re = e.integrate(|t| (1.0 / (z - t)).re).unwrap();
    let im = e.integrate(|t| (1.0 / (z - t)).im).unwrap();
    assert!((c(re, im) - set.psi(z).unwrap()).norm() < 1e-10);
}

#[test]
fn series_coefficients() {
    let s = chebyshev().series_coeffs();
    assert!((s.b_coeffs[1] - c(1.0 / 2f64.sqrt(), 0.0)).norm() < 1e-15);
    assert_eq!(s.kappa, 0.0);
    assert_eq!(s.c1, 0.0);

    for set in [two_bands(), three_bands(), four_bands()] {
        let s = set.series_coeffs();
        let expected = 0.5 * (set.betas().iter().sum::<f64>() - set.alphas().iter().sum::<f64>());
        assert!((s.kappa - expected).abs() < 1e-12);
        assert!(s.b_coeffs.iter().chain(&s.a_coeffs).all(|v| v.norm() > 0.0));
        // κ read off the expansion of w at a large point.
        let z = c(1e4, 0.0);
        let w = set.w_complex(z).unwrap();
        let kappa = ((w * z * PI / c(0.0, 1.0)) - 1.0) * z;
        assert!((kappa.re - s.kappa).abs() < 1e-3);
    }
    assert!((two_bands().series_coeffs().c1 - 0.4).abs() < 1e-15);
}

#[test]
fn local_coefficients_are_limits() {
    let set = two_bands();
    let s = set.series_coeffs();
    let eps = 1e-10;
    for (j, &b) in set.betas().iter().enumerate() {
        let z = c(b, 0.0) + c(eps, eps);
        let lim = set.psi(z).unwrap() * (z - b).sqrt();
        assert!((lim - s.b_coeffs[j]).norm() < 1e-4, "beta_{j}");
    }
    for (j, &a) in set.alphas().iter().enumerate() {
        let z = c(a, 0.0) + c(-eps, eps);
        let lim = set.psi(z).unwrap() / (z - a).sqrt();
        assert!((lim - s.a_coeffs[j]).norm() < 1e-4, "alpha_{}", j + 1);
    }
}

#[test]
fn serde_round_trip_validates() {
    let e = two_bands();
    let json = serde_json::to_string(&e).unwrap();
    let back: IntervalSet = serde_json::from_str(&json).unwrap();
    assert_eq!(back, e);
    assert!(serde_json::from_str::<IntervalSet>(r#"{"alphas":[0.2],"betas":[-1,0.1,1]}"#).is_err());
}
