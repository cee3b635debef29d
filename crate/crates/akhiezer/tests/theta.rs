use akhiezer::surface::{Surface, DEFAULT_PERIOD_ORDER};
use akhiezer::theta::*;
use akhiezer::IntervalSet;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

type C = Complex64;

fn square_i() -> DMatrix<C> {
    DMatrix::from_element(1, 1, C::new(0.0, 1.0))
}

fn genus_two() -> DMatrix<C> {
    let set = IntervalSet::new(&[-0.5, 0.2], &[-1.0, -0.3, 0.5, 1.0]).unwrap();
    Surface::new(set, DEFAULT_PERIOD_ORDER).unwrap().periods.b
}

fn general() -> DMatrix<C> {
    DMatrix::from_row_slice(
        2,
        2,
        &[C::new(0.2, 1.1), C::new(-0.3, 0.4), C::new(-0.3, 0.4), C::new(0.1, 0.9)],
    )
}

fn points(g: usize) -> Vec<Vec<C>> {
    let base = [
        C::new(0.13, 0.21),
        C::new(-0.37, 0.05),
        C::new(0.41, -0.33),
        C::new(0.07, 0.48),
    ];
    (0..4).map(|k| (0..g).map(|j| base[(k + j) % 4]).collect()).collect()
}

#[test]
fn known_value() {
    let ctx = ThetaContext::new(square_i(), DEFAULT_TOL).unwrap();
    let v = ctx.theta(&[C::from(0.0)]).unwrap();
    assert!((v.re - 1.08643481121).abs() < 1e-9);
    assert!(v.im.abs() < 1e-15);
}

#[test]
fn matches_large_box_oracle() {
    for b in [square_i(), genus_two(), general()] {
        let g = b.nrows();
        let ctx = ThetaContext::new(b.clone(), DEFAULT_TOL).unwrap();
        let oracle = ThetaContext::with_radius(b, DEFAULT_TOL, 30).unwrap();
        for s in points(g) {
            let d = ctx.theta(&s).unwrap() - oracle.theta(&s).unwrap();
            assert!(d.norm() <= DEFAULT_TOL, "{d}");
        }
    }
}

#[test]
fn evenness_and_integer_periods() {
    for b in [genus_two(), general()] {
        let ctx = ThetaContext::new(b, DEFAULT_TOL).unwrap();
        for s in points(2) {
            let v = ctx.theta(&s).unwrap();
            let neg: Vec<C> = s.iter().map(|x| -x).collect();
            assert!((ctx.theta(&neg).unwrap() - v).norm() <= DEFAULT_TOL);
            for k in 0..2 {
                let mut t = s.clone();
                t[k] += 1.0;
                assert!((ctx.theta(&t).unwrap() - v).norm() <= DEFAULT_TOL);
            }
        }
    }
}

fn quasi_factor(b: &DMatrix<C>, s: &[C], m: &[f64]) -> C {
    let g = s.len();
    let mut q = C::from(0.0);
    for i in 0..g {
        for j in 0..g {
            q += b[(i, j)] * m[i] * m[j];
        }
        q += 2.0 * s[i] * m[i];
    }
    (C::new(0.0, -PI) * q).exp()
}

#[test]
fn quasi_periodicity() {
    for b in [genus_two(), general()] {
        let reduced = ThetaContext::new(b.clone(), DEFAULT_TOL).unwrap();
        // direct sums, with a box wide enough for every shifted argument
        let reach: f64 = (0..2).map(|j| b.column(j).map(|x| x.im).norm()).sum();
        let direct = ThetaContext::unreduced(b.clone(), DEFAULT_TOL, 2.0 * reach + 1.0).unwrap();
        for s in points(2) {
            let base = direct.theta(&s).unwrap();
            for m0 in -2..=2 {
                for m1 in -2..=2 {
                    let m = [m0 as f64, m1 as f64];
                    let shifted: Vec<C> = (0..2)
                        .map(|i| s[i] + (i as f64 - 1.0) + b[(i, 0)] * m[0] + b[(i, 1)] * m[1])
                        .collect();
                    let want = quasi_factor(&b, &s, &m) * base;
                    for ctx in [&reduced, &direct] {
                        let got = ctx.theta(&shifted).unwrap();
                        let r = (got - want).norm() / want.norm().max(1e-300);
                        assert!(r <= 10.0 * DEFAULT_TOL, "m={m:?}: {r:e}");
                    }
                }
            }
        }
    }
}

#[test]
fn log_derivative_shift() {
    let b = general();
    let ctx = ThetaContext::new(b.clone(), DEFAULT_TOL).unwrap();
    let s = points(2)[1].clone();
    for k in 0..2 {
        let t: Vec<C> = (0..2).map(|i| s[i] + b[(i, k)]).collect();
        for j in 0..2 {
            let jump = ctx.theta_dlog(&t, j).unwrap() - ctx.theta_dlog(&s, j).unwrap();
            let want = if j == k { C::new(0.0, -2.0 * PI) } else { C::from(0.0) };
            assert!((jump - want).norm() < 1e-10, "j={j} k={k}: {jump}");
        }
    }
}

#[test]
fn truncation_is_stable() {
    for b in [square_i(), genus_two()] {
        let g = b.nrows();
        let ctx = ThetaContext::new(b.clone(), DEFAULT_TOL).unwrap();
        let wider = ThetaContext::with_radius(b, DEFAULT_TOL, ctx.radius + 5).unwrap();
        for s in points(g) {
            let a = ctx.evaluate(&s).unwrap();
            let w = wider.evaluate(&s).unwrap();
            assert!((a.value - w.value).norm() <= DEFAULT_TOL);
            for j in 0..g {
                assert!((a.gradient[j] - w.gradient[j]).norm() <= DEFAULT_TOL);
            }
        }
    }
}

#[test]
fn derivative_against_differences() {
    let eps = 1e-5;
    for b in [square_i(), general()] {
        let g = b.nrows();
        let ctx = ThetaContext::new(b, DEFAULT_TOL).unwrap();
        for s in points(g) {
            for j in 0..g {
                let (mut up, mut down) = (s.clone(), s.clone());
                up[j] += eps;
                down[j] -= eps;
                let fd = (ctx.theta(&up).unwrap() - ctx.theta(&down).unwrap()) / (2.0 * eps);
                let exact = ctx.derivative(&s, j).unwrap();
                assert!((fd - exact).norm() <= 1e-6 * exact.norm().max(1.0));
            }
        }
    }
    let ctx = ThetaContext::new(square_i(), DEFAULT_TOL).unwrap();
    assert!(ctx.theta_dlog(&[C::from(0.0)], 0).unwrap().norm() < 1e-15);
}

#[test]
fn real_for_imaginary_data() {
    let ctx = ThetaContext::new(genus_two(), DEFAULT_TOL).unwrap();
    for s in points(2) {
        let s: Vec<C> = s.iter().map(|x| C::new(0.0, x.im)).collect();
        assert!(ctx.theta(&s).unwrap().im.abs() <= DEFAULT_TOL);
    }
    // real arguments too, since Re B vanishes here
    let v = ctx.theta(&[C::from(0.3), C::from(-0.2)]).unwrap();
    assert!(v.im.abs() <= DEFAULT_TOL);
}

#[test]
fn tail_bound_shrinks_with_radius() {
    let a = tail_bound(2, 0.8, 5, 1.0);
    let b = tail_bound(2, 0.8, 6, 1.0);
    assert!(b < a && a.is_finite());
    assert!(tail_bound(2, 0.8, 1, 10.0).is_infinite());
    assert_eq!(tail_bound(0, 1.0, 1, 1.0), 0.0);
}

#[test]
fn errors() {
    let skew = DMatrix::from_row_slice(
        2,
        2,
        &[C::new(0.0, 1.0), C::new(0.0, 0.1), C::new(0.0, 0.3), C::new(0.0, 1.0)],
    );
    assert!(matches!(ThetaContext::new(skew, DEFAULT_TOL), Err(ThetaError::NotSymmetric(_))));
    let flat = DMatrix::from_element(1, 1, C::new(0.5, -1.0));
    assert!(matches!(
        ThetaContext::new(flat, DEFAULT_TOL),
        Err(ThetaError::NotPositiveDefinite(_))
    ));
    let ctx = ThetaContext::new(square_i(), DEFAULT_TOL).unwrap();
    assert!(matches!(ctx.theta(&[]), Err(ThetaError::Dimension { expected: 1, got: 0 })));
    let small = ThetaContext::with_radius(square_i(), DEFAULT_TOL, 3).unwrap();
    assert!(matches!(
        small.theta(&[C::new(0.0, 5.0)]),
        Err(ThetaError::RadiusInsufficient { .. })
    ));
    // Θ(½ + ½B) = 0 for any B
    let half = [C::new(0.5, 0.5)];
    assert!(matches!(ctx.theta_dlog(&half, 0), Err(ThetaError::NearThetaDivisor { .. })));
}
