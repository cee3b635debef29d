use akhiezer::opoly::stieltjes;
use akhiezer::quadrature::InnerProductEngine;
use akhiezer::surface::Surface;
use akhiezer::theta::ThetaContext;
use akhiezer::IntervalSet;
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use std::f64::consts::PI;

/// B = X + iY with Y = MMᵀ + ½I, so Im B is comfortably positive definite.
fn period_matrix(g: usize, raw: &[f64]) -> DMatrix<C> {
    let m = DMatrix::from_fn(g, g, |i, j| raw[i * g + j]);
    let y = &m * m.transpose() + DMatrix::identity(g, g) * 0.5;
    DMatrix::from_fn(g, g, |i, j| {
        let x = 0.5 * (raw[8 + i * g + j] + raw[8 + j * g + i]);
        C::new(x, y[(i, j)])
    })
}

fn two_bands() -> impl Strategy<Value = (f64, f64)> {
    // gap (α₁, β₁) inside (−1, 1)
    (-0.8f64..0.6, 0.05f64..0.3).prop_map(|(a, w)| (a, a + w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn theta_even_and_periodic(
        g in 1usize..=2,
        raw in prop::collection::vec(-1.0f64..1.0, 16),
        s in prop::collection::vec((-1.0f64..1.0, -0.5f64..0.5), 2),
    ) {
        let ctx = ThetaContext::new(period_matrix(g, &raw), 1e-13).unwrap();
        let s: Vec<C> = s[..g].iter().map(|&(re, im)| C::new(re, im)).collect();
        let v = ctx.theta(&s).unwrap();
        let minus: Vec<C> = s.iter().map(|x| -x).collect();
        prop_assert!((ctx.theta(&minus).unwrap() - v).norm() <= 1e-11 * (1.0 + v.norm()));
        for j in 0..g {
            let mut t = s.clone();
            t[j] += 1.0;
            prop_assert!((ctx.theta(&t).unwrap() - v).norm() <= 1e-11 * (1.0 + v.norm()));
        }
    }

    #[test]
    fn theta_quasi_periodic(
        g in 1usize..=2,
        raw in prop::collection::vec(-1.0f64..1.0, 16),
        s in prop::collection::vec((-1.0f64..1.0, -0.5f64..0.5), 2),
    ) {
        let b = period_matrix(g, &raw);
        let ctx = ThetaContext::new(b.clone(), 1e-13).unwrap();
        let s: Vec<C> = s[..g].iter().map(|&(re, im)| C::new(re, im)).collect();
        let v = ctx.theta(&s).unwrap();
        for j in 0..g {
            let t: Vec<C> = (0..g).map(|i| s[i] + b[(i, j)]).collect();
            let factor = (C::new(0.0, -PI) * (b[(j, j)] + 2.0 * s[j])).exp();
            let want = factor * v;
            prop_assert!((ctx.theta(&t).unwrap() - want).norm() <= 1e-10 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn recurrence_is_affine_covariant((alpha, beta) in two_bands(), c in 0.3f64..3.0, d in -2.0f64..2.0) {
        let set = IntervalSet::new(&[alpha], &[-1.0, beta, 1.0]).unwrap();
        let moved = IntervalSet::new(&[c * alpha + d], &[d - c, c * beta + d, c + d]).unwrap();
        let t = stieltjes(&InnerProductEngine::new(&set, 60).unwrap(), 8).unwrap();
        let u = stieltjes(&InnerProductEngine::new(&moved, 60).unwrap(), 8).unwrap();
        for n in 1..=8 {
            prop_assert!((u.a(n) - c * c * t.a(n)).abs() <= 1e-11 * c * c);
            prop_assert!((u.b(n) - (c * t.b(n) + d)).abs() <= 1e-11 * (c + d.abs()));
        }
    }

    #[test]
    fn capacity_scales_with_the_set((alpha, beta) in two_bands(), c in 0.3f64..3.0, d in -2.0f64..2.0) {
        let set = IntervalSet::new(&[alpha], &[-1.0, beta, 1.0]).unwrap();
        let moved = IntervalSet::new(&[c * alpha + d], &[d - c, c * beta + d, c + d]).unwrap();
        let cap = Surface::new(set, 120).unwrap().periods.capacity;
        let cap_moved = Surface::new(moved, 120).unwrap().periods.capacity;
        prop_assert!((cap_moved - c * cap).abs() <= 1e-10 * c);
        prop_assert!(cap > 0.0 && cap < 0.5);
    }
}
