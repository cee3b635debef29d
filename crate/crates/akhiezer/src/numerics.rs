//! Small shared numerical kernels.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, t);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to [0, 1].
pub fn unit_legendre(n: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    x.iter().zip(&w).map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
}

/// Chebyshev first-kind Gauss rule: nodes cos((2k-1)π/2n), equal weights π/n.
pub fn chebyshev_first(n: usize) -> (Vec<f64>, f64) {
    let nodes = (1..=n)
        .rev()
        .map(|k| ((2 * k - 1) as f64 * PI / (2 * n) as f64).cos())
        .collect();
    (nodes, PI / n as f64)
}

/// Laurent coefficients c_k, k = 0..count, of f(z) = Σ c_k z^{-k} valid for |z| ≥ radius,
/// from the trapezoid rule on the circle |z| = radius.
pub fn laurent_at_infinity<F>(radius: f64, points: usize, count: usize, mut f: F) -> Vec<Complex64>
where
    F: FnMut(Complex64) -> Complex64,
{
    let samples: Vec<(Complex64, Complex64)> = (0..points)
        .map(|m| {
            let z = Complex64::from_polar(radius, 2.0 * PI * (m as f64 + 0.5) / points as f64);
            (z, f(z))
        })
        .collect();
    (0..count)
        .map(|k| {
            let s: Complex64 = samples.iter().map(|(z, v)| v * z.powi(k as i32)).sum();
            s / points as f64
        })
        .collect()
}

/// Deterministic low-discrepancy points within 0.6·diam of the centre of E, kept
/// at least `0.05·diam` away from the bands. The radius keeps |P_{n−1}Q_n|/h_{n−1}
/// moderate so that determinant identities are not swamped by cancellation.
pub fn sample_points(set: &crate::IntervalSet, count: usize) -> Vec<Complex64> {
    const PHI: f64 = 0.618_033_988_749_894_9;
    const SQRT2_FRAC: f64 = 0.414_213_562_373_095_1;
    let diam = set.diameter();
    let centre = 0.5 * (set.left() + set.right());
    (1..=count)
        .map(|k| {
            let theta = 2.0 * PI * (k as f64 * PHI).fract();
            let r = diam * (0.1 + 0.5 * (k as f64 * SQRT2_FRAC).fract());
            let mut z = Complex64::new(centre, 0.0) + Complex64::from_polar(r, theta);
            if set.distance_to_cuts(z) < 0.05 * diam {
                z.im += if z.im >= 0.0 { 0.1 } else { -0.1 } * diam;
            }
            z
        })
        .collect()
}

/// Mixed comparison points: a third real beyond the right end, a third spread over
/// the gaps (or left of E when there are none), a third from `sample_points`.
pub fn comparison_points(set: &crate::IntervalSet, count: usize) -> Vec<Complex64> {
    let diam = set.diameter();
    let third = count / 3;
    let mut out: Vec<Complex64> = (0..third)
        .map(|k| Complex64::from(set.right() + diam * (0.03 + 0.5 * k as f64 / third as f64)))
        .collect();
    let gaps = set.gaps();
    for k in 0..third {
        let x = if gaps.is_empty() {
            set.left() - diam * (0.03 + 0.5 * k as f64 / third as f64)
        } else {
            let (lo, hi) = gaps[k % gaps.len()];
            let slot = (k / gaps.len()) as f64;
            let slots = third.div_ceil(gaps.len()) as f64;
            lo + (hi - lo) * (0.1 + 0.8 * (slot + 0.5) / slots)
        };
        out.push(Complex64::from(x));
    }
    out.extend(sample_points(set, count - 2 * third));
    out
}

/// Largest modulus over a collection of complex entries (0 when empty).
pub fn max_modulus<'a>(values: impl IntoIterator<Item = &'a Complex64>) -> f64 {
    values.into_iter().map(|v| v.norm()).fold(0.0, f64::max)
}
