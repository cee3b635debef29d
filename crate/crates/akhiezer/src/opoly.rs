//! Monic orthogonal polynomials for w₊, the second-kind polynomials, Hankel
//! determinants and the Riemann-Hilbert matrix Y_n.

use crate::geometry::{GeometryError, IntervalSet};
use crate::quadrature::InnerProductEngine;
use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::Serialize;
use std::ops::{Mul, Sub};
use thiserror::Error;

/// Largest size for which the moment determinant is attempted.
pub const HANKEL_MAX_N: usize = 12;
/// Maximum tolerated estimated relative error of the Hankel determinant.
pub const HANKEL_MAX_ERROR: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpolyError {
    #[error("norm h_{n} = {h} is not positive; quadrature order too low")]
    LossOfPositivity { n: usize, h: f64 },
    #[error("quadrature order {order} is below the {required} needed for n_max = {n_max}")]
    OrderBudget {
        order: usize,
        required: usize,
        n_max: usize,
    },
    #[error("Hankel matrix of size {n} is ill-conditioned (estimated relative error {estimate:.3e})")]
    IllConditioned { n: usize, estimate: f64 },
    #[error("degree {n} is outside the table (max {max})")]
    OutOfRange { n: usize, max: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Recurrence data z·P_n = P_{n+1} + b_{n+1}P_n + a_nP_{n−1}.
///
/// `h[n]` holds h_n for n ≤ n_max, `a[n-1]` holds a_n for 1 ≤ n ≤ n_max and
/// `b[n-1]` holds b_n for 1 ≤ n ≤ n_max+1, so P_n and Q_n can be evaluated up
/// to degree n_max+1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceTable {
    pub n_max: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub h: Vec<f64>,
    pub p1: Vec<f64>,
}

/// P_{n−1}, P_n, Q_{n−1}, Q_n at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PqValues<T> {
    pub p_prev: T,
    pub p: T,
    pub q_prev: T,
    pub q: T,
}

/// Minimum quadrature order for a table of depth n_max.
pub fn required_order(n_max: usize) -> usize {
    2 * n_max + 16
}

/// Discretized Stieltjes procedure; refuses rules below the order budget.
pub fn stieltjes(engine: &InnerProductEngine, n_max: usize) -> Result<RecurrenceTable, OpolyError> {
    let required = required_order(n_max);
    if engine.order < required {
        return Err(OpolyError::OrderBudget {
            order: engine.order,
            required,
            n_max,
        });
    }
    stieltjes_unchecked(engine, n_max)
}

/// Same procedure without the order budget; used for deliberately uncertified rows.
pub fn stieltjes_unchecked(
    engine: &InnerProductEngine,
    n_max: usize,
) -> Result<RecurrenceTable, OpolyError> {
    let (t, w): (Vec<f64>, Vec<f64>) = engine.points().unzip();
    let mut p_prev = vec![0.0; t.len()];
    let mut p = vec![1.0; t.len()];
    let mut h = Vec::with_capacity(n_max + 1);
    let mut a = Vec::with_capacity(n_max);
    let mut b = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let (mut hn, mut tn) = (0.0, 0.0);
        for k in 0..t.len() {
            let wp = w[k] * p[k] * p[k];
            hn += wp;
            tn += wp * t[k];
        }
        if !(hn > 0.0) || !hn.is_finite() {
            return Err(OpolyError::LossOfPositivity { n, h: hn });
        }
        let bn = tn / hn;
        let an = if n > 0 { hn / h[n - 1] } else { 0.0 };
        if n > 0 {
            a.push(an);
        }
        h.push(hn);
        b.push(bn);
        for k in 0..t.len() {
            let next = (t[k] - bn) * p[k] - an * p_prev[k];
            p_prev[k] = p[k];
            p[k] = next;
        }
    }
    let mut p1 = vec![0.0];
    for bn in &b {
        p1.push(p1.last().unwrap() - bn);
    }
    Ok(RecurrenceTable { n_max, a, b, h, p1 })
}

impl RecurrenceTable {
    pub fn a(&self, n: usize) -> f64 {
        self.a[n - 1]
    }

    pub fn b(&self, n: usize) -> f64 {
        self.b[n - 1]
    }

    pub fn h(&self, n: usize) -> f64 {
        self.h[n]
    }

    /// Coefficient of z^{n−1} in P_n.
    pub fn p1(&self, n: usize) -> f64 {
        self.p1[n]
    }

    /// Highest degree that can be evaluated.
    pub fn max_degree(&self) -> usize {
        self.n_max + 1
    }

    /// Adds `delta` to h_n only, leaving a and b untouched. Test hook for fault injection.
    pub fn perturb_h(&mut self, n: usize, delta: f64) {
        self.h[n] += delta;
    }

    /// P_{n−1}, P_n, Q_{n−1}, Q_n by forward recurrence; Q_{−1} is taken as 0.
    pub fn pq<T>(&self, n: usize, z: T) -> PqValues<T>
    where
        T: Copy + From<f64> + Sub<f64, Output = T> + Sub<T, Output = T> + Mul<T, Output = T> + Mul<f64, Output = T>,
    {
        assert!(n <= self.max_degree(), "degree {n} beyond table");
        let zero = T::from(0.0);
        let mut v = PqValues {
            p_prev: zero,
            p: T::from(1.0),
            q_prev: zero,
            q: zero,
        };
        for k in 0..n {
            let shift = z - self.b[k];
            let p_next = shift * v.p - v.p_prev * self.a_or_zero(k);
            let q_next = if k == 0 {
                T::from(self.h[0])
            } else {
                shift * v.q - v.q_prev * self.a_or_zero(k)
            };
            v = PqValues {
                p_prev: v.p,
                p: p_next,
                q_prev: v.q,
                q: q_next,
            };
        }
        v
    }

    fn a_or_zero(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.a[k - 1]
        }
    }

    pub fn eval_p(&self, n: usize, z: Complex64) -> Complex64 {
        self.pq(n, z).p
    }

    pub fn eval_q(&self, n: usize, z: Complex64) -> Complex64 {
        self.pq(n, z).q
    }

    /// |P_{n−1}Q_n − P_nQ_{n−1} − h_{n−1}| relative to the size of the two products,
    /// which bounds what floating point can resolve.
    pub fn wronskian_residual(&self, n: usize, z: Complex64) -> f64 {
        let v = self.pq(n, z);
        let (l, r) = (v.p_prev * v.q, v.p * v.q_prev);
        let scale = (l.norm() + r.norm()).max(self.h(n - 1));
        (l - r - self.h(n - 1)).norm() / scale
    }

    /// Π_{j<n} h_j, the product form of the Hankel determinant D_n.
    pub fn hankel_product(&self, n: usize) -> f64 {
        self.h[..n].iter().product()
    }

    /// m₁(n) = [[p₁(n), h_n], [1/h_{n−1}, −p₁(n)]] for n ≥ 1.
    pub fn m1(&self, n: usize) -> Matrix2<f64> {
        Matrix2::new(self.p1(n), self.h(n), 1.0 / self.h(n - 1), -self.p1(n))
    }

    /// Y_n(z) from P, Q and the closed form of ψ (n ≥ 1).
    pub fn y_matrix(
        &self,
        set: &IntervalSet,
        n: usize,
        z: Complex64,
    ) -> Result<Matrix2<Complex64>, OpolyError> {
        let psi = set.psi(z)?;
        let v = self.pq(n, z);
        let hp = self.h(n - 1);
        Ok(Matrix2::new(
            v.p,
            psi * v.p - v.q,
            v.p_prev / hp,
            (psi * v.p_prev - v.q_prev) / hp,
        ))
    }

    /// (Y_n)₁₂ = ∫ P_n(t)w₊(t)/(z−t) dt by quadrature, free of the cancellation
    /// in ψP_n − Q_n at large |z|.
    ///
    /// Outside the disc containing E the kernel is replaced by (t/z)ⁿ/(z−t),
    /// which differs from 1/(z−t) by a polynomial of degree n−1 in t.
    pub fn y12_cauchy(&self, engine: &InnerProductEngine, n: usize, z: Complex64) -> Complex64 {
        let reach = engine
            .rules
            .iter()
            .map(|r| r.band.0.abs().max(r.band.1.abs()))
            .fold(0.0, f64::max);
        let shifted = z.norm() > reach;
        engine
            .points()
            .map(|(t, w)| {
                let k = if shifted {
                    (t / z).powi(n as i32) / (z - t)
                } else {
                    1.0 / (z - t)
                };
                k * w * self.pq(n, t).p
            })
            .sum()
    }

    /// max_{m≠k≤n} |⟨P_m,P_k⟩|/sqrt(h_m h_k).
    pub fn orthogonality_defect(&self, engine: &InnerProductEngine, n: usize) -> f64 {
        let mut gram = DMatrix::<f64>::zeros(n + 1, n + 1);
        for (t, w) in engine.points() {
            let vals = self.values_real(n, t);
            for i in 0..=n {
                for j in 0..i {
                    gram[(i, j)] += w * vals[i] * vals[j];
                }
            }
        }
        let mut worst: f64 = 0.0;
        for i in 0..=n {
            for j in 0..i {
                worst = worst.max(gram[(i, j)].abs() / (self.h(i) * self.h(j)).sqrt());
            }
        }
        worst
    }

    fn values_real(&self, n: usize, t: f64) -> Vec<f64> {
        let mut out = vec![1.0];
        let (mut prev, mut cur) = (0.0, 1.0);
        for k in 0..n {
            let next = (t - self.b[k]) * cur - self.a_or_zero(k) * prev;
            prev = cur;
            cur = next;
            out.push(cur);
        }
        out
    }
}

/// Result of the moment-determinant route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HankelValue {
    pub det: f64,
    pub condition: f64,
    pub estimated_error: f64,
}

/// D_n = det(μ_{j+k})_{j,k<n} via symmetric equilibration and LU.
pub fn hankel_det(engine: &InnerProductEngine, n: usize) -> Result<HankelValue, OpolyError> {
    if n > HANKEL_MAX_N {
        return Err(OpolyError::IllConditioned {
            n,
            estimate: f64::INFINITY,
        });
    }
    if n == 0 {
        return Ok(HankelValue {
            det: 1.0,
            condition: 1.0,
            estimated_error: 0.0,
        });
    }
    let mu = engine.moments(2 * n - 2);
    let scale: Vec<f64> = (0..n).map(|j| 1.0 / mu[2 * j].sqrt()).collect();
    let h = DMatrix::from_fn(n, n, |j, k| mu[j + k] * scale[j] * scale[k]);
    let sv = h.clone().singular_values();
    let condition = sv.max() / sv.min();
    let estimated_error = n as f64 * condition * f64::EPSILON;
    if !(estimated_error <= HANKEL_MAX_ERROR) {
        return Err(OpolyError::IllConditioned {
            n,
            estimate: estimated_error,
        });
    }
    let det = h.lu().determinant() / scale.iter().map(|s| s * s).product::<f64>();
    Ok(HankelValue {
        det,
        condition,
        estimated_error,
    })
}

/// a_n, b_n from moment determinants, n = 1..=n_max; an oracle for small n only.
pub fn recurrence_from_moments(
    engine: &InnerProductEngine,
    n_max: usize,
) -> Result<(Vec<f64>, Vec<f64>), OpolyError> {
    // P_n is the monic polynomial with ⟨P_n, t^k⟩ = 0 for k < n; solve for its
    // coefficients directly and read h_n and p₁(n) off them.
    let mu = engine.moments(2 * n_max + 2);
    let mut h = vec![mu[0]];
    let mut p1 = vec![0.0];
    for n in 1..=n_max + 1 {
        let m = DMatrix::from_fn(n, n, |k, j| mu[k + j]);
        let rhs = nalgebra::DVector::from_fn(n, |k, _| -mu[k + n]);
        let c = m
            .lu()
            .solve(&rhs)
            .ok_or(OpolyError::IllConditioned { n, estimate: f64::INFINITY })?;
        let hn = mu[2 * n] + (0..n).map(|j| c[j] * mu[n + j]).sum::<f64>();
        h.push(hn);
        p1.push(c[n - 1]);
    }
    let a = (1..=n_max).map(|n| h[n] / h[n - 1]).collect();
    let b = (1..=n_max).map(|n| p1[n - 1] - p1[n]).collect();
    Ok((a, b))
}
