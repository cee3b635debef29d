//! Gauss-Jacobi rules matched to the endpoint behaviour of w₊ on every band.
//!
//! On a band [lo, hi] the weight behaves like (t−lo)^{−1/2} at a β end, (hi−t)^{1/2}
//! at an α end and (hi−t)^{−1/2} at β_{g+1}. The reference rule carries that
//! factor exactly; the remaining positive algebraic factor is folded into the
//! weights.

use crate::geometry::IntervalSet;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

pub const DEFAULT_ORDER: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("integrand is not finite at t = {t}")]
    NonFiniteSample { t: f64 },
    #[error("rule order {0} is below the minimum of 4")]
    OrderTooLow(usize),
}

/// Exponent of an endpoint factor in the Jacobi weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Exponent {
    MinusHalf,
    PlusHalf,
}

impl Exponent {
    pub fn value(self) -> f64 {
        match self {
            Exponent::MinusHalf => -0.5,
            Exponent::PlusHalf => 0.5,
        }
    }
}

/// Gauss rule on [−1, 1] for the weight (1+x)^left (1−x)^right, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiRule {
    pub left: Exponent,
    pub right: Exponent,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl JacobiRule {
    /// Golub-Welsch eigenvalues, then Newton polishing on the orthonormal
    /// recurrence and Christoffel weights for full relative accuracy.
    pub fn new(n: usize, left: Exponent, right: Exponent) -> JacobiRule {
        let (a, b) = (right.value(), left.value());
        let (diag, off) = jacobi_recurrence(n, a, b);
        let mu0 = jacobi_mass(left, right);
        let mut t = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            t[(i, i)] = diag[i];
            if i + 1 < n {
                t[(i, i + 1)] = off[i];
                t[(i + 1, i)] = off[i];
            }
        }
        let mut x: Vec<f64> = SymmetricEigen::new(t).eigenvalues.iter().copied().collect();
        x.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let mut weights = Vec::with_capacity(n);
        for xi in x.iter_mut() {
            for _ in 0..8 {
                let (p, dp, _) = orthonormal_eval(*xi, &diag, &off, mu0);
                let step = p / dp;
                *xi -= step;
                if step.abs() < 1e-17 {
                    break;
                }
            }
            let (_, _, sum_sq) = orthonormal_eval(*xi, &diag, &off, mu0);
            weights.push(1.0 / sum_sq);
        }
        JacobiRule {
            left,
            right,
            nodes: x,
            weights,
        }
    }

    /// Shared copy from a process-wide cache keyed by (n, exponents).
    pub fn cached(n: usize, left: Exponent, right: Exponent) -> Arc<JacobiRule> {
        type Cache = Mutex<HashMap<(usize, Exponent, Exponent), Arc<JacobiRule>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().unwrap().get(&(n, left, right)) {
            return rule.clone();
        }
        let rule = Arc::new(JacobiRule::new(n, left, right));
        cache
            .lock()
            .unwrap()
            .insert((n, left, right), rule.clone());
        rule
    }
}

/// ∫_{−1}^{1} (1+x)^left (1−x)^right dx for half-integer exponents.
fn jacobi_mass(left: Exponent, right: Exponent) -> f64 {
    match (left, right) {
        (Exponent::PlusHalf, Exponent::PlusHalf) => PI / 2.0,
        _ => PI,
    }
}

/// Monic recurrence of the Jacobi polynomials for (1−x)^a (1+x)^b:
/// diagonal entries α_k and off-diagonal sqrt(β_{k+1}).
fn jacobi_recurrence(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let ab = a + b;
    let diag = (0..n)
        .map(|k| {
            let s = 2.0 * k as f64 + ab;
            if k == 0 {
                (b - a) / (ab + 2.0)
            } else {
                (b * b - a * a) / (s * (s + 2.0))
            }
        })
        .collect();
    let off = (1..n)
        .map(|k| {
            let kf = k as f64;
            let s = 2.0 * kf + ab;
            let beta = if k == 1 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            beta.sqrt()
        })
        .collect();
    (diag, off)
}

/// Returns (p̃_n(x), p̃_n'(x), Σ_{k<n} p̃_k(x)²) for the orthonormal family.
fn orthonormal_eval(x: f64, diag: &[f64], off: &[f64], mu0: f64) -> (f64, f64, f64) {
    let n = diag.len();
    let mut p_prev = 0.0;
    let mut p = 1.0 / mu0.sqrt();
    let mut d_prev = 0.0;
    let mut d = 0.0;
    let mut sum_sq = 0.0;
    for k in 0..n {
        sum_sq += p * p;
        // Last coefficient is arbitrary for the zero set of p̃_n; any positive value works.
        let beta_next = if k + 1 < n { off[k] } else { 1.0 };
        let beta_k = if k == 0 { 0.0 } else { off[k - 1] };
        let p_next = ((x - diag[k]) * p - beta_k * p_prev) / beta_next;
        let d_next = ((x - diag[k]) * d + p - beta_k * d_prev) / beta_next;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d, sum_sq)
}

/// Rule on a single band, with w₊ folded into the weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandRule {
    pub band: (f64, f64),
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub exponent_pair: (Exponent, Exponent),
}

/// One rule per band; integrates against w₊ over E.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerProductEngine {
    pub rules: Vec<BandRule>,
    pub order: usize,
}

impl InnerProductEngine {
    pub fn new(set: &IntervalSet, order: usize) -> Result<Self, QuadratureError> {
        if order < 4 {
            return Err(QuadratureError::OrderTooLow(order));
        }
        let g = set.genus();
        let rules = set
            .bands()
            .into_iter()
            .enumerate()
            .map(|(k, (lo, hi))| {
                let right = if k < g {
                    Exponent::PlusHalf
                } else {
                    Exponent::MinusHalf
                };
                let left = Exponent::MinusHalf;
                let reference = JacobiRule::cached(order, left, right);
                let half = 0.5 * (hi - lo);
                let scale = half.powf(1.0 + left.value() + right.value());
                let (nodes, weights) = reference
                    .nodes
                    .iter()
                    .zip(&reference.weights)
                    .map(|(&x, &w)| {
                        let t = lo + half * (x + 1.0);
                        (t, w * scale * set.weight_smooth_part(t, lo, hi))
                    })
                    .unzip();
                BandRule {
                    band: (lo, hi),
                    nodes,
                    weights,
                    exponent_pair: (left, right),
                }
            })
            .collect();
        Ok(InnerProductEngine { rules, order })
    }

    /// All (node, weight) pairs, band by band.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rules
            .iter()
            .flat_map(|r| r.nodes.iter().copied().zip(r.weights.iter().copied()))
    }

    /// ∫_E f(t) w₊(t) dt.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> Result<f64, QuadratureError> {
        let mut sum = 0.0;
        for (t, w) in self.points() {
            let v = f(t);
            if !v.is_finite() {
                return Err(QuadratureError::NonFiniteSample { t });
            }
            sum += w * v;
        }
        Ok(sum)
    }

    /// μ_k = ∫ t^k w₊ dt for k = 0..=k_max.
    pub fn moments(&self, k_max: usize) -> Vec<f64> {
        let mut mu = vec![0.0; k_max + 1];
        for (t, w) in self.points() {
            let mut p = w;
            for m in mu.iter_mut() {
                *m += p;
                p *= t;
            }
        }
        mu
    }
}

pub fn build_rules(set: &IntervalSet, order: usize) -> Result<InnerProductEngine, QuadratureError> {
    InnerProductEngine::new(set, order)
}
