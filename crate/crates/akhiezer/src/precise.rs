//! Double-double replica of the quadrature → Stieltjes → residue chain.
//!
//! Central differences in the endpoints subtract two nearly equal solves. In
//! double precision the roundoff of each solve, divided by ε, swamps the O(ε²)
//! truncation at the steps of interest. The reference Gauss rules stay in f64:
//! they are a fixed measure on [−1, 1], and only the affine map and weight
//! factors depend on the endpoints.

use crate::quadrature::{Exponent, JacobiRule};
use twofloat::{consts::FRAC_1_PI, TwoFloat as T};

pub(crate) type Mat = [[T; 2]; 2];

/// Recurrence data on the perturbed geometry, up to depth `h.len() − 1`.
pub(crate) struct Chain {
    g: usize,
    deltas: Vec<T>,
    a: Vec<T>,
    b: Vec<T>,
    pub h: Vec<T>,
}

pub(crate) fn to_f64(x: T) -> f64 {
    x.hi() + x.lo()
}

/// Quotient with one Newton correction; the library division alone stops near 1e-17.
pub(crate) fn div(a: T, b: T) -> T {
    let q = a / b;
    q + (a - q * b) / b
}

impl Chain {
    /// `deltas` in the usual order α_1..α_g, β_0..β_{g+1}.
    pub fn new(deltas: Vec<T>, g: usize, order: usize, depth: usize) -> Chain {
        let (alphas, betas) = deltas.split_at(g);
        let mut nodes = Vec::new();
        for k in 0..=g {
            let (lo, hi, right) = if k < g {
                (betas[k], alphas[k], Exponent::PlusHalf)
            } else {
                (betas[g], betas[g + 1], Exponent::MinusHalf)
            };
            let rule = JacobiRule::cached(order, Exponent::MinusHalf, right);
            let half = (hi - lo) * 0.5;
            let scale = if right == Exponent::PlusHalf { half } else { T::from(1.0) };
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                let t = lo + half * (x + 1.0);
                let mut r = T::from(1.0);
                for (j, &a) in alphas.iter().enumerate() {
                    if !(k < g && j == k) {
                        r *= (t - a).abs();
                    }
                }
                for (j, &b) in betas.iter().enumerate() {
                    let at_end = j == k || (k == g && j == g + 1);
                    if !at_end {
                        r = div(r, (t - b).abs());
                    }
                }
                nodes.push((t, scale * r.sqrt() * FRAC_1_PI * w));
            }
        }
        let zero = T::from(0.0);
        let mut p_prev = vec![zero; nodes.len()];
        let mut p = vec![T::from(1.0); nodes.len()];
        let (mut a, mut b, mut h) = (Vec::new(), Vec::new(), Vec::new());
        for n in 0..=depth {
            let (mut hn, mut tn) = (zero, zero);
            for (i, &(t, w)) in nodes.iter().enumerate() {
                let wp = w * p[i] * p[i];
                hn += wp;
                tn += wp * t;
            }
            let bn = div(tn, hn);
            let an = if n > 0 { div(hn, h[n - 1]) } else { zero };
            if n > 0 {
                a.push(an);
            }
            h.push(hn);
            b.push(bn);
            for (i, &(t, _)) in nodes.iter().enumerate() {
                let next = (t - bn) * p[i] - an * p_prev[i];
                p_prev[i] = p[i];
                p[i] = next;
            }
        }
        Chain { g, deltas, a, b, h }
    }

    pub fn deltas(&self) -> &[T] {
        &self.deltas
    }

    /// (P_{n−1}, P_n, Q_{n−1}, Q_n) at x.
    fn pq(&self, n: usize, x: T) -> [T; 4] {
        let zero = T::from(0.0);
        let (mut pp, mut p, mut qp, mut q) = (zero, T::from(1.0), zero, zero);
        for k in 0..n {
            let shift = x - self.b[k];
            let ak = if k == 0 { zero } else { self.a[k - 1] };
            let pn = shift * p - ak * pp;
            let qn = if k == 0 { self.h[0] } else { shift * q - ak * qp };
            (pp, p, qp, q) = (p, pn, q, qn);
        }
        [pp, p, qp, q]
    }

    /// C_j(n) for every endpoint, as for the f64 residues.
    pub fn residues(&self, n: usize) -> Vec<Mat> {
        let h = self.h[n - 1];
        self.deltas
            .iter()
            .enumerate()
            .map(|(j, &d)| {
                let [pp, p, qp, q] = self.pq(n, d);
                let s = if j < self.g { -0.5 } else { 0.5 };
                [
                    [div(q * pp, h) * s, -(q * p) * s],
                    [div(qp * pp, h * h) * s, -div(qp * p, h) * s],
                ]
            })
            .collect()
    }
}
