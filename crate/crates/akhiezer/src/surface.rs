//! The hyperelliptic curve y² = Π(z − δ_j), its first-kind differentials dω,
//! the third-kind differential dΩ with poles at ∞±, and Abelian integrals
//! based at β_{g+1}.
//!
//! Cycle basis. a_k is the loop through the gaps k..g, crossing sheets on the
//! bands in between; b_k encircles the band [β_{k−1}, α_k]. For f = z^p the
//! periods of f/y dz are
//!
//! ```text
//! a_k:  −2 Σ_{m=k}^{g} ∫_{α_m}^{β_m} f/y dt
//! b_k:   2 ∫_{β_{k−1}}^{α_k} f/y₊ dt
//! ```
//!
//! In this basis B is purely imaginary, L is real, and the capacity read off
//! from Ω at infinity is the transfinite diameter of E.

use crate::geometry::IntervalSet;
use crate::numerics::unit_legendre;
use crate::quadrature::{Exponent, JacobiRule};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::OnceLock;
use thiserror::Error;

pub const DEFAULT_PERIOD_ORDER: usize = 200;
/// A is rejected as singular above this condition number.
pub const MAX_PERIOD_CONDITION: f64 = 1e12;

type C = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("{z} lies on a band")]
    OnCut { z: Complex64 },
    #[error("{z} is a branch point; use the endpoint evaluators")]
    PathDegenerate { z: Complex64 },
    #[error("period matrix A is numerically singular (condition {condition:.3e})")]
    SingularPeriodMatrix { condition: f64 },
}

/// The reference sheet of y² = Π(z − δ_j), with y ~ z^{g+1} as z → +∞.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperellipticCurve {
    set: IntervalSet,
}

impl HyperellipticCurve {
    pub fn new(set: IntervalSet) -> Self {
        HyperellipticCurve { set }
    }

    pub fn set(&self) -> &IntervalSet {
        &self.set
    }

    pub fn genus(&self) -> usize {
        self.set.genus()
    }

    /// Product of principal roots; analytic off the bands.
    pub fn y(&self, z: C) -> Result<C, SurfaceError> {
        if self.set.on_cut(z) {
            return Err(SurfaceError::OnCut { z });
        }
        Ok(self.y_raw(z))
    }

    /// Boundary value on the real axis from above or below, through the sign of
    /// a zero imaginary part.
    pub fn y_limit(&self, t: f64, upper: bool) -> C {
        self.y_raw(C::new(t, if upper { 0.0 } else { -0.0 }))
    }

    fn y_raw(&self, z: C) -> C {
        self.set.deltas().iter().map(|&d| (z - d).sqrt()).product()
    }

    /// y(z)/sqrt(z − δ_skip).
    fn y_without(&self, z: C, skip: usize) -> C {
        self.set
            .deltas()
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != skip)
            .map(|(_, &d)| (z - d).sqrt())
            .product()
    }

    fn is_branch_point(&self, z: C) -> Option<usize> {
        let tol = 1e-14 * self.set.diameter();
        self.set
            .deltas()
            .iter()
            .position(|&d| (z - d).norm() <= tol)
    }
}

/// y(z) at z for the reference sheet.
pub fn branch_y(curve: &HyperellipticCurve, z: C) -> Result<C, SurfaceError> {
    curve.y(z)
}

/// Period data in the basis described in the module documentation. Indices are
/// 0-based: `b[(j, k)]` is B_{j+1,k+1}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodData {
    pub genus: usize,
    /// A_{jk} = ∮_{a_k} z^{g−j}/y dz.
    pub a: DMatrix<C>,
    pub a_inv: DMatrix<C>,
    pub a_condition: f64,
    pub b: DMatrix<C>,
    /// λ_0..λ_{g−1} of dΩ = (z^g + Σ λ_p z^p)/y dz.
    pub lambdas: Vec<C>,
    /// L_j = (1/2πi)∮_{b_j} dΩ.
    pub l: DVector<C>,
    /// ∫_{β_{g+1}}^{∞⁺} dω along the real axis.
    pub u_inf: DVector<C>,
    pub capacity: f64,
    /// D = 2 Σ_k ∫_{β_{g+1}}^{α_k} dω along the upper rim.
    pub d: DVector<C>,
    /// ∫_{β_{g+1}}^{α_k} dω and dΩ along the upper rim, k = 1..g.
    pub alpha_abel: Vec<DVector<C>>,
    pub alpha_omega: Vec<C>,
    /// ∮_a of z^p/y and ∮_b of z^p/y, p = 0..=g, per cycle.
    pub a_periods: Vec<Vec<C>>,
    pub b_periods: Vec<Vec<C>>,
    pub order: usize,
}

impl PeriodData {
    /// Coefficients (c_0..c_g) of dΩ in the monomials z^p/y.
    pub fn omega_coeffs(&self) -> Vec<C> {
        let mut c = self.lambdas.clone();
        c.push(C::from(1.0));
        c
    }

    /// ∫ dω_j from the integrals of z^p/y, p = 0..=g (only p < g enters).
    pub fn omega_vector(&self, moments: &[C]) -> DVector<C> {
        let g = self.genus;
        let v = DVector::from_iterator(g, (0..g).map(|k| moments[g - 1 - k]));
        &self.a_inv * v
    }

    pub fn omega_scalar(&self, moments: &[C]) -> C {
        self.omega_coeffs().iter().zip(moments).map(|(c, m)| c * m).sum()
    }

    /// ∮_{a_j} dω_k; the identity by construction.
    pub fn a_normalization(&self) -> DMatrix<C> {
        let g = self.genus;
        let mut m = DMatrix::zeros(g, g);
        for k in 0..g {
            m.set_column(k, &self.omega_vector(&self.a_periods[k]));
        }
        m.transpose()
    }

    /// ∮_{a_j} dΩ, which the λ's make vanish.
    pub fn omega_a_periods(&self) -> Vec<C> {
        self.a_periods.iter().map(|p| self.omega_scalar(p)).collect()
    }

    /// Solve D = n + Bm for real (n, m); returns the distance of n and m to the
    /// nearest integers.
    pub fn lattice_defect(&self, v: &DVector<C>) -> f64 {
        let g = self.genus;
        if g == 0 {
            return 0.0;
        }
        let im_b = self.b.map(|x| x.im);
        let re_b = self.b.map(|x| x.re);
        let Some(inv) = im_b.try_inverse() else {
            return f64::INFINITY;
        };
        let m = inv * v.map(|x| x.im);
        let n = v.map(|x| x.re) - re_b * &m;
        m.iter()
            .chain(n.iter())
            .map(|x| (x - x.round()).abs())
            .fold(0.0, f64::max)
    }
}

/// Integrals of t^p/y, p = 0..=g, over [lo, hi] between two consecutive
/// endpoints, with y taken from above. The two end factors of y are removed
/// exactly and carried by a Chebyshev rule.
fn segment_moments(curve: &HyperellipticCurve, lo: f64, hi: f64, order: usize) -> Vec<C> {
    let g = curve.genus();
    let rule = JacobiRule::cached(order, Exponent::MinusHalf, Exponent::MinusHalf);
    let half = 0.5 * (hi - lo);
    let mut out = vec![C::from(0.0); g + 1];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let t = lo + half * (x + 1.0);
        // y(t + i0) = i·sqrt(t − lo)·sqrt(hi − t)·Π_{others} sqrt(t − δ + i0)
        let rest: C = curve
            .set
            .deltas()
            .iter()
            .filter(|&&d| d != lo && d != hi)
            .map(|&d| C::new(t - d, 0.0).sqrt())
            .product();
        let base = C::from(w) / (C::i() * rest);
        let mut tp = C::from(1.0);
        for m in out.iter_mut() {
            *m += base * tp;
            tp *= t;
        }
    }
    out
}

const PANEL: usize = 20;
const ADAPT_TOL: f64 = 1e-14;
const MAX_DEPTH: usize = 48;

fn panel_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| unit_legendre(PANEL))
}

fn panel<F: Fn(f64) -> Vec<C>>(f: &F, a: f64, b: f64, dim: usize) -> Vec<C> {
    let mut out = vec![C::from(0.0); dim];
    for &(x, w) in panel_rule() {
        let v = f(a + (b - a) * x);
        for (o, vi) in out.iter_mut().zip(v) {
            *o += vi * (w * (b - a));
        }
    }
    out
}

fn vec_max(v: &[C]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// ∫_a^b f by bisection on 20-point Gauss-Legendre panels, with error measured
/// against the size of the whole integral.
fn adaptive<F: Fn(f64) -> Vec<C>>(f: &F, a: f64, b: f64, dim: usize) -> Vec<C> {
    let whole = panel(f, a, b, dim);
    let scale = vec_max(&whole).max(1e-300);
    refine(f, a, b, whole, dim, scale, 0)
}

fn refine<F: Fn(f64) -> Vec<C>>(
    f: &F,
    a: f64,
    b: f64,
    whole: Vec<C>,
    dim: usize,
    scale: f64,
    depth: usize,
) -> Vec<C> {
    let m = 0.5 * (a + b);
    let left = panel(f, a, m, dim);
    let right = panel(f, m, b, dim);
    let sum: Vec<C> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
    let err = sum
        .iter()
        .zip(&whole)
        .map(|(s, w)| (s - w).norm())
        .fold(0.0, f64::max);
    if err <= ADAPT_TOL * scale.max(vec_max(&sum)) || depth >= MAX_DEPTH || b - a < 1e-12 {
        return sum;
    }
    let l = refine(f, a, m, left, dim, scale, depth + 1);
    let r = refine(f, m, b, right, dim, scale, depth + 1);
    l.iter().zip(&r).map(|(x, y)| x + y).collect()
}

fn powers(z: C, count: usize) -> impl Iterator<Item = C> {
    std::iter::successors(Some(C::from(1.0)), move |p| Some(p * z)).take(count)
}

impl HyperellipticCurve {
    /// ∫ z^p/y dz, p = 0..=g, along the straight segment z0 → z1. When z0 is
    /// the branch point δ_j (`branch = Some(j)`) the substitution z = z0 + d·u²
    /// is used, and sqrt(z − z0) = u·sqrt(d) is taken exactly rather than from
    /// the rounded difference.
    fn segment(&self, z0: C, z1: C, branch: Option<usize>) -> Vec<C> {
        let dim = self.genus() + 1;
        let d = z1 - z0;
        let root_d = d.sqrt();
        let f = |u: f64| -> Vec<C> {
            let (z, k) = match branch {
                Some(j) => {
                    let z = z0 + d * (u * u);
                    (z, d * 2.0 / (root_d * self.y_without(z, j)))
                }
                None => {
                    let z = z0 + d * u;
                    (z, d / self.y_raw(z))
                }
            };
            powers(z, dim).map(|p| p * k).collect()
        };
        adaptive(&f, 0.0, 1.0, dim)
    }

    /// ∫_{β_{g+1}}^{x} z^p/y dz for real x > β_{g+1}, or to +∞ when `x` is None.
    /// Beyond β_{g+1} + diam/2 the variable s = (diam/2)/(z − β_{g+1}) is used.
    /// `integrand(z, r)` receives r = sqrt(z − β_{g+1}) computed exactly.
    fn real_tail(&self, x: Option<f64>, integrand: &dyn Fn(f64, f64) -> Vec<C>, dim: usize) -> Vec<C> {
        let b = self.set.right();
        let d = 0.5 * self.set.diameter();
        let near_end = x.map_or(d, |x| (x - b).min(d));
        let root = near_end.sqrt();
        let near = |u: f64| -> Vec<C> {
            let z = b + near_end * u * u;
            integrand(z, root * u)
                .into_iter()
                .map(|v| v * (2.0 * near_end * u))
                .collect()
        };
        let mut out = adaptive(&near, 0.0, 1.0, dim);
        let s_end = match x {
            Some(x) if x - b <= d => return out,
            Some(x) => d / (x - b),
            None => 0.0,
        };
        let far = |s: f64| -> Vec<C> {
            if s == 0.0 {
                return vec![C::from(0.0); dim];
            }
            let z = b + d / s;
            integrand(z, (d / s).sqrt()).into_iter().map(|v| v * (d / (s * s))).collect()
        };
        for (o, v) in out.iter_mut().zip(adaptive(&far, s_end, 1.0, dim)) {
            *o += v;
        }
        out
    }

    /// z^p/y at real z > β_{g+1}, given r = sqrt(z − β_{g+1}).
    fn monomials_over_y(&self, x: f64, r: f64) -> Vec<C> {
        let z = C::from(x);
        let y = self.y_without(z, self.set.deltas().len() - 1) * r;
        powers(z, self.genus() + 1).map(|p| p / y).collect()
    }

    /// ∫_{β_{g+1}}^{z} z^p/y dz, p = 0..=g, along the path of the module: the
    /// real axis for z > β_{g+1}, otherwise up (or down) to height h, across,
    /// and vertically to z.
    fn path_moments(&self, z: C, height: Option<f64>, end_branch: Option<usize>) -> Vec<C> {
        let g = self.genus();
        let b = self.set.right();
        if z.im == 0.0 && z.re > b {
            return self.real_tail(Some(z.re), &|x, r| self.monomials_over_y(x, r), g + 1);
        }
        let sigma = if z.im < 0.0 { -1.0 } else { 1.0 };
        let h = height
            .unwrap_or(0.25 * self.set.diameter())
            .max(z.im.abs());
        let p1 = C::new(b, sigma * h);
        let p2 = C::new(z.re, sigma * h);
        let last = self.set.deltas().len() - 1;
        let mut out = self.segment(C::from(b), p1, Some(last));
        let add = |out: &mut Vec<C>, v: Vec<C>, sign: f64| {
            for (o, x) in out.iter_mut().zip(v) {
                *o += x * sign;
            }
        };
        add(&mut out, self.segment(p1, p2, None), 1.0);
        if p2 != z {
            match end_branch {
                Some(j) => add(&mut out, self.segment(z, p2, Some(j)), -1.0),
                None => add(&mut out, self.segment(p2, z, None), 1.0),
            }
        }
        out
    }
}

/// Period data for `curve` with `order`-point rules on every band and gap.
pub fn periods(curve: &HyperellipticCurve, order: usize) -> Result<PeriodData, SurfaceError> {
    let set = curve.set();
    let g = curve.genus();
    let band: Vec<Vec<C>> = set
        .bands()
        .iter()
        .map(|&(lo, hi)| {
            segment_moments(curve, lo, hi, order)
                .into_iter()
                .map(|m| m * 2.0)
                .collect()
        })
        .collect();
    let gap: Vec<Vec<C>> = set
        .gaps()
        .iter()
        .map(|&(lo, hi)| segment_moments(curve, lo, hi, order))
        .collect();
    let sum_gaps = |from: usize| -> Vec<C> {
        (0..=g)
            .map(|p| gap[from..].iter().map(|m| m[p]).sum())
            .collect()
    };
    let a_periods: Vec<Vec<C>> = (0..g)
        .map(|k| sum_gaps(k).into_iter().map(|m| m * -2.0).collect())
        .collect();
    let b_periods: Vec<Vec<C>> = band[..g].to_vec();

    let a = DMatrix::from_fn(g, g, |j, k| a_periods[k][g - 1 - j]);
    let a_condition = if g == 0 {
        1.0
    } else {
        let sv = a.clone().svd(false, false).singular_values;
        sv.max() / sv.min()
    };
    if !(a_condition <= MAX_PERIOD_CONDITION) {
        return Err(SurfaceError::SingularPeriodMatrix { condition: a_condition });
    }
    let a_inv = a.clone().try_inverse().ok_or(SurfaceError::SingularPeriodMatrix {
        condition: a_condition,
    })?;

    let m = DMatrix::from_fn(g, g, |k, p| a_periods[k][p]);
    let rhs = DVector::from_fn(g, |k, _| -a_periods[k][g]);
    let lambdas: Vec<C> = if g == 0 {
        Vec::new()
    } else {
        m.lu()
            .solve(&rhs)
            .ok_or(SurfaceError::SingularPeriodMatrix { condition: f64::INFINITY })?
            .iter()
            .copied()
            .collect()
    };

    let mut pd = PeriodData {
        genus: g,
        a,
        a_inv,
        a_condition,
        b: DMatrix::zeros(g, g),
        lambdas,
        l: DVector::zeros(g),
        u_inf: DVector::zeros(g),
        capacity: 0.0,
        d: DVector::zeros(g),
        alpha_abel: Vec::new(),
        alpha_omega: Vec::new(),
        a_periods,
        b_periods,
        order,
    };
    for k in 0..g {
        let col = pd.omega_vector(&pd.b_periods[k]);
        pd.b.set_column(k, &col);
    }
    let two_pi_i = C::new(0.0, 2.0 * PI);
    pd.l = DVector::from_fn(g, |k, _| pd.omega_scalar(&pd.b_periods[k]) / two_pi_i);

    if g > 0 {
        let tail = curve.real_tail(None, &|x, r| curve.monomials_over_y(x, r)[..g].to_vec(), g);
        let mut padded = tail;
        padded.push(C::from(0.0));
        pd.u_inf = pd.omega_vector(&padded);
    }

    // C(E) = (β_{g+1} − c)·exp(−∫_{β_{g+1}}^∞ (dΩ/dz − 1/(z − c)) dz), c the centre of E
    let c = 0.5 * (set.left() + set.right());
    let coeffs = pd.omega_coeffs();
    let reg = curve.real_tail(
        None,
        &|x, r| {
            let v: C = curve
                .monomials_over_y(x, r)
                .iter()
                .zip(&coeffs)
                .map(|(m, c)| m * c)
                .sum();
            vec![v - 1.0 / (x - c)]
        },
        1,
    )[0];
    pd.capacity = (set.right() - c) * (-reg.re).exp();

    // Upper rim from β_{g+1} back to α_m covers bands m..g and gaps m..g.
    for m in 1..=g {
        let rim: Vec<C> = (0..=g)
            .map(|p| {
                let bands: C = band[m..=g].iter().map(|v| v[p]).sum();
                let gaps: C = gap[m - 1..g].iter().map(|v| v[p]).sum();
                -0.5 * bands - gaps
            })
            .collect();
        pd.alpha_abel.push(pd.omega_vector(&rim));
        pd.alpha_omega.push(pd.omega_scalar(&rim));
    }
    pd.d = pd.alpha_abel.iter().fold(DVector::zeros(g), |s, v| s + v * C::from(2.0));
    Ok(pd)
}

/// Curve together with its period data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Surface {
    pub curve: HyperellipticCurve,
    pub periods: PeriodData,
}

impl Surface {
    pub fn new(set: IntervalSet, order: usize) -> Result<Self, SurfaceError> {
        let curve = HyperellipticCurve::new(set);
        let periods = periods(&curve, order)?;
        Ok(Surface { curve, periods })
    }

    pub fn genus(&self) -> usize {
        self.curve.genus()
    }

    fn moments(&self, z: C, height: Option<f64>) -> Result<Vec<C>, SurfaceError> {
        let g = self.genus();
        if let Some(j) = self.curve.is_branch_point(z) {
            if self.curve.set.deltas()[j] == self.curve.set.right() {
                return Ok(vec![C::from(0.0); g + 1]);
            }
            return Err(SurfaceError::PathDegenerate { z });
        }
        if self.curve.set.on_cut(z) {
            return Err(SurfaceError::OnCut { z });
        }
        Ok(self.curve.path_moments(z, height, None))
    }

    /// (∫_{β_{g+1}}^{z} dω, ∫_{β_{g+1}}^{z} dΩ) along the standard path.
    pub fn integrals(&self, z: C) -> Result<(DVector<C>, C), SurfaceError> {
        self.integrals_with_height(z, None)
    }

    /// Same with the horizontal leg at height `height`, for path-independence checks.
    pub fn integrals_with_height(
        &self,
        z: C,
        height: Option<f64>,
    ) -> Result<(DVector<C>, C), SurfaceError> {
        let m = self.moments(z, height)?;
        Ok((self.periods.omega_vector(&m), self.periods.omega_scalar(&m)))
    }

    pub fn abel(&self, z: C) -> Result<DVector<C>, SurfaceError> {
        Ok(self.integrals(z)?.0)
    }

    pub fn omega3(&self, z: C) -> Result<C, SurfaceError> {
        Ok(self.integrals(z)?.1)
    }

    /// Integrals to the branch point δ_j, approached from the upper half-plane.
    pub fn integrals_to_endpoint(
        &self,
        j: usize,
        height: Option<f64>,
    ) -> (DVector<C>, C) {
        let d = self.curve.set.deltas()[j];
        let m = if d == self.curve.set.right() {
            vec![C::from(0.0); self.genus() + 1]
        } else {
            self.curve.path_moments(C::from(d), height, Some(j))
        };
        (self.periods.omega_vector(&m), self.periods.omega_scalar(&m))
    }

    /// ln C(E) + Ω(z) − ln z, which vanishes as z → ∞ on the reference sheet.
    pub fn omega_asymptotic_defect(&self, z: C) -> Result<f64, SurfaceError> {
        let om = self.omega3(z)?;
        Ok((om - z.ln() + self.periods.capacity.ln()).norm())
    }
}
