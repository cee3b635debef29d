//! Theta-function expressions for P_n, h_n, a_n, b_n and D_n, the Baker–Akhiezer
//! matrix Ψ_n on both sheets, and Ψ_n assembled directly from P_n and Q_n.
//!
//! With u∞ = ∫_{β_{g+1}}^{∞⁺} dω, L = −2u∞ and C = C(E):
//!
//! ```text
//! h_n     = 2C^{2n} Θ((n+½)L) / Θ((n−½)L),                     h_0 = 1
//! a_1     = 2C² Θ(3L/2) / Θ(L/2)
//! a_n     = C² Θ((n+½)L) Θ((n−3/2)L) / Θ((n−½)L)²,              n > 1
//! b_n     = κ + Σ_j (A⁻¹)_{j1} [Θ′_j/Θ((n−½)L) − Θ′_j/Θ((n−3/2)L) − 2Θ′_j/Θ(L/2)]
//! D_{n+1} = 2ⁿ C^{n(n+1)} Θ((2n+1)u∞) / Θ(u∞)
//! P_n(z)  = [Θ(nL + A)e^{nΩ} + Θ(nL − A)e^{−nΩ}] / Θ(A) · Θ(u∞)/Θ(u∞ + nL) · Cⁿ
//! ```
//!
//! where A = ∫_{β_{g+1}}^{z} dω and Ω = ∫_{β_{g+1}}^{z} dΩ. κ is the 1/z² coefficient
//! of w, which equals ½Σ_{j=1}^{g}(β_j − α_j) when β₀ = −1 and β_{g+1} = 1.

use crate::geometry::{GeometryError, IntervalSet};
use crate::numerics::laurent_at_infinity;
use crate::opoly::{OpolyError, RecurrenceTable};
use crate::surface::{Surface, SurfaceError};
use crate::theta::{ThetaContext, ThetaError, DIVISOR_THRESHOLD};
use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;
use thiserror::Error;

type C = Complex64;
pub type C2 = Matrix2<C>;

/// Relative displacement used to step off the theta divisor when evaluating P_n.
pub const DIVISOR_SHIFT: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormulaError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Opoly(#[from] OpolyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("degree {0} is outside the range of this formula")]
    Degree(usize),
}

/// Which preimage of z: P on the reference sheet or its involution P*.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sheet {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaPipeline {
    pub surface: Surface,
    pub theta: ThetaContext,
    pub kappa: f64,
}

/// P_n from the theta display, with a note when z was moved off the divisor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaPolynomialValue {
    pub value: C,
    pub shifted: bool,
    /// |Θ(A(z))| relative to Σ|terms|.
    pub conditioning: f64,
}

impl ThetaPipeline {
    pub fn new(set: IntervalSet, order: usize, tol: f64) -> Result<Self, FormulaError> {
        let kappa = set.series_coeffs().kappa;
        let surface = Surface::new(set, order)?;
        let theta = ThetaContext::new(surface.periods.b.clone(), tol)?;
        Ok(ThetaPipeline {
            surface,
            theta,
            kappa,
        })
    }

    pub fn genus(&self) -> usize {
        self.surface.genus()
    }

    pub fn capacity(&self) -> f64 {
        self.surface.periods.capacity
    }

    pub fn l(&self) -> &DVector<C> {
        &self.surface.periods.l
    }

    pub fn u_inf(&self) -> &DVector<C> {
        &self.surface.periods.u_inf
    }

    fn eval(&self, s: &DVector<C>) -> Result<crate::theta::ThetaValue, FormulaError> {
        Ok(self.theta.evaluate(s.as_slice())?)
    }

    fn th(&self, s: &DVector<C>) -> Result<C, FormulaError> {
        Ok(self.eval(s)?.value)
    }

    fn l_times(&self, x: f64) -> DVector<C> {
        self.l() * C::from(x)
    }

    pub fn h(&self, n: usize) -> Result<f64, FormulaError> {
        if n == 0 {
            return Ok(1.0);
        }
        let nf = n as f64;
        let ratio = self.th(&self.l_times(nf + 0.5))? / self.th(&self.l_times(nf - 0.5))?;
        Ok(2.0 * self.capacity().powi(2 * n as i32) * ratio.re)
    }

    pub fn a(&self, n: usize) -> Result<f64, FormulaError> {
        let c2 = self.capacity().powi(2);
        match n {
            0 => Err(FormulaError::Degree(0)),
            1 => {
                let r = self.th(&self.l_times(1.5))? / self.th(&self.l_times(0.5))?;
                Ok(2.0 * c2 * r.re)
            }
            _ => {
                let nf = n as f64;
                let mid = self.th(&self.l_times(nf - 0.5))?;
                let r = self.th(&self.l_times(nf + 0.5))? * self.th(&self.l_times(nf - 1.5))?
                    / (mid * mid);
                Ok(c2 * r.re)
            }
        }
    }

    fn dlog(&self, s: &DVector<C>) -> Result<Vec<C>, FormulaError> {
        let v = self.eval(s)?;
        let value = v.value.norm();
        if value < DIVISOR_THRESHOLD * v.scale {
            return Err(ThetaError::NearThetaDivisor {
                value,
                scale: v.scale,
            }
            .into());
        }
        Ok(v.gradient.iter().map(|d| d / v.value).collect())
    }

    pub fn b(&self, n: usize) -> Result<f64, FormulaError> {
        if n == 0 {
            return Err(FormulaError::Degree(0));
        }
        let nf = n as f64;
        let first = self.dlog(&self.l_times(nf - 0.5))?;
        let second = self.dlog(&self.l_times(nf - 1.5))?;
        let half = self.dlog(&self.l_times(0.5))?;
        let a_inv = &self.surface.periods.a_inv;
        let mut sum = C::from(0.0);
        for j in 0..self.genus() {
            sum += a_inv[(j, 0)] * (first[j] - second[j] - 2.0 * half[j]);
        }
        Ok(self.kappa + sum.re)
    }

    /// D_{n+1} = Π_{j≤n} h_j.
    pub fn hankel(&self, n: usize) -> Result<f64, FormulaError> {
        let nf = n as f64;
        let u = self.u_inf();
        let r = self.th(&(u * C::from(2.0 * nf + 1.0)))? / self.th(u)?;
        Ok(2f64.powi(n as i32) * self.capacity().powi((n * (n + 1)) as i32) * r.re)
    }

    /// c₁₂ = C^{2n} Θ(u∞ − nL)/Θ(u∞ + nL), the z^{−n} coefficient of Ψ_{n1} at ∞⁻.
    pub fn c12(&self, n: usize) -> Result<C, FormulaError> {
        let u = self.u_inf();
        let nl = self.l_times(n as f64);
        Ok(self.th(&(u - &nl))? / self.th(&(u + &nl))? * self.capacity().powi(2 * n as i32))
    }

    /// P_n(z) from the theta display, moving z by ±i·10⁻⁶·diam and averaging when
    /// Θ(A(z)) is too small to divide by.
    pub fn p_detailed(&self, n: usize, z: C) -> Result<ThetaPolynomialValue, FormulaError> {
        let (value, conditioning) = self.p_raw(n, z)?;
        if conditioning >= DIVISOR_THRESHOLD {
            return Ok(ThetaPolynomialValue {
                value,
                shifted: false,
                conditioning,
            });
        }
        let h = C::new(0.0, DIVISOR_SHIFT * self.surface.curve.set().diameter());
        let (up, cu) = self.p_raw(n, z + h)?;
        let (down, cd) = self.p_raw(n, z - h)?;
        Ok(ThetaPolynomialValue {
            value: 0.5 * (up + down),
            shifted: true,
            conditioning: cu.min(cd),
        })
    }

    pub fn p(&self, n: usize, z: C) -> Result<C, FormulaError> {
        Ok(self.p_detailed(n, z)?.value)
    }

    fn p_raw(&self, n: usize, z: C) -> Result<(C, f64), FormulaError> {
        let (a, om) = self.surface.integrals(z)?;
        self.p_display(n, &a, om)
    }

    /// The P_n display at given A and Ω, with |Θ(A)|/Σ|terms|.
    pub fn p_display(&self, n: usize, a: &DVector<C>, om: C) -> Result<(C, f64), FormulaError> {
        let nf = n as f64;
        let nl = self.l_times(nf);
        let den = self.eval(a)?;
        let num = self.th(&(&nl + a))? * (om * nf).exp() + self.th(&(&nl - a))? * (-om * nf).exp();
        let u = self.u_inf();
        let norm = self.th(u)? / self.th(&(u + &nl))? * self.capacity().powi(n as i32);
        Ok((num / den.value * norm, den.value.norm() / den.scale))
    }

    /// (Ψ_{n1}, Ψ_{n2}) at the preimage of z on `sheet`.
    pub fn psi(&self, n: usize, z: C, sheet: Sheet) -> Result<[C; 2], FormulaError> {
        let (mut a, mut om) = self.surface.integrals(z)?;
        if sheet == Sheet::Lower {
            a = -a;
            om = -om;
        }
        let nf = n as f64;
        let u = self.u_inf();
        let cap = self.capacity();
        let den = self.th(&a)?;
        let lu = self.th(u)?;
        let first = (om * nf).exp() * self.th(&(&a + self.l_times(nf)))? / den * lu
            / self.th(&(u + self.l_times(nf)))?
            * cap.powi(n as i32);
        let second = (om * (nf - 1.0)).exp() * self.th(&(&a + self.l_times(nf - 1.0)))? / den * lu
            / self.th(&(u - self.l_times(nf - 1.0)))?
            * cap.powf(1.0 - nf);
        Ok([first, second])
    }

    /// Ψ_n(z) = (Ψ⃗_n(P), Ψ⃗_n(P*)).
    pub fn psi_matrix(&self, n: usize, z: C) -> Result<C2, FormulaError> {
        let p = self.psi(n, z, Sheet::Upper)?;
        let q = self.psi(n, z, Sheet::Lower)?;
        Ok(C2::new(p[0], q[0], p[1], q[1]))
    }

    /// ψ₁(n) from Ψ_n(z)·diag(z^{−n}, z^{n−1}) = I + ψ₁/z + … by the trapezoid
    /// rule on a circle well outside E.
    pub fn psi1(&self, n: usize) -> Result<C2, FormulaError> {
        let set = self.surface.curve.set();
        let reach = set.left().abs().max(set.right().abs());
        let radius = 3.0 * reach;
        let nf = n as f64;
        let mut err = None;
        // each entry revisits the same circle; evaluate Ψ_n once per point
        let mut cache: HashMap<(u64, u64), C2> = HashMap::new();
        let mut entry = |i: usize, j: usize| {
            let coeffs = laurent_at_infinity(radius, 64, 2, |z| {
                let key = (z.re.to_bits(), z.im.to_bits());
                let m = match cache.get(&key) {
                    Some(m) => *m,
                    None => match self.psi_matrix(n, z) {
                        Ok(m) => *cache.entry(key).or_insert(m),
                        Err(e) => {
                            err = Some(e);
                            return C::from(0.0);
                        }
                    },
                };
                let scale = if j == 0 { z.powf(-nf) } else { z.powf(nf - 1.0) };
                m[(i, j)] * scale
            });
            coeffs[1]
        };
        let m = C2::new(entry(0, 0), entry(0, 1), entry(1, 0), entry(1, 1));
        match err {
            Some(e) => Err(e),
            None => Ok(m),
        }
    }
}

/// Ψ_n(z) assembled from P_n, Q_n and w:
/// (1/2πi)·[[(iπwP_n − Q_n)/w, (iπwP_n + Q_n)/w], [2(iπwP_{n−1} − Q_{n−1})/(h_{n−1}w), 2(iπwP_{n−1} + Q_{n−1})/(h_{n−1}w)]].
pub fn baker_direct(
    table: &RecurrenceTable,
    set: &IntervalSet,
    n: usize,
    z: C,
) -> Result<C2, FormulaError> {
    let w = set.w_complex(z)?;
    Ok(baker_with_w(table, n, z, w))
}

/// Boundary value of Ψ_n on a band from above or below.
pub fn baker_limit(
    table: &RecurrenceTable,
    set: &IntervalSet,
    n: usize,
    t: f64,
    upper: bool,
) -> Result<C2, FormulaError> {
    let w = set.w_limit(t, upper)?;
    Ok(baker_with_w(table, n, C::from(t), w))
}

fn baker_with_w(table: &RecurrenceTable, n: usize, z: C, w: C) -> C2 {
    let v = table.pq(n, z);
    let h = table.h(n - 1);
    let ipw = C::new(0.0, PI) * w;
    let k = 1.0 / C::new(0.0, 2.0 * PI);
    C2::new(
        (ipw * v.p - v.q) / w,
        (ipw * v.p + v.q) / w,
        (ipw * v.p_prev - v.q_prev) * 2.0 / (w * h),
        (ipw * v.p_prev + v.q_prev) * 2.0 / (w * h),
    ) * k
}

/// The relation between ψ₁ and m₁, checked entrywise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Psi1Check {
    pub n: usize,
    pub psi1: C2,
    /// [[p₁, h_n/2], [2/h_{n−1} − [n = 1], −p₁ − κ]].
    pub expected: Matrix2<f64>,
    pub residual: f64,
    /// Same comparison without the n = 1 correction.
    pub residual_uncorrected: f64,
    /// |(ψ₁)₁₂ − h_n/2|.
    pub h_residual: f64,
    /// |(ψ₁)₂₂ + p₁(n) + κ|.
    pub p1_residual: f64,
}

pub fn psi1_m1_check(
    pipeline: &ThetaPipeline,
    table: &RecurrenceTable,
    n: usize,
) -> Result<Psi1Check, FormulaError> {
    if n == 0 {
        return Err(FormulaError::Degree(0));
    }
    let psi1 = pipeline.psi1(n)?;
    let m1 = table.m1(n);
    let kappa = pipeline.kappa;
    let plain = Matrix2::new(m1[(0, 0)], 0.5 * m1[(0, 1)], 2.0 * m1[(1, 0)], m1[(1, 1)] - kappa);
    let mut expected = plain;
    if n == 1 {
        expected[(1, 0)] -= 1.0;
    }
    let dev = |e: &Matrix2<f64>| {
        (psi1 - e.map(C::from))
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max)
    };
    Ok(Psi1Check {
        n,
        psi1,
        expected,
        residual: dev(&expected),
        residual_uncorrected: dev(&plain),
        h_residual: (psi1[(0, 1)] - 0.5 * table.h(n)).norm(),
        p1_residual: (psi1[(1, 1)] + table.p1(n) + kappa).norm(),
    })
}

/// Least-squares fit of the theta P_n by a degree-n polynomial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolynomialFit {
    pub n: usize,
    pub samples: usize,
    /// Largest |fit − P_n^θ| relative to max(1, max|P_n^θ|).
    pub residual: f64,
    /// Leading coefficient in z.
    pub leading: C,
}

/// Samples on the circle |z − c| = 0.75·diam around the centre c of E, fitted in
/// ζ = (z − c)/ρ where the sampled Vandermonde matrix is well conditioned.
pub fn polynomial_fit(
    pipeline: &ThetaPipeline,
    n: usize,
    extra: usize,
) -> Result<PolynomialFit, FormulaError> {
    let set = pipeline.surface.curve.set();
    let centre = 0.5 * (set.left() + set.right());
    let rho = 0.75 * set.diameter();
    let count = n + 1 + extra;
    let mut v = DMatrix::<C>::zeros(count, n + 1);
    let mut f = DVector::<C>::zeros(count);
    for m in 0..count {
        let zeta = C::from_polar(1.0, 2.0 * PI * (m as f64 + 0.3) / count as f64);
        let z = centre + zeta * rho;
        f[m] = pipeline.p(n, z)?;
        for k in 0..=n {
            v[(m, k)] = zeta.powi(k as i32);
        }
    }
    let coef = v
        .clone()
        .svd(true, true)
        .solve(&f, 1e-14)
        .map_err(|_| FormulaError::Degree(n))?;
    let fitted = &v * &coef;
    let size = f.iter().map(|x| x.norm()).fold(1.0, f64::max);
    let residual = (fitted - &f).iter().map(|x| x.norm()).fold(0.0, f64::max) / size;
    Ok(PolynomialFit {
        n,
        samples: count,
        residual,
        leading: coef[n] / rho.powi(n as i32),
    })
}
