//! Riemann theta function Θ(s; B) = Σ_{t∈ℤ^g} exp(iπ(t,Bt) + 2πi(t,s)) by a
//! rectangular lattice sum with a certified truncation radius.
//!
//! With λ = λ_min(Im B) and σ = ‖Im s‖₂, a term is bounded by exp(−πλr² + 2πσr)
//! with r = ‖t‖₂. That is decreasing for r ≥ σ/λ, and ‖t‖₂ ≥ ‖t‖∞, so on the shell
//! ‖t‖∞ = m ≥ σ/λ every term is below exp(−πλm² + 2πσm). The shell holds
//! (2m+1)^g − (2m−1)^g points. Summing over m > R, with an extra factor 2πm
//! for the derivatives, gives the tail estimate.
//!
//! By default s is first reduced to s′ = s − Bm with m = round((Im B)⁻¹ Im s), so
//! that Im s′ lies in the half cell Im B·[−½, ½]^g, and then
//! Θ(s) = exp(−iπ(m,Bm) − 2πi(m,s′))·Θ(s′).

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

pub const DEFAULT_TOL: f64 = 1e-12;
/// Θ is treated as zero below this multiple of Σ|terms|.
pub const DIVISOR_THRESHOLD: f64 = 1e-10;

type C = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThetaError {
    #[error("period matrix is not symmetric (defect {0:.3e})")]
    NotSymmetric(f64),
    #[error("imaginary part of the period matrix is not positive definite (λ_min = {0:.3e})")]
    NotPositiveDefinite(f64),
    #[error("argument has {got} components, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("radius {radius} leaves a tail bound {bound:.3e} above tol {tol:.3e}")]
    RadiusInsufficient { radius: usize, bound: f64, tol: f64 },
    #[error("|Θ(s)| = {value:.3e} is below the divisor threshold (scale {scale:.3e})")]
    NearThetaDivisor { value: f64, scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaContext {
    pub b: DMatrix<C>,
    pub radius: usize,
    pub tol: f64,
    /// Largest ‖Im s‖₂ for which `radius` is certified.
    pub box_radius: f64,
    pub lambda_min: f64,
    /// Whether arguments are moved into the fundamental cell before summing.
    pub reduce: bool,
}

/// Θ, its gradient, and Σ|terms| as a conditioning scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaValue {
    pub value: C,
    pub gradient: Vec<C>,
    pub scale: f64,
}

impl ThetaContext {
    /// Reducing context, certified for every s.
    pub fn new(b: DMatrix<C>, tol: f64) -> Result<Self, ThetaError> {
        let half_cell = 0.5
            * (0..b.ncols())
                .map(|j| b.column(j).iter().map(|x| x.im * x.im).sum::<f64>().sqrt())
                .sum::<f64>();
        let mut ctx = Self::unreduced(b, tol, half_cell)?;
        ctx.reduce = true;
        Ok(ctx)
    }

    /// Context without reduction, certified for ‖Im s‖₂ ≤ `box_radius`.
    pub fn unreduced(b: DMatrix<C>, tol: f64, box_radius: f64) -> Result<Self, ThetaError> {
        let lambda_min = validate(&b)?;
        let g = b.nrows();
        let mut radius = 1;
        while tail_bound(g, lambda_min, radius, box_radius) > tol {
            radius += 1;
        }
        Ok(ThetaContext {
            b,
            radius,
            tol,
            box_radius,
            lambda_min,
            reduce: false,
        })
    }

    /// Context with a fixed radius; arguments are checked against it on evaluation.
    pub fn with_radius(b: DMatrix<C>, tol: f64, radius: usize) -> Result<Self, ThetaError> {
        let lambda_min = validate(&b)?;
        let g = b.nrows();
        // largest certified box, by bisection on the monotone tail bound
        let (mut lo, mut hi) = (0.0, 1.0);
        if tail_bound(g, lambda_min, radius, 0.0) > tol {
            hi = 0.0;
        } else {
            while tail_bound(g, lambda_min, radius, hi) <= tol && hi < 1e6 {
                lo = hi;
                hi *= 2.0;
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if tail_bound(g, lambda_min, radius, mid) <= tol {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        Ok(ThetaContext {
            b,
            radius,
            tol,
            box_radius: lo.min(hi),
            lambda_min,
            reduce: false,
        })
    }

    pub fn genus(&self) -> usize {
        self.b.nrows()
    }

    /// Tail bound of the truncated sum at s.
    pub fn tail_at(&self, s: &[C]) -> f64 {
        let sigma = s.iter().map(|x| x.im * x.im).sum::<f64>().sqrt();
        tail_bound(self.genus(), self.lambda_min, self.radius, sigma)
    }

    fn check(&self, s: &[C]) -> Result<(), ThetaError> {
        if s.len() != self.genus() {
            return Err(ThetaError::Dimension {
                expected: self.genus(),
                got: s.len(),
            });
        }
        let bound = self.tail_at(s);
        if bound > self.tol {
            return Err(ThetaError::RadiusInsufficient {
                radius: self.radius,
                bound,
                tol: self.tol,
            });
        }
        Ok(())
    }

    /// Θ(s) and ∂Θ/∂s_j for all j in one pass.
    pub fn evaluate(&self, s: &[C]) -> Result<ThetaValue, ThetaError> {
        if s.len() != self.genus() {
            return Err(ThetaError::Dimension {
                expected: self.genus(),
                got: s.len(),
            });
        }
        if !self.reduce || self.genus() == 0 {
            return self.lattice_sum(s);
        }
        let g = self.genus();
        let im = DMatrix::from_fn(g, g, |i, j| self.b[(i, j)].im);
        let target = nalgebra::DVector::from_iterator(g, s.iter().map(|x| x.im));
        let x = im.lu().solve(&target).unwrap_or_else(|| nalgebra::DVector::zeros(g));
        let m: Vec<f64> = x.iter().map(|v| v.round()).collect();
        if m.iter().all(|&v| v == 0.0) {
            return self.lattice_sum(s);
        }
        let shifted: Vec<C> = (0..g)
            .map(|i| s[i] - (0..g).map(|j| self.b[(i, j)] * m[j]).sum::<C>())
            .collect();
        let inner = self.lattice_sum(&shifted)?;
        let mut q = C::from(0.0);
        for i in 0..g {
            for j in 0..g {
                q += self.b[(i, j)] * (m[i] * m[j]);
            }
            q += shifted[i] * (2.0 * m[i]);
        }
        let factor = (C::new(0.0, -PI) * q).exp();
        Ok(ThetaValue {
            value: factor * inner.value,
            gradient: (0..g)
                .map(|j| factor * (inner.gradient[j] - C::new(0.0, 2.0 * PI * m[j]) * inner.value))
                .collect(),
            scale: factor.norm() * inner.scale,
        })
    }

    fn lattice_sum(&self, s: &[C]) -> Result<ThetaValue, ThetaError> {
        self.check(s)?;
        let g = self.genus();
        let r = self.radius as i64;
        let mut t = vec![-r; g];
        let mut value = C::from(0.0);
        let mut gradient = vec![C::from(0.0); g];
        let mut scale = 0.0;
        let ipi = C::new(0.0, PI);
        loop {
            let mut q = C::from(0.0);
            for i in 0..g {
                let ti = t[i] as f64;
                q += self.b[(i, i)] * (ti * ti);
                for j in 0..i {
                    q += self.b[(i, j)] * (2.0 * ti * t[j] as f64);
                }
                q += s[i] * (2.0 * ti);
            }
            let term = (ipi * q).exp();
            value += term;
            scale += term.norm();
            for i in 0..g {
                gradient[i] += term * C::new(0.0, 2.0 * PI * t[i] as f64);
            }
            // odometer over the box [−R, R]^g
            let mut i = 0;
            loop {
                if i == g {
                    return Ok(ThetaValue {
                        value,
                        gradient,
                        scale,
                    });
                }
                t[i] += 1;
                if t[i] <= r {
                    break;
                }
                t[i] = -r;
                i += 1;
            }
        }
    }

    pub fn theta(&self, s: &[C]) -> Result<C, ThetaError> {
        Ok(self.evaluate(s)?.value)
    }

    pub fn derivative(&self, s: &[C], j: usize) -> Result<C, ThetaError> {
        Ok(self.evaluate(s)?.gradient[j])
    }

    /// Θ′_j(s)/Θ(s).
    pub fn theta_dlog(&self, s: &[C], j: usize) -> Result<C, ThetaError> {
        let v = self.evaluate(s)?;
        let value = v.value.norm();
        if value < DIVISOR_THRESHOLD * v.scale {
            return Err(ThetaError::NearThetaDivisor {
                value,
                scale: v.scale,
            });
        }
        Ok(v.gradient[j] / v.value)
    }
}

fn validate(b: &DMatrix<C>) -> Result<f64, ThetaError> {
    let g = b.nrows();
    if b.ncols() != g {
        return Err(ThetaError::Dimension {
            expected: g,
            got: b.ncols(),
        });
    }
    if g == 0 {
        return Ok(f64::INFINITY);
    }
    let size = b.iter().map(|x| x.norm()).fold(1.0, f64::max);
    let asym = (b - b.transpose()).iter().map(|x| x.norm()).fold(0.0, f64::max);
    if asym > 1e-8 * size {
        return Err(ThetaError::NotSymmetric(asym));
    }
    let im = DMatrix::from_fn(g, g, |i, j| 0.5 * (b[(i, j)].im + b[(j, i)].im));
    let lambda = SymmetricEigen::new(im).eigenvalues.min();
    if !(lambda > 0.0) {
        return Err(ThetaError::NotPositiveDefinite(lambda));
    }
    Ok(lambda)
}

/// Bound on Σ_{‖t‖∞ > R} (1 + 2π‖t‖∞)·|term| for ‖Im s‖₂ ≤ σ.
pub fn tail_bound(g: usize, lambda: f64, radius: usize, sigma: f64) -> f64 {
    if g == 0 {
        return 0.0;
    }
    let peak = sigma / lambda;
    if (radius as f64) < peak {
        return f64::INFINITY;
    }
    let mut total = 0.0;
    let mut m = radius + 1;
    loop {
        let mf = m as f64;
        let shell = (2.0 * mf + 1.0).powi(g as i32) - (2.0 * mf - 1.0).powi(g as i32);
        let term = shell
            * (1.0 + 2.0 * PI * mf)
            * (-PI * lambda * mf * mf + 2.0 * PI * sigma * mf).exp();
        total += term;
        if term < 1e-30 * total.max(1e-300) || m > radius + 10_000 {
            return total;
        }
        m += 1;
    }
}
