//! The set E = (β₀,α₁) ∪ (β₁,α₂) ∪ … ∪ (β_g,β_{g+1}), the weight w₊ and its
//! continuation w(z) off the bands.
//!
//! Every algebraic root is a product of principal square roots of (z − δ). An odd
//! number of negative factors only occurs on a band, so the cuts sit exactly on E
//! and no extra bookkeeping is needed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Endpoints closer than this fraction of the diameter are rejected.
pub const DEFAULT_GAP_TOLERANCE: f64 = 1e-6;
/// Points within this fraction of the diameter of a band count as on the cut.
pub const CUT_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("expected {expected} betas for {alphas} alphas, got {got}")]
    ArityMismatch {
        alphas: usize,
        expected: usize,
        got: usize,
    },
    #[error("endpoint {value} is not a finite real")]
    NonFinite { value: f64 },
    #[error("interlacing broken: {left} must be below {right}")]
    InterlacingViolation { left: f64, right: f64 },
    #[error("endpoints {left} and {right} are closer than {tolerance:e}")]
    DegenerateEndpoint {
        left: f64,
        right: f64,
        tolerance: f64,
    },
    #[error("{t} is not interior to a band")]
    OutsideSupport { t: f64 },
    #[error("{z} lies on a band")]
    OnCut { z: Complex64 },
}

/// Which family an endpoint δ_j belongs to, with its index inside the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endpoint {
    Alpha(usize),
    Beta(usize),
}

impl Endpoint {
    pub fn is_alpha(self) -> bool {
        matches!(self, Endpoint::Alpha(_))
    }

    pub fn label(self) -> String {
        match self {
            Endpoint::Alpha(k) => format!("alpha{k}"),
            Endpoint::Beta(k) => format!("beta{k}"),
        }
    }
}

/// A validated interval set. `alphas[k-1]` is α_k and `betas[k]` is β_k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntervalSet", into = "RawIntervalSet")]
pub struct IntervalSet {
    alphas: Vec<f64>,
    betas: Vec<f64>,
    deltas: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawIntervalSet {
    alphas: Vec<f64>,
    betas: Vec<f64>,
}

impl TryFrom<RawIntervalSet> for IntervalSet {
    type Error = GeometryError;
    fn try_from(raw: RawIntervalSet) -> Result<Self, Self::Error> {
        IntervalSet::new(&raw.alphas, &raw.betas)
    }
}

impl From<IntervalSet> for RawIntervalSet {
    fn from(e: IntervalSet) -> Self {
        RawIntervalSet {
            alphas: e.alphas,
            betas: e.betas,
        }
    }
}

impl IntervalSet {
    pub fn new(alphas: &[f64], betas: &[f64]) -> Result<Self, GeometryError> {
        Self::with_tolerance(alphas, betas, DEFAULT_GAP_TOLERANCE)
    }

    /// Validate with a custom degeneracy tolerance, relative to the diameter.
    pub fn with_tolerance(
        alphas: &[f64],
        betas: &[f64],
        gap_tolerance: f64,
    ) -> Result<Self, GeometryError> {
        if let Some(&v) = alphas.iter().chain(betas).find(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite { value: v });
        }
        if betas.len() != alphas.len() + 2 {
            return Err(GeometryError::ArityMismatch {
                alphas: alphas.len(),
                expected: alphas.len() + 2,
                got: betas.len(),
            });
        }
        let ordered = interlace(alphas, betas);
        for w in ordered.windows(2) {
            if w[0] >= w[1] {
                return Err(GeometryError::InterlacingViolation {
                    left: w[0],
                    right: w[1],
                });
            }
        }
        let diameter = ordered[ordered.len() - 1] - ordered[0];
        let tolerance = gap_tolerance * diameter;
        for w in ordered.windows(2) {
            if w[1] - w[0] < tolerance {
                return Err(GeometryError::DegenerateEndpoint {
                    left: w[0],
                    right: w[1],
                    tolerance,
                });
            }
        }
        let deltas = alphas.iter().chain(betas).copied().collect();
        Ok(IntervalSet {
            alphas: alphas.to_vec(),
            betas: betas.to_vec(),
            deltas,
        })
    }

    /// Rebuild from the unified endpoint list (α₁..α_g, β₀..β_{g+1}).
    pub fn from_deltas(deltas: &[f64]) -> Result<Self, GeometryError> {
        let g = deltas.len().saturating_sub(2) / 2;
        IntervalSet::new(&deltas[..g], &deltas[g..])
    }

    /// Copy with δ_j replaced by `value`.
    pub fn with_delta(&self, j: usize, value: f64) -> Result<Self, GeometryError> {
        let mut d = self.deltas.clone();
        d[j] = value;
        IntervalSet::from_deltas(&d)
    }

    pub fn genus(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// δ₁..δ_{2g+2} = (α₁..α_g, β₀..β_{g+1}).
    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn endpoint(&self, j: usize) -> Endpoint {
        let g = self.genus();
        if j < g {
            Endpoint::Alpha(j + 1)
        } else {
            Endpoint::Beta(j - g)
        }
    }

    /// All endpoints in increasing order: β₀, α₁, β₁, …, α_g, β_g, β_{g+1}.
    pub fn ordered(&self) -> Vec<f64> {
        interlace(&self.alphas, &self.betas)
    }

    /// Bands [β_k, α_{k+1}] for k < g and [β_g, β_{g+1}].
    pub fn bands(&self) -> Vec<(f64, f64)> {
        let g = self.genus();
        (0..=g)
            .map(|k| {
                let hi = if k < g { self.alphas[k] } else { self.betas[g + 1] };
                (self.betas[k], hi)
            })
            .collect()
    }

    /// Gaps (α_k, β_k), k = 1..g.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        (0..self.genus())
            .map(|k| (self.alphas[k], self.betas[k + 1]))
            .collect()
    }

    pub fn left(&self) -> f64 {
        self.betas[0]
    }

    pub fn right(&self) -> f64 {
        self.betas[self.genus() + 1]
    }

    pub fn diameter(&self) -> f64 {
        self.right() - self.left()
    }

    /// True for the customary normalization β₀ = −1, β_{g+1} = 1.
    pub fn is_normalized(&self) -> bool {
        self.left() == -1.0 && self.right() == 1.0
    }

    /// Index of the band containing t in its interior.
    pub fn band_of(&self, t: f64) -> Option<usize> {
        self.bands().iter().position(|&(lo, hi)| lo < t && t < hi)
    }

    /// Distance from z to the union of closed bands.
    pub fn distance_to_cuts(&self, z: Complex64) -> f64 {
        self.bands()
            .iter()
            .map(|&(lo, hi)| {
                let dx = if z.re < lo {
                    lo - z.re
                } else if z.re > hi {
                    z.re - hi
                } else {
                    0.0
                };
                dx.hypot(z.im)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn on_cut(&self, z: Complex64) -> bool {
        self.distance_to_cuts(z) <= CUT_TOLERANCE * self.diameter().max(1.0)
    }

    fn check_off_cut(&self, z: Complex64) -> Result<(), GeometryError> {
        if self.on_cut(z) {
            Err(GeometryError::OnCut { z })
        } else {
            Ok(())
        }
    }

    /// w₊(t) = (1/π)·sqrt(Π|t−α_j| / Π|t−β_j|) on the interior of a band.
    pub fn weight_plus(&self, t: f64) -> Result<f64, GeometryError> {
        if self.band_of(t).is_none() {
            return Err(GeometryError::OutsideSupport { t });
        }
        Ok(self.weight_plus_unchecked(t))
    }

    pub(crate) fn weight_plus_unchecked(&self, t: f64) -> f64 {
        let num: f64 = self.alphas.iter().map(|a| (t - a).abs()).product();
        let den: f64 = self.betas.iter().map(|b| (t - b).abs()).product();
        (num / den).sqrt() / PI
    }

    /// Same product without the factors at the band ends `lo` and `hi`.
    pub(crate) fn weight_smooth_part(&self, t: f64, lo: f64, hi: f64) -> f64 {
        let mut r = 1.0;
        for &a in &self.alphas {
            if a != hi {
                r *= (t - a).abs();
            }
        }
        for &b in &self.betas {
            if b != lo && b != hi {
                r /= (t - b).abs();
            }
        }
        r.sqrt() / PI
    }

    /// ψ(z) = Π sqrt(z−α_j) / Π sqrt(z−β_j), the Cauchy transform of w₊.
    pub fn psi(&self, z: Complex64) -> Result<Complex64, GeometryError> {
        self.check_off_cut(z)?;
        Ok(self.psi_unchecked(z))
    }

    pub(crate) fn psi_unchecked(&self, z: Complex64) -> Complex64 {
        let mut r = Complex64::new(1.0, 0.0);
        for &a in &self.alphas {
            r *= (z - a).sqrt();
        }
        for &b in &self.betas {
            r /= (z - b).sqrt();
        }
        r
    }

    /// w(z) = (i/π)·Π sqrt(z−α_j) / Π sqrt(z−β_j), so that ψ = −iπw.
    pub fn w_complex(&self, z: Complex64) -> Result<Complex64, GeometryError> {
        Ok(self.psi(z)? * Complex64::new(0.0, 1.0 / PI))
    }

    /// Boundary value of w on a band from above (`upper`) or below. The side is
    /// carried by a signed zero imaginary part, which every principal square
    /// root respects, so this is the exact one-sided limit.
    pub fn w_limit(&self, t: f64, upper: bool) -> Result<Complex64, GeometryError> {
        self.band_of(t).ok_or(GeometryError::OutsideSupport { t })?;
        let z = Complex64::new(t, if upper { 0.0 } else { -0.0 });
        Ok(self.psi_unchecked(z) * Complex64::new(0.0, 1.0 / PI))
    }

    /// ψ on the upper rim of a band, from the real closed form: ψ₊ = −iπw₊.
    pub fn psi_plus(&self, t: f64) -> Result<Complex64, GeometryError> {
        Ok(Complex64::new(0.0, -PI * self.weight_plus(t)?))
    }

    pub fn series_coeffs(&self) -> WeightSeriesCoeffs {
        let g = self.genus();
        let up = |x: f64| Complex64::new(x, 0.0).sqrt();
        let b_coeffs = (0..=g + 1)
            .map(|j| {
                let bj = self.betas[j];
                let mut r = Complex64::new(1.0, 0.0);
                for &a in &self.alphas {
                    r *= up(bj - a);
                }
                for (k, &b) in self.betas.iter().enumerate() {
                    if k != j {
                        r /= up(bj - b);
                    }
                }
                r
            })
            .collect();
        let a_coeffs = (0..g)
            .map(|j| {
                let aj = self.alphas[j];
                let mut r = Complex64::new(1.0, 0.0);
                for (k, &a) in self.alphas.iter().enumerate() {
                    if k != j {
                        r *= up(aj - a);
                    }
                }
                for &b in &self.betas {
                    r /= up(aj - b);
                }
                r
            })
            .collect();
        let kappa = 0.5 * (self.betas.iter().sum::<f64>() - self.alphas.iter().sum::<f64>());
        let c1 = self
            .gaps()
            .iter()
            .map(|&(a, b)| b - a)
            .sum::<f64>();
        WeightSeriesCoeffs {
            b_coeffs,
            a_coeffs,
            kappa,
            c1,
        }
    }
}

fn interlace(alphas: &[f64], betas: &[f64]) -> Vec<f64> {
    let g = alphas.len();
    let mut v = Vec::with_capacity(2 * g + 2);
    v.push(betas[0]);
    for k in 0..g {
        v.push(alphas[k]);
        v.push(betas[k + 1]);
    }
    v.push(betas[g + 1]);
    v
}

/// Local and asymptotic coefficients of w(z).
///
/// `b_coeffs[j]` is 𝔟_j with w(z) = (z−β_j)^{−1/2}·𝔟_j·(i/π)(1 + O(z−β_j)), and
/// `a_coeffs[j-1]` is 𝔞_j with w(z) = (z−α_j)^{1/2}·𝔞_j·(i/π)(1 + …), both as
/// limits from the upper half-plane. Several are purely imaginary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSeriesCoeffs {
    pub b_coeffs: Vec<Complex64>,
    pub a_coeffs: Vec<Complex64>,
    /// w(z) = (i/πz)(1 + κ/z + …).
    pub kappa: f64,
    /// Σ_{j=1}^{g} (β_j − α_j), the total gap length.
    pub c1: f64,
}
