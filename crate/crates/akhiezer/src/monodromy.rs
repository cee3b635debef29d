//! Residues of the Fuchsian system, the transfer matrix, and the deformation
//! identities in the endpoints: conjugation, Freud relations, Schlesinger
//! equations and the τ-function.

use crate::geometry::{GeometryError, IntervalSet};
use crate::opoly::{stieltjes, OpolyError, RecurrenceTable};
use crate::precise::{div, to_f64, Chain, Mat};
use crate::quadrature::{InnerProductEngine, QuadratureError};
use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;
use twofloat::TwoFloat as T;

pub type M2 = Matrix2<f64>;
pub type C2 = Matrix2<Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonodromyError {
    #[error("perturbed geometry is invalid: {0}")]
    GeometryBroken(GeometryError),
    #[error("finite difference does not converge: residual {coarse:.3e} at ε, {fine:.3e} at ε/2")]
    StepTooLarge { coarse: f64, fine: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Opoly(#[from] OpolyError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// C_j(n) for j over the endpoints in δ order: A_1..A_g, then B_0..B_{g+1}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidueSet {
    pub n: usize,
    pub deltas: Vec<f64>,
    pub c: Vec<M2>,
}

/// N(x) = [[Q_nP_{n−1}/h_{n−1}, −Q_nP_n], [Q_{n−1}P_{n−1}/h_{n−1}², −Q_{n−1}P_n/h_{n−1}]].
fn n_matrix(table: &RecurrenceTable, n: usize, x: f64) -> M2 {
    let v = table.pq(n, x);
    let h = table.h(n - 1);
    M2::new(
        v.q * v.p_prev / h,
        -v.q * v.p,
        v.q_prev * v.p_prev / (h * h),
        -v.q_prev * v.p / h,
    )
}

/// B_j(n) = ½N(β_j) and A_j(n) = −½N(α_j).
pub fn residues(table: &RecurrenceTable, set: &IntervalSet, n: usize) -> ResidueSet {
    let g = set.genus();
    let c = set
        .deltas()
        .iter()
        .enumerate()
        .map(|(j, &d)| n_matrix(table, n, d) * if j < g { -0.5 } else { 0.5 })
        .collect();
    ResidueSet {
        n,
        deltas: set.deltas().to_vec(),
        c,
    }
}

/// The α residue in the form ½N(α) − ½I. It has trace −½ and determinant 0
/// but does not satisfy the sum rule; kept for comparison.
pub fn alpha_residue_shifted(table: &RecurrenceTable, n: usize, alpha: f64) -> M2 {
    n_matrix(table, n, alpha) * 0.5 - M2::identity() * 0.5
}

impl ResidueSet {
    /// 𝒜_k = Σ_j C_j δ_j^k.
    pub fn cal_a(&self, k: i32) -> M2 {
        self.c
            .iter()
            .zip(&self.deltas)
            .map(|(c, d)| c * d.powi(k))
            .sum()
    }

    /// A(z) = Σ_j C_j/(z − δ_j).
    pub fn fuchs(&self, z: Complex64) -> C2 {
        self.c
            .iter()
            .zip(&self.deltas)
            .map(|(c, &d)| c.map(Complex64::from) / (z - d))
            .sum()
    }

    /// H_k = Σ_{l≠k} tr(C_k C_l)/(δ_k − δ_l), the coefficients of Ω⁽¹⁾.
    pub fn hamiltonian(&self, k: usize) -> f64 {
        (0..self.c.len())
            .filter(|&l| l != k)
            .map(|l| (self.c[k] * self.c[l]).trace() / (self.deltas[k] - self.deltas[l]))
            .sum()
    }

    /// Right-hand sides of the Schlesinger equations, ∂C_j/∂δ_k for every j.
    pub fn schlesinger_rhs(&self, k: usize) -> Vec<M2> {
        let d = &self.deltas;
        (0..self.c.len())
            .map(|j| {
                if j != k {
                    commutator(&self.c[j], &self.c[k]) / (d[j] - d[k])
                } else {
                    -(0..self.c.len())
                        .filter(|&l| l != k)
                        .map(|l| commutator(&self.c[l], &self.c[k]) / (d[l] - d[k]))
                        .sum::<M2>()
                }
            })
            .collect()
    }
}

/// |actual − expected| entrywise, each entry divided by the largest |C_j| at
/// that position. The C_j grow like 1/h_{n−1} while the sums they form stay
/// O(n), so the absolute defect scales with the terms.
pub fn sum_residual(res: &ResidueSet, actual: &M2, expected: &M2) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let size = res
                .c
                .iter()
                .zip(&res.deltas)
                .map(|(c, d)| (c[(i, j)] * d.abs().max(1.0)).abs())
                .fold(1.0, f64::max);
            worst = worst.max((actual[(i, j)] - expected[(i, j)]).abs() / size);
        }
    }
    worst
}

pub fn commutator(a: &M2, b: &M2) -> M2 {
    a * b - b * a
}

/// Right side of the 𝒜₁ identity: diag(0, κ) + m₁·diag(n−1, −n) − diag(n, 1−n)·m₁.
pub fn first_moment_rhs(table: &RecurrenceTable, set: &IntervalSet, n: usize) -> M2 {
    let nf = n as f64;
    let m1 = table.m1(n);
    let kappa = set.series_coeffs().kappa;
    M2::new(0.0, 0.0, 0.0, kappa) + m1 * M2::new(nf - 1.0, 0.0, 0.0, -nf)
        - M2::new(nf, 0.0, 0.0, 1.0 - nf) * m1
}

/// U_n(z) = [[z − b_{n+1}, −h_n], [1/h_n, 0]].
pub fn transfer(table: &RecurrenceTable, n: usize, z: Complex64) -> C2 {
    let h = table.h(n);
    C2::new(
        z - table.b(n + 1),
        Complex64::from(-h),
        Complex64::from(1.0 / h),
        Complex64::from(0.0),
    )
}

pub fn transfer_real(table: &RecurrenceTable, n: usize, x: f64) -> M2 {
    let h = table.h(n);
    M2::new(x - table.b(n + 1), -h, 1.0 / h, 0.0)
}

/// Largest |C_j(n+1) − U_n(δ_j)C_j(n)U_n(δ_j)⁻¹|, relative to |C_j(n+1)|.
pub fn conjugation_residual(table: &RecurrenceTable, set: &IntervalSet, n: usize) -> f64 {
    let now = residues(table, set, n);
    let next = residues(table, set, n + 1);
    set.deltas()
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            let u = transfer_real(table, n, d);
            let moved = u * now.c[j] * u.try_inverse().expect("det U = 1");
            (next.c[j] - moved).abs().max() / next.c[j].abs().max().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Lax relation A(z,n+1)U_n(z) − U_n(z)A(z,n) − [[1,0],[0,0]] at z, measured
/// against the size of the two products.
pub fn lax_residual(table: &RecurrenceTable, set: &IntervalSet, n: usize, z: Complex64) -> f64 {
    let u = transfer(table, n, z);
    let left = residues(table, set, n + 1).fuchs(z) * u;
    let right = u * residues(table, set, n).fuchs(z);
    let target = C2::new(1.0.into(), 0.0.into(), 0.0.into(), 0.0.into());
    let scale = max_norm(&left).max(max_norm(&right)).max(1.0);
    max_norm(&(left - right - target)) / scale
}

pub fn max_norm(m: &C2) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Φ_n(z) = Y_n(z)·diag(1, 1/w(z))·diag(√(2πi), 1/√(2πi)), with det Φ_n = 1/w.
pub fn phi(
    table: &RecurrenceTable,
    set: &IntervalSet,
    n: usize,
    z: Complex64,
) -> Result<C2, OpolyError> {
    let y = table.y_matrix(set, n, z)?;
    let w = set.w_complex(z)?;
    let s = Complex64::new(0.0, 2.0 * PI).sqrt();
    let gauge = C2::new(s, 0.0.into(), 0.0.into(), 1.0 / (w * s));
    Ok(y * gauge)
}

/// |dΦ/dz − A(z,n)Φ| relative to |A Φ|, with dΦ/dz from a five-point stencil.
pub fn fuchs_residual(
    table: &RecurrenceTable,
    set: &IntervalSet,
    n: usize,
    z: Complex64,
) -> Result<f64, OpolyError> {
    let step = 1e-3 * set.distance_to_cuts(z).min(set.diameter());
    let at = |dz: f64| phi(table, set, n, z + dz);
    let d = (at(-2.0 * step)? - at(2.0 * step)? + (at(step)? - at(-step)?) * Complex64::from(8.0))
        / Complex64::from(12.0 * step);
    let rhs = residues(table, set, n).fuchs(z) * phi(table, set, n, z)?;
    Ok(max_norm(&(d - rhs)) / max_norm(&rhs).max(1.0))
}

/// r_n and R_n at one endpoint: r_n = P_nQ_{n−1}/(2h_{n−1}), R_n = P_nQ_n/(2h_n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreudQuantities {
    pub r: f64,
    pub big_r: f64,
}

fn freud_quantities(table: &RecurrenceTable, n: usize, x: f64) -> FreudQuantities {
    let v = table.pq(n, x);
    let r = if n == 0 {
        0.0
    } else {
        v.p * v.q_prev / (2.0 * table.h(n - 1))
    };
    FreudQuantities {
        r,
        big_r: v.p * v.q / (2.0 * table.h(n)),
    }
}

/// Residuals of the six difference relations at one endpoint and degree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreudResidual {
    pub endpoint: String,
    pub n: usize,
    /// The α and β families share this layout: the relation that is linear in
    /// r, the one quadratic in b_{n+1} − x, and a_nR_nR_{n−1} = r_n(r_n + ½).
    pub linear: f64,
    pub quadratic: f64,
    pub determinant: f64,
}

impl FreudResidual {
    pub fn max(&self) -> f64 {
        self.linear.abs().max(self.quadratic.abs()).max(self.determinant.abs())
    }
}

/// All relations for every endpoint and n in `ns`; the table must reach n+1.
pub fn freud_residuals(
    table: &RecurrenceTable,
    set: &IntervalSet,
    ns: impl IntoIterator<Item = usize> + Clone,
) -> Vec<FreudResidual> {
    let g = set.genus();
    let mut out = Vec::new();
    for (j, &x) in set.deltas().iter().enumerate() {
        let is_alpha = j < g;
        for n in ns.clone() {
            let q = freud_quantities(table, n, x);
            let next = freud_quantities(table, n + 1, x);
            let prev = freud_quantities(table, n - 1, x);
            let (a, a_next, b_next) = (table.a(n), table.a(n + 1), table.b(n + 1));
            let linear = next.r + q.r + 0.5 - q.big_r * (x - b_next);
            let jump = a_next * next.big_r - a * prev.big_r;
            let quadratic = if is_alpha {
                jump - (b_next - x) * (q.big_r * (b_next - x) + 2.0 * q.r + 0.5)
            } else {
                jump - (x - b_next) * (q.big_r * (x - b_next) - 2.0 * q.r - 0.5)
            };
            let determinant = a * q.big_r * prev.big_r - q.r * (q.r + 0.5);
            out.push(FreudResidual {
                endpoint: set.endpoint(j).label(),
                n,
                linear,
                quadratic,
                determinant,
            });
        }
    }
    out
}

/// Residues after re-running quadrature and Stieltjes on `set`.
pub fn residues_for(set: &IntervalSet, order: usize, n: usize) -> Result<(RecurrenceTable, ResidueSet), MonodromyError> {
    let engine = InnerProductEngine::new(set, order)?;
    let table = stieltjes(&engine, n + 1)?;
    let res = residues(&table, set, n);
    Ok((table, res))
}

/// H_k(1) = ¼ Σ_{l≠k} s_k s_l/(δ_k − δ_l), with s = −1 at α and +1 at β.
///
/// This is the n-independent part of H_k(n): the potential of Ω⁽¹⁾ is
/// D_n·Π_{k<l}|δ_k − δ_l|^{s_k s_l/4}, not D_n alone.
pub fn tau_offset(set: &IntervalSet, k: usize) -> f64 {
    let g = set.genus();
    let d = set.deltas();
    let s = |j: usize| if j < g { -1.0 } else { 1.0 };
    (0..d.len())
        .filter(|&l| l != k)
        .map(|l| 0.25 * s(k) * s(l) / (d[k] - d[l]))
        .sum()
}

/// Double-double chain on `set` with δ_k moved by `shift`.
fn shifted_chain(
    set: &IntervalSet,
    order: usize,
    depth: usize,
    k: usize,
    shift: f64,
) -> Result<Chain, MonodromyError> {
    set.with_delta(k, set.deltas()[k] + shift)
        .map_err(MonodromyError::GeometryBroken)?;
    let deltas = set
        .deltas()
        .iter()
        .enumerate()
        .map(|(j, &d)| if j == k { T::from(d) + shift } else { T::from(d) })
        .collect();
    Ok(Chain::new(deltas, set.genus(), order, depth))
}

/// Central difference in δ_k of a vector-valued functional of the solved problem.
fn central<F>(set: &IntervalSet, order: usize, depth: usize, k: usize, eps: f64, f: F) -> Result<Vec<f64>, MonodromyError>
where
    F: Fn(&Chain) -> Vec<T>,
{
    let plus = f(&shifted_chain(set, order, depth, k, eps)?);
    let minus = f(&shifted_chain(set, order, depth, k, -eps)?);
    Ok(plus
        .iter()
        .zip(&minus)
        .map(|(&p, &m)| to_f64(div(p - m, T::from(2.0 * eps))))
        .collect())
}

fn flatten(ms: &[Mat]) -> Vec<T> {
    ms.iter().flat_map(|m| [m[0][0], m[0][1], m[1][0], m[1][1]]).collect()
}

fn to_m2(m: &Mat) -> M2 {
    M2::new(to_f64(m[0][0]), to_f64(m[0][1]), to_f64(m[1][0]), to_f64(m[1][1]))
}

fn hamiltonian_dd(c: &[Mat], deltas: &[f64], k: usize) -> T {
    let mut sum = T::from(0.0);
    for l in (0..c.len()).filter(|&l| l != k) {
        let (x, y) = (&c[k], &c[l]);
        let tr = x[0][0] * y[0][0] + x[0][1] * y[1][0] + x[1][0] * y[0][1] + x[1][1] * y[1][1];
        sum += div(tr, T::from(deltas[k]) - deltas[l]);
    }
    sum
}

/// Residue set at the unperturbed geometry, from the double-double chain.
fn base(set: &IntervalSet, order: usize, n: usize) -> (Chain, ResidueSet) {
    let deltas = set.deltas().iter().map(|&d| T::from(d)).collect();
    let chain = Chain::new(deltas, set.genus(), order, n + 1);
    let c = chain.residues(n).iter().map(to_m2).collect();
    let res = ResidueSet {
        n,
        deltas: set.deltas().to_vec(),
        c,
    };
    (chain, res)
}

/// One finite-difference comparison carried out at ε and ε/2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeformationEntry {
    pub check: String,
    pub n: usize,
    pub j: Option<usize>,
    pub k: usize,
    pub epsilon: f64,
    pub residual: f64,
    pub residual_half: f64,
    /// residual/residual_half; ≈ 4 for a second-order difference.
    pub ratio: f64,
    /// Size of the quantity being differentiated, for relative tolerances.
    pub scale: f64,
}

impl DeformationEntry {
    /// Second-order convergence, or a residual already at the roundoff floor
    /// where the ratio carries no information.
    pub fn converged(&self) -> bool {
        let floor = 1e-12 * self.scale.max(1.0);
        (3.0..=5.0).contains(&self.ratio) || self.residual.max(self.residual_half) <= floor
    }
}

fn entry(check: &str, n: usize, j: Option<usize>, k: usize, eps: f64, pair: (f64, f64), scale: f64) -> DeformationEntry {
    DeformationEntry {
        check: check.to_string(),
        n,
        j,
        k,
        epsilon: eps,
        residual: pair.0,
        residual_half: pair.1,
        ratio: pair.0 / pair.1,
        scale,
    }
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Schlesinger equations for ∂/∂δ_k at degree n, one entry per j.
pub fn schlesinger_fd(
    set: &IntervalSet,
    order: usize,
    n: usize,
    k: usize,
    eps: f64,
) -> Result<Vec<DeformationEntry>, MonodromyError> {
    let (_, res) = base(set, order, n);
    let expected = res.schlesinger_rhs(k);
    let f = |c: &Chain| flatten(&c.residues(n));
    let coarse = central(set, order, n + 1, k, eps, f)?;
    let fine = central(set, order, n + 1, k, 0.5 * eps, f)?;
    Ok((0..expected.len())
        .map(|j| {
            let e = expected[j];
            let want = [e[(0, 0)], e[(0, 1)], e[(1, 0)], e[(1, 1)]];
            let pair = (
                max_dev(&coarse[4 * j..4 * j + 4], &want),
                max_dev(&fine[4 * j..4 * j + 4], &want),
            );
            entry("schlesinger", n, Some(j), k, eps, pair, res.c[j].abs().max())
        })
        .collect())
}

/// ∂h_n/∂δ_k = −C_k¹²(n), the τ increment, and constancy of 𝒜₀ under ∂/∂δ_k.
pub fn tau_identities(
    set: &IntervalSet,
    order: usize,
    n: usize,
    k: usize,
    eps: f64,
) -> Result<Vec<DeformationEntry>, MonodromyError> {
    let (chain, res) = base(set, order, n);
    let hn = to_f64(chain.h[n]);
    let next: Vec<Mat> = chain.residues(n + 1);
    let now: Vec<Mat> = chain.residues(n);
    let increment = to_f64(hamiltonian_dd(&next, set.deltas(), k) - hamiltonian_dd(&now, set.deltas(), k));
    let depth = n + 1;
    let both = |f: &dyn Fn(&Chain) -> Vec<T>, target: &[f64]| -> Result<(f64, f64), MonodromyError> {
        Ok((
            max_dev(&central(set, order, depth, k, eps, f)?, target),
            max_dev(&central(set, order, depth, k, 0.5 * eps, f)?, target),
        ))
    };
    let h_pair = both(&|c: &Chain| vec![c.h[n]], &[-res.c[k][(0, 1)]])?;
    let inc_pair = both(&|c: &Chain| vec![c.h[n].ln()], &[increment])?;
    let sum = |c: &Chain| {
        let r = c.residues(n);
        let mut s = [[T::from(0.0); 2]; 2];
        for m in &r {
            for (i, row) in m.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    s[i][j] += *v;
                }
            }
        }
        flatten(&[s])
    };
    let a0_pair = both(&sum, &[0.0; 4])?;
    Ok(vec![
        entry("dh", n, None, k, eps, h_pair, hn),
        entry("tau-increment", n, None, k, eps, inc_pair, increment.abs().max(1.0)),
        // the f64 reference rules leave a floor that scales with the entries
        entry("a0-constant", n, None, k, eps, a0_pair, res.c.iter().map(|c| c.abs().max()).fold(1.0, f64::max)),
    ])
}

/// ∂H_k/∂δ_j − ∂H_j/∂δ_k by central differences (closedness of Ω⁽¹⁾).
pub fn closedness_fd(
    set: &IntervalSet,
    order: usize,
    n: usize,
    j: usize,
    k: usize,
    eps: f64,
) -> Result<DeformationEntry, MonodromyError> {
    let defect = |e: f64| -> Result<f64, MonodromyError> {
        let ham = |i: usize| move |c: &Chain| vec![hamiltonian_dd(&c.residues(n), &moved_deltas(c), i)];
        let djk = central(set, order, n, j, e, ham(k))?[0];
        let dkj = central(set, order, n, k, e, ham(j))?[0];
        Ok((djk - dkj).abs())
    };
    let (_, res) = base(set, order, n);
    let scale = res.hamiltonian(j).abs().max(res.hamiltonian(k).abs()).max(1.0);
    Ok(entry("closedness", n, Some(j), k, eps, (defect(eps)?, defect(0.5 * eps)?), scale))
}

fn moved_deltas(c: &Chain) -> Vec<f64> {
    c.deltas().iter().map(|&d| to_f64(d)).collect()
}

/// ∂ ln D_n/∂δ_k against H_k(n) − H_k(1), with D_n = Π_{j<n} h_j.
pub fn tau_potential_fd(
    set: &IntervalSet,
    order: usize,
    n: usize,
    k: usize,
    eps: f64,
) -> Result<DeformationEntry, MonodromyError> {
    let (_, res) = base(set, order, n);
    let target = res.hamiltonian(k) - tau_offset(set, k);
    let ln_d = |c: &Chain| vec![c.h[..n].iter().fold(T::from(0.0), |s, &h| s + h.ln())];
    let pair = (
        (central(set, order, n, k, eps, ln_d)?[0] - target).abs(),
        (central(set, order, n, k, 0.5 * eps, ln_d)?[0] - target).abs(),
    );
    Ok(entry("tau-potential", n, None, k, eps, pair, target.abs().max(1.0)))
}
