//! Run configuration and the identity suite behind `verify`: every check is a
//! record with a residual, a tolerance and a plain statement of the identity.

use crate::formulas::{baker_direct, baker_limit, polynomial_fit, psi1_m1_check, ThetaPipeline};
use crate::geometry::IntervalSet;
use crate::monodromy::{
    closedness_fd, conjugation_residual, freud_residuals, fuchs_residual, lax_residual, first_moment_rhs, phi,
    residues, schlesinger_fd, sum_residual, tau_identities, tau_potential_fd, DeformationEntry, M2,
};
use crate::numerics::{comparison_points, max_modulus, sample_points};
use crate::opoly::{stieltjes, RecurrenceTable};
use crate::quadrature::InnerProductEngine;
use crate::theta::ThetaContext;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;
use thiserror::Error;

type C = Complex64;

pub mod defaults {
    pub const N_MAX: usize = 10;
    pub const ORDER: usize = 200;
    pub const THETA_TOL: f64 = 1e-12;
    pub const FD_EPSILON: f64 = 1e-5;
    pub const SAMPLES: usize = 20;
    /// Highest degree for the Riemann–Hilbert, residue, Freud and deformation suites.
    pub const IDENTITY_DEGREE: usize = 8;
    /// Highest degree for the theta-only consistency checks.
    pub const THETA_DEGREE: usize = 40;
    pub const FIT_DEGREE: usize = 6;
    pub const BAKER_DEGREE: usize = 5;
    pub const COMPARISON_POINTS: usize = 30;
}

/// Θ(0; i), the sum Σ e^{−πt²}.
pub const THETA_AT_I: f64 = 1.086_434_811_213_308;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid endpoints: {0}")]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error("{field} must be positive, got {value}")]
    NonPositive { field: String, value: f64 },
    #[error("n_max must be at least 1")]
    NMax,
    #[error("no check named {0:?}")]
    UnknownCheck(String),
}

/// h_n += delta after the Stieltjes run; a and b are left alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbH {
    pub n: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    #[serde(default = "n_max_default")]
    pub n_max: usize,
    #[serde(default = "order_default")]
    pub order: usize,
    #[serde(default = "theta_tol_default")]
    pub theta_tol: f64,
    #[serde(default = "fd_epsilon_default")]
    pub fd_epsilon: f64,
    #[serde(default = "samples_default")]
    pub samples: usize,
    /// Per-check tolerance overrides keyed by check id.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub command: Option<String>,
    /// Record wall-clock time per check; off by default so reports are reproducible.
    #[serde(default)]
    pub timings: bool,
    #[serde(default)]
    pub perturb_h: Option<PerturbH>,
}

fn n_max_default() -> usize {
    defaults::N_MAX
}
fn order_default() -> usize {
    defaults::ORDER
}
fn theta_tol_default() -> f64 {
    defaults::THETA_TOL
}
fn fd_epsilon_default() -> f64 {
    defaults::FD_EPSILON
}
fn samples_default() -> usize {
    defaults::SAMPLES
}

impl RunConfig {
    pub fn new(alphas: &[f64], betas: &[f64]) -> Self {
        RunConfig {
            alphas: alphas.to_vec(),
            betas: betas.to_vec(),
            n_max: defaults::N_MAX,
            order: defaults::ORDER,
            theta_tol: defaults::THETA_TOL,
            fd_epsilon: defaults::FD_EPSILON,
            samples: defaults::SAMPLES,
            tolerances: BTreeMap::new(),
            out: None,
            command: None,
            timings: false,
            perturb_h: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<IntervalSet, ConfigError> {
        if self.n_max < 1 {
            return Err(ConfigError::NMax);
        }
        for (field, value) in [("theta_tol", self.theta_tol), ("fd_epsilon", self.fd_epsilon)] {
            if !(value > 0.0) {
                return Err(ConfigError::NonPositive {
                    field: field.into(),
                    value,
                });
            }
        }
        if self.order == 0 || self.samples == 0 {
            let field = if self.order == 0 { "order" } else { "samples" };
            return Err(ConfigError::NonPositive {
                field: field.into(),
                value: 0.0,
            });
        }
        for (id, &tol) in &self.tolerances {
            if !CHECKS.iter().any(|c| c.id == id) {
                return Err(ConfigError::UnknownCheck(id.clone()));
            }
            if !(tol > 0.0) {
                return Err(ConfigError::NonPositive {
                    field: format!("tolerances.{id}"),
                    value: tol,
                });
            }
        }
        Ok(IntervalSet::new(&self.alphas, &self.betas)?)
    }

    pub fn tolerance(&self, id: &str) -> Option<f64> {
        let check = CHECKS.iter().find(|c| c.id == id)?;
        Some(*self.tolerances.get(id).unwrap_or(&check.default_tolerance(self)))
    }

    /// Every tolerance in force, defaults included.
    pub fn resolved_tolerances(&self) -> BTreeMap<String, f64> {
        CHECKS
            .iter()
            .map(|c| (c.id.to_string(), self.tolerance(c.id).unwrap()))
            .collect()
    }
}

/// Reference statement of a check, by id.
pub fn reference(id: &str) -> Option<&'static str> {
    CHECKS.iter().find(|c| c.id == id).map(|c| c.reference)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scope {
    Any,
    /// Needs at least one gap.
    Gapped,
    /// Only meaningful for a single interval.
    Interval,
}

#[derive(Debug, Clone, Copy)]
pub struct CheckSpec {
    pub id: &'static str,
    pub reference: &'static str,
    tolerance: f64,
    /// The tolerance is this multiple of theta_tol instead of a constant.
    theta_multiple: bool,
    scope: Scope,
}

impl CheckSpec {
    fn default_tolerance(&self, config: &RunConfig) -> f64 {
        if self.theta_multiple {
            self.tolerance * config.theta_tol
        } else {
            self.tolerance
        }
    }
}

const fn check(id: &'static str, reference: &'static str, tolerance: f64, scope: Scope) -> CheckSpec {
    CheckSpec {
        id,
        reference,
        tolerance,
        theta_multiple: false,
        scope,
    }
}

const fn theta_check(id: &'static str, reference: &'static str, multiple: f64, scope: Scope) -> CheckSpec {
    CheckSpec {
        id,
        reference,
        tolerance: multiple,
        theta_multiple: true,
        scope,
    }
}

use Scope::*;

/// Every check in report order.
pub const CHECKS: &[CheckSpec] = &[
    check("quadrature.orthogonality", "P_m and P_k are orthogonal under the discretized weight for m ≠ k", 1e-10, Any),
    check("quadrature.interval_closure", "single interval (c − r, c + r): b_n = c, a_1 = r²/2, a_n = r²/4, h_n = 2(r/2)^{2n}", 1e-10, Interval),
    check("rh.det_y", "det Y_n(z) = 1", 1e-6, Any),
    check("rh.wronskian", "P_{n−1}Q_n − P_nQ_{n−1} = h_{n−1}", 1e-6, Any),
    check("rh.det_phi", "det Φ_n(z) = 1/w(z)", 1e-6, Any),
    check("rh.det_psi", "det Ψ_n(z) = i/(πw(z)) for Ψ_n built from P_n, Q_n and w", 1e-6, Any),
    check("rh.psi_jump", "Ψ_{n,−}(t) = Ψ_{n,+}(t)σ₁ on the bands", 1e-6, Any),
    check("fuchs.trace", "tr B_j = 1/2 at the β endpoints and tr A_j = −1/2 at the α endpoints", 1e-8, Any),
    check("fuchs.det", "every residue C_j(n) has determinant 0", 1e-8, Any),
    check("fuchs.sum_rule", "Σ_j C_j(n) = diag(n, 1 − n)", 1e-8, Any),
    check("fuchs.first_moment", "Σ_j δ_jC_j(n) = diag(0, κ) + m₁diag(n − 1, −n) − diag(n, 1 − n)m₁", 1e-8, Any),
    check("fuchs.sum_offdiag", "Σ_j C_j¹²(n) = 0", 1e-8, Any),
    check("fuchs.sum_split", "Σ_j (C_j¹¹ − C_j²²)(n) = 2n − 1", 1e-8, Any),
    check("fuchs.delta_moment", "Σ_j δ_jC_j¹²(n) = −2n·h_n", 1e-8, Any),
    check("fuchs.system", "dΦ_n/dz = Σ_j C_j(n)/(z − δ_j)·Φ_n", 1e-6, Any),
    check("transfer.conjugation", "C_j(n + 1) = U_n(δ_j)C_j(n)U_n(δ_j)⁻¹", 1e-8, Any),
    check("transfer.lax", "A(z, n + 1)U_n(z) − U_n(z)A(z, n) = [[1, 0], [0, 0]]", 1e-8, Any),
    check("freud.linear", "difference relation linear in r_n at every endpoint: r_{n+1} + r_n + 1/2 = R_n(δ − b_{n+1})", 1e-8, Any),
    check("freud.quadratic", "difference relation a_{n+1}R_{n+1} − a_nR_{n−1} quadratic in b_{n+1} − δ at every endpoint", 1e-8, Any),
    check("freud.determinant", "a_nR_nR_{n−1} = r_n(r_n + 1/2) at every endpoint", 1e-8, Any),
    check("deformation.schlesinger", "Schlesinger equations for ∂C_j/∂δ_k, relative to |C_j|", 1e-6, Any),
    check("deformation.dh", "∂h_n/∂δ_k = −C_k¹²(n), relative to h_n", 1e-6, Any),
    check("deformation.convergence", "Schlesinger and ∂h_n differences converge at second order: |ratio − 4| under ε → ε/2", 1.0, Any),
    check("tau.increment", "∂ ln h_n/∂δ_k = H_k(n + 1) − H_k(n)", 1e-6, Any),
    check("tau.potential", "∂ ln D_n/∂δ_k = H_k(n) − H_k(1)", 1e-6, Any),
    check("tau.closedness", "∂H_k/∂δ_j = ∂H_j/∂δ_k", 1e-6, Any),
    check("tau.a0_constant", "Σ_j C_j(n) does not depend on the endpoints, relative to |C_j|", 1e-8, Any),
    check("surface.interval_capacity", "capacity of a single interval is a quarter of its length", 1e-12, Interval),
    check("surface.normalization", "∮_{a_j} dω_k = δ_jk", 1e-10, Gapped),
    check("surface.symmetry", "the period matrix is symmetric, B = Bᵀ", 1e-8, Gapped),
    check("surface.im_b_condition", "Im B is positive definite; residual is its condition number", 1e12, Gapped),
    check("surface.re_b_integer", "Re B is an integer matrix", 1e-8, Gapped),
    check("surface.omega_a_periods", "∮_{a_j} dΩ = 0", 1e-10, Gapped),
    check("surface.bilinear", "L = −2∫_{β_{g+1}}^{∞⁺} dω", 1e-8, Gapped),
    check("surface.alpha_omega", "Ω(α_k) = πi(1 + L_1 + … + L_k)", 1e-8, Gapped),
    check("surface.half_period", "∫_{β_{g+1}}^{α_k} dω = (B_{·1} + … + B_{·k})/2 + e_k/2", 1e-9, Gapped),
    check("surface.path_independence", "∫ dω to α_k is unchanged when the path is moved", 1e-9, Gapped),
    check("surface.asymptotics", "Ω(z) − ln z + ln C(E) → 0 as z → +∞, at z = 10⁶", 1e-5, Any),
    check("theta.known_value", "Θ(0; i) = Σ_t e^{−πt²} = 1.0864348112133…", 1e-9, Any),
    theta_check("theta.quasi_periodicity", "Θ(s + n + Bm) = exp(−πi(Bm, m) − 2πi(s, m))Θ(s) for ‖m‖∞ ≤ 2, relative", 10.0, Gapped),
    theta_check("theta.truncation", "raising the truncation radius by 5 changes Θ and ∇Θ by at most tol", 1.0, Gapped),
    check("theta.derivative", "term-wise ∂Θ/∂s_j matches central differences with ε = 10⁻⁵, relative", 1e-6, Gapped),
    check("cross.h", "h_n from theta functions equals h_n from quadrature, relative", 1e-6, Any),
    check("cross.a", "a_n from theta functions equals a_n from quadrature, relative", 1e-6, Any),
    check("cross.b", "b_n from theta functions equals b_n from quadrature", 1e-6, Any),
    check("cross.hankel", "D_{n+1} from theta functions equals h_0h_1⋯h_n from quadrature, relative", 1e-6, Any),
    check("cross.p", "P_n(z) from theta functions equals the recurrence value, relative to 1 + |P_n|", 1e-6, Any),
    check("cross.c12", "h_n = 2c₁₂ with c₁₂ = C^{2n}Θ(u∞ − nL)/Θ(u∞ + nL), relative", 1e-6, Any),
    check("theta.telescoping", "h_0^θh_1^θ⋯h_n^θ = D_{n+1}^θ, relative", 1e-8, Any),
    check("theta.a_ratio", "a_n^θ = h_n^θ/h_{n−1}^θ, relative", 1e-8, Any),
    check("theta.polynomial_fit", "the theta expression for P_n is a polynomial of degree n", 1e-8, Any),
    check("theta.monic", "the theta expression for P_n has leading coefficient 1", 1e-8, Any),
    check("theta.sheet_flip", "the theta expression for P_n is unchanged under A → −A, Ω → −Ω", 1e-8, Any),
    check("theta.det_psi", "det(Ψ⃗_n(P), Ψ⃗_n(P*)) = i/(πw(z)) for the theta Baker–Akhiezer function", 1e-7, Any),
    check("theta.baker_agreement", "the theta Baker–Akhiezer matrix equals Ψ_n built from P_n and Q_n, relative", 1e-5, Any),
    check("theta.psi1_m1", "ψ₁ = [[m₁¹¹, m₁¹²/2], [2m₁²¹ − [n = 1], m₁²² − κ]]", 1e-6, Any),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub reference: String,
    /// Null when skipped or when the check could not be evaluated.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub status: Status,
    pub passed: bool,
    pub detail: Option<String>,
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    /// True iff no record failed.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub tool: String,
    pub version: String,
    pub genus: usize,
    pub config: RunConfig,
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub header: ReportHeader,
    pub records: Vec<CheckRecord>,
    pub summary: Summary,
}

impl Report {
    pub fn new(config: &RunConfig, genus: usize, records: Vec<CheckRecord>) -> Self {
        let count = |s: Status| records.iter().filter(|r| r.status == s).count();
        let summary = Summary {
            total: records.len(),
            passed: count(Status::Pass),
            failed: count(Status::Fail),
            skipped: count(Status::Skipped),
            pass: count(Status::Fail) == 0,
        };
        Report {
            header: ReportHeader {
                tool: "akhiezer".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                genus,
                config: config.clone(),
                tolerances: config.resolved_tolerances(),
            },
            records,
            summary,
        }
    }

    pub fn passed(&self) -> bool {
        self.summary.pass
    }

    pub fn record(&self, id: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.records
            .iter()
            .filter(|r| r.status == Status::Fail)
            .map(|r| r.id.as_str())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// The finished evaluation of one check.
struct Outcome {
    residual: f64,
    detail: Option<String>,
}

impl From<f64> for Outcome {
    fn from(residual: f64) -> Self {
        Outcome {
            residual,
            detail: None,
        }
    }
}

fn worst(residual: f64, at: String) -> Outcome {
    Outcome {
        residual,
        detail: Some(at),
    }
}

/// Tracks the largest residual and where it occurred.
struct Worst {
    value: f64,
    at: String,
}

impl Worst {
    fn new() -> Self {
        Worst {
            value: 0.0,
            at: String::new(),
        }
    }

    fn push(&mut self, value: f64, at: impl FnOnce() -> String) {
        // NaN poisons the maximum on purpose
        if value > self.value || value.is_nan() && !self.value.is_nan() {
            self.value = value;
            self.at = at();
        }
    }

    fn done(self) -> Outcome {
        if self.at.is_empty() {
            self.value.into()
        } else {
            worst(self.value, format!("worst at {}", self.at))
        }
    }
}

type Lazy<T> = OnceCell<Result<T, String>>;

/// Shared inputs, each built at most once and only when a check needs it.
pub struct Suite<'a> {
    config: &'a RunConfig,
    set: IntervalSet,
    engine: Lazy<InnerProductEngine>,
    table: Lazy<RecurrenceTable>,
    pipeline: Lazy<ThetaPipeline>,
    deformation: Lazy<Vec<DeformationEntry>>,
    samples: Vec<C>,
}

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

impl<'a> Suite<'a> {
    pub fn new(config: &'a RunConfig) -> Result<Self, ConfigError> {
        let set = config.validate()?;
        let samples = sample_points(&set, config.samples);
        Ok(Suite {
            config,
            set,
            engine: OnceCell::new(),
            table: OnceCell::new(),
            pipeline: OnceCell::new(),
            deformation: OnceCell::new(),
            samples,
        })
    }

    fn n_id(&self) -> usize {
        self.config.n_max.min(defaults::IDENTITY_DEGREE)
    }

    fn depth(&self) -> usize {
        self.config.n_max.max(self.n_id() + 1)
    }

    fn engine(&self) -> Result<&InnerProductEngine, String> {
        self.engine
            .get_or_init(|| InnerProductEngine::new(&self.set, self.config.order).map_err(text))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn table(&self) -> Result<&RecurrenceTable, String> {
        self.table
            .get_or_init(|| {
                let engine = self.engine()?;
                let mut t = stieltjes(engine, self.depth()).map_err(text)?;
                if let Some(f) = self.config.perturb_h {
                    if f.n <= t.max_degree() {
                        t.perturb_h(f.n, f.delta);
                    }
                }
                Ok(t)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn pipeline(&self) -> Result<&ThetaPipeline, String> {
        self.pipeline
            .get_or_init(|| {
                ThetaPipeline::new(self.set.clone(), self.config.order, self.config.theta_tol).map_err(text)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn deformation(&self) -> Result<&Vec<DeformationEntry>, String> {
        self.deformation
            .get_or_init(|| {
                let (order, eps) = (self.config.order, self.config.fd_epsilon);
                let mut out = Vec::new();
                for n in 1..=self.n_id() {
                    for k in 0..self.set.deltas().len() {
                        out.extend(schlesinger_fd(&self.set, order, n, k, eps).map_err(text)?);
                        out.extend(tau_identities(&self.set, order, n, k, eps).map_err(text)?);
                        out.push(tau_potential_fd(&self.set, order, n, k, eps).map_err(text)?);
                    }
                }
                let n = self.n_id();
                let m = self.set.deltas().len();
                for j in 0..m {
                    for k in j + 1..m {
                        out.push(closedness_fd(&self.set, order, n, j, k, eps).map_err(text)?);
                    }
                }
                Ok(out)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn skip_reason(&self, spec: &CheckSpec) -> Option<&'static str> {
        match (spec.scope, self.set.genus()) {
            (Gapped, 0) => Some("skipped-by-genus: needs at least one gap"),
            (Interval, g) if g > 0 => Some("skipped-by-genus: single-interval closed form"),
            _ => None,
        }
    }

    pub fn run(&self) -> Report {
        let records = CHECKS
            .iter()
            .map(|spec| {
                let tolerance = self.config.tolerance(spec.id).unwrap();
                let base = CheckRecord {
                    id: spec.id.into(),
                    reference: spec.reference.into(),
                    residual: None,
                    tolerance,
                    status: Status::Skipped,
                    passed: true,
                    detail: None,
                    runtime_ms: None,
                };
                if let Some(reason) = self.skip_reason(spec) {
                    return CheckRecord {
                        detail: Some(reason.into()),
                        ..base
                    };
                }
                let start = Instant::now();
                let outcome = self.evaluate(spec.id);
                let runtime_ms = self.config.timings.then(|| start.elapsed().as_secs_f64() * 1e3);
                match outcome {
                    Ok(o) if o.residual.is_finite() => {
                        let passed = o.residual <= tolerance;
                        CheckRecord {
                            residual: Some(o.residual),
                            status: if passed { Status::Pass } else { Status::Fail },
                            passed,
                            detail: o.detail,
                            runtime_ms,
                            ..base
                        }
                    }
                    Ok(o) => CheckRecord {
                        status: Status::Fail,
                        passed: false,
                        detail: Some(format!(
                            "non-finite residual {}{}",
                            o.residual,
                            o.detail.map(|d| format!(", {d}")).unwrap_or_default()
                        )),
                        runtime_ms,
                        ..base
                    },
                    Err(e) => CheckRecord {
                        status: Status::Fail,
                        passed: false,
                        detail: Some(e),
                        runtime_ms,
                        ..base
                    },
                }
            })
            .collect();
        Report::new(self.config, self.set.genus(), records)
    }

    fn over_n_z(
        &self,
        ns: std::ops::RangeInclusive<usize>,
        zs: &[C],
        mut f: impl FnMut(usize, C) -> Result<f64, String>,
    ) -> Result<Outcome, String> {
        let mut w = Worst::new();
        for n in ns {
            for &z in zs {
                let r = f(n, z)?;
                w.push(r, || format!("n={n}, z={z}"));
            }
        }
        Ok(w.done())
    }

    fn over_n(
        &self,
        ns: std::ops::RangeInclusive<usize>,
        mut f: impl FnMut(usize) -> Result<f64, String>,
    ) -> Result<Outcome, String> {
        let mut w = Worst::new();
        for n in ns {
            let r = f(n)?;
            w.push(r, || format!("n={n}"));
        }
        Ok(w.done())
    }

    fn band_points(&self) -> Vec<f64> {
        self.set
            .bands()
            .iter()
            .flat_map(|&(lo, hi)| [0.2, 0.5, 0.8].map(|f| lo + f * (hi - lo)))
            .collect()
    }

    fn deformation_worst(&self, checks: &[&str], relative: bool) -> Result<Outcome, String> {
        let mut w = Worst::new();
        for e in self.deformation()?.iter().filter(|e| checks.contains(&e.check.as_str())) {
            let r = if relative { e.residual / e.scale.max(1e-300) } else { e.residual };
            w.push(r, || describe(e));
        }
        Ok(w.done())
    }

    fn evaluate(&self, id: &str) -> Result<Outcome, String> {
        let n_id = self.n_id();
        let n_max = self.config.n_max;
        let samples = &self.samples;
        match id {
            "quadrature.orthogonality" => {
                Ok(self.table()?.orthogonality_defect(self.engine()?, n_max).into())
            }
            "quadrature.interval_closure" => {
                let t = self.table()?;
                let r = 0.5 * self.set.diameter();
                let c = 0.5 * (self.set.left() + self.set.right());
                self.over_n(1..=n_max, |n| {
                    let a = if n == 1 { 0.5 * r * r } else { 0.25 * r * r };
                    let h = 2.0 * (0.5 * r).powi(2 * n as i32);
                    Ok(rel(t.a(n), a).max(rel(t.h(n), h)).max((t.b(n) - c).abs() / r))
                })
            }
            "rh.det_y" => {
                let t = self.table()?;
                self.over_n_z(1..=n_id, samples, |n, z| {
                    Ok((t.y_matrix(&self.set, n, z).map_err(text)?.determinant() - 1.0).norm())
                })
            }
            "rh.wronskian" => {
                let t = self.table()?;
                self.over_n_z(1..=n_id, samples, |n, z| Ok(t.wronskian_residual(n, z)))
            }
            "rh.det_phi" => {
                let t = self.table()?;
                self.over_n_z(1..=n_id, samples, |n, z| {
                    let w = self.set.w_complex(z).map_err(text)?;
                    Ok((phi(t, &self.set, n, z).map_err(text)?.determinant() * w - 1.0).norm())
                })
            }
            "rh.det_psi" => {
                let t = self.table()?;
                self.over_n_z(1..=n_id, samples, |n, z| {
                    let want = C::new(0.0, 1.0) / (PI * self.set.w_complex(z).map_err(text)?);
                    let got = baker_direct(t, &self.set, n, z).map_err(text)?.determinant();
                    Ok((got - want).norm() / want.norm().max(1.0))
                })
            }
            "rh.psi_jump" => {
                let t = self.table()?;
                let points: Vec<C> = self.band_points().into_iter().map(C::from).collect();
                self.over_n_z(1..=n_id, &points, |n, z| {
                    let plus = baker_limit(t, &self.set, n, z.re, true).map_err(text)?;
                    let minus = baker_limit(t, &self.set, n, z.re, false).map_err(text)?;
                    let swapped = plus * crate::formulas::C2::new(0.0.into(), 1.0.into(), 1.0.into(), 0.0.into());
                    Ok(max_modulus((minus - swapped).iter()) / max_modulus(plus.iter()).max(1.0))
                })
            }
            "fuchs.trace" | "fuchs.det" | "fuchs.sum_rule" | "fuchs.first_moment" | "fuchs.sum_offdiag"
            | "fuchs.sum_split" | "fuchs.delta_moment" => {
                let t = self.table()?;
                let g = self.set.genus();
                self.over_n(1..=n_id, |n| {
                    let res = residues(t, &self.set, n);
                    let nf = n as f64;
                    let size = res.c.iter().map(|c| c.abs().max()).fold(1.0, f64::max);
                    let diag = M2::new(nf, 0.0, 0.0, 1.0 - nf);
                    Ok(match id {
                        "fuchs.trace" => res
                            .c
                            .iter()
                            .enumerate()
                            .map(|(j, c)| (c.trace() - if j < g { -0.5 } else { 0.5 }).abs())
                            .fold(0.0, f64::max),
                        "fuchs.det" => res
                            .c
                            .iter()
                            .map(|c| c.determinant().abs() / c.abs().max().max(1.0).powi(2))
                            .fold(0.0, f64::max),
                        "fuchs.sum_rule" => sum_residual(&res, &res.cal_a(0), &diag),
                        "fuchs.first_moment" => sum_residual(&res, &res.cal_a(1), &first_moment_rhs(t, &self.set, n)),
                        "fuchs.sum_offdiag" => res.c.iter().map(|c| c[(0, 1)]).sum::<f64>().abs() / size,
                        "fuchs.sum_split" => {
                            let s: f64 = res.c.iter().map(|c| c[(0, 0)] - c[(1, 1)]).sum();
                            (s - (2.0 * nf - 1.0)).abs() / size
                        }
                        _ => {
                            let m: f64 = res.c.iter().zip(&res.deltas).map(|(c, d)| d * c[(0, 1)]).sum();
                            rel(m, -2.0 * nf * t.h(n))
                        }
                    })
                })
            }
            "fuchs.system" => {
                let t = self.table()?;
                self.over_n_z(1..=n_id, samples, |n, z| fuchs_residual(t, &self.set, n, z).map_err(text))
            }
            "transfer.conjugation" => {
                let t = self.table()?;
                self.over_n(1..=n_id, |n| Ok(conjugation_residual(t, &self.set, n)))
            }
            "transfer.lax" => {
                let t = self.table()?;
                self.over_n_z(1..=n_id, samples, |n, z| Ok(lax_residual(t, &self.set, n, z)))
            }
            "freud.linear" | "freud.quadratic" | "freud.determinant" => {
                let t = self.table()?;
                let mut w = Worst::new();
                for r in freud_residuals(t, &self.set, 1..=n_id) {
                    let v = match id {
                        "freud.linear" => r.linear,
                        "freud.quadratic" => r.quadratic,
                        _ => r.determinant,
                    };
                    w.push(v.abs(), || format!("n={}, endpoint {}", r.n, r.endpoint));
                }
                Ok(w.done())
            }
            "deformation.schlesinger" => self.deformation_worst(&["schlesinger"], true),
            "deformation.dh" => self.deformation_worst(&["dh"], true),
            "tau.increment" => self.deformation_worst(&["tau-increment"], true),
            "tau.potential" => self.deformation_worst(&["tau-potential"], true),
            "tau.closedness" => self.deformation_worst(&["closedness"], true),
            "tau.a0_constant" => self.deformation_worst(&["a0-constant"], true),
            "deformation.convergence" => {
                let mut w = Worst::new();
                let tracked = ["schlesinger", "dh"];
                for e in self.deformation()?.iter().filter(|e| tracked.contains(&e.check.as_str())) {
                    let floor = 1e-12 * e.scale.max(1.0);
                    if e.residual.max(e.residual_half) > floor {
                        w.push((e.ratio - 4.0).abs(), || describe(e));
                    }
                }
                Ok(w.done())
            }
            "surface.interval_capacity" => {
                let p = self.pipeline()?;
                Ok((p.capacity() - 0.25 * self.set.diameter()).abs().into())
            }
            "surface.asymptotics" => {
                let s = &self.pipeline()?.surface;
                Ok(s.omega_asymptotic_defect(C::from(self.set.right() + 1e6)).map_err(text)?.into())
            }
            id if id.starts_with("surface.") => self.surface_check(id),
            "theta.known_value" => {
                let b = DMatrix::from_element(1, 1, C::new(0.0, 1.0));
                let ctx = ThetaContext::new(b, self.config.theta_tol).map_err(text)?;
                Ok((ctx.theta(&[C::from(0.0)]).map_err(text)? - THETA_AT_I).norm().into())
            }
            "theta.quasi_periodicity" | "theta.truncation" | "theta.derivative" => self.theta_check(id),
            id if id.starts_with("cross.") => self.cross_check(id),
            _ => self.formula_check(id),
        }
    }

    fn surface_check(&self, id: &str) -> Result<Outcome, String> {
        let s = &self.pipeline()?.surface;
        let p = &s.periods;
        let g = p.genus;
        match id {
            "surface.normalization" => {
                Ok(max_modulus((p.a_normalization() - DMatrix::<C>::identity(g, g)).iter()).into())
            }
            "surface.symmetry" => Ok(max_modulus((p.b.clone() - p.b.transpose()).iter()).into()),
            "surface.im_b_condition" => {
                let im = DMatrix::from_fn(g, g, |i, j| 0.5 * (p.b[(i, j)].im + p.b[(j, i)].im));
                let e = SymmetricEigen::new(im).eigenvalues;
                let (lo, hi) = (e.min(), e.max());
                let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
                Ok(worst(cond, format!("eigenvalues of Im B in [{lo:.6e}, {hi:.6e}]")))
            }
            "surface.re_b_integer" => Ok(p.b.iter().map(|x| (x.re - x.re.round()).abs()).fold(0.0, f64::max).into()),
            "surface.omega_a_periods" => Ok(max_modulus(p.omega_a_periods().iter()).into()),
            "surface.bilinear" => Ok(max_modulus((p.l.clone() + p.u_inf.clone() * C::from(2.0)).iter()).into()),
            "surface.alpha_omega" => {
                let mut w = Worst::new();
                for k in 0..g {
                    let want = C::new(0.0, PI) * (C::from(1.0) + (0..=k).map(|j| p.l[j]).sum::<C>());
                    let (_, path) = s.integrals_to_endpoint(k, None);
                    let r = (path - want).norm().max((p.alpha_omega[k] - want).norm());
                    w.push(r, || format!("k={}", k + 1));
                }
                Ok(w.done())
            }
            "surface.half_period" => {
                let mut w = Worst::new();
                for k in 0..g {
                    let mut half = p.b.columns(0, k + 1).column_sum() * C::from(0.5);
                    half[k] += 0.5;
                    let (abel, _) = s.integrals_to_endpoint(k, None);
                    w.push(max_modulus((abel - half).iter()), || format!("k={}", k + 1));
                }
                Ok(w.done())
            }
            _ => {
                let mut w = Worst::new();
                for k in 0..g {
                    let (low, _) = s.integrals_to_endpoint(k, None);
                    let (high, _) = s.integrals_to_endpoint(k, Some(0.9 * self.set.diameter()));
                    w.push(max_modulus((low - high).iter()), || format!("k={}", k + 1));
                }
                Ok(w.done())
            }
        }
    }

    fn theta_points(&self, g: usize) -> Vec<Vec<C>> {
        let base = [C::new(0.13, 0.21), C::new(-0.37, 0.05), C::new(0.41, -0.33), C::new(0.07, 0.48)];
        (0..3).map(|k| (0..g).map(|j| base[(k + j) % 4]).collect()).collect()
    }

    fn theta_check(&self, id: &str) -> Result<Outcome, String> {
        let p = self.pipeline()?;
        let ctx = &p.theta;
        let b = &ctx.b;
        let g = b.nrows();
        let tol = self.config.theta_tol;
        let mut w = Worst::new();
        match id {
            "theta.quasi_periodicity" => {
                let reach: f64 = (0..g).map(|j| b.column(j).map(|x| x.im).norm()).sum();
                let direct = ThetaContext::unreduced(b.clone(), tol, 2.0 * reach + 1.0).map_err(text)?;
                for s in self.theta_points(g) {
                    let base = direct.theta(&s).map_err(text)?;
                    let count = 5usize.pow(g as u32);
                    for code in 0..count {
                        let m: Vec<f64> = (0..g).map(|i| ((code / 5usize.pow(i as u32)) % 5) as f64 - 2.0).collect();
                        let mut q = C::from(0.0);
                        let mut shifted = s.clone();
                        for i in 0..g {
                            for j in 0..g {
                                q += b[(i, j)] * m[i] * m[j];
                                shifted[i] += b[(i, j)] * m[j];
                            }
                            q += 2.0 * s[i] * m[i];
                            shifted[i] += (i % 2) as f64;
                        }
                        let want = (C::new(0.0, -PI) * q).exp() * base;
                        for c in [ctx, &direct] {
                            let got = c.theta(&shifted).map_err(text)?;
                            w.push((got - want).norm() / want.norm().max(1e-300), || format!("m={m:?}"));
                        }
                    }
                }
            }
            "theta.truncation" => {
                let wider = ThetaContext::with_radius(b.clone(), tol, ctx.radius + 5).map_err(text)?;
                for s in self.theta_points(g) {
                    let a = ctx.evaluate(&s).map_err(text)?;
                    let c = wider.evaluate(&s).map_err(text)?;
                    let mut r = (a.value - c.value).norm();
                    for j in 0..g {
                        r = r.max((a.gradient[j] - c.gradient[j]).norm());
                    }
                    w.push(r, || format!("s={s:?}"));
                }
            }
            _ => {
                let eps = 1e-5;
                for s in self.theta_points(g) {
                    for j in 0..g {
                        let (mut up, mut down) = (s.clone(), s.clone());
                        up[j] += eps;
                        down[j] -= eps;
                        let fd = (ctx.theta(&up).map_err(text)? - ctx.theta(&down).map_err(text)?) / (2.0 * eps);
                        let exact = ctx.derivative(&s, j).map_err(text)?;
                        w.push((fd - exact).norm() / exact.norm().max(1.0), || format!("j={}", j + 1));
                    }
                }
            }
        }
        Ok(w.done())
    }

    fn cross_check(&self, id: &str) -> Result<Outcome, String> {
        let p = self.pipeline()?;
        let t = self.table()?;
        let n_max = self.config.n_max;
        match id {
            "cross.h" => self.over_n(1..=n_max, |n| Ok(rel(p.h(n).map_err(text)?, t.h(n)))),
            "cross.a" => self.over_n(1..=n_max, |n| Ok(rel(p.a(n).map_err(text)?, t.a(n)))),
            "cross.b" => self.over_n(1..=n_max, |n| Ok((p.b(n).map_err(text)? - t.b(n)).abs())),
            "cross.hankel" => self.over_n(1..=n_max, |n| Ok(rel(p.hankel(n).map_err(text)?, t.hankel_product(n + 1)))),
            "cross.c12" => self.over_n(1..=n_max, |n| Ok(rel(2.0 * p.c12(n).map_err(text)?.re, t.h(n)))),
            _ => {
                let points = comparison_points(&self.set, defaults::COMPARISON_POINTS);
                self.over_n_z(1..=n_max, &points, |n, z| {
                    let want = t.eval_p(n, z);
                    Ok((p.p(n, z).map_err(text)? - want).norm() / (1.0 + want.norm()))
                })
            }
        }
    }

    fn formula_check(&self, id: &str) -> Result<Outcome, String> {
        let p = self.pipeline()?;
        let n_fit = self.config.n_max.min(defaults::FIT_DEGREE);
        let n_baker = self.n_id().min(defaults::BAKER_DEGREE);
        match id {
            "theta.telescoping" => {
                let mut product = 1.0;
                self.over_n(0..=defaults::THETA_DEGREE, |n| {
                    product *= p.h(n).map_err(text)?;
                    Ok(rel(p.hankel(n).map_err(text)?, product))
                })
            }
            "theta.a_ratio" => self.over_n(1..=defaults::THETA_DEGREE, |n| {
                Ok(rel(p.a(n).map_err(text)?, p.h(n).map_err(text)? / p.h(n - 1).map_err(text)?))
            }),
            "theta.polynomial_fit" | "theta.monic" => self.over_n(1..=n_fit, |n| {
                let fit = polynomial_fit(p, n, 4).map_err(text)?;
                Ok(if id == "theta.monic" { (fit.leading - 1.0).norm() } else { fit.residual })
            }),
            "theta.sheet_flip" => self.over_n_z(1..=n_fit, &self.samples[..self.samples.len().min(6)], |n, z| {
                let (a, om) = p.surface.integrals(z).map_err(text)?;
                let (plus, _) = p.p_display(n, &a, om).map_err(text)?;
                let (minus, _) = p.p_display(n, &(-a), -om).map_err(text)?;
                Ok((plus - minus).norm() / plus.norm().max(1.0))
            }),
            "theta.det_psi" => self.over_n_z(1..=n_baker, &self.samples, |n, z| {
                let want = C::new(0.0, 1.0) / (PI * self.set.w_complex(z).map_err(text)?);
                let got = p.psi_matrix(n, z).map_err(text)?.determinant();
                Ok((got - want).norm() / want.norm().max(1.0))
            }),
            "theta.baker_agreement" => {
                let t = self.table()?;
                self.over_n_z(1..=n_baker, &self.samples[..self.samples.len().min(10)], |n, z| {
                    let a = baker_direct(t, &self.set, n, z).map_err(text)?;
                    let b = p.psi_matrix(n, z).map_err(text)?;
                    Ok(max_modulus((a - b).iter()) / max_modulus(a.iter()))
                })
            }
            "theta.psi1_m1" => {
                let t = self.table()?;
                self.over_n(1..=n_baker, |n| Ok(psi1_m1_check(p, t, n).map_err(text)?.residual))
            }
            other => Err(format!("no evaluator for {other}")),
        }
    }
}

fn describe(e: &DeformationEntry) -> String {
    let j = e.j.map(|j| format!(", j={j}")).unwrap_or_default();
    format!("{} n={}, k={}{}, ratio {:.3}", e.check, e.n, e.k, j, e.ratio)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Runs the whole suite for `config`.
pub fn verify(config: &RunConfig) -> Result<Report, ConfigError> {
    Ok(Suite::new(config)?.run())
}
