//! Quantum and classical Fisher information for the coupling strengths, and
//! the scalar Cramér-Rao bounds built from them.
//!
//! Quadratic operators are written `L = L⁰ + L¹ᵀ r + ½ rᵀ L² r` in the
//! quadrature vector `r`. With the vacuum covariance `½I`, the symmetric
//! logarithmic derivative solves `∂V = V L² V + ¼ Ω L² Ω`, which in vec form is
//! `vec L² = 4 (4 V⊗V − Ω⊗Ω)⁻¹ vec ∂V`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{self, GaussianState, Occupation};
use crate::linalg::{self, CMatrix, CVector, RMatrix, RVector, I};
use crate::magnomech::{
    self, CouplingPoint, DisplacementPolicy, Stationary, SystemParams,
};

/// Symplectic eigenvalues closer than this to ½ are treated as pure.
pub const PURITY_TOL: f64 = 1e-8;
/// Relative step for finite-difference derivatives.
pub const FD_STEP: f64 = 1e-6;
/// Largest accepted disagreement between analytic and finite-difference bundles.
pub const DERIVATIVE_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParameterId {
    CouplingMC,
    CouplingMS,
}

impl ParameterId {
    pub const ALL: [ParameterId; 2] = [ParameterId::CouplingMC, ParameterId::CouplingMS];

    pub fn index(self) -> usize {
        match self {
            ParameterId::CouplingMC => 0,
            ParameterId::CouplingMS => 1,
        }
    }

    fn value(self, point: &CouplingPoint) -> f64 {
        match self {
            ParameterId::CouplingMC => point.g_mc,
            ParameterId::CouplingMS => point.g_ms,
        }
    }

    fn shifted(self, point: &CouplingPoint, by: f64) -> CouplingPoint {
        let mut p = *point;
        match self {
            ParameterId::CouplingMC => p.g_mc += by,
            ParameterId::CouplingMS => p.g_ms += by,
        }
        p
    }

    fn drift_derivative(self) -> RMatrix {
        match self {
            ParameterId::CouplingMC => magnomech::drift_derivative_g_mc(),
            ParameterId::CouplingMS => magnomech::drift_derivative_g_ms(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DerivativeMethod {
    #[default]
    #[serde(rename = "analytic")]
    AnalyticLyapunov,
    #[serde(rename = "fd")]
    CentralDifference,
    /// Derivatives provided directly by the caller.
    #[serde(rename = "supplied")]
    Supplied,
}

/// Derivatives of the covariance and first moments, one entry per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeBundle {
    pub dv: Vec<RMatrix>,
    pub dd: Vec<RVector>,
    pub method: DerivativeMethod,
}

impl DerivativeBundle {
    pub fn supplied(dv: Vec<RMatrix>, dd: Vec<RVector>) -> Result<Self> {
        if dv.len() != dd.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} covariance derivatives but {} displacement derivatives",
                dv.len(),
                dd.len()
            )));
        }
        Ok(Self {
            dv,
            dd,
            method: DerivativeMethod::Supplied,
        })
    }

    pub fn parameters(&self) -> usize {
        self.dv.len()
    }

    fn check(&self, state: &GaussianState) -> Result<()> {
        let n = 2 * state.modes();
        for (dv, dd) in self.dv.iter().zip(&self.dd) {
            if dv.shape() != (n, n) || dd.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "derivative of shape {:?}/{} for a {n}-dimensional state",
                    dv.shape(),
                    dd.len()
                )));
            }
        }
        Ok(())
    }

    /// Largest relative Frobenius-norm difference over all parameters.
    pub fn disagreement(&self, other: &DerivativeBundle) -> f64 {
        fn rel(a: f64, b: f64, diff: f64) -> f64 {
            let scale = a.max(b);
            if scale == 0.0 {
                0.0
            } else {
                diff / scale
            }
        }
        let mut worst = 0.0f64;
        for k in 0..self.dv.len().min(other.dv.len()) {
            let (a, b) = (&self.dv[k], &other.dv[k]);
            worst = worst.max(rel(a.norm(), b.norm(), (a - b).norm()));
            let (a, b) = (&self.dd[k], &other.dd[k]);
            worst = worst.max(rel(a.norm(), b.norm(), (a - b).norm()));
        }
        worst
    }
}

fn fd_step(theta: f64, omega_s: f64) -> f64 {
    FD_STEP * theta.abs().max(omega_s)
}

/// Central difference with one Richardson extrapolation step.
fn richardson<T, F>(theta_step: f64, f: F) -> Result<T>
where
    F: Fn(f64) -> Result<T>,
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
    T: std::ops::Add<Output = T> + Clone,
{
    let h = theta_step;
    let coarse = (f(h)? - f(-h)?) * (1.0 / (2.0 * h));
    let fine = (f(h / 2.0)? - f(-h / 2.0)?) * (1.0 / h);
    Ok(fine * (4.0 / 3.0) - coarse * (1.0 / 3.0))
}

fn means_derivative(
    params: &SystemParams,
    point: &CouplingPoint,
    id: ParameterId,
    policy: DisplacementPolicy,
) -> Result<RVector> {
    match policy {
        DisplacementPolicy::Fluctuation => Ok(RVector::zeros(6)),
        DisplacementPolicy::Means => {
            let h = fd_step(id.value(point), params.omega_s);
            richardson(h, |s| Ok(magnomech::means_at(params, &id.shifted(point, s))))
        }
    }
}

/// Derivative bundle at an already solved stationary point.
pub fn derivative_bundle_at(
    params: &SystemParams,
    stationary: &Stationary,
    policy: DisplacementPolicy,
    method: DerivativeMethod,
) -> Result<DerivativeBundle> {
    let point = stationary.steady.coupling_point(params);
    let v = stationary.state.covariance();
    let mut dv = Vec::with_capacity(2);
    let mut dd = Vec::with_capacity(2);
    for id in ParameterId::ALL {
        let d = match method {
            DerivativeMethod::Supplied => {
                return Err(Error::InvalidParams(
                    "supplied derivatives cannot be computed".into(),
                ))
            }
            DerivativeMethod::AnalyticLyapunov => {
                let da = id.drift_derivative();
                let source = &da * v + v * da.transpose();
                linalg::solve_lyapunov(&stationary.drift, &source)?
            }
            DerivativeMethod::CentralDifference => {
                let h = fd_step(id.value(&point), params.omega_s);
                let d = richardson(h, |s| {
                    let a = magnomech::drift_at(params, &id.shifted(&point, s));
                    linalg::solve_lyapunov(&a, &stationary.diffusion)
                })?;
                (&d + d.transpose()) * 0.5
            }
        };
        dv.push(d);
        dd.push(means_derivative(params, &point, id, policy)?);
    }
    Ok(DerivativeBundle { dv, dd, method })
}

/// Derivatives of the stationary covariance and means with respect to
/// `G_mc` and `G_ms`, holding the other coupling and `Δ'_m` fixed.
pub fn derivative_bundle(
    params: &SystemParams,
    policy: DisplacementPolicy,
    method: DerivativeMethod,
) -> Result<DerivativeBundle> {
    let stationary = magnomech::stationary(params, policy)?;
    derivative_bundle_at(params, &stationary, policy, method)
}

/// Analytic bundle, cross-checked against central differences.
pub fn checked_derivative_bundle(
    params: &SystemParams,
    policy: DisplacementPolicy,
) -> Result<DerivativeBundle> {
    let stationary = magnomech::stationary(params, policy)?;
    let analytic =
        derivative_bundle_at(params, &stationary, policy, DerivativeMethod::AnalyticLyapunov)?;
    let fd = derivative_bundle_at(params, &stationary, policy, DerivativeMethod::CentralDifference)?;
    let relative = analytic.disagreement(&fd);
    if relative > DERIVATIVE_TOL {
        return Err(Error::DerivativeMismatch { relative });
    }
    Ok(analytic)
}

fn is_pure(state: &GaussianState) -> bool {
    state
        .symplectic_eigenvalues()
        .iter()
        .any(|&nu| nu - 0.5 < PURITY_TOL)
}

fn covariance_inverse(state: &GaussianState) -> Result<RMatrix> {
    state
        .covariance()
        .clone()
        .try_inverse()
        .ok_or(Error::SingularCovariance)
}

fn cvec(m: &RMatrix) -> CVector {
    linalg::vectorize(m)
        .expect("derivatives are square")
        .map(|x| Complex64::new(x, 0.0))
}

/// `4 V⊗V − Ω⊗Ω`, the operator mapping `vec L²` to `4 vec ∂V`.
fn sld_kernel(state: &GaussianState) -> CMatrix {
    let v = state.covariance();
    let omega = gaussian::symplectic_form(state.modes()).matrix().clone();
    linalg::to_complex(&(linalg::kron(v, v) * 4.0 - linalg::kron(&omega, &omega)))
}

/// `𝒥 = 2V + iΩ`.
fn rld_j(state: &GaussianState) -> CMatrix {
    let omega = gaussian::symplectic_form(state.modes()).complex();
    linalg::to_complex(state.covariance()) * Complex64::new(2.0, 0.0) + omega * I
}

/// SLD quantum Fisher information matrix
/// `H = 2 vec(∂V)ᵀ (4V⊗V − Ω⊗Ω)⁻¹ vec(∂V) + ∂dᵀ V⁻¹ ∂d`.
///
/// The pseudoinverse replaces the inverse when a mode is pure.
pub fn qfim_sld(state: &GaussianState, derivs: &DerivativeBundle) -> Result<RMatrix> {
    derivs.check(state)?;
    let k = derivs.parameters();
    let kernel = sld_kernel(state);
    let pure = is_pure(state);
    let needs_inverse = derivs.dd.iter().any(|d| d.iter().any(|&x| x != 0.0));
    let vinv = if needs_inverse {
        Some(covariance_inverse(state)?)
    } else {
        None
    };
    let solved: Vec<CVector> = derivs
        .dv
        .iter()
        .map(|dv| linalg::solve_or_pinv(&kernel, &cvec(dv), pure).0)
        .collect();
    let mut h = RMatrix::zeros(k, k);
    for mu in 0..k {
        let lhs = cvec(&derivs.dv[mu]);
        for nu in 0..k {
            let mut value = 2.0 * lhs.dot(&solved[nu]).re;
            if let Some(vinv) = &vinv {
                value += derivs.dd[mu].dot(&(vinv * &derivs.dd[nu]));
            }
            h[(mu, nu)] = value;
        }
    }
    let h = (&h + h.transpose()) * 0.5;
    linalg::ensure_finite_real(&h, "SLD QFIM")?;
    Ok(h)
}

/// RLD quantum Fisher information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RldQfim {
    pub matrix: CMatrix,
    /// Set when the state has a pure mode, so the RLD only exists on the
    /// support of ρ and the matrix came from a pseudoinverse.
    pub support_limited: bool,
}

/// RLD quantum Fisher information matrix
/// `F = 2 vec(∂V)† (𝒥†⊗𝒥)⁻¹ vec(∂V) + 2 ∂dᵀ 𝒥⁻¹ ∂d` with `𝒥 = 2V + iΩ`.
pub fn qfim_rld(state: &GaussianState, derivs: &DerivativeBundle) -> Result<RldQfim> {
    derivs.check(state)?;
    let k = derivs.parameters();
    let j = rld_j(state);
    let pure = is_pure(state);
    let sigma = linalg::kron(&j.adjoint(), &j);
    let mut support_limited = pure;
    let mut solved = Vec::with_capacity(k);
    for dv in &derivs.dv {
        let (x, fallback) = linalg::solve_or_pinv(&sigma, &cvec(dv), pure);
        support_limited |= fallback;
        solved.push(x);
    }
    let mut jd = Vec::with_capacity(k);
    for dd in &derivs.dd {
        let (x, fallback) = linalg::solve_or_pinv(&j, &dd.map(|x| Complex64::new(x, 0.0)), pure);
        support_limited |= fallback;
        jd.push(x);
    }
    let mut f = CMatrix::zeros(k, k);
    for mu in 0..k {
        let lhs = cvec(&derivs.dv[mu]);
        let dmu = derivs.dd[mu].map(|x| Complex64::new(x, 0.0));
        for nu in 0..k {
            f[(mu, nu)] = lhs.dotc(&solved[nu]) * 2.0 + dmu.dot(&jd[nu]) * 2.0;
        }
    }
    let f = (&f + f.adjoint()) * Complex64::new(0.5, 0.0);
    linalg::ensure_finite(&f, "RLD QFIM")?;
    Ok(RldQfim {
        matrix: f,
        support_limited,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogDerivativeKind {
    Sld,
    Rld,
}

/// Coefficients of `L = L⁰ + L¹ᵀ r + ½ rᵀ L² r`, with `L²` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDerivativeCoefficients {
    pub order0: Complex64,
    pub order1: CVector,
    pub order2: CMatrix,
    pub kind: LogDerivativeKind,
}

impl LogDerivativeCoefficients {
    /// Coefficients of the adjoint operator. The quadratures are Hermitian and
    /// `L²` is symmetric, so conjugating every coefficient suffices.
    pub fn adjoint(&self) -> Self {
        Self {
            order0: self.order0.conj(),
            order1: self.order1.conjugate(),
            order2: self.order2.conjugate(),
            kind: self.kind,
        }
    }
}

/// Log-derivative coefficients for one parameter.
///
/// SLD: `L² = unvec 4(4V⊗V − Ω⊗Ω)⁻¹ vec ∂V`, centred linear part `V⁻¹∂d`.
/// RLD (`∂ρ = ρL`): `L² = 4 𝒥̄⁻¹ ∂V 𝒥⁻¹`, centred linear part `2 𝒥̄⁻¹ ∂d`.
/// In both cases `L¹ = g − L² d` and `L⁰` is fixed by `⟨L⟩ = 0`.
pub fn log_derivative_coefficients(
    state: &GaussianState,
    dv: &RMatrix,
    dd: &RVector,
    kind: LogDerivativeKind,
) -> Result<LogDerivativeCoefficients> {
    let n = 2 * state.modes();
    if dv.shape() != (n, n) || dd.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "derivative of shape {:?}/{} for a {n}-dimensional state",
            dv.shape(),
            dd.len()
        )));
    }
    let pure = is_pure(state);
    let ddc = dd.map(|x| Complex64::new(x, 0.0));
    let (order2, centred) = match kind {
        LogDerivativeKind::Sld => {
            let (x, _) = linalg::solve_or_pinv(&sld_kernel(state), &cvec(dv), pure);
            let l2 = linalg::unvectorize(&(x * Complex64::new(4.0, 0.0)), n)?;
            let g = if dd.iter().any(|&x| x != 0.0) {
                linalg::to_complex(&covariance_inverse(state)?) * &ddc
            } else {
                CVector::zeros(n)
            };
            (l2, g)
        }
        LogDerivativeKind::Rld => {
            if pure {
                return Err(Error::SingularState);
            }
            let jinv = rld_j(state).try_inverse().ok_or(Error::SingularState)?;
            let jbar_inv = jinv.conjugate();
            let l2 = &jbar_inv * linalg::to_complex(dv) * &jinv * Complex64::new(4.0, 0.0);
            (l2, jbar_inv * ddc * Complex64::new(2.0, 0.0))
        }
    };
    let order2 = (&order2 + order2.transpose()) * Complex64::new(0.5, 0.0);
    let d = state.displacement().map(|x| Complex64::new(x, 0.0));
    let order1 = &centred - &order2 * &d;
    let half = Complex64::new(0.5, 0.0);
    let trace_v = (&order2 * linalg::to_complex(state.covariance())).trace();
    let order0 = -half * trace_v - order1.dot(&d) - half * d.dot(&(&order2 * &d));
    Ok(LogDerivativeCoefficients {
        order0,
        order1,
        order2,
        kind,
    })
}

/// Centred form: constant, linear coefficient and quadratic matrix in `δ = r − d`.
fn centred(state: &GaussianState, c: &LogDerivativeCoefficients) -> (Complex64, CVector, CMatrix) {
    let d = state.displacement().map(|x| Complex64::new(x, 0.0));
    let half = Complex64::new(0.5, 0.0);
    let c0 = c.order0 + c.order1.dot(&d) + half * d.dot(&(&c.order2 * &d));
    let c1 = &c.order1 + &c.order2 * &d;
    (c0, c1, c.order2.clone())
}

fn pair_sum(x: &CMatrix, m: &CMatrix) -> Complex64 {
    x.component_mul(m).sum()
}

/// `⟨δᵀXδ δᵀYδ⟩` by Wick pairing over `M_ab = ⟨δ_a δ_b⟩`.
fn quartic(x: &CMatrix, y: &CMatrix, m: &CMatrix) -> Complex64 {
    let n = m.nrows();
    let mut acc = pair_sum(x, m) * pair_sum(y, m);
    for a in 0..n {
        for b in 0..n {
            let xab = x[(a, b)];
            if xab == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut inner = Complex64::new(0.0, 0.0);
            for c in 0..n {
                for d in 0..n {
                    inner += y[(c, d)] * (m[(a, c)] * m[(b, d)] + m[(a, d)] * m[(b, c)]);
                }
            }
            acc += xab * inner;
        }
    }
    acc
}

/// `Tr[ρ A B]` for quadratic operators `A` and `B` on a Gaussian state.
pub fn product_expectation(
    state: &GaussianState,
    a: &LogDerivativeCoefficients,
    b: &LogDerivativeCoefficients,
) -> Complex64 {
    let m = state.moment_matrix();
    let (a0, a1, a2) = centred(state, a);
    let (b0, b1, b2) = centred(state, b);
    let half = Complex64::new(0.5, 0.0);
    a0 * b0
        + half * a0 * pair_sum(&b2, &m)
        + half * b0 * pair_sum(&a2, &m)
        + a1.dot(&(&m * &b1))
        + quartic(&a2, &b2, &m) * 0.25
}

/// `Tr[ρ A]`.
pub fn expectation(state: &GaussianState, a: &LogDerivativeCoefficients) -> Complex64 {
    let (a0, _, a2) = centred(state, a);
    a0 + pair_sum(&a2, &state.moment_matrix()) * 0.5
}

/// `Im Tr[ρ L_μ L_ν]` for SLD coefficients; zero when the pair is compatible.
pub fn weak_commutativity(
    state: &GaussianState,
    coeffs_mu: &LogDerivativeCoefficients,
    coeffs_nu: &LogDerivativeCoefficients,
) -> Result<f64> {
    if coeffs_mu.kind != LogDerivativeKind::Sld || coeffs_nu.kind != LogDerivativeKind::Sld {
        return Err(Error::InvalidParams(
            "weak commutativity is defined on SLD coefficients".into(),
        ));
    }
    let n = 2 * state.modes();
    if coeffs_mu.order1.len() != n || coeffs_nu.order1.len() != n {
        return Err(Error::DimensionMismatch("coefficient length".into()));
    }
    Ok(product_expectation(state, coeffs_mu, coeffs_nu).im)
}

/// Added noise of the heterodyne measurement, `σ = V + noise·I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HetNoise {
    /// One vacuum unit, giving the Husimi-Q covariance.
    #[default]
    Half,
    /// Identity added noise.
    #[serde(rename = "paper", alias = "identity")]
    Identity,
}

impl HetNoise {
    pub fn value(self) -> f64 {
        match self {
            HetNoise::Half => 0.5,
            HetNoise::Identity => 1.0,
        }
    }
}

/// Heterodyne classical Fisher information per parameter,
/// `½ Tr[(σ⁻¹∂σ)²] + ∂dᵀ σ⁻¹ ∂d`.
pub fn cfi_heterodyne(
    state: &GaussianState,
    derivs: &DerivativeBundle,
    added_noise: f64,
) -> Result<Vec<f64>> {
    derivs.check(state)?;
    let n = 2 * state.modes();
    let sigma = state.covariance() + RMatrix::identity(n, n) * added_noise;
    let sinv = sigma.cholesky().ok_or(Error::SingularSigma)?.inverse();
    let out: Vec<f64> = derivs
        .dv
        .iter()
        .zip(&derivs.dd)
        .map(|(dv, dd)| {
            let x = &sinv * dv;
            0.5 * (&x * &x).trace() + dd.dot(&(&sinv * dd))
        })
        .collect();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("heterodyne CFI"));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaSource {
    #[default]
    Rld,
    Sld,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport {
    /// `Tr Re F⁻¹ + Tr |Im F⁻¹|`; `None` when the RLD is support-limited.
    pub b_rld: Option<f64>,
    pub b_sld: f64,
    pub b_mi: f64,
    pub ratio_r: Option<f64>,
    pub gamma: Option<f64>,
    pub compat: f64,
}

fn gamma_of(m: &CMatrix) -> Result<f64> {
    if m.shape() != (2, 2) {
        return Err(Error::DimensionMismatch(format!(
            "strategy ratio needs two parameters, got {:?}",
            m.shape()
        )));
    }
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
    Ok(2.0 * det / (m[(0, 0)].re * m[(1, 1)].re))
}

/// Scalar bounds from the RLD and SLD matrices.
///
/// `Im F⁻¹` is the imaginary part of the inverse matrix. `compat` is passed
/// through unchanged.
pub fn bounds_report(
    rld: &RldQfim,
    sld: &RMatrix,
    compat: f64,
    gamma_source: GammaSource,
) -> Result<BoundsReport> {
    let hinv = sld.clone().try_inverse().ok_or(Error::SingularQfim)?;
    let b_sld = hinv.trace();
    if !b_sld.is_finite() || b_sld <= 0.0 {
        return Err(Error::SingularQfim);
    }
    let b_rld = if rld.support_limited {
        None
    } else {
        let finv = rld.matrix.clone().try_inverse().ok_or(Error::SingularQfim)?;
        let re = finv.map(|z| z.re).trace();
        let im = finv.map(|z| Complex64::new(z.im, 0.0));
        let abs = linalg::mat_abs(&im)?.trace().re;
        let b = re + abs;
        if !b.is_finite() || b <= 0.0 {
            return Err(Error::SingularQfim);
        }
        Some(b)
    };
    let gamma = match gamma_source {
        GammaSource::Rld if rld.support_limited => None,
        GammaSource::Rld => Some(gamma_of(&rld.matrix)?),
        GammaSource::Sld => Some(gamma_of(&linalg::to_complex(sld))?),
    };
    Ok(BoundsReport {
        b_rld,
        b_sld,
        b_mi: b_rld.map_or(b_sld, |b| b.min(b_sld)),
        ratio_r: b_rld.map(|b| b / b_sld),
        gamma,
        compat,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QfimResult {
    pub rld: RldQfim,
    pub sld: RMatrix,
    pub cfi_het: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EstimateOptions {
    #[serde(default)]
    pub displacement: DisplacementPolicy,
    #[serde(default)]
    pub het_noise: HetNoise,
    #[serde(default)]
    pub derivative: DerivativeMethod,
    #[serde(default)]
    pub gamma_source: GammaSource,
}

#[derive(Debug, Clone)]
pub struct PointEstimate {
    pub qfim: QfimResult,
    pub bounds: BoundsReport,
    /// Occupations including the coherent parts, independent of the policy.
    pub n_photon: f64,
    pub n_phonon: f64,
    pub stationary: Stationary,
}

fn describe(params: &SystemParams) -> String {
    format!(
        "delta_c={:.6e} kappa_c={:.6e} kappa_m={:.6e} gamma_s={:.6e} g_mc={:.6e} rabi={:.6e} T={:.6e}",
        params.delta_c,
        params.kappa_c,
        params.kappa_m,
        params.gamma_s,
        params.g_mc,
        params.coupling.rabi(),
        params.temperature
    )
}

/// Full pipeline at one parameter point.
pub fn estimate_point(params: &SystemParams, options: &EstimateOptions) -> Result<PointEstimate> {
    estimate_inner(params, options).map_err(|e| e.at(describe(params)))
}

fn estimate_inner(params: &SystemParams, options: &EstimateOptions) -> Result<PointEstimate> {
    let stationary = magnomech::stationary(params, options.displacement)?;
    let derivs =
        derivative_bundle_at(params, &stationary, options.displacement, options.derivative)?;
    let state = &stationary.state;
    let sld = qfim_sld(state, &derivs)?;
    let rld = qfim_rld(state, &derivs)?;
    let cfi_het = cfi_heterodyne(state, &derivs, options.het_noise.value())?;
    let coeffs = derivs
        .dv
        .iter()
        .zip(&derivs.dd)
        .map(|(dv, dd)| log_derivative_coefficients(state, dv, dd, LogDerivativeKind::Sld))
        .collect::<Result<Vec<_>>>()?;
    let compat = weak_commutativity(state, &coeffs[0], &coeffs[1])?.abs();
    let bounds = bounds_report(&rld, &sld, compat, options.gamma_source)?;
    let with_means = state
        .clone()
        .with_displacement(magnomech::means_vector(&stationary.steady))?;
    let n_photon = gaussian::mode_occupation(&with_means, 1, Occupation::Total)?;
    let n_phonon = gaussian::mode_occupation(&with_means, 3, Occupation::Total)?;
    Ok(PointEstimate {
        qfim: QfimResult { rld, sld, cfi_het },
        bounds,
        n_photon,
        n_phonon,
        stationary,
    })
}
