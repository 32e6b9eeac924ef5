//! Linearized cavity-magnon-phonon model: parameters, mean-field steady
//! state, drift and diffusion matrices, and the stationary Gaussian state.
//!
//! All rates are angular (rad/s). Quadratures are ordered
//! `(X_c, Y_c, X_m, Y_m, q, p)`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{self, GaussianState, Occupation};
use crate::linalg::{self, RMatrix, RVector, I};

/// Reduced Planck constant (J s), CODATA 2018 exact.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K), CODATA 2018 exact.
pub const K_B: f64 = 1.380_649e-23;
/// Gyromagnetic ratio of YIG, γ/2π = 28 GHz/T, as rad s⁻¹ T⁻¹.
pub const GYROMAGNETIC: f64 = 2.0 * PI * 28e9;
/// Spin density of YIG (m⁻³).
pub const YIG_SPIN_DENSITY: f64 = 4.22e27;

pub const DAMPING: f64 = 0.5;
pub const MAX_ITERATIONS: usize = 10_000;
pub const CONVERGENCE_TOL: f64 = 1e-12;
pub const AMBIGUITY_TOL: f64 = 1e-6;

/// How the magnon-phonon coupling enters the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CouplingMode {
    /// Single-magnon coupling `g_ms` and drive `rabi`; the effective coupling
    /// and magnon detuning follow from the nonlinear steady state.
    Microscopic { g_ms: f64, rabi: f64 },
    /// Effective coupling `G_ms` and shifted magnon detuning `Δ'_m` given
    /// directly. `rabi` only sets the steady-state amplitudes used when
    /// first moments are included in the estimation state.
    Effective {
        g_ms_eff: f64,
        detuning_m_eff: f64,
        rabi: f64,
    },
}

impl CouplingMode {
    pub fn rabi(&self) -> f64 {
        match *self {
            CouplingMode::Microscopic { rabi, .. } | CouplingMode::Effective { rabi, .. } => rabi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_c: f64,
    pub omega_m: f64,
    pub omega_s: f64,
    /// `ω_c - ω_d`
    pub delta_c: f64,
    /// `ω_m - ω_d`
    pub delta_m: f64,
    pub kappa_c: f64,
    pub kappa_m: f64,
    pub gamma_s: f64,
    pub g_mc: f64,
    pub coupling: CouplingMode,
    /// Kelvin.
    pub temperature: f64,
}

const TWO_PI: f64 = 2.0 * PI;

impl SystemParams {
    /// The experimentally motivated operating point: ω_c/2π = ω_m/2π = 10 GHz,
    /// ω_s/2π = 10 MHz, κ_c/2π = 6 MHz, κ_m/2π = 1 MHz, γ_s/2π = 100 Hz,
    /// G_mc/2π = G_ms/2π = 6 MHz, T = 50 mK, Δ_c = Δ_m = Δ'_m = ω_s, in
    /// effective-coupling mode with Ω/2π = 10¹⁴ Hz.
    pub fn reference() -> Self {
        let omega_s = TWO_PI * 10e6;
        Self {
            omega_c: TWO_PI * 10e9,
            omega_m: TWO_PI * 10e9,
            omega_s,
            delta_c: omega_s,
            delta_m: omega_s,
            kappa_c: TWO_PI * 6e6,
            kappa_m: TWO_PI * 1e6,
            gamma_s: TWO_PI * 100.0,
            g_mc: TWO_PI * 6e6,
            coupling: CouplingMode::Effective {
                g_ms_eff: TWO_PI * 6e6,
                detuning_m_eff: omega_s,
                rabi: TWO_PI * 1e14,
            },
            temperature: 0.05,
        }
    }

    /// Set both detunings from a drive frequency.
    pub fn with_drive_frequency(mut self, omega_d: f64) -> Self {
        self.delta_c = self.omega_c - omega_d;
        self.delta_m = self.omega_m - omega_d;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_c", self.omega_c),
            ("omega_m", self.omega_m),
            ("omega_s", self.omega_s),
            ("delta_c", self.delta_c),
            ("delta_m", self.delta_m),
            ("kappa_c", self.kappa_c),
            ("kappa_m", self.kappa_m),
            ("gamma_s", self.gamma_s),
            ("g_mc", self.g_mc),
            ("rabi", self.coupling.rabi()),
            ("temperature", self.temperature),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        let nonneg = [
            ("kappa_c", self.kappa_c),
            ("kappa_m", self.kappa_m),
            ("gamma_s", self.gamma_s),
            ("g_mc", self.g_mc),
            ("rabi", self.coupling.rabi()),
            ("temperature", self.temperature),
        ];
        for (name, v) in nonneg {
            if v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [
            ("omega_c", self.omega_c),
            ("omega_m", self.omega_m),
            ("omega_s", self.omega_s),
            ("kappa_c", self.kappa_c),
            ("kappa_m", self.kappa_m),
        ] {
            if v <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        match self.coupling {
            CouplingMode::Microscopic { g_ms, .. } if !(g_ms >= 0.0 && g_ms.is_finite()) => Err(
                Error::InvalidParams(format!("g_ms must be finite and >= 0, got {g_ms}")),
            ),
            CouplingMode::Effective {
                g_ms_eff,
                detuning_m_eff,
                ..
            } if !(g_ms_eff >= 0.0 && g_ms_eff.is_finite() && detuning_m_eff.is_finite()) => {
                Err(Error::InvalidParams(
                    "effective coupling must be finite and >= 0".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn thermal_occupations(&self) -> Result<ThermalOccupations> {
        Ok(ThermalOccupations {
            n_c: thermal_occupation(self.omega_c, self.temperature)?,
            n_m: thermal_occupation(self.omega_m, self.temperature)?,
            n_s: thermal_occupation(self.omega_s, self.temperature)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalOccupations {
    pub n_c: f64,
    pub n_m: f64,
    pub n_s: f64,
}

/// Bose-Einstein occupation `1 / (exp(ħω / k_B T) - 1)`; exactly 0 at `T = 0`.
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if omega.is_nan() || omega <= 0.0 {
        return Err(Error::NonPositiveFrequency(omega));
    }
    if temperature <= 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (HBAR * omega / (K_B * temperature)).exp_m1())
}

/// Drive Rabi frequency `(5/4) γ sqrt(ρ V) B₀` for a YIG sphere of the given
/// diameter (m) in a field of amplitude `field_amplitude` (T).
pub fn rabi_frequency(field_amplitude: f64, sphere_diameter: f64) -> f64 {
    let volume = PI / 6.0 * sphere_diameter.powi(3);
    let spins = YIG_SPIN_DENSITY * volume;
    1.25 * GYROMAGNETIC * spins.sqrt() * field_amplitude
}

/// Mean-field amplitudes and the effective linearized couplings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub c_a: Complex64,
    pub m_a: Complex64,
    pub q_a: f64,
    pub p_a: f64,
    pub detuning_m_eff: f64,
    pub g_ms_eff: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// The three quantities the linearized equations depend on beyond the fixed
/// rates. Derivatives with respect to the couplings vary one field at a time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingPoint {
    pub g_mc: f64,
    pub g_ms: f64,
    pub detuning_m_eff: f64,
}

impl SteadyState {
    pub fn coupling_point(&self, params: &SystemParams) -> CouplingPoint {
        CouplingPoint {
            g_mc: params.g_mc,
            g_ms: self.g_ms_eff,
            detuning_m_eff: self.detuning_m_eff,
        }
    }
}

fn magnon_amplitude(params: &SystemParams, g_mc: f64, detuning_m_eff: f64) -> Complex64 {
    let cav = I * params.delta_c + params.kappa_c;
    let mag = I * detuning_m_eff + params.kappa_m;
    params.coupling.rabi() * cav / (g_mc * g_mc + cav * mag)
}

fn cavity_amplitude(params: &SystemParams, g_mc: f64, m_a: Complex64) -> Complex64 {
    -I * g_mc * m_a / (I * params.delta_c + params.kappa_c)
}

/// Mechanical displacement implied by an effective coupling:
/// `q_a = -(g_ms/ω_s)|m_a|²` with `g_ms = G_ms / (√2 |m_a|)`.
fn mechanical_displacement(params: &SystemParams, g_ms_eff: f64, m_a: Complex64) -> f64 {
    -g_ms_eff * m_a.norm() / (SQRT_2 * params.omega_s)
}

struct FixedPoint {
    m_a: Complex64,
    iterations: usize,
    residual: f64,
}

fn iterate_microscopic(
    params: &SystemParams,
    g_ms: f64,
    seed: Complex64,
) -> Result<FixedPoint> {
    let map = |m: Complex64| {
        let q_a = -(g_ms / params.omega_s) * m.norm_sqr();
        magnon_amplitude(params, params.g_mc, params.delta_m + g_ms * q_a)
    };
    let mut m = seed;
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let next = m * (1.0 - DAMPING) + map(m) * DAMPING;
        let scale = next.norm().max(f64::MIN_POSITIVE);
        let change = (next.norm() - m.norm()).abs();
        m = next;
        residual = (map(m) - m).norm() / scale;
        if change <= CONVERGENCE_TOL * scale && residual <= 1e-10 {
            return Ok(FixedPoint {
                m_a: m,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

/// Solve the mean-field steady state.
///
/// In microscopic mode the magnon amplitude depends on itself through the
/// radiation-pressure-like detuning shift `Δ'_m = Δ_m + g_ms q_a`. The map is
/// iterated with damping 0.5 from two seeds (zero and three times the
/// unshifted amplitude); disagreement flags bistability.
pub fn solve_steady_state(params: &SystemParams) -> Result<SteadyState> {
    params.validate()?;
    match params.coupling {
        CouplingMode::Effective {
            g_ms_eff,
            detuning_m_eff,
            ..
        } => {
            let m_a = magnon_amplitude(params, params.g_mc, detuning_m_eff);
            Ok(SteadyState {
                c_a: cavity_amplitude(params, params.g_mc, m_a),
                m_a,
                q_a: mechanical_displacement(params, g_ms_eff, m_a),
                p_a: 0.0,
                detuning_m_eff,
                g_ms_eff,
                iterations: 0,
                residual: 0.0,
            })
        }
        CouplingMode::Microscopic { g_ms, .. } => {
            let linear = magnon_amplitude(params, params.g_mc, params.delta_m);
            let low = iterate_microscopic(params, g_ms, Complex64::new(0.0, 0.0))?;
            let high = iterate_microscopic(params, g_ms, linear * 3.0)?;
            let (a, b) = (low.m_a.norm(), high.m_a.norm());
            if (a - b).abs() > AMBIGUITY_TOL * a.max(b) {
                return Err(Error::AmbiguousRoot {
                    first: a,
                    second: b,
                });
            }
            let m_a = low.m_a;
            let q_a = -(g_ms / params.omega_s) * m_a.norm_sqr();
            Ok(SteadyState {
                c_a: cavity_amplitude(params, params.g_mc, m_a),
                m_a,
                q_a,
                p_a: 0.0,
                detuning_m_eff: params.delta_m + g_ms * q_a,
                g_ms_eff: SQRT_2 * g_ms * m_a.norm(),
                iterations: low.iterations,
                residual: low.residual,
            })
        }
    }
}

/// Drift matrix of the fluctuation quadratures.
pub fn drift_matrix(params: &SystemParams, ss: &SteadyState) -> RMatrix {
    drift_at(params, &ss.coupling_point(params))
}

pub fn drift_at(params: &SystemParams, point: &CouplingPoint) -> RMatrix {
    let (kc, km, dc, ws, gs) = (
        params.kappa_c,
        params.kappa_m,
        params.delta_c,
        params.omega_s,
        params.gamma_s,
    );
    let (g, gms, dm) = (point.g_mc, point.g_ms, point.detuning_m_eff);
    #[rustfmt::skip]
    let a = RMatrix::from_row_slice(6, 6, &[
        -kc,  dc,   0.0,  g,    0.0,  0.0,
        -dc,  -kc,  -g,   0.0,  0.0,  0.0,
        0.0,  g,    -km,  dm,   -gms, 0.0,
        -g,   0.0,  -dm,  -km,  0.0,  0.0,
        0.0,  0.0,  0.0,  0.0,  0.0,  ws,
        0.0,  0.0,  0.0,  gms,  -ws,  -gs,
    ]);
    a
}

/// `∂A/∂G_mc`, independent of the operating point.
pub fn drift_derivative_g_mc() -> RMatrix {
    let mut d = RMatrix::zeros(6, 6);
    d[(0, 3)] = 1.0;
    d[(1, 2)] = -1.0;
    d[(2, 1)] = 1.0;
    d[(3, 0)] = -1.0;
    d
}

/// `∂A/∂G_ms`, independent of the operating point.
pub fn drift_derivative_g_ms() -> RMatrix {
    let mut d = RMatrix::zeros(6, 6);
    d[(2, 4)] = -1.0;
    d[(5, 3)] = 1.0;
    d
}

pub fn diffusion_matrix(params: &SystemParams) -> Result<RMatrix> {
    let n = params.thermal_occupations()?;
    let c = params.kappa_c * (2.0 * n.n_c + 1.0);
    let m = params.kappa_m * (2.0 * n.n_m + 1.0);
    let s = params.gamma_s * (2.0 * n.n_s + 1.0);
    Ok(RMatrix::from_diagonal(&RVector::from_vec(vec![
        c, c, m, m, 0.0, s,
    ])))
}

/// Whether the estimation state carries the steady-state first moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisplacementPolicy {
    /// Zero-mean fluctuation state.
    #[default]
    Fluctuation,
    /// First moments `(√2 Re c_a, √2 Im c_a, √2 Re m_a, √2 Im m_a, q_a, p_a)`.
    Means,
}

/// First-moment vector of the steady state.
pub fn means_vector(ss: &SteadyState) -> RVector {
    RVector::from_vec(vec![
        SQRT_2 * ss.c_a.re,
        SQRT_2 * ss.c_a.im,
        SQRT_2 * ss.m_a.re,
        SQRT_2 * ss.m_a.im,
        ss.q_a,
        ss.p_a,
    ])
}

/// First moments as a function of the couplings at fixed `Δ'_m` and drive.
pub fn means_at(params: &SystemParams, point: &CouplingPoint) -> RVector {
    let m_a = magnon_amplitude(params, point.g_mc, point.detuning_m_eff);
    let c_a = cavity_amplitude(params, point.g_mc, m_a);
    RVector::from_vec(vec![
        SQRT_2 * c_a.re,
        SQRT_2 * c_a.im,
        SQRT_2 * m_a.re,
        SQRT_2 * m_a.im,
        mechanical_displacement(params, point.g_ms, m_a),
        0.0,
    ])
}

/// Stationary state together with the pieces it was built from.
#[derive(Debug, Clone)]
pub struct Stationary {
    pub steady: SteadyState,
    pub drift: RMatrix,
    pub diffusion: RMatrix,
    pub state: GaussianState,
}

impl Stationary {
    pub fn lyapunov_residual(&self) -> f64 {
        linalg::lyapunov_residual(&self.drift, self.state.covariance(), &self.diffusion)
    }
}

pub fn stationary(params: &SystemParams, policy: DisplacementPolicy) -> Result<Stationary> {
    let steady = solve_steady_state(params)?;
    let drift = drift_matrix(params, &steady);
    let diffusion = diffusion_matrix(params)?;
    let covariance = linalg::solve_lyapunov(&drift, &diffusion)?;
    let displacement = match policy {
        DisplacementPolicy::Fluctuation => RVector::zeros(6),
        DisplacementPolicy::Means => means_vector(&steady),
    };
    let state = GaussianState::new(displacement, covariance)?;
    Ok(Stationary {
        steady,
        drift,
        diffusion,
        state,
    })
}

/// Steady-state Gaussian state of the three modes.
pub fn steady_covariance(params: &SystemParams, policy: DisplacementPolicy) -> Result<GaussianState> {
    stationary(params, policy).map(|s| s.state)
}

/// Intracavity photon number including the coherent part `|c_a|²`.
pub fn mean_photon_number(params: &SystemParams) -> Result<f64> {
    let state = steady_covariance(params, DisplacementPolicy::Means)?;
    gaussian::mode_occupation(&state, 1, Occupation::Total)
}

/// Phonon number including the coherent part `(q_a² + p_a²)/2`.
pub fn mean_phonon_number(params: &SystemParams) -> Result<f64> {
    let state = steady_covariance(params, DisplacementPolicy::Means)?;
    gaussian::mode_occupation(&state, 3, Occupation::Total)
}
