//! N-mode Gaussian states in the quadrature basis.
//!
//! Quadratures are ordered `(q_1, p_1, ..., q_N, p_N)` with `x = (a + a†)/√2`,
//! so `[q, p] = i` and the vacuum covariance is `I/2`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, RMatrix, RVector, I};

/// Block-diagonal symplectic form `⊕ [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    modes: usize,
    matrix: RMatrix,
}

impl SymplecticForm {
    pub fn new(modes: usize) -> Self {
        let mut matrix = RMatrix::zeros(2 * modes, 2 * modes);
        for k in 0..modes {
            matrix[(2 * k, 2 * k + 1)] = 1.0;
            matrix[(2 * k + 1, 2 * k)] = -1.0;
        }
        Self { modes, matrix }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.matrix
    }

    pub fn complex(&self) -> CMatrix {
        linalg::to_complex(&self.matrix)
    }
}

pub fn symplectic_form(modes: usize) -> SymplecticForm {
    SymplecticForm::new(modes)
}

/// First and second moments of a Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    displacement: RVector,
    covariance: RMatrix,
}

impl GaussianState {
    /// Build a state, checking shapes, finiteness and symmetry (to 1e-12
    /// relative). Physicality is checked separately by [`validate`].
    pub fn new(displacement: RVector, covariance: RMatrix) -> Result<Self> {
        let n = covariance.nrows();
        if n == 0 || !n.is_multiple_of(2) || covariance.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "covariance must be 2N x 2N, got {}x{}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        if displacement.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "displacement has length {} but covariance is {n}x{n}",
                displacement.len()
            )));
        }
        linalg::ensure_finite_real(&covariance, "covariance")?;
        if !displacement.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("displacement"));
        }
        let defect = symmetry_defect(&covariance);
        if defect > 1e-12 * covariance.norm().max(1.0) {
            return Err(Error::DimensionMismatch(format!(
                "covariance is not symmetric (defect {defect:e})"
            )));
        }
        let covariance = (&covariance + covariance.transpose()) * 0.5;
        Ok(Self {
            displacement,
            covariance,
        })
    }

    pub fn zero_mean(covariance: RMatrix) -> Result<Self> {
        let n = covariance.nrows();
        Self::new(RVector::zeros(n), covariance)
    }

    pub fn vacuum(modes: usize) -> Self {
        let n = 2 * modes;
        Self {
            displacement: RVector::zeros(n),
            covariance: RMatrix::identity(n, n) * 0.5,
        }
    }

    /// Thermal state with the same mean occupation in every mode.
    pub fn thermal(modes: usize, occupation: f64) -> Self {
        let n = 2 * modes;
        Self {
            displacement: RVector::zeros(n),
            covariance: RMatrix::identity(n, n) * (occupation + 0.5),
        }
    }

    pub fn modes(&self) -> usize {
        self.covariance.nrows() / 2
    }

    pub fn displacement(&self) -> &RVector {
        &self.displacement
    }

    pub fn covariance(&self) -> &RMatrix {
        &self.covariance
    }

    pub fn with_displacement(mut self, displacement: RVector) -> Result<Self> {
        if displacement.len() != self.displacement.len() {
            return Err(Error::DimensionMismatch("displacement length".into()));
        }
        self.displacement = displacement;
        Ok(self)
    }

    /// `V + (i/2) Ω`, the Hermitian matrix whose positivity is the uncertainty
    /// relation. Also the matrix of centred second moments `⟨δr_a δr_b⟩`.
    pub fn moment_matrix(&self) -> CMatrix {
        let omega = symplectic_form(self.modes()).complex();
        linalg::to_complex(&self.covariance) + omega * (I * 0.5)
    }

    /// Symplectic eigenvalues, ascending.
    ///
    /// Computed as the positive eigenvalues of the Hermitian matrix
    /// `V^{1/2} (iΩ) V^{1/2}`.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let v = linalg::to_complex(&self.covariance);
        let root = linalg::hermitian_sqrt(&v);
        let omega = symplectic_form(self.modes()).complex();
        let k = &root * omega * I * &root;
        let k = (&k + k.adjoint()) * Complex64::new(0.5, 0.0);
        let ev = linalg::hermitian_eigenvalues(&k);
        // Spectrum is ±ν; take the upper half.
        ev[self.modes()..].to_vec()
    }
}

fn symmetry_defect(m: &RMatrix) -> f64 {
    (m - m.transpose()).amax()
}

/// Diagnostic summary returned by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub symmetry_defect: f64,
    pub min_uncertainty_eigenvalue: f64,
    pub min_symplectic_eigenvalue: f64,
    pub passed: bool,
}

/// Check symmetry, the uncertainty relation `V + (i/2)Ω ≥ 0` and `ν ≥ 1/2`.
pub fn validate(state: &GaussianState, tolerance: f64) -> ValidationReport {
    let symmetry_defect = symmetry_defect(&state.covariance);
    let min_uncertainty_eigenvalue = linalg::hermitian_eigenvalues(&state.moment_matrix())
        .first()
        .copied()
        .unwrap_or(f64::NAN);
    let min_symplectic_eigenvalue = state
        .symplectic_eigenvalues()
        .first()
        .copied()
        .unwrap_or(f64::NAN);
    let scale = state.covariance.amax().max(1.0);
    let passed = symmetry_defect <= 1e-12 * scale
        && min_uncertainty_eigenvalue >= -tolerance
        && min_symplectic_eigenvalue >= 0.5 - tolerance;
    ValidationReport {
        symmetry_defect,
        min_uncertainty_eigenvalue,
        min_symplectic_eigenvalue,
        passed,
    }
}

/// `Tr ρ² = 1 / (2^N sqrt(det V))`.
pub fn purity(state: &GaussianState) -> Result<f64> {
    let det = state.covariance.determinant();
    if det.is_nan() || det <= 0.0 {
        return Err(Error::NonPositiveDeterminant(det));
    }
    Ok(1.0 / (2f64.powi(state.modes() as i32) * det.sqrt()))
}

/// Which contributions [`mode_occupation`] includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Occupation {
    /// Fluctuations plus the coherent amplitude `|⟨a⟩|²`.
    #[default]
    Total,
    FluctuationsOnly,
}

/// Mean excitation number of mode `k` (1-based).
pub fn mode_occupation(state: &GaussianState, k: usize, which: Occupation) -> Result<f64> {
    let modes = state.modes();
    if k == 0 || k > modes {
        return Err(Error::ModeOutOfRange { index: k, modes });
    }
    let (iq, ip) = (2 * (k - 1), 2 * (k - 1) + 1);
    let v = &state.covariance;
    let fluct = (v[(iq, iq)] + v[(ip, ip)] - 1.0) / 2.0;
    let coherent = match which {
        Occupation::Total => {
            let d = &state.displacement;
            (d[iq] * d[iq] + d[ip] * d[ip]) / 2.0
        }
        Occupation::FluctuationsOnly => 0.0,
    };
    Ok(fluct + coherent)
}

/// Direct sum of single-mode covariance blocks.
pub fn block_diagonal(blocks: &[RMatrix]) -> RMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(n, n);
    let mut offset = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((offset, offset), (k, k)).copy_from(b);
        offset += k;
    }
    out
}
