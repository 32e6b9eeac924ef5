//! Dense linear-algebra primitives used by the Gaussian estimation formulas.
//!
//! Conventions fixed here and relied upon everywhere else:
//!
//! * `vectorize` stacks columns, so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
//! * `kron(a, b)` has block `(i, j)` equal to `a[(i, j)] * b`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RMatrix = DMatrix<f64>;
pub type CMatrix = DMatrix<Complex64>;
pub type RVector = DVector<f64>;
pub type CVector = DVector<Complex64>;

pub(crate) const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn ensure_finite_real(m: &RMatrix, what: &'static str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn ensure_finite(m: &CMatrix, what: &'static str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn ensure_square<T: nalgebra::Scalar>(m: &DMatrix<T>) -> Result<usize> {
    if m.nrows() == m.ncols() {
        Ok(m.nrows())
    } else {
        Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

/// Kronecker product.
pub fn kron<T>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T>
where
    T: nalgebra::Scalar + Copy + std::ops::Mul<Output = T>,
{
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    DMatrix::from_fn(ra * rb, ca * cb, |i, j| {
        a[(i / rb, j / cb)] * b[(i % rb, j % cb)]
    })
}

/// Column-stacking vectorization of a square matrix.
pub fn vectorize<T: nalgebra::Scalar + Copy>(m: &DMatrix<T>) -> Result<DVector<T>> {
    ensure_square(m)?;
    // nalgebra stores column-major, which is exactly column stacking.
    Ok(DVector::from_column_slice(m.as_slice()))
}

/// Inverse of [`vectorize`] for an `n x n` matrix.
pub fn unvectorize<T: nalgebra::Scalar + Copy>(v: &DVector<T>, n: usize) -> Result<DMatrix<T>> {
    if v.len() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} cannot be reshaped to {n}x{n}",
            v.len()
        )));
    }
    Ok(DMatrix::from_column_slice(n, n, v.as_slice()))
}

/// Default rank threshold: `max(rows, cols) * eps * sigma_max`.
pub fn default_pinv_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Moore-Penrose pseudoinverse by SVD thresholding.
///
/// Singular values `<= tolerance` are treated as zero. `None` selects
/// [`default_pinv_tolerance`].
pub fn pinv(m: &CMatrix, tolerance: Option<f64>) -> CMatrix {
    let (rows, cols) = m.shape();
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return CMatrix::zeros(cols, rows);
    }
    let tol = tolerance.unwrap_or_else(|| default_pinv_tolerance(rows, cols, sigma_max));
    let u = svd.u.expect("svd computed with u");
    let v_t = svd.v_t.expect("svd computed with v_t");
    let mut out = CMatrix::zeros(cols, rows);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            let vk = v_t.row(k).adjoint();
            let uk = u.column(k).adjoint();
            out += (vk * uk) * Complex64::new(1.0 / s, 0.0);
        }
    }
    out
}

/// Tikhonov approximation `(A†A + δI)⁻¹ A†` of the pseudoinverse.
///
/// Converges to [`pinv`] as `delta -> 0`; kept as a cross-check route.
pub fn pinv_tikhonov(m: &CMatrix, delta: f64) -> Result<CMatrix> {
    let adj = m.adjoint();
    let mut gram = &adj * m;
    for k in 0..gram.nrows() {
        gram[(k, k)] += Complex64::new(delta, 0.0);
    }
    gram.lu()
        .solve(&adj)
        .ok_or_else(|| Error::DimensionMismatch("Tikhonov system is singular".into()))
}

/// Spectral decomposition of a Hermitian matrix (only the lower triangle is read).
pub(crate) fn hermitian_eigen(m: &CMatrix) -> SymmetricEigen<Complex64, nalgebra::Dyn> {
    SymmetricEigen::new(m.clone())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_eigen(m).eigenvalues.iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Positive semidefinite square root of a Hermitian PSD matrix. Negative
/// eigenvalues from round-off are clamped to zero.
pub fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let eig = hermitian_eigen(m);
    let d = eig
        .eigenvalues
        .map(|x| Complex64::new(x.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * CMatrix::from_diagonal(&d) * eig.eigenvectors.adjoint()
}

/// Matrix modulus `|M| = sqrt(M M†)`.
pub fn mat_abs(m: &CMatrix) -> Result<CMatrix> {
    ensure_square(m)?;
    let g = m * m.adjoint();
    // Force exact Hermiticity before the eigen-solve.
    let g = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(hermitian_sqrt(&g))
}

/// Largest real part over the spectrum of a real square matrix.
pub fn spectral_abscissa(a: &RMatrix) -> Result<f64> {
    ensure_square(a)?;
    Ok(a.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Solve `A X + X Aᵀ = -Q` for Hurwitz-stable real `A`.
///
/// Uses the Kronecker formulation `(I ⊗ A + A ⊗ I) vec(X) = -vec(Q)` with one
/// step of iterative refinement; the result is symmetrized.
pub fn solve_lyapunov(a: &RMatrix, q: &RMatrix) -> Result<RMatrix> {
    let n = ensure_square(a)?;
    if q.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "drift is {n}x{n} but source is {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    ensure_finite_real(a, "drift matrix")?;
    ensure_finite_real(q, "source matrix")?;
    let abscissa = spectral_abscissa(a)?;
    if abscissa.is_nan() || abscissa >= 0.0 {
        return Err(Error::UnstableDrift { abscissa });
    }

    // Rescale for conditioning: X solves the scaled problem unchanged.
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let a_s = a / scale;
    let q_s = q / scale;
    let operator = kronecker_sum(&a_s);
    let lu = operator.clone().lu();
    let rhs = -vectorize(&q_s)?;
    let mut x = lu
        .solve(&rhs)
        .ok_or(Error::UnstableDrift { abscissa })?;
    let residual = &rhs - &operator * &x;
    if let Some(dx) = lu.solve(&residual) {
        x += dx;
    }
    let x = unvectorize(&x, n)?;
    Ok((&x + x.transpose()) * 0.5)
}

/// `I ⊗ A + A ⊗ I`, the vec-representation of `X -> A X + X Aᵀ`.
pub fn kronecker_sum(a: &RMatrix) -> RMatrix {
    let n = a.nrows();
    let id = RMatrix::identity(n, n);
    kron(&id, a) + kron(a, &id)
}

/// Frobenius norm of `A X + X Aᵀ + Q`.
pub fn lyapunov_residual(a: &RMatrix, x: &RMatrix, q: &RMatrix) -> f64 {
    (a * x + x * a.transpose() + q).norm()
}

/// Solve a complex square linear system, falling back to the pseudoinverse
/// when the matrix is numerically singular. Returns the solution and whether
/// the fallback was used.
pub(crate) fn solve_or_pinv(m: &CMatrix, rhs: &CVector, force_pinv: bool) -> (CVector, bool) {
    if !force_pinv {
        if let Some(x) = m.clone().lu().solve(rhs) {
            if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return (x, false);
            }
        }
    }
    (pinv(m, None) * rhs, true)
}
