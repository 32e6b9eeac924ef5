//! Truncated Fock-space reference implementation for one- and two-mode
//! Gaussian states, used to check the phase-space formulas independently.

use magnoest::linalg::{CMatrix, RMatrix, RVector};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Single-mode preparation `D(α) S(r e^{iφ}) ρ_th(n) S† D†`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeKnobs {
    pub n: f64,
    pub r: f64,
    pub phi: f64,
    pub alpha: Complex64,
}

impl ModeKnobs {
    pub const LEN: usize = 5;

    pub fn from_slice(k: &[f64]) -> Self {
        Self {
            n: k[0],
            r: k[1],
            phi: k[2],
            alpha: Complex64::new(k[3], k[4]),
        }
    }
}

pub fn annihilation(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        a[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// `exp(-iG)` for Hermitian `G`.
pub fn unitary_from_generator(g: &CMatrix) -> CMatrix {
    let eig = g.clone().symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (k, l) in eig.eigenvalues.iter().enumerate() {
        let mut col = scaled.column_mut(k);
        col *= Complex64::new(0.0, -l).exp();
    }
    scaled * eig.eigenvectors.adjoint()
}

/// Single-mode density matrix built in a `work`-dimensional space and cropped
/// to `dim`, then renormalized.
pub fn single_mode_density(k: &ModeKnobs, dim: usize, work: usize) -> CMatrix {
    let a = annihilation(work);
    let ad = a.adjoint();
    let xi = Complex64::from_polar(k.r, k.phi);
    // S = exp(½(ξ* a² − ξ a†²)) = exp(−iG) with G = (i/2)(ξ* a² − ξ a†²).
    let gs = (&a * &a * xi.conj() - &ad * &ad * xi) * (I * 0.5);
    // D = exp(α a† − α* a) = exp(−iG) with G = i(α a† − α* a).
    let gd = (&ad * k.alpha - &a * k.alpha.conj()) * I;
    let q = k.n / (k.n + 1.0);
    // ρ = B B† with B = U √ρ_th; only the first `dim` rows of B are needed.
    let u = unitary_from_generator(&gd) * unitary_from_generator(&gs);
    let mut b = u.rows(0, dim).into_owned();
    for j in 0..work {
        b.column_mut(j).scale_mut((q.powi(j as i32) / (k.n + 1.0)).sqrt());
    }
    normalize(&b * b.adjoint())
}

pub fn normalize(rho: CMatrix) -> CMatrix {
    let t = rho.trace();
    rho / t
}

/// Basis `(n_a, n_b)` with `n_a + n_b ≤ cap`, ordered by total number.
pub fn two_mode_basis(cap: usize) -> Vec<(usize, usize)> {
    let mut b = Vec::new();
    for total in 0..=cap {
        for na in (0..=total).rev() {
            b.push((na, total - na));
        }
    }
    b
}

/// Two single-mode states mixed on a beam splitter `exp(θ(a†b − ab†))`,
/// in the total-number-capped basis. The beam splitter conserves total
/// number, so it is exponentiated and applied one sector at a time.
pub fn two_mode_density(
    ka: &ModeKnobs,
    kb: &ModeKnobs,
    theta: f64,
    cap: usize,
    work: usize,
) -> CMatrix {
    let ra = single_mode_density(ka, cap + 1, work);
    let rb = single_mode_density(kb, cap + 1, work);
    let basis = two_mode_basis(cap);
    let dim = basis.len();
    let mut rho = CMatrix::zeros(dim, dim);
    for (i, &(ai, bi)) in basis.iter().enumerate() {
        for (j, &(aj, bj)) in basis.iter().enumerate() {
            rho[(i, j)] = ra[(ai, aj)] * rb[(bi, bj)];
        }
    }
    let sectors: Vec<(usize, CMatrix)> = (0..=cap)
        .map(|total| (total * (total + 1) / 2, beam_splitter_sector(total, theta)))
        .collect();
    let mut out = CMatrix::zeros(dim, dim);
    for (oi, ui) in &sectors {
        for (oj, uj) in &sectors {
            let block = rho.view((*oi, *oj), (ui.nrows(), uj.nrows()));
            let mixed = ui * block * uj.adjoint();
            out.view_mut((*oi, *oj), (ui.nrows(), uj.nrows())).copy_from(&mixed);
        }
    }
    normalize(out)
}

/// `exp(θ(a†b − ab†))` on the sector with `total` quanta, basis
/// `(total, 0), (total − 1, 1), …`.
fn beam_splitter_sector(total: usize, theta: f64) -> CMatrix {
    let n = total + 1;
    let mut g = CMatrix::zeros(n, n);
    // Index k holds (total − k, k); a†b maps k to k − 1.
    for k in 1..n {
        let na = (total - k) as f64;
        let nb = k as f64;
        let amp = ((na + 1.0) * nb).sqrt();
        g[(k - 1, k)] = I * theta * amp;
        g[(k, k - 1)] = -I * theta * amp;
    }
    unitary_from_generator(&g)
}

/// Annihilators of both modes in the capped basis. Products `a†b` and `ab†`
/// are exact there; single ladder operators are truncated at the cap.
pub fn two_mode_ladders(cap: usize) -> (CMatrix, CMatrix) {
    let basis = two_mode_basis(cap);
    let index = |na: usize, nb: usize| basis.iter().position(|&s| s == (na, nb));
    let dim = basis.len();
    let mut a = CMatrix::zeros(dim, dim);
    let mut b = CMatrix::zeros(dim, dim);
    for (j, &(na, nb)) in basis.iter().enumerate() {
        if na > 0 {
            if let Some(i) = index(na - 1, nb) {
                a[(i, j)] = Complex64::new((na as f64).sqrt(), 0.0);
            }
        }
        if nb > 0 {
            if let Some(i) = index(na, nb - 1) {
                b[(i, j)] = Complex64::new((nb as f64).sqrt(), 0.0);
            }
        }
    }
    (a, b)
}

/// Quadrature operators `(x_1, p_1, …)` from annihilators.
pub fn quadratures(ladders: &[CMatrix]) -> Vec<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for a in ladders {
        let ad = a.adjoint();
        out.push((a + &ad) * Complex64::new(s, 0.0));
        out.push((&ad - a) * (I * s));
    }
    out
}

pub fn expect(rho: &CMatrix, op: &CMatrix) -> Complex64 {
    (rho * op).trace()
}

/// `Tr[X Y]` without forming the product.
pub fn trace_product(x: &CMatrix, y: &CMatrix) -> Complex64 {
    x.component_mul(&y.transpose()).sum()
}

/// First moments and covariance `½⟨{δr_i, δr_j}⟩` from Fock operators.
pub fn moments(rho: &CMatrix, quads: &[CMatrix]) -> (RVector, RMatrix) {
    let n = quads.len();
    let rq: Vec<CMatrix> = quads.iter().map(|q| rho * q).collect();
    let d = RVector::from_iterator(n, rq.iter().map(|x| x.trace().re));
    let mut v = RMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let sym = trace_product(&rq[i], &quads[j]) + trace_product(&rq[j], &quads[i]);
            v[(i, j)] = 0.5 * sym.re - d[i] * d[j];
        }
    }
    (d, v)
}

pub fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let eig = m.clone().symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (k, l) in eig.eigenvalues.iter().enumerate() {
        scaled.column_mut(k).scale_mut(l.max(0.0).sqrt());
    }
    scaled * eig.eigenvectors.adjoint()
}

/// Root fidelity `Tr|√ρ √σ|`, evaluated as a sum of singular values so that
/// tiny eigenvalues do not lose precision through a second square root.
pub fn root_fidelity(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let m = hermitian_sqrt(rho) * hermitian_sqrt(sigma);
    m.singular_values().sum()
}

/// SLD QFI along one direction from the Bures metric:
/// `8 (1 − √F(ρ(−h/2), ρ(h/2))) / h²`, Richardson-extrapolated in `h`.
pub fn fidelity_qfi<F: Fn(f64) -> CMatrix>(family: F, h: f64) -> f64 {
    let at = |h: f64| 8.0 * (1.0 - root_fidelity(&family(-h / 2.0), &family(h / 2.0))) / (h * h);
    let (coarse, fine) = (at(h), at(h / 2.0));
    (4.0 * fine - coarse) / 3.0
}

/// SLD QFI matrix from directional fidelities, off-diagonals by polarization.
pub fn fidelity_qfim<F: Fn(&[f64]) -> CMatrix>(family: F, params: usize, h: f64) -> RMatrix {
    let along = |dir: &[f64]| fidelity_qfi(|s| family(&dir.iter().map(|c| c * s).collect::<Vec<_>>()), h);
    let unit = |k: usize| (0..params).map(|j| if j == k { 1.0 } else { 0.0 }).collect::<Vec<_>>();
    let mut h_mat = RMatrix::zeros(params, params);
    for k in 0..params {
        h_mat[(k, k)] = along(&unit(k));
    }
    for i in 0..params {
        for j in (i + 1)..params {
            let dir: Vec<f64> = (0..params)
                .map(|k| if k == i || k == j { 1.0 } else { 0.0 })
                .collect();
            let both = along(&dir);
            let off = 0.5 * (both - h_mat[(i, i)] - h_mat[(j, j)]);
            h_mat[(i, j)] = off;
            h_mat[(j, i)] = off;
        }
    }
    h_mat
}

/// Five-point derivative of a matrix-valued function at 0.
pub fn derivative<F: Fn(f64) -> CMatrix>(f: F, h: f64) -> CMatrix {
    let eight = Complex64::new(8.0, 0.0);
    let c = Complex64::new(1.0 / (12.0 * h), 0.0);
    (f(-2.0 * h) - f(-h) * eight + f(h) * eight - f(2.0 * h)) * c
}

pub fn real_derivative<F: Fn(f64) -> DMatrix<f64>>(f: F, h: f64) -> DMatrix<f64> {
    (f(-2.0 * h) - f(-h) * 8.0 + f(h) * 8.0 - f(2.0 * h)) / (12.0 * h)
}

/// Eigenbasis of `ρ` with eigenvalues; components below `1e-9·λ_max` are
/// treated as outside the support. The smallest eigenvalues of a truncated
/// state carry the cutoff artefacts, and `ρ⁻¹` amplifies them, while their
/// true contribution to the sums is of the order of the eigenvalue itself.
pub struct Spectral {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Spectral {
    pub fn new(rho: &CMatrix) -> Self {
        let eig = rho.clone().symmetric_eigen();
        Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    pub fn rotate(&self, op: &CMatrix) -> CMatrix {
        self.vectors.adjoint() * op * &self.vectors
    }

    fn floor(&self) -> f64 {
        1e-9 * self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// `Tr[∂_μρ ∂_νρ ρ⁻¹]` restricted to the support.
    pub fn rld_entry(&self, d_mu: &CMatrix, d_nu: &CMatrix) -> Complex64 {
        self.rld_entry_rotated(&self.rotate(d_mu), &self.rotate(d_nu))
    }

    /// As [`Spectral::rld_entry`] for derivatives already in the eigenbasis.
    pub fn rld_entry_rotated(&self, a: &CMatrix, b: &CMatrix) -> Complex64 {
        let floor = self.floor();
        let n = self.values.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let li = self.values[i];
            if li <= floor {
                continue;
            }
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..n {
                row += a[(i, j)] * b[(j, i)];
            }
            acc += row / li;
        }
        acc
    }

    /// `Σ_jk 2 (∂_μρ)_jk (∂_νρ)_kj / (λ_j + λ_k)` for derivatives already in
    /// the eigenbasis, real part.
    pub fn sld_entry_rotated(&self, a: &CMatrix, b: &CMatrix) -> f64 {
        let floor = self.floor();
        let n = self.values.len();
        let mut acc = 0.0;
        for j in 0..n {
            for k in 0..n {
                let s = self.values[j] + self.values[k];
                if s > floor {
                    acc += 2.0 * (a[(j, k)] * b[(k, j)]).re / s;
                }
            }
        }
        acc
    }

    /// SLD operator in the original basis from `∂ρ = ½(ρL + Lρ)`.
    pub fn sld_operator(&self, d_rho: &CMatrix) -> CMatrix {
        let a = self.rotate(d_rho);
        let n = self.values.len();
        let floor = 1e-4 * self.floor();
        let mut l = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let s = self.values[i] + self.values[j];
                if s > floor {
                    l[(i, j)] = a[(i, j)] * (2.0 / s);
                }
            }
        }
        &self.vectors * l * self.vectors.adjoint()
    }
}
