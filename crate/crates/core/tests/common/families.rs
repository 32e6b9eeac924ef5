//! Random two-parameter families of one- and two-mode Gaussian states, with
//! matching phase-space and Fock-space descriptions.

use magnoest::estimation::DerivativeBundle;
use magnoest::gaussian::{self, GaussianState};
use magnoest::linalg::{CMatrix, RMatrix, RVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fock::{self, ModeKnobs};

pub const SINGLE_MODE_DIM: usize = 80;
pub const SINGLE_MODE_WORK: usize = 120;
pub const TWO_MODE_CAP: usize = 20;
pub const TWO_MODE_WORK: usize = 80;
pub const CORPUS_SEED: u64 = 0x6d61_676e_6f65_7374;

/// Symplectic action of `S(r e^{iφ})` on `(x, p)`.
fn squeeze_matrix(r: f64, phi: f64) -> RMatrix {
    let (ch, sh) = (r.cosh(), r.sinh());
    let (c, s) = (phi.cos(), phi.sin());
    RMatrix::from_row_slice(2, 2, &[ch - sh * c, -sh * s, -sh * s, ch + sh * c])
}

fn mode_moments(k: &ModeKnobs) -> (RVector, RMatrix) {
    let m = squeeze_matrix(k.r, k.phi);
    let v = &m * RMatrix::identity(2, 2) * (k.n + 0.5) * m.transpose();
    let d = RVector::from_vec(vec![
        std::f64::consts::SQRT_2 * k.alpha.re,
        std::f64::consts::SQRT_2 * k.alpha.im,
    ]);
    (d, v)
}

/// Knob vector: one mode uses `[n, r, φ, Re α, Im α]`; two modes append the
/// second mode and a beam-splitter angle.
#[derive(Debug, Clone)]
pub struct Family {
    pub modes: usize,
    pub base: Vec<f64>,
    pub directions: [Vec<f64>; 2],
}

impl Family {
    pub fn knobs(&self, theta: &[f64]) -> Vec<f64> {
        self.base
            .iter()
            .enumerate()
            .map(|(i, b)| b + theta[0] * self.directions[0][i] + theta[1] * self.directions[1][i])
            .collect()
    }

    pub fn moments(&self, theta: &[f64]) -> (RVector, RMatrix) {
        let k = self.knobs(theta);
        let (da, va) = mode_moments(&ModeKnobs::from_slice(&k[0..5]));
        if self.modes == 1 {
            return (da, va);
        }
        let (db, vb) = mode_moments(&ModeKnobs::from_slice(&k[5..10]));
        let (c, s) = (k[10].cos(), k[10].sin());
        let mut bs = RMatrix::zeros(4, 4);
        for i in 0..2 {
            bs[(i, i)] = c;
            bs[(i, i + 2)] = s;
            bs[(i + 2, i)] = -s;
            bs[(i + 2, i + 2)] = c;
        }
        let v = gaussian::block_diagonal(&[va, vb]);
        let d = RVector::from_iterator(4, da.iter().chain(db.iter()).copied());
        (&bs * d, &bs * v * bs.transpose())
    }

    pub fn state(&self, theta: &[f64]) -> GaussianState {
        let (d, v) = self.moments(theta);
        GaussianState::new(d, v).expect("family produces valid covariances")
    }

    pub fn density(&self, theta: &[f64]) -> CMatrix {
        let k = self.knobs(theta);
        let a = ModeKnobs::from_slice(&k[0..5]);
        if self.modes == 1 {
            fock::single_mode_density(&a, SINGLE_MODE_DIM, SINGLE_MODE_WORK)
        } else {
            let b = ModeKnobs::from_slice(&k[5..10]);
            fock::two_mode_density(&a, &b, k[10], TWO_MODE_CAP, TWO_MODE_WORK)
        }
    }

    /// Phase-space derivatives at θ = 0 by a five-point stencil.
    pub fn bundle(&self) -> DerivativeBundle {
        let h = 1e-3;
        let n = 2 * self.modes;
        let mut dv = Vec::new();
        let mut dd = Vec::new();
        for mu in 0..2 {
            let theta = |s: f64| {
                let mut t = [0.0, 0.0];
                t[mu] = s;
                t
            };
            let v = fock::real_derivative(|s| self.moments(&theta(s)).1, h);
            let d = fock::real_derivative(
                |s| {
                    let d = self.moments(&theta(s)).0;
                    RMatrix::from_column_slice(n, 1, d.as_slice())
                },
                h,
            );
            dv.push((&v + v.transpose()) * 0.5);
            dd.push(RVector::from_column_slice(d.as_slice()));
        }
        DerivativeBundle::supplied(dv, dd).unwrap()
    }

    pub fn quadratures(&self) -> Vec<CMatrix> {
        if self.modes == 1 {
            fock::quadratures(&[fock::annihilation(SINGLE_MODE_DIM)])
        } else {
            let (a, b) = fock::two_mode_ladders(TWO_MODE_CAP);
            fock::quadratures(&[a, b])
        }
    }
}

fn random_mode(rng: &mut ChaCha8Rng, n: (f64, f64), r: f64, alpha: f64) -> Vec<f64> {
    vec![
        rng.random_range(n.0..n.1),
        rng.random_range(0.0..r),
        rng.random_range(0.0..std::f64::consts::TAU),
        rng.random_range(-alpha..alpha),
        rng.random_range(-alpha..alpha),
    ]
}

fn random_direction(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// The fixed oracle corpus: ten one-mode and ten two-mode families.
pub fn corpus() -> Vec<Family> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    let mut out = Vec::new();
    for _ in 0..10 {
        let base = random_mode(&mut rng, (0.2, 1.0), 0.4, 0.6);
        let directions = [random_direction(&mut rng, 5), random_direction(&mut rng, 5)];
        out.push(Family {
            modes: 1,
            base,
            directions,
        });
    }
    for _ in 0..10 {
        let mut base = random_mode(&mut rng, (0.15, 0.35), 0.15, 0.3);
        base.extend(random_mode(&mut rng, (0.15, 0.35), 0.15, 0.3));
        base.push(rng.random_range(0.0..std::f64::consts::PI));
        let directions = [random_direction(&mut rng, 11), random_direction(&mut rng, 11)];
        out.push(Family {
            modes: 2,
            base,
            directions,
        });
    }
    out
}

/// Five-point derivatives of the density matrix at θ = 0.
pub fn density_derivatives(f: &Family) -> Vec<CMatrix> {
    (0..2)
        .map(|mu| {
            fock::derivative(
                |s| {
                    let mut t = [0.0, 0.0];
                    t[mu] = s;
                    f.density(&t)
                },
                1e-3,
            )
        })
        .collect()
}

/// Fock-space SLD and RLD matrices for a family at θ = 0, both from the
/// spectral decomposition of ρ.
pub fn fock_qfims(f: &Family) -> (RMatrix, CMatrix) {
    let rho = f.density(&[0.0, 0.0]);
    let spec = fock::Spectral::new(&rho);
    let d: Vec<CMatrix> = density_derivatives(f).iter().map(|m| spec.rotate(m)).collect();
    let mut sld = RMatrix::zeros(2, 2);
    let mut rld = CMatrix::zeros(2, 2);
    for mu in 0..2 {
        for nu in 0..2 {
            sld[(mu, nu)] = spec.sld_entry_rotated(&d[mu], &d[nu]);
            rld[(mu, nu)] = spec.rld_entry_rotated(&d[mu], &d[nu]);
        }
    }
    (sld, rld)
}

/// SLD matrix from the Bures metric, independent of any eigen-threshold.
pub fn fidelity_sld(f: &Family) -> RMatrix {
    fock::fidelity_qfim(|t| f.density(t), 2, 2e-2)
}

pub fn relative_error_real(a: &RMatrix, b: &RMatrix) -> f64 {
    (a - b).norm() / b.norm()
}

pub fn relative_error_complex(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm()
}
