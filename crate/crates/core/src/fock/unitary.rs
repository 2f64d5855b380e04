//! Single-particle unitaries and their lift to multiphoton sectors.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use super::basis::{ModeOccupation, SectorBasis};
use super::permanent::permanent;
use crate::error::{Error, Result};
use crate::linalg::{max_abs, CMatrix};

const UNITARY_TOL: f64 = 1e-10;

/// An `m x m` unitary describing a passive linear-optical interferometer.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    /// Wraps `u` after checking `max |U^dagger U - I| <= 1e-10`.
    pub fn new(u: CMatrix) -> Result<Self> {
        if !u.is_square() || u.nrows() == 0 {
            return Err(Error::InvalidInput(format!(
                "unitary must be square and nonempty, got {}x{}",
                u.nrows(),
                u.ncols()
            )));
        }
        let dev = unitarity_defect(&u);
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self(u))
    }

    pub fn identity(m: usize) -> Self {
        Self(CMatrix::identity(m, m))
    }

    /// The balanced two-mode beamsplitter `[[1, 1], [1, -1]] / sqrt(2)`.
    pub fn beamsplitter() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self(CMatrix::from_row_slice(2, 2, &[h, h, h, -h]))
    }

    /// The `p`-mode discrete Fourier interferometer `omega^{kl} / sqrt(p)`
    /// with `omega = exp(-2 pi i / p)`.
    pub fn fourier(p: usize) -> Self {
        let norm = 1.0 / (p as f64).sqrt();
        Self(CMatrix::from_fn(p, p, |k, l| {
            Complex64::from_polar(norm, -2.0 * PI * ((k * l) % p) as f64 / p as f64)
        }))
    }

    pub fn modes(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.modes() != other.modes() {
            return Err(Error::ModeMismatch { expected: self.modes(), found: other.modes() });
        }
        Ok(Self(&self.0 * &other.0))
    }
}

pub(crate) fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

/// Draws an `m x m` unitary from the Haar measure.
///
/// A matrix of i.i.d. standard complex Gaussians is QR-factorized and the
/// phases of `R`'s diagonal are pushed into `Q`, which removes the bias a
/// bare QR would leave in the distribution. The same seed always yields the
/// same matrix.
pub fn sample_haar_unitary(m: usize, seed: u64) -> UnitaryMatrix {
    assert!(m >= 1, "need at least one mode");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = CMatrix::from_fn(m, m, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re * scale, im * scale)
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..m {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..m {
            q[(i, j)] *= phase;
        }
    }
    UnitaryMatrix(q)
}

/// `<s| phi(U) |t>` for occupation tuples of equal photon number.
///
/// Equals `per(U_{s,t}) / sqrt(prod s_i! t_i!)` where `U_{s,t}` repeats row
/// `i` of `U` `s_i` times and column `j` `t_j` times.
pub fn transition_amplitude(
    u: &UnitaryMatrix,
    s: &ModeOccupation,
    t: &ModeOccupation,
) -> Result<Complex64> {
    let m = u.modes();
    for occ in [s, t] {
        if occ.modes() != m {
            return Err(Error::ModeMismatch { expected: m, found: occ.modes() });
        }
    }
    if s.photons() != t.photons() {
        return Err(Error::PhotonMismatch { expected: s.photons(), found: t.photons() });
    }
    let rows = expand_indices(s);
    let cols = expand_indices(t);
    Ok(amplitude_from_indices(u.matrix(), &rows, &cols)
        / (s.factorial_product() * t.factorial_product()).sqrt())
}

fn expand_indices(s: &ModeOccupation) -> Vec<usize> {
    s.as_slice()
        .iter()
        .enumerate()
        .flat_map(|(i, &k)| std::iter::repeat_n(i, k as usize))
        .collect()
}

fn amplitude_from_indices(u: &CMatrix, rows: &[usize], cols: &[usize]) -> Complex64 {
    let k = rows.len();
    let sub = CMatrix::from_fn(k, k, |a, b| u[(rows[a], cols[b])]);
    permanent(&sub)
}

/// `phi_m^n(U)`: the action of `U` on the `n`-photon sector.
#[derive(Clone, Debug)]
pub struct SectorUnitary {
    basis: Arc<SectorBasis>,
    matrix: CMatrix,
}

impl SectorUnitary {
    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `phi X phi^dagger`.
    pub fn conjugate(&self, x: &CMatrix) -> CMatrix {
        &self.matrix * x * self.matrix.adjoint()
    }

    /// `phi^dagger X phi`.
    pub fn conjugate_inverse(&self, x: &CMatrix) -> CMatrix {
        self.matrix.adjoint() * x * &self.matrix
    }
}

/// Builds `phi_m^n(U)` entry by entry from permanents.
pub fn lift_to_sector(u: &UnitaryMatrix, basis: &Arc<SectorBasis>) -> Result<SectorUnitary> {
    if basis.modes() != u.modes() {
        return Err(Error::ModeMismatch { expected: basis.modes(), found: u.modes() });
    }
    let d = basis.dim();
    let expanded: Vec<Vec<usize>> = basis.iter().map(expand_indices).collect();
    let norms: Vec<f64> = basis.iter().map(|s| s.factorial_product().sqrt()).collect();
    let mut matrix = CMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            matrix[(a, b)] = amplitude_from_indices(u.matrix(), &expanded[a], &expanded[b])
                / (norms[a] * norms[b]);
        }
    }
    Ok(SectorUnitary { basis: Arc::clone(basis), matrix })
}
