//! The photon-number measurement channel and its inverse.
//!
//! Averaging "evolve by a Haar-random interferometer, then measure photon
//! numbers" over the unitary gives a channel on the operators of the
//! `n`-photon sector. Schur's lemma forces it to be a combination of the
//! isotypic projectors,
//!
//! ```text
//! M = sum_k s_k Pi_k,        M^{-1} = sum_k Pi_k / s_k,
//! s_k = (m - 1) / (2k + m - 1) / binomial(k + m - 2, k).
//! ```

mod cache;
mod casimir;
mod generators;
mod projectors;
mod sparse;

use std::sync::Arc;

pub use cache::{load_channel, resolve_cache_dir, save_channel, sector_dir, CacheManifest, ProjectorEntry, CACHE_ENV, CACHE_VERSION};
pub use casimir::{casimir_eigenvalue, casimir_superoperator};
pub use generators::{generator_in_sector, Generator, GeneratorTable};
pub use projectors::{irrep_count, IrrepProjector, CLUSTER_TOLERANCE, SPARSIFY_THRESHOLD};
pub use sparse::SymmetricSparseMatrix;

use crate::error::{Error, Result};
use crate::fock::{binomial, lift_to_sector, DimensionGuard, ModeOccupation, SectorBasis, SectorUnitary, UnitaryMatrix};
use crate::linalg::{unvectorize, vectorize, CMatrix};

/// Dimension of the `k`-th isotypic component,
/// `(2k + m - 1) / (m - 1) * binomial(k + m - 2, k)^2` (and 1 for a single mode).
pub fn irrep_dimension(m: usize, k: usize) -> usize {
    if m == 1 {
        return usize::from(k == 0);
    }
    let b = binomial((k + m - 2) as u64, k as u64);
    // (2k + m - 1) b^2 is divisible by (m - 1)
    ((2 * k + m - 1) as u128 * b * b / (m - 1) as u128) as usize
}

/// How [`channel_eigenvalue`] computes `s_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenvalueMode {
    ClosedForm,
    /// `tr(D Pi_k) / tr(Pi_k)` with `D` the photon-counting dephasing map,
    /// read off built projectors.
    SchurOracle,
}

/// Closed-form channel eigenvalue on the `k`-th isotypic component.
pub fn closed_form_eigenvalue(m: usize, k: usize) -> f64 {
    if m == 1 {
        return 1.0;
    }
    let b = binomial((k + m - 2) as u64, k as u64) as f64;
    (m - 1) as f64 / (2 * k + m - 1) as f64 / b
}

/// `s_k` for the channel, by either route. `SchurOracle` needs `channel`.
pub fn channel_eigenvalue(
    m: usize,
    k: usize,
    mode: EigenvalueMode,
    channel: Option<&MeasurementChannel>,
) -> Result<f64> {
    match mode {
        EigenvalueMode::ClosedForm => {
            if let Some(ch) = channel {
                if k >= ch.projectors.len() {
                    return Err(Error::IndexOutOfRange { index: k, limit: ch.projectors.len() });
                }
            }
            Ok(closed_form_eigenvalue(m, k))
        }
        EigenvalueMode::SchurOracle => {
            let ch = channel.ok_or_else(|| {
                Error::InvalidInput("the Schur route needs built projectors".into())
            })?;
            if ch.modes() != m {
                return Err(Error::ModeMismatch { expected: ch.modes(), found: m });
            }
            ch.schur_eigenvalue(k)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// `M^{(n)}` on one sector, stored as eigenvalues plus sparse projectors.
#[derive(Clone, Debug)]
pub struct MeasurementChannel {
    basis: Arc<SectorBasis>,
    eigenvalues: Vec<f64>,
    projectors: Vec<IrrepProjector>,
}

impl MeasurementChannel {
    pub fn build(m: usize, n: usize) -> Result<Self> {
        Self::build_with_guard(m, n, &DimensionGuard::default())
    }

    pub fn build_with_guard(m: usize, n: usize, guard: &DimensionGuard) -> Result<Self> {
        guard.check_superoperator(m, n)?;
        let basis = Arc::new(SectorBasis::with_guard(m, n, guard)?);
        let projectors = projectors::build_for_basis(&basis)?;
        Self::from_parts(basis, projectors)
    }

    pub(crate) fn from_parts(basis: Arc<SectorBasis>, projectors: Vec<IrrepProjector>) -> Result<Self> {
        let m = basis.modes();
        if projectors.len() != irrep_count(m, basis.photons()) {
            return Err(Error::InvalidInput(format!(
                "expected {} projectors, got {}",
                irrep_count(m, basis.photons()),
                projectors.len()
            )));
        }
        let eigenvalues = (0..projectors.len()).map(|k| closed_form_eigenvalue(m, k)).collect();
        Ok(Self { basis, eigenvalues, projectors })
    }

    pub fn modes(&self) -> usize {
        self.basis.modes()
    }

    pub fn photons(&self) -> usize {
        self.basis.photons()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projectors(&self) -> &[IrrepProjector] {
        &self.projectors
    }

    /// `tr(D Pi_k) / tr(Pi_k)` where `D(X) = sum_s |s><s| X |s><s|`.
    ///
    /// `D` is diagonal in the vectorized basis with ones at the positions of
    /// the `|s><s|`, so the numerator is a sum of diagonal projector entries.
    pub fn schur_eigenvalue(&self, k: usize) -> Result<f64> {
        let p = self
            .projectors
            .get(k)
            .ok_or(Error::IndexOutOfRange { index: k, limit: self.projectors.len() })?;
        let d = self.dim();
        let diag = p.matrix.diagonal();
        let num: f64 = (0..d).map(|s| diag[s * d + s]).sum();
        Ok(num / p.matrix.trace())
    }

    fn check_operator(&self, x: &CMatrix) -> Result<()> {
        let d = self.dim();
        if x.nrows() != d || x.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: x.nrows() });
        }
        Ok(())
    }

    /// `sum_k w_k Pi_k(X)` for arbitrary weights.
    pub fn apply_weighted(&self, x: &CMatrix, weights: &[f64]) -> Result<CMatrix> {
        self.check_operator(x)?;
        let d = self.dim();
        let (re, im) = vectorize(x);
        let mut out_re = vec![0.0; d * d];
        let mut out_im = vec![0.0; d * d];
        for (p, &w) in self.projectors.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            p.matrix.accumulate(w, &re, &mut out_re);
            p.matrix.accumulate(w, &im, &mut out_im);
        }
        Ok(unvectorize(d, &out_re, &out_im))
    }

    /// `M(X)` or `M^{-1}(X)`.
    pub fn apply(&self, x: &CMatrix, direction: Direction) -> Result<CMatrix> {
        let weights: Vec<f64> = match direction {
            Direction::Forward => self.eigenvalues.clone(),
            Direction::Inverse => self.eigenvalues.iter().map(|s| 1.0 / s).collect(),
        };
        self.apply_weighted(x, &weights)
    }

    /// `Pi_k(X)`.
    pub fn project(&self, k: usize, x: &CMatrix) -> Result<CMatrix> {
        if k >= self.projectors.len() {
            return Err(Error::IndexOutOfRange { index: k, limit: self.projectors.len() });
        }
        let mut weights = vec![0.0; self.projectors.len()];
        weights[k] = 1.0;
        self.apply_weighted(x, &weights)
    }

    /// The snapshot `M^{-1}(phi(U)^dagger |s><s| phi(U))`.
    pub fn snapshot_operator(&self, u: &UnitaryMatrix, s: &ModeOccupation) -> Result<CMatrix> {
        let phi = lift_to_sector(u, &self.basis)?;
        self.snapshot_from_lift(&phi, self.basis.locate(s)?)
    }

    /// Same as [`snapshot_operator`](Self::snapshot_operator) for an already
    /// lifted unitary and an outcome given by basis index.
    pub fn snapshot_from_lift(&self, phi: &SectorUnitary, outcome: usize) -> Result<CMatrix> {
        let d = self.dim();
        if phi.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: phi.dim() });
        }
        if outcome >= d {
            return Err(Error::IndexOutOfRange { index: outcome, limit: d });
        }
        // phi^dagger |s> is the conjugated row s of phi
        let v = phi.matrix().row(outcome).adjoint();
        let rank_one = &v * v.adjoint();
        self.apply(&rank_one, Direction::Inverse)
    }
}
