//! Photon-number block-diagonal states.
//!
//! Photon-number-resolving measurement cannot see coherences between sectors
//! of different total photon number, so states are stored as one block per
//! sector. A block is either a pure amplitude vector (the cheap path for
//! Fock inputs evolved through an interferometer) or a dense density matrix.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use super::basis::{ModeOccupation, SectorBasis};
use super::unitary::{lift_to_sector, UnitaryMatrix};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, hermitian_eigenvalues, trace, CMatrix, CVector};

const HERMITIAN_TOL: f64 = 1e-10;
const PSD_FLOOR: f64 = -1e-8;
const TRACE_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub enum BlockRepr {
    /// Unnormalized amplitudes; the block is `|psi><psi|`.
    Pure(CVector),
    Mixed(CMatrix),
}

#[derive(Clone, Debug)]
pub struct SectorBlock {
    basis: Arc<SectorBasis>,
    repr: BlockRepr,
}

impl SectorBlock {
    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn repr(&self) -> &BlockRepr {
        &self.repr
    }

    pub fn weight(&self) -> f64 {
        match &self.repr {
            BlockRepr::Pure(psi) => psi.norm_squared(),
            BlockRepr::Mixed(rho) => trace(rho).re,
        }
    }

    pub fn density_matrix(&self) -> CMatrix {
        match &self.repr {
            BlockRepr::Pure(psi) => psi * psi.adjoint(),
            BlockRepr::Mixed(rho) => rho.clone(),
        }
    }

    /// Diagonal of the block in the Fock basis.
    pub fn populations(&self) -> Vec<f64> {
        match &self.repr {
            BlockRepr::Pure(psi) => psi.iter().map(|a| a.norm_sqr()).collect(),
            BlockRepr::Mixed(rho) => rho.diagonal().iter().map(|z| z.re).collect(),
        }
    }

    /// `tr(O rho_block)`.
    pub fn expectation(&self, op: &CMatrix) -> Complex64 {
        match &self.repr {
            BlockRepr::Pure(psi) => (psi.adjoint() * op * psi)[(0, 0)],
            BlockRepr::Mixed(rho) => crate::linalg::trace_product(op, rho),
        }
    }
}

/// A state with no coherence between photon-number sectors.
#[derive(Clone, Debug)]
pub struct BlockDiagonalState {
    modes: usize,
    blocks: BTreeMap<usize, SectorBlock>,
}

impl BlockDiagonalState {
    /// The Fock basis state `|occupation>`.
    pub fn basis_state(occupation: &ModeOccupation) -> Result<Self> {
        let m = occupation.modes();
        let n = occupation.photons();
        let basis = Arc::new(SectorBasis::new(m, n)?);
        let mut psi = CVector::zeros(basis.dim());
        psi[basis.locate(occupation)?] = Complex64::new(1.0, 0.0);
        Self::pure(basis, psi)
    }

    /// A normalized pure state inside one sector.
    pub fn pure(basis: Arc<SectorBasis>, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: amplitudes.len() });
        }
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidInput(format!("pure state has norm^2 {norm}")));
        }
        let modes = basis.modes();
        let n = basis.photons();
        let mut blocks = BTreeMap::new();
        blocks.insert(n, SectorBlock { basis, repr: BlockRepr::Pure(amplitudes) });
        Ok(Self { modes, blocks })
    }

    /// Assembles a state from dense density-matrix blocks, checking that each
    /// is Hermitian and positive semidefinite and that traces add up to one.
    pub fn from_blocks(
        modes: usize,
        blocks: impl IntoIterator<Item = (Arc<SectorBasis>, CMatrix)>,
    ) -> Result<Self> {
        let mut out = BTreeMap::new();
        let mut total = 0.0;
        for (basis, rho) in blocks {
            if basis.modes() != modes {
                return Err(Error::ModeMismatch { expected: modes, found: basis.modes() });
            }
            if rho.nrows() != basis.dim() || rho.ncols() != basis.dim() {
                return Err(Error::DimensionMismatch { expected: basis.dim(), found: rho.nrows() });
            }
            let defect = hermitian_defect(&rho);
            if defect > HERMITIAN_TOL {
                return Err(Error::InvalidInput(format!("block is not Hermitian ({defect:e})")));
            }
            if let Some(&low) = hermitian_eigenvalues(&rho).last() {
                if low < PSD_FLOOR {
                    return Err(Error::InvalidInput(format!(
                        "block has negative eigenvalue {low:e}"
                    )));
                }
            }
            total += trace(&rho).re;
            out.insert(basis.photons(), SectorBlock { basis, repr: BlockRepr::Mixed(rho) });
        }
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidInput(format!("total trace is {total}")));
        }
        Ok(Self { modes, blocks: out })
    }

    /// `I / d` on a single sector.
    pub fn maximally_mixed(basis: Arc<SectorBasis>) -> Result<Self> {
        let d = basis.dim();
        let rho = CMatrix::identity(d, d).scale(1.0 / d as f64);
        Self::from_blocks(basis.modes(), [(basis, rho)])
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn block(&self, n: usize) -> Result<&SectorBlock> {
        self.blocks.get(&n).ok_or(Error::MissingBlock(n))
    }

    pub fn blocks(&self) -> impl Iterator<Item = (usize, &SectorBlock)> {
        self.blocks.iter().map(|(&n, b)| (n, b))
    }

    pub fn photon_numbers(&self) -> Vec<usize> {
        self.blocks.keys().copied().collect()
    }

    pub fn total_trace(&self) -> f64 {
        self.blocks.values().map(SectorBlock::weight).sum()
    }

    pub fn purity(&self) -> f64 {
        self.blocks
            .values()
            .map(|b| match &b.repr {
                BlockRepr::Pure(psi) => psi.norm_squared().powi(2),
                BlockRepr::Mixed(rho) => crate::linalg::trace_product(rho, rho).re,
            })
            .sum()
    }

    /// `phi(U) rho phi(U)^dagger`, block by block.
    pub fn evolve(&self, u: &UnitaryMatrix) -> Result<Self> {
        if u.modes() != self.modes {
            return Err(Error::ModeMismatch { expected: self.modes, found: u.modes() });
        }
        let mut blocks = BTreeMap::new();
        for (&n, block) in &self.blocks {
            let phi = lift_to_sector(u, &block.basis)?;
            let repr = match &block.repr {
                BlockRepr::Pure(psi) => BlockRepr::Pure(phi.matrix() * psi),
                BlockRepr::Mixed(rho) => BlockRepr::Mixed(phi.conjugate(rho)),
            };
            blocks.insert(n, SectorBlock { basis: Arc::clone(&block.basis), repr });
        }
        Ok(Self { modes: self.modes, blocks })
    }
}

/// Outcome probabilities of measuring `phi(U) rho phi(U)^dagger` with ideal
/// photon-number-resolving detectors, restricted to the `n`-photon sector and
/// listed in basis order. Sums to the block weight.
pub fn output_distribution(
    u: &UnitaryMatrix,
    state: &BlockDiagonalState,
    n: usize,
) -> Result<Vec<f64>> {
    let block = state.block(n)?;
    if u.modes() != state.modes() {
        return Err(Error::ModeMismatch { expected: state.modes(), found: u.modes() });
    }
    let phi = lift_to_sector(u, &block.basis)?;
    let probs = match &block.repr {
        BlockRepr::Pure(psi) => (phi.matrix() * psi).iter().map(|a| a.norm_sqr()).collect(),
        BlockRepr::Mixed(rho) => {
            phi.conjugate(rho).diagonal().iter().map(|z| z.re.max(0.0)).collect()
        }
    };
    Ok(probs)
}
