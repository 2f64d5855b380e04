//! Fock-sector combinatorics, permanents, and linear-optical evolution.

mod basis;
mod permanent;
mod state;
mod unitary;

pub use basis::{binomial, sector_dimension, DimensionGuard, ModeOccupation, SectorBasis};
pub(crate) use basis::factorial;
pub use permanent::permanent;
pub use state::{output_distribution, BlockDiagonalState, BlockRepr, SectorBlock};
pub use unitary::{
    lift_to_sector, sample_haar_unitary, transition_amplitude, SectorUnitary, UnitaryMatrix,
};
