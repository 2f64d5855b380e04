//! Classical shadows of photonic Fock states.
//!
//! The crate simulates the randomized-measurement protocol for bosonic
//! states evolving through passive linear optics and read out with
//! (pseudo-)photon-number-resolving detectors, and turns the recorded data
//! into estimates of physical properties.
//!
//! * [`fock`]: sector bases, permanents, Haar sampling, exact evolution.
//! * [`channel`]: irreducible projectors of the Haar twirl, the measurement
//!   channel and its inverse, sparse symmetric storage and the on-disk cache.
//! * [`detector`]: ideal and pseudo-PNR data collection with debiasing.
//! * [`shadow`]: shadow records, estimators, median-of-means, sample-size
//!   planning, and state reconstruction.
//! * [`observables`]: correlators, Lie-algebraic invariants and binned
//!   distributions, from exact states or from shadows.
//! * [`pipeline`]: seeded end-to-end runs used by the `fshadow` binary.
//!
//! The guide under `book/` walks through the concepts; its code listings are
//! compiled as doc-tests of this crate.

pub mod channel;
pub mod detector;
mod error;
pub mod fock;
pub mod linalg;
pub mod observables;
pub mod pipeline;
pub mod seed;
pub mod shadow;

pub use error::{CacheError, Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fock.md")]
    mod fock {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/detectors.md")]
    mod detectors {}
    #[doc = include_str!("../../../book/src/shadows.md")]
    mod shadows {}
    #[doc = include_str!("../../../book/src/observables.md")]
    mod observables {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
