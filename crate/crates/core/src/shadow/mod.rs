//! Classical shadows: collection, estimation, planning and reconstruction.
//!
//! A shadow is stored as `(U, outcomes)` records rather than as snapshot
//! matrices. Every shot of a record shares the same unitary, and records are
//! the independent units fed to median-of-means.

mod estimate;
mod io;

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

pub use estimate::{
    estimate_observable, median_of_means, observable_degree, plan_shadow_size, reconstruct_sector_state,
    shadow_norm_bound, ComplexEstimate, Estimate, EstimationPlan, ObservableSpec, PreparedShadow, DEGREE_TOLERANCE,
    MEDIAN_OF_MEANS_CONSTANT,
};
pub use io::{read_shadow, write_shadow, SHADOW_FORMAT};

use crate::detector::{pseudo_pnr_from, resample_with, sample_from, DetectorConfig, OutcomeHistogram};
use crate::error::{Error, Result};
use crate::fock::{output_distribution, sample_haar_unitary, BlockDiagonalState, ModeOccupation, SectorBasis, UnitaryMatrix};
use crate::seed::{derive_seed, stream_rng};

/// The unitary of a record, either stored or regenerated from its seed.
#[derive(Clone, Debug, PartialEq)]
pub enum UnitarySource {
    Seed(u64),
    Matrix(UnitaryMatrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowRecord {
    pub unitary: UnitarySource,
    pub n: usize,
    pub outcomes: Vec<(ModeOccupation, u64)>,
}

impl ShadowRecord {
    pub fn new(unitary: UnitarySource, n: usize, outcomes: Vec<(ModeOccupation, u64)>) -> Result<Self> {
        for (s, mult) in &outcomes {
            if *mult == 0 {
                return Err(Error::InvalidInput(format!("outcome {s} has multiplicity 0")));
            }
            if s.photons() != n {
                return Err(Error::PhotonMismatch { expected: n, found: s.photons() });
            }
        }
        Ok(Self { unitary, n, outcomes })
    }

    pub fn from_histogram(unitary: UnitarySource, n: usize, hist: &OutcomeHistogram) -> Result<Self> {
        // highest occupation first, matching the basis order
        let outcomes = hist.counts.iter().rev().map(|(s, &c)| (s.clone(), c)).collect();
        Self::new(unitary, n, outcomes)
    }

    pub fn unitary(&self, m: usize) -> Result<UnitaryMatrix> {
        match &self.unitary {
            UnitarySource::Seed(seed) => Ok(sample_haar_unitary(m, *seed)),
            UnitarySource::Matrix(u) if u.modes() == m => Ok(u.clone()),
            UnitarySource::Matrix(u) => Err(Error::ModeMismatch { expected: m, found: u.modes() }),
        }
    }

    pub fn shots(&self) -> u64 {
        self.outcomes.iter().map(|(_, c)| c).sum()
    }
}

/// Where a shadow came from.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalShadow {
    pub m: usize,
    pub n: usize,
    pub records: Vec<ShadowRecord>,
    pub provenance: Provenance,
}

impl ClassicalShadow {
    pub fn new(m: usize, n: usize, records: Vec<ShadowRecord>, provenance: Provenance) -> Result<Self> {
        for r in &records {
            if r.n != n {
                return Err(Error::PhotonMismatch { expected: n, found: r.n });
            }
            for (s, _) in &r.outcomes {
                if s.modes() != m {
                    return Err(Error::ModeMismatch { expected: m, found: s.modes() });
                }
            }
            if let UnitarySource::Matrix(u) = &r.unitary {
                if u.modes() != m {
                    return Err(Error::ModeMismatch { expected: m, found: u.modes() });
                }
            }
        }
        Ok(Self { m, n, records, provenance })
    }

    /// Builds a shadow from externally measured `(U, histogram)` pairs.
    pub fn from_histograms(
        m: usize,
        n: usize,
        data: impl IntoIterator<Item = (UnitaryMatrix, OutcomeHistogram)>,
    ) -> Result<Self> {
        let records = data
            .into_iter()
            .map(|(u, h)| ShadowRecord::from_histogram(UnitarySource::Matrix(u), n, &h))
            .collect::<Result<_>>()?;
        Self::new(m, n, records, Provenance { source: Some("external".into()), root_seed: None })
    }

    pub fn total_shots(&self) -> u64 {
        self.records.iter().map(ShadowRecord::shots).sum()
    }

    pub fn empty_records(&self) -> usize {
        self.records.iter().filter(|r| r.outcomes.is_empty()).count()
    }
}

/// How pseudo-PNR bias is removed inside each record.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mitigation {
    /// Keep resolved events as they are.
    None,
    /// Redraw as many outcomes as were kept, with weights `1 / factor(s)`.
    #[default]
    Resample,
    /// Accept each kept event with probability `min_factor / factor(s)`.
    /// Accepted outcomes follow the ideal distribution exactly.
    Reject,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Detection {
    Ideal,
    PseudoPnr { config: DetectorConfig, mitigation: Mitigation },
}

/// Produces the outcomes of one record.
pub trait ShotSource {
    fn modes(&self) -> usize;
    fn photons(&self) -> usize;
    fn describe(&self) -> String;
    fn sample(&self, u: &UnitaryMatrix, shots: u64, rng: &mut ChaCha20Rng) -> Result<OutcomeHistogram>;
}

/// Simulated measurements of a known state.
#[derive(Clone, Debug)]
pub struct StateSampler {
    state: BlockDiagonalState,
    basis: Arc<SectorBasis>,
    detection: Detection,
    min_factor: f64,
}

impl StateSampler {
    pub fn new(state: BlockDiagonalState, n: usize, detection: Detection) -> Result<Self> {
        let basis = state.block(n)?.basis().clone();
        let mut min_factor = 1.0;
        if let Detection::PseudoPnr { config, mitigation } = &detection {
            if config.modes() != state.modes() {
                return Err(Error::ModeMismatch { expected: state.modes(), found: config.modes() });
            }
            for s in basis.iter() {
                let f = config.outcome_factor(s)?;
                if f <= 0.0 && *mitigation != Mitigation::None {
                    return Err(Error::ZeroResolutionFactor(s.as_slice().to_vec()));
                }
                min_factor = f64::min(min_factor, f);
            }
        }
        Ok(Self { state, basis, detection, min_factor })
    }

    pub fn ideal(state: BlockDiagonalState, n: usize) -> Result<Self> {
        Self::new(state, n, Detection::Ideal)
    }

    pub fn state(&self) -> &BlockDiagonalState {
        &self.state
    }

    pub fn detection(&self) -> &Detection {
        &self.detection
    }
}

impl ShotSource for StateSampler {
    fn modes(&self) -> usize {
        self.state.modes()
    }

    fn photons(&self) -> usize {
        self.basis.photons()
    }

    fn describe(&self) -> String {
        match &self.detection {
            Detection::Ideal => "simulated/pnr".into(),
            Detection::PseudoPnr { config, mitigation } => {
                format!("simulated/pseudo-pnr/p={}/{:?}", config.p, mitigation).to_lowercase()
            }
        }
    }

    fn sample(&self, u: &UnitaryMatrix, shots: u64, rng: &mut ChaCha20Rng) -> Result<OutcomeHistogram> {
        let probs = output_distribution(u, &self.state, self.basis.photons())?;
        match &self.detection {
            Detection::Ideal => Ok(sample_from(&self.basis, &probs, shots, rng)),
            Detection::PseudoPnr { config, mitigation } => {
                let raw = pseudo_pnr_from(&self.basis, &probs, shots, config, rng);
                match mitigation {
                    Mitigation::None => Ok(raw),
                    Mitigation::Resample => {
                        let draws = resample_with(&raw, config, raw.kept() as usize, rng)?;
                        let mut out = OutcomeHistogram::default();
                        for s in draws {
                            out.record(s);
                        }
                        out.total = raw.total;
                        out.discarded = raw.discarded;
                        Ok(out)
                    }
                    Mitigation::Reject => {
                        let mut out = OutcomeHistogram { total: raw.total, discarded: raw.discarded, ..Default::default() };
                        for (s, &c) in &raw.counts {
                            let accept = self.min_factor / config.outcome_factor(s)?;
                            for _ in 0..c {
                                if rng.random::<f64>() < accept {
                                    *out.counts.entry(s.clone()).or_insert(0) += 1;
                                } else {
                                    out.discarded += 1;
                                }
                            }
                        }
                        Ok(out)
                    }
                }
            }
        }
    }
}

/// Draws `num_unitaries` Haar unitaries and `shots_per_unitary` shots for each.
///
/// Record `i` uses the unitary seed `derive_seed(seed, "haar", i)` and the
/// shot stream `("shots", i)`, so any record can be regenerated on its own.
pub fn collect_shadow(
    source: &dyn ShotSource,
    num_unitaries: usize,
    shots_per_unitary: u64,
    seed: u64,
) -> Result<ClassicalShadow> {
    if num_unitaries == 0 {
        return Err(Error::InvalidInput("num_unitaries must be at least 1".into()));
    }
    let m = source.modes();
    let n = source.photons();
    let mut records = Vec::with_capacity(num_unitaries);
    for i in 0..num_unitaries as u64 {
        let useed = derive_seed(seed, "haar", i);
        let u = sample_haar_unitary(m, useed);
        let mut rng = stream_rng(seed, "shots", i);
        let hist = source.sample(&u, shots_per_unitary, &mut rng)?;
        records.push(ShadowRecord::from_histogram(UnitarySource::Seed(useed), n, &hist)?);
    }
    ClassicalShadow::new(m, n, records, Provenance { source: Some(source.describe()), root_seed: Some(seed) })
}
