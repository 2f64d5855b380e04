//! Photon counts per bin of modes, recovered from the characteristic
//! function `x(eta) = <exp(i sum_k eta_k N_k)>`.
//!
//! Bin totals lie in `0..=n` and sum to `n`, so the last bin is fixed by the
//! others and a `(n + 1)^(K - 1)` point inverse DFT with the last phase set
//! to zero recovers the distribution exactly.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ExpectationSource;
use crate::error::{Error, Result};
use crate::fock::ModeOccupation;
use crate::linalg::CMatrix;

/// Assignment of modes to `k` nonempty bins.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinPartition {
    pub k: usize,
    pub assignment: Vec<usize>,
}

impl BinPartition {
    pub fn new(k: usize, assignment: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("need at least one bin".into()));
        }
        let mut used = vec![false; k];
        for &b in &assignment {
            if b >= k {
                return Err(Error::IndexOutOfRange { index: b, limit: k });
            }
            used[b] = true;
        }
        if let Some(empty) = used.iter().position(|u| !u) {
            return Err(Error::InvalidInput(format!("bin {empty} has no modes")));
        }
        Ok(Self { k, assignment })
    }

    pub fn modes(&self) -> usize {
        self.assignment.len()
    }

    /// Modes of each bin.
    pub fn bins(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (mode, &b) in self.assignment.iter().enumerate() {
            out[b].push(mode);
        }
        out
    }

    pub fn bin_counts(&self, s: &ModeOccupation) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for (&b, &x) in self.assignment.iter().zip(s.as_slice()) {
            c[b] += x as usize;
        }
        c
    }

    fn check(&self, m: usize) -> Result<()> {
        if self.modes() != m {
            return Err(Error::ModeMismatch { expected: m, found: self.modes() });
        }
        Ok(())
    }
}

/// Every split of `m` modes into two nonempty bins, with mode 0 in bin 0.
pub fn all_bipartitions(m: usize) -> Vec<BinPartition> {
    if m < 2 {
        return Vec::new();
    }
    (1..1usize << (m - 1))
        .map(|mask| {
            let assignment = (0..m).map(|i| if i > 0 && mask >> (i - 1) & 1 == 1 { 1 } else { 0 }).collect();
            BinPartition { k: 2, assignment }
        })
        .collect()
}

fn phase_operator(source: &dyn ExpectationSource, partition: &BinPartition, eta: &[f64]) -> CMatrix {
    let basis = source.basis();
    let d = basis.dim();
    let mut op = CMatrix::zeros(d, d);
    for (i, s) in basis.iter().enumerate() {
        let theta: f64 = partition.bin_counts(s).iter().zip(eta).map(|(&c, &e)| c as f64 * e).sum();
        op[(i, i)] = Complex64::from_polar(1.0, theta);
    }
    op
}

/// `<exp(i sum_k eta_k N_k)>`.
pub fn characteristic_function(
    source: &dyn ExpectationSource,
    partition: &BinPartition,
    eta: &[f64],
) -> Result<Complex64> {
    partition.check(source.basis().modes())?;
    if eta.len() != partition.k {
        return Err(Error::DimensionMismatch { expected: partition.k, found: eta.len() });
    }
    source.expect(&phase_operator(source, partition, eta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedEntry {
    pub counts: Vec<usize>,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedDistribution {
    /// Modes in each bin, zero-based.
    pub bins: Vec<Vec<usize>>,
    pub n: usize,
    /// All count vectors summing to `n`, in lexicographic order.
    pub table: Vec<BinnedEntry>,
}

impl BinnedDistribution {
    pub fn probabilities(&self) -> Vec<f64> {
        self.table.iter().map(|e| e.probability).collect()
    }

    pub fn probability(&self, counts: &[usize]) -> f64 {
        self.table.iter().find(|e| e.counts == counts).map_or(0.0, |e| e.probability)
    }

    pub fn tvd(&self, other: &BinnedDistribution) -> Result<f64> {
        if self.bins != other.bins || self.n != other.n {
            return Err(Error::InvalidInput("binned distributions over different partitions".into()));
        }
        crate::detector::total_variation_distance(&self.probabilities(), &other.probabilities())
    }
}

/// Count vectors of length `k` with entries summing to `n`, lexicographic.
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            cur.push(n);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for x in 0..=n {
            cur.push(x);
            go(n - x, k - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Distribution of bin totals by inverse DFT of the characteristic function.
/// Negative values from estimation noise are clipped to zero and the table
/// renormalized.
pub fn binned_distribution(source: &dyn ExpectationSource, partition: &BinPartition) -> Result<BinnedDistribution> {
    partition.check(source.basis().modes())?;
    let n = source.basis().photons();
    let free = partition.k - 1;
    let side = n + 1;
    let points = side.pow(free as u32);
    let step = TAU / side as f64;

    // characteristic function on the grid, last phase fixed at zero
    let mut chi = Vec::with_capacity(points);
    let mut eta = vec![0.0; partition.k];
    for idx in 0..points {
        let mut r = idx;
        for e in eta.iter_mut().take(free) {
            *e = (r % side) as f64 * step;
            r /= side;
        }
        chi.push(characteristic_function(source, partition, &eta)?);
    }

    let mut table: Vec<BinnedEntry> = compositions(n, partition.k)
        .into_iter()
        .map(|counts| {
            let mut acc = Complex64::ZERO;
            for (idx, x) in chi.iter().enumerate() {
                let mut r = idx;
                let mut theta = 0.0;
                for &c in counts.iter().take(free) {
                    theta -= (r % side) as f64 * step * c as f64;
                    r /= side;
                }
                acc += x * Complex64::from_polar(1.0, theta);
            }
            BinnedEntry { counts, probability: (acc.re / points as f64).max(0.0) }
        })
        .collect();
    let total: f64 = table.iter().map(|e| e.probability).sum();
    if total > 0.0 {
        for e in &mut table {
            e.probability /= total;
        }
    }
    Ok(BinnedDistribution { bins: partition.bins(), n, table })
}
