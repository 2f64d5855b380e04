//! Fixed-photon-number sectors of the Fock space.
//!
//! The `n`-photon sector over `m` modes is spanned by occupation tuples
//! `(s_1, ..., s_m)` with `s_1 + ... + s_m = n`. Its dimension is
//! `binomial(n + m - 1, n)`. Basis vectors are always listed in
//! lexicographically descending order, so `(n, 0, ..., 0)` comes first and
//! `(0, ..., 0, n)` last.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Photons per mode.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeOccupation(Vec<u32>);

impl ModeOccupation {
    pub fn new(occupations: Vec<u32>) -> Result<Self> {
        if occupations.is_empty() {
            return Err(Error::InvalidInput("occupation needs at least one mode".into()));
        }
        Ok(Self(occupations))
    }

    /// `n` photons in mode `mode` of `m`.
    pub fn single_mode(m: usize, mode: usize, n: u32) -> Result<Self> {
        if mode >= m {
            return Err(Error::IndexOutOfRange { index: mode, limit: m });
        }
        let mut occ = vec![0; m];
        occ[mode] = n;
        Self::new(occ)
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn photons(&self) -> usize {
        self.0.iter().map(|&s| s as usize).sum()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    /// `prod_i s_i!`, as a float.
    pub fn factorial_product(&self) -> f64 {
        self.0.iter().map(|&s| factorial(s as usize)).product()
    }
}

impl fmt::Debug for ModeOccupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "⟩")
    }
}

impl fmt::Display for ModeOccupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl std::str::FromStr for ModeOccupation {
    type Err = Error;

    /// Parses `"1,1,1,0"` (dashes are accepted as separators too).
    fn from_str(s: &str) -> Result<Self> {
        let occ = s
            .split([',', '-'])
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidInput(format!("bad occupation {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(occ)
    }
}

impl AsRef<[u32]> for ModeOccupation {
    fn as_ref(&self) -> &[u32] {
        &self.0
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Exact binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i + 1) as u128,
            None => return u128::MAX,
        };
    }
    acc
}

/// `binomial(n + m - 1, n)`.
pub fn sector_dimension(m: usize, n: usize) -> u128 {
    if m == 0 {
        return 0;
    }
    binomial((n + m - 1) as u64, n as u64)
}

/// Caps on how large a sector or superoperator may get before we refuse.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DimensionGuard {
    /// Largest admissible `binomial(n + m - 1, n)`.
    pub max_sector_dim: u128,
    /// Largest admissible number of superoperator entries `d^4`.
    pub max_superop_entries: u128,
}

impl Default for DimensionGuard {
    fn default() -> Self {
        Self { max_sector_dim: 10_000, max_superop_entries: 100_000_000 }
    }
}

impl DimensionGuard {
    pub const UNLIMITED: Self =
        Self { max_sector_dim: u128::MAX, max_superop_entries: u128::MAX };

    pub fn check_sector(&self, m: usize, n: usize) -> Result<usize> {
        let d = sector_dimension(m, n);
        if d > self.max_sector_dim {
            return Err(Error::DimensionGuard {
                modes: m,
                photons: n,
                what: "sector dimension",
                size: d,
                cap: self.max_sector_dim,
            });
        }
        Ok(d as usize)
    }

    pub fn check_superoperator(&self, m: usize, n: usize) -> Result<usize> {
        let d = self.check_sector(m, n)?;
        let entries = (d as u128).saturating_pow(4);
        if entries > self.max_superop_entries {
            return Err(Error::DimensionGuard {
                modes: m,
                photons: n,
                what: "superoperator entries d^4",
                size: entries,
                cap: self.max_superop_entries,
            });
        }
        Ok(d)
    }
}

/// Ordered basis of the `n`-photon sector over `m` modes.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    modes: usize,
    photons: usize,
    states: Vec<ModeOccupation>,
    index: HashMap<ModeOccupation, usize>,
}

impl PartialEq for SectorBasis {
    fn eq(&self, other: &Self) -> bool {
        self.modes == other.modes && self.photons == other.photons
    }
}

impl Eq for SectorBasis {}

impl SectorBasis {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        Self::with_guard(m, n, &DimensionGuard::default())
    }

    pub fn with_guard(m: usize, n: usize, guard: &DimensionGuard) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("mode count must be at least 1".into()));
        }
        let d = guard.check_sector(m, n)?;
        let mut states = Vec::with_capacity(d);
        let mut current = vec![0u32; m];
        fill_descending(&mut current, 0, n as u32, &mut states);
        debug_assert_eq!(states.len(), d);
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Self { modes: m, photons: n, states, index })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[ModeOccupation] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &ModeOccupation {
        &self.states[i]
    }

    pub fn index_of(&self, s: &ModeOccupation) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Like [`index_of`](Self::index_of) but explains why a lookup failed.
    pub fn locate(&self, s: &ModeOccupation) -> Result<usize> {
        if s.modes() != self.modes {
            return Err(Error::ModeMismatch { expected: self.modes, found: s.modes() });
        }
        if s.photons() != self.photons {
            return Err(Error::PhotonMismatch { expected: self.photons, found: s.photons() });
        }
        Ok(self.index[s])
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ModeOccupation> {
        self.states.iter()
    }
}

fn fill_descending(cur: &mut [u32], pos: usize, left: u32, out: &mut Vec<ModeOccupation>) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(ModeOccupation(cur.to_vec()));
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k;
        fill_descending(cur, pos + 1, left - k, out);
    }
    cur[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn occ(v: &[u32]) -> ModeOccupation {
        ModeOccupation::new(v.to_vec()).unwrap()
    }

    #[test]
    fn two_modes_one_photon() {
        let b = SectorBasis::new(2, 1).unwrap();
        assert_eq!(b.states(), &[occ(&[1, 0]), occ(&[0, 1])]);
    }

    #[test]
    fn four_modes_three_photons() {
        let b = SectorBasis::new(4, 3).unwrap();
        assert_eq!(b.dim(), 20);
        assert_eq!(b.state(0), &occ(&[3, 0, 0, 0]));
        assert_eq!(b.state(19), &occ(&[0, 0, 0, 3]));
    }

    #[test]
    fn single_mode() {
        let b = SectorBasis::new(1, 5).unwrap();
        assert_eq!(b.states(), &[occ(&[5])]);
    }

    #[test]
    fn vacuum_sector() {
        let b = SectorBasis::new(3, 0).unwrap();
        assert_eq!(b.states(), &[occ(&[0, 0, 0])]);
    }

    #[test]
    fn dimension_formula_grid() {
        for m in 1..=6 {
            for n in 0..=4 {
                let b = SectorBasis::new(m, n).unwrap();
                assert_eq!(b.dim() as u128, binomial((n + m - 1) as u64, n as u64));
                for (i, s) in b.iter().enumerate() {
                    assert_eq!(s.photons(), n);
                    assert_eq!(b.index_of(s), Some(i));
                }
                for w in b.states().windows(2) {
                    assert!(w[0] > w[1], "order must be strictly descending");
                }
            }
        }
    }

    #[test]
    fn guard_refuses_large_sector() {
        let guard = DimensionGuard { max_sector_dim: 10, ..Default::default() };
        let err = SectorBasis::with_guard(4, 3, &guard).unwrap_err();
        assert!(matches!(err, Error::DimensionGuard { size: 20, .. }));
    }

    #[test]
    fn superoperator_guard() {
        let guard = DimensionGuard::default();
        assert!(guard.check_superoperator(4, 3).is_ok());
        assert!(guard.check_superoperator(8, 6).is_err());
    }

    #[test]
    fn locate_reports_mismatch() {
        let b = SectorBasis::new(3, 2).unwrap();
        assert!(matches!(
            b.locate(&occ(&[1, 1, 1])),
            Err(Error::PhotonMismatch { expected: 2, found: 3 })
        ));
        assert!(matches!(b.locate(&occ(&[1, 1])), Err(Error::ModeMismatch { .. })));
    }

    #[test]
    fn parse_occupation() {
        let s: ModeOccupation = "1,1,1,0".parse().unwrap();
        assert_eq!(s.as_slice(), &[1, 1, 1, 0]);
        let t: ModeOccupation = "2-0-1".parse().unwrap();
        assert_eq!(t.photons(), 3);
        assert!("1,x".parse::<ModeOccupation>().is_err());
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(60, 30), 118264581564861424);
    }
}
