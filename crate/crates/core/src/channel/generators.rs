//! The `gl(m)` generators `E_ij = a_i^dagger a_j` restricted to a sector.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{ModeOccupation, SectorBasis};
use crate::linalg::CMatrix;

/// `E_ij` on one sector. Every column holds at most one nonzero entry, since
/// `E_ij` maps a Fock state to a multiple of a single Fock state.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub i: usize,
    pub j: usize,
    dim: usize,
    /// `columns[t] = Some((s, v))` means `E_ij |t> = v |s>`.
    columns: Vec<Option<(usize, f64)>>,
}

impl Generator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Image of basis vector `t`.
    pub fn apply_basis(&self, t: usize) -> Option<(usize, f64)> {
        self.columns[t]
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.columns.iter().enumerate().filter_map(|(t, e)| e.map(|(s, v)| (s, t, v)))
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (s, t, v) in self.entries() {
            m[(s, t)] = Complex64::new(v, 0.0);
        }
        m
    }
}

/// `E_ij` in the basis `basis` (modes indexed from zero).
///
/// `<s|E_ij|t> = sqrt(t_j (t_i + 1))` when `s = t - e_j + e_i`, and `E_ii` is
/// diagonal with entries `t_i`.
pub fn generator_in_sector(i: usize, j: usize, basis: &SectorBasis) -> Result<Generator> {
    let m = basis.modes();
    for idx in [i, j] {
        if idx >= m {
            return Err(Error::IndexOutOfRange { index: idx, limit: m });
        }
    }
    let columns = basis.iter().map(|t| hop(i, j, t).map(|(s, v)| (basis.index_of(&s).unwrap(), v))).collect();
    Ok(Generator { i, j, dim: basis.dim(), columns })
}

fn hop(i: usize, j: usize, t: &ModeOccupation) -> Option<(ModeOccupation, f64)> {
    let occ = t.as_slice();
    if i == j {
        return (occ[i] > 0).then(|| (t.clone(), occ[i] as f64));
    }
    if occ[j] == 0 {
        return None;
    }
    let mut s = occ.to_vec();
    s[j] -= 1;
    s[i] += 1;
    let v = ((occ[j] as f64) * (occ[i] as f64 + 1.0)).sqrt();
    Some((ModeOccupation::new(s).expect("nonempty"), v))
}

/// All `m^2` generators of one sector, indexed `[i * m + j]`.
#[derive(Clone, Debug)]
pub struct GeneratorTable {
    modes: usize,
    generators: Vec<Generator>,
}

impl GeneratorTable {
    pub fn new(basis: &SectorBasis) -> Self {
        let m = basis.modes();
        let generators = (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| generator_in_sector(i, j, basis).expect("indices in range"))
            .collect();
        Self { modes: m, generators }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn get(&self, i: usize, j: usize) -> &Generator {
        &self.generators[i * self.modes + j]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Generator> {
        self.generators.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn single_mode_number() {
        let b = SectorBasis::new(1, 4).unwrap();
        let e = generator_in_sector(0, 0, &b).unwrap();
        assert_eq!(e.apply_basis(0), Some((0, 4.0)));
    }

    #[test]
    fn single_photon_hop() {
        let b = SectorBasis::new(2, 1).unwrap();
        let e = generator_in_sector(0, 1, &b).unwrap();
        // |1,0> is index 0, |0,1> index 1; E_12 |0,1> = |1,0>
        let dense = e.to_dense();
        assert_eq!(dense[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(e.entries().count(), 1);
    }

    #[test]
    fn number_operators_sum_to_photon_count() {
        for (m, n) in [(2, 3), (3, 2), (4, 3)] {
            let b = SectorBasis::new(m, n).unwrap();
            let table = GeneratorTable::new(&b);
            let total = (0..m).map(|i| table.get(i, i).to_dense()).fold(
                CMatrix::zeros(b.dim(), b.dim()),
                |acc, x| acc + x,
            );
            let expect = CMatrix::identity(b.dim(), b.dim()).scale(n as f64);
            assert!(max_abs(&(total - expect)) < 1e-14);
        }
    }

    #[test]
    fn adjoint_pairs() {
        let b = SectorBasis::new(3, 2).unwrap();
        let table = GeneratorTable::new(&b);
        for i in 0..3 {
            for j in 0..3 {
                let lhs = table.get(i, j).to_dense().adjoint();
                assert!(max_abs(&(lhs - table.get(j, i).to_dense())) < 1e-15);
            }
        }
    }

    #[test]
    fn commutation_relations() {
        // [E_ij, E_kl] = delta_jk E_il - delta_il E_kj
        let b = SectorBasis::new(3, 2).unwrap();
        let t = GeneratorTable::new(&b);
        let d = b.dim();
        for (i, j, k, l) in [(0, 1, 1, 2), (0, 1, 1, 0), (2, 0, 0, 2), (0, 1, 2, 0)] {
            let (a, bb) = (t.get(i, j).to_dense(), t.get(k, l).to_dense());
            let comm = &a * &bb - &bb * &a;
            let mut expect = CMatrix::zeros(d, d);
            if j == k {
                expect += t.get(i, l).to_dense();
            }
            if i == l {
                expect -= t.get(k, j).to_dense();
            }
            assert!(max_abs(&(comm - expect)) < 1e-13);
        }
    }

    #[test]
    fn index_out_of_range() {
        let b = SectorBasis::new(2, 1).unwrap();
        assert!(matches!(generator_in_sector(2, 0, &b), Err(Error::IndexOutOfRange { .. })));
    }
}
