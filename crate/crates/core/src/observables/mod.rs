//! The three experiment workloads: mode correlators, Lie-algebraic
//! invariants and binned photon-count distributions.
//!
//! Every quantity is computed against an [`ExpectationSource`], either the
//! exact sector density matrix or a classical shadow.

mod binned;
mod export;

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use binned::{all_bipartitions, binned_distribution, characteristic_function, BinPartition, BinnedDistribution};
pub use export::{correlators_csv, CorrelatorRow};

use crate::channel::{generator_in_sector, MeasurementChannel};
use crate::error::{Error, Result};
use crate::fock::{BlockDiagonalState, SectorBasis};
use crate::linalg::{hermitian_eigenvalues, hermitian_part, trace_product, CMatrix};
use crate::shadow::{EstimationPlan, ObservableSpec, PreparedShadow};

/// Something that returns expectation values of sector operators.
pub trait ExpectationSource {
    fn basis(&self) -> &Arc<SectorBasis>;

    /// `tr(X rho)` for any operator `X`.
    fn expect(&self, x: &CMatrix) -> Result<Complex64>;

    /// `tr(A rho) tr(B rho)`.
    fn product(&self, a: &CMatrix, b: &CMatrix) -> Result<Complex64> {
        Ok(self.expect(a)? * self.expect(b)?)
    }
}

/// The true state restricted to one sector.
#[derive(Clone, Debug)]
pub struct ExactSource {
    basis: Arc<SectorBasis>,
    rho: CMatrix,
}

impl ExactSource {
    /// Normalized `n`-photon block of `state`.
    pub fn new(state: &BlockDiagonalState, n: usize) -> Result<Self> {
        let block = state.block(n)?;
        let w = block.weight();
        if w <= 0.0 {
            return Err(Error::InvalidInput(format!("state has no weight in the {n}-photon sector")));
        }
        Ok(Self { basis: block.basis().clone(), rho: block.density_matrix().unscale(w) })
    }

    pub fn from_density(basis: Arc<SectorBasis>, rho: CMatrix) -> Result<Self> {
        if rho.nrows() != basis.dim() || rho.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: rho.nrows() });
        }
        Ok(Self { basis, rho })
    }

    pub fn density(&self) -> &CMatrix {
        &self.rho
    }
}

impl ExpectationSource for ExactSource {
    fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    fn expect(&self, x: &CMatrix) -> Result<Complex64> {
        if x.nrows() != self.rho.nrows() {
            return Err(Error::DimensionMismatch { expected: self.rho.nrows(), found: x.nrows() });
        }
        Ok(trace_product(x, &self.rho))
    }
}

/// Median-of-means estimates from a shadow.
///
/// With `split_half` set, products of two expectations use disjoint halves
/// of the records for the two factors, which removes the plug-in bias.
#[derive(Clone, Debug)]
pub struct ShadowSource<'a> {
    channel: &'a MeasurementChannel,
    full: PreparedShadow,
    plan: EstimationPlan,
    halves: Option<(PreparedShadow, EstimationPlan, PreparedShadow, EstimationPlan)>,
}

impl<'a> ShadowSource<'a> {
    /// Uses `groups` means over all records.
    pub fn new(prepared: PreparedShadow, channel: &'a MeasurementChannel, groups: usize, split_half: bool) -> Result<Self> {
        if prepared.modes() != channel.modes() || prepared.photons() != channel.photons() {
            return Err(Error::PhotonMismatch { expected: channel.photons(), found: prepared.photons() });
        }
        if prepared.records() == 0 {
            return Err(Error::EmptyShadow);
        }
        let plan = EstimationPlan::split(prepared.records(), groups.min(prepared.records()))?;
        let halves = if split_half {
            let (a, b) = prepared.split_half();
            let pa = EstimationPlan::split(a.records(), groups.min(a.records()).max(1))?;
            let pb = EstimationPlan::split(b.records(), groups.min(b.records()).max(1))?;
            Some((a, pa, b, pb))
        } else {
            None
        };
        Ok(Self { channel, full: prepared, plan, halves })
    }

    pub fn plan(&self) -> &EstimationPlan {
        &self.plan
    }

    pub fn prepared(&self) -> &PreparedShadow {
        &self.full
    }
}

impl ExpectationSource for ShadowSource<'_> {
    fn basis(&self) -> &Arc<SectorBasis> {
        self.channel.basis()
    }

    fn expect(&self, x: &CMatrix) -> Result<Complex64> {
        Ok(self.full.estimate_operator(x, &self.plan, self.channel)?.value())
    }

    fn product(&self, a: &CMatrix, b: &CMatrix) -> Result<Complex64> {
        match &self.halves {
            None => Ok(self.expect(a)? * self.expect(b)?),
            Some((h1, p1, h2, p2)) => {
                let ea = h1.estimate_operator(a, p1, self.channel)?.value();
                let eb = h2.estimate_operator(b, p2, self.channel)?.value();
                Ok(ea * eb)
            }
        }
    }
}

/// `n_i` on the sector.
pub fn number_operator(basis: &SectorBasis, i: usize) -> Result<ObservableSpec> {
    if i >= basis.modes() {
        return Err(Error::IndexOutOfRange { index: i, limit: basis.modes() });
    }
    let v: Vec<f64> = basis.iter().map(|s| s.as_slice()[i] as f64).collect();
    Ok(ObservableSpec::diagonal(&v).with_label(format!("n{}", i + 1)))
}

/// `n_i n_j` on the sector.
pub fn number_product(basis: &SectorBasis, i: usize, j: usize) -> Result<ObservableSpec> {
    let m = basis.modes();
    if i >= m || j >= m {
        return Err(Error::IndexOutOfRange { index: i.max(j), limit: m });
    }
    let v: Vec<f64> = basis.iter().map(|s| (s.as_slice()[i] * s.as_slice()[j]) as f64).collect();
    Ok(ObservableSpec::diagonal(&v).with_label(format!("n{}n{}", i + 1, j + 1)))
}

/// `C_ij = <n_i n_j> - <n_i><n_j>`, symmetric by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub m: usize,
    /// Row-major `m x m` entries.
    pub entries: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.m, self.m, &self.entries)
    }

    /// Mean of `|C_ij - other_ij|` over all entries.
    pub fn mean_abs_error(&self, other: &CorrelationMatrix) -> f64 {
        let n = self.entries.len() as f64;
        self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b).abs()).sum::<f64>() / n
    }
}

pub fn correlator_matrix(source: &dyn ExpectationSource) -> Result<CorrelationMatrix> {
    let basis = source.basis().clone();
    let m = basis.modes();
    let numbers: Vec<ObservableSpec> = (0..m).map(|i| number_operator(&basis, i)).collect::<Result<_>>()?;
    let mut entries = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let second = source.expect(number_product(&basis, i, j)?.matrix())?.re;
            let product = source.product(numbers[i].matrix(), numbers[j].matrix())?.re;
            entries[i * m + j] = second - product;
            entries[j * m + i] = second - product;
        }
    }
    Ok(CorrelationMatrix { m, entries })
}

/// Orthonormal Hermitian single-particle basis lifted to a sector.
#[derive(Clone, Debug)]
pub struct LieBasis {
    pub m: usize,
    /// `m x m` matrices `H_a`, orthonormal under `tr(H_a H_b)`.
    pub single_particle: Vec<CMatrix>,
    /// `sum_ij (H_a)_ij E_ij` on the sector.
    pub operators: Vec<ObservableSpec>,
}

/// `e_ii`, `(e_ij + e_ji)/sqrt 2` and `i(e_ij - e_ji)/sqrt 2` for `i < j`,
/// lifted through the mode generators.
pub fn lie_hamiltonian_basis(basis: &SectorBasis) -> Result<LieBasis> {
    let m = basis.modes();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut single = Vec::with_capacity(m * m);
    let mut labels = Vec::with_capacity(m * m);
    for i in 0..m {
        let mut h = CMatrix::zeros(m, m);
        h[(i, i)] = Complex64::ONE;
        single.push(h);
        labels.push(format!("n{}", i + 1));
    }
    for i in 0..m {
        for j in i + 1..m {
            let mut s = CMatrix::zeros(m, m);
            s[(i, j)] = r.into();
            s[(j, i)] = r.into();
            single.push(s);
            labels.push(format!("x{}{}", i + 1, j + 1));
            let mut a = CMatrix::zeros(m, m);
            a[(i, j)] = Complex64::new(0.0, r);
            a[(j, i)] = Complex64::new(0.0, -r);
            single.push(a);
            labels.push(format!("y{}{}", i + 1, j + 1));
        }
    }
    for (a, ha) in single.iter().enumerate() {
        for (b, hb) in single.iter().enumerate() {
            let g = trace_product(ha, hb);
            let target = if a == b { 1.0 } else { 0.0 };
            if (g.re - target).abs() > 1e-12 || g.im.abs() > 1e-12 {
                return Err(Error::InvalidInput(format!("single-particle basis not orthonormal at ({a},{b})")));
            }
        }
    }
    let d = basis.dim();
    let generators: Vec<Vec<CMatrix>> = (0..m)
        .map(|i| (0..m).map(|j| generator_in_sector(i, j, basis).map(|g| g.to_dense())).collect())
        .collect::<Result<_>>()?;
    let operators = single
        .iter()
        .zip(labels)
        .map(|(h, label)| {
            let mut op = CMatrix::zeros(d, d);
            for i in 0..m {
                for j in 0..m {
                    if h[(i, j)] != Complex64::ZERO {
                        op += &generators[i][j] * h[(i, j)];
                    }
                }
            }
            ObservableSpec::labeled(op, label)
        })
        .collect::<Result<_>>()?;
    Ok(LieBasis { m, single_particle: single, operators })
}

/// `I = sum_a <O_a>^2`.
pub fn invariant_i(source: &dyn ExpectationSource, lie: &LieBasis) -> Result<f64> {
    lie.operators.iter().map(|o| Ok(source.product(o.matrix(), o.matrix())?.re)).sum()
}

/// Eigenvalues of `rho_T = sum_a <O_a> O_a`, descending.
pub fn invariant_rhot_spectrum(source: &dyn ExpectationSource, lie: &LieBasis) -> Result<Vec<f64>> {
    let d = source.basis().dim();
    let mut rho_t = CMatrix::zeros(d, d);
    for o in &lie.operators {
        rho_t += o.matrix().scale(source.expect(o.matrix())?.re);
    }
    Ok(hermitian_eigenvalues(&rho_t))
}

/// How the two-point matrix of the Lie basis is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaVariant {
    /// `<O_i><O_j> - <[O_i, O_j]> / 2`.
    #[default]
    Commutator,
    /// `<{O_i, O_j}> / 2 - <O_i><O_j>`, the symmetrized covariance.
    Anticommutator,
}

/// The `m^2 x m^2` matrix `Gamma`, Hermitian for either variant.
pub fn gamma_matrix(source: &dyn ExpectationSource, lie: &LieBasis, variant: GammaVariant) -> Result<CMatrix> {
    let ops: Vec<&CMatrix> = lie.operators.iter().map(ObservableSpec::matrix).collect();
    let k = ops.len();
    let mut g = CMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let means = source.product(ops[i], ops[j])?;
            let ij = ops[i] * ops[j];
            let ji = ops[j] * ops[i];
            g[(i, j)] = match variant {
                GammaVariant::Commutator => means - source.expect(&(ij - ji))? * 0.5,
                GammaVariant::Anticommutator => source.expect(&(ij + ji))? * 0.5 - means,
            };
        }
    }
    Ok(hermitian_part(&g))
}

/// Eigenvalues of `Gamma`, descending.
pub fn invariant_gamma_spectrum(
    source: &dyn ExpectationSource,
    lie: &LieBasis,
    variant: GammaVariant,
) -> Result<Vec<f64>> {
    Ok(hermitian_eigenvalues(&gamma_matrix(source, lie, variant)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    #[serde(rename = "I")]
    pub i: f64,
    pub rho_t_spectrum: Vec<f64>,
    pub gamma_spectrum: Vec<f64>,
    pub gamma_variant: GammaVariant,
}

pub fn invariant_report(source: &dyn ExpectationSource, lie: &LieBasis, variant: GammaVariant) -> Result<InvariantReport> {
    Ok(InvariantReport {
        i: invariant_i(source, lie)?,
        rho_t_spectrum: invariant_rhot_spectrum(source, lie)?,
        gamma_spectrum: invariant_gamma_spectrum(source, lie, variant)?,
        gamma_variant: variant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{lift_to_sector, sample_haar_unitary, ModeOccupation};
    use crate::linalg::max_abs;

    fn occ(v: &[u32]) -> ModeOccupation {
        ModeOccupation::new(v.to_vec()).unwrap()
    }

    fn exact(v: &[u32]) -> ExactSource {
        ExactSource::new(&BlockDiagonalState::basis_state(&occ(v)).unwrap(), v.iter().sum::<u32>() as usize).unwrap()
    }

    #[test]
    fn fock_states_have_zero_correlators() {
        let c = correlator_matrix(&exact(&[1, 2, 0])).unwrap();
        assert!(c.entries.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn lie_basis_shapes() {
        let one = lie_hamiltonian_basis(&SectorBasis::new(1, 2).unwrap()).unwrap();
        assert_eq!(one.operators.len(), 1);
        let two = lie_hamiltonian_basis(&SectorBasis::new(2, 2).unwrap()).unwrap();
        assert_eq!(two.operators.len(), 4);
        assert_eq!(two.operators[2].label(), Some("x12"));
    }

    #[test]
    fn invariant_i_values() {
        let b = SectorBasis::new(4, 3).unwrap();
        let lie = lie_hamiltonian_basis(&b).unwrap();
        assert!((invariant_i(&exact(&[1, 1, 1, 0]), &lie).unwrap() - 3.0).abs() < 1e-12);
        assert!((invariant_i(&exact(&[3, 0, 0, 0]), &lie).unwrap() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn rhot_for_fock_state() {
        let b = SectorBasis::new(4, 3).unwrap();
        let lie = lie_hamiltonian_basis(&b).unwrap();
        let spec = invariant_rhot_spectrum(&exact(&[1, 1, 1, 0]), &lie).unwrap();
        let mut expect: Vec<f64> = b.iter().map(|s| s.as_slice()[..3].iter().sum::<u32>() as f64).collect();
        expect.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(spec.len(), 20);
        for (a, b) in spec.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn single_mode_gamma() {
        let b = SectorBasis::new(1, 3).unwrap();
        let lie = lie_hamiltonian_basis(&b).unwrap();
        let g = invariant_gamma_spectrum(&exact(&[3]), &lie, GammaVariant::Commutator).unwrap();
        assert_eq!(g.len(), 1);
        assert!((g[0] - 9.0).abs() < 1e-12);
    }

    #[test]
    fn adjoint_closure() {
        // phi(U)^dagger O_a phi(U) = sum_b R_ab O_b with R real orthogonal
        let b = Arc::new(SectorBasis::new(3, 2).unwrap());
        let lie = lie_hamiltonian_basis(&b).unwrap();
        let phi = lift_to_sector(&sample_haar_unitary(3, 12), &b).unwrap();
        let k = lie.operators.len();
        let mut r = DMatrix::<f64>::zeros(k, k);
        for a in 0..k {
            let rotated = phi.conjugate_inverse(lie.operators[a].matrix());
            let mut rebuilt = CMatrix::zeros(b.dim(), b.dim());
            for c in 0..k {
                // single-particle coefficients via the trace inner product on m x m
                let hc = &lie.single_particle[c];
                let ha = &lie.single_particle[a];
                let u = crate::fock::sample_haar_unitary(3, 12).into_matrix();
                let coeff = trace_product(hc, &(u.adjoint() * ha * &u));
                assert!(coeff.im.abs() < 1e-9);
                r[(a, c)] = coeff.re;
                rebuilt += lie.operators[c].matrix().scale(coeff.re);
            }
            assert!(max_abs(&(rotated - rebuilt)) < 1e-9);
        }
        let id = &r * r.transpose();
        assert!((id - DMatrix::identity(k, k)).amax() < 1e-9);
    }
}
