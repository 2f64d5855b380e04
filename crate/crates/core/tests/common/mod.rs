//! Independent reference computations shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use fshadow::fock::{
    lift_to_sector, sample_haar_unitary, transition_amplitude, BlockDiagonalState, ModeOccupation, SectorBasis,
    UnitaryMatrix,
};
use fshadow::linalg::{hermitian_part, CMatrix, CVector};
use fshadow::observables::BinPartition;
use fshadow::seed::rng_from_seed;

pub fn occ(v: &[u32]) -> ModeOccupation {
    ModeOccupation::new(v.to_vec()).unwrap()
}

pub fn random_pure_state(basis: &Arc<SectorBasis>, seed: u64) -> BlockDiagonalState {
    let mut rng = rng_from_seed(seed);
    let mut psi = CVector::from_fn(basis.dim(), |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    psi.unscale_mut(psi.norm());
    BlockDiagonalState::pure(basis.clone(), psi).unwrap()
}

pub fn random_mixed_state(basis: &Arc<SectorBasis>, seed: u64) -> BlockDiagonalState {
    let d = basis.dim();
    let mut rng = rng_from_seed(seed);
    let a = CMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let rho = &a * a.adjoint();
    let tr = rho.trace().re;
    BlockDiagonalState::from_blocks(basis.modes(), [(basis.clone(), rho.unscale(tr))]).unwrap()
}

pub fn random_hermitian(d: usize, seed: u64) -> CMatrix {
    let mut rng = rng_from_seed(seed);
    let a = CMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    hermitian_part(&a)
}

pub fn diagonal(values: impl IntoIterator<Item = f64>) -> CMatrix {
    let v: Vec<f64> = values.into_iter().collect();
    CMatrix::from_fn(v.len(), v.len(), |r, c| if r == c { v[r].into() } else { Complex64::ZERO })
}

pub fn number_matrix(basis: &SectorBasis, i: usize) -> CMatrix {
    diagonal(basis.iter().map(|s| s.as_slice()[i] as f64))
}

pub fn number_product_matrix(basis: &SectorBasis, i: usize, j: usize) -> CMatrix {
    diagonal(basis.iter().map(|s| (s.as_slice()[i] * s.as_slice()[j]) as f64))
}

pub fn projector_matrix(d: usize, s: usize) -> CMatrix {
    diagonal((0..d).map(|i| if i == s { 1.0 } else { 0.0 }))
}

/// `F_p[k, l] = w^{kl} / sqrt(p)` with `w = exp(-2 pi i / p)`.
pub fn fourier(p: usize) -> CMatrix {
    let s = 1.0 / (p as f64).sqrt();
    CMatrix::from_fn(p, p, |k, l| Complex64::from_polar(s, -TAU * (k * l % p) as f64 / p as f64))
}

/// The `mp`-mode interferometer `F_p^{(x)m} P (U (+) I)`: `U` acts on the
/// first `m` modes, `P` sends logical output `i` to physical mode `i p` and
/// the idle modes to the remaining slots, then every block of `p` modes goes
/// through `F_p`.
pub fn fan_out_interferometer(u: &UnitaryMatrix, p: usize) -> UnitaryMatrix {
    let m = u.modes();
    let big = m * p;
    let mut embedded = CMatrix::identity(big, big);
    embedded.view_mut((0, 0), (m, m)).copy_from(u.matrix());
    let mut target = Vec::with_capacity(big);
    target.extend((0..m).map(|i| i * p));
    target.extend((0..big).filter(|x| x % p != 0));
    let mut perm = CMatrix::zeros(big, big);
    for (from, &to) in target.iter().enumerate() {
        perm[(to, from)] = Complex64::ONE;
    }
    let f = fourier(p);
    let mut blocks = CMatrix::zeros(big, big);
    for b in 0..m {
        blocks.view_mut((b * p, b * p), (p, p)).copy_from(&f);
    }
    UnitaryMatrix::new(blocks * perm * embedded).unwrap()
}

/// Probability of every logical outcome recorded without saturation when
/// `input` goes through `u` and a fan-out of `p` detectors of resolution `r`
/// per mode, from the full interferometer. Not normalized.
pub fn pseudo_pnr_oracle(u: &UnitaryMatrix, input: &ModeOccupation, p: usize, r: u32) -> BTreeMap<ModeOccupation, f64> {
    let m = u.modes();
    let n = input.photons();
    let big = fan_out_interferometer(u, p);
    let mut padded = input.as_slice().to_vec();
    padded.resize(m * p, 0);
    let t = ModeOccupation::new(padded).unwrap();
    let basis = SectorBasis::new(m * p, n).unwrap();
    let mut out = BTreeMap::new();
    for b in basis.iter() {
        if b.as_slice().iter().any(|&x| x > r) {
            continue;
        }
        let prob = transition_amplitude(&big, b, &t).unwrap().norm_sqr();
        let logical = ModeOccupation::new(b.as_slice().chunks(p).map(|c| c.iter().sum()).collect()).unwrap();
        *out.entry(logical).or_insert(0.0) += prob;
    }
    out
}

/// Marginal of the Fock distribution over the bins, in the table order of
/// `binned_distribution` (count vectors in lexicographic order).
pub fn brute_force_binned(populations: &[f64], basis: &SectorBasis, partition: &BinPartition) -> BTreeMap<Vec<usize>, f64> {
    let mut out = BTreeMap::new();
    for (s, &p) in basis.iter().zip(populations) {
        *out.entry(partition.bin_counts(s)).or_insert(0.0) += p;
    }
    out
}

/// Mean and standard error, entrywise, of the single-unitary measurement
/// superoperator `sum_s |A_s>><<A_s|` with `A_s = phi(U)^dagger |s><s| phi(U)`,
/// in the row-major vectorization.
pub fn empirical_twirl(m: usize, n: usize, draws: usize, seed: u64) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let basis = Arc::new(SectorBasis::new(m, n).unwrap());
    let d = basis.dim();
    let order = d * d;
    let mut sum = DMatrix::<Complex64>::zeros(order, order);
    let mut sum_sq_re = DMatrix::<f64>::zeros(order, order);
    let mut sum_sq_im = DMatrix::<f64>::zeros(order, order);
    for i in 0..draws {
        let phi = lift_to_sector(&sample_haar_unitary(m, seed.wrapping_add(i as u64)), &basis).unwrap();
        let mut sample = DMatrix::<Complex64>::zeros(order, order);
        for s in 0..d {
            let v = phi.matrix().row(s).adjoint();
            let a = &v * v.adjoint();
            let vec_a = DMatrix::from_fn(order, 1, |k, _| a[(k / d, k % d)]);
            sample += &vec_a * vec_a.adjoint();
        }
        sum_sq_re += sample.map(|z| z.re * z.re);
        sum_sq_im += sample.map(|z| z.im * z.im);
        sum += sample;
    }
    let k = draws as f64;
    let mean = sum.unscale(k);
    let se = DMatrix::from_fn(order, order, |r, c| {
        let mu = mean[(r, c)];
        let var_re = (sum_sq_re[(r, c)] / k - mu.re * mu.re).max(0.0) * k / (k - 1.0);
        let var_im = (sum_sq_im[(r, c)] / k - mu.im * mu.im).max(0.0) * k / (k - 1.0);
        Complex64::new((var_re / k).sqrt(), (var_im / k).sqrt())
    });
    (mean, se)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
