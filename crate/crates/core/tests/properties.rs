mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use common::*;
use fshadow::channel::{Direction, MeasurementChannel};
use fshadow::fock::{lift_to_sector, permanent, sample_haar_unitary, BlockDiagonalState, SectorBasis};
use fshadow::linalg::{hermitian_eigenvalues, max_abs, trace_distance, CMatrix};
use fshadow::observables::{
    binned_distribution, characteristic_function, correlator_matrix, BinPartition, ExactSource,
};
use fshadow::seed::rng_from_seed;
use fshadow::shadow::{collect_shadow, PreparedShadow, StateSampler};

fn sector() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=4, 1usize..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lift_is_a_homomorphism((m, n) in sector(), a in any::<u64>(), b in any::<u64>()) {
        let basis = Arc::new(SectorBasis::new(m, n).unwrap());
        let u = sample_haar_unitary(m, a);
        let v = sample_haar_unitary(m, b);
        let lu = lift_to_sector(&u, &basis).unwrap();
        let lv = lift_to_sector(&v, &basis).unwrap();
        let luv = lift_to_sector(&u.compose(&v).unwrap(), &basis).unwrap();
        prop_assert!(max_abs(&(luv.matrix() - lu.matrix() * lv.matrix())) < 1e-10);
        let ladj = lift_to_sector(&u.adjoint(), &basis).unwrap();
        prop_assert!(max_abs(&(ladj.matrix() - lu.matrix().adjoint())) < 1e-10);
    }

    #[test]
    fn channel_is_covariant((m, n) in (2usize..=3, 1usize..=3), seed in any::<u64>()) {
        let ch = MeasurementChannel::build(m, n).unwrap();
        let x = random_hermitian(ch.dim(), seed);
        let phi = lift_to_sector(&sample_haar_unitary(m, seed ^ 0x5a5a), ch.basis()).unwrap();
        for dir in [Direction::Forward, Direction::Inverse] {
            let lhs = ch.apply(&phi.conjugate(&x), dir).unwrap();
            let rhs = phi.conjugate(&ch.apply(&x, dir).unwrap());
            prop_assert!(max_abs(&(lhs - rhs)) < 1e-9);
        }
    }

    #[test]
    fn permanent_ignores_row_and_column_order(
        n in 1usize..=7,
        seed in any::<u64>(),
        rows in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::Rng;
        let mut rng = rng_from_seed(seed);
        let a = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let mut shuffle = rng_from_seed(rows);
        let mut pr: Vec<usize> = (0..n).collect();
        let mut pc = pr.clone();
        pr.shuffle(&mut shuffle);
        pc.shuffle(&mut shuffle);
        let b = DMatrix::from_fn(n, n, |i, j| a[(pr[i], pc[j])]);
        prop_assert!((permanent(&a) - permanent(&b)).norm() < 1e-10 * (1.0 + permanent(&a).norm()));
        prop_assert!((permanent(&a) - permanent(&a.transpose())).norm() < 1e-10 * (1.0 + permanent(&a).norm()));
    }

    #[test]
    fn merging_bins_marginalizes(seed in any::<u64>(), assignment in prop::collection::vec(0usize..3, 4)) {
        let basis = Arc::new(SectorBasis::new(4, 3).unwrap());
        let state = random_mixed_state(&basis, seed);
        let src = ExactSource::new(&state, 3).unwrap();
        let fine = BinPartition::new(3, assignment.clone());
        prop_assume!(fine.is_ok());
        let fine = binned_distribution(&src, &fine.unwrap()).unwrap();
        // bins 1 and 2 merged
        let merged: Vec<usize> = assignment.iter().map(|&b| b.min(1)).collect();
        let coarse = BinPartition::new(2, merged);
        prop_assume!(coarse.is_ok());
        let coarse = binned_distribution(&src, &coarse.unwrap()).unwrap();
        let mut folded: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for e in &fine.table {
            *folded.entry(vec![e.counts[0], e.counts[1] + e.counts[2]]).or_insert(0.0) += e.probability;
        }
        for e in &coarse.table {
            prop_assert!((folded[&e.counts] - e.probability).abs() < 1e-10);
        }
    }

    #[test]
    fn characteristic_function_is_positive_definite(seed in any::<u64>(), etas in prop::collection::vec(-3.2f64..3.2, 6)) {
        let basis = Arc::new(SectorBasis::new(3, 2).unwrap());
        let state = random_mixed_state(&basis, seed);
        let src = ExactSource::new(&state, 2).unwrap();
        let part = BinPartition::new(2, vec![0, 1, 1]).unwrap();
        prop_assert!((characteristic_function(&src, &part, &[0.0, 0.0]).unwrap() - 1.0).norm() < 1e-12);
        let points: Vec<[f64; 2]> = etas.chunks(2).map(|c| [c[0], c[1]]).collect();
        let k = CMatrix::from_fn(points.len(), points.len(), |a, b| {
            let eta = [points[a][0] - points[b][0], points[a][1] - points[b][1]];
            characteristic_function(&src, &part, &eta).unwrap()
        });
        prop_assert!(max_abs(&(&k - k.adjoint())) < 1e-12);
        prop_assert!(hermitian_eigenvalues(&k).iter().all(|&l| l > -1e-10));
    }
}

#[test]
fn correlators_match_brute_force() {
    let basis = Arc::new(SectorBasis::new(3, 3).unwrap());
    let state = random_mixed_state(&basis, 12);
    let rho = state.block(3).unwrap().density_matrix();
    let pops: Vec<f64> = (0..basis.dim()).map(|i| rho[(i, i)].re).collect();
    let got = correlator_matrix(&ExactSource::new(&state, 3).unwrap()).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let (mut ni, mut nj, mut nij) = (0.0, 0.0, 0.0);
            for (s, &p) in basis.iter().zip(&pops) {
                let (a, b) = (s.as_slice()[i] as f64, s.as_slice()[j] as f64);
                ni += a * p;
                nj += b * p;
                nij += a * b * p;
            }
            assert!((got.get(i, j) - (nij - ni * nj)).abs() < 1e-12);
        }
    }
}

#[test]
fn maximally_mixed_state_is_recovered() {
    let ch = MeasurementChannel::build(2, 2).unwrap();
    let state = BlockDiagonalState::maximally_mixed(ch.basis().clone()).unwrap();
    let shadow = collect_shadow(&StateSampler::ideal(state, 2).unwrap(), 100_000, 1, 8).unwrap();
    let est = PreparedShadow::new(&shadow, &ch).unwrap().reconstruct(&ch, false).unwrap();
    let target = CMatrix::identity(3, 3).unscale(3.0);
    let dist = trace_distance(&est, &target);
    assert!(dist < 0.05, "trace distance {dist}");
}

#[test]
fn inverse_undoes_forward() {
    for (m, n) in [(2, 3), (3, 2), (4, 2)] {
        let ch = MeasurementChannel::build(m, n).unwrap();
        let x = random_hermitian(ch.dim(), 3);
        let back = ch.apply(&ch.apply(&x, Direction::Forward).unwrap(), Direction::Inverse).unwrap();
        assert!(max_abs(&(back - x)) < 1e-10);
    }
}
