//! Isotypic projectors `Pi_k` of the operator space.
//!
//! Each projector is the spectral projector of the Casimir onto the
//! eigenvalue `c_k = 2k(k + m - 1)`, written as the Lagrange polynomial
//!
//! ```text
//! Pi_k = prod_{l != k} (C - c_l) / (c_k - c_l).
//! ```
//!
//! `C` commutes with conjugation by diagonal unitaries, so it never mixes
//! matrix units `|a><b|` of different weight `a - b`. The polynomial is
//! therefore evaluated block by block, each block being a small dense
//! matrix. A block of weight `w` only meets irreps `k >= sum_i max(w_i, 0)`,
//! which trims the product further.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::casimir::{casimir_eigenvalue, casimir_for_basis};
use super::sparse::SymmetricSparseMatrix;
use crate::error::{Error, Result};
use crate::fock::SectorBasis;

/// Entries of a projector below this magnitude are dropped.
pub const SPARSIFY_THRESHOLD: f64 = 1e-12;
/// Relative gap below which two Casimir eigenvalues count as clustered.
pub const CLUSTER_TOLERANCE: f64 = 1e-6;
/// Largest tolerated `max |C Pi_k - c_k Pi_k|` on any block.
const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Projector onto the `k`-th isotypic subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct IrrepProjector {
    pub k: usize,
    pub matrix: SymmetricSparseMatrix,
    /// `tr Pi_k`, the dimension of the subspace.
    pub dim: usize,
}

/// Number of isotypic components of `L(H_m^n)`.
pub fn irrep_count(m: usize, n: usize) -> usize {
    if m == 1 {
        1
    } else {
        n + 1
    }
}

pub(crate) fn build_for_basis(basis: &SectorBasis) -> Result<Vec<IrrepProjector>> {
    let m = basis.modes();
    let n = basis.photons();
    let d = basis.dim();
    let order = d * d;
    let kmax = irrep_count(m, n) - 1;
    let eigen: Vec<f64> = (0..=kmax).map(|k| casimir_eigenvalue(m, k)).collect();
    check_separation(&eigen)?;

    let casimir = casimir_for_basis(basis);

    // Group superoperator indices by weight a - b.
    let mut blocks: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for a in 0..d {
        for b in 0..d {
            let w: Vec<i64> = basis
                .state(a)
                .as_slice()
                .iter()
                .zip(basis.state(b).as_slice())
                .map(|(&x, &y)| x as i64 - y as i64)
                .collect();
            blocks.entry(w).or_default().push(a * d + b);
        }
    }

    let mut position = vec![usize::MAX; order];
    let mut entries: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); kmax + 1];
    for (weight, members) in &blocks {
        for (p, &g) in members.iter().enumerate() {
            position[g] = p;
        }
        let size = members.len();
        let mut local = DMatrix::<f64>::zeros(size, size);
        for (q, &col) in members.iter().enumerate() {
            let lo = casimir.col_ptr()[col];
            let hi = casimir.col_ptr()[col + 1];
            for ptr in lo..hi {
                let row = casimir.row_idx()[ptr];
                let v = casimir.values()[ptr];
                let p = position[row];
                debug_assert!(p != usize::MAX, "casimir mixes weights");
                local[(p, q)] = v;
                local[(q, p)] = v;
            }
        }

        let kmin: usize = weight.iter().filter(|&&x| x > 0).map(|&x| x as usize).sum();
        let present: Vec<usize> = (kmin..=kmax).collect();
        for &k in &present {
            let proj = lagrange_projector(&local, &present, &eigen, k);
            let residual = (&local * &proj - proj.scale(eigen[k])).amax();
            if residual > RESIDUAL_TOLERANCE {
                return Err(Error::SpectralSplit(format!(
                    "weight block {weight:?}: residual {residual:e} for k={k}"
                )));
            }
            for q in 0..size {
                for p in 0..=q {
                    let v = proj[(p, q)];
                    if v.abs() >= SPARSIFY_THRESHOLD {
                        let (r, c) = (members[p], members[q]);
                        entries[k].push(if r <= c { (r, c, v) } else { (c, r, v) });
                    }
                }
            }
        }
        for &g in members {
            position[g] = usize::MAX;
        }
    }

    entries
        .into_iter()
        .enumerate()
        .map(|(k, e)| {
            let matrix = SymmetricSparseMatrix::from_upper_triplets(order, e, SPARSIFY_THRESHOLD)?;
            let trace = matrix.trace();
            let dim = trace.round() as usize;
            if (trace - dim as f64).abs() > 1e-8 || dim != super::irrep_dimension(m, k) {
                return Err(Error::SpectralSplit(format!(
                    "projector {k} has trace {trace}, expected {}",
                    super::irrep_dimension(m, k)
                )));
            }
            Ok(IrrepProjector { k, matrix, dim })
        })
        .collect()
}

fn check_separation(eigen: &[f64]) -> Result<()> {
    for (a, &x) in eigen.iter().enumerate() {
        for &y in &eigen[a + 1..] {
            let scale = x.abs().max(y.abs()).max(1.0);
            if (x - y).abs() < CLUSTER_TOLERANCE * scale {
                return Err(Error::SpectralSplit(format!(
                    "casimir eigenvalues {x} and {y} are not separated"
                )));
            }
        }
    }
    Ok(())
}

fn lagrange_projector(c: &DMatrix<f64>, present: &[usize], eigen: &[f64], k: usize) -> DMatrix<f64> {
    let size = c.nrows();
    let mut acc = DMatrix::<f64>::identity(size, size);
    for &l in present {
        if l == k {
            continue;
        }
        let mut factor = c.clone();
        for i in 0..size {
            factor[(i, i)] -= eigen[l];
        }
        acc = (acc * factor).scale(1.0 / (eigen[k] - eigen[l]));
    }
    acc
}
