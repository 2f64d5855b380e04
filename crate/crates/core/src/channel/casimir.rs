//! Quadratic Casimir of the adjoint action on operators.
//!
//! `C = sum_{i,j} ad(E_ij) ad(E_ji)` acts on `L(H_m^n)`, the space of
//! operators on the `n`-photon sector. Linear optics acts on that space by
//! conjugation, which splits it into `n + 1` inequivalent irreducible blocks;
//! `C` is the scalar `2k(k + m - 1)` on block `k`, so its eigenspaces are
//! exactly the isotypic components.
//!
//! In the row-major vectorization `|a><b| -> a * d + b` every `E_ij` is real
//! and `E_ij^T = E_ji`, which makes `C` a real symmetric matrix.

use std::sync::Arc;

use super::generators::GeneratorTable;
use super::sparse::SymmetricSparseMatrix;
use crate::error::Result;
use crate::fock::{DimensionGuard, SectorBasis};

/// Eigenvalue of the Casimir on the `k`-th irreducible block.
pub fn casimir_eigenvalue(m: usize, k: usize) -> f64 {
    (2 * k * (k + m - 1)) as f64
}

/// Assembles the Casimir superoperator of order `d^2` for the sector `(m, n)`.
pub fn casimir_superoperator(
    m: usize,
    n: usize,
    guard: &DimensionGuard,
) -> Result<SymmetricSparseMatrix> {
    guard.check_superoperator(m, n)?;
    let basis = Arc::new(SectorBasis::with_guard(m, n, guard)?);
    Ok(casimir_for_basis(&basis))
}

pub(crate) fn casimir_for_basis(basis: &SectorBasis) -> SymmetricSparseMatrix {
    let m = basis.modes();
    let d = basis.dim();
    let order = d * d;
    let table = GeneratorTable::new(basis);

    let mut scratch = vec![0.0f64; order];
    let mut touched: Vec<usize> = Vec::new();
    let mut entries = Vec::new();
    let mut inner = Vec::with_capacity(2);
    let mut outer = Vec::with_capacity(4);

    for c in 0..d {
        for dd in 0..d {
            let col = c * d + dd;
            for i in 0..m {
                for j in 0..m {
                    inner.clear();
                    adjoint_action(&table, j, i, &[(c, dd, 1.0)], &mut inner);
                    outer.clear();
                    adjoint_action(&table, i, j, &inner, &mut outer);
                    for &(a, b, v) in &outer {
                        let row = a * d + b;
                        if row <= col {
                            if scratch[row] == 0.0 {
                                touched.push(row);
                            }
                            scratch[row] += v;
                        }
                    }
                }
            }
            for &row in &touched {
                let v = std::mem::take(&mut scratch[row]);
                if v != 0.0 {
                    entries.push((row, col, v));
                }
            }
            touched.clear();
        }
    }
    SymmetricSparseMatrix::from_upper_triplets(order, entries, 0.0)
        .expect("casimir entries lie in the upper triangle")
}

/// Appends `ad(E_ij)` applied to a sum of matrix units `v |a><b|`.
fn adjoint_action(
    table: &GeneratorTable,
    i: usize,
    j: usize,
    terms: &[(usize, usize, f64)],
    out: &mut Vec<(usize, usize, f64)>,
) {
    let e = table.get(i, j);
    // <b| E_ij = (E_ji |b>)^T since the generators are real
    let e_t = table.get(j, i);
    for &(a, b, v) in terms {
        if let Some((a2, w)) = e.apply_basis(a) {
            out.push((a2, b, v * w));
        }
        if let Some((b2, w)) = e_t.apply_basis(b) {
            out.push((a, b2, -v * w));
        }
    }
}
