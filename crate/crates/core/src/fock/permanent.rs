//! Matrix permanents via Ryser's inclusion-exclusion formula.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Permanent of a square complex matrix.
///
/// Uses Ryser's formula
/// `per(A) = (-1)^k sum_{S} (-1)^{|S|} prod_i sum_{j in S} a_ij`
/// with the column subsets `S` visited in Gray-code order, so each step adds
/// or removes a single column from the running row sums. Cost is
/// `O(2^k * k)`. The permanent of the empty matrix is 1.
///
/// # Panics
///
/// If `a` is not square or has more than 63 columns.
pub fn permanent(a: &DMatrix<Complex64>) -> Complex64 {
    let k = a.nrows();
    assert_eq!(k, a.ncols(), "permanent needs a square matrix");
    assert!(k < 64, "permanent of a {k}x{k} matrix is out of reach");
    match k {
        0 => return Complex64::new(1.0, 0.0),
        1 => return a[(0, 0)],
        2 => return a[(0, 0)] * a[(1, 1)] + a[(0, 1)] * a[(1, 0)],
        _ => {}
    }

    let mut row_sums = vec![Complex64::new(0.0, 0.0); k];
    let mut total = Complex64::new(0.0, 0.0);
    let mut prev_gray: u64 = 0;
    for step in 1..(1u64 << k) {
        let gray = step ^ (step >> 1);
        let flipped = (gray ^ prev_gray).trailing_zeros() as usize;
        prev_gray = gray;
        let column = a.column(flipped);
        if gray & (1 << flipped) != 0 {
            for (r, &v) in row_sums.iter_mut().zip(column.iter()) {
                *r += v;
            }
        } else {
            for (r, &v) in row_sums.iter_mut().zip(column.iter()) {
                *r -= v;
            }
        }
        let prod: Complex64 = row_sums.iter().product();
        if (k as u32 - gray.count_ones()) % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}
