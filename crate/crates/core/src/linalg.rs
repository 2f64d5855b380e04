//! Small dense helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |A - A^dagger|`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// `(A + A^dagger) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let d = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Eigenvalues of a Hermitian matrix, sorted descending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// `||A - B||_1 / 2` for Hermitian `A`, `B`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b)).iter().map(|l| l.abs()).sum::<f64>()
}

/// Frobenius norm.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    m.clone().singular_values().iter().fold(0.0, |a, &b| a.max(b))
}

/// Splits a `d x d` operator into real and imaginary row-major vectors,
/// entry `(a, b)` landing at index `a * d + b`.
pub fn vectorize(m: &CMatrix) -> (Vec<f64>, Vec<f64>) {
    let d = m.nrows();
    let mut re = Vec::with_capacity(d * d);
    let mut im = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            re.push(m[(a, b)].re);
            im.push(m[(a, b)].im);
        }
    }
    (re, im)
}

pub fn unvectorize(d: usize, re: &[f64], im: &[f64]) -> CMatrix {
    CMatrix::from_fn(d, d, |a, b| Complex64::new(re[a * d + b], im[a * d + b]))
}

/// Clips negative eigenvalues of a Hermitian matrix to zero and renormalizes
/// the trace to one.
pub fn project_to_density(m: &CMatrix) -> CMatrix {
    let eig = hermitian_part(m).symmetric_eigen();
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let total: f64 = clipped.iter().sum();
    let vecs = &eig.eigenvectors;
    let d = m.nrows();
    let mut out = CMatrix::zeros(d, d);
    if total <= 0.0 {
        return CMatrix::identity(d, d).scale(1.0 / d as f64);
    }
    for (k, &l) in clipped.iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        let v = vecs.column(k);
        out += (&v * v.adjoint()).scale(l / total);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectorize_round_trip() {
        let m = CMatrix::from_fn(3, 3, |a, b| Complex64::new(a as f64, b as f64 - 1.0));
        let (re, im) = vectorize(&m);
        assert_eq!(re[1 * 3 + 2], 1.0);
        assert_eq!(im[1 * 3 + 2], 1.0);
        assert_eq!(unvectorize(3, &re, &im), m);
    }

    #[test]
    fn trace_distance_of_orthogonal_projectors() {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 0)] = Complex64::new(1.0, 0.0);
        let mut b = CMatrix::zeros(2, 2);
        b[(1, 1)] = Complex64::new(1.0, 0.0);
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn density_projection_clips_negative_part() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::new(1.2, 0.0),
            Complex64::new(-0.2, 0.0),
        ]));
        let p = project_to_density(&m);
        assert!((p[(0, 0)].re - 1.0).abs() < 1e-14);
        assert!(p[(1, 1)].norm() < 1e-14);
    }
}
