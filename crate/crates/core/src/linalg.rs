//! Small dense linear-algebra helpers on top of `nalgebra`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::{Matrix, Vector};

/// Largest absolute difference between `m` and its transpose.
pub fn max_asymmetry(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for c in 0..n {
        for r in (c + 1)..n {
            worst = worst.max((m[(r, c)] - m[(c, r)]).abs());
        }
    }
    worst
}

/// `(m + m') / 2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues in descending
/// order; column `d` of the returned matrix is the eigenvector for value `d`.
pub fn sym_eigen_desc(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), Matrix::zeros(0, 0));
    }
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Applies `f` to the eigenvalues above `rel_tol * largest` and zero to the
/// rest, returning `V f(L) V'`.
pub fn sym_spectral_map(m: &Matrix, rel_tol: f64, f: impl Fn(f64) -> f64) -> Result<Matrix> {
    let (values, vectors) = sym_eigen_desc(m);
    let largest = values.first().copied().unwrap_or(0.0);
    if !(largest > 0.0) {
        return Err(Error::ZeroMatrix);
    }
    let cut = rel_tol * largest;
    let n = m.nrows();
    let mut out = Matrix::zeros(n, n);
    for (d, &lambda) in values.iter().enumerate() {
        if lambda <= cut {
            break;
        }
        let v = vectors.column(d);
        out.ger(f(lambda), &v, &v, 1.0);
    }
    Ok(out)
}

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix.
pub fn pinv_sym(m: &Matrix, rel_tol: f64) -> Result<Matrix> {
    sym_spectral_map(m, rel_tol, |l| 1.0 / l)
}

/// Least-squares fit `y ~ x` by Householder QR. Returns the coefficients and
/// `(x'x)^{-1}`.
pub fn least_squares(x: &Matrix, y: &Matrix) -> Result<(Matrix, Matrix)> {
    let p = x.ncols();
    if x.nrows() < p || p == 0 {
        return Err(Error::SingularRegressors);
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..p).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    if (0..p).any(|i| r[(i, i)].abs() <= 1e-12 * scale) {
        return Err(Error::SingularRegressors);
    }
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let qty = qty.rows(0, p).into_owned();
    let coef = r.solve_upper_triangular(&qty).ok_or(Error::SingularRegressors)?;
    let r_inv = r.solve_upper_triangular(&Matrix::identity(p, p)).ok_or(Error::SingularRegressors)?;
    let xtx_inv = &r_inv * r_inv.transpose();
    Ok((coef, xtx_inv))
}

/// Spectral radius of a general square matrix.
pub fn spectral_radius(m: &Matrix) -> f64 {
    m.complex_eigenvalues().iter().map(|z| libm::hypot(z.re, z.im)).fold(0.0, f64::max)
}

/// Column means of `m`.
pub fn column_means(m: &Matrix) -> Vector {
    let n = m.nrows() as f64;
    Vector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending() {
        let m = Matrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 1.0]);
        let (vals, vecs) = sym_eigen_desc(&m);
        assert_eq!(vals, [5.0, 2.0, 1.0]);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pinv_of_rank_deficient() {
        // [1 1; 1 1] has pseudo-inverse [1 1; 1 1] / 4
        let m = Matrix::from_element(2, 2, 1.0);
        let p = pinv_sym(&m, 1e-12).unwrap();
        assert!((p - Matrix::from_element(2, 2, 0.25)).amax() < 1e-14);
        assert_eq!(pinv_sym(&Matrix::zeros(2, 2), 1e-12), Err(Error::ZeroMatrix));
    }

    #[test]
    fn least_squares_exact_line() {
        let x = Matrix::from_fn(5, 2, |r, c| if c == 0 { 1.0 } else { r as f64 });
        let y = Matrix::from_fn(5, 1, |r, _| 3.0 - 2.0 * r as f64);
        let (b, _) = least_squares(&x, &y).unwrap();
        assert!((b[(0, 0)] - 3.0).abs() < 1e-12 && (b[(1, 0)] + 2.0).abs() < 1e-12);
        let collinear = Matrix::from_fn(5, 2, |r, _| r as f64);
        assert_eq!(least_squares(&collinear, &y).unwrap_err(), Error::SingularRegressors);
    }

    #[test]
    fn spectral_radius_of_rotation() {
        let m = Matrix::from_row_slice(2, 2, &[0.0, -0.5, 0.5, 0.0]);
        assert!((spectral_radius(&m) - 0.5).abs() < 1e-12);
    }
}
