//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Ratio of extreme singular values; infinite for singular matrices.
pub fn condition_number(m: &DMatrix<Complex64>) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &DMatrix<Complex64>, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let Some(&hi) = s.first() else { return 0 };
    s.iter().filter(|&&v| v > rel_tol * hi).count()
}

/// Solves the square system `a x = b`.
pub fn solve(a: &DMatrix<Complex64>, b: &[Complex64]) -> Result<Vec<Complex64>> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.len() });
    }
    let rhs = DVector::from_column_slice(b);
    a.clone()
        .lu()
        .solve(&rhs)
        .map(|x| x.iter().copied().collect())
        .ok_or_else(|| Error::InvalidInput("singular system".into()))
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn lstsq(a: &DMatrix<Complex64>, b: &[Complex64]) -> Vec<Complex64> {
    let rhs = DVector::from_column_slice(b);
    let svd = a.clone().svd(true, true);
    let hi = svd.singular_values.iter().copied().fold(0.0, f64::max);
    svd.solve(&rhs, 1e-13 * hi.max(f64::MIN_POSITIVE))
        .map(|x| x.iter().copied().collect())
        .unwrap_or_else(|_| vec![Complex64::new(0.0, 0.0); a.ncols()])
}

/// Orthonormal basis (as columns) of the null space of a real matrix,
/// thresholding singular values at `rel_tol * sigma_max`. Also returns the
/// singular values in decreasing order, padded with zeros to `ncols`.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, Vec<f64>) {
    let (rows, cols) = m.shape();
    // Pad with zero rows so the SVD yields a full right singular basis.
    let square = if rows < cols {
        let mut p = DMatrix::<f64>::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let hi = sigma.first().copied().unwrap_or(0.0);
    let kernel: Vec<usize> = order.iter().copied().filter(|&i| svd.singular_values[i] <= rel_tol * hi).collect();
    let mut basis = DMatrix::<f64>::zeros(cols, kernel.len());
    for (c, &i) in kernel.iter().enumerate() {
        basis.set_column(c, &v_t.row(i).transpose());
    }
    (basis, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let (k, s) = null_space(&m, 1e-10);
        assert_eq!(k.ncols(), 2);
        assert_eq!(s.len(), 3);
        assert!((&m * &k).norm() < 1e-12);
        assert!((k.transpose() * &k - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn condition_and_rank() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 0.5),
        ]));
        assert!((condition_number(&m) - 4.0).abs() < 1e-12);
        assert_eq!(numerical_rank(&m, 1e-8), 2);
        let z = DMatrix::<Complex64>::zeros(2, 2);
        assert_eq!(condition_number(&z), f64::INFINITY);
    }

    #[test]
    fn solve_and_lstsq_agree_on_square_systems() {
        let a = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(1.0, 1.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(3.0, 0.5),
        ]);
        let b = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)];
        let x = solve(&a, &b).unwrap();
        let y = lstsq(&a, &b);
        assert!(x.iter().zip(&y).all(|(p, q)| (p - q).norm() < 1e-12));
    }
}
