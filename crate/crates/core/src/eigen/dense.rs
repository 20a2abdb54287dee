use faer::{Mat, Side};
use ndarray::Array2;

use super::{EigenResult, DEFAULT_DENSE_CUTOFF};
use crate::error::{Error, Result};

/// Full spectrum of a symmetric matrix. Only the lower triangle is read.
pub fn solve_dense(matrix: &Array2<f64>) -> Result<EigenResult> {
    solve_dense_with_cutoff(matrix, DEFAULT_DENSE_CUTOFF)
}

pub fn solve_dense_with_cutoff(matrix: &Array2<f64>, cutoff: usize) -> Result<EigenResult> {
    decompose(matrix, matrix.nrows(), cutoff)
}

/// Lowest `k` pairs of a symmetric matrix.
pub fn solve_dense_lowest(matrix: &Array2<f64>, k: usize) -> Result<EigenResult> {
    if k > matrix.nrows() {
        return Err(Error::TooManyPairs {
            requested: k,
            dim: matrix.nrows(),
        });
    }
    decompose(matrix, k, DEFAULT_DENSE_CUTOFF)
}

fn decompose(matrix: &Array2<f64>, k: usize, cutoff: usize) -> Result<EigenResult> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            actual: matrix.ncols(),
        });
    }
    if n > cutoff {
        return Err(Error::DenseTooLarge { dim: n, cutoff });
    }
    let a = Mat::<f64>::from_fn(n, n, |i, j| matrix[[i, j]]);
    let evd = a.selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let u = evd.u();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s.read(i).total_cmp(&s.read(j)));
    order.truncate(k);

    let values: Vec<f64> = order.iter().map(|&i| s.read(i)).collect();
    let vectors = Array2::from_shape_fn((n, k), |(r, c)| u.read(r, order[c]));
    let mut result = EigenResult {
        values,
        vectors,
        residuals: Vec::new(),
    };
    result.apply_sign_convention();
    let av = matrix.dot(&result.vectors);
    result.residuals = av
        .columns()
        .into_iter()
        .zip(result.vectors.columns())
        .zip(&result.values)
        .map(|((a, v), &lambda)| {
            a.iter()
                .zip(v.iter())
                .map(|(a, x)| (a - lambda * x).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn diagonal_two_by_two() {
        let r = solve_dense(&array![[9.45, 0.0], [0.0, 9.85]]).unwrap();
        assert_abs_diff_eq!(r.values[0], 9.45, epsilon = 1e-14);
        assert_abs_diff_eq!(r.values[1], 9.85, epsilon = 1e-14);
        assert!(r.max_residual() < 1e-14);
    }

    #[test]
    fn values_ascending_and_vectors_orthonormal() {
        let n = 40;
        let m = Array2::from_shape_fn((n, n), |(i, j)| {
            let (a, b) = (i.min(j) as f64, i.max(j) as f64);
            (a + 1.0).sin() * (b * 0.3).cos() + if i == j { i as f64 } else { 0.0 }
        });
        let r = solve_dense(&m).unwrap();
        assert!(r.values.windows(2).all(|w| w[0] <= w[1]));
        let g = r.vectors.t().dot(&r.vectors);
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(g[[i, j]], want, epsilon = 1e-10);
            }
        }
        assert!(r.max_residual() < 1e-10);
    }

    #[test]
    fn cutoff_enforced() {
        let m = Array2::<f64>::eye(5);
        assert!(matches!(
            solve_dense_with_cutoff(&m, 4),
            Err(Error::DenseTooLarge { dim: 5, cutoff: 4 })
        ));
    }

    #[test]
    fn lowest_subset() {
        let m = Array2::from_diag(&ndarray::arr1(&[3.0, 1.0, 2.0, 0.5]));
        let r = solve_dense_lowest(&m, 2).unwrap();
        assert_eq!(r.values, vec![0.5, 1.0]);
        assert_eq!(r.vectors.column(0).to_vec(), vec![0.0, 0.0, 0.0, 1.0]);
    }
}
