//! Symmetric eigensolvers.
//!
//! [`solve_dense`] diagonalizes an explicit matrix. [`solve_lowest`] finds the
//! lowest eigenpairs of a matrix-free operator with a restarted block Lanczos
//! iteration. [`solve`] picks one of the two by problem size.

mod dense;
mod lanczos;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1};
use serde::{Deserialize, Serialize};

pub use dense::{solve_dense, solve_dense_lowest, solve_dense_with_cutoff};
pub use lanczos::solve_lowest;

use crate::error::{Error, Result};

/// Largest matrix [`solve_dense`] accepts.
pub const DEFAULT_DENSE_CUTOFF: usize = 12000;

/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const DEGENERACY_TOL: f64 = 1e-6;

/// Symmetric real operator.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// `y = A x`
    fn apply(&self, x: ArrayView1<'_, f64>, y: ArrayViewMut1<'_, f64>);

    /// Explicit matrix, when the operator can build one.
    fn to_dense(&self) -> Option<Array2<f64>> {
        None
    }
}

/// Dense symmetric matrix viewed as an operator.
#[derive(Clone, Debug)]
pub struct DenseOperator(pub Array2<f64>);

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: ArrayView1<'_, f64>, mut y: ArrayViewMut1<'_, f64>) {
        ndarray::linalg::general_mat_vec_mul(1.0, &self.0, &x, 0.0, &mut y);
    }

    fn to_dense(&self) -> Option<Array2<f64>> {
        Some(self.0.clone())
    }
}

/// Materializes any operator column by column.
pub fn assemble(op: &dyn LinearOperator) -> Array2<f64> {
    let n = op.dim();
    let mut m = Array2::zeros((n, n));
    let mut e = Array1::zeros(n);
    let mut col = Array1::zeros(n);
    for j in 0..n {
        e[j] = 1.0;
        op.apply(e.view(), col.view_mut());
        m.column_mut(j).assign(&col);
        e[j] = 0.0;
    }
    m
}

/// Eigenpairs in ascending order. `vectors` holds one unit vector per column.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Array2<f64>,
    pub residuals: Vec<f64>,
}

impl EigenResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, i: usize) -> ArrayView1<'_, f64> {
        self.vectors.column(i)
    }

    /// Flips every vector so its largest-magnitude component is positive.
    pub fn apply_sign_convention(&mut self) {
        for mut col in self.vectors.columns_mut() {
            let mut best = 0.0f64;
            let mut sign = 1.0;
            for &v in col.iter() {
                if v.abs() > best {
                    best = v.abs();
                    sign = v.signum();
                }
            }
            if sign < 0.0 {
                col.mapv_inplace(|v| -v);
            }
        }
    }

    /// Keeps the lowest `k` pairs.
    pub fn truncate(&mut self, k: usize) {
        let k = k.min(self.len());
        self.values.truncate(k);
        self.residuals.truncate(k);
        self.vectors = self.vectors.slice(ndarray::s![.., ..k]).to_owned();
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    pub fn clusters(&self, tol: f64) -> Vec<Vec<usize>> {
        clusters(&self.values, tol)
    }
}

/// Groups ascending values into runs whose neighbors differ by at most `tol`.
pub fn clusters(values: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, v) in values.iter().enumerate() {
        match out.last_mut() {
            Some(last) if (v - values[*last.last().unwrap()]).abs() <= tol => last.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

/// `‖A v − λ v‖` for each pair.
pub fn residual_norms(op: &dyn LinearOperator, values: &[f64], vectors: ArrayView2<'_, f64>) -> Vec<f64> {
    let mut av = Array1::zeros(op.dim());
    values
        .iter()
        .zip(vectors.columns())
        .map(|(&lambda, v)| {
            op.apply(v, av.view_mut());
            av.iter()
                .zip(v.iter())
                .map(|(a, x)| (a - lambda * x).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Residual bound `‖Av − λv‖` in eV.
    pub tol: f64,
    pub block_size: usize,
    /// Basis size before a restart; `None` picks one from `k`.
    pub max_basis: Option<usize>,
    pub max_matvecs: usize,
    pub seed: u64,
    /// Operators up to this dimension are diagonalized densely by [`solve`].
    pub dense_threshold: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            block_size: 4,
            max_basis: None,
            max_matvecs: 200_000,
            seed: 20_240_601,
            dense_threshold: 4000,
        }
    }
}

/// Lowest `k` pairs, densely for small operators and by Lanczos otherwise.
pub fn solve(op: &dyn LinearOperator, k: usize, opts: &SolverOptions) -> Result<EigenResult> {
    if k == 0 || k > op.dim() {
        return Err(Error::TooManyPairs {
            requested: k,
            dim: op.dim(),
        });
    }
    if op.dim() <= opts.dense_threshold {
        let m = op.to_dense().unwrap_or_else(|| assemble(op));
        solve_dense_lowest(&m, k)
    } else {
        solve_lowest(op, k, opts)
    }
}
