//! Grid Hamiltonians as matrix-free operators.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayViewMut1};

use crate::eigen::{EigenResult, LinearOperator};
use crate::error::{Error, Result};
use crate::field::{ScalarField, TwoComponentField, VibronicState};
use crate::grid::ProductGrid;
use crate::model::{diabatic_fields, DiabaticFields, ModelParams};

/// Two-state Hamiltonian `T ⊗ 1 + V(Q)` acting on stacked `[χ₁; χ₂]` vectors.
pub struct VibronicHamiltonian<'g> {
    grid: &'g ProductGrid,
    potential: DiabaticFields,
}

impl<'g> VibronicHamiltonian<'g> {
    pub fn new(params: &ModelParams, grid: &'g ProductGrid) -> Self {
        Self::from_fields(grid, diabatic_fields(params, grid))
    }

    pub fn from_fields(grid: &'g ProductGrid, potential: DiabaticFields) -> Self {
        Self { grid, potential }
    }

    pub fn grid(&self) -> &ProductGrid {
        self.grid
    }

    pub fn potential(&self) -> &DiabaticFields {
        &self.potential
    }
}

impl LinearOperator for VibronicHamiltonian<'_> {
    fn dim(&self) -> usize {
        2 * self.grid.total_size()
    }

    fn apply(&self, x: ArrayView1<'_, f64>, mut y: ArrayViewMut1<'_, f64>) {
        let n = self.grid.total_size();
        let (x1, x2) = x.split_at(ndarray::Axis(0), n);
        let (mut y1, mut y2) = y.view_mut().split_at(ndarray::Axis(0), n);
        self.grid.apply_kinetic(x1, y1.view_mut());
        self.grid.apply_kinetic(x2, y2.view_mut());
        let v = &self.potential;
        for i in 0..n {
            y1[i] += v.v11[i] * x1[i] + v.v12[i] * x2[i];
            y2[i] += v.v12[i] * x1[i] + v.v22[i] * x2[i];
        }
    }

    fn to_dense(&self) -> Option<Array2<f64>> {
        let n = self.grid.total_size();
        let t = self.grid.kinetic_dense();
        let mut h = Array2::zeros((2 * n, 2 * n));
        h.slice_mut(s![..n, ..n]).assign(&t);
        h.slice_mut(s![n.., n..]).assign(&t);
        for i in 0..n {
            h[[i, i]] += self.potential.v11[i];
            h[[n + i, n + i]] += self.potential.v22[i];
            h[[i, n + i]] = self.potential.v12[i];
            h[[n + i, i]] = self.potential.v12[i];
        }
        Some(h)
    }
}

/// Single-surface nuclear Hamiltonian `T + V(Q)`.
pub struct SurfaceHamiltonian<'g> {
    grid: &'g ProductGrid,
    potential: Array1<f64>,
}

impl<'g> SurfaceHamiltonian<'g> {
    pub fn new(grid: &'g ProductGrid, potential: Array1<f64>) -> Result<Self> {
        if potential.len() != grid.total_size() {
            return Err(Error::ShapeMismatch {
                expected: grid.total_size(),
                actual: potential.len(),
            });
        }
        Ok(Self { grid, potential })
    }

    pub fn potential(&self) -> &Array1<f64> {
        &self.potential
    }
}

impl LinearOperator for SurfaceHamiltonian<'_> {
    fn dim(&self) -> usize {
        self.grid.total_size()
    }

    fn apply(&self, x: ArrayView1<'_, f64>, mut y: ArrayViewMut1<'_, f64>) {
        self.grid.apply_kinetic(x, y.view_mut());
        y.zip_mut_with(&(&self.potential * &x), |a, b| *a += b);
    }

    fn to_dense(&self) -> Option<Array2<f64>> {
        let mut h = self.grid.kinetic_dense();
        for (i, v) in self.potential.iter().enumerate() {
            h[[i, i]] += v;
        }
        Some(h)
    }
}

/// `H χ` for a two-component field.
pub fn apply_vibronic_hamiltonian(
    params: &ModelParams,
    grid: &ProductGrid,
    state: &TwoComponentField,
) -> Result<TwoComponentField> {
    if state.chi2.len() != state.chi1.len() || state.len() != grid.total_size() {
        return Err(Error::ShapeMismatch {
            expected: grid.total_size(),
            actual: state.chi1.len().max(state.chi2.len()),
        });
    }
    let h = VibronicHamiltonian::new(params, grid);
    let x = state.stacked();
    let mut y = Array1::zeros(x.len());
    h.apply(x.view(), y.view_mut());
    Ok(TwoComponentField::from_stacked(y.view()))
}

/// Converts unit eigenvectors of a two-state operator into quadrature-normalized states.
pub fn vibronic_states(result: &EigenResult, grid: &ProductGrid) -> Vec<VibronicState> {
    let scale = 1.0 / grid.cell_volume().sqrt();
    result
        .values
        .iter()
        .zip(result.vectors.columns())
        .map(|(&energy, v)| VibronicState {
            energy,
            field: TwoComponentField::from_stacked((&v * scale).view()),
        })
        .collect()
}

/// Converts unit eigenvectors of a single-surface operator into quadrature-normalized fields.
pub fn surface_states(result: &EigenResult, grid: &ProductGrid) -> Vec<ScalarField> {
    let scale = 1.0 / grid.cell_volume().sqrt();
    result
        .vectors
        .columns()
        .into_iter()
        .map(|v| ScalarField::new(&v * scale))
        .collect()
}
