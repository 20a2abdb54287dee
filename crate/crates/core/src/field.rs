//! Grid functions.

use ndarray::{Array1, ArrayView1};

/// Real function sampled on every point of a product grid, with an optional
/// per-point validity flag.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub values: Array1<f64>,
    pub defined: Option<Vec<bool>>,
}

impl ScalarField {
    pub fn new(values: Array1<f64>) -> Self {
        Self {
            values,
            defined: None,
        }
    }

    pub fn with_mask(values: Array1<f64>, defined: Vec<bool>) -> Self {
        debug_assert_eq!(values.len(), defined.len());
        Self {
            values,
            defined: Some(defined),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_defined(&self, index: usize) -> bool {
        self.defined.as_ref().is_none_or(|d| d[index])
    }

    pub fn view(&self) -> ArrayView1<'_, f64> {
        self.values.view()
    }

    /// Restriction to the given flat indices; the mask follows along.
    pub fn select(&self, indices: &[usize]) -> ScalarField {
        let values = indices.iter().map(|&i| self.values[i]).collect();
        let defined = self
            .defined
            .as_ref()
            .map(|d| indices.iter().map(|&i| d[i]).collect());
        ScalarField { values, defined }
    }
}

/// Two nuclear components on the same grid, one per diabatic state.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoComponentField {
    pub chi1: Array1<f64>,
    pub chi2: Array1<f64>,
}

impl TwoComponentField {
    pub fn new(chi1: Array1<f64>, chi2: Array1<f64>) -> Self {
        debug_assert_eq!(chi1.len(), chi2.len());
        Self { chi1, chi2 }
    }

    /// Splits a stacked `[χ₁; χ₂]` vector.
    pub fn from_stacked(v: ArrayView1<'_, f64>) -> Self {
        let n = v.len() / 2;
        Self {
            chi1: v.slice(ndarray::s![..n]).to_owned(),
            chi2: v.slice(ndarray::s![n..]).to_owned(),
        }
    }

    pub fn stacked(&self) -> Array1<f64> {
        let mut out = Array1::zeros(2 * self.len());
        let n = self.len();
        out.slice_mut(ndarray::s![..n]).assign(&self.chi1);
        out.slice_mut(ndarray::s![n..]).assign(&self.chi2);
        out
    }

    pub fn len(&self) -> usize {
        self.chi1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi1.is_empty()
    }

    /// Pointwise `χ₁² + χ₂²`.
    pub fn density(&self) -> Array1<f64> {
        &self.chi1 * &self.chi1 + &self.chi2 * &self.chi2
    }
}

/// Vibronic eigenpair. Components are quadrature-normalized grid functions:
/// `Σ (χ₁² + χ₂²) ΔV = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct VibronicState {
    pub energy: f64,
    pub field: TwoComponentField,
}
