//! Linear vibronic coupling model of two diabatic states and up to two modes.
//!
//! ```text
//! V₀   = (ω_x/2) Q_x² + (ω_y/2) Q_y²
//! v11  = V₀ + E₁ + κ₁ Q_x
//! v22  = V₀ + E₂ + κ₂ Q_x
//! v12  = λ Q_y          (two-mode model)
//!      = λ              (one-mode model, constant coupling)
//! ```
//!
//! Energies are in eV and coordinates are dimensionless.

use std::f64::consts::PI;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::ProductGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    /// One mode (`Q_x`), coordinate-independent off-diagonal element.
    ConstantLambda,
    /// Two modes, off-diagonal element `λ Q_y`.
    LinearInQy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub e1: f64,
    pub e2: f64,
    pub omega_x: f64,
    pub omega_y: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub lambda: f64,
    pub coupling: CouplingKind,
}

impl ModelParams {
    /// Two-mode butatriene model.
    pub fn butatriene() -> Self {
        Self {
            e1: 9.45,
            e2: 9.85,
            omega_x: 0.2578,
            omega_y: 0.0913,
            kappa1: -0.2121,
            kappa2: 0.2546,
            lambda: -0.3182,
            coupling: CouplingKind::LinearInQy,
        }
    }

    /// Tuning mode only, with a constant coupling of 0.05 eV.
    pub fn butatriene_1d() -> Self {
        Self {
            lambda: 0.05,
            coupling: CouplingKind::ConstantLambda,
            ..Self::butatriene()
        }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    /// Number of nuclear modes.
    pub fn ndim(&self) -> usize {
        match self.coupling {
            CouplingKind::ConstantLambda => 1,
            CouplingKind::LinearInQy => 2,
        }
    }

    /// Vibrational quanta per mode, `Q_x` first.
    pub fn omegas(&self) -> Vec<f64> {
        match self.coupling {
            CouplingKind::ConstantLambda => vec![self.omega_x],
            CouplingKind::LinearInQy => vec![self.omega_x, self.omega_y],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.e1,
            self.e2,
            self.omega_x,
            self.omega_y,
            self.kappa1,
            self.kappa2,
            self.lambda,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }
        if self.omega_x <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "omega_x must be positive, got {}",
                self.omega_x
            )));
        }
        if self.coupling == CouplingKind::LinearInQy && self.omega_y <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "omega_y must be positive when the coupling mode is active, got {}",
                self.omega_y
            )));
        }
        Ok(())
    }
}

/// Nuclear configuration. `qy` is ignored by one-mode models.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NuclearPoint {
    pub qx: f64,
    pub qy: f64,
}

impl NuclearPoint {
    pub fn new(qx: f64, qy: f64) -> Self {
        Self { qx, qy }
    }
}

/// Symmetric 2×2 potential matrix at one nuclear point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiabaticMatrix {
    pub v11: f64,
    pub v12: f64,
    pub v22: f64,
}

impl DiabaticMatrix {
    pub fn trace(&self) -> f64 {
        self.v11 + self.v22
    }

    pub fn det(&self) -> f64 {
        self.v11 * self.v22 - self.v12 * self.v12
    }

    /// `uᵀ M w`
    pub fn sandwich(&self, u: [f64; 2], w: [f64; 2]) -> f64 {
        u[0] * (self.v11 * w[0] + self.v12 * w[1]) + u[1] * (self.v12 * w[0] + self.v22 * w[1])
    }

    /// Eigenvalues and the lower-state mixing angle.
    pub fn adiabatic(&self) -> AdiabaticPoint {
        let mean = 0.5 * (self.v11 + self.v22);
        let a = self.v11 - self.v22;
        // canonicalize -0.0 so the branch on v12 = 0 lines is fixed
        let b = 2.0 * self.v12 + 0.0;
        let half_gap = (0.25 * a * a + self.v12 * self.v12).sqrt();
        let scale = self.v11.abs() + self.v22.abs();
        let mixing_angle = if half_gap <= f64::EPSILON * scale {
            None
        } else {
            Some(0.5 * (b.atan2(a) - PI))
        };
        AdiabaticPoint {
            lower: mean - half_gap,
            upper: mean + half_gap,
            mixing_angle,
        }
    }
}

/// Adiabatic energies at one point. The angle is `None` at an exact
/// degeneracy, where the adiabatic states are not defined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdiabaticPoint {
    pub lower: f64,
    pub upper: f64,
    pub mixing_angle: Option<f64>,
}

pub fn eval_diabatic(params: &ModelParams, q: NuclearPoint) -> DiabaticMatrix {
    let (v0, v12) = match params.coupling {
        CouplingKind::ConstantLambda => (0.5 * params.omega_x * q.qx * q.qx, params.lambda),
        CouplingKind::LinearInQy => (
            0.5 * params.omega_x * q.qx * q.qx + 0.5 * params.omega_y * q.qy * q.qy,
            params.lambda * q.qy,
        ),
    };
    DiabaticMatrix {
        v11: v0 + params.e1 + params.kappa1 * q.qx,
        v12,
        v22: v0 + params.e2 + params.kappa2 * q.qx,
    }
}

/// Partial derivatives of the potential matrix along `Q_x` and `Q_y`.
pub fn diabatic_gradient(params: &ModelParams, q: NuclearPoint) -> [DiabaticMatrix; 2] {
    let dx = DiabaticMatrix {
        v11: params.omega_x * q.qx + params.kappa1,
        v12: 0.0,
        v22: params.omega_x * q.qx + params.kappa2,
    };
    let dy = match params.coupling {
        CouplingKind::ConstantLambda => DiabaticMatrix {
            v11: 0.0,
            v12: 0.0,
            v22: 0.0,
        },
        CouplingKind::LinearInQy => DiabaticMatrix {
            v11: params.omega_y * q.qy,
            v12: params.lambda,
            v22: params.omega_y * q.qy,
        },
    };
    [dx, dy]
}

pub fn eval_adiabatic(params: &ModelParams, q: NuclearPoint) -> AdiabaticPoint {
    eval_diabatic(params, q).adiabatic()
}

/// `S(γ) = [[cos γ, −sin γ], [sin γ, cos γ]]`. Column 0 holds the diabatic
/// components of the lower adiabatic state, column 1 those of the upper.
pub fn adiabatic_to_diabatic(gamma: f64) -> [[f64; 2]; 2] {
    let (s, c) = gamma.sin_cos();
    [[c, -s], [s, c]]
}

/// Closed-form `∂γ/∂Q_x, ∂γ/∂Q_y`; `None` at a degeneracy.
pub fn mixing_angle_gradient(params: &ModelParams, q: NuclearPoint) -> Option<[f64; 2]> {
    let v = eval_diabatic(params, q);
    v.adiabatic().mixing_angle?;
    let a = v.v11 - v.v22;
    let b = 2.0 * v.v12;
    let r2 = a * a + b * b;
    let [dx, dy] = diabatic_gradient(params, q);
    let component = |d: &DiabaticMatrix| {
        let da = d.v11 - d.v22;
        let db = 2.0 * d.v12;
        (a * db - b * da) / (2.0 * r2)
    };
    Some([component(&dx), component(&dy)])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConicalIntersection {
    pub point: NuclearPoint,
    pub energy: f64,
}

pub fn locate_conical_intersection(params: &ModelParams) -> Result<ConicalIntersection> {
    if params.coupling != CouplingKind::LinearInQy {
        return Err(Error::NoIntersection(
            "the one-mode constant-coupling model has an avoided crossing".into(),
        ));
    }
    let dk = params.kappa2 - params.kappa1;
    if dk == 0.0 {
        return Err(Error::NoIntersection(
            "kappa1 = kappa2, the diabatic surfaces never cross".into(),
        ));
    }
    let point = NuclearPoint::new((params.e1 - params.e2) / dk, 0.0);
    let energy = eval_diabatic(params, point).v11;
    Ok(ConicalIntersection { point, energy })
}

/// Diabatic matrix elements sampled on a grid.
#[derive(Clone, Debug)]
pub struct DiabaticFields {
    pub v11: Array1<f64>,
    pub v12: Array1<f64>,
    pub v22: Array1<f64>,
}

pub fn diabatic_fields(params: &ModelParams, grid: &ProductGrid) -> DiabaticFields {
    let n = grid.total_size();
    let mut out = DiabaticFields {
        v11: Array1::zeros(n),
        v12: Array1::zeros(n),
        v22: Array1::zeros(n),
    };
    for (i, q) in grid.points().enumerate() {
        let v = eval_diabatic(params, q);
        out.v11[i] = v.v11;
        out.v12[i] = v.v12;
        out.v22[i] = v.v22;
    }
    out
}

/// Adiabatic surfaces and mixing angle sampled on a grid; the angle field is
/// masked at exact degeneracies.
#[derive(Clone, Debug)]
pub struct AdiabaticFields {
    pub lower: Array1<f64>,
    pub upper: Array1<f64>,
    pub gamma: ScalarField,
}

pub fn adiabatic_fields(params: &ModelParams, grid: &ProductGrid) -> AdiabaticFields {
    let n = grid.total_size();
    let mut lower = Array1::zeros(n);
    let mut upper = Array1::zeros(n);
    let mut gamma = Array1::zeros(n);
    let mut defined = vec![true; n];
    for (i, q) in grid.points().enumerate() {
        let p = eval_adiabatic(params, q);
        lower[i] = p.lower;
        upper[i] = p.upper;
        match p.mixing_angle {
            Some(g) => gamma[i] = g,
            None => defined[i] = false,
        }
    }
    AdiabaticFields {
        lower,
        upper,
        gamma: ScalarField::with_mask(gamma, defined),
    }
}

/// `Σ_α (ω_α/2)(∂γ/∂Q_α)²` by finite differences of a sampled angle field.
///
/// Differences are taken modulo π, so a sign cut of `S` inside the field does
/// not produce a spurious jump. Points where the angle or any stencil neighbor
/// is undefined get `cap`, and all values are clipped to `cap`.
pub fn diagonal_correction(grid: &ProductGrid, gamma: &ScalarField, cap: f64) -> Result<ScalarField> {
    let mut total = Array1::<f64>::zeros(grid.total_size());
    for (axis, ax) in grid.axes().iter().enumerate() {
        let d = grid.angle_gradient(gamma, axis, PI)?;
        total.zip_mut_with(&d.values, |t, g| *t += 0.5 * ax.omega() * g * g);
    }
    let defined = stencil_mask(grid, gamma);
    for (t, ok) in total.iter_mut().zip(&defined) {
        *t = if *ok { t.min(cap) } else { cap };
    }
    Ok(ScalarField::with_mask(total, defined))
}

fn stencil_mask(grid: &ProductGrid, field: &ScalarField) -> Vec<bool> {
    let n = grid.total_size();
    let Some(src) = field.defined.as_ref() else {
        return vec![true; n];
    };
    let (nx, ny) = grid.shape();
    let mut out = src.clone();
    for (i, ok) in src.iter().enumerate() {
        if *ok {
            continue;
        }
        let (ix, iy) = (i / ny, i % ny);
        for (dx, dy) in [(-2i64, 0i64), (-1, 0), (1, 0), (2, 0), (0, -2), (0, -1), (0, 1), (0, 2)] {
            let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
            if jx >= 0 && jy >= 0 && (jx as usize) < nx && (jy as usize) < ny {
                out[jx as usize * ny + jy as usize] = false;
            }
        }
    }
    out
}

/// Closed-form diagonal correction, clipped to `cap`; undefined (and set to
/// `cap`) only at exact degeneracies.
pub fn diagonal_correction_exact(params: &ModelParams, grid: &ProductGrid, cap: f64) -> ScalarField {
    let omegas: Vec<f64> = grid.axes().iter().map(|a| a.omega()).collect();
    let mut values = Array1::zeros(grid.total_size());
    let mut defined = vec![true; grid.total_size()];
    for (i, q) in grid.points().enumerate() {
        match mixing_angle_gradient(params, q) {
            Some(g) => {
                let v: f64 = omegas.iter().zip(g).map(|(w, d)| 0.5 * w * d * d).sum();
                values[i] = v.min(cap);
            }
            None => {
                values[i] = cap;
                defined[i] = false;
            }
        }
    }
    ScalarField::with_mask(values, defined)
}

/// Removes jumps of `period` between consecutive entries.
pub fn unwrap_angles(values: &mut [f64], period: f64) {
    let mut offset = 0.0;
    for i in 1..values.len() {
        let raw = values[i] + offset;
        let d = raw - values[i - 1];
        offset -= period * (d / period).round();
        values[i] += offset;
    }
}
