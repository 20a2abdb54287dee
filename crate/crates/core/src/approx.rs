//! Reference Hamiltonians and overlap matrices between eigenfunction families.

use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1};
use serde::{Deserialize, Serialize};

use crate::eigen::{clusters, solve, EigenResult, LinearOperator, SolverOptions, DEGENERACY_TOL};
use crate::error::{Error, Result};
use crate::factorize::{exact_potential_from_components, FactorizeOptions};
use crate::field::{ScalarField, TwoComponentField};
use crate::grid::ProductGrid;
use crate::hamiltonian::{surface_states, vibronic_states, SurfaceHamiltonian, VibronicHamiltonian};
use crate::model::{
    adiabatic_fields, diabatic_fields, diabatic_gradient, diagonal_correction_exact, eval_adiabatic,
    mixing_angle_gradient, AdiabaticFields, ModelParams,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    DiabaticLambdaZero,
    Adiabatic,
    BornHuang,
}

impl ReferenceKind {
    pub const ALL: [ReferenceKind; 3] = [Self::DiabaticLambdaZero, Self::Adiabatic, Self::BornHuang];

    pub fn label(self) -> &'static str {
        match self {
            Self::DiabaticLambdaZero => "H[lambda=0]",
            Self::Adiabatic => "H_ad",
            Self::BornHuang => "H_BH",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    Lower,
    Upper,
}

/// Operator of a reference Hamiltonian.
pub enum ReferenceOperator<'g> {
    TwoState(VibronicHamiltonian<'g>),
    Single(SurfaceHamiltonian<'g>),
}

impl LinearOperator for ReferenceOperator<'_> {
    fn dim(&self) -> usize {
        match self {
            Self::TwoState(h) => h.dim(),
            Self::Single(h) => h.dim(),
        }
    }

    fn apply(&self, x: ArrayView1<'_, f64>, y: ArrayViewMut1<'_, f64>) {
        match self {
            Self::TwoState(h) => h.apply(x, y),
            Self::Single(h) => h.apply(x, y),
        }
    }

    fn to_dense(&self) -> Option<Array2<f64>> {
        match self {
            Self::TwoState(h) => h.to_dense(),
            Self::Single(h) => h.to_dense(),
        }
    }
}

/// Builds a reference operator. `surface` is ignored for the diabatic
/// reference; `cap` bounds the diagonal correction near the intersection.
pub fn build_reference<'g>(
    kind: ReferenceKind,
    params: &ModelParams,
    grid: &'g ProductGrid,
    surface: Surface,
    cap: f64,
) -> Result<ReferenceOperator<'g>> {
    match kind {
        ReferenceKind::DiabaticLambdaZero => {
            let mut v = diabatic_fields(params, grid);
            v.v12.fill(0.0);
            Ok(ReferenceOperator::TwoState(VibronicHamiltonian::from_fields(grid, v)))
        }
        ReferenceKind::Adiabatic | ReferenceKind::BornHuang => {
            let ad = adiabatic_fields(params, grid);
            let mut v = match surface {
                Surface::Lower => ad.lower,
                Surface::Upper => ad.upper,
            };
            if kind == ReferenceKind::BornHuang {
                v += &diagonal_correction_exact(params, grid, cap).values;
            }
            Ok(ReferenceOperator::Single(SurfaceHamiltonian::new(grid, v)?))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceOptions {
    /// Merge upper-surface states into the adiabatic families.
    pub include_upper: bool,
    /// Ceiling for the diagonal correction, eV.
    pub cap: f64,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            include_upper: true,
            cap: crate::factorize::DEFAULT_CAP,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReferenceState {
    pub energy: f64,
    /// `None` for the diabatic reference.
    pub surface: Option<Surface>,
    /// Single-component eigenfunction of an adiabatic-type reference.
    pub raw: Option<ScalarField>,
    pub diabatic: TwoComponentField,
}

#[derive(Clone, Debug)]
pub struct ReferenceFamily {
    pub kind: ReferenceKind,
    pub states: Vec<ReferenceState>,
}

impl ReferenceFamily {
    pub fn energies(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.energy).collect()
    }

    pub fn diabatic_family(&self) -> Family {
        Family::diabatic(
            self.kind.label(),
            self.energies(),
            self.states.iter().map(|s| s.diabatic.clone()).collect(),
        )
    }

    /// Renormalized moduli of the single-component functions.
    pub fn modulus_family(&self, grid: &ProductGrid) -> Result<Family> {
        let raw: Vec<ScalarField> = self.states.iter().filter_map(|s| s.raw.clone()).collect();
        if raw.len() != self.states.len() {
            return Err(Error::RepresentationMismatch(format!(
                "{} has no single-component functions",
                self.kind.label()
            )));
        }
        Ok(Family::amplitude(
            &format!("|{}|", self.kind.label()),
            self.energies(),
            modulus_family(&raw, grid)?,
        ))
    }
}

/// Lowest `k` states of a reference Hamiltonian, in the diabatic representation.
pub fn reference_family(
    kind: ReferenceKind,
    params: &ModelParams,
    grid: &ProductGrid,
    k: usize,
    opts: &ReferenceOptions,
    solver: &SolverOptions,
) -> Result<ReferenceFamily> {
    if kind == ReferenceKind::DiabaticLambdaZero {
        let op = build_reference(kind, params, grid, Surface::Lower, opts.cap)?;
        let r = solve(&op, k, solver)?;
        let states = vibronic_states(&r, grid)
            .into_iter()
            .map(|s| ReferenceState {
                energy: s.energy,
                surface: None,
                raw: None,
                diabatic: s.field,
            })
            .collect();
        return Ok(ReferenceFamily { kind, states });
    }

    let ad = adiabatic_fields(params, grid);
    let lower = solve(&build_reference(kind, params, grid, Surface::Lower, opts.cap)?, k, solver)?;
    let mut states = surface_family(&lower, Surface::Lower, &ad, grid);
    if opts.include_upper {
        let op = build_reference(kind, params, grid, Surface::Upper, opts.cap)?;
        let ceiling = lower.values[k - 1];
        let mut ku = k.min(8);
        let upper = loop {
            let r = solve(&op, ku, solver)?;
            if ku == k || r.values[ku - 1] >= ceiling {
                break r;
            }
            ku = (2 * ku).min(k);
        };
        states.extend(surface_family(&upper, Surface::Upper, &ad, grid));
        states.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        states.truncate(k);
    }
    Ok(ReferenceFamily { kind, states })
}

fn surface_family(r: &EigenResult, surface: Surface, ad: &AdiabaticFields, grid: &ProductGrid) -> Vec<ReferenceState> {
    surface_states(r, grid)
        .into_iter()
        .zip(&r.values)
        .map(|(chi, &energy)| ReferenceState {
            energy,
            surface: Some(surface),
            diabatic: to_diabatic_components(surface, &chi, &ad.gamma),
            raw: Some(chi),
        })
        .collect()
}

/// `S(Q)` applied to a single-surface function: the lower surface maps to
/// `(cos γ, sin γ) χ`, the upper to `(−sin γ, cos γ) χ`. Points where `γ` is
/// undefined get zero components.
pub fn to_diabatic_components(surface: Surface, chi: &ScalarField, gamma: &ScalarField) -> TwoComponentField {
    let n = chi.len();
    let mut c1 = Array1::zeros(n);
    let mut c2 = Array1::zeros(n);
    for i in 0..n {
        if !gamma.is_defined(i) {
            continue;
        }
        let (s, c) = gamma.values[i].sin_cos();
        let (a, b) = match surface {
            Surface::Lower => (c, s),
            Surface::Upper => (-s, c),
        };
        c1[i] = a * chi.values[i];
        c2[i] = b * chi.values[i];
    }
    TwoComponentField::new(c1, c2)
}

/// Pointwise absolute values, renormalized on the grid.
pub fn modulus_family(fields: &[ScalarField], grid: &ProductGrid) -> Result<Vec<ScalarField>> {
    fields
        .iter()
        .map(|f| {
            let m = ScalarField::new(f.values.mapv(f64::abs));
            let norm = grid.norm(&m)?;
            Ok(ScalarField::new(m.values / norm))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub enum FamilyVectors {
    Diabatic(Vec<TwoComponentField>),
    Amplitude(Vec<ScalarField>),
}

/// Labeled set of eigenfunctions with their energies.
#[derive(Clone, Debug)]
pub struct Family {
    pub label: String,
    pub energies: Vec<f64>,
    pub vectors: FamilyVectors,
}

impl Family {
    pub fn diabatic(label: &str, energies: Vec<f64>, fields: Vec<TwoComponentField>) -> Self {
        Self {
            label: label.to_string(),
            energies,
            vectors: FamilyVectors::Diabatic(fields),
        }
    }

    pub fn amplitude(label: &str, energies: Vec<f64>, fields: Vec<ScalarField>) -> Self {
        Self {
            label: label.to_string(),
            energies,
            vectors: FamilyVectors::Amplitude(fields),
        }
    }

    pub fn len(&self) -> usize {
        match &self.vectors {
            FamilyVectors::Diabatic(v) => v.len(),
            FamilyVectors::Amplitude(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.len());
        Self {
            label: self.label.clone(),
            energies: self.energies[..k].to_vec(),
            vectors: match &self.vectors {
                FamilyVectors::Diabatic(v) => FamilyVectors::Diabatic(v[..k].to_vec()),
                FamilyVectors::Amplitude(v) => FamilyVectors::Amplitude(v[..k].to_vec()),
            },
        }
    }
}

/// Quadrature overlaps `⟨a_m, b_n⟩` with degeneracy clusters of both families.
#[derive(Clone, Debug)]
pub struct OverlapMatrix {
    pub row_label: String,
    pub col_label: String,
    pub entries: Array2<f64>,
    pub row_clusters: Vec<Vec<usize>>,
    pub col_clusters: Vec<Vec<usize>>,
}

/// Best-matching column cluster of one row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowMatch {
    pub row: usize,
    pub columns: Vec<usize>,
    /// Norm of the row's projection onto the column cluster.
    pub value: f64,
    /// The matched cluster contains a member of the row's own cluster.
    pub diagonal: bool,
}

pub fn overlap_matrix(a: &Family, b: &Family, grid: &ProductGrid) -> Result<OverlapMatrix> {
    overlap_matrix_with_tol(a, b, grid, DEGENERACY_TOL)
}

pub fn overlap_matrix_with_tol(a: &Family, b: &Family, grid: &ProductGrid, tol: f64) -> Result<OverlapMatrix> {
    let mut entries = Array2::zeros((a.len(), b.len()));
    match (&a.vectors, &b.vectors) {
        (FamilyVectors::Diabatic(x), FamilyVectors::Diabatic(y)) => {
            for (i, u) in x.iter().enumerate() {
                for (j, v) in y.iter().enumerate() {
                    entries[[i, j]] = grid.inner_product_two(u, v)?;
                }
            }
        }
        (FamilyVectors::Amplitude(x), FamilyVectors::Amplitude(y)) => {
            for (i, u) in x.iter().enumerate() {
                for (j, v) in y.iter().enumerate() {
                    entries[[i, j]] = grid.inner_product(u, v)?;
                }
            }
        }
        _ => {
            return Err(Error::RepresentationMismatch(format!(
                "{} and {}",
                a.label, b.label
            )))
        }
    }
    Ok(OverlapMatrix {
        row_label: a.label.clone(),
        col_label: b.label.clone(),
        entries,
        row_clusters: clusters(&a.energies, tol),
        col_clusters: clusters(&b.energies, tol),
    })
}

impl OverlapMatrix {
    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    /// `|⟨a_i, b_i⟩|` for every index present in both families.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows().min(self.ncols()))
            .map(|i| self.entries[[i, i]].abs())
            .collect()
    }

    /// Norm of row `row` projected onto a column cluster.
    pub fn cluster_overlap(&self, row: usize, cluster: &[usize]) -> f64 {
        cluster
            .iter()
            .map(|&j| self.entries[[row, j]].powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn best_match(&self, row: usize) -> RowMatch {
        let (columns, value) = self
            .col_clusters
            .iter()
            .map(|c| (c.clone(), self.cluster_overlap(row, c)))
            .fold((Vec::new(), -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let own = self.row_clusters.iter().find(|c| c.contains(&row));
        let diagonal = own.map_or(columns.contains(&row), |c| c.iter().any(|i| columns.contains(i)));
        RowMatch {
            row,
            columns,
            value,
            diagonal,
        }
    }

    pub fn summary(&self) -> Vec<RowMatch> {
        (0..self.nrows()).map(|m| self.best_match(m)).collect()
    }

    /// Fraction of rows among the first `rows` whose best match is diagonal.
    pub fn diagonal_fraction(&self, rows: usize) -> f64 {
        let rows = rows.min(self.nrows());
        if rows == 0 {
            return 0.0;
        }
        let hits = (0..rows).filter(|&m| self.best_match(m).diagonal).count();
        hits as f64 / rows as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub max_deviation: f64,
    pub points: usize,
    pub excluded: usize,
}

/// Compares the exact potential built from the adiabatic coefficients
/// `(S₁₁, S₂₁)` with the lower surface plus the diagonal correction.
///
/// The coefficient derivatives come from eigenvector perturbation theory,
/// the correction from the closed-form angle gradient. Points within
/// `1e-6` eV of a degeneracy are excluded.
pub fn born_huang_identity_check(params: &ModelParams, grid: &ProductGrid) -> Result<IdentityCheck> {
    let n = grid.total_size();
    let ndim = grid.ndim();
    let omegas: Vec<f64> = grid.axes().iter().map(|a| a.omega()).collect();
    let v = diabatic_fields(params, grid);
    let mut c1 = Array1::zeros(n);
    let mut c2 = Array1::zeros(n);
    let mut g1 = vec![Array1::zeros(n); ndim];
    let mut g2 = vec![Array1::zeros(n); ndim];
    let mut reference = Array1::zeros(n);
    let mut keep = vec![false; n];
    for (i, q) in grid.points().enumerate() {
        let ad = eval_adiabatic(params, q);
        let (Some(gamma), Some(dgamma)) = (ad.mixing_angle, mixing_angle_gradient(params, q)) else {
            continue;
        };
        if ad.upper - ad.lower < 1e-6 {
            continue;
        }
        keep[i] = true;
        let (s, c) = gamma.sin_cos();
        c1[i] = c;
        c2[i] = s;
        let dv = diabatic_gradient(params, q);
        for a in 0..ndim {
            let coupling = dv[a].sandwich([-s, c], [c, s]);
            let d = coupling / (ad.lower - ad.upper);
            g1[a][i] = -s * d;
            g2[a][i] = c * d;
        }
        reference[i] = ad.lower
            + omegas
                .iter()
                .zip(dgamma)
                .map(|(w, d)| 0.5 * w * d * d)
                .sum::<f64>();
    }
    let pieces = exact_potential_from_components(
        &c1,
        &c2,
        &g1,
        &g2,
        &omegas,
        &v,
        &FactorizeOptions {
            cap: f64::INFINITY,
            floor: 0.0,
        },
    );
    let mut max_deviation = 0.0f64;
    for i in (0..n).filter(|&i| keep[i]) {
        max_deviation = max_deviation.max((pieces.exact[i] - reference[i]).abs());
    }
    let points = keep.iter().filter(|k| **k).count();
    Ok(IdentityCheck {
        max_deviation,
        points,
        excluded: n - points,
    })
}
