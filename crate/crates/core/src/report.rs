//! Run reports and their serialization.
//!
//! JSON numbers use the shortest representation that parses back to the same
//! `f64`; CSV files likewise. Human-readable tables use six significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::approx::{IdentityCheck, OverlapMatrix, RowMatch};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{GridSpec, ProductGrid};
use crate::model::{ConicalIntersection, NuclearPoint};

/// Where a number came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub module: String,
    pub operation: String,
    pub config: String,
}

impl Source {
    pub fn new(module: &str, operation: &str, config: &str) -> Self {
        Self {
            module: module.into(),
            operation: operation.into(),
            config: config.into(),
        }
    }
}

/// Eigenvalues of one Hamiltonian, indexed by exact state; `None` where the
/// Hamiltonian has no matching state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyColumn {
    pub label: String,
    pub source: Source,
    pub values: Vec<Option<f64>>,
}

/// Overlap of each exact state with its counterpart of another Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapColumn {
    pub label: String,
    pub source: Source,
    pub values: Vec<Option<f64>>,
}

#[derive(Clone, Debug)]
pub struct OverlapTable {
    pub name: String,
    pub source: Source,
    pub matrix: OverlapMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizationSummary {
    pub state: usize,
    pub energy: f64,
    /// `⟨χ̄, (T + Ē) χ̄⟩` on the vibronic grid.
    pub rayleigh: f64,
    pub min_amplitude: f64,
    /// Largest `|c1² + c2² − 1|` over defined points.
    pub max_unit_error: f64,
    /// Largest `|c·χ̄·norm − χ|` over defined points.
    pub max_reconstruction_error: f64,
    pub min_spike: f64,
    pub raw_spike_max: f64,
    pub defined_points: usize,
    /// Diabatic surface (1 or 2) followed away from spikes, with the mean deviation.
    pub tracked_surface: Option<(usize, f64)>,
    pub verification: Option<VerificationSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub grid: Vec<GridSpec>,
    pub e0: f64,
    pub e1: Option<f64>,
    pub energy_gap: f64,
    pub amplitude_overlap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapStudyEntry {
    pub state: usize,
    pub cap: f64,
    pub e0: f64,
    /// `e0` minus the value at the configured cap.
    pub shift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub label: String,
    pub state: usize,
    pub base: f64,
    pub refined: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub factor: usize,
    pub base_grid: Vec<GridSpec>,
    pub refined_grid: Vec<GridSpec>,
    pub entries: Vec<ConvergenceEntry>,
}

impl ConvergenceReport {
    pub fn max_delta(&self) -> f64 {
        self.entries.iter().map(|e| e.delta.abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub config: String,
    pub ndim: usize,
    pub grid: Vec<GridSpec>,
    pub energy_table: Vec<EnergyColumn>,
    pub overlap_columns: Vec<OverlapColumn>,
    pub overlap_tables: Vec<OverlapTable>,
    pub factorization: Vec<FactorizationSummary>,
    pub cap_study: Vec<CapStudyEntry>,
    pub intersection: Option<ConicalIntersection>,
    pub identity: Option<IdentityCheck>,
    pub convergence: Option<ConvergenceReport>,
    /// Largest Lanczos or dense residual per Hamiltonian.
    pub residuals: Vec<(String, f64)>,
}

impl RunReport {
    pub fn energies(&self, label: &str) -> Option<&EnergyColumn> {
        self.energy_table.iter().find(|c| c.label == label)
    }

    pub fn overlaps(&self, label: &str) -> Option<&OverlapColumn> {
        self.overlap_columns.iter().find(|c| c.label == label)
    }

    pub fn overlap_table(&self, name: &str) -> Option<&OverlapTable> {
        self.overlap_tables.iter().find(|t| t.name == name)
    }
}

#[derive(Serialize)]
struct OverlapJson<'a> {
    name: &'a str,
    source: &'a Source,
    row_label: &'a str,
    col_label: &'a str,
    entries: Vec<Vec<f64>>,
    row_clusters: &'a [Vec<usize>],
    col_clusters: &'a [Vec<usize>],
    summary: Vec<RowMatch>,
}

fn overlap_json(t: &OverlapTable) -> OverlapJson<'_> {
    OverlapJson {
        name: &t.name,
        source: &t.source,
        row_label: &t.matrix.row_label,
        col_label: &t.matrix.col_label,
        entries: t.matrix.entries.outer_iter().map(|r| r.to_vec()).collect(),
        row_clusters: &t.matrix.row_clusters,
        col_clusters: &t.matrix.col_clusters,
        summary: t.matrix.summary(),
    }
}

#[derive(Serialize)]
struct ReportJson<'a> {
    config: &'a str,
    ndim: usize,
    grid: &'a [GridSpec],
    energy_table: &'a [EnergyColumn],
    overlap_columns: &'a [OverlapColumn],
    overlap_tables: Vec<OverlapJson<'a>>,
    factorization: &'a [FactorizationSummary],
    cap_study: &'a [CapStudyEntry],
    intersection: Option<&'a ConicalIntersection>,
    identity: Option<&'a IdentityCheck>,
    convergence: Option<&'a ConvergenceReport>,
    residuals: &'a [(String, f64)],
}

pub fn report_json(r: &RunReport) -> Result<String> {
    let j = ReportJson {
        config: &r.config,
        ndim: r.ndim,
        grid: &r.grid,
        energy_table: &r.energy_table,
        overlap_columns: &r.overlap_columns,
        overlap_tables: r.overlap_tables.iter().map(overlap_json).collect(),
        factorization: &r.factorization,
        cap_study: &r.cap_study,
        intersection: r.intersection.as_ref(),
        identity: r.identity.as_ref(),
        convergence: r.convergence.as_ref(),
        residuals: &r.residuals,
    };
    Ok(serde_json::to_string_pretty(&j)?)
}

pub fn overlap_table_json(t: &OverlapTable) -> Result<String> {
    Ok(serde_json::to_string_pretty(&overlap_json(t))?)
}

/// Six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let decimals = (5 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

fn table<'a>(
    title: &str,
    columns: impl Iterator<Item = (&'a str, &'a [Option<f64>])> + Clone,
) -> String {
    let rows = columns.clone().map(|(_, v)| v.len()).max().unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = write!(out, "{:>4}", "n");
    for (label, _) in columns.clone() {
        let _ = write!(out, " {label:>14}");
    }
    out.push('\n');
    for n in 0..rows {
        let _ = write!(out, "{n:>4}");
        for (_, values) in columns.clone() {
            let cell = values.get(n).copied().flatten().map_or("--".to_string(), sig6);
            let _ = write!(out, " {cell:>14}");
        }
        out.push('\n');
    }
    out
}

/// Energy and overlap columns as fixed-width text.
pub fn human_tables(r: &RunReport) -> String {
    let mut out = table(
        &format!("Energies (eV), {}", r.config),
        r.energy_table.iter().map(|c| (c.label.as_str(), c.values.as_slice())),
    );
    if !r.overlap_columns.is_empty() {
        out.push('\n');
        out += &table(
            &format!("Overlaps with exact states, {}", r.config),
            r.overlap_columns.iter().map(|c| (c.label.as_str(), c.values.as_slice())),
        );
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldFormat {
    Csv,
    Json,
}

#[derive(Serialize, Deserialize)]
struct FieldRow {
    q_x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q_y: Option<f64>,
    value: f64,
    defined: u8,
}

#[derive(Serialize, Deserialize)]
struct FieldJson {
    ndim: usize,
    q_x: Vec<f64>,
    q_y: Option<Vec<f64>>,
    values: Vec<f64>,
    defined: Vec<bool>,
}

/// Writes a grid function. Masked points are kept and flagged by the
/// `defined` column.
pub fn export_field(field: &ScalarField, grid: &ProductGrid, path: &Path, format: FieldFormat) -> Result<()> {
    if field.len() != grid.total_size() {
        return Err(Error::ShapeMismatch {
            expected: grid.total_size(),
            actual: field.len(),
        });
    }
    ensure_parent(path)?;
    let two = grid.ndim() == 2;
    match format {
        FieldFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            for (i, q) in grid.points().enumerate() {
                w.serialize(FieldRow {
                    q_x: q.qx,
                    q_y: two.then_some(q.qy),
                    value: field.values[i],
                    defined: field.is_defined(i) as u8,
                })?;
            }
            w.flush()?;
        }
        FieldFormat::Json => {
            let pts: Vec<NuclearPoint> = grid.points().collect();
            let j = FieldJson {
                ndim: grid.ndim(),
                q_x: pts.iter().map(|p| p.qx).collect(),
                q_y: two.then(|| pts.iter().map(|p| p.qy).collect()),
                values: field.values.to_vec(),
                defined: (0..field.len()).map(|i| field.is_defined(i)).collect(),
            };
            fs::write(path, serde_json::to_string(&j)?)?;
        }
    }
    Ok(())
}

/// Reads a field written by [`export_field`], returning its points.
pub fn import_field(path: &Path, format: FieldFormat) -> Result<(Vec<NuclearPoint>, ScalarField)> {
    let (points, values, defined): (Vec<NuclearPoint>, Vec<f64>, Vec<bool>) = match format {
        FieldFormat::Csv => {
            let mut r = csv::Reader::from_path(path)?;
            let mut pts = Vec::new();
            let mut vals = Vec::new();
            let mut def = Vec::new();
            for row in r.deserialize() {
                let row: FieldRow = row?;
                pts.push(NuclearPoint::new(row.q_x, row.q_y.unwrap_or(0.0)));
                vals.push(row.value);
                def.push(row.defined != 0);
            }
            (pts, vals, def)
        }
        FieldFormat::Json => {
            let j: FieldJson = serde_json::from_str(&fs::read_to_string(path)?)?;
            let qy = j.q_y.unwrap_or_else(|| vec![0.0; j.q_x.len()]);
            let pts = j.q_x.iter().zip(&qy).map(|(x, y)| NuclearPoint::new(*x, *y)).collect();
            (pts, j.values, j.defined)
        }
    };
    let field = if defined.iter().all(|d| *d) {
        ScalarField::new(Array1::from(values))
    } else {
        ScalarField::with_mask(Array1::from(values), defined)
    };
    Ok((points, field))
}

/// Overlap matrix as `m,n,value` rows.
pub fn export_overlap_csv(m: &OverlapMatrix, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["m", "n", "value"])?;
    for ((i, j), v) in m.entries.indexed_iter() {
        w.write_record([i.to_string(), j.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text)?;
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(9.4878123), "9.48781");
        assert_eq!(sig6(10.77812), "10.7781");
        assert_eq!(sig6(0.0012345678), "0.00123457");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn three_point_field_gives_three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let g = ProductGrid::from_specs(&[GridSpec::new(-1.0, 1.0, 3, 1.0)]).unwrap();
        let f = ScalarField::new(Array1::from(vec![1.0, 2.0, 3.0]));
        let p = dir.path().join("f.csv");
        export_field(&f, &g, &p, FieldFormat::Csv).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next().unwrap(), "q_x,value,defined");
    }

    #[test]
    fn round_trip_keeps_full_precision_and_mask() {
        let dir = tempfile::tempdir().unwrap();
        let g = ProductGrid::from_specs(&[GridSpec::new(-2.0, 2.0, 4, 1.0), GridSpec::new(-1.0, 3.0, 3, 1.0)]).unwrap();
        let values = Array1::from_shape_fn(12, |i| (i as f64 * 0.7311).sin() / 3.0 + 1e-17 * i as f64);
        let mask: Vec<bool> = (0..12).map(|i| i % 5 != 0).collect();
        let f = ScalarField::with_mask(values, mask);
        for fmt in [FieldFormat::Csv, FieldFormat::Json] {
            let p = dir.path().join(format!("f.{fmt:?}"));
            export_field(&f, &g, &p, fmt).unwrap();
            let (pts, back) = import_field(&p, fmt).unwrap();
            assert_eq!(back, f);
            let want: Vec<NuclearPoint> = g.points().collect();
            assert_eq!(pts, want);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = ProductGrid::from_specs(&[GridSpec::new(-1.0, 1.0, 3, 1.0)]).unwrap();
        let f = ScalarField::new(Array1::zeros(4));
        assert!(export_field(&f, &g, &dir.path().join("x.csv"), FieldFormat::Csv).is_err());
    }

    #[test]
    fn tables_mark_missing_cells() {
        let r = RunReport {
            config: "t".into(),
            energy_table: vec![EnergyColumn {
                label: "H".into(),
                source: Source::new("eigen", "solve", "t"),
                values: vec![Some(9.4878), None],
            }],
            ..Default::default()
        };
        let t = human_tables(&r);
        assert!(t.contains("9.48780"));
        assert!(t.contains("--"));
    }
}
