//! Orchestration: model → grid → eigenstates → factorization → references.
//!
//! A [`Session`] computes each stage on first use and keeps the result, so
//! the CLI subcommands only pay for what they print.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::approx::{
    born_huang_identity_check, overlap_matrix_with_tol, reference_family, Family, ReferenceFamily,
    ReferenceKind,
};
use crate::config::{parse_pair, RunConfig};
use crate::eigen::{solve, SolverOptions};
use crate::error::{Error, Result};
use crate::factorize::{
    cross_section, diabatic_tracking, factorize_on, factorize_state, rayleigh_quotient,
    single_surface_spectrum, verify_single_surface, FactorizeOptions, FactorizedState,
};
use crate::field::{ScalarField, TwoComponentField, VibronicState};
use crate::grid::{GridSpec, ProductGrid};
use crate::hamiltonian::{surface_states, vibronic_states, VibronicHamiltonian};
use crate::model::{adiabatic_fields, diabatic_fields, diagonal_correction_exact, locate_conical_intersection};
use crate::report::{
    export_field, export_overlap_csv, human_tables, overlap_table_json, report_json, write_text,
    CapStudyEntry, ConvergenceEntry, ConvergenceReport, EnergyColumn, FactorizationSummary, FieldFormat,
    OverlapColumn, OverlapTable, RunReport, Source, VerificationSummary,
};

pub const EXACT: &str = "H";
pub const FACTORIZED: &str = "H_N(n)";
pub const SINGLE_SURFACE: &str = "H_N(0)";
pub const SINGLE_SURFACE_LADDER: &str = "H_N(0) ladder";

/// Eigenpairs of `T + Ē` built from the ground state, with the diabatic
/// images `(c1, c2) ψ` and the exact state each one matches best.
#[derive(Clone, Debug)]
pub struct SingleSurfaceStudy {
    pub energies: Vec<f64>,
    pub fields: Vec<ScalarField>,
    pub diabatic: Vec<TwoComponentField>,
    /// `(exact index, |overlap|)` per ladder state.
    pub matches: Vec<(usize, f64)>,
    pub max_residual: f64,
}

#[derive(Clone, Debug)]
pub struct Verification {
    pub summaries: Vec<VerificationSummary>,
    pub cap_study: Vec<CapStudyEntry>,
}

pub struct Session {
    pub cfg: RunConfig,
    pub grid: ProductGrid,
    solver: SolverOptions,
    verbose: bool,
    exact: Option<(Vec<VibronicState>, f64)>,
    references: Vec<ReferenceFamily>,
    factorized: Option<Vec<FactorizedState>>,
    single_surface: Option<SingleSurfaceStudy>,
    verification: Option<Verification>,
}

impl Session {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.build_grid().map_err(|e| e.in_stage("grid"))?;
        Ok(Self {
            solver: cfg.solver_options(),
            cfg,
            grid,
            verbose: false,
            exact: None,
            references: Vec::new(),
            factorized: None,
            single_surface: None,
            verification: None,
        })
    }

    /// Prints stage timings to stderr.
    pub fn verbose(mut self, on: bool) -> Self {
        self.verbose = on;
        self
    }

    fn log(&self, stage: &str, start: Instant) {
        if self.verbose {
            eprintln!("[{stage}] {:.1} s", start.elapsed().as_secs_f64());
        }
    }

    fn name(&self) -> &str {
        &self.cfg.name
    }

    pub fn exact_states(&mut self) -> Result<&[VibronicState]> {
        if self.exact.is_none() {
            let t = Instant::now();
            let h = VibronicHamiltonian::new(&self.cfg.model, &self.grid);
            let r = solve(&h, self.cfg.n_states, &self.solver).map_err(|e| e.in_stage("exact"))?;
            self.exact = Some((vibronic_states(&r, &self.grid), r.max_residual()));
            self.log("exact", t);
        }
        Ok(&self.exact.as_ref().unwrap().0)
    }

    fn solved(&self) -> &[VibronicState] {
        self.exact.as_ref().map_or(&[], |e| e.0.as_slice())
    }

    pub fn reference(&mut self, kind: ReferenceKind) -> Result<&ReferenceFamily> {
        if !self.references.iter().any(|f| f.kind == kind) {
            let k = self.cfg.reference.states.get(kind);
            if k == 0 {
                return Err(Error::Config(format!(
                    "reference {} is disabled (reference.states = 0)",
                    kind.label()
                )));
            }
            let t = Instant::now();
            let fam = reference_family(
                kind,
                &self.cfg.model,
                &self.grid,
                k,
                &self.cfg.reference.options(),
                &self.solver,
            )
            .map_err(|e| e.in_stage("references"))?;
            self.references.push(fam);
            self.log(kind.label(), t);
        }
        Ok(self.references.iter().find(|f| f.kind == kind).unwrap())
    }

    /// Every exact state factorized on the vibronic grid.
    pub fn factorized(&mut self) -> Result<&[FactorizedState]> {
        if self.factorized.is_none() {
            self.exact_states()?;
            let t = Instant::now();
            let states = &self.exact.as_ref().unwrap().0;
            let out = states
                .iter()
                .map(|s| factorize_state(s, &self.cfg.model, &self.grid, &self.cfg.factorize))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.in_stage("factorize"))?;
            self.factorized = Some(out);
            self.log("factorize", t);
        }
        Ok(self.factorized.as_ref().unwrap())
    }

    pub fn factorize_one(&mut self, n: usize) -> Result<FactorizedState> {
        self.exact_states()?;
        let states = self.solved();
        let s = states.get(n).ok_or_else(|| {
            Error::Config(format!("state {n} requested but only {} exact states are solved", states.len()))
        })?;
        factorize_state(s, &self.cfg.model, &self.grid, &self.cfg.factorize).map_err(|e| e.in_stage("factorize"))
    }

    /// Property summary of a factorized state.
    pub fn summarize(&mut self, n: usize, fs: &FactorizedState) -> Result<FactorizationSummary> {
        self.exact_states()?;
        summarize(n, fs, &self.solved()[n], &self.grid, &self.cfg)
    }

    pub fn verification_grid(&self) -> Result<ProductGrid> {
        ProductGrid::from_specs(&self.cfg.verification_specs())
    }

    /// Solves the single-surface problem of state `n` on the verification grid.
    pub fn verify_state(&mut self, n: usize, opts: &FactorizeOptions, vgrid: &ProductGrid) -> Result<VerificationSummary> {
        let state = self.exact_states()?[n].clone();
        let fs = if vgrid.specs() == self.grid.specs() {
            factorize_state(&state, &self.cfg.model, &self.grid, opts)?
        } else {
            factorize_on(&state, &self.cfg.model, &self.grid, vgrid, opts)?
        };
        let check = verify_single_surface(&fs, vgrid, &self.solver)?;
        Ok(VerificationSummary {
            grid: vgrid.specs(),
            e0: check.e0,
            e1: check.e1,
            energy_gap: check.energy_gap,
            amplitude_overlap: check.amplitude_overlap,
        })
    }

    pub fn verification(&mut self) -> Result<Option<&Verification>> {
        let Some(vcfg) = self.cfg.verification.clone() else {
            return Ok(None);
        };
        if self.verification.is_none() {
            self.exact_states()?;
            let t = Instant::now();
            let vgrid = self.verification_grid().map_err(|e| e.in_stage("verification"))?;
            let base = self.cfg.factorize;
            let mut summaries = Vec::new();
            for n in 0..=vcfg.max_state {
                let s = self.verify_state(n, &base, &vgrid).map_err(|e| e.in_stage("verification"))?;
                summaries.push(s);
            }
            let mut cap_study = Vec::new();
            for &cap in &vcfg.cap_study {
                for &n in &vcfg.cap_study_states {
                    let opts = FactorizeOptions { cap, ..base };
                    let s = self.verify_state(n, &opts, &vgrid).map_err(|e| e.in_stage("cap study"))?;
                    cap_study.push(CapStudyEntry {
                        state: n,
                        cap,
                        e0: s.e0,
                        shift: s.e0 - summaries[n].e0,
                    });
                }
            }
            self.verification = Some(Verification { summaries, cap_study });
            self.log("verification", t);
        }
        Ok(self.verification.as_ref())
    }

    pub fn single_surface(&mut self) -> Result<Option<&SingleSurfaceStudy>> {
        let k = self.cfg.single_surface.states;
        if k == 0 {
            return Ok(None);
        }
        if self.single_surface.is_none() {
            let ground = self.factorize_one(0)?;
            let t = Instant::now();
            let r = single_surface_spectrum(&ground, &self.grid, k, &self.solver)
                .map_err(|e| e.in_stage("single surface"))?;
            let fields = surface_states(&r, &self.grid);
            let diabatic: Vec<TwoComponentField> = fields.iter().map(|f| lift(&ground, f)).collect();
            self.exact_states()?;
            let exact = self.solved();
            let mut matches = Vec::new();
            for d in &diabatic {
                let mut best = (0, -1.0);
                for (n, s) in exact.iter().enumerate() {
                    let o = self.grid.inner_product_two(d, &s.field)?.abs();
                    if o > best.1 {
                        best = (n, o);
                    }
                }
                matches.push(best);
            }
            self.single_surface = Some(SingleSurfaceStudy {
                energies: r.values.clone(),
                fields,
                diabatic,
                matches,
                max_residual: r.max_residual(),
            });
            self.log("single surface", t);
        }
        Ok(self.single_surface.as_ref())
    }

    /// A named eigenfunction family; see [`crate::config::FAMILY_NAMES`].
    pub fn family(&mut self, name: &str) -> Result<Family> {
        Ok(match name {
            "exact" => {
                let s = self.exact_states()?;
                Family::diabatic(
                    EXACT,
                    s.iter().map(|s| s.energy).collect(),
                    s.iter().map(|s| s.field.clone()).collect(),
                )
            }
            "amplitude" => {
                let f = self.factorized()?;
                Family::amplitude(
                    "chi_bar",
                    f.iter().map(|f| f.energy).collect(),
                    f.iter().map(|f| f.amplitude.clone()).collect(),
                )
            }
            "diabatic_lambda_zero" => self.reference(ReferenceKind::DiabaticLambdaZero)?.diabatic_family(),
            "adiabatic" => self.reference(ReferenceKind::Adiabatic)?.diabatic_family(),
            "born_huang" => self.reference(ReferenceKind::BornHuang)?.diabatic_family(),
            "modulus_adiabatic" => {
                let g = self.grid.clone();
                self.reference(ReferenceKind::Adiabatic)?.modulus_family(&g)?
            }
            "modulus_born_huang" => {
                let g = self.grid.clone();
                self.reference(ReferenceKind::BornHuang)?.modulus_family(&g)?
            }
            "single_surface" => {
                let s = self
                    .single_surface()?
                    .ok_or_else(|| Error::Config("single_surface.states = 0".into()))?;
                Family::diabatic(SINGLE_SURFACE, s.energies.clone(), s.diabatic.clone())
            }
            other => return Err(Error::Config(format!("unknown family `{other}`"))),
        })
    }

    pub fn overlap_table(&mut self, pair: &str) -> Result<OverlapTable> {
        let (a, b) = parse_pair(pair)?;
        let fa = self.family(&a)?;
        let fb = self.family(&b)?;
        let t = Instant::now();
        let matrix = overlap_matrix_with_tol(&fa, &fb, &self.grid, self.cfg.overlaps.cluster_tol)
            .map_err(|e| e.in_stage("overlaps"))?;
        self.log("overlaps", t);
        Ok(OverlapTable {
            name: format!("{a}:{b}"),
            source: Source::new("approx", "overlap_matrix", self.name()),
            matrix,
        })
    }

    pub fn convergence(&mut self) -> Result<Option<ConvergenceReport>> {
        let Some(c) = self.cfg.convergence.clone() else {
            return Ok(None);
        };
        let base: Vec<f64> = self.exact_states()?.iter().take(c.states).map(|s| s.energy).collect();
        let t = Instant::now();
        let refined_specs: Vec<GridSpec> = self.grid.specs().iter().map(|s| s.scaled(c.factor)).collect();
        let fine = ProductGrid::from_specs(&refined_specs)?;
        let h = VibronicHamiltonian::new(&self.cfg.model, &fine);
        let r = solve(&h, c.states, &self.solver).map_err(|e| e.in_stage("convergence"))?;
        self.log("convergence", t);
        Ok(Some(ConvergenceReport {
            factor: c.factor,
            base_grid: self.grid.specs(),
            refined_grid: refined_specs,
            entries: base
                .iter()
                .zip(&r.values)
                .enumerate()
                .map(|(state, (&b, &f))| ConvergenceEntry {
                    label: EXACT.into(),
                    state,
                    base: b,
                    refined: f,
                    delta: f - b,
                })
                .collect(),
        }))
    }

    /// Exact and reference eigenvalues only.
    pub fn spectrum_report(&mut self) -> Result<RunReport> {
        let mut report = self.empty_report();
        let exact = self.exact_states()?.iter().map(|s| Some(s.energy)).collect();
        report.energy_table.push(EnergyColumn {
            label: EXACT.into(),
            source: Source::new("eigen", "solve", self.name()),
            values: exact,
        });
        report.residuals.push((EXACT.into(), self.exact.as_ref().unwrap().1));
        for kind in ReferenceKind::ALL {
            if self.cfg.reference.states.get(kind) == 0 {
                continue;
            }
            let fam = self.reference(kind)?;
            let values = fam.energies().into_iter().map(Some).collect();
            report.energy_table.push(EnergyColumn {
                label: kind.label().into(),
                source: Source::new("approx", "build_reference", &self.cfg.name),
                values,
            });
        }
        Ok(report)
    }

    fn empty_report(&self) -> RunReport {
        RunReport {
            config: self.cfg.name.clone(),
            ndim: self.grid.ndim(),
            grid: self.grid.specs(),
            ..Default::default()
        }
    }

    /// Every stage the configuration enables.
    pub fn full_report(&mut self) -> Result<RunReport> {
        let mut report = self.spectrum_report()?;
        let n_exact = self.cfg.n_states;
        let name = self.cfg.name.clone();

        report.intersection = locate_conical_intersection(&self.cfg.model).ok();
        let t = Instant::now();
        report.identity = Some(born_huang_identity_check(&self.cfg.model, &self.grid).map_err(|e| e.in_stage("identity"))?);
        self.log("identity", t);

        // diagonal overlaps with the exact states
        let exact: Vec<TwoComponentField> = self.exact_states()?.iter().map(|s| s.field.clone()).collect();
        for kind in ReferenceKind::ALL {
            if self.cfg.reference.states.get(kind) == 0 {
                continue;
            }
            let fam = self.reference(kind)?.clone();
            let mut values = vec![None; n_exact];
            for (n, (s, e)) in fam.states.iter().zip(&exact).enumerate() {
                values[n] = Some(self.grid.inner_product_two(&s.diabatic, e)?.abs());
            }
            report.overlap_columns.push(OverlapColumn {
                label: kind.label().into(),
                source: Source::new("approx", "to_diabatic_components", &name),
                values,
            });
        }

        self.factorized()?;
        let verification = self.verification()?.cloned();
        let factorized = self.factorized.as_ref().unwrap();
        let mut summaries = Vec::new();
        for (n, fs) in factorized.iter().enumerate() {
            let state = &self.exact.as_ref().unwrap().0[n];
            summaries.push(summarize(n, fs, state, &self.grid, &self.cfg)?);
        }
        if let Some(v) = &verification {
            for (s, vs) in summaries.iter_mut().zip(&v.summaries) {
                s.verification = Some(vs.clone());
            }
            let mut e = vec![None; n_exact];
            let mut o = vec![None; n_exact];
            for (n, vs) in v.summaries.iter().enumerate() {
                e[n] = Some(vs.e0);
                o[n] = Some(vs.amplitude_overlap);
            }
            report.energy_table.insert(
                1,
                EnergyColumn {
                    label: FACTORIZED.into(),
                    source: Source::new("factorize", "verify_single_surface", &name),
                    values: e,
                },
            );
            report.overlap_columns.insert(
                0,
                OverlapColumn {
                    label: FACTORIZED.into(),
                    source: Source::new("factorize", "verify_single_surface", &name),
                    values: o,
                },
            );
            report.cap_study = v.cap_study.clone();
        }
        report.factorization = summaries;

        if let Some(ss) = self.single_surface()?.cloned() {
            let mut e = vec![None; n_exact];
            let mut o = vec![None; n_exact];
            for (j, &(n, ov)) in ss.matches.iter().enumerate() {
                if o[n].is_none_or(|prev: f64| ov > prev) {
                    e[n] = Some(ss.energies[j]);
                    o[n] = Some(ov);
                }
            }
            let source = Source::new("factorize", "single_surface_spectrum", &name);
            report.energy_table.push(EnergyColumn {
                label: SINGLE_SURFACE.into(),
                source: source.clone(),
                values: e,
            });
            report.energy_table.push(EnergyColumn {
                label: SINGLE_SURFACE_LADDER.into(),
                source: source.clone(),
                values: ss.energies.iter().map(|v| Some(*v)).collect(),
            });
            report.overlap_columns.push(OverlapColumn {
                label: SINGLE_SURFACE.into(),
                source,
                values: o,
            });
            report.residuals.push((SINGLE_SURFACE.into(), ss.max_residual));
        }

        for pair in self.cfg.overlaps.pairs.clone() {
            let table = self.overlap_table(&pair)?;
            report.overlap_tables.push(table);
        }
        report.convergence = self.convergence()?;
        Ok(report)
    }

    /// Writes the human table, report JSON and overlap tables.
    pub fn write_tables(&self, report: &RunReport) -> Result<Vec<PathBuf>> {
        let dir = &self.cfg.output.dir;
        let out = &self.cfg.output;
        let mut written = Vec::new();
        let mut put = |path: PathBuf, text: String| -> Result<()> {
            write_text(&path, &text)?;
            written.push(path);
            Ok(())
        };
        put(dir.join("energy_table.txt"), human_tables(report))?;
        if out.json {
            put(dir.join("report.json"), report_json(report)?)?;
            put(dir.join("energy_table.json"), serde_json::to_string_pretty(&report.energy_table)?)?;
            put(dir.join("overlap_columns.json"), serde_json::to_string_pretty(&report.overlap_columns)?)?;
            for t in &report.overlap_tables {
                put(dir.join(format!("overlap_{}.json", file_stem(&t.name))), overlap_table_json(t)?)?;
            }
        }
        if out.csv {
            for t in &report.overlap_tables {
                let p = dir.join(format!("overlap_{}.csv", file_stem(&t.name)));
                export_overlap_csv(&t.matrix, &p)?;
                written.push(p);
            }
        }
        Ok(written)
    }

    /// Writes the report, tables and field files under the output directory.
    pub fn write_outputs(&mut self, report: &RunReport) -> Result<Vec<PathBuf>> {
        let dir = self.cfg.output.dir.clone();
        let mut written = self.write_tables(report)?;
        let formats = self.formats();
        let v = diabatic_fields(&self.cfg.model, &self.grid);
        let ad = adiabatic_fields(&self.cfg.model, &self.grid);
        let corr = diagonal_correction_exact(&self.cfg.model, &self.grid, self.cfg.reference.cap);
        let surfaces = [
            ("v11", ScalarField::new(v.v11)),
            ("v22", ScalarField::new(v.v22)),
            ("v12", ScalarField::new(v.v12)),
            ("adiabatic_lower", ScalarField::new(ad.lower)),
            ("adiabatic_upper", ScalarField::new(ad.upper)),
            ("mixing_angle", ad.gamma),
            ("diagonal_correction", corr),
        ];
        for (label, f) in &surfaces {
            written.extend(self.export(&dir.join("surfaces"), label, f, &formats)?);
        }
        let count = self.cfg.output.field_states.min(self.cfg.n_states);
        if count > 0 {
            let fs: Vec<FactorizedState> = self.factorized()?[..count].to_vec();
            for (n, f) in fs.iter().enumerate() {
                written.extend(self.export_factorized(&dir.join("fields"), n, f, &formats)?);
            }
        }
        Ok(written)
    }

    fn formats(&self) -> Vec<(FieldFormat, &'static str)> {
        let mut f = Vec::new();
        if self.cfg.output.csv {
            f.push((FieldFormat::Csv, "csv"));
        }
        if self.cfg.output.json {
            f.push((FieldFormat::Json, "json"));
        }
        f
    }

    fn export(&self, dir: &Path, stem: &str, field: &ScalarField, formats: &[(FieldFormat, &str)]) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        for (fmt, ext) in formats {
            let p = dir.join(format!("{stem}.{ext}"));
            export_field(field, &self.grid, &p, *fmt)?;
            out.push(p);
        }
        Ok(out)
    }

    /// Amplitude, potential pieces and angle fields of one state.
    pub fn export_factorized(
        &self,
        dir: &Path,
        n: usize,
        fs: &FactorizedState,
        formats: &[(FieldFormat, &str)],
    ) -> Result<Vec<PathBuf>> {
        let clip = self.cfg.output.plot_clip;
        let clipped = ScalarField {
            values: fs.exact_potential.values.mapv(|v| v.min(clip)),
            defined: fs.exact_potential.defined.clone(),
        };
        let mut out = Vec::new();
        for (label, f) in [
            ("chi_bar", &fs.amplitude),
            ("exact_potential", &fs.exact_potential),
            ("exact_potential_clipped", &clipped),
            ("spike_part", &fs.spike_part),
            ("potential_part", &fs.potential_part),
            ("theta", &fs.theta),
            ("c1", &fs.c1),
            ("c2", &fs.c2),
        ] {
            out.extend(self.export(dir, &format!("{label}_{n}"), f, formats)?);
        }
        if self.grid.ndim() == 2 {
            // potential and amplitude along Q_y through Q_x = 0
            for (label, f) in [("exact_potential", &clipped), ("chi_bar", &fs.amplitude)] {
                let (q, line) = cross_section(f, &self.grid, 0, 0.0)?;
                let p = dir.join(format!("{label}_{n}_qx0.csv"));
                write_line_csv(&p, &q, &line)?;
                out.push(p);
            }
        }
        Ok(out)
    }

    pub fn field_formats(&self) -> Vec<(FieldFormat, &'static str)> {
        self.formats()
    }
}

fn write_line_csv(path: &Path, q: &[f64], line: &ScalarField) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["q", "value", "defined"])?;
    for (i, x) in q.iter().enumerate() {
        w.write_record([x.to_string(), line.values[i].to_string(), (line.is_defined(i) as u8).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn file_stem(pair: &str) -> String {
    pair.replace([':', ','], "_vs_")
}

/// `(c1, c2) ψ`, zero where the ground-state factorization is masked.
fn lift(ground: &FactorizedState, psi: &ScalarField) -> TwoComponentField {
    let mask = |i: usize| if ground.defined[i] { psi.values[i] } else { 0.0 };
    let n = psi.len();
    TwoComponentField::new(
        (0..n).map(|i| ground.c1.values[i] * mask(i)).collect(),
        (0..n).map(|i| ground.c2.values[i] * mask(i)).collect(),
    )
}

fn summarize(
    n: usize,
    fs: &FactorizedState,
    state: &VibronicState,
    grid: &ProductGrid,
    cfg: &RunConfig,
) -> Result<FactorizationSummary> {
    let mut unit = 0.0f64;
    let mut recon = 0.0f64;
    for i in 0..fs.amplitude.len() {
        if !fs.defined[i] {
            continue;
        }
        let (c1, c2) = (fs.c1.values[i], fs.c2.values[i]);
        unit = unit.max((c1 * c1 + c2 * c2 - 1.0).abs());
        let scale = fs.amplitude.values[i] * fs.norm_factor;
        recon = recon
            .max((c1 * scale - state.field.chi1[i]).abs())
            .max((c2 * scale - state.field.chi2[i]).abs());
    }
    Ok(FactorizationSummary {
        state: n,
        energy: fs.energy,
        rayleigh: rayleigh_quotient(fs, grid)?,
        min_amplitude: fs.amplitude.values.iter().cloned().fold(f64::INFINITY, f64::min),
        max_unit_error: unit,
        max_reconstruction_error: recon,
        min_spike: fs.spike_part.values.iter().cloned().fold(f64::INFINITY, f64::min),
        raw_spike_max: fs.raw_spike_max,
        defined_points: fs.defined_count(),
        tracked_surface: diabatic_tracking(fs, &cfg.model, grid, 0.01, 1e-2).map(|(s, e)| (s + 1, e)),
        verification: None,
    })
}

/// Full pipeline: computes every enabled stage and writes all artifacts.
pub fn run_pipeline(cfg: RunConfig, verbose: bool) -> Result<RunReport> {
    let mut s = Session::new(cfg)?.verbose(verbose);
    let report = s.full_report()?;
    s.write_outputs(&report).map_err(|e| e.in_stage("output"))?;
    Ok(report)
}
