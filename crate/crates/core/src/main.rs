use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vibronic::check::evaluate;
use vibronic::config::{Overrides, RunConfig};
use vibronic::pipeline::Session;
use vibronic::report::{export_overlap_csv, human_tables, overlap_table_json, sig6, write_text};
use vibronic::Result;

/// Exit status when every stage ran but an acceptance criterion failed.
const EXIT_CRITERIA_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "vibronic", version, about = "Two-state vibronic model: exact and approximate nuclear dynamics on a grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: spectra, factorization, references, overlaps, fields.
    Run(Common),
    /// Exact and reference eigenvalues only.
    Spectrum(Common),
    /// Factorize one exact state and export its fields.
    Factorize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        state: usize,
    },
    /// Overlap matrix between two state families.
    Overlaps {
        #[command(flatten)]
        common: Common,
        /// Two family names separated by a comma or colon, e.g. `adiabatic,exact`.
        #[arg(long)]
        families: String,
    },
    /// Acceptance criteria for the configuration's model.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// Config file, or the name of a bundled config (`butatriene_1d`, `butatriene_2d`).
    config: String,
    #[arg(long)]
    n_states: Option<usize>,
    /// Points per axis of the vibronic grid.
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; takes precedence over VIBRONIC_OUT and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stage timings on stderr.
    #[arg(long, short)]
    verbose: bool,
}

impl Common {
    fn session(&self) -> Result<Session> {
        let mut cfg = RunConfig::resolve(&self.config)?;
        cfg.apply(&Overrides {
            n_states: self.n_states,
            grid_points: self.grid_points,
            seed: self.seed,
            out: self.out.clone(),
        })?;
        Ok(Session::new(cfg)?.verbose(self.verbose))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run(c) => {
            let mut s = c.session()?;
            let report = s.full_report()?;
            let written = s.write_outputs(&report).map_err(|e| e.in_stage("output"))?;
            print!("{}", human_tables(&report));
            println!("wrote {} files under {}", written.len(), s.cfg.output.dir.display());
        }
        Command::Spectrum(c) => {
            let mut s = c.session()?;
            let report = s.spectrum_report()?;
            s.write_tables(&report).map_err(|e| e.in_stage("output"))?;
            print!("{}", human_tables(&report));
        }
        Command::Factorize { common, state } => {
            let mut s = common.session()?;
            let fs = s.factorize_one(state)?;
            let summary = s.summarize(state, &fs)?;
            let dir = s.cfg.output.dir.join("fields");
            let written = s
                .export_factorized(&dir, state, &fs, &s.field_formats())
                .map_err(|e| e.in_stage("output"))?;
            println!("state {state}: E = {} eV", sig6(summary.energy));
            println!("  <chi_bar|T + E_exact|chi_bar> = {} eV", sig6(summary.rayleigh));
            println!("  defined points {} of {}", summary.defined_points, fs.defined.len());
            println!("  largest unclipped spike {} eV", sig6(summary.raw_spike_max));
            if let Some((surface, dev)) = summary.tracked_surface {
                println!("  follows diabatic surface {surface} (mean deviation {} eV)", sig6(dev));
            }
            println!("wrote {} files under {}", written.len(), dir.display());
        }
        Command::Overlaps { common, families } => {
            let mut s = common.session()?;
            let table = s.overlap_table(&families)?;
            let dir = s.cfg.output.dir.clone();
            let stem = format!("overlap_{}", table.name.replace(':', "_vs_"));
            write_text(&dir.join(format!("{stem}.json")), &overlap_table_json(&table)?)?;
            export_overlap_csv(&table.matrix, &dir.join(format!("{stem}.csv")))?;
            println!("{} ({} x {})", table.name, table.matrix.nrows(), table.matrix.ncols());
            println!("{:>4}  {:<12} {:>10}  diagonal", "row", "best match", "overlap");
            for m in table.matrix.summary() {
                let cols: Vec<String> = m.columns.iter().map(|c| c.to_string()).collect();
                println!("{:>4}  {:<12} {:>10}  {}", m.row, cols.join(","), sig6(m.value), m.diagonal);
            }
        }
        Command::Check(c) => {
            let mut s = c.session()?;
            let report = s.full_report()?;
            s.write_tables(&report).map_err(|e| e.in_stage("output"))?;
            let results = evaluate(&report, s.cfg.solver_options().seed);
            for r in &results {
                println!("{r}");
                for d in &r.details {
                    println!("    {d}");
                }
            }
            if results.iter().any(|r| !r.passed) {
                return Ok(ExitCode::from(EXIT_CRITERIA_FAILED));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
