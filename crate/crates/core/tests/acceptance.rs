//! Acceptance suite: runs both bundled studies and evaluates criteria 1-11.
//!
//! Prints one PASS/FAIL line per criterion followed by its measurements.
//! Criteria listed in `KNOWN_FAILURES` are expected to fail at their pinned
//! tolerances (see the README); the target fails if any other criterion
//! fails, or if a listed one starts passing.

use std::process::ExitCode;
use std::time::Instant;

use vibronic::check::{check_1d, check_2d, merge, report_properties, standalone_properties, CriterionResult};
use vibronic::config::RunConfig;
use vibronic::pipeline::Session;
use vibronic::report::RunReport;

const KNOWN_FAILURES: [u8; 2] = [4, 10];

fn study(name: &str) -> RunReport {
    let t = Instant::now();
    let cfg = RunConfig::resolve(name).expect("bundled config");
    let seed = cfg.solver_options().seed;
    let report = Session::new(cfg).and_then(|mut s| s.full_report());
    let report = report.unwrap_or_else(|e| panic!("{name}: {e}"));
    eprintln!("{name}: pipeline finished in {:.0} s (seed {seed})", t.elapsed().as_secs_f64());
    report
}

fn main() -> ExitCode {
    let one = study("butatriene_1d");
    let two = study("butatriene_2d");
    let mut all: Vec<CriterionResult> = check_1d(&one);
    all.extend(check_2d(&two));
    all.push(report_properties(&one));
    all.push(report_properties(&two));
    all.push(standalone_properties(RunConfig::resolve("butatriene_1d").unwrap().solver_options().seed));
    let results = merge(all);

    let mut ok = true;
    println!();
    for r in &results {
        let known = KNOWN_FAILURES.contains(&r.id);
        let note = match (r.passed, known) {
            (false, true) => "  [known failure]",
            (true, true) => "  [unexpected pass: remove from KNOWN_FAILURES]",
            (false, false) => "  [regression]",
            (true, false) => "",
        };
        ok &= r.passed != known;
        println!("{r}{note}");
        for d in &r.details {
            println!("    {d}");
        }
    }
    let ids: Vec<u8> = results.iter().map(|r| r.id).collect();
    if ids != (1..=11).collect::<Vec<u8>>() {
        println!("criteria evaluated: {ids:?}, expected 1..=11");
        ok = false;
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("\n{passed} of {} criteria passed", results.len());
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
