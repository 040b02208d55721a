//! One line per acceptance criterion; exits non-zero if a gating criterion fails.

use std::process::ExitCode;

use memopt::verify::{self, DEFAULT_SEED};

fn main() -> ExitCode {
    println!("acceptance suite, seed {DEFAULT_SEED:#x}");
    let results = verify::run_all(DEFAULT_SEED);
    for r in &results {
        println!("{}", r.line());
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed", results.len());
    if verify::all_gating_passed(&results) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
