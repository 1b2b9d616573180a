//! Acceptance suite at full scale: one line per criterion, nonzero exit if
//! any criterion fails. `SACLAB_ACCEPTANCE_JSON=<path>` also writes the
//! machine-readable report.

use std::process::ExitCode;

use saclab::format::write_json;
use saclab::verify::{verify, Level};

fn main() -> ExitCode {
    let report = verify(Level::Full);
    println!();
    for c in &report.criteria {
        println!("acceptance {c}");
    }
    let passed = report.criteria.iter().filter(|c| c.pass).count();
    println!("acceptance: {passed}/{} criteria pass", report.criteria.len());
    if let Some(path) = std::env::var_os("SACLAB_ACCEPTANCE_JSON") {
        if let Err(e) = write_json(path.as_ref(), &report) {
            eprintln!("acceptance: {e}");
            return ExitCode::FAILURE;
        }
    }
    if report.all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
