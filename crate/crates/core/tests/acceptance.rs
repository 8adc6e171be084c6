//! Acceptance table: one line per criterion, details for every sub-check.
//!
//! Checks listed in `KNOWN_RED` are reported but do not fail the target; each
//! has its analysis in the README.

use std::process::ExitCode;

use vhj_core::harness::suites::{run_suites, SUITES};

const KNOWN_RED: [(&str, &str); 1] = [("A1", "observed order")];

fn main() -> ExitCode {
    let reports = match run_suites(&SUITES) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("acceptance: {e}");
            return ExitCode::FAILURE;
        }
    };
    for r in &reports {
        println!("{r}");
    }
    println!();
    let mut unexpected = 0;
    for r in &reports {
        let mark = if r.pass() { "PASS" } else { "FAIL" };
        println!("{} {mark}", r.criterion);
        for c in r.failures() {
            if KNOWN_RED.contains(&(r.criterion.as_str(), c.name.as_str())) {
                println!("    known red: {}", c.name);
            } else {
                unexpected += 1;
            }
        }
    }
    for (criterion, check) in KNOWN_RED {
        let still_red = reports
            .iter()
            .filter(|r| r.criterion == criterion)
            .any(|r| r.failures().iter().any(|c| c.name == check));
        if !still_red {
            println!("{criterion} `{check}` is listed as known red but passed");
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} unexpected failing check(s)");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
