//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fail.
//!
//! Numeric arguments select criteria, e.g. `cargo test --test acceptance -- 3 5`.

use std::io::Write;
use std::process::ExitCode;

use fbnet_core::acceptance::{Acceptance, TITLES};

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids: Vec<usize> = if selected.is_empty() { (1..=TITLES.len()).collect() } else { selected };
    let suite = Acceptance::default();
    let mut stderr = std::io::stderr();
    let mut failed = 0;
    for id in &ids {
        let o = suite.run(*id);
        if !o.passed {
            failed += 1;
        }
        let _ = writeln!(stderr, "{o}");
    }
    let _ = writeln!(stderr, "acceptance: {} passed, {failed} failed", ids.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
