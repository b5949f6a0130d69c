//! Runs the full acceptance suite and prints one line per check.
//! Exits nonzero if any check fails.

use sed_oscillator::verify::{all_passed, run_suite, SuiteOptions};

fn main() {
    let checks = run_suite(&SuiteOptions::default());
    for c in &checks {
        println!(
            "criterion {:<2} {:<5} {} (expected {}, actual {}, tolerance {}, {:.2} s)",
            c.criterion,
            c.status(),
            c.name,
            c.expected,
            c.actual,
            c.tolerance,
            c.seconds
        );
    }
    if all_passed(&checks) {
        println!("acceptance: all {} checks passed", checks.len());
    } else {
        let failed = checks.iter().filter(|c| !c.passed).count();
        println!("acceptance: {failed} of {} checks FAILED", checks.len());
        std::process::exit(1);
    }
}
