//! All acceptance criteria at full sample sizes and tolerances.
//!
//! Lines go straight to stdout so they show without `--nocapture`.

use coupling_lab::verify::{run_suite, Suite};
use std::io::Write;

#[test]
fn acceptance_criteria() {
    let reports = run_suite(Suite::Full, |r| {
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{r}");
        let _ = out.flush();
    });
    let failed: Vec<u8> = reports.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    let _ = writeln!(std::io::stdout(), "acceptance: {} of {} passed", reports.len() - failed.len(), reports.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
