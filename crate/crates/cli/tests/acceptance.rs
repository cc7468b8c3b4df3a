//! Full-budget acceptance run. Lines go straight to the stdout handle so they
//! show up in `cargo test` output without `--nocapture`.

use momentlab::SignConvention;
use momentlab_cli::acceptance::{run_criterion, run_suite, Budget, SuiteOptions, CRITERIA};
use std::io::Write;

fn say(line: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").unwrap();
    out.flush().unwrap();
}

#[test]
fn all_criteria_pass() {
    let opts = SuiteOptions::new(1, Budget::Full);
    let report = run_suite(&opts, &CRITERIA, |r| say(&format!("acceptance {}", r.line())));
    let failed: Vec<u32> = report.criteria.iter().filter(|c| !c.pass).map(|c| c.id).collect();
    say(&format!(
        "acceptance summary: {}/{} PASS",
        report.criteria.len() - failed.len(),
        report.criteria.len()
    ));
    assert_eq!(report.criteria.len(), 15);
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}

#[test]
fn flipped_sign_convention_is_caught() {
    let mut opts = SuiteOptions::new(1, Budget::Full);
    opts.convention = SignConvention::Flipped;
    let r = run_criterion(5, &opts);
    say(&format!("mutation check (expected FAIL) {}", r.line()));
    assert!(!r.pass);
}
