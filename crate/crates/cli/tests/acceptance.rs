//! All ten acceptance criteria at full scale, one line per criterion.

use virfuse_cli::verify::{criteria, run_criterion, Options};

#[test]
fn acceptance() {
    let options = Options::default();
    let mut failed = Vec::new();
    for c in criteria() {
        let report = run_criterion(&c, &options);
        println!("{}", report.line());
        if !report.passed {
            failed.push(report.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
