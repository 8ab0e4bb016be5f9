use gridmass::acceptance::{run_all, DEFAULT_SEED, KNOWN_FAILURES};

#[test]
fn acceptance_criteria() {
    let results = run_all(DEFAULT_SEED);
    for r in &results {
        println!("{}", r.line());
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed} of {} criteria passed", results.len());
    for (id, why) in KNOWN_FAILURES {
        println!("criterion {id} is expected to fail: {why}");
    }
    for r in &results {
        let expected_failure = KNOWN_FAILURES.iter().any(|(id, _)| *id == r.id);
        assert_eq!(r.passed, !expected_failure, "criterion {}: {}", r.id, r.detail);
    }
}
