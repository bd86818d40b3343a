use cloak_core::acceptance::{run_criterion, CRITERIA};

#[test]
fn acceptance_criteria() {
    let mut failed = Vec::new();
    for id in 1..=CRITERIA {
        let r = run_criterion(id).expect("known criterion");
        println!("{}", r.line());
        if !r.passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
