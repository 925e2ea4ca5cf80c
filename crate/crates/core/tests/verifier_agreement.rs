mod common;

#[test]
fn linear_and_logical_verdicts_agree_on_fuzzed_assignments() {
    let t = common::verifier_fuzz(100, 7);
    assert_eq!(t.cases, 1000);
    assert_eq!(t.disagreements, 0, "{t:?}");
    assert!(t.feasible > 0 && t.feasible < t.cases, "fuzz must exercise both verdicts: {t:?}");
}
