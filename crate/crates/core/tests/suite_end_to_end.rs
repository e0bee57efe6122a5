use emt_core::scenario_io::{certificate_report, parse_scenario};
use emt_core::theorems::{run_suite, CHECK_NAMES};

const DEMO: &str = include_str!("../../../scenarios/demo.scn");
const LQ: &str = include_str!("../../../scenarios/lq_single.scn");

#[test]
fn demo_passes_every_check() {
    let cfg = parse_scenario(DEMO).unwrap();
    let report = run_suite(&cfg, None).unwrap();
    let names: Vec<&str> = report
        .certificates
        .iter()
        .map(|c| c.name.as_str())
        .collect();
    assert_eq!(names, CHECK_NAMES);
    let failed: Vec<String> = report
        .certificates
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.to_string())
        .collect();
    assert!(failed.is_empty(), "{failed:#?}");
    assert!(report.all_passed());
    assert!(report.bundle.as_ref().is_some_and(|b| b.converged));
}

#[test]
fn single_need_scenario_passes_every_check() {
    let cfg = parse_scenario(LQ).unwrap();
    let report = run_suite(&cfg, None).unwrap();
    assert!(
        report.all_passed(),
        "{}",
        certificate_report(&report.certificates)
    );
}

#[test]
fn certificates_are_reproducible() {
    let cfg = parse_scenario(DEMO).unwrap();
    let filter = Some("a");
    let a = certificate_report(&run_suite(&cfg, filter).unwrap().certificates);
    let b = certificate_report(&run_suite(&cfg, filter).unwrap().certificates);
    assert_eq!(a, b);
}

#[test]
fn filters_select_by_substring_or_exact_name() {
    let cfg = parse_scenario(LQ).unwrap();
    let names = |f: &str| -> Vec<String> {
        run_suite(&cfg, Some(f))
            .unwrap()
            .certificates
            .into_iter()
            .map(|c| c.name)
            .collect()
    };
    assert_eq!(names("=holder"), ["holder"]);
    assert_eq!(
        names("meaning"),
        ["meaning_irreducibility", "meaning_solver_gap"]
    );
    assert!(run_suite(&cfg, Some("no_such_check")).is_err());
}

#[test]
fn pure_checks_skip_the_solve() {
    let cfg = parse_scenario(DEMO).unwrap();
    let report = run_suite(&cfg, Some("norm_axioms")).unwrap();
    assert!(report.bundle.is_none());
    assert!(report.all_passed());
}
