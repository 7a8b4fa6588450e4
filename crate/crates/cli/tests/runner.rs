use weyl_lab::config::RunConfig;
use weyl_lab::report::{CheckRecord, Report, Status};
use weyl_lab::run;

const POINT_GROUPS: &str = r#"["curvature","reference","recurrence","identities","parallel","c2","ppwave","iid","electric","rank_one","decomposability"]"#;

fn config(metric: &str, n: usize, count: usize, checks: &str) -> RunConfig {
    RunConfig::from_json(&format!(
        r#"{{"metric": {metric}, "n": {n}, "points": {{"count": {count}, "seed": 3}}, "checks": {checks}}}"#
    ))
    .unwrap()
}

fn point_checks(r: &Report) -> Vec<&CheckRecord> {
    r.points.iter().flat_map(|p| p.checks.iter()).collect()
}

#[test]
fn galaev_passes_every_hard_check() {
    let cfg = config(r#"{"name": "galaev"}"#, 5, 3, POINT_GROUPS);
    let r = run(&cfg).unwrap();
    assert!(r.verdict.passed, "{:?}", r.verdict.failed_checks);
    assert_eq!(r.verdict.exit_code, 0);
    assert_eq!(r.points.len(), 3);
    assert!(r
        .points
        .iter()
        .all(|p| p.recurrence.as_ref().is_some_and(|s| s.recurrent)));
}

#[test]
fn flat_metric_reports_cr_checks_inapplicable() {
    let cfg = config(r#"{"name": "flat"}"#, 5, 2, POINT_GROUPS);
    let r = run(&cfg).unwrap();
    assert!(r.points.iter().all(|p| p.conformally_flat));
    for c in point_checks(&r) {
        let group = c.name.split('.').next().unwrap();
        if group != "curvature" && group != "reference" {
            assert_eq!(c.status, Status::Inapplicable, "{}", c.name);
        }
    }
}

#[test]
fn disabling_a_group_leaves_other_numbers_unchanged() {
    let full = run(&config(r#"{"name": "brinkmann_pq"}"#, 5, 3, POINT_GROUPS)).unwrap();
    let reduced = run(&config(
        r#"{"name": "brinkmann_pq"}"#,
        5,
        3,
        r#"["curvature","ppwave","iid"]"#,
    ))
    .unwrap();
    let kept = point_checks(&reduced);
    assert!(kept.iter().all(|c| !c.name.starts_with("identities.")));
    for (a, b) in full.points.iter().zip(&reduced.points) {
        for c in &b.checks {
            let twin = a.checks.iter().find(|d| d.name == c.name).unwrap();
            assert_eq!(twin, c);
        }
    }
}

#[test]
fn point_order_is_independent_of_thread_count() {
    let cfg = config(r#"{"name": "galaev"}"#, 5, 4, r#"["curvature","c2"]"#);
    let one = weyl_lab::run_with_jobs(&cfg, Some(1)).unwrap();
    let three = weyl_lab::run_with_jobs(&cfg, Some(3)).unwrap();
    assert_eq!(one.canonical_json(), three.canonical_json());
    assert!(one.points.iter().enumerate().all(|(i, p)| p.index == i));
}

#[test]
fn tightened_tolerance_fails_the_run() {
    let mut cfg = config(r#"{"name": "galaev"}"#, 5, 2, r#"["curvature"]"#);
    cfg.tolerances.insert("curvature.ricci_identity_loop".into(), 1e-14);
    let r = run(&cfg).unwrap();
    assert!(!r.verdict.passed);
    assert_eq!(
        r.verdict.failed_checks,
        vec!["curvature.ricci_identity_loop".to_string()]
    );
    assert_eq!(r.verdict.exit_code, 1);
}

#[test]
fn unknown_tolerance_key_is_a_config_error() {
    let mut cfg = config(r#"{"name": "galaev"}"#, 5, 1, r#"["curvature"]"#);
    cfg.tolerances.insert("curvature.nonsense".into(), 1.0);
    assert!(run(&cfg).is_err());
}

#[test]
fn report_round_trips_through_json() {
    let r = run(&config(
        r#"{"name": "constcurv", "params": {"k": 0.3}}"#,
        5,
        2,
        r#"["curvature","reference"]"#,
    ))
    .unwrap();
    let text = serde_json::to_string(&r).unwrap();
    let back: Report = serde_json::from_str(&text).unwrap();
    assert!(back == r, "report changed after a JSON round trip");
    assert_eq!(r.schema, 1);
    assert_eq!(r.engine.convention_self_test, "pass");
}
