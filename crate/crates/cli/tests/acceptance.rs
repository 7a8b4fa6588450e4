//! Acceptance criteria 1–8. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.
//!
//! Every tolerance below is pinned here and also forced into the run
//! configuration, so a change to the registry defaults cannot loosen it.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::Instant;

use weyl_lab::config::RunConfig;
use weyl_lab::report::{CheckRecord, Report, Status};
use weyl_lab::run;

const POINTS: usize = 20;
const POINT_SEED: u64 = 2024;
const POINT_GROUPS: &[&str] = &[
    "curvature",
    "reference",
    "recurrence",
    "identities",
    "parallel",
    "c2",
    "ppwave",
    "iid",
    "electric",
    "rank_one",
    "decomposability",
];

/// Criterion 1.
const C1: &[(&str, f64)] = &[
    ("reference.christoffel", 1e-10),
    ("reference.r1313", 1e-10),
    ("reference.r11", 1e-10),
    ("reference.scalar", 1e-10),
    ("reference.alpha", 1e-8),
    ("recurrence.residual", 1e-8),
    ("reference.alpha_sq", 1e-9),
    ("recurrence.riemann_recurrence", 1e-9),
];
/// Criterion 2.
const C2: &[(&str, f64)] = &[
    ("reference.alpha", 1e-8),
    ("reference.null_alpha_sq", 1e-10),
    ("rank_one.fit", 1e-9),
    ("reference.null_ricci_coefficient", 1e-9),
    ("iid.alignment", 1e-9),
    ("iid.defect", 1e-9),
];
/// Criterion 3, required at every recurrent point.
const C3: &[(&str, f64)] = &[
    ("identities.cyclic_recurrence", 1e-9),
    ("identities.alpha_compatibility", 1e-9),
    ("identities.semisymmetry", 1e-9),
    ("curvature.divergence_identity", 1e-9),
];
/// Criterion 3, required where the recurrence covector is closed.
const C3_CLOSED: (&str, f64) = ("identities.ricci_riemann_compatibility", 1e-9);
/// Criterion 4.
const C4: &[(&str, f64)] = &[
    ("synthetic.round_trip", 1e-11),
    ("synthetic.c2_relation", 1e-10),
    ("synthetic.electric_compatibility", 1e-11),
    ("synthetic.trace_free", 1e-12),
    ("synthetic.first_bianchi", 1e-12),
];
/// Criterion 5, synthetic part.
const C5: &[(&str, f64)] = &[
    ("synthetic.h_trace", 1e-10),
    ("synthetic.nabla_h", 1e-8),
    ("synthetic.h_alpha", 1e-9),
    ("synthetic.commutation", 1e-9),
    ("synthetic.grycak_residual", 1e-7),
    ("synthetic.grycak_g", 1e-9),
    ("synthetic.two_clusters", 0.0),
    ("synthetic.scalar_split", 1e-9),
    ("synthetic.projector_idempotence", 1e-9),
    ("synthetic.projector_trace", 1e-9),
    ("synthetic.h_prime_zero", 1e-12),
    ("synthetic.zero_second_eigenvalue", 0.0),
];
/// Criterion 5 on metric points with non-zero `C²`.
const C5_POINTS: &[(&str, f64)] = &[
    ("parallel.h_trace", 1e-10),
    ("parallel.nabla_h", 1e-8),
    ("parallel.h_alpha", 1e-9),
    ("parallel.commutation", 1e-9),
    ("parallel.grycak", 1e-7),
    ("parallel.scalar_split", 1e-9),
    ("parallel.projector", 1e-9),
];
/// Criterion 6, galaev part.
const C6_GALAEV: &[(&str, f64)] = &[
    ("c2.vanishing", 1e-10),
    ("ppwave.conformal_harmonicity", 1e-10),
    ("ppwave.cc", 1e-11),
    ("ppwave.trace", 1e-10),
];
/// Criterion 6, synthetic part.
const C6_SYNTHETIC: &[(&str, f64)] = &[
    ("synthetic.em_split_sum", 1e-10),
    ("synthetic.timelike_purely_electric", 1e-9),
    ("synthetic.purely_electric_consistency", 0.0),
    ("synthetic.decomposability_mismatch", 0.0),
];
/// Criterion 7.
const NEGATIVE_THRESHOLD: f64 = 0.05;
const NEGATIVE_FRACTION: f64 = 0.95;
const C7_SYNTHETIC: &[&str] = &[
    "synthetic.negative_compatibility",
    "synthetic.negative_purely_electric",
    "synthetic.negative_iid",
];

const SYNTHETIC_COUNT: usize = 200;
const SYNTHETIC_DIMS: [usize; 3] = [5, 6, 7];
const EM_PAIRS: usize = 50;

fn pinned() -> BTreeMap<String, f64> {
    let mut t = BTreeMap::new();
    let lists: [&[(&str, f64)]; 8] = [C1, C2, C3, C4, C5, C5_POINTS, C6_GALAEV, C6_SYNTHETIC];
    for list in lists {
        for &(k, v) in list {
            t.insert(k.to_string(), v);
        }
    }
    t.insert(C3_CLOSED.0.to_string(), C3_CLOSED.1);
    t.insert("negative_threshold".into(), NEGATIVE_THRESHOLD);
    for k in C7_SYNTHETIC {
        t.insert(k.to_string(), NEGATIVE_FRACTION);
    }
    t
}

fn metric_config(metric: &str, n: usize, groups: &[&str]) -> RunConfig {
    let doc = serde_json::json!({
        "metric": serde_json::from_str::<serde_json::Value>(metric).unwrap(),
        "n": n,
        "points": {"count": POINTS, "box": [0.1, 1.0], "seed": POINT_SEED},
        "checks": groups,
        "tolerances": pinned(),
    });
    RunConfig::from_json(&doc.to_string()).unwrap()
}

fn run_metric(metric: &str, n: usize) -> Report {
    run(&metric_config(metric, n, POINT_GROUPS)).expect("valid configuration")
}

struct Criterion {
    failures: Vec<String>,
}

impl Criterion {
    fn new() -> Self {
        Self { failures: Vec::new() }
    }

    fn fail(&mut self, msg: String) {
        self.failures.push(msg);
    }

    fn check_record(&mut self, label: &str, c: &CheckRecord, tol: f64) {
        if c.tolerance.is_some_and(|t| t > tol) {
            self.fail(format!(
                "{label}: {} judged at {:?}, looser than {tol:e}",
                c.name, c.tolerance
            ));
        }
        match (c.status, c.defect) {
            (Status::Pass, Some(d)) if d <= tol => {}
            _ => self.fail(format!(
                "{label}: {} {:?} defect {:?} (need <= {tol:e})",
                c.name, c.status, c.defect
            )),
        }
    }

    /// Every record of each named check passes within the pinned tolerance.
    fn all_points(&mut self, label: &str, r: &Report, list: &[(&str, f64)]) {
        for &(name, tol) in list {
            let recs: Vec<&CheckRecord> = r.records().filter(|c| c.name == name).collect();
            if recs.len() < r.points.len() {
                self.fail(format!(
                    "{label}: {name} present at {} of {} points",
                    recs.len(),
                    r.points.len()
                ));
            }
            for c in recs {
                self.check_record(label, c, tol);
            }
        }
    }

    fn synthetic(&mut self, r: &Report, list: &[(&str, f64)]) {
        for &(name, tol) in list {
            match synthetic_record(r, name) {
                Some(c) => self.check_record("synthetic", c, tol),
                None => self.fail(format!("synthetic: {name} missing")),
            }
        }
    }

    fn line(&self, id: u32, title: &str, detail: &str) -> bool {
        let ok = self.failures.is_empty();
        println!(
            "criterion {id} {}: {title} ({detail})",
            if ok { "PASS" } else { "FAIL" }
        );
        for f in &self.failures {
            println!("    {f}");
        }
        ok
    }
}

fn synthetic_record<'a>(r: &'a Report, name: &str) -> Option<&'a CheckRecord> {
    r.synthetic.as_ref()?.checks.iter().find(|c| c.name == name)
}

fn recurrent_points(r: &Report) -> impl Iterator<Item = &weyl_lab::report::PointRecord> {
    r.points
        .iter()
        .filter(|p| p.recurrence.as_ref().is_some_and(|s| s.recurrent))
}

const BRINKMANN_EXP: &str = r#"{"name": "brinkmann_pq", "params": {
    "p": {"kind": "exp", "scale": 1.0, "rate": 1.0},
    "q": {"kind": "exp", "scale": 1.0, "rate": 1.0}}}"#;
const BRINKMANN_NULL: &str = r#"{"name": "brinkmann_pq", "params": {
    "p": {"kind": "exp", "scale": 1.0, "rate": 1.0},
    "q": {"kind": "poly", "coeffs": [0.0, 0.0, 1.0]}}}"#;
const GALAEV_5: &str = r#"{"name": "galaev", "params": {
    "a": {"kind": "poly", "coeffs": [0.0, 1.0]},
    "f": {"kind": "exp", "scale": 1.0, "rate": 1.0},
    "lambda": [1.0, -1.0, 0.0]}}"#;
const GALAEV_6: &str = r#"{"name": "galaev", "params": {
    "a": {"kind": "poly", "coeffs": [0.5, 1.0]},
    "f": {"kind": "exp", "scale": 0.5, "rate": 2.0},
    "lambda": [1.0, -0.5, 0.25, -0.75]}}"#;

fn main() {
    let start = Instant::now();
    let mut ok = true;

    let brinkmann = run_metric(BRINKMANN_EXP, 5);
    let null = run_metric(BRINKMANN_NULL, 5);
    let galaev5 = run_metric(GALAEV_5, 5);
    let galaev6 = run_metric(GALAEV_6, 6);
    let flat = run_metric(r#"{"name": "flat", "params": {"negative": 1}}"#, 5);
    let sphere = run_metric(r#"{"name": "constcurv", "params": {"k": 0.5, "negative": 0}}"#, 5);
    let de_sitter = run_metric(r#"{"name": "constcurv", "params": {"k": -0.7, "negative": 1}}"#, 6);
    let synthetic = {
        let doc = serde_json::json!({
            "metric": "flat",
            "n": 5,
            "points": {"count": 1},
            "checks": ["synthetic"],
            "tolerances": pinned(),
            "synthetic": {"count": SYNTHETIC_COUNT, "seed": 7, "dims": SYNTHETIC_DIMS, "em_pairs": EM_PAIRS},
        });
        run(&RunConfig::from_json(&doc.to_string()).unwrap()).unwrap()
    };
    println!("shared runs: {:.1} s", start.elapsed().as_secs_f64());
    let cr_metrics = [
        ("brinkmann exp", &brinkmann),
        ("brinkmann null", &null),
        ("galaev n=5", &galaev5),
        ("galaev n=6", &galaev6),
    ];

    // 1. Worked Brinkmann example.
    let mut c = Criterion::new();
    c.all_points("brinkmann exp", &brinkmann, C1);
    ok &= c.line(1, "Brinkmann example reproduced", &format!("{POINTS} points, n = 5"));

    // 2. Null branch.
    let mut c = Criterion::new();
    c.all_points("brinkmann null", &null, C2);
    ok &= c.line(
        2,
        "Brinkmann null branch: rank-one Ricci and alignment",
        &format!("{POINTS} points"),
    );

    // 3. Algebraic identities at every recurrent point.
    let mut c = Criterion::new();
    let mut recurrent = 0;
    let mut closed = 0;
    for (label, r) in cr_metrics {
        let pts: Vec<_> = recurrent_points(r).collect();
        if pts.is_empty() {
            c.fail(format!("{label}: no recurrent points"));
        }
        for p in pts {
            recurrent += 1;
            for &(name, tol) in C3 {
                match p.checks.iter().find(|x| x.name == name) {
                    Some(rec) => c.check_record(label, rec, tol),
                    None => c.fail(format!("{label}: point {} lacks {name}", p.index)),
                }
            }
            let is_closed = p
                .recurrence
                .as_ref()
                .and_then(|s| s.closedness_defect)
                .is_some_and(|d| d <= r.tolerances["recurrence.closedness"]);
            let rec = p.checks.iter().find(|x| x.name == C3_CLOSED.0);
            match (is_closed, rec) {
                (true, Some(rec)) => {
                    closed += 1;
                    c.check_record(label, rec, C3_CLOSED.1)
                }
                (true, None) => c.fail(format!("{label}: point {} lacks {}", p.index, C3_CLOSED.0)),
                (false, _) => {}
            }
        }
    }
    ok &= c.line(
        3,
        "identity battery on recurrent points of every catalog CR metric",
        &format!("{recurrent} recurrent points, {closed} with closed recurrence covector"),
    );

    // 4. Representation battery.
    let mut c = Criterion::new();
    c.synthetic(&synthetic, C4);
    let syn = synthetic.synthetic.as_ref();
    if syn.map(|s| s.dims.as_slice()) != Some(&SYNTHETIC_DIMS[..]) {
        c.fail(format!("dims {:?}", syn.map(|s| &s.dims)));
    }
    if synthetic_record(&synthetic, "synthetic.round_trip").and_then(|r| r.count) != Some(SYNTHETIC_COUNT) {
        c.fail("round trip did not cover every instance".into());
    }
    ok &= c.line(
        4,
        "Kulkarni-Nomizu representation battery",
        &format!("{SYNTHETIC_COUNT} instances, n in {SYNTHETIC_DIMS:?}"),
    );

    // 5. Parallel tensor h.
    let mut c = Criterion::new();
    c.synthetic(&synthetic, C5);
    let mut nonzero_c2 = 0;
    for (label, r) in cr_metrics {
        for p in &r.points {
            let pass = p
                .checks
                .iter()
                .any(|x| x.name == "parallel.h_trace" && x.status != Status::Inapplicable);
            if pass {
                nonzero_c2 += 1;
                for &(name, tol) in C5_POINTS {
                    if let Some(rec) = p.checks.iter().find(|x| x.name == name) {
                        c.check_record(label, rec, tol);
                    }
                }
            }
        }
    }
    ok &= c.line(
        5,
        "parallel tensor h battery",
        &format!("synthetic instances plus {nonzero_c2} catalog points with non-zero C^2"),
    );

    // 6. Galaev, electric/magnetic split, decomposability.
    let mut c = Criterion::new();
    c.all_points("galaev n=5", &galaev5, C6_GALAEV);
    c.all_points("galaev n=6", &galaev6, C6_GALAEV);
    c.synthetic(&synthetic, C6_SYNTHETIC);
    match synthetic_record(&synthetic, "synthetic.em_split_sum").and_then(|r| r.count) {
        Some(k) if k >= EM_PAIRS => {}
        other => c.fail(format!("em split covered {other:?} pairs, need {EM_PAIRS}")),
    }
    match synthetic_record(&synthetic, "synthetic.purely_electric_consistency").and_then(|r| r.value) {
        Some(v) if v >= 1.0 => {}
        other => c.fail(format!("purely electric consistency fraction {other:?}")),
    }
    match synthetic_record(&synthetic, "synthetic.decomposability_mismatch").and_then(|r| r.count) {
        Some(k) if k >= SYNTHETIC_DIMS.len() => {}
        other => c.fail(format!("decomposability covered {other:?} dimensions")),
    }
    ok &= c.line(
        6,
        "pp-wave, electric split and decomposability battery",
        "galaev n = 5, 6; synthetic",
    );

    // 7. Negative controls.
    let mut c = Criterion::new();
    let mut inapplicable = 0;
    for (label, r) in [
        ("flat", &flat),
        ("constcurv k>0", &sphere),
        ("constcurv k<0", &de_sitter),
    ] {
        for p in &r.points {
            if !p.conformally_flat {
                c.fail(format!("{label}: point {} not conformally flat", p.index));
            }
            for rec in &p.checks {
                let group = rec.name.split('.').next().unwrap_or("");
                if group == "curvature" || group == "reference" {
                    continue;
                }
                if rec.status == Status::Inapplicable {
                    inapplicable += 1;
                } else {
                    c.fail(format!("{label}: {} reported {:?}", rec.name, rec.status));
                }
            }
        }
    }
    if synthetic.tolerances.get("negative_threshold") != Some(&NEGATIVE_THRESHOLD) {
        c.fail("negative-control threshold not pinned".into());
    }
    for name in C7_SYNTHETIC {
        match synthetic_record(&synthetic, name) {
            Some(rec) if rec.status == Status::Pass && rec.value.is_some_and(|v| v >= NEGATIVE_FRACTION) => {}
            other => c.fail(format!("{name}: {:?}", other.map(|r| (r.status, r.value)))),
        }
    }
    ok &= c.line(
        7,
        "negative controls",
        &format!("{inapplicable} CR records inapplicable on conformally flat metrics"),
    );

    // 8. Determinism through the binary.
    let t8 = Instant::now();
    let mut c = Criterion::new();
    let dir = std::env::temp_dir().join(format!("weyl-lab-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg_path = dir.join("run.json");
    let mut cfg = metric_config(GALAEV_5, 5, &["all"]);
    cfg.synthetic = Some(serde_json::from_value(serde_json::json!({"count": 40, "seed": 11})).unwrap());
    std::fs::write(&cfg_path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    let mut reports = Vec::new();
    for k in 0..2 {
        let out = dir.join(format!("report{k}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_weyl-lab"))
            .args([
                "run",
                "--config",
                cfg_path.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .expect("binary runs");
        if status.status.code() != Some(0) {
            c.fail(format!("run {k} exited with {:?}", status.status.code()));
        }
        let text = std::fs::read_to_string(&out).unwrap_or_default();
        match serde_json::from_str::<Report>(&text) {
            Ok(r) => reports.push(r.canonical_json()),
            Err(e) => c.fail(format!("run {k}: unreadable report: {e}")),
        }
    }
    if reports.len() == 2 && reports[0] != reports[1] {
        c.fail("reports differ outside the timestamp".into());
    }
    let _ = std::fs::remove_dir_all(&dir);
    let detail = format!("timestamp excluded; {:.1} s", t8.elapsed().as_secs_f64());
    ok &= c.line(8, "byte-identical reports across consecutive runs", &detail);

    println!(
        "acceptance: {} ({:.1} s total)",
        if ok { "all criteria PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    if !ok {
        std::process::exit(1);
    }
}
