//! Configuration-driven runner for the curvature identity battery.
//!
//! [`run`] evaluates every enabled check group at every sample point (in
//! parallel, assembled in point order) plus the seeded synthetic battery,
//! and returns a [`report::Report`].

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod config;
pub mod report;
pub mod synthetic;

use rayon::prelude::*;

use weyl_core::conventions;
use weyl_core::curvature::convention_self_test;

use crate::battery::Battery;
use crate::config::{ConfigError, RunConfig, Tolerances};
use crate::report::{Engine, Report, Verdict, SCHEMA};

pub use config::Overrides;

pub const SIGNATURE_CONVENTION: &str =
    "inertia (n_plus, n_minus) of g; Lorentzian when exactly one eigenvalue has the minority sign, in either (-,+,...,+) or (+,-,...,-)";

/// Runs the configured battery on the current rayon pool.
pub fn run(cfg: &RunConfig) -> Result<Report, ConfigError> {
    cfg.validate()?;
    let tol = Tolerances::new(&cfg.tolerances)?;
    let groups = cfg.checks.groups()?;
    let points = cfg.points.resolve(cfg.n)?;
    let spec = cfg.spec();
    let battery = Battery {
        spec: &spec,
        tol: &tol,
        groups: &groups,
        numerics: cfg.numerics,
    };
    let records: Vec<_> = points
        .par_iter()
        .enumerate()
        .map(|(i, x)| battery.evaluate_point(i, x))
        .collect();
    let synthetic = groups.iter().any(|g| g == "synthetic").then(|| {
        let syn = cfg.synthetic.clone().unwrap_or_default();
        synthetic::run(&syn, &[cfg.n], &tol)
    });
    let mut report = Report {
        schema: SCHEMA,
        generated_at: chrono::Utc::now().to_rfc3339(),
        engine: Engine {
            name: "weyl-lab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            signature_convention: SIGNATURE_CONVENTION.into(),
            conventions: serde_json::to_value(conventions()).expect("conventions serialize"),
            convention_self_test: match convention_self_test() {
                Ok(()) => "pass".into(),
                Err(e) => e,
            },
        },
        config: serde_json::to_value(cfg).expect("config serializes"),
        tolerances: tol.map().clone(),
        points: records,
        synthetic,
        summary: Vec::new(),
        verdict: Verdict {
            passed: false,
            failed_checks: Vec::new(),
            points_evaluated: 0,
            points_errored: 0,
            exit_code: 1,
        },
    };
    report.finalize();
    Ok(report)
}

/// [`run`] on a dedicated pool of `jobs` threads (all cores when `None`).
pub fn run_with_jobs(cfg: &RunConfig, jobs: Option<usize>) -> Result<Report, ConfigError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| ConfigError::Invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run(cfg))
}
