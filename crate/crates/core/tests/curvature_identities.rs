//! Differential and algebraic curvature identities on every catalog entry.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weyl_core::curvature::{
    conformal_harmonicity_defect, convention_self_test, divergence_identity_defect, first_bianchi_defect,
    metric_compatibility_defect, ricci_identity_loop_check, riemann_symmetry_defect, second_bianchi_defect,
    trace_defect,
};
use weyl_core::{catalog, CurvaturePack, FunctionForm, MetricKind, MetricSpec};

fn specs() -> Vec<MetricSpec> {
    let mut v: Vec<MetricSpec> = catalog().into_iter().map(|e| MetricSpec::new(5, e.example)).collect();
    v.push(MetricSpec::new(
        6,
        MetricKind::Galaev {
            a: FunctionForm::poly(&[0.5, -1.0, 0.25]),
            f: FunctionForm::Exp { scale: 2.0, rate: 0.5 },
            lambda: vec![0.5, 0.5, -1.0, 0.0],
        },
    ));
    v
}

fn points(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..n).map(|_| rng.random_range(0.1..1.0)).collect())
        .collect()
}

#[test]
fn identities_hold_at_seeded_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for spec in specs() {
        for x in points(&mut rng, spec.n, 8) {
            let p = CurvaturePack::at(&spec, &x).unwrap();
            let name = spec.name();
            assert!(first_bianchi_defect(p.riemann_lower()) < 1e-12, "{name}");
            assert!(riemann_symmetry_defect(p.riemann_lower()) < 1e-12, "{name}");
            assert!(second_bianchi_defect(&p.nabla_riemann, p.nabla_scale) < 1e-9, "{name}");
            assert!(divergence_identity_defect(&p) < 1e-9, "{name}");
            assert!(metric_compatibility_defect(&p).unwrap() < 1e-12, "{name}");
            // Weyl identities are judged against the Riemann tensor it is built from.
            let reference = p.weyl_tensor().max_abs().max(p.riemann_lower().max_abs());
            let rel = if reference > 0.0 {
                p.weyl_tensor().max_abs() / reference
            } else {
                0.0
            };
            assert!(trace_defect(p.weyl_tensor(), &p.metric) * rel < 1e-12, "{name}");
            assert!(first_bianchi_defect(p.weyl_tensor()) * rel < 1e-12, "{name}");
        }
    }
}

#[test]
fn galaev_is_conformally_harmonic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for spec in specs().into_iter().filter(|s| s.name() == "galaev") {
        for x in points(&mut rng, spec.n, 10) {
            let p = CurvaturePack::at(&spec, &x).unwrap();
            assert!(conformal_harmonicity_defect(&p) < 1e-10);
        }
    }
}

#[test]
fn transport_loops_match_ricci_identity() {
    convention_self_test().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for spec in specs().into_iter().filter(|s| s.name() != "flat") {
        let x = points(&mut rng, spec.n, 1).remove(0);
        let v: Vec<f64> = (0..spec.n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pack = CurvaturePack::at(&spec, &x).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 3), (2, 4)] {
            let d = ricci_identity_loop_check(&spec, &pack, i, j, &v, 1e-3).unwrap();
            assert!(d < 1e-4, "{} ({i},{j}): {d}", spec.name());
        }
    }
}
