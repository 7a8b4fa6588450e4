//! Closed-form values for the pq line element and the Galaev pp-wave.

use approx::assert_relative_eq;
use weyl_core::metrics::BrinkmannValues;
use weyl_core::recurrence::recurrence_at;
use weyl_core::{CurvaturePack, FunctionForm, MetricKind, MetricSpec};

const X: [f64; 5] = [0.3, 0.7, 0.2, 0.1, 0.4];

fn pq(q: FunctionForm) -> MetricSpec {
    MetricSpec::new(
        5,
        MetricKind::BrinkmannPq {
            p: FunctionForm::exp(),
            q,
        },
    )
}

#[test]
fn example_point_curvature() {
    let pack = CurvaturePack::at(&pq(FunctionForm::exp()), &X).unwrap();
    let e05 = 0.5f64.exp();
    assert_relative_eq!(pack.riemann_lower().at4(0, 2, 0, 2), 0.5 * e05, max_relative = 1e-13);
    assert_relative_eq!(
        pack.riemann_lower().at4(0, 2, 0, 2),
        0.824_360_635_350_064,
        max_relative = 1e-12
    );
    assert_relative_eq!(pack.ricci_tensor().at2(0, 0), 0.5 * e05, max_relative = 1e-13);
    for i in 0..5 {
        for j in 0..5 {
            if (i, j) != (0, 0) {
                assert!(pack.ricci_tensor().at2(i, j).abs() < 1e-13);
            }
        }
    }
    assert!(pack.scalar().abs() < 1e-13);
    assert_relative_eq!(pack.metric.ginv().at2(1, 1), -e05, max_relative = 1e-14);
}

#[test]
fn example_point_christoffel() {
    let b = BrinkmannValues::at(&FunctionForm::exp(), &FunctionForm::exp(), &X);
    let pack = CurvaturePack::at(&pq(FunctionForm::exp()), &X).unwrap();
    let g = pack.gamma();
    let (a, c, d) = b.christoffel();
    assert_relative_eq!(g.at3(1, 0, 0), a, max_relative = 1e-14);
    assert_relative_eq!(g.at3(1, 0, 2), c, max_relative = 1e-14);
    assert_relative_eq!(g.at3(1, 2, 0), c, max_relative = 1e-14);
    assert_relative_eq!(g.at3(2, 0, 0), d, max_relative = 1e-14);
    let mut nonzero = 0;
    for v in g.data() {
        if v.abs() > 1e-15 {
            nonzero += 1;
        }
    }
    assert_eq!(nonzero, 4);
}

#[test]
fn example_point_recurrence_vector() {
    let pack = CurvaturePack::at(&pq(FunctionForm::exp()), &X).unwrap();
    let rec = recurrence_at(&pack, 1e-12).unwrap();
    for (a, e) in rec.alpha.iter().zip([1.0, 0.0, 1.0, 0.0, 0.0]) {
        assert!((a - e).abs() < 1e-12, "{:?}", rec.alpha);
    }
    assert!(rec.residual < 1e-12);
    assert_relative_eq!(rec.alpha_sq, 1.0, max_relative = 1e-12);
    let up = rec.alpha_raised(&pack.metric);
    for (a, e) in up.iter().zip([0.0, 1.0, 1.0, 0.0, 0.0]) {
        assert!((a - e).abs() < 1e-12, "{up:?}");
    }
}

#[test]
fn null_branch_ricci_coefficient() {
    let spec = pq(FunctionForm::poly(&[0.0, 0.0, 1.0]));
    let pack = CurvaturePack::at(&spec, &X).unwrap();
    let ro = weyl_core::lorentz::rank_one_ricci_check(pack.ricci_tensor(), &[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    assert_relative_eq!(ro.coefficient, 0.3f64.exp(), max_relative = 1e-13);
    assert_relative_eq!(ro.coefficient, 1.349_858_807_576_003, max_relative = 1e-12);
    let b = BrinkmannValues::at(&FunctionForm::exp(), &FunctionForm::poly(&[0.0, 0.0, 1.0]), &X);
    assert_relative_eq!(b.null_ricci_coefficient(), ro.coefficient, max_relative = 1e-13);
}

#[test]
fn galaev_ricci_is_rank_one_and_traceless() {
    let spec = MetricSpec::new(
        5,
        MetricKind::Galaev {
            a: FunctionForm::poly(&[0.0, 1.0]),
            f: FunctionForm::exp(),
            lambda: vec![1.0, -1.0, 0.0],
        },
    );
    let x = [0.2f64, 0.4, 0.3, 0.6, 0.5];
    let pack = CurvaturePack::at(&spec, &x).unwrap();
    assert!(pack.scalar().abs() < 1e-10);
    let beta = spec.parallel_null_covector().unwrap();
    let pp = weyl_core::lorentz::ppwave_checks(&pack, &beta, &[0.0; 25], 3.5 * 0.4);
    assert!(pp.ricci_rank_one_defect < 1e-12);
    assert!(pp.trace_defect < 1e-10 && pp.cc_defect < 1e-11);
    // Measured coefficient under the engine's sign convention: −(n−2)·a(u).
    assert_relative_eq!(pp.ricci_coefficient, -3.0 * 0.4, max_relative = 1e-12);
}
