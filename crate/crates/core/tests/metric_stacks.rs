//! Jet-derived metric partials against central differences of the next-lower
//! stack, at seeded points of every catalog entry.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weyl_core::{catalog, evaluate, FunctionForm, MetricError, MetricKind, MetricSpec, Tensor};

const H: f64 = 1e-5;
const TOL: f64 = 1e-6;

fn specs() -> Vec<MetricSpec> {
    let mut out: Vec<MetricSpec> = catalog().into_iter().map(|e| MetricSpec::new(5, e.example)).collect();
    out.push(MetricSpec::new(6, MetricKind::ConstCurv { k: -0.7, negative: 1 }));
    out.push(MetricSpec::new(
        5,
        MetricKind::BrinkmannPq {
            p: FunctionForm::Exp { scale: 1.5, rate: -0.5 },
            q: FunctionForm::poly(&[0.2, 0.0, 1.0, 0.3]),
        },
    ));
    out
}

/// Central difference of a stack along coordinate `k`, prepended as a new
/// leading slot.
fn fd_stack(spec: &MetricSpec, x: &[f64], get: impl Fn(&weyl_core::MetricAtPointF64) -> Tensor<f64>) -> Vec<Vec<f64>> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += H;
            xm[k] -= H;
            let p = get(&evaluate(spec, &xp).unwrap());
            let m = get(&evaluate(spec, &xm).unwrap());
            p.data()
                .iter()
                .zip(m.data())
                .map(|(a, b)| (a - b) / (2.0 * H))
                .collect()
        })
        .collect()
}

fn compare(name: &str, order: usize, ad: &Tensor<f64>, fd: &[Vec<f64>]) {
    let scale = ad.max_abs().max(1.0);
    let block = ad.data().len() / fd.len();
    for (k, row) in fd.iter().enumerate() {
        for (off, v) in row.iter().enumerate() {
            let a = ad.data()[k * block + off];
            assert!(
                (a - v).abs() <= TOL * scale,
                "{name} order {order}: slot {k}/{off}: {a} vs {v}"
            );
        }
    }
}

#[test]
fn derivative_stacks_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for spec in specs() {
        for _ in 0..10 {
            let x: Vec<f64> = (0..spec.n).map(|_| rng.random_range(0.1..1.0)).collect();
            let m = evaluate(&spec, &x).unwrap();
            compare(spec.name(), 1, m.dg(), &fd_stack(&spec, &x, |m| m.g().clone()));
            compare(spec.name(), 2, m.d2g(), &fd_stack(&spec, &x, |m| m.dg().clone()));
            compare(spec.name(), 3, m.d3g(), &fd_stack(&spec, &x, |m| m.d2g().clone()));
        }
    }
}

#[test]
fn galaev_rejects_unbalanced_lambda() {
    let spec = MetricSpec::new(
        5,
        MetricKind::Galaev {
            a: FunctionForm::poly(&[0.0, 1.0]),
            f: FunctionForm::exp(),
            lambda: vec![1.0, -1.0, 1e-9],
        },
    );
    assert!(matches!(spec.validate(), Err(MetricError::InvalidSpec(_))));
    assert!(evaluate::<f64>(&spec, &[0.1, 0.4, 0.2, 0.3, 0.5]).is_err());
}

#[test]
fn inverse_and_signature_on_catalog() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for spec in specs() {
        let x: Vec<f64> = (0..spec.n).map(|_| rng.random_range(0.1..1.0)).collect();
        let m = evaluate(&spec, &x).unwrap();
        let n = spec.n;
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| m.g().at2(i, k) * m.ginv().at2(k, j)).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        let inertia = weyl_core::signature(&m).unwrap();
        assert_eq!(inertia.n_plus + inertia.n_minus, n);
    }
}
