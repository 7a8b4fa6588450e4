//! Seeded synthetic battery: representation, parallel tensor, spectral,
//! Lorentzian and negative-control checks on constructed tensors.

use std::collections::BTreeMap;

use rand::RngExt;
use rayon::prelude::*;

use weyl_core::curvature::{first_bianchi_defect, riemann_symmetry_defect, trace_defect};
use weyl_core::lorentz::{decomposability_obstruction, em_split, purely_electric_test, Decomposability};
use weyl_core::recurrence::{c2_gradient, extract_alpha, gradient_alpha_check};
use weyl_core::scalar::scaled;
use weyl_core::synthetic::{
    cr_instance, direct_h_instance, random_frame, random_null_covector, random_riemann, random_symmetric,
    random_timelike_unit, random_weyl, rng, structured_instance, AlphaKind, Split,
};
use weyl_core::tensor::full_square;
use weyl_core::weylops::{
    alpha_alpha, commutator_defect, compatibility_defect, cyclic_recurrence_defect, electric_tensor,
    grad_g_relation_defects, grycak_fit, h_alpha_defect, h_tensor, lovelock_family_defects, parallel_h_defect,
    quasi_einstein_defect, spectral_analysis, zero_second_eigenvalue_solutions,
};
use weyl_core::{Applicability, Tensor};

use crate::config::{SyntheticConfig, Tolerances};
use crate::report::{CheckRecord, Comparison, Status, SyntheticRecord};

/// Deterministic per-instance seed.
pub fn sub_seed(base: u64, stream: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(base ^ mix(stream.wrapping_shl(32) ^ index))
}

const NULL_TOL: f64 = 1e-10;

/// One instance's raw observations: `(name, defect, comparison, hard)`.
#[derive(Default)]
struct Obs {
    items: Vec<(&'static str, f64, Comparison, bool)>,
    /// Boolean outcomes aggregated into fractions: `(name, hit)`.
    hits: Vec<(&'static str, bool)>,
}

impl Obs {
    fn le(&mut self, name: &'static str, d: f64) {
        self.items.push((name, d, Comparison::AtMost, true));
    }
    fn ge(&mut self, name: &'static str, d: f64) {
        self.items.push((name, d, Comparison::AtLeast, true));
    }
    fn info(&mut self, name: &'static str, d: f64) {
        self.items.push((name, d, Comparison::AtMost, false));
    }
    fn hit(&mut self, name: &'static str, v: bool) {
        self.hits.push((name, v));
    }
}

fn ok<E>(r: Result<f64, E>) -> f64 {
    r.unwrap_or(f64::NAN)
}

fn kind_for(i: usize) -> AlphaKind {
    [AlphaKind::Spacelike, AlphaKind::Timelike, AlphaKind::Riemannian][i % 3]
}

/// Kulkarni–Nomizu instances: round trip, `C²` relation, compatibilities,
/// trace and Bianchi, the `h` tensor on recurrent data.
fn representation(seed: u64, i: usize, n: usize, kind: AlphaKind) -> Obs {
    let mut r = rng(sub_seed(seed, 1, i as u64));
    let inst = cr_instance(&mut r, n, kind);
    let m = inst.metric();
    let c = &inst.c;
    let mut o = Obs::default();
    match electric_tensor(c, &inst.alpha, m, NULL_TOL) {
        Ok(e) => o.le(
            "synthetic.round_trip",
            scaled(ok(e.e.max_abs_diff(&inst.e)), inst.e.max_abs()),
        ),
        Err(_) => o.le("synthetic.round_trip", f64::NAN),
    }
    let nn = n as f64;
    let lhs = ok(full_square(c, m));
    let rhs = 4.0 * (nn - 2.0) / (nn - 3.0) * ok(full_square(&inst.e, m));
    o.le(
        "synthetic.c2_relation",
        scaled((lhs - rhs).abs(), lhs.abs().max(rhs.abs())),
    );
    o.le(
        "synthetic.electric_compatibility",
        ok(compatibility_defect(&inst.e, c, m)),
    );
    o.le(
        "synthetic.alpha_compatibility",
        ok(compatibility_defect(&alpha_alpha(&inst.alpha), c, m)),
    );
    o.le("synthetic.trace_free", trace_defect(c, m));
    o.le("synthetic.first_bianchi", first_bianchi_defect(c));
    o.le("synthetic.riemann_symmetry", riemann_symmetry_defect(c));
    o.info(
        "synthetic.cyclic_recurrence",
        ok(cyclic_recurrence_defect(c, &inst.alpha, m)),
    );

    match extract_alpha(c, &inst.nabla_c, m, 0.0) {
        Ok(rec) => {
            o.le("synthetic.recurrence_residual", rec.residual);
            let dc2 = c2_gradient(c, &inst.nabla_c, m).unwrap_or_default();
            match gradient_alpha_check(&rec, &dc2, 1e-10) {
                Applicability::Defect { value } => o.le("synthetic.gradient", value),
                Applicability::Inapplicable { .. } => o.le("synthetic.gradient", f64::NAN),
            }
        }
        Err(_) => o.le("synthetic.recurrence_residual", f64::NAN),
    }

    match h_tensor(c, m, 1e-12) {
        Ok(p) => {
            o.le("synthetic.h_trace", (p.trace - 1.0).abs());
            o.le("synthetic.nabla_h", ok(parallel_h_defect(c, &inst.nabla_c, m, 1e-12)));
            o.le("synthetic.h_alpha", h_alpha_defect(&p.h, &inst.alpha, m));
            let big = inst.nabla_c.max_abs();
            let noise = std::cell::RefCell::new(&mut r);
            let noisy = inst
                .nabla_c
                .map(|v| v + 1e-3 * big * noise.borrow_mut().random_range(-1.0..1.0));
            o.ge(
                "synthetic.nabla_h_sensitivity",
                ok(parallel_h_defect(c, &noisy, m, 1e-12)),
            );
        }
        Err(_) => o.le("synthetic.h_trace", f64::NAN),
    }

    if kind == AlphaKind::Timelike {
        let u = m.raise_covector(&inst.alpha);
        match purely_electric_test(c, &u, m, 1e-9) {
            Ok(pe) => {
                o.le("synthetic.timelike_purely_electric", pe.defect);
                o.hit("synthetic.purely_electric_consistency", pe.consistent);
            }
            Err(_) => o.le("synthetic.timelike_purely_electric", f64::NAN),
        }
    }
    o
}

/// Two-eigenvalue instances with a Grycak Ricci tensor and matching Riemann.
fn structured(seed: u64, i: usize, n: usize, j: usize) -> Obs {
    let mut r = rng(sub_seed(seed, 2, i as u64));
    let split = if j % 2 == 1 && (n - 1).is_multiple_of(2) {
        Split::Halves
    } else {
        Split::One
    };
    let riemannian = j % 4 >= 2;
    let s = structured_instance(&mut r, n, split, riemannian);
    let m = s.cr.metric();
    let c = &s.cr.c;
    let mut o = Obs::default();
    let p = match h_tensor(c, m, 1e-12) {
        Ok(p) => p,
        Err(_) => {
            o.le("synthetic.h_trace", f64::NAN);
            return o;
        }
    };
    o.le("synthetic.h_trace", (p.trace - 1.0).abs());
    o.le("synthetic.h_alpha", h_alpha_defect(&p.h, &s.cr.alpha, m));
    o.le("synthetic.commutation", commutator_defect(&p.h, &s.ricci, m));
    o.le("synthetic.h_weyl_compatibility", ok(compatibility_defect(&p.h, c, m)));
    o.le(
        "synthetic.h_riemann_compatibility",
        ok(compatibility_defect(&p.h, &s.riemann, m)),
    );
    match grycak_fit(&s.ricci, s.scalar, &p.h, m, 1e-12) {
        Ok(fit) => {
            o.le("synthetic.grycak_residual", fit.residual);
            o.le(
                "synthetic.grycak_g",
                scaled((fit.g_coeff - s.g_coeff).abs(), s.g_coeff.abs()),
            );
            spectral(&mut o, &s.ricci, &p.h, s.scalar, fit.g_coeff, m, s.expected_n_h);
            if s.expected_n_h == 1 {
                o.le(
                    "synthetic.quasi_einstein",
                    quasi_einstein_defect(&s.ricci, s.scalar, fit.g_coeff, &s.cr.alpha, m),
                );
            }
        }
        Err(_) => o.le("synthetic.grycak_residual", f64::NAN),
    }
    let zero = vec![0.0; n * n];
    match lovelock_family_defects(c, &s.ricci, &s.cr.alpha, &zero, m) {
        Ok(base) => o.le("synthetic.lovelock_baseline", base.iter().cloned().fold(0.0, f64::max)),
        Err(_) => o.le("synthetic.lovelock_baseline", f64::NAN),
    }
    let noise = random_symmetric(&mut r, n).scale(1e-2 * s.ricci.max_abs());
    let perturbed = s.ricci.add(&noise).expect("same shape");
    match lovelock_family_defects(c, &perturbed, &s.cr.alpha, &zero, m) {
        Ok(d) => o.ge("synthetic.lovelock_sensitivity", d[2]),
        Err(_) => o.ge("synthetic.lovelock_sensitivity", f64::NAN),
    }
    o
}

fn spectral(
    o: &mut Obs,
    ricci: &Tensor<f64>,
    h: &Tensor<f64>,
    scalar: f64,
    g: f64,
    m: &weyl_core::MetricAtPoint<f64>,
    expected_n_h: usize,
) {
    match spectral_analysis(ricci, h, scalar, g, m, 1e-6) {
        Ok(s) => {
            o.le("synthetic.two_clusters", (s.clusters.len() as f64 - 2.0).abs());
            o.le("synthetic.n_h", (s.n_h as f64 - expected_n_h as f64).abs());
            o.le("synthetic.scalar_split", s.scalar_defect);
            o.le("synthetic.ricci_spectrum", s.ricci_spectrum_defect);
            o.le("synthetic.projector_idempotence", s.projector_idempotence_defect);
            o.le("synthetic.projector_trace", s.projector_trace_defect);
            o.le("synthetic.h_square", s.h_square_defect);
        }
        Err(_) => o.le("synthetic.two_clusters", f64::NAN),
    }
}

/// Spectra prescribed directly, including the `h′ = 0` case.
fn direct(seed: u64, i: usize, n: usize, n_h: usize) -> Obs {
    let mut r = rng(sub_seed(seed, 3, i as u64));
    let d = direct_h_instance(&mut r, n, n_h, i % 2 == 1);
    let m = &d.frame.metric;
    let mut o = Obs::default();
    match grycak_fit(&d.ricci, d.scalar, &d.h, m, 1e-12) {
        Ok(fit) => {
            o.le("synthetic.grycak_residual", fit.residual);
            o.le(
                "synthetic.grycak_g",
                scaled((fit.g_coeff - d.g_coeff).abs(), d.g_coeff.abs()),
            );
            spectral(&mut o, &d.ricci, &d.h, d.scalar, fit.g_coeff, m, n_h);
        }
        Err(_) => o.le("synthetic.grycak_residual", f64::NAN),
    }
    o.le("synthetic.h_alpha", h_alpha_defect(&d.h, &d.alpha, m));
    if n == 5 && n_h == 3 {
        o.le("synthetic.h_prime_zero", d.h_prime.abs());
    }
    o
}

/// Random `(C, u)` pairs for the electric/magnetic split.
fn em_pair(seed: u64, i: usize, n: usize) -> Obs {
    let mut r = rng(sub_seed(seed, 4, i as u64));
    let f = random_frame(&mut r, n, 1);
    let c = random_weyl(&mut r, &f);
    let u = random_timelike_unit(&mut r, &f);
    let mut o = Obs::default();
    match em_split(&c, &u, &f.metric) {
        Ok(s) => o.le("synthetic.em_split_sum", s.sum_defect),
        Err(_) => o.le("synthetic.em_split_sum", f64::NAN),
    }
    match purely_electric_test(&c, &u, &f.metric, 1e-9) {
        Ok(pe) => o.hit("synthetic.purely_electric_consistency", pe.consistent),
        Err(_) => o.hit("synthetic.purely_electric_consistency", false),
    }
    o
}

/// Non-CR tensors that should violate the identities.
fn negative(seed: u64, i: usize, n: usize, threshold: f64) -> Obs {
    let mut r = rng(sub_seed(seed, 5, i as u64));
    let f = random_frame(&mut r, n, 1);
    let m = &f.metric;
    let mut o = Obs::default();
    let k = random_riemann(&mut r, n);
    let s = random_symmetric(&mut r, n);
    o.hit(
        "synthetic.negative_compatibility",
        ok(compatibility_defect(&s, &k, m)) > threshold,
    );
    let c = random_weyl(&mut r, &f);
    let u = random_timelike_unit(&mut r, &f);
    match purely_electric_test(&c, &u, m, 1e-9) {
        Ok(pe) => {
            o.hit("synthetic.negative_purely_electric", pe.defect > threshold);
            o.hit("synthetic.purely_electric_consistency", pe.consistent);
        }
        Err(_) => o.hit("synthetic.negative_purely_electric", false),
    }
    let beta = random_null_covector(&mut r, &f);
    o.hit(
        "synthetic.negative_iid",
        ok(compatibility_defect(&alpha_alpha(&beta), &c, m)) > threshold,
    );
    o
}

/// `∇G` relation on fields built to satisfy it.
fn grad_g(seed: u64, i: usize, n: usize) -> Obs {
    let mut r = rng(sub_seed(seed, 6, i as u64));
    let inst = cr_instance(&mut r, n, kind_for(i));
    let m = inst.metric();
    let alpha = &inst.alpha;
    let grad_r: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let nn = n as f64;
    let a2 = m.dot_covectors(alpha, alpha);
    let c = nn * (nn - 2.0).powi(2) / ((nn - 1.0).powi(2) * (nn - 4.0));
    let up_r = m.raise_covector(&grad_r);
    let ar: f64 = alpha.iter().zip(&up_r).map(|(a, b)| a * b).sum();
    let grad_g: Vec<f64> = (0..n).map(|j| c * (alpha[j] * ar / a2 - grad_r[j] / nn)).collect();
    let d = grad_g_relation_defects(alpha, &grad_g, &grad_r, m);
    let mut o = Obs::default();
    o.le("synthetic.grad_g_relation", d[0].max(d[1]));
    o
}

/// Decomposability arithmetic on a recurrent Lorentzian instance of each dimension.
fn decomposability(seed: u64, i: usize, n: usize) -> Obs {
    let mut r = rng(sub_seed(seed, 7, i as u64));
    let inst = cr_instance(&mut r, n, AlphaKind::Spacelike);
    let beta = random_null_covector(&mut r, &inst.frame);
    let h = h_tensor(&inst.c, inst.metric(), 1e-12).ok();
    let mut o = Obs::default();
    let d = match decomposability_obstruction(n, h.as_ref(), Some(&beta), inst.metric()) {
        Decomposability::Checked(ob) if ob.mismatch => 0.0,
        _ => 1.0,
    };
    o.le("synthetic.decomposability_mismatch", d);
    o
}

struct Agg {
    worst: f64,
    cmp: Comparison,
    hard: bool,
    count: usize,
    failed: usize,
}

fn aggregate(all: Vec<Obs>, tol: &Tolerances) -> Vec<CheckRecord> {
    let mut order: Vec<&'static str> = Vec::new();
    let mut aggs: BTreeMap<&'static str, Agg> = BTreeMap::new();
    let mut hits: BTreeMap<&'static str, (usize, usize)> = BTreeMap::new();
    let mut hit_order: Vec<&'static str> = Vec::new();
    for o in &all {
        for &(name, d, cmp, hard) in &o.items {
            let t = tol.get(name);
            let a = aggs.entry(name).or_insert_with(|| {
                order.push(name);
                Agg {
                    worst: d,
                    cmp,
                    hard,
                    count: 0,
                    failed: 0,
                }
            });
            a.count += 1;
            if !cmp.passes(d, t) {
                a.failed += 1;
            }
            let worse = match cmp {
                Comparison::AtMost => d > a.worst || d.is_nan(),
                Comparison::AtLeast => d < a.worst || d.is_nan(),
            };
            if worse {
                a.worst = d;
            }
        }
        for &(name, v) in &o.hits {
            let e = hits.entry(name).or_insert_with(|| {
                hit_order.push(name);
                (0, 0)
            });
            e.0 += v as usize;
            e.1 += 1;
        }
    }
    let mut out: Vec<CheckRecord> = order
        .into_iter()
        .map(|name| {
            let a = &aggs[name];
            let t = tol.get(name);
            let mut rec = CheckRecord::judged(name, a.worst, t, a.cmp).with_count(a.count);
            if !a.hard {
                rec.status = Status::Info;
            } else if a.failed > 0 {
                rec.status = Status::Fail;
                rec.note = Some(format!("{} of {} instances failed", a.failed, a.count));
            }
            rec
        })
        .collect();
    let threshold = tol.get("negative_threshold");
    for name in hit_order {
        let (yes, total) = hits[name];
        let frac = yes as f64 / total as f64;
        let rec = if name == "synthetic.purely_electric_consistency" {
            CheckRecord::at_most(name, 1.0 - frac, tol.get(name))
                .with_note("1 - fraction of instances where both criteria agree")
        } else {
            CheckRecord::judged(name, frac, tol.get(name), Comparison::AtLeast)
                .with_note(format!("fraction of instances with defect > {threshold}"))
        };
        out.push(rec.with_value(frac).with_count(total));
    }
    out
}

/// Runs the synthetic battery; `extra_dims` adds dimensions to the
/// decomposability arithmetic.
pub fn run(cfg: &SyntheticConfig, extra_dims: &[usize], tol: &Tolerances) -> SyntheticRecord {
    let dims = &cfg.dims;
    let seed = cfg.seed;
    let threshold = tol.get("negative_threshold");
    let nd = dims.len().max(1);
    let dim = |i: usize| dims[i % nd];

    let mut all: Vec<Obs> = (0..cfg.count)
        .into_par_iter()
        .map(|i| representation(seed, i, dim(i), kind_for(i / nd)))
        .collect();

    let structured_jobs: Vec<(usize, usize)> = dims
        .iter()
        .flat_map(|&n| (0..cfg.structured).map(move |j| (n, j)))
        .collect();
    all.extend(
        structured_jobs
            .par_iter()
            .enumerate()
            .map(|(i, &(n, j))| structured(seed, i, n, j))
            .collect::<Vec<_>>(),
    );

    let mut direct_jobs: Vec<(usize, usize)> = dims
        .iter()
        .flat_map(|&n| (1..=3.min(n - 2)).map(move |n_h| (n, n_h)))
        .collect();
    if !direct_jobs.contains(&(5, 3)) {
        direct_jobs.push((5, 3));
    }
    all.extend(
        direct_jobs
            .par_iter()
            .enumerate()
            .map(|(i, &(n, n_h))| direct(seed, i, n, n_h))
            .collect::<Vec<_>>(),
    );

    all.extend(
        (0..cfg.em_pairs)
            .into_par_iter()
            .map(|i| em_pair(seed, i, dim(i)))
            .collect::<Vec<_>>(),
    );
    all.extend(
        (0..cfg.count)
            .into_par_iter()
            .map(|i| negative(seed, i, dim(i), threshold))
            .collect::<Vec<_>>(),
    );
    all.extend(
        (0..nd * 3)
            .into_par_iter()
            .map(|i| grad_g(seed, i, dim(i)))
            .collect::<Vec<_>>(),
    );

    let mut dec_dims: Vec<usize> = dims.iter().chain(extra_dims).copied().filter(|&n| n >= 5).collect();
    dec_dims.sort_unstable();
    dec_dims.dedup();
    all.extend(
        dec_dims
            .par_iter()
            .enumerate()
            .map(|(i, &n)| decomposability(seed, i, n))
            .collect::<Vec<_>>(),
    );

    let mut scan = Obs::default();
    let sols = zero_second_eigenvalue_solutions(5..=12);
    scan.le(
        "synthetic.zero_second_eigenvalue",
        if sols == vec![(5, 3)] { 0.0 } else { 1.0 },
    );
    all.push(scan);

    let instances = all.len();
    let mut checks = aggregate(all, tol);
    if let Some(rec) = checks.iter_mut().find(|c| c.name == "synthetic.zero_second_eigenvalue") {
        rec.note = Some(format!("integer solutions (n, n_h) for n in 5..=12: {sols:?}"));
    }
    SyntheticRecord {
        seed,
        dims: dims.clone(),
        instances,
        checks,
    }
}
