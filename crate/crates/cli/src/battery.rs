//! Per-point check battery.

use weyl_core::curvature::{
    conformal_harmonicity_defect, divergence_identity_defect, first_bianchi_defect, metric_compatibility_defect,
    ricci_identity_loop_check, riemann_symmetry_defect, second_bianchi_defect, trace_defect,
};
use weyl_core::lorentz::{
    decomposability_obstruction, ppwave_checks, purely_electric_test, rank_one_ricci_check, riemann_divergence_defect,
    type_iid_test, ClassificationFlags, Decomposability, FlagTolerances,
};
use weyl_core::metrics::BrinkmannValues;
use weyl_core::recurrence::{
    alpha_alpha_riemann_defect, c2_gradient, closedness, covariant_alpha_derivative, gradient_alpha_check,
    recurrence_at, ricci_alpha_eigen, semisymmetry_defect, tensor_recurrence_residual, Closedness,
};
use weyl_core::scalar::{max_abs, scaled};
use weyl_core::tensor::{full_square, full_square_scale};
use weyl_core::weylops::{
    alpha_alpha, commutator_defect, compatibility_defect, cyclic_recurrence_defect, electric_tensor,
    grad_g_relation_on_metric, grycak_fit, h_alpha_defect, h_tensor, is_null, lovelock_family_defects,
    parallel_h_defect, reconstruct_weyl, reconstruction_defect, spectral_analysis,
};
use weyl_core::{
    signature, Applicability, CurvaturePack, MetricKind, MetricSpec, RecurrenceError, RecurrenceResult, Tensor,
    Variance,
};

use crate::config::{Numerics, Tolerances};
use crate::report::{CheckRecord, Comparison, PointRecord, RecurrenceSummary};

const CONFORMALLY_FLAT: &str = "conformally flat point";

const RECURRENCE: &[&str] = &[
    "recurrence.residual",
    "recurrence.gradient",
    "recurrence.closedness",
    "recurrence.riemann_recurrence",
    "recurrence.alpha_alpha_riemann",
    "recurrence.ricci_eigen",
];
const IDENTITIES: &[&str] = &[
    "identities.cyclic_recurrence",
    "identities.alpha_compatibility",
    "identities.ricci_riemann_compatibility",
    "identities.semisymmetry",
    "identities.lovelock_alpha",
    "identities.lovelock_symmetric",
    "identities.lovelock_antisymmetric",
    "identities.reconstruction",
    "identities.electric_compatibility",
    "identities.electric_invariants",
    "identities.c2_relation",
];
const ELECTRIC_PART: &[&str] = &[
    "identities.reconstruction",
    "identities.electric_compatibility",
    "identities.electric_invariants",
    "identities.c2_relation",
];
const LOVELOCK: &[&str] = &[
    "identities.lovelock_alpha",
    "identities.lovelock_symmetric",
    "identities.lovelock_antisymmetric",
];
const PARALLEL: &[&str] = &[
    "parallel.h_trace",
    "parallel.nabla_h",
    "parallel.h_alpha",
    "parallel.commutation",
    "parallel.h_weyl_compatibility",
    "parallel.h_riemann_compatibility",
    "parallel.grycak",
    "parallel.scalar_split",
    "parallel.ricci_spectrum",
    "parallel.projector",
    "parallel.grad_g",
];
const PPWAVE: &[&str] = &[
    "ppwave.trace",
    "ppwave.cc",
    "ppwave.conformal_harmonicity",
    "ppwave.ricci_rank_one",
    "ppwave.ricci_form",
];
const IID: &[&str] = &["iid.defect", "iid.alignment"];
const ELECTRIC: &[&str] = &["electric.purely_electric", "electric.consistency"];
const RANK_ONE: &[&str] = &["rank_one.fit", "rank_one.antisymmetric", "rank_one.riemann_divergence"];

/// Everything needed to evaluate one point.
pub struct Battery<'a> {
    pub spec: &'a MetricSpec,
    pub tol: &'a Tolerances,
    pub groups: &'a [String],
    pub numerics: Numerics,
}

struct Out<'a> {
    tol: &'a Tolerances,
    checks: Vec<CheckRecord>,
}

impl Out<'_> {
    fn hard(&mut self, name: &str, defect: f64) -> &mut CheckRecord {
        self.checks.push(CheckRecord::at_most(name, defect, self.tol.get(name)));
        self.checks.last_mut().expect("just pushed")
    }

    fn info(&mut self, name: &str, defect: f64) -> &mut CheckRecord {
        self.checks.push(CheckRecord::info(name, defect, self.tol.get(name)));
        self.checks.last_mut().expect("just pushed")
    }

    fn judge(&mut self, name: &str, defect: f64, hard: bool) -> &mut CheckRecord {
        if hard {
            self.hard(name, defect)
        } else {
            self.info(name, defect)
        }
    }

    fn skip(&mut self, name: &str, reason: &str) {
        self.checks.push(CheckRecord::inapplicable(name, reason));
    }

    fn skip_all(&mut self, names: &[&str], reason: &str) {
        for n in names {
            self.skip(n, reason);
        }
    }

    fn applicability(&mut self, name: &str, a: Applicability<f64>) {
        match a {
            Applicability::Defect { value } => {
                self.hard(name, value);
            }
            Applicability::Inapplicable { reason } => self.skip(name, &reason),
        }
    }
}

/// Recurrence data shared by the CR groups.
struct Cr {
    rec: RecurrenceResult<f64>,
    recurrent: bool,
    closed: Option<Result<Closedness, RecurrenceError>>,
}

impl Battery<'_> {
    fn on(&self, group: &str) -> bool {
        self.groups.iter().any(|g| g == group)
    }

    fn flag_tolerances(&self) -> FlagTolerances {
        FlagTolerances {
            c2_zero: self.tol.get("c2.vanishing"),
            null: self.tol.get("null"),
            cc: self.tol.get("ppwave.cc"),
            purely_electric: self.tol.get("electric.purely_electric"),
            type_iid: self.tol.get("iid.defect"),
            ppwave_trace: self.tol.get("ppwave.trace"),
            rank_one: self.tol.get("rank_one.fit"),
        }
    }

    fn is_brinkmann(&self) -> bool {
        matches!(self.spec.kind, MetricKind::BrinkmannPq { .. })
    }

    fn is_galaev(&self) -> bool {
        matches!(self.spec.kind, MetricKind::Galaev { .. })
    }

    pub fn evaluate_point(&self, index: usize, x: &[f64]) -> PointRecord {
        let mut record = PointRecord {
            index,
            coordinates: x.to_vec(),
            error: None,
            conformally_flat: false,
            recurrence: None,
            flags: None,
            checks: Vec::new(),
        };
        let pack = match CurvaturePack::<f64>::at(self.spec, x) {
            Ok(p) => p,
            Err(e) => {
                record.error = Some(e.to_string());
                return record;
            }
        };
        let flat_tol = self.tol.get("conformal_flatness");
        let rec_tol = self.tol.get("recurrence.residual");
        let cr = match recurrence_at(&pack, flat_tol) {
            Ok(rec) => {
                let closed = (self.on("recurrence") || self.on("identities"))
                    .then(|| closedness(self.spec, x, self.numerics.closedness_step, rec_tol, flat_tol));
                Ok(Cr {
                    recurrent: rec.is_recurrent(rec_tol),
                    rec,
                    closed,
                })
            }
            Err(RecurrenceError::ConformallyFlat { .. }) => {
                record.conformally_flat = true;
                Err(CONFORMALLY_FLAT.to_string())
            }
            Err(e) => Err(e.to_string()),
        };
        if let Ok(c) = &cr {
            record.recurrence = Some(RecurrenceSummary {
                alpha: c.rec.alpha.clone(),
                residual: c.rec.residual,
                c2: c.rec.c2,
                alpha_sq: c.rec.alpha_sq,
                recurrent: c.recurrent,
                parallel_weyl: c.rec.parallel_weyl,
                closedness_defect: c.closed.as_ref().and_then(|r| r.as_ref().ok()).map(|c| c.defect),
            });
        }
        let flags = ClassificationFlags::evaluate(
            &pack,
            self.spec,
            cr.as_ref().ok().map(|c| &c.rec),
            &self.flag_tolerances(),
        );
        record.set_flags(&flags);

        let mut out = Out {
            tol: self.tol,
            checks: Vec::new(),
        };
        let cr = cr.as_ref();
        if self.on("curvature") {
            self.curvature(&pack, &mut out);
        }
        if self.on("reference") {
            self.reference(&pack, x, cr, &mut out);
        }
        if self.on("recurrence") {
            self.recurrence(&pack, cr, &mut out);
        }
        if self.on("identities") {
            self.identities(&pack, cr, &mut out);
        }
        if self.on("parallel") {
            self.parallel(&pack, x, cr, &mut out);
        }
        if self.on("c2") {
            match cr {
                Ok(_) => {
                    let hard = self.spec.parallel_null_covector().is_some();
                    out.judge("c2.vanishing", flags.c2_zero.defect, hard).value =
                        Some(record.recurrence.as_ref().map(|r| r.c2).unwrap_or(0.0));
                }
                Err(reason) => out.skip("c2.vanishing", reason),
            }
        }
        if self.on("ppwave") {
            self.ppwave(&pack, x, &mut out);
        }
        if self.on("iid") {
            self.iid(&pack, x, cr, &mut out);
        }
        if self.on("electric") {
            self.electric(&pack, cr, &mut out);
        }
        if self.on("rank_one") {
            self.rank_one(&pack, cr, &mut out);
        }
        if self.on("decomposability") {
            self.decomposability(&pack, cr, &mut out);
        }
        record.checks = out.checks;
        record
    }

    fn curvature(&self, pack: &CurvaturePack<f64>, out: &mut Out) {
        let r = pack.riemann_lower();
        let c = pack.weyl_tensor();
        let m = &pack.metric;
        out.hard("curvature.first_bianchi", first_bianchi_defect(r));
        out.hard("curvature.riemann_symmetry", riemann_symmetry_defect(r));
        out.hard(
            "curvature.second_bianchi",
            second_bianchi_defect(&pack.nabla_riemann, pack.nabla_scale),
        );
        out.hard(
            "curvature.metric_compatibility",
            metric_compatibility_defect(pack).unwrap_or(f64::NAN),
        );
        out.hard("curvature.divergence_identity", divergence_identity_defect(pack));
        // Weyl identities are measured relative to the Riemann tensor C is built from.
        let reference = c.max_abs().max(r.max_abs());
        let rel = if reference > 0.0 { c.max_abs() / reference } else { 0.0 };
        out.hard("curvature.weyl_trace", trace_defect(c, m) * rel);
        out.hard(
            "curvature.weyl_symmetry",
            riemann_symmetry_defect(c).max(first_bianchi_defect(c)) * rel,
        );
        match signature(m) {
            Ok(inertia) => {
                let note = format!("n_plus = {}, n_minus = {}", inertia.n_plus, inertia.n_minus);
                match self.spec.signature_expectation {
                    Some(e) => {
                        out.hard("curvature.signature", if e == inertia { 0.0 } else { 1.0 })
                            .note = Some(note);
                    }
                    None => {
                        let rec = out.info("curvature.signature", 0.0);
                        rec.value = Some(inertia.n_minus as f64);
                        rec.note = Some(note);
                    }
                }
            }
            Err(e) => {
                out.hard("curvature.signature", f64::NAN).note = Some(e.to_string());
            }
        }
        let n = self.spec.n;
        let v: Vec<f64> = (0..n)
            .map(|k| {
                if k % 2 == 0 {
                    0.3 + 0.1 * k as f64
                } else {
                    -0.2 - 0.1 * k as f64
                }
            })
            .collect();
        let mut worst = 0.0f64;
        let mut error = None;
        for i in 0..n {
            for j in i + 1..n {
                match ricci_identity_loop_check(self.spec, pack, i, j, &v, self.numerics.loop_size) {
                    Ok(d) => worst = worst.max(d),
                    Err(e) => error = Some(e.to_string()),
                }
            }
        }
        match error {
            Some(e) => out.hard("curvature.ricci_identity_loop", f64::NAN).note = Some(e),
            None => {
                out.hard("curvature.ricci_identity_loop", worst);
            }
        }
    }

    fn reference(&self, pack: &CurvaturePack<f64>, x: &[f64], cr: Result<&Cr, &String>, out: &mut Out) {
        let n = self.spec.n;
        let m = &pack.metric;
        let ric = pack.ricci_tensor();
        let scalar_scale = n as f64 * m.ginv().max_abs() * ric.max_abs();
        match &self.spec.kind {
            MetricKind::BrinkmannPq { p, q } => {
                let bv = BrinkmannValues::at(p, q, x);
                let (g211, g213, g311) = bv.christoffel();
                let mut expected = Tensor::zeros(n, &[Variance::Up, Variance::Down, Variance::Down]);
                expected.set(&[1, 0, 0], g211);
                expected.set(&[1, 0, 2], g213);
                expected.set(&[1, 2, 0], g213);
                expected.set(&[2, 0, 0], g311);
                let gamma = pack.gamma();
                out.hard(
                    "reference.christoffel",
                    scaled(
                        gamma.max_abs_diff(&expected).unwrap_or(f64::NAN),
                        gamma.max_abs().max(expected.max_abs()),
                    ),
                );
                let r1313 = bv.r1313();
                let r = pack.riemann_lower();
                out.hard(
                    "reference.r1313",
                    scaled((r.at4(0, 2, 0, 2) - r1313).abs(), r.max_abs().max(r1313.abs())),
                )
                .value = Some(r.at4(0, 2, 0, 2));
                let mut ric_expected = Tensor::zeros(n, &[Variance::Down, Variance::Down]);
                ric_expected.set(&[0, 0], r1313);
                out.hard(
                    "reference.r11",
                    scaled(
                        ric.max_abs_diff(&ric_expected).unwrap_or(f64::NAN),
                        ric.max_abs().max(r1313.abs()),
                    ),
                )
                .value = Some(ric.at2(0, 0));
                out.hard("reference.scalar", scaled(pack.scalar().abs(), scalar_scale))
                    .value = Some(pack.scalar());
                let alpha = bv.alpha(n);
                match cr {
                    Ok(c) => {
                        let a = &c.rec.alpha;
                        let d = a.iter().zip(&alpha).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                        out.hard("reference.alpha", scaled(d, max_abs(&alpha)));
                        let a2_scale = max_abs(a).powi(2) * m.ginv().max_abs();
                        if bv.is_null_branch() {
                            out.skip("reference.alpha_sq", "null branch");
                            out.hard("reference.null_alpha_sq", scaled(c.rec.alpha_sq.abs(), a2_scale))
                                .value = Some(c.rec.alpha_sq);
                            match rank_one_ricci_check(ric, a) {
                                Ok(ro) => {
                                    let want = bv.null_ricci_coefficient();
                                    out.hard(
                                        "reference.null_ricci_coefficient",
                                        scaled((ro.coefficient - want).abs(), want.abs()),
                                    )
                                    .value = Some(ro.coefficient);
                                }
                                Err(e) => out.skip("reference.null_ricci_coefficient", &e.to_string()),
                            }
                        } else {
                            let want = bv.alpha_sq();
                            out.hard(
                                "reference.alpha_sq",
                                scaled((c.rec.alpha_sq - want).abs(), want.abs().max(a2_scale)),
                            )
                            .value = Some(c.rec.alpha_sq);
                            out.skip("reference.null_alpha_sq", "q''' != 0");
                            out.skip("reference.null_ricci_coefficient", "q''' != 0");
                        }
                    }
                    Err(reason) => out.skip_all(
                        &[
                            "reference.alpha",
                            "reference.alpha_sq",
                            "reference.null_alpha_sq",
                            "reference.null_ricci_coefficient",
                        ],
                        reason,
                    ),
                }
            }
            MetricKind::Galaev { .. } => {
                out.hard("reference.scalar", scaled(pack.scalar().abs(), scalar_scale))
                    .value = Some(pack.scalar());
                let known = self
                    .spec
                    .known_recurrence(x)
                    .expect("galaev has a closed-form recurrence");
                match cr {
                    Ok(c) => {
                        let d = c
                            .rec
                            .alpha
                            .iter()
                            .zip(&known.alpha)
                            .map(|(x, y)| (x - y).abs())
                            .fold(0.0, f64::max);
                        out.hard("reference.alpha", scaled(d, max_abs(&known.alpha)));
                    }
                    Err(reason) => out.skip("reference.alpha", reason),
                }
                let beta = self.spec.parallel_null_covector().expect("galaev has du");
                let a = self.spec.galaev_a(x).expect("galaev a(u)");
                let pp = ppwave_checks(pack, &beta, &vec![0.0; n * n], 0.0);
                let want = -(n as f64 - 2.0) * a;
                let rec = out.info(
                    "reference.galaev_ricci_coefficient",
                    scaled((pp.ricci_coefficient - want).abs(), want.abs()),
                );
                rec.value = Some(pp.ricci_coefficient);
                rec.note = Some(format!("a(u) = {a:.6e}; compared with -(n-2)a(u) = {want:.6e}"));
            }
            MetricKind::ConstCurv { k, .. } => {
                let want = CONSTCURV_SIGN * n as f64 * (n as f64 - 1.0) * k;
                out.hard("reference.scalar", scaled((pack.scalar() - want).abs(), want.abs()))
                    .value = Some(pack.scalar());
                let g = m.g();
                let r = pack.riemann_lower();
                let expected = Tensor::from_fn(n, &[Variance::Down; 4], |ix| {
                    let (j, kk, l, mm) = (ix[0], ix[1], ix[2], ix[3]);
                    CONSTCURV_SIGN * k * (g.at2(j, l) * g.at2(kk, mm) - g.at2(j, mm) * g.at2(kk, l))
                });
                out.hard(
                    "reference.constcurv_riemann",
                    scaled(
                        r.max_abs_diff(&expected).unwrap_or(f64::NAN),
                        r.max_abs().max(expected.max_abs()),
                    ),
                );
            }
            MetricKind::Flat { .. } => {
                let worst = pack.riemann_lower().max_abs().max(pack.gamma().max_abs());
                out.hard("reference.flat_curvature", worst);
            }
        }
    }

    fn recurrence(&self, pack: &CurvaturePack<f64>, cr: Result<&Cr, &String>, out: &mut Out) {
        let c = match cr {
            Ok(c) => c,
            Err(reason) => return out.skip_all(RECURRENCE, reason),
        };
        let m = &pack.metric;
        let alpha = &c.rec.alpha;
        let rec = out.hard("recurrence.residual", c.rec.residual);
        if c.rec.parallel_weyl {
            rec.note = Some("parallel Weyl tensor".into());
        }
        match c2_gradient(pack.weyl_tensor(), &pack.nabla_weyl, m) {
            Ok(dc2) => {
                out.applicability(
                    "recurrence.gradient",
                    gradient_alpha_check(&c.rec, &dc2, self.tol.get("c2.vanishing")),
                );
            }
            Err(e) => out.hard("recurrence.gradient", f64::NAN).note = Some(e.to_string()),
        }
        match &c.closed {
            Some(Ok(cl)) => {
                out.hard("recurrence.closedness", cl.defect);
            }
            Some(Err(e)) => out.hard("recurrence.closedness", f64::NAN).note = Some(e.to_string()),
            None => unreachable!("closedness is computed when the recurrence group is on"),
        }
        let brinkmann = self.is_brinkmann();
        out.judge(
            "recurrence.riemann_recurrence",
            tensor_recurrence_residual(pack.riemann_lower(), &pack.nabla_riemann, alpha),
            brinkmann,
        );
        out.judge(
            "recurrence.alpha_alpha_riemann",
            alpha_alpha_riemann_defect(pack.riemann_lower(), pack.ricci_tensor(), alpha, m),
            brinkmann,
        );
        let eig = ricci_alpha_eigen(pack.ricci_tensor(), alpha, m);
        out.info("recurrence.ricci_eigen", eig.defect).value = Some(eig.mu);
    }

    fn identities(&self, pack: &CurvaturePack<f64>, cr: Result<&Cr, &String>, out: &mut Out) {
        let c = match cr {
            Ok(c) if c.recurrent => c,
            Ok(_) => return out.skip_all(IDENTITIES, "point is not recurrent"),
            Err(reason) => return out.skip_all(IDENTITIES, reason),
        };
        let m = &pack.metric;
        let weyl = pack.weyl_tensor();
        let alpha = &c.rec.alpha;
        out.hard(
            "identities.cyclic_recurrence",
            nan(cyclic_recurrence_defect(weyl, alpha, m)),
        );
        out.hard(
            "identities.alpha_compatibility",
            nan(compatibility_defect(&alpha_alpha(alpha), weyl, m)),
        );
        let closed_tol = self.tol.get("recurrence.closedness");
        match &c.closed {
            Some(Ok(cl)) if cl.defect <= closed_tol => {
                out.hard(
                    "identities.ricci_riemann_compatibility",
                    nan(compatibility_defect(pack.ricci_tensor(), pack.riemann_lower(), m)),
                );
            }
            Some(Ok(_)) => out.skip("identities.ricci_riemann_compatibility", "recurrence vector not closed"),
            Some(Err(e)) => out.skip("identities.ricci_riemann_compatibility", &e.to_string()),
            None => unreachable!("closedness is computed when the identities group is on"),
        }
        out.hard(
            "identities.semisymmetry",
            semisymmetry_defect(weyl, &pack.riemann.mixed),
        );

        let dalpha = match self.spec.known_recurrence(pack.metric.point()) {
            Some(k) => Some((k.dalpha, "closed form")),
            None => match &c.closed {
                Some(Ok(cl)) => Some((cl.jacobian.clone(), "finite differences")),
                _ => None,
            },
        };
        match dalpha {
            Some((d, source)) => {
                let na = covariant_alpha_derivative(alpha, &d, pack.gamma());
                match lovelock_family_defects(weyl, pack.ricci_tensor(), alpha, &na, m) {
                    Ok(l) => {
                        for (name, v) in LOVELOCK.iter().zip(l) {
                            out.hard(name, v).note = Some(format!("nabla alpha from {source}"));
                        }
                    }
                    Err(e) => out.skip_all(LOVELOCK, &e.to_string()),
                }
            }
            None => out.skip_all(LOVELOCK, "no derivative of the recurrence vector"),
        }

        let null_tol = self.tol.get("null");
        if is_null(alpha, m, null_tol) {
            return out.skip_all(ELECTRIC_PART, "null recurrence vector");
        }
        let e = match electric_tensor(weyl, alpha, m, null_tol) {
            Ok(e) => e,
            Err(err) => return out.skip_all(ELECTRIC_PART, &err.to_string()),
        };
        match reconstruct_weyl(&e.e, alpha, m, null_tol) {
            Ok(c_rec) => {
                out.hard("identities.reconstruction", nan(reconstruction_defect(weyl, &c_rec)));
            }
            Err(err) => out.skip("identities.reconstruction", &err.to_string()),
        }
        out.hard(
            "identities.electric_compatibility",
            nan(compatibility_defect(&e.e, weyl, m)),
        );
        let inv = e.invariant_defects(m);
        out.hard(
            "identities.electric_invariants",
            inv.iter().cloned().fold(0.0, f64::max),
        );
        let n = self.spec.n as f64;
        let lhs = full_square(weyl, m).unwrap_or(f64::NAN);
        let rhs = 4.0 * (n - 2.0) / (n - 3.0) * full_square(&e.e, m).unwrap_or(f64::NAN);
        let scale = full_square_scale(weyl, m).unwrap_or(0.0).max(lhs.abs()).max(rhs.abs());
        out.hard("identities.c2_relation", scaled((lhs - rhs).abs(), scale));
    }

    fn parallel(&self, pack: &CurvaturePack<f64>, x: &[f64], cr: Result<&Cr, &String>, out: &mut Out) {
        let c = match cr {
            Ok(c) => c,
            Err(reason) => return out.skip_all(PARALLEL, reason),
        };
        let m = &pack.metric;
        let weyl = pack.weyl_tensor();
        let c2_tol = self.tol.get("c2.vanishing");
        let p = match h_tensor(weyl, m, c2_tol) {
            Ok(p) => p,
            Err(e) => return out.skip_all(PARALLEL, &e.to_string()),
        };
        out.hard("parallel.h_trace", (p.trace - 1.0).abs());
        out.hard(
            "parallel.nabla_h",
            nan(parallel_h_defect(weyl, &pack.nabla_weyl, m, c2_tol)),
        );
        out.hard("parallel.h_alpha", h_alpha_defect(&p.h, &c.rec.alpha, m));
        out.hard("parallel.commutation", commutator_defect(&p.h, pack.ricci_tensor(), m));
        out.hard(
            "parallel.h_weyl_compatibility",
            nan(compatibility_defect(&p.h, weyl, m)),
        );
        out.hard(
            "parallel.h_riemann_compatibility",
            nan(compatibility_defect(&p.h, pack.riemann_lower(), m)),
        );
        match grycak_fit(pack.ricci_tensor(), pack.scalar(), &p.h, m, c2_tol) {
            Ok(fit) => {
                out.hard("parallel.grycak", fit.residual).value = Some(fit.g_coeff);
                match spectral_analysis(
                    pack.ricci_tensor(),
                    &p.h,
                    pack.scalar(),
                    fit.g_coeff,
                    m,
                    self.tol.get("cluster"),
                ) {
                    Ok(s) => {
                        let note = s.finding.clone();
                        let rec = out.hard("parallel.scalar_split", s.scalar_defect);
                        rec.value = Some(s.n_h as f64);
                        rec.note = note;
                        out.hard("parallel.ricci_spectrum", s.ricci_spectrum_defect);
                        out.hard(
                            "parallel.projector",
                            s.projector_idempotence_defect.max(s.projector_trace_defect),
                        );
                    }
                    Err(e) => out.skip_all(
                        &["parallel.scalar_split", "parallel.ricci_spectrum", "parallel.projector"],
                        &e.to_string(),
                    ),
                }
            }
            Err(reason) => out.skip_all(
                &[
                    "parallel.grycak",
                    "parallel.scalar_split",
                    "parallel.ricci_spectrum",
                    "parallel.projector",
                ],
                &reason,
            ),
        }
        out.applicability(
            "parallel.grad_g",
            grad_g_relation_on_metric(self.spec, x, self.numerics.grad_g_step, c2_tol),
        );
    }

    fn lorentzian(pack: &CurvaturePack<f64>) -> bool {
        signature(&pack.metric).map(|i| i.is_lorentzian()).unwrap_or(false)
    }

    fn ppwave(&self, pack: &CurvaturePack<f64>, x: &[f64], out: &mut Out) {
        let Some(beta) = self.spec.parallel_null_covector() else {
            return out.skip_all(PPWAVE, "catalog entry has no parallel null covector");
        };
        if !Self::lorentzian(pack) {
            return out.skip_all(PPWAVE, "metric is not Lorentzian at the point");
        }
        let n = self.spec.n;
        let a = self.spec.galaev_a(x);
        let expected = a.map(|a| (n as f64 + 2.0) / 2.0 * a).unwrap_or(0.0);
        let pp = ppwave_checks(pack, &beta, &vec![0.0; n * n], expected);
        out.hard("ppwave.trace", pp.trace_defect);
        out.hard("ppwave.cc", pp.cc_defect);
        out.judge(
            "ppwave.conformal_harmonicity",
            conformal_harmonicity_defect(pack),
            self.is_galaev(),
        );
        out.hard("ppwave.ricci_rank_one", pp.ricci_rank_one_defect).value = Some(pp.ricci_coefficient);
        match a {
            Some(a) => {
                let rec = out.info("ppwave.ricci_form", pp.ricci_form_defect);
                rec.value = Some(pp.ricci_coefficient);
                rec.note = Some(format!(
                    "compared with (n+2)/2 a(u) = {expected:.6e}; fitted/a(u) = {:.6}",
                    pp.ricci_coefficient / a
                ));
            }
            None => out.skip("ppwave.ricci_form", "no a(u) for this catalog entry"),
        }
    }

    fn iid(&self, pack: &CurvaturePack<f64>, x: &[f64], cr: Result<&Cr, &String>, out: &mut Out) {
        let c = match cr {
            Ok(c) => c,
            Err(reason) => return out.skip_all(IID, reason),
        };
        if !Self::lorentzian(pack) {
            return out.skip_all(IID, "metric is not Lorentzian at the point");
        }
        let null_tol = self.tol.get("null");
        match type_iid_test(pack.weyl_tensor(), &c.rec.alpha, &pack.metric, null_tol) {
            Ok(t) => {
                out.hard("iid.defect", t.defect);
                let stronger = match &self.spec.kind {
                    MetricKind::BrinkmannPq { p, q } => BrinkmannValues::at(p, q, x).is_null_branch(),
                    _ => false,
                };
                out.judge("iid.alignment", t.alignment_defect, stronger);
            }
            Err(e) => out.skip_all(IID, &e.to_string()),
        }
    }

    fn electric(&self, pack: &CurvaturePack<f64>, cr: Result<&Cr, &String>, out: &mut Out) {
        let c = match cr {
            Ok(c) => c,
            Err(reason) => return out.skip_all(ELECTRIC, reason),
        };
        let m = &pack.metric;
        if !Self::lorentzian(pack) {
            return out.skip_all(ELECTRIC, "metric is not Lorentzian at the point");
        }
        if is_null(&c.rec.alpha, m, self.tol.get("null")) || c.rec.alpha_sq >= 0.0 {
            return out.skip_all(ELECTRIC, "recurrence vector is not time-like");
        }
        let u = m.raise_covector(&c.rec.alpha);
        match purely_electric_test(pack.weyl_tensor(), &u, m, self.tol.get("electric.purely_electric")) {
            Ok(pe) => {
                out.hard("electric.purely_electric", pe.defect).value = Some(pe.magnetic_fraction);
                out.hard("electric.consistency", if pe.consistent { 0.0 } else { 1.0 });
            }
            Err(e) => out.skip_all(ELECTRIC, &e.to_string()),
        }
    }

    fn rank_one(&self, pack: &CurvaturePack<f64>, cr: Result<&Cr, &String>, out: &mut Out) {
        let c = match cr {
            Ok(c) => c,
            Err(reason) => return out.skip_all(RANK_ONE, reason),
        };
        let alpha = &c.rec.alpha;
        if max_abs(alpha) == 0.0 || !is_null(alpha, &pack.metric, self.tol.get("null")) {
            return out.skip_all(RANK_ONE, "requires a null recurrence vector");
        }
        match rank_one_ricci_check(pack.ricci_tensor(), alpha) {
            Ok(ro) => {
                out.hard("rank_one.fit", ro.residual).value = Some(ro.coefficient);
                out.hard("rank_one.antisymmetric", ro.antisymmetric_defect);
            }
            Err(e) => out.skip_all(&RANK_ONE[..2], &e.to_string()),
        }
        out.hard("rank_one.riemann_divergence", riemann_divergence_defect(pack));
    }

    fn decomposability(&self, pack: &CurvaturePack<f64>, cr: Result<&Cr, &String>, out: &mut Out) {
        let name = "decomposability.eigenvalue_mismatch";
        if let Err(reason) = cr {
            return out.skip(name, reason);
        }
        let m = &pack.metric;
        let h = h_tensor(pack.weyl_tensor(), m, self.tol.get("c2.vanishing")).ok();
        let beta = self.spec.parallel_null_covector();
        match decomposability_obstruction(self.spec.n, h.as_ref(), beta.as_deref(), m) {
            Decomposability::Checked(o) => {
                out.hard(name, if o.mismatch { 0.0 } else { 1.0 }).note = Some(format!(
                    "(n-3)/(2(n-2)) = {} vs 1/n = {}; decomposable branch: {}",
                    o.alpha_eigenvalue, o.null_eigenvalue, o.decomposable_branch
                ));
            }
            Decomposability::Inapplicable { reason } => out.skip(name, &reason),
        }
    }
}

/// Sign relating the space-form Riemann tensor to `K(g_jl g_km − g_jm g_kl)`
/// under the engine's convention.
pub const CONSTCURV_SIGN: f64 = -1.0;

/// Comparison used by `AtLeast` checks built outside this module.
pub fn at_least(name: &str, defect: f64, tol: &Tolerances) -> CheckRecord {
    CheckRecord::judged(name, defect, tol.get(name), Comparison::AtLeast)
}

fn nan<E>(r: Result<f64, E>) -> f64 {
    r.unwrap_or(f64::NAN)
}
