//! Lorentzian battery: electric/magnetic split of the Weyl tensor, the
//! purely-electric and type-IId compatibility criteria, pp-wave conditions,
//! the decomposability eigenvalue obstruction and the rank-one Ricci check.

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::curvature::{conformal_harmonicity_defect, CurvaturePack};
use crate::metrics::{signature, MetricAtPoint, MetricSpec};
use crate::recurrence::RecurrenceResult;
use crate::scalar::{max_abs, scaled, Scalar};
use crate::tensor::{for_each_index, Down, Tensor, TensorError};
use crate::weylops::{alpha_alpha, compatibility_defect, h_alpha_eigenvalue, is_null, ParallelTensor};

/// `|u² + 1|` allowed for a unit time-like vector.
pub const UNIT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LorentzError {
    #[error("metric is not Lorentzian")]
    NotLorentzian,
    #[error("u is not time-like (u^2 = {u_sq:e})")]
    NotTimelike { u_sq: f64 },
    #[error("u is not a unit vector (u^2 = {u_sq:e})")]
    NotUnit { u_sq: f64 },
    #[error("covector is not null (alpha^2 = {alpha_sq:e})")]
    NotNull { alpha_sq: f64 },
    #[error("zero covector")]
    ZeroCovector,
    #[error("signature: {0}")]
    Signature(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

fn require_lorentzian<T: Scalar>(m: &MetricAtPoint<T>) -> Result<(), LorentzError> {
    let inertia = signature(m).map_err(|e| LorentzError::Signature(e.to_string()))?;
    if inertia.is_lorentzian() {
        Ok(())
    } else {
        Err(LorentzError::NotLorentzian)
    }
}

/// Rescales a time-like vector to `u² = −1` with `u⁰ > 0`.
pub fn normalize_timelike<T: Scalar>(u: &[T], m: &MetricAtPoint<T>) -> Result<Vec<T>, LorentzError> {
    let u2 = m.dot_vectors(u, u);
    if u2 >= T::zero() {
        return Err(LorentzError::NotTimelike { u_sq: u2.as_f64() });
    }
    let mut f = T::one() / (-u2).sqrt();
    if u[0] < T::zero() {
        f = -f;
    }
    Ok(u.iter().map(|&x| x * f).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmSplit<T> {
    pub c_plus: Tensor<T>,
    pub c_minus: Tensor<T>,
    /// Scaled `max|C − C₊ − C₋|`.
    pub sum_defect: T,
}

impl<T: Scalar> EmSplit<T> {
    /// `max|C₋|` relative to `max|C₊|, max|C₋|`.
    pub fn magnetic_fraction(&self) -> T {
        scaled(
            self.c_minus.max_abs(),
            self.c_plus.max_abs().max(self.c_minus.max_abs()),
        )
    }
}

/// Contracts slot `slot` of an all-lower tensor with `p[j][a]`
/// (`t'_{..j..} = p_j^a t_{..a..}`).
fn project_slot<T: Scalar>(t: &Tensor<T>, slot: usize, p: &[T]) -> Tensor<T> {
    let n = t.dim();
    let rank = t.rank();
    let mut src = vec![0usize; rank];
    Tensor::from_fn(n, t.valence(), |ix| {
        src.copy_from_slice(ix);
        let mut s = T::zero();
        for a in 0..n {
            src[slot] = a;
            s += p[ix[slot] * n + a] * t.get(&src);
        }
        s
    })
}

/// Electric/magnetic parts relative to the unit time-like vector `u`, with
/// `θ = g + u⊗u`, `E_kl = u^ju^mC_jklm`:
///
/// `C₊ = θθθθ·C + u_ju_mE_kl − u_ju_lE_km + u_ku_lE_jm − u_ku_mE_jl`,
/// `C₋ = θ_j^rθ_k^s u^p(C_rspl u_m − C_rspm u_l) + u_j u^pC_kp(lm)' − u_k u^pC_jp(lm)'`
/// where `(lm)'` is projected with `θ`.
pub fn em_split<T: Scalar>(c: &Tensor<T>, u: &[T], m: &MetricAtPoint<T>) -> Result<EmSplit<T>, LorentzError> {
    require_lorentzian(m)?;
    let u2 = m.dot_vectors(u, u);
    if u2 >= T::zero() {
        return Err(LorentzError::NotTimelike { u_sq: u2.as_f64() });
    }
    if (u2 + T::one()).abs() > T::lit(UNIT_TOL) {
        return Err(LorentzError::NotUnit { u_sq: u2.as_f64() });
    }
    let n = c.dim();
    let ul = m.lower_vector(u);
    // θ_j^a = δ_j^a + u_j u^a
    let p: Vec<T> = (0..n * n)
        .map(|k| {
            let (j, a) = (k / n, k % n);
            (if j == a { T::one() } else { T::zero() }) + ul[j] * u[a]
        })
        .collect();
    let e = Tensor::from_fn(n, &[Down, Down], |ix| {
        let mut s = T::zero();
        for j in 0..n {
            for mm in 0..n {
                s += u[j] * u[mm] * c.at4(j, ix[0], ix[1], mm);
            }
        }
        s
    });
    let mut proj = c.clone();
    for slot in 0..4 {
        proj = project_slot(&proj, slot, &p);
    }
    let c_plus = Tensor::from_fn(n, &[Down; 4], |ix| {
        let (j, k, l, mm) = (ix[0], ix[1], ix[2], ix[3]);
        proj.at4(j, k, l, mm) + ul[j] * ul[mm] * e.at2(k, l) - ul[j] * ul[l] * e.at2(k, mm)
            + ul[k] * ul[l] * e.at2(j, mm)
            - ul[k] * ul[mm] * e.at2(j, l)
    });
    // cu[r][s][l] = u^p C_rspl, then θ-projected on r, s.
    let cu = Tensor::from_fn(n, &[Down; 3], |ix| {
        (0..n).map(|q| u[q] * c.at4(ix[0], ix[1], q, ix[2])).sum()
    });
    let cu = project_slot(&project_slot(&cu, 0, &p), 1, &p);
    // uc[k][l][m] = u^p C_kplm, then θ-projected on l, m.
    let uc = Tensor::from_fn(n, &[Down; 3], |ix| {
        (0..n).map(|q| u[q] * c.at4(ix[0], q, ix[1], ix[2])).sum()
    });
    let uc = project_slot(&project_slot(&uc, 1, &p), 2, &p);
    let c_minus = Tensor::from_fn(n, &[Down; 4], |ix| {
        let (j, k, l, mm) = (ix[0], ix[1], ix[2], ix[3]);
        cu.at3(j, k, l) * ul[mm] - cu.at3(j, k, mm) * ul[l] + ul[j] * uc.at3(k, l, mm) - ul[k] * uc.at3(j, l, mm)
    });
    let sum = c_plus.add(&c_minus)?;
    let sum_defect = scaled(
        c.max_abs_diff(&sum)?,
        c.max_abs().max(c_plus.max_abs()).max(c_minus.max_abs()),
    );
    Ok(EmSplit {
        c_plus,
        c_minus,
        sum_defect,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PurelyElectric<T> {
    /// Compatibility defect of `u⊗u` (lowered) with `C`.
    pub defect: T,
    /// `max|C₋|` relative to the split's scale.
    pub magnetic_fraction: T,
    pub purely_electric: bool,
    /// The compatibility criterion and `C₋ = 0` give the same verdict.
    pub consistent: bool,
}

/// `u` is normalized internally.
pub fn purely_electric_test<T: Scalar>(
    c: &Tensor<T>,
    u: &[T],
    m: &MetricAtPoint<T>,
    tol: T,
) -> Result<PurelyElectric<T>, LorentzError> {
    let u = normalize_timelike(u, m)?;
    let split = em_split(c, &u, m)?;
    let ul = m.lower_vector(&u);
    let defect = compatibility_defect(&alpha_alpha(&ul), c, m)?;
    let magnetic_fraction = split.magnetic_fraction();
    let purely_electric = defect < tol;
    Ok(PurelyElectric {
        defect,
        magnetic_fraction,
        purely_electric,
        consistent: purely_electric == (magnetic_fraction < tol),
    })
}

/// `max|α^mK_jklm|` relative to `max|α^|·max|K|`.
pub fn alpha_contraction_defect<T: Scalar>(k: &Tensor<T>, alpha: &[T], m: &MetricAtPoint<T>) -> T {
    let n = k.dim();
    let up = m.raise_covector(alpha);
    let mut worst = T::zero();
    for_each_index(n, 3, |ix| {
        let v: T = (0..n).map(|q| up[q] * k.at4(ix[0], ix[1], ix[2], q)).sum();
        worst = worst.max(v.abs());
    });
    scaled(worst, max_abs(&up) * k.max_abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypeIId<T> {
    /// Compatibility defect of `α⊗α` with `C`.
    pub defect: T,
    /// `α^mC_jklm`, scaled; zero means the stronger alignment.
    pub alignment_defect: T,
}

impl<T: Scalar> TypeIId<T> {
    pub fn at_least_iid(&self, tol: T) -> bool {
        self.defect < tol
    }

    pub fn aligned(&self, tol: T) -> bool {
        self.alignment_defect < tol
    }
}

pub fn type_iid_test<T: Scalar>(
    c: &Tensor<T>,
    alpha: &[T],
    m: &MetricAtPoint<T>,
    null_tol: T,
) -> Result<TypeIId<T>, LorentzError> {
    if max_abs(alpha) == T::zero() {
        return Err(LorentzError::ZeroCovector);
    }
    if !is_null(alpha, m, null_tol) {
        return Err(LorentzError::NotNull {
            alpha_sq: m.dot_covectors(alpha, alpha).as_f64(),
        });
    }
    Ok(TypeIId {
        defect: compatibility_defect(&alpha_alpha(alpha), c, m)?,
        alignment_defect: alpha_contraction_defect(c, alpha, m),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PpWave<T> {
    /// `R_ij^{pq}R_pqlm`, scaled by the largest summand.
    pub trace_defect: T,
    /// Larger of the scaled `β²` and `max|∇β|`.
    pub cc_defect: T,
    /// `c` in the least-squares fit `Ric ≈ c β⊗β`.
    pub ricci_coefficient: T,
    /// Residual of that fit.
    pub ricci_rank_one_defect: T,
    /// Scaled `max|Ric − expected·β⊗β|`.
    pub ricci_form_defect: T,
}

/// `beta` is the candidate null parallel covector and `dbeta[i*n+j] = ∂_iβ_j`;
/// `expected` is the coefficient compared in `ricci_form_defect`.
pub fn ppwave_checks<T: Scalar>(pack: &CurvaturePack<T>, beta: &[T], dbeta: &[T], expected: T) -> PpWave<T> {
    let n = pack.dim();
    let m = &pack.metric;
    let r = pack.riemann_lower();
    let up = r.raise(2, m.ginv()).and_then(|t| t.raise(3, m.ginv())).expect("rank 4");
    let mut worst = T::zero();
    let mut scale = T::zero();
    for_each_index(n, 4, |ix| {
        let mut s = T::zero();
        let mut a = T::zero();
        for p in 0..n {
            for q in 0..n {
                let t = up.at4(ix[0], ix[1], p, q) * r.at4(p, q, ix[2], ix[3]);
                s += t;
                a = a.max(t.abs());
            }
        }
        worst = worst.max(s.abs());
        scale = scale.max(a);
    });
    let trace_defect = scaled(worst, scale);

    let b2 = m.dot_covectors(beta, beta);
    let bs = max_abs(beta);
    let null = scaled(b2.abs(), m.ginv().max_abs() * bs * bs);
    let gamma = pack.gamma();
    let mut nb = T::zero();
    let mut nscale = T::zero();
    for i in 0..n {
        for j in 0..n {
            let mut v = dbeta[i * n + j];
            nscale = nscale.max(v.abs());
            for k in 0..n {
                let t = gamma.at3(k, i, j) * beta[k];
                nscale = nscale.max(t.abs());
                v -= t;
            }
            nb = nb.max(v.abs());
        }
    }
    let cc_defect = null.max(scaled(nb, nscale));

    let ric = pack.ricci_tensor();
    let fit = rank_one_fit(ric, beta);
    let target = alpha_alpha(beta).scale(expected);
    let ricci_form_defect = scaled(
        ric.max_abs_diff(&target).expect("same shape"),
        ric.max_abs().max(target.max_abs()),
    );
    PpWave {
        trace_defect,
        cc_defect,
        ricci_coefficient: fit.0,
        ricci_rank_one_defect: fit.1,
        ricci_form_defect,
    }
}

/// Least-squares `c` in `S ≈ c α⊗α` and the scaled residual.
fn rank_one_fit<T: Scalar>(s: &Tensor<T>, alpha: &[T]) -> (T, T) {
    let aa = alpha_alpha(alpha);
    let num: T = s.data().iter().zip(aa.data()).map(|(a, b)| *a * *b).sum();
    let den: T = aa.data().iter().map(|b| *b * *b).sum();
    let c = if den > T::zero() { num / den } else { T::zero() };
    let fitted = aa.scale(c);
    let residual = scaled(
        s.max_abs_diff(&fitted).expect("same shape"),
        s.max_abs().max(fitted.max_abs()),
    );
    (c, residual)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankOneRicci<T> {
    pub coefficient: T,
    pub residual: T,
    /// Scaled `max|α_kR_jl − α_jR_kl|`.
    pub antisymmetric_defect: T,
}

pub fn rank_one_ricci_check<T: Scalar>(ric: &Tensor<T>, alpha: &[T]) -> Result<RankOneRicci<T>, LorentzError> {
    if max_abs(alpha) == T::zero() {
        return Err(LorentzError::ZeroCovector);
    }
    let n = ric.dim();
    let (coefficient, residual) = rank_one_fit(ric, alpha);
    let mut worst = T::zero();
    let mut scale = T::zero();
    for_each_index(n, 3, |ix| {
        let (k, j, l) = (ix[0], ix[1], ix[2]);
        let a = alpha[k] * ric.at2(j, l);
        let b = alpha[j] * ric.at2(k, l);
        scale = scale.max(a.abs()).max(b.abs());
        worst = worst.max((a - b).abs());
    });
    Ok(RankOneRicci {
        coefficient,
        residual,
        antisymmetric_defect: scaled(worst, scale),
    })
}

/// `max|g^{im}∇_iR_jklm|`, scaled by the largest summand.
pub fn riemann_divergence_defect<T: Scalar>(pack: &CurvaturePack<T>) -> T {
    let n = pack.dim();
    let gi = pack.metric.ginv();
    let nr = &pack.nabla_riemann;
    let mut worst = T::zero();
    let mut scale = T::zero();
    for_each_index(n, 3, |ix| {
        let mut s = T::zero();
        for i in 0..n {
            for mm in 0..n {
                let t = gi.at2(i, mm) * nr.at5(i, ix[0], ix[1], ix[2], mm);
                scale = scale.max(t.abs());
                s += t;
            }
        }
        worst = worst.max(s.abs());
    });
    scaled(worst, scale)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Obstruction {
    pub n: usize,
    /// `(n−3)/(2(n−2))`, the eigenvalue of `h` on `α`.
    pub alpha_eigenvalue: Ratio<i64>,
    /// `1/n`, the eigenvalue forced on a parallel null `β`.
    pub null_eigenvalue: Ratio<i64>,
    pub mismatch: bool,
    /// `max|h·β − λβ|/max|β|` for both eigenvalues, when `h` and `β` are given.
    pub residuals: Option<[f64; 2]>,
    /// The theorem's conclusion for a Lorentzian point with `C² ≠ 0`.
    pub decomposable_branch: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Decomposability {
    Checked(Obstruction),
    Inapplicable { reason: String },
}

/// Eigenvalue arithmetic behind the decomposability theorem; `h` is `None`
/// when `C² = 0`.
pub fn decomposability_obstruction<T: Scalar>(
    n: usize,
    h: Option<&ParallelTensor<T>>,
    beta: Option<&[T]>,
    m: &MetricAtPoint<T>,
) -> Decomposability {
    let Some(h) = h else {
        return Decomposability::Inapplicable {
            reason: "C^2 = 0".into(),
        };
    };
    if n < 4 {
        return Decomposability::Inapplicable {
            reason: format!("n = {n} < 4"),
        };
    }
    let alpha_eigenvalue = Ratio::new((n - 3) as i64, (2 * (n - 2)) as i64);
    let null_eigenvalue = Ratio::new(1, n as i64);
    let residuals = beta.map(|b| {
        let up = m.raise_covector(b);
        let bs = max_abs(b);
        let hb: Vec<T> = (0..n).map(|i| (0..n).map(|j| h.h.at2(i, j) * up[j]).sum()).collect();
        let r = |lam: T| {
            let w = (0..n).fold(T::zero(), |acc, i| acc.max((hb[i] - lam * b[i]).abs()));
            scaled(w, bs).as_f64()
        };
        [r(h_alpha_eigenvalue(n)), r(T::one() / T::of_usize(n))]
    });
    let lorentzian = signature(m).map(|i| i.is_lorentzian()).unwrap_or(false);
    Decomposability::Checked(Obstruction {
        n,
        alpha_eigenvalue,
        null_eigenvalue,
        mismatch: alpha_eigenvalue != null_eigenvalue,
        residuals,
        decomposable_branch: lorentzian && alpha_eigenvalue != null_eigenvalue,
    })
}

/// Thresholds used to turn defects into flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlagTolerances {
    pub c2_zero: f64,
    pub null: f64,
    pub cc: f64,
    pub purely_electric: f64,
    pub type_iid: f64,
    pub ppwave_trace: f64,
    pub rank_one: f64,
}

impl Default for FlagTolerances {
    fn default() -> Self {
        Self {
            c2_zero: 1e-10,
            null: 1e-10,
            cc: 1e-11,
            purely_electric: 1e-9,
            type_iid: 1e-9,
            ppwave_trace: 1e-10,
            rank_one: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Flag {
    pub value: bool,
    pub defect: f64,
    pub tolerance: f64,
}

impl Flag {
    fn below(defect: f64, tolerance: f64) -> Self {
        Self {
            value: defect <= tolerance,
            defect,
            tolerance,
        }
    }
}

/// Per-point Lorentzian classification; each flag carries its defect.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationFlags {
    pub is_lorentzian: bool,
    pub c2_zero: Flag,
    pub has_cc_null_vector: Option<Flag>,
    pub purely_electric: Option<Flag>,
    pub type_iid: Option<Flag>,
    pub ppwave_trace: Option<Flag>,
    pub ricci_rank_one: Option<Flag>,
    pub conformal_harmonicity: f64,
}

impl ClassificationFlags {
    /// Flags for a catalog point. `rec` supplies `α` (time-like `α` feeds the
    /// purely-electric test, null `α` the type-IId and rank-one tests); the
    /// catalog's parallel null covector, if any, feeds the pp-wave tests.
    pub fn evaluate(
        pack: &CurvaturePack<f64>,
        spec: &MetricSpec,
        rec: Option<&RecurrenceResult<f64>>,
        tol: &FlagTolerances,
    ) -> Self {
        let m = &pack.metric;
        let n = pack.dim();
        let is_lorentzian = signature(m).map(|i| i.is_lorentzian()).unwrap_or(false);
        let c = pack.weyl_tensor();
        let c2_defect = rec
            .map(|r| scaled(r.c2.abs(), r.c2_scale))
            .unwrap_or_else(|| crate::tensor::full_square(c, m).map(f64::abs).unwrap_or(0.0));
        let c2_zero = Flag::below(c2_defect, tol.c2_zero);
        let mut flags = Self {
            is_lorentzian,
            c2_zero,
            has_cc_null_vector: None,
            purely_electric: None,
            type_iid: None,
            ppwave_trace: None,
            ricci_rank_one: None,
            conformal_harmonicity: conformal_harmonicity_defect(pack),
        };
        if !is_lorentzian {
            return flags;
        }
        if let Some(beta) = spec.parallel_null_covector() {
            let pp = ppwave_checks(pack, &beta, &vec![0.0; n * n], 0.0);
            flags.has_cc_null_vector = Some(Flag::below(pp.cc_defect, tol.cc));
            flags.ppwave_trace = Some(Flag::below(pp.trace_defect, tol.ppwave_trace));
        }
        if let Some(r) = rec {
            let alpha = &r.alpha;
            if max_abs(alpha) > 0.0 {
                if is_null(alpha, m, tol.null) {
                    if let Ok(t) = type_iid_test(c, alpha, m, tol.null) {
                        flags.type_iid = Some(Flag::below(t.defect, tol.type_iid));
                    }
                    if let Ok(ro) = rank_one_ricci_check(pack.ricci_tensor(), alpha) {
                        flags.ricci_rank_one = Some(Flag::below(ro.residual, tol.rank_one));
                    }
                } else if r.alpha_sq < 0.0 {
                    let u = m.raise_covector(alpha);
                    if let Ok(pe) = purely_electric_test(c, &u, m, tol.purely_electric) {
                        flags.purely_electric = Some(Flag::below(pe.defect, tol.purely_electric));
                    }
                }
            }
        }
        flags
    }
}
