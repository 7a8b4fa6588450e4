//! Recurrence vector extraction and the identities that follow from
//! `∇_i C_{jklm} = α_i C_{jklm}`.

use serde::Serialize;
use thiserror::Error;

use crate::curvature::{CurvatureError, CurvaturePack};
use crate::metrics::{MetricAtPoint, MetricSpec};
use crate::scalar::{max_abs, scaled, Scalar};
use crate::tensor::{for_each_index, full_square, full_square_scale, Tensor, TensorError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecurrenceError {
    #[error("conformally flat point: max|C| = {max_weyl:e}")]
    ConformallyFlat { max_weyl: f64 },
    #[error("stencil point {index} is not recurrent (residual {residual:e})")]
    StencilNotRecurrent { index: usize, residual: f64 },
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Outcome of a check that only applies under a hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Applicability<T> {
    Defect { value: T },
    Inapplicable { reason: String },
}

impl<T: Scalar> Applicability<T> {
    pub fn inapplicable(reason: impl Into<String>) -> Self {
        Applicability::Inapplicable { reason: reason.into() }
    }

    pub fn defect(&self) -> Option<T> {
        match self {
            Applicability::Defect { value } => Some(*value),
            Applicability::Inapplicable { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceResult<T> {
    pub alpha: Vec<T>,
    /// `max|∇C − α⊗C| / max|∇C|`.
    pub residual: T,
    pub c2: T,
    /// Scale against which `c2` is judged to vanish.
    pub c2_scale: T,
    pub alpha_sq: T,
    /// `∇C` vanishes identically.
    pub parallel_weyl: bool,
}

impl<T: Scalar> RecurrenceResult<T> {
    pub fn is_recurrent(&self, tol: T) -> bool {
        self.residual <= tol
    }

    /// `|C²|` is negligible against its term scale.
    pub fn c2_vanishes(&self, tol: T) -> bool {
        self.c2.abs() <= tol * self.c2_scale
    }

    pub fn alpha_raised(&self, m: &MetricAtPoint<T>) -> Vec<T> {
        m.raise_covector(&self.alpha)
    }
}

/// Least-squares `α_i = Σ ∇_iC·C / Σ C²`, per component.
///
/// `weyl_floor` is the absolute size of `max|C|` at or below which the point
/// is treated as conformally flat.
pub fn extract_alpha<T: Scalar>(
    c: &Tensor<T>,
    nabla_c: &Tensor<T>,
    m: &MetricAtPoint<T>,
    weyl_floor: T,
) -> Result<RecurrenceResult<T>, RecurrenceError> {
    let n = c.dim();
    let max_c = c.max_abs();
    if max_c <= weyl_floor {
        return Err(RecurrenceError::ConformallyFlat {
            max_weyl: max_c.as_f64(),
        });
    }
    let cd = c.data();
    let block = cd.len();
    let norm: T = cd.iter().map(|&v| v * v).sum();
    let nd = nabla_c.data();
    let alpha: Vec<T> = (0..n)
        .map(|i| {
            let row = &nd[i * block..(i + 1) * block];
            row.iter().zip(cd).map(|(&a, &b)| a * b).sum::<T>() / norm
        })
        .collect();
    let mut worst = T::zero();
    for i in 0..n {
        let row = &nd[i * block..(i + 1) * block];
        for (&a, &b) in row.iter().zip(cd) {
            worst = worst.max((a - alpha[i] * b).abs());
        }
    }
    let max_nc = nabla_c.max_abs();
    let parallel_weyl = max_nc == T::zero();
    let residual = if parallel_weyl { T::zero() } else { worst / max_nc };
    Ok(RecurrenceResult {
        c2: full_square(c, m)?,
        c2_scale: full_square_scale(c, m)?,
        alpha_sq: m.dot_covectors(&alpha, &alpha),
        alpha,
        residual,
        parallel_weyl,
    })
}

/// [`extract_alpha`] on a curvature pack, with the conformally-flat floor
/// taken relative to `max|Riemann|`.
pub fn recurrence_at<T: Scalar>(pack: &CurvaturePack<T>, flat_tol: T) -> Result<RecurrenceResult<T>, RecurrenceError> {
    let floor = flat_tol * pack.riemann_lower().max_abs();
    extract_alpha(pack.weyl_tensor(), &pack.nabla_weyl, &pack.metric, floor)
}

/// `∂_i C² = 2 ∇_iC_{jklm} C^{jklm}`.
pub fn c2_gradient<T: Scalar>(c: &Tensor<T>, nabla_c: &Tensor<T>, m: &MetricAtPoint<T>) -> Result<Vec<T>, TensorError> {
    let up = c.raise_all(m.ginv())?;
    let block = up.data().len();
    let two = T::lit(2.0);
    Ok((0..c.dim())
        .map(|i| {
            let row = &nabla_c.data()[i * block..(i + 1) * block];
            two * row.iter().zip(up.data()).map(|(&a, &b)| a * b).sum::<T>()
        })
        .collect())
}

/// `max_i |α_i − ½ ∂_i log|C²||`, scaled by `max|α|`; inapplicable when C² vanishes.
pub fn gradient_alpha_check<T: Scalar>(result: &RecurrenceResult<T>, dc2: &[T], tol: T) -> Applicability<T> {
    if result.c2_vanishes(tol) {
        return Applicability::inapplicable("null Weyl square");
    }
    let half = T::lit(0.5);
    let worst = result
        .alpha
        .iter()
        .zip(dc2)
        .map(|(&a, &d)| (a - half * d / result.c2).abs())
        .fold(T::zero(), T::max);
    Applicability::Defect {
        value: scaled(worst, max_abs(&result.alpha)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Closedness {
    /// `max_{i<j} |∂_iα_j − ∂_jα_i|`.
    pub defect: f64,
    /// Central-difference `∂_iα_j`, row-major.
    pub jacobian: Vec<f64>,
}

/// Central differences of the extracted `α` over a `2n`-point stencil.
pub fn closedness(
    spec: &MetricSpec,
    point: &[f64],
    h_step: f64,
    recurrence_tol: f64,
    flat_tol: f64,
) -> Result<Closedness, RecurrenceError> {
    let n = spec.n;
    let mut jac = vec![0.0; n * n];
    for i in 0..n {
        let mut alphas = [vec![], vec![]];
        for (s, sign) in [1.0, -1.0].into_iter().enumerate() {
            let mut x = point.to_vec();
            x[i] += sign * h_step;
            let pack = CurvaturePack::<f64>::at(spec, &x)?;
            let r = recurrence_at(&pack, flat_tol)?;
            if !r.is_recurrent(recurrence_tol) {
                return Err(RecurrenceError::StencilNotRecurrent {
                    index: 2 * i + s,
                    residual: r.residual,
                });
            }
            alphas[s] = r.alpha;
        }
        for j in 0..n {
            jac[i * n + j] = (alphas[0][j] - alphas[1][j]) / (2.0 * h_step);
        }
    }
    let mut defect = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            defect = defect.max((jac[i * n + j] - jac[j * n + i]).abs());
        }
    }
    Ok(Closedness { defect, jacobian: jac })
}

/// `∇_iα_j = ∂_iα_j − Γ^k_{ij}α_k` from coordinate partials (row-major).
pub fn covariant_alpha_derivative<T: Scalar>(alpha: &[T], dalpha: &[T], gamma: &Tensor<T>) -> Vec<T> {
    let n = alpha.len();
    let mut out = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = dalpha[i * n + j] - (0..n).map(|k| gamma.at3(k, i, j) * alpha[k]).sum::<T>();
        }
    }
    out
}

/// Ricci-identity commutator `[∇_i,∇_j]C_{klmn}` from the mixed Riemann
/// tensor `R_{ijk}{}^m`, scaled by its largest term. Vanishes for closed `α`.
pub fn semisymmetry_defect<T: Scalar>(c: &Tensor<T>, riemann_mixed: &Tensor<T>) -> T {
    let n = c.dim();
    let mut worst = T::zero();
    let mut scale = T::zero();
    for_each_index(n, 6, |ix| {
        let (i, j, k, l, m, q) = (ix[0], ix[1], ix[2], ix[3], ix[4], ix[5]);
        let mut t = [T::zero(); 4];
        for p in 0..n {
            t[0] -= riemann_mixed.at4(i, j, k, p) * c.at4(p, l, m, q);
            t[1] -= riemann_mixed.at4(i, j, l, p) * c.at4(k, p, m, q);
            t[2] -= riemann_mixed.at4(i, j, m, p) * c.at4(k, l, p, q);
            t[3] -= riemann_mixed.at4(i, j, q, p) * c.at4(k, l, m, p);
        }
        for v in t {
            scale = scale.max(v.abs());
        }
        worst = worst.max((t[0] + t[1] + t[2] + t[3]).abs());
    });
    scaled(worst, scale)
}

/// `max|∇_iK − α_i K|` scaled by `max|∇K|` for any tensor `K`.
pub fn tensor_recurrence_residual<T: Scalar>(k: &Tensor<T>, nabla_k: &Tensor<T>, alpha: &[T]) -> T {
    let block = k.data().len();
    let mut worst = T::zero();
    for (i, &a) in alpha.iter().enumerate() {
        let row = &nabla_k.data()[i * block..(i + 1) * block];
        for (&d, &v) in row.iter().zip(k.data()) {
            worst = worst.max((d - a * v).abs());
        }
    }
    scaled(worst, nabla_k.max_abs())
}

/// `α^kα^m R_{jklm} = α² R_{jl}`, scaled by the larger side.
pub fn alpha_alpha_riemann_defect<T: Scalar>(
    riemann: &Tensor<T>,
    ricci: &Tensor<T>,
    alpha: &[T],
    m: &MetricAtPoint<T>,
) -> T {
    let n = ricci.dim();
    let up = m.raise_covector(alpha);
    let a2 = m.dot_covectors(alpha, alpha);
    let mut worst = T::zero();
    let mut scale = T::zero();
    for j in 0..n {
        for l in 0..n {
            let mut s = T::zero();
            for k in 0..n {
                for mm in 0..n {
                    s += up[k] * up[mm] * riemann.at4(j, k, l, mm);
                }
            }
            let r = a2 * ricci.at2(j, l);
            scale = scale.max(s.abs()).max(r.abs());
            worst = worst.max((s - r).abs());
        }
    }
    scaled(worst, scale)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenRelation<T> {
    /// Least-squares `μ` in `R_{km}α^m = μ α_k`.
    pub mu: T,
    pub defect: T,
}

pub fn ricci_alpha_eigen<T: Scalar>(ricci: &Tensor<T>, alpha: &[T], m: &MetricAtPoint<T>) -> EigenRelation<T> {
    let n = alpha.len();
    let up = m.raise_covector(alpha);
    let ra: Vec<T> = (0..n).map(|k| (0..n).map(|j| ricci.at2(k, j) * up[j]).sum()).collect();
    let den: T = alpha.iter().map(|&a| a * a).sum();
    let mu = if den > T::zero() {
        ra.iter().zip(alpha).map(|(&r, &a)| r * a).sum::<T>() / den
    } else {
        T::zero()
    };
    let worst = ra
        .iter()
        .zip(alpha)
        .map(|(&r, &a)| (r - mu * a).abs())
        .fold(T::zero(), T::max);
    let scale = max_abs(&ra).max((mu * max_abs(alpha)).abs());
    EigenRelation {
        mu,
        defect: scaled(worst, scale),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{FunctionForm, MetricKind};

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
    fn pq_example_alpha() {
        let pack = CurvaturePack::<f64>::at(&pq(FunctionForm::exp()), &[0.3, 0.7, 0.2, 0.1, 0.4]).unwrap();
        let r = recurrence_at(&pack, 1e-10).unwrap();
        let want = [1.0, 0.0, 1.0, 0.0, 0.0];
        for (a, w) in r.alpha.iter().zip(want) {
            assert!((a - w).abs() < 1e-12, "{:?}", r.alpha);
        }
        assert!(r.residual < 1e-12);
        assert!((r.alpha_sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_branch_alpha() {
        let pack =
            CurvaturePack::<f64>::at(&pq(FunctionForm::poly(&[0.0, 0.0, 1.0])), &[0.3, 0.7, 0.2, 0.1, 0.4]).unwrap();
        let r = recurrence_at(&pack, 1e-10).unwrap();
        assert!((r.alpha[0] - 1.0).abs() < 1e-12);
        assert!(r.alpha[1..].iter().all(|a| a.abs() < 1e-12));
        assert!(r.alpha_sq.abs() < 1e-12);
    }

    #[test]
    fn flat_is_conformally_flat() {
        let spec = MetricSpec::new(5, MetricKind::Flat { negative: 1 });
        let pack = CurvaturePack::<f64>::at(&spec, &[0.5; 5]).unwrap();
        assert!(matches!(
            recurrence_at(&pack, 1e-10),
            Err(RecurrenceError::ConformallyFlat { .. })
        ));
        assert_eq!(semisymmetry_defect(pack.weyl_tensor(), &pack.riemann.mixed), 0.0);
    }

    #[test]
    fn pq_closed_and_semisymmetric() {
        let spec = pq(FunctionForm::exp());
        let x = [0.4, 0.5, 0.6, 0.2, 0.3];
        let c = closedness(&spec, &x, 1e-3, 1e-8, 1e-10).unwrap();
        assert!(c.defect < 1e-5);
        let pack = CurvaturePack::<f64>::at(&spec, &x).unwrap();
        assert!(semisymmetry_defect(pack.weyl_tensor(), &pack.riemann.mixed) < 1e-12);
        let r = recurrence_at(&pack, 1e-10).unwrap();
        assert!(tensor_recurrence_residual(pack.riemann_lower(), &pack.nabla_riemann, &r.alpha) < 1e-10);
        assert!(alpha_alpha_riemann_defect(pack.riemann_lower(), pack.ricci_tensor(), &r.alpha, &pack.metric) < 1e-12);
    }

    #[test]
    fn pq_c2_vanishes() {
        let pack = CurvaturePack::<f64>::at(&pq(FunctionForm::exp()), &[0.4, 0.5, 0.6, 0.2, 0.3]).unwrap();
        let r = recurrence_at(&pack, 1e-10).unwrap();
        assert!(r.c2_vanishes(1e-10));
        let d = c2_gradient(pack.weyl_tensor(), &pack.nabla_weyl, &pack.metric).unwrap();
        assert!(gradient_alpha_check(&r, &d, 1e-10).defect().is_none());
    }
}
