//! Electric tensor, Kulkarni–Nomizu representation, compatibility defects,
//! the parallel tensor `h` and the Ricci spectral structure it forces.

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{general_eigenvalues, matmul, LinalgError};
use crate::metrics::MetricAtPoint;
use crate::recurrence::Applicability;
use crate::scalar::{max_abs, scaled, Scalar};
use crate::tensor::{for_each_index, Down, Tensor, TensorError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeylOpsError {
    #[error("electric tensor undefined for null recurrence (alpha^2 = {alpha_sq:e})")]
    NullAlpha { alpha_sq: f64 },
    #[error("input is not symmetric (defect {defect:e})")]
    NotSymmetric { defect: f64 },
    #[error("operation needs n >= {needed}, got {n}")]
    DimensionTooSmall { n: usize, needed: usize },
    #[error("h undefined (null Weyl square)")]
    NullWeylSquare,
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `(n−3)/(2(n−2))`, the eigenvalue of `h` on the recurrence vector.
pub fn h_alpha_eigenvalue<T: Scalar>(n: usize) -> T {
    T::of_usize(n - 3) / T::of_usize(2 * (n - 2))
}

fn symmetry_defect<T: Scalar>(s: &Tensor<T>) -> T {
    let n = s.dim();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((s.at2(i, j) - s.at2(j, i)).abs());
        }
    }
    scaled(worst, s.max_abs())
}

/// Null test used for `α²`: `|α²| ≤ tol · max|g⁻¹| · max|α|²`.
pub fn is_null<T: Scalar>(alpha: &[T], m: &MetricAtPoint<T>, tol: T) -> bool {
    let a2 = m.dot_covectors(alpha, alpha);
    let s = max_abs(alpha);
    a2.abs() <= tol * m.ginv().max_abs() * s * s
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectricTensor<T> {
    pub e: Tensor<T>,
    pub alpha_used: Vec<T>,
    pub alpha_sq: T,
}

impl<T: Scalar> ElectricTensor<T> {
    /// Scaled defects of the symmetry, trace-free and `E·α = 0` invariants.
    pub fn invariant_defects(&self, m: &MetricAtPoint<T>) -> [T; 3] {
        let n = self.e.dim();
        let scale = self.e.max_abs();
        let gi = m.ginv();
        let mut tr = T::zero();
        for i in 0..n {
            for j in 0..n {
                tr += gi.at2(i, j) * self.e.at2(i, j);
            }
        }
        let up = m.raise_covector(&self.alpha_used);
        let ea = (0..n)
            .map(|i| (0..n).map(|j| self.e.at2(i, j) * up[j]).sum::<T>().abs())
            .fold(T::zero(), T::max);
        [
            symmetry_defect(&self.e),
            scaled(tr.abs(), scale * gi.max_abs()),
            scaled(ea, scale * max_abs(&up)),
        ]
    }
}

/// `E_il = α^jα^k C_ijkl / α²`.
pub fn electric_tensor<T: Scalar>(
    c: &Tensor<T>,
    alpha: &[T],
    m: &MetricAtPoint<T>,
    null_tol: T,
) -> Result<ElectricTensor<T>, WeylOpsError> {
    let n = c.dim();
    let alpha_sq = m.dot_covectors(alpha, alpha);
    if is_null(alpha, m, null_tol) || alpha_sq == T::zero() {
        return Err(WeylOpsError::NullAlpha {
            alpha_sq: alpha_sq.as_f64(),
        });
    }
    let up = m.raise_covector(alpha);
    let e = Tensor::from_fn(n, &[Down, Down], |ix| {
        let (i, l) = (ix[0], ix[1]);
        let mut s = T::zero();
        for j in 0..n {
            for k in 0..n {
                s += up[j] * up[k] * c.at4(i, j, k, l);
            }
        }
        s / alpha_sq
    });
    Ok(ElectricTensor {
        e,
        alpha_used: alpha.to_vec(),
        alpha_sq,
    })
}

/// `(A ⊙ B)_jklm = A_km B_jl + A_jl B_km − A_jm B_kl − A_kl B_jm`.
///
/// With this normalization `g ⊙ g = 2(g_jl g_km − g_jm g_kl)`.
pub fn kulkarni_nomizu<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, WeylOpsError> {
    let tol = T::lit(1e-12);
    for s in [a, b] {
        let d = symmetry_defect(s);
        if d > tol {
            return Err(WeylOpsError::NotSymmetric { defect: d.as_f64() });
        }
    }
    let n = a.dim();
    Ok(Tensor::from_fn(n, &[Down; 4], |ix| {
        let (j, k, l, m) = (ix[0], ix[1], ix[2], ix[3]);
        a.at2(k, m) * b.at2(j, l) + a.at2(j, l) * b.at2(k, m) - a.at2(j, m) * b.at2(k, l) - a.at2(k, l) * b.at2(j, m)
    }))
}

/// The representation `C = [(g − (n−2) α⊗α/α²)/(n−3)] ⊙ E`.
pub fn reconstruct_weyl<T: Scalar>(
    e: &Tensor<T>,
    alpha: &[T],
    m: &MetricAtPoint<T>,
    null_tol: T,
) -> Result<Tensor<T>, WeylOpsError> {
    let n = e.dim();
    if n < 5 {
        return Err(WeylOpsError::DimensionTooSmall { n, needed: 5 });
    }
    let a2 = m.dot_covectors(alpha, alpha);
    if is_null(alpha, m, null_tol) || a2 == T::zero() {
        return Err(WeylOpsError::NullAlpha { alpha_sq: a2.as_f64() });
    }
    let c = T::of_usize(n - 2);
    let d = T::of_usize(n - 3);
    let g = m.g();
    let a = Tensor::from_fn(n, &[Down, Down], |ix| {
        (g.at2(ix[0], ix[1]) - c * alpha[ix[0]] * alpha[ix[1]] / a2) / d
    });
    kulkarni_nomizu(&a, e)
}

/// Scaled `max|C − C_rec|`.
pub fn reconstruction_defect<T: Scalar>(c: &Tensor<T>, c_rec: &Tensor<T>) -> Result<T, TensorError> {
    Ok(scaled(c.max_abs_diff(c_rec)?, c.max_abs().max(c_rec.max_abs())))
}

/// `S_{im}K_{jkl}{}^m + S_{jm}K_{kil}{}^m + S_{km}K_{ijl}{}^m`, scaled by the
/// largest of the three terms. `S` need not be symmetric; `K` is all lower.
pub fn compatibility_defect<T: Scalar>(s: &Tensor<T>, k: &Tensor<T>, m: &MetricAtPoint<T>) -> Result<T, TensorError> {
    let n = k.dim();
    let mixed = k.raise(3, m.ginv())?;
    // x[i][j][k][l] = S_{im} K_{jkl}^m
    let x: Tensor<T> = Tensor::from_fn(n, &[Down; 4], |ix| {
        (0..n)
            .map(|p| s.at2(ix[0], p) * mixed.at4(ix[1], ix[2], ix[3], p))
            .sum()
    });
    let mut worst = T::zero();
    let mut scale = T::zero();
    for_each_index(n, 4, |ix| {
        let (i, j, kk, l) = (ix[0], ix[1], ix[2], ix[3]);
        let t = [x.at4(i, j, kk, l), x.at4(j, kk, i, l), x.at4(kk, i, j, l)];
        scale = scale.max(t[0].abs()).max(t[1].abs()).max(t[2].abs());
        worst = worst.max((t[0] + t[1] + t[2]).abs());
    });
    Ok(scaled(worst, scale))
}

/// `α⊗α` as a rank-2 tensor.
pub fn alpha_alpha<T: Scalar>(alpha: &[T]) -> Tensor<T> {
    let n = alpha.len();
    Tensor::from_fn(n, &[Down, Down], |ix| alpha[ix[0]] * alpha[ix[1]])
}

/// Defect of the algebraic form of the cyclic recurrence identity
/// `α_iC_jklm + α_jC_kilm + α_kC_ijlm = α^p/(n−3)·(g_jm C_kilp + g_km C_ijlp
/// + g_im C_jklp + g_kl C_jimp + g_il C_kjmp + g_jl C_ikmp)`.
pub fn cyclic_recurrence_defect<T: Scalar>(
    c: &Tensor<T>,
    alpha: &[T],
    m: &MetricAtPoint<T>,
) -> Result<T, WeylOpsError> {
    let n = c.dim();
    if n < 4 {
        return Err(WeylOpsError::DimensionTooSmall { n, needed: 4 });
    }
    let up = m.raise_covector(alpha);
    let g = m.g();
    // ac[a][b][c] = α^p C_abcp
    let ac = Tensor::from_fn(n, &[Down; 3], |ix| {
        (0..n).map(|p| up[p] * c.at4(ix[0], ix[1], ix[2], p)).sum()
    });
    let inv = T::one() / T::of_usize(n - 3);
    let mut worst = T::zero();
    let mut scale = T::zero();
    for_each_index(n, 5, |ix| {
        let (i, j, k, l, mm) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
        let lhs = [
            alpha[i] * c.at4(j, k, l, mm),
            alpha[j] * c.at4(k, i, l, mm),
            alpha[k] * c.at4(i, j, l, mm),
        ];
        let rhs = [
            g.at2(j, mm) * ac.at3(k, i, l),
            g.at2(k, mm) * ac.at3(i, j, l),
            g.at2(i, mm) * ac.at3(j, k, l),
            g.at2(k, l) * ac.at3(j, i, mm),
            g.at2(i, l) * ac.at3(k, j, mm),
            g.at2(j, l) * ac.at3(i, k, mm),
        ];
        let mut total = T::zero();
        for v in lhs {
            scale = scale.max(v.abs());
            total += v;
        }
        for v in rhs {
            scale = scale.max((v * inv).abs());
            total -= v * inv;
        }
        worst = worst.max(total.abs());
    });
    Ok(scaled(worst, scale))
}

/// The three cyclic identities for `α⊗α`, `∇α + ∇αᵀ + Ric` and
/// `∇α − ∇αᵀ + ((n−4)/(n−2))Ric`; `nabla_alpha[i*n+m] = ∇_iα_m`.
pub fn lovelock_family_defects<T: Scalar>(
    c: &Tensor<T>,
    ricci: &Tensor<T>,
    alpha: &[T],
    nabla_alpha: &[T],
    m: &MetricAtPoint<T>,
) -> Result<[T; 3], WeylOpsError> {
    let n = c.dim();
    if nabla_alpha.len() != n * n {
        return Err(WeylOpsError::Tensor(TensorError::BadLength {
            len: nabla_alpha.len(),
            expected: n * n,
        }));
    }
    let w = T::of_usize(n - 4) / T::of_usize(n - 2);
    let na = |i: usize, j: usize| nabla_alpha[i * n + j];
    let s2 = Tensor::from_fn(n, &[Down, Down], |ix| {
        let (i, k) = (ix[0], ix[1]);
        na(i, k) + na(k, i) + ricci.at2(i, k)
    });
    let s3 = Tensor::from_fn(n, &[Down, Down], |ix| {
        let (i, k) = (ix[0], ix[1]);
        na(i, k) - na(k, i) + w * ricci.at2(i, k)
    });
    Ok([
        compatibility_defect(&alpha_alpha(alpha), c, m)?,
        compatibility_defect(&s2, c, m)?,
        compatibility_defect(&s3, c, m)?,
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParallelTensor<T> {
    pub h: Tensor<T>,
    pub c2: T,
    /// `g^{ij}h_ij`.
    pub trace: T,
    /// Scaled `max|h − (tr h / n) g|`.
    pub deviation_from_metric: T,
}

impl<T: Scalar> ParallelTensor<T> {
    pub fn proportional_to_metric(&self, tol: T) -> bool {
        self.deviation_from_metric <= tol
    }
}

fn c_raised_tail<T: Scalar>(c: &Tensor<T>, m: &MetricAtPoint<T>) -> Result<Tensor<T>, TensorError> {
    c.raise(1, m.ginv())?.raise(2, m.ginv())?.raise(3, m.ginv())
}

/// Contraction `A_i{}^{klm} B_jklm` of a tail-raised tensor with an all-lower one.
fn tail_contract<T: Scalar>(a_up: &[T], b: &[T], n: usize) -> Vec<T> {
    let block = n * n * n;
    let mut out = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = a_up[i * block..(i + 1) * block]
                .iter()
                .zip(&b[j * block..(j + 1) * block])
                .map(|(&x, &y)| x * y)
                .sum();
        }
    }
    out
}

/// `h_ij = C_i{}^{klm}C_jklm / C²`.
pub fn h_tensor<T: Scalar>(c: &Tensor<T>, m: &MetricAtPoint<T>, tol: T) -> Result<ParallelTensor<T>, WeylOpsError> {
    let n = c.dim();
    let up = c_raised_tail(c, m)?;
    let raw = tail_contract(up.data(), c.data(), n);
    let c2: T = (0..n)
        .map(|i| (0..n).map(|j| m.ginv().at2(i, j) * raw[i * n + j]).sum::<T>())
        .sum();
    let scale = c.max_abs() * up.max_abs();
    if c2.abs() <= tol * scale || c2 == T::zero() {
        return Err(WeylOpsError::NullWeylSquare);
    }
    let h = Tensor::from_vec(n, &[Down, Down], raw.iter().map(|&v| v / c2).collect())?;
    let trace = trace_of(&h, m);
    let nn = T::of_usize(n);
    let dev = Tensor::from_fn(n, &[Down, Down], |ix| {
        h.at2(ix[0], ix[1]) - trace / nn * m.g().at2(ix[0], ix[1])
    });
    Ok(ParallelTensor {
        deviation_from_metric: scaled(dev.max_abs(), h.max_abs()),
        h,
        c2,
        trace,
    })
}

fn trace_of<T: Scalar>(s: &Tensor<T>, m: &MetricAtPoint<T>) -> T {
    let n = s.dim();
    let mut t = T::zero();
    for i in 0..n {
        for j in 0..n {
            t += m.ginv().at2(i, j) * s.at2(i, j);
        }
    }
    t
}

/// `max|∇_k h_ij|` from `∇C` by the quotient rule, scaled by the larger of
/// its two terms.
pub fn parallel_h_defect<T: Scalar>(
    c: &Tensor<T>,
    nabla_c: &Tensor<T>,
    m: &MetricAtPoint<T>,
    tol: T,
) -> Result<T, WeylOpsError> {
    let n = c.dim();
    let p = h_tensor(c, m, tol)?;
    let up = c_raised_tail(c, m)?;
    let all_up = up.raise(0, m.ginv())?;
    let block = n.pow(4);
    let mut worst = T::zero();
    let mut scale = T::zero();
    let two = T::lit(2.0);
    for k in 0..n {
        let nc_k = &nabla_c.data()[k * block..(k + 1) * block];
        let nc_k_t = Tensor::from_vec(n, &[Down; 4], nc_k.to_vec())?;
        let nc_up = c_raised_tail(&nc_k_t, m)?;
        let a = tail_contract(nc_up.data(), c.data(), n);
        let b = tail_contract(up.data(), nc_k, n);
        let dc2 = two * nc_k.iter().zip(all_up.data()).map(|(&x, &y)| x * y).sum::<T>();
        for i in 0..n {
            for j in 0..n {
                let first = (a[i * n + j] + b[i * n + j]) / p.c2;
                let second = p.h.at2(i, j) * dc2 / p.c2;
                scale = scale.max(first.abs()).max(second.abs());
                worst = worst.max((first - second).abs());
            }
        }
    }
    Ok(scaled(worst, scale))
}

/// `h_ij α^j = ((n−3)/(2(n−2))) α_i`, scaled by `max|α|·max|h|`-sized terms.
pub fn h_alpha_defect<T: Scalar>(h: &Tensor<T>, alpha: &[T], m: &MetricAtPoint<T>) -> T {
    let n = h.dim();
    let up = m.raise_covector(alpha);
    let ev: T = h_alpha_eigenvalue(n);
    let ha: Vec<T> = (0..n).map(|i| (0..n).map(|j| h.at2(i, j) * up[j]).sum()).collect();
    let worst = ha
        .iter()
        .zip(alpha)
        .map(|(&x, &a)| (x - ev * a).abs())
        .fold(T::zero(), T::max);
    scaled(worst, max_abs(&ha).max(ev * max_abs(alpha)))
}

/// Mixed form `S^i{}_j = g^{ik} S_kj` as a row-major matrix.
pub fn mixed_matrix<T: Scalar>(s: &Tensor<T>, m: &MetricAtPoint<T>) -> Vec<T> {
    let n = s.dim();
    matmul(m.ginv().data(), s.data(), n)
}

/// `max|h_i{}^m R_mj − R_i{}^m h_mj|`, scaled.
pub fn commutator_defect<T: Scalar>(h: &Tensor<T>, ricci: &Tensor<T>, m: &MetricAtPoint<T>) -> T {
    let n = h.dim();
    // h_i^m R_mj = h_ik g^{km} R_mj
    let hm = matmul(h.data(), m.ginv().data(), n);
    let rm = matmul(ricci.data(), m.ginv().data(), n);
    let a = matmul(&hm, ricci.data(), n);
    let b = matmul(&rm, h.data(), n);
    let worst = a.iter().zip(&b).map(|(&x, &y)| (x - y).abs()).fold(T::zero(), T::max);
    scaled(worst, max_abs(&a).max(max_abs(&b)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrycakFit<T> {
    /// Scalar `G` in `Ric − (R/n)g = G(h − g/n)`.
    pub g_coeff: T,
    pub residual: T,
}

/// Least-squares `G`; inapplicable when `h` is proportional to `g`.
pub fn grycak_fit<T: Scalar>(
    ricci: &Tensor<T>,
    scalar: T,
    h: &Tensor<T>,
    m: &MetricAtPoint<T>,
    tol: T,
) -> Result<GrycakFit<T>, String> {
    let n = ricci.dim();
    let nn = T::of_usize(n);
    let g = m.g();
    let t1: Vec<T> = (0..n * n)
        .map(|k| ricci.data()[k] - scalar / nn * g.data()[k])
        .collect();
    let t2: Vec<T> = (0..n * n).map(|k| h.data()[k] - g.data()[k] / nn).collect();
    if max_abs(&t2) <= tol * h.max_abs().max(g.max_abs() / nn) {
        return Err("Grycak hypothesis violated: h is proportional to the metric".into());
    }
    let num: T = t1.iter().zip(&t2).map(|(&a, &b)| a * b).sum();
    let den: T = t2.iter().map(|&b| b * b).sum();
    let gc = num / den;
    let worst = t1
        .iter()
        .zip(&t2)
        .map(|(&a, &b)| (a - gc * b).abs())
        .fold(T::zero(), T::max);
    let scale = max_abs(&t1).max((gc * max_abs(&t2)).abs());
    Ok(GrycakFit {
        g_coeff: gc,
        residual: scaled(worst, scale),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralResult<T> {
    /// Eigenvalue clusters of `h^i{}_j` as `(value, multiplicity)`.
    pub clusters: Vec<(T, usize)>,
    /// Largest imaginary part met in the `h` spectrum.
    pub max_imaginary: T,
    pub n_h: usize,
    pub h_prime: Option<T>,
    pub mu: T,
    pub mu_prime: Option<T>,
    /// Ricci spectrum against `{μ ×n_h, μ′ ×(n−n_h)}`.
    pub ricci_spectrum_defect: T,
    /// `R = n_h μ + (n−n_h) μ′`.
    pub scalar_defect: T,
    /// Mixed projector `P^i{}_j`, row-major.
    pub projector: Vec<T>,
    pub projector_idempotence_defect: T,
    pub projector_trace_defect: T,
    pub h_const: T,
    pub h_square_defect: T,
    /// More than two clusters, or `n_h = n`.
    pub finding: Option<String>,
}

/// Sorts values and groups neighbours within `rel_tol` (relative to
/// `max(1, |v|)`).
pub fn cluster_values<T: Scalar>(values: &[T], rel_tol: T) -> Vec<(T, usize)> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<(T, T, usize)> = Vec::new();
    for x in v {
        if let Some(last) = out.last_mut() {
            if (x - last.1).abs() <= rel_tol * T::one().max(x.abs()) {
                last.0 += x;
                last.1 = x;
                last.2 += 1;
                continue;
            }
        }
        out.push((x, x, 1));
    }
    out.into_iter().map(|(sum, _, k)| (sum / T::of_usize(k), k)).collect()
}

/// Eigen-structure of `h` and `Ric` predicted by the Grycak proportionality.
pub fn spectral_analysis<T: Scalar>(
    ricci: &Tensor<T>,
    h: &Tensor<T>,
    scalar: T,
    g_coeff: T,
    m: &MetricAtPoint<T>,
    cluster_tol: T,
) -> Result<SpectralResult<T>, WeylOpsError> {
    let n = h.dim();
    if n < 5 {
        return Err(WeylOpsError::DimensionTooSmall { n, needed: 5 });
    }
    let nn = T::of_usize(n);
    let hm = mixed_matrix(h, m);
    let ev = general_eigenvalues(&hm, n)?;
    let max_imaginary = T::lit(ev.iter().map(|e| e.1.abs()).fold(0.0, f64::max));
    let reals: Vec<T> = ev.iter().map(|e| T::lit(e.0)).collect();
    let clusters = cluster_values(&reals, cluster_tol);
    let h0: T = h_alpha_eigenvalue(n);
    let (first_idx, _) = clusters
        .iter()
        .enumerate()
        .map(|(i, c)| (i, (c.0 - h0).abs()))
        .fold((0, T::infinity()), |b, c| if c.1 < b.1 { c } else { b });
    let n_h = clusters[first_idx].1;
    let other: Vec<&(T, usize)> = clusters
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != first_idx)
        .map(|(_, c)| c)
        .collect();
    let mut finding = None;
    if clusters.len() > 2 {
        finding = Some(format!(
            "theorem violation: {} eigenvalue clusters of h",
            clusters.len()
        ));
    } else if n_h == n {
        finding = Some("h proportional to g (n_h = n)".into());
    }
    let h_prime = other.first().map(|c| c.0);

    let a = T::of_usize((n - 1) * (n - 4));
    let b = T::of_usize(2 * n * (n - 2));
    let mu = scalar / nn + g_coeff * a / b;
    let mu_prime = if n_h < n {
        Some(scalar / nn - g_coeff * a * T::of_usize(n_h) / (b * T::of_usize(n - n_h)))
    } else {
        None
    };

    let rm = mixed_matrix(ricci, m);
    let mut rev: Vec<T> = general_eigenvalues(&rm, n)?.iter().map(|e| T::lit(e.0)).collect();
    rev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    let mut predicted: Vec<T> = std::iter::repeat_n(mu, n_h)
        .chain(std::iter::repeat_n(mu_prime.unwrap_or(mu), n - n_h))
        .collect();
    predicted.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    let spec_scale = max_abs(&rev).max(max_abs(&predicted));
    let ricci_spectrum_defect = scaled(
        rev.iter()
            .zip(&predicted)
            .map(|(&x, &y)| (x - y).abs())
            .fold(T::zero(), T::max),
        spec_scale,
    );
    let recomposed = T::of_usize(n_h) * mu + T::of_usize(n - n_h) * mu_prime.unwrap_or(T::zero());
    let scalar_defect = scaled(
        (scalar - recomposed).abs(),
        scalar.abs().max((T::of_usize(n_h) * mu).abs()).max(spec_scale),
    );

    let pa = T::of_usize(2 * (n - 2) * (n - n_h)) / a;
    let pb = (T::of_usize(n_h * (n - 3)) - T::of_usize(2 * (n - 2))) / a;
    let projector: Vec<T> = (0..n * n)
        .map(|k| pa * hm[k] + if k / n == k % n { pb } else { T::zero() })
        .collect();
    let p2 = matmul(&projector, &projector, n);
    let projector_idempotence_defect = scaled(
        p2.iter()
            .zip(&projector)
            .map(|(&x, &y)| (x - y).abs())
            .fold(T::zero(), T::max),
        max_abs(&projector),
    );
    let ptrace: T = (0..n).map(|i| projector[i * n + i]).sum();
    let projector_trace_defect = scaled((ptrace - T::of_usize(n_h)).abs(), T::of_usize(n_h).max(T::one()));

    // h² − (tr h²/n) g = H (h − g/n)
    let g = m.g();
    let h2 = matmul(&matmul(h.data(), m.ginv().data(), n), h.data(), n);
    let tr_h2 = trace_of(&Tensor::from_vec(n, &[Down, Down], h2.clone())?, m);
    let lhs: Vec<T> = (0..n * n).map(|k| h2[k] - tr_h2 / nn * g.data()[k]).collect();
    let rhs: Vec<T> = (0..n * n).map(|k| h.data()[k] - g.data()[k] / nn).collect();
    let den: T = rhs.iter().map(|&x| x * x).sum();
    let h_const = if den > T::zero() {
        lhs.iter().zip(&rhs).map(|(&x, &y)| x * y).sum::<T>() / den
    } else {
        T::zero()
    };
    let h_square_defect = scaled(
        lhs.iter()
            .zip(&rhs)
            .map(|(&x, &y)| (x - h_const * y).abs())
            .fold(T::zero(), T::max),
        max_abs(&lhs).max((h_const * max_abs(&rhs)).abs()),
    );

    Ok(SpectralResult {
        clusters,
        max_imaginary,
        n_h,
        h_prime,
        mu,
        mu_prime,
        ricci_spectrum_defect,
        scalar_defect,
        projector,
        projector_idempotence_defect,
        projector_trace_defect,
        h_const,
        h_square_defect,
        finding,
    })
}

/// Dimensions in `range` where a vanishing second eigenvalue of `h` has an
/// integer multiplicity `n_h = 2(n−2)/(n−3)`, together with that `n_h`.
pub fn zero_second_eigenvalue_solutions(range: std::ops::RangeInclusive<usize>) -> Vec<(usize, i64)> {
    range
        .filter(|&n| n >= 5)
        .filter_map(|n| {
            let n_h = Ratio::new(2 * (n as i64 - 2), n as i64 - 3);
            n_h.is_integer().then(|| (n, n_h.to_integer()))
        })
        .collect()
}

/// `Ric − (R/n)g = (G/2)((n−4)/(n−2))[α⊗α/α² − g/n]` when `n_h = 1`.
pub fn quasi_einstein_defect<T: Scalar>(
    ricci: &Tensor<T>,
    scalar: T,
    g_coeff: T,
    alpha: &[T],
    m: &MetricAtPoint<T>,
) -> T {
    let n = ricci.dim();
    let nn = T::of_usize(n);
    let a2 = m.dot_covectors(alpha, alpha);
    let k = g_coeff / T::lit(2.0) * T::of_usize(n - 4) / T::of_usize(n - 2);
    let g = m.g();
    let mut worst = T::zero();
    let mut scale = T::zero();
    for i in 0..n {
        for j in 0..n {
            let lhs = ricci.at2(i, j) - scalar / nn * g.at2(i, j);
            let rhs = k * (alpha[i] * alpha[j] / a2 - g.at2(i, j) / nn);
            scale = scale.max(lhs.abs()).max(rhs.abs());
            worst = worst.max((lhs - rhs).abs());
        }
    }
    scaled(worst, scale)
}

/// Algebraic core of the `∇G` relation:
/// `∇_jG = n(n−2)²/((n−1)²(n−4)) [α_jα_m/α² − g_jm/n] ∇^mR`, plus the
/// contracted form `(n−2)² α^k∇_kR = (n−1)(n−4) α^k∇_kG`.
pub fn grad_g_relation_defects<T: Scalar>(alpha: &[T], grad_g: &[T], grad_r: &[T], m: &MetricAtPoint<T>) -> [T; 2] {
    let n = alpha.len();
    let nn = T::of_usize(n);
    let a2 = m.dot_covectors(alpha, alpha);
    let c = nn * T::of_usize((n - 2) * (n - 2)) / (T::of_usize((n - 1) * (n - 1)) * T::of_usize(n - 4));
    let up_r = m.raise_covector(grad_r);
    let ar: T = alpha.iter().zip(&up_r).map(|(&a, &r)| a * r).sum();
    let mut worst = T::zero();
    let mut scale = max_abs(grad_g);
    for j in 0..n {
        let rhs = c * (alpha[j] * ar / a2 - grad_r[j] / nn);
        scale = scale.max(rhs.abs());
        worst = worst.max((grad_g[j] - rhs).abs());
    }
    let up_a = m.raise_covector(alpha);
    let a_dr: T = up_a.iter().zip(grad_r).map(|(&a, &r)| a * r).sum();
    let a_dg: T = up_a.iter().zip(grad_g).map(|(&a, &r)| a * r).sum();
    let l = T::of_usize((n - 2) * (n - 2)) * a_dr;
    let r = T::of_usize((n - 1) * (n - 4)) * a_dg;
    [scaled(worst, scale), scaled((l - r).abs(), l.abs().max(r.abs()))]
}

/// `∇_k(Ric − (R/n)g) = (∇_kG/G)(Ric − (R/n)g)`; `nabla_ricci` is `∇_kR_ij`.
pub fn traceless_ricci_recurrence_defect<T: Scalar>(
    ricci: &Tensor<T>,
    nabla_ricci: &Tensor<T>,
    scalar: T,
    grad_scalar: &[T],
    g_coeff: T,
    grad_g: &[T],
    m: &MetricAtPoint<T>,
) -> T {
    let n = ricci.dim();
    let nn = T::of_usize(n);
    let g = m.g();
    let mut worst = T::zero();
    let mut scale = T::zero();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let lhs = nabla_ricci.at3(k, i, j) - grad_scalar[k] / nn * g.at2(i, j);
                let rhs = grad_g[k] / g_coeff * (ricci.at2(i, j) - scalar / nn * g.at2(i, j));
                scale = scale.max(lhs.abs()).max(rhs.abs());
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    scaled(worst, scale)
}

/// `∇G` relation on a catalog metric: `G` by central differences of the
/// Grycak fit over a `2n` stencil, `∇R` from the curvature pack.
pub fn grad_g_relation_on_metric(
    spec: &crate::metrics::MetricSpec,
    point: &[f64],
    h_step: f64,
    tol: f64,
) -> Applicability<f64> {
    use crate::curvature::CurvaturePack;
    use crate::recurrence::recurrence_at;
    let n = spec.n;
    let fit_at = |x: &[f64]| -> Result<(f64, CurvaturePack<f64>, Vec<f64>), String> {
        let pack = CurvaturePack::<f64>::at(spec, x).map_err(|e| e.to_string())?;
        let rec = recurrence_at(&pack, tol).map_err(|e| e.to_string())?;
        let p = h_tensor(pack.weyl_tensor(), &pack.metric, tol).map_err(|e| e.to_string())?;
        let fit = grycak_fit(pack.ricci_tensor(), pack.scalar(), &p.h, &pack.metric, tol)?;
        Ok((fit.g_coeff, pack, rec.alpha))
    };
    let (_, pack, alpha) = match fit_at(point) {
        Ok(v) => v,
        Err(e) => return Applicability::inapplicable(e),
    };
    if is_null(&alpha, &pack.metric, tol) {
        return Applicability::inapplicable("null recurrence vector");
    }
    let mut grad_g = vec![0.0; n];
    for (i, gg) in grad_g.iter_mut().enumerate() {
        let mut xp = point.to_vec();
        let mut xm = point.to_vec();
        xp[i] += h_step;
        xm[i] -= h_step;
        match (fit_at(&xp), fit_at(&xm)) {
            (Ok(a), Ok(b)) => *gg = (a.0 - b.0) / (2.0 * h_step),
            (Err(e), _) | (_, Err(e)) => return Applicability::inapplicable(format!("stencil: {e}")),
        }
    }
    let grad_r = pack.ricci.dscalar.data().to_vec();
    let d = grad_g_relation_defects(&alpha, &grad_g, &grad_r, &pack.metric);
    Applicability::Defect { value: d[0].max(d[1]) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::first_bianchi_defect;

    fn minkowski(n: usize) -> MetricAtPoint<f64> {
        let g = Tensor::from_fn(n, &[Down, Down], |ix| {
            if ix[0] != ix[1] {
                0.0
            } else if ix[0] == 0 {
                -1.0
            } else {
                1.0
            }
        });
        MetricAtPoint::constant(g).unwrap()
    }

    #[test]
    fn kn_of_metric_with_itself() {
        let m = minkowski(5);
        let g = m.g();
        let k = kulkarni_nomizu(g, g).unwrap();
        let mut worst = 0.0f64;
        for_each_index(5, 4, |ix| {
            let (j, kk, l, mm) = (ix[0], ix[1], ix[2], ix[3]);
            let e = 2.0 * (g.at2(j, l) * g.at2(kk, mm) - g.at2(j, mm) * g.at2(kk, l));
            worst = worst.max((k.at4(j, kk, l, mm) - e).abs());
        });
        assert_eq!(worst, 0.0);
        assert_eq!(first_bianchi_defect(&k), 0.0);
    }

    #[test]
    fn kn_rejects_asymmetric() {
        let a = Tensor::from_fn(4, &[Down, Down], |ix| ix[0] as f64);
        let b = Tensor::from_fn(4, &[Down, Down], |_| 1.0);
        assert!(matches!(
            kulkarni_nomizu(&a, &b),
            Err(WeylOpsError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn metric_is_compatible_with_anything_bianchi() {
        let m = minkowski(5);
        let mut k = 0.0;
        let a = Tensor::from_fn(5, &[Down, Down], |ix| {
            k += 0.31;
            ((ix[0] + ix[1]) as f64 * 0.7 + k * 0.0).sin()
        });
        let b = Tensor::from_fn(5, &[Down, Down], |ix| ((ix[0] * ix[1]) as f64 * 0.3).cos());
        let riem = kulkarni_nomizu(&a, &b).unwrap();
        assert!(compatibility_defect(m.g(), &riem, &m).unwrap() < 1e-15);
    }

    #[test]
    fn zero_weyl_gives_zero_electric() {
        let m = minkowski(5);
        let c = Tensor::zeros(5, &[Down; 4]);
        let e = electric_tensor(&c, &[0.0, 1.0, 0.0, 0.0, 0.0], &m, 1e-12).unwrap();
        assert_eq!(e.e.max_abs(), 0.0);
        assert!(electric_tensor(&c, &[1.0, 1.0, 0.0, 0.0, 0.0], &m, 1e-12).is_err());
        assert_eq!(
            cyclic_recurrence_defect(&c, &[1.0, 0.0, 0.0, 0.0, 0.0], &m).unwrap(),
            0.0
        );
    }

    #[test]
    fn only_five_admits_zero_second_eigenvalue() {
        assert_eq!(zero_second_eigenvalue_solutions(5..=12), vec![(5, 3)]);
    }

    #[test]
    fn clustering() {
        let c = cluster_values(&[0.5, 0.2, 0.5 + 1e-9, 0.2 - 1e-10, 0.9], 1e-6);
        assert_eq!(c.len(), 3);
        assert_eq!(c.iter().map(|x| x.1).collect::<Vec<_>>(), vec![2, 2, 1]);
    }

    #[test]
    fn grycak_degenerate_and_exact() {
        let m = minkowski(5);
        let h = m.g().scale(0.2);
        let ric = m.g().scale(3.0);
        assert!(grycak_fit(&ric, 15.0, &h, &m, 1e-12).is_err());
        let h = Tensor::from_fn(5, &[Down, Down], |ix| {
            m.g().at2(ix[0], ix[1]) * 0.2 + if ix[0] == 1 && ix[1] == 1 { 0.3 } else { 0.0 }
        });
        let r = 1.5;
        let ric = Tensor::from_fn(5, &[Down, Down], |ix| {
            let g = m.g().at2(ix[0], ix[1]);
            r / 5.0 * g + 2.5 * (h.at2(ix[0], ix[1]) - g / 5.0)
        });
        let fit = grycak_fit(&ric, r, &h, &m, 1e-12).unwrap();
        assert!((fit.g_coeff - 2.5).abs() < 1e-13);
        assert!(fit.residual < 1e-14);
    }
}
