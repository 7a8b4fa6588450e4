//! Seeded synthetic instances: metrics from random frames, recurrent Weyl
//! tensors in Kulkarni–Nomizu form, random Weyl-symmetric tensors, and
//! parallel tensors with a prescribed two-eigenvalue spectrum.
//!
//! A metric is `g = Aᵀ η A` with `A = I + 0.3·noise`; the rows `θ^a` of `A`
//! are then a `g`-orthonormal coframe and the columns of `A⁻¹` the frame.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Lu;
use crate::metrics::MetricAtPoint;
use crate::tensor::{Down, Tensor};
use crate::weylops::{h_alpha_eigenvalue, kulkarni_nomizu, reconstruct_weyl};

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Causal character requested for a synthetic recurrence vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaKind {
    /// Lorentzian metric, `α² > 0`.
    Spacelike,
    /// Lorentzian metric, `α² < 0`.
    Timelike,
    /// Positive-definite metric.
    Riemannian,
}

/// A constant metric together with its orthonormal coframe and frame.
#[derive(Debug, Clone)]
pub struct Frame {
    pub metric: MetricAtPoint<f64>,
    /// `η_aa`.
    pub eta: Vec<f64>,
    /// Row `a` is the covector `θ^a`.
    pub coframe: Vec<f64>,
    /// Column `a` is the vector `f_a`.
    pub frame: Vec<f64>,
}

impl Frame {
    pub fn dim(&self) -> usize {
        self.eta.len()
    }

    pub fn covector(&self, a: usize) -> Vec<f64> {
        let n = self.dim();
        self.coframe[a * n..(a + 1) * n].to_vec()
    }

    pub fn vector(&self, a: usize) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| self.frame[i * n + a]).collect()
    }

    /// `Σ_a w_a θ^a_i θ^a_j`.
    pub fn diagonal(&self, w: &[f64]) -> Tensor<f64> {
        let n = self.dim();
        Tensor::from_fn(n, &[Down, Down], |ix| {
            (0..n)
                .map(|a| w[a] * self.coframe[a * n + ix[0]] * self.coframe[a * n + ix[1]])
                .sum()
        })
    }

    /// Covector with frame components `c` (i.e. `Σ c_a θ^a`).
    pub fn covector_from(&self, c: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|a| c[a] * self.coframe[a * n + i]).sum())
            .collect()
    }

    /// Vector with frame components `c`.
    pub fn vector_from(&self, c: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|a| c[a] * self.frame[i * n + a]).sum())
            .collect()
    }
}

pub fn random_frame(rng: &mut Rng, n: usize, negative: usize) -> Frame {
    loop {
        let a: Vec<f64> = (0..n * n)
            .map(|k| if k / n == k % n { 1.0 } else { 0.0 } + 0.3 * rng.random_range(-1.0..1.0))
            .collect();
        let Ok(lu) = Lu::factor(&a, n) else { continue };
        if lu.determinant().abs() < 0.2 {
            continue;
        }
        let eta: Vec<f64> = (0..n).map(|i| if i < negative { -1.0 } else { 1.0 }).collect();
        let g = Tensor::from_fn(n, &[Down, Down], |ix| {
            (0..n).map(|c| a[c * n + ix[0]] * eta[c] * a[c * n + ix[1]]).sum()
        });
        let Ok(metric) = MetricAtPoint::constant(g) else {
            continue;
        };
        return Frame {
            metric,
            eta,
            coframe: a,
            frame: lu.inverse(),
        };
    }
}

pub fn random_symmetric(rng: &mut Rng, n: usize) -> Tensor<f64> {
    let mut t = Tensor::zeros(n, &[Down, Down]);
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..1.0);
            t.set(&[i, j], v);
            t.set(&[j, i], v);
        }
    }
    t
}

pub fn random_covector(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Symmetric, trace-free, `E α^ = 0` tensor obtained by projecting a random
/// symmetric matrix orthogonally to `α`.
pub fn random_electric(rng: &mut Rng, m: &MetricAtPoint<f64>, alpha: &[f64]) -> Tensor<f64> {
    let n = m.dim();
    let s = random_symmetric(rng, n);
    let up = m.raise_covector(alpha);
    let a2 = m.dot_covectors(alpha, alpha);
    // Π_i^a = δ_i^a − α_i α^a / α²
    let pi = |i: usize, a: usize| if i == a { 1.0 } else { 0.0 } - alpha[i] * up[a] / a2;
    let e0 = Tensor::from_fn(n, &[Down, Down], |ix| {
        let mut v = 0.0;
        for a in 0..n {
            for b in 0..n {
                v += pi(ix[0], a) * s.at2(a, b) * pi(ix[1], b);
            }
        }
        v
    });
    let mut tr = 0.0;
    for i in 0..n {
        for j in 0..n {
            tr += m.ginv().at2(i, j) * e0.at2(i, j);
        }
    }
    let g = m.g();
    Tensor::from_fn(n, &[Down, Down], |ix| {
        let (i, j) = (ix[0], ix[1]);
        e0.at2(i, j) - tr / (n as f64 - 1.0) * (g.at2(i, j) - alpha[i] * alpha[j] / a2)
    })
}

/// A recurrent Weyl tensor in Kulkarni–Nomizu form, with `∇C = α⊗C`.
#[derive(Debug, Clone)]
pub struct CrInstance {
    pub frame: Frame,
    pub alpha: Vec<f64>,
    pub e: Tensor<f64>,
    pub c: Tensor<f64>,
    pub nabla_c: Tensor<f64>,
    pub kind: AlphaKind,
}

impl CrInstance {
    pub fn metric(&self) -> &MetricAtPoint<f64> {
        &self.frame.metric
    }
}

fn alpha_of_kind(rng: &mut Rng, frame: &Frame, kind: AlphaKind) -> Vec<f64> {
    let n = frame.dim();
    loop {
        let mut c = random_covector(rng, n);
        match kind {
            AlphaKind::Timelike => c[0] = c[0].signum() * (1.2 + c[0].abs()),
            AlphaKind::Spacelike => c[0] *= 0.5,
            AlphaKind::Riemannian => {}
        }
        let a2: f64 = c.iter().zip(&frame.eta).map(|(x, e)| e * x * x).sum();
        let size: f64 = c.iter().map(|x| x * x).sum();
        let ok = match kind {
            AlphaKind::Timelike => a2 < -0.2 * size,
            AlphaKind::Spacelike => a2 > 0.2 * size,
            AlphaKind::Riemannian => true,
        };
        if ok {
            return frame.covector_from(&c);
        }
    }
}

pub fn cr_instance(rng: &mut Rng, n: usize, kind: AlphaKind) -> CrInstance {
    let negative = if kind == AlphaKind::Riemannian { 0 } else { 1 };
    loop {
        let frame = random_frame(rng, n, negative);
        let alpha = alpha_of_kind(rng, &frame, kind);
        let e = random_electric(rng, &frame.metric, &alpha);
        let Ok(c) = reconstruct_weyl(&e, &alpha, &frame.metric, 1e-8) else {
            continue;
        };
        // Reject cancellation-dominated E·E, which would make the C² relation
        // a comparison of rounding noise.
        let up = e.raise_all(frame.metric.ginv()).expect("rank 2");
        let ee: f64 = e.data().iter().zip(up.data()).map(|(a, b)| a * b).sum();
        let terms: f64 = e.data().iter().zip(up.data()).map(|(a, b)| (a * b).abs()).sum();
        if ee.abs() < 0.05 * terms {
            continue;
        }
        let nabla_c = recurrent_derivative(&c, &alpha);
        return CrInstance {
            frame,
            alpha,
            e,
            c,
            nabla_c,
            kind,
        };
    }
}

/// `∇_iC_jklm = α_i C_jklm`.
pub fn recurrent_derivative(c: &Tensor<f64>, alpha: &[f64]) -> Tensor<f64> {
    Tensor::covector(alpha).outer(c).expect("rank 1 ⊗ rank 4")
}

/// A random tensor with every Riemann symmetry (sum of Kulkarni–Nomizu
/// products of random symmetric matrices).
pub fn random_riemann(rng: &mut Rng, n: usize) -> Tensor<f64> {
    let mut r = Tensor::zeros(n, &[Down; 4]);
    for _ in 0..3 {
        let a = random_symmetric(rng, n);
        let b = random_symmetric(rng, n);
        r = r.add(&kulkarni_nomizu(&a, &b).expect("symmetric")).expect("same shape");
    }
    r
}

/// Trace-free part of a Riemann-symmetric tensor (the Weyl formula applied
/// with its own Ricci contraction `R_kl = −g^{jm}K_jklm`).
pub fn weyl_part(k: &Tensor<f64>, m: &MetricAtPoint<f64>) -> Tensor<f64> {
    let n = k.dim();
    let gi = m.ginv();
    let g = m.g();
    let ric = Tensor::from_fn(n, &[Down, Down], |ix| {
        let mut s = 0.0;
        for j in 0..n {
            for mm in 0..n {
                s -= gi.at2(j, mm) * k.at4(j, ix[0], ix[1], mm);
            }
        }
        s
    });
    let mut r = 0.0;
    for i in 0..n {
        for j in 0..n {
            r += gi.at2(i, j) * ric.at2(i, j);
        }
    }
    weyl_from_parts(k, &ric, r, g)
}

/// `K + (g_jm R_kl − g_km R_jl + R_jm g_kl − R_km g_jl)/(n−2) − R(g_jm g_kl − g_km g_jl)/((n−1)(n−2))`.
pub fn weyl_from_parts(k: &Tensor<f64>, ric: &Tensor<f64>, r: f64, g: &Tensor<f64>) -> Tensor<f64> {
    let n = k.dim();
    let a = 1.0 / (n as f64 - 2.0);
    let b = 1.0 / ((n as f64 - 1.0) * (n as f64 - 2.0));
    Tensor::from_fn(n, &[Down; 4], |ix| {
        let (j, kk, l, mm) = (ix[0], ix[1], ix[2], ix[3]);
        k.at4(j, kk, l, mm)
            + a * (g.at2(j, mm) * ric.at2(kk, l) - g.at2(kk, mm) * ric.at2(j, l) + ric.at2(j, mm) * g.at2(kk, l)
                - ric.at2(kk, mm) * g.at2(j, l))
            - b * r * (g.at2(j, mm) * g.at2(kk, l) - g.at2(kk, mm) * g.at2(j, l))
    })
}

/// Riemann tensor with the given Weyl part and Ricci tensor (the Weyl formula
/// solved for `R_jklm`).
pub fn riemann_from_parts(c: &Tensor<f64>, ric: &Tensor<f64>, r: f64, g: &Tensor<f64>) -> Tensor<f64> {
    let n = c.dim();
    let a = 1.0 / (n as f64 - 2.0);
    let b = 1.0 / ((n as f64 - 1.0) * (n as f64 - 2.0));
    Tensor::from_fn(n, &[Down; 4], |ix| {
        let (j, kk, l, mm) = (ix[0], ix[1], ix[2], ix[3]);
        c.at4(j, kk, l, mm)
            - a * (g.at2(j, mm) * ric.at2(kk, l) - g.at2(kk, mm) * ric.at2(j, l) + ric.at2(j, mm) * g.at2(kk, l)
                - ric.at2(kk, mm) * g.at2(j, l))
            + b * r * (g.at2(j, mm) * g.at2(kk, l) - g.at2(kk, mm) * g.at2(j, l))
    })
}

/// Random Weyl-symmetric, trace-free tensor on a random frame metric.
pub fn random_weyl(rng: &mut Rng, frame: &Frame) -> Tensor<f64> {
    let k = random_riemann(rng, frame.dim());
    weyl_part(&k, &frame.metric)
}

/// Random unit time-like vector `u` (`u² = −1`) on a Lorentzian frame.
pub fn random_timelike_unit(rng: &mut Rng, frame: &Frame) -> Vec<f64> {
    let n = frame.dim();
    let mut c: Vec<f64> = (0..n).map(|_| 0.6 * rng.random_range(-1.0..1.0)).collect();
    let s2: f64 = c[1..].iter().map(|x| x * x).sum();
    c[0] = (1.0 + s2).sqrt();
    frame.vector_from(&c)
}

/// Random null covector on a Lorentzian frame.
pub fn random_null_covector(rng: &mut Rng, frame: &Frame) -> Vec<f64> {
    let n = frame.dim();
    let mut c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let s: f64 = c[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
    c[0] = s;
    frame.covector_from(&c)
}

/// Split of the non-α frame directions for a structured `E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    /// One distinguished direction; `h` then has multiplicity `n_h = 2`.
    One,
    /// Equal halves (`n − 1` even); `n_h = 1`.
    Halves,
}

/// A recurrent Weyl tensor whose `h` has two eigenvalues, with Ricci built
/// from a prescribed Grycak scalar `G` and scalar curvature `R`, and the
/// matching Riemann tensor.
#[derive(Debug, Clone)]
pub struct StructuredInstance {
    pub cr: CrInstance,
    pub g_coeff: f64,
    pub scalar: f64,
    pub ricci: Tensor<f64>,
    pub riemann: Tensor<f64>,
    pub expected_n_h: usize,
}

pub fn structured_instance(rng: &mut Rng, n: usize, split: Split, riemannian: bool) -> StructuredInstance {
    let negative = if riemannian { 0 } else { 1 };
    let frame = random_frame(rng, n, negative);
    // α along the last frame direction (space-like in either signature).
    let mut ac = vec![0.0; n];
    ac[n - 1] = rng.random_range(0.5..1.5);
    let alpha = frame.covector_from(&ac);
    let x = rng.random_range(0.5..1.5);
    let k = n - 1;
    let mut lam = vec![0.0; n];
    let expected_n_h = match split {
        Split::One => {
            lam[0] = x;
            for l in lam.iter_mut().take(k).skip(1) {
                *l = -x / (k as f64 - 1.0);
            }
            2
        }
        Split::Halves => {
            assert!(k.is_multiple_of(2), "equal split needs n - 1 even");
            for (a, l) in lam.iter_mut().take(k).enumerate() {
                *l = if a < k / 2 { x } else { -x };
            }
            1
        }
    };
    let w: Vec<f64> = lam.iter().zip(&frame.eta).map(|(l, e)| l * e).collect();
    let e = frame.diagonal(&w);
    let c = reconstruct_weyl(&e, &alpha, &frame.metric, 1e-8).expect("non-null α");
    let h = crate::weylops::h_tensor(&c, &frame.metric, 1e-12).expect("C² ≠ 0").h;
    let g_coeff = rng.random_range(0.5..3.0);
    let scalar = rng.random_range(-2.0..2.0);
    let g = frame.metric.g();
    let nn = n as f64;
    let ricci = Tensor::from_fn(n, &[Down, Down], |ix| {
        let gv = g.at2(ix[0], ix[1]);
        scalar / nn * gv + g_coeff * (h.at2(ix[0], ix[1]) - gv / nn)
    });
    let riemann = riemann_from_parts(&c, &ricci, scalar, g);
    let nabla_c = recurrent_derivative(&c, &alpha);
    StructuredInstance {
        cr: CrInstance {
            frame,
            alpha,
            e,
            c,
            nabla_c,
            kind: if riemannian {
                AlphaKind::Riemannian
            } else {
                AlphaKind::Spacelike
            },
        },
        g_coeff,
        scalar,
        ricci,
        riemann,
        expected_n_h,
    }
}

/// A parallel tensor `h` given directly by its spectrum: eigenvalue
/// `(n−3)/(2(n−2))` on `n_h` frame directions (including `α`) and
/// `h′ = (1 − n_h h)/(n − n_h)` on the rest, plus the Grycak Ricci tensor.
#[derive(Debug, Clone)]
pub struct DirectH {
    pub frame: Frame,
    pub alpha: Vec<f64>,
    pub h: Tensor<f64>,
    pub h_prime: f64,
    pub n_h: usize,
    pub g_coeff: f64,
    pub scalar: f64,
    pub ricci: Tensor<f64>,
}

pub fn direct_h_instance(rng: &mut Rng, n: usize, n_h: usize, riemannian: bool) -> DirectH {
    let negative = if riemannian { 0 } else { 1 };
    let frame = random_frame(rng, n, negative);
    let h0: f64 = h_alpha_eigenvalue(n);
    let h_prime = (1.0 - n_h as f64 * h0) / (n - n_h) as f64;
    // The h0-eigenspace is spanned by the last n_h frame directions.
    let vals: Vec<f64> = (0..n).map(|a| if a >= n - n_h { h0 } else { h_prime }).collect();
    let w: Vec<f64> = vals.iter().zip(&frame.eta).map(|(v, e)| v * e).collect();
    let h = frame.diagonal(&w);
    let mut ac = vec![0.0; n];
    for c in ac.iter_mut().skip(n - n_h) {
        *c = rng.random_range(0.5..1.5);
    }
    let alpha = frame.covector_from(&ac);
    let g_coeff = rng.random_range(0.5..3.0);
    let scalar = rng.random_range(-2.0..2.0);
    let g = frame.metric.g();
    let nn = n as f64;
    let ricci = Tensor::from_fn(n, &[Down, Down], |ix| {
        let gv = g.at2(ix[0], ix[1]);
        scalar / nn * gv + g_coeff * (h.at2(ix[0], ix[1]) - gv / nn)
    });
    DirectH {
        frame,
        alpha,
        h,
        h_prime,
        n_h,
        g_coeff,
        scalar,
        ricci,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{first_bianchi_defect, trace_defect};
    use crate::weylops::{electric_tensor, h_tensor};

    #[test]
    fn frame_is_orthonormal() {
        let mut r = rng(1);
        let f = random_frame(&mut r, 6, 1);
        for a in 0..6 {
            for b in 0..6 {
                let d = f.metric.dot_vectors(&f.vector(a), &f.vector(b));
                let e = if a == b { f.eta[a] } else { 0.0 };
                assert!((d - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cr_instance_round_trip() {
        let mut r = rng(7);
        for kind in [AlphaKind::Spacelike, AlphaKind::Timelike, AlphaKind::Riemannian] {
            let inst = cr_instance(&mut r, 6, kind);
            let m = inst.metric();
            assert!(trace_defect(&inst.c, m) < 1e-13);
            assert!(first_bianchi_defect(&inst.c) < 1e-13);
            let e = electric_tensor(&inst.c, &inst.alpha, m, 1e-10).unwrap();
            let d = e.e.max_abs_diff(&inst.e).unwrap() / inst.e.max_abs();
            assert!(d < 1e-12, "{kind:?} {d}");
        }
    }

    #[test]
    fn random_weyl_is_trace_free() {
        let mut r = rng(3);
        let f = random_frame(&mut r, 5, 1);
        let c = random_weyl(&mut r, &f);
        assert!(trace_defect(&c, &f.metric) < 1e-13);
        assert!(first_bianchi_defect(&c) < 1e-13);
        let u = random_timelike_unit(&mut r, &f);
        assert!((f.metric.dot_vectors(&u, &u) + 1.0).abs() < 1e-12);
        let k = random_null_covector(&mut r, &f);
        assert!(f.metric.dot_covectors(&k, &k).abs() < 1e-12);
    }

    #[test]
    fn structured_h_has_two_eigenvalues() {
        let mut r = rng(11);
        let s = structured_instance(&mut r, 6, Split::One, false);
        let p = h_tensor(&s.cr.c, s.cr.metric(), 1e-12).unwrap();
        let ev = crate::linalg::general_eigenvalues(&crate::weylops::mixed_matrix(&p.h, s.cr.metric()), 6).unwrap();
        let vals: Vec<f64> = ev.iter().map(|e| e.0).collect();
        let cl = crate::weylops::cluster_values(&vals, 1e-6);
        assert_eq!(cl.len(), 2, "{vals:?}");
    }
}
