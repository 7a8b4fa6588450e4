//! Christoffel symbols, Riemann, Ricci, scalar and Weyl curvature with the
//! coordinate partials needed for one covariant derivative of each.
//!
//! Sign convention: with `Rm^a_{bcd} = ∂_cΓ^a_{db} − ∂_dΓ^a_{cb} + Γ^a_{ce}Γ^e_{db} − Γ^a_{de}Γ^e_{cb}`,
//! the all-lower tensor is `R_{jklm} = −g_{ja} Rm^a_{klm}` and the Ricci
//! tensor is `R_{kl} = −R_{mkl}{}^m = −Rm^a_{kal}`. The Ricci identity reads
//! `[∇_i, ∇_j] v_k = −R_{ijk}{}^m v_m`.

use serde::Serialize;
use thiserror::Error;

use crate::metrics::{evaluate, MetricAtPoint, MetricError, MetricSpec};
use crate::scalar::{scaled, Scalar};
use crate::tensor::{Down, Tensor, TensorError, Up, Variance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvatureError {
    #[error("Weyl tensor needs n >= 4, got {0}")]
    DimensionTooSmall(usize),
    #[error("partials have valence {found}, expected {expected}")]
    MissingPartials { expected: String, found: String },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Row-major offsets for `n^r` arrays.
#[derive(Clone, Copy)]
struct Ix(usize);

impl Ix {
    #[inline]
    fn i2(self, a: usize, b: usize) -> usize {
        a * self.0 + b
    }
    #[inline]
    fn i3(self, a: usize, b: usize, c: usize) -> usize {
        (a * self.0 + b) * self.0 + c
    }
    #[inline]
    fn i4(self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.0 + b) * self.0 + c) * self.0 + d
    }
    #[inline]
    fn i5(self, a: usize, b: usize, c: usize, d: usize, e: usize) -> usize {
        (((a * self.0 + b) * self.0 + c) * self.0 + d) * self.0 + e
    }
}

/// `Γ^k_{ij}` (valence "udd") with partials `∂_aΓ^k_{ij}` and `∂_b∂_aΓ^k_{ij}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelPack<T> {
    pub gamma: Tensor<T>,
    pub dgamma: Tensor<T>,
    pub d2gamma: Tensor<T>,
    /// `∂_a g^{kl}`.
    pub dginv: Tensor<T>,
}

/// Christoffel symbols of the second kind and their first two partials.
pub fn christoffel<T: Scalar>(m: &MetricAtPoint<T>) -> ChristoffelPack<T> {
    let n = m.dim();
    let x = Ix(n);
    let gi = m.ginv().data();
    let dg = m.dg().data();
    let d2g = m.d2g().data();
    let d3g = m.d3g().data();
    let half = T::lit(0.5);

    // First kind Γ_{lij} and its partials; linear in the metric stacks.
    let first = |l: usize, i: usize, j: usize| half * (dg[x.i3(i, j, l)] + dg[x.i3(j, i, l)] - dg[x.i3(l, i, j)]);
    let dfirst = |a: usize, l: usize, i: usize, j: usize| {
        half * (d2g[x.i4(a, i, j, l)] + d2g[x.i4(a, j, i, l)] - d2g[x.i4(a, l, i, j)])
    };
    let d2first = |b: usize, a: usize, l: usize, i: usize, j: usize| {
        half * (d3g[x.i5(b, a, i, j, l)] + d3g[x.i5(b, a, j, i, l)] - d3g[x.i5(b, a, l, i, j)])
    };

    let mut gamma1 = vec![T::zero(); n * n * n];
    let mut dgamma1 = vec![T::zero(); n.pow(4)];
    let mut d2gamma1 = vec![T::zero(); n.pow(5)];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                gamma1[x.i3(l, i, j)] = first(l, i, j);
                for a in 0..n {
                    dgamma1[x.i4(a, l, i, j)] = dfirst(a, l, i, j);
                    for b in 0..n {
                        d2gamma1[x.i5(b, a, l, i, j)] = d2first(b, a, l, i, j);
                    }
                }
            }
        }
    }

    // ∂_a g^{kl} = −g^{kp} ∂_a g_{pq} g^{ql}
    let mut dgi = vec![T::zero(); n * n * n];
    // tmp[a][p][l] = ∂_a g_{pq} g^{ql}
    let mut tmp = vec![T::zero(); n * n * n];
    for a in 0..n {
        for p in 0..n {
            for l in 0..n {
                tmp[x.i3(a, p, l)] = (0..n).map(|q| dg[x.i3(a, p, q)] * gi[x.i2(q, l)]).sum();
            }
        }
        for k in 0..n {
            for l in 0..n {
                dgi[x.i3(a, k, l)] = -(0..n).map(|p| gi[x.i2(k, p)] * tmp[x.i3(a, p, l)]).sum::<T>();
            }
        }
    }
    // ∂_b∂_a g^{kl} = −∂_b g^{kp} ∂_a g_{pq} g^{ql} − g^{kp} ∂_b∂_a g_{pq} g^{ql} − g^{kp} ∂_a g_{pq} ∂_b g^{ql}
    let mut d2gi = vec![T::zero(); n.pow(4)];
    for b in 0..n {
        for a in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut s = T::zero();
                    for p in 0..n {
                        for q in 0..n {
                            s += dgi[x.i3(b, k, p)] * dg[x.i3(a, p, q)] * gi[x.i2(q, l)]
                                + gi[x.i2(k, p)] * d2g[x.i4(b, a, p, q)] * gi[x.i2(q, l)]
                                + gi[x.i2(k, p)] * dg[x.i3(a, p, q)] * dgi[x.i3(b, q, l)];
                        }
                    }
                    d2gi[x.i4(b, a, k, l)] = -s;
                }
            }
        }
    }

    let mut gamma = vec![T::zero(); n * n * n];
    let mut dgamma = vec![T::zero(); n.pow(4)];
    let mut d2gamma = vec![T::zero(); n.pow(5)];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                gamma[x.i3(k, i, j)] = (0..n).map(|l| gi[x.i2(k, l)] * gamma1[x.i3(l, i, j)]).sum();
                for a in 0..n {
                    dgamma[x.i4(a, k, i, j)] = (0..n)
                        .map(|l| {
                            dgi[x.i3(a, k, l)] * gamma1[x.i3(l, i, j)] + gi[x.i2(k, l)] * dgamma1[x.i4(a, l, i, j)]
                        })
                        .sum();
                    for b in 0..n {
                        d2gamma[x.i5(b, a, k, i, j)] = (0..n)
                            .map(|l| {
                                d2gi[x.i4(b, a, k, l)] * gamma1[x.i3(l, i, j)]
                                    + dgi[x.i3(a, k, l)] * dgamma1[x.i4(b, l, i, j)]
                                    + dgi[x.i3(b, k, l)] * dgamma1[x.i4(a, l, i, j)]
                                    + gi[x.i2(k, l)] * d2gamma1[x.i5(b, a, l, i, j)]
                            })
                            .sum();
                    }
                }
            }
        }
    }
    let t = |v: &[Variance], d: Vec<T>| Tensor::from_vec(n, v, d).expect("sized by construction");
    ChristoffelPack {
        gamma: t(&[Up, Down, Down], gamma),
        dgamma: t(&[Down, Up, Down, Down], dgamma),
        d2gamma: t(&[Down, Down, Up, Down, Down], d2gamma),
        dginv: t(&[Down, Up, Up], dgi),
    }
}

/// Riemann tensor in lower and mixed form with coordinate partials of the
/// lower form.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannPack<T> {
    /// `R_{jklm}`.
    pub lower: Tensor<T>,
    /// `R_{jkl}{}^m`.
    pub mixed: Tensor<T>,
    /// `∂_i R_{jklm}`.
    pub dlower: Tensor<T>,
    /// `Rm^a_{bcd}` in the textbook orientation, kept for the Ricci contraction.
    textbook: Vec<T>,
    dtextbook: Vec<T>,
}

pub fn riemann<T: Scalar>(m: &MetricAtPoint<T>, c: &ChristoffelPack<T>) -> RiemannPack<T> {
    let n = m.dim();
    let x = Ix(n);
    let gam = c.gamma.data();
    let dgam = c.dgamma.data();
    let d2gam = c.d2gamma.data();
    let g = m.g().data();
    let dg = m.dg().data();
    let gi = m.ginv().data();

    let mut rm = vec![T::zero(); n.pow(4)];
    let mut drm = vec![T::zero(); n.pow(5)];
    for a in 0..n {
        for b in 0..n {
            for cc in 0..n {
                for d in 0..n {
                    let mut s = dgam[x.i4(cc, a, d, b)] - dgam[x.i4(d, a, cc, b)];
                    for e in 0..n {
                        s += gam[x.i3(a, cc, e)] * gam[x.i3(e, d, b)] - gam[x.i3(a, d, e)] * gam[x.i3(e, cc, b)];
                    }
                    rm[x.i4(a, b, cc, d)] = s;
                    for p in 0..n {
                        let mut ds = d2gam[x.i5(p, cc, a, d, b)] - d2gam[x.i5(p, d, a, cc, b)];
                        for e in 0..n {
                            ds += dgam[x.i4(p, a, cc, e)] * gam[x.i3(e, d, b)]
                                + gam[x.i3(a, cc, e)] * dgam[x.i4(p, e, d, b)]
                                - dgam[x.i4(p, a, d, e)] * gam[x.i3(e, cc, b)]
                                - gam[x.i3(a, d, e)] * dgam[x.i4(p, e, cc, b)];
                        }
                        drm[x.i5(p, a, b, cc, d)] = ds;
                    }
                }
            }
        }
    }

    let mut lower = vec![T::zero(); n.pow(4)];
    let mut dlower = vec![T::zero(); n.pow(5)];
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                for mm in 0..n {
                    lower[x.i4(j, k, l, mm)] = -(0..n).map(|a| g[x.i2(j, a)] * rm[x.i4(a, k, l, mm)]).sum::<T>();
                    for i in 0..n {
                        dlower[x.i5(i, j, k, l, mm)] = -(0..n)
                            .map(|a| {
                                dg[x.i3(i, j, a)] * rm[x.i4(a, k, l, mm)] + g[x.i2(j, a)] * drm[x.i5(i, a, k, l, mm)]
                            })
                            .sum::<T>();
                    }
                }
            }
        }
    }
    let mut mixed = vec![T::zero(); n.pow(4)];
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                for mm in 0..n {
                    mixed[x.i4(j, k, l, mm)] = (0..n).map(|p| gi[x.i2(mm, p)] * lower[x.i4(j, k, l, p)]).sum();
                }
            }
        }
    }
    let t = |v: &[Variance], d: Vec<T>| Tensor::from_vec(n, v, d).expect("sized by construction");
    RiemannPack {
        lower: t(&[Down; 4], lower),
        mixed: t(&[Down, Down, Down, Up], mixed),
        dlower: t(&[Down; 5], dlower),
        textbook: rm,
        dtextbook: drm,
    }
}

/// Ricci tensor and scalar curvature with partials.
#[derive(Debug, Clone, PartialEq)]
pub struct RicciPack<T> {
    pub ricci: Tensor<T>,
    /// `∂_i R_{kl}`.
    pub dricci: Tensor<T>,
    pub scalar: T,
    /// `∂_i R`.
    pub dscalar: Tensor<T>,
}

pub fn ricci_scalar<T: Scalar>(m: &MetricAtPoint<T>, c: &ChristoffelPack<T>, r: &RiemannPack<T>) -> RicciPack<T> {
    let n = m.dim();
    let x = Ix(n);
    let gi = m.ginv().data();
    let dgi = c.dginv.data();
    let ric = Tensor::from_fn(n, &[Down, Down], |ix| {
        -(0..n).map(|a| r.textbook[x.i4(a, ix[0], a, ix[1])]).sum::<T>()
    });
    let dric = Tensor::from_fn(n, &[Down; 3], |ix| {
        -(0..n).map(|a| r.dtextbook[x.i5(ix[0], a, ix[1], a, ix[2])]).sum::<T>()
    });
    let mut scalar = T::zero();
    for k in 0..n {
        for l in 0..n {
            scalar += gi[x.i2(k, l)] * ric.at2(k, l);
        }
    }
    let dscalar = Tensor::from_fn(n, &[Down], |ix| {
        let i = ix[0];
        let mut s = T::zero();
        for k in 0..n {
            for l in 0..n {
                s += dgi[x.i3(i, k, l)] * ric.at2(k, l) + gi[x.i2(k, l)] * dric.at3(i, k, l);
            }
        }
        s
    });
    RicciPack {
        ricci: ric,
        dricci: dric,
        scalar,
        dscalar,
    }
}

/// Weyl tensor `C_{jklm}` with partials `∂_i C_{jklm}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylPack<T> {
    pub weyl: Tensor<T>,
    pub dweyl: Tensor<T>,
}

/// `C_jklm = R_jklm + (g_jm R_kl − g_km R_jl + R_jm g_kl − R_km g_jl)/(n−2)
///           − R (g_jm g_kl − g_km g_jl)/((n−1)(n−2))`.
pub fn weyl<T: Scalar>(
    m: &MetricAtPoint<T>,
    r: &RiemannPack<T>,
    ric: &RicciPack<T>,
) -> Result<WeylPack<T>, CurvatureError> {
    let n = m.dim();
    if n < 4 {
        return Err(CurvatureError::DimensionTooSmall(n));
    }
    let g = m.g();
    let dg = m.dg();
    let rc = &ric.ricci;
    let drc = &ric.dricci;
    let s = ric.scalar;
    let a = T::one() / T::of_usize(n - 2);
    let b = T::one() / T::of_usize((n - 1) * (n - 2));
    let w = Tensor::from_fn(n, &[Down; 4], |ix| {
        let (j, k, l, mm) = (ix[0], ix[1], ix[2], ix[3]);
        r.lower.at4(j, k, l, mm)
            + a * (g.at2(j, mm) * rc.at2(k, l) - g.at2(k, mm) * rc.at2(j, l) + rc.at2(j, mm) * g.at2(k, l)
                - rc.at2(k, mm) * g.at2(j, l))
            - b * s * (g.at2(j, mm) * g.at2(k, l) - g.at2(k, mm) * g.at2(j, l))
    });
    let dw = Tensor::from_fn(n, &[Down; 5], |ix| {
        let (i, j, k, l, mm) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
        let prod = |g1: (usize, usize), r1: (usize, usize)| {
            dg.at3(i, g1.0, g1.1) * rc.at2(r1.0, r1.1) + g.at2(g1.0, g1.1) * drc.at3(i, r1.0, r1.1)
        };
        let gg = |p: (usize, usize), q: (usize, usize)| {
            dg.at3(i, p.0, p.1) * g.at2(q.0, q.1) + g.at2(p.0, p.1) * dg.at3(i, q.0, q.1)
        };
        r.dlower.at5(i, j, k, l, mm)
            + a * (prod((j, mm), (k, l)) - prod((k, mm), (j, l)) + prod((k, l), (j, mm)) - prod((j, l), (k, mm)))
            - b * (ric.dscalar.at1(i) * (g.at2(j, mm) * g.at2(k, l) - g.at2(k, mm) * g.at2(j, l))
                + s * (gg((j, mm), (k, l)) - gg((k, mm), (j, l))))
    });
    Ok(WeylPack { weyl: w, dweyl: dw })
}

/// `∇_i T` from `T`, its coordinate partials (derivative slot first) and `Γ^k_{ij}`.
pub fn covariant_derivative<T: Scalar>(
    t: &Tensor<T>,
    partials: &Tensor<T>,
    gamma: &Tensor<T>,
) -> Result<Tensor<T>, CurvatureError> {
    let n = t.dim();
    let mut expected = vec![Down];
    expected.extend_from_slice(t.valence());
    if partials.valence() != expected.as_slice() || partials.dim() != n {
        let mut want = String::from("d");
        want.push_str(&t.valence_string());
        return Err(CurvatureError::MissingPartials {
            expected: want,
            found: partials.valence_string(),
        });
    }
    let rank = t.rank();
    let valence = t.valence().to_vec();
    let mut src = vec![0usize; rank];
    Ok(Tensor::from_fn(n, &expected, |ix| {
        let i = ix[0];
        let rest = &ix[1..];
        let mut s = partials.get(ix);
        for slot in 0..rank {
            src.copy_from_slice(rest);
            let own = rest[slot];
            for p in 0..n {
                src[slot] = p;
                let v = t.get(&src);
                match valence[slot] {
                    Down => s -= gamma.at3(p, i, own) * v,
                    Up => s += gamma.at3(own, i, p) * v,
                }
            }
        }
        s
    }))
}

/// `max(max|∂T|, rank·max|Γ|·max|T|)`.
pub fn term_scale<T: Scalar>(t: &Tensor<T>, partials: &Tensor<T>, gamma: &Tensor<T>) -> T {
    let spread = T::of_usize(t.rank() * t.dim());
    partials.max_abs().max(spread * gamma.max_abs() * t.max_abs())
}

/// Every curvature quantity at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePack<T> {
    pub metric: MetricAtPoint<T>,
    pub christoffel: ChristoffelPack<T>,
    pub riemann: RiemannPack<T>,
    pub ricci: RicciPack<T>,
    pub weyl: WeylPack<T>,
    /// `∇_i C_{jklm}`.
    pub nabla_weyl: Tensor<T>,
    /// `∇_i R_{jklm}`.
    pub nabla_riemann: Tensor<T>,
    /// `∇_i R_{kl}`.
    pub nabla_ricci: Tensor<T>,
    /// Size of the terms cancelled in forming the covariant derivatives
    /// (`∂K` and `Γ·K` for `K` = Riemann, Ricci, Weyl); the reference scale
    /// for identities among them.
    pub nabla_scale: T,
}

impl<T: Scalar> CurvaturePack<T> {
    pub fn compute(m: &MetricAtPoint<T>) -> Result<Self, CurvatureError> {
        let c = christoffel(m);
        let r = riemann(m, &c);
        let ric = ricci_scalar(m, &c, &r);
        let w = weyl(m, &r, &ric)?;
        let nabla_weyl = covariant_derivative(&w.weyl, &w.dweyl, &c.gamma)?;
        let nabla_riemann = covariant_derivative(&r.lower, &r.dlower, &c.gamma)?;
        let nabla_ricci = covariant_derivative(&ric.ricci, &ric.dricci, &c.gamma)?;
        let nabla_scale = term_scale(&r.lower, &r.dlower, &c.gamma)
            .max(term_scale(&ric.ricci, &ric.dricci, &c.gamma))
            .max(term_scale(&w.weyl, &w.dweyl, &c.gamma));
        Ok(Self {
            metric: m.clone(),
            christoffel: c,
            riemann: r,
            ricci: ric,
            weyl: w,
            nabla_weyl,
            nabla_riemann,
            nabla_ricci,
            nabla_scale,
        })
    }

    pub fn at(spec: &MetricSpec, point: &[T]) -> Result<Self, CurvatureError> {
        Self::compute(&evaluate(spec, point)?)
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn gamma(&self) -> &Tensor<T> {
        &self.christoffel.gamma
    }

    pub fn riemann_lower(&self) -> &Tensor<T> {
        &self.riemann.lower
    }

    pub fn ricci_tensor(&self) -> &Tensor<T> {
        &self.ricci.ricci
    }

    pub fn scalar(&self) -> T {
        self.ricci.scalar
    }

    pub fn weyl_tensor(&self) -> &Tensor<T> {
        &self.weyl.weyl
    }
}

/// `R_{j[klm]}` cyclic sum, scaled by `max|R|`.
pub fn first_bianchi_defect<T: Scalar>(r: &Tensor<T>) -> T {
    let n = r.dim();
    let mut worst = T::zero();
    crate::tensor::for_each_index(n, 4, |ix| {
        let (j, k, l, m) = (ix[0], ix[1], ix[2], ix[3]);
        let s = r.at4(j, k, l, m) + r.at4(j, l, m, k) + r.at4(j, m, k, l);
        worst = worst.max(s.abs());
    });
    scaled(worst, r.max_abs())
}

/// `∇_i R_{jklm} + ∇_j R_{kilm} + ∇_k R_{ijlm}`, scaled by the larger of
/// `max|∇R|` and `scale` (normally [`CurvaturePack::nabla_scale`]).
pub fn second_bianchi_defect<T: Scalar>(nabla_r: &Tensor<T>, scale: T) -> T {
    let n = nabla_r.dim();
    let mut worst = T::zero();
    crate::tensor::for_each_index(n, 5, |ix| {
        let (i, j, k, l, m) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
        let s = nabla_r.at5(i, j, k, l, m) + nabla_r.at5(j, k, i, l, m) + nabla_r.at5(k, i, j, l, m);
        worst = worst.max(s.abs());
    });
    scaled(worst, nabla_r.max_abs().max(scale))
}

/// Largest single trace of an all-lower rank-4 tensor over any slot pair,
/// scaled by `max|K|·max|g⁻¹|`.
pub fn trace_defect<T: Scalar>(k: &Tensor<T>, m: &MetricAtPoint<T>) -> T {
    let n = k.dim();
    let gi = m.ginv();
    let mut worst = T::zero();
    for a in 0..4 {
        for b in a + 1..4 {
            crate::tensor::for_each_index(n, 2, |free| {
                let mut s = T::zero();
                let mut full = [0usize; 4];
                for p in 0..n {
                    for q in 0..n {
                        let mut it = free.iter();
                        for (slot, v) in full.iter_mut().enumerate() {
                            *v = if slot == a {
                                p
                            } else if slot == b {
                                q
                            } else {
                                *it.next().unwrap()
                            };
                        }
                        s += gi.at2(p, q) * k.get(&full);
                    }
                }
                worst = worst.max(s.abs());
            });
        }
    }
    scaled(worst, k.max_abs() * gi.max_abs())
}

/// Defect of the pair symmetries `K_jklm = −K_kjlm = −K_jkml = K_lmjk`.
pub fn riemann_symmetry_defect<T: Scalar>(k: &Tensor<T>) -> T {
    let n = k.dim();
    let mut worst = T::zero();
    crate::tensor::for_each_index(n, 4, |ix| {
        let (j, kk, l, m) = (ix[0], ix[1], ix[2], ix[3]);
        let v = k.at4(j, kk, l, m);
        worst = worst
            .max((v + k.at4(kk, j, l, m)).abs())
            .max((v + k.at4(j, kk, m, l)).abs())
            .max((v - k.at4(l, m, j, kk)).abs());
    });
    scaled(worst, k.max_abs())
}

/// `max|∇g|` scaled by `max|∂g|`.
pub fn metric_compatibility_defect<T: Scalar>(pack: &CurvaturePack<T>) -> Result<T, CurvatureError> {
    let m = &pack.metric;
    let ng = covariant_derivative(m.g(), m.dg(), pack.gamma())?;
    Ok(scaled(ng.max_abs(), m.dg().max_abs()))
}

/// `∇^m C_{jklm}` (valence "ddd").
pub fn weyl_divergence<T: Scalar>(pack: &CurvaturePack<T>) -> Tensor<T> {
    let n = pack.dim();
    let gi = pack.metric.ginv();
    let nc = &pack.nabla_weyl;
    Tensor::from_fn(n, &[Down; 3], |ix| {
        let (j, k, l) = (ix[0], ix[1], ix[2]);
        let mut s = T::zero();
        for i in 0..n {
            for mm in 0..n {
                s += gi.at2(mm, i) * nc.at5(i, j, k, l, mm);
            }
        }
        s
    })
}

/// `∇^m C_{jklm} = −(n−3)/(n−2)[∇_jR_kl − ∇_kR_jl − (g_kl∇_jR − g_jl∇_kR)/(2(n−1))]`,
/// scaled by the largest term.
pub fn divergence_identity_defect<T: Scalar>(pack: &CurvaturePack<T>) -> T {
    let n = pack.dim();
    let g = pack.metric.g();
    let nr = &pack.nabla_ricci;
    let ds = &pack.ricci.dscalar;
    let div = weyl_divergence(pack);
    let c = -T::of_usize(n - 3) / T::of_usize(n - 2);
    let h = T::one() / T::of_usize(2 * (n - 1));
    let mut worst = T::zero();
    let mut scale = div.max_abs().max(pack.nabla_scale * pack.metric.ginv().max_abs());
    crate::tensor::for_each_index(n, 3, |ix| {
        let (j, k, l) = (ix[0], ix[1], ix[2]);
        let terms = [
            nr.at3(j, k, l),
            -nr.at3(k, j, l),
            -h * g.at2(k, l) * ds.at1(j),
            h * g.at2(j, l) * ds.at1(k),
        ];
        let rhs: T = c * terms.iter().copied().sum::<T>();
        for t in terms {
            scale = scale.max((c * t).abs());
        }
        worst = worst.max((div.at3(j, k, l) - rhs).abs());
    });
    scaled(worst, scale)
}

/// `max|∇_m C_{jkl}{}^m|`, scaled by `max(|∇C|, nabla_scale)·max|g⁻¹|`.
pub fn conformal_harmonicity_defect<T: Scalar>(pack: &CurvaturePack<T>) -> T {
    let div = weyl_divergence(pack);
    let s = pack.nabla_weyl.max_abs().max(pack.nabla_scale);
    scaled(div.max_abs(), s * pack.metric.ginv().max_abs())
}

/// Conventions recorded in reports.
#[derive(Debug, Clone, Serialize)]
pub struct Conventions {
    pub riemann: &'static str,
    pub ricci: &'static str,
    pub ricci_identity: &'static str,
    pub weyl: &'static str,
    pub kulkarni_nomizu: &'static str,
    pub electric: &'static str,
    pub indices: &'static str,
}

pub fn conventions() -> Conventions {
    Conventions {
        riemann: "R_jklm = -g_ja (d_l G^a_mk - d_m G^a_lk + G^a_le G^e_mk - G^a_me G^e_lk)",
        ricci: "R_kl = -R_mkl^m, R = g^kl R_kl",
        ricci_identity: "[D_i, D_j] v_k = -R_ijk^m v_m",
        weyl: "C_jklm = R_jklm + (g_jm R_kl - g_km R_jl + R_jm g_kl - R_km g_jl)/(n-2) - R (g_jm g_kl - g_km g_jl)/((n-1)(n-2))",
        kulkarni_nomizu: "(A o B)_jklm = A_km B_jl + A_jl B_km - A_jm B_kl - A_kl B_jm",
        electric: "E_kl = u^j u^m C_jklm evaluated with the recurrence-form sign, E_il = a^j a^k C_ijkl / a^2",
        indices: "zero-based coordinate indices; galaev coordinates (v, u, x3, ...)",
    }
}

/// Checks the anchoring values of the sign convention on the pq line
/// element `e^{x1} e^{x3} (dx1)^2 + 2 dx1 dx2 + …` at a fixed point:
/// `R_1313 = R_11 = ½ p q″` and `R = 0`.
pub fn convention_self_test() -> Result<(), String> {
    use crate::metrics::{FunctionForm, MetricKind};
    let spec = MetricSpec::new(
        5,
        MetricKind::BrinkmannPq {
            p: FunctionForm::exp(),
            q: FunctionForm::exp(),
        },
    );
    let x = [0.3, 0.7, 0.2, 0.1, 0.4];
    let pack = CurvaturePack::<f64>::at(&spec, &x).map_err(|e| e.to_string())?;
    let expected = 0.5 * 0.5f64.exp();
    let r1313 = pack.riemann_lower().at4(0, 2, 0, 2);
    let r11 = pack.ricci_tensor().at2(0, 0);
    let ok = |v: f64| (v - expected).abs() <= 1e-12 * expected;
    if !ok(r1313) || !ok(r11) || pack.scalar().abs() > 1e-12 {
        return Err(format!(
            "sign convention self-test failed: R_1313 = {r1313}, R_11 = {r11}, R = {}, expected {expected}",
            pack.scalar()
        ));
    }
    Ok(())
}

/// Parallel-transports covector `v` around the coordinate square of side
/// `eps` in the `(i, j)` plane centred at `point` (first along `+e_i`, then
/// `+e_j`), returning the change `v_final − v`.
pub fn transport_loop_defect(
    spec: &MetricSpec,
    point: &[f64],
    i: usize,
    j: usize,
    eps: f64,
    v: &[f64],
    steps_per_leg: usize,
) -> Result<Vec<f64>, CurvatureError> {
    let n = spec.n;
    let gamma_at = |x: &[f64]| -> Result<Tensor<f64>, CurvatureError> {
        let m = evaluate(spec, x)?;
        Ok(christoffel_only(&m))
    };
    // dv_k/dt = Γ^m_{ak} ẋ^a v_m
    let rhs = |x: &[f64], dir: &[f64], w: &[f64]| -> Result<Vec<f64>, CurvatureError> {
        let g = gamma_at(x)?;
        Ok((0..n)
            .map(|k| {
                let mut s = 0.0;
                for a in 0..n {
                    if dir[a] == 0.0 {
                        continue;
                    }
                    for mm in 0..n {
                        s += g.at3(mm, a, k) * dir[a] * w[mm];
                    }
                }
                s
            })
            .collect())
    };
    let mut x: Vec<f64> = point.to_vec();
    x[i] -= 0.5 * eps;
    x[j] -= 0.5 * eps;
    let mut w = v.to_vec();
    let legs = [(i, 1.0), (j, 1.0), (i, -1.0), (j, -1.0)];
    let h = eps / steps_per_leg as f64;
    for (axis, sign) in legs {
        let mut dir = vec![0.0; n];
        dir[axis] = sign;
        for _ in 0..steps_per_leg {
            let shift = |x: &[f64], t: f64| -> Vec<f64> {
                let mut y = x.to_vec();
                y[axis] += sign * t;
                y
            };
            let add = |w: &[f64], k: &[f64], t: f64| -> Vec<f64> { w.iter().zip(k).map(|(a, b)| a + t * b).collect() };
            let k1 = rhs(&x, &dir, &w)?;
            let k2 = rhs(&shift(&x, 0.5 * h), &dir, &add(&w, &k1, 0.5 * h))?;
            let k3 = rhs(&shift(&x, 0.5 * h), &dir, &add(&w, &k2, 0.5 * h))?;
            let k4 = rhs(&shift(&x, h), &dir, &add(&w, &k3, h))?;
            for c in 0..n {
                w[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
            x = shift(&x, h);
        }
    }
    Ok(w.iter().zip(v).map(|(a, b)| a - b).collect())
}

/// `Γ^k_{ij}` alone, without the partial stacks.
pub fn christoffel_only<T: Scalar>(m: &MetricAtPoint<T>) -> Tensor<T> {
    let n = m.dim();
    let gi = m.ginv();
    let dg = m.dg();
    let half = T::lit(0.5);
    Tensor::from_fn(n, &[Up, Down, Down], |ix| {
        let (k, i, j) = (ix[0], ix[1], ix[2]);
        (0..n)
            .map(|l| gi.at2(k, l) * half * (dg.at3(i, j, l) + dg.at3(j, i, l) - dg.at3(l, i, j)))
            .sum()
    })
}

/// Compares the transport loop change with the commutator prediction
/// `[∇_i,∇_j] v_k = −R_{ijk}{}^m v_m`: the loop (first `i`, then `j`)
/// changes a covector by `−ε² [∇_i,∇_j] v` to leading order. Returns the
/// relative discrepancy.
pub fn ricci_identity_loop_check(
    spec: &MetricSpec,
    pack: &CurvaturePack<f64>,
    i: usize,
    j: usize,
    v: &[f64],
    eps: f64,
) -> Result<f64, CurvatureError> {
    let point = pack.metric.point();
    let n = spec.n;
    let mixed = &pack.riemann.mixed;
    let commutator: Vec<f64> = (0..n)
        .map(|k| -(0..n).map(|m| mixed.at4(i, j, k, m) * v[m]).sum::<f64>())
        .collect();
    // The loop starts at a corner, so the change carries an O(ε³) term from
    // the coordinate variation of the components; one Richardson step with a
    // doubled loop removes it.
    let small = transport_loop_defect(spec, point, i, j, eps, v, 2)?;
    let large = transport_loop_defect(spec, point, i, j, 2.0 * eps, v, 4)?;
    let scale = crate::scalar::max_abs(&commutator);
    let worst = small
        .iter()
        .zip(&large)
        .zip(&commutator)
        .map(|((s, l), c)| (2.0 * s / (eps * eps) - l / (4.0 * eps * eps) + c).abs())
        .fold(0.0, f64::max);
    Ok(scaled(worst, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{FunctionForm, MetricKind};
    use approx::assert_relative_eq;

    fn pq_exp() -> MetricSpec {
        MetricSpec::new(
            5,
            MetricKind::BrinkmannPq {
                p: FunctionForm::exp(),
                q: FunctionForm::exp(),
            },
        )
    }

    #[test]
    fn anchoring_values() {
        convention_self_test().unwrap();
    }

    #[test]
    fn flat_is_flat() {
        let spec = MetricSpec::new(5, MetricKind::Flat { negative: 1 });
        let p = CurvaturePack::<f64>::at(&spec, &[0.1; 5]).unwrap();
        assert_eq!(p.gamma().max_abs(), 0.0);
        assert_eq!(p.riemann_lower().max_abs(), 0.0);
        assert_eq!(p.weyl_tensor().max_abs(), 0.0);
    }

    #[test]
    fn printed_christoffel_symbols() {
        let x = [0.3, 0.7, 0.2, 0.1, 0.4];
        let p = CurvaturePack::<f64>::at(&pq_exp(), &x).unwrap();
        let e = 0.5f64.exp();
        let g = p.gamma();
        assert_relative_eq!(g.at3(1, 0, 0), 0.5 * e, max_relative = 1e-13);
        assert_relative_eq!(g.at3(1, 0, 2), 0.5 * e, max_relative = 1e-13);
        assert_relative_eq!(g.at3(2, 0, 0), -0.5 * e, max_relative = 1e-13);
        let mut others = 0.0f64;
        crate::tensor::for_each_index(5, 3, |ix| {
            let key = (ix[0], ix[1].min(ix[2]), ix[1].max(ix[2]));
            if ![(1, 0, 0), (1, 0, 2), (2, 0, 0)].contains(&key) {
                others = others.max(g.get(ix).abs());
            }
        });
        assert!(others < 1e-14);
    }

    #[test]
    fn identities_on_pq_metric() {
        let p = CurvaturePack::<f64>::at(&pq_exp(), &[0.5, 0.2, 0.8, 0.3, 0.6]).unwrap();
        assert!(first_bianchi_defect(p.riemann_lower()) < 1e-12);
        assert!(second_bianchi_defect(&p.nabla_riemann, p.nabla_scale) < 1e-10);
        assert!(trace_defect(p.weyl_tensor(), &p.metric) < 1e-12);
        assert!(metric_compatibility_defect(&p).unwrap() < 1e-12);
        assert!(divergence_identity_defect(&p) < 1e-10);
        assert!(p.weyl_tensor().max_abs() > 0.1);
    }

    #[test]
    fn space_form_shape() {
        let k = 0.7;
        let spec = MetricSpec::new(5, MetricKind::ConstCurv { k, negative: 1 });
        let p = CurvaturePack::<f64>::at(&spec, &[0.2, 0.4, 0.1, 0.3, 0.5]).unwrap();
        let g = p.metric.g();
        let r = p.riemann_lower();
        let mut worst = 0.0f64;
        crate::tensor::for_each_index(5, 4, |ix| {
            let (j, kk, l, m) = (ix[0], ix[1], ix[2], ix[3]);
            let e = -k * (g.at2(j, l) * g.at2(kk, m) - g.at2(j, m) * g.at2(kk, l));
            worst = worst.max((r.at4(j, kk, l, m) - e).abs());
        });
        assert!(worst / r.max_abs() < 1e-10, "{worst}");
        assert!(p.weyl_tensor().max_abs() / r.max_abs() < 1e-11);
    }

    #[test]
    fn transport_loop_matches_commutator() {
        let x = [0.5, 0.2, 0.8, 0.3, 0.6];
        let v = [0.3, -0.7, 1.1, 0.4, 0.2];
        let d =
            ricci_identity_loop_check(&pq_exp(), &CurvaturePack::at(&pq_exp(), &x).unwrap(), 0, 2, &v, 1e-3).unwrap();
        assert!(d < 1e-4, "{d}");
        let spec = MetricSpec::new(4, MetricKind::ConstCurv { k: 0.9, negative: 0 });
        let pack = CurvaturePack::at(&spec, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let d = ricci_identity_loop_check(&spec, &pack, 1, 3, &v[..4], 1e-3).unwrap();
        assert!(d < 1e-4, "{d}");
    }

    #[test]
    fn missing_partials_rejected() {
        let spec = pq_exp();
        let m = evaluate::<f64>(&spec, &[0.1; 5]).unwrap();
        let c = christoffel(&m);
        assert!(matches!(
            covariant_derivative(m.g(), m.d2g(), &c.gamma),
            Err(CurvatureError::MissingPartials { .. })
        ));
    }
}
