//! Analytic metric catalog and pointwise evaluation with exact derivative
//! stacks through third order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jets::{Jet3, JetError};
use crate::linalg::{symmetric_eigenvalues, Lu};
use crate::scalar::Scalar;
use crate::tensor::{Down, Tensor, Up};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("invalid metric specification: {0}")]
    InvalidSpec(String),
    #[error("point has {got} coordinates, metric dimension is {n}")]
    PointDimension { got: usize, n: usize },
    #[error("degenerate metric at point: |det g| = {det:e} below {threshold:e}")]
    Degenerate { det: f64, threshold: f64 },
    #[error("metric has a near-zero eigenvalue {eigenvalue:e}")]
    NearZeroEigenvalue { eigenvalue: f64 },
    #[error("domain violation: {0}")]
    Domain(String),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// Univariate analytic function of one coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionForm {
    /// `scale · exp(rate · x)`.
    Exp {
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "one")]
        rate: f64,
    },
    /// `Σ coeffs[k] x^k`, degree at most 4.
    Poly { coeffs: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl FunctionForm {
    pub const MAX_POLY_DEGREE: usize = 4;

    pub fn exp() -> Self {
        FunctionForm::Exp { scale: 1.0, rate: 1.0 }
    }

    pub fn poly(coeffs: &[f64]) -> Self {
        FunctionForm::Poly {
            coeffs: coeffs.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        match self {
            FunctionForm::Exp { scale, rate } if !(scale.is_finite() && rate.is_finite()) => {
                Err(MetricError::InvalidSpec("non-finite exp parameter".into()))
            }
            FunctionForm::Poly { coeffs } if coeffs.len() > Self::MAX_POLY_DEGREE + 1 => {
                Err(MetricError::InvalidSpec(format!(
                    "polynomial degree {} exceeds {}",
                    coeffs.len() - 1,
                    Self::MAX_POLY_DEGREE
                )))
            }
            FunctionForm::Poly { coeffs } if coeffs.iter().any(|c| !c.is_finite()) => {
                Err(MetricError::InvalidSpec("non-finite polynomial coefficient".into()))
            }
            _ => Ok(()),
        }
    }

    /// Value and derivatives of orders 0 through 4 at `x`.
    pub fn derivs<T: Scalar>(&self, x: T) -> [T; 5] {
        let mut out = [T::zero(); 5];
        match self {
            FunctionForm::Exp { scale, rate } => {
                let r = T::lit(*rate);
                let mut f = T::lit(*scale) * (r * x).exp();
                for o in out.iter_mut() {
                    *o = f;
                    f *= r;
                }
            }
            FunctionForm::Poly { coeffs } => {
                // Differentiate the coefficient list repeatedly, Horner each time.
                let mut c: Vec<T> = coeffs.iter().map(|&a| T::lit(a)).collect();
                for o in out.iter_mut() {
                    *o = c.iter().rev().fold(T::zero(), |acc, &a| acc * x + a);
                    c = c.iter().enumerate().skip(1).map(|(k, &a)| a * T::of_usize(k)).collect();
                }
            }
        }
        out
    }

    pub fn eval_jet<T: Scalar>(&self, x: &Jet3<T>) -> Jet3<T> {
        let d = self.derivs(x.value());
        x.compose([d[0], d[1], d[2], d[3]])
    }
}

/// Catalog entries. Serialized as `{"name": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params")]
pub enum MetricKind {
    /// Constant pseudo-Euclidean metric; the first `negative` coordinates are time-like.
    #[serde(rename = "flat")]
    Flat {
        #[serde(default = "default_negative")]
        negative: usize,
    },
    /// Conformally flat space form `η / (1 + K/4 · η_kk x_k²)²` of sectional curvature `k`.
    #[serde(rename = "constcurv")]
    ConstCurv {
        k: f64,
        #[serde(default)]
        negative: usize,
    },
    /// `p(x¹)q(x³)(dx¹)² + 2dx¹dx² + Σ_{a≥3}(dx^a)²`.
    #[serde(rename = "brinkmann_pq")]
    BrinkmannPq { p: FunctionForm, q: FunctionForm },
    /// Coordinates `(v, u, x³, …, xⁿ)`:
    /// `−2 dv du + H (du)² + Σ (dx^i)²` with `H = −Σ x_i² (a(u) + F(u) λ_i)`.
    #[serde(rename = "galaev")]
    Galaev {
        a: FunctionForm,
        f: FunctionForm,
        lambda: Vec<f64>,
    },
}

fn default_negative() -> usize {
    1
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Flat { .. } => "flat",
            MetricKind::ConstCurv { .. } => "constcurv",
            MetricKind::BrinkmannPq { .. } => "brinkmann_pq",
            MetricKind::Galaev { .. } => "galaev",
        }
    }
}

/// Counts of positive and negative eigenvalues of `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inertia {
    pub n_plus: usize,
    pub n_minus: usize,
}

impl Inertia {
    /// Lorentzian in either sign convention.
    pub fn is_lorentzian(&self) -> bool {
        (self.n_minus == 1 && self.n_plus >= 1) || (self.n_plus == 1 && self.n_minus >= 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub n: usize,
    #[serde(flatten)]
    pub kind: MetricKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature_expectation: Option<Inertia>,
}

/// Tolerance on `|Σλ|` for the galaev entry.
pub const LAMBDA_SUM_TOL: f64 = 1e-12;
/// Relative `|det g|` threshold below which a point is degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;
/// Relative eigenvalue threshold used by [`signature`].
pub const EIGEN_ZERO_TOL: f64 = 1e-10;

impl MetricSpec {
    pub fn new(n: usize, kind: MetricKind) -> Self {
        Self {
            n,
            kind,
            signature_expectation: None,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        let n = self.n;
        if n < 2 {
            return Err(MetricError::InvalidSpec(format!("dimension {n} too small")));
        }
        match &self.kind {
            MetricKind::Flat { negative } | MetricKind::ConstCurv { negative, .. } if *negative > n => Err(
                MetricError::InvalidSpec(format!("{negative} negative directions exceed dimension {n}")),
            ),
            MetricKind::ConstCurv { k, .. } if !k.is_finite() => {
                Err(MetricError::InvalidSpec("non-finite curvature".into()))
            }
            MetricKind::BrinkmannPq { p, q } => {
                if n < 3 {
                    return Err(MetricError::InvalidSpec("brinkmann_pq needs n >= 3".into()));
                }
                p.validate()?;
                q.validate()
            }
            MetricKind::Galaev { a, f, lambda } => {
                if n < 3 {
                    return Err(MetricError::InvalidSpec("galaev needs n >= 3".into()));
                }
                if lambda.len() != n - 2 {
                    return Err(MetricError::InvalidSpec(format!(
                        "galaev needs {} lambda values, got {}",
                        n - 2,
                        lambda.len()
                    )));
                }
                let sum: f64 = lambda.iter().sum();
                if sum.abs() > LAMBDA_SUM_TOL {
                    return Err(MetricError::InvalidSpec(format!(
                        "galaev lambda values must sum to zero (sum = {sum:e})"
                    )));
                }
                a.validate()?;
                f.validate()
            }
            _ => Ok(()),
        }
    }

    /// Component jets `g_ij` (full symmetric matrix, row-major).
    pub fn component_jets<T: Scalar>(&self, point: &[T]) -> Result<Vec<Jet3<T>>, MetricError> {
        self.validate()?;
        let n = self.n;
        if point.len() != n {
            return Err(MetricError::PointDimension { got: point.len(), n });
        }
        let x: Vec<Jet3<T>> = point
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet3::variable(i, v, n))
            .collect::<Result<_, _>>()?;
        let zero = Jet3::constant(n, T::zero());
        let mut g = vec![zero.clone(); n * n];
        let eta = |i: usize, negative: usize| if i < negative { -T::one() } else { T::one() };
        match &self.kind {
            MetricKind::Flat { negative } => {
                for i in 0..n {
                    g[i * n + i] = Jet3::constant(n, eta(i, *negative));
                }
            }
            MetricKind::ConstCurv { k, negative } => {
                let mut s = zero.clone();
                for (i, xi) in x.iter().enumerate() {
                    s = s + (xi * xi).scale(eta(i, *negative));
                }
                let sigma = s.affine(T::lit(k / 4.0), T::one());
                if sigma.value() <= T::zero() {
                    return Err(MetricError::Domain(
                        "conformal factor vanishes outside the chart".into(),
                    ));
                }
                let w = sigma.powi(-2)?;
                for i in 0..n {
                    g[i * n + i] = w.scale(eta(i, *negative));
                }
            }
            MetricKind::BrinkmannPq { p, q } => {
                g[0] = p.eval_jet(&x[0]) * q.eval_jet(&x[2]);
                g[1] = Jet3::constant(n, T::one());
                g[n] = Jet3::constant(n, T::one());
                for a in 2..n {
                    g[a * n + a] = Jet3::constant(n, T::one());
                }
            }
            MetricKind::Galaev { a, f, lambda } => {
                let au = a.eval_jet(&x[1]);
                let fu = f.eval_jet(&x[1]);
                let mut h = zero.clone();
                for (i, &lam) in lambda.iter().enumerate() {
                    let xi = &x[i + 2];
                    let coeff = &au + &fu.scale(T::lit(lam));
                    h = h - (xi * xi) * coeff;
                }
                g[1] = Jet3::constant(n, -T::one());
                g[n] = Jet3::constant(n, -T::one());
                g[n + 1] = h;
                for i in 2..n {
                    g[i * n + i] = Jet3::constant(n, T::one());
                }
            }
        }
        if g.iter().any(|j| !j.is_finite()) {
            return Err(MetricError::Domain("non-finite metric component".into()));
        }
        Ok(g)
    }
}

/// A metric evaluated at one point: `g`, `g⁻¹` and coordinate partials of `g`
/// through third order. Derivative indices come first:
/// `dg[k,i,j] = ∂_k g_ij`, `d2g[l,k,i,j] = ∂_l∂_k g_ij`, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricAtPoint<T> {
    point: Vec<T>,
    g: Tensor<T>,
    ginv: Tensor<T>,
    dg: Tensor<T>,
    d2g: Tensor<T>,
    d3g: Tensor<T>,
}

impl<T: Scalar> MetricAtPoint<T> {
    /// Assembles a point from raw stacks, inverting `g` by LU.
    pub fn from_parts(
        point: Vec<T>,
        g: Tensor<T>,
        dg: Tensor<T>,
        d2g: Tensor<T>,
        d3g: Tensor<T>,
    ) -> Result<Self, MetricError> {
        let n = g.dim();
        let scale = g.max_abs();
        let threshold = T::lit(DEGENERACY_TOL) * scale.powi(n as i32);
        let lu = Lu::factor(g.data(), n).map_err(|_| MetricError::Degenerate {
            det: 0.0,
            threshold: threshold.as_f64(),
        })?;
        let det = lu.determinant();
        if !(det.abs() >= threshold) || scale == T::zero() {
            return Err(MetricError::Degenerate {
                det: det.as_f64(),
                threshold: threshold.as_f64(),
            });
        }
        let ginv = Tensor::from_vec(n, &[Up, Up], lu.inverse()).expect("n×n inverse");
        Ok(Self {
            point,
            g,
            ginv,
            dg,
            d2g,
            d3g,
        })
    }

    /// A metric with constant components (all derivatives zero), used for
    /// purely algebraic work on synthetic tensors.
    pub fn constant(g: Tensor<T>) -> Result<Self, MetricError> {
        let n = g.dim();
        let point = vec![T::zero(); n];
        Self::from_parts(
            point,
            g,
            Tensor::zeros(n, &[Down; 3]),
            Tensor::zeros(n, &[Down; 4]),
            Tensor::zeros(n, &[Down; 5]),
        )
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn point(&self) -> &[T] {
        &self.point
    }

    pub fn g(&self) -> &Tensor<T> {
        &self.g
    }

    pub fn ginv(&self) -> &Tensor<T> {
        &self.ginv
    }

    pub fn dg(&self) -> &Tensor<T> {
        &self.dg
    }

    pub fn d2g(&self) -> &Tensor<T> {
        &self.d2g
    }

    pub fn d3g(&self) -> &Tensor<T> {
        &self.d3g
    }

    /// `g_ij a^i b^j` for vectors.
    pub fn dot_vectors(&self, a: &[T], b: &[T]) -> T {
        let n = self.dim();
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                s += self.g.at2(i, j) * a[i] * b[j];
            }
        }
        s
    }

    /// `g^ij a_i b_j` for covectors.
    pub fn dot_covectors(&self, a: &[T], b: &[T]) -> T {
        let n = self.dim();
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                s += self.ginv.at2(i, j) * a[i] * b[j];
            }
        }
        s
    }

    pub fn raise_covector(&self, a: &[T]) -> Vec<T> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.ginv.at2(i, j) * a[j]).sum())
            .collect()
    }

    pub fn lower_vector(&self, a: &[T]) -> Vec<T> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.g.at2(i, j) * a[j]).sum()).collect()
    }
}

/// Evaluates a catalog metric at `point`.
pub fn evaluate<T: Scalar>(spec: &MetricSpec, point: &[T]) -> Result<MetricAtPoint<T>, MetricError> {
    let n = spec.n;
    let jets = spec.component_jets(point)?;
    let g = Tensor::from_fn(n, &[Down, Down], |ix| jets[ix[0] * n + ix[1]].value());
    let dg = Tensor::from_fn(n, &[Down; 3], |ix| jets[ix[1] * n + ix[2]].d1(ix[0]));
    let d2g = Tensor::from_fn(n, &[Down; 4], |ix| jets[ix[2] * n + ix[3]].d2(ix[0], ix[1]));
    let d3g = Tensor::from_fn(n, &[Down; 5], |ix| jets[ix[3] * n + ix[4]].d3(ix[0], ix[1], ix[2]));
    MetricAtPoint::from_parts(point.to_vec(), g, dg, d2g, d3g)
}

/// Measured inertia of `g`.
pub fn signature<T: Scalar>(m: &MetricAtPoint<T>) -> Result<Inertia, MetricError> {
    let n = m.dim();
    let ev = symmetric_eigenvalues(m.g().data(), n).map_err(|e| MetricError::Domain(e.to_string()))?;
    let scale = m.g().max_abs();
    let mut inertia = Inertia { n_plus: 0, n_minus: 0 };
    for &l in &ev {
        if l.abs() < T::lit(EIGEN_ZERO_TOL) * scale {
            return Err(MetricError::NearZeroEigenvalue { eigenvalue: l.as_f64() });
        }
        if l > T::zero() {
            inertia.n_plus += 1;
        } else {
            inertia.n_minus += 1;
        }
    }
    Ok(inertia)
}

/// Closed-form quantities known for a catalog entry at a point, used as
/// oracles and as the supplied `∂α` for checks that need it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnownRecurrence {
    /// Recurrence covector `α_i`.
    pub alpha: Vec<f64>,
    /// Coordinate partials `∂_i α_j`, row-major.
    pub dalpha: Vec<f64>,
}

/// Values of the brinkmann_pq line element's building blocks at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrinkmannValues {
    pub p: [f64; 5],
    pub q: [f64; 5],
}

impl BrinkmannValues {
    pub fn at(p: &FunctionForm, q: &FunctionForm, point: &[f64]) -> Self {
        Self {
            p: p.derivs(point[0]),
            q: q.derivs(point[2]),
        }
    }

    /// Nonzero Christoffel symbols `(Γ²_11, Γ²_13, Γ³_11)` in the printed
    /// one-based labels (zero-based `Γ[1][0][0]`, `Γ[1][0][2]`, `Γ[2][0][0]`).
    pub fn christoffel(&self) -> (f64, f64, f64) {
        let [p, dp, ..] = self.p;
        let [q, dq, ..] = self.q;
        (0.5 * dp * q, 0.5 * p * dq, -0.5 * p * dq)
    }

    /// `R_1313 = R_11 = ½ p q″`.
    pub fn r1313(&self) -> f64 {
        0.5 * self.p[0] * self.q[2]
    }

    pub fn is_null_branch(&self) -> bool {
        self.q[3] == 0.0
    }

    /// `α = (p′/p, 0, q‴/q″, 0, …)`.
    pub fn alpha(&self, n: usize) -> Vec<f64> {
        let mut a = vec![0.0; n];
        a[0] = self.p[1] / self.p[0];
        a[2] = if self.q[3] == 0.0 { 0.0 } else { self.q[3] / self.q[2] };
        a
    }

    /// `α² = (q‴/q″)²`.
    pub fn alpha_sq(&self) -> f64 {
        let r = if self.q[3] == 0.0 { 0.0 } else { self.q[3] / self.q[2] };
        r * r
    }

    pub fn dalpha(&self, n: usize) -> Vec<f64> {
        let mut d = vec![0.0; n * n];
        let [p, dp, d2p, ..] = self.p;
        d[0] = d2p / p - (dp / p).powi(2);
        if self.q[3] != 0.0 {
            let [_, _, q2, q3, q4] = self.q;
            d[2 * n + 2] = q4 / q2 - (q3 / q2).powi(2);
        }
        d
    }

    /// Null-branch Ricci coefficient `c` in `Ric = c α⊗α`:
    /// `½ (p q″)(p′/p)^{−2}`.
    pub fn null_ricci_coefficient(&self) -> f64 {
        let r = self.p[1] / self.p[0];
        0.5 * self.p[0] * self.q[2] / (r * r)
    }
}

impl MetricSpec {
    /// Closed-form recurrence covector and its partials where the catalog
    /// entry provides one.
    pub fn known_recurrence(&self, point: &[f64]) -> Option<KnownRecurrence> {
        let n = self.n;
        match &self.kind {
            MetricKind::BrinkmannPq { p, q } => {
                let b = BrinkmannValues::at(p, q, point);
                Some(KnownRecurrence {
                    alpha: b.alpha(n),
                    dalpha: b.dalpha(n),
                })
            }
            MetricKind::Galaev { f, .. } => {
                let fd = f.derivs(point[1]);
                let mut alpha = vec![0.0; n];
                alpha[1] = fd[1] / fd[0];
                let mut dalpha = vec![0.0; n * n];
                dalpha[n + 1] = fd[2] / fd[0] - alpha[1] * alpha[1];
                Some(KnownRecurrence { alpha, dalpha })
            }
            _ => None,
        }
    }

    /// Covariantly constant null covector of the pp-wave entry, `β = du`.
    pub fn parallel_null_covector(&self) -> Option<Vec<f64>> {
        match &self.kind {
            MetricKind::Galaev { .. } => {
                let mut b = vec![0.0; self.n];
                b[1] = 1.0;
                Some(b)
            }
            MetricKind::BrinkmannPq { .. } => {
                let mut b = vec![0.0; self.n];
                b[0] = 1.0;
                Some(b)
            }
            _ => None,
        }
    }

    /// `a(u)` of the galaev entry at a point.
    pub fn galaev_a(&self, point: &[f64]) -> Option<f64> {
        match &self.kind {
            MetricKind::Galaev { a, .. } => Some(a.derivs(point[1])[0]),
            _ => None,
        }
    }
}

/// One row of `weyl-lab catalog`.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static str,
    pub example: MetricKind,
}

pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "flat",
            summary: "constant pseudo-Euclidean metric (negative control)",
            params: r#"{"negative": usize = 1}"#,
            example: MetricKind::Flat { negative: 1 },
        },
        CatalogEntry {
            name: "constcurv",
            summary: "space form of constant curvature k, conformally flat control",
            params: r#"{"k": f64, "negative": usize = 0}"#,
            example: MetricKind::ConstCurv { k: 0.5, negative: 0 },
        },
        CatalogEntry {
            name: "brinkmann_pq",
            summary: "p(x1)q(x3)(dx1)^2 + 2dx1dx2 + sum (dxa)^2, a >= 3",
            params: r#"{"p": function, "q": function}"#,
            example: MetricKind::BrinkmannPq {
                p: FunctionForm::exp(),
                q: FunctionForm::exp(),
            },
        },
        CatalogEntry {
            name: "galaev",
            summary: "-2dvdu + H(du)^2 + sum (dxi)^2, H = -sum xi^2 (a(u) + F(u) lambda_i)",
            params: r#"{"a": function, "f": function, "lambda": [f64; n-2] summing to 0}"#,
            example: MetricKind::Galaev {
                a: FunctionForm::poly(&[0.0, 1.0]),
                f: FunctionForm::exp(),
                lambda: vec![1.0, -1.0, 0.0],
            },
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn brinkmann_exp() -> MetricSpec {
        MetricSpec::new(
            5,
            MetricKind::BrinkmannPq {
                p: FunctionForm::exp(),
                q: FunctionForm::exp(),
            },
        )
    }

    #[test]
    fn minkowski_components() {
        let spec = MetricSpec::new(5, MetricKind::Flat { negative: 1 });
        let m = evaluate(&spec, &[0.3, -1.0, 2.0, 0.0, 5.0]).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let e = if i != j {
                    0.0
                } else if i == 0 {
                    -1.0
                } else {
                    1.0
                };
                assert_eq!(m.g().at2(i, j), e);
            }
        }
        assert_eq!(m.dg().max_abs(), 0.0);
        assert_eq!(m.d3g().max_abs(), 0.0);
        assert_eq!(signature(&m).unwrap(), Inertia { n_plus: 4, n_minus: 1 });
    }

    #[test]
    fn brinkmann_example_point() {
        let m = evaluate(&brinkmann_exp(), &[0.3, 0.7, 0.2, 0.1, 0.4]).unwrap();
        let e05 = 0.5f64.exp();
        assert_relative_eq!(m.g().at2(0, 0), e05, max_relative = 1e-15);
        assert_eq!(m.g().at2(0, 1), 1.0);
        assert_eq!(m.g().at2(1, 0), 1.0);
        for a in 2..5 {
            assert_eq!(m.g().at2(a, a), 1.0);
        }
        assert_eq!(m.g().at2(1, 1), 0.0);
        assert_relative_eq!(m.ginv().at2(1, 1), -e05, max_relative = 1e-13);
        assert!(m.ginv().at2(0, 0).abs() < 1e-14);
        assert_relative_eq!(m.ginv().at2(0, 1), 1.0, max_relative = 1e-14);
        let s = signature(&m).unwrap();
        assert_eq!(s.n_minus, 1);
        assert!(s.is_lorentzian());
    }

    #[test]
    fn galaev_block_structure() {
        let spec = MetricSpec::new(
            5,
            MetricKind::Galaev {
                a: FunctionForm::poly(&[0.0, 1.0]),
                f: FunctionForm::exp(),
                lambda: vec![1.0, -1.0, 0.0],
            },
        );
        let x = [0.2, 0.0, 0.5, 0.3, 0.7];
        let m = evaluate(&spec, &x).unwrap();
        assert_eq!(m.g().at2(0, 1), -1.0);
        let h = -(0.25 * (0.0 + 1.0) + 0.09 * (0.0 - 1.0) + 0.49 * 0.0);
        assert_relative_eq!(m.g().at2(1, 1), h, max_relative = 1e-15);
        for i in 2..5 {
            assert_eq!(m.g().at2(i, i), 1.0);
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
        assert!(matches!(
            evaluate::<f64>(&spec, &[0.0; 5]),
            Err(MetricError::InvalidSpec(_))
        ));
    }

    #[test]
    fn riemannian_space_form_signature() {
        let spec = MetricSpec::new(5, MetricKind::ConstCurv { k: 0.7, negative: 0 });
        let m = evaluate(&spec, &[0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        assert_eq!(signature(&m).unwrap(), Inertia { n_plus: 5, n_minus: 0 });
    }

    #[test]
    fn inverse_times_metric_is_identity() {
        let m = evaluate(&brinkmann_exp(), &[0.9, 0.1, 0.4, 0.3, 0.2]).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let s: f64 = (0..5).map(|k| m.ginv().at2(i, k) * m.g().at2(k, j)).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((s - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_metric_rejected() {
        let g = Tensor::from_vec(2, &[Down, Down], vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            MetricAtPoint::constant(g),
            Err(MetricError::Degenerate { .. })
        ));
    }

    #[test]
    fn poly_degree_limit() {
        let f = FunctionForm::poly(&[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(f.validate().is_err());
        let d = FunctionForm::poly(&[0.0, 0.0, 1.0]).derivs(3.0);
        assert_eq!(d, [9.0, 6.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn spec_json_shape() {
        let spec = brinkmann_exp();
        let v = serde_json::to_value(&spec).unwrap();
        assert_eq!(v["name"], "brinkmann_pq");
        assert_eq!(v["params"]["p"]["kind"], "exp");
        let back: MetricSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, spec);
    }
}
