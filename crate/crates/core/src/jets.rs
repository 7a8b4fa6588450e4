//! Order-3 multivariate truncated Taylor arithmetic.
//!
//! A [`Jet3`] carries a value together with every partial derivative through
//! third order in `n` coordinates. Second and third partials are stored in a
//! packed symmetric layout: only canonical (sorted) index tuples are kept, so
//! the symmetry of mixed partials holds by construction.

use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("coordinate index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("jet dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("division by a jet whose value is zero")]
    DivisionByZero,
    #[error("{function} is undefined at {value}")]
    Domain { function: &'static str, value: f64 },
}

/// Univariate elementary functions that can be composed with a jet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementary {
    Exp,
    Sin,
    Cos,
    Ln,
    PowInt(i32),
}

#[inline]
fn packed2_len(n: usize) -> usize {
    n * (n + 1) / 2
}

#[inline]
fn packed3_len(n: usize) -> usize {
    n * (n + 1) * (n + 2) / 6
}

#[inline]
fn packed2_index(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    b * (b + 1) / 2 + a
}

#[inline]
fn packed3_index(i: usize, j: usize, k: usize) -> usize {
    let mut t = [i, j, k];
    t.sort_unstable();
    let [a, b, c] = t;
    c * (c + 1) * (c + 2) / 6 + b * (b + 1) / 2 + a
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet3<T> {
    n: usize,
    v: T,
    d1: Vec<T>,
    d2: Vec<T>,
    d3: Vec<T>,
}

impl<T: Scalar> Jet3<T> {
    pub fn constant(n: usize, value: T) -> Self {
        Self {
            n,
            v: value,
            d1: vec![T::zero(); n],
            d2: vec![T::zero(); packed2_len(n)],
            d3: vec![T::zero(); packed3_len(n)],
        }
    }

    /// The coordinate function `x^index` evaluated at `value`.
    pub fn variable(index: usize, value: T, n: usize) -> Result<Self, JetError> {
        if index >= n {
            return Err(JetError::IndexOutOfRange { index, n });
        }
        let mut jet = Self::constant(n, value);
        jet.d1[index] = T::one();
        Ok(jet)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn value(&self) -> T {
        self.v
    }

    pub fn gradient(&self) -> &[T] {
        &self.d1
    }

    pub fn d1(&self, i: usize) -> T {
        self.d1[i]
    }

    pub fn d2(&self, i: usize, j: usize) -> T {
        self.d2[packed2_index(i, j)]
    }

    pub fn d3(&self, i: usize, j: usize, k: usize) -> T {
        self.d3[packed3_index(i, j, k)]
    }

    /// Every stored entry is finite.
    pub fn is_finite(&self) -> bool {
        self.v.is_finite()
            && self.d1.iter().all(|x| x.is_finite())
            && self.d2.iter().all(|x| x.is_finite())
            && self.d3.iter().all(|x| x.is_finite())
    }

    fn check_dim(&self, other: &Self) -> Result<(), JetError> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(JetError::DimensionMismatch {
                left: self.n,
                right: other.n,
            })
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        Self {
            n: self.n,
            v: f(self.v, other.v),
            d1: self.d1.iter().zip(&other.d1).map(|(&a, &b)| f(a, b)).collect(),
            d2: self.d2.iter().zip(&other.d2).map(|(&a, &b)| f(a, b)).collect(),
            d3: self.d3.iter().zip(&other.d3).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            n: self.n,
            v: f(self.v),
            d1: self.d1.iter().map(|&a| f(a)).collect(),
            d2: self.d2.iter().map(|&a| f(a)).collect(),
            d3: self.d3.iter().map(|&a| f(a)).collect(),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, JetError> {
        self.check_dim(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, JetError> {
        self.check_dim(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, JetError> {
        self.check_dim(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, JetError> {
        self.check_dim(other)?;
        let inv = other.recip()?;
        Ok(self.mul_unchecked(&inv))
    }

    pub fn scale(&self, factor: T) -> Self {
        self.map(|a| a * factor)
    }

    /// `factor * self + shift`.
    pub fn affine(&self, factor: T, shift: T) -> Self {
        let mut out = self.scale(factor);
        out.v += shift;
        out
    }

    fn mul_unchecked(&self, b: &Self) -> Self {
        let a = self;
        let n = self.n;
        let mut out = Self::constant(n, a.v * b.v);
        for i in 0..n {
            out.d1[i] = a.d1[i] * b.v + a.v * b.d1[i];
        }
        let mut p = 0;
        for j in 0..n {
            for i in 0..=j {
                out.d2[p] = a.d2[p] * b.v + a.d1[i] * b.d1[j] + a.d1[j] * b.d1[i] + a.v * b.d2[p];
                p += 1;
            }
        }
        let mut p = 0;
        for k in 0..n {
            for j in 0..=k {
                for i in 0..=j {
                    let (ij, ik, jk) = (packed2_index(i, j), packed2_index(i, k), packed2_index(j, k));
                    out.d3[p] = a.d3[p] * b.v
                        + a.d2[ij] * b.d1[k]
                        + a.d2[ik] * b.d1[j]
                        + a.d2[jk] * b.d1[i]
                        + a.d1[i] * b.d2[jk]
                        + a.d1[j] * b.d2[ik]
                        + a.d1[k] * b.d2[ij]
                        + a.v * b.d3[p];
                    p += 1;
                }
            }
        }
        out
    }

    /// Composes a univariate function with this jet given `[f, f', f'', f''']`
    /// evaluated at the jet value (Faà di Bruno through order 3).
    pub fn compose(&self, f: [T; 4]) -> Self {
        let n = self.n;
        let [f0, f1, f2, f3] = f;
        let a = self;
        let mut out = Self::constant(n, f0);
        for i in 0..n {
            out.d1[i] = f1 * a.d1[i];
        }
        let mut p = 0;
        for j in 0..n {
            for i in 0..=j {
                out.d2[p] = f1 * a.d2[p] + f2 * a.d1[i] * a.d1[j];
                p += 1;
            }
        }
        let mut p = 0;
        for k in 0..n {
            for j in 0..=k {
                for i in 0..=j {
                    let (ij, ik, jk) = (packed2_index(i, j), packed2_index(i, k), packed2_index(j, k));
                    out.d3[p] = f1 * a.d3[p]
                        + f2 * (a.d2[ij] * a.d1[k] + a.d2[ik] * a.d1[j] + a.d2[jk] * a.d1[i])
                        + f3 * a.d1[i] * a.d1[j] * a.d1[k];
                    p += 1;
                }
            }
        }
        out
    }

    pub fn recip(&self) -> Result<Self, JetError> {
        let x = self.v;
        if x == T::zero() {
            return Err(JetError::DivisionByZero);
        }
        let r = x.recip();
        let r2 = r * r;
        Ok(self.compose([r, -r2, T::lit(2.0) * r2 * r, T::lit(-6.0) * r2 * r2]))
    }

    pub fn exp(&self) -> Self {
        let e = self.v.exp();
        self.compose([e, e, e, e])
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn ln(&self) -> Result<Self, JetError> {
        let x = self.v;
        if x <= T::zero() {
            return Err(JetError::Domain {
                function: "ln",
                value: x.as_f64(),
            });
        }
        let r = x.recip();
        Ok(self.compose([x.ln(), r, -r * r, T::lit(2.0) * r * r * r]))
    }

    /// Integer power; negative exponents require a nonzero value.
    pub fn powi(&self, k: i32) -> Result<Self, JetError> {
        let x = self.v;
        if k < 0 && x == T::zero() {
            return Err(JetError::DivisionByZero);
        }
        let kf = T::from_i32(k).expect("small integer");
        let one = T::one();
        let two = T::lit(2.0);
        // x^0 is pinned to 1 so that x = 0 stays exact.
        let pw = |m: i32| -> T {
            if k == m {
                one
            } else {
                x.powi(k - m)
            }
        };
        let f0 = pw(0);
        let f1 = if k == 0 { T::zero() } else { kf * pw(1) };
        let f2 = if k == 0 || k == 1 {
            T::zero()
        } else {
            kf * (kf - one) * pw(2)
        };
        let f3 = if (0..=2).contains(&k) {
            T::zero()
        } else {
            kf * (kf - one) * (kf - two) * pw(3)
        };
        Ok(self.compose([f0, f1, f2, f3]))
    }

    pub fn apply(&self, f: Elementary) -> Result<Self, JetError> {
        match f {
            Elementary::Exp => Ok(self.exp()),
            Elementary::Sin => Ok(self.sin()),
            Elementary::Cos => Ok(self.cos()),
            Elementary::Ln => self.ln(),
            Elementary::PowInt(k) => self.powi(k),
        }
    }
}

// Operator forms panic on dimension mismatch; use the `checked_*` methods
// when the operands come from untrusted input.

impl<T: Scalar> Add for &Jet3<T> {
    type Output = Jet3<T>;
    fn add(self, rhs: Self) -> Jet3<T> {
        self.checked_add(rhs).expect("jet dimension mismatch")
    }
}

impl<T: Scalar> Add for Jet3<T> {
    type Output = Jet3<T>;
    fn add(self, rhs: Self) -> Jet3<T> {
        &self + &rhs
    }
}

impl<T: Scalar> Sub for &Jet3<T> {
    type Output = Jet3<T>;
    fn sub(self, rhs: Self) -> Jet3<T> {
        self.checked_sub(rhs).expect("jet dimension mismatch")
    }
}

impl<T: Scalar> Sub for Jet3<T> {
    type Output = Jet3<T>;
    fn sub(self, rhs: Self) -> Jet3<T> {
        &self - &rhs
    }
}

impl<T: Scalar> Mul for &Jet3<T> {
    type Output = Jet3<T>;
    fn mul(self, rhs: Self) -> Jet3<T> {
        self.checked_mul(rhs).expect("jet dimension mismatch")
    }
}

impl<T: Scalar> Mul for Jet3<T> {
    type Output = Jet3<T>;
    fn mul(self, rhs: Self) -> Jet3<T> {
        &self * &rhs
    }
}

impl<T: Scalar> Neg for Jet3<T> {
    type Output = Jet3<T>;
    fn neg(self) -> Jet3<T> {
        self.map(|a| -a)
    }
}
