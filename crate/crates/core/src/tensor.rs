//! Dense multi-index tensors with per-slot variance.
//!
//! Storage is row-major over `n^rank` entries. Variance is runtime data:
//! contractions and index gymnastics check it and report the offending slot.

use serde::ser::{Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::metrics::MetricAtPoint;
use crate::scalar::{max_abs, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variance {
    Up,
    Down,
}

impl Variance {
    pub fn flipped(self) -> Self {
        match self {
            Variance::Up => Variance::Down,
            Variance::Down => Variance::Up,
        }
    }

    fn as_char(self) -> char {
        match self {
            Variance::Up => 'u',
            Variance::Down => 'd',
        }
    }
}

pub use Variance::{Down, Up};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Raise,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("slot {slot} has variance {found:?}, expected {expected:?}")]
    VarianceMismatch {
        slot: usize,
        expected: Variance,
        found: Variance,
    },
    #[error("cannot contract slots {a} and {b}: both are {variance:?}")]
    SameVarianceContraction { a: usize, b: usize, variance: Variance },
    #[error("slot {slot} out of range for rank {rank}")]
    SlotOutOfRange { slot: usize, rank: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("valence mismatch: {left} vs {right}")]
    ValenceMismatch { left: String, right: String },
    #[error("data length {len} does not match n^rank = {expected}")]
    BadLength { len: usize, expected: usize },
    #[error("singular metric")]
    SingularMetric,
    #[error("malformed tensor json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    n: usize,
    valence: Vec<Variance>,
    data: Vec<T>,
}

/// Odometer over all multi-indices of the given rank in row-major order.
pub(crate) fn for_each_index(n: usize, rank: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; rank];
    if n == 0 && rank > 0 {
        return;
    }
    loop {
        f(&idx);
        let mut s = rank;
        loop {
            if s == 0 {
                return;
            }
            s -= 1;
            idx[s] += 1;
            if idx[s] < n {
                break;
            }
            idx[s] = 0;
        }
    }
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(n: usize, valence: &[Variance]) -> Self {
        Self {
            n,
            valence: valence.to_vec(),
            data: vec![T::zero(); n.pow(valence.len() as u32)],
        }
    }

    pub fn from_fn(n: usize, valence: &[Variance], mut f: impl FnMut(&[usize]) -> T) -> Self {
        let mut data = Vec::with_capacity(n.pow(valence.len() as u32));
        for_each_index(n, valence.len(), |idx| data.push(f(idx)));
        Self {
            n,
            valence: valence.to_vec(),
            data,
        }
    }

    pub fn from_vec(n: usize, valence: &[Variance], data: Vec<T>) -> Result<Self, TensorError> {
        let expected = n.pow(valence.len() as u32);
        if data.len() != expected {
            return Err(TensorError::BadLength {
                len: data.len(),
                expected,
            });
        }
        Ok(Self {
            n,
            valence: valence.to_vec(),
            data,
        })
    }

    pub fn covector(values: &[T]) -> Self {
        Self {
            n: values.len(),
            valence: vec![Down],
            data: values.to_vec(),
        }
    }

    pub fn vector(values: &[T]) -> Self {
        Self {
            n: values.len(),
            valence: vec![Up],
            data: values.to_vec(),
        }
    }

    /// Kronecker delta δ^i_j.
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, &[Up, Down], |ix| if ix[0] == ix[1] { T::one() } else { T::zero() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.valence.len()
    }

    pub fn valence(&self) -> &[Variance] {
        &self.valence
    }

    pub fn valence_string(&self) -> String {
        self.valence.iter().map(|v| v.as_char()).collect()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    #[inline]
    pub fn get(&self, idx: &[usize]) -> T {
        self.data[self.offset(idx)]
    }

    #[inline]
    pub fn set(&mut self, idx: &[usize], value: T) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    #[inline]
    pub fn at1(&self, i: usize) -> T {
        self.data[i]
    }

    #[inline]
    pub fn at2(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn at3(&self, i: usize, j: usize, k: usize) -> T {
        self.data[(i * self.n + j) * self.n + k]
    }

    #[inline]
    pub fn at4(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        let n = self.n;
        self.data[((i * n + j) * n + k) * n + l]
    }

    #[inline]
    pub fn at5(&self, i: usize, j: usize, k: usize, l: usize, m: usize) -> T {
        let n = self.n;
        self.data[(((i * n + j) * n + k) * n + l) * n + m]
    }

    pub fn max_abs(&self) -> T {
        max_abs(&self.data)
    }

    fn check_same_shape(&self, other: &Self) -> Result<(), TensorError> {
        if self.n != other.n {
            return Err(TensorError::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        if self.valence != other.valence {
            return Err(TensorError::ValenceMismatch {
                left: self.valence_string(),
                right: other.valence_string(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, TensorError> {
        self.check_same_shape(other)?;
        Ok(self.zip_map(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, TensorError> {
        self.check_same_shape(other)?;
        Ok(self.zip_map(other, |a, b| a - b))
    }

    fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        Self {
            n: self.n,
            valence: self.valence.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, factor: T) -> Self {
        self.map(|a| a * factor)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            n: self.n,
            valence: self.valence.clone(),
            data: self.data.iter().map(|&a| f(a)).collect(),
        }
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T, TensorError> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs())))
    }

    /// Tensor product `self ⊗ other`.
    pub fn outer(&self, other: &Self) -> Result<Self, TensorError> {
        if self.n != other.n {
            return Err(TensorError::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let mut valence = self.valence.clone();
        valence.extend_from_slice(&other.valence);
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for &a in &self.data {
            for &b in &other.data {
                data.push(a * b);
            }
        }
        Ok(Self {
            n: self.n,
            valence,
            data,
        })
    }

    /// Reorders slots: slot `s` of the result is slot `perm[s]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self, TensorError> {
        let rank = self.rank();
        let mut seen = vec![false; rank];
        for &p in perm {
            if p >= rank || seen[p] {
                return Err(TensorError::SlotOutOfRange { slot: p, rank });
            }
            seen[p] = true;
        }
        if perm.len() != rank {
            return Err(TensorError::SlotOutOfRange { slot: perm.len(), rank });
        }
        let valence: Vec<Variance> = perm.iter().map(|&p| self.valence[p]).collect();
        let mut src = vec![0usize; rank];
        Ok(Self::from_fn(self.n, &valence, |idx| {
            for (s, &p) in perm.iter().enumerate() {
                src[p] = idx[s];
            }
            self.get(&src)
        }))
    }

    fn check_slot(&self, slot: usize) -> Result<(), TensorError> {
        if slot >= self.rank() {
            Err(TensorError::SlotOutOfRange {
                slot,
                rank: self.rank(),
            })
        } else {
            Ok(())
        }
    }

    /// Contracts `slot` with a rank-2 tensor whose slots both have the
    /// opposite variance of `slot`'s target, i.e. applies `matrix` on that slot.
    fn apply_on_slot(&self, slot: usize, matrix: &Self, new_variance: Variance) -> Self {
        let n = self.n;
        let mut valence = self.valence.clone();
        valence[slot] = new_variance;
        let stride = n.pow((self.rank() - slot - 1) as u32);
        let mut out = Self::zeros(n, &valence);
        let block = stride * n;
        for (base, chunk) in out.data.chunks_mut(block).enumerate() {
            let src = &self.data[base * block..(base + 1) * block];
            for a in 0..n {
                for p in 0..n {
                    let w = matrix.data[a * n + p];
                    if w == T::zero() {
                        continue;
                    }
                    let (dst, from) = (
                        &mut chunk[a * stride..(a + 1) * stride],
                        &src[p * stride..(p + 1) * stride],
                    );
                    for (d, &s) in dst.iter_mut().zip(from) {
                        *d += w * s;
                    }
                }
            }
        }
        out
    }

    /// Raises a lower slot with the inverse metric `ginv` (valence "uu").
    pub fn raise(&self, slot: usize, ginv: &Self) -> Result<Self, TensorError> {
        self.check_slot(slot)?;
        if self.valence[slot] != Down {
            return Err(TensorError::VarianceMismatch {
                slot,
                expected: Down,
                found: self.valence[slot],
            });
        }
        check_metric_form(ginv, Up, self.n)?;
        Ok(self.apply_on_slot(slot, ginv, Up))
    }

    /// Lowers an upper slot with the metric `g` (valence "dd").
    pub fn lower(&self, slot: usize, g: &Self) -> Result<Self, TensorError> {
        self.check_slot(slot)?;
        if self.valence[slot] != Up {
            return Err(TensorError::VarianceMismatch {
                slot,
                expected: Up,
                found: self.valence[slot],
            });
        }
        check_metric_form(g, Down, self.n)?;
        Ok(self.apply_on_slot(slot, g, Down))
    }

    /// Raises every lower slot.
    pub fn raise_all(&self, ginv: &Self) -> Result<Self, TensorError> {
        let mut t = self.clone();
        for s in 0..self.rank() {
            if t.valence[s] == Down {
                t = t.raise(s, ginv)?;
            }
        }
        Ok(t)
    }

    /// Trace over a pair of slots with opposite variance.
    pub fn contract(&self, a: usize, b: usize) -> Result<Self, TensorError> {
        self.check_slot(a)?;
        self.check_slot(b)?;
        if a == b {
            return Err(TensorError::SlotOutOfRange {
                slot: b,
                rank: self.rank(),
            });
        }
        if self.valence[a] == self.valence[b] {
            return Err(TensorError::SameVarianceContraction {
                a,
                b,
                variance: self.valence[a],
            });
        }
        let valence: Vec<Variance> = self
            .valence
            .iter()
            .enumerate()
            .filter(|(s, _)| *s != a && *s != b)
            .map(|(_, &v)| v)
            .collect();
        let rank = self.rank();
        let mut full = vec![0usize; rank];
        Ok(Self::from_fn(self.n, &valence, |idx| {
            let mut it = idx.iter();
            for (s, slot) in full.iter_mut().enumerate() {
                if s != a && s != b {
                    *slot = *it.next().unwrap();
                }
            }
            let mut acc = T::zero();
            for p in 0..self.n {
                full[a] = p;
                full[b] = p;
                acc += self.get(&full);
            }
            acc
        }))
    }

    /// Value of a rank-0 tensor.
    pub fn scalar_value(&self) -> Option<T> {
        if self.rank() == 0 {
            Some(self.data[0])
        } else {
            None
        }
    }

    /// Nested array-of-arrays form with a valence string, e.g.
    /// `{"n": 5, "valence": "dd", "data": [[...], ...]}`.
    pub fn to_json(&self) -> Value {
        fn nest<T: Scalar>(data: &[T], n: usize, rank: usize) -> Value {
            if rank == 0 {
                return Value::from(data[0].as_f64());
            }
            let chunk = data.len() / n;
            Value::Array(
                data.chunks(chunk.max(1))
                    .take(n)
                    .map(|c| nest(c, n, rank - 1))
                    .collect(),
            )
        }
        serde_json::json!({
            "n": self.n,
            "valence": self.valence_string(),
            "data": nest(&self.data, self.n, self.rank()),
        })
    }

    pub fn from_json(value: &Value) -> Result<Self, TensorError> {
        let bad = |m: &str| TensorError::Json(m.to_string());
        let n = value.get("n").and_then(Value::as_u64).ok_or_else(|| bad("missing n"))? as usize;
        let valence: Vec<Variance> = value
            .get("valence")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing valence"))?
            .chars()
            .map(|c| match c {
                'u' => Ok(Up),
                'd' => Ok(Down),
                other => Err(TensorError::Json(format!("bad valence character {other:?}"))),
            })
            .collect::<Result<_, _>>()?;
        let mut data = Vec::new();
        fn flatten<T: Scalar>(v: &Value, n: usize, rank: usize, out: &mut Vec<T>) -> Result<(), TensorError> {
            if rank == 0 {
                let x = v
                    .as_f64()
                    .ok_or_else(|| TensorError::Json("expected a number".into()))?;
                out.push(T::lit(x));
                return Ok(());
            }
            let arr = v
                .as_array()
                .ok_or_else(|| TensorError::Json("expected an array".into()))?;
            if arr.len() != n {
                return Err(TensorError::Json(format!("expected {n} entries, found {}", arr.len())));
            }
            arr.iter().try_for_each(|e| flatten(e, n, rank - 1, out))
        }
        flatten(
            value.get("data").ok_or_else(|| bad("missing data"))?,
            n,
            valence.len(),
            &mut data,
        )?;
        Self::from_vec(n, &valence, data)
    }
}

impl<T: Scalar> Serialize for Tensor<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

fn check_metric_form<T: Scalar>(m: &Tensor<T>, v: Variance, n: usize) -> Result<(), TensorError> {
    if m.dim() != n {
        return Err(TensorError::DimensionMismatch {
            left: n,
            right: m.dim(),
        });
    }
    for (slot, &found) in m.valence().iter().enumerate() {
        if found != v {
            return Err(TensorError::VarianceMismatch {
                slot,
                expected: v,
                found,
            });
        }
    }
    if m.rank() != 2 {
        return Err(TensorError::SlotOutOfRange {
            slot: 2,
            rank: m.rank(),
        });
    }
    Ok(())
}

/// Raises or lowers `slot` of `t` with the metric at a point.
pub fn raise_lower<T: Scalar>(
    t: &Tensor<T>,
    slot: usize,
    m: &MetricAtPoint<T>,
    direction: Direction,
) -> Result<Tensor<T>, TensorError> {
    match direction {
        Direction::Raise => t.raise(slot, m.ginv()),
        Direction::Lower => t.lower(slot, m.g()),
    }
}

/// Full contraction of an all-lower tensor with its fully raised copy;
/// for the Weyl tensor this is C².
pub fn full_square<T: Scalar>(t: &Tensor<T>, m: &MetricAtPoint<T>) -> Result<T, TensorError> {
    for (slot, &v) in t.valence().iter().enumerate() {
        if v != Down {
            return Err(TensorError::VarianceMismatch {
                slot,
                expected: Down,
                found: v,
            });
        }
    }
    let up = t.raise_all(m.ginv())?;
    Ok(t.data().iter().zip(up.data()).map(|(&a, &b)| a * b).sum())
}

/// Product of the largest entries of `t` and of its raised copy; the scale
/// against which a vanishing [`full_square`] is judged.
pub fn full_square_scale<T: Scalar>(t: &Tensor<T>, m: &MetricAtPoint<T>) -> Result<T, TensorError> {
    let up = t.raise_all(m.ginv())?;
    Ok(t.max_abs() * up.max_abs())
}
