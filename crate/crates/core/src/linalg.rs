//! Small dense linear algebra on row-major `n×n` slices.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
}

/// LU factorisation with partial pivoting, `P·A = L·U` packed in one array.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
    sign: T,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &[T], n: usize) -> Result<Self, LinalgError> {
        assert_eq!(a.len(), n * n);
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        for col in 0..n {
            let (piv_row, piv_val) = (col..n)
                .map(|r| (r, lu[r * n + col].abs()))
                .fold((col, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_val == T::zero() {
                return Err(LinalgError::Singular {
                    column: col,
                    pivot: 0.0,
                });
            }
            if piv_row != col {
                for c in 0..n {
                    lu.swap(col * n + c, piv_row * n + c);
                }
                perm.swap(col, piv_row);
                sign = -sign;
            }
            let pivot = lu[col * n + col];
            for r in col + 1..n {
                let f = lu[r * n + col] / pivot;
                lu[r * n + col] = f;
                for c in col + 1..n {
                    let u = lu[col * n + c];
                    lu[r * n + c] -= f * u;
                }
            }
        }
        Ok(Self { n, lu, perm, sign })
    }

    pub fn determinant(&self) -> T {
        (0..self.n).fold(self.sign, |acc, i| acc * self.lu[i * self.n + i])
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[i * n + k];
                x[i] = x[i] - l * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[i * n + k];
                x[i] = x[i] - u * x[k];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    pub fn inverse(&self) -> Vec<T> {
        let n = self.n;
        let mut inv = vec![T::zero(); n * n];
        let mut e = vec![T::zero(); n];
        for c in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[c] = T::one();
            let col = self.solve(&e);
            for r in 0..n {
                inv[r * n + c] = col[r];
            }
        }
        inv
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Scalar>(a: &[T], n: usize) -> Result<Vec<T>, LinalgError> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        let diag: T = (0..n).map(|i| m[i * n + i] * m[i * n + i]).sum();
        if off <= eps * eps * diag.max(T::min_positive_value()) {
            let mut ev: Vec<T> = (0..n).map(|i| m[i * n + i]).collect();
            ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
            return Ok(ev);
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(LinalgError::NoConvergence)
}

/// Eigenvalues `(re, im)` of a general real matrix via nalgebra's Schur form,
/// sorted by real part. Computed in `f64`.
///
/// Deflation at machine epsilon can stall on repeated eigenvalues, so the
/// capped Schur iteration is retried with looser deflation thresholds and on
/// a fixed Householder similarity of the matrix.
pub fn general_eigenvalues<T: Scalar>(a: &[T], n: usize) -> Result<Vec<(f64, f64)>, LinalgError> {
    const MAX_SWEEPS: usize = 10_000;
    let m = DMatrix::from_fn(n, n, |r, c| a[r * n + c].as_f64());
    let v = DMatrix::from_fn(n, 1, |i, _| ((i + 2) as f64).sqrt());
    let q = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / v.norm_squared());
    let reflected = &q * &m * &q;
    let ev = [1e-15, 1e-13, 1e-11]
        .iter()
        .flat_map(|&eps| [(eps, &m), (eps, &reflected)])
        .find_map(|(eps, mat)| mat.clone().try_schur(eps, MAX_SWEEPS).map(|s| s.complex_eigenvalues()))
        .ok_or(LinalgError::NoConvergence)?;
    let mut ev: Vec<(f64, f64)> = ev.iter().map(|z| (z.re, z.im)).collect();
    ev.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    Ok(ev)
}

/// Row-major `n×n` product.
pub fn matmul<T: Scalar>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lu_inverse_and_determinant() {
        let a: Vec<f64> = vec![0.0, 1.0, 2.0, 1.0, 0.5, 0.0, 2.0, 0.0, -1.0];
        let lu = Lu::factor(&a, 3).unwrap();
        let inv = lu.inverse();
        let id = matmul(&a, &inv, 3);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[i * 3 + j] - e).abs() < 1e-14);
            }
        }
        // det by cofactor expansion
        let det = 0.0 * (-0.5 - 0.0) - 1.0 * (-1.0 - 0.0 * 2.0) + 2.0 * (0.0 - 0.5 * 2.0);
        assert_relative_eq!(lu.determinant(), det, max_relative = 1e-14);
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(
            matches!(
                Lu::factor(&a, 2).map(|lu| lu.determinant()),
                Ok(d) if d == 0.0
            ) || Lu::factor(&a, 2).is_err()
        );
        let z = vec![0.0; 4];
        assert!(Lu::factor(&z, 2).is_err());
    }

    #[test]
    fn jacobi_matches_nalgebra() {
        let n = 5;
        let a: Vec<f64> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                ((i + j) as f64 * 0.7).sin() + if i == j { i as f64 } else { 0.0 }
            })
            .collect();
        let ours = symmetric_eigenvalues(&a, n).unwrap();
        let m = DMatrix::from_row_slice(n, n, &a);
        let mut theirs: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        theirs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (x, y) in ours.iter().zip(&theirs) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn general_eigenvalues_handles_repeated_spectrum() {
        // Mixed h tensor of a structured instance: eigenvalues with multiplicity 2 and 4.
        let col_major = vec![
            0.8120465411866925,
            -0.2695472076773426,
            -0.06556545853146781,
            -0.21683577358985653,
            0.06964836644403433,
            0.07969089506489838,
            0.2399034108071463,
            -0.20220008349294266,
            -0.034671733266448956,
            -0.1364925420175786,
            0.06977025955698032,
            0.214010150147172,
            0.2716411734459755,
            -0.12887113596780084,
            -0.10420849855335854,
            -0.12792065871531497,
            0.06154564608031318,
            0.17628561774515364,
            0.18091338456358166,
            -0.053247483343387046,
            -0.012859874274901994,
            -0.11251866297157201,
            0.01253335777117873,
            0.009748319263000625,
            -0.09559485196466294,
            0.062065712259216865,
            0.01661855964211554,
            0.06728789677060804,
            -0.10699278652945028,
            -0.11726608996962701,
            0.19462350314638016,
            -0.31742493643466796,
            -0.08915131216444339,
            -0.3915776730714623,
            0.2406913526631806,
            0.799348467775672,
        ];
        let a: Vec<f64> = (0..36).map(|k| col_major[(k % 6) * 6 + k / 6]).collect();
        let ev = general_eigenvalues(&a, 6).unwrap();
        let re: Vec<f64> = ev.iter().map(|e| e.0).collect();
        assert!(re[..4].iter().all(|x| (x + 0.07073597).abs() < 1e-6), "{re:?}");
        assert!(re[4..].iter().all(|x| (x - 0.68420942).abs() < 1e-6), "{re:?}");
        assert!(ev.iter().all(|e| e.1.abs() < 1e-6));
    }
}
