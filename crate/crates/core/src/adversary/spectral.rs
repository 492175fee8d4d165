use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Iteration cap of [`spectral_norm`].
pub const MAX_ITERATIONS: usize = 1_000_000;

/// Seed of the random start vector unless another is given.
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    /// `1/(k+ℓ−1)` everywhere.
    Hilbert,
    /// `1/(k+ℓ−1)` when `k+ℓ ≤ n+1`, else 0.
    Truncated,
}

/// An `n × n` section of the Hilbert matrix, indexed from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralMatrix {
    pub n: usize,
    pub kind: MatrixKind,
}

/// `1/(k+ℓ−1)`.
pub fn hilbert_entry(k: usize, l: usize) -> BigRational {
    assert!(k >= 1 && l >= 1, "indices start at 1");
    BigRational::new(BigInt::one(), BigInt::from(k + l - 1))
}

/// The truncated section `B_n`.
pub fn b_matrix(n: usize) -> SpectralMatrix {
    SpectralMatrix {
        n,
        kind: MatrixKind::Truncated,
    }
}

pub fn hilbert_matrix(n: usize) -> SpectralMatrix {
    SpectralMatrix {
        n,
        kind: MatrixKind::Hilbert,
    }
}

impl SpectralMatrix {
    fn inside(&self, k: usize, l: usize) -> bool {
        self.kind == MatrixKind::Hilbert || k + l <= self.n + 1
    }

    pub fn entry_exact(&self, k: usize, l: usize) -> BigRational {
        if self.inside(k, l) {
            hilbert_entry(k, l)
        } else {
            BigRational::zero()
        }
    }

    pub fn entry(&self, k: usize, l: usize) -> f64 {
        if self.inside(k, l) {
            1.0 / (k + l - 1) as f64
        } else {
            0.0
        }
    }

    /// Row-major entries.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.n;
        (0..n * n)
            .map(|i| self.entry(i / n + 1, i % n + 1))
            .collect()
    }
}

fn mul(a: &[f64], n: usize, v: &[f64], transpose: bool) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..n)
            .map(|j| if transpose { a[j * n + i] } else { a[i * n + j] } * v[j])
            .sum();
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest singular value by power iteration on `MᵀM` from a seeded random
/// unit vector; stops when successive estimates `‖Mv‖` differ by less than
/// `tol`.
pub fn spectral_norm_seeded(m: &SpectralMatrix, tol: f64, seed: u64) -> Result<f64> {
    if m.n == 0 {
        return Err(Error::Range("matrix dimension must be positive".into()));
    }
    if tol <= 0.0 || tol.is_nan() {
        return Err(Error::Range(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n = m.n;
    let a = m.dense();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Positive start: the dominant singular vector of a nonnegative matrix
    // has nonnegative entries, so this start is never orthogonal to it.
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let len = norm(&v);
    v.iter_mut().for_each(|x| *x /= len);

    let mut estimate = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let w = mul(&a, n, &v, false);
        let next = norm(&w);
        let u = mul(&a, n, &w, true);
        let len = norm(&u);
        if len == 0.0 {
            return Ok(0.0);
        }
        v = u.into_iter().map(|x| x / len).collect();
        if (next - estimate).abs() < tol {
            return Ok(next);
        }
        estimate = next;
    }
    let w = mul(&a, n, &v, false);
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual: (norm(&w) - estimate).abs(),
    })
}

pub fn spectral_norm(m: &SpectralMatrix, tol: f64) -> Result<f64> {
    spectral_norm_seeded(m, tol, DEFAULT_SEED)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn entries() {
        let b2 = b_matrix(2);
        assert_eq!(b2.entry_exact(1, 1), hilbert_entry(1, 1));
        assert_eq!(b2.dense(), vec![1.0, 0.5, 0.5, 0.0]);
        let b3 = b_matrix(3);
        assert_eq!(
            (1..=3).map(|l| b3.entry_exact(1, l)).collect::<Vec<_>>(),
            vec![
                hilbert_entry(1, 1),
                hilbert_entry(1, 2),
                hilbert_entry(1, 3)
            ]
        );
        assert_eq!(
            (1..=3).map(|l| b3.entry(3, l)).collect::<Vec<_>>(),
            vec![1.0 / 3.0, 0.0, 0.0]
        );
    }

    #[test]
    fn small_norms() {
        assert_abs_diff_eq!(
            spectral_norm(&b_matrix(1), 1e-14).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let want = (1.0 + 2f64.sqrt()) / 2.0;
        assert_abs_diff_eq!(
            spectral_norm(&b_matrix(2), 1e-14).unwrap(),
            want,
            epsilon = 1e-10
        );
        assert!(spectral_norm(&b_matrix(2), 0.0).is_err());
    }
}
