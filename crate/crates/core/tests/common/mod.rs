//! Helpers shared by the integration test suites.

#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Standard complex Gaussian: independent real and imaginary parts.
pub fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// A one-sparse candidate solution of `psi z = b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSparseFit {
    pub index: usize,
    pub coefficient: Complex64,
}

/// Exhaustive one-sparse reference solver: least squares on every single
/// column, keeping the feasible fit of smallest modulus.
///
/// Feasible means the residual is below `1e-8 ||b||`. Panics when no column
/// reproduces `b`, which cannot happen for `b` built from one column.
pub fn one_sparse_ls(psi: &Array2<Complex64>, b: &[Complex64]) -> OneSparseFit {
    let (m, n) = (psi.nrows(), psi.ncols());
    assert_eq!(m, b.len());
    let norm_b: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut best: Option<OneSparseFit> = None;
    for j in 0..n {
        let col: Vec<Complex64> = (0..m).map(|r| psi[(r, j)]).collect();
        let norm_sqr: f64 = col.iter().map(|z| z.norm_sqr()).sum();
        let inner: Complex64 = col.iter().zip(b).map(|(c, y)| c.conj() * y).sum();
        let a = inner / norm_sqr;
        let residual: f64 = col
            .iter()
            .zip(b)
            .map(|(c, y)| (y - a * c).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual <= 1e-8 * norm_b {
            let better = best.is_none_or(|f| a.norm() < f.coefficient.norm());
            if better {
                best = Some(OneSparseFit {
                    index: j,
                    coefficient: a,
                });
            }
        }
    }
    best.expect("no single column reproduces the right-hand side")
}

/// Largest entry of `|z - target|` where `target` is `coefficient` at
/// `index` and zero elsewhere.
pub fn linf_gap_to_one_sparse(z: &[Complex64], fit: OneSparseFit) -> f64 {
    z.iter()
        .enumerate()
        .map(|(i, &v)| {
            let t = if i == fit.index {
                fit.coefficient
            } else {
                Complex64::ZERO
            };
            (v - t).norm()
        })
        .fold(0.0, f64::max)
}
