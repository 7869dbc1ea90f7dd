//! Independent reference computations for the numerically delicate results.
//!
//! Every oracle here rebuilds its answer from scratch by a different method
//! than the library uses: Gram-Schmidt instead of a recurrence, closed-form
//! eigenvalues instead of iteration, plane-rotation SVD instead of power
//! iteration, exhaustive enumeration instead of a selection argument.

mod common;

use ndarray::Array2;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use sphrec::l1solve::{SolverConfig, operator_norm, solve_bpdn};
use sphrec::orthopoly::{
    JacobiParameter, QuadratureRule, RecurrenceTable, default_composite_rule, gauss_legendre_rule,
};
use sphrec::ripcheck::restricted_isometry_constant;
use sphrec::spherical::best_s_term_error;

/// Orthonormalizes the span of the Chebyshev value vectors `T_0, ..., T_n`
/// under the discrete inner product `<f, g> = sum_j w_j (1 - x_j^2)^alpha
/// f(x_j) g(x_j)`, which reproduces the continuous one exactly up to the
/// rule's degree. Chebyshev input vectors keep the change of basis well
/// conditioned where raw monomials would lose digits by degree 15.
///
/// Modified Gram-Schmidt with one reorthogonalization pass; signs are fixed
/// so each vector is positive at the largest node, which lies to the right
/// of every root.
fn gram_schmidt_polynomials(alpha: f64, max_degree: usize, rule: &QuadratureRule) -> Vec<Vec<f64>> {
    let nodes = rule.nodes();
    let weights: Vec<f64> = rule
        .weights()
        .iter()
        .zip(nodes)
        .map(|(&w, &x)| w * (1.0 - x * x).powf(alpha))
        .collect();
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .zip(&weights)
            .map(|((&ai, &bi), &wi)| wi * ai * bi)
            .sum()
    };
    let largest = nodes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("rule has nodes")
        .0;

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_degree + 1);
    for degree in 0..=max_degree {
        let mut v: Vec<f64> = nodes
            .iter()
            .map(|&x| (degree as f64 * x.acos()).cos())
            .collect();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&v, q);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        assert!(norm > 1e-12, "degree {degree} collapsed");
        let sign = if v[largest] < 0.0 { -1.0 } else { 1.0 };
        for vi in &mut v {
            *vi *= sign / norm;
        }
        basis.push(v);
    }
    basis
}

fn recurrence_vs_gram_schmidt(alpha: f64, rule: &QuadratureRule) -> f64 {
    let max_degree = 15;
    let oracle = gram_schmidt_polynomials(alpha, max_degree, rule);
    let table = RecurrenceTable::build(JacobiParameter::new(alpha).unwrap(), max_degree).unwrap();
    let mut worst: f64 = 0.0;
    for (j, &x) in rule.nodes().iter().enumerate() {
        let values = table.eval_all(x).unwrap();
        for n in 0..=max_degree {
            worst = worst.max((values[n] - oracle[n][j]).abs());
        }
    }
    worst
}

#[test]
fn recurrence_matches_gram_schmidt_oracle() {
    let gauss = gauss_legendre_rule(128).unwrap();
    assert!(recurrence_vs_gram_schmidt(0.0, &gauss) < 1e-8);
    assert!(recurrence_vs_gram_schmidt(2.0, &gauss) < 1e-8);
    let composite = default_composite_rule();
    assert!(recurrence_vs_gram_schmidt(0.5, &composite) < 1e-8);
}

#[test]
fn gram_schmidt_oracle_reproduces_legendre_closed_forms() {
    let rule = gauss_legendre_rule(64).unwrap();
    let oracle = gram_schmidt_polynomials(0.0, 1, &rule);
    let p0 = 0.5_f64.sqrt();
    for &v in &oracle[0] {
        assert!((v - p0).abs() < 1e-12);
    }
    let slope = 1.5_f64.sqrt();
    for (j, &x) in rule.nodes().iter().enumerate() {
        assert!((oracle[1][j] - slope * x).abs() < 1e-12);
    }
}

#[test]
fn chebyshev_values_are_cosines() {
    let table = RecurrenceTable::build(JacobiParameter::new(-0.5).unwrap(), 3).unwrap();
    let at_one = table.eval_all(1.0).unwrap();
    for t in [0.0, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2] {
        let values = table.eval_all(t.cos()).unwrap();
        for n in 0..=3 {
            let expected = (n as f64 * t).cos();
            assert!((values[n] / at_one[n] - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn rip_matches_closed_form_two_by_two_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let (m, n) = (8, 12);
    let mut psi = Array2::from_shape_fn((m, n), |_| common::complex_gaussian(&mut rng));
    for j in 0..n {
        let norm: f64 = (0..m).map(|r| psi[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..m {
            psi[(r, j)] /= norm;
        }
    }

    let mut oracle: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let gii: f64 = (0..m).map(|r| psi[(r, i)].norm_sqr()).sum();
            let gjj: f64 = (0..m).map(|r| psi[(r, j)].norm_sqr()).sum();
            let gij: Complex64 = (0..m).map(|r| psi[(r, i)].conj() * psi[(r, j)]).sum();
            let half_trace = 0.5 * (gii + gjj);
            let radius = (0.25 * (gii - gjj).powi(2) + gij.norm_sqr()).sqrt();
            oracle = oracle
                .max((half_trace + radius - 1.0).abs())
                .max((half_trace - radius - 1.0).abs());
        }
    }

    let estimate = restricted_isometry_constant(&psi, 2).unwrap();
    assert!(
        (estimate.delta - oracle).abs() < 1e-12,
        "library {} vs oracle {}",
        estimate.delta,
        oracle
    );
}

/// Largest singular value by one-sided Jacobi: plane rotations orthogonalize
/// the columns, whose norms then converge to the singular values. Works on
/// whichever orientation has fewer columns; the spectrum is shared.
fn largest_singular_value_jacobi(a: &Array2<Complex64>) -> f64 {
    let (rows, cols) = (a.nrows(), a.ncols());
    let mut columns: Vec<Vec<Complex64>> = if cols <= rows {
        (0..cols)
            .map(|j| (0..rows).map(|r| a[(r, j)]).collect())
            .collect()
    } else {
        (0..rows)
            .map(|i| (0..cols).map(|c| a[(i, c)].conj()).collect())
            .collect()
    };
    let n = columns.len();

    for _sweep in 0..60 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                let x: f64 = columns[p].iter().map(|z| z.norm_sqr()).sum();
                let y: f64 = columns[q].iter().map(|z| z.norm_sqr()).sum();
                let z: Complex64 = columns[p]
                    .iter()
                    .zip(&columns[q])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let scale = (x * y).sqrt();
                if z.norm() <= 1e-14 * scale {
                    continue;
                }
                off = off.max(z.norm() / scale);

                // Align the pair's cross term to a nonnegative real, then
                // rotate by the small-angle root of |z| t^2 - (x - y) t - |z|.
                let phase = Complex64::from_polar(1.0, -z.arg());
                let d = x - y;
                let t = if d == 0.0 {
                    1.0
                } else {
                    -d.signum() * 2.0 * z.norm() / (d.abs() + (d * d + 4.0 * z.norm_sqr()).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..columns[p].len() {
                    let vp = columns[p][r];
                    let vq = columns[q][r] * phase;
                    columns[p][r] = c * vp - s * vq;
                    columns[q][r] = s * vp + c * vq;
                }
            }
        }
        if off < 1e-13 {
            break;
        }
    }

    columns
        .iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

#[test]
fn operator_norm_matches_jacobi_svd_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4321);
    let a = Array2::from_shape_fn((8, 16), |_| common::complex_gaussian(&mut rng));
    let oracle = largest_singular_value_jacobi(&a);
    let library = operator_norm(&a).unwrap();
    assert!(
        (library - oracle).abs() <= 1e-5 * oracle,
        "library {library} vs oracle {oracle}"
    );

    let tall = Array2::from_shape_fn((16, 8), |_| common::complex_gaussian(&mut rng));
    let oracle = largest_singular_value_jacobi(&tall);
    let library = operator_norm(&tall).unwrap();
    assert!((library - oracle).abs() <= 1e-5 * oracle);
}

#[test]
fn best_s_term_error_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let z: Vec<Complex64> = (0..8).map(|_| common::complex_gaussian(&mut rng)).collect();

    let mut oracle = f64::INFINITY;
    for i in 0..8 {
        for j in (i + 1)..8 {
            for k in (j + 1)..8 {
                let kept = [i, j, k];
                let off: f64 = z
                    .iter()
                    .enumerate()
                    .filter(|(idx, _)| !kept.contains(idx))
                    .map(|(_, v)| v.norm())
                    .sum();
                oracle = oracle.min(off);
            }
        }
    }

    let library = best_s_term_error(&z, 3).unwrap();
    assert!((library - oracle).abs() < 1e-12);

    let l1: f64 = z.iter().map(|v| v.norm()).sum();
    assert!((best_s_term_error(&z, 0).unwrap() - l1).abs() < 1e-12);
    assert_eq!(best_s_term_error(&z, 8).unwrap(), 0.0);
}

#[test]
fn bpdn_matches_one_sparse_least_squares_oracle() {
    let (m, n) = (6, 10);
    for instance in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7700 + instance);
        let psi = Array2::from_shape_fn((m, n), |_| common::complex_gaussian(&mut rng));
        let j_true = rng.random_range(0..n);
        let c_true = common::complex_gaussian(&mut rng);
        let b: Vec<Complex64> = (0..m).map(|r| psi[(r, j_true)] * c_true).collect();

        let fit = common::one_sparse_ls(&psi, &b);
        assert_eq!(fit.index, j_true);

        let result = solve_bpdn(&psi, &b, 0.0, &SolverConfig::default()).unwrap();
        assert!(result.converged);
        let gap = common::linf_gap_to_one_sparse(&result.solution, fit);
        assert!(gap <= 1e-6, "instance {instance}: gap {gap:.3e}");
    }
}
