//! Complex l1-minimization by a primal-dual splitting method.
//!
//! Both recovery programs are instances of one problem,
//!
//! ```text
//! minimize ||z||_1  subject to  ||Psi z - b||_2 <= epsilon
//! ```
//!
//! over complex vectors, where `||z||_1` is the sum of moduli and
//! `epsilon = 0` gives equality-constrained basis pursuit. The solver is a
//! primal-dual hybrid gradient iteration: with steps `tau sigma L^2 < 1`
//! (`L` the operator norm of `Psi`),
//!
//! ```text
//! v   <- prox of the constraint conjugate at v + sigma Psi z_bar
//! z   <- complex soft threshold of z - tau Psi* v, at level tau
//! z_bar <- 2 z_new - z_old
//! ```
//!
//! The dual proximal step has the closed form `d max(0, 1 - sigma epsilon /
//! ||d||)` with `d = v + sigma Psi z_bar - sigma b`; at `epsilon = 0` it is
//! the plain translation. Each iteration needs one product with `Psi` and
//! one with its adjoint: the product with the extrapolated point is
//! recombined linearly from cached products, which also makes the
//! feasibility residual free.
//!
//! Everything is deterministic: zero initialization, a fixed-seed start
//! vector for the power iteration, and fixed summation order in every kernel
//! (the matrix is stored as separate real and imaginary planes, plus
//! transposed copies, so both products traverse memory contiguously with a
//! four-lane accumulator).

use ndarray::Array2;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::sensing::MeasurementEnsemble;

/// Errors from solver setup; non-convergence is reported in the result, not
/// as an error.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("measurement matrix is identically zero")]
    ZeroMatrix,
    #[error("right-hand side has {got} entries, matrix has {expected} rows")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("noise radius must be finite and nonnegative, got {0}")]
    InvalidEpsilon(f64),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

/// Iteration budget and stopping tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Hard cap on iterations; hitting it yields `converged = false`.
    pub max_iterations: usize,
    /// Allowed excess of `||Psi z - b||_2` over `epsilon` at convergence.
    pub feasibility_tolerance: f64,
    /// l2 change between successive iterates below which the primal variable
    /// counts as stationary.
    pub stall_tolerance: f64,
    /// Fraction of the step-size stability bound actually used;
    /// `tau = sigma = step_ratio / L`.
    pub step_ratio: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            feasibility_tolerance: 1e-9,
            stall_tolerance: 1e-10,
            step_ratio: 0.99,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<(), SolverError> {
        if self.max_iterations == 0 {
            return Err(SolverError::InvalidConfig(
                "max_iterations must be positive".into(),
            ));
        }
        for (name, value) in [
            ("feasibility_tolerance", self.feasibility_tolerance),
            ("stall_tolerance", self.stall_tolerance),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(SolverError::InvalidConfig(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if !(self.step_ratio > 0.0 && self.step_ratio < 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "step_ratio must lie in (0, 1), got {}",
                self.step_ratio
            )));
        }
        Ok(())
    }
}

/// Outcome of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub solution: Vec<Complex64>,
    pub iterations_used: usize,
    /// `max(0, ||Psi z - b||_2 - epsilon)` at the final iterate.
    pub final_feasibility_gap: f64,
    /// l1 norm (sum of moduli) of the solution.
    pub objective: f64,
    pub converged: bool,
}

/// Dot product with four independent accumulator lanes.
///
/// The lane split is part of the determinism contract (fixed summation
/// order) and gives the compiler independent chains to vectorize.
fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0_f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

/// Complex matrix stored as real/imaginary planes plus transposed copies, so
/// forward and adjoint products both read rows contiguously.
struct SplitMatrix {
    m: usize,
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    re_t: Vec<f64>,
    im_t: Vec<f64>,
}

impl SplitMatrix {
    fn from_array(a: &Array2<Complex64>) -> Self {
        let (m, n) = a.dim();
        let mut re = vec![0.0; m * n];
        let mut im = vec![0.0; m * n];
        let mut re_t = vec![0.0; m * n];
        let mut im_t = vec![0.0; m * n];
        for j in 0..m {
            for i in 0..n {
                let z = a[(j, i)];
                re[j * n + i] = z.re;
                im[j * n + i] = z.im;
                re_t[i * m + j] = z.re;
                im_t[i * m + j] = z.im;
            }
        }
        Self {
            m,
            n,
            re,
            im,
            re_t,
            im_t,
        }
    }

    fn is_zero(&self) -> bool {
        self.re.iter().all(|&x| x == 0.0) && self.im.iter().all(|&x| x == 0.0)
    }

    /// `out = A z`.
    fn forward(&self, z_re: &[f64], z_im: &[f64], out_re: &mut [f64], out_im: &mut [f64]) {
        let n = self.n;
        for j in 0..self.m {
            let row_re = &self.re[j * n..(j + 1) * n];
            let row_im = &self.im[j * n..(j + 1) * n];
            out_re[j] = dot4(row_re, z_re) - dot4(row_im, z_im);
            out_im[j] = dot4(row_re, z_im) + dot4(row_im, z_re);
        }
    }

    /// `out = A* v` (conjugate transpose).
    fn adjoint(&self, v_re: &[f64], v_im: &[f64], out_re: &mut [f64], out_im: &mut [f64]) {
        let m = self.m;
        for i in 0..self.n {
            let col_re = &self.re_t[i * m..(i + 1) * m];
            let col_im = &self.im_t[i * m..(i + 1) * m];
            out_re[i] = dot4(col_re, v_re) + dot4(col_im, v_im);
            out_im[i] = dot4(col_re, v_im) - dot4(col_im, v_re);
        }
    }
}

fn norm_squared(re: &[f64], im: &[f64]) -> f64 {
    dot4(re, re) + dot4(im, im)
}

fn operator_norm_split(mat: &SplitMatrix) -> Result<f64, SolverError> {
    if mat.is_zero() {
        return Err(SolverError::ZeroMatrix);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e3779b97f4a7c15);
    let mut draw = |len: usize| -> Vec<f64> {
        (0..len).map(|_| rng.sample(StandardNormal)).collect()
    };
    let mut z_re = draw(mat.n);
    let mut z_im = draw(mat.n);
    let scale = 1.0 / norm_squared(&z_re, &z_im).sqrt();
    z_re.iter_mut().chain(z_im.iter_mut()).for_each(|x| *x *= scale);

    let mut w_re = vec![0.0; mat.m];
    let mut w_im = vec![0.0; mat.m];
    let mut u_re = vec![0.0; mat.n];
    let mut u_im = vec![0.0; mat.n];
    let mut sigma_prev = 0.0;
    let mut sigma = 0.0;
    for iter in 0..10_000 {
        mat.forward(&z_re, &z_im, &mut w_re, &mut w_im);
        // Rayleigh quotient of Psi* Psi at the unit vector z.
        sigma = norm_squared(&w_re, &w_im).sqrt();
        if iter >= 2 && (sigma - sigma_prev).abs() <= 1e-6 * sigma {
            return Ok(sigma);
        }
        sigma_prev = sigma;
        mat.adjoint(&w_re, &w_im, &mut u_re, &mut u_im);
        let norm = norm_squared(&u_re, &u_im).sqrt();
        if norm == 0.0 {
            // The start vector landed in the null space; restart it.
            z_re = draw(mat.n);
            z_im = draw(mat.n);
            let scale = 1.0 / norm_squared(&z_re, &z_im).sqrt();
            z_re.iter_mut().chain(z_im.iter_mut()).for_each(|x| *x *= scale);
            continue;
        }
        let inv = 1.0 / norm;
        for i in 0..mat.n {
            z_re[i] = u_re[i] * inv;
            z_im[i] = u_im[i] * inv;
        }
    }
    Ok(sigma)
}

/// Largest singular value, by power iteration on `Psi* Psi` to relative
/// accuracy about 1e-6. The estimate approaches from below; step-size
/// computations inflate it slightly before use.
pub fn operator_norm(psi: &Array2<Complex64>) -> Result<f64, SolverError> {
    operator_norm_split(&SplitMatrix::from_array(psi))
}

fn soft_entry(re: f64, im: f64, tau: f64) -> (f64, f64) {
    let r = (re * re + im * im).sqrt();
    if r <= tau {
        (0.0, 0.0)
    } else {
        let scale = 1.0 - tau / r;
        (re * scale, im * scale)
    }
}

/// Proximal map of `tau ||.||_1` for complex vectors: each entry shrinks in
/// modulus by `tau` with its phase preserved, `z max(1 - tau/|z|, 0)`.
pub fn complex_soft_threshold(z: &[Complex64], tau: f64) -> Vec<Complex64> {
    assert!(tau >= 0.0, "threshold level must be nonnegative");
    z.iter()
        .map(|w| {
            let (re, im) = soft_entry(w.re, w.im, tau);
            Complex64::new(re, im)
        })
        .collect()
}

/// Minimizes `||z||_1` subject to `||Psi z - b||_2 <= epsilon`.
///
/// `epsilon = 0` is equality-constrained basis pursuit. Non-convergence
/// within the iteration budget is reported via `converged = false`, never as
/// an error; a converged result always satisfies the constraint up to
/// `feasibility_tolerance`.
pub fn solve_bpdn(
    psi: &Array2<Complex64>,
    b: &[Complex64],
    epsilon: f64,
    cfg: &SolverConfig,
) -> Result<SolverResult, SolverError> {
    cfg.validate()?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(SolverError::InvalidEpsilon(epsilon));
    }
    let (m, n) = psi.dim();
    if b.len() != m {
        return Err(SolverError::DimensionMismatch {
            expected: m,
            got: b.len(),
        });
    }
    let mat = SplitMatrix::from_array(psi);
    let norm = operator_norm_split(&mat)? * 1.0001;
    let tau = cfg.step_ratio / norm;
    let sigma = cfg.step_ratio / norm;

    let b_re: Vec<f64> = b.iter().map(|z| z.re).collect();
    let b_im: Vec<f64> = b.iter().map(|z| z.im).collect();

    // Primal iterate z, dual iterate v, cached products w = Psi z and
    // w_prev = Psi z_prev; the extrapolated product Psi (2 z - z_prev) is
    // recombined from the two.
    let mut z_re = vec![0.0; n];
    let mut z_im = vec![0.0; n];
    let mut v_re = vec![0.0; m];
    let mut v_im = vec![0.0; m];
    let mut w_re = vec![0.0; m];
    let mut w_im = vec![0.0; m];
    let mut w_prev_re = vec![0.0; m];
    let mut w_prev_im = vec![0.0; m];
    let mut atv_re = vec![0.0; n];
    let mut atv_im = vec![0.0; n];

    let mut iterations_used = cfg.max_iterations;
    let mut gap = {
        // Feasibility of the zero start: residual is ||b||.
        let r = norm_squared(&b_re, &b_im).sqrt();
        (r - epsilon).max(0.0)
    };
    let mut converged = false;

    for iter in 1..=cfg.max_iterations {
        // Dual step: v <- d max(0, 1 - sigma epsilon / ||d||) with
        // d = v + sigma Psi z_bar - sigma b.
        let mut d_norm_sq = 0.0;
        for j in 0..m {
            let zbar_re = 2.0 * w_re[j] - w_prev_re[j];
            let zbar_im = 2.0 * w_im[j] - w_prev_im[j];
            let dr = v_re[j] + sigma * zbar_re - sigma * b_re[j];
            let di = v_im[j] + sigma * zbar_im - sigma * b_im[j];
            v_re[j] = dr;
            v_im[j] = di;
            d_norm_sq += dr * dr + di * di;
        }
        if epsilon > 0.0 {
            let d_norm = d_norm_sq.sqrt();
            let scale = if d_norm > sigma * epsilon {
                1.0 - sigma * epsilon / d_norm
            } else {
                0.0
            };
            for j in 0..m {
                v_re[j] *= scale;
                v_im[j] *= scale;
            }
        }

        // Primal step: z <- soft(z - tau Psi* v, tau).
        mat.adjoint(&v_re, &v_im, &mut atv_re, &mut atv_im);
        let mut delta_sq = 0.0;
        for i in 0..n {
            let (new_re, new_im) =
                soft_entry(z_re[i] - tau * atv_re[i], z_im[i] - tau * atv_im[i], tau);
            let dr = new_re - z_re[i];
            let di = new_im - z_im[i];
            delta_sq += dr * dr + di * di;
            z_re[i] = new_re;
            z_im[i] = new_im;
        }

        std::mem::swap(&mut w_re, &mut w_prev_re);
        std::mem::swap(&mut w_im, &mut w_prev_im);
        mat.forward(&z_re, &z_im, &mut w_re, &mut w_im);

        let mut residual_sq = 0.0;
        for j in 0..m {
            let rr = w_re[j] - b_re[j];
            let ri = w_im[j] - b_im[j];
            residual_sq += rr * rr + ri * ri;
        }
        gap = (residual_sq.sqrt() - epsilon).max(0.0);

        if gap <= cfg.feasibility_tolerance && delta_sq.sqrt() <= cfg.stall_tolerance {
            iterations_used = iter;
            converged = true;
            break;
        }
    }

    let solution: Vec<Complex64> = z_re
        .iter()
        .zip(&z_im)
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect();
    let objective = solution
        .iter()
        .map(|z| (z.re * z.re + z.im * z.im).sqrt())
        .sum();
    Ok(SolverResult {
        solution,
        iterations_used,
        final_feasibility_gap: gap,
        objective,
        converged,
    })
}

/// Recovers coefficients from raw samples `y_j = g(x_j) + noise`.
///
/// Forms `b = (1/sqrt(m)) A y` and solves against the normalized system;
/// scaling both sides by `1/sqrt(m)` turns the constraint
/// `||A Phi z - A y||_2 <= sqrt(m) epsilon` into `||Psi z - b||_2 <=
/// epsilon`, so `epsilon_inf` is used directly: it is the natural radius
/// when each sample carries noise of modulus at most `epsilon_inf`.
pub fn recover(
    ensemble: &MeasurementEnsemble,
    y: &[Complex64],
    epsilon_inf: f64,
    cfg: &SolverConfig,
) -> Result<SolverResult, SolverError> {
    let m = ensemble.n_samples();
    if y.len() != m {
        return Err(SolverError::DimensionMismatch {
            expected: m,
            got: y.len(),
        });
    }
    let inv_sqrt_m = 1.0 / (m as f64).sqrt();
    let b: Vec<Complex64> = y
        .iter()
        .zip(ensemble.precond_diag())
        .map(|(yj, &aj)| (yj * aj) * inv_sqrt_m)
        .collect();
    solve_bpdn(ensemble.normalized(), &b, epsilon_inf, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    fn complex_identity(n: usize) -> Array2<Complex64> {
        Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j { Complex64::ONE } else { Complex64::ZERO }
        })
    }

    fn random_matrix(m: usize, n: usize, seed: u64) -> Array2<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((m, n), |_| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    #[test]
    fn soft_threshold_examples() {
        let out = complex_soft_threshold(&[Complex64::new(2.0, 0.0)], 1.0);
        assert_eq!(out, vec![Complex64::new(1.0, 0.0)]);
        let out = complex_soft_threshold(&[Complex64::new(0.0, 3.0)], 1.0);
        assert_abs_diff_eq!(out[0].im, 2.0, epsilon = 1e-15);
        assert_eq!(out[0].re, 0.0);
        let out = complex_soft_threshold(&[Complex64::new(0.5, 0.0)], 1.0);
        assert_eq!(out, vec![Complex64::ZERO]);
        let z = vec![Complex64::new(1.5, -2.5)];
        assert_eq!(complex_soft_threshold(&z, 0.0), z);
    }

    #[test]
    fn operator_norm_identity() {
        let norm = operator_norm(&complex_identity(4)).unwrap();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn operator_norm_diagonal() {
        let mut a = Array2::from_elem((3, 3), Complex64::ZERO);
        a[(0, 0)] = Complex64::new(3.0, 0.0);
        a[(1, 1)] = Complex64::new(1.0, 0.0);
        a[(2, 2)] = Complex64::new(0.5, 0.0);
        let norm = operator_norm(&a).unwrap();
        assert_abs_diff_eq!(norm, 3.0, epsilon = 1e-5);
    }

    #[test]
    fn operator_norm_rejects_zero() {
        let a = Array2::from_elem((2, 5), Complex64::ZERO);
        assert_eq!(operator_norm(&a), Err(SolverError::ZeroMatrix));
    }

    #[test]
    fn identity_equality_recovery() {
        let psi = complex_identity(4);
        let b = vec![
            Complex64::new(0.4, -1.0),
            Complex64::new(-0.3, 0.2),
            Complex64::new(2.0, 1.0),
            Complex64::new(0.0, -0.7),
        ];
        let result = solve_bpdn(&psi, &b, 0.0, &SolverConfig::default()).unwrap();
        assert!(result.converged);
        for (zi, bi) in result.solution.iter().zip(&b) {
            assert!((zi - bi).norm() <= 1e-6);
        }
    }

    #[test]
    fn large_epsilon_gives_zero() {
        let psi = complex_identity(3);
        let b = vec![
            Complex64::new(0.3, 0.0),
            Complex64::new(0.0, 0.4),
            Complex64::new(-0.1, 0.1),
        ];
        let norm_b = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let result = solve_bpdn(&psi, &b, norm_b + 0.01, &SolverConfig::default()).unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations_used, 1);
        assert!(result.solution.iter().all(|z| z.norm() == 0.0));
        assert_eq!(result.objective, 0.0);
    }

    #[test]
    fn feasibility_and_sanity_on_random_instance() {
        let psi = random_matrix(6, 12, 3).mapv(|z| z / 3.0);
        let mut truth = [Complex64::ZERO; 12];
        truth[2] = Complex64::new(1.0, -0.5);
        truth[9] = Complex64::new(-0.3, 0.8);
        let b: Vec<Complex64> = (0..6)
            .map(|j| (0..12).map(|i| psi[(j, i)] * truth[i]).sum())
            .collect();
        for epsilon in [0.0, 1e-3] {
            let result = solve_bpdn(&psi, &b, epsilon, &SolverConfig::default()).unwrap();
            assert!(result.converged);
            assert!(result.final_feasibility_gap <= 1e-9);
            let truth_l1: f64 = truth.iter().map(|z| z.norm()).sum();
            assert!(
                result.objective <= truth_l1 + 1e-6,
                "objective {} exceeds the feasible truth {}",
                result.objective,
                truth_l1
            );
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let psi = random_matrix(5, 10, 8);
        let b: Vec<Complex64> = (0..5).map(|j| psi[(j, 0)] + psi[(j, 3)]).collect();
        let r1 = solve_bpdn(&psi, &b, 1e-4, &SolverConfig::default()).unwrap();
        let r2 = solve_bpdn(&psi, &b, 1e-4, &SolverConfig::default()).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn scaling_covariance() {
        let psi = random_matrix(6, 12, 21).mapv(|z| z / 2.0);
        let mut truth = [Complex64::ZERO; 12];
        truth[4] = Complex64::new(0.9, 0.2);
        let b: Vec<Complex64> = (0..6)
            .map(|j| (0..12).map(|i| psi[(j, i)] * truth[i]).sum())
            .collect();
        let base = solve_bpdn(&psi, &b, 0.0, &SolverConfig::default()).unwrap();
        assert!(base.converged);
        for c in [0.5, 2.0] {
            let psi_c = psi.mapv(|z| z * c);
            let b_c: Vec<Complex64> = b.iter().map(|z| z * c).collect();
            let scaled = solve_bpdn(&psi_c, &b_c, 0.0, &SolverConfig::default()).unwrap();
            assert!(scaled.converged);
            for (a, s) in base.solution.iter().zip(&scaled.solution) {
                assert!((a - s).norm() <= 1e-6, "c = {c}: {a} vs {s}");
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let psi = complex_identity(3);
        let b = vec![Complex64::ONE; 4];
        assert!(matches!(
            solve_bpdn(&psi, &b, 0.0, &SolverConfig::default()),
            Err(SolverError::DimensionMismatch { expected: 3, got: 4 })
        ));
    }

    #[test]
    fn invalid_config_rejected() {
        let psi = complex_identity(2);
        let b = vec![Complex64::ONE; 2];
        let bad = SolverConfig {
            step_ratio: 1.5,
            ..SolverConfig::default()
        };
        assert!(matches!(
            solve_bpdn(&psi, &b, 0.0, &bad),
            Err(SolverError::InvalidConfig(_))
        ));
        assert!(matches!(
            solve_bpdn(&psi, &b, -0.1, &SolverConfig::default()),
            Err(SolverError::InvalidEpsilon(_))
        ));
    }

    #[test]
    fn recover_zero_samples_gives_zero() {
        let samples = crate::sensing::sample_points(8, crate::sensing::MeasureTag::Product, 3)
            .unwrap();
        let ensemble = crate::sensing::build_ensemble(2, &samples);
        let y = vec![Complex64::ZERO; 8];
        let result = recover(&ensemble, &y, 0.0, &SolverConfig::default()).unwrap();
        assert!(result.converged);
        assert!(result.solution.iter().all(|z| z.norm() == 0.0));
    }
}
