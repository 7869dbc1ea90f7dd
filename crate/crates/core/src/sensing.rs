//! Random sampling of the sphere and the measurement matrices built on it.
//!
//! Two sampling measures are supported on `B = [0, pi] x [0, 2pi)`:
//!
//! * `product`: `phi` uniform on `[0, pi]`, `theta` uniform on `[0, 2pi)`,
//!   that is, the normalized flat measure `dphi dtheta / (2 pi^2)`;
//! * `surface`: `cos phi` uniform on `[-1, 1]`, `theta` uniform, the
//!   normalized area measure `sin phi dphi dtheta / (4 pi)`.
//!
//! From `m` sample points the ensemble assembles the `m x N` matrix
//! `Phi_(j,i) = Y_i(phi_j, theta_j)`, the preconditioner
//! `A = diag((sin phi_j)^(1/2))`, and the normalized system
//! `Psi = (1/sqrt(m)) A Phi`, whose rows are the preconditioned harmonics
//! `Q_i` scaled by `1/sqrt(m)`.
//!
//! Under product sampling `E[2 pi^2 Psi* Psi] = I`: the functions
//! `sqrt(2 pi^2) Q_i` form an orthonormal system, bounded uniformly in `N` up
//! to the `N^(1/8)` growth of the `Q` sup-norms, with respect to the sampling
//! probability measure. [`MeasurementEnsemble::bos_matrix`] applies exactly
//! that scaling, and the Monte Carlo checks in this module verify the
//! identity limit empirically.
//!
//! Randomness is counter-based: point `j` of a draw reads stream `j` of a
//! ChaCha generator keyed by the seed, so a sample set is bit-reproducible
//! and independent of evaluation order.

use ndarray::Array2;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::spherical::{HarmonicBasis, SpherePoint, sin_from_cos};

/// Errors from sample-set construction.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensingError {
    #[error("sample set needs at least one point")]
    EmptySampleSet,
}

/// Which probability measure the points are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureTag {
    /// `dphi dtheta / (2 pi^2)`: uniform in the coordinate rectangle.
    Product,
    /// `sin phi dphi dtheta / (4 pi)`: uniform in surface area.
    Surface,
}

impl MeasureTag {
    /// Total coordinate-space mass of the unnormalized measure: `2 pi^2` for
    /// `dphi dtheta`, `4 pi` for `sin phi dphi dtheta`.
    pub fn mass(self) -> f64 {
        match self {
            MeasureTag::Product => 2.0 * std::f64::consts::PI * std::f64::consts::PI,
            MeasureTag::Surface => 4.0 * std::f64::consts::PI,
        }
    }
}

impl std::fmt::Display for MeasureTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MeasureTag::Product => "product",
            MeasureTag::Surface => "surface",
        })
    }
}

impl std::str::FromStr for MeasureTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "product" => Ok(MeasureTag::Product),
            "surface" => Ok(MeasureTag::Surface),
            other => Err(format!("unknown measure {other:?}; use product or surface")),
        }
    }
}

/// `m` sample points plus the recipe (measure, seed) that generated them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<SpherePoint>,
    measure_tag: MeasureTag,
    seed: u64,
}

/// Draws `m` points from the chosen measure.
///
/// Point `j` consumes only stream `j` of the seeded generator, so the draw
/// is bit-reproducible and any prefix of a larger draw coincides with the
/// smaller one.
pub fn sample_points(
    m: usize,
    measure_tag: MeasureTag,
    seed: u64,
) -> Result<SampleSet, SensingError> {
    if m == 0 {
        return Err(SensingError::EmptySampleSet);
    }
    let points = (0..m)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            let phi = match measure_tag {
                MeasureTag::Product => u * std::f64::consts::PI,
                MeasureTag::Surface => (2.0 * u - 1.0).acos(),
            };
            let theta = v * 2.0 * std::f64::consts::PI;
            SpherePoint::new(phi, theta).expect("draws land inside B")
        })
        .collect();
    Ok(SampleSet {
        points,
        measure_tag,
        seed,
    })
}

impl SampleSet {
    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn measure_tag(&self) -> MeasureTag {
        self.measure_tag
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Serializes as CSV with header `phi,theta`, one row per point, full
    /// shortest-round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phi,theta\n");
        for p in &self.points {
            out.push_str(&format!("{},{}\n", p.phi(), p.theta()));
        }
        out
    }
}

/// The sampling matrix, its preconditioner, and the normalized system for a
/// fixed degree bound.
#[derive(Debug, Clone)]
pub struct MeasurementEnsemble {
    degree_bound: usize,
    measure_tag: MeasureTag,
    phi_matrix: Array2<Complex64>,
    precond_diag: Vec<f64>,
    normalized: Array2<Complex64>,
}

/// Evaluates the harmonics at every sample point.
///
/// Row `j` of `phi_matrix` holds `Y_i(x_j)` in linear-index order; the
/// normalized system is `Psi = (1/sqrt(m)) diag((sin phi_j)^(1/2)) Phi`,
/// whose entries are the preconditioned harmonics `Q_i(x_j) / sqrt(m)`.
pub fn build_ensemble(degree_bound: usize, samples: &SampleSet) -> MeasurementEnsemble {
    assert!(degree_bound >= 1, "degree bound must be at least 1");
    let basis = HarmonicBasis::new(degree_bound).expect("degree bound checked");
    let n = basis.dimension();
    let m = samples.len();
    let inv_sqrt_m = 1.0 / (m as f64).sqrt();
    let mut phi_entries = Vec::with_capacity(m * n);
    let mut psi_entries = Vec::with_capacity(m * n);
    let mut precond_diag = Vec::with_capacity(m);
    for p in samples.points() {
        phi_entries.extend(basis.eval_y_all(*p));
        psi_entries.extend(basis.eval_q_all(*p).into_iter().map(|q| q * inv_sqrt_m));
        precond_diag.push(sin_from_cos(p.phi().cos()).sqrt());
    }
    let phi_matrix = Array2::from_shape_vec((m, n), phi_entries).expect("m*n entries");
    let normalized = Array2::from_shape_vec((m, n), psi_entries).expect("m*n entries");
    MeasurementEnsemble {
        degree_bound,
        measure_tag: samples.measure_tag(),
        phi_matrix,
        precond_diag,
        normalized,
    }
}

impl MeasurementEnsemble {
    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    /// Number of basis functions, `N = D^2`.
    pub fn dimension(&self) -> usize {
        self.degree_bound * self.degree_bound
    }

    /// Number of sample points (rows).
    pub fn n_samples(&self) -> usize {
        self.phi_matrix.nrows()
    }

    pub fn measure_tag(&self) -> MeasureTag {
        self.measure_tag
    }

    /// The raw sampling matrix `Phi_(j,i) = Y_i(x_j)`.
    pub fn phi_matrix(&self) -> &Array2<Complex64> {
        &self.phi_matrix
    }

    /// Diagonal of the preconditioner, `(sin phi_j)^(1/2)`, entries in `[0, 1]`.
    pub fn precond_diag(&self) -> &[f64] {
        &self.precond_diag
    }

    /// The normalized system `Psi = (1/sqrt(m)) A Phi` used by the solver.
    pub fn normalized(&self) -> &Array2<Complex64> {
        &self.normalized
    }

    /// The sampled orthonormal system whose expected Gram matrix is exactly
    /// the identity, suitable for restricted isometry analysis.
    ///
    /// Under product sampling the functions `sqrt(2 pi^2) Q_i` are
    /// orthonormal with respect to the sampling probability measure, so this
    /// is `sqrt(2 pi^2) Psi`. Under surface sampling the harmonics
    /// themselves are orthonormal (no preconditioning), giving
    /// `sqrt(4 pi) (1/sqrt(m)) Phi`.
    pub fn bos_matrix(&self) -> Array2<Complex64> {
        let scale = self.measure_tag.mass().sqrt();
        match self.measure_tag {
            MeasureTag::Product => self.normalized.mapv(|z| z * scale),
            MeasureTag::Surface => {
                let inv_sqrt_m = 1.0 / (self.n_samples() as f64).sqrt();
                self.phi_matrix.mapv(|z| z * (scale * inv_sqrt_m))
            }
        }
    }
}

/// Accumulates `mass / m * sum_j conj(row_j) row_j^T` and returns the max
/// entry deviation from the identity. Rows stream one at a time so large `m`
/// never materializes an `m x N` matrix.
fn streamed_gram_deviation(
    n: usize,
    mass: f64,
    m: usize,
    rows: impl Iterator<Item = Vec<Complex64>>,
) -> f64 {
    let mut gram = vec![Complex64::ZERO; n * n];
    for row in rows {
        for i in 0..n {
            let ci = row[i].conj();
            for j in i..n {
                gram[i * n + j] += ci * row[j];
            }
        }
    }
    let scale = mass / m as f64;
    let mut deviation: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let target = if i == j { 1.0 } else { 0.0 };
            deviation = deviation.max((gram[i * n + j] * scale - target).norm());
        }
    }
    deviation
}

/// Monte Carlo check that the preconditioned product-measure system has the
/// identity as its expected Gram matrix.
///
/// Draws `m` product-measure points with the given seed and returns
/// `max |2 pi^2 (Psi* Psi)_(i,i') - delta_(i,i')|`, accumulated streamed as
/// `(2 pi^2 / m) sum_j conj(Q_i(x_j)) Q_(i')(x_j)`. By the law of large
/// numbers the deviation decays like `m^(-1/2)`.
pub fn expected_gram_check(degree_bound: usize, m: usize, seed: u64) -> f64 {
    assert!(degree_bound >= 1 && m >= 1);
    let basis = HarmonicBasis::new(degree_bound).expect("degree bound checked");
    let samples = sample_points(m, MeasureTag::Product, seed).expect("m >= 1");
    streamed_gram_deviation(
        basis.dimension(),
        MeasureTag::Product.mass(),
        m,
        samples.points().iter().map(|p| basis.eval_q_all(*p)),
    )
}

/// Same Monte Carlo Gram check for the raw, unpreconditioned harmonics.
///
/// The scaled Gram `(mass / m) Phi* Phi` converges to the identity under
/// surface sampling, where the harmonics are orthonormal, and does not
/// converge to any identity under product sampling; the returned deviation
/// stays bounded away from zero there no matter how large `m` is.
pub fn raw_gram_deviation(degree_bound: usize, m: usize, tag: MeasureTag, seed: u64) -> f64 {
    assert!(degree_bound >= 1 && m >= 1);
    let basis = HarmonicBasis::new(degree_bound).expect("degree bound checked");
    let samples = sample_points(m, tag, seed).expect("m >= 1");
    streamed_gram_deviation(
        basis.dimension(),
        tag.mass(),
        m,
        samples.points().iter().map(|p| basis.eval_y_all(*p)),
    )
}
