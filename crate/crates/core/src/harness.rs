//! Reproducible recovery experiments: single trials, phase diagrams, noise
//! sweeps, bound verification, and file export.
//!
//! A trial draws a random `s`-sparse coefficient vector (uniform support,
//! i.i.d. complex Gaussian values), samples the sphere under the chosen
//! measure, synthesizes the (optionally noisy) samples, runs l1 recovery,
//! and scores the relative l2 coefficient error against a success tolerance.
//!
//! Every random object is keyed by mixing a label into the base seed with a
//! splitmix64 chain, so a trial is a pure function of its spec: phase-diagram
//! cells are seeded by their `(s, m)` values rather than their grid
//! position, which makes any sub-grid reproduce the full grid's cells
//! exactly, and noise directions depend only on the trial seed, so sweeping
//! the noise radius rescales the very same noise realization.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::l1solve::{SolverConfig, SolverError, recover};
use crate::orthopoly::{
    JacobiParameter, RecurrenceTable, default_composite_rule, check_orthonormality,
    gauss_legendre_rule, weighted_sup_all, weighted_sup_table,
};
use crate::sensing::{MeasureTag, SensingError, build_ensemble, sample_points};
use crate::spherical::{
    CoefficientVector, gram_deviation_q, growth_exponent_fit, q_sup_per_degree,
};

/// Errors from experiment setup and propagated numeric failures.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid trial parameters: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Sensing(#[from] SensingError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Everything that determines one recovery trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSpec {
    pub degree_bound: usize,
    pub sparsity: usize,
    pub n_samples: usize,
    pub measure_tag: MeasureTag,
    pub noise_level: f64,
    pub seed: u64,
    /// Relative l2 error below which the trial counts as a success.
    pub success_tolerance: f64,
}

impl TrialSpec {
    /// Spec with the default success tolerance of 1e-4.
    pub fn new(
        degree_bound: usize,
        sparsity: usize,
        n_samples: usize,
        measure_tag: MeasureTag,
        noise_level: f64,
        seed: u64,
    ) -> Self {
        Self {
            degree_bound,
            sparsity,
            n_samples,
            measure_tag,
            noise_level,
            seed,
            success_tolerance: 1e-4,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let n = self.degree_bound * self.degree_bound;
        if self.degree_bound == 0 {
            return Err(HarnessError::InvalidSpec("degree bound must be >= 1".into()));
        }
        if self.sparsity > n {
            return Err(HarnessError::InvalidSpec(format!(
                "sparsity {} exceeds dimension {n}",
                self.sparsity
            )));
        }
        if self.n_samples == 0 {
            return Err(HarnessError::InvalidSpec("need at least one sample".into()));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return Err(HarnessError::InvalidSpec(format!(
                "noise level must be finite and nonnegative, got {}",
                self.noise_level
            )));
        }
        if !(self.success_tolerance > 0.0 && self.success_tolerance.is_finite()) {
            return Err(HarnessError::InvalidSpec(
                "success tolerance must be positive and finite".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub spec: TrialSpec,
    /// `||c - recovered||_2 / ||c||_2`; absolute error when `s = 0`.
    pub relative_error: f64,
    pub success: bool,
    pub solver_iterations: usize,
    pub wall_time: Duration,
}

/// Success frequencies over an `(s, m)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagramResult {
    pub s_values: Vec<usize>,
    pub m_values: Vec<usize>,
    /// Row-major over `s` (outer) and `m` (inner); see [`Self::frequency`].
    pub frequencies: Vec<f64>,
    pub n_trials: usize,
    pub measure_tag: MeasureTag,
    pub base_seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Mixes a label into a base seed; chained for hierarchies like
/// `base -> cell (s, m) -> trial -> purpose`.
///
/// Distinct labels give statistically independent streams, so callers can
/// key every random object of an experiment off one base seed without
/// accidental stream reuse.
pub fn derive_seed(base: u64, label: u64) -> u64 {
    splitmix64(base ^ splitmix64(label))
}

// Purpose labels inside one trial.
const LABEL_SUPPORT: u64 = 1;
const LABEL_COEFFS: u64 = 2;
const LABEL_POINTS: u64 = 3;
const LABEL_NOISE: u64 = 4;

/// Runs one recovery trial.
///
/// Solver non-convergence is scored as failure, never an error. The noise
/// vector has i.i.d. entries uniform on the complex disk of radius
/// `noise_level`, so its sup-norm is at most the radius; its direction
/// depends only on the seed, not the radius.
pub fn run_trial(spec: &TrialSpec) -> Result<TrialRecord, HarnessError> {
    run_trial_with_recovery(spec).map(|(record, _)| record)
}

/// Like [`run_trial`], also returning the recovered coefficients.
pub fn run_trial_with_recovery(
    spec: &TrialSpec,
) -> Result<(TrialRecord, CoefficientVector), HarnessError> {
    spec.validate()?;
    let start = Instant::now();
    let n = spec.degree_bound * spec.degree_bound;
    let m = spec.n_samples;

    let mut support: Vec<usize> = {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, LABEL_SUPPORT));
        rand::seq::index::sample(&mut rng, n, spec.sparsity)
            .into_iter()
            .collect()
    };
    support.sort_unstable();

    let mut truth = vec![Complex64::ZERO; n];
    {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, LABEL_COEFFS));
        for &i in &support {
            truth[i] = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
    }

    let samples = sample_points(m, spec.measure_tag, derive_seed(spec.seed, LABEL_POINTS))?;
    let ensemble = build_ensemble(spec.degree_bound, &samples);

    // Noiseless samples y = Phi c, using only the support columns.
    let phi = ensemble.phi_matrix();
    let mut y: Vec<Complex64> = (0..m)
        .map(|j| {
            let mut acc = Complex64::ZERO;
            for &i in &support {
                acc += phi[(j, i)] * truth[i];
            }
            acc
        })
        .collect();

    if spec.noise_level > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, LABEL_NOISE));
        for yj in &mut y {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            let radius = spec.noise_level * u.sqrt();
            *yj += radius * Complex64::cis(2.0 * std::f64::consts::PI * v);
        }
    }

    let result = recover(&ensemble, &y, spec.noise_level, &SolverConfig::default())?;

    let error_sq: f64 = result
        .solution
        .iter()
        .zip(&truth)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let relative_error = if spec.sparsity == 0 {
        error_sq.sqrt()
    } else {
        let truth_norm: f64 = truth.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        error_sq.sqrt() / truth_norm
    };
    let success = relative_error <= spec.success_tolerance && result.converged;

    let record = TrialRecord {
        spec: *spec,
        relative_error,
        success,
        solver_iterations: result.iterations_used,
        wall_time: start.elapsed(),
    };
    let recovered = CoefficientVector::new(spec.degree_bound, result.solution)
        .expect("solution length matches the basis dimension");
    Ok((record, recovered))
}

/// Success frequency over every `(s, m)` cell of a grid.
///
/// Cell seeds derive from the base seed and the cell's `(s, m)` values, and
/// trial seeds from the cell seed and trial index, so cells are independent:
/// any sub-grid (down to a single cell) reproduces exactly the frequencies
/// of the full run. Trials run in parallel; the aggregation is a count, so
/// the result does not depend on the schedule.
pub fn phase_diagram(
    s_grid: &[usize],
    m_grid: &[usize],
    degree_bound: usize,
    measure_tag: MeasureTag,
    n_trials: usize,
    base_seed: u64,
) -> Result<PhaseDiagramResult, HarnessError> {
    if s_grid.is_empty() || m_grid.is_empty() {
        return Err(HarnessError::InvalidSpec("grids must be nonempty".into()));
    }
    if n_trials == 0 {
        return Err(HarnessError::InvalidSpec("need at least one trial".into()));
    }
    let mut tasks = Vec::with_capacity(s_grid.len() * m_grid.len() * n_trials);
    for (si, &s) in s_grid.iter().enumerate() {
        for (mi, &m) in m_grid.iter().enumerate() {
            let cell_seed = derive_seed(derive_seed(base_seed, s as u64), m as u64);
            for t in 0..n_trials {
                tasks.push((si, mi, s, m, derive_seed(cell_seed, t as u64)));
            }
        }
    }
    let outcomes: Result<Vec<(usize, usize, bool)>, HarnessError> = tasks
        .par_iter()
        .map(|&(si, mi, s, m, trial_seed)| {
            let spec = TrialSpec::new(degree_bound, s, m, measure_tag, 0.0, trial_seed);
            run_trial(&spec).map(|record| (si, mi, record.success))
        })
        .collect();
    let mut counts = vec![0usize; s_grid.len() * m_grid.len()];
    for (si, mi, success) in outcomes? {
        if success {
            counts[si * m_grid.len() + mi] += 1;
        }
    }
    let frequencies = counts
        .iter()
        .map(|&c| c as f64 / n_trials as f64)
        .collect();
    Ok(PhaseDiagramResult {
        s_values: s_grid.to_vec(),
        m_values: m_grid.to_vec(),
        frequencies,
        n_trials,
        measure_tag,
        base_seed,
    })
}

impl PhaseDiagramResult {
    pub fn frequency(&self, s_index: usize, m_index: usize) -> f64 {
        self.frequencies[s_index * self.m_values.len() + m_index]
    }

    pub fn mean_frequency(&self) -> f64 {
        self.frequencies.iter().sum::<f64>() / self.frequencies.len() as f64
    }

    /// CSV with header `s,m,frequency`, frequencies at 3 decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,m,frequency\n");
        for (si, &s) in self.s_values.iter().enumerate() {
            for (mi, &m) in self.m_values.iter().enumerate() {
                out.push_str(&format!("{s},{m},{:.3}\n", self.frequency(si, mi)));
            }
        }
        out
    }

    /// Plain PGM (P2) heatmap: rows are `m` descending, columns `s`
    /// ascending, gray `round(255 (1 - frequency))`, so success is black.
    pub fn to_pgm(&self) -> String {
        let mut out = format!("P2\n{} {}\n255\n", self.s_values.len(), self.m_values.len());
        for mi in (0..self.m_values.len()).rev() {
            let row: Vec<String> = (0..self.s_values.len())
                .map(|si| {
                    let gray = (255.0 * (1.0 - self.frequency(si, mi))).round() as u32;
                    gray.to_string()
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Output format for [`export`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Pgm,
}

/// Writes a phase diagram to disk in the chosen format.
pub fn export(
    result: &PhaseDiagramResult,
    path: &Path,
    format: ExportFormat,
) -> std::io::Result<()> {
    let text = match format {
        ExportFormat::Csv => result.to_csv(),
        ExportFormat::Pgm => result.to_pgm(),
    };
    let mut file = std::fs::File::create(path)?;
    file.write_all(text.as_bytes())
}

/// Median recovery error as a function of the noise radius.
///
/// Trial `t` shares its seed across all radii, so each radius sees the same
/// support, coefficients, sample points, and noise direction, rescaled; the
/// reported medians therefore isolate the effect of the radius alone.
/// Product-measure sampling, noiseless-equivalent specs otherwise.
pub fn noise_sweep(
    degree_bound: usize,
    sparsity: usize,
    n_samples: usize,
    epsilons: &[f64],
    n_trials: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>, HarnessError> {
    if epsilons.is_empty() || n_trials == 0 {
        return Err(HarnessError::InvalidSpec(
            "need at least one radius and one trial".into(),
        ));
    }
    let tasks: Vec<(usize, f64, u64)> = epsilons
        .iter()
        .enumerate()
        .flat_map(|(ei, &eps)| {
            (0..n_trials).map(move |t| (ei, eps, derive_seed(seed, t as u64)))
        })
        .collect();
    let outcomes: Result<Vec<(usize, f64)>, HarnessError> = tasks
        .par_iter()
        .map(|&(ei, eps, trial_seed)| {
            let spec = TrialSpec::new(
                degree_bound,
                sparsity,
                n_samples,
                MeasureTag::Product,
                eps,
                trial_seed,
            );
            run_trial(&spec).map(|record| (ei, record.relative_error))
        })
        .collect();
    let mut by_radius = vec![Vec::with_capacity(n_trials); epsilons.len()];
    for (ei, error) in outcomes? {
        by_radius[ei].push(error);
    }
    Ok(epsilons
        .iter()
        .zip(by_radius.iter_mut())
        .map(|(&eps, errors)| {
            errors.sort_by(|a, b| a.partial_cmp(b).expect("errors are not NaN"));
            let mid = errors.len() / 2;
            let median = if errors.len() % 2 == 1 {
                errors[mid]
            } else {
                0.5 * (errors[mid - 1] + errors[mid])
            };
            (eps, median)
        })
        .collect())
}

/// Grids and trial count of the command-line `--fast` preset: a reduced
/// phase diagram (sparsity up to 12, sample counts up to 120, 10 trials)
/// that keeps the qualitative shape of the default grid at a fraction of
/// the cost.
pub fn fast_preset() -> (Vec<usize>, Vec<usize>, usize) {
    let s_grid = (2..=12).step_by(2).collect();
    let m_grid = (20..=120).step_by(20).collect();
    (s_grid, m_grid, 10)
}

/// One line of the bound-verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Result of [`verify_bounds`].
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<BoundCheck>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for check in &self.checks {
            let status = if check.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{status} {}: {}\n", check.name, check.detail));
        }
        out.push_str(if self.all_passed() {
            "all checks passed\n"
        } else {
            "SOME CHECKS FAILED\n"
        });
        out
    }
}

/// Runs the polynomial-growth and orthonormality verification suite.
///
/// Covers the uniform Legendre bound `2/sqrt(pi)` with its tightness at high
/// degree, the stability of the ultraspherical envelope
/// `alpha^(1/6) (1 + alpha/n)^(1/12)`, the Chebyshev probability-normalized
/// sup `sqrt(2)`, the `(l+1)^(1/4)` growth of the preconditioned harmonics
/// (fitted exponent and bounded sup ratio), and the Gram orthonormality of
/// both polynomial and spherical systems.
pub fn verify_bounds() -> VerifyReport {
    let mut checks = Vec::new();

    // The classical constant 2/sqrt(pi) belongs to the Legendre system
    // normalized against the probability measure dx/2; it is tight there.
    let legendre_bound = 2.0 / std::f64::consts::PI.sqrt();
    let legendre = RecurrenceTable::build_probability_normalized(
        JacobiParameter::new(0.0).expect("alpha 0"),
        200,
    )
    .expect("alpha > -1");
    let sups = weighted_sup_table(&legendre, 4096);
    let max_sup = sups.iter().cloned().fold(0.0, f64::max);
    checks.push(BoundCheck {
        name: "legendre uniform bound".into(),
        passed: max_sup <= legendre_bound + 1e-9,
        detail: format!("max weighted sup over n <= 200 is {max_sup}, bound 2/sqrt(pi) = {legendre_bound}"),
    });
    checks.push(BoundCheck {
        name: "legendre bound tightness".into(),
        passed: sups[200] >= 0.95 * legendre_bound,
        detail: format!("weighted sup at n = 200 is {}, 95% of bound is {}", sups[200], 0.95 * legendre_bound),
    });

    let envelope_ratio_max = |n_max: usize| -> f64 {
        let mut worst: f64 = 0.0;
        for alpha_i in 3..=20 {
            let alpha = alpha_i as f64;
            let sups = weighted_sup_all(
                JacobiParameter::new(alpha).expect("positive alpha"),
                n_max,
                4096,
            );
            for (n, &sup) in sups.iter().enumerate().skip(1) {
                let envelope = alpha.powf(1.0 / 6.0) * (1.0 + alpha / n as f64).powf(1.0 / 12.0);
                worst = worst.max(sup / envelope);
            }
        }
        worst
    };
    let ratio_50 = envelope_ratio_max(50);
    let ratio_100 = envelope_ratio_max(100);
    checks.push(BoundCheck {
        name: "ultraspherical envelope stability".into(),
        passed: ratio_100 <= ratio_50 * 1.01,
        detail: format!(
            "max sup/envelope ratio is {ratio_50} for n <= 50 and {ratio_100} for n <= 100"
        ),
    });

    let cheby = RecurrenceTable::build_probability_normalized(
        JacobiParameter::new(-0.5).expect("chebyshev"),
        50,
    )
    .expect("alpha > -1");
    let endpoint = cheby.eval_all(1.0).expect("1 is in domain");
    let k_dev = endpoint[1..]
        .iter()
        .map(|v| (v - 2.0_f64.sqrt()).abs())
        .fold(0.0, f64::max);
    checks.push(BoundCheck {
        name: "chebyshev probability-normalized sup".into(),
        passed: k_dev <= 1e-9,
        detail: format!("max |p_n(1) - sqrt(2)| over n in [1, 50] is {k_dev}"),
    });

    let slope = growth_exponent_fit(50);
    checks.push(BoundCheck {
        name: "preconditioned growth exponent".into(),
        passed: (0.10..=0.30).contains(&slope),
        detail: format!("fitted slope over l in [25, 50] is {slope}, expected near 0.25"),
    });

    let sups = q_sup_per_degree(50, 4096);
    let ratios: Vec<f64> = (5..=50)
        .map(|ell| sups[ell] / ((ell + 1) as f64).powf(0.25))
        .collect();
    let c_lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let c_hi = ratios.iter().cloned().fold(0.0, f64::max);
    checks.push(BoundCheck {
        name: "preconditioned sup ratio interval".into(),
        passed: c_hi / c_lo <= 3.0,
        detail: format!(
            "sup ||Q_l||/(l+1)^(1/4) lies in [{c_lo}, {c_hi}] over l in [5, 50], spread {}",
            c_hi / c_lo
        ),
    });

    let gram_q = gram_deviation_q(8, 128, 64);
    checks.push(BoundCheck {
        name: "spherical orthonormality".into(),
        passed: gram_q <= 1e-8,
        detail: format!("Gram deviation for D = 8 is {gram_q}"),
    });

    let rule_64 = gauss_legendre_rule(64).expect("64 points");
    let composite = default_composite_rule();
    let mut worst_poly_dev: f64 = 0.0;
    for alpha in [0.0, 0.5, 1.0, 2.0, 3.0, 5.0] {
        let table = RecurrenceTable::build(JacobiParameter::new(alpha).expect("valid"), 20)
            .expect("alpha > -1");
        let rule = if alpha.fract() == 0.0 { &rule_64 } else { &composite };
        worst_poly_dev = worst_poly_dev.max(check_orthonormality(&table, rule));
    }
    checks.push(BoundCheck {
        name: "polynomial orthonormality".into(),
        passed: worst_poly_dev <= 1e-8,
        detail: format!(
            "max Gram deviation over alpha in {{0, 0.5, 1, 2, 3, 5}}, n <= 20 is {worst_poly_dev}"
        ),
    });

    VerifyReport { checks }
}
