//! Spherical harmonics, preconditioned harmonics, and coefficient vectors.
//!
//! In spherical coordinates `(phi, theta)` on `B = [0, pi] x [0, 2pi)` the
//! harmonics of degree `l` and order `k`, `-l <= k <= l`, are
//!
//! ```text
//! Y_l^k(phi, theta) = (2 pi)^(-1/2) e^(i k theta) (sin phi)^|k| p_(l-|k|)^(|k|)(cos phi)
//! ```
//!
//! where `p_n^(alpha)` is the orthonormal polynomial system for the weight
//! `(1 - x^2)^alpha` from [`crate::orthopoly`]. The azimuthal factor
//! `(2 pi)^(-1/2) e^(i k theta)` is orthonormal over `theta`, and the rest is
//! orthonormal over `phi` under `sin phi dphi`, so the family is orthonormal
//! with respect to the surface measure `sin phi dphi dtheta`.
//!
//! The preconditioned functions
//!
//! ```text
//! Q_l^k = (sin phi)^(1/2) Y_l^k
//! ```
//!
//! absorb the surface density: they are orthonormal with respect to the flat
//! product measure `dphi dtheta`, and their sup-norms grow like `(l+1)^(1/4)`
//! instead of the `(l+1)^(1/2)` rate of the raw harmonics at the poles.
//!
//! Degrees below a bound `D` are packed into vectors of length `N = D^2` by
//! the linear index `l^2 + l + k`, which orders entries by degree and, within
//! a degree, by order.

use num_complex::Complex64;
use thiserror::Error;

use crate::orthopoly::{JacobiParameter, RecurrenceTable, gauss_legendre_rule, weighted_sup_all};

/// Errors from index arithmetic, point validation, and coefficient handling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SphericalError {
    #[error("order k = {k} out of range for degree l = {ell}; need |k| <= l")]
    OrderOutOfRange { ell: u32, k: i64 },
    #[error("degree l = {ell} is not below the degree bound {degree_bound}")]
    DegreeOutOfRange { ell: u32, degree_bound: usize },
    #[error("polar angle {0} outside [0, pi]")]
    PolarAngleOutOfRange(f64),
    #[error("azimuth {0} outside [0, 2 pi)")]
    AzimuthOutOfRange(f64),
    #[error("degree bound must be at least 1, got {0}")]
    InvalidDegreeBound(usize),
    #[error("coefficient vector has {got} entries, degree bound {degree_bound} needs {expected}")]
    LengthMismatch {
        degree_bound: usize,
        expected: usize,
        got: usize,
    },
    #[error("sparsity level {s} exceeds vector length {len}")]
    SparsityOutOfRange { s: usize, len: usize },
    #[error("CSV line {line}: {message}")]
    CsvParse { line: usize, message: String },
}

/// Degree and order `(l, k)` of one spherical harmonic, with `|k| <= l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HarmonicIndex {
    ell: u32,
    k: i32,
}

impl HarmonicIndex {
    pub fn new(ell: u32, k: i32) -> Result<Self, SphericalError> {
        if k.unsigned_abs() > ell {
            return Err(SphericalError::OrderOutOfRange { ell, k: k as i64 });
        }
        Ok(Self { ell, k })
    }

    pub fn ell(self) -> u32 {
        self.ell
    }

    pub fn k(self) -> i32 {
        self.k
    }

    /// Packs `(l, k)` into `l^2 + l + k`, a bijection onto the nonnegative
    /// integers that orders harmonics by degree, then by order.
    pub fn linear_index(self) -> usize {
        let ell = self.ell as usize;
        (ell * ell + ell).wrapping_add_signed(self.k as isize)
    }

    /// Inverse of [`linear_index`](Self::linear_index): `l` is the integer
    /// square root of `i` and `k = i - l^2 - l`.
    pub fn from_linear(i: usize) -> Self {
        let ell = i.isqrt();
        let k = i as i64 - (ell * ell + ell) as i64;
        Self {
            ell: ell as u32,
            k: k as i32,
        }
    }
}

/// A point `(phi, theta)` on `B = [0, pi] x [0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    phi: f64,
    theta: f64,
}

impl SpherePoint {
    pub fn new(phi: f64, theta: f64) -> Result<Self, SphericalError> {
        if !(0.0..=std::f64::consts::PI).contains(&phi) {
            return Err(SphericalError::PolarAngleOutOfRange(phi));
        }
        if !(0.0..2.0 * std::f64::consts::PI).contains(&theta) {
            return Err(SphericalError::AzimuthOutOfRange(theta));
        }
        Ok(Self { phi, theta })
    }

    pub fn phi(self) -> f64 {
        self.phi
    }

    pub fn theta(self) -> f64 {
        self.theta
    }
}

/// `sin(phi)` computed from the cosine so that the poles are exact.
///
/// `cos` maps the f64 values 0 and pi to exactly 1 and -1, so
/// `sqrt((1 - c)(1 + c))` is exactly zero at both poles, while a direct
/// `sin(pi)` would return ~1.2e-16. Every evaluation path shares this
/// helper so that harmonic values agree bit for bit across the crate.
pub(crate) fn sin_from_cos(cos_phi: f64) -> f64 {
    ((1.0 - cos_phi) * (1.0 + cos_phi)).max(0.0).sqrt()
}

/// `s^k` for `s = sin(phi) >= 0`, exact at the pole: `0^k = 0` for `k >= 1`.
///
/// Binary powering up to exponent 63; beyond that, `exp(k log s)`, which
/// avoids the gradual-underflow drift of repeated multiplication.
fn sin_pow(s: f64, k: u32) -> f64 {
    if k == 0 {
        1.0
    } else if s == 0.0 {
        0.0
    } else if k < 64 {
        s.powi(k as i32)
    } else {
        (k as f64 * s.ln()).exp()
    }
}

fn azimuthal_norm() -> f64 {
    1.0 / (2.0 * std::f64::consts::PI).sqrt()
}

/// Single-point evaluation with the same scalar operation order as the
/// batch path in [`HarmonicBasis`], so both produce identical bits.
fn eval_single(idx: HarmonicIndex, p: SpherePoint, precondition: bool) -> Complex64 {
    let k_abs = idx.k().unsigned_abs();
    let degree = (idx.ell() - k_abs) as usize;
    let alpha = JacobiParameter::new(k_abs as f64).expect("|k| is a valid exponent");
    let table = RecurrenceTable::build(alpha, degree).expect("|k| > -1");
    let cos_phi = p.phi().cos();
    let sin_phi = sin_from_cos(cos_phi);
    let radial = table.eval_all_unchecked(cos_phi)[degree];
    let scale = if precondition { sin_phi.sqrt() } else { 1.0 };
    let norm = scale * azimuthal_norm();
    let weight = norm * sin_pow(sin_phi, k_abs);
    let phase_pos = Complex64::cis(k_abs as f64 * p.theta());
    let phase = if idx.k() < 0 { phase_pos.conj() } else { phase_pos };
    (weight * radial) * phase
}

/// Evaluates `Y_l^k` at a point.
///
/// For a single value this builds the degree-`(l - |k|)` recurrence on the
/// fly; batch callers should prefer [`HarmonicBasis`], which caches one
/// recurrence table per order.
pub fn eval_y(idx: HarmonicIndex, p: SpherePoint) -> Complex64 {
    eval_single(idx, p, false)
}

/// Evaluates the preconditioned harmonic `Q_l^k = (sin phi)^(1/2) Y_l^k`.
pub fn eval_q(idx: HarmonicIndex, p: SpherePoint) -> Complex64 {
    eval_single(idx, p, true)
}

/// All harmonics below a degree bound, with one recurrence table per order.
///
/// Evaluating the full stack at one point costs `O(D^2)` flops. Immutable
/// after construction and shareable across threads.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    degree_bound: usize,
    tables: Vec<RecurrenceTable>,
}

impl HarmonicBasis {
    pub fn new(degree_bound: usize) -> Result<Self, SphericalError> {
        if degree_bound == 0 {
            return Err(SphericalError::InvalidDegreeBound(degree_bound));
        }
        let tables = (0..degree_bound)
            .map(|k| {
                let alpha = JacobiParameter::new(k as f64).expect("nonnegative exponent");
                RecurrenceTable::build(alpha, degree_bound - 1 - k).expect("integer exponent")
            })
            .collect();
        Ok(Self {
            degree_bound,
            tables,
        })
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    /// Number of basis functions, `N = D^2`.
    pub fn dimension(&self) -> usize {
        self.degree_bound * self.degree_bound
    }

    /// Values of all `Y_l^k` with `l < D`, in linear-index order.
    pub fn eval_y_all(&self, p: SpherePoint) -> Vec<Complex64> {
        self.eval_scaled(p, 1.0)
    }

    /// Values of all `Q_l^k` with `l < D`, in linear-index order.
    pub fn eval_q_all(&self, p: SpherePoint) -> Vec<Complex64> {
        let sin_phi = sin_from_cos(p.phi().cos());
        self.eval_scaled(p, sin_phi.sqrt())
    }

    fn eval_scaled(&self, p: SpherePoint, scale: f64) -> Vec<Complex64> {
        let d = self.degree_bound;
        let cos_phi = p.phi().cos();
        let sin_phi = sin_from_cos(cos_phi);
        let norm = scale * azimuthal_norm();
        // radial[k][n] = p_n^(k)(cos phi); phase and sine powers are applied
        // with the same scalar operations as eval_y, so both paths agree bit
        // for bit.
        let radial: Vec<Vec<f64>> = self
            .tables
            .iter()
            .map(|t| t.eval_all_unchecked(cos_phi))
            .collect();
        let mut out = vec![Complex64::ZERO; d * d];
        for k in 0..d as i64 {
            let weight = norm * sin_pow(sin_phi, k as u32);
            let phase_pos = Complex64::cis(k as f64 * p.theta());
            let phase_neg = phase_pos.conj();
            for ell in k as usize..d {
                let value = weight * radial[k as usize][ell - k as usize];
                let base = ell * ell + ell;
                out[base + k as usize] = value * phase_pos;
                if k > 0 {
                    out[base - k as usize] = value * phase_neg;
                }
            }
        }
        out
    }
}

/// Coefficients `c_(l,k)` of a harmonic polynomial of degree below `D`,
/// stored as a dense complex vector of length `N = D^2` in linear-index
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    degree_bound: usize,
    entries: Vec<Complex64>,
}

impl CoefficientVector {
    pub fn new(degree_bound: usize, entries: Vec<Complex64>) -> Result<Self, SphericalError> {
        if degree_bound == 0 {
            return Err(SphericalError::InvalidDegreeBound(degree_bound));
        }
        let expected = degree_bound * degree_bound;
        if entries.len() != expected {
            return Err(SphericalError::LengthMismatch {
                degree_bound,
                expected,
                got: entries.len(),
            });
        }
        Ok(Self {
            degree_bound,
            entries,
        })
    }

    pub fn zeros(degree_bound: usize) -> Result<Self, SphericalError> {
        Self::new(degree_bound, vec![Complex64::ZERO; degree_bound * degree_bound])
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    /// Vector length `N = D^2`.
    pub fn dimension(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [Complex64] {
        &mut self.entries
    }

    fn position(&self, idx: HarmonicIndex) -> Result<usize, SphericalError> {
        if (idx.ell() as usize) >= self.degree_bound {
            return Err(SphericalError::DegreeOutOfRange {
                ell: idx.ell(),
                degree_bound: self.degree_bound,
            });
        }
        Ok(idx.linear_index())
    }

    pub fn entry(&self, idx: HarmonicIndex) -> Result<Complex64, SphericalError> {
        Ok(self.entries[self.position(idx)?])
    }

    pub fn set_entry(
        &mut self,
        idx: HarmonicIndex,
        value: Complex64,
    ) -> Result<(), SphericalError> {
        let pos = self.position(idx)?;
        self.entries[pos] = value;
        Ok(())
    }

    /// Number of exactly nonzero entries (no modulus threshold).
    pub fn sparsity(&self) -> usize {
        self.entries
            .iter()
            .filter(|z| z.re != 0.0 || z.im != 0.0)
            .count()
    }

    /// Serializes as CSV with header `ell,k,re,im`, one row per entry in
    /// linear-index order, full shortest-round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ell,k,re,im\n");
        for (i, z) in self.entries.iter().enumerate() {
            let idx = HarmonicIndex::from_linear(i);
            out.push_str(&format!("{},{},{},{}\n", idx.ell(), idx.k(), z.re, z.im));
        }
        out
    }

    /// Parses the CSV form. Rows may arrive in any order; absent entries are
    /// zero; rows outside the degree bound or listed twice are rejected.
    pub fn from_csv(text: &str, degree_bound: usize) -> Result<Self, SphericalError> {
        let mut vector = Self::zeros(degree_bound)?;
        let mut seen = vec![false; vector.dimension()];
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (line_no == 0 && line == "ell,k,re,im") {
                continue;
            }
            let parse = |field: &str, name: &str| -> Result<f64, SphericalError> {
                field.trim().parse::<f64>().map_err(|e| SphericalError::CsvParse {
                    line: line_no + 1,
                    message: format!("bad {name} field {field:?}: {e}"),
                })
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(SphericalError::CsvParse {
                    line: line_no + 1,
                    message: format!("expected 4 fields, got {}", fields.len()),
                });
            }
            let ell = fields[0].trim().parse::<u32>().map_err(|e| SphericalError::CsvParse {
                line: line_no + 1,
                message: format!("bad ell field {:?}: {e}", fields[0]),
            })?;
            let k = fields[1].trim().parse::<i32>().map_err(|e| SphericalError::CsvParse {
                line: line_no + 1,
                message: format!("bad k field {:?}: {e}", fields[1]),
            })?;
            let idx = HarmonicIndex::new(ell, k).map_err(|e| SphericalError::CsvParse {
                line: line_no + 1,
                message: e.to_string(),
            })?;
            let value = Complex64::new(parse(fields[2], "re")?, parse(fields[3], "im")?);
            let pos = vector.position(idx).map_err(|e| SphericalError::CsvParse {
                line: line_no + 1,
                message: e.to_string(),
            })?;
            if seen[pos] {
                return Err(SphericalError::CsvParse {
                    line: line_no + 1,
                    message: format!("duplicate entry for (l, k) = ({ell}, {k})"),
                });
            }
            seen[pos] = true;
            vector.entries[pos] = value;
        }
        Ok(vector)
    }
}

/// Evaluates the harmonic polynomial `g = sum c_(l,k) Y_l^k` at a point.
pub fn synthesize(c: &CoefficientVector, p: SpherePoint) -> Complex64 {
    let basis = HarmonicBasis::new(c.degree_bound()).expect("coefficient vector has D >= 1");
    let values = basis.eval_y_all(p);
    c.entries()
        .iter()
        .zip(&values)
        .map(|(ci, yi)| ci * yi)
        .sum()
}

/// Best `s`-term approximation error in l1: the sum of the moduli of all but
/// the `s` largest-modulus entries.
///
/// Ties in modulus keep the entry with the lower linear index. The dropped
/// moduli are summed in index order, so the result is deterministic.
pub fn best_s_term_error(z: &[Complex64], s: usize) -> Result<f64, SphericalError> {
    if s > z.len() {
        return Err(SphericalError::SparsityOutOfRange { s, len: z.len() });
    }
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| {
        z[b].norm()
            .partial_cmp(&z[a].norm())
            .expect("moduli are not NaN")
            .then(a.cmp(&b))
    });
    let mut dropped = vec![true; z.len()];
    for &i in &order[..s] {
        dropped[i] = false;
    }
    Ok(z.iter()
        .zip(&dropped)
        .filter(|(_, &d)| d)
        .map(|(zi, _)| zi.norm())
        .sum())
}

/// Maximum deviation from the identity of the Gram matrix of
/// `{Q_l^k : l < D}` under the product measure `dphi dtheta`.
///
/// Tensor quadrature: a periodic trapezoid rule with `n_theta` nodes handles
/// the azimuth (exact for the trigonometric polynomials `e^(i(k-k')theta)`
/// whenever `|k - k'| < n_theta`), and after the substitution `x = cos phi`
/// an `n_phi`-point Gauss-Legendre rule handles the polar factor, whose
/// diagonal blocks are polynomials of degree at most `2D - 2`. With
/// `n_theta >= 2D` and `n_phi >= D` the computed Gram matrix is exact up to
/// rounding. The same quantity also certifies the harmonics themselves: the
/// Gram matrix of `{Y_l^k}` under `sin phi dphi dtheta` is identical entry
/// for entry, because the preconditioning factor cancels the density.
pub fn gram_deviation_q(degree_bound: usize, n_phi: usize, n_theta: usize) -> f64 {
    assert!(degree_bound >= 1, "degree bound must be at least 1");
    assert!(
        n_theta >= 2 * degree_bound,
        "trapezoid rule needs n_theta >= 2 D for exact azimuthal integrals"
    );
    assert!(
        n_phi >= degree_bound,
        "Gauss-Legendre rule needs n_phi >= D for exact polar integrals"
    );
    let d = degree_bound;
    let n = d * d;
    let basis = HarmonicBasis::new(d).expect("validated degree bound");
    let rule = gauss_legendre_rule(n_phi).expect("n_phi >= 1");

    // Polar factor: radial[(l,k)] = (sin phi)^|k| p_(l-|k|)^(|k|)(x) at each
    // node, so the (i, j) polar integral is a weighted dot product of columns.
    let mut polar = vec![0.0_f64; n * n];
    for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
        let sin_phi = sin_from_cos(x);
        let mut radial = vec![0.0_f64; n];
        for k in 0..d {
            let vals = basis.tables[k].eval_all_unchecked(x);
            let spow = sin_pow(sin_phi, k as u32);
            for ell in k..d {
                let base = ell * ell + ell;
                let r = spow * vals[ell - k];
                radial[base + k] = r;
                if k > 0 {
                    radial[base - k] = r;
                }
            }
        }
        for i in 0..n {
            let ri = w * radial[i];
            if ri == 0.0 {
                continue;
            }
            for j in i..n {
                polar[i * n + j] += ri * radial[j];
            }
        }
    }

    // Azimuthal factor: (1/2pi) integral of e^(i dk theta), trapezoid.
    // Order differences k - k' span [-(2D - 2), 2D - 2].
    let max_shift = 2 * (d as i64 - 1);
    let mut azimuth = vec![Complex64::ZERO; (2 * max_shift + 1) as usize];
    for (slot, dk) in (-max_shift..=max_shift).enumerate() {
        let mut acc = Complex64::ZERO;
        for j in 0..n_theta {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n_theta as f64;
            acc += Complex64::cis(dk as f64 * theta);
        }
        azimuth[slot] = acc / n_theta as f64;
    }

    let mut deviation: f64 = 0.0;
    for i in 0..n {
        let ki = HarmonicIndex::from_linear(i).k() as i64;
        for j in i..n {
            let kj = HarmonicIndex::from_linear(j).k() as i64;
            let entry = polar[i * n + j] * azimuth[(kj - ki + max_shift) as usize];
            let target = if i == j { 1.0 } else { 0.0 };
            deviation = deviation.max((entry - target).norm());
        }
    }
    deviation
}

/// For each degree `l <= ell_max`, the sup-norm `max_k ||Q_l^k||_inf` over a
/// Chebyshev-spaced polar grid.
///
/// `|Q_l^k|` does not depend on `theta`, so the two-dimensional sup reduces
/// to the weighted polynomial sup: `||Q_l^k||_inf` equals
/// `(2 pi)^(-1/2)` times the sup of `(1 - x^2)^(1/4 + |k|/2) |p_(l-|k|)^(|k|)|`.
pub fn q_sup_per_degree(ell_max: usize, grid_size: usize) -> Vec<f64> {
    let norm = azimuthal_norm();
    let mut sup = vec![0.0_f64; ell_max + 1];
    for k in 0..=ell_max {
        let alpha = JacobiParameter::new(k as f64).expect("nonnegative exponent");
        let by_degree = weighted_sup_all(alpha, ell_max - k, grid_size);
        for (n, &w) in by_degree.iter().enumerate() {
            let value = norm * w;
            if value > sup[k + n] {
                sup[k + n] = value;
            }
        }
    }
    sup
}

/// Least-squares slope of `log max_k ||Q_l^k||_inf` against `log(l + 1)`
/// over the upper half `l in [ell_max/2, ell_max]`.
///
/// The sup-norms grow like `(l+1)^(1/4)`, so the fitted slope should settle
/// near 0.25; the lower degrees are excluded because they still carry
/// transient constants.
pub fn growth_exponent_fit(ell_max: usize) -> f64 {
    assert!(ell_max >= 10, "need ell_max >= 10 to fit a slope");
    let sup = q_sup_per_degree(ell_max, 4096);
    let lo = ell_max / 2;
    let points: Vec<(f64, f64)> = (lo..=ell_max)
        .map(|ell| (((ell + 1) as f64).ln(), sup[ell].ln()))
        .collect();
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in &points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn y00() -> f64 {
        1.0 / (4.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn linear_index_first_degrees() {
        let cases = [
            ((0, 0), 0),
            ((1, -1), 1),
            ((1, 0), 2),
            ((1, 1), 3),
            ((2, -2), 4),
            ((2, 2), 8),
        ];
        for ((ell, k), expected) in cases {
            assert_eq!(HarmonicIndex::new(ell, k).unwrap().linear_index(), expected);
        }
    }

    #[test]
    fn linear_index_round_trip() {
        for ell in 0..40u32 {
            for k in -(ell as i32)..=(ell as i32) {
                let idx = HarmonicIndex::new(ell, k).unwrap();
                assert_eq!(HarmonicIndex::from_linear(idx.linear_index()), idx);
            }
        }
    }

    #[test]
    fn rejects_invalid_order() {
        assert!(HarmonicIndex::new(2, 3).is_err());
        assert!(HarmonicIndex::new(0, -1).is_err());
    }

    #[test]
    fn sphere_point_validation() {
        assert!(SpherePoint::new(-0.1, 0.0).is_err());
        assert!(SpherePoint::new(0.0, 2.0 * std::f64::consts::PI).is_err());
        assert!(SpherePoint::new(f64::NAN, 0.0).is_err());
        assert!(SpherePoint::new(std::f64::consts::PI, 0.0).is_ok());
    }

    #[test]
    fn constant_harmonic_value() {
        let idx = HarmonicIndex::new(0, 0).unwrap();
        for (phi, theta) in [(0.3, 1.0), (1.5, 4.4), (std::f64::consts::PI, 0.0)] {
            let y = eval_y(idx, SpherePoint::new(phi, theta).unwrap());
            assert_abs_diff_eq!(y.re, y00(), epsilon = 1e-14);
            assert_abs_diff_eq!(y.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn equator_zero_of_degree_one() {
        let idx = HarmonicIndex::new(1, 0).unwrap();
        let p = SpherePoint::new(std::f64::consts::FRAC_PI_2, 1.2).unwrap();
        assert!(eval_y(idx, p).norm() < 1e-15);
    }

    #[test]
    fn conjugate_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let p = SpherePoint::new(
                rng.random::<f64>() * std::f64::consts::PI,
                rng.random::<f64>() * 2.0 * std::f64::consts::PI,
            )
            .unwrap();
            let ell = rng.random_range(0..=10u32);
            let k = rng.random_range(-(ell as i32)..=(ell as i32));
            let plus = eval_y(HarmonicIndex::new(ell, k).unwrap(), p);
            let minus = eval_y(HarmonicIndex::new(ell, -k).unwrap(), p);
            assert_abs_diff_eq!(minus.re, plus.re, epsilon = 1e-13);
            assert_abs_diff_eq!(minus.im, -plus.im, epsilon = 1e-13);
        }
    }

    #[test]
    fn q_vanishes_exactly_at_poles() {
        for ell in 0..=10u32 {
            for k in -(ell as i32)..=(ell as i32) {
                let idx = HarmonicIndex::new(ell, k).unwrap();
                for phi in [0.0, std::f64::consts::PI] {
                    let q = eval_q(idx, SpherePoint::new(phi, 0.7).unwrap());
                    assert_eq!(q.norm(), 0.0, "Q_{ell}^{k} at phi = {phi}");
                }
            }
        }
    }

    #[test]
    fn q_at_equator_matches_y() {
        let idx = HarmonicIndex::new(0, 0).unwrap();
        let p = SpherePoint::new(std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        assert_abs_diff_eq!(eval_q(idx, p).re, y00(), epsilon = 1e-14);
    }

    #[test]
    fn basis_matches_single_evaluations() {
        let basis = HarmonicBasis::new(6).unwrap();
        let p = SpherePoint::new(0.9, 2.3).unwrap();
        let ys = basis.eval_y_all(p);
        let qs = basis.eval_q_all(p);
        for i in 0..basis.dimension() {
            let idx = HarmonicIndex::from_linear(i);
            assert_eq!(ys[i], eval_y(idx, p), "Y mismatch at {i}");
            assert_eq!(qs[i], eval_q(idx, p), "Q mismatch at {i}");
        }
    }

    #[test]
    fn synthesize_unit_vector_is_constant() {
        let mut c = CoefficientVector::zeros(3).unwrap();
        c.set_entry(HarmonicIndex::new(0, 0).unwrap(), Complex64::ONE)
            .unwrap();
        let scale = 1.0 / y00();
        for (phi, theta) in [(0.2, 0.1), (1.0, 3.0), (2.9, 6.1)] {
            let g = synthesize(&c, SpherePoint::new(phi, theta).unwrap());
            assert_abs_diff_eq!((g * scale).re, 1.0, epsilon = 1e-13);
            assert_abs_diff_eq!(g.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn synthesize_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = 4;
        let n = d * d;
        let draw = |rng: &mut ChaCha8Rng| {
            let entries = (0..n)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            CoefficientVector::new(d, entries).unwrap()
        };
        let c1 = draw(&mut rng);
        let c2 = draw(&mut rng);
        let (a, b) = (Complex64::new(0.3, -1.1), Complex64::new(-2.0, 0.4));
        let combo = CoefficientVector::new(
            d,
            c1.entries()
                .iter()
                .zip(c2.entries())
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
        .unwrap();
        for _ in 0..20 {
            let p = SpherePoint::new(
                rng.random::<f64>() * std::f64::consts::PI,
                rng.random::<f64>() * 2.0 * std::f64::consts::PI,
            )
            .unwrap();
            let lhs = synthesize(&combo, p);
            let rhs = a * synthesize(&c1, p) + b * synthesize(&c2, p);
            assert_abs_diff_eq!(lhs.re, rhs.re, epsilon = 1e-13);
            assert_abs_diff_eq!(lhs.im, rhs.im, epsilon = 1e-13);
        }
    }

    #[test]
    fn zero_coefficients_synthesize_to_zero() {
        let c = CoefficientVector::zeros(4).unwrap();
        let p = SpherePoint::new(1.1, 0.3).unwrap();
        assert_eq!(synthesize(&c, p), Complex64::ZERO);
    }

    #[test]
    fn best_s_term_basics() {
        let z = [
            Complex64::new(3.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.5, 0.0),
        ];
        assert_abs_diff_eq!(best_s_term_error(&z, 1).unwrap(), 1.5, epsilon = 1e-15);
        let norm1: f64 = z.iter().map(|v| v.norm()).sum();
        assert_abs_diff_eq!(best_s_term_error(&z, 0).unwrap(), norm1, epsilon = 1e-15);
        assert_eq!(best_s_term_error(&z, 3).unwrap(), 0.0);
        assert!(best_s_term_error(&z, 4).is_err());
    }

    #[test]
    fn best_s_term_tie_break_keeps_low_index() {
        // Two entries of equal modulus: the kept one must be index 0.
        let z = [
            Complex64::new(0.0, 2.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        assert_abs_diff_eq!(best_s_term_error(&z, 1).unwrap(), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn sparsity_counts_exact_nonzeros() {
        let mut c = CoefficientVector::zeros(3).unwrap();
        assert_eq!(c.sparsity(), 0);
        c.set_entry(
            HarmonicIndex::new(1, 1).unwrap(),
            Complex64::new(0.0, 1e-300),
        )
        .unwrap();
        c.set_entry(HarmonicIndex::new(2, 0).unwrap(), Complex64::new(1.0, 0.0))
            .unwrap();
        assert_eq!(c.sparsity(), 2);
    }

    #[test]
    fn gram_single_constant() {
        assert!(gram_deviation_q(1, 4, 4) <= 1e-10);
    }

    #[test]
    fn gram_small_degrees() {
        assert!(gram_deviation_q(4, 72, 16) <= 1e-10);
    }

    #[test]
    fn csv_round_trip() {
        let mut c = CoefficientVector::zeros(3).unwrap();
        c.set_entry(
            HarmonicIndex::new(2, -1).unwrap(),
            Complex64::new(0.1234567890123456, -7.5e-11),
        )
        .unwrap();
        c.set_entry(HarmonicIndex::new(0, 0).unwrap(), Complex64::new(-4.0, 2.0))
            .unwrap();
        let parsed = CoefficientVector::from_csv(&c.to_csv(), 3).unwrap();
        assert_eq!(parsed, c);
    }

    #[test]
    fn csv_sparse_rows_and_errors() {
        let sparse = "ell,k,re,im\n1,1,2.5,0\n";
        let c = CoefficientVector::from_csv(sparse, 2).unwrap();
        assert_eq!(c.sparsity(), 1);
        assert_eq!(
            c.entry(HarmonicIndex::new(1, 1).unwrap()).unwrap(),
            Complex64::new(2.5, 0.0)
        );
        assert!(CoefficientVector::from_csv("5,0,1,0\n", 2).is_err());
        assert!(CoefficientVector::from_csv("1,1,1,0\n1,1,2,0\n", 2).is_err());
        assert!(CoefficientVector::from_csv("1,2,1,0\n", 2).is_err());
    }
}
