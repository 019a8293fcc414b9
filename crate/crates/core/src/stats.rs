//! Moments, kernel density estimates, exceedance probabilities and RMSE.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gpc::GpcBasis;

/// `(μ, σ)` of an orthonormal expansion: `μ = u_1`, `σ² = Σ_{k≥2} u_k²`.
pub fn moments_from_gpc(coeffs: &[f64]) -> (f64, f64) {
    let mu = coeffs.first().copied().unwrap_or(0.0);
    let var: f64 = coeffs.iter().skip(1).map(|c| c * c).sum();
    (mu, var.sqrt())
}

/// Sample mean and standard deviation (`n - 1` denominator).
pub fn sample_moments(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    // Welford: constant data gives exactly zero spread.
    let (mut mu, mut m2) = (0.0, 0.0);
    for (i, &v) in values.iter().enumerate() {
        let delta = v - mu;
        mu += delta / (i + 1) as f64;
        m2 += delta * (v - mu);
    }
    if n == 1 {
        return (mu, 0.0);
    }
    (mu, (m2 / (n - 1) as f64).sqrt())
}

pub const MIN_KDE_SAMPLES: usize = 100;
pub const KDE_GRID_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub enum PdfEstimate {
    Density { grid: Vec<f64>, density: Vec<f64> },
    /// All samples (numerically) equal.
    Degenerate { value: f64 },
}

/// Gaussian KDE with Silverman bandwidth `1.06 σ n^(-1/5)` on a uniform grid
/// spanning `μ ± 5σ`.
pub fn pdf_estimate(samples: &[f64], n_grid: usize) -> Result<PdfEstimate> {
    if samples.len() < MIN_KDE_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "density estimate needs at least {MIN_KDE_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if n_grid < 2 {
        return Err(Error::InvalidArgument("density grid needs at least two points".into()));
    }
    let (mu, sigma) = sample_moments(samples);
    if !(sigma > 1e-14 * mu.abs().max(f64::MIN_POSITIVE)) {
        return Ok(PdfEstimate::Degenerate { value: mu });
    }
    let n = samples.len() as f64;
    let h = 1.06 * sigma * n.powf(-0.2);
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (mu - 5.0 * sigma, mu + 5.0 * sigma);
    let grid: Vec<f64> = (0..n_grid)
        .map(|i| lo + (hi - lo) * i as f64 / (n_grid - 1) as f64)
        .collect();
    let norm = 1.0 / (n * h * (2.0 * std::f64::consts::PI).sqrt());
    let cutoff = 8.0 * h;
    let density = grid
        .iter()
        .map(|&x| {
            let start = sorted.partition_point(|&s| s < x - cutoff);
            let end = sorted.partition_point(|&s| s <= x + cutoff);
            sorted[start..end]
                .iter()
                .map(|s| (-0.5 * ((x - s) / h).powi(2)).exp())
                .sum::<f64>()
                * norm
        })
        .collect();
    Ok(PdfEstimate::Density { grid, density })
}

/// Values of an expansion at `n` uniform points drawn from `(seed, index)` streams.
pub fn sample_expansion(basis: &GpcBasis, coeffs: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
    if coeffs.len() != basis.len() {
        return Err(Error::ShapeMismatch {
            expected: basis.len(),
            actual: coeffs.len(),
        });
    }
    (0..n as u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let xi: Vec<f64> = (0..basis.dim()).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            basis.evaluate_expansion(coeffs, &xi)
        })
        .collect()
}

/// Fraction of values with `u ≥ threshold`.
pub fn exceedance(values: &[f64], threshold: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().filter(|&&v| v >= threshold).count() as f64 / values.len() as f64
}

/// `sqrt(mean((surrogate - reference)²))` over paired points.
pub fn rmse(reference: &[f64], surrogate: &[f64]) -> Result<f64> {
    if reference.len() != surrogate.len() {
        return Err(Error::ShapeMismatch {
            expected: reference.len(),
            actual: surrogate.len(),
        });
    }
    if reference.is_empty() {
        return Err(Error::InvalidArgument("RMSE of an empty set".into()));
    }
    let s: f64 = reference.iter().zip(surrogate).map(|(r, s)| (s - r).powi(2)).sum();
    Ok((s / reference.len() as f64).sqrt())
}

/// Statistics of one observable at one increment for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSummary {
    pub mu: f64,
    pub sigma: f64,
    pub rmse: Option<f64>,
    /// `(multiplier, Pr(u ≥ multiplier · u_m))`.
    pub exceedance: Vec<(f64, f64)>,
}
