//! Monte Carlo and pseudospectral collocation drivers over the deterministic solver.
//!
//! Random points come from ChaCha8 with one stream per sample index, so every
//! draw depends only on `(seed, index)` and not on scheduling or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{LoadProgram, Observable};
use crate::galerkin::{GpcVector, ProjectionNodes};
use crate::gpc::GpcBasis;
use crate::model::Model;
use crate::quadrature::QuadratureRule;

/// Uniform point on `[-1, 1]^dim` for sample `index`.
pub fn sample_point(dim: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..dim).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect()
}

pub fn draw_points(dim: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..n as u64).map(|i| sample_point(dim, seed, i)).collect()
}

/// Observations of one deterministic run: `observations[increment][observable]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult {
    pub observations: Vec<Vec<f64>>,
    pub failure: Option<Error>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMethod {
    MonteCarlo,
    Collocation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleEnsemble {
    pub method: SampleMethod,
    pub seed: u64,
    pub points: Vec<Vec<f64>>,
    pub results: Vec<SampleResult>,
}

impl SampleEnsemble {
    /// Indices of samples that converged through `increment` (0-based).
    pub fn converged_at(&self, increment: usize) -> Vec<usize> {
        (0..self.results.len())
            .filter(|&s| self.results[s].observations.len() > increment)
            .collect()
    }

    /// Values of one observable at one increment over converged samples.
    pub fn values(&self, increment: usize, observable: usize) -> Vec<f64> {
        self.converged_at(increment)
            .into_iter()
            .map(|s| self.results[s].observations[increment][observable])
            .collect()
    }

    pub fn failure_fraction(&self) -> f64 {
        if self.results.is_empty() {
            return 0.0;
        }
        self.results.iter().filter(|r| r.failure.is_some()).count() as f64 / self.results.len() as f64
    }
}

/// Runs the deterministic analysis at every point; results keep the point order.
pub fn run_points(
    model: &Model,
    program: &LoadProgram,
    observables: &[Observable],
    points: &[Vec<f64>],
) -> Vec<SampleResult> {
    points
        .par_iter()
        .map(|xi| match model.solve(xi, program, observables) {
            Ok(h) => SampleResult {
                observations: h.increments.into_iter().map(|r| r.observations).collect(),
                failure: h.failure,
            },
            Err(e) => SampleResult {
                observations: Vec::new(),
                failure: Some(e),
            },
        })
        .collect()
}

/// `n` independent uniform samples; failing samples are kept with their error.
pub fn monte_carlo(
    model: &Model,
    program: &LoadProgram,
    observables: &[Observable],
    n: usize,
    seed: u64,
) -> Result<SampleEnsemble> {
    if n == 0 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least one sample".into()));
    }
    let points = draw_points(model.dim(), n, seed);
    let results = run_points(model, program, observables, &points);
    Ok(SampleEnsemble {
        method: SampleMethod::MonteCarlo,
        seed,
        points,
        results,
    })
}

/// Pseudospectral coefficients per converged increment.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationResult {
    /// Full displacement expansion per increment.
    pub coefficients: Vec<GpcVector>,
    /// `observations[increment][observable]` = gPC coefficients.
    pub observations: Vec<Vec<Vec<f64>>>,
    /// Linear solves per node per increment.
    pub node_steps: Vec<Vec<usize>>,
    /// First node failure (wrapped with its node index); increments past it are dropped.
    pub failure: Option<Error>,
}

/// Independent deterministic runs at the rule's nodes, projected onto the basis:
/// `u_k = Σ_q u(ξ_q) ψ_k(ξ_q) ω_q`.
pub fn collocation(
    model: &Model,
    program: &LoadProgram,
    rule: &QuadratureRule,
    basis: &GpcBasis,
    observables: &[Observable],
) -> Result<CollocationResult> {
    let nodes = ProjectionNodes::new(basis, rule)?;
    let points: Vec<Vec<f64>> = rule.nodes().map(<[f64]>::to_vec).collect();
    let histories: Vec<_> = points
        .par_iter()
        .enumerate()
        .map(|(q, xi)| model.solve(xi, program, observables).map_err(|e| Error::at_node(q, e)))
        .collect::<Result<Vec<_>>>()?;

    let mut failure = None;
    let mut converged = program.n_increments();
    for (q, h) in histories.iter().enumerate() {
        if let Some(e) = &h.failure {
            if h.increments.len() < converged || failure.is_none() {
                failure = Some(Error::at_node(q, e.clone()));
            }
        }
        converged = converged.min(h.increments.len());
    }

    let n_xi = basis.len();
    let mut coefficients = Vec::with_capacity(converged);
    let mut observations = Vec::with_capacity(converged);
    let mut node_steps = Vec::with_capacity(converged);
    for n in 0..converged {
        let u: Vec<&[f64]> = histories.iter().map(|h| h.increments[n].u.as_slice()).collect();
        coefficients.push(nodes.project_vectors(&u, n_xi));
        observations.push(
            (0..observables.len())
                .map(|o| {
                    let values: Vec<f64> = histories.iter().map(|h| h.increments[n].observations[o]).collect();
                    nodes.project_scalars(&values, n_xi)
                })
                .collect(),
        );
        node_steps.push(histories.iter().map(|h| h.increments[n].steps).collect());
    }
    Ok(CollocationResult {
        coefficients,
        observations,
        node_steps,
        failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_depend_only_on_seed_and_index() {
        let a = draw_points(3, 10, 42);
        let b = draw_points(3, 10, 42);
        assert_eq!(a, b);
        assert_eq!(sample_point(3, 42, 7), a[7]);
        assert_ne!(draw_points(3, 10, 43), a);
        assert!(a.iter().flatten().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn draws_are_uniform() {
        let pts = draw_points(1, 20_000, 5);
        let mean: f64 = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
        let second: f64 = pts.iter().map(|p| p[0] * p[0]).sum::<f64>() / pts.len() as f64;
        assert!(mean.abs() < 0.02);
        assert!((second - 1.0 / 3.0).abs() < 0.01);
    }
}
