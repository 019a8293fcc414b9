//! Gauss rules, tensor grids and Smolyak sparse grids for the uniform
//! probability measure on `[-1, 1]^m`.
//!
//! All weights are normalized against the density `2^-m`, so every rule
//! integrates the constant one to one. Nodes are kept in a deterministic
//! order (lexicographic ascending), which makes every reduction reproducible.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of a cubature rule on `[-1, 1]^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    exactness: usize,
    level: Option<usize>,
}

impl QuadratureRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of nodes `n_q`.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, q: usize) -> &[f64] {
        &self.nodes[q * self.dim..(q + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.nodes.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total polynomial degree integrated exactly.
    pub fn exactness(&self) -> usize {
        self.exactness
    }

    /// Smolyak level, `None` for tensor rules.
    pub fn level(&self) -> Option<usize> {
        self.level
    }

    /// `Σ_q f(ξ_q) ω_q`, accumulated in node order.
    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(&[f64]) -> f64,
    {
        self.nodes()
            .zip(&self.weights)
            .fold(0.0, |acc, (x, w)| acc + f(x) * w)
    }

    /// Like [`integrate`](Self::integrate), but a failing node aborts the sum
    /// and reports its index.
    pub fn try_integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64>,
    {
        let mut acc = 0.0;
        for (q, (x, w)) in self.nodes().zip(&self.weights).enumerate() {
            acc += f(x).map_err(|e| Error::at_node(q, e))? * w;
        }
        Ok(acc)
    }

    /// Vector-valued integration; every `f(ξ_q)` must have length `len`.
    pub fn integrate_vec<F>(&self, len: usize, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        let mut acc = vec![0.0; len];
        for (q, (x, w)) in self.nodes().zip(&self.weights).enumerate() {
            let v = f(x).map_err(|e| Error::at_node(q, e))?;
            if v.len() != len {
                return Err(Error::at_node(
                    q,
                    Error::ShapeMismatch {
                        expected: len,
                        actual: v.len(),
                    },
                ));
            }
            for (a, vi) in acc.iter_mut().zip(&v) {
                *a += vi * w;
            }
        }
        Ok(acc)
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `n`-point Gauss–Legendre rule, weights normalized to the uniform density.
/// Exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre_1d(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "Gauss rule needs at least one point".into(),
        ));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n / 2;
    for i in 0..half {
        // Root i (descending); mirrored to keep the rule exactly symmetric.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 1.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        let (_, dp) = legendre_with_derivative(n, 0.0);
        nodes[half] = 0.0;
        weights[half] = 1.0 / (dp * dp);
    }
    Ok(QuadratureRule {
        dim: 1,
        nodes,
        weights,
        exactness: 2 * n - 1,
        level: None,
    })
}

/// Full tensor product of `n`-point Gauss rules in `dim` dimensions.
pub fn tensor_gauss(dim: usize, n: usize) -> Result<QuadratureRule> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let rule = gauss_legendre_1d(n)?;
    let rules = vec![&rule; dim];
    let (nodes, weights) = tensor_product(&rules);
    Ok(QuadratureRule {
        dim,
        nodes,
        weights,
        exactness: 2 * n - 1,
        level: None,
    })
}

/// Tensor product of 1D rules; the last dimension varies fastest.
fn tensor_product(rules: &[&QuadratureRule]) -> (Vec<f64>, Vec<f64>) {
    let dim = rules.len();
    let total: usize = rules.iter().map(|r| r.len()).product();
    let mut nodes = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut w = 1.0;
        for (d, r) in rules.iter().enumerate() {
            nodes.push(r.nodes[idx[d]]);
            w *= r.weights[idx[d]];
        }
        weights.push(w);
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < rules[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
    (nodes, weights)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Compositions of `total` into `dim` nonnegative parts, lexicographic.
fn compositions(dim: usize, total: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if dim == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            rec(dim - 1, total - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, total, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// Smolyak sparse grid built from non-nested Gauss rules, where 1D level `l`
/// uses `l + 1` points. Identical nodes from different tensor terms are merged.
/// Exact for total degree `2 * level + 1`.
pub fn smolyak(dim: usize, level: usize) -> Result<QuadratureRule> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let one_d: Vec<QuadratureRule> = (0..=level)
        .map(|l| gauss_legendre_1d(l + 1))
        .collect::<Result<_>>()?;

    // Keys are the bit patterns of the coordinates: merging is exact and the
    // BTreeMap order is deterministic. The sort below restores numeric order.
    let mut merged: BTreeMap<Vec<u64>, (Vec<f64>, f64)> = BTreeMap::new();
    let lowest = (level + 1).saturating_sub(dim);
    for total in lowest..=level {
        let coeff = binomial(dim - 1, level - total) as f64;
        let coeff = if (level - total) % 2 == 0 { coeff } else { -coeff };
        for levels in compositions(dim, total) {
            let rules: Vec<&QuadratureRule> = levels.iter().map(|&l| &one_d[l]).collect();
            let (nodes, weights) = tensor_product(&rules);
            for (x, w) in nodes.chunks_exact(dim).zip(weights) {
                // Normalize -0.0 so symmetric nodes merge.
                let key: Vec<u64> = x.iter().map(|v| (v + 0.0).to_bits()).collect();
                merged
                    .entry(key)
                    .and_modify(|e| e.1 += coeff * w)
                    .or_insert_with(|| (x.iter().map(|v| v + 0.0).collect(), coeff * w));
            }
        }
    }
    let mut points: Vec<(Vec<f64>, f64)> = merged.into_values().collect();
    points.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut nodes = Vec::with_capacity(points.len() * dim);
    let mut weights = Vec::with_capacity(points.len());
    for (x, w) in points {
        nodes.extend(x);
        weights.push(w);
    }
    Ok(QuadratureRule {
        dim,
        nodes,
        weights,
        exactness: 2 * level + 1,
        level: Some(level),
    })
}

/// Smallest Smolyak level whose 1D exactness reaches `2p + 1`.
pub fn default_level(degree: usize) -> usize {
    degree
}
