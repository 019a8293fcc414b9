//! Orthonormal polynomial chaos basis for i.i.d. uniform inputs and the
//! triple-product tensor `c_lkm = <ψ_l ψ_k ψ_m>`.
//!
//! Basis functions are ordered by total degree; within one degree, multi-indices
//! are sorted in descending lexicographic order, so `ψ_2` is always the linear
//! polynomial in `ξ_1`. This order is part of every coefficient file written by
//! the runner.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre_1d, QuadratureRule};

/// Univariate polynomial family. Only uniform inputs (Legendre) are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Family {
    #[default]
    Legendre,
}

/// Density-normalized Legendre polynomials `√(2n+1) P_n(x)` for `n = 0..=degree`.
pub fn legendre_values(degree: usize, x: f64, out: &mut [f64]) {
    debug_assert!(out.len() > degree);
    out[0] = 1.0;
    if degree == 0 {
        return;
    }
    out[1] = x;
    for n in 1..degree {
        let nf = n as f64;
        out[n + 1] = ((2.0 * nf + 1.0) * x * out[n] - nf * out[n - 1]) / (nf + 1.0);
    }
    for (n, v) in out.iter_mut().enumerate().take(degree + 1) {
        *v *= (2.0 * n as f64 + 1.0).sqrt();
    }
}

/// Total-degree gPC basis in `m_xi` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct GpcBasis {
    family: Family,
    dim: usize,
    degree: usize,
    multi_indices: Vec<Vec<usize>>,
}

impl GpcBasis {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        Self::with_family(Family::Legendre, dim, degree)
    }

    pub fn with_family(family: Family, dim: usize, degree: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "gPC basis needs at least one random variable".into(),
            ));
        }
        let mut multi_indices = Vec::new();
        for total in 0..=degree {
            let mut level = Vec::new();
            collect_indices(dim, total, &mut Vec::with_capacity(dim), &mut level);
            level.sort_by(|a, b| b.cmp(a));
            multi_indices.extend(level);
        }
        Ok(Self {
            family,
            dim,
            degree,
            multi_indices,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Number of random variables `m_xi`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Basis cardinality `n_xi = C(m_xi + p, p)`.
    pub fn len(&self) -> usize {
        self.multi_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multi_indices.is_empty()
    }

    pub fn multi_index(&self, index: usize) -> &[usize] {
        &self.multi_indices[index]
    }

    pub fn multi_indices(&self) -> &[Vec<usize>] {
        &self.multi_indices
    }

    /// Total degree of basis function `index` (0-based).
    pub fn total_degree(&self, index: usize) -> usize {
        self.multi_indices[index].iter().sum()
    }

    fn check_point(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dim {
            return Err(Error::ShapeMismatch {
                expected: self.dim,
                actual: xi.len(),
            });
        }
        for (dim, &value) in xi.iter().enumerate() {
            if !(-1.0..=1.0).contains(&value) {
                return Err(Error::OutsideSupport { dim, value });
            }
        }
        Ok(())
    }

    /// Evaluates `ψ_index(ξ)` with a 0-based index.
    pub fn eval(&self, index: usize, xi: &[f64]) -> Result<f64> {
        if index >= self.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.len(),
            });
        }
        self.check_point(xi)?;
        let mut table = vec![0.0; self.degree + 1];
        let mut value = 1.0;
        for (d, &x) in xi.iter().enumerate() {
            legendre_values(self.degree, x, &mut table);
            value *= table[self.multi_indices[index][d]];
        }
        Ok(value)
    }

    /// Evaluates every basis function at `ξ`.
    pub fn eval_all(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.check_point(xi)?;
        let stride = self.degree + 1;
        let mut tables = vec![0.0; stride * self.dim];
        for (d, &x) in xi.iter().enumerate() {
            legendre_values(self.degree, x, &mut tables[d * stride..(d + 1) * stride]);
        }
        Ok(self
            .multi_indices
            .iter()
            .map(|alpha| {
                alpha
                    .iter()
                    .enumerate()
                    .map(|(d, &a)| tables[d * stride + a])
                    .product()
            })
            .collect())
    }

    /// `Σ_k coeffs[k] ψ_k(ξ)`.
    pub fn evaluate_expansion(&self, coeffs: &[f64], xi: &[f64]) -> Result<f64> {
        if coeffs.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                actual: coeffs.len(),
            });
        }
        let psi = self.eval_all(xi)?;
        Ok(psi.iter().zip(coeffs).map(|(p, c)| p * c).sum())
    }

    /// Basis indices grouped by total degree: group `l` holds every function of degree `l`.
    pub fn degree_groups(&self) -> Vec<std::ops::Range<usize>> {
        let mut groups = Vec::with_capacity(self.degree + 1);
        let mut start = 0;
        for d in 0..=self.degree {
            let mut end = start;
            while end < self.len() && self.total_degree(end) == d {
                end += 1;
            }
            groups.push(start..end);
            start = end;
        }
        groups
    }
}

fn collect_indices(dim: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if dim == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in 0..=total {
        prefix.push(first);
        collect_indices(dim - 1, total - first, prefix, out);
        prefix.pop();
    }
}

/// Quadrature estimate of the Gram matrix `<ψ_k ψ_l>`.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub values: Vec<Vec<f64>>,
    /// Set when the rule is not exact for degree `2p`; the values are then only estimates.
    pub insufficient_exactness: bool,
}

pub fn gram_matrix(basis: &GpcBasis, rule: &QuadratureRule) -> Result<GramMatrix> {
    if rule.dim() != basis.dim() {
        return Err(Error::ShapeMismatch {
            expected: basis.dim(),
            actual: rule.dim(),
        });
    }
    let n = basis.len();
    let mut values = vec![vec![0.0; n]; n];
    for (x, &w) in rule.nodes().zip(rule.weights()) {
        let psi = basis.eval_all(x)?;
        for k in 0..n {
            for l in 0..n {
                values[k][l] += psi[k] * psi[l] * w;
            }
        }
    }
    Ok(GramMatrix {
        values,
        insufficient_exactness: rule.exactness() < 2 * basis.degree(),
    })
}

/// One stored coefficient of the triple-product tensor (0-based indices).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorEntry {
    pub l: usize,
    pub k: usize,
    pub m: usize,
    pub value: f64,
}

/// Sparse `c_lkm = <ψ_l ψ_k ψ_m>` with the first index restricted to `l < n_k`.
#[derive(Debug, Clone)]
pub struct TripleProductTensor {
    n_xi: usize,
    n_k: usize,
    canonical: BTreeMap<(usize, usize, usize), f64>,
    entries: Vec<TensorEntry>,
}

pub const DEFAULT_DROP_TOLERANCE: f64 = 1e-12;

/// Builds the tensor with the default drop tolerance.
pub fn triple_products(basis: &GpcBasis, n_k: usize) -> Result<TripleProductTensor> {
    TripleProductTensor::new(basis, n_k, DEFAULT_DROP_TOLERANCE)
}

impl TripleProductTensor {
    /// Entries are products of 1D triple products, each integrated with a
    /// Gauss rule exact for degree `3p`.
    pub fn new(basis: &GpcBasis, n_k: usize, drop_tol: f64) -> Result<Self> {
        let n_xi = basis.len();
        if n_k == 0 || n_k > n_xi {
            return Err(Error::InvalidArgument(format!(
                "retained term count n_K = {n_k} must lie in 1..={n_xi}"
            )));
        }
        let p = basis.degree();
        let rule = gauss_legendre_1d(3 * p / 2 + 1)?;
        let stride = p + 1;
        let mut table1d = vec![0.0; stride * stride * stride];
        let mut psi = vec![0.0; stride];
        for (x, &w) in rule.nodes().zip(rule.weights()) {
            legendre_values(p, x[0], &mut psi);
            for a in 0..=p {
                for b in 0..=p {
                    for c in 0..=p {
                        table1d[(a * stride + b) * stride + c] += psi[a] * psi[b] * psi[c] * w;
                    }
                }
            }
        }
        let one_d = |a: usize, b: usize, c: usize| -> f64 {
            // 1D selection rule: parity and triangle inequality.
            if (a + b + c) % 2 == 1 || a > b + c || b > a + c || c > a + b {
                0.0
            } else if a.min(b).min(c) == 0 {
                // ψ_0 = 1, so the product reduces to orthonormality.
                1.0
            } else {
                table1d[(a * stride + b) * stride + c]
            }
        };

        let mi = basis.multi_indices();
        let mut canonical = BTreeMap::new();
        for l in 0..n_xi {
            for k in l..n_xi {
                for m in k..n_xi {
                    let value: f64 = (0..basis.dim())
                        .map(|d| one_d(mi[l][d], mi[k][d], mi[m][d]))
                        .product();
                    if value.abs() > drop_tol {
                        canonical.insert((l, k, m), value);
                    }
                }
            }
        }
        let mut entries = Vec::new();
        for l in 0..n_k {
            for k in 0..n_xi {
                for m in 0..n_xi {
                    if let Some(&value) = canonical.get(&sorted3(l, k, m)) {
                        entries.push(TensorEntry { l, k, m, value });
                    }
                }
            }
        }
        Ok(Self {
            n_xi,
            n_k,
            canonical,
            entries,
        })
    }

    pub fn n_xi(&self) -> usize {
        self.n_xi
    }

    pub fn n_k(&self) -> usize {
        self.n_k
    }

    /// `c_lkm` for any index order (0-based); zero when not stored.
    pub fn get(&self, l: usize, k: usize, m: usize) -> f64 {
        self.canonical
            .get(&sorted3(l, k, m))
            .copied()
            .unwrap_or(0.0)
    }

    /// Every stored coefficient with `l < n_K`, ordered by `(l, k, m)`.
    pub fn entries(&self) -> &[TensorEntry] {
        &self.entries
    }

    /// Text export: one `l k m value` row per entry, 1-based indices.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(out, "{} {} {} {:.16e}", e.l + 1, e.k + 1, e.m + 1, e.value);
        }
        out
    }
}

fn sorted3(a: usize, b: usize, c: usize) -> (usize, usize, usize) {
    let mut v = [a, b, c];
    v.sort_unstable();
    (v[0], v[1], v[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::tensor_gauss;
    use approx::assert_abs_diff_eq;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn cardinality_and_ordering() {
        for dim in 1..=4 {
            for p in 0..=6 {
                let b = GpcBasis::new(dim, p).unwrap();
                assert_eq!(b.len(), binomial(dim + p, p));
                assert!(b.multi_index(0).iter().all(|&a| a == 0));
                let degrees: Vec<_> = (0..b.len()).map(|i| b.total_degree(i)).collect();
                assert!(degrees.windows(2).all(|w| w[0] <= w[1]));
                let mut uniq = b.multi_indices().to_vec();
                uniq.sort();
                uniq.dedup();
                assert_eq!(uniq.len(), b.len());
            }
        }
        let b = GpcBasis::new(2, 1).unwrap();
        assert_eq!(b.multi_index(1), &[1, 0]);
        assert_eq!(b.multi_index(2), &[0, 1]);
    }

    #[test]
    fn eval_examples() {
        let b = GpcBasis::new(1, 4).unwrap();
        assert_eq!(b.eval(0, &[0.37]).unwrap(), 1.0);
        assert_abs_diff_eq!(b.eval(1, &[0.5]).unwrap(), 3f64.sqrt() * 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b.eval(2, &[1.0]).unwrap(), 5f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn eval_errors() {
        let b = GpcBasis::new(2, 2).unwrap();
        assert!(matches!(b.eval(6, &[0.0, 0.0]), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(b.eval(1, &[0.0, 1.5]), Err(Error::OutsideSupport { dim: 1, .. })));
        assert!(matches!(b.eval(1, &[0.0]), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn gram_identity() {
        let b = GpcBasis::new(1, 0).unwrap();
        let g = gram_matrix(&b, &gauss_legendre_1d(1).unwrap()).unwrap();
        assert_eq!(g.values, vec![vec![1.0]]);

        let b = GpcBasis::new(2, 3).unwrap();
        let g = gram_matrix(&b, &tensor_gauss(2, 4).unwrap()).unwrap();
        assert!(!g.insufficient_exactness);
        for k in 0..b.len() {
            for l in 0..b.len() {
                let expect = if k == l { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(g.values[k][l], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gram_flags_low_exactness() {
        let b = GpcBasis::new(1, 4).unwrap();
        let g = gram_matrix(&b, &gauss_legendre_1d(3).unwrap()).unwrap();
        assert!(g.insufficient_exactness);
    }

    #[test]
    fn triple_product_examples() {
        let b = GpcBasis::new(1, 4).unwrap();
        let t = triple_products(&b, b.len()).unwrap();
        // Oracle: 50-point rule applied to ψ_2²ψ_3 directly.
        let rule = gauss_legendre_1d(50).unwrap();
        let oracle = rule.integrate(|x| {
            let p1 = 3f64.sqrt() * x[0];
            let p2 = 5f64.sqrt() * 0.5 * (3.0 * x[0] * x[0] - 1.0);
            p1 * p1 * p2
        });
        assert_abs_diff_eq!(oracle, 2.0 / 5f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(t.get(1, 1, 2), oracle, epsilon = 1e-12);
        assert_eq!(t.get(1, 1, 1), 0.0);
        for k in 0..b.len() {
            for m in 0..b.len() {
                let expect = if k == m { 1.0 } else { 0.0 };
                assert_eq!(t.get(0, k, m), expect);
            }
        }
    }

    #[test]
    fn triple_product_matches_quadrature_oracle_multid() {
        let b = GpcBasis::new(2, 3).unwrap();
        let t = triple_products(&b, b.len()).unwrap();
        let rule = tensor_gauss(2, 8).unwrap();
        for l in 0..b.len() {
            for k in 0..b.len() {
                for m in 0..b.len() {
                    let oracle = rule.integrate(|x| {
                        b.eval(l, x).unwrap() * b.eval(k, x).unwrap() * b.eval(m, x).unwrap()
                    });
                    assert_abs_diff_eq!(t.get(l, k, m), oracle, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn entries_restricted_to_retained_terms() {
        let b = GpcBasis::new(1, 3).unwrap();
        let t = triple_products(&b, 2).unwrap();
        assert!(t.entries().iter().all(|e| e.l < 2));
        assert!(triple_products(&b, 5).is_err());
        assert!(triple_products(&b, 0).is_err());
    }

    #[test]
    fn text_export_is_one_based() {
        let b = GpcBasis::new(1, 1).unwrap();
        let t = triple_products(&b, 2).unwrap();
        let text = t.to_text();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("1 1 1 "));
        let value: f64 = first.split_whitespace().nth(3).unwrap().parse().unwrap();
        assert_abs_diff_eq!(value, 1.0, epsilon = 1e-15);
    }
}
