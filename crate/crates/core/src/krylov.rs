//! Preconditioned conjugate gradients, the mean-based and hierarchical
//! Gauss–Seidel preconditioners for the Galerkin block system, and a direct
//! sparse solve for deterministic systems.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::galerkin::SgSystem;
use crate::gpc::{GpcBasis, TensorEntry};
use crate::sparse::{CsrMatrix, SkylineCholesky};

pub trait LinearOperator: Sync {
    fn len(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

pub trait Preconditioner: Sync {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn len(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec(x, y);
    }
}

/// `z = r`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PreconditionerKind {
    None,
    MeanBased,
    HierarchicalGaussSeidel,
}

impl PreconditionerKind {
    pub fn tag(&self) -> &'static str {
        match self {
            PreconditionerKind::None => "none",
            PreconditionerKind::MeanBased => "mb",
            PreconditionerKind::HierarchicalGaussSeidel => "ahgs",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "none" => Some(PreconditionerKind::None),
            "mb" => Some(PreconditionerKind::MeanBased),
            "ahgs" => Some(PreconditionerKind::HierarchicalGaussSeidel),
            _ => None,
        }
    }
}

impl fmt::Display for PreconditionerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Outcome of one CG solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub preconditioner: PreconditionerKind,
    pub iterations: usize,
    /// `‖r_k‖ / ‖r_0‖` for `k = 0..=iterations`.
    pub history: Vec<f64>,
    pub converged: bool,
    pub elapsed: Duration,
}

impl SolveReport {
    pub fn final_relative_residual(&self) -> f64 {
        self.history.last().copied().unwrap_or(0.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned CG from a zero initial guess, stopping when
/// `‖r_k‖₂ / ‖r_0‖₂ ≤ tol` or after `max_iter` iterations (reported, not an error).
pub fn cg(
    op: &dyn LinearOperator,
    pc: &dyn Preconditioner,
    kind: PreconditionerKind,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = op.len();
    if rhs.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            actual: rhs.len(),
        });
    }
    let start = Instant::now();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let r0 = dot(&r, &r).sqrt();
    let mut report = SolveReport {
        preconditioner: kind,
        iterations: 0,
        history: vec![if r0 > 0.0 { 1.0 } else { 0.0 }],
        converged: true,
        elapsed: Duration::ZERO,
    };
    if r0 == 0.0 {
        report.elapsed = start.elapsed();
        return Ok((x, report));
    }
    let mut z = vec![0.0; n];
    pc.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    report.converged = false;
    for it in 1..=max_iter {
        op.apply(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(Error::Indefinite {
                iteration: it,
                curvature,
            });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = dot(&r, &r).sqrt() / r0;
        report.history.push(rel);
        report.iterations = it;
        if rel <= tol {
            report.converged = true;
            break;
        }
        pc.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    report.elapsed = start.elapsed();
    Ok((x, report))
}

/// Extreme Ritz values `(min, max)` of a symmetric operator after `steps`
/// Lanczos iterations with full reorthogonalization, started from a fixed
/// pseudo-random vector.
pub fn lanczos_extremes(op: &dyn LinearOperator, steps: usize) -> Result<(f64, f64)> {
    let n = op.len();
    if n == 0 || steps == 0 {
        return Err(Error::InvalidArgument("Lanczos needs a nonempty operator and at least one step".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c05);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let q_norm = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|x| *x /= q_norm);
    let mut basis = vec![q];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut w = vec![0.0; n];
    for j in 0..steps.min(n) {
        op.apply(&basis[j], &mut w);
        alpha.push(dot(&w, &basis[j]));
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
            }
        }
        let b = dot(&w, &w).sqrt();
        if j + 1 == steps.min(n) || b <= 1e-14 * alpha.iter().fold(0.0f64, |m, a| m.max(a.abs())) {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigenvalues();
    Ok((eig.min(), eig.max()))
}

/// Sparse Cholesky solve of an SPD system.
pub fn direct_solve(k: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != k.n() {
        return Err(Error::ShapeMismatch {
            expected: k.n(),
            actual: b.len(),
        });
    }
    Ok(SkylineCholesky::factor(k)?.solve(b))
}

/// `I ⊗ K_1` applied through one Cholesky factor of the mean matrix.
#[derive(Debug, Clone)]
pub struct MeanBased {
    factor: Arc<SkylineCholesky>,
    n_xi: usize,
}

impl MeanBased {
    pub fn new(factor: Arc<SkylineCholesky>, n_xi: usize) -> Self {
        Self { factor, n_xi }
    }

    pub fn n_xi(&self) -> usize {
        self.n_xi
    }
}

impl Preconditioner for MeanBased {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n_x = self.factor.n();
        z.copy_from_slice(r);
        z.par_chunks_mut(n_x).for_each(|block| self.factor.solve_in_place(block));
    }
}

/// Basis indices grouped by total degree; group `l` is solved with `I ⊗ K_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalPartition {
    groups: Vec<Range<usize>>,
}

impl HierarchicalPartition {
    pub fn new(basis: &GpcBasis) -> Self {
        Self {
            groups: basis.degree_groups(),
        }
    }

    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    fn group_of(&self, k: usize) -> usize {
        self.groups.iter().position(|g| g.contains(&k)).expect("index inside partition")
    }
}

/// Symmetric block Gauss–Seidel sweep over degree groups: forward from degree
/// 0 to `p`, then backward to degree 0, with every diagonal block replaced by
/// `I ⊗ K_1` and off-diagonal coupling applied from the stored tensor entries.
#[derive(Debug, Clone)]
pub struct HierarchicalGaussSeidel {
    factor: Arc<SkylineCholesky>,
    system: Arc<SgSystem>,
    partition: HierarchicalPartition,
    /// Per group: entries with `k` inside the group and `m` outside.
    coupling: Vec<Vec<TensorEntry>>,
}

impl HierarchicalGaussSeidel {
    pub fn new(factor: Arc<SkylineCholesky>, system: Arc<SgSystem>, partition: HierarchicalPartition) -> Self {
        let mut coupling = vec![Vec::new(); partition.groups.len()];
        for e in system.tensor().entries() {
            let gk = partition.group_of(e.k);
            if !partition.groups[gk].contains(&e.m) {
                coupling[gk].push(*e);
            }
        }
        Self {
            factor,
            system,
            partition,
            coupling,
        }
    }

    /// Group visiting order: `0, 1, ..., p, ..., 1, 0`.
    pub fn sweep_order(&self) -> Vec<usize> {
        let n = self.partition.groups.len();
        (0..n).chain((0..n.saturating_sub(1)).rev()).collect()
    }

    fn update_group(&self, g: usize, r: &[f64], v: &mut [f64], scratch: &mut [f64]) {
        let n_x = self.factor.n();
        let range = self.partition.groups[g].clone();
        let rows = range.start * n_x..range.end * n_x;
        scratch[..rows.len()].copy_from_slice(&r[rows.clone()]);
        let terms = self.system.terms();
        for e in &self.coupling[g] {
            let vm = &v[e.m * n_x..(e.m + 1) * n_x];
            if vm.iter().all(|&x| x == 0.0) {
                continue;
            }
            let off = (e.k - range.start) * n_x;
            terms[e.l].mul_vec_add(-e.value, vm, &mut scratch[off..off + n_x]);
        }
        let block = &mut scratch[..rows.len()];
        block.par_chunks_mut(n_x).for_each(|b| self.factor.solve_in_place(b));
        v[rows].copy_from_slice(block);
    }
}

impl Preconditioner for HierarchicalGaussSeidel {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.iter_mut().for_each(|x| *x = 0.0);
        let mut scratch = vec![0.0; r.len()];
        for g in self.sweep_order() {
            self.update_group(g, r, z, &mut scratch);
        }
    }
}
