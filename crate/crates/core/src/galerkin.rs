//! Stochastic Galerkin: gPC coefficient vectors, quadrature projection of the
//! tangent stiffness and internal force, the matrix-free block operator and
//! the stochastic modified Newton–Raphson loop.
//!
//! Path-dependent material history is carried by one full analysis instance per
//! projection node `ξ_q`. Each instance sees the displacement `u(ξ_q)` obtained
//! from the current expansion, so realized tangents and stresses at the nodes are
//! exactly those of the deterministic model driven along that path.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{norm, Analysis, LoadProgram, Observable, ABSOLUTE_TOLERANCE};
use crate::gpc::{GpcBasis, TensorEntry, TripleProductTensor};
use crate::krylov::{
    cg, lanczos_extremes, HierarchicalGaussSeidel, HierarchicalPartition, Identity, LinearOperator, MeanBased, Preconditioner,
    PreconditionerKind, SolveReport,
};
use crate::model::Model;
use crate::quadrature::QuadratureRule;
use crate::sparse::{CsrMatrix, SkylineCholesky};

/// `n_ξ` blocks of length `n_x`, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct GpcVector {
    n_x: usize,
    data: Vec<f64>,
}

impl GpcVector {
    pub fn zeros(n_xi: usize, n_x: usize) -> Self {
        Self {
            n_x,
            data: vec![0.0; n_xi * n_x],
        }
    }

    pub fn from_flat(n_x: usize, data: Vec<f64>) -> Result<Self> {
        if n_x == 0 || data.len() % n_x != 0 {
            return Err(Error::ShapeMismatch {
                expected: n_x,
                actual: data.len(),
            });
        }
        Ok(Self { n_x, data })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_xi(&self) -> usize {
        self.data.len() / self.n_x
    }

    pub fn block(&self, k: usize) -> &[f64] {
        &self.data[k * self.n_x..(k + 1) * self.n_x]
    }

    pub fn block_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.n_x..(k + 1) * self.n_x]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Euclidean norm over all blocks.
    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    /// `Σ_k ψ_k v_k` for precomputed basis values `ψ`.
    pub fn evaluate(&self, psi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_x];
        for (k, &p) in psi.iter().enumerate().take(self.n_xi()) {
            for (o, v) in out.iter_mut().zip(self.block(k)) {
                *o += p * v;
            }
        }
        out
    }

    /// Coefficients `(v_k)_dof` of one component.
    pub fn dof_coefficients(&self, dof: usize) -> Vec<f64> {
        (0..self.n_xi()).map(|k| self.data[k * self.n_x + dof]).collect()
    }
}

/// Matrix-free block operator `K_(k,m) = Σ_l c_lkm K_l`.
#[derive(Debug, Clone)]
pub struct SgSystem {
    terms: Vec<CsrMatrix>,
    tensor: Arc<TripleProductTensor>,
    by_row: Vec<Vec<TensorEntry>>,
}

impl SgSystem {
    pub fn new(terms: Vec<CsrMatrix>, tensor: Arc<TripleProductTensor>) -> Result<Self> {
        if terms.len() != tensor.n_k() {
            return Err(Error::ShapeMismatch {
                expected: tensor.n_k(),
                actual: terms.len(),
            });
        }
        if terms.iter().any(|t| t.pattern() != terms[0].pattern()) {
            return Err(Error::InvalidArgument("stiffness terms must share one pattern".into()));
        }
        let mut by_row = vec![Vec::new(); tensor.n_xi()];
        for e in tensor.entries() {
            by_row[e.k].push(*e);
        }
        Ok(Self { terms, tensor, by_row })
    }

    pub fn terms(&self) -> &[CsrMatrix] {
        &self.terms
    }

    pub fn tensor(&self) -> &TripleProductTensor {
        &self.tensor
    }

    pub fn n_x(&self) -> usize {
        self.terms[0].n()
    }

    pub fn n_xi(&self) -> usize {
        self.tensor.n_xi()
    }

    /// Dense `n_x n_ξ` square matrix; only for small checks.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let (n_x, n_xi) = (self.n_x(), self.n_xi());
        let mut d = vec![vec![0.0; n_x * n_xi]; n_x * n_xi];
        for e in self.tensor.entries() {
            let t = self.terms[e.l].to_dense();
            for i in 0..n_x {
                for j in 0..n_x {
                    d[e.k * n_x + i][e.m * n_x + j] += e.value * t[i][j];
                }
            }
        }
        d
    }
}

impl LinearOperator for SgSystem {
    fn len(&self) -> usize {
        self.n_x() * self.n_xi()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n_x = self.n_x();
        y.par_chunks_mut(n_x).enumerate().for_each(|(k, yk)| {
            yk.iter_mut().for_each(|v| *v = 0.0);
            for e in &self.by_row[k] {
                self.terms[e.l].mul_vec_add(e.value, &x[e.m * n_x..(e.m + 1) * n_x], yk);
            }
        });
    }
}

/// `(K v)_k = Σ_m Σ_l c_lkm K_l v_m`.
pub fn apply_block_operator(sys: &SgSystem, v: &GpcVector) -> Result<GpcVector> {
    if v.n_x() != sys.n_x() || v.n_xi() != sys.n_xi() {
        return Err(Error::ShapeMismatch {
            expected: sys.len(),
            actual: v.as_slice().len(),
        });
    }
    let mut out = GpcVector::zeros(sys.n_xi(), sys.n_x());
    sys.apply(v.as_slice(), out.as_mut_slice());
    Ok(out)
}

/// Basis values `ψ_k(ξ_q)` and weights of a projection rule.
///
/// Coefficients `j ≥ 1` whose basis function the rule integrates exactly are
/// projected from deviations `f_q - f_1`. This leaves them unchanged in exact
/// arithmetic and makes them exactly zero when every node sees the same value.
#[derive(Debug, Clone)]
pub struct ProjectionNodes {
    pub weights: Vec<f64>,
    pub psi: Vec<Vec<f64>>,
    centered: Vec<bool>,
}

impl ProjectionNodes {
    pub fn new(basis: &GpcBasis, rule: &QuadratureRule) -> Result<Self> {
        if rule.dim() != basis.dim() {
            return Err(Error::ShapeMismatch {
                expected: basis.dim(),
                actual: rule.dim(),
            });
        }
        let psi = rule
            .nodes()
            .enumerate()
            .map(|(q, x)| basis.eval_all(x).map_err(|e| Error::at_node(q, e)))
            .collect::<Result<Vec<_>>>()?;
        let centered = (0..basis.len())
            .map(|j| j > 0 && basis.total_degree(j) <= rule.exactness())
            .collect();
        Ok(Self {
            weights: rule.weights().to_vec(),
            psi,
            centered,
        })
    }

    fn weight(&self, q: usize, j: usize) -> f64 {
        self.psi[q][j] * self.weights[q]
    }

    /// `c_j = Σ_q f_q ψ_j(ξ_q) ω_q` for `j < n_terms`, summed in node order.
    pub fn project_scalars(&self, values: &[f64], n_terms: usize) -> Vec<f64> {
        let reference = values.first().copied().unwrap_or(0.0);
        let mut c = vec![0.0; n_terms];
        for (q, v) in values.iter().enumerate() {
            for (j, cj) in c.iter_mut().enumerate() {
                let f = if self.centered[j] { v - reference } else { *v };
                *cj += f * self.weight(q, j);
            }
        }
        c
    }

    /// Blockwise `Σ_q v_q ψ_j(ξ_q) ω_q` for `j < n_terms`.
    pub fn project_vectors<V: AsRef<[f64]>>(&self, vectors: &[V], n_terms: usize) -> GpcVector {
        let n_x = vectors.first().map_or(0, |v| v.as_ref().len());
        let mut out = GpcVector::zeros(n_terms, n_x);
        let Some(reference) = vectors.first().map(AsRef::as_ref) else {
            return out;
        };
        let mut deviation = vec![0.0; n_x];
        for (q, v) in vectors.iter().enumerate() {
            let v = v.as_ref();
            for ((d, a), b) in deviation.iter_mut().zip(v).zip(reference) {
                *d = a - b;
            }
            for j in 0..n_terms {
                let w = self.weight(q, j);
                let src = if self.centered[j] { &deviation } else { v };
                for (a, b) in out.block_mut(j).iter_mut().zip(src) {
                    *a += w * b;
                }
            }
        }
        out
    }
}

/// `K_j = Σ_q K(ξ_q) ψ_j(ξ_q) ω_q`, `j < n_k`, from one matrix per node.
pub fn project_matrices(nodes: &ProjectionNodes, matrices: &[CsrMatrix], n_k: usize) -> Result<Vec<CsrMatrix>> {
    let first = matrices.first().ok_or_else(|| Error::InvalidArgument("no node matrices".into()))?;
    for (q, m) in matrices.iter().enumerate() {
        if !Arc::ptr_eq(m.pattern(), first.pattern()) && m.pattern() != first.pattern() {
            return Err(Error::at_node(
                q,
                Error::InvalidArgument("node matrices must share one sparsity pattern".into()),
            ));
        }
    }
    let values: Vec<&[f64]> = matrices.iter().map(CsrMatrix::values).collect();
    let projected = nodes.project_vectors(&values, n_k);
    (0..n_k)
        .map(|j| CsrMatrix::from_values(first.pattern().clone(), projected.block(j).to_vec()))
        .collect()
}

/// Freezes tangents at every node and projects the stiffness onto the first `n_k` basis functions.
pub fn project_stiffness(analyses: &mut [Analysis<'_>], nodes: &ProjectionNodes, n_k: usize) -> Result<Vec<CsrMatrix>> {
    let matrices: Vec<CsrMatrix> = analyses.par_iter_mut().map(|a| a.begin_increment()).collect();
    project_matrices(nodes, &matrices, n_k)
}

/// `g_m = Σ_q g(ξ_q) ψ_m(ξ_q) ω_q` for every basis function.
pub fn project_internal_force(analyses: &[Analysis<'_>], nodes: &ProjectionNodes, n_xi: usize) -> GpcVector {
    let forces: Vec<Vec<f64>> = analyses.par_iter().map(|a| a.internal_force()).collect();
    nodes.project_vectors(&forces, n_xi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgOptions {
    pub preconditioner: PreconditionerKind,
    /// Extra preconditioners run on the same systems for comparison only.
    pub shadows: Vec<PreconditionerKind>,
    pub cg_tol: f64,
    pub max_iter: usize,
    /// Retained stiffness terms; defaults to `n_ξ`.
    pub n_k: Option<usize>,
    /// Lanczos steps for the per-increment SPD probe (0 disables it).
    pub spd_probe: usize,
}

impl Default for SgOptions {
    fn default() -> Self {
        Self {
            preconditioner: PreconditionerKind::HierarchicalGaussSeidel,
            shadows: Vec::new(),
            cg_tol: 1e-8,
            max_iter: 2000,
            n_k: None,
            spd_probe: 0,
        }
    }
}

/// CG reports of one Newton step: the primary solve first, then the shadows.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSolves {
    pub step: usize,
    pub reports: Vec<SolveReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgIncrement {
    pub u: GpcVector,
    pub steps: usize,
    pub residuals: Vec<f64>,
    /// gPC coefficients of every observable.
    pub observations: Vec<Vec<f64>>,
    pub solves: Vec<StepSolves>,
    /// Largest number of cracked Gauss points over the projection nodes.
    pub cracked_points: usize,
    /// Smallest Ritz value of the block operator when probing is enabled.
    pub smallest_ritz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SgHistory {
    pub increments: Vec<SgIncrement>,
    pub failure: Option<Error>,
}

/// Stochastic modified Newton–Raphson over the load program.
///
/// Setup problems (realization failures, shape errors) are returned as `Err`;
/// failures during the increments stop the run and are stored in the history
/// next to the increments that did converge.
pub fn sg_newton_raphson(
    model: &Model,
    program: &LoadProgram,
    basis: &GpcBasis,
    rule: &QuadratureRule,
    options: &SgOptions,
    observables: &[Observable],
) -> Result<SgHistory> {
    program.validate(model.mesh.n_free())?;
    for o in observables {
        o.validate(&model.mesh)?;
    }
    if basis.dim() != model.dim() {
        return Err(Error::ShapeMismatch {
            expected: model.dim(),
            actual: basis.dim(),
        });
    }
    let n_xi = basis.len();
    let n_k = options.n_k.unwrap_or(n_xi);
    let tensor = Arc::new(TripleProductTensor::new(basis, n_k, crate::gpc::DEFAULT_DROP_TOLERANCE)?);
    let nodes = ProjectionNodes::new(basis, rule)?;
    let mut analyses = rule
        .nodes()
        .enumerate()
        .map(|(q, x)| model.analysis(x).map_err(|e| Error::at_node(q, e)))
        .collect::<Result<Vec<_>>>()?;
    let partition = HierarchicalPartition::new(basis);
    let n_x = model.mesh.n_free();
    let mut u = GpcVector::zeros(n_xi, n_x);
    let mut history = SgHistory::default();

    for n in 0..program.n_increments() {
        let ctx = IncrementContext {
            program,
            options,
            nodes: &nodes,
            tensor: &tensor,
            partition: &partition,
            n,
        };
        match ctx.run(&mut analyses, &mut u) {
            Ok(IncrementOutcome { steps, residuals, solves, smallest_ritz }) => {
                let observations = observables
                    .iter()
                    .map(|o| match *o {
                        Observable::Displacement { dof, scale } => {
                            u.dof_coefficients(dof).into_iter().map(|c| scale * c).collect()
                        }
                        _ => {
                            let values: Vec<f64> = analyses.iter().map(|a| o.evaluate(a)).collect();
                            nodes.project_scalars(&values, n_xi)
                        }
                    })
                    .collect();
                history.increments.push(SgIncrement {
                    u: u.clone(),
                    steps,
                    residuals,
                    observations,
                    solves,
                    cracked_points: analyses.iter().map(Analysis::cracked_points).max().unwrap_or(0),
                    smallest_ritz,
                });
            }
            Err(e) => {
                history.failure = Some(e);
                break;
            }
        }
    }
    Ok(history)
}

struct IncrementOutcome {
    steps: usize,
    residuals: Vec<f64>,
    solves: Vec<StepSolves>,
    smallest_ritz: Option<f64>,
}

struct IncrementContext<'a> {
    program: &'a LoadProgram,
    options: &'a SgOptions,
    nodes: &'a ProjectionNodes,
    tensor: &'a Arc<TripleProductTensor>,
    partition: &'a HierarchicalPartition,
    n: usize,
}

impl IncrementContext<'_> {
    fn run(&self, analyses: &mut [Analysis<'_>], u: &mut GpcVector) -> Result<IncrementOutcome> {
        let (n_xi, n_x) = (u.n_xi(), u.n_x());
        let terms = project_stiffness(analyses, self.nodes, self.tensor.n_k())?;
        let factor = Arc::new(SkylineCholesky::factor(&terms[0])?);
        let system = Arc::new(SgSystem::new(terms, self.tensor.clone())?);
        let smallest_ritz = match self.options.spd_probe {
            0 => None,
            steps => Some(lanczos_extremes(system.as_ref(), steps)?.0),
        };
        let done = |steps, residuals, solves| IncrementOutcome {
            steps,
            residuals,
            solves,
            smallest_ritz,
        };
        let mb = MeanBased::new(factor.clone(), n_xi);
        let ahgs = HierarchicalGaussSeidel::new(factor, system.clone(), self.partition.clone());
        let pick = |kind: PreconditionerKind| -> &dyn Preconditioner {
            match kind {
                PreconditionerKind::None => &Identity,
                PreconditionerKind::MeanBased => &mb,
                PreconditionerKind::HierarchicalGaussSeidel => &ahgs,
            }
        };

        let f = self.program.load(self.n);
        let f_norm = norm(&f);
        let mut residuals = Vec::new();
        let mut solves = Vec::new();
        for step in 1..=self.program.max_steps {
            let r = residual(&f, project_internal_force(analyses, self.nodes, n_xi));
            let r_norm = r.norm();
            if !r_norm.is_finite() {
                return Err(Error::NoConvergence {
                    increment: self.n + 1,
                    residual: r_norm,
                });
            }
            if step > 1 && r_norm <= self.program.tol * f_norm {
                return Ok(done(step - 1, residuals, solves));
            }
            residuals.push(r_norm);

            let primary = self.options.preconditioner;
            let (du, report) = cg(
                system.as_ref(),
                pick(primary),
                primary,
                r.as_slice(),
                self.options.cg_tol,
                self.options.max_iter,
            )?;
            if !report.converged {
                return Err(Error::MaxIterations {
                    max_iter: self.options.max_iter,
                    residual: report.final_relative_residual(),
                });
            }
            let mut reports = vec![report];
            for &kind in self.options.shadows.iter().filter(|&&k| k != primary) {
                if let Ok((_, rep)) = cg(
                    system.as_ref(),
                    pick(kind),
                    kind,
                    r.as_slice(),
                    self.options.cg_tol,
                    self.options.max_iter,
                ) {
                    reports.push(rep);
                }
            }
            solves.push(StepSolves { step, reports });

            let du = GpcVector::from_flat(n_x, du)?;
            for (a, b) in u.as_mut_slice().iter_mut().zip(du.as_slice()) {
                *a += b;
            }
            analyses.par_iter_mut().enumerate().for_each(|(q, a)| {
                let du_q = du.evaluate(&self.nodes.psi[q]);
                a.apply_increment(&du_q);
            });
            if du.norm() <= self.program.tol * u.norm() + ABSOLUTE_TOLERANCE {
                return Ok(done(step, residuals, solves));
            }
        }
        let r = residual(&f, project_internal_force(analyses, self.nodes, n_xi));
        Err(Error::NoConvergence {
            increment: self.n + 1,
            residual: r.norm(),
        })
    }
}

/// `F - G` where only the mean block of `F` is nonzero.
fn residual(f: &[f64], mut g: GpcVector) -> GpcVector {
    for v in g.as_mut_slice().iter_mut() {
        *v = -*v;
    }
    for (a, b) in g.block_mut(0).iter_mut().zip(f) {
        *a += b;
    }
    g
}
