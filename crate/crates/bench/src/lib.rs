//! Fixtures shared by the criterion benches.

use std::sync::Arc;

use sgfem_core::benchmarks::desk_beam;
use sgfem_core::galerkin::{project_stiffness, ProjectionNodes};
use sgfem_core::gpc::triple_products;
use sgfem_core::quadrature::smolyak;
use sgfem_core::sparse::SkylineCholesky;
use sgfem_core::{GpcBasis, SgSystem};

/// Initial Galerkin system of the desk beam at degree `p`.
pub struct DeskSystem {
    pub basis: GpcBasis,
    pub system: Arc<SgSystem>,
    pub factor: Arc<SkylineCholesky>,
}

pub fn desk_system(cov: f64, p: usize) -> DeskSystem {
    let bench = desk_beam(cov).expect("benchmark builds");
    let basis = GpcBasis::new(1, p).expect("valid degree");
    let rule = smolyak(1, p).expect("valid level");
    let nodes = ProjectionNodes::new(&basis, &rule).expect("rule matches basis");
    let mut analyses: Vec<_> = rule
        .nodes()
        .map(|x| bench.model.analysis(x).expect("node inside support"))
        .collect();
    let terms = project_stiffness(&mut analyses, &nodes, basis.len()).expect("projection");
    let factor = Arc::new(SkylineCholesky::factor(&terms[0]).expect("mean stiffness is SPD"));
    let tensor = Arc::new(triple_products(&basis, basis.len()).expect("tensor"));
    let system = Arc::new(SgSystem::new(terms, tensor).expect("consistent shapes"));
    DeskSystem { basis, system, factor }
}

/// Deterministic right-hand side of length `n`.
pub fn rhs(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect()
}
