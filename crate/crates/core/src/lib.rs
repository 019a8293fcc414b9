//! Stochastic nonlinear finite elements for reinforced-concrete plane stress.
//!
//! Uncertain material parameters are propagated through an incremental
//! modified Newton–Raphson analysis by stochastic Galerkin ([`galerkin`]),
//! pseudospectral collocation and Monte Carlo ([`sampling`]). Galerkin block
//! systems are solved by preconditioned CG ([`krylov`]).

pub mod benchmarks;
pub mod error;
pub mod fem;
pub mod galerkin;
pub mod gpc;
pub mod krylov;
pub mod material;
pub mod model;
pub mod quadrature;
pub mod sampling;
pub mod sparse;
pub mod stats;

pub use error::{Error, Result};
pub use fem::{newton_raphson, Analysis, Element, LoadProgram, Mesh, NrHistory, Observable};
pub use galerkin::{sg_newton_raphson, GpcVector, SgHistory, SgOptions, SgSystem};
pub use gpc::{GpcBasis, TripleProductTensor};
pub use krylov::{PreconditionerKind, SolveReport};
pub use material::{
    ConcreteParams, ConcreteSpec, ElasticParams, GaussPointState, Material, RandomInputSpec, RandomTarget,
    RowProfile, ShearRetention, SteelParams,
};
pub use model::{MaterialSpec, Model};
pub use quadrature::QuadratureRule;
pub use sampling::{collocation, monte_carlo, CollocationResult, SampleEnsemble};
pub use stats::{ObservableSummary, PdfEstimate};
