//! Small reinforced-concrete problems used by the test suite and benchmarks.

use crate::error::Result;
use crate::fem::{grid_node, LoadProgram, Mesh, Observable};
use crate::material::{ConcreteSpec, RandomInputSpec, RandomTarget, RowProfile, ShearRetention, SteelParams};
use crate::model::{MaterialSpec, Model};

/// A model with its load program and observables.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub model: Model,
    pub program: LoadProgram,
    /// Deflection first, then the compressive tangent modulus probe.
    pub observables: Vec<Observable>,
}

pub const DESK_NX: usize = 4;
pub const DESK_NY: usize = 4;
/// Total midspan load (N) reached at the last of the 20 increments.
pub const DESK_LOAD: f64 = 30_000.0;

fn desk_concrete() -> ConcreteSpec {
    ConcreteSpec {
        f_c_prime: 24.1,
        alpha_e: 0.8,
        eps_c1: -0.0022,
        eps_c_lim: -0.0035,
        f_ctm: 2.5,
        nu: 0.2,
        eps_tu: None,
        e_ci: None,
        shear: ShearRetention::default(),
    }
}

fn desk_steel(rho_x: f64) -> SteelParams {
    SteelParams {
        e_s: 200_000.0,
        f_y: 555.0,
        e_sh: 2_000.0,
        eps_su: 0.1,
        rho_x,
        rho_y: 0.002,
    }
}

/// Half of a simply supported beam (2000 × 300 mm, 200 mm thick) on a 4×4 grid.
///
/// The left bottom corner is the roller support and the right edge is the
/// symmetry plane, where the point load acts downward at the top. The bottom
/// row carries the tension reinforcement. `α_E` is uniform with mean 0.8.
pub fn desk_beam(cov: f64) -> Result<Benchmark> {
    let (nx, ny) = (DESK_NX, DESK_NY);
    let mut fixed = vec![2 * grid_node(nx, 0, 0) + 1];
    fixed.extend((0..=ny).map(|j| 2 * grid_node(nx, nx, j)));
    let mesh = Mesh::rectangular(1000.0, 300.0, nx, ny, 200.0, |_, j| usize::from(j > 0), &fixed)?;
    let top = grid_node(nx, nx, ny);
    let dof = mesh.free_dof(top, 1).expect("loaded node is free vertically");
    let pattern = mesh.load_vector(&[(top, 1, -DESK_LOAD)])?;
    let n = mesh.n_free();
    let model = Model::new(
        mesh,
        vec![
            MaterialSpec::ReinforcedConcrete {
                concrete: desk_concrete(),
                steel: desk_steel(0.02),
            },
            MaterialSpec::ReinforcedConcrete {
                concrete: desk_concrete(),
                steel: desk_steel(0.002),
            },
        ],
        vec![RandomInputSpec {
            target: RandomTarget::AlphaE,
            mean: 0.8,
            cov,
            profile: None,
        }],
    )?;
    Ok(Benchmark {
        model,
        program: LoadProgram::uniform(vec![0.0; n], pattern, 20, 1e-6, 200),
        observables: vec![
            Observable::Displacement { dof, scale: -1.0 },
            Observable::TangentModulus {
                element: nx * ny - 1,
                point: 2,
            },
        ],
    })
}

pub const WALL_NX: usize = 3;
pub const WALL_NY: usize = 6;
pub const WALL_DEAD_LOAD: f64 = 200_000.0;
pub const WALL_LATERAL_LOAD: f64 = 150_000.0;
/// Relative residual tolerance of the wall's Newton iterations.
pub const WALL_TOLERANCE: f64 = 1e-10;

/// Cantilever wall 900 mm wide and 1800 mm tall (100 mm thick) on a 3×6 grid,
/// clamped at the base, with a constant vertical load on the top edge and a
/// lateral load at the top left corner increasing over 20 increments.
///
/// `f'_c` is uniform with a mean decreasing linearly from 31.5 MPa in the
/// bottom row to 28.5 MPa in the top row.
pub fn shear_wall(cov: f64) -> Result<Benchmark> {
    let (nx, ny) = (WALL_NX, WALL_NY);
    let fixed: Vec<usize> = (0..=nx)
        .flat_map(|i| [2 * grid_node(nx, i, 0), 2 * grid_node(nx, i, 0) + 1])
        .collect();
    let mesh = Mesh::rectangular(900.0, 1800.0, nx, ny, 100.0, |_, _| 0, &fixed)?;
    let top = grid_node(nx, 0, ny);
    let dof = mesh.free_dof(top, 0).expect("loaded node is free laterally");
    let share = |i: usize| if i == 0 || i == nx { 0.5 } else { 1.0 } / nx as f64;
    let dead: Vec<_> = (0..=nx)
        .map(|i| (grid_node(nx, i, ny), 1, -WALL_DEAD_LOAD * share(i)))
        .collect();
    let dead = mesh.load_vector(&dead)?;
    let pattern = mesh.load_vector(&[(top, 0, WALL_LATERAL_LOAD)])?;
    let concrete = ConcreteSpec {
        f_c_prime: 30.0,
        alpha_e: 1.0,
        eps_c1: -0.0022,
        eps_c_lim: -0.0035,
        f_ctm: 2.9,
        nu: 0.2,
        eps_tu: None,
        e_ci: None,
        shear: ShearRetention::default(),
    };
    let steel = SteelParams {
        e_s: 200_000.0,
        f_y: 500.0,
        e_sh: 2_000.0,
        eps_su: 0.1,
        rho_x: 0.006,
        rho_y: 0.006,
    };
    let model = Model::new(
        mesh,
        vec![MaterialSpec::ReinforcedConcrete { concrete, steel }],
        vec![RandomInputSpec {
            target: RandomTarget::FcPrime,
            mean: 30.0,
            cov,
            profile: Some(RowProfile { bottom: 31.5, top: 28.5 }),
        }],
    )?;
    Ok(Benchmark {
        model,
        program: LoadProgram::uniform(dead, pattern, 20, WALL_TOLERANCE, 300),
        observables: vec![
            Observable::Displacement { dof, scale: 1.0 },
            Observable::TangentModulus { element: nx - 1, point: 1 },
        ],
    })
}
