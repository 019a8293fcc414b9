//! Plane-stress finite elements: mesh, bilinear quadrilateral, assembly over
//! free DOFs and the incremental modified Newton–Raphson driver.

use std::sync::Arc;

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::material::{update_state, GaussPointState, Mat3, Material, Tangent, Vec3};
use crate::sparse::{CsrMatrix, CsrPattern, SkylineCholesky};

pub type BMatrix = SMatrix<f64, 3, 8>;
pub type ElementMatrix = SMatrix<f64, 8, 8>;
pub type ElementVector = SVector<f64, 8>;

const G: f64 = 0.577_350_269_189_625_8;

/// 2×2 Gauss points in natural coordinates; all weights are one.
pub const GAUSS_2X2: [(f64, f64); 4] = [(-G, -G), (G, -G), (G, G), (-G, G)];

const CORNERS: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];

/// Bilinear shape functions at `(ζ, η)`.
pub fn shape_functions(zeta: f64, eta: f64) -> [f64; 4] {
    CORNERS.map(|(a, b)| 0.25 * (1.0 + a * zeta) * (1.0 + b * eta))
}

/// Strain–displacement matrix and Jacobian determinant at `(ζ, η)`.
pub fn element_b(element: usize, coords: &[[f64; 2]; 4], zeta: f64, eta: f64) -> Result<(BMatrix, f64)> {
    let mut d_zeta = [0.0; 4];
    let mut d_eta = [0.0; 4];
    for (a, &(za, ea)) in CORNERS.iter().enumerate() {
        d_zeta[a] = 0.25 * za * (1.0 + ea * eta);
        d_eta[a] = 0.25 * ea * (1.0 + za * zeta);
    }
    let (mut j11, mut j12, mut j21, mut j22) = (0.0, 0.0, 0.0, 0.0);
    for a in 0..4 {
        j11 += d_zeta[a] * coords[a][0];
        j12 += d_zeta[a] * coords[a][1];
        j21 += d_eta[a] * coords[a][0];
        j22 += d_eta[a] * coords[a][1];
    }
    let det_j = j11 * j22 - j12 * j21;
    if det_j <= 0.0 || !det_j.is_finite() {
        return Err(Error::SingularJacobian { element, det_j });
    }
    let mut b = BMatrix::zeros();
    for a in 0..4 {
        let nx = (j22 * d_zeta[a] - j12 * d_eta[a]) / det_j;
        let ny = (-j21 * d_zeta[a] + j11 * d_eta[a]) / det_j;
        b[(0, 2 * a)] = nx;
        b[(1, 2 * a + 1)] = ny;
        b[(2, 2 * a)] = ny;
        b[(2, 2 * a + 1)] = nx;
    }
    Ok((b, det_j))
}

/// Four-node quadrilateral, nodes counterclockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub nodes: [usize; 4],
    pub thickness: f64,
    pub material: usize,
    /// Mesh row, counted from the bottom.
    pub row: usize,
}

#[derive(Debug, Clone)]
struct GaussGeometry {
    b: BMatrix,
    /// `ω det J t`.
    weight: f64,
}

/// Nodes, elements, constraints and everything precomputed from them: the
/// free-DOF numbering, Gauss-point geometry and the sparsity pattern.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    elements: Vec<Element>,
    free_index: Vec<Option<usize>>,
    n_free: usize,
    n_rows: usize,
    geometry: Vec<[GaussGeometry; 4]>,
    element_dofs: Vec<[Option<usize>; 8]>,
    pattern: Arc<CsrPattern>,
    scatter: Vec<Vec<(usize, usize, usize)>>,
}

impl Mesh {
    /// `constrained` lists global DOF ids `2·node + component` fixed at zero.
    pub fn new(nodes: Vec<[f64; 2]>, elements: Vec<Element>, constrained: &[usize]) -> Result<Self> {
        let n_dof = 2 * nodes.len();
        let mut fixed = vec![false; n_dof];
        for &d in constrained {
            if d >= n_dof {
                return Err(Error::IndexOutOfRange { index: d, len: n_dof });
            }
            fixed[d] = true;
        }
        let mut free_index = vec![None; n_dof];
        let mut n_free = 0;
        for (d, slot) in free_index.iter_mut().enumerate() {
            if !fixed[d] {
                *slot = Some(n_free);
                n_free += 1;
            }
        }

        let mut geometry = Vec::with_capacity(elements.len());
        let mut element_dofs = Vec::with_capacity(elements.len());
        for (e, el) in elements.iter().enumerate() {
            for &n in &el.nodes {
                if n >= nodes.len() {
                    return Err(Error::IndexOutOfRange { index: n, len: nodes.len() });
                }
            }
            if el.thickness <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "element {e}: thickness {} must be positive",
                    el.thickness
                )));
            }
            let coords = el.nodes.map(|n| nodes[n]);
            let mut g = Vec::with_capacity(4);
            for &(z, h) in &GAUSS_2X2 {
                let (b, det_j) = element_b(e, &coords, z, h)?;
                g.push(GaussGeometry {
                    b,
                    weight: det_j * el.thickness,
                });
            }
            geometry.push(<[GaussGeometry; 4]>::try_from(g).expect("four Gauss points"));
            let mut dofs = [None; 8];
            for (a, &n) in el.nodes.iter().enumerate() {
                dofs[2 * a] = free_index[2 * n];
                dofs[2 * a + 1] = free_index[2 * n + 1];
            }
            element_dofs.push(dofs);
        }

        let pairs = element_dofs.iter().flat_map(|dofs| {
            dofs.iter()
                .flatten()
                .flat_map(move |&r| dofs.iter().flatten().map(move |&c| (r, c)))
        });
        let pattern = Arc::new(CsrPattern::from_entries(n_free, pairs)?);
        let scatter = element_dofs
            .iter()
            .map(|dofs| {
                let mut s = Vec::new();
                for (a, ra) in dofs.iter().enumerate() {
                    for (b, cb) in dofs.iter().enumerate() {
                        if let (Some(r), Some(c)) = (ra, cb) {
                            s.push((a, b, pattern.position(*r, *c).expect("pattern covers element")));
                        }
                    }
                }
                s
            })
            .collect();
        let n_rows = elements.iter().map(|e| e.row + 1).max().unwrap_or(0);
        Ok(Self {
            nodes,
            elements,
            free_index,
            n_free,
            n_rows,
            geometry,
            element_dofs,
            pattern,
            scatter,
        })
    }

    /// Structured `nx × ny` grid over `[0, length] × [0, height]`. Node `(i, j)`
    /// has index `j (nx + 1) + i`; element `(i, j)` is in row `j`.
    pub fn rectangular(
        length: f64,
        height: f64,
        nx: usize,
        ny: usize,
        thickness: f64,
        material_of: impl Fn(usize, usize) -> usize,
        constrained: &[usize],
    ) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument("grid needs at least one element per side".into()));
        }
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([length * i as f64 / nx as f64, height * j as f64 / ny as f64]);
            }
        }
        let mut elements = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let n0 = grid_node(nx, i, j);
                elements.push(Element {
                    nodes: [n0, n0 + 1, n0 + nx + 2, n0 + nx + 1],
                    thickness,
                    material: material_of(i, j),
                    row: j,
                });
            }
        }
        Self::new(nodes, elements, constrained)
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Number of element rows (largest row index plus one).
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn pattern(&self) -> &Arc<CsrPattern> {
        &self.pattern
    }

    /// Free-DOF index of node component `comp` (0 = x, 1 = y), `None` if constrained.
    pub fn free_dof(&self, node: usize, comp: usize) -> Option<usize> {
        self.free_index.get(2 * node + comp).copied().flatten()
    }

    /// Free-DOF external load vector from `(node, component, value)` entries.
    pub fn load_vector(&self, loads: &[(usize, usize, f64)]) -> Result<Vec<f64>> {
        let mut f = vec![0.0; self.n_free];
        for &(node, comp, value) in loads {
            if node >= self.nodes.len() || comp > 1 {
                return Err(Error::IndexOutOfRange {
                    index: 2 * node + comp,
                    len: 2 * self.nodes.len(),
                });
            }
            let d = self.free_dof(node, comp).ok_or_else(|| {
                Error::InvalidArgument(format!("load on constrained DOF (node {node}, component {comp})"))
            })?;
            f[d] += value;
        }
        Ok(f)
    }

    /// Element displacement vector gathered from free DOFs (constrained entries zero).
    pub fn gather(&self, element: usize, u: &[f64]) -> ElementVector {
        ElementVector::from_iterator(self.element_dofs[element].iter().map(|d| d.map_or(0.0, |i| u[i])))
    }

    pub fn strain(&self, element: usize, point: usize, u_e: &ElementVector) -> Vec3 {
        self.geometry[element][point].b * u_e
    }

    /// `K_e = Σ ω Bᵀ D B det J t` over the 2×2 rule.
    pub fn element_stiffness(&self, element: usize, d: &[Mat3; 4]) -> ElementMatrix {
        let mut k = ElementMatrix::zeros();
        for (g, dq) in self.geometry[element].iter().zip(d) {
            k += g.b.transpose() * dq * g.b * g.weight;
        }
        k
    }

    /// `g_e = Σ ω Bᵀ σ det J t`.
    pub fn element_internal_force(&self, element: usize, stresses: &[Vec3; 4]) -> ElementVector {
        let mut g = ElementVector::zeros();
        for (geo, s) in self.geometry[element].iter().zip(stresses) {
            g += geo.b.transpose() * s * geo.weight;
        }
        g
    }

    /// Scatter-adds element matrices into the free-DOF system.
    pub fn assemble_matrix(&self, element_matrix: impl Fn(usize) -> ElementMatrix) -> CsrMatrix {
        let mut k = CsrMatrix::zeros(self.pattern.clone());
        let values = k.values_mut();
        for e in 0..self.elements.len() {
            let ke = element_matrix(e);
            for &(a, b, pos) in &self.scatter[e] {
                values[pos] += ke[(a, b)];
            }
        }
        k
    }

    pub fn assemble_vector(&self, element_vector: impl Fn(usize) -> ElementVector) -> Vec<f64> {
        let mut v = vec![0.0; self.n_free];
        for e in 0..self.elements.len() {
            let ve = element_vector(e);
            for (a, d) in self.element_dofs[e].iter().enumerate() {
                if let Some(i) = d {
                    v[*i] += ve[a];
                }
            }
        }
        v
    }
}

/// Node index of grid point `(i, j)` in [`Mesh::rectangular`].
pub fn grid_node(nx: usize, i: usize, j: usize) -> usize {
    j * (nx + 1) + i
}

/// Load schedule: `f^n = dead + scale_n · pattern`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProgram {
    pub dead: Vec<f64>,
    pub pattern: Vec<f64>,
    pub scales: Vec<f64>,
    /// Relative tolerance on `‖Δu‖ / ‖u‖` and on `‖f - g‖ / ‖f‖`.
    pub tol: f64,
    pub max_steps: usize,
}

impl LoadProgram {
    /// `n_inc` equal increments up to the full pattern.
    pub fn uniform(dead: Vec<f64>, pattern: Vec<f64>, n_inc: usize, tol: f64, max_steps: usize) -> Self {
        let scales = (1..=n_inc).map(|i| i as f64 / n_inc as f64).collect();
        Self {
            dead,
            pattern,
            scales,
            tol,
            max_steps,
        }
    }

    pub fn n_increments(&self) -> usize {
        self.scales.len()
    }

    pub fn validate(&self, n_free: usize) -> Result<()> {
        for v in [&self.dead, &self.pattern] {
            if v.len() != n_free {
                return Err(Error::ShapeMismatch {
                    expected: n_free,
                    actual: v.len(),
                });
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {} must be positive", self.tol)));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be at least 1".into()));
        }
        let mut prev = 0.0;
        for &s in &self.scales {
            if !(0.0..=1.0).contains(&s) || s < prev {
                return Err(Error::InvalidArgument(
                    "load scales must be nondecreasing within [0, 1]".into(),
                ));
            }
            prev = s;
        }
        Ok(())
    }

    /// External load of increment `n` (0-based).
    pub fn load(&self, n: usize) -> Vec<f64> {
        self.dead
            .iter()
            .zip(&self.pattern)
            .map(|(d, p)| d + self.scales[n] * p)
            .collect()
    }
}

/// Scalar response quantity extracted after each converged increment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    /// `scale · u[dof]` for a free DOF.
    Displacement { dof: usize, scale: f64 },
    /// Compressive tangent modulus at one Gauss point.
    TangentModulus { element: usize, point: usize },
}

impl Observable {
    pub fn evaluate(&self, analysis: &Analysis<'_>) -> f64 {
        match *self {
            Observable::Displacement { dof, scale } => scale * analysis.u[dof],
            Observable::TangentModulus { element, point } => {
                analysis.materials[element].compressive_tangent(&analysis.states[element][point])
            }
        }
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        match *self {
            Observable::Displacement { dof, .. } if dof >= mesh.n_free() => Err(Error::IndexOutOfRange {
                index: dof,
                len: mesh.n_free(),
            }),
            Observable::TangentModulus { element, point }
                if element >= mesh.elements().len() || point >= 4 =>
            {
                Err(Error::IndexOutOfRange {
                    index: element,
                    len: mesh.elements().len(),
                })
            }
            _ => Ok(()),
        }
    }
}

/// One deterministic analysis instance: materials, Gauss-point history and the
/// current displacement.
#[derive(Debug, Clone)]
pub struct Analysis<'m> {
    mesh: &'m Mesh,
    materials: Vec<Material>,
    states: Vec<[GaussPointState; 4]>,
    tangents: Vec<[Tangent; 4]>,
    u: Vec<f64>,
}

impl<'m> Analysis<'m> {
    /// `materials` holds one realized material per element.
    pub fn new(mesh: &'m Mesh, materials: Vec<Material>) -> Result<Self> {
        if materials.len() != mesh.elements().len() {
            return Err(Error::ShapeMismatch {
                expected: mesh.elements().len(),
                actual: materials.len(),
            });
        }
        for m in &materials {
            m.validate()?;
        }
        let states = vec![Default::default(); materials.len()];
        let tangents = materials
            .iter()
            .map(|m| [m.tangent(&GaussPointState::default()); 4])
            .collect();
        Ok(Self {
            mesh,
            materials,
            states,
            tangents,
            u: vec![0.0; mesh.n_free()],
        })
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn displacement(&self) -> &[f64] {
        &self.u
    }

    pub fn states(&self) -> &[[GaussPointState; 4]] {
        &self.states
    }

    /// Number of Gauss points with at least one crack.
    pub fn cracked_points(&self) -> usize {
        self.states.iter().flatten().filter(|s| s.crack.rank() > 0).count()
    }

    /// Freezes tangents at the committed state and assembles `K^n`.
    pub fn begin_increment(&mut self) -> CsrMatrix {
        for (e, m) in self.materials.iter().enumerate() {
            for q in 0..4 {
                self.tangents[e][q] = m.tangent(&self.states[e][q]);
            }
        }
        self.stiffness()
    }

    /// Stiffness from the frozen tangents.
    pub fn stiffness(&self) -> CsrMatrix {
        self.mesh.assemble_matrix(|e| {
            let d = self.tangents[e].map(|t| t.total());
            self.mesh.element_stiffness(e, &d)
        })
    }

    /// `u += du` and advances every Gauss point with the frozen tangents.
    pub fn apply_increment(&mut self, du: &[f64]) {
        for (ui, di) in self.u.iter_mut().zip(du) {
            *ui += di;
        }
        for e in 0..self.materials.len() {
            let du_e = self.mesh.gather(e, du);
            for q in 0..4 {
                let d_strain = self.mesh.strain(e, q, &du_e);
                self.states[e][q] = update_state(&self.states[e][q], &d_strain, &self.tangents[e][q], &self.materials[e]);
            }
        }
    }

    /// Assembled internal force `g(u)` from the current stresses.
    pub fn internal_force(&self) -> Vec<f64> {
        self.mesh.assemble_vector(|e| {
            let s = self.states[e].each_ref().map(|st| st.stress);
            self.mesh.element_internal_force(e, &s)
        })
    }

    pub fn observe(&self, observables: &[Observable]) -> Vec<f64> {
        observables.iter().map(|o| o.evaluate(self)).collect()
    }
}

/// Converged state of one load increment.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementRecord {
    pub u: Vec<f64>,
    /// Linear solves performed.
    pub steps: usize,
    /// `‖f - g‖` before each solve.
    pub residuals: Vec<f64>,
    pub observations: Vec<f64>,
    pub cracked_points: usize,
}

/// Converged increments in order, plus the error that stopped the run early.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NrHistory {
    pub increments: Vec<IncrementRecord>,
    pub failure: Option<Error>,
}

impl NrHistory {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Absolute floor on the displacement-increment norm.
pub const ABSOLUTE_TOLERANCE: f64 = 1e-12;

/// Incremental modified Newton–Raphson: the tangent stiffness is assembled and
/// factorized once per increment, then steps `K^n Δu = f^n - g(u)` repeat until
/// `‖Δu‖ ≤ tol ‖u‖` or, from the second step on, `‖f^n - g‖ ≤ tol ‖f^n‖`.
pub fn newton_raphson(analysis: &mut Analysis<'_>, program: &LoadProgram, observables: &[Observable]) -> NrHistory {
    let mut history = NrHistory::default();
    if let Err(e) = program.validate(analysis.mesh.n_free()) {
        history.failure = Some(e);
        return history;
    }
    for n in 0..program.n_increments() {
        match run_increment(analysis, program, n) {
            Ok((steps, residuals)) => history.increments.push(IncrementRecord {
                u: analysis.u.clone(),
                steps,
                residuals,
                observations: analysis.observe(observables),
                cracked_points: analysis.cracked_points(),
            }),
            Err(e) => {
                history.failure = Some(e);
                break;
            }
        }
    }
    history
}

fn run_increment(analysis: &mut Analysis<'_>, program: &LoadProgram, n: usize) -> Result<(usize, Vec<f64>)> {
    let f = program.load(n);
    let f_norm = norm(&f);
    let k = analysis.begin_increment();
    let factor = SkylineCholesky::factor(&k)?;
    let mut residuals = Vec::new();
    for step in 1..=program.max_steps {
        let g = analysis.internal_force();
        let r: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a - b).collect();
        let r_norm = norm(&r);
        if !r_norm.is_finite() {
            return Err(Error::NoConvergence {
                increment: n + 1,
                residual: r_norm,
            });
        }
        if step > 1 && r_norm <= program.tol * f_norm {
            return Ok((step - 1, residuals));
        }
        residuals.push(r_norm);
        let du = factor.solve(&r);
        analysis.apply_increment(&du);
        if norm(&du) <= program.tol * norm(&analysis.u) + ABSOLUTE_TOLERANCE {
            return Ok((step, residuals));
        }
    }
    let g = analysis.internal_force();
    let residual = norm(&f.iter().zip(&g).map(|(a, b)| a - b).collect::<Vec<_>>());
    Err(Error::NoConvergence {
        increment: n + 1,
        residual,
    })
}
