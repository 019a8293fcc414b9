//! Run configuration: TOML schema, validation and construction of the model.
//!
//! Parsing happens block by block so that one pass reports every problem in
//! the file rather than stopping at the first.

use std::collections::BTreeSet;
use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sgfem_core::fem::grid_node;
use sgfem_core::krylov::PreconditionerKind;
use sgfem_core::quadrature::{smolyak, tensor_gauss};
use sgfem_core::{
    ConcreteSpec, Element, ElasticParams, GpcBasis, LoadProgram, MaterialSpec, Mesh, Model, Observable,
    QuadratureRule, RandomInputSpec, RandomTarget, RowProfile, SgOptions, ShearRetention, SteelParams,
};

/// Every problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "- {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub mesh: MeshConfig,
    pub materials: Vec<MaterialConfig>,
    #[serde(default)]
    pub random: Vec<RandomConfig>,
    pub load: LoadConfig,
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    pub observables: Vec<ObservableConfig>,
    #[serde(default)]
    pub statistics: StatisticsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// Element thickness (mm).
    pub thickness: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<[f64; 2]>>,
    /// Counter-clockwise node indices per element.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<[usize; 4]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_materials: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_rows: Option<Vec<usize>>,
    #[serde(default)]
    pub constraints: Vec<ConstraintConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub length: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    /// Material index per element row, bottom to top.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_materials: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fix {
    X,
    Y,
    Xy,
}

impl Fix {
    fn components(self) -> &'static [usize] {
        match self {
            Fix::X => &[0],
            Fix::Y => &[1],
            Fix::Xy => &[0, 1],
        }
    }
}

/// Node selection: exactly one of `node`, `at` (grid indices `[i, j]`) or `edge`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Target {
    pub node: Option<usize>,
    pub at: Option<[usize; 2]>,
    pub edge: Option<Edge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<Edge>,
    pub fix: Fix,
}

/// Nodal force; on an edge the total is shared with trapezoidal weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<Edge>,
    #[serde(default)]
    pub fx: f64,
    #[serde(default)]
    pub fy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialConfig {
    Elastic {
        e: f64,
        nu: f64,
    },
    ReinforcedConcrete {
        f_c_prime: f64,
        alpha_e: f64,
        eps_c1: f64,
        eps_c_lim: f64,
        f_ctm: f64,
        nu: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps_tu: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        e_ci: Option<f64>,
        #[serde(default)]
        shear: ShearConfig,
        steel: SteelConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShearConfig {
    Constant { beta: f64 },
    Decay { initial: f64, floor: f64, eps_ref: f64 },
}

impl Default for ShearConfig {
    fn default() -> Self {
        match ShearRetention::default() {
            ShearRetention::Constant(beta) => ShearConfig::Constant { beta },
            ShearRetention::Decay {
                initial,
                floor,
                eps_ref,
            } => ShearConfig::Decay {
                initial,
                floor,
                eps_ref,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteelConfig {
    pub e_s: f64,
    pub f_y: f64,
    pub e_sh: f64,
    pub eps_su: f64,
    pub rho_x: f64,
    pub rho_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetConfig {
    AlphaE,
    FcPrime,
    Modulus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomConfig {
    pub target: TargetConfig,
    pub mean: f64,
    pub cov: f64,
    /// Mean in the bottom and top element rows, varying linearly in between.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub bottom: f64,
    pub top: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadConfig {
    pub increments: usize,
    pub tolerance: f64,
    pub max_steps: usize,
    /// Load factor per increment; defaults to `n / increments`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
    /// Constant loads present from the first increment.
    #[serde(default)]
    pub dead: Vec<LoadEntry>,
    /// Loads scaled by the increment factors.
    pub pattern: Vec<LoadEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Det,
    Mc,
    Sc,
    Sg,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Det => "det",
            Method::Mc => "mc",
            Method::Sc => "sc",
            Method::Sg => "sg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    #[default]
    Smolyak,
    Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub methods: Vec<Method>,
    /// Total degree `p` of the gPC basis (sc, sg).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    /// Quadrature level; level `l` uses `l + 1` Gauss points per axis (sc, sg).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(default)]
    pub grid: GridKind,
    /// Retained stiffness expansion terms in the Galerkin system.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stiffness_terms: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreconditionerConfig {
    None,
    Mb,
    Ahgs,
}

impl From<PreconditionerConfig> for PreconditionerKind {
    fn from(p: PreconditionerConfig) -> Self {
        match p {
            PreconditionerConfig::None => PreconditionerKind::None,
            PreconditionerConfig::Mb => PreconditionerKind::MeanBased,
            PreconditionerConfig::Ahgs => PreconditionerKind::HierarchicalGaussSeidel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub preconditioner: PreconditionerConfig,
    /// Preconditioners also run on every system, for comparison only.
    pub shadows: Vec<PreconditionerConfig>,
    pub tolerance: f64,
    pub max_iter: usize,
    /// Lanczos steps of the SPD probe per increment; 0 disables it.
    pub spd_probe: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            preconditioner: PreconditionerConfig::Ahgs,
            shadows: Vec::new(),
            tolerance: 1e-8,
            max_iter: 2000,
            spd_probe: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub samples: usize,
    /// Sample count under `--long`.
    pub long_samples: usize,
    pub seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            long_samples: 1_000_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableConfig {
    Displacement {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        node: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        at: Option<[usize; 2]>,
        component: Component,
        #[serde(default = "one")]
        scale: f64,
    },
    TangentModulus {
        name: String,
        element: usize,
        point: usize,
    },
}

fn one() -> f64 {
    1.0
}

impl ObservableConfig {
    pub fn name(&self) -> &str {
        match self {
            ObservableConfig::Displacement { name, .. } | ObservableConfig::TangentModulus { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatisticsConfig {
    /// Thresholds as multiples of the mean-parameter solution.
    pub exceedance: Vec<f64>,
    pub pdf_points: usize,
}

impl Default for StatisticsConfig {
    fn default() -> Self {
        Self {
            exceedance: vec![1.0, 1.02, 1.04, 1.06, 1.08, 1.10],
            pdf_points: sgfem_core::stats::KDE_GRID_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
}

const REQUIRED: [&str; 5] = ["mesh", "materials", "load", "analysis", "observables"];
const OPTIONAL: [&str; 6] = ["name", "random", "solver", "monte_carlo", "statistics", "output"];

fn block<T: DeserializeOwned>(table: &toml::Table, key: &str, errors: &mut Vec<String>) -> Option<T> {
    let value = table.get(key)?.clone();
    match T::deserialize(value) {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(format!("[{key}]: {}", e.message().trim()));
            None
        }
    }
}

/// Parses and validates a configuration, listing every problem found.
pub fn parse(text: &str) -> Result<RunConfig, ConfigErrors> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigErrors(vec![e.to_string()]))?;
    let mut errors = Vec::new();
    for key in REQUIRED {
        if !table.contains_key(key) {
            errors.push(format!("missing required block [{key}]"));
        }
    }
    for key in table.keys() {
        if !REQUIRED.contains(&key.as_str()) && !OPTIONAL.contains(&key.as_str()) {
            errors.push(format!("unknown top-level key `{key}`"));
        }
    }
    let name = block(&table, "name", &mut errors);
    let mesh = block(&table, "mesh", &mut errors);
    let materials = block(&table, "materials", &mut errors);
    let random = block(&table, "random", &mut errors).unwrap_or_default();
    let load = block(&table, "load", &mut errors);
    let analysis = block(&table, "analysis", &mut errors);
    let solver = block(&table, "solver", &mut errors).unwrap_or_default();
    let monte_carlo = block(&table, "monte_carlo", &mut errors).unwrap_or_default();
    let observables = block(&table, "observables", &mut errors);
    let statistics = block(&table, "statistics", &mut errors).unwrap_or_default();
    let output = block(&table, "output", &mut errors).unwrap_or_default();
    let (Some(mesh), Some(materials), Some(load), Some(analysis), Some(observables)) =
        (mesh, materials, load, analysis, observables)
    else {
        return Err(ConfigErrors(errors));
    };
    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    let config = RunConfig {
        name,
        mesh,
        materials,
        random,
        load,
        analysis,
        solver,
        monte_carlo,
        observables,
        statistics,
        output,
    };
    config.build()?;
    Ok(config)
}

/// Everything a run needs, built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: Model,
    pub program: LoadProgram,
    pub observables: Vec<(String, Observable)>,
    /// Global DOF index `2 · node + component` of every free DOF, in free order.
    pub global_dofs: Vec<usize>,
}

/// Basis, quadrature rule and solver options for the spectral methods.
#[derive(Debug, Clone)]
pub struct Spectral {
    pub basis: GpcBasis,
    pub rule: QuadratureRule,
    pub options: SgOptions,
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn has(&self, method: Method) -> bool {
        self.analysis.methods.contains(&method)
    }

    /// Semantic checks and model construction.
    pub fn build(&self) -> Result<Problem, ConfigErrors> {
        let mut errors = Vec::new();
        self.check_analysis(&mut errors);
        self.check_statistics(&mut errors);
        let specs: Vec<Option<MaterialSpec>> = self
            .materials
            .iter()
            .enumerate()
            .map(|(i, m)| match m.to_spec() {
                Ok(s) => Some(s),
                Err(e) => {
                    errors.push(format!("materials[{i}]: {e}"));
                    None
                }
            })
            .collect();
        if self.materials.is_empty() {
            errors.push("[materials]: at least one material is required".into());
        }
        let random: Vec<RandomInputSpec> = self
            .random
            .iter()
            .enumerate()
            .filter_map(|(i, r)| {
                let spec = r.to_spec();
                if let Err(e) = spec.validate() {
                    errors.push(format!("random[{i}]: {e}"));
                    return None;
                }
                Some(spec)
            })
            .collect();
        let mesh = self.build_mesh(&mut errors);
        let program = mesh.as_ref().and_then(|m| self.build_program(m, &mut errors));
        let observables = mesh.as_ref().map(|m| self.build_observables(m, &mut errors));

        if !errors.is_empty() {
            return Err(ConfigErrors(errors));
        }
        let (Some(mesh), Some(program), Some(observables)) = (mesh, program, observables) else {
            return Err(ConfigErrors(vec!["incomplete configuration".into()]));
        };
        let global_dofs = (0..mesh.nodes().len())
            .flat_map(|n| [(n, 0), (n, 1)])
            .filter(|&(n, c)| mesh.free_dof(n, c).is_some())
            .map(|(n, c)| 2 * n + c)
            .collect();
        let specs = specs.into_iter().flatten().collect();
        let model = Model::new(mesh, specs, random).map_err(|e| ConfigErrors(vec![format!("model: {e}")]))?;
        Ok(Problem {
            model,
            program,
            observables,
            global_dofs,
        })
    }

    fn check_analysis(&self, errors: &mut Vec<String>) {
        let a = &self.analysis;
        if a.methods.is_empty() {
            errors.push("[analysis]: `methods` must name at least one of det, mc, sc, sg".into());
        }
        let unique: BTreeSet<_> = a.methods.iter().collect();
        if unique.len() != a.methods.len() {
            errors.push("[analysis]: `methods` lists a method twice".into());
        }
        let spectral = self.has(Method::Sc) || self.has(Method::Sg);
        if spectral {
            match a.degree {
                None => errors.push("[analysis]: `degree` is required for sc and sg".into()),
                Some(0) => errors.push("[analysis]: `degree` must be at least 1 for sc and sg".into()),
                Some(_) => {}
            }
            if a.level.is_none() {
                errors.push("[analysis]: `level` is required for sc and sg".into());
            }
            if self.random.is_empty() {
                errors.push("[analysis]: sc and sg need at least one [[random]] input".into());
            }
        }
        if self.has(Method::Mc) {
            if self.monte_carlo.samples == 0 || self.monte_carlo.long_samples == 0 {
                errors.push("[monte_carlo]: sample counts must be positive".into());
            }
            if self.random.is_empty() {
                errors.push("[analysis]: mc needs at least one [[random]] input".into());
            }
        }
        if let Some(0) = a.stiffness_terms {
            errors.push("[analysis]: `stiffness_terms` must be positive".into());
        }
        let s = &self.solver;
        if !(s.tolerance > 0.0 && s.tolerance < 1.0) {
            errors.push(format!("[solver]: tolerance {} must lie in (0, 1)", s.tolerance));
        }
        if s.max_iter == 0 {
            errors.push("[solver]: `max_iter` must be positive".into());
        }
    }

    fn check_statistics(&self, errors: &mut Vec<String>) {
        if self.statistics.exceedance.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            errors.push("[statistics]: exceedance multipliers must be positive".into());
        }
        if self.statistics.pdf_points < 2 {
            errors.push("[statistics]: `pdf_points` must be at least 2".into());
        }
        let mut names = BTreeSet::new();
        if self.observables.is_empty() {
            errors.push("[observables]: at least one observable is required".into());
        }
        for o in &self.observables {
            let name = o.name();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                errors.push(format!("[observables]: name `{name}` must be nonempty ASCII letters, digits, `_` or `-`"));
            }
            if !names.insert(name) {
                errors.push(format!("[observables]: duplicate name `{name}`"));
            }
        }
    }

    /// Basis, rule and CG options; `None` unless sc or sg is requested.
    pub fn spectral(&self, dim: usize) -> Option<sgfem_core::Result<Spectral>> {
        let a = &self.analysis;
        let (degree, level) = (a.degree?, a.level?);
        if !(self.has(Method::Sc) || self.has(Method::Sg)) {
            return None;
        }
        Some((|| {
            let basis = GpcBasis::new(dim, degree)?;
            let rule = match a.grid {
                GridKind::Smolyak => smolyak(dim, level)?,
                GridKind::Tensor => tensor_gauss(dim, level + 1)?,
            };
            let options = SgOptions {
                preconditioner: self.solver.preconditioner.into(),
                shadows: self.solver.shadows.iter().map(|&p| p.into()).collect(),
                cg_tol: self.solver.tolerance,
                max_iter: self.solver.max_iter,
                n_k: a.stiffness_terms,
                spd_probe: self.solver.spd_probe,
            };
            Ok(Spectral { basis, rule, options })
        })())
    }

    fn build_mesh(&self, errors: &mut Vec<String>) -> Option<Mesh> {
        let m = &self.mesh;
        let before = errors.len();
        if !(m.thickness > 0.0) {
            errors.push(format!("[mesh]: thickness {} must be positive", m.thickness));
        }
        let n_materials = self.materials.len();
        let (nodes, elements) = match (&m.grid, &m.nodes, &m.elements) {
            (Some(g), None, None) => {
                if g.nx == 0 || g.ny == 0 || !(g.length > 0.0) || !(g.height > 0.0) {
                    errors.push("[mesh.grid]: needs positive length, height, nx and ny".into());
                    return None;
                }
                if let Some(rows) = &g.row_materials {
                    if rows.len() != g.ny {
                        errors.push(format!("[mesh.grid]: `row_materials` has {} entries for {} rows", rows.len(), g.ny));
                    }
                    for &r in rows {
                        if r >= n_materials {
                            errors.push(format!("[mesh.grid]: material {r} does not exist ({n_materials} defined)"));
                        }
                    }
                }
                if m.element_materials.is_some() || m.element_rows.is_some() {
                    errors.push("[mesh]: `element_materials` and `element_rows` apply to explicit meshes only".into());
                }
                let mut nodes = Vec::new();
                for j in 0..=g.ny {
                    for i in 0..=g.nx {
                        nodes.push([g.length * i as f64 / g.nx as f64, g.height * j as f64 / g.ny as f64]);
                    }
                }
                let mut elements = Vec::new();
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        let n0 = grid_node(g.nx, i, j);
                        let material = g.row_materials.as_ref().and_then(|r| r.get(j).copied()).unwrap_or(0);
                        elements.push(Element {
                            nodes: [n0, n0 + 1, n0 + g.nx + 2, n0 + g.nx + 1],
                            thickness: m.thickness,
                            material,
                            row: j,
                        });
                    }
                }
                (nodes, elements)
            }
            (None, Some(nodes), Some(conn)) => {
                let mats = m.element_materials.clone().unwrap_or_else(|| vec![0; conn.len()]);
                let rows = m.element_rows.clone().unwrap_or_else(|| vec![0; conn.len()]);
                if mats.len() != conn.len() || rows.len() != conn.len() {
                    errors.push("[mesh]: `element_materials` and `element_rows` need one entry per element".into());
                    return None;
                }
                for (e, c) in conn.iter().enumerate() {
                    if c.iter().any(|&n| n >= nodes.len()) {
                        errors.push(format!("[mesh]: element {e} references a missing node"));
                    }
                    if mats[e] >= n_materials {
                        errors.push(format!("[mesh]: element {e} uses material {} ({n_materials} defined)", mats[e]));
                    }
                }
                let elements = conn
                    .iter()
                    .zip(mats.iter().zip(&rows))
                    .map(|(c, (&material, &row))| Element {
                        nodes: *c,
                        thickness: m.thickness,
                        material,
                        row,
                    })
                    .collect();
                (nodes.clone(), elements)
            }
            _ => {
                errors.push("[mesh]: give either [mesh.grid] or both `nodes` and `elements`".into());
                return None;
            }
        };
        let mut constrained = Vec::new();
        for (i, c) in m.constraints.iter().enumerate() {
            let target = Target {
                node: c.node,
                at: c.at,
                edge: c.edge,
            };
            match self.resolve(&target, nodes.len()) {
                Ok(list) => {
                    for (node, _) in list {
                        constrained.extend(c.fix.components().iter().map(|&comp| 2 * node + comp));
                    }
                }
                Err(e) => errors.push(format!("[mesh.constraints][{i}]: {e}")),
            }
        }
        if errors.len() > before {
            return None;
        }
        match Mesh::new(nodes, elements, &constrained) {
            Ok(mesh) => Some(mesh),
            Err(e) => {
                errors.push(format!("[mesh]: {e}"));
                None
            }
        }
    }

    /// Nodes addressed by a target with their share of an edge total.
    fn resolve(&self, t: &Target, n_nodes: usize) -> Result<Vec<(usize, f64)>, String> {
        let grid = self.mesh.grid.as_ref();
        match (t.node, t.at, t.edge) {
            (Some(n), None, None) if n < n_nodes => Ok(vec![(n, 1.0)]),
            (Some(n), None, None) => Err(format!("node {n} does not exist ({n_nodes} nodes)")),
            (None, Some([i, j]), None) => match grid {
                Some(g) if i <= g.nx && j <= g.ny => Ok(vec![(grid_node(g.nx, i, j), 1.0)]),
                Some(g) => Err(format!("grid point [{i}, {j}] outside the {}×{} grid", g.nx, g.ny)),
                None => Err("`at` needs a [mesh.grid]".into()),
            },
            (None, None, Some(edge)) => {
                let g = grid.ok_or("`edge` needs a [mesh.grid]")?;
                let nodes: Vec<usize> = match edge {
                    Edge::Left => (0..=g.ny).map(|j| grid_node(g.nx, 0, j)).collect(),
                    Edge::Right => (0..=g.ny).map(|j| grid_node(g.nx, g.nx, j)).collect(),
                    Edge::Bottom => (0..=g.nx).map(|i| grid_node(g.nx, i, 0)).collect(),
                    Edge::Top => (0..=g.nx).map(|i| grid_node(g.nx, i, g.ny)).collect(),
                };
                let segments = (nodes.len() - 1) as f64;
                let last = nodes.len() - 1;
                Ok(nodes
                    .into_iter()
                    .enumerate()
                    .map(|(k, n)| (n, if k == 0 || k == last { 0.5 } else { 1.0 } / segments))
                    .collect())
            }
            _ => Err("give exactly one of `node`, `at` or `edge`".into()),
        }
    }

    fn load_vector(&self, mesh: &Mesh, entries: &[LoadEntry], block: &str, errors: &mut Vec<String>) -> Vec<f64> {
        let mut triplets = Vec::new();
        for (i, e) in entries.iter().enumerate() {
            let target = Target {
                node: e.node,
                at: e.at,
                edge: e.edge,
            };
            match self.resolve(&target, mesh.nodes().len()) {
                Ok(list) => {
                    for (node, share) in list {
                        for (comp, v) in [(0, e.fx), (1, e.fy)] {
                            if v != 0.0 {
                                triplets.push((node, comp, share * v));
                            }
                        }
                    }
                }
                Err(err) => errors.push(format!("[{block}][{i}]: {err}")),
            }
        }
        mesh.load_vector(&triplets).unwrap_or_else(|e| {
            errors.push(format!("[{block}]: {e}"));
            vec![0.0; mesh.n_free()]
        })
    }

    fn build_program(&self, mesh: &Mesh, errors: &mut Vec<String>) -> Option<LoadProgram> {
        let l = &self.load;
        let dead = self.load_vector(mesh, &l.dead, "load.dead", errors);
        let pattern = self.load_vector(mesh, &l.pattern, "load.pattern", errors);
        let mut program = LoadProgram::uniform(dead, pattern, l.increments, l.tolerance, l.max_steps);
        if let Some(scales) = &l.scales {
            if scales.len() != l.increments {
                errors.push(format!("[load]: {} scales for {} increments", scales.len(), l.increments));
            }
            program.scales = scales.clone();
        }
        match program.validate(mesh.n_free()) {
            Ok(()) => Some(program),
            Err(e) => {
                errors.push(format!("[load]: {e}"));
                None
            }
        }
    }

    fn build_observables(&self, mesh: &Mesh, errors: &mut Vec<String>) -> Vec<(String, Observable)> {
        let mut out = Vec::new();
        for o in &self.observables {
            let obs = match o {
                ObservableConfig::Displacement {
                    name,
                    node,
                    at,
                    component,
                    scale,
                } => {
                    let target = Target {
                        node: *node,
                        at: *at,
                        edge: None,
                    };
                    let node = match self.resolve(&target, mesh.nodes().len()) {
                        Ok(list) if list.len() == 1 => list[0].0,
                        Ok(_) => {
                            errors.push(format!("[observables] {name}: a displacement needs a single node"));
                            continue;
                        }
                        Err(e) => {
                            errors.push(format!("[observables] {name}: {e}"));
                            continue;
                        }
                    };
                    let comp = match component {
                        Component::X => 0,
                        Component::Y => 1,
                    };
                    match mesh.free_dof(node, comp) {
                        Some(dof) => Observable::Displacement { dof, scale: *scale },
                        None => {
                            errors.push(format!("[observables] {name}: DOF is constrained"));
                            continue;
                        }
                    }
                }
                ObservableConfig::TangentModulus { element, point, .. } => Observable::TangentModulus {
                    element: *element,
                    point: *point,
                },
            };
            if let Err(e) = obs.validate(mesh) {
                errors.push(format!("[observables] {}: {e}", o.name()));
                continue;
            }
            out.push((o.name().to_string(), obs));
        }
        out
    }
}

impl MaterialConfig {
    fn to_spec(&self) -> sgfem_core::Result<MaterialSpec> {
        let spec = match self {
            MaterialConfig::Elastic { e, nu } => {
                let p = ElasticParams { e: *e, nu: *nu };
                p.validate()?;
                MaterialSpec::Elastic(p)
            }
            MaterialConfig::ReinforcedConcrete {
                f_c_prime,
                alpha_e,
                eps_c1,
                eps_c_lim,
                f_ctm,
                nu,
                eps_tu,
                e_ci,
                shear,
                steel,
            } => {
                let concrete = ConcreteSpec {
                    f_c_prime: *f_c_prime,
                    alpha_e: *alpha_e,
                    eps_c1: *eps_c1,
                    eps_c_lim: *eps_c_lim,
                    f_ctm: *f_ctm,
                    nu: *nu,
                    eps_tu: *eps_tu,
                    e_ci: *e_ci,
                    shear: match *shear {
                        ShearConfig::Constant { beta } => ShearRetention::Constant(beta),
                        ShearConfig::Decay {
                            initial,
                            floor,
                            eps_ref,
                        } => ShearRetention::Decay {
                            initial,
                            floor,
                            eps_ref,
                        },
                    },
                };
                concrete.params()?.validate()?;
                let steel = SteelParams {
                    e_s: steel.e_s,
                    f_y: steel.f_y,
                    e_sh: steel.e_sh,
                    eps_su: steel.eps_su,
                    rho_x: steel.rho_x,
                    rho_y: steel.rho_y,
                };
                steel.validate()?;
                MaterialSpec::ReinforcedConcrete { concrete, steel }
            }
        };
        Ok(spec)
    }
}

impl RandomConfig {
    fn to_spec(&self) -> RandomInputSpec {
        RandomInputSpec {
            target: match self.target {
                TargetConfig::AlphaE => RandomTarget::AlphaE,
                TargetConfig::FcPrime => RandomTarget::FcPrime,
                TargetConfig::Modulus => RandomTarget::Modulus,
            },
            mean: self.mean,
            cov: self.cov,
            profile: self.profile.map(|p| RowProfile {
                bottom: p.bottom,
                top: p.top,
            }),
        }
    }
}
