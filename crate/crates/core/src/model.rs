//! A mesh with nominal materials and the random inputs that perturb them.

use crate::error::{Error, Result};
use crate::fem::{newton_raphson, Analysis, LoadProgram, Mesh, NrHistory, Observable};
use crate::material::{ConcreteSpec, ElasticParams, Material, RandomInputSpec, RandomTarget, SteelParams};

/// Nominal material before realization.
#[derive(Debug, Clone, PartialEq)]
pub enum MaterialSpec {
    Elastic(ElasticParams),
    ReinforcedConcrete { concrete: ConcreteSpec, steel: SteelParams },
}

/// Structural model with `m_ξ = random.len()` independent uniform inputs, each
/// applied to every element (with the element's row selecting the mean).
#[derive(Debug, Clone)]
pub struct Model {
    pub mesh: Mesh,
    pub materials: Vec<MaterialSpec>,
    pub random: Vec<RandomInputSpec>,
}

impl Model {
    pub fn new(mesh: Mesh, materials: Vec<MaterialSpec>, random: Vec<RandomInputSpec>) -> Result<Self> {
        for (e, el) in mesh.elements().iter().enumerate() {
            if el.material >= materials.len() {
                return Err(Error::InvalidArgument(format!(
                    "element {e} references material {} of {}",
                    el.material,
                    materials.len()
                )));
            }
        }
        for r in &random {
            r.validate()?;
        }
        let model = Self { mesh, materials, random };
        // Extreme corners of the support must give admissible materials.
        for corner in [-1.0, 1.0] {
            model.realize(&vec![corner; model.dim()])?;
        }
        Ok(model)
    }

    /// Stochastic dimension `m_ξ`.
    pub fn dim(&self) -> usize {
        self.random.len()
    }

    /// Per-element materials at the point `ξ`.
    pub fn realize(&self, xi: &[f64]) -> Result<Vec<Material>> {
        if xi.len() != self.dim() {
            return Err(Error::ShapeMismatch {
                expected: self.dim(),
                actual: xi.len(),
            });
        }
        for (d, &x) in xi.iter().enumerate() {
            if !(-1.0..=1.0).contains(&x) {
                return Err(Error::OutsideSupport { dim: d, value: x });
            }
        }
        let n_rows = self.mesh.n_rows();
        self.mesh
            .elements()
            .iter()
            .map(|el| {
                let mut spec = self.materials[el.material].clone();
                for (input, &x) in self.random.iter().zip(xi) {
                    let value = input.value_at(x, el.row, n_rows);
                    match (&mut spec, input.target) {
                        (MaterialSpec::Elastic(p), RandomTarget::Modulus) => p.e = value,
                        (MaterialSpec::Elastic(_), _) => {}
                        (MaterialSpec::ReinforcedConcrete { concrete, .. }, target) => match target {
                            RandomTarget::AlphaE => concrete.alpha_e = value,
                            RandomTarget::FcPrime => concrete.f_c_prime = value,
                            RandomTarget::Modulus => concrete.e_ci = Some(value),
                        },
                    }
                }
                let material = match spec {
                    MaterialSpec::Elastic(p) => Material::Elastic(p),
                    MaterialSpec::ReinforcedConcrete { concrete, steel } => Material::ReinforcedConcrete {
                        concrete: concrete.params()?,
                        steel,
                    },
                };
                material.validate()?;
                Ok(material)
            })
            .collect()
    }

    pub fn analysis(&self, xi: &[f64]) -> Result<Analysis<'_>> {
        Analysis::new(&self.mesh, self.realize(xi)?)
    }

    /// Deterministic run at `ξ`.
    pub fn solve(&self, xi: &[f64], program: &LoadProgram, observables: &[Observable]) -> Result<NrHistory> {
        let mut a = self.analysis(xi)?;
        Ok(newton_raphson(&mut a, program, observables))
    }

    /// Deterministic run with every input at its mean.
    pub fn solve_mean(&self, program: &LoadProgram, observables: &[Observable]) -> Result<NrHistory> {
        self.solve(&vec![0.0; self.dim()], program, observables)
    }
}
