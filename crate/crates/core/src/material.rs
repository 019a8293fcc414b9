//! Constitutive laws for concrete and smeared reinforcement, crack tracking,
//! tangent stress–strain matrices and random-input parametrizations.
//!
//! Sign convention: tension positive. Strains are engineering strains
//! `(ε_x, ε_y, γ_xy)`, stresses `(σ_x, σ_y, τ_xy)` in MPa.
//!
//! Biaxial behaviour is simplified: each principal direction gets the uniaxial
//! tangent of its own principal strain, and the two directions are coupled by a
//! constant Poisson ratio until the first crack forms.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;

/// Reference modulus `E_c0` in the aggregate-type formula for `E_ci` (MPa).
pub const E_C0: f64 = 21_500.0;

/// Strain at which the pre-peak tension curve reaches `f_ctm`; cracks form beyond it.
pub const PEAK_TENSILE_STRAIN: f64 = 0.00015;

/// Tangent modulus floor relative to `E_ci`, used past the peak and after crushing.
pub const TANGENT_FLOOR: f64 = 1e-6;

/// Shear retention factor `β` on a cracked plane as a function of crack-normal strain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShearRetention {
    Constant(f64),
    /// `β = max(floor, initial · (1 - ε_n / eps_ref))`.
    Decay { initial: f64, floor: f64, eps_ref: f64 },
}

impl Default for ShearRetention {
    fn default() -> Self {
        ShearRetention::Decay {
            initial: 0.4,
            floor: 0.05,
            eps_ref: 0.004,
        }
    }
}

impl ShearRetention {
    pub fn factor(&self, eps_n: f64) -> f64 {
        match *self {
            ShearRetention::Constant(beta) => beta,
            ShearRetention::Decay {
                initial,
                floor,
                eps_ref,
            } => (initial * (1.0 - eps_n.max(0.0) / eps_ref)).max(floor),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ShearRetention::Constant(b) => b > 0.0 && b <= 1.0,
            ShearRetention::Decay {
                initial,
                floor,
                eps_ref,
            } => floor > 0.0 && initial >= floor && initial <= 1.0 && eps_ref > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidMaterial(format!(
                "shear retention {self:?} must stay within (0, 1]"
            )))
        }
    }
}

/// Nominal concrete input before any random realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcreteSpec {
    /// Specified compressive strength `f'_c` (MPa).
    pub f_c_prime: f64,
    /// Aggregate factor in `E_ci = E_c0 α_E (f_cm / 10)^(1/3)`.
    pub alpha_e: f64,
    /// Strain at peak compressive stress (negative).
    pub eps_c1: f64,
    /// Limit compressive strain (negative).
    pub eps_c_lim: f64,
    pub f_ctm: f64,
    pub nu: f64,
    /// Terminal tension-stiffening strain; defaults to `10 f_ctm / E_ci`.
    pub eps_tu: Option<f64>,
    /// Explicit initial modulus, bypassing the aggregate formula.
    pub e_ci: Option<f64>,
    pub shear: ShearRetention,
}

impl ConcreteSpec {
    pub fn params(&self) -> Result<ConcreteParams> {
        let f_cm = self.f_c_prime + 8.0;
        let e_ci = match self.e_ci {
            Some(e) => e,
            None => initial_modulus(self.alpha_e, f_cm),
        };
        let params = ConcreteParams {
            f_c_prime: self.f_c_prime,
            f_cm,
            e_ci,
            e_c1: f_cm / self.eps_c1.abs(),
            eps_c1: self.eps_c1,
            eps_c_lim: self.eps_c_lim,
            f_ctm: self.f_ctm,
            nu: self.nu,
            eps_tu: self.eps_tu.unwrap_or(10.0 * self.f_ctm / e_ci),
            shear: self.shear,
        };
        params.validate()?;
        Ok(params)
    }
}

/// `E_ci = E_c0 α_E (f_cm / 10)^(1/3)`.
pub fn initial_modulus(alpha_e: f64, f_cm: f64) -> f64 {
    E_C0 * alpha_e * (f_cm / 10.0).cbrt()
}

/// Realized concrete constants at one material point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcreteParams {
    pub f_c_prime: f64,
    pub f_cm: f64,
    pub e_ci: f64,
    /// Secant modulus to the compressive peak, `f_cm / |ε_c1|`.
    pub e_c1: f64,
    pub eps_c1: f64,
    pub eps_c_lim: f64,
    pub f_ctm: f64,
    pub nu: f64,
    pub eps_tu: f64,
    pub shear: ShearRetention,
}

impl ConcreteParams {
    /// Plasticity number `k = E_ci / E_c1`.
    pub fn plasticity_number(&self) -> f64 {
        self.e_ci / self.e_c1
    }

    pub fn crack_strain(&self) -> f64 {
        PEAK_TENSILE_STRAIN
    }

    pub fn shear_modulus(&self) -> f64 {
        self.e_ci / (2.0 * (1.0 + self.nu))
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.e_ci > 0.0 && self.e_c1 > 0.0) {
            problems.push(format!("moduli must be positive (E_ci = {}, E_c1 = {})", self.e_ci, self.e_c1));
        } else if self.plasticity_number() <= 1.0 {
            problems.push(format!(
                "plasticity number k = E_ci/E_c1 = {} must exceed 1",
                self.plasticity_number()
            ));
        }
        if self.f_ctm <= 0.0 {
            problems.push(format!("f_ctm = {} must be positive", self.f_ctm));
        }
        if !(0.0..0.5).contains(&self.nu) {
            problems.push(format!("Poisson ratio {} outside [0, 0.5)", self.nu));
        }
        if self.eps_c1 >= 0.0 || self.eps_c_lim >= 0.0 {
            problems.push("compressive strains eps_c1 and eps_c_lim must be negative".into());
        } else if self.eps_c_lim.abs() <= self.eps_c1.abs() {
            problems.push("|eps_c_lim| must exceed |eps_c1|".into());
        }
        if self.e_ci > 0.0 && 0.9 * self.f_ctm / self.e_ci >= PEAK_TENSILE_STRAIN {
            problems.push(format!(
                "0.9 f_ctm / E_ci = {:e} must stay below the peak tensile strain {PEAK_TENSILE_STRAIN:e}",
                0.9 * self.f_ctm / self.e_ci
            ));
        }
        if self.eps_tu <= PEAK_TENSILE_STRAIN {
            problems.push(format!(
                "eps_tu = {:e} must exceed the crack strain {PEAK_TENSILE_STRAIN:e}",
                self.eps_tu
            ));
        }
        if let Err(e) = self.shear.validate() {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidMaterial(problems.join("; ")))
        }
    }
}

/// Bilinear reinforcement smeared over the element with ratios `ρ_x`, `ρ_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteelParams {
    pub e_s: f64,
    pub f_y: f64,
    pub e_sh: f64,
    pub eps_su: f64,
    pub rho_x: f64,
    pub rho_y: f64,
}

impl SteelParams {
    pub fn eps_sy(&self) -> f64 {
        self.f_y / self.e_s
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.e_s <= 0.0 || self.f_y <= 0.0 {
            problems.push("E_s and f_y must be positive".to_string());
        } else if self.eps_sy() >= self.eps_su {
            problems.push(format!("yield strain {} must be below eps_su {}", self.eps_sy(), self.eps_su));
        }
        if self.e_sh < 0.0 {
            problems.push("E_sh must be nonnegative".into());
        }
        for (name, rho) in [("rho_x", self.rho_x), ("rho_y", self.rho_y)] {
            if !(0.0..1.0).contains(&rho) {
                problems.push(format!("{name} = {rho} outside [0, 1)"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidMaterial(problems.join("; ")))
        }
    }
}

/// Isotropic linear elastic plane-stress material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticParams {
    pub e: f64,
    pub nu: f64,
}

impl ElasticParams {
    pub fn validate(&self) -> Result<()> {
        if self.e > 0.0 && (0.0..0.5).contains(&self.nu) {
            Ok(())
        } else {
            Err(Error::InvalidMaterial(format!(
                "elastic constants E = {}, nu = {} invalid",
                self.e, self.nu
            )))
        }
    }
}

/// `σ_c = -f_cm (kη - η²) / (1 + (k-2)η)` with `η = ε_c / ε_c1`.
pub fn concrete_compression_stress(eps_c: f64, params: &ConcreteParams) -> Result<f64> {
    if eps_c > 0.0 {
        return Err(Error::InvalidArgument(format!(
            "compressive strain must be nonpositive, got {eps_c:e}"
        )));
    }
    if eps_c.abs() >= params.eps_c_lim.abs() {
        return Err(Error::Crushing {
            strain: eps_c,
            limit: params.eps_c_lim,
        });
    }
    let k = params.plasticity_number();
    let eta = eps_c / params.eps_c1;
    Ok(-params.f_cm * (k * eta - eta * eta) / (1.0 + (k - 2.0) * eta))
}

/// Uniaxial tension envelope: linear to `0.9 f_ctm`, the transition branch up to
/// `f_ctm` at the crack strain, then linear tension stiffening down to zero at `eps_tu`.
pub fn concrete_tension_stress(eps_ct: f64, params: &ConcreteParams) -> Result<f64> {
    if eps_ct < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tensile strain must be nonnegative, got {eps_ct:e}"
        )));
    }
    let elastic_limit = 0.9 * params.f_ctm / params.e_ci;
    let eps_cr = params.crack_strain();
    let sigma = if params.e_ci * eps_ct <= 0.9 * params.f_ctm {
        params.e_ci * eps_ct
    } else if eps_ct <= eps_cr {
        params.f_ctm * (1.0 - 0.1 * (eps_cr - eps_ct) / (eps_cr - elastic_limit))
    } else if eps_ct < params.eps_tu {
        params.f_ctm * (params.eps_tu - eps_ct) / (params.eps_tu - eps_cr)
    } else {
        0.0
    };
    Ok(sigma)
}

/// Slope of the pre-crack tension branch at `eps_ct`.
fn tension_tangent(eps_ct: f64, params: &ConcreteParams) -> f64 {
    if params.e_ci * eps_ct <= 0.9 * params.f_ctm {
        params.e_ci
    } else {
        let elastic_limit = 0.9 * params.f_ctm / params.e_ci;
        0.1 * params.f_ctm / (params.crack_strain() - elastic_limit)
    }
}

/// Bilinear steel law, symmetric in tension and compression.
pub fn steel_stress(eps_s: f64, params: &SteelParams) -> Result<f64> {
    let a = eps_s.abs();
    if a > params.eps_su {
        return Err(Error::Rupture {
            strain: eps_s,
            limit: params.eps_su,
        });
    }
    let eps_sy = params.eps_sy();
    if a < eps_sy {
        Ok(params.e_s * eps_s)
    } else {
        Ok(eps_s.signum() * (params.f_y + params.e_sh * (a - eps_sy)))
    }
}

/// `E_cT = E_c1 [(k - 2η) - (k - 2)η²] / (1 + (k - 2)η)²` with `k = E_ci / E_c1`.
///
/// Passing a realized `E_ci(ξ)` gives the stochastic tangent.
pub fn tangent_concrete_modulus(eps_c: f64, e_ci: f64, params: &ConcreteParams) -> Result<f64> {
    let k = e_ci / params.e_c1;
    let eta = eps_c / params.eps_c1;
    let den = 1.0 + (k - 2.0) * eta;
    if den.abs() < 1e-10 {
        return Err(Error::SingularTangent { eta, k });
    }
    Ok(params.e_c1 * ((k - 2.0 * eta) - (k - 2.0) * eta * eta) / (den * den))
}

/// Uniaxial tangent used in the stress–strain matrix for an uncracked direction.
pub fn direction_modulus(eps: f64, params: &ConcreteParams) -> f64 {
    let floor = TANGENT_FLOOR * params.e_ci;
    if eps >= 0.0 {
        return tension_tangent(eps, params);
    }
    if eps <= params.eps_c_lim {
        return floor;
    }
    match tangent_concrete_modulus(eps, params.e_ci, params) {
        Ok(t) if t > floor => t,
        _ => floor,
    }
}

/// Principal strains `(ε_1, ε_2)` with `ε_1 ≥ ε_2` and the angle of the `ε_1` direction.
pub fn principal_strains(strain: &Vec3) -> (f64, f64, f64) {
    let center = 0.5 * (strain.x + strain.y);
    let half_diff = 0.5 * (strain.x - strain.y);
    let half_shear = 0.5 * strain.z;
    let radius = half_diff.hypot(half_shear);
    let angle = 0.5 * strain.z.atan2(strain.x - strain.y);
    (center + radius, center - radius, angle)
}

/// Engineering-strain transformation into axes rotated by `angle`: `ε' = T ε`.
pub fn strain_transform(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(
        c * c,
        s * s,
        c * s,
        s * s,
        c * c,
        -c * s,
        -2.0 * c * s,
        2.0 * c * s,
        c * c - s * s,
    )
}

/// Stress transformation into axes rotated by `angle`: `σ' = R σ`, with `R = T^{-T}`.
pub fn stress_transform(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(
        c * c,
        s * s,
        2.0 * c * s,
        s * s,
        c * c,
        -2.0 * c * s,
        -c * s,
        c * s,
        c * c - s * s,
    )
}

/// `D_global = Tᵀ D_local T`.
pub fn rotate_to_global(local: &Mat3, angle: f64) -> Mat3 {
    let t = strain_transform(angle);
    t.transpose() * local * t
}

/// Plane-stress isotropic stiffness.
pub fn isotropic_d(e: f64, nu: f64) -> Mat3 {
    let f = e / (1.0 - nu * nu);
    Mat3::new(f, f * nu, 0.0, f * nu, f, 0.0, 0.0, 0.0, e / (2.0 * (1.0 + nu)))
}

/// Crack state of a Gauss point; the angle is the direction of the first crack normal.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CrackState {
    #[default]
    Uncracked,
    One { angle: f64 },
    Two { angle: f64 },
}

impl CrackState {
    /// 0, 1 or 2 open cracks; never decreases along a loading path.
    pub fn rank(&self) -> u8 {
        match self {
            CrackState::Uncracked => 0,
            CrackState::One { .. } => 1,
            CrackState::Two { .. } => 2,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            CrackState::Uncracked => None,
            CrackState::One { angle } | CrackState::Two { angle } => Some(angle),
        }
    }
}

/// History variables at one element integration point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaussPointState {
    pub strain: Vec3,
    /// Total stress, matrix plus smeared steel.
    pub stress: Vec3,
    /// Concrete (or elastic matrix) part of the stress.
    pub matrix_stress: Vec3,
    /// Smeared steel stresses `ρ_x σ_sx`, `ρ_y σ_sy`.
    pub steel_stress: [f64; 2],
    pub crack: CrackState,
    /// Largest crack-normal strain reached, for shear retention.
    pub crack_opening: f64,
    pub max_principal_strain: f64,
    /// Uniaxial tangents along the current material axes (principal or crack axes).
    pub moduli: [f64; 2],
    pub yielded: [bool; 2],
    pub crushed: bool,
}

/// Stress–strain matrices frozen for one load increment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent {
    pub matrix: Mat3,
    pub steel: Mat3,
}

impl Tangent {
    pub fn total(&self) -> Mat3 {
        self.matrix + self.steel
    }
}

/// Material assigned to one element, after any random realization.
#[derive(Debug, Clone, PartialEq)]
pub enum Material {
    Elastic(ElasticParams),
    ReinforcedConcrete {
        concrete: ConcreteParams,
        steel: SteelParams,
    },
}

/// Per-direction moduli of the concrete at the current state, in the axes
/// `concrete_d` uses.
pub fn concrete_moduli(state: &GaussPointState, params: &ConcreteParams) -> [f64; 2] {
    match state.crack {
        CrackState::Uncracked => {
            let (e1, e2, _) = principal_strains(&state.strain);
            [direction_modulus(e1, params), direction_modulus(e2, params)]
        }
        CrackState::One { angle } => {
            let local = strain_transform(angle) * state.strain;
            [0.0, direction_modulus(local.y, params)]
        }
        CrackState::Two { .. } => [0.0, 0.0],
    }
}

/// Concrete stress–strain matrix for the given state and per-direction moduli.
///
/// Uncracked: orthotropic in principal-strain axes with Poisson coupling
/// `ν√(E_1E_2)` and shear modulus `(E_1 + E_2 - 2ν√(E_1E_2)) / (4(1-ν²))`, which is
/// the isotropic matrix when both moduli agree. Cracked: zero stiffness normal to
/// each crack, no Poisson coupling, shear `β G`.
pub fn concrete_d(state: &GaussPointState, moduli: [f64; 2], params: &ConcreteParams) -> Mat3 {
    match state.crack {
        CrackState::Uncracked => {
            let (_, _, angle) = principal_strains(&state.strain);
            let nu = params.nu;
            let [e1, e2] = moduli;
            let coupled = nu * (e1 * e2).sqrt();
            let f = 1.0 / (1.0 - nu * nu);
            let g = (e1 + e2 - 2.0 * coupled) * 0.25 * f;
            let local = Mat3::new(f * e1, f * coupled, 0.0, f * coupled, f * e2, 0.0, 0.0, 0.0, g);
            rotate_to_global(&local, angle)
        }
        CrackState::One { angle } => {
            let g = params.shear.factor(state.crack_opening) * params.shear_modulus();
            let local = Mat3::new(0.0, 0.0, 0.0, 0.0, moduli[1], 0.0, 0.0, 0.0, g);
            rotate_to_global(&local, angle)
        }
        CrackState::Two { angle } => {
            let g = params.shear.factor(state.crack_opening) * params.shear_modulus();
            let local = Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, g);
            rotate_to_global(&local, angle)
        }
    }
}

/// `diag(ρ_x E_x, ρ_y E_y, 0)` with `E_dir = E_s` before yield and `E_sh` after.
pub fn steel_d(params: &SteelParams, yielded_x: bool, yielded_y: bool) -> Mat3 {
    let ex = if yielded_x { params.e_sh } else { params.e_s };
    let ey = if yielded_y { params.e_sh } else { params.e_s };
    Mat3::from_diagonal(&Vec3::new(params.rho_x * ex, params.rho_y * ey, 0.0))
}

impl Material {
    pub fn validate(&self) -> Result<()> {
        match self {
            Material::Elastic(p) => p.validate(),
            Material::ReinforcedConcrete { concrete, steel } => {
                concrete.validate()?;
                steel.validate()
            }
        }
    }

    /// Tangent matrices at the committed state.
    pub fn tangent(&self, state: &GaussPointState) -> Tangent {
        match self {
            Material::Elastic(p) => Tangent {
                matrix: isotropic_d(p.e, p.nu),
                steel: Mat3::zeros(),
            },
            Material::ReinforcedConcrete { concrete, steel } => {
                let moduli = concrete_moduli(state, concrete);
                Tangent {
                    matrix: concrete_d(state, moduli, concrete),
                    steel: steel_d(steel, state.yielded[0], state.yielded[1]),
                }
            }
        }
    }

    /// Compressive tangent `E_cT` at the most compressive principal strain.
    pub fn compressive_tangent(&self, state: &GaussPointState) -> f64 {
        match self {
            Material::Elastic(p) => p.e,
            Material::ReinforcedConcrete { concrete, .. } => {
                let (_, e2, _) = principal_strains(&state.strain);
                direction_modulus(e2.min(0.0), concrete)
            }
        }
    }
}

/// Advances a Gauss point by a strain increment with the increment's frozen tangent.
///
/// The stress increment is `D Δε`. For reinforced concrete the trial state is
/// then checked against the crack criterion and the tension and steel envelopes:
/// new cracks are oriented along the current principal direction, the stress
/// normal to an open crack is limited by the tension-stiffening branch, and
/// steel stresses are limited by the bilinear law.
pub fn update_state(
    state: &GaussPointState,
    d_strain: &Vec3,
    tangent: &Tangent,
    material: &Material,
) -> GaussPointState {
    let mut next = state.clone();
    next.strain += d_strain;
    next.matrix_stress += tangent.matrix * d_strain;
    let steel_inc = tangent.steel * d_strain;
    next.steel_stress[0] += steel_inc.x;
    next.steel_stress[1] += steel_inc.y;

    if let Material::ReinforcedConcrete { concrete, steel } = material {
        let (e1, e2, angle1) = principal_strains(&next.strain);
        next.max_principal_strain = next.max_principal_strain.max(e1);
        let eps_cr = concrete.crack_strain();
        next.crack = match next.crack {
            CrackState::Uncracked if e1 > eps_cr => CrackState::One { angle: angle1 },
            CrackState::One { angle } => {
                let local = strain_transform(angle) * next.strain;
                if local.y > eps_cr {
                    CrackState::Two { angle }
                } else {
                    next.crack
                }
            }
            other => other,
        };
        if let Some(angle) = next.crack.angle() {
            let local_strain = strain_transform(angle) * next.strain;
            next.crack_opening = next.crack_opening.max(local_strain.x);
            let mut local = stress_transform(angle) * next.matrix_stress;
            local.x = local.x.min(tension_cap(local_strain.x, concrete));
            if next.crack.rank() == 2 {
                local.y = local.y.min(tension_cap(local_strain.y, concrete));
            }
            next.matrix_stress = strain_transform(angle).transpose() * local;
        }
        next.crushed |= e2 <= concrete.eps_c_lim;

        let rho = [steel.rho_x, steel.rho_y];
        let eps = [next.strain.x, next.strain.y];
        for d in 0..2 {
            let capped = eps[d].abs().min(steel.eps_su).copysign(eps[d]);
            let envelope = rho[d] * steel_stress(capped, steel).unwrap_or(0.0);
            if next.steel_stress[d].abs() > envelope.abs() {
                next.steel_stress[d] = envelope;
            }
            next.yielded[d] |= eps[d].abs() >= steel.eps_sy();
        }
        next.moduli = concrete_moduli(&next, concrete);
    }
    next.stress = next.matrix_stress + Vec3::new(next.steel_stress[0], next.steel_stress[1], 0.0);
    next
}

fn tension_cap(eps_n: f64, params: &ConcreteParams) -> f64 {
    if eps_n <= 0.0 {
        0.0
    } else {
        concrete_tension_stress(eps_n, params).unwrap_or(0.0)
    }
}

/// What a random variable perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomTarget {
    /// Aggregate factor `α_E` in the `E_ci` formula.
    AlphaE,
    /// Specified compressive strength `f'_c`.
    FcPrime,
    /// Young's modulus of elastic elements (or `E_ci` of concrete directly).
    Modulus,
}

/// Linear variation of the mean from the lowest to the uppermost mesh row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowProfile {
    pub bottom: f64,
    pub top: f64,
}

/// Uniform random input `mean · (1 + CoV √3 ξ)`, `ξ ~ U[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomInputSpec {
    pub target: RandomTarget,
    pub mean: f64,
    pub cov: f64,
    pub profile: Option<RowProfile>,
}

impl RandomInputSpec {
    pub fn validate(&self) -> Result<()> {
        if self.cov < 0.0 || !self.cov.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "coefficient of variation {} must be nonnegative",
                self.cov
            )));
        }
        if self.cov * 3f64.sqrt() >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "CoV {} gives a support reaching zero",
                self.cov
            )));
        }
        Ok(())
    }

    /// Mean at mesh row `row` out of `n_rows`.
    pub fn mean_at(&self, row: usize, n_rows: usize) -> f64 {
        match self.profile {
            None => self.mean,
            Some(p) if n_rows <= 1 => 0.5 * (p.bottom + p.top),
            Some(p) => p.bottom + (p.top - p.bottom) * row as f64 / (n_rows - 1) as f64,
        }
    }

    /// Half-width of the uniform support around `mean`.
    pub fn half_width(&self, mean: f64) -> f64 {
        mean * self.cov * 3f64.sqrt()
    }

    pub fn value_at(&self, xi: f64, row: usize, n_rows: usize) -> f64 {
        let mean = self.mean_at(row, n_rows);
        mean + self.half_width(mean) * xi
    }
}

/// `E_ci(ξ) = E_c0 α_E(ξ) (f_cm / 10)^(1/3)` for an `α_E` random input.
pub fn realize_e_ci(spec: &RandomInputSpec, xi: f64, f_cm: f64, e_c1: f64) -> Result<f64> {
    if spec.target != RandomTarget::AlphaE {
        return Err(Error::InvalidArgument(
            "E_ci realization needs an alpha_E input".into(),
        ));
    }
    if !(-1.0..=1.0).contains(&xi) {
        return Err(Error::OutsideSupport { dim: 0, value: xi });
    }
    let e_ci = initial_modulus(spec.value_at(xi, 0, 1), f_cm);
    if e_ci <= e_c1 {
        return Err(Error::InvalidMaterial(format!(
            "realized E_ci = {e_ci} does not exceed E_c1 = {e_c1}"
        )));
    }
    Ok(e_ci)
}


#[cfg(test)]
mod proptests {
    use super::tests::concrete;
    use super::*;
    use proptest::prelude::*;

    fn material() -> Material {
        Material::ReinforcedConcrete {
            concrete: concrete(),
            steel: SteelParams {
                e_s: 200_000.0,
                f_y: 400.0,
                e_sh: 1_000.0,
                eps_su: 0.1,
                rho_x: 0.01,
                rho_y: 0.004,
            },
        }
    }

    proptest! {
        #[test]
        fn crack_rank_never_decreases(steps in prop::collection::vec((-2e-4f64..4e-4, -2e-4f64..4e-4, -3e-4f64..3e-4), 1..30)) {
            let m = material();
            let mut s = GaussPointState::default();
            for (a, b, c) in steps {
                let t = m.tangent(&s);
                let next = update_state(&s, &Vec3::new(a, b, c), &t, &m);
                prop_assert!(next.crack.rank() >= s.crack.rank());
                s = next;
            }
        }

        #[test]
        fn tangent_matrices_symmetric(steps in prop::collection::vec((-3e-4f64..4e-4, -3e-4f64..4e-4, -3e-4f64..3e-4), 1..20)) {
            let m = material();
            let mut s = GaussPointState::default();
            for (a, b, c) in steps {
                let t = m.tangent(&s);
                let d = t.total();
                prop_assert!((d - d.transpose()).abs().max() <= 1e-12 * d.abs().max());
                s = update_state(&s, &Vec3::new(a, b, c), &t, &m);
            }
        }

        #[test]
        fn uncracked_prepeak_d_is_psd(a in -1.5e-3f64..1e-4, b in -1.5e-3f64..1e-4, c in -1e-4f64..1e-4) {
            let p = concrete();
            let s = GaussPointState { strain: Vec3::new(a, b, c), ..Default::default() };
            let d = concrete_d(&s, concrete_moduli(&s, &p), &p);
            let eig = d.symmetric_eigen();
            prop_assert!(eig.eigenvalues.min() >= -1e-9 * d.abs().max());
        }
    }
}
