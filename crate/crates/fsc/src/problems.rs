//! The benchmark systems: five linear stochastic ODEs of order one to four,
//! the Van-der-Pol oscillator, and a parametric high-dimensional problem,
//! each shipped with its probability laws, analytic derivative chain and
//! scheme defaults. The Galerkin tensor discretizations of the nonlinear and
//! the high-dimensional system are provided as independent cross-checks of
//! the nodal pseudo-spectral path.

use crate::distribution::{Distribution, ProductMeasure};
use crate::error::{Error, Result};
use crate::flowmap::{linear_autonomous_chain, OdeSystem};
use crate::fsc::{BootstrapConfig, FscConfig, TransferKind};
use crate::quadrature::{gauss_grid, mc_nodes, NodeSet};
use crate::rfs::{Basis, RandomFunction};
use std::sync::Arc;

/// Benchmark identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    /// Falling body under stochastic air resistance (1st order).
    P1,
    /// Free vibration with stochastic stiffness (2nd order, d = 1).
    P2,
    /// Free vibration with stochastic mass and stiffness (2nd order, d = 2).
    P3,
    /// Linear mechanical system, 3rd order.
    P4,
    /// Linear mechanical system, 4th order.
    P5,
    /// Van-der-Pol oscillator (2nd order, nonlinear, d = 2).
    P6,
    /// Parametric high-dimensional forced oscillator, d ∈ {5, 7, 10}.
    HighDim(usize),
}

impl ProblemId {
    pub fn parse(name: &str, dim: Option<usize>) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "p1" => Ok(ProblemId::P1),
            "p2" => Ok(ProblemId::P2),
            "p3" => Ok(ProblemId::P3),
            "p4" => Ok(ProblemId::P4),
            "p5" => Ok(ProblemId::P5),
            "p6" | "vdp" | "van_der_pol" => Ok(ProblemId::P6),
            "highdim" => {
                let d = dim.unwrap_or(10);
                if matches!(d, 5 | 7 | 10) {
                    Ok(ProblemId::HighDim(d))
                } else {
                    Err(Error::Config(format!("highdim supports d = 5, 7 or 10, got {d}")))
                }
            }
            other => Err(Error::Config(format!("unknown problem '{other}'"))),
        }
    }
}

/// How a node set should be generated for a run.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadratureSpec {
    Gauss { points_per_dim: Vec<usize> },
    MonteCarlo { q: usize, seed: u64 },
}

impl QuadratureSpec {
    pub fn build(&self, measure: &ProductMeasure) -> Result<Arc<NodeSet>> {
        match self {
            QuadratureSpec::Gauss { points_per_dim } => {
                Ok(Arc::new(gauss_grid(measure, points_per_dim)?))
            }
            QuadratureSpec::MonteCarlo { q, seed } => Ok(Arc::new(mc_nodes(measure, *q, *seed)?)),
        }
    }
}

/// Which reference solution the error report compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    ClosedForm,
    DenseQuadrature,
    MonteCarlo,
}

/// A fully parameterized benchmark: equation, measure, response selector and
/// scheme defaults.
pub struct ProblemSpec {
    pub id: ProblemId,
    pub variant: String,
    pub ode: Arc<dyn OdeSystem>,
    pub measure: ProductMeasure,
    /// 1-based state component reported as the primary response.
    pub response_component: usize,
    pub response_label: String,
    pub defaults: FscConfig,
    pub default_quadrature: QuadratureSpec,
    pub reference: ReferenceKind,
}

fn defaults_for(order: usize, basis_index: usize, dt: f64) -> FscConfig {
    let mut cfg = FscConfig::new(basis_index, TransferKind::Fsc2);
    cfg.flow_order = (basis_index - order).clamp(1, 4);
    cfg.dt = dt;
    cfg.horizon = 10.0;
    cfg.bootstrap = BootstrapConfig { size: 7, duration: 1.0 };
    cfg
}

fn single_law(id: &str, variant: &str, laws: &[(&str, Distribution)]) -> Result<Distribution> {
    laws.iter()
        .find(|(name, _)| *name == variant)
        .map(|(_, d)| *d)
        .ok_or_else(|| {
            let names: Vec<&str> = laws.iter().map(|(n, _)| *n).collect();
            Error::Config(format!("{id} has no variant '{variant}'; expected one of {names:?}"))
        })
}

/// Build one of the benchmark problems with the given distribution variant.
pub fn make_problem(id: ProblemId, variant: &str) -> Result<ProblemSpec> {
    let variant = if variant.is_empty() { default_variant(id) } else { variant };
    match id {
        ProblemId::P1 => {
            let law = single_law(
                "p1",
                variant,
                &[
                    ("uniform", Distribution::uniform(1.0, 2.0)?),
                    ("beta", Distribution::beta(2.0, 5.0, 1.0, 2.0)?),
                ],
            )?;
            let measure = ProductMeasure::new(vec![law])?;
            Ok(ProblemSpec {
                id,
                variant: variant.into(),
                ode: Arc::new(FallingBody { mass: 4.0, gravity: 9.81 }),
                default_quadrature: gauss_default(&measure),
                measure,
                response_component: 1,
                response_label: "v".into(),
                defaults: defaults_for(1, 5, 1e-3),
                reference: ReferenceKind::ClosedForm,
            })
        }
        ProblemId::P2 => {
            let law = single_law(
                "p2",
                variant,
                &[
                    ("uniform", Distribution::uniform(340.0, 460.0)?),
                    ("beta", Distribution::beta(2.0, 5.0, 340.0, 460.0)?),
                    ("gamma", Distribution::gamma(10.0, 0.1, 340.0)?),
                ],
            )?;
            let measure = ProductMeasure::new(vec![law])?;
            Ok(ProblemSpec {
                id,
                variant: variant.into(),
                ode: Arc::new(FreeVibration { mass: 100.0, u0: 0.05, v0: 0.20 }),
                default_quadrature: gauss_default(&measure),
                measure,
                response_component: 1,
                response_label: "u".into(),
                defaults: defaults_for(2, 6, 1e-3),
                reference: ReferenceKind::ClosedForm,
            })
        }
        ProblemId::P3 => {
            let stiffness = match variant {
                "uniform_uniform" => Distribution::uniform(340.0, 460.0)?,
                "uniform_beta" => Distribution::beta(2.0, 5.0, 340.0, 460.0)?,
                other => {
                    return Err(Error::Config(format!(
                        "p3 has no variant '{other}'; expected uniform_uniform or uniform_beta"
                    )))
                }
            };
            let measure =
                ProductMeasure::new(vec![Distribution::uniform(85.0, 115.0)?, stiffness])?;
            Ok(ProblemSpec {
                id,
                variant: variant.into(),
                ode: Arc::new(FreeVibrationRandomMass { u0: 0.05, v0: 0.20 }),
                default_quadrature: gauss_default(&measure),
                measure,
                response_component: 1,
                response_label: "u".into(),
                defaults: defaults_for(2, 6, 1e-3),
                reference: ReferenceKind::ClosedForm,
            })
        }
        ProblemId::P4 => {
            let law = single_law(
                "p4",
                variant,
                &[
                    ("uniform", Distribution::uniform(2.0, 3.0)?),
                    ("beta", Distribution::beta(2.0, 5.0, 2.0, 3.0)?),
                    ("normal", Distribution::normal(2.5, 0.125)?),
                ],
            )?;
            let measure = ProductMeasure::new(vec![law])?;
            Ok(ProblemSpec {
                id,
                variant: variant.into(),
                ode: Arc::new(ThirdOrderLinear),
                default_quadrature: gauss_default(&measure),
                measure,
                response_component: 1,
                response_label: "u".into(),
                defaults: defaults_for(3, 7, 1e-3),
                reference: ReferenceKind::DenseQuadrature,
            })
        }
        ProblemId::P5 => {
            let law = single_law(
                "p5",
                variant,
                &[
                    ("uniform", Distribution::uniform(3.0, 5.0)?),
                    ("beta", Distribution::beta(2.0, 5.0, 3.0, 5.0)?),
                    ("normal", Distribution::normal(4.0, 0.2)?),
                ],
            )?;
            let measure = ProductMeasure::new(vec![law])?;
            Ok(ProblemSpec {
                id,
                variant: variant.into(),
                ode: Arc::new(FourthOrderLinear),
                default_quadrature: gauss_default(&measure),
                measure,
                response_component: 4,
                response_label: "jerk".into(),
                defaults: defaults_for(4, 8, 1e-3),
                reference: ReferenceKind::DenseQuadrature,
            })
        }
        ProblemId::P6 => {
            if variant != "uniform_beta" {
                return Err(Error::Config(format!(
                    "p6 has no variant '{variant}'; only uniform_beta"
                )));
            }
            let measure = ProductMeasure::new(vec![
                Distribution::uniform(150.0, 450.0)?,
                Distribution::beta(2.0, 5.0, 0.05, 0.25)?,
            ])?;
            let mut defaults = defaults_for(2, 4, 5e-3);
            defaults.flow_order = 4;
            Ok(ProblemSpec {
                id,
                variant: variant.into(),
                ode: Arc::new(VanDerPol { mass: 100.0, rho: 150.0, stiffness: 400.0 }),
                default_quadrature: gauss_default(&measure),
                measure,
                response_component: 1,
                response_label: "u".into(),
                defaults,
                reference: ReferenceKind::MonteCarlo,
            })
        }
        ProblemId::HighDim(d) => {
            if variant != "beta3_uniform" {
                return Err(Error::Config(format!(
                    "highdim has no variant '{variant}'; only beta3_uniform"
                )));
            }
            let mut laws = Vec::with_capacity(d);
            for i in 0..d {
                laws.push(if i < 3 {
                    Distribution::beta(2.0, 5.0, -1.0, 1.0)?
                } else {
                    Distribution::uniform(-1.0, 1.0)?
                });
            }
            let measure = ProductMeasure::new(laws)?;
            let mut defaults = defaults_for(2, 3, 1e-2);
            defaults.flow_order = 4;
            defaults.bootstrap = BootstrapConfig { size: 7, duration: 0.0 };
            Ok(ProblemSpec {
                id,
                variant: variant.into(),
                ode: Arc::new(HighDimOscillator { dim: d }),
                default_quadrature: QuadratureSpec::MonteCarlo { q: 100_000, seed: 3 },
                measure,
                response_component: 1,
                response_label: "u".into(),
                defaults,
                reference: ReferenceKind::MonteCarlo,
            })
        }
    }
}

pub fn default_variant(id: ProblemId) -> &'static str {
    match id {
        ProblemId::P1 | ProblemId::P2 | ProblemId::P4 | ProblemId::P5 => "uniform",
        ProblemId::P3 => "uniform_uniform",
        ProblemId::P6 => "uniform_beta",
        ProblemId::HighDim(_) => "beta3_uniform",
    }
}

fn gauss_default(measure: &ProductMeasure) -> QuadratureSpec {
    QuadratureSpec::Gauss {
        points_per_dim: measure
            .factors()
            .iter()
            .map(crate::quadrature::default_gauss_points)
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// The linear benchmark systems
// ---------------------------------------------------------------------------

/// m·v̇ + k·v = m·g with k = ξ: v̇ = g − (k/m)·v.
pub struct FallingBody {
    pub mass: f64,
    pub gravity: f64,
}

impl OdeSystem for FallingBody {
    fn order(&self) -> usize {
        1
    }
    fn random_dim(&self) -> usize {
        1
    }
    fn rhs(&self, _t: f64, xi: &[f64], state: &[f64]) -> f64 {
        self.gravity - xi[0] / self.mass * state[0]
    }
    fn rhs_derivative(&self, m: usize, _t: f64, xi: &[f64], derivs: &[f64]) -> Option<f64> {
        Some(linear_autonomous_chain(&[-xi[0] / self.mass], m, derivs))
    }
    fn initial(&self, _k: usize, _xi: &[f64]) -> f64 {
        50.0
    }
}

/// m·ü + k·u = 0 with k = ξ.
pub struct FreeVibration {
    pub mass: f64,
    pub u0: f64,
    pub v0: f64,
}

impl OdeSystem for FreeVibration {
    fn order(&self) -> usize {
        2
    }
    fn random_dim(&self) -> usize {
        1
    }
    fn rhs(&self, _t: f64, xi: &[f64], state: &[f64]) -> f64 {
        -(xi[0] / self.mass) * state[0]
    }
    fn rhs_derivative(&self, m: usize, _t: f64, xi: &[f64], derivs: &[f64]) -> Option<f64> {
        Some(linear_autonomous_chain(&[-(xi[0] / self.mass), 0.0], m, derivs))
    }
    fn initial(&self, k: usize, _xi: &[f64]) -> f64 {
        if k == 1 {
            self.u0
        } else {
            self.v0
        }
    }
}

/// m·ü + k·u = 0 with m = ξ¹ and k = ξ².
pub struct FreeVibrationRandomMass {
    pub u0: f64,
    pub v0: f64,
}

impl OdeSystem for FreeVibrationRandomMass {
    fn order(&self) -> usize {
        2
    }
    fn random_dim(&self) -> usize {
        2
    }
    fn rhs(&self, _t: f64, xi: &[f64], state: &[f64]) -> f64 {
        -(xi[1] / xi[0]) * state[0]
    }
    fn rhs_derivative(&self, m: usize, _t: f64, xi: &[f64], derivs: &[f64]) -> Option<f64> {
        Some(linear_autonomous_chain(&[-(xi[1] / xi[0]), 0.0], m, derivs))
    }
    fn initial(&self, k: usize, _xi: &[f64]) -> f64 {
        if k == 1 {
            self.u0
        } else {
            self.v0
        }
    }
}

/// ∂ₜ³u + ½∂ₜ²u + k∂ₜu + u = 0 with k = ξ.
pub struct ThirdOrderLinear;

impl OdeSystem for ThirdOrderLinear {
    fn order(&self) -> usize {
        3
    }
    fn random_dim(&self) -> usize {
        1
    }
    fn rhs(&self, _t: f64, xi: &[f64], state: &[f64]) -> f64 {
        -state[0] - xi[0] * state[1] - 0.5 * state[2]
    }
    fn rhs_derivative(&self, m: usize, _t: f64, xi: &[f64], derivs: &[f64]) -> Option<f64> {
        Some(linear_autonomous_chain(&[-1.0, -xi[0], -0.5], m, derivs))
    }
    fn initial(&self, k: usize, _xi: &[f64]) -> f64 {
        match k {
            1 => 1.0,
            2 => -1.0,
            _ => 2.0,
        }
    }
}

/// ∂ₜ⁴u + k∂ₜ²u + u = 0 with k = ξ.
pub struct FourthOrderLinear;

impl OdeSystem for FourthOrderLinear {
    fn order(&self) -> usize {
        4
    }
    fn random_dim(&self) -> usize {
        1
    }
    fn rhs(&self, _t: f64, xi: &[f64], state: &[f64]) -> f64 {
        -state[0] - xi[0] * state[2]
    }
    fn rhs_derivative(&self, m: usize, _t: f64, xi: &[f64], derivs: &[f64]) -> Option<f64> {
        Some(linear_autonomous_chain(&[-1.0, 0.0, -xi[0], 0.0], m, derivs))
    }
    fn initial(&self, k: usize, _xi: &[f64]) -> f64 {
        match k {
            1 => 1.0,
            2 => -1.0,
            3 => 2.0,
            _ => -3.0,
        }
    }
}

// ---------------------------------------------------------------------------
// The Van-der-Pol oscillator
// ---------------------------------------------------------------------------

/// m·ü − (1 − ρu²)·c·u̇ + k·u = 0 with c = ξ¹ uniform and the initial
/// displacement ξ² beta-distributed; the initial velocity is 2ξ² − 0.10.
pub struct VanDerPol {
    pub mass: f64,
    pub rho: f64,
    pub stiffness: f64,
}

impl OdeSystem for VanDerPol {
    fn order(&self) -> usize {
        2
    }
    fn random_dim(&self) -> usize {
        2
    }
    fn rhs(&self, _t: f64, xi: &[f64], state: &[f64]) -> f64 {
        let (u, v) = (state[0], state[1]);
        ((1.0 - self.rho * u * u) * xi[0] * v - self.stiffness * u) / self.mass
    }
    fn rhs_derivative(&self, m: usize, _t: f64, xi: &[f64], derivs: &[f64]) -> Option<f64> {
        let c = xi[0];
        let rho = self.rho;
        let k = self.stiffness;
        let (u, v) = (derivs[0], derivs[1]);
        let a2 = derivs[2];
        match m {
            1 => Some(
                (-2.0 * rho * c * u * v * v + (1.0 - rho * u * u) * c * a2 - k * v) / self.mass,
            ),
            2 => {
                let a3 = derivs[3];
                Some(
                    (-2.0 * rho * c * v * v * v - 6.0 * rho * c * u * v * a2
                        + (1.0 - rho * u * u) * c * a3
                        - k * a2)
                        / self.mass,
                )
            }
            3 => {
                let a3 = derivs[3];
                let a4 = derivs[4];
                Some(
                    (-12.0 * rho * c * v * v * a2 - 6.0 * rho * c * u * a2 * a2
                        - 8.0 * rho * c * u * v * a3
                        + (1.0 - rho * u * u) * c * a4
                        - k * a3)
                        / self.mass,
                )
            }
            _ => None,
        }
    }
    fn initial(&self, k: usize, xi: &[f64]) -> f64 {
        if k == 1 {
            xi[1]
        } else {
            2.0 * xi[1] - 0.10
        }
    }
}

/// The exact stochastic-input basis of the oscillator: {1, c − E[c], 𝓊 − E[𝓊]}.
pub fn vdp_input_basis(measure: &ProductMeasure, nodes: &Arc<NodeSet>) -> [RandomFunction; 3] {
    let c_mean = measure.factors()[0].mean();
    let u_mean = measure.factors()[1].mean();
    [
        RandomFunction::constant(nodes, 1.0),
        RandomFunction::from_fn(nodes, |xi| xi[0] - c_mean),
        RandomFunction::from_fn(nodes, |xi| xi[1] - u_mean),
    ]
}

/// The five-index Galerkin tensor 𝕄ⁱ_jklm = ⟨Ψᵢ, ΨⱼΨₖΨₗΨ̃ₘ⟩ / ⟨Ψᵢ,Ψᵢ⟩ for a
/// solution basis {Ψ} and an input basis {Ψ̃} on a shared carrier.
pub struct MultiplicationTensor {
    solution_size: usize,
    input_size: usize,
    data: Vec<f64>,
}

impl MultiplicationTensor {
    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize, l: usize, m: usize) -> usize {
        (((i * self.solution_size + j) * self.solution_size + k) * self.solution_size + l)
            * self.input_size
            + m
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize, m: usize) -> f64 {
        self.data[self.idx(i, j, k, l, m)]
    }

    pub fn solution_size(&self) -> usize {
        self.solution_size
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }
}

/// Assemble the multiplication tensor by quadrature. Each combination
/// j ≤ k ≤ l is integrated once and mirrored to every permutation, so the
/// j,k,l symmetry holds bit-exactly.
pub fn vdp_multiplication_tensor(
    basis: &Basis,
    input_basis: &[RandomFunction],
) -> Result<MultiplicationTensor> {
    let carrier = basis.carrier();
    for f in input_basis {
        if !Arc::ptr_eq(f.carrier(), carrier) {
            return Err(Error::NodeSetMismatch);
        }
    }
    let p1 = basis.size();
    let m1 = input_basis.len();
    let q = carrier.len();
    let mut tensor = MultiplicationTensor {
        solution_size: p1,
        input_size: m1,
        data: vec![0.0; p1 * p1 * p1 * p1 * m1],
    };
    let mut prod_jk = vec![0.0; q];
    let mut prod_jkl = vec![0.0; q];
    for j in 0..p1 {
        for k in j..p1 {
            for (n, v) in prod_jk.iter_mut().enumerate() {
                *v = basis.function(j).values()[n] * basis.function(k).values()[n];
            }
            for l in k..p1 {
                for (n, v) in prod_jkl.iter_mut().enumerate() {
                    *v = prod_jk[n] * basis.function(l).values()[n];
                }
                for m in 0..m1 {
                    for i in 0..p1 {
                        let mut acc = 0.0;
                        for n in 0..q {
                            acc += basis.function(i).values()[n]
                                * prod_jkl[n]
                                * input_basis[m].values()[n]
                                * carrier.weights()[n];
                        }
                        let value = acc / basis.norms()[i];
                        for (a, b, c) in
                            [(j, k, l), (j, l, k), (k, j, l), (k, l, j), (l, j, k), (l, k, j)]
                        {
                            let index = tensor.idx(i, a, b, c, m);
                            tensor.data[index] = value;
                        }
                    }
                }
            }
        }
    }
    Ok(tensor)
}

/// Modal acceleration of the oscillator by tensor contraction:
/// üⁱ = (𝕄ⁱ_j00m·u̇ʲcᵐ − ρ·𝕄ⁱ_jklm·u̇ʲuᵏuˡcᵐ − k·uⁱ) / m,
/// with the input modes cᵐ = (E[c], 1, 0).
pub fn vdp_modal_rhs(
    params: &VanDerPol,
    tensor: &MultiplicationTensor,
    u_modes: &[f64],
    v_modes: &[f64],
    c_modes: &[f64],
) -> Vec<f64> {
    let p1 = tensor.solution_size();
    let m1 = tensor.input_size();
    let mut out = vec![0.0; p1];
    for (i, out_i) in out.iter_mut().enumerate() {
        let mut linear = 0.0;
        for j in 0..p1 {
            for m in 0..m1 {
                linear += tensor.get(i, j, 0, 0, m) * v_modes[j] * c_modes[m];
            }
        }
        let mut cubic = 0.0;
        for j in 0..p1 {
            for k in 0..p1 {
                for l in 0..p1 {
                    for m in 0..m1 {
                        cubic += tensor.get(i, j, k, l, m)
                            * v_modes[j]
                            * u_modes[k]
                            * u_modes[l]
                            * c_modes[m];
                    }
                }
            }
        }
        *out_i = (linear - params.rho * cubic - params.stiffness * u_modes[i]) / params.mass;
    }
    out
}

// ---------------------------------------------------------------------------
// The parametric high-dimensional problem
// ---------------------------------------------------------------------------

/// ü + k(t, ξ)·u = f(t, ξ) with d random inputs (5, 7 or 10). Dimensions
/// beyond d read as zero, which embeds the lower-dimensional cases in the
/// ten-dimensional formulas.
pub struct HighDimOscillator {
    pub dim: usize,
}

impl HighDimOscillator {
    #[inline]
    fn xi(&self, xi: &[f64], index_1based: usize) -> f64 {
        if index_1based <= self.dim {
            xi[index_1based - 1]
        } else {
            0.0
        }
    }

    /// Stiffness k(t, ξ).
    pub fn stiffness(&self, t: f64, xi: &[f64]) -> f64 {
        let decay = (-(self.xi(xi, 2) + 7.0) * t / 77.0).exp();
        (self.xi(xi, 1) + 40.0) * (self.xi(xi, 6) + self.xi(xi, 7) + 40.0) * (3.0 - decay)
            / 2400.0
    }

    /// ∂ₜᵐ k(t, ξ) for m ≥ 1: only the exponential factor carries time.
    pub fn stiffness_dt(&self, m: usize, t: f64, xi: &[f64]) -> f64 {
        let rate = (self.xi(xi, 2) + 7.0) / 77.0;
        let decay = (-rate * t).exp();
        let sign = if m.is_multiple_of(2) { -1.0 } else { 1.0 };
        sign * (self.xi(xi, 1) + 40.0)
            * (self.xi(xi, 6) + self.xi(xi, 7) + 40.0)
            * rate.powi(m as i32)
            * decay
            / 2400.0
    }

    /// Forcing f(t, ξ).
    pub fn forcing(&self, t: f64, xi: &[f64]) -> f64 {
        let wave = (self.xi(xi, 9) + self.xi(xi, 10)) * (std::f64::consts::PI * t / 7.0).sin();
        (self.xi(xi, 3) + 7.0) * (self.xi(xi, 8) + 40.0) * (wave + 3.0) / 1200.0
    }

    /// ∂ₜᵐ f(t, ξ) for m ≥ 1: derivatives of the sine factor.
    pub fn forcing_dt(&self, m: usize, t: f64, xi: &[f64]) -> f64 {
        let omega = std::f64::consts::PI / 7.0;
        let phase = omega * t;
        let wave = match m % 4 {
            0 => phase.sin(),
            1 => phase.cos(),
            2 => -phase.sin(),
            _ => -phase.cos(),
        };
        (self.xi(xi, 3) + 7.0)
            * (self.xi(xi, 8) + 40.0)
            * (self.xi(xi, 9) + self.xi(xi, 10))
            * omega.powi(m as i32)
            * wave
            / 1200.0
    }
}

impl OdeSystem for HighDimOscillator {
    fn order(&self) -> usize {
        2
    }
    fn random_dim(&self) -> usize {
        self.dim
    }
    fn rhs(&self, t: f64, xi: &[f64], state: &[f64]) -> f64 {
        self.forcing(t, xi) - self.stiffness(t, xi) * state[0]
    }
    fn rhs_derivative(&self, m: usize, t: f64, xi: &[f64], derivs: &[f64]) -> Option<f64> {
        if m > 3 {
            return None;
        }
        // Leibniz rule on f(t) − k(t)·u(t).
        let mut total = self.forcing_dt(m, t, xi);
        for j in 0..=m {
            let binom = match (m, j) {
                (_, 0) | (1, 1) | (2, 2) | (3, 3) => 1.0,
                (2, 1) => 2.0,
                (3, 1) | (3, 2) => 3.0,
                _ => unreachable!(),
            };
            let k_factor =
                if j == 0 { self.stiffness(t, xi) } else { self.stiffness_dt(j, t, xi) };
            total -= binom * k_factor * derivs[m - j];
        }
        Some(total)
    }
    fn initial(&self, k: usize, xi: &[f64]) -> f64 {
        if k == 1 {
            (self.xi(xi, 4) + 8.0) / 7.0
        } else {
            (self.xi(xi, 5) + 7.0) / 8.0
        }
    }
}

/// Nodal input functions of the high-dimensional problem at time `t`:
/// stiffness, forcing, both initial conditions, and the first two time
/// derivatives of stiffness and forcing.
pub struct HighDimInputs {
    pub stiffness: RandomFunction,
    pub forcing: RandomFunction,
    pub u0: RandomFunction,
    pub v0: RandomFunction,
    pub stiffness_dt: RandomFunction,
    pub stiffness_dt2: RandomFunction,
    pub forcing_dt: RandomFunction,
    pub forcing_dt2: RandomFunction,
}

pub fn highdim_inputs(d: usize, t: f64, nodes: &Arc<NodeSet>) -> HighDimInputs {
    let sys = HighDimOscillator { dim: d };
    HighDimInputs {
        stiffness: RandomFunction::from_fn(nodes, |xi| sys.stiffness(t, xi)),
        forcing: RandomFunction::from_fn(nodes, |xi| sys.forcing(t, xi)),
        u0: RandomFunction::from_fn(nodes, |xi| sys.initial(1, xi)),
        v0: RandomFunction::from_fn(nodes, |xi| sys.initial(2, xi)),
        stiffness_dt: RandomFunction::from_fn(nodes, |xi| sys.stiffness_dt(1, t, xi)),
        stiffness_dt2: RandomFunction::from_fn(nodes, |xi| sys.stiffness_dt(2, t, xi)),
        forcing_dt: RandomFunction::from_fn(nodes, |xi| sys.forcing_dt(1, t, xi)),
        forcing_dt2: RandomFunction::from_fn(nodes, |xi| sys.forcing_dt(2, t, xi)),
    }
}

/// Modal tensors of the high-dimensional system at time `t`:
/// kⁱ_j = ⟨Ψᵢ, k(t,·)Ψⱼ⟩/⟨Ψᵢ,Ψᵢ⟩ and fⁱ = ⟨Ψᵢ, f(t,·)⟩/⟨Ψᵢ,Ψᵢ⟩, so the modal
/// acceleration reads üⁱ = fⁱ − kⁱ_j uʲ.
pub fn highdim_modal_tensors(
    sys: &HighDimOscillator,
    basis: &Basis,
    t: f64,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let carrier = basis.carrier();
    let q = carrier.len();
    let k_vals: Vec<f64> = (0..q).map(|n| sys.stiffness(t, carrier.node(n))).collect();
    let f_vals: Vec<f64> = (0..q).map(|n| sys.forcing(t, carrier.node(n))).collect();
    let p1 = basis.size();
    let mut k_tensor = vec![vec![0.0; p1]; p1];
    let mut f_tensor = vec![0.0; p1];
    let mut scratch = vec![0.0; q];
    for i in 0..p1 {
        f_tensor[i] =
            carrier.weighted_inner(basis.function(i).values(), &f_vals) / basis.norms()[i];
        for j in 0..p1 {
            for n in 0..q {
                scratch[n] = k_vals[n] * basis.function(j).values()[n];
            }
            k_tensor[i][j] =
                carrier.weighted_inner(basis.function(i).values(), &scratch) / basis.norms()[i];
        }
    }
    (k_tensor, f_tensor)
}

/// üⁱ from the tensor path of the high-dimensional system.
pub fn highdim_modal_rhs(k_tensor: &[Vec<f64>], f_tensor: &[f64], u_modes: &[f64]) -> Vec<f64> {
    let p1 = f_tensor.len();
    let mut out = vec![0.0; p1];
    for i in 0..p1 {
        let mut acc = f_tensor[i];
        for j in 0..p1 {
            acc -= k_tensor[i][j] * u_modes[j];
        }
        out[i] = acc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowmap::{derivative_chain_eval, fd_total_derivative, fd_window, rk4_pointwise};
    use crate::rng::CounterRng;
    use crate::spectral::reconstruct;

    #[test]
    fn p1_parameters() {
        let spec = make_problem(ProblemId::P1, "uniform").unwrap();
        assert_eq!(spec.measure.dim(), 1);
        assert_eq!(spec.measure.factors()[0], Distribution::uniform(1.0, 2.0).unwrap());
        // v̇ = g − (k/m)v at k = 1.5, v = 50
        let got = spec.ode.rhs(0.0, &[1.5], &[50.0]);
        assert!((got - (9.81 - 1.5 / 4.0 * 50.0)).abs() < 1e-14);
        assert_eq!(spec.ode.initial(1, &[1.5]), 50.0);
        assert_eq!(spec.response_label, "v");
    }

    #[test]
    fn p2_gamma_parameters() {
        let spec = make_problem(ProblemId::P2, "gamma").unwrap();
        assert_eq!(spec.measure.factors()[0], Distribution::gamma(10.0, 0.1, 340.0).unwrap());
        let got = spec.ode.rhs(0.0, &[400.0], &[0.05, 0.20]);
        assert!((got - (-400.0 / 100.0 * 0.05)).abs() < 1e-14);
        assert_eq!(spec.ode.initial(1, &[400.0]), 0.05);
        assert_eq!(spec.ode.initial(2, &[400.0]), 0.20);
    }

    #[test]
    fn p6_parameters() {
        let spec = make_problem(ProblemId::P6, "uniform_beta").unwrap();
        assert_eq!(spec.measure.factors()[0], Distribution::uniform(150.0, 450.0).unwrap());
        assert_eq!(spec.measure.factors()[1], Distribution::beta(2.0, 5.0, 0.05, 0.25).unwrap());
        // IC coupling: v(0) = 2u(0) − 0.10
        let xi = [300.0, 0.12];
        assert!((spec.ode.initial(2, &xi) - (2.0 * 0.12 - 0.10)).abs() < 1e-15);
        let got = spec.ode.rhs(0.0, &xi, &[0.1, 0.3]);
        let expect = ((1.0 - 150.0 * 0.01) * 300.0 * 0.3 - 400.0 * 0.1) / 100.0;
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn unknown_variant_is_rejected() {
        assert!(make_problem(ProblemId::P2, "weibull").is_err());
        assert!(make_problem(ProblemId::P1, "gamma").is_err());
        assert!(ProblemId::parse("highdim", Some(6)).is_err());
    }

    #[test]
    fn p3_default_grid_matches_per_axis_counts() {
        let spec = make_problem(ProblemId::P3, "uniform_uniform").unwrap();
        let nodes = spec.default_quadrature.build(&spec.measure).unwrap();
        assert_eq!(nodes.len(), 100 * 100);
        let spec = make_problem(ProblemId::P3, "uniform_beta").unwrap();
        let nodes = spec.default_quadrature.build(&spec.measure).unwrap();
        assert_eq!(nodes.len(), 100 * 80);
    }

    #[test]
    fn highdim_rejects_full_grids() {
        let spec = make_problem(ProblemId::HighDim(10), "beta3_uniform").unwrap();
        let err = gauss_grid(&spec.measure, &[4; 10]).unwrap_err();
        assert!(matches!(err, Error::DimensionTooLarge { dim: 10, max: 3 }));
        assert!(matches!(spec.default_quadrature, QuadratureSpec::MonteCarlo { q: 100_000, .. }));
    }

    #[test]
    fn highdim_values_at_the_origin() {
        let sys = HighDimOscillator { dim: 5 };
        let origin = [0.0; 5];
        // k(0, 0) = (1/2400)·40·40·(3 − 1) = 4/3
        assert!((sys.stiffness(0.0, &origin) - 4.0 / 3.0).abs() < 1e-14);
        assert!((sys.initial(1, &origin) - 8.0 / 7.0).abs() < 1e-15);
        assert!((sys.initial(2, &origin) - 7.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn highdim_input_rates_match_central_differences() {
        let sys = HighDimOscillator { dim: 5 };
        let mut rng = CounterRng::new(17);
        for _ in 0..10 {
            let xi: Vec<f64> = (0..5).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
            // ∂ₜk(0) = (1/2400)(ξ¹+40)(ξ⁶+ξ⁷+40)·(ξ²+7)/77 with ξ⁶ = ξ⁷ = 0
            let expect = (xi[0] + 40.0) * 40.0 * (xi[1] + 7.0) / 77.0 / 2400.0;
            assert!((sys.stiffness_dt(1, 0.0, &xi) - expect).abs() < 1e-15);
            let t = 0.8;
            let h = 1e-6;
            let fd = (sys.stiffness(t + h, &xi) - sys.stiffness(t - h, &xi)) / (2.0 * h);
            assert!((sys.stiffness_dt(1, t, &xi) - fd).abs() < 1e-9);
            let fd2 = (sys.forcing(t + h, &xi) - sys.forcing(t - h, &xi)) / (2.0 * h);
            assert!((sys.forcing_dt(1, t, &xi) - fd2).abs() < 1e-9);
        }
    }

    /// Integrate the deterministic companion pathwise to an interior time so
    /// finite-difference windows stay well inside the domain.
    fn interior_state(
        ode: &dyn OdeSystem,
        nodes: &Arc<NodeSet>,
        t_end: f64,
        dt: f64,
    ) -> Vec<RandomFunction> {
        let n = ode.order();
        let mut rows = vec![vec![0.0; nodes.len()]; n];
        for q in 0..nodes.len() {
            let xi = nodes.node(q).to_vec();
            let mut y: Vec<f64> = (1..=n).map(|k| ode.initial(k, &xi)).collect();
            let steps = (t_end / dt).round() as usize;
            for s in 0..steps {
                y = rk4_pointwise(ode, s as f64 * dt, &xi, &y, dt);
            }
            for (k, row) in rows.iter_mut().enumerate() {
                row[q] = y[k];
            }
        }
        rows.into_iter()
            .map(|v| RandomFunction::new(Arc::clone(nodes), v).unwrap())
            .collect()
    }

    #[test]
    fn vdp_chain_matches_finite_differences() {
        let spec = make_problem(ProblemId::P6, "uniform_beta").unwrap();
        let nodes =
            QuadratureSpec::Gauss { points_per_dim: vec![12, 10] }.build(&spec.measure).unwrap();
        let state = interior_state(spec.ode.as_ref(), &nodes, 0.5, 1e-3);
        let enriched = derivative_chain_eval(spec.ode.as_ref(), 0.5, &state, 4).unwrap();
        for m in 1..=2usize {
            let window =
                fd_window(spec.ode.as_ref(), 0.5, &state, m, 1e-4, (0.0, 10.0)).unwrap();
            let fd = fd_total_derivative(spec.ode.as_ref(), &window, m).unwrap();
            let mut worst = 0.0f64;
            let mut scale = 1.0f64;
            for q in 0..nodes.len() {
                worst =
                    worst.max((fd.values()[q] - enriched.component(2 + m).values()[q]).abs());
                scale = scale.max(enriched.component(2 + m).values()[q].abs());
            }
            assert!(worst < 1e-6 * scale, "m={m}: sup {worst} at scale {scale}");
        }
    }

    #[test]
    fn highdim_chain_matches_finite_differences() {
        let spec = make_problem(ProblemId::HighDim(5), "beta3_uniform").unwrap();
        let nodes = QuadratureSpec::MonteCarlo { q: 500, seed: 8 }.build(&spec.measure).unwrap();
        let state = interior_state(spec.ode.as_ref(), &nodes, 0.5, 1e-3);
        let enriched = derivative_chain_eval(spec.ode.as_ref(), 0.5, &state, 4).unwrap();
        for m in 1..=2usize {
            let window =
                fd_window(spec.ode.as_ref(), 0.5, &state, m, 1e-4, (0.0, 10.0)).unwrap();
            let fd = fd_total_derivative(spec.ode.as_ref(), &window, m).unwrap();
            let mut worst = 0.0f64;
            for q in 0..nodes.len() {
                worst =
                    worst.max((fd.values()[q] - enriched.component(2 + m).values()[q]).abs());
            }
            assert!(worst < 1e-6, "m={m}: sup {worst}");
        }
    }

    fn vdp_state_basis(
        spec: &ProblemSpec,
        nodes: &Arc<NodeSet>,
        p: usize,
    ) -> (Basis, Vec<RandomFunction>) {
        let state = interior_state(spec.ode.as_ref(), nodes, 0.5, 1e-3);
        let enriched = derivative_chain_eval(spec.ode.as_ref(), 0.5, &state, 4).unwrap();
        let basis =
            crate::fsc::build_basis(&enriched, p, crate::fsc::Orthogonalizer::GramSchmidt, 0.5)
                .unwrap();
        (basis, state)
    }

    #[test]
    fn multiplication_tensor_identity_and_symmetry() {
        let spec = make_problem(ProblemId::P6, "uniform_beta").unwrap();
        let nodes =
            QuadratureSpec::Gauss { points_per_dim: vec![20, 16] }.build(&spec.measure).unwrap();
        let (basis, _) = vdp_state_basis(&spec, &nodes, 4);
        let input = vdp_input_basis(&spec.measure, &nodes);
        let tensor = vdp_multiplication_tensor(&basis, &input).unwrap();
        let p1 = basis.size();
        for i in 0..p1 {
            for j in 0..p1 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (tensor.get(i, j, 0, 0, 0) - expect).abs() < 1e-10,
                    "tensor[{i}][{j}]000 = {}",
                    tensor.get(i, j, 0, 0, 0)
                );
            }
        }
        // Exact j,k,l symmetry: same products, same summation order.
        for i in 0..p1 {
            for j in 0..p1 {
                for k in 0..p1 {
                    for l in 0..p1 {
                        for m in 0..3 {
                            let a = tensor.get(i, j, k, l, m);
                            assert_eq!(a, tensor.get(i, k, j, l, m));
                            assert_eq!(a, tensor.get(i, j, l, k, m));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_contraction_equals_nodal_product() {
        let spec = make_problem(ProblemId::P6, "uniform_beta").unwrap();
        let nodes =
            QuadratureSpec::Gauss { points_per_dim: vec![20, 16] }.build(&spec.measure).unwrap();
        let (basis, _) = vdp_state_basis(&spec, &nodes, 4);
        let input = vdp_input_basis(&spec.measure, &nodes);
        let tensor = vdp_multiplication_tensor(&basis, &input).unwrap();
        let p1 = basis.size();
        let mut rng = CounterRng::new(4);
        for _ in 0..5 {
            let w: Vec<f64> = (0..p1).map(|_| rng.next_f64() - 0.5).collect();
            let x: Vec<f64> = (0..p1).map(|_| rng.next_f64() - 0.5).collect();
            let y: Vec<f64> = (0..p1).map(|_| rng.next_f64() - 0.5).collect();
            let z: Vec<f64> = (0..3).map(|_| rng.next_f64() - 0.5).collect();
            let fw = reconstruct(&w, &basis);
            let fx = reconstruct(&x, &basis);
            let fy = reconstruct(&y, &basis);
            let fz: Vec<f64> = (0..nodes.len())
                .map(|q| {
                    z.iter().enumerate().map(|(m, zm)| zm * input[m].values()[q]).sum::<f64>()
                })
                .collect();
            for i in 0..p1 {
                let mut contraction = 0.0;
                for j in 0..p1 {
                    for k in 0..p1 {
                        for l in 0..p1 {
                            for m in 0..3 {
                                contraction +=
                                    tensor.get(i, j, k, l, m) * w[j] * x[k] * y[l] * z[m];
                            }
                        }
                    }
                }
                let mut nodal = 0.0;
                for q in 0..nodes.len() {
                    nodal += basis.function(i).values()[q]
                        * fw.values()[q]
                        * fx.values()[q]
                        * fy.values()[q]
                        * fz[q]
                        * nodes.weights()[q];
                }
                nodal /= basis.norms()[i];
                assert!(
                    (contraction - nodal).abs() < 1e-10 * nodal.abs().max(1.0),
                    "i={i}: {contraction} vs {nodal}"
                );
            }
        }
    }
}
