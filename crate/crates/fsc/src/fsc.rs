//! The flow-driven spectral chaos time stepper: per-step basis rebuild from
//! the enriched flow map, probability transfer between consecutive bases
//! (mean-square or exact), the Galerkin right-hand side, and classical
//! Runge-Kutta integration of the random modes. A tensor-product chaos basis
//! covers an initial bootstrap window so the state's stochasticity can
//! develop before basis tracking takes over.

use crate::distribution::ProductMeasure;
use crate::error::{Error, Result};
use crate::flowmap::{
    derivative_chain_eval, fd_enriched_state, taylor_flow, EnrichedState, OdeSystem,
};
use crate::quadrature::NodeSet;
use crate::rfs::{
    orthogonalize_closed_form, orthogonalize_gram_schmidt, project_values, Basis,
    DependentPolicy, RandomFunction,
};
use crate::spectral::{gpc_basis, reconstruct_into, variance, GpcSpec, MomentSeries};
use std::sync::Arc;

/// How probability information moves from one basis to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferKind {
    /// Mean-square projection of the old state onto the new basis.
    Fsc1,
    /// Exact transfer through the covariance closed form.
    Fsc2,
}

/// Which orthogonalization route builds the per-step basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orthogonalizer {
    GramSchmidt,
    ClosedForm,
}

/// Initial chaos-basis window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    /// Target number of basis functions; the total polynomial order is the
    /// smallest one whose tensor-product basis reaches this size.
    pub size: usize,
    /// Window length in seconds; zero skips the bootstrap entirely.
    pub duration: f64,
}

/// Scheme parameters for one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct FscConfig {
    /// Basis size index P: the basis holds P+1 functions, n+1 ≤ P ≤ n+M.
    pub basis_index: usize,
    /// Flow-map order M (1..=4 with the built-in analytic chains).
    pub flow_order: usize,
    pub transfer: TransferKind,
    pub orthogonalizer: Orthogonalizer,
    /// Time step in seconds.
    pub dt: f64,
    /// Simulation horizon in seconds.
    pub horizon: f64,
    pub bootstrap: BootstrapConfig,
    /// Build the per-step raw set from the state pushed to the step midpoint
    /// instead of the step start. Off by default; when on, the exact
    /// transfer falls back to projection because the closed form presumes a
    /// zero-offset raw set.
    pub midpoint_basis: bool,
    /// Record the nodal pre/post difference at every basis reset.
    pub track_transfer_error: bool,
}

impl FscConfig {
    pub fn new(basis_index: usize, transfer: TransferKind) -> Self {
        FscConfig {
            basis_index,
            flow_order: 4,
            transfer,
            orthogonalizer: Orthogonalizer::GramSchmidt,
            dt: 1e-3,
            horizon: 10.0,
            bootstrap: BootstrapConfig { size: 7, duration: 1.0 },
            midpoint_basis: false,
            track_transfer_error: false,
        }
    }

    /// Reject out-of-range discretizations before any computation runs.
    pub fn validate(&self, ode_order: usize) -> Result<()> {
        if !(1..=4).contains(&self.flow_order) {
            return Err(Error::Config(format!(
                "flow order must lie in 1..=4, got {}",
                self.flow_order
            )));
        }
        let (lo, hi) = (ode_order + 1, ode_order + self.flow_order);
        if self.basis_index < lo || self.basis_index > hi {
            return Err(Error::Config(format!(
                "basis index P={} outside n+1 ..= n+M = {lo}..={hi}",
                self.basis_index
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(Error::Config(format!(
                "horizon must cover at least one step, got {}",
                self.horizon
            )));
        }
        if self.bootstrap.duration < 0.0 || self.bootstrap.duration > self.horizon {
            return Err(Error::Config(format!(
                "bootstrap duration {} outside [0, horizon]",
                self.bootstrap.duration
            )));
        }
        if self.bootstrap.duration > 0.0 && self.bootstrap.size < 2 {
            return Err(Error::Config("bootstrap basis needs at least 2 functions".into()));
        }
        Ok(())
    }
}

/// The spectral state of a simulation: the active basis and one row of
/// random modes per state component.
#[derive(Debug, Clone)]
pub struct SpectralState {
    pub t: f64,
    pub basis: Basis,
    /// Row l holds the modes of the l-th state component, l = 0..n-1.
    pub modes: Vec<Vec<f64>>,
}

impl SpectralState {
    /// Reconstruct the l-th state component nodally.
    pub fn component_nodal(&self, l: usize) -> RandomFunction {
        crate::spectral::reconstruct(&self.modes[l], &self.basis)
    }
}

/// Orthogonalize the leading P components of the enriched state, prepending
/// Ψ_0 ≡ 1. Linearly dependent components are dropped, which shrinks the
/// basis instead of failing; 'fewer than two functions total' means the
/// state carries no randomness at all and is reported as a collapse.
pub fn build_basis(
    enriched: &EnrichedState,
    basis_index: usize,
    orthogonalizer: Orthogonalizer,
    t: f64,
) -> Result<Basis> {
    let raw = &enriched.components()[..basis_index.min(enriched.len())];
    let basis = match orthogonalizer {
        Orthogonalizer::GramSchmidt => orthogonalize_gram_schmidt(raw, DependentPolicy::Drop)?,
        Orthogonalizer::ClosedForm => orthogonalize_closed_form(raw, None, DependentPolicy::Drop)?,
    };
    if basis.size() < 2 {
        return Err(Error::BasisCollapse { t });
    }
    Ok(basis)
}

/// Mean-square transfer: project the old nodal state onto the new basis.
/// The j = 0 column is preserved up to quadrature because Ψ_0 is shared.
pub fn transfer_fsc1(state_nodal: &[RandomFunction], new_basis: &Basis) -> Vec<Vec<f64>> {
    state_nodal.iter().map(|f| project_values(new_basis, f.values())).collect()
}

/// Exact transfer: the new basis was built from the state components
/// themselves, so each component expands as
/// Φ_l = E[Φ_l]·Ψ_0 + Σ_{j<l} (det△_j(l)/det□_j)·Ψ_j + Ψ_l,
/// giving modes (E[Φ_l], …ratios…, 1, 0, …) directly. Components dropped as
/// linearly dependent keep their exact expansion without the unit entry.
pub fn transfer_fsc2(new_basis: &Basis, ode_order: usize) -> Result<Vec<Vec<f64>>> {
    if new_basis.raw_expansions().len() < ode_order {
        return Err(Error::InvalidParameters(
            "basis does not carry expansions for every state component".into(),
        ));
    }
    Ok((0..ode_order).map(|l| new_basis.raw_expansions()[l].coeffs.clone()).collect())
}

/// Central-difference width for systems without an analytic chain.
const FD_STEP: f64 = 1e-4;

/// Derivative enrichments by the system's analytic chain, falling back to
/// central differences along the trajectory when the chain is unavailable
/// at some order.
fn enrich(
    ode: &dyn OdeSystem,
    t: f64,
    state_nodal: &[RandomFunction],
    flow_order: usize,
    domain: (f64, f64),
) -> Result<EnrichedState> {
    match derivative_chain_eval(ode, t, state_nodal, flow_order) {
        Err(Error::ChainUnavailable { .. }) => {
            fd_enriched_state(ode, t, state_nodal, flow_order, FD_STEP, domain)
        }
        other => other,
    }
}

struct Workspace {
    nodal_rows: Vec<Vec<f64>>,
    f_vals: Vec<f64>,
    state_buf: Vec<f64>,
}

impl Workspace {
    fn new(n: usize, q: usize) -> Self {
        Workspace {
            nodal_rows: vec![vec![0.0; q]; n],
            f_vals: vec![0.0; q],
            state_buf: vec![0.0; n],
        }
    }
}

fn galerkin_rhs_inner(
    ode: &dyn OdeSystem,
    t: f64,
    basis: &Basis,
    modes: &[Vec<f64>],
    ws: &mut Workspace,
) -> Result<Vec<Vec<f64>>> {
    let n = modes.len();
    let carrier = basis.carrier();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    for l in 1..n {
        out.push(modes[l].clone());
    }
    for (l, row) in modes.iter().enumerate() {
        reconstruct_into(row, basis, &mut ws.nodal_rows[l]);
    }
    for q in 0..carrier.len() {
        for l in 0..n {
            ws.state_buf[l] = ws.nodal_rows[l][q];
        }
        let f = ode.rhs(t, carrier.node(q), &ws.state_buf);
        if !f.is_finite() {
            return Err(Error::NonFinite { what: "galerkin right-hand side", t });
        }
        ws.f_vals[q] = f;
    }
    out.push(project_values(basis, &ws.f_vals));
    Ok(out)
}

/// Time derivative of the mode matrix: row l (< n−1) receives row l+1, and
/// the last row is the pseudo-spectral projection of the nodally evaluated
/// right-hand side onto the frozen basis.
pub fn galerkin_rhs(ode: &dyn OdeSystem, state: &SpectralState) -> Result<Vec<Vec<f64>>> {
    let mut ws = Workspace::new(state.modes.len(), state.basis.carrier().len());
    galerkin_rhs_inner(ode, state.t, &state.basis, &state.modes, &mut ws)
}

fn rk4_modes(
    ode: &dyn OdeSystem,
    t: f64,
    basis: &Basis,
    modes: &[Vec<f64>],
    dt: f64,
    ws: &mut Workspace,
) -> Result<Vec<Vec<f64>>> {
    let combine = |base: &[Vec<f64>], k: &[Vec<f64>], factor: f64| -> Vec<Vec<f64>> {
        base.iter()
            .zip(k)
            .map(|(b, kk)| b.iter().zip(kk).map(|(x, y)| x + factor * y).collect())
            .collect()
    };
    let k1 = galerkin_rhs_inner(ode, t, basis, modes, ws)?;
    let y2 = combine(modes, &k1, 0.5 * dt);
    let k2 = galerkin_rhs_inner(ode, t + 0.5 * dt, basis, &y2, ws)?;
    let y3 = combine(modes, &k2, 0.5 * dt);
    let k3 = galerkin_rhs_inner(ode, t + 0.5 * dt, basis, &y3, ws)?;
    let y4 = combine(modes, &k3, dt);
    let k4 = galerkin_rhs_inner(ode, t + dt, basis, &y4, ws)?;

    let mut next = modes.to_vec();
    for l in 0..modes.len() {
        for j in 0..modes[l].len() {
            let slope = k1[l][j] + 2.0 * k2[l][j] + 2.0 * k3[l][j] + k4[l][j];
            next[l][j] += dt / 6.0 * slope;
            if !next[l][j].is_finite() {
                return Err(Error::NonFinite { what: "spectral state", t });
            }
        }
    }
    Ok(next)
}

/// One classical Runge-Kutta step of the modal system; the basis is frozen
/// across the stage evaluations.
pub fn rk4_step(ode: &dyn OdeSystem, state: &SpectralState, dt: f64) -> Result<SpectralState> {
    if dt <= 0.0 {
        return Err(Error::InvalidParameters("rk4 step requires dt > 0".into()));
    }
    let mut ws = Workspace::new(state.modes.len(), state.basis.carrier().len());
    let modes = rk4_modes(ode, state.t, &state.basis, &state.modes, dt, &mut ws)?;
    Ok(SpectralState { t: state.t + dt, basis: state.basis.clone(), modes })
}

/// Health counters of one simulation.
#[derive(Debug, Clone, Default)]
pub struct RunDiagnostics {
    /// Number of basis resets performed.
    pub resets: usize,
    /// Largest nodal sup-norm difference between the state before and after
    /// a transfer (only populated with `track_transfer_error`).
    pub max_transfer_nodal_error: f64,
    /// Largest shift of the j = 0 mode across a transfer, relative to the
    /// mode's own magnitude (floored at one).
    pub max_mean_mode_shift: f64,
    pub min_basis_size: usize,
    pub max_basis_size: usize,
}

/// Result of one simulation: one moment series per state component
/// (component l of an order-n equation is ∂ₜ^{l-1}u) plus diagnostics.
#[derive(Debug, Clone)]
pub struct FscRun {
    pub moments: Vec<MomentSeries>,
    pub diagnostics: RunDiagnostics,
}

/// Run the full scheme: bootstrap on a tensor-product chaos basis for the
/// configured window, then per step rebuild the basis from the enriched
/// state, transfer the random modes, and advance them with RK4. The basis is
/// refreshed every time step; there is no stopping condition, which would
/// degrade the solution over long horizons.
pub fn run_fsc(
    ode: &dyn OdeSystem,
    cfg: &FscConfig,
    measure: &ProductMeasure,
    nodes: &Arc<NodeSet>,
) -> Result<FscRun> {
    let n = ode.order();
    cfg.validate(n)?;
    let steps = (cfg.horizon / cfg.dt).round().max(1.0) as usize;
    let bootstrap_steps = if cfg.bootstrap.duration > 0.0 {
        ((cfg.bootstrap.duration / cfg.dt).round() as usize).min(steps)
    } else {
        0
    };

    let ic_nodal: Vec<RandomFunction> = (1..=n)
        .map(|k| RandomFunction::from_fn(nodes, |xi| ode.initial(k, xi)))
        .collect();

    let mut diag = RunDiagnostics {
        min_basis_size: usize::MAX,
        ..RunDiagnostics::default()
    };

    let (mut basis, mut modes) = if bootstrap_steps > 0 {
        let order = GpcSpec::order_for_size(measure.dim(), cfg.bootstrap.size);
        let spec = GpcSpec { dim: measure.dim(), order };
        let b = gpc_basis(measure, spec, nodes)?;
        let m: Vec<Vec<f64>> =
            ic_nodal.iter().map(|f| project_values(&b, f.values())).collect();
        (b, m)
    } else {
        let enriched = enrich(ode, 0.0, &ic_nodal, cfg.flow_order, (0.0, cfg.horizon))?;
        let b = initial_basis(&enriched, cfg, 0.0)?;
        let m: Vec<Vec<f64>> =
            ic_nodal.iter().map(|f| project_values(&b, f.values())).collect();
        (b, m)
    };
    diag.min_basis_size = diag.min_basis_size.min(basis.size());
    diag.max_basis_size = diag.max_basis_size.max(basis.size());

    let mut moments: Vec<MomentSeries> =
        (1..=n).map(|l| MomentSeries::new(format!("s{l}"))).collect();
    record(&mut moments, 0.0, &modes, &basis);

    let mut ws = Workspace::new(n, nodes.len());
    let mut pre_nodal: Vec<Vec<f64>> = vec![vec![0.0; nodes.len()]; n];
    let mut post_nodal = vec![0.0; nodes.len()];

    for i in 0..steps {
        let t = i as f64 * cfg.dt;
        let in_fsc_phase = i >= bootstrap_steps;
        if in_fsc_phase && i > 0 {
            // Reconstruct the state, rebuild the basis from the enriched
            // flow map, and transfer the probability information.
            for (l, row) in modes.iter().enumerate() {
                reconstruct_into(row, &basis, &mut pre_nodal[l]);
            }
            let state_nodal: Vec<RandomFunction> = pre_nodal
                .iter()
                .map(|v| RandomFunction::new(Arc::clone(nodes), v.clone()))
                .collect::<Result<_>>()?;
            let enriched = enrich(ode, t, &state_nodal, cfg.flow_order, (0.0, cfg.horizon))?;
            let basis_source = if cfg.midpoint_basis {
                let pushed = taylor_flow(0.5 * cfg.dt, &enriched, cfg.flow_order);
                enrich(ode, t + 0.5 * cfg.dt, &pushed, cfg.flow_order, (0.0, cfg.horizon))?
            } else {
                enriched
            };
            let new_basis = initial_basis(&basis_source, cfg, t)?;
            let old_means: Vec<f64> = modes.iter().map(|row| row[0]).collect();
            let new_modes = match cfg.transfer {
                TransferKind::Fsc1 => transfer_fsc1(&state_nodal, &new_basis),
                TransferKind::Fsc2 if cfg.midpoint_basis => {
                    transfer_fsc1(&state_nodal, &new_basis)
                }
                TransferKind::Fsc2 => transfer_fsc2(&new_basis, n)?,
            };
            diag.resets += 1;
            diag.min_basis_size = diag.min_basis_size.min(new_basis.size());
            diag.max_basis_size = diag.max_basis_size.max(new_basis.size());
            for (l, row) in new_modes.iter().enumerate() {
                let scale = old_means[l].abs().max(1.0);
                diag.max_mean_mode_shift =
                    diag.max_mean_mode_shift.max((row[0] - old_means[l]).abs() / scale);
            }
            if cfg.track_transfer_error {
                for (l, row) in new_modes.iter().enumerate() {
                    reconstruct_into(row, &new_basis, &mut post_nodal);
                    for q in 0..nodes.len() {
                        diag.max_transfer_nodal_error = diag
                            .max_transfer_nodal_error
                            .max((post_nodal[q] - pre_nodal[l][q]).abs());
                    }
                }
            }
            basis = new_basis;
            modes = new_modes;
        }
        modes = rk4_modes(ode, t, &basis, &modes, cfg.dt, &mut ws)?;
        record(&mut moments, (i + 1) as f64 * cfg.dt, &modes, &basis);
    }

    Ok(FscRun { moments, diagnostics: diag })
}

/// Basis build that tolerates a numerically deterministic state. A collapse
/// means every raw component was dropped, which the drop rule only allows
/// when each one is constant to within its own scale times √tol; such a
/// state carries no resolvable randomness and the constant basis propagates
/// it exactly, so the run continues instead of aborting.
fn initial_basis(enriched: &EnrichedState, cfg: &FscConfig, t: f64) -> Result<Basis> {
    match build_basis(enriched, cfg.basis_index, cfg.orthogonalizer, t) {
        Ok(b) => Ok(b),
        Err(Error::BasisCollapse { .. }) => Ok(constant_only_basis(enriched)),
        Err(e) => Err(e),
    }
}

fn constant_only_basis(enriched: &EnrichedState) -> Basis {
    let carrier = Arc::clone(enriched.component(0).carrier());
    let one = RandomFunction::constant(&carrier, 1.0);
    let expansions = enriched
        .components()
        .iter()
        .map(|f| crate::rfs::RawExpansion { coeffs: vec![f.mean()], position: None })
        .collect();
    Basis::from_parts(carrier, vec![one], vec![1.0], expansions)
}

fn record(moments: &mut [MomentSeries], t: f64, modes: &[Vec<f64>], basis: &Basis) {
    for (series, row) in moments.iter_mut().zip(modes) {
        series.push(t, row[0], variance(row, basis));
    }
}
