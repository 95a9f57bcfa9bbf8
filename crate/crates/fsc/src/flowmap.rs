//! Time derivatives of the solution along a stochastic trajectory: the
//! enriched configuration state, analytic total-derivative chains, the
//! central-difference fallback, and the Taylor flow map.

use crate::error::{Error, Result};
use crate::rfs::RandomFunction;
use std::sync::Arc;

/// A stochastic ODE in explicit form: ∂ₜⁿu = f(t, ξ, s) with state
/// s = (u, ∂ₜu, …, ∂ₜⁿ⁻¹u) and initial conditions ∂ₜᵏ⁻¹u(0, ξ) = cₖ(ξ).
///
/// Implementations must be pure: the same arguments always produce the same
/// value, with no hidden state.
pub trait OdeSystem: Send + Sync {
    /// Temporal order n.
    fn order(&self) -> usize;

    /// Random dimension d.
    fn random_dim(&self) -> usize;

    /// f(t, ξ, s), the n-th time derivative of the solution.
    fn rhs(&self, t: f64, xi: &[f64], state: &[f64]) -> f64;

    /// m-th total time derivative of the right-hand side (m ≥ 1), given all
    /// lower time derivatives of the solution: `derivs` holds
    /// (u, ∂ₜu, …, ∂ₜ^{n+m-1}u). Returns `None` where no analytic chain is
    /// available; callers then fall back to finite differences.
    fn rhs_derivative(&self, m: usize, t: f64, xi: &[f64], derivs: &[f64]) -> Option<f64> {
        let _ = (m, t, xi, derivs);
        None
    }

    /// Initial condition cₖ(ξ) for the k-th state component, k = 1..=n.
    fn initial(&self, k: usize, xi: &[f64]) -> f64;
}

/// Total time derivative chain for autonomous linear systems:
/// Dₜᵐf = Σₖ aₖ ∂ₜ^{m+k−1}u where aₖ = ∂f/∂sᵏ.
pub fn linear_autonomous_chain(coeffs: &[f64], m: usize, derivs: &[f64]) -> f64 {
    let mut total = 0.0;
    for (k, a) in coeffs.iter().enumerate() {
        total += a * derivs[m + k];
    }
    total
}

/// The enriched configuration state ŝ = (u, ∂ₜu, …, ∂ₜ^{n+M−1}u) at one time
/// instant, stored as nodal random functions.
#[derive(Debug, Clone)]
pub struct EnrichedState {
    components: Vec<RandomFunction>,
    order: usize,
}

impl EnrichedState {
    /// Number of state components n (the rest are derivative enrichments).
    pub fn ode_order(&self) -> usize {
        self.order
    }

    /// All n + M components.
    pub fn components(&self) -> &[RandomFunction] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &RandomFunction {
        &self.components[k]
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Build ŝ at time `t` from the nodal state: components 1..=n are copied,
/// component n+1 is the right-hand side evaluated nodally, and components
/// n+1+m come from the system's analytic derivative chain.
pub fn derivative_chain_eval(
    ode: &dyn OdeSystem,
    t: f64,
    state_nodal: &[RandomFunction],
    flow_order: usize,
) -> Result<EnrichedState> {
    let n = ode.order();
    if state_nodal.len() != n {
        return Err(Error::InvalidParameters(format!(
            "state has {} components, the equation order is {n}",
            state_nodal.len()
        )));
    }
    let carrier = Arc::clone(state_nodal[0].carrier());
    let q_total = carrier.len();
    let mut components: Vec<Vec<f64>> = state_nodal.iter().map(|f| f.values().to_vec()).collect();

    let mut state_buf = vec![0.0; n];
    let mut rhs_vals = vec![0.0; q_total];
    for q in 0..q_total {
        for (k, c) in components.iter().enumerate() {
            state_buf[k] = c[q];
        }
        rhs_vals[q] = ode.rhs(t, carrier.node(q), &state_buf);
    }
    components.push(rhs_vals);

    let mut derivs_buf = vec![0.0; n + flow_order];
    for m in 1..flow_order {
        let mut vals = vec![0.0; q_total];
        for q in 0..q_total {
            for (k, c) in components.iter().enumerate() {
                derivs_buf[k] = c[q];
            }
            vals[q] = ode
                .rhs_derivative(m, t, carrier.node(q), &derivs_buf[..n + m])
                .ok_or(Error::ChainUnavailable { order: m })?;
        }
        components.push(vals);
    }

    let mut out = Vec::with_capacity(components.len());
    for vals in components {
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "enriched state component", t });
        }
        out.push(RandomFunction::new(Arc::clone(&carrier), vals)?);
    }
    Ok(EnrichedState { components: out, order: n })
}

/// One entry of a trajectory stencil: the time and the nodal state there.
pub type StencilEntry = (f64, Vec<RandomFunction>);

/// Integrate the deterministic per-node dynamics forward and backward to
/// build a stencil of states at t + j·h for j = −m..=m, clipped to `domain`.
/// Sub-stepping uses the classical fourth-order Runge-Kutta update, so the
/// stencil states carry O(h⁵) error, negligible against the O(h²)
/// difference formulas they feed.
pub fn fd_window(
    ode: &dyn OdeSystem,
    t: f64,
    state_nodal: &[RandomFunction],
    m: usize,
    h: f64,
    domain: (f64, f64),
) -> Result<Vec<StencilEntry>> {
    let n = ode.order();
    let carrier = Arc::clone(state_nodal[0].carrier());
    let q_total = carrier.len();
    let half = m.div_ceil(2).max(1);
    // Shift the window when it would leave the temporal domain.
    let mut offsets: Vec<i64> = (-(half as i64)..=half as i64).collect();
    let lo_excess = ((domain.0 - (t + offsets[0] as f64 * h)) / h).ceil().max(0.0) as i64;
    let hi_excess = (((t + *offsets.last().unwrap() as f64 * h) - domain.1) / h).ceil().max(0.0) as i64;
    for o in &mut offsets {
        *o += lo_excess - hi_excess;
    }

    let mut entries = Vec::with_capacity(offsets.len());
    for &o in &offsets {
        let target = t + o as f64 * h;
        let mut values: Vec<Vec<f64>> = vec![vec![0.0; q_total]; n];
        for q in 0..q_total {
            let xi = carrier.node(q);
            let mut y: Vec<f64> = state_nodal.iter().map(|f| f.values()[q]).collect();
            let steps = o.unsigned_abs() as usize;
            let dt = if o >= 0 { h } else { -h };
            let mut ti = t;
            for _ in 0..steps {
                y = rk4_pointwise(ode, ti, xi, &y, dt);
                ti += dt;
            }
            for (k, v) in y.iter().enumerate() {
                values[k][q] = *v;
            }
        }
        let state = values
            .into_iter()
            .map(|v| RandomFunction::new(Arc::clone(&carrier), v))
            .collect::<Result<Vec<_>>>()?;
        entries.push((target, state));
    }
    Ok(entries)
}

/// One classical Runge-Kutta step of the deterministic companion system at a
/// single random point.
pub(crate) fn rk4_pointwise(ode: &dyn OdeSystem, t: f64, xi: &[f64], y: &[f64], dt: f64) -> Vec<f64> {
    let n = y.len();
    let deriv = |t: f64, y: &[f64]| -> Vec<f64> {
        let mut d = Vec::with_capacity(n);
        for k in 1..n {
            d.push(y[k]);
        }
        d.push(ode.rhs(t, xi, y));
        d
    };
    let k1 = deriv(t, y);
    let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, b)| a + 0.5 * dt * b).collect();
    let k2 = deriv(t + 0.5 * dt, &y2);
    let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, b)| a + 0.5 * dt * b).collect();
    let k3 = deriv(t + 0.5 * dt, &y3);
    let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, b)| a + dt * b).collect();
    let k4 = deriv(t + dt, &y4);
    (0..n)
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// m-th total derivative of the right-hand side by difference formulas on a
/// trajectory stencil. Central second-order formulas apply on symmetric
/// windows; shifted windows fall back to one-sided differences of the same
/// width (order drops to one near the domain edge for m ≥ 3).
pub fn fd_total_derivative(
    ode: &dyn OdeSystem,
    window: &[StencilEntry],
    m: usize,
) -> Result<RandomFunction> {
    if window.len() < m + 1 {
        return Err(Error::InvalidParameters(format!(
            "stencil of {} entries cannot resolve derivative order {m}",
            window.len()
        )));
    }
    let carrier = Arc::clone(window[0].1[0].carrier());
    let q_total = carrier.len();
    let h = window[1].0 - window[0].0;

    // Nodal f values on the stencil.
    let n = ode.order();
    let mut f_vals: Vec<Vec<f64>> = Vec::with_capacity(window.len());
    let mut state_buf = vec![0.0; n];
    for (ti, state) in window {
        let mut row = vec![0.0; q_total];
        for q in 0..q_total {
            for (k, c) in state.iter().enumerate() {
                state_buf[k] = c.values()[q];
            }
            row[q] = ode.rhs(*ti, carrier.node(q), &state_buf);
        }
        f_vals.push(row);
    }

    // Difference weights for the m-th derivative on this (possibly shifted)
    // stencil, from the exact solve of the local Vandermonde system.
    let center = window
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let mid = 0.5 * (window[0].0 + window[window.len() - 1].0);
            (a.1 .0 - mid).abs().partial_cmp(&(b.1 .0 - mid).abs()).unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();
    let offsets: Vec<f64> = window.iter().map(|(ti, _)| (ti - window[center].0) / h).collect();
    let weights = difference_weights(&offsets, m)?;

    let mut out = vec![0.0; q_total];
    let scale = h.powi(m as i32);
    for q in 0..q_total {
        let mut acc = 0.0;
        for (row, w) in f_vals.iter().zip(&weights) {
            acc += w * row[q];
        }
        out[q] = acc / scale;
    }
    RandomFunction::new(carrier, out)
}

/// Solve for stencil weights reproducing the m-th derivative at offset 0:
/// Σ w_i o_i^k = k! δ_{k,m} for k = 0..len-1.
fn difference_weights(offsets: &[f64], m: usize) -> Result<Vec<f64>> {
    let n = offsets.len();
    let mut a = vec![vec![0.0; n + 1]; n];
    for (k, row) in a.iter_mut().enumerate() {
        for (i, &o) in offsets.iter().enumerate() {
            row[i] = o.powi(k as i32);
        }
        row[n] = if k == m { (1..=m).product::<usize>() as f64 } else { 0.0 };
    }
    // Gaussian elimination with partial pivoting on the augmented system.
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        if p.abs() < 1e-300 {
            return Err(Error::NumericalFailure("singular difference stencil".into()));
        }
        for r in 0..n {
            if r != col {
                let factor = a[r][col] / p;
                for c in col..=n {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
    }
    Ok((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

/// Enriched state via central differences: components beyond the right-hand
/// side come from [`fd_total_derivative`] on a trajectory window of spacing
/// `h` instead of an analytic chain. The window is clipped to `domain`, with
/// the documented order loss near its edges.
pub fn fd_enriched_state(
    ode: &dyn OdeSystem,
    t: f64,
    state_nodal: &[RandomFunction],
    flow_order: usize,
    h: f64,
    domain: (f64, f64),
) -> Result<EnrichedState> {
    let n = ode.order();
    if state_nodal.len() != n {
        return Err(Error::InvalidParameters(format!(
            "state has {} components, the equation order is {n}",
            state_nodal.len()
        )));
    }
    let carrier = Arc::clone(state_nodal[0].carrier());
    let mut components: Vec<RandomFunction> = state_nodal.to_vec();
    let mut state_buf = vec![0.0; n];
    let mut rhs_vals = vec![0.0; carrier.len()];
    for q in 0..carrier.len() {
        for (k, c) in state_nodal.iter().enumerate() {
            state_buf[k] = c.values()[q];
        }
        rhs_vals[q] = ode.rhs(t, carrier.node(q), &state_buf);
    }
    components.push(RandomFunction::new(Arc::clone(&carrier), rhs_vals)?);
    if flow_order > 1 {
        let window = fd_window(ode, t, state_nodal, flow_order - 1, h, domain)?;
        for m in 1..flow_order {
            components.push(fd_total_derivative(ode, &window, m)?);
        }
    }
    for c in &components {
        if c.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "enriched state component", t });
        }
    }
    Ok(EnrichedState { components, order: n })
}

/// Order-M Taylor push of each state component:
/// φᵏ(M)(h, s) = Σ_{j=0}^{M} hʲ/j! · ∂ₜ^{j+k−1}u.
pub fn taylor_flow(h: f64, enriched: &EnrichedState, flow_order: usize) -> Vec<RandomFunction> {
    let n = enriched.ode_order();
    debug_assert!(enriched.len() >= n + flow_order);
    let carrier = Arc::clone(enriched.component(0).carrier());
    let q_total = carrier.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut values = vec![0.0; q_total];
        let mut factor = 1.0;
        for j in 0..=flow_order {
            if j > 0 {
                factor *= h / j as f64;
            }
            let comp = enriched.component(k + j);
            for (v, c) in values.iter_mut().zip(comp.values()) {
                *v += factor * c;
            }
        }
        out.push(RandomFunction::new(Arc::clone(&carrier), values).expect("finite taylor push"));
    }
    out
}
