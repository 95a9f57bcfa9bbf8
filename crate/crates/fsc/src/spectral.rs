//! Spectral expansions: tensor-product polynomial chaos bases, random modes,
//! and probability-moment extraction.

use crate::distribution::ProductMeasure;
use crate::error::{Error, Result};
use crate::quadrature::{recurrence, NodeSet};
use crate::rfs::{project_values, Basis, RandomFunction};
use std::sync::Arc;

/// Dimension and maximal total order of a tensor-product chaos basis.
///
/// The basis holds (d+p)!/(d!p!) functions, ordered by total degree and then
/// reverse-lexicographically within a degree class (the leading dimension's
/// exponent decreases first).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GpcSpec {
    pub dim: usize,
    pub order: usize,
}

impl GpcSpec {
    /// Number of basis functions (d+p)!/(d!p!).
    pub fn basis_size(&self) -> usize {
        let (d, p) = (self.dim, self.order);
        // binom(d+p, p) by incremental products to stay in integer range
        let mut n: usize = 1;
        for i in 1..=p {
            n = n * (d + i) / i;
        }
        n
    }

    /// Multi-indices |k| ≤ p in graded reverse-lexicographic order.
    pub fn multi_indices(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(self.basis_size());
        for degree in 0..=self.order {
            compositions(degree, self.dim, &mut Vec::new(), &mut out);
        }
        out
    }

    /// Smallest total order whose basis has at least `size` members.
    pub fn order_for_size(dim: usize, size: usize) -> usize {
        let mut p = 0;
        loop {
            if (GpcSpec { dim, order: p }).basis_size() >= size {
                return p;
            }
            p += 1;
        }
    }
}

fn compositions(degree: usize, dims: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if dims == 1 {
        let mut idx = prefix.clone();
        idx.push(degree);
        out.push(idx);
        return;
    }
    for first in (0..=degree).rev() {
        prefix.push(first);
        compositions(degree - first, dims - 1, prefix, out);
        prefix.pop();
    }
}

/// Values of the monic orthogonal polynomials of one factor at a list of
/// coordinates: row k holds p_k at every coordinate, k = 0..=max_order.
fn univariate_table(
    dist: &crate::distribution::Distribution,
    coords: impl Iterator<Item = f64>,
    max_order: usize,
) -> Vec<Vec<f64>> {
    let rec = recurrence(dist, max_order + 1);
    let xs: Vec<f64> = coords.collect();
    let mut table = vec![vec![0.0; xs.len()]; max_order + 1];
    for (q, &xi) in xs.iter().enumerate() {
        let x = (xi - rec.shift) / rec.scale;
        let mut prev = 0.0;
        let mut cur = 1.0;
        table[0][q] = 1.0;
        for k in 0..max_order {
            let next = (x - rec.diag[k]) * cur - if k == 0 { 0.0 } else { rec.offdiag_sq[k - 1] } * prev;
            prev = cur;
            cur = next;
            table[k + 1][q] = cur;
        }
    }
    table
}

/// Tensor-product chaos basis on `nodes`: products of univariate orthogonal
/// polynomials matched to each factor law, Ψ_0 ≡ 1, norms evaluated with the
/// node set's quadrature.
///
/// Each univariate factor is monic in its affinely mapped reference variable
/// (Legendre/Jacobi on [−1, 1], Laguerre on [0, ∞), probabilist Hermite on
/// ℝ); the norms vector absorbs the scaling, so no separate normalization
/// convention is imposed.
pub fn gpc_basis(measure: &ProductMeasure, spec: GpcSpec, nodes: &Arc<NodeSet>) -> Result<Basis> {
    if spec.dim != measure.dim() || spec.dim != nodes.dim() {
        return Err(Error::InvalidParameters(format!(
            "gpc basis dimension mismatch: spec d={}, measure d={}, nodes d={}",
            spec.dim,
            measure.dim(),
            nodes.dim()
        )));
    }
    let tables: Vec<Vec<Vec<f64>>> = measure
        .factors()
        .iter()
        .enumerate()
        .map(|(axis, dist)| {
            univariate_table(dist, (0..nodes.len()).map(|q| nodes.node(q)[axis]), spec.order)
        })
        .collect();

    let indices = spec.multi_indices();
    let mut functions = Vec::with_capacity(indices.len());
    let mut norms = Vec::with_capacity(indices.len());
    for k in &indices {
        let mut values = vec![1.0; nodes.len()];
        for (axis, &ki) in k.iter().enumerate() {
            if ki > 0 {
                for (v, t) in values.iter_mut().zip(&tables[axis][ki]) {
                    *v *= t;
                }
            }
        }
        let norm = nodes.weighted_inner(&values, &values);
        functions.push(RandomFunction::new(Arc::clone(nodes), values)?);
        norms.push(norm);
    }
    norms[0] = 1.0;
    Ok(Basis::from_parts(Arc::clone(nodes), functions, norms, Vec::new()))
}

/// E[z], the first random mode.
pub fn mean(modes: &[f64]) -> f64 {
    modes[0]
}

/// Var[z] = Σ_{j≥1} Υ_jj (z^j)².
pub fn variance(modes: &[f64], basis: &Basis) -> f64 {
    debug_assert_eq!(modes.len(), basis.size());
    let mut v = 0.0;
    for j in 1..modes.len() {
        v += basis.norms()[j] * modes[j] * modes[j];
    }
    v
}

/// Nodal sum Σ_j z^j Ψ_j.
pub fn reconstruct(modes: &[f64], basis: &Basis) -> RandomFunction {
    let mut values = vec![0.0; basis.carrier().len()];
    reconstruct_into(modes, basis, &mut values);
    RandomFunction::new(Arc::clone(basis.carrier()), values)
        .expect("basis functions are finite and aligned")
}

pub(crate) fn reconstruct_into(modes: &[f64], basis: &Basis, out: &mut [f64]) {
    debug_assert_eq!(modes.len(), basis.size());
    out.fill(0.0);
    for (j, m) in modes.iter().enumerate() {
        if *m != 0.0 {
            for (o, v) in out.iter_mut().zip(basis.function(j).values()) {
                *o += m * v;
            }
        }
    }
}

/// All random modes of `f` at once: z^j = ⟨Ψ_j, f⟩ / Υ_jj.
pub fn project(basis: &Basis, f: &RandomFunction) -> Result<Vec<f64>> {
    if !Arc::ptr_eq(basis.carrier(), f.carrier()) {
        return Err(Error::NodeSetMismatch);
    }
    Ok(project_values(basis, f.values()))
}

/// Time series of mean and variance for one response.
#[derive(Debug, Clone, Default)]
pub struct MomentSeries {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub label: String,
}

impl MomentSeries {
    pub fn new(label: impl Into<String>) -> Self {
        MomentSeries { times: Vec::new(), mean: Vec::new(), variance: Vec::new(), label: label.into() }
    }

    /// Append one record; tiny negative variances (≥ −1e-12) clamp to zero.
    pub fn push(&mut self, t: f64, mean: f64, variance: f64) {
        debug_assert!(variance >= -1e-12, "variance {variance} below the clamp window");
        self.times.push(t);
        self.mean.push(mean);
        self.variance.push(variance.max(0.0));
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `t,mean,variance` rows with 17-significant-digit decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 64 + 16);
        out.push_str("t,mean,variance\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e}\n",
                self.times[i], self.mean[i], self.variance[i]
            ));
        }
        out
    }
}
