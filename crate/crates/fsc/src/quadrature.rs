//! Quadrature node sets: Gauss rules matched to each probability law, full
//! tensor grids for up to three random dimensions, and Monte Carlo nodes.
//!
//! All rules are normalized as probability measures (weights sum to one), so
//! an expectation is a plain weighted sum over the nodes.

use crate::distribution::{Distribution, ProductMeasure};
use crate::error::{Error, Result};

/// How a node set was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    GaussFullGrid,
    MonteCarlo,
}

/// Quadrature points ξ_q ∈ ℝ^d with positive weights; the discrete carrier
/// of every random function in the crate.
#[derive(Debug, Clone)]
pub struct NodeSet {
    dim: usize,
    /// Row-major: node q occupies `nodes[q*dim .. (q+1)*dim]`.
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kind: NodeKind,
}

impl NodeSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of quadrature points Q.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn node(&self, q: usize) -> &[f64] {
        &self.nodes[q * self.dim..(q + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Coordinates of a 1-D rule as a flat slice.
    pub fn coords_1d(&self) -> &[f64] {
        debug_assert_eq!(self.dim, 1);
        &self.nodes
    }

    /// Σ_q f(ξ_q) g(ξ_q) w_q over nodal value slices, accumulated in node
    /// order. The inputs must be aligned with this node set.
    pub fn weighted_inner(&self, f: &[f64], g: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        debug_assert_eq!(g.len(), self.len());
        let mut acc = 0.0;
        for q in 0..self.weights.len() {
            acc += f[q] * g[q] * self.weights[q];
        }
        acc
    }

    /// Σ_q f(ξ_q) w_q, the expectation of a nodal value vector.
    pub fn weighted_sum(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        let mut acc = 0.0;
        for q in 0..self.weights.len() {
            acc += f[q] * self.weights[q];
        }
        acc
    }

    /// Evaluate a scalar function at every node.
    pub fn evaluate(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|q| f(self.node(q))).collect()
    }

    /// A copy of this rule with weights rescaled by `modifier(ξ_q)` and
    /// renormalized to sum one. This turns a rule for one measure into a rule
    /// for a measure with an extra density factor, at the cost of needing
    /// more points for the same polynomial exactness.
    pub fn with_weight_modifier(&self, modifier: impl Fn(&[f64]) -> f64) -> Result<NodeSet> {
        let mut weights: Vec<f64> = (0..self.len())
            .map(|q| self.weights[q] * modifier(self.node(q)))
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidParameters(
                "weight modifier must produce a positive total mass".into(),
            ));
        }
        for w in &mut weights {
            *w /= total;
        }
        Ok(NodeSet { dim: self.dim, nodes: self.nodes.clone(), weights, kind: self.kind })
    }
}

/// Monic three-term recurrence coefficients for the orthogonal family of a
/// law: p_{k+1}(x) = (x − a_k) p_k(x) − b_k p_{k−1}(x) on the reference
/// domain, together with the affine map from reference to support.
pub(crate) struct Recurrence {
    pub diag: Vec<f64>,
    pub offdiag_sq: Vec<f64>,
    /// ξ = shift + scale · x
    pub shift: f64,
    pub scale: f64,
}

pub(crate) fn recurrence(dist: &Distribution, n: usize) -> Recurrence {
    match *dist {
        Distribution::Uniform { a, b } => {
            // Legendre on [−1, 1]
            let diag = vec![0.0; n];
            let offdiag_sq = (1..n)
                .map(|k| {
                    let k = k as f64;
                    k * k / ((2.0 * k - 1.0) * (2.0 * k + 1.0))
                })
                .collect();
            Recurrence { diag, offdiag_sq, shift: 0.5 * (a + b), scale: 0.5 * (b - a) }
        }
        Distribution::Beta { alpha, beta, a, b } => {
            // Jacobi weight (1−x)^A (1+x)^B with A = β−1, B = α−1, so that
            // (1+x) maps to (ξ−a) and (1−x) to (b−ξ).
            let aa = beta - 1.0;
            let bb = alpha - 1.0;
            let mut diag = Vec::with_capacity(n);
            for k in 0..n {
                let k = k as f64;
                if k == 0.0 {
                    diag.push((bb - aa) / (aa + bb + 2.0));
                } else {
                    let s = 2.0 * k + aa + bb;
                    diag.push((bb * bb - aa * aa) / (s * (s + 2.0)));
                }
            }
            let mut offdiag_sq = Vec::with_capacity(n.saturating_sub(1));
            for k in 1..n {
                let kf = k as f64;
                if k == 1 {
                    offdiag_sq.push(
                        4.0 * (aa + 1.0) * (bb + 1.0)
                            / ((aa + bb + 2.0) * (aa + bb + 2.0) * (aa + bb + 3.0)),
                    );
                } else {
                    let s = 2.0 * kf + aa + bb;
                    offdiag_sq.push(
                        4.0 * kf * (kf + aa) * (kf + bb) * (kf + aa + bb)
                            / (s * s * (s + 1.0) * (s - 1.0)),
                    );
                }
            }
            Recurrence { diag, offdiag_sq, shift: 0.5 * (a + b), scale: 0.5 * (b - a) }
        }
        Distribution::Gamma { alpha, beta, a } => {
            // Generalized Laguerre with exponent A = α−1 on [0, ∞)
            let aa = alpha - 1.0;
            let diag = (0..n).map(|k| 2.0 * k as f64 + aa + 1.0).collect();
            let offdiag_sq = (1..n).map(|k| k as f64 * (k as f64 + aa)).collect();
            Recurrence { diag, offdiag_sq, shift: a, scale: 1.0 / beta }
        }
        Distribution::Normal { mu, sigma } => {
            // Probabilist Hermite
            let diag = vec![0.0; n];
            let offdiag_sq = (1..n).map(|k| k as f64).collect();
            Recurrence { diag, offdiag_sq, shift: mu, scale: sigma }
        }
    }
}

/// Gauss rule with `n_points` nodes, orthogonal with respect to the law's
/// probability density. Exact for polynomials of degree ≤ 2·n_points − 1
/// against the measure; weights are normalized to sum one.
pub fn gauss_rule(dist: &Distribution, n_points: usize) -> Result<NodeSet> {
    if n_points == 0 {
        return Err(Error::InvalidParameters("gauss rule requires n_points >= 1".into()));
    }
    let rec = recurrence(dist, n_points);
    let mut d = rec.diag.clone();
    let mut e: Vec<f64> = rec.offdiag_sq.iter().map(|&b| b.sqrt()).collect();
    e.push(0.0);
    let mut z = vec![0.0; n_points];
    z[0] = 1.0;
    tridiagonal_ql(&mut d, &mut e, &mut z)?;

    let mut order: Vec<usize> = (0..n_points).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let nodes: Vec<f64> = order.iter().map(|&i| rec.shift + rec.scale * d[i]).collect();
    let mut weights: Vec<f64> = order.iter().map(|&i| z[i] * z[i]).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(NodeSet { dim: 1, nodes, weights, kind: NodeKind::GaussFullGrid })
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix, carrying
/// only the first row of the eigenvector matrix (all Golub-Welsch needs).
///
/// `d` holds the diagonal, `e` the subdiagonal in `e[0..n-1]` with `e[n-1]`
/// scratch, and `z` the tracked row (pass e_1 for quadrature weights).
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::NumericalFailure(
                    "tridiagonal QL did not converge in 50 sweeps".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let sign_r = if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Full tensor-product grid from 1-D rules: Cartesian nodes, product weights.
/// Limited to three dimensions; higher-dimensional measures take the Monte
/// Carlo route.
pub fn tensor_grid(rules: &[NodeSet]) -> Result<NodeSet> {
    if rules.is_empty() {
        return Err(Error::InvalidParameters("tensor grid requires at least one rule".into()));
    }
    for r in rules {
        if r.dim() != 1 {
            return Err(Error::InvalidParameters("tensor grid factors must be 1-D rules".into()));
        }
    }
    let d = rules.len();
    if d > 3 {
        return Err(Error::DimensionTooLarge { dim: d, max: 3 });
    }
    if d == 1 {
        return Ok(rules[0].clone());
    }
    let total: usize = rules.iter().map(|r| r.len()).product();
    let mut nodes = Vec::with_capacity(total * d);
    let mut weights = Vec::with_capacity(total);
    let mut index = vec![0usize; d];
    // First axis slowest, last axis fastest (nested-loop order).
    for _ in 0..total {
        let mut w = 1.0;
        for (axis, rule) in rules.iter().enumerate() {
            nodes.push(rule.coords_1d()[index[axis]]);
            w *= rule.weights()[index[axis]];
        }
        weights.push(w);
        for axis in (0..d).rev() {
            index[axis] += 1;
            if index[axis] < rules[axis].len() {
                break;
            }
            index[axis] = 0;
        }
    }
    Ok(NodeSet { dim: d, nodes, weights, kind: NodeKind::GaussFullGrid })
}

/// Monte Carlo node set: Q points sampled from the measure, uniform weights
/// 1/Q, deterministic for a fixed seed.
pub fn mc_nodes(measure: &ProductMeasure, q: usize, seed: u64) -> Result<NodeSet> {
    if q == 0 {
        return Err(Error::InvalidParameters("mc nodes require Q >= 1".into()));
    }
    let nodes = measure.sample(q, seed);
    Ok(NodeSet {
        dim: measure.dim(),
        nodes,
        weights: vec![1.0 / q as f64; q],
        kind: NodeKind::MonteCarlo,
    })
}

/// The per-law default Gauss point counts used by the batch driver. These are
/// defaults, not constants; any count can be requested explicitly.
pub fn default_gauss_points(dist: &Distribution) -> usize {
    match dist {
        Distribution::Uniform { .. } => 100,
        Distribution::Beta { .. } => 80,
        Distribution::Gamma { .. } => 140,
        Distribution::Normal { .. } => 110,
    }
}

/// Gauss full grid for a product measure, one rule per axis.
pub fn gauss_grid(measure: &ProductMeasure, points_per_dim: &[usize]) -> Result<NodeSet> {
    if points_per_dim.len() != measure.dim() {
        return Err(Error::InvalidParameters(format!(
            "expected {} per-axis point counts, got {}",
            measure.dim(),
            points_per_dim.len()
        )));
    }
    if measure.dim() > 3 {
        return Err(Error::DimensionTooLarge { dim: measure.dim(), max: 3 });
    }
    let rules: Vec<NodeSet> = measure
        .factors()
        .iter()
        .zip(points_per_dim)
        .map(|(dist, &n)| gauss_rule(dist, n))
        .collect::<Result<_>>()?;
    tensor_grid(&rules)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_two_point_rule() {
        let d = Distribution::uniform(-1.0, 1.0).unwrap();
        let rule = gauss_rule(&d, 2).unwrap();
        let x = rule.coords_1d();
        assert!((x[0] + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((x[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((rule.weights()[0] - 0.5).abs() < 1e-15);
        assert!((rule.weights()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn legendre_five_point_fourth_moment() {
        let d = Distribution::uniform(-1.0, 1.0).unwrap();
        let rule = gauss_rule(&d, 5).unwrap();
        let quartic: Vec<f64> = rule.coords_1d().iter().map(|&x| x.powi(4)).collect();
        assert!((rule.weighted_sum(&quartic) - 0.2).abs() < 1e-14);
    }

    #[test]
    fn hermite_six_point_moments() {
        let d = Distribution::normal(0.0, 1.0).unwrap();
        let rule = gauss_rule(&d, 6).unwrap();
        let sq: Vec<f64> = rule.coords_1d().iter().map(|&x| x * x).collect();
        let quart: Vec<f64> = rule.coords_1d().iter().map(|&x| x.powi(4)).collect();
        assert!((rule.weighted_sum(&sq) - 1.0).abs() < 1e-12);
        assert!((rule.weighted_sum(&quart) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_exactness_against_analytic_moments() {
        let laws = [
            Distribution::uniform(-1.0, 1.0).unwrap(),
            Distribution::beta(2.0, 5.0, 0.0, 1.0).unwrap(),
            Distribution::gamma(10.0, 0.1, 0.0).unwrap(),
            Distribution::normal(0.5, 2.0).unwrap(),
        ];
        for dist in &laws {
            for n in 1..=30usize {
                let rule = gauss_rule(dist, n).unwrap();
                for deg in 0..=(2 * n - 1) as u32 {
                    let vals: Vec<f64> =
                        rule.coords_1d().iter().map(|&x| x.powi(deg as i32)).collect();
                    let quad = rule.weighted_sum(&vals);
                    let exact = dist.raw_moment(deg);
                    let tol = 1e-11 * exact.abs().max(1.0);
                    assert!(
                        (quad - exact).abs() <= tol,
                        "{dist:?} n={n} deg={deg}: quad={quad} exact={exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn weights_of_full_grid_sum_to_one() {
        let u = gauss_rule(&Distribution::uniform(-1.0, 1.0).unwrap(), 2).unwrap();
        let grid = tensor_grid(&[u.clone(), u]).unwrap();
        assert_eq!(grid.len(), 4);
        let sum: f64 = grid.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_grid_sizes_and_limits() {
        let u = gauss_rule(&Distribution::uniform(340.0, 460.0).unwrap(), 100).unwrap();
        let b = gauss_rule(&Distribution::beta(2.0, 5.0, 340.0, 460.0).unwrap(), 80).unwrap();
        let grid = tensor_grid(&[u.clone(), b]).unwrap();
        assert_eq!(grid.len(), 8000);
        // single rule passes through
        let single = tensor_grid(std::slice::from_ref(&u)).unwrap();
        assert_eq!(single.len(), 100);
        // four axes are rejected
        let err = tensor_grid(&[u.clone(), u.clone(), u.clone(), u]).unwrap_err();
        assert!(matches!(err, Error::DimensionTooLarge { dim: 4, max: 3 }));
    }

    #[test]
    fn separable_integrand_factorizes() {
        let ud = Distribution::uniform(-1.0, 1.0).unwrap();
        let bd = Distribution::beta(2.0, 5.0, 0.0, 1.0).unwrap();
        let ur = gauss_rule(&ud, 12).unwrap();
        let br = gauss_rule(&bd, 12).unwrap();
        let grid = tensor_grid(&[ur.clone(), br.clone()]).unwrap();
        // f(ξ¹)g(ξ²) with f = ξ³+1, g = ξ²
        let joint = grid.evaluate(|x| (x[0].powi(3) + 1.0) * x[1] * x[1]);
        let fi: Vec<f64> = ur.coords_1d().iter().map(|&x| x.powi(3) + 1.0).collect();
        let gi: Vec<f64> = br.coords_1d().iter().map(|&x| x * x).collect();
        let product = ur.weighted_sum(&fi) * br.weighted_sum(&gi);
        assert!((grid.weighted_sum(&joint) - product).abs() < 1e-13);
    }

    #[test]
    fn mc_nodes_weights_and_determinism() {
        let m = ProductMeasure::new(vec![
            Distribution::beta(2.0, 5.0, -1.0, 1.0).unwrap(),
            Distribution::beta(2.0, 5.0, -1.0, 1.0).unwrap(),
            Distribution::beta(2.0, 5.0, -1.0, 1.0).unwrap(),
            Distribution::uniform(-1.0, 1.0).unwrap(),
            Distribution::uniform(-1.0, 1.0).unwrap(),
        ])
        .unwrap();
        let q = 100_000;
        let a = mc_nodes(&m, q, 3).unwrap();
        let b = mc_nodes(&m, q, 3).unwrap();
        assert_eq!(a.weights()[0], 1.0 / q as f64);
        assert_eq!(a.node(17), b.node(17));

        let one = mc_nodes(&m, 1, 3).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.weights()[0], 1.0);
    }

    #[test]
    fn mc_second_moment_of_uniform() {
        let m = ProductMeasure::new(vec![Distribution::uniform(-1.0, 1.0).unwrap()]).unwrap();
        let nodes = mc_nodes(&m, 100_000, 11).unwrap();
        let sq: Vec<f64> = (0..nodes.len()).map(|q| nodes.node(q)[0].powi(2)).collect();
        assert!((nodes.weighted_sum(&sq) - 1.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn summation_is_bit_deterministic() {
        let d = Distribution::beta(2.0, 5.0, 340.0, 460.0).unwrap();
        let a = gauss_rule(&d, 80).unwrap();
        let b = gauss_rule(&d, 80).unwrap();
        let f: Vec<f64> = a.coords_1d().iter().map(|x| (x / 100.0).sin()).collect();
        assert_eq!(a.weighted_inner(&f, &f), b.weighted_inner(&f, &f));
    }

    #[test]
    fn densities_integrate_to_one_under_matching_rules() {
        // 200-point matching rule applied to each law's own density divided
        // by the rule's implicit density: ∫ f dξ = E[f/density] under the
        // probability rule; equivalently Σ w_q = 1 already certifies the
        // normalization of the rule itself, so here we integrate the density
        // against a plain (unweighted) polynomial rule instead.
        for dist in [
            Distribution::uniform(1.0, 2.0).unwrap(),
            Distribution::beta(2.0, 5.0, 0.05, 0.25).unwrap(),
            Distribution::gamma(10.0, 0.1, 340.0).unwrap(),
            Distribution::normal(2.5, 0.125).unwrap(),
        ] {
            let rule = gauss_rule(&dist, 200).unwrap();
            // E[1] under the measure: the density integral in disguise.
            let ones = vec![1.0; rule.len()];
            assert!((rule.weighted_sum(&ones) - 1.0).abs() < 1e-10);
            // Independent check through a plain Legendre rule on a finite
            // window covering the bulk of the mass.
            let (lo, hi) = match dist {
                Distribution::Uniform { a, b } => (a, b),
                Distribution::Beta { a, b, .. } => (a, b),
                Distribution::Gamma { a, .. } => (a, a + 700.0),
                Distribution::Normal { mu, sigma } => (mu - 12.0 * sigma, mu + 12.0 * sigma),
            };
            let window = Distribution::uniform(lo, hi).unwrap();
            let leg = gauss_rule(&window, 200).unwrap();
            let dens: Vec<f64> = leg.coords_1d().iter().map(|&x| dist.density(x)).collect();
            let integral = leg.weighted_sum(&dens) * (hi - lo);
            assert!((integral - 1.0).abs() < 1e-10, "{dist:?}: ∫f = {integral}");
        }
    }
}
