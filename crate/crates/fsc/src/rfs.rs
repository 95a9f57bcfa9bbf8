//! Random functions on a node set, orthogonal bases, and the operation-count
//! models for the two orthogonalization routes.
//!
//! A random function is stored by its values at the carrier's quadrature
//! nodes (collocation form), so inner products reduce to weighted sums and
//! nonlinear operations act pointwise. A basis always starts with Ψ_0 ≡ 1;
//! the remaining vectors come either from the classic Gram-Schmidt recursion
//! or from the covariance closed form, which expresses every orthogonalized
//! vector through determinant ratios of the raw set's covariance minors.

use crate::error::{Error, Result};
use crate::quadrature::NodeSet;
use std::sync::Arc;

/// Maximum allowed relative off-diagonal residual |⟨Ψi,Ψj⟩|/√(Υii·Υjj) for a
/// basis to count as orthogonal.
pub const TOL_ORTH: f64 = 1e-8;
/// A raw function whose deflated norm falls below `TOL_DROP` times its own
/// norm is treated as linearly dependent on its predecessors.
pub const TOL_DROP: f64 = 1e-12;
/// Relative floor for covariance pivots in the closed-form route.
pub const TOL_DET: f64 = 1e-14;

/// Element of the random function space: one value per carrier node.
#[derive(Debug, Clone)]
pub struct RandomFunction {
    carrier: Arc<NodeSet>,
    values: Vec<f64>,
}

impl RandomFunction {
    pub fn new(carrier: Arc<NodeSet>, values: Vec<f64>) -> Result<Self> {
        if values.len() != carrier.len() {
            return Err(Error::NodeSetMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "random function value", t: f64::NAN });
        }
        Ok(RandomFunction { carrier, values })
    }

    /// Evaluate `f` at every carrier node.
    pub fn from_fn(carrier: &Arc<NodeSet>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = carrier.evaluate(&f);
        RandomFunction { carrier: Arc::clone(carrier), values }
    }

    pub fn constant(carrier: &Arc<NodeSet>, c: f64) -> Self {
        RandomFunction { carrier: Arc::clone(carrier), values: vec![c; carrier.len()] }
    }

    pub fn carrier(&self) -> &Arc<NodeSet> {
        &self.carrier
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn same_carrier(&self, other: &RandomFunction) -> bool {
        Arc::ptr_eq(&self.carrier, &other.carrier)
    }

    /// E[f] under the carrier measure.
    pub fn mean(&self) -> f64 {
        self.carrier.weighted_sum(&self.values)
    }
}

/// ⟨f, g⟩ = Σ_q f(ξ_q) g(ξ_q) w_q, accumulated in node order.
pub fn inner(f: &RandomFunction, g: &RandomFunction) -> Result<f64> {
    if !f.same_carrier(g) {
        return Err(Error::NodeSetMismatch);
    }
    Ok(f.carrier.weighted_inner(f.values(), g.values()))
}

/// Expansion of one raw input function over the basis that was produced from
/// the raw set: Φ = Σ_k coeffs[k] Ψ_k (exactly, by construction).
///
/// `position` is the index of the raw function's own orthogonalized image,
/// where `coeffs[position] == 1`; it is `None` when the function was dropped
/// as linearly dependent, in which case the expansion has no residual term.
#[derive(Debug, Clone)]
pub struct RawExpansion {
    pub coeffs: Vec<f64>,
    pub position: Option<usize>,
}

/// What to do when a raw function turns out linearly dependent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DependentPolicy {
    /// Surface the dependence as an error; the caller decides.
    Error,
    /// Skip the function and keep orthogonalizing the rest.
    Drop,
}

/// Ordered orthogonal basis {Ψ_0, …, Ψ_R} with Ψ_0 ≡ 1 and the norm vector
/// Υ_kk = ⟨Ψ_k, Ψ_k⟩.
#[derive(Debug, Clone)]
pub struct Basis {
    carrier: Arc<NodeSet>,
    functions: Vec<RandomFunction>,
    norms: Vec<f64>,
    raw_expansions: Vec<RawExpansion>,
    elementary_ops: u64,
}

impl Basis {
    pub(crate) fn from_parts(
        carrier: Arc<NodeSet>,
        functions: Vec<RandomFunction>,
        norms: Vec<f64>,
        raw_expansions: Vec<RawExpansion>,
    ) -> Self {
        Basis { carrier, functions, norms, raw_expansions, elementary_ops: 0 }
    }

    /// Number of basis functions (P + 1).
    pub fn size(&self) -> usize {
        self.functions.len()
    }

    pub fn carrier(&self) -> &Arc<NodeSet> {
        &self.carrier
    }

    pub fn functions(&self) -> &[RandomFunction] {
        &self.functions
    }

    pub fn function(&self, j: usize) -> &RandomFunction {
        &self.functions[j]
    }

    /// Υ_kk for each basis function; Υ_00 = 1.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Expansion of each raw input over this basis, in input order.
    pub fn raw_expansions(&self) -> &[RawExpansion] {
        &self.raw_expansions
    }

    /// Count of elementary float operations the construction route spent on
    /// nodal data (inner products, deflations, norms). Zero for bases
    /// assembled from parts, such as tensor-product chaos bases.
    pub fn elementary_ops(&self) -> u64 {
        self.elementary_ops
    }

    /// Largest relative off-diagonal inner product: the orthogonality defect.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.size() {
            for j in 0..i {
                let ip = self.carrier.weighted_inner(self.functions[i].values(), self.functions[j].values());
                worst = worst.max(ip.abs() / (self.norms[i] * self.norms[j]).sqrt());
            }
        }
        worst
    }
}

fn check_common_carrier(raw: &[RandomFunction]) -> Result<Arc<NodeSet>> {
    let first = raw.first().ok_or_else(|| {
        Error::InvalidParameters("orthogonalization requires at least one raw function".into())
    })?;
    for f in raw {
        if !f.same_carrier(first) {
            return Err(Error::NodeSetMismatch);
        }
    }
    Ok(Arc::clone(first.carrier()))
}

/// Classic Gram-Schmidt with Ψ_0 ≡ 1 prepended. The raw set must exclude
/// constants; a linearly dependent entry raises `DegenerateFunction`.
pub fn gram_schmidt(raw: &[RandomFunction]) -> Result<Basis> {
    orthogonalize_gram_schmidt(raw, DependentPolicy::Error)
}

/// Gram-Schmidt with an explicit dependence policy. Dropped functions still
/// receive an exact expansion over the surviving basis.
pub fn orthogonalize_gram_schmidt(raw: &[RandomFunction], policy: DependentPolicy) -> Result<Basis> {
    let carrier = check_common_carrier(raw)?;
    let q = carrier.len() as u64;
    let mut ops: u64 = 0;

    let mut functions = vec![RandomFunction::constant(&carrier, 1.0)];
    let mut norms = vec![1.0];
    let mut raw_expansions: Vec<RawExpansion> = Vec::with_capacity(raw.len());

    for (index, phi) in raw.iter().enumerate() {
        let phi_norm = carrier.weighted_inner(phi.values(), phi.values());
        let mut residual = phi.values().to_vec();
        let mut coeffs = Vec::with_capacity(functions.len() + 1);

        // ⟨Φ, Ψ_0⟩ = E[Φ]: Ψ_0 ≡ 1, so the product with Ψ_0 is skipped.
        let mean = carrier.weighted_sum(phi.values());
        ops += 2 * q;
        coeffs.push(mean);
        for v in residual.iter_mut() {
            *v -= mean;
        }
        ops += q;

        for k in 1..functions.len() {
            // ⟨Φ, Ψ_k⟩ evaluated against the running residual: identical in
            // exact arithmetic (the earlier Ψ's are orthogonal to what has
            // been removed) and stable against the norm ladders these raw
            // sets produce.
            let c = carrier.weighted_inner(residual.as_slice(), functions[k].values()) / norms[k];
            ops += 3 * q + 1;
            coeffs.push(c);
            for (v, psi) in residual.iter_mut().zip(functions[k].values()) {
                *v -= c * psi;
            }
            ops += 2 * q;
        }

        let norm = carrier.weighted_inner(&residual, &residual);
        ops += 3 * q;
        if norm <= TOL_DROP * phi_norm.max(f64::MIN_POSITIVE) {
            match policy {
                DependentPolicy::Error => return Err(Error::DegenerateFunction { index }),
                DependentPolicy::Drop => {
                    raw_expansions.push(RawExpansion { coeffs, position: None });
                    continue;
                }
            }
        }
        coeffs.push(1.0);
        let position = functions.len();
        functions.push(RandomFunction { carrier: Arc::clone(&carrier), values: residual });
        norms.push(norm);
        raw_expansions.push(RawExpansion { coeffs, position: Some(position) });
    }

    // Pad every expansion to the final basis size.
    let size = functions.len();
    for exp in &mut raw_expansions {
        exp.coeffs.resize(size, 0.0);
    }
    Ok(Basis { carrier, functions, norms, raw_expansions, elementary_ops: ops })
}

/// Precomputed first- and second-moment statistics of a raw set.
#[derive(Debug, Clone)]
pub struct RawStats {
    /// E[Φ_j]
    pub means: Vec<f64>,
    /// Cov[Φ_i, Φ_j], row-major square matrix.
    pub cov: Vec<Vec<f64>>,
}

impl RawStats {
    /// Nodal evaluation of means and the covariance matrix via centered
    /// products (avoids the cancellation of ⟨ΦΦ⟩ − EE).
    pub fn from_functions(raw: &[RandomFunction]) -> Result<Self> {
        let carrier = check_common_carrier(raw)?;
        let p = raw.len();
        let means: Vec<f64> = raw.iter().map(|f| carrier.weighted_sum(f.values())).collect();
        let centered: Vec<Vec<f64>> = raw
            .iter()
            .zip(&means)
            .map(|(f, &m)| f.values().iter().map(|v| v - m).collect())
            .collect();
        let mut cov = vec![vec![0.0; p]; p];
        for i in 0..p {
            for j in 0..=i {
                let c = carrier.weighted_inner(&centered[i], &centered[j]);
                cov[i][j] = c;
                cov[j][i] = c;
            }
        }
        Ok(RawStats { means, cov })
    }
}

/// Orthogonalization through the covariance closed form: each new vector is
/// the raw function minus its mean and minus determinant-ratio multiples of
/// the earlier vectors. Equivalent to Gram-Schmidt, but when the expectation
/// vector and covariance matrix are known beforehand it touches the nodal
/// data only once per function.
pub fn closed_form_orthogonalize(raw: &[RandomFunction], stats: Option<&RawStats>) -> Result<Basis> {
    orthogonalize_closed_form(raw, stats, DependentPolicy::Error)
}

/// Closed-form orthogonalization with an explicit dependence policy.
///
/// Dependence is detected through the pivots of an incrementally grown
/// LDLᵀ factorization of the covariance matrix: the pivot d_k equals
/// det□_k / det□_{k−1} = ⟨Ψ_k, Ψ_k⟩, so a vanishing pivot is exactly the
/// linear-dependence signal. The determinant ratios det△_k(j)/det□_k come
/// out of the same factorization as forward-solve components, so leading
/// minors are factorized once and reused for every later function.
pub fn orthogonalize_closed_form(
    raw: &[RandomFunction],
    stats: Option<&RawStats>,
    policy: DependentPolicy,
) -> Result<Basis> {
    let carrier = check_common_carrier(raw)?;
    let computed;
    let stats = match stats {
        Some(s) => s,
        None => {
            computed = RawStats::from_functions(raw)?;
            &computed
        }
    };
    if stats.means.len() != raw.len() || stats.cov.len() != raw.len() {
        return Err(Error::InvalidParameters("stats do not match the raw set".into()));
    }

    let q = carrier.len() as u64;
    let mut ops: u64 = 0;
    let mut functions = vec![RandomFunction::constant(&carrier, 1.0)];
    let mut norms = vec![1.0];
    let mut raw_expansions: Vec<RawExpansion> = Vec::with_capacity(raw.len());
    // Unit lower-triangular rows and pivots of the retained covariance block.
    let mut lower: Vec<Vec<f64>> = Vec::new();
    let mut pivots: Vec<f64> = Vec::new();
    let mut retained: Vec<usize> = Vec::new();

    for (index, phi) in raw.iter().enumerate() {
        let r = retained.len();
        // Forward solve L z = c over the retained block, c_k = Cov[Φ_index, Φ_retained(k)].
        let mut z = Vec::with_capacity(r);
        for k in 0..r {
            let mut v = stats.cov[index][retained[k]];
            for (m, zm) in z.iter().enumerate() {
                v -= lower[k][m] * zm;
            }
            z.push(v);
        }
        // γ_k = det△_k(index)/det□_k = z_k / d_k
        let gamma: Vec<f64> = z.iter().zip(&pivots).map(|(zk, dk)| zk / dk).collect();
        let mut pivot = stats.cov[index][index];
        for (zk, gk) in z.iter().zip(&gamma) {
            pivot -= zk * gk;
        }

        let scale = stats.cov[index][index].max(f64::MIN_POSITIVE);
        let mut coeffs = Vec::with_capacity(r + 2);
        coeffs.push(stats.means[index]);
        coeffs.extend_from_slice(&gamma);

        if pivot <= TOL_DET * scale {
            match policy {
                DependentPolicy::Error => {
                    return Err(Error::SingularCovariance { order: r + 1 });
                }
                DependentPolicy::Drop => {
                    raw_expansions.push(RawExpansion { coeffs, position: None });
                    continue;
                }
            }
        }

        // Ψ = Φ − E[Φ]·Ψ_0 − Σ γ_k Ψ_k, assembled nodally.
        let mut values = phi.values().to_vec();
        for v in values.iter_mut() {
            *v -= stats.means[index];
        }
        ops += q;
        for (k, &g) in gamma.iter().enumerate() {
            for (v, psi) in values.iter_mut().zip(functions[k + 1].values()) {
                *v -= g * psi;
            }
            ops += 2 * q;
        }
        let nodal_norm = carrier.weighted_inner(&values, &values);
        ops += 3 * q;

        coeffs.push(1.0);
        let position = functions.len();
        functions.push(RandomFunction { carrier: Arc::clone(&carrier), values });
        norms.push(nodal_norm);
        raw_expansions.push(RawExpansion { coeffs, position: Some(position) });
        lower.push(gamma);
        pivots.push(pivot);
        retained.push(index);
    }

    let size = functions.len();
    for exp in &mut raw_expansions {
        exp.coeffs.resize(size, 0.0);
    }
    Ok(Basis { carrier, functions, norms, raw_expansions, elementary_ops: ops })
}

/// j-th projection coefficient ⟨Ψ_j, f⟩ / Υ_jj.
pub fn projection_coeff(basis: &Basis, f: &RandomFunction, j: usize) -> Result<f64> {
    if !Arc::ptr_eq(basis.carrier(), f.carrier()) {
        return Err(Error::NodeSetMismatch);
    }
    Ok(basis.carrier.weighted_inner(basis.functions[j].values(), f.values()) / basis.norms[j])
}

/// All projection coefficients of a nodal value vector at once.
pub(crate) fn project_values(basis: &Basis, values: &[f64]) -> Vec<f64> {
    (0..basis.size())
        .map(|j| basis.carrier.weighted_inner(basis.functions[j].values(), values) / basis.norms[j])
        .collect()
}

/// Orthogonalization route priced by the operation-count models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostModel {
    /// Closed form with the expectation vector and covariance matrix known.
    ClosedFormKnownStats,
    /// Closed form including the nodal cost of estimating those statistics.
    ClosedFormUnknownStats,
    /// Classic Gram-Schmidt.
    ClassicGS,
}

/// Closed-form count of elementary operations (+, −, ×, ÷) needed to
/// orthogonalize P raw functions against a Q-point rule. All three models
/// return 0 at P = 0.
pub fn cost_model(method: CostModel, p: u64, q: u64) -> u64 {
    if p == 0 {
        return 0;
    }
    let pi = p as i128;
    let qi = q as i128;
    let count = match method {
        CostModel::ClosedFormKnownStats => {
            let poly = pi.pow(5) + 5 * pi.pow(4) - 10 * pi.pow(3) + 10 * pi.pow(2) - 36 * pi + 30;
            debug_assert_eq!(poly % 30, 0);
            pi * (pi + 1) * qi + poly / 30
        }
        CostModel::ClosedFormUnknownStats => {
            let lead = 7 * pi * pi + 11 * pi;
            debug_assert_eq!(lead % 2, 0);
            let poly = pi.pow(5) + 5 * pi.pow(4) - 10 * pi.pow(3) - 5 * pi.pow(2) - 81 * pi + 30;
            debug_assert_eq!(poly % 30, 0);
            (lead / 2) * qi + poly / 30
        }
        CostModel::ClassicGS => {
            let lead = 5 * pi * pi + 9 * pi - 6;
            debug_assert_eq!(lead % 2, 0);
            (lead / 2) * qi - 2 * pi + 1
        }
    };
    debug_assert!(count >= 0, "cost model out of range: {method:?} P={p} Q={q}");
    count as u64
}

/// Leading coefficient of Q in the corresponding cost model.
pub fn cost_model_q_coefficient(method: CostModel, p: u64) -> f64 {
    if p == 0 {
        return 0.0;
    }
    let p = p as f64;
    match method {
        CostModel::ClosedFormKnownStats => p * (p + 1.0),
        CostModel::ClosedFormUnknownStats => (7.0 * p * p + 11.0 * p) / 2.0,
        CostModel::ClassicGS => (5.0 * p * p + 9.0 * p - 6.0) / 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::Distribution;
    use crate::quadrature::gauss_rule;
    use crate::rng::CounterRng;

    /// Carrier for dμ = (3/2)ξ² dξ on [−1, 1]: a Legendre probability rule
    /// with weights rescaled by 3ξ² and renormalized.
    fn quadratic_weight_carrier(points: usize) -> Arc<NodeSet> {
        let uniform = Distribution::uniform(-1.0, 1.0).unwrap();
        let base = gauss_rule(&uniform, points).unwrap();
        Arc::new(base.with_weight_modifier(|x| 3.0 * x[0] * x[0]).unwrap())
    }

    fn monomials(carrier: &Arc<NodeSet>, degrees: std::ops::RangeInclusive<i32>) -> Vec<RandomFunction> {
        degrees
            .map(|d| RandomFunction::from_fn(carrier, |x| x[0].powi(d)))
            .collect()
    }

    /// Determinant by dense LU with partial pivoting, the independent
    /// reference for the incremental factorization inside the library.
    fn det_dense(a: &[Vec<f64>]) -> f64 {
        let n = a.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut det = 1.0;
        for col in 0..n {
            let (pivot_row, _) = m
                .iter()
                .enumerate()
                .skip(col)
                .map(|(r, row)| (r, row[col].abs()))
                .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
                .unwrap();
            if pivot_row != col {
                m.swap(pivot_row, col);
                det = -det;
            }
            let p = m[col][col];
            if p == 0.0 {
                return 0.0;
            }
            det *= p;
            for r in col + 1..n {
                let factor = m[r][col] / p;
                for c in col..n {
                    m[r][c] -= factor * m[col][c];
                }
            }
        }
        det
    }

    #[test]
    fn quadratic_weight_monomial_inner_products() {
        let carrier = quadratic_weight_carrier(20);
        let xi2 = RandomFunction::from_fn(&carrier, |x| x[0] * x[0]);
        let xi3 = RandomFunction::from_fn(&carrier, |x| x[0].powi(3));
        let xi5 = RandomFunction::from_fn(&carrier, |x| x[0].powi(5));
        // E[ξ^m] under (3/2)ξ²dξ is 3/(m+3) for even m and 0 for odd m.
        assert!(inner(&xi3, &xi5).unwrap() - 3.0 / 11.0 < 1e-12);
        assert!((inner(&xi3, &xi3).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(inner(&xi2, &xi3).unwrap().abs() < 1e-12);
    }

    #[test]
    fn inner_product_basics() {
        let carrier = Arc::new(gauss_rule(&Distribution::uniform(-1.0, 1.0).unwrap(), 5).unwrap());
        let one = RandomFunction::constant(&carrier, 1.0);
        assert!((inner(&one, &one).unwrap() - 1.0).abs() < 1e-15);
        let xi = RandomFunction::from_fn(&carrier, |x| x[0]);
        assert!((inner(&xi, &xi).unwrap() - 1.0 / 3.0).abs() < 1e-14);

        let other = Arc::new(gauss_rule(&Distribution::uniform(-1.0, 1.0).unwrap(), 5).unwrap());
        let foreign = RandomFunction::constant(&other, 1.0);
        assert_eq!(inner(&one, &foreign).unwrap_err(), Error::NodeSetMismatch);
    }

    #[test]
    fn monomial_basis_under_quadratic_weight() {
        let carrier = quadratic_weight_carrier(30);
        let raw = monomials(&carrier, 1..=5);
        for basis in [
            gram_schmidt(&raw).unwrap(),
            closed_form_orthogonalize(&raw, None).unwrap(),
        ] {
            assert_eq!(basis.size(), 6);
            let expect: [&dyn Fn(f64) -> f64; 6] = [
                &|_| 1.0,
                &|x| x,
                &|x| x * x - 3.0 / 5.0,
                &|x: f64| x.powi(3) - 5.0 / 7.0 * x,
                &|x: f64| x.powi(4) - 10.0 / 9.0 * x * x + 5.0 / 21.0,
                &|x: f64| x.powi(5) - 14.0 / 11.0 * x.powi(3) + 35.0 / 99.0 * x,
            ];
            for (j, f) in expect.iter().enumerate() {
                for q in 0..carrier.len() {
                    let x = carrier.node(q)[0];
                    assert!(
                        (basis.function(j).values()[q] - f(x)).abs() < 1e-10,
                        "Ψ_{j} deviates at node {q}"
                    );
                }
            }
            assert!(basis.orthogonality_defect() < TOL_ORTH);
        }
    }

    #[test]
    fn determinant_ratio_matches_expansion_coefficient() {
        let carrier = quadratic_weight_carrier(30);
        let raw = monomials(&carrier, 1..=5);
        let stats = RawStats::from_functions(&raw).unwrap();
        // det△_2(4)/det□_2 computed from explicit covariance minors
        let sq2 = vec![
            vec![stats.cov[0][0], stats.cov[0][1]],
            vec![stats.cov[1][0], stats.cov[1][1]],
        ];
        let tri2 = vec![
            vec![stats.cov[0][0], stats.cov[0][1]],
            vec![stats.cov[3][0], stats.cov[3][1]],
        ];
        let ratio = det_dense(&tri2) / det_dense(&sq2);
        assert!((ratio - 10.0 / 9.0).abs() < 1e-12, "ratio = {ratio}");

        let basis = closed_form_orthogonalize(&raw, Some(&stats)).unwrap();
        // Φ_4 = ξ⁴ is raw index 3; its coefficient on Ψ_2 is the same ratio.
        let coeff = basis.raw_expansions()[3].coeffs[2];
        assert!((coeff - 10.0 / 9.0).abs() < 1e-12, "γ = {coeff}");
    }

    #[test]
    fn single_linear_function() {
        let carrier = Arc::new(gauss_rule(&Distribution::uniform(-1.0, 1.0).unwrap(), 10).unwrap());
        let raw = vec![RandomFunction::from_fn(&carrier, |x| x[0])];
        let basis = gram_schmidt(&raw).unwrap();
        assert_eq!(basis.size(), 2);
        assert!((basis.norms()[1] - 1.0 / 3.0).abs() < 1e-14);
        // Closed-form route: Ψ_1 = Φ_1 − E[Φ_1]
        let b2 = closed_form_orthogonalize(&raw, None).unwrap();
        for q in 0..carrier.len() {
            assert!((b2.function(1).values()[q] - carrier.node(q)[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_dependence_is_detected() {
        let carrier = Arc::new(gauss_rule(&Distribution::uniform(-1.0, 1.0).unwrap(), 10).unwrap());
        let raw = vec![
            RandomFunction::from_fn(&carrier, |x| 2.0 * x[0]),
            RandomFunction::from_fn(&carrier, |x| 3.0 * x[0]),
        ];
        assert_eq!(gram_schmidt(&raw).unwrap_err(), Error::DegenerateFunction { index: 1 });
        assert!(matches!(
            closed_form_orthogonalize(&raw, None).unwrap_err(),
            Error::SingularCovariance { .. }
        ));
        // Drop policy keeps going and records an exact expansion.
        let basis = orthogonalize_gram_schmidt(&raw, DependentPolicy::Drop).unwrap();
        assert_eq!(basis.size(), 2);
        let exp = &basis.raw_expansions()[1];
        assert_eq!(exp.position, None);
        // 3ξ = (3/2) · Ψ_1 where Ψ_1 = 2ξ
        assert!((exp.coeffs[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_gram_schmidt_on_random_sets() {
        let carrier = Arc::new(gauss_rule(&Distribution::uniform(-1.0, 1.0).unwrap(), 200).unwrap());
        let mut rng = CounterRng::new(99);
        for _ in 0..20 {
            let p = 2 + (rng.next_u64() % 7) as usize; // up to 8
            let raw: Vec<RandomFunction> = (0..p)
                .map(|j| {
                    let mut c: Vec<f64> = (0..p).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
                    c[j] += 2.0;
                    RandomFunction::from_fn(&carrier, |x| {
                        c.iter().enumerate().map(|(d, ck)| ck * x[0].powi(d as i32 + 1)).sum()
                    })
                })
                .collect();
            let gs = gram_schmidt(&raw).unwrap();
            let cf = closed_form_orthogonalize(&raw, None).unwrap();
            assert_eq!(gs.size(), cf.size());
            for j in 0..gs.size() {
                let scale = gs.norms()[j].sqrt().max(1e-30);
                for q in 0..carrier.len() {
                    let diff = (gs.function(j).values()[q] - cf.function(j).values()[q]).abs();
                    assert!(diff <= 1e-9 * scale.max(1.0), "Ψ_{j}: diff {diff}");
                }
            }
        }
    }

    #[test]
    fn projection_coefficients_are_linear() {
        let carrier = quadratic_weight_carrier(30);
        let raw = monomials(&carrier, 1..=5);
        let basis = gram_schmidt(&raw).unwrap();

        // f = Ψ_2: coefficient 1 at j = 2, ~0 elsewhere
        let f = basis.function(2).clone();
        for j in 0..basis.size() {
            let c = projection_coeff(&basis, &f, j).unwrap();
            let expect = if j == 2 { 1.0 } else { 0.0 };
            assert!((c - expect).abs() < 1e-10, "j={j}: {c}");
        }

        // constants project onto Ψ_0 alone
        let c5 = RandomFunction::constant(&carrier, 5.0);
        assert!((projection_coeff(&basis, &c5, 0).unwrap() - 5.0).abs() < 1e-12);
        assert!(projection_coeff(&basis, &c5, 3).unwrap().abs() < 1e-10);

        // f = 2Ψ_1 + 3Ψ_3
        let mut combo = vec![0.0; carrier.len()];
        for q in 0..carrier.len() {
            combo[q] = 2.0 * basis.function(1).values()[q] + 3.0 * basis.function(3).values()[q];
        }
        let f = RandomFunction::new(Arc::clone(&carrier), combo).unwrap();
        let expect = [0.0, 2.0, 0.0, 3.0, 0.0, 0.0];
        for (j, e) in expect.iter().enumerate() {
            assert!((projection_coeff(&basis, &f, j).unwrap() - e).abs() < 1e-10);
        }
    }

    #[test]
    fn proof_formulas_hold() {
        // ⟨Ψ_k,Ψ_k⟩ = det□_k/det□_{k−1} and ⟨Φ_j,Ψ_k⟩ = det△_k(j)/det□_{k−1}
        let carrier = quadratic_weight_carrier(30);
        let raw = monomials(&carrier, 1..=5);
        let stats = RawStats::from_functions(&raw).unwrap();
        let basis = gram_schmidt(&raw).unwrap();
        let p = raw.len();
        let minor = |k: usize| -> Vec<Vec<f64>> {
            (0..k).map(|i| (0..k).map(|j| stats.cov[i][j]).collect()).collect()
        };
        let mut det_prev = 1.0;
        for k in 1..=p {
            let det_k = det_dense(&minor(k));
            let norm = basis.norms()[k];
            assert!(
                (norm - det_k / det_prev).abs() <= (1e-9 * norm.abs()).max(1e-15),
                "norm formula at k={k}"
            );
            for j in (k + 1)..=p {
                let mut tri = minor(k);
                for c in 0..k {
                    tri[k - 1][c] = stats.cov[j - 1][c];
                }
                let lhs = inner(&raw[j - 1], basis.function(k)).unwrap();
                let rhs = det_dense(&tri) / det_prev;
                assert!(
                    (lhs - rhs).abs() <= (1e-9 * lhs.abs()).max(1e-12),
                    "cross formula at k={k}, j={j}: {lhs} vs {rhs}"
                );
            }
            det_prev = det_k;
        }
    }

    #[test]
    fn cost_model_values() {
        for m in [CostModel::ClosedFormKnownStats, CostModel::ClosedFormUnknownStats, CostModel::ClassicGS] {
            assert_eq!(cost_model(m, 0, 123), 0);
        }
        assert_eq!(cost_model(CostModel::ClassicGS, 3, 100), 3295);
        // ClassicGS / ClosedFormKnownStats leading-coefficient ratio is 2.75 at P = 3
        let ratio = cost_model_q_coefficient(CostModel::ClassicGS, 3)
            / cost_model_q_coefficient(CostModel::ClosedFormKnownStats, 3);
        assert_eq!(ratio, 2.75);
        // The known-statistics route always wins on the Q coefficient, with
        // the advantage peaking at exactly 2.75 for P = 3 and P = 4.
        for p in 1..=8u64 {
            let known = cost_model_q_coefficient(CostModel::ClosedFormKnownStats, p);
            let gs = cost_model_q_coefficient(CostModel::ClassicGS, p);
            assert!(known < gs, "P = {p}");
            let r = gs / known;
            assert!(r <= 2.75, "P = {p}: ratio {r}");
            assert_eq!(r == 2.75, p == 3 || p == 4, "P = {p}: ratio {r}");
        }
        // The unknown-statistics route is always slower than Gram-Schmidt.
        for p in 1..=8u64 {
            let unknown = cost_model_q_coefficient(CostModel::ClosedFormUnknownStats, p);
            let gs = cost_model_q_coefficient(CostModel::ClassicGS, p);
            assert!(unknown > gs, "P = {p}");
        }
    }

    #[test]
    fn gram_schmidt_op_count_scales_linearly() {
        let carrier = Arc::new(gauss_rule(&Distribution::uniform(-1.0, 1.0).unwrap(), 64).unwrap());
        let carrier2 = Arc::new(gauss_rule(&Distribution::uniform(-1.0, 1.0).unwrap(), 128).unwrap());
        for p in [3usize, 4, 6] {
            let count = |c: &Arc<NodeSet>| -> u64 {
                let raw = monomials(c, 1..=p as i32);
                gram_schmidt(&raw).unwrap().elementary_ops()
            };
            let (q1, q2) = (carrier.len() as f64, carrier2.len() as f64);
            let slope = (count(&carrier2) as f64 - count(&carrier) as f64) / (q2 - q1);
            let predicted = cost_model_q_coefficient(CostModel::ClassicGS, p as u64);
            assert!(
                (slope - predicted).abs() <= 0.10 * predicted,
                "P={p}: slope {slope} vs predicted {predicted}"
            );
        }
    }
}
