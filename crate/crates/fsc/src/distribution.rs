//! The four 1-D probability laws and their d-fold product measures.
//!
//! Densities follow the probabilist convention: each law integrates to one
//! over its support, so expectations are plain weighted sums downstream.
//! Sampling is driven by the counter-based generator in [`crate::rng`];
//! identical seeds reproduce identical bit streams on every platform.

use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::special::{ln_beta, ln_gamma, regularized_beta};
use std::f64::consts::PI;

/// A 1-D probability law.
///
/// * `Uniform` on `[a, b]`: f(ξ) = 1/(b−a)
/// * `Beta(α, β)` on `[a, b]`: f(ξ) = (ξ−a)^{α−1}(b−ξ)^{β−1} / ((b−a)^{α+β−1} B(α,β))
/// * `Gamma(α, β)` on `[a, ∞)`: f(ξ) = β^α/Γ(α) (ξ−a)^{α−1} e^{−β(ξ−a)}
/// * `Normal(μ, σ²)` on ℝ: f(ξ) = 1/(σ√(2π)) exp(−(ξ−μ)²/(2σ²))
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Uniform { a: f64, b: f64 },
    Beta { alpha: f64, beta: f64, a: f64, b: f64 },
    Gamma { alpha: f64, beta: f64, a: f64 },
    Normal { mu: f64, sigma: f64 },
}

impl Distribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidParameters(format!(
                "uniform requires a < b, got a={a}, b={b}"
            )));
        }
        Ok(Distribution::Uniform { a, b })
    }

    pub fn beta(alpha: f64, beta: f64, a: f64, b: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "beta requires α > 0 and β > 0, got α={alpha}, β={beta}"
            )));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidParameters(format!(
                "beta requires a < b, got a={a}, b={b}"
            )));
        }
        Ok(Distribution::Beta { alpha, beta, a, b })
    }

    pub fn gamma(alpha: f64, beta: f64, a: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "gamma requires α > 0 and β > 0, got α={alpha}, β={beta}"
            )));
        }
        Ok(Distribution::Gamma { alpha, beta, a })
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        if !(mu.is_finite() && sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "normal requires σ > 0, got μ={mu}, σ={sigma}"
            )));
        }
        Ok(Distribution::Normal { mu, sigma })
    }

    /// Probability density at `x`; zero outside the support.
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Distribution::Uniform { a, b } => {
                if x >= a && x <= b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Distribution::Beta { alpha, beta, a, b } => {
                if x < a || x > b {
                    return 0.0;
                }
                // Evaluate in log space; endpoints with exponent zero are exact.
                let ln = (alpha - 1.0) * (x - a).ln() + (beta - 1.0) * (b - x).ln()
                    - (alpha + beta - 1.0) * (b - a).ln()
                    - ln_beta(alpha, beta);
                if ln.is_nan() {
                    // 0^0 at an endpoint: the corresponding factor is 1.
                    let mut v = -(alpha + beta - 1.0) * (b - a).ln() - ln_beta(alpha, beta);
                    if alpha != 1.0 {
                        v += (alpha - 1.0) * (x - a).ln();
                    }
                    if beta != 1.0 {
                        v += (beta - 1.0) * (b - x).ln();
                    }
                    v.exp()
                } else {
                    ln.exp()
                }
            }
            Distribution::Gamma { alpha, beta, a } => {
                if x < a {
                    return 0.0;
                }
                let y = x - a;
                if y == 0.0 {
                    return if alpha < 1.0 {
                        f64::INFINITY
                    } else if alpha == 1.0 {
                        beta
                    } else {
                        0.0
                    };
                }
                (alpha * beta.ln() - ln_gamma(alpha) + (alpha - 1.0) * y.ln() - beta * y).exp()
            }
            Distribution::Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
            }
        }
    }

    /// Lower and upper support bounds (±∞ where unbounded).
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Distribution::Uniform { a, b } => (a, b),
            Distribution::Beta { a, b, .. } => (a, b),
            Distribution::Gamma { a, .. } => (a, f64::INFINITY),
            Distribution::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Uniform { a, b } => 0.5 * (a + b),
            Distribution::Beta { alpha, beta, a, b } => a + (b - a) * alpha / (alpha + beta),
            Distribution::Gamma { alpha, beta, a } => a + alpha / beta,
            Distribution::Normal { mu, .. } => mu,
        }
    }

    /// Raw moment E[ξ^m], exact up to f64 rounding.
    ///
    /// Used as the analytic reference when checking Gauss-rule exactness.
    pub fn raw_moment(&self, m: u32) -> f64 {
        match *self {
            Distribution::Uniform { a, b } => {
                // (b^{m+1} − a^{m+1}) / ((m+1)(b−a)), evaluated by a stable sum
                // Σ_{j=0}^{m} a^j b^{m−j} / (m+1).
                let mut s = 0.0;
                for j in 0..=m {
                    s += a.powi(j as i32) * b.powi((m - j) as i32);
                }
                s / (m as f64 + 1.0)
            }
            Distribution::Beta { alpha, beta, a, b } => {
                // ξ = a + (b−a)·B with B ~ Beta(α,β) on [0,1];
                // E[B^j] = Π_{i<j} (α+i)/(α+β+i).
                let mut total = 0.0;
                let mut choose = 1.0;
                for j in 0..=m {
                    if j > 0 {
                        choose *= (m - j + 1) as f64 / j as f64;
                    }
                    let mut bmom = 1.0;
                    for i in 0..j {
                        bmom *= (alpha + i as f64) / (alpha + beta + i as f64);
                    }
                    total += choose * a.powi((m - j) as i32) * (b - a).powi(j as i32) * bmom;
                }
                total
            }
            Distribution::Gamma { alpha, beta, a } => {
                // ξ = a + G with G ~ Gamma(α, rate β); E[G^j] = Π_{i<j} (α+i) / β^j.
                let mut total = 0.0;
                let mut choose = 1.0;
                for j in 0..=m {
                    if j > 0 {
                        choose *= (m - j + 1) as f64 / j as f64;
                    }
                    let mut gmom = 1.0;
                    for i in 0..j {
                        gmom *= (alpha + i as f64) / beta;
                    }
                    total += choose * a.powi((m - j) as i32) * gmom;
                }
                total
            }
            Distribution::Normal { mu, sigma } => {
                // ξ = μ + σZ; E[Z^j] = (j−1)!! for even j, 0 for odd j.
                let mut total = 0.0;
                let mut choose = 1.0;
                for j in 0..=m {
                    if j > 0 {
                        choose *= (m - j + 1) as f64 / j as f64;
                    }
                    if j % 2 == 0 {
                        let mut zm = 1.0;
                        let mut i = j as i64 - 1;
                        while i > 1 {
                            zm *= i as f64;
                            i -= 2;
                        }
                        total += choose * mu.powi((m - j) as i32) * sigma.powi(j as i32) * zm;
                    }
                }
                total
            }
        }
    }

    /// Draw one sample from the substream `rng`.
    ///
    /// Uniform uses the direct map, beta inverts a tabulated regularized
    /// incomplete beta with Newton refinement, gamma uses Marsaglia-Tsang and
    /// normal uses Box-Muller. All are exclusively fed from `rng`, so a
    /// sample is a pure function of its substream.
    pub fn sample_one(&self, rng: &mut CounterRng) -> f64 {
        match *self {
            Distribution::Uniform { a, b } => a + (b - a) * rng.next_f64(),
            Distribution::Beta { alpha, beta, a, b } => {
                a + (b - a) * sample_beta01(alpha, beta, rng)
            }
            Distribution::Gamma { alpha, beta, a } => a + sample_gamma(alpha, rng) / beta,
            Distribution::Normal { mu, sigma } => mu + sigma * sample_standard_normal(rng),
        }
    }
}

/// Box-Muller (cosine branch).
fn sample_standard_normal(rng: &mut CounterRng) -> f64 {
    let u1 = rng.next_open01();
    let u2 = rng.next_open01();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Marsaglia-Tsang squeeze for Gamma(α, 1). The α < 1 case boosts through
/// Gamma(α+1) with the standard U^{1/α} correction.
fn sample_gamma(alpha: f64, rng: &mut CounterRng) -> f64 {
    if alpha < 1.0 {
        let u = rng.next_open01();
        return sample_gamma(alpha + 1.0, rng) * u.powf(1.0 / alpha);
    }
    let d = alpha - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = sample_standard_normal(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v3 = v * v * v;
        let u = rng.next_open01();
        if u < 1.0 - 0.0331 * x.powi(4) {
            return d * v3;
        }
        if u.ln() < 0.5 * x * x + d * (1.0 - v3 + v3.ln()) {
            return d * v3;
        }
    }
}

/// Inverse-CDF sampling of Beta(α, β) on [0, 1]: bracket on a fixed table of
/// I_x(α, β), then polish with safeguarded Newton steps.
fn sample_beta01(alpha: f64, beta: f64, rng: &mut CounterRng) -> f64 {
    let u = rng.next_open01();
    invert_regularized_beta(u, alpha, beta)
}

pub(crate) fn invert_regularized_beta(u: f64, alpha: f64, beta: f64) -> f64 {
    const KNOTS: usize = 129;
    // Bracket u between table knots.
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut flo = 0.0;
    let mut fhi = 1.0;
    for i in 1..KNOTS {
        let x = i as f64 / KNOTS as f64;
        let fx = regularized_beta(x, alpha, beta);
        if fx < u {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
            break;
        }
    }
    let ln_b = ln_beta(alpha, beta);
    let pdf = |x: f64| -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        ((alpha - 1.0) * x.ln() + (beta - 1.0) * (1.0 - x).ln() - ln_b).exp()
    };
    let mut x = if fhi > flo { lo + (hi - lo) * (u - flo) / (fhi - flo) } else { 0.5 * (lo + hi) };
    for _ in 0..60 {
        let f = regularized_beta(x, alpha, beta) - u;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = pdf(x);
        let step = if d > 0.0 { f / d } else { 0.0 };
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi); // bisect when Newton leaves the bracket
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1e-15) {
            return next;
        }
        x = next;
    }
    x
}

/// A product of mutually independent 1-D laws; the measure of the d-dim
/// random domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMeasure {
    factors: Vec<Distribution>,
}

impl ProductMeasure {
    pub fn new(factors: Vec<Distribution>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameters("product measure requires d >= 1".into()));
        }
        Ok(ProductMeasure { factors })
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Distribution] {
        &self.factors
    }

    /// Joint density: the product of factor densities.
    pub fn density(&self, x: &[f64]) -> f64 {
        self.factors.iter().zip(x).map(|(d, &xi)| d.density(xi)).product()
    }

    /// `count` i.i.d. points, returned row-major (`count * dim` values).
    ///
    /// Point `i`, dimension `j` draws from substream `(seed -> i -> j)`, so
    /// each coordinate is independent of every other draw.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        let root = CounterRng::new(seed);
        let d = self.dim();
        let mut out = Vec::with_capacity(count * d);
        for i in 0..count {
            let point = root.substream(i as u64);
            for (j, dist) in self.factors.iter().enumerate() {
                let mut rng = point.substream(j as u64);
                out.push(dist.sample_one(&mut rng));
            }
        }
        out
    }
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn densities_are_nonnegative_and_vanish_off_support(
            x in -500.0f64..500.0,
            a in -3.0f64..1.0,
            width in 0.5f64..4.0,
            alpha in 0.5f64..8.0,
            beta in 0.5f64..8.0,
        ) {
            let laws = [
                Distribution::uniform(a, a + width).unwrap(),
                Distribution::beta(alpha, beta, a, a + width).unwrap(),
                Distribution::gamma(alpha, beta, a).unwrap(),
                Distribution::normal(a, width).unwrap(),
            ];
            for law in laws {
                let f = law.density(x);
                prop_assert!(f >= 0.0);
                let (lo, hi) = law.support();
                if x < lo || x > hi {
                    prop_assert_eq!(f, 0.0);
                }
            }
        }

        #[test]
        fn beta_quantile_round_trips(
            alpha in 0.5f64..8.0,
            beta in 0.5f64..8.0,
            u in 0.001f64..0.999,
        ) {
            let x = invert_regularized_beta(u, alpha, beta);
            prop_assert!((0.0..=1.0).contains(&x));
            prop_assert!((regularized_beta(x, alpha, beta) - u).abs() < 1e-9);
        }

        #[test]
        fn samples_stay_in_support(seed in 0u64..1000) {
            let m = ProductMeasure::new(vec![
                Distribution::beta(2.0, 5.0, 0.05, 0.25).unwrap(),
                Distribution::uniform(-1.0, 1.0).unwrap(),
                Distribution::gamma(10.0, 0.1, 340.0).unwrap(),
            ])
            .unwrap();
            let pts = m.sample(16, seed);
            for p in pts.chunks(3) {
                prop_assert!((0.05..=0.25).contains(&p[0]));
                prop_assert!((-1.0..=1.0).contains(&p[1]));
                prop_assert!(p[2] >= 340.0);
            }
        }
    }
}
