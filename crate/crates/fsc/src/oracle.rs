//! Reference solutions and error metrics: closed-form moments where the
//! benchmark has an elementary pathwise solution, dense-quadrature pathwise
//! integration otherwise, and seed-deterministic Monte Carlo references with
//! running four-moment statistics.

use crate::error::{Error, Result};
use crate::flowmap::rk4_pointwise;
use crate::problems::{ProblemId, ProblemSpec};
use crate::quadrature::{gauss_grid, NodeSet};
use crate::spectral::MomentSeries;
use rayon::prelude::*;

/// Local and global deviation of a moment series from a reference.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub times: Vec<f64>,
    /// ε[mean](t) = |E_test − E_ref| per record.
    pub local_mean: Vec<f64>,
    /// ε[var](t) per record.
    pub local_variance: Vec<f64>,
    /// ε_G = (Δt/T)·Σ_{i=0..N} ε(t_i); the sum deliberately runs over all
    /// N+1 records, so the prefactor carries an ≈(N+1)/N bias.
    pub global_mean: f64,
    pub global_variance: f64,
    pub reference_label: String,
    /// Set when the reference had to be resampled onto the test grid.
    pub interpolated: bool,
}

impl ErrorReport {
    /// `t,eps_mean,eps_var` rows with 17-significant-digit decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.times.len() * 64 + 16);
        out.push_str("t,eps_mean,eps_var\n");
        for i in 0..self.times.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e}\n",
                self.times[i], self.local_mean[i], self.local_variance[i]
            ));
        }
        out
    }

    pub fn max_local_mean(&self) -> f64 {
        self.local_mean.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_local_variance(&self) -> f64 {
        self.local_variance.iter().cloned().fold(0.0, f64::max)
    }
}

/// Pathwise closed-form response where one exists (the first three linear
/// benchmarks).
pub fn closed_form_response(spec: &ProblemSpec, t: f64, xi: &[f64]) -> Result<f64> {
    match spec.id {
        ProblemId::P1 => {
            // v = mg/k + (v0 − mg/k)·e^{−kt/m}
            let (m, g, v0) = (4.0, 9.81, 50.0);
            let k = xi[0];
            Ok(m * g / k + (v0 - m * g / k) * (-k * t / m).exp())
        }
        ProblemId::P2 => {
            let (m, u0, v0) = (100.0, 0.05, 0.20);
            let omega = (xi[0] / m).sqrt();
            Ok(u0 * (omega * t).cos() + v0 / omega * (omega * t).sin())
        }
        ProblemId::P3 => {
            let (u0, v0) = (0.05, 0.20);
            let omega = (xi[1] / xi[0]).sqrt();
            Ok(u0 * (omega * t).cos() + v0 / omega * (omega * t).sin())
        }
        _ => Err(Error::InvalidParameters(format!(
            "{:?} has no closed-form pathwise solution",
            spec.id
        ))),
    }
}

/// Exact moments of the closed-form response at time `t`, integrated with a
/// dense Gauss rule. The variance is integrated in centered form to avoid
/// the cancellation of E[v²] − E[v]².
pub fn closed_form_moments(spec: &ProblemSpec, t: f64, dense: &NodeSet) -> Result<(f64, f64)> {
    let mut values = Vec::with_capacity(dense.len());
    for q in 0..dense.len() {
        values.push(closed_form_response(spec, t, dense.node(q))?);
    }
    let mut mean = 0.0;
    for (q, v) in values.iter().enumerate() {
        mean += dense.weights()[q] * v;
    }
    let mut var = 0.0;
    for (q, v) in values.iter().enumerate() {
        var += dense.weights()[q] * (v - mean) * (v - mean);
    }
    Ok((mean, var))
}

/// Dense rule for reference integration: `points_per_axis` Gauss points on
/// every random axis (the problem must have d ≤ 3).
pub fn dense_rule(spec: &ProblemSpec, points_per_axis: usize) -> Result<NodeSet> {
    gauss_grid(&spec.measure, &vec![points_per_axis; spec.measure.dim()])
}

/// Closed-form moment series on an explicit time grid.
pub fn closed_form_series(
    spec: &ProblemSpec,
    times: &[f64],
    points_per_axis: usize,
) -> Result<MomentSeries> {
    let dense = dense_rule(spec, points_per_axis)?;
    let mut series = MomentSeries::new(format!("{}_exact", spec.response_label));
    for &t in times {
        let (mean, var) = closed_form_moments(spec, t, &dense)?;
        series.push(t, mean, var);
    }
    Ok(series)
}

/// Same-equation, finer-discretization reference: pathwise Runge-Kutta on a
/// dense Gauss grid with `refine` sub-steps per output step. Serves the
/// benchmarks without an elementary closed form.
pub fn dense_reference(
    spec: &ProblemSpec,
    dt: f64,
    horizon: f64,
    refine: usize,
    points_per_axis: usize,
) -> Result<MomentSeries> {
    let dense = dense_rule(spec, points_per_axis)?;
    let steps = (horizon / dt).round().max(1.0) as usize;
    let n = spec.ode.order();
    let comp = spec.response_component - 1;
    let sub = dt / refine as f64;

    // Shift every value by the first node's trajectory so the variance
    // accumulates on the spread scale, not the mean scale.
    let shift = {
        let xi = dense.node(0).to_vec();
        let mut y: Vec<f64> = (1..=n).map(|k| spec.ode.initial(k, &xi)).collect();
        let mut c = Vec::with_capacity(steps + 1);
        c.push(y[comp]);
        for i in 0..steps {
            for s in 0..refine {
                let t = i as f64 * dt + s as f64 * sub;
                y = rk4_pointwise(spec.ode.as_ref(), t, &xi, &y, sub);
            }
            c.push(y[comp]);
        }
        c
    };

    let mut mean_c = vec![0.0; steps + 1];
    let mut second_c = vec![0.0; steps + 1];
    for q in 0..dense.len() {
        let xi = dense.node(q).to_vec();
        let w = dense.weights()[q];
        let mut y: Vec<f64> = (1..=n).map(|k| spec.ode.initial(k, &xi)).collect();
        mean_c[0] += w * (y[comp] - shift[0]);
        second_c[0] += w * (y[comp] - shift[0]) * (y[comp] - shift[0]);
        for i in 0..steps {
            for s in 0..refine {
                let t = i as f64 * dt + s as f64 * sub;
                y = rk4_pointwise(spec.ode.as_ref(), t, &xi, &y, sub);
            }
            let v = y[comp] - shift[i + 1];
            mean_c[i + 1] += w * v;
            second_c[i + 1] += w * v * v;
        }
    }
    let mut series = MomentSeries::new(format!("{}_dense", spec.response_label));
    for i in 0..=steps {
        let var = (second_c[i] - mean_c[i] * mean_c[i]).max(0.0);
        series.push(i as f64 * dt, shift[i] + mean_c[i], var);
    }
    Ok(series)
}

/// Running first-to-fourth central moments with numerically stable single
/// observation updates and pairwise merging.
#[derive(Debug, Clone, Copy, Default)]
pub struct MomentAccumulator {
    pub count: u64,
    pub mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl MomentAccumulator {
    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2
            - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    /// Combine two disjoint accumulations.
    pub fn merge(&mut self, other: &MomentAccumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d2 = delta * delta;
        let m4 = self.m4
            + other.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n;
        let m3 = self.m3
            + other.m3
            + delta * d2 * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        self.mean += delta * nb / n;
        self.m2 = m2;
        self.m3 = m3;
        self.m4 = m4;
        self.count += other.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count as f64 - 1.0)
        }
    }

    /// Standard error of the sample mean.
    pub fn se_mean(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    /// Standard error of the sample variance via the fourth central moment:
    /// √((m₄ − m₂²)/n).
    pub fn se_variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let m2 = self.m2 / n;
        let m4 = self.m4 / n;
        ((m4 - m2 * m2).max(0.0) / n).sqrt()
    }
}

/// A Monte Carlo reference trajectory with its statistical uncertainty.
#[derive(Debug, Clone)]
pub struct McReference {
    pub moments: MomentSeries,
    pub se_mean: Vec<f64>,
    pub se_variance: Vec<f64>,
    pub realizations: usize,
}

/// Pathwise Runge-Kutta over `realizations` sampled inputs, with running
/// moments per time record. Realizations are presampled from counter-based
/// substreams and accumulated in fixed chunks merged in chunk order, so the
/// result is bit-identical for a fixed seed regardless of thread count.
pub fn mc_reference(
    spec: &ProblemSpec,
    realizations: usize,
    dt: f64,
    horizon: f64,
    seed: u64,
) -> Result<McReference> {
    mc_reference_range(spec, 0, realizations, dt, horizon, seed)
}

/// Monte Carlo reference over the realization index range [start, end) of
/// the sample stream for `seed`. Disjoint ranges give statistically
/// independent references.
pub fn mc_reference_range(
    spec: &ProblemSpec,
    start: usize,
    end: usize,
    dt: f64,
    horizon: f64,
    seed: u64,
) -> Result<McReference> {
    if end <= start {
        return Err(Error::InvalidParameters("mc reference requires realizations >= 1".into()));
    }
    let points = spec.measure.sample(end, seed);
    let d = spec.measure.dim();
    let steps = (horizon / dt).round().max(1.0) as usize;
    let n = spec.ode.order();
    let comp = spec.response_component - 1;

    const CHUNK: usize = 1024;
    let indices: Vec<usize> = (start..end).collect();
    let chunk_results: Vec<Result<Vec<MomentAccumulator>>> = indices
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![MomentAccumulator::default(); steps + 1];
            for &r in chunk {
                let xi = &points[r * d..(r + 1) * d];
                let mut y: Vec<f64> = (1..=n).map(|k| spec.ode.initial(k, xi)).collect();
                acc[0].push(y[comp]);
                for i in 0..steps {
                    y = rk4_pointwise(spec.ode.as_ref(), i as f64 * dt, xi, &y, dt);
                    if !y[comp].is_finite() {
                        return Err(Error::NumericalFailure(format!(
                            "realization {r} diverged at t = {}: xi = {xi:?}",
                            (i + 1) as f64 * dt
                        )));
                    }
                    acc[i + 1].push(y[comp]);
                }
            }
            Ok(acc)
        })
        .collect();

    let mut total = vec![MomentAccumulator::default(); steps + 1];
    for chunk in chunk_results {
        let chunk = chunk?;
        for (t, a) in total.iter_mut().zip(&chunk) {
            t.merge(a);
        }
    }

    let mut moments = MomentSeries::new(format!("{}_mc", spec.response_label));
    let mut se_mean = Vec::with_capacity(steps + 1);
    let mut se_variance = Vec::with_capacity(steps + 1);
    for (i, a) in total.iter().enumerate() {
        moments.push(i as f64 * dt, a.mean, a.variance());
        se_mean.push(a.se_mean());
        se_variance.push(a.se_variance());
    }
    Ok(McReference { moments, se_mean, se_variance, realizations: end - start })
}

/// Local and global errors of `test` against `reference` per the benchmark
/// metric: ε(t) = |f(t) − f_ref(t)| and ε_G = (Δt/T)·Σ_{i=0..N} ε(t_i).
/// References on a finer grid with the same horizon are linearly resampled
/// (and the report flags it); different horizons are an error.
pub fn error_metrics(test: &MomentSeries, reference: &MomentSeries) -> Result<ErrorReport> {
    error_metrics_labeled(test, reference, reference.label.clone())
}

pub fn error_metrics_labeled(
    test: &MomentSeries,
    reference: &MomentSeries,
    reference_label: String,
) -> Result<ErrorReport> {
    if test.is_empty() || reference.is_empty() {
        return Err(Error::GridMismatch("empty moment series".into()));
    }
    let t_end = *test.times.last().unwrap();
    let r_end = *reference.times.last().unwrap();
    if (t_end - r_end).abs() > 1e-9 * t_end.abs().max(1.0) {
        return Err(Error::GridMismatch(format!(
            "horizons differ: {t_end} vs {r_end}"
        )));
    }

    let aligned = test.len() == reference.len()
        && test
            .times
            .iter()
            .zip(&reference.times)
            .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1e-9));

    let (ref_mean, ref_var, interpolated) = if aligned {
        (reference.mean.clone(), reference.variance.clone(), false)
    } else {
        let mut mean = Vec::with_capacity(test.len());
        let mut var = Vec::with_capacity(test.len());
        for &t in &test.times {
            mean.push(interpolate(&reference.times, &reference.mean, t));
            var.push(interpolate(&reference.times, &reference.variance, t));
        }
        (mean, var, true)
    };

    let local_mean: Vec<f64> =
        test.mean.iter().zip(&ref_mean).map(|(a, b)| (a - b).abs()).collect();
    let local_variance: Vec<f64> =
        test.variance.iter().zip(&ref_var).map(|(a, b)| (a - b).abs()).collect();
    let dt = if test.len() > 1 { test.times[1] - test.times[0] } else { t_end.max(1.0) };
    let horizon = if t_end > 0.0 { t_end } else { 1.0 };
    let global_mean = local_mean.iter().sum::<f64>() * dt / horizon;
    let global_variance = local_variance.iter().sum::<f64>() * dt / horizon;

    Ok(ErrorReport {
        times: test.times.clone(),
        local_mean,
        local_variance,
        global_mean,
        global_variance,
        reference_label,
        interpolated,
    })
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
        Ok(i) => values[i],
        Err(i) => {
            if i == 0 {
                values[0]
            } else if i >= times.len() {
                *values.last().unwrap()
            } else {
                let (t0, t1) = (times[i - 1], times[i]);
                let w = (t - t0) / (t1 - t0);
                values[i - 1] * (1.0 - w) + values[i] * w
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_problem, ProblemId};
    use crate::rng::CounterRng;

    #[test]
    fn p1_closed_form_limits() {
        let spec = make_problem(ProblemId::P1, "uniform").unwrap();
        let dense = dense_rule(&spec, 400).unwrap();
        let (mean0, var0) = closed_form_moments(&spec, 0.0, &dense).unwrap();
        assert!((mean0 - 50.0).abs() < 1e-12);
        assert!(var0 < 1e-12);
        // As t → ∞ the velocity tends to mg/k, so the mean tends to
        // mg·E[1/k] = 39.24·ln 2 for k ~ Uniform[1, 2].
        let (mean_inf, _) = closed_form_moments(&spec, 150.0, &dense).unwrap();
        let expect = 4.0 * 9.81 * std::f64::consts::LN_2;
        assert!((mean_inf - expect).abs() < 1e-6, "{mean_inf} vs {expect}");
    }

    #[test]
    fn dense_rule_refinement_is_converged() {
        let spec = make_problem(ProblemId::P2, "uniform").unwrap();
        let d400 = dense_rule(&spec, 400).unwrap();
        let d800 = dense_rule(&spec, 800).unwrap();
        let (m1, v1) = closed_form_moments(&spec, 1.0, &d400).unwrap();
        let (m2, v2) = closed_form_moments(&spec, 1.0, &d800).unwrap();
        assert!((m1 - m2).abs() < 1e-12);
        assert!((v1 - v2).abs() < 1e-12);
    }

    #[test]
    fn accumulator_matches_two_pass_statistics() {
        let mut rng = CounterRng::new(10);
        let xs: Vec<f64> = (0..5000).map(|_| rng.next_f64() * 3.0 - 1.0).collect();
        let mut acc = MomentAccumulator::default();
        for &x in &xs {
            acc.push(x);
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        assert!((acc.mean - mean).abs() < 1e-12);
        assert!((acc.variance() - var).abs() < 1e-12);
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let se_var = ((m4 - m2 * m2) / n).sqrt();
        assert!((acc.se_variance() - se_var).abs() < 1e-12 * se_var.max(1e-12));

        // merging two halves reproduces the single pass bit-for-bit closely
        let mut a = MomentAccumulator::default();
        let mut b = MomentAccumulator::default();
        for &x in &xs[..2500] {
            a.push(x);
        }
        for &x in &xs[2500..] {
            b.push(x);
        }
        a.merge(&b);
        assert!((a.mean - acc.mean).abs() < 1e-13);
        assert!((a.variance() - acc.variance()).abs() < 1e-13);
    }

    #[test]
    fn mc_reference_is_deterministic_and_matches_closed_form() {
        let spec = make_problem(ProblemId::P2, "uniform").unwrap();
        let a = mc_reference(&spec, 20_000, 0.01, 1.0, 42).unwrap();
        let b = mc_reference(&spec, 20_000, 0.01, 1.0, 42).unwrap();
        assert_eq!(a.moments.mean, b.moments.mean);
        assert_eq!(a.moments.variance, b.moments.variance);

        let dense = dense_rule(&spec, 400).unwrap();
        let (exact_mean, exact_var) = closed_form_moments(&spec, 1.0, &dense).unwrap();
        let i = a.moments.len() - 1;
        assert!(
            (a.moments.mean[i] - exact_mean).abs() <= 4.0 * a.se_mean[i],
            "mc mean {} vs exact {exact_mean} (se {})",
            a.moments.mean[i],
            a.se_mean[i]
        );
        assert!((a.moments.variance[i] - exact_var).abs() <= 5.0 * a.se_variance[i]);
    }

    #[test]
    fn disjoint_seed_halves_agree() {
        let spec = make_problem(ProblemId::P2, "uniform").unwrap();
        let a = mc_reference_range(&spec, 0, 10_000, 0.01, 1.0, 9).unwrap();
        let b = mc_reference_range(&spec, 10_000, 20_000, 0.01, 1.0, 9).unwrap();
        for i in [0usize, 50, 100] {
            let se = (a.se_mean[i].powi(2) + b.se_mean[i].powi(2)).sqrt();
            let diff = (a.moments.mean[i] - b.moments.mean[i]).abs();
            assert!(diff <= 5.0 * se.max(1e-15), "t index {i}: diff {diff} vs 5se {se}");
        }
    }

    #[test]
    fn doubling_realizations_shrinks_the_standard_error() {
        let spec = make_problem(ProblemId::P2, "uniform").unwrap();
        let small = mc_reference(&spec, 10_000, 0.01, 0.5, 7).unwrap();
        let large = mc_reference(&spec, 20_000, 0.01, 0.5, 7).unwrap();
        let i = small.moments.len() - 1;
        let ratio = large.se_mean[i] / small.se_mean[i];
        let expect = 1.0 / 2.0f64.sqrt();
        assert!((ratio - expect).abs() <= 0.2 * expect, "ratio {ratio}");
    }

    #[test]
    fn deterministic_problem_has_no_mc_variance() {
        // A problem whose dynamics ignore the random variable.
        struct Fixed;
        impl crate::flowmap::OdeSystem for Fixed {
            fn order(&self) -> usize {
                1
            }
            fn random_dim(&self) -> usize {
                1
            }
            fn rhs(&self, _t: f64, _xi: &[f64], s: &[f64]) -> f64 {
                -s[0]
            }
            fn initial(&self, _k: usize, _xi: &[f64]) -> f64 {
                1.0
            }
        }
        let mut spec = make_problem(ProblemId::P1, "uniform").unwrap();
        spec.ode = std::sync::Arc::new(Fixed);
        spec.response_component = 1;
        let r = mc_reference(&spec, 500, 0.01, 0.5, 1).unwrap();
        assert!(r.moments.variance.iter().all(|&v| v <= 1e-12));
    }

    #[test]
    fn error_metric_formula() {
        let mut a = MomentSeries::new("a");
        let mut b = MomentSeries::new("b");
        let n = 100usize;
        let dt = 0.01;
        for i in 0..=n {
            let t = i as f64 * dt;
            a.push(t, 1.0, 0.5);
            b.push(t, 1.0, 0.5);
        }
        let zero = error_metrics(&a, &b).unwrap();
        assert_eq!(zero.global_mean, 0.0);
        assert_eq!(zero.global_variance, 0.0);

        // constant offset δ in the mean: ε_G = δ·(N+1)·Δt/T
        let delta = 0.125;
        let mut c = MomentSeries::new("c");
        for i in 0..=n {
            c.push(i as f64 * dt, 1.0 + delta, 0.5);
        }
        let report = error_metrics(&c, &b).unwrap();
        let expect = delta * (n as f64 + 1.0) * dt / (n as f64 * dt);
        assert!((report.global_mean - expect).abs() < 1e-14, "{}", report.global_mean);

        // the global scalar reproduces from the stored local series
        let recomputed: f64 =
            report.local_mean.iter().sum::<f64>() * dt / *report.times.last().unwrap();
        assert!((recomputed - report.global_mean).abs() <= 1e-15 * report.global_mean);

        // horizon mismatch is an error
        let mut short = MomentSeries::new("short");
        for i in 0..=50 {
            short.push(i as f64 * dt, 1.0, 0.5);
        }
        assert!(matches!(error_metrics(&short, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn reference_interpolation_is_flagged() {
        let mut coarse = MomentSeries::new("test");
        let mut fine = MomentSeries::new("ref");
        for i in 0..=10 {
            coarse.push(i as f64 * 0.1, (i as f64 * 0.1).sin(), 0.0);
        }
        for i in 0..=100 {
            fine.push(i as f64 * 0.01, (i as f64 * 0.01).sin(), 0.0);
        }
        let report = error_metrics(&coarse, &fine).unwrap();
        assert!(report.interpolated);
        assert!(report.global_mean < 1e-12);
    }
}
