//! Batch driver behind the `fsc` binary: execute one configured simulation
//! against its reference, write CSV/JSON/SVG artifacts, and run parameter
//! sweeps.
//!
//! Everything written by [`run`] and the `sweep.csv` table is a deterministic
//! function of the configuration and seed; wall-clock timings go to a
//! separate `sweep_timing.csv` precisely because they are not.

use crate::config::{OracleSpec, RunConfig};
use crate::error::{Error, Result};
use crate::fsc::{run_fsc, RunDiagnostics, TransferKind};
use crate::oracle::{
    closed_form_series, dense_reference, error_metrics_labeled, mc_reference, ErrorReport,
};
use crate::plot::{line_plot, Series};
use crate::problems::{ProblemSpec, QuadratureSpec};
use crate::spectral::MomentSeries;
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// In-memory results of one simulation plus the list of files written.
pub struct RunArtifacts {
    pub moments: MomentSeries,
    pub report: Option<ErrorReport>,
    pub diagnostics: RunDiagnostics,
    pub files: Vec<PathBuf>,
}

/// Validate a configuration end to end without computing anything.
pub fn dry_run(config: &RunConfig) -> Result<()> {
    let spec = config.build_problem()?;
    config.fsc.validate(spec.ode.order())?;
    validate_quadrature(config, &spec)?;
    Ok(())
}

fn validate_quadrature(config: &RunConfig, spec: &ProblemSpec) -> Result<()> {
    if let QuadratureSpec::Gauss { points_per_dim } = &config.quadrature {
        if points_per_dim.len() != spec.measure.dim() {
            return Err(Error::Config(format!(
                "quadrature lists {} per-axis counts for a {}-dimensional measure",
                points_per_dim.len(),
                spec.measure.dim()
            )));
        }
    }
    Ok(())
}

/// Execute one simulation with its reference comparison, in memory.
pub fn execute(config: &RunConfig) -> Result<(MomentSeries, Option<ErrorReport>, RunDiagnostics)> {
    let spec = config.build_problem()?;
    config.fsc.validate(spec.ode.order())?;
    validate_quadrature(config, &spec)?;
    let nodes = config.quadrature.build(&spec.measure)?;
    let run = run_fsc(spec.ode.as_ref(), &config.fsc, &spec.measure, &nodes)?;
    let mut moments = run.moments[spec.response_component - 1].clone();
    moments.label = spec.response_label.clone();

    let report = match &config.oracle {
        OracleSpec::None => None,
        OracleSpec::ClosedForm { dense_points } => {
            let reference = closed_form_series(&spec, &moments.times, *dense_points)?;
            Some(error_metrics_labeled(&moments, &reference, "closed_form".into())?)
        }
        OracleSpec::DenseQuadrature { dense_points, refine } => {
            let reference =
                dense_reference(&spec, config.fsc.dt, config.fsc.horizon, *refine, *dense_points)?;
            Some(error_metrics_labeled(&moments, &reference, "dense_quadrature".into())?)
        }
        OracleSpec::MonteCarlo { realizations } => {
            let reference =
                mc_reference(&spec, *realizations, config.fsc.dt, config.fsc.horizon, config.seed)?;
            Some(error_metrics_labeled(
                &moments,
                &reference.moments,
                format!("mc({realizations})"),
            )?)
        }
    };
    Ok((moments, report, run.diagnostics))
}

/// Run one simulation and write `moments.csv`, `errors.csv`, `summary.json`
/// and the optional SVG plots into the configured output directory.
pub fn run(config: &RunConfig) -> Result<RunArtifacts> {
    let (moments, report, diagnostics) = execute(config)?;
    std::fs::create_dir_all(&config.out_dir)?;
    let mut files = Vec::new();

    let moments_path = config.out_dir.join("moments.csv");
    std::fs::write(&moments_path, moments.to_csv())?;
    files.push(moments_path);

    if let Some(report) = &report {
        let errors_path = config.out_dir.join("errors.csv");
        std::fs::write(&errors_path, report.to_csv())?;
        files.push(errors_path);
    }

    let summary_path = config.out_dir.join("summary.json");
    std::fs::write(&summary_path, summary_json(config, &moments, report.as_ref(), &diagnostics))?;
    files.push(summary_path);

    if config.plots {
        let mean_path = config.out_dir.join("mean.svg");
        std::fs::write(
            &mean_path,
            line_plot(
                &format!("E[{}]", moments.label),
                "t [s]",
                "mean",
                &[Series { label: &moments.label, x: &moments.times, y: &moments.mean }],
                false,
            ),
        )?;
        files.push(mean_path);
        let var_path = config.out_dir.join("variance.svg");
        std::fs::write(
            &var_path,
            line_plot(
                &format!("Var[{}]", moments.label),
                "t [s]",
                "variance",
                &[Series { label: &moments.label, x: &moments.times, y: &moments.variance }],
                false,
            ),
        )?;
        files.push(var_path);
        if let Some(report) = &report {
            let err_path = config.out_dir.join("error.svg");
            std::fs::write(
                &err_path,
                line_plot(
                    &format!("local error vs {}", report.reference_label),
                    "t [s]",
                    "error",
                    &[
                        Series { label: "mean", x: &report.times, y: &report.local_mean },
                        Series { label: "variance", x: &report.times, y: &report.local_variance },
                    ],
                    true,
                ),
            )?;
            files.push(err_path);
        }
    }

    Ok(RunArtifacts { moments, report, diagnostics, files })
}

fn summary_json(
    config: &RunConfig,
    moments: &MomentSeries,
    report: Option<&ErrorReport>,
    diag: &RunDiagnostics,
) -> String {
    let mut out = String::from("{\n");
    out.push_str(&format!("  \"problem\": \"{:?}\",\n", config.problem));
    out.push_str(&format!("  \"variant\": \"{}\",\n", config.variant));
    out.push_str(&format!("  \"response\": \"{}\",\n", moments.label));
    out.push_str(&format!(
        "  \"transfer\": \"{}\",\n",
        match config.fsc.transfer {
            TransferKind::Fsc1 => "fsc1",
            TransferKind::Fsc2 => "fsc2",
        }
    ));
    out.push_str(&format!("  \"p\": {},\n", config.fsc.basis_index));
    out.push_str(&format!("  \"dt\": {:.16e},\n", config.fsc.dt));
    out.push_str(&format!("  \"horizon\": {:.16e},\n", config.fsc.horizon));
    out.push_str(&format!("  \"seed\": {},\n", config.seed));
    out.push_str(&format!("  \"records\": {},\n", moments.len()));
    out.push_str(&format!("  \"basis_resets\": {},\n", diag.resets));
    out.push_str(&format!("  \"basis_size_min\": {},\n", diag.min_basis_size));
    out.push_str(&format!("  \"basis_size_max\": {},\n", diag.max_basis_size));
    match report {
        Some(r) => {
            out.push_str(&format!("  \"reference\": \"{}\",\n", r.reference_label));
            out.push_str(&format!("  \"interpolated\": {},\n", r.interpolated));
            out.push_str(&format!("  \"global_mean\": {:.16e},\n", r.global_mean));
            out.push_str(&format!("  \"global_var\": {:.16e}\n", r.global_variance));
        }
        None => {
            out.push_str("  \"reference\": \"none\"\n");
        }
    }
    out.push_str("}\n");
    out
}

/// Sweep axis: the basis size index, the time step, or the per-axis
/// quadrature point count (Monte Carlo sample count for MC rules).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    BasisIndex,
    Dt,
    QuadPoints,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p" => Ok(SweepAxis::BasisIndex),
            "dt" => Ok(SweepAxis::Dt),
            "q" => Ok(SweepAxis::QuadPoints),
            other => Err(Error::Config(format!("sweep axis must be p, dt or q, got '{other}'"))),
        }
    }

    fn label(&self) -> &'static str {
        match self {
            SweepAxis::BasisIndex => "p",
            SweepAxis::Dt => "dt",
            SweepAxis::QuadPoints => "q",
        }
    }
}

/// One sweep row; errors are NaN when the point failed.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub global_mean: f64,
    pub global_variance: f64,
    pub seconds: f64,
    pub failure: Option<String>,
}

pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub files: Vec<PathBuf>,
}

fn apply_axis(config: &RunConfig, axis: SweepAxis, value: f64) -> Result<RunConfig> {
    let mut point = config.clone();
    match axis {
        SweepAxis::BasisIndex => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(Error::Config(format!("p values must be positive integers: {value}")));
            }
            point.fsc.basis_index = value as usize;
        }
        SweepAxis::Dt => {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("dt values must be positive: {value}")));
            }
            point.fsc.dt = value;
        }
        SweepAxis::QuadPoints => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(Error::Config(format!("q values must be positive integers: {value}")));
            }
            let v = value as usize;
            point.quadrature = match &config.quadrature {
                QuadratureSpec::Gauss { points_per_dim } => {
                    QuadratureSpec::Gauss { points_per_dim: vec![v; points_per_dim.len()] }
                }
                QuadratureSpec::MonteCarlo { seed, .. } => {
                    QuadratureSpec::MonteCarlo { q: v, seed: *seed }
                }
            };
        }
    }
    Ok(point)
}

/// Run the configuration once per axis value, in parallel, and write the
/// convergence table plus a semilog plot. Failed points record NaN errors
/// and the sweep continues.
pub fn sweep(config: &RunConfig, axis: SweepAxis, values: &[f64]) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::Config("sweep requires at least one value".into()));
    }
    let rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&value| {
            let start = Instant::now();
            let outcome = apply_axis(config, axis, value).and_then(|point| execute(&point));
            let seconds = start.elapsed().as_secs_f64();
            match outcome {
                Ok((_, Some(report), _)) => SweepRow {
                    value,
                    global_mean: report.global_mean,
                    global_variance: report.global_variance,
                    seconds,
                    failure: None,
                },
                Ok((_, None, _)) => SweepRow {
                    value,
                    global_mean: f64::NAN,
                    global_variance: f64::NAN,
                    seconds,
                    failure: Some("no reference configured".into()),
                },
                Err(e) => SweepRow {
                    value,
                    global_mean: f64::NAN,
                    global_variance: f64::NAN,
                    seconds,
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect();

    std::fs::create_dir_all(&config.out_dir)?;
    let mut files = Vec::new();

    let mut csv = format!("{},eps_mean,eps_var\n", axis.label());
    for row in &rows {
        csv.push_str(&format!(
            "{:.16e},{:.16e},{:.16e}\n",
            row.value, row.global_mean, row.global_variance
        ));
    }
    let table_path = config.out_dir.join("sweep.csv");
    std::fs::write(&table_path, csv)?;
    files.push(table_path);

    // Wall-clock timings are inherently non-deterministic and therefore live
    // in their own file.
    let mut timing = format!("{},seconds,status\n", axis.label());
    for row in &rows {
        timing.push_str(&format!(
            "{:.16e},{:.6},{}\n",
            row.value,
            row.seconds,
            row.failure.as_deref().unwrap_or("ok")
        ));
    }
    let timing_path = config.out_dir.join("sweep_timing.csv");
    std::fs::write(&timing_path, timing)?;
    files.push(timing_path);

    let xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let mean_errs: Vec<f64> = rows.iter().map(|r| r.global_mean).collect();
    let var_errs: Vec<f64> = rows.iter().map(|r| r.global_variance).collect();
    let plot_path = config.out_dir.join("sweep.svg");
    std::fs::write(
        &plot_path,
        line_plot(
            &format!("global error vs {}", axis.label()),
            axis.label(),
            "global error",
            &[
                Series { label: "mean", x: &xs, y: &mean_errs },
                Series { label: "variance", x: &xs, y: &var_errs },
            ],
            true,
        ),
    )?;
    files.push(plot_path);

    Ok(SweepTable { axis, rows, files })
}

/// Load a configuration file from disk.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    crate::config::parse(&text)
}
