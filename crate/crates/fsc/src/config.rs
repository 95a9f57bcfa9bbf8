//! Plain-text run configuration: `[section]` headers over `key = value`
//! lines, `#` comments, no expression language. Structured values use a
//! small functional syntax: `gauss(points_per_dim=[100,80])`,
//! `mc(q=100000, seed=3)`, `uniform(a=1,b=2)`,
//! `beta(alpha=2,beta=5,a=0.05,b=0.25)`.
//!
//! Every key is optional; omitted keys take the selected problem's
//! documented defaults, and the fully resolved configuration can be dumped
//! with `--print-config`.

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::fsc::{FscConfig, Orthogonalizer, TransferKind};
use crate::problems::{default_variant, make_problem, ProblemId, ProblemSpec, QuadratureSpec};
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Which reference the driver compares the run against.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleSpec {
    /// Closed-form pathwise solution integrated on a dense Gauss rule.
    ClosedForm { dense_points: usize },
    /// Same equation on a dense grid at a finer time step.
    DenseQuadrature { dense_points: usize, refine: usize },
    /// Pathwise Monte Carlo reference.
    MonteCarlo { realizations: usize },
    /// No reference: `errors.csv` is skipped.
    None,
}

/// A fully resolved run: problem, scheme parameters, node generation, oracle
/// and output options.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemId,
    pub variant: String,
    /// Optional per-axis distribution overrides (1-based axis in the key).
    pub distribution_overrides: Vec<(usize, Distribution)>,
    pub fsc: FscConfig,
    pub quadrature: QuadratureSpec,
    pub oracle: OracleSpec,
    pub out_dir: PathBuf,
    pub plots: bool,
    pub seed: u64,
}

impl RunConfig {
    /// Defaults for a problem, before any file keys are applied.
    pub fn defaults(problem: ProblemId, variant: &str) -> Result<RunConfig> {
        let spec = make_problem(problem, variant)?;
        let oracle = default_oracle(&spec);
        Ok(RunConfig {
            problem,
            variant: spec.variant.clone(),
            distribution_overrides: Vec::new(),
            fsc: spec.defaults.clone(),
            quadrature: spec.default_quadrature.clone(),
            oracle,
            out_dir: PathBuf::from("out"),
            plots: true,
            seed: 0,
        })
    }

    /// Instantiate the problem with any distribution overrides applied.
    pub fn build_problem(&self) -> Result<ProblemSpec> {
        let mut spec = make_problem(self.problem, &self.variant)?;
        if !self.distribution_overrides.is_empty() {
            let mut factors = spec.measure.factors().to_vec();
            for (axis, dist) in &self.distribution_overrides {
                if *axis == 0 || *axis > factors.len() {
                    return Err(Error::Config(format!(
                        "distribution override axis {axis} outside 1..={}",
                        factors.len()
                    )));
                }
                factors[axis - 1] = *dist;
            }
            spec.measure = crate::distribution::ProductMeasure::new(factors)?;
        }
        Ok(spec)
    }

    /// Raise the horizon to 150 s and Monte Carlo references to a million
    /// realizations.
    pub fn apply_full_scale(&mut self) {
        self.fsc.horizon = 150.0;
        if let OracleSpec::MonteCarlo { realizations } = &mut self.oracle {
            *realizations = 1_000_000;
        }
    }

    /// Serialize the resolved configuration in the file format.
    pub fn print(&self) -> String {
        let mut out = String::new();
        out.push_str("[problem]\n");
        let (name, d) = match self.problem {
            ProblemId::P1 => ("p1", None),
            ProblemId::P2 => ("p2", None),
            ProblemId::P3 => ("p3", None),
            ProblemId::P4 => ("p4", None),
            ProblemId::P5 => ("p5", None),
            ProblemId::P6 => ("p6", None),
            ProblemId::HighDim(d) => ("highdim", Some(d)),
        };
        out.push_str(&format!("problem = {name}\n"));
        if let Some(d) = d {
            out.push_str(&format!("d = {d}\n"));
        }
        out.push_str(&format!("variant = {}\n", self.variant));
        for (axis, dist) in &self.distribution_overrides {
            out.push_str(&format!("distribution_{axis} = {}\n", format_distribution(dist)));
        }
        out.push_str("\n[fsc]\n");
        out.push_str(&format!("p = {}\n", self.fsc.basis_index));
        out.push_str(&format!("flow_order = {}\n", self.fsc.flow_order));
        out.push_str(&format!(
            "transfer = {}\n",
            match self.fsc.transfer {
                TransferKind::Fsc1 => "fsc1",
                TransferKind::Fsc2 => "fsc2",
            }
        ));
        out.push_str(&format!(
            "orthogonalizer = {}\n",
            match self.fsc.orthogonalizer {
                Orthogonalizer::GramSchmidt => "gram_schmidt",
                Orthogonalizer::ClosedForm => "closed_form",
            }
        ));
        out.push_str(&format!("dt = {}\n", self.fsc.dt));
        out.push_str(&format!("horizon = {}\n", self.fsc.horizon));
        out.push_str(&format!("bootstrap_size = {}\n", self.fsc.bootstrap.size));
        out.push_str(&format!("bootstrap_duration = {}\n", self.fsc.bootstrap.duration));
        out.push_str(&format!("midpoint_basis = {}\n", self.fsc.midpoint_basis));
        out.push_str("\n[quadrature]\n");
        out.push_str(&format!("quadrature = {}\n", format_quadrature(&self.quadrature)));
        out.push_str("\n[oracle]\n");
        out.push_str(&format!(
            "reference = {}\n",
            match &self.oracle {
                OracleSpec::ClosedForm { .. } => "closed_form".to_string(),
                OracleSpec::DenseQuadrature { .. } => "dense_quadrature".to_string(),
                OracleSpec::MonteCarlo { realizations } => format!("mc(realizations={realizations})"),
                OracleSpec::None => "none".to_string(),
            }
        ));
        match &self.oracle {
            OracleSpec::ClosedForm { dense_points }
            | OracleSpec::DenseQuadrature { dense_points, .. } => {
                out.push_str(&format!("dense_points = {dense_points}\n"));
            }
            _ => {}
        }
        if let OracleSpec::DenseQuadrature { refine, .. } = &self.oracle {
            out.push_str(&format!("refine = {refine}\n"));
        }
        out.push_str("\n[output]\n");
        out.push_str(&format!("dir = {}\n", self.out_dir.display()));
        out.push_str(&format!("plots = {}\n", self.plots));
        out.push_str(&format!("seed = {}\n", self.seed));
        out
    }
}

fn default_oracle(spec: &ProblemSpec) -> OracleSpec {
    match spec.reference {
        crate::problems::ReferenceKind::ClosedForm => OracleSpec::ClosedForm { dense_points: 400 },
        crate::problems::ReferenceKind::DenseQuadrature => {
            OracleSpec::DenseQuadrature { dense_points: 400, refine: 10 }
        }
        crate::problems::ReferenceKind::MonteCarlo => {
            OracleSpec::MonteCarlo { realizations: 100_000 }
        }
    }
}

fn format_distribution(d: &Distribution) -> String {
    match d {
        Distribution::Uniform { a, b } => format!("uniform(a={a},b={b})"),
        Distribution::Beta { alpha, beta, a, b } => {
            format!("beta(alpha={alpha},beta={beta},a={a},b={b})")
        }
        Distribution::Gamma { alpha, beta, a } => format!("gamma(alpha={alpha},beta={beta},a={a})"),
        Distribution::Normal { mu, sigma } => format!("normal(mu={mu},sigma={sigma})"),
    }
}

fn format_quadrature(q: &QuadratureSpec) -> String {
    match q {
        QuadratureSpec::Gauss { points_per_dim } => {
            let list: Vec<String> = points_per_dim.iter().map(|p| p.to_string()).collect();
            format!("gauss(points_per_dim=[{}])", list.join(","))
        }
        QuadratureSpec::MonteCarlo { q, seed } => format!("mc(q={q}, seed={seed})"),
    }
}

/// Parse a config file's text into a resolved run configuration.
pub fn parse(text: &str) -> Result<RunConfig> {
    let sections = split_sections(text)?;
    let problem_section = sections
        .get("problem")
        .ok_or_else(|| Error::Config("missing [problem] section".into()))?;
    let name = problem_section
        .get("problem")
        .ok_or_else(|| Error::Config("missing 'problem' key".into()))?;
    let d = match problem_section.get("d") {
        Some(v) => Some(parse_usize("d", v)?),
        None => None,
    };
    let id = ProblemId::parse(name, d)?;
    let variant = problem_section
        .get("variant")
        .map(String::as_str)
        .unwrap_or_else(|| default_variant(id));

    let mut cfg = RunConfig::defaults(id, variant)?;

    for (key, value) in problem_section {
        if let Some(axis) = key.strip_prefix("distribution_") {
            let axis = parse_usize(key, axis)?;
            cfg.distribution_overrides.push((axis, parse_distribution(value)?));
        } else if key == "distribution" {
            cfg.distribution_overrides.push((1, parse_distribution(value)?));
        } else if !matches!(key.as_str(), "problem" | "variant" | "d") {
            return Err(Error::Config(format!("unknown key '{key}' in [problem]")));
        }
    }

    if let Some(section) = sections.get("fsc") {
        for (key, value) in section {
            match key.as_str() {
                "p" => cfg.fsc.basis_index = parse_usize(key, value)?,
                "flow_order" | "m" => cfg.fsc.flow_order = parse_usize(key, value)?,
                "transfer" => {
                    cfg.fsc.transfer = match value.as_str() {
                        "fsc1" => TransferKind::Fsc1,
                        "fsc2" => TransferKind::Fsc2,
                        other => {
                            return Err(Error::Config(format!(
                                "transfer must be fsc1 or fsc2, got '{other}'"
                            )))
                        }
                    }
                }
                "orthogonalizer" => {
                    cfg.fsc.orthogonalizer = match value.as_str() {
                        "gram_schmidt" | "gs" => Orthogonalizer::GramSchmidt,
                        "closed_form" | "theorem1" => Orthogonalizer::ClosedForm,
                        other => {
                            return Err(Error::Config(format!(
                                "orthogonalizer must be gram_schmidt or closed_form, got '{other}'"
                            )))
                        }
                    }
                }
                "dt" => cfg.fsc.dt = parse_f64(key, value)?,
                "horizon" => cfg.fsc.horizon = parse_f64(key, value)?,
                "bootstrap_size" => cfg.fsc.bootstrap.size = parse_usize(key, value)?,
                "bootstrap_duration" => cfg.fsc.bootstrap.duration = parse_f64(key, value)?,
                "midpoint_basis" => cfg.fsc.midpoint_basis = parse_bool(key, value)?,
                other => return Err(Error::Config(format!("unknown key '{other}' in [fsc]"))),
            }
        }
    }

    if let Some(section) = sections.get("quadrature") {
        for (key, value) in section {
            match key.as_str() {
                "quadrature" => cfg.quadrature = parse_quadrature(value)?,
                other => {
                    return Err(Error::Config(format!("unknown key '{other}' in [quadrature]")))
                }
            }
        }
    }

    if let Some(section) = sections.get("oracle") {
        let mut dense_points = 400usize;
        let mut refine = 10usize;
        let mut reference: Option<String> = None;
        for (key, value) in section {
            match key.as_str() {
                "reference" => reference = Some(value.clone()),
                "dense_points" => dense_points = parse_usize(key, value)?,
                "refine" => refine = parse_usize(key, value)?,
                other => return Err(Error::Config(format!("unknown key '{other}' in [oracle]"))),
            }
        }
        if let Some(reference) = reference {
            cfg.oracle = parse_oracle(&reference, dense_points, refine)?;
        } else {
            match &mut cfg.oracle {
                OracleSpec::ClosedForm { dense_points: dp } => *dp = dense_points,
                OracleSpec::DenseQuadrature { dense_points: dp, refine: r } => {
                    *dp = dense_points;
                    *r = refine;
                }
                _ => {}
            }
        }
    }

    if let Some(section) = sections.get("output") {
        for (key, value) in section {
            match key.as_str() {
                "dir" => cfg.out_dir = PathBuf::from(value),
                "plots" => cfg.plots = parse_bool(key, value)?,
                "seed" => cfg.seed = parse_u64(key, value)?,
                other => return Err(Error::Config(format!("unknown key '{other}' in [output]"))),
            }
        }
    }

    for name in sections.keys() {
        if !matches!(name.as_str(), "problem" | "fsc" | "quadrature" | "oracle" | "output") {
            return Err(Error::Config(format!("unknown section [{name}]")));
        }
    }
    Ok(cfg)
}

type Sections = BTreeMap<String, BTreeMap<String, String>>;

fn split_sections(text: &str) -> Result<Sections> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::Config(format!("line {}: unclosed section", lineno + 1)))?
                .trim()
                .to_string();
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected 'key = value', got '{line}'", lineno + 1))
        })?;
        let section = current
            .as_ref()
            .ok_or_else(|| Error::Config(format!("line {}: key before any [section]", lineno + 1)))?;
        sections
            .get_mut(section)
            .unwrap()
            .insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(sections)
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("'{key}' expects a number, got '{value}'")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("'{key}' expects a non-negative integer, got '{value}'")))
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("'{key}' expects a non-negative integer, got '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        other => Err(Error::Config(format!("'{key}' expects true/false, got '{other}'"))),
    }
}

/// Parse `name(key=value, ...)`; returns the name and the argument map.
fn parse_call(text: &str) -> Result<(String, BTreeMap<String, String>)> {
    let text = text.trim();
    let open = match text.find('(') {
        Some(i) => i,
        None => return Ok((text.to_string(), BTreeMap::new())),
    };
    let name = text[..open].trim().to_string();
    let inner = text[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| Error::Config(format!("unclosed '(' in '{text}'")))?;
    let mut args = BTreeMap::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    let bytes = inner.as_bytes();
    let mut push_arg = |piece: &str| -> Result<()> {
        let piece = piece.trim();
        if piece.is_empty() {
            return Ok(());
        }
        let (k, v) = piece
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value in '{piece}'")))?;
        args.insert(k.trim().to_string(), v.trim().to_string());
        Ok(())
    };
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'[' | b'(' => depth += 1,
            b']' | b')' => depth = depth.saturating_sub(1),
            b',' if depth == 0 => {
                push_arg(&inner[start..i])?;
                start = i + 1;
            }
            _ => {}
        }
    }
    push_arg(&inner[start..])?;
    Ok((name, args))
}

fn require<'a>(args: &'a BTreeMap<String, String>, key: &str, ctx: &str) -> Result<&'a String> {
    args.get(key)
        .ok_or_else(|| Error::Config(format!("{ctx} requires '{key}='")))
}

/// `uniform(a=1,b=2)`, `beta(alpha=2,beta=5,a=0.05,b=0.25)`,
/// `gamma(alpha=10,beta=0.1,a=340)`, `normal(mu=2.5,sigma=0.125)`.
pub fn parse_distribution(text: &str) -> Result<Distribution> {
    let (name, args) = parse_call(text)?;
    match name.as_str() {
        "uniform" => Distribution::uniform(
            parse_f64("a", require(&args, "a", "uniform")?)?,
            parse_f64("b", require(&args, "b", "uniform")?)?,
        ),
        "beta" => Distribution::beta(
            parse_f64("alpha", require(&args, "alpha", "beta")?)?,
            parse_f64("beta", require(&args, "beta", "beta")?)?,
            parse_f64("a", require(&args, "a", "beta")?)?,
            parse_f64("b", require(&args, "b", "beta")?)?,
        ),
        "gamma" => Distribution::gamma(
            parse_f64("alpha", require(&args, "alpha", "gamma")?)?,
            parse_f64("beta", require(&args, "beta", "gamma")?)?,
            parse_f64("a", require(&args, "a", "gamma")?)?,
        ),
        "normal" => Distribution::normal(
            parse_f64("mu", require(&args, "mu", "normal")?)?,
            parse_f64("sigma", require(&args, "sigma", "normal")?)?,
        ),
        other => Err(Error::Config(format!("unknown distribution '{other}'"))),
    }
}

/// `gauss(points_per_dim=[100,80])` or `mc(q=100000, seed=3)`.
pub fn parse_quadrature(text: &str) -> Result<QuadratureSpec> {
    let (name, args) = parse_call(text)?;
    match name.as_str() {
        "gauss" => {
            let list = require(&args, "points_per_dim", "gauss")?;
            let inner = list
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| Error::Config("points_per_dim expects [n1,n2,...]".into()))?;
            let points: Vec<usize> = inner
                .split(',')
                .map(|p| parse_usize("points_per_dim", p.trim()))
                .collect::<Result<_>>()?;
            if points.is_empty() {
                return Err(Error::Config("points_per_dim must not be empty".into()));
            }
            Ok(QuadratureSpec::Gauss { points_per_dim: points })
        }
        "mc" => {
            let q = parse_usize("q", require(&args, "q", "mc")?)?;
            let seed = match args.get("seed") {
                Some(s) => parse_u64("seed", s)?,
                None => 0,
            };
            Ok(QuadratureSpec::MonteCarlo { q, seed })
        }
        other => Err(Error::Config(format!("unknown quadrature '{other}'"))),
    }
}

fn parse_oracle(text: &str, dense_points: usize, refine: usize) -> Result<OracleSpec> {
    let (name, args) = parse_call(text)?;
    match name.as_str() {
        "closed_form" => Ok(OracleSpec::ClosedForm { dense_points }),
        "dense_quadrature" => Ok(OracleSpec::DenseQuadrature { dense_points, refine }),
        "mc" => Ok(OracleSpec::MonteCarlo {
            realizations: parse_usize("realizations", require(&args, "realizations", "mc")?)?,
        }),
        "none" => Ok(OracleSpec::None),
        other => Err(Error::Config(format!("unknown reference '{other}'"))),
    }
}
