//! Batch CLI: `fsc run CONFIG` executes one configured simulation, `fsc
//! sweep CONFIG --axis p --values 3,4,5,6` runs a convergence study. Exit
//! codes: 0 success, 2 configuration error, 3 numerical failure.

use fsc::driver::{dry_run, load_config, run, sweep, SweepAxis};
use fsc::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "\
usage:
  fsc run CONFIG [--out DIR] [--seed N] [--dry-run] [--full-scale] [--print-config]
  fsc sweep CONFIG --axis p|dt|q --values V1,V2,... [--out DIR] [--seed N] [--full-scale]
  fsc --print-config [PROBLEM]

options:
  --out DIR        override the output directory
  --seed N         override the master seed
  --dry-run        validate the configuration and exit
  --full-scale     horizon 150 s, Monte Carlo references at 1e6 realizations
  --print-config   print the fully resolved configuration and exit
";

struct Cli {
    command: Command,
    config_path: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    dry_run: bool,
    full_scale: bool,
    print_config: bool,
    axis: Option<String>,
    values: Option<String>,
    problem: Option<String>,
}

enum Command {
    Run,
    Sweep,
    PrintDefaults,
}

fn parse_args(args: &[String]) -> Result<Cli, String> {
    let mut iter = args.iter().peekable();
    let command = match iter.peek().map(|s| s.as_str()) {
        Some("run") => {
            iter.next();
            Command::Run
        }
        Some("sweep") => {
            iter.next();
            Command::Sweep
        }
        Some("--print-config") => Command::PrintDefaults,
        Some(other) if !other.starts_with("--") => {
            return Err(format!("unknown command '{other}'"))
        }
        _ => return Err("missing command".into()),
    };
    let mut cli = Cli {
        command,
        config_path: None,
        out: None,
        seed: None,
        dry_run: false,
        full_scale: false,
        print_config: false,
        axis: None,
        values: None,
        problem: None,
    };
    while let Some(arg) = iter.next() {
        match arg.as_str() {
            "--out" => {
                cli.out = Some(PathBuf::from(
                    iter.next().ok_or_else(|| "--out expects a directory".to_string())?,
                ))
            }
            "--seed" => {
                let v = iter.next().ok_or_else(|| "--seed expects a number".to_string())?;
                cli.seed = Some(v.parse().map_err(|_| format!("invalid seed '{v}'"))?);
            }
            "--dry-run" => cli.dry_run = true,
            "--full-scale" => cli.full_scale = true,
            "--print-config" => cli.print_config = true,
            "--axis" => {
                cli.axis =
                    Some(iter.next().ok_or_else(|| "--axis expects p|dt|q".to_string())?.clone())
            }
            "--values" => {
                cli.values =
                    Some(iter.next().ok_or_else(|| "--values expects a list".to_string())?.clone())
            }
            "--help" | "-h" => return Err(String::new()),
            other if other.starts_with("--") => return Err(format!("unknown flag '{other}'")),
            other => {
                if cli.config_path.is_none() {
                    cli.config_path = Some(PathBuf::from(other));
                } else if matches!(cli.command, Command::PrintDefaults) && cli.problem.is_none() {
                    cli.problem = Some(other.to_string());
                } else {
                    return Err(format!("unexpected argument '{other}'"));
                }
            }
        }
    }
    if matches!(cli.command, Command::PrintDefaults) && cli.config_path.is_some() {
        cli.problem = cli.config_path.take().map(|p| p.display().to_string());
    }
    Ok(cli)
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameters(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match parse_args(&args) {
        Ok(cli) => cli,
        Err(msg) => {
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            eprint!("{USAGE}");
            return ExitCode::from(2);
        }
    };

    match cli.command {
        Command::PrintDefaults => {
            let name = cli.problem.as_deref().unwrap_or("p2");
            let id = match fsc::problems::ProblemId::parse(name, None) {
                Ok(id) => id,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            match fsc::config::RunConfig::defaults(id, "") {
                Ok(cfg) => {
                    print!("{}", cfg.print());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Run => {
            let path = match &cli.config_path {
                Some(p) => p,
                None => {
                    eprintln!("error: run requires a config file");
                    eprint!("{USAGE}");
                    return ExitCode::from(2);
                }
            };
            let mut config = match load_config(path) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(exit_code_for(&e));
                }
            };
            if let Some(out) = cli.out {
                config.out_dir = out;
            }
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            if cli.full_scale {
                config.apply_full_scale();
            }
            if cli.print_config {
                print!("{}", config.print());
                return ExitCode::SUCCESS;
            }
            if cli.dry_run {
                return match dry_run(&config) {
                    Ok(()) => {
                        println!("configuration ok");
                        ExitCode::SUCCESS
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        ExitCode::from(exit_code_for(&e))
                    }
                };
            }
            match run(&config) {
                Ok(artifacts) => {
                    for f in &artifacts.files {
                        println!("wrote {}", f.display());
                    }
                    if let Some(report) = &artifacts.report {
                        println!(
                            "global_mean={:.6e} global_var={:.6e} reference={}",
                            report.global_mean, report.global_variance, report.reference_label
                        );
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(exit_code_for(&e))
                }
            }
        }
        Command::Sweep => {
            let path = match &cli.config_path {
                Some(p) => p,
                None => {
                    eprintln!("error: sweep requires a config file");
                    return ExitCode::from(2);
                }
            };
            let axis = match cli.axis.as_deref().map(SweepAxis::parse) {
                Some(Ok(a)) => a,
                Some(Err(e)) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
                None => {
                    eprintln!("error: sweep requires --axis p|dt|q");
                    return ExitCode::from(2);
                }
            };
            let values: Vec<f64> = match cli.values.as_deref() {
                Some(list) => {
                    let parsed: Result<Vec<f64>, _> =
                        list.split(',').map(|v| v.trim().parse::<f64>()).collect();
                    match parsed {
                        Ok(v) => v,
                        Err(_) => {
                            eprintln!("error: invalid --values list '{list}'");
                            return ExitCode::from(2);
                        }
                    }
                }
                None => {
                    eprintln!("error: sweep requires --values V1,V2,...");
                    return ExitCode::from(2);
                }
            };
            let mut config = match load_config(path) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(exit_code_for(&e));
                }
            };
            if let Some(out) = cli.out {
                config.out_dir = out;
            }
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            if cli.full_scale {
                config.apply_full_scale();
            }
            match sweep(&config, axis, &values) {
                Ok(table) => {
                    for row in &table.rows {
                        match &row.failure {
                            None => println!(
                                "{}={} eps_mean={:.6e} eps_var={:.6e}",
                                match axis {
                                    SweepAxis::BasisIndex => "p",
                                    SweepAxis::Dt => "dt",
                                    SweepAxis::QuadPoints => "q",
                                },
                                row.value,
                                row.global_mean,
                                row.global_variance
                            ),
                            Some(err) => println!("value {} failed: {err}", row.value),
                        }
                    }
                    for f in &table.files {
                        println!("wrote {}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(exit_code_for(&e))
                }
            }
        }
    }
}
