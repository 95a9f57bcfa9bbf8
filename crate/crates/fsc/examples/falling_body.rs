//! Track a falling body under uniformly distributed air resistance and
//! compare the propagated moments against the closed-form solution.
//!
//! ```text
//! cargo run --release --example falling_body
//! ```

use fsc::config::{OracleSpec, RunConfig};
use fsc::driver::execute;
use fsc::oracle::{closed_form_series, error_metrics};
use fsc::problems::{make_problem, ProblemId};

fn main() {
    let mut cfg = RunConfig::defaults(ProblemId::P1, "uniform").unwrap();
    cfg.fsc.horizon = 10.0;
    cfg.oracle = OracleSpec::None;
    let (moments, _, diag) = execute(&cfg).unwrap();

    let spec = make_problem(ProblemId::P1, "uniform").unwrap();
    let reference = closed_form_series(&spec, &moments.times, 400).unwrap();
    let report = error_metrics(&moments, &reference).unwrap();

    println!("falling body, k ~ uniform[1,2] kg/s, basis size index P = {}", cfg.fsc.basis_index);
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "t [s]", "E[v]", "Var[v]", "err(mean)", "err(var)");
    for &t in &[0.0, 1.0, 2.0, 5.0, 10.0] {
        let i = moments.times.iter().position(|&x| (x - t).abs() < 1e-9).unwrap();
        println!(
            "{t:>6.1} {:>12.6} {:>12.6} {:>12.2e} {:>12.2e}",
            moments.mean[i], moments.variance[i], report.local_mean[i], report.local_variance[i]
        );
    }
    println!(
        "\nglobal errors: mean {:.2e}, variance {:.2e} ({} basis resets)",
        report.global_mean, report.global_variance, diag.resets
    );
}
