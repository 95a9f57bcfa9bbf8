//! Convergence of both probability-transfer modes on the free-vibration
//! benchmark: global errors against the closed form for increasing basis
//! size.
//!
//! ```text
//! cargo run --release --example free_vibration
//! ```

use fsc::config::{OracleSpec, RunConfig};
use fsc::driver::execute;
use fsc::fsc::TransferKind;
use fsc::oracle::{closed_form_series, error_metrics};
use fsc::problems::{make_problem, ProblemId};

fn main() {
    let spec = make_problem(ProblemId::P2, "uniform").unwrap();
    println!("free vibration, k ~ uniform[340,460] N/m, horizon 10 s");
    println!("{:>3} {:>14} {:>14} {:>14} {:>14}", "P", "fsc1 mean", "fsc1 var", "fsc2 mean", "fsc2 var");
    for p in 3..=6usize {
        let mut row = vec![format!("{p:>3}")];
        for transfer in [TransferKind::Fsc1, TransferKind::Fsc2] {
            let mut cfg = RunConfig::defaults(ProblemId::P2, "uniform").unwrap();
            cfg.fsc.basis_index = p;
            cfg.fsc.transfer = transfer;
            cfg.fsc.horizon = 10.0;
            cfg.oracle = OracleSpec::None;
            let (moments, _, _) = execute(&cfg).unwrap();
            let reference = closed_form_series(&spec, &moments.times, 400).unwrap();
            let report = error_metrics(&moments, &reference).unwrap();
            row.push(format!("{:>14.3e}", report.global_mean));
            row.push(format!("{:>14.3e}", report.global_variance));
        }
        println!("{} {} {} {} {}", row[0], row[1], row[2], row[3], row[4]);
    }
    println!("\nthe exact transfer keeps gaining accuracy where the mean-square one plateaus");
}
