//! Operation counts of the two orthogonalization routes, and a measurement
//! of the implemented Gram-Schmidt path against its model.
//!
//! ```text
//! cargo run --release --example cost_models
//! ```

use fsc::distribution::Distribution;
use fsc::quadrature::gauss_rule;
use fsc::rfs::{cost_model, cost_model_q_coefficient, gram_schmidt, CostModel, RandomFunction};
use std::sync::Arc;

fn main() {
    let q = 1000u64;
    println!("elementary operations to orthogonalize P functions on {q} nodes:");
    println!(
        "{:>3} {:>16} {:>16} {:>16} {:>8}",
        "P", "closed form*", "closed form", "gram-schmidt", "ratio"
    );
    for p in 1..=8u64 {
        let known = cost_model(CostModel::ClosedFormKnownStats, p, q);
        let unknown = cost_model(CostModel::ClosedFormUnknownStats, p, q);
        let gs = cost_model(CostModel::ClassicGS, p, q);
        let ratio = cost_model_q_coefficient(CostModel::ClassicGS, p)
            / cost_model_q_coefficient(CostModel::ClosedFormKnownStats, p);
        println!("{p:>3} {known:>16} {unknown:>16} {gs:>16} {ratio:>8.3}");
    }
    println!("(*) statistics known beforehand; the advantage peaks at 2.75x for P = 3, 4\n");

    // The implementation tallies its own operations; compare the measured
    // per-node coefficient with the model.
    for p in [3usize, 4] {
        let ops_at = |points: usize| -> u64 {
            let carrier =
                Arc::new(gauss_rule(&Distribution::uniform(-1.0, 1.0).unwrap(), points).unwrap());
            let raw: Vec<RandomFunction> = (1..=p as i32)
                .map(|d| RandomFunction::from_fn(&carrier, |x| x[0].powi(d)))
                .collect();
            gram_schmidt(&raw).unwrap().elementary_ops()
        };
        let slope = (ops_at(400) - ops_at(100)) as f64 / 300.0;
        let predicted = cost_model_q_coefficient(CostModel::ClassicGS, p as u64);
        println!(
            "measured gram-schmidt coefficient at P={p}: {slope:.2} ops/node (model {predicted})"
        );
    }
}
