//! Gauss rules matched to each probability law, full tensor grids, and
//! Monte Carlo node sets.
//!
//! ```text
//! cargo run --release --example quadrature_rules
//! ```

use fsc::distribution::{Distribution, ProductMeasure};
use fsc::quadrature::{gauss_rule, mc_nodes, tensor_grid};

fn main() {
    // One rule per law, checked against analytic moments.
    let laws = [
        ("uniform(-1,1)", Distribution::uniform(-1.0, 1.0).unwrap()),
        ("beta(2,5) on [0,1]", Distribution::beta(2.0, 5.0, 0.0, 1.0).unwrap()),
        ("gamma(10,0.1) from 340", Distribution::gamma(10.0, 0.1, 340.0).unwrap()),
        ("normal(0,1)", Distribution::normal(0.0, 1.0).unwrap()),
    ];
    println!("{:<24} {:>6} {:>14} {:>14}", "law", "points", "|E[x^4]-quad|", "sum(w)-1");
    for (name, law) in &laws {
        let rule = gauss_rule(law, 12).unwrap();
        let quartic: Vec<f64> = rule.coords_1d().iter().map(|x| x.powi(4)).collect();
        let moment_err = (rule.weighted_sum(&quartic) - law.raw_moment(4)).abs()
            / law.raw_moment(4).abs().max(1.0);
        let weight_err = (rule.weights().iter().sum::<f64>() - 1.0).abs();
        println!("{name:<24} {:>6} {moment_err:>14.2e} {weight_err:>14.2e}", rule.len());
    }

    // A two-dimensional full grid: 100 x 80 points.
    let u = gauss_rule(&Distribution::uniform(340.0, 460.0).unwrap(), 100).unwrap();
    let b = gauss_rule(&Distribution::beta(2.0, 5.0, 340.0, 460.0).unwrap(), 80).unwrap();
    let grid = tensor_grid(&[u, b]).unwrap();
    println!("\ntensor grid: {} nodes in {} dims", grid.len(), grid.dim());

    // Monte Carlo nodes carry uniform weights and a reproducible seed.
    let measure = ProductMeasure::new(vec![
        Distribution::beta(2.0, 5.0, -1.0, 1.0).unwrap(),
        Distribution::uniform(-1.0, 1.0).unwrap(),
    ])
    .unwrap();
    let mc = mc_nodes(&measure, 100_000, 3).unwrap();
    let sq: Vec<f64> = (0..mc.len()).map(|q| mc.node(q)[1].powi(2)).collect();
    println!(
        "monte carlo: {} nodes, w = {:.1e}, E[xi2^2] = {:.4} (exact 1/3)",
        mc.len(),
        mc.weights()[0],
        mc.weighted_sum(&sq)
    );
}
