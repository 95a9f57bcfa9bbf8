//! Orthogonalize a monomial set under a custom measure, by Gram-Schmidt and
//! by the covariance closed form, and print the recovered polynomial
//! coefficients.
//!
//! The measure is dμ = (3/2)ξ²dξ on [−1, 1], realized as a weight-modified
//! Legendre rule.
//!
//! ```text
//! cargo run --release --example orthogonal_basis
//! ```

#![allow(clippy::needless_range_loop)]

use fsc::distribution::Distribution;
use fsc::quadrature::gauss_rule;
use fsc::rfs::{gram_schmidt, closed_form_orthogonalize, RandomFunction, RawStats};
use std::sync::Arc;

fn main() {
    let base = gauss_rule(&Distribution::uniform(-1.0, 1.0).unwrap(), 30).unwrap();
    let carrier = Arc::new(base.with_weight_modifier(|x| 3.0 * x[0] * x[0]).unwrap());
    let raw: Vec<RandomFunction> =
        (1..=5).map(|d| RandomFunction::from_fn(&carrier, |x| x[0].powi(d))).collect();

    let gs = gram_schmidt(&raw).unwrap();
    let cf = closed_form_orthogonalize(&raw, None).unwrap();

    println!("orthogonal polynomials under (3/2) xi^2 dxi:");
    for j in 0..gs.size() {
        // recover coefficients by a small Vandermonde solve on j+1 nodes
        let coeffs = fit_polynomial(&carrier, gs.function(j).values(), j + 1);
        let poly: Vec<String> = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.abs() > 1e-9)
            .map(|(d, c)| format!("{c:+.6}*xi^{d}"))
            .collect();
        println!("  psi_{j} = {}", poly.join(" "));
        let mut worst = 0.0f64;
        for q in 0..carrier.len() {
            worst = worst.max((gs.function(j).values()[q] - cf.function(j).values()[q]).abs());
        }
        println!("       norm = {:.6e}, |gram_schmidt - closed_form| <= {worst:.1e}", gs.norms()[j]);
    }

    // The coefficient on psi_2 inside the expansion of xi^4 is a determinant
    // ratio of covariance minors; its exact value here is 10/9.
    let stats = RawStats::from_functions(&raw).unwrap();
    let basis = closed_form_orthogonalize(&raw, Some(&stats)).unwrap();
    println!(
        "\nexpansion of xi^4: coefficient on psi_2 = {:.15} (exact 10/9 = {:.15})",
        basis.raw_expansions()[3].coeffs[2],
        10.0 / 9.0
    );
}

fn fit_polynomial(carrier: &Arc<fsc::quadrature::NodeSet>, values: &[f64], terms: usize) -> Vec<f64> {
    let m = terms;
    let step = (carrier.len() - 1) / (m.max(2) - 1);
    let xs: Vec<f64> = (0..m).map(|i| carrier.node(i * step)[0]).collect();
    let ys: Vec<f64> = (0..m).map(|i| values[i * step]).collect();
    // dense solve of the Vandermonde system
    let mut a: Vec<Vec<f64>> = (0..m)
        .map(|r| {
            let mut row: Vec<f64> = (0..m).map(|c| xs[r].powi(c as i32)).collect();
            row.push(ys[r]);
            row
        })
        .collect();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        for r in 0..m {
            if r != col {
                let f = a[r][col] / p;
                for c in col..=m {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..m).map(|i| a[i][m] / a[i][i]).collect()
}
