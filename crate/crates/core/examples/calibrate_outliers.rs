//! Sweep λ on the planted-outlier benchmark and report precision/recall.
//!
//! cargo run --release --example calibrate_outliers

use sparse_explore::outliers::{remove_outliers, OutlierParams};
use sparse_explore::sim::planted_outlier_cloud;

fn main() {
    let base = OutlierParams::calibrated();
    println!("lambda  min_precision  min_recall  mean_precision  mean_recall");
    for step in 0..=40 {
        let lambda = 0.44 + 0.001 * step as f64;
        let params = OutlierParams { lambda, ..base };
        let mut precisions = Vec::new();
        let mut recalls = Vec::new();
        for seed in 0..10 {
            let (cloud, truth) = planted_outlier_cloud(seed, 200, 20);
            let result = remove_outliers(&cloud, &params).expect("non-empty cloud");
            let hits = result.outliers.iter().filter(|&&i| truth[i]).count() as f64;
            let flagged = result.outliers.len() as f64;
            precisions.push(if flagged > 0.0 { hits / flagged } else { 0.0 });
            recalls.push(hits / 20.0);
        }
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!(
            "{lambda:.3}   {:.3}          {:.3}       {:.3}           {:.3}",
            min(&precisions),
            min(&recalls),
            mean(&precisions),
            mean(&recalls)
        );
    }
}
