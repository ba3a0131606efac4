//! Trains a one-layer binary model on synthetic bit patterns and compares
//! the exact stationary distribution of its sampling chain against the
//! generating table.
//!
//!     cargo run --example exact_chain [dim hidden n epochs lr walkback p seed]

use gsn_core::chainlab::{dae_exact_operator, ergodicity_check, total_variation, StateSpace};
use gsn_core::datasets::{make_toy, ToyKind};
use gsn_core::gsn::{GsnConfig, GsnModel, VisibleKind};
use gsn_core::trainer::{train, TrainConfig};

fn arg<T: std::str::FromStr>(idx: usize, default: T) -> T {
    std::env::args()
        .nth(idx)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() {
    let dim: usize = arg(1, 3);
    let hidden: usize = arg(2, 8);
    let n: usize = arg(3, 2048);
    let epochs: usize = arg(4, 300);
    let lr: f64 = arg(5, 0.5);
    let walkback: usize = arg(6, 1);
    let p: f64 = arg(7, 0.1);
    let seed: u64 = arg(8, 77);

    let data = make_toy(ToyKind::BitPatterns { dim }, n, seed).expect("toy data");
    let table = data.table.clone().expect("bit patterns store their table");

    let mut config =
        GsnConfig::new(dim, vec![hidden], 0.0, p, VisibleKind::Binary, 5).expect("config");
    config.walkback_steps = walkback;
    let mut model = GsnModel::new(config).expect("model");

    let mut tc = TrainConfig::new(epochs, 5);
    tc.learning_rate = lr;
    tc.minibatch = 32;
    let report = train(&mut model, &data.examples, &tc).expect("training");
    println!(
        "nll: first {:.4} last {:.4}",
        report.epochs.first().map(|e| e.mean_nll).unwrap_or(f64::NAN),
        report.epochs.last().map(|e| e.mean_nll).unwrap_or(f64::NAN),
    );

    let space = StateSpace::new(dim).expect("state space");
    let op = dae_exact_operator(&model, &space).expect("exact operator");
    println!("ergodicity: {:?}", ergodicity_check(&op));

    let pi = op.stationary_exact().expect("stationary");
    println!("tv(stationary, table)     = {:.4}", total_variation(&pi, &table).unwrap());

    // The empirical distribution of the training set bounds what any
    // model fit to it can achieve against the true table.
    let mut emp = vec![0.0; table.len()];
    for i in 0..data.examples.rows() {
        let mut s = 0usize;
        for (j, &b) in data.examples.row(i).iter().enumerate() {
            s |= (b as usize) << j;
        }
        emp[s] += 1.0 / n as f64;
    }
    println!("tv(empirical, table)      = {:.4}", total_variation(&emp, &table).unwrap());
    println!("tv(stationary, empirical) = {:.4}", total_variation(&pi, &emp).unwrap());
    for s in 0..table.len().min(16) {
        println!("state {s:2}: table {:.4} empirical {:.4} stationary {:.4}", table[s], emp[s], pi[s]);
    }
}
