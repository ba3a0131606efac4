//! End-to-end smoke test: generate data, train, checkpoint to disk,
//! reload, sample, and score. Small enough to run in seconds; the strict
//! numeric gates live in the acceptance suite.

use gsn_core::chainlab::{dae_exact_operator, total_variation, StateSpace};
use gsn_core::datasets::{make_toy, sample_from_table, ToyKind};
use gsn_core::gsn::{GsnConfig, GsnModel, VisibleKind};
use gsn_core::ndnum::Rng;
use gsn_core::parzen::{log_likelihood, select_bandwidth, ParzenEstimator};
use gsn_core::sampler::{sample, SampleRun};
use gsn_core::trainer::{train, TrainConfig};

#[test]
fn train_checkpoint_sample_evaluate() {
    // Seed 14's table has a small factorization floor (see the
    // floor_scan example), so the trained chain can actually get close.
    let data = make_toy(ToyKind::BitPatterns { dim: 3 }, 2048, 14).unwrap();
    let table = data.table.clone().unwrap();

    let config = GsnConfig::new(3, vec![8], 0.0, 0.1, VisibleKind::Binary, 5).unwrap();
    let mut model = GsnModel::new(config.clone()).unwrap();
    let untrained = GsnModel::new(config).unwrap();

    let mut tc = TrainConfig::new(300, 5);
    tc.learning_rate = 0.5;
    tc.minibatch = 32;
    let report = train(&mut model, &data.examples, &tc).unwrap();
    assert_eq!(report.epochs.len(), 300);
    let first = report.epochs.first().unwrap().mean_nll;
    let last = report.epochs.last().unwrap().mean_nll;
    assert!(last < first, "loss went {first} -> {last}");

    // Disk roundtrip preserves everything bit-exactly.
    let path = std::env::temp_dir().join(format!("gsn_pipeline_{}.gsn", std::process::id()));
    model.save(&path).unwrap();
    let loaded = GsnModel::load(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(loaded.params_checksum(), model.params_checksum());
    assert_eq!(report.final_checksum, model.params_checksum());

    // The exact chain of the trained model sits near the data table; the
    // acceptance suite pins the strict tolerance.
    let space = StateSpace::new(3).unwrap();
    let op = dae_exact_operator(&loaded, &space).unwrap();
    let pi = op.stationary_exact().unwrap();
    let tv = total_variation(&pi, &table).unwrap();
    println!("pipeline: stationary vs table tv = {tv:.4}");
    assert!(tv < 0.15, "stationary is {tv} from the table");

    // Mean-field samples from the trained model score the held-out set
    // better than samples from an untrained one.
    let holdout = sample_from_table(&table, 3, 256, 99).unwrap();
    let mut run = SampleRun::new(800);
    run.burn_in = 200;
    run.collect_mean_field = true;
    let score = |m: &GsnModel, stream: u64| {
        let out = sample(m, &run, &mut Rng::with_stream(9, stream)).unwrap();
        let sigma =
            select_bandwidth(&out.samples, &holdout.examples, &[0.1, 0.2, 0.4, 0.8]).unwrap();
        let est = ParzenEstimator::new(out.samples, sigma).unwrap();
        log_likelihood(&est, &holdout.examples).unwrap().mean
    };
    let trained_ll = score(&loaded, 0);
    let untrained_ll = score(&untrained, 1);
    assert!(
        trained_ll > untrained_ll,
        "trained {trained_ll} vs untrained {untrained_ll}"
    );
}
