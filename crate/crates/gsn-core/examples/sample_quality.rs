//! Side-by-side sample-quality comparison: train a 1-layer denoiser and
//! a 2-layer walkback model on the same noisy codeword data, collect
//! mean-field samples from each, and score both sample sets with a
//! Parzen-window log-likelihood on a held-out set.

use gsn_core::datasets::{bit_pattern_table_codewords, sample_from_table};
use gsn_core::gsn::{GsnConfig, GsnModel, VisibleKind};
use gsn_core::ndnum::{Matrix, Rng};
use gsn_core::parzen::{default_bandwidth_grid, log_likelihood, select_bandwidth, ParzenEstimator};
use gsn_core::sampler::{sample, SampleRun};
use gsn_core::trainer::{train, TrainConfig};

fn main() {
    let t0 = std::time::Instant::now();
    let (table, codes) = bit_pattern_table_codewords(8, 4, 0.03, 41).unwrap();
    println!("codewords: {codes:?}");
    let train_set = sample_from_table(&table, 8, 4096, 1000).unwrap();
    let test_set = sample_from_table(&table, 8, 1200, 2000).unwrap();
    let validation = test_set.examples.select_rows(&(0..120).collect::<Vec<_>>());
    let eval = test_set.examples.select_rows(&(120..1200).collect::<Vec<_>>());

    // 1-layer denoiser.
    let dae_cfg = GsnConfig::new(8, vec![48], 0.0, 0.1, VisibleKind::Binary, 7).unwrap();
    let mut dae = GsnModel::new(dae_cfg).unwrap();
    let mut tc = TrainConfig::new(400, 7);
    tc.learning_rate = 0.5;
    tc.minibatch = 32;
    let rep = train(&mut dae, &train_set.examples, &tc).unwrap();
    println!(
        "dae: nll {:.4} -> {:.4} ({:?})",
        rep.epochs[0].mean_nll,
        rep.epochs.last().unwrap().mean_nll,
        t0.elapsed()
    );

    // 2-layer walkback model.
    let mut gsn_cfg = GsnConfig::new(8, vec![48, 64], 2.0, 0.1, VisibleKind::Binary, 8).unwrap();
    gsn_cfg.walkback_steps = 2;
    let mut gsn = GsnModel::new(gsn_cfg).unwrap();
    let mut tc2 = TrainConfig::new(600, 8);
    tc2.learning_rate = 0.25;
    tc2.lr_decay = 0.996;
    tc2.minibatch = 32;
    let rep2 = train(&mut gsn, &train_set.examples, &tc2).unwrap();
    println!(
        "gsn2: nll {:.4} -> {:.4} ({:?})",
        rep2.epochs[0].mean_nll,
        rep2.epochs.last().unwrap().mean_nll,
        t0.elapsed()
    );

    let mut run = SampleRun::new(10_000);
    run.burn_in = 1000;
    run.collect_mean_field = true;
    let score = |m: &GsnModel, stream: u64| -> (f64, f64, f64, Matrix) {
        let out = sample(m, &run, &mut Rng::with_stream(99, stream)).unwrap();
        let sigma = select_bandwidth(&out.samples, &validation, &default_bandwidth_grid()).unwrap();
        let est = ParzenEstimator::new(out.samples.clone(), sigma).unwrap();
        let ll = log_likelihood(&est, &eval).unwrap();
        (ll.mean, ll.std_error, sigma, out.samples)
    };
    let (dae_ll, dae_se, dae_sigma, _) = score(&dae, 0);
    println!("dae : ll {dae_ll:.4} +- {dae_se:.4} (sigma {dae_sigma:.3}) ({:?})", t0.elapsed());
    let (gsn_ll, gsn_se, gsn_sigma, _) = score(&gsn, 1);
    println!("gsn2: ll {gsn_ll:.4} +- {gsn_se:.4} (sigma {gsn_sigma:.3}) ({:?})", t0.elapsed());

    let combined = (dae_se * dae_se + gsn_se * gsn_se).sqrt();
    println!(
        "margin = {:.4} ({:.1} combined standard errors)",
        gsn_ll - dae_ll,
        (gsn_ll - dae_ll) / combined
    );
}
