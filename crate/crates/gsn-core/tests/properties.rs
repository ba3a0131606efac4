//! Randomized invariant checks across the library surface.

use std::collections::HashSet;

use proptest::prelude::*;

use gsn_core::chainlab::{
    dae_exact_operator, ergodicity_check, total_variation, ChainOperator, StateSpace,
};
use gsn_core::gsn::{GsnConfig, GsnModel, VisibleKind};
use gsn_core::ndnum::{salt_and_pepper, Matrix, Rng};
use gsn_core::parzen::ParzenEstimator;

fn stochastic_from(n: usize, raw: &[f64]) -> ChainOperator {
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        let row = &raw[i * n..(i + 1) * n];
        let s: f64 = row.iter().sum();
        for (j, v) in row.iter().enumerate() {
            k.set(i, j, v / s);
        }
    }
    ChainOperator::new(k, "prop").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stationary_is_a_fixed_point(
        (n, raw) in (2usize..=8).prop_flat_map(|n| {
            (Just(n), prop::collection::vec(0.05f64..1.0, n * n))
        })
    ) {
        let op = stochastic_from(n, &raw);
        let pi = op.stationary_exact().unwrap();
        prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(pi.iter().all(|&p| p >= 0.0));
        for j in 0..n {
            let mut next = 0.0;
            for i in 0..n {
                next += pi[i] * op.matrix().get(i, j);
            }
            prop_assert!((next - pi[j]).abs() < 1e-9, "column {j}");
        }
        // Power iteration agrees with the direct solve on ergodic chains.
        let pow = op.stationary(1e-12).unwrap();
        let tv = total_variation(&pi, &pow).unwrap();
        prop_assert!(tv < 1e-8, "tv {tv}");
    }

    #[test]
    fn exact_dae_operator_is_a_valid_chain(
        seed in 0u64..1000,
        dim in 1usize..=3,
        hidden in 1usize..=6,
        p in 0.0f64..=1.0,
    ) {
        let config = GsnConfig::new(dim, vec![hidden], 0.0, p, VisibleKind::Binary, seed).unwrap();
        let model = GsnModel::new(config).unwrap();
        let space = StateSpace::new(dim).unwrap();
        // Construction validates row sums and non-negativity internally.
        let op = dae_exact_operator(&model, &space).unwrap();
        if p >= 0.05 {
            // Sigmoid readouts are interior, corruption reaches every
            // state: full support, hence ergodic.
            prop_assert!(ergodicity_check(&op).ergodic);
        }
    }

    #[test]
    fn total_variation_is_a_metric_on_distributions(
        (_n, a, b) in (2usize..=10).prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(0.01f64..1.0, n),
                prop::collection::vec(0.01f64..1.0, n),
            )
        })
    ) {
        let norm = |v: &[f64]| {
            let s: f64 = v.iter().sum();
            v.iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        let (p, q) = (norm(&a), norm(&b));
        let tv = total_variation(&p, &q).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&tv));
        prop_assert!((tv - total_variation(&q, &p).unwrap()).abs() < 1e-15);
        prop_assert_eq!(total_variation(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn salt_and_pepper_only_flips_to_bits(
        seed in 0u64..1000,
        p in 0.0f64..=1.0,
        vals in prop::collection::vec(-3.0f64..3.0, 12),
    ) {
        let x = Matrix::from_vec(3, 4, vals.clone()).unwrap();
        let mut rng = Rng::new(seed);
        let y = salt_and_pepper(&mut rng, &x, p).unwrap();
        for (orig, new) in vals.iter().zip(y.data()) {
            prop_assert!(new == orig || *new == 0.0 || *new == 1.0);
        }
    }

    #[test]
    fn parzen_density_unchanged_by_duplicating_the_whole_sample_set(
        (n, d, samples, point) in (1usize..=6, 1usize..=3).prop_flat_map(|(n, d)| {
            (
                Just(n),
                Just(d),
                prop::collection::vec(-2.0f64..2.0, n * d),
                prop::collection::vec(-2.0f64..2.0, d),
            )
        }),
        sigma in 0.1f64..2.0,
    ) {
        let base = Matrix::from_vec(n, d, samples.clone()).unwrap();
        let mut doubled_data = samples.clone();
        doubled_data.extend_from_slice(&samples);
        let doubled = Matrix::from_vec(2 * n, d, doubled_data).unwrap();
        let a = ParzenEstimator::new(base, sigma).unwrap().log_density(&point).unwrap();
        let b = ParzenEstimator::new(doubled, sigma).unwrap().log_density(&point).unwrap();
        prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn checkpoint_bytes_roundtrip(
        visible in 1usize..=4,
        hiddens in prop::collection::vec(1usize..=4, 1..=3),
        eta in 0.0f64..2.0,
        p in 0.0f64..1.0,
        seed in 0u64..1000,
        binary in any::<bool>(),
    ) {
        let kind = if binary { VisibleKind::Binary } else { VisibleKind::Real };
        let config = GsnConfig::new(visible, hiddens, eta, p, kind, seed).unwrap();
        let model = GsnModel::new(config).unwrap();
        let bytes = model.to_bytes().unwrap();
        let restored = GsnModel::from_bytes(&bytes).unwrap();
        prop_assert_eq!(restored.to_bytes().unwrap(), bytes);
        prop_assert_eq!(restored.params_checksum(), model.params_checksum());
    }

    #[test]
    fn update_schedule_alternates_and_covers_layers(
        visible in 1usize..=3,
        hiddens in prop::collection::vec(1usize..=3, 1..=5),
        step in 0usize..20,
        seed in 0u64..100,
    ) {
        let d = hiddens.len();
        let config = GsnConfig::new(visible, hiddens, 0.0, 0.1, VisibleKind::Binary, seed).unwrap();
        let model = GsnModel::new(config).unwrap();
        let now: HashSet<usize> = model.update_set(step).into_iter().collect();
        let next: HashSet<usize> = model.update_set(step + 1).into_iter().collect();
        if d == 1 {
            // Single layer moves every step so the chain is the plain
            // denoising chain.
            prop_assert_eq!(now.clone(), HashSet::from([1]));
            prop_assert_eq!(next, HashSet::from([1]));
        } else {
            prop_assert!(now.is_disjoint(&next));
            let union: HashSet<usize> = now.union(&next).copied().collect();
            prop_assert_eq!(union, (1..=d).collect::<HashSet<usize>>());
            prop_assert_eq!(model.update_set(step + 2), model.update_set(step));
        }
    }

    #[test]
    fn state_space_index_roundtrips(dim in 1usize..=8, raw in any::<u16>()) {
        let sp = StateSpace::new(dim).unwrap();
        let s = raw as usize % sp.size();
        prop_assert_eq!(sp.index(&sp.vector(s)).unwrap(), s);
    }

    #[test]
    fn config_defaults_follow_depth(
        visible in 1usize..=5,
        hiddens in prop::collection::vec(1usize..=5, 1..=4),
        eta in 0.0f64..3.0,
    ) {
        let d = hiddens.len();
        let config = GsnConfig::new(visible, hiddens, eta, 0.1, VisibleKind::Binary, 1).unwrap();
        prop_assert_eq!(config.walkback_steps, 2 * d);
        prop_assert_eq!(config.eta_in[0], 0.0);
        prop_assert_eq!(config.eta_out[0], 0.0);
        for l in 1..d {
            prop_assert_eq!(config.eta_in[l], eta);
        }
    }
}
