use attack_bundle::model::{noised_input, PROB_FLOOR};
use attack_bundle::prelude::*;
use attack_bundle::seed;
use proptest::prelude::*;

mod common;
use common::{random_input, random_linear, random_mlp};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Relative error between an analytic gradient and central differences.
fn fd_relative_error(model: &ModelParams, x: &[f64], label: usize) -> f64 {
    let h = 1e-5;
    let g = model.input_gradient(x, label).unwrap();
    let fd: Vec<f64> = (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[i] += h;
            down[i] -= h;
            (model.loss(&up, label).unwrap() - model.loss(&down, label).unwrap()) / (2.0 * h)
        })
        .collect();
    let diff = g
        .iter()
        .zip(&fd)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / norm.max(1e-8)
}

/// True when some hidden unit's pre-activation is within `margin` of its kink.
fn near_relu_kink(model: &ModelParams, x: &[f64], margin: f64) -> bool {
    let first = &model.layers()[0];
    first
        .weights
        .chunks_exact(first.inputs)
        .zip(&first.bias)
        .any(|(row, b)| (row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b).abs() < margin)
}

#[test]
fn gradients_match_finite_differences_for_both_architectures() {
    let mut rng = seed::rng(2024);
    let mut checked = [0usize; 2];
    let mut case = 0u64;
    while checked.iter().any(|&c| c < 100) {
        case += 1;
        let (d, k) = (rng.gen_range(1..8), rng.gen_range(2..5));
        let which = (case % 2) as usize;
        let model = if which == 0 {
            random_linear(d, k, case)
        } else {
            random_mlp(d, k, rng.gen_range(2..10), case)
        };
        let x = random_input(&mut rng, d);
        let label = rng.gen_range(0..k);
        if which == 1 && near_relu_kink(&model, &x, 1e-3) {
            continue;
        }
        if model.predict(&x).unwrap().probabilities[label] < 1e-9 {
            continue;
        }
        let err = fd_relative_error(&model, &x, label);
        assert!(err <= 1e-4, "case {case}: relative error {err}");
        checked[which] += 1;
    }
}

#[test]
fn probabilities_are_normalized() {
    let mut rng = seed::rng(5);
    let models = [random_linear(6, 4, 1), random_mlp(6, 4, 9, 2)];
    for i in 0..1000 {
        let model = &models[i % 2];
        let x = random_input(&mut rng, 6);
        let p = model.predict(&x).unwrap();
        let total: f64 = p.probabilities.iter().sum();
        assert!((total - 1.0).abs() <= 1e-9);
        assert_eq!(p.confidence, p.probabilities[p.predicted_class]);
        assert!(p.confidence > 0.0 && p.confidence <= 1.0);
    }
}

/// Lowest 0-1 error of any linear rule `a·cos θ x0 + sin θ x1 + c > 0` on a grid.
fn grid_search_error(data: &Dataset) -> f64 {
    let mut best = 1.0f64;
    for ti in 0..360 {
        let theta = ti as f64 * std::f64::consts::PI / 180.0;
        let (a, b) = (theta.cos(), theta.sin());
        for ci in 0..=200 {
            let c = -1.5 + 3.0 * ci as f64 / 200.0;
            let wrong = data
                .examples()
                .iter()
                .filter(|e| {
                    let side = a * e.features[0] + b * e.features[1] + c > 0.0;
                    usize::from(side) != e.label
                })
                .count();
            best = best.min(wrong as f64 / data.len() as f64);
        }
    }
    best
}

#[test]
fn separable_blobs_are_learned() {
    let data = synth_dataset(200, 2, 2, 7).unwrap();
    let oracle = grid_search_error(&data);
    assert!(oracle <= 0.05, "oracle error {oracle}");

    let cfg = TrainConfig {
        learning_rate: 0.1,
        epochs: 200,
        batch_size: 32,
        seed: 7,
    };
    let model = train(&data, Architecture::SoftmaxLinear, &cfg).unwrap();
    assert!(model.error_rate(&data).unwrap() <= 0.05);

    let initial = ModelParams::initialize(Architecture::SoftmaxLinear, 2, 2, 0).unwrap();
    assert!(model.mean_loss(&data).unwrap() <= initial.mean_loss(&data).unwrap());
}

/// Class-mean classifier, the separability reference for synthetic blobs.
fn nearest_mean_error(data: &Dataset) -> f64 {
    let k = data.num_classes();
    let d = data.dimension();
    let mut means = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for e in data.examples() {
        counts[e.label] += 1;
        for (m, v) in means[e.label].iter_mut().zip(&e.features) {
            *m += v;
        }
    }
    for (m, &c) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= c as f64);
    }
    let wrong = data
        .examples()
        .iter()
        .filter(|e| {
            let dist = |m: &Vec<f64>| {
                m.iter()
                    .zip(&e.features)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
            };
            let best = (0..k)
                .min_by(|&a, &b| dist(&means[a]).total_cmp(&dist(&means[b])))
                .unwrap();
            best != e.label
        })
        .count();
    wrong as f64 / data.len() as f64
}

#[test]
fn synthetic_blobs_reach_low_error() {
    let data = synth_dataset(2000, 2, 2, 11).unwrap();
    assert!(nearest_mean_error(&data) <= 0.05);
    let cfg = TrainConfig {
        learning_rate: 0.1,
        epochs: 50,
        batch_size: 32,
        seed: 1,
    };
    let model = train(&data, Architecture::SoftmaxLinear, &cfg).unwrap();
    assert!(model.error_rate(&data).unwrap() <= 0.05);
}

#[test]
fn training_is_bit_reproducible() {
    let data = synth_dataset(120, 3, 3, 2).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.2,
        epochs: 15,
        batch_size: 10,
        seed: 99,
    };
    for arch in [Architecture::SoftmaxLinear, Architecture::Mlp1 { hidden: 8 }] {
        let a = train(&data, arch, &cfg).unwrap();
        let b = train(&data, arch, &cfg).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let before = ModelParams::initialize(arch, 3, 3, seed::derive(cfg.seed, &[0])).unwrap();
        assert!(a.mean_loss(&data).unwrap() <= before.mean_loss(&data).unwrap());
    }
}

#[test]
fn stochastic_mean_matches_independent_monte_carlo() {
    let data = synth_dataset(300, 2, 3, 4).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.1,
        epochs: 40,
        batch_size: 32,
        seed: 3,
    };
    let model = train(&data, Architecture::Mlp1 { hidden: 16 }, &cfg).unwrap();
    let spec = StochasticSpec::new(0.05, 10_000).unwrap();
    for ex in data.examples().iter().take(5) {
        let got = predict_stochastic(&model, &spec, &ex.features, 1).unwrap();

        let mut rng = StdRng::seed_from_u64(777);
        let mut oracle = vec![0.0; 3];
        for _ in 0..10_000 {
            let x: Vec<f64> = ex
                .features
                .iter()
                .map(|v| (v + rng.gen_range(-0.05..=0.05)).clamp(0.0, 1.0))
                .collect();
            for (o, p) in oracle.iter_mut().zip(model.predict(&x).unwrap().probabilities) {
                *o += p / 10_000.0;
            }
        }
        for (g, o) in got.probabilities.iter().zip(&oracle) {
            assert!((g - o).abs() <= 0.01, "{g} vs {o}");
        }
    }
}

#[test]
fn stochastic_prediction_is_seed_deterministic() {
    let model = random_mlp(4, 3, 6, 8);
    let spec = StochasticSpec::new(0.1, 25).unwrap();
    let x = [0.1, 0.4, 0.7, 0.9];
    let a = predict_stochastic(&model, &spec, &x, 5).unwrap();
    assert_eq!(a, predict_stochastic(&model, &spec, &x, 5).unwrap());
    let noisy = noised_input(&x, 0.1, &mut seed::rng(5));
    assert!(noisy.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn ensemble_count_matches_direct_loop() {
    let members: Vec<ModelParams> = (0..5).map(|s| random_mlp(3, 3, 4, 100 + s)).collect();
    let ensemble = Ensemble::new(members.clone()).unwrap();
    let mut rng = seed::rng(9);
    for _ in 0..50 {
        let x = random_input(&mut rng, 3);
        let label = rng.gen_range(0..3);
        let mut expected = 0;
        for m in &members {
            let p = m.predict(&x).unwrap().probabilities;
            let mut arg = 0;
            for c in 1..p.len() {
                if p[c] > p[arg] {
                    arg = c;
                }
            }
            if arg != label {
                expected += 1;
            }
        }
        assert_eq!(ensemble_fooled_count(&ensemble, &x, label).unwrap(), expected);
    }
    assert!(ensemble_fooled_count(&ensemble, &[0.5], 0).is_err());
}

#[test]
fn loss_floor_is_respected() {
    let m = ModelParams::linear(&[vec![0.0], vec![100.0]], &[0.0, 0.0]).unwrap();
    let loss = m.loss(&[1.0], 0).unwrap();
    assert!((loss + PROB_FLOOR.ln()).abs() < 1e-12);
    assert_eq!(m.input_gradient(&[1.0], 0).unwrap(), vec![0.0]);
}

proptest! {
    #[test]
    fn model_text_round_trip(seed in any::<u64>(), d in 1usize..6, k in 2usize..5, h in 1usize..6) {
        let m = random_mlp(d, k, h, seed);
        prop_assert_eq!(ModelParams::from_text(&m.to_text()).unwrap(), m);
        let l = random_linear(d, k, seed);
        prop_assert_eq!(ModelParams::from_text(&l.to_text()).unwrap(), l);
    }

    #[test]
    fn gradient_property(seed in any::<u64>(), d in 1usize..6, k in 2usize..5) {
        let m = random_linear(d, k, seed);
        let mut rng = seed::rng(seed);
        let x = random_input(&mut rng, d);
        let label = rng.gen_range(0..k);
        prop_assume!(m.predict(&x).unwrap().probabilities[label] > 1e-9);
        prop_assert!(fd_relative_error(&m, &x, label) <= 1e-4);
    }
}
