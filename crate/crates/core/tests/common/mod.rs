#![allow(dead_code)]

use attack_bundle::prelude::*;
use attack_bundle::seed;
use rand::Rng;

pub fn random_input<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(0.0..1.0)).collect()
}

pub fn random_linear(d: usize, k: usize, seed: u64) -> ModelParams {
    let mut rng = seed::rng(seed);
    let w: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect())
        .collect();
    let b: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ModelParams::linear(&w, &b).unwrap()
}

/// Randomly initialized MLP with weights doubled and random biases.
pub fn random_mlp(d: usize, k: usize, hidden: usize, seed: u64) -> ModelParams {
    let base = ModelParams::initialize(Architecture::Mlp1 { hidden }, d, k, seed).unwrap();
    let mut rng = seed::rng(seed ^ 0xABCD);
    let layers = base
        .layers()
        .iter()
        .cloned()
        .map(|mut l| {
            for w in l.weights.iter_mut() {
                *w *= 2.0;
            }
            for b in l.bias.iter_mut() {
                *b = rng.gen_range(-0.5..0.5);
            }
            l
        })
        .collect();
    ModelParams::from_layers(Architecture::Mlp1 { hidden }, d, k, layers).unwrap()
}

pub fn random_dataset(n: usize, d: usize, k: usize, seed: u64) -> Dataset {
    let mut rng = seed::rng(seed);
    let examples = (0..n)
        .map(|i| Example::new(random_input(&mut rng, d), i % k).unwrap())
        .collect();
    Dataset::new(examples, k).unwrap()
}

/// Largest loss over the corners of the feasible box around `clean`.
///
/// For a binary linear model the loss is monotone in a linear function of the
/// input, so its maximum over the box is attained at a corner.
pub fn corner_max_loss(model: &ModelParams, clean: &[f64], label: usize, epsilon: f64) -> f64 {
    let d = clean.len();
    let mut best = f64::NEG_INFINITY;
    let mut x = vec![0.0; d];
    for mask in 0u32..(1 << d) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = if mask >> i & 1 == 1 {
                (clean[i] + epsilon).min(1.0)
            } else {
                (clean[i] - epsilon).max(0.0)
            };
        }
        best = best.max(model.loss(&x, label).unwrap());
    }
    best
}

pub fn trained_blob_model(n: usize, seed: u64) -> (ModelParams, Dataset) {
    let data = synth_blobs(&BlobSpec {
        n,
        d: 2,
        k: 3,
        seed,
        separation: 10.0,
    })
    .unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.1,
        epochs: 60,
        batch_size: 32,
        seed: seed + 1,
    };
    let model = train(&data, Architecture::Mlp1 { hidden: 32 }, &cfg).unwrap();
    (model, data)
}

/// 1-D binary model predicting class 1 exactly when `x > 0.5`.
pub fn threshold_model() -> ModelParams {
    ModelParams::linear(&[vec![0.0], vec![10.0]], &[0.0, -5.0]).unwrap()
}

/// Attack with a fixed outcome per example: it moves `x` from 0.4 to 0.6
/// (fooling [`threshold_model`]) exactly where `fools[i]` is set.
pub struct Scripted {
    pub id: String,
    pub fools: Vec<bool>,
}

impl Scripted {
    pub fn new(id: &str, fools: &[bool]) -> Self {
        Self {
            id: id.to_string(),
            fools: fools.to_vec(),
        }
    }
}

impl Attack for Scripted {
    fn id(&self) -> &str {
        &self.id
    }

    fn epsilon(&self) -> Option<f64> {
        Some(0.2)
    }

    fn generate(
        &self,
        _model: &ModelParams,
        example_index: usize,
        example: &Example,
        _seed: u64,
    ) -> attack_bundle::Result<Vec<Candidate>> {
        let shift = if self.fools[example_index] { 0.2 } else { 0.0 };
        Ok(vec![Candidate {
            example_index,
            adversarial_input: vec![example.features[0] + shift],
            attack_id: self.id.clone(),
            restart_index: 0,
        }])
    }
}

/// `n` copies of the clean point 0.4 with label 0.
pub fn threshold_dataset(n: usize) -> Dataset {
    Dataset::new((0..n).map(|_| Example::new(vec![0.4], 0).unwrap()).collect(), 2).unwrap()
}

/// Bundles scripted attacks built from the columns of `matrix`.
pub fn bundle_matrix(matrix: &[Vec<bool>]) -> BundleResult {
    let n = matrix.len();
    let m = matrix.first().map_or(0, |r| r.len());
    let attacks: Vec<Scripted> = (0..m)
        .map(|j| {
            let col: Vec<bool> = matrix.iter().map(|r| r[j]).collect();
            Scripted::new(&format!("attack-{}", j + 1), &col)
        })
        .collect();
    bundle_with(
        &threshold_model(),
        &threshold_dataset(n),
        &attacks,
        &Criterion::Misclassify,
        &BudgetPolicy::exhaustive(),
        0,
        &Scoring::Exact,
    )
    .unwrap()
}
