//! Error rate against the allowed L∞ radius from a min-norm bundle.
//!
//! Fixed-budget PGD tends to use its whole budget, so the suite mixes attacks
//! at several radii and lets the bundle keep the smallest successful one.

use attack_bundle::prelude::*;
use attack_bundle::report::{linspace, norm_curve};

fn main() -> attack_bundle::Result<()> {
    let data = synth_dataset(300, 2, 3, 5)?;
    let cfg = TrainConfig {
        learning_rate: 0.1,
        epochs: 60,
        batch_size: 32,
        seed: 1,
    };
    let model = train(&data, Architecture::Mlp1 { hidden: 32 }, &cfg)?;

    let attacks: Vec<AttackConfig> = linspace(0.02, 0.3, 15)
        .into_iter()
        .enumerate()
        .map(|(i, eps)| AttackConfig::pgd(format!("pgd-{i}"), eps, eps / 5.0, 20, 2, true))
        .collect();
    let result = bundle(
        &model,
        &data,
        &attacks,
        &Criterion::MinNorm,
        &BudgetPolicy::exhaustive(),
        9,
    )?;

    let curve = norm_curve(&result, &linspace(0.0, 0.3, 16))?;
    for p in &curve.points {
        println!(
            "eps {:.2}  error {:.3}  {}",
            p.epsilon,
            p.error_rate,
            "#".repeat((p.error_rate * 50.0) as usize)
        );
    }
    Ok(())
}
