//! Success and failure rates of a confidence-thresholding defender.

use attack_bundle::prelude::*;
use attack_bundle::report::{linspace, success_fail_curve};

fn main() -> attack_bundle::Result<()> {
    let data = synth_dataset(300, 2, 3, 5)?;
    let cfg = TrainConfig {
        learning_rate: 0.1,
        epochs: 60,
        batch_size: 32,
        seed: 1,
    };
    let model = train(&data, Architecture::Mlp1 { hidden: 32 }, &cfg)?;

    let attacks = [
        AttackConfig::pgd("pgd", 0.1, 0.02, 40, 3, true),
        AttackConfig::uniform_noise("noise", 0.1, 50),
    ];
    // Maximizing wrong-class confidence serves every threshold at once.
    let criterion = Criterion::max_confidence(0.5)?;
    let result = bundle(
        &model,
        &data,
        &attacks,
        &criterion,
        &BudgetPolicy::exhaustive(),
        3,
    )?;

    let curve = success_fail_curve(&model, &data, &result, &linspace(0.5, 0.99, 11))?;
    println!("{:>6} {:>8} {:>8}", "t", "success", "failure");
    for p in &curve.points {
        println!(
            "{:>6.3} {:>8.3} {:>8.3}",
            p.threshold, p.success_rate, p.failure_rate
        );
    }
    Ok(())
}
