//! Early stopping and unit caps: same bundled error for less work.

use attack_bundle::prelude::*;

fn main() -> attack_bundle::Result<()> {
    let data = synth_dataset(300, 2, 3, 8)?;
    let cfg = TrainConfig {
        learning_rate: 0.1,
        epochs: 40,
        batch_size: 32,
        seed: 0,
    };
    let model = train(&data, Architecture::Mlp1 { hidden: 16 }, &cfg)?;

    // Cheap attacks first, so easy examples never reach the expensive one.
    let attacks = [
        AttackConfig::fgsm("fgsm", 0.2),
        AttackConfig::uniform_noise("noise", 0.2, 20),
        AttackConfig::pgd("pgd", 0.2, 0.02, 200, 5, true),
    ];
    let criterion = Criterion::Misclassify;
    let policies = [
        ("exhaustive", BudgetPolicy::exhaustive()),
        ("early stop", BudgetPolicy::for_criterion(&criterion)),
        ("cap 2", BudgetPolicy::for_criterion(&criterion).with_max_units(2)),
    ];
    for (name, policy) in policies {
        let r = bundle(&model, &data, &attacks, &criterion, &policy, 1)?;
        let stopped = r.computation_log.iter().filter(|l| l.stopped_early).count();
        println!(
            "{name:<11} bundled {:.3}  units {:>4}  stopped early {stopped:>3}  complete columns {:?}",
            r.bundled_error_rate,
            r.total_units(),
            r.complete_columns
        );
    }
    Ok(())
}
