//! FGSM, restarted PGD and uniform noise against one trained model.

use attack_bundle::attacks::{linf_distance, validate_candidate};
use attack_bundle::prelude::*;

fn main() -> attack_bundle::Result<()> {
    let data = synth_dataset(300, 2, 2, 3)?;
    let cfg = TrainConfig {
        learning_rate: 0.1,
        epochs: 50,
        batch_size: 32,
        seed: 0,
    };
    let model = train(&data, Architecture::Mlp1 { hidden: 16 }, &cfg)?;
    let eps = 0.1;

    let attacks = [
        AttackConfig::fgsm("fgsm", eps),
        AttackConfig::pgd("pgd", eps, 0.02, 40, 5, true),
        AttackConfig::uniform_noise("noise", eps, 50),
    ];
    for attack in &attacks {
        let mut fooled = 0;
        let mut loss = 0.0;
        for (i, ex) in data.examples().iter().enumerate() {
            let candidates = attack.generate(&model, i, ex, i as u64)?;
            let mut best: f64 = f64::NEG_INFINITY;
            let mut any_wrong = false;
            for c in &candidates {
                validate_candidate(c, &ex.features, eps)?;
                assert!(linf_distance(&c.adversarial_input, &ex.features) <= eps + 1e-9);
                best = best.max(model.loss(&c.adversarial_input, ex.label)?);
                any_wrong |= model.predict(&c.adversarial_input)?.predicted_class != ex.label;
            }
            loss += best;
            fooled += usize::from(any_wrong);
        }
        println!(
            "{:<6} mean loss {:.4}  error {:.3}",
            attack.attack_id,
            loss / data.len() as f64,
            fooled as f64 / data.len() as f64
        );
    }
    println!("clean error {:.3}", model.error_rate(&data)?);
    Ok(())
}
