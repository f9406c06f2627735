//! Scoring against a noisy model, and picking candidates with an ensemble.

use attack_bundle::prelude::*;

fn main() -> attack_bundle::Result<()> {
    let data = synth_dataset(200, 2, 2, 4)?;
    let members: Vec<ModelParams> = (0..5)
        .map(|s| {
            let cfg = TrainConfig {
                learning_rate: 0.1,
                epochs: 30,
                batch_size: 16,
                seed: s,
            };
            train(&data, Architecture::Mlp1 { hidden: 8 }, &cfg)
        })
        .collect::<attack_bundle::Result<_>>()?;
    let model = &members[0];

    let spec = StochasticSpec::new(0.05, 64)?;
    let x = &data.examples()[0];
    let exact = model.predict(&x.features)?;
    let noisy = predict_stochastic(model, &spec, &x.features, 1)?;
    println!("exact {:?}\nnoisy {:?}", exact.probabilities, noisy.probabilities);

    let attacks = [AttackConfig::pgd("pgd", 0.15, 0.03, 20, 2, true)];
    let criterion = Criterion::Misclassify;
    let budget = BudgetPolicy::exhaustive();
    let exact = bundle(model, &data, &attacks, &criterion, &budget, 0)?;
    let noisy = bundle_with(
        model,
        &data,
        &attacks,
        &criterion,
        &budget,
        0,
        &Scoring::Stochastic(spec),
    )?;
    println!(
        "bundled error: exact scoring {:.3}, noisy scoring {:.3}",
        exact.bundled_error_rate, noisy.bundled_error_rate
    );

    let ensemble = Ensemble::new(members.clone())?;
    let noise = AttackConfig::uniform_noise("noise", 0.2, 30);
    let mut transferred = 0;
    for (i, ex) in data.examples().iter().enumerate().take(50) {
        let candidates = noise.generate(model, i, ex, i as u64)?;
        let pick = select_by_ensemble(&ensemble, ex, &candidates)?;
        let fooled = ensemble_fooled_count(&ensemble, &pick.adversarial_input, ex.label)?;
        transferred += usize::from(fooled == ensemble.len());
    }
    println!(
        "examples where the pick fools all {} members: {transferred}/50",
        ensemble.len()
    );
    Ok(())
}
