//! Bundling an attack defined outside the crate through the `Attack` trait.

use attack_bundle::prelude::*;

/// Pushes every feature to the nearer edge of the ε-box that moves it toward 0.5.
struct TowardCenter {
    epsilon: f64,
}

impl Attack for TowardCenter {
    fn id(&self) -> &str {
        "toward-center"
    }

    fn epsilon(&self) -> Option<f64> {
        Some(self.epsilon)
    }

    fn generate(
        &self,
        _model: &ModelParams,
        example_index: usize,
        example: &Example,
        _seed: u64,
    ) -> attack_bundle::Result<Vec<Candidate>> {
        let moved: Vec<f64> = example
            .features
            .iter()
            .map(|&v| {
                if v < 0.5 {
                    v + self.epsilon
                } else {
                    v - self.epsilon
                }
            })
            .collect();
        Ok(vec![Candidate {
            example_index,
            adversarial_input: project(&moved, &example.features, self.epsilon)?,
            attack_id: self.id().to_string(),
            restart_index: 0,
        }])
    }
}

fn main() -> attack_bundle::Result<()> {
    let data = synth_dataset(300, 2, 3, 2)?;
    let model = train(&data, Architecture::SoftmaxLinear, &TrainConfig::default())?;

    let attacks: Vec<Box<dyn Attack>> = vec![
        Box::new(TowardCenter { epsilon: 0.15 }),
        Box::new(AttackConfig::pgd("pgd", 0.15, 0.03, 20, 2, true)),
    ];
    let r = bundle_with(
        &model,
        &data,
        &attacks,
        &Criterion::Misclassify,
        &BudgetPolicy::exhaustive(),
        0,
        &Scoring::Exact,
    )?;
    for (id, rate) in r.attack_ids().iter().zip(&r.per_attack_error_rates) {
        println!("{id:<14} {rate:.3}");
    }
    println!("{:<14} {:.3}", "bundled", r.bundled_error_rate);
    Ok(())
}
