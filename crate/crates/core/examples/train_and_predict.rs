//! Train both architectures on synthetic blobs, save one model and reload it.

use attack_bundle::prelude::*;

fn main() -> attack_bundle::Result<()> {
    let data = synth_blobs(&BlobSpec {
        n: 400,
        d: 2,
        k: 3,
        seed: 1,
        separation: 6.0,
    })?;
    let cfg = TrainConfig {
        learning_rate: 0.1,
        epochs: 60,
        batch_size: 32,
        seed: 2,
    };

    for arch in [Architecture::SoftmaxLinear, Architecture::Mlp1 { hidden: 32 }] {
        let model = train(&data, arch, &cfg)?;
        println!(
            "{:<15} loss {:.4}  error {:.3}",
            arch.tag(),
            model.mean_loss(&data)?,
            model.error_rate(&data)?
        );
    }

    let model = train(&data, Architecture::Mlp1 { hidden: 32 }, &cfg)?;
    let path = std::env::temp_dir().join("attack-bundle-example-model.txt");
    model.save(&path)?;
    let reloaded = ModelParams::load(&path)?;
    assert_eq!(reloaded, model);

    let x = &data.examples()[0];
    let p = reloaded.predict(&x.features)?;
    println!(
        "first example: label {}, predicted {} with confidence {:.3}",
        x.label, p.predicted_class, p.confidence
    );
    println!(
        "gradient of the loss wrt the input: {:?}",
        reloaded.input_gradient(&x.features, x.label)?
    );
    Ok(())
}
