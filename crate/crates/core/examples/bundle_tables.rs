//! Bundle three attacks and print the MAT, WAT and bundled tables.

use attack_bundle::prelude::*;
use attack_bundle::report::{make_tables, write_rates_csv};

fn main() -> attack_bundle::Result<()> {
    let data = synth_blobs(&BlobSpec {
        n: 300,
        d: 2,
        k: 3,
        seed: 1,
        separation: 4.0,
    })?;
    let cfg = TrainConfig {
        learning_rate: 0.1,
        epochs: 60,
        batch_size: 32,
        seed: 2,
    };
    let model = train(&data, Architecture::Mlp1 { hidden: 32 }, &cfg)?;

    let attacks = [
        AttackConfig::fgsm("fgsm", 0.15),
        AttackConfig::pgd("pgd", 0.15, 0.05, 40, 3, true),
        AttackConfig::uniform_noise("noise", 0.15, 50),
    ];
    let criterion = Criterion::max_confidence(0.5)?;
    let result = bundle(
        &model,
        &data,
        &attacks,
        &criterion,
        &BudgetPolicy::exhaustive(),
        7,
    )?;

    let tables = make_tables(&result);
    println!("{}\n{}\n{}", tables.mat, tables.wat, tables.bundled);

    let mut csv = Vec::new();
    write_rates_csv(&tables, &mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));

    // Which attack supplied each example's chosen candidate.
    for id in result.attack_ids().iter().map(String::as_str).chain(["none"]) {
        let n = result
            .chosen
            .iter()
            .filter(|c| c.candidate.attack_id == id)
            .count();
        println!("chosen from {id}: {n}");
    }
    Ok(())
}
