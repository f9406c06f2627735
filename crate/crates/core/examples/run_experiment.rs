//! The end-to-end pipeline behind `attack-bundle run`, on a small config.

use attack_bundle::experiment::{run_experiment, ExperimentConfig};

const CONFIG: &str = "
seed = 1

[dataset]
source = synthetic
n = 200
d = 2
k = 3
separation = 8

[model]
architecture = mlp1
hidden = 16
epochs = 40

[bundle]
criterion = max_confidence
threshold = 0.5
epsilons = linspace(0, 0.2, 5)

[attack pgd]
variant = pgd
epsilon = 0.2
step_size = 0.05
num_steps = 40
num_restarts = 3

[attack noise]
variant = uniform_noise
epsilon = 0.2
num_samples = 50
";

fn main() -> attack_bundle::Result<()> {
    let config = ExperimentConfig::parse(CONFIG)?;
    let dir = std::env::temp_dir().join("attack-bundle-example");
    let output = run_experiment(&config, &dir)?;
    print!("{}", output.summary);
    for (name, bytes) in &output.files {
        println!("{name}: {} bytes", bytes.len());
    }
    println!("written to {}", dir.display());
    Ok(())
}
