//! L∞-constrained attacks: FGSM, randomly restarted PGD and uniform noise.
//!
//! Every attack ascends the cross-entropy of the true label and keeps its
//! iterate inside the feasible box
//! `[max(clean - ε, 0), min(clean + ε, 1)]`, which is both the ε-ball around
//! the clean input and the valid input range.

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Example, ModelParams};
use crate::seed;

/// Slack allowed on the L∞ budget when validating candidates.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum AttackVariant {
    Fgsm,
    Pgd {
        step_size: f64,
        num_steps: usize,
        num_restarts: usize,
        random_init: bool,
        /// Index of this config's first restart. Restart `r` is seeded from
        /// `(seed, r)`, so configs covering disjoint restart ranges of one
        /// seed stream reproduce a single multi-restart config.
        first_restart: usize,
    },
    UniformNoise {
        num_samples: usize,
    },
}

/// A declarative attack in a bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    pub attack_id: String,
    pub epsilon: f64,
    pub variant: AttackVariant,
    /// Name mixed into per-example seeds; defaults to `attack_id`.
    pub seed_stream: Option<String>,
}

impl AttackConfig {
    pub fn fgsm(attack_id: impl Into<String>, epsilon: f64) -> Self {
        Self {
            attack_id: attack_id.into(),
            epsilon,
            variant: AttackVariant::Fgsm,
            seed_stream: None,
        }
    }

    pub fn pgd(
        attack_id: impl Into<String>,
        epsilon: f64,
        step_size: f64,
        num_steps: usize,
        num_restarts: usize,
        random_init: bool,
    ) -> Self {
        Self {
            attack_id: attack_id.into(),
            epsilon,
            variant: AttackVariant::Pgd {
                step_size,
                num_steps,
                num_restarts,
                random_init,
                first_restart: 0,
            },
            seed_stream: None,
        }
    }

    pub fn uniform_noise(attack_id: impl Into<String>, epsilon: f64, num_samples: usize) -> Self {
        Self {
            attack_id: attack_id.into(),
            epsilon,
            variant: AttackVariant::UniformNoise { num_samples },
            seed_stream: None,
        }
    }

    pub fn with_seed_stream(mut self, stream: impl Into<String>) -> Self {
        self.seed_stream = Some(stream.into());
        self
    }

    /// Sets the first restart index of a PGD config; no-op for other variants.
    pub fn with_first_restart(mut self, first: usize) -> Self {
        if let AttackVariant::Pgd { first_restart, .. } = &mut self.variant {
            *first_restart = first;
        }
        self
    }

    pub fn variant_tag(&self) -> &'static str {
        match self.variant {
            AttackVariant::Fgsm => "fgsm",
            AttackVariant::Pgd { .. } => "pgd",
            AttackVariant::UniformNoise { .. } => "uniform_noise",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::contract(format!(
                    "attack {}: {name} must be finite and positive, got {v}",
                    self.attack_id
                )))
            }
        };
        if self.attack_id.is_empty() || self.attack_id.contains([',', '\n', '"']) {
            return Err(Error::contract(format!(
                "attack id `{}` must be non-empty and free of commas, quotes and newlines",
                self.attack_id
            )));
        }
        positive("epsilon", self.epsilon)?;
        match self.variant {
            AttackVariant::Fgsm => {}
            AttackVariant::Pgd {
                step_size,
                num_restarts,
                ..
            } => {
                positive("step_size", step_size)?;
                if num_restarts == 0 {
                    return Err(Error::contract(format!(
                        "attack {}: num_restarts must be at least 1",
                        self.attack_id
                    )));
                }
            }
            AttackVariant::UniformNoise { num_samples } => {
                if num_samples == 0 {
                    return Err(Error::contract(format!(
                        "attack {}: num_samples must be at least 1",
                        self.attack_id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// An adversarial input produced for one clean example.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub example_index: usize,
    pub adversarial_input: Vec<f64>,
    pub attack_id: String,
    pub restart_index: usize,
}

/// Anything that can produce candidates for a clean example.
///
/// [`AttackConfig`] is the built-in implementation; the bundler accepts any
/// implementor, so query-only or externally computed attacks can be bundled too.
pub trait Attack: Sync {
    fn id(&self) -> &str;

    /// Name mixed into the per-example seed.
    fn seed_stream(&self) -> &str {
        self.id()
    }

    /// L∞ budget the candidates must respect, if known.
    fn epsilon(&self) -> Option<f64> {
        None
    }

    fn generate(
        &self,
        model: &ModelParams,
        example_index: usize,
        example: &Example,
        seed: u64,
    ) -> Result<Vec<Candidate>>;
}

impl Attack for AttackConfig {
    fn id(&self) -> &str {
        &self.attack_id
    }

    fn seed_stream(&self) -> &str {
        self.seed_stream.as_deref().unwrap_or(&self.attack_id)
    }

    fn epsilon(&self) -> Option<f64> {
        Some(self.epsilon)
    }

    fn generate(
        &self,
        model: &ModelParams,
        example_index: usize,
        example: &Example,
        seed: u64,
    ) -> Result<Vec<Candidate>> {
        self.validate()?;
        match self.variant {
            AttackVariant::Fgsm => {
                fgsm_with_id(model, example_index, example, self.epsilon, &self.attack_id).map(|c| vec![c])
            }
            AttackVariant::Pgd { .. } => pgd(model, example_index, example, self, seed),
            AttackVariant::UniformNoise { num_samples } => Ok(noise_with_id(
                example_index,
                example,
                self.epsilon,
                num_samples,
                seed,
                &self.attack_id,
            )),
        }
    }
}

impl<A: Attack + ?Sized> Attack for Box<A> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn seed_stream(&self) -> &str {
        (**self).seed_stream()
    }

    fn epsilon(&self) -> Option<f64> {
        (**self).epsilon()
    }

    fn generate(
        &self,
        model: &ModelParams,
        example_index: usize,
        example: &Example,
        seed: u64,
    ) -> Result<Vec<Candidate>> {
        (**self).generate(model, example_index, example, seed)
    }
}

/// Clamps `input` to the intersection of the ε-box around `clean` and `[0, 1]`.
pub fn project(input: &[f64], clean: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if input.len() != clean.len() {
        return Err(Error::Shape {
            what: "projection input",
            expected: clean.len(),
            got: input.len(),
        });
    }
    let mut out = input.to_vec();
    project_in_place(&mut out, clean, epsilon);
    Ok(out)
}

fn project_in_place(x: &mut [f64], clean: &[f64], epsilon: f64) {
    for (v, &c) in x.iter_mut().zip(clean) {
        let lo = (c - epsilon).max(0.0);
        let hi = (c + epsilon).min(1.0);
        *v = v.clamp(lo, hi);
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn signed_step(x: &mut [f64], grad: &[f64], step: f64) {
    for (v, &g) in x.iter_mut().zip(grad) {
        *v += step * sign(g);
    }
}

fn check_example(model: &ModelParams, example: &Example) -> Result<()> {
    if example.dimension() != model.dimension() {
        return Err(Error::Shape {
            what: "attack example",
            expected: model.dimension(),
            got: example.dimension(),
        });
    }
    if example.label >= model.num_classes() {
        return Err(Error::contract(format!(
            "label {} out of range for {} classes",
            example.label,
            model.num_classes()
        )));
    }
    Ok(())
}

fn finite_gradient(
    model: &ModelParams,
    x: &[f64],
    example_index: usize,
    example: &Example,
    attack_id: &str,
    restart: usize,
    step: usize,
) -> Result<Vec<f64>> {
    let grad = model.input_gradient(x, example.label)?;
    if grad.iter().all(|g| g.is_finite()) {
        Ok(grad)
    } else {
        Err(Error::AttackFailed {
            example_index,
            attack_id: attack_id.to_string(),
            restart,
            step,
            reason: "non-finite gradient".into(),
        })
    }
}

/// Fast gradient sign method: one signed step of size ε, then projection.
pub fn fgsm(model: &ModelParams, example_index: usize, example: &Example, epsilon: f64) -> Result<Candidate> {
    fgsm_with_id(model, example_index, example, epsilon, "fgsm")
}

fn fgsm_with_id(
    model: &ModelParams,
    example_index: usize,
    example: &Example,
    epsilon: f64,
    attack_id: &str,
) -> Result<Candidate> {
    check_example(model, example)?;
    let clean = &example.features;
    let grad = finite_gradient(model, clean, example_index, example, attack_id, 0, 0)?;
    let mut x = clean.clone();
    signed_step(&mut x, &grad, epsilon);
    project_in_place(&mut x, clean, epsilon);
    Ok(Candidate {
        example_index,
        adversarial_input: x,
        attack_id: attack_id.to_string(),
        restart_index: 0,
    })
}

/// Projected signed-gradient ascent, one candidate per restart.
///
/// Restart `r` draws its random start from a stream seeded by
/// `seed::derive(seed, &[r])`.
pub fn pgd(
    model: &ModelParams,
    example_index: usize,
    example: &Example,
    config: &AttackConfig,
    seed: u64,
) -> Result<Vec<Candidate>> {
    let AttackVariant::Pgd {
        step_size,
        num_steps,
        num_restarts,
        random_init,
        first_restart,
    } = config.variant
    else {
        return Err(Error::contract(format!(
            "attack {} is not a pgd config",
            config.attack_id
        )));
    };
    check_example(model, example)?;
    let clean = &example.features;
    let epsilon = config.epsilon;

    (first_restart..first_restart + num_restarts)
        .map(|restart| {
            let mut x = clean.clone();
            if random_init {
                let mut rng = seed::rng(seed::derive(seed, &[restart as u64]));
                for v in &mut x {
                    *v += rng.gen_range(-epsilon..=epsilon);
                }
                project_in_place(&mut x, clean, epsilon);
            }
            for step in 0..num_steps {
                let grad = finite_gradient(
                    model,
                    &x,
                    example_index,
                    example,
                    &config.attack_id,
                    restart,
                    step,
                )?;
                signed_step(&mut x, &grad, step_size);
                project_in_place(&mut x, clean, epsilon);
            }
            Ok(Candidate {
                example_index,
                adversarial_input: x,
                attack_id: config.attack_id.clone(),
                restart_index: restart,
            })
        })
        .collect()
}

/// Uniform samples from the feasible box; candidate `s` has `restart_index = s`.
pub fn uniform_noise(
    example_index: usize,
    example: &Example,
    epsilon: f64,
    num_samples: usize,
    seed: u64,
) -> Result<Vec<Candidate>> {
    if num_samples == 0 {
        return Err(Error::contract("uniform noise needs at least one sample"));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::contract("epsilon must be finite and positive"));
    }
    Ok(noise_with_id(
        example_index,
        example,
        epsilon,
        num_samples,
        seed,
        "uniform_noise",
    ))
}

fn noise_with_id(
    example_index: usize,
    example: &Example,
    epsilon: f64,
    num_samples: usize,
    seed: u64,
    attack_id: &str,
) -> Vec<Candidate> {
    let clean = &example.features;
    let mut rng = seed::rng(seed);
    (0..num_samples)
        .map(|s| {
            let mut x: Vec<f64> = clean
                .iter()
                .map(|&c| c + rng.gen_range(-epsilon..=epsilon))
                .collect();
            project_in_place(&mut x, clean, epsilon);
            Candidate {
                example_index,
                adversarial_input: x,
                attack_id: attack_id.to_string(),
                restart_index: s,
            }
        })
        .collect()
}

/// L∞ distance between two vectors of equal length.
pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Checks that `candidate` lies in `[0, 1]^d` and within `epsilon` of `clean`.
pub fn validate_candidate(candidate: &Candidate, clean: &[f64], epsilon: f64) -> Result<()> {
    let x = &candidate.adversarial_input;
    if x.len() != clean.len() {
        return Err(Error::Shape {
            what: "candidate",
            expected: clean.len(),
            got: x.len(),
        });
    }
    if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::contract(format!(
            "candidate from {} has feature {v} outside [0, 1]",
            candidate.attack_id
        )));
    }
    let dist = linf_distance(x, clean);
    if dist > epsilon + FEASIBILITY_TOL {
        return Err(Error::contract(format!(
            "candidate from {} is {dist} from clean, budget {epsilon}",
            candidate.attack_id
        )));
    }
    Ok(())
}

/// Dumps candidates as `example_index,attack_id,restart_index,x0,..`.
pub fn write_candidates_csv<W: Write>(candidates: &[Candidate], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let d = candidates.first().map_or(0, |c| c.adversarial_input.len());
    let mut header = vec![
        "example_index".to_string(),
        "attack_id".to_string(),
        "restart_index".to_string(),
    ];
    header.extend((0..d).map(|j| format!("x{j}")));
    wtr.write_record(&header)?;
    for c in candidates {
        let mut row = vec![
            c.example_index.to_string(),
            c.attack_id.clone(),
            c.restart_index.to_string(),
        ];
        row.extend(c.adversarial_input.iter().map(f64::to_string));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}
