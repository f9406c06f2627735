//! Small differentiable classifiers.
//!
//! Two architectures are supported: multinomial logistic regression
//! (`softmax-linear`) and a one-hidden-layer ReLU network (`mlp1`). Both
//! expose class probabilities and the gradient of the cross-entropy loss with
//! respect to the input, which is all the attacks need.
//!
//! Parameters are immutable after training, so every method here takes
//! `&self` and can be called from many threads at once.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

/// Probabilities are floored here before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// A clean input with its true label.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: usize,
}

impl Example {
    /// Builds an example, rejecting features that are non-finite or outside `[0, 1]`.
    pub fn new(features: Vec<f64>, label: usize) -> Result<Self> {
        if let Some((i, v)) = features
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::contract(format!("feature {i} = {v} lies outside [0, 1]")));
        }
        Ok(Self { features, label })
    }

    pub fn dimension(&self) -> usize {
        self.features.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    examples: Vec<Example>,
    num_classes: usize,
    dimension: usize,
}

impl Dataset {
    pub fn new(examples: Vec<Example>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::contract(format!(
                "a dataset needs at least 2 classes, got {num_classes}"
            )));
        }
        let dimension = examples.first().map_or(0, Example::dimension);
        for (i, ex) in examples.iter().enumerate() {
            if ex.dimension() != dimension {
                return Err(Error::Shape {
                    what: "dataset example",
                    expected: dimension,
                    got: ex.dimension(),
                });
            }
            if ex.label >= num_classes {
                return Err(Error::contract(format!(
                    "example {i} has label {} but there are only {num_classes} classes",
                    ex.label
                )));
            }
        }
        Ok(Self {
            examples,
            num_classes,
            dimension,
        })
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// The first `n` examples (or all of them if there are fewer).
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            examples: self.examples.iter().take(n).cloned().collect(),
            num_classes: self.num_classes,
            dimension: self.dimension,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    SoftmaxLinear,
    Mlp1 { hidden: usize },
}

impl Architecture {
    pub fn tag(&self) -> &'static str {
        match self {
            Architecture::SoftmaxLinear => "softmax-linear",
            Architecture::Mlp1 { .. } => "mlp1",
        }
    }
}

/// Fully connected layer, weights row-major with shape `(outputs, inputs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub outputs: usize,
    pub inputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(outputs: usize, inputs: usize) -> Self {
        Self {
            outputs,
            inputs,
            weights: vec![0.0; outputs * inputs],
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    /// `Wᵀ · delta`
    fn backward_input(&self, delta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.inputs];
        for (row, &d) in self.weights.chunks_exact(self.inputs).zip(delta) {
            if d == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * d;
            }
        }
        out
    }

    fn is_consistent(&self) -> bool {
        self.weights.len() == self.outputs * self.inputs && self.bias.len() == self.outputs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    architecture: Architecture,
    dimension: usize,
    num_classes: usize,
    layers: Vec<Dense>,
}

/// Output of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    pub predicted_class: usize,
    pub confidence: f64,
}

impl Prediction {
    pub fn from_probabilities(probabilities: Vec<f64>) -> Self {
        let predicted_class = argmax(&probabilities);
        let confidence = probabilities[predicted_class];
        Self {
            probabilities,
            predicted_class,
            confidence,
        }
    }

    /// Largest probability among the classes other than `label`.
    pub fn wrong_confidence(&self, label: usize) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|&(c, _)| c != label)
            .map(|(_, &p)| p)
            .fold(0.0, f64::max)
    }
}

/// Index of the largest entry; the lowest index wins exact ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Intermediate values kept for backpropagation.
struct Trace {
    /// Hidden pre-activations (mlp1 only).
    hidden_pre: Vec<f64>,
    /// Input to the output layer.
    penultimate: Vec<f64>,
    probabilities: Vec<f64>,
}

impl ModelParams {
    /// Builds a model from explicit layers, checking every shape and value.
    pub fn from_layers(
        architecture: Architecture,
        dimension: usize,
        num_classes: usize,
        layers: Vec<Dense>,
    ) -> Result<Self> {
        let expected: Vec<(usize, usize)> = match architecture {
            Architecture::SoftmaxLinear => vec![(num_classes, dimension)],
            Architecture::Mlp1 { hidden } => vec![(hidden, dimension), (num_classes, hidden)],
        };
        if num_classes < 2 || dimension == 0 {
            return Err(Error::contract(format!(
                "model needs d >= 1 and k >= 2, got d = {dimension}, k = {num_classes}"
            )));
        }
        if let Architecture::Mlp1 { hidden: 0 } = architecture {
            return Err(Error::contract("mlp1 hidden width must be positive"));
        }
        if layers.len() != expected.len() {
            return Err(Error::Shape {
                what: "layer count",
                expected: expected.len(),
                got: layers.len(),
            });
        }
        for (layer, &(outputs, inputs)) in layers.iter().zip(&expected) {
            if !layer.is_consistent() || layer.outputs != outputs || layer.inputs != inputs {
                return Err(Error::contract(format!(
                    "layer shape {}x{} does not match expected {outputs}x{inputs}",
                    layer.outputs, layer.inputs
                )));
            }
            if layer.weights.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(Error::contract("model parameters must be finite"));
            }
        }
        Ok(Self {
            architecture,
            dimension,
            num_classes,
            layers,
        })
    }

    /// All-zero parameters.
    pub fn zeros(architecture: Architecture, dimension: usize, num_classes: usize) -> Result<Self> {
        let layers = match architecture {
            Architecture::SoftmaxLinear => vec![Dense::zeros(num_classes, dimension)],
            Architecture::Mlp1 { hidden } => {
                vec![Dense::zeros(hidden, dimension), Dense::zeros(num_classes, hidden)]
            }
        };
        Self::from_layers(architecture, dimension, num_classes, layers)
    }

    /// Softmax-linear model with class weight rows `weights[c]` and `biases[c]`.
    pub fn linear(weights: &[Vec<f64>], biases: &[f64]) -> Result<Self> {
        let num_classes = weights.len();
        let dimension = weights.first().map_or(0, Vec::len);
        if biases.len() != num_classes {
            return Err(Error::Shape {
                what: "bias vector",
                expected: num_classes,
                got: biases.len(),
            });
        }
        if let Some(bad) = weights.iter().find(|w| w.len() != dimension) {
            return Err(Error::Shape {
                what: "weight row",
                expected: dimension,
                got: bad.len(),
            });
        }
        let layer = Dense {
            outputs: num_classes,
            inputs: dimension,
            weights: weights.concat(),
            bias: biases.to_vec(),
        };
        Self::from_layers(Architecture::SoftmaxLinear, dimension, num_classes, vec![layer])
    }

    /// Randomly initialized parameters: zeros for softmax-linear, He-uniform
    /// hidden weights and Glorot-uniform output weights for mlp1.
    pub fn initialize(
        architecture: Architecture,
        dimension: usize,
        num_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut model = Self::zeros(architecture, dimension, num_classes)?;
        if let Architecture::Mlp1 { hidden } = architecture {
            let mut rng = seed::rng(seed);
            let he = (6.0 / dimension as f64).sqrt();
            let glorot = (6.0 / (hidden + num_classes) as f64).sqrt();
            for w in &mut model.layers[0].weights {
                *w = rng.gen_range(-he..he);
            }
            for w in &mut model.layers[1].weights {
                *w = rng.gen_range(-glorot..glorot);
            }
        }
        Ok(model)
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.dimension {
            return Err(Error::Shape {
                what: "model input",
                expected: self.dimension,
                got: input.len(),
            });
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("model input contains a non-finite value"));
        }
        Ok(())
    }

    fn trace(&self, input: &[f64]) -> Trace {
        match self.architecture {
            Architecture::SoftmaxLinear => {
                let logits = self.layers[0].forward(input);
                Trace {
                    hidden_pre: Vec::new(),
                    penultimate: input.to_vec(),
                    probabilities: softmax(&logits),
                }
            }
            Architecture::Mlp1 { .. } => {
                let hidden_pre = self.layers[0].forward(input);
                let hidden: Vec<f64> = hidden_pre.iter().map(|&z| z.max(0.0)).collect();
                let logits = self.layers[1].forward(&hidden);
                Trace {
                    hidden_pre,
                    penultimate: hidden,
                    probabilities: softmax(&logits),
                }
            }
        }
    }

    pub fn logits(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        Ok(match self.architecture {
            Architecture::SoftmaxLinear => self.layers[0].forward(input),
            Architecture::Mlp1 { .. } => {
                let hidden: Vec<f64> = self.layers[0]
                    .forward(input)
                    .into_iter()
                    .map(|z| z.max(0.0))
                    .collect();
                self.layers[1].forward(&hidden)
            }
        })
    }

    pub fn predict(&self, input: &[f64]) -> Result<Prediction> {
        self.check_input(input)?;
        Ok(Prediction::from_probabilities(self.trace(input).probabilities))
    }

    /// Cross-entropy of `label` at `input`, with probabilities floored at [`PROB_FLOOR`].
    pub fn loss(&self, input: &[f64], label: usize) -> Result<f64> {
        self.check_label(label)?;
        let p = self.predict(input)?.probabilities[label];
        Ok(-p.max(PROB_FLOOR).ln())
    }

    fn check_label(&self, label: usize) -> Result<()> {
        if label >= self.num_classes {
            return Err(Error::contract(format!(
                "label {label} out of range for {} classes",
                self.num_classes
            )));
        }
        Ok(())
    }

    /// Gradient of the cross-entropy loss for `target_label` with respect to the input.
    ///
    /// Where the probability floor is active the loss is locally constant and the
    /// gradient is zero.
    pub fn input_gradient(&self, input: &[f64], target_label: usize) -> Result<Vec<f64>> {
        self.check_input(input)?;
        self.check_label(target_label)?;
        let trace = self.trace(input);
        if trace.probabilities[target_label] < PROB_FLOOR {
            return Ok(vec![0.0; self.dimension]);
        }
        let mut delta = trace.probabilities;
        delta[target_label] -= 1.0;
        Ok(match self.architecture {
            Architecture::SoftmaxLinear => self.layers[0].backward_input(&delta),
            Architecture::Mlp1 { .. } => {
                let mut hidden_delta = self.layers[1].backward_input(&delta);
                for (d, &z) in hidden_delta.iter_mut().zip(&trace.hidden_pre) {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                }
                self.layers[0].backward_input(&hidden_delta)
            }
        })
    }

    /// Adds this example's parameter gradient into `grads` and returns its loss.
    fn accumulate_param_gradient(&self, ex: &Example, grads: &mut [Dense]) -> f64 {
        let trace = self.trace(&ex.features);
        let loss = -trace.probabilities[ex.label].max(PROB_FLOOR).ln();
        let mut delta = trace.probabilities;
        delta[ex.label] -= 1.0;

        let out = self.layers.len() - 1;
        add_outer(&mut grads[out], &delta, &trace.penultimate);
        if let Architecture::Mlp1 { .. } = self.architecture {
            let mut hidden_delta = self.layers[1].backward_input(&delta);
            for (d, &z) in hidden_delta.iter_mut().zip(&trace.hidden_pre) {
                if z <= 0.0 {
                    *d = 0.0;
                }
            }
            add_outer(&mut grads[0], &hidden_delta, &ex.features);
        }
        loss
    }

    /// Mean cross-entropy over the dataset.
    pub fn mean_loss(&self, dataset: &Dataset) -> Result<f64> {
        let mut total = 0.0;
        for ex in dataset.examples() {
            total += self.loss(&ex.features, ex.label)?;
        }
        Ok(total / dataset.len().max(1) as f64)
    }

    /// Fraction of examples whose predicted class differs from the label.
    pub fn error_rate(&self, dataset: &Dataset) -> Result<f64> {
        let mut wrong = 0usize;
        for ex in dataset.examples() {
            if self.predict(&ex.features)?.predicted_class != ex.label {
                wrong += 1;
            }
        }
        Ok(wrong as f64 / dataset.len().max(1) as f64)
    }

    /// Serializes to the flat text format read by [`ModelParams::from_text`].
    ///
    /// Floats are written in shortest round-trip form, so a save/load cycle is exact.
    pub fn to_text(&self) -> String {
        let mut out = String::from("attack-bundle-model v1\n");
        let _ = writeln!(out, "architecture {}", self.architecture.tag());
        let hidden = match self.architecture {
            Architecture::Mlp1 { hidden } => hidden,
            Architecture::SoftmaxLinear => 0,
        };
        let _ = writeln!(out, "shape {} {} {}", self.dimension, self.num_classes, hidden);
        for layer in &self.layers {
            let _ = writeln!(out, "weights {} {}", layer.outputs, layer.inputs);
            for row in layer.weights.chunks_exact(layer.inputs) {
                out.push_str(&join(row));
                out.push('\n');
            }
            let _ = writeln!(out, "bias {}", layer.outputs);
            out.push_str(&join(&layer.bias));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        parse_model(text).map_err(|message| Error::ModelFormat {
            path: "<text>".into(),
            message,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        parse_model(&text).map_err(|message| Error::ModelFormat {
            path: path.to_path_buf(),
            message,
        })
    }
}

fn add_outer(grad: &mut Dense, delta: &[f64], input: &[f64]) {
    for ((row, b), &d) in grad
        .weights
        .chunks_exact_mut(grad.inputs)
        .zip(grad.bias.iter_mut())
        .zip(delta)
    {
        *b += d;
        if d == 0.0 {
            continue;
        }
        for (w, &x) in row.iter_mut().zip(input) {
            *w += d * x;
        }
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_model(text: &str) -> std::result::Result<ModelParams, String> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| format!("unexpected end of file, expected {what}"))
    };

    let (n, header) = next("header")?;
    if header != "attack-bundle-model v1" {
        return Err(format!("line {n}: unrecognized header `{header}`"));
    }
    let (n, arch_line) = next("architecture")?;
    let tag = arch_line
        .strip_prefix("architecture ")
        .ok_or_else(|| format!("line {n}: expected `architecture <tag>`"))?;
    let (n, shape_line) = next("shape")?;
    let shape = keyed_usizes(shape_line, "shape", 3).map_err(|e| format!("line {n}: {e}"))?;
    let (dimension, num_classes, hidden) = (shape[0], shape[1], shape[2]);
    let architecture = match tag {
        "softmax-linear" => Architecture::SoftmaxLinear,
        "mlp1" => Architecture::Mlp1 { hidden },
        other => return Err(format!("line {n}: unknown architecture `{other}`")),
    };
    let layer_count = match architecture {
        Architecture::SoftmaxLinear => 1,
        Architecture::Mlp1 { .. } => 2,
    };

    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let (n, l) = next("weights")?;
        let dims = keyed_usizes(l, "weights", 2).map_err(|e| format!("line {n}: {e}"))?;
        let (outputs, inputs) = (dims[0], dims[1]);
        let mut weights = Vec::with_capacity(outputs * inputs);
        for _ in 0..outputs {
            let (n, row) = next("weight row")?;
            let values = parse_floats(row).map_err(|e| format!("line {n}: {e}"))?;
            if values.len() != inputs {
                return Err(format!(
                    "line {n}: expected {inputs} weights, found {}",
                    values.len()
                ));
            }
            weights.extend(values);
        }
        let (n, l) = next("bias")?;
        let bias_len = keyed_usizes(l, "bias", 1).map_err(|e| format!("line {n}: {e}"))?[0];
        let (n, row) = next("bias values")?;
        let bias = parse_floats(row).map_err(|e| format!("line {n}: {e}"))?;
        if bias.len() != bias_len || bias_len != outputs {
            return Err(format!("line {n}: bias length mismatch"));
        }
        layers.push(Dense {
            outputs,
            inputs,
            weights,
            bias,
        });
    }
    if let Some((n, extra)) = lines.next() {
        return Err(format!("line {n}: trailing content `{extra}`"));
    }
    ModelParams::from_layers(architecture, dimension, num_classes, layers).map_err(|e| e.to_string())
}

fn keyed_usizes(line: &str, key: &str, count: usize) -> std::result::Result<Vec<usize>, String> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(format!("expected `{key}` line, found `{line}`"));
    }
    let values = parts
        .map(|p| p.parse::<usize>().map_err(|e| format!("bad integer `{p}`: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if values.len() != count {
        return Err(format!("`{key}` expects {count} integers"));
    }
    Ok(values)
}

fn parse_floats(line: &str) -> std::result::Result<Vec<f64>, String> {
    line.split_whitespace()
        .map(|p| p.parse::<f64>().map_err(|e| format!("bad number `{p}`: {e}")))
        .collect()
}

/// Minibatch gradient-descent settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 200,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// Trains by minibatch SGD on mean cross-entropy.
///
/// The dataset is reshuffled every epoch from a stream seeded by `config.seed`,
/// so training is bit-reproducible. The returned parameters are those with the
/// lowest full-dataset loss among the initial point and every epoch end.
pub fn train(dataset: &Dataset, architecture: Architecture, config: &TrainConfig) -> Result<ModelParams> {
    if dataset.is_empty() {
        return Err(Error::contract("cannot train on an empty dataset"));
    }
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0)
        || config.epochs == 0
        || config.batch_size == 0
    {
        return Err(Error::contract(
            "learning rate, epochs and batch size must be positive",
        ));
    }

    let mut model = ModelParams::initialize(
        architecture,
        dataset.dimension(),
        dataset.num_classes(),
        seed::derive(config.seed, &[0]),
    )?;
    let mut rng = seed::rng(seed::derive(config.seed, &[1]));
    let mut order: Vec<usize> = (0..dataset.len()).collect();

    let mut best_loss = model.mean_loss(dataset)?;
    if !best_loss.is_finite() {
        return Err(Error::TrainingDiverged { epoch: 0 });
    }
    let mut best = model.clone();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut grads: Vec<Dense> = model
                .layers
                .iter()
                .map(|l| Dense::zeros(l.outputs, l.inputs))
                .collect();
            for &i in batch {
                model.accumulate_param_gradient(&dataset.examples()[i], &mut grads);
            }
            let scale = config.learning_rate / batch.len() as f64;
            for (layer, grad) in model.layers.iter_mut().zip(&grads) {
                for (w, g) in layer.weights.iter_mut().zip(&grad.weights) {
                    *w -= scale * g;
                }
                for (b, g) in layer.bias.iter_mut().zip(&grad.bias) {
                    *b -= scale * g;
                }
            }
        }
        let loss = model.mean_loss(dataset)?;
        let finite_params = model
            .layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()));
        if !loss.is_finite() || !finite_params {
            return Err(Error::TrainingDiverged { epoch });
        }
        if loss < best_loss {
            best_loss = loss;
            best = model.clone();
        }
    }
    Ok(best)
}

/// Input noise model for a stochastic classifier queried `calls` times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticSpec {
    pub noise_scale: f64,
    pub calls: usize,
}

impl StochasticSpec {
    pub fn new(noise_scale: f64, calls: usize) -> Result<Self> {
        if !(noise_scale.is_finite() && noise_scale >= 0.0) || calls == 0 {
            return Err(Error::contract(
                "stochastic spec needs noise_scale >= 0 and at least one call",
            ));
        }
        Ok(Self { noise_scale, calls })
    }
}

/// Adds `Uniform(-scale, scale)` noise to each coordinate and clips to `[0, 1]`.
pub fn noised_input<R: Rng + ?Sized>(input: &[f64], scale: f64, rng: &mut R) -> Vec<f64> {
    input
        .iter()
        .map(|&v| (v + rng.gen_range(-scale..=scale)).clamp(0.0, 1.0))
        .collect()
}

/// Mean prediction over `spec.calls` noisy evaluations.
///
/// Noise for call `j` is drawn in order from a single ChaCha8 stream seeded by
/// `seed`. With zero noise this is exactly [`ModelParams::predict`].
pub fn predict_stochastic(
    model: &ModelParams,
    spec: &StochasticSpec,
    input: &[f64],
    seed: u64,
) -> Result<Prediction> {
    model.check_input(input)?;
    if spec.calls == 0 {
        return Err(Error::contract("stochastic prediction needs at least one call"));
    }
    if spec.noise_scale == 0.0 {
        return model.predict(input);
    }
    let mut rng = seed::rng(seed);
    if spec.calls == 1 {
        return model.predict(&noised_input(input, spec.noise_scale, &mut rng));
    }
    let mut mean = vec![0.0; model.num_classes()];
    for _ in 0..spec.calls {
        let noisy = noised_input(input, spec.noise_scale, &mut rng);
        for (m, p) in mean.iter_mut().zip(model.trace(&noisy).probabilities) {
            *m += p;
        }
    }
    let total: f64 = mean.iter().sum();
    for m in &mut mean {
        *m /= total;
    }
    Ok(Prediction::from_probabilities(mean))
}

/// Models sharing input dimension and class count.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<ModelParams>,
}

impl Ensemble {
    pub fn new(members: Vec<ModelParams>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::contract("an ensemble needs at least one member"))?;
        let (d, k) = (first.dimension(), first.num_classes());
        if let Some(m) = members.iter().find(|m| m.dimension() != d) {
            return Err(Error::Shape {
                what: "ensemble member input",
                expected: d,
                got: m.dimension(),
            });
        }
        if let Some(m) = members.iter().find(|m| m.num_classes() != k) {
            return Err(Error::Shape {
                what: "ensemble member classes",
                expected: k,
                got: m.num_classes(),
            });
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[ModelParams] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Number of ensemble members whose prediction differs from `true_label`.
pub fn ensemble_fooled_count(ensemble: &Ensemble, input: &[f64], true_label: usize) -> Result<usize> {
    let mut fooled = 0;
    for member in ensemble.members() {
        if member.predict(input)?.predicted_class != true_label {
            fooled += 1;
        }
    }
    Ok(fooled)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(w: &[f64]) -> ModelParams {
        ModelParams::linear(&[vec![0.0; w.len()], w.to_vec()], &[0.0, 0.0]).unwrap()
    }

    #[test]
    fn zero_model_is_uniform_and_picks_class_zero() {
        let m = ModelParams::zeros(Architecture::SoftmaxLinear, 3, 4).unwrap();
        let p = m.predict(&[0.2, 0.9, 0.5]).unwrap();
        for &q in &p.probabilities {
            assert!((q - 0.25).abs() < 1e-15);
        }
        assert_eq!(p.predicted_class, 0);
        assert_eq!(p.confidence, p.probabilities[0]);
    }

    #[test]
    fn binary_sigmoid_value() {
        let p = binary(&[1.0, 0.0]).predict(&[0.8, 0.3]).unwrap();
        let sigmoid = 1.0 / (1.0 + (-0.8f64).exp());
        assert!((p.probabilities[1] - sigmoid).abs() < 1e-15);
        assert!((p.probabilities[1] - 0.6900).abs() < 5e-5);
        assert_eq!(p.predicted_class, 1);
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }

    #[test]
    fn shape_errors() {
        let m = binary(&[1.0, 2.0]);
        assert!(matches!(m.predict(&[0.1]), Err(Error::Shape { .. })));
        assert!(matches!(
            m.input_gradient(&[0.1, 0.2, 0.3], 0),
            Err(Error::Shape { .. })
        ));
        assert!(m.input_gradient(&[0.1, 0.2], 2).is_err());
    }

    #[test]
    fn zero_model_has_zero_gradient() {
        let m = ModelParams::zeros(Architecture::Mlp1 { hidden: 5 }, 3, 3).unwrap();
        assert_eq!(m.input_gradient(&[0.1, 0.5, 0.9], 1).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn binary_gradient_closed_form() {
        // dL/dx for label 0 of a binary model with rows (0, w) is p1 * w.
        let w = [1.5, -0.7, 0.3];
        let m = binary(&w);
        let x = [0.2, 0.6, 0.9];
        let p1 = m.predict(&x).unwrap().probabilities[1];
        let g = m.input_gradient(&x, 0).unwrap();
        for (gi, wi) in g.iter().zip(&w) {
            assert!((gi - p1 * wi).abs() < 1e-15);
        }
        // ...and -p0 * w for label 1.
        let g = m.input_gradient(&x, 1).unwrap();
        for (gi, wi) in g.iter().zip(&w) {
            assert!((gi + (1.0 - p1) * wi).abs() < 1e-12);
        }
    }

    #[test]
    fn example_rejects_out_of_range() {
        assert!(Example::new(vec![0.0, 1.0], 0).is_ok());
        assert!(Example::new(vec![1.01], 0).is_err());
        assert!(Example::new(vec![f64::NAN], 0).is_err());
    }

    #[test]
    fn dataset_invariants() {
        let a = Example::new(vec![0.1, 0.2], 0).unwrap();
        let b = Example::new(vec![0.1], 1).unwrap();
        assert!(Dataset::new(vec![a.clone()], 1).is_err());
        assert!(Dataset::new(vec![a.clone(), b], 2).is_err());
        assert!(Dataset::new(vec![Example::new(vec![0.5, 0.5], 3).unwrap()], 2).is_err());
        assert_eq!(Dataset::new(vec![a], 2).unwrap().dimension(), 2);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let m = ModelParams::initialize(Architecture::Mlp1 { hidden: 4 }, 3, 2, 11).unwrap();
        let back = ModelParams::from_text(&m.to_text()).unwrap();
        assert_eq!(m, back);
        assert!(ModelParams::from_text("attack-bundle-model v2\n").is_err());
    }

    #[test]
    fn single_example_fit() {
        let ex = Example::new(vec![0.3, 0.7, 0.1], 2).unwrap();
        let data = Dataset::new(vec![ex.clone(); 8], 3).unwrap();
        for arch in [Architecture::SoftmaxLinear, Architecture::Mlp1 { hidden: 6 }] {
            let cfg = TrainConfig {
                learning_rate: 0.5,
                epochs: 30,
                batch_size: 4,
                seed: 3,
            };
            let m = train(&data, arch, &cfg).unwrap();
            assert_eq!(m.predict(&ex.features).unwrap().predicted_class, 2);
        }
    }

    #[test]
    fn training_divergence_is_reported() {
        let data = Dataset::new(
            vec![
                Example::new(vec![1.0, 1.0], 0).unwrap(),
                Example::new(vec![0.0, 1.0], 1).unwrap(),
            ],
            2,
        )
        .unwrap();
        let cfg = TrainConfig {
            learning_rate: f64::MAX,
            epochs: 5,
            batch_size: 1,
            seed: 0,
        };
        match train(&data, Architecture::SoftmaxLinear, &cfg) {
            Err(Error::TrainingDiverged { epoch }) => assert!((1..=5).contains(&epoch)),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn stochastic_zero_noise_matches_predict() {
        let m = ModelParams::initialize(Architecture::Mlp1 { hidden: 4 }, 3, 3, 5).unwrap();
        let x = [0.4, 0.5, 0.6];
        for calls in [1, 7, 100] {
            let spec = StochasticSpec::new(0.0, calls).unwrap();
            assert_eq!(
                predict_stochastic(&m, &spec, &x, 9).unwrap(),
                m.predict(&x).unwrap()
            );
        }
    }

    #[test]
    fn stochastic_single_call_matches_noised_predict() {
        let m = ModelParams::initialize(Architecture::Mlp1 { hidden: 4 }, 3, 3, 5).unwrap();
        let x = [0.4, 0.5, 0.6];
        let spec = StochasticSpec::new(0.2, 1).unwrap();
        let noisy = noised_input(&x, 0.2, &mut seed::rng(42));
        assert_eq!(
            predict_stochastic(&m, &spec, &x, 42).unwrap(),
            m.predict(&noisy).unwrap()
        );
    }

    #[test]
    fn ensemble_counts() {
        let right = binary(&[1.0, 1.0]); // predicts class 1 on interior points
        let wrong = binary(&[-1.0, -1.0]);
        let x = [0.5, 0.5];
        let e = Ensemble::new(vec![right.clone(), right.clone(), right.clone()]).unwrap();
        assert_eq!(ensemble_fooled_count(&e, &x, 1).unwrap(), 0);
        let e = Ensemble::new(vec![wrong]).unwrap();
        assert_eq!(ensemble_fooled_count(&e, &x, 1).unwrap(), 1);
        assert!(Ensemble::new(vec![]).is_err());
    }
}
