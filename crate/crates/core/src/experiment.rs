//! Experiment configuration and the end-to-end driver.
//!
//! Configs are flat `key = value` files. Top-level keys come first, then
//! `[dataset]`, `[model]` and `[bundle]` sections and one `[attack <id>]`
//! section per attack, in bundle order. `#` starts a comment.
//!
//! ```text
//! seed = 7
//! output_dir = results
//!
//! [dataset]
//! source = synthetic
//! n = 500
//!
//! [attack pgd-cheap]
//! variant = pgd
//! epsilon = 0.3
//! step_size = 0.1
//! num_steps = 40
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::attacks::{write_candidates_csv, AttackConfig, AttackVariant, Candidate};
use crate::bundler::{bundle, BudgetPolicy, BundleResult, Criterion, Goal};
use crate::data::{self, BlobSpec};
use crate::error::{Error, Result};
use crate::model::{train, Architecture, Dataset, ModelParams, TrainConfig};
use crate::report::{
    self, linspace, make_tables, norm_curve, success_fail_curve, wat_underestimation_report, GapRow,
    NormCurve, SuccessFailCurve, Tables,
};

/// Overrides `output_dir` when set.
pub const OUTPUT_DIR_ENV: &str = "ATTACK_BUNDLE_OUTPUT_DIR";

/// CSV artifacts every successful run writes.
pub const ARTIFACTS: [&str; 6] = [
    "rates.csv",
    "sf_curve.csv",
    "norm_curve.csv",
    "wat_gap.csv",
    "bundle.csv",
    "bundle_summary.csv",
];

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Synthetic(BlobSpec),
    Csv {
        path: PathBuf,
        num_classes: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub train: TrainConfig,
    /// Load parameters from this file instead of training.
    pub load: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads for attack execution; 0 uses all cores.
    pub workers: usize,
    pub dataset: DatasetSource,
    pub model: ModelSpec,
    pub criterion: Criterion,
    /// Stop attacking an example once the criterion's goal is met.
    pub early_stop: bool,
    /// Also write the chosen candidates to `candidates.csv`.
    pub dump_candidates: bool,
    pub max_units: Option<usize>,
    pub thresholds: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub gap_sizes: Vec<usize>,
    pub attacks: Vec<AttackConfig>,
}

impl Default for ExperimentConfig {
    /// Synthetic blobs with ε = 0.3 on `[0, 1]` inputs, a cheap 40×0.1 PGD,
    /// an expensive 1000×0.04 PGD and uniform noise, all randomly restarted.
    fn default() -> Self {
        Self {
            seed: 7,
            output_dir: PathBuf::from("results"),
            workers: 0,
            dataset: DatasetSource::Synthetic(BlobSpec {
                n: 500,
                d: 2,
                k: 3,
                seed: 1,
                separation: 10.0,
            }),
            model: ModelSpec {
                architecture: Architecture::Mlp1 { hidden: 32 },
                train: TrainConfig {
                    learning_rate: 0.1,
                    epochs: 60,
                    batch_size: 32,
                    seed: 2,
                },
                load: None,
            },
            criterion: Criterion::MaxConfidence { threshold: 0.5 },
            early_stop: false,
            dump_candidates: false,
            max_units: None,
            thresholds: linspace(0.5, 0.99, 50),
            epsilons: linspace(0.0, 0.3, 31),
            gap_sizes: vec![1, 2, 10, 100, 1000],
            attacks: vec![
                AttackConfig::pgd("pgd-cheap", 0.3, 0.1, 40, 10, true),
                AttackConfig::pgd("pgd-expensive", 0.3, 0.04, 1000, 10, true),
                AttackConfig::uniform_noise("noise", 0.3, 100),
            ],
        }
    }
}

fn config_err(line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

struct Section {
    name: String,
    arg: Option<String>,
    line: usize,
    entries: HashMap<String, Entry>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            (e.value.clone(), e.line)
        })
    }

    fn required(&mut self, key: &str) -> Result<(String, usize)> {
        let line = self.line;
        self.take(key)
            .ok_or_else(|| config_err(line, key, format!("missing in [{}]", self.name)))
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|e| config_err(line, key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    fn parsed_or<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn parsed_required<T: std::str::FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let line = self.line;
        self.parsed(key)?
            .ok_or_else(|| config_err(line, key, format!("missing in [{}]", self.name)))
    }

    fn finish(self) -> Result<()> {
        let mut unused: Vec<(&String, &Entry)> = self.entries.iter().filter(|(_, e)| !e.used).collect();
        unused.sort_by_key(|(_, e)| e.line);
        match unused.first() {
            Some((key, e)) => Err(config_err(e.line, key, format!("unknown key in [{}]", self.name))),
            None => Ok(()),
        }
    }
}

fn split_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections = vec![Section {
        name: String::new(),
        arg: None,
        line: 1,
        entries: HashMap::new(),
    }];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('[') {
            let inner = header
                .strip_suffix(']')
                .ok_or_else(|| config_err(line, content, "unterminated section header"))?
                .trim();
            let mut parts = inner.split_whitespace();
            let name = parts.next().unwrap_or("").to_string();
            let arg = parts.next().map(str::to_string);
            if parts.next().is_some() {
                return Err(config_err(line, inner, "section header has too many words"));
            }
            sections.push(Section {
                name,
                arg,
                line,
                entries: HashMap::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| config_err(line, content, "expected `key = value`"))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let section = sections.last_mut().expect("root section");
        if section.entries.contains_key(&key) {
            return Err(config_err(line, &key, "duplicate key"));
        }
        section.entries.insert(
            key,
            Entry {
                value,
                line,
                used: false,
            },
        );
    }
    Ok(sections)
}

fn parse_bool(value: &str, line: usize, field: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(config_err(
            line,
            field,
            format!("expected true or false, got `{other}`"),
        )),
    }
}

/// Comma-separated numbers, or `linspace(start, stop, count)`.
fn parse_f64_list(value: &str, line: usize, field: &str) -> Result<Vec<f64>> {
    if let Some(args) = value.strip_prefix("linspace(").and_then(|r| r.strip_suffix(')')) {
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(config_err(line, field, "linspace takes (start, stop, count)"));
        }
        let start: f64 = parts[0]
            .parse()
            .map_err(|_| config_err(line, field, format!("bad start `{}`", parts[0])))?;
        let stop: f64 = parts[1]
            .parse()
            .map_err(|_| config_err(line, field, format!("bad stop `{}`", parts[1])))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| config_err(line, field, format!("bad count `{}`", parts[2])))?;
        return Ok(linspace(start, stop, count));
    }
    parse_list(value, line, field)
}

fn parse_list<T: std::str::FromStr>(value: &str, line: usize, field: &str) -> Result<Vec<T>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|p| {
            let p = p.trim();
            p.parse()
                .map_err(|_| config_err(line, field, format!("bad list entry `{p}`")))
        })
        .collect()
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let defaults = ExperimentConfig::default();
        let mut sections = split_sections(text)?.into_iter();
        let mut root = sections.next().expect("root section");

        let seed = root.parsed_or("seed", defaults.seed)?;
        let output_dir = root
            .take("output_dir")
            .map_or(defaults.output_dir.clone(), |(v, _)| PathBuf::from(v));
        let workers = root.parsed_or("workers", 0usize)?;
        root.finish()?;

        let mut config = ExperimentConfig {
            seed,
            output_dir,
            workers,
            attacks: Vec::new(),
            ..defaults
        };
        let mut seen = Vec::<String>::new();
        for mut section in sections {
            let line = section.line;
            let name = section.name.clone();
            if name != "attack" {
                if section.arg.is_some() {
                    return Err(config_err(line, &name, "only attack sections take an id"));
                }
                if seen.contains(&name) {
                    return Err(config_err(line, &name, "duplicate section"));
                }
                seen.push(name.clone());
            }
            match name.as_str() {
                "dataset" => config.dataset = parse_dataset(&mut section)?,
                "model" => config.model = parse_model(&mut section)?,
                "bundle" => parse_bundle(&mut section, &mut config)?,
                "attack" => {
                    let attack = parse_attack(&mut section)?;
                    if config.attacks.iter().any(|a| a.attack_id == attack.attack_id) {
                        return Err(config_err(line, &attack.attack_id, "duplicate attack id"));
                    }
                    config.attacks.push(attack);
                }
                other => return Err(config_err(line, other, "unknown section")),
            }
            section.finish()?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(0, &path.display().to_string(), format!("cannot read config: {e}")))?;
        Self::parse(&text)
    }

    /// Serializes to the format read by [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(out, "workers = {}", self.workers);

        out.push_str("\n[dataset]\n");
        match &self.dataset {
            DatasetSource::Synthetic(b) => {
                let _ = writeln!(out, "source = synthetic");
                let _ = writeln!(out, "n = {}\nd = {}\nk = {}", b.n, b.d, b.k);
                let _ = writeln!(out, "seed = {}\nseparation = {}", b.seed, b.separation);
            }
            DatasetSource::Csv { path, num_classes } => {
                let _ = writeln!(out, "source = csv\npath = {}", path.display());
                if let Some(k) = num_classes {
                    let _ = writeln!(out, "classes = {k}");
                }
            }
        }

        out.push_str("\n[model]\n");
        let _ = writeln!(out, "architecture = {}", self.model.architecture.tag());
        if let Architecture::Mlp1 { hidden } = self.model.architecture {
            let _ = writeln!(out, "hidden = {hidden}");
        }
        let t = &self.model.train;
        let _ = writeln!(out, "learning_rate = {}", t.learning_rate);
        let _ = writeln!(
            out,
            "epochs = {}\nbatch_size = {}\nseed = {}",
            t.epochs, t.batch_size, t.seed
        );
        if let Some(p) = &self.model.load {
            let _ = writeln!(out, "load = {}", p.display());
        }

        out.push_str("\n[bundle]\n");
        let _ = writeln!(out, "criterion = {}", self.criterion.tag());
        if let Criterion::MaxConfidence { threshold } = self.criterion {
            let _ = writeln!(out, "threshold = {threshold}");
        }
        let _ = writeln!(out, "early_stop = {}", self.early_stop);
        let _ = writeln!(out, "dump_candidates = {}", self.dump_candidates);
        if let Some(m) = self.max_units {
            let _ = writeln!(out, "max_units = {m}");
        }
        let _ = writeln!(out, "thresholds = {}", join(&self.thresholds));
        let _ = writeln!(out, "epsilons = {}", join(&self.epsilons));
        let _ = writeln!(out, "gap_sizes = {}", join(&self.gap_sizes));

        for a in &self.attacks {
            let _ = writeln!(out, "\n[attack {}]", a.attack_id);
            let _ = writeln!(out, "variant = {}", a.variant_tag());
            let _ = writeln!(out, "epsilon = {}", a.epsilon);
            match a.variant {
                AttackVariant::Fgsm => {}
                AttackVariant::Pgd {
                    step_size,
                    num_steps,
                    num_restarts,
                    random_init,
                    first_restart,
                } => {
                    let _ = writeln!(out, "step_size = {step_size}\nnum_steps = {num_steps}");
                    let _ = writeln!(out, "num_restarts = {num_restarts}\nrandom_init = {random_init}");
                    if first_restart != 0 {
                        let _ = writeln!(out, "first_restart = {first_restart}");
                    }
                }
                AttackVariant::UniformNoise { num_samples } => {
                    let _ = writeln!(out, "num_samples = {num_samples}");
                }
            }
            if let Some(s) = &a.seed_stream {
                let _ = writeln!(out, "seed_stream = {s}");
            }
        }
        out
    }

    pub fn budget(&self) -> BudgetPolicy {
        BudgetPolicy {
            max_units_per_example: self.max_units,
            goal: if self.early_stop {
                Goal::for_criterion(&self.criterion)
            } else {
                Goal::Exhaustive
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.criterion.validate()?;
        for a in &self.attacks {
            a.validate()?;
        }
        if self.max_units == Some(0) {
            return Err(Error::contract("max_units must be positive"));
        }
        if self.gap_sizes.contains(&0) {
            return Err(Error::contract("gap sizes must be at least 1"));
        }
        Ok(())
    }
}

fn parse_dataset(s: &mut Section) -> Result<DatasetSource> {
    let (source, line) = s.required("source")?;
    match source.as_str() {
        "synthetic" => Ok(DatasetSource::Synthetic(BlobSpec {
            n: s.parsed_required("n")?,
            d: s.parsed_required("d")?,
            k: s.parsed_required("k")?,
            seed: s.parsed_or("seed", 0)?,
            separation: s.parsed_or("separation", 3.0)?,
        })),
        "csv" => Ok(DatasetSource::Csv {
            path: PathBuf::from(s.required("path")?.0),
            num_classes: s.parsed("classes")?,
        }),
        other => Err(config_err(
            line,
            "source",
            format!("unknown dataset source `{other}`"),
        )),
    }
}

fn parse_model(s: &mut Section) -> Result<ModelSpec> {
    let (tag, line) = s.required("architecture")?;
    let architecture = match tag.as_str() {
        "softmax-linear" => Architecture::SoftmaxLinear,
        "mlp1" => Architecture::Mlp1 {
            hidden: s.parsed_required("hidden")?,
        },
        other => {
            return Err(config_err(
                line,
                "architecture",
                format!("unknown architecture `{other}`"),
            ))
        }
    };
    let defaults = TrainConfig::default();
    Ok(ModelSpec {
        architecture,
        train: TrainConfig {
            learning_rate: s.parsed_or("learning_rate", defaults.learning_rate)?,
            epochs: s.parsed_or("epochs", defaults.epochs)?,
            batch_size: s.parsed_or("batch_size", defaults.batch_size)?,
            seed: s.parsed_or("seed", defaults.seed)?,
        },
        load: s.take("load").map(|(v, _)| PathBuf::from(v)),
    })
}

fn parse_bundle(s: &mut Section, config: &mut ExperimentConfig) -> Result<()> {
    if let Some((tag, line)) = s.take("criterion") {
        config.criterion = match tag.as_str() {
            "misclassify" => Criterion::Misclassify,
            "min_norm" => Criterion::MinNorm,
            "max_confidence" => {
                let threshold: f64 = s.parsed_required("threshold")?;
                Criterion::max_confidence(threshold)
                    .map_err(|e| config_err(line, "threshold", e.to_string()))?
            }
            other => {
                return Err(config_err(
                    line,
                    "criterion",
                    format!("unknown criterion `{other}`"),
                ))
            }
        };
    }
    if let Some((v, line)) = s.take("early_stop") {
        config.early_stop = parse_bool(&v, line, "early_stop")?;
    }
    if let Some((v, line)) = s.take("dump_candidates") {
        config.dump_candidates = parse_bool(&v, line, "dump_candidates")?;
    }
    config.max_units = s.parsed("max_units")?;
    if let Some((v, line)) = s.take("thresholds") {
        config.thresholds = parse_f64_list(&v, line, "thresholds")?;
    }
    if let Some((v, line)) = s.take("epsilons") {
        config.epsilons = parse_f64_list(&v, line, "epsilons")?;
    }
    if let Some((v, line)) = s.take("gap_sizes") {
        config.gap_sizes = parse_list(&v, line, "gap_sizes")?;
    }
    Ok(())
}

fn parse_attack(s: &mut Section) -> Result<AttackConfig> {
    let id = s
        .arg
        .clone()
        .ok_or_else(|| config_err(s.line, "attack", "attack sections need an id: [attack <id>]"))?;
    let (variant, line) = s.required("variant")?;
    let epsilon: f64 = s.parsed_required("epsilon")?;
    let mut attack = match variant.as_str() {
        "fgsm" => AttackConfig::fgsm(id, epsilon),
        "pgd" => {
            let random_init = match s.take("random_init") {
                Some((v, l)) => parse_bool(&v, l, "random_init")?,
                None => true,
            };
            AttackConfig::pgd(
                id,
                epsilon,
                s.parsed_required("step_size")?,
                s.parsed_required("num_steps")?,
                s.parsed_or("num_restarts", 1)?,
                random_init,
            )
            .with_first_restart(s.parsed_or("first_restart", 0)?)
        }
        "uniform_noise" => AttackConfig::uniform_noise(id, epsilon, s.parsed_required("num_samples")?),
        other => {
            return Err(config_err(
                line,
                "variant",
                format!("unknown attack variant `{other}`"),
            ))
        }
    };
    attack.seed_stream = s.take("seed_stream").map(|(v, _)| v);
    attack
        .validate()
        .map_err(|e| config_err(s.line, &attack.attack_id, e.to_string()))?;
    Ok(attack)
}

/// Everything an experiment produced, in memory.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub dataset: Dataset,
    pub model: ModelParams,
    pub result: BundleResult,
    pub tables: Tables,
    pub sf_curve: SuccessFailCurve,
    pub norm_result: BundleResult,
    pub norm_curve: NormCurve,
    pub gap: Vec<GapRow>,
    pub summary: String,
    /// Rendered artifacts, keyed by file name, in [`ARTIFACTS`] order, then
    /// `candidates.csv` when requested.
    pub files: Vec<(String, Vec<u8>)>,
}

pub fn load_dataset(source: &DatasetSource) -> Result<Dataset> {
    match source {
        DatasetSource::Synthetic(spec) => data::synth_blobs(spec),
        DatasetSource::Csv { path, num_classes } => data::load_csv(path, *num_classes),
    }
}

/// Loads the model named in the config or trains a fresh one.
pub fn obtain_model(config: &ExperimentConfig, dataset: &Dataset) -> Result<ModelParams> {
    let model = match &config.model.load {
        Some(path) => ModelParams::load(path)?,
        None => train(dataset, config.model.architecture, &config.model.train)?,
    };
    if model.dimension() != dataset.dimension() || model.num_classes() < dataset.num_classes() {
        return Err(Error::Shape {
            what: "model vs dataset dimension",
            expected: dataset.dimension(),
            got: model.dimension(),
        });
    }
    Ok(model)
}

/// Runs the whole pipeline without touching the file system (except for
/// CSV datasets and saved models named in the config).
pub fn compute_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let run = || -> Result<ExperimentOutput> {
        let dataset = load_dataset(&config.dataset)?;
        let model = obtain_model(config, &dataset)?;
        let result = bundle(
            &model,
            &dataset,
            &config.attacks,
            &config.criterion,
            &config.budget(),
            config.seed,
        )?;
        let norm_result =
            if config.criterion == Criterion::MinNorm && !config.early_stop && config.max_units.is_none() {
                result.clone()
            } else {
                bundle(
                    &model,
                    &dataset,
                    &config.attacks,
                    &Criterion::MinNorm,
                    &BudgetPolicy::exhaustive(),
                    config.seed,
                )?
            };
        let tables = make_tables(&result);
        let sf_curve = success_fail_curve(&model, &dataset, &result, &config.thresholds)?;
        let norm = norm_curve(&norm_result, &config.epsilons)?;
        let gap = wat_underestimation_report(&config.gap_sizes)?;
        let summary = render_summary(config, &dataset, &model, &result, &tables)?;

        let mut files = Vec::new();
        let mut buf = Vec::new();
        report::write_rates_csv(&tables, &mut buf)?;
        files.push(("rates.csv".to_string(), std::mem::take(&mut buf)));
        report::write_sf_curve_csv(&sf_curve, &mut buf)?;
        files.push(("sf_curve.csv".to_string(), std::mem::take(&mut buf)));
        report::write_norm_curve_csv(&norm, &mut buf)?;
        files.push(("norm_curve.csv".to_string(), std::mem::take(&mut buf)));
        report::write_gap_csv(&gap, &mut buf)?;
        files.push(("wat_gap.csv".to_string(), std::mem::take(&mut buf)));
        result.write_csv(&mut buf)?;
        files.push(("bundle.csv".to_string(), std::mem::take(&mut buf)));
        result.write_summary_csv(&mut buf)?;
        files.push(("bundle_summary.csv".to_string(), std::mem::take(&mut buf)));
        if config.dump_candidates {
            let chosen: Vec<Candidate> = result.chosen.iter().map(|c| c.candidate.clone()).collect();
            write_candidates_csv(&chosen, &mut buf)?;
            files.push(("candidates.csv".to_string(), std::mem::take(&mut buf)));
        }

        Ok(ExperimentOutput {
            dataset,
            model,
            result,
            tables,
            sf_curve,
            norm_result,
            norm_curve: norm,
            gap,
            summary,
            files,
        })
    };
    if config.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::contract(format!("cannot start worker pool: {e}")))?;
        pool.install(run)
    } else {
        run()
    }
}

/// Output directory after applying the environment override.
pub fn resolve_output_dir(config: &ExperimentConfig) -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map_or_else(|| config.output_dir.clone(), PathBuf::from)
}

/// Computes everything first, then writes the CSV artifacts, `summary.txt`
/// and `model.txt` into `output_dir`.
pub fn run_experiment(config: &ExperimentConfig, output_dir: &Path) -> Result<ExperimentOutput> {
    let output = compute_experiment(config)?;
    std::fs::create_dir_all(output_dir)?;
    for (name, bytes) in &output.files {
        std::fs::write(output_dir.join(name), bytes)?;
    }
    std::fs::write(output_dir.join("summary.txt"), &output.summary)?;
    output.model.save(&output_dir.join("model.txt"))?;
    Ok(output)
}

fn render_summary(
    config: &ExperimentConfig,
    dataset: &Dataset,
    model: &ModelParams,
    result: &BundleResult,
    tables: &Tables,
) -> Result<String> {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "dataset: {} examples, d = {}, k = {}",
        dataset.len(),
        dataset.dimension(),
        dataset.num_classes()
    );
    let _ = writeln!(s, "model: {}", model.architecture().tag());
    let _ = writeln!(s, "clean error: {:.4}", model.error_rate(dataset)?);
    if config.attacks.is_empty() {
        let _ = writeln!(s, "no attacks configured; bundled error equals clean error");
        return Ok(s);
    }
    let _ = writeln!(s, "criterion: {}", result.criterion.tag());
    let _ = writeln!(s, "attack units spent: {}", result.total_units());
    for table in [&tables.mat, &tables.wat, &tables.bundled] {
        let _ = writeln!(s, "{table}");
    }
    let worst = tables.wat.wat_max.unwrap_or(0.0);
    let _ = writeln!(
        s,
        "bundled error {:.4} vs worst single attack {:.4} (gap {:.4})",
        result.bundled_error_rate,
        worst,
        result.bundled_error_rate - worst
    );
    Ok(s)
}
