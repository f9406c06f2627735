//! Attack bundling.
//!
//! For every clean example the bundler runs a sequence of attacks, scores
//! every candidate they emit and keeps the single best one under a
//! [`Criterion`]. The bundled error rate is the mean over examples of "the
//! chosen candidate is misclassified", which is never below the error rate of
//! any individual attack. The clean input always takes part as a zero-norm
//! baseline candidate with attack id [`BASELINE_ID`].
//!
//! Work is organized in rounds by [`schedule`]: each round hands the next
//! unrun attack to every example whose goal is not met yet. Jobs inside a
//! round run in parallel; their seeds depend only on
//! `(root seed, example index, attack seed stream, restart)`, so the result is
//! identical to a serial run.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;

use crate::attacks::{linf_distance, validate_candidate, Attack, AttackConfig, Candidate};
use crate::error::{Error, Result};
use crate::model::{predict_stochastic, Dataset, Ensemble, Example, ModelParams, Prediction, StochasticSpec};
use crate::seed;

/// Attack id of the clean-input baseline candidate.
pub const BASELINE_ID: &str = "none";

const SCORE_STREAM: u64 = 0x5C0E;

/// Per-example preference among candidates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    Misclassify,
    /// Same pairwise order as `Misclassify`; the threshold only steers scheduling.
    MaxConfidence {
        threshold: f64,
    },
    MinNorm,
}

impl Criterion {
    pub fn max_confidence(threshold: f64) -> Result<Self> {
        let c = Criterion::MaxConfidence { threshold };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if let Criterion::MaxConfidence { threshold } = *self {
            if !(0.5..1.0).contains(&threshold) {
                return Err(Error::contract(format!(
                    "confidence threshold must lie in [0.5, 1), got {threshold}"
                )));
            }
        }
        Ok(())
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Criterion::Misclassify => "misclassify",
            Criterion::MaxConfidence { .. } => "max_confidence",
            Criterion::MinNorm => "min_norm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub misclassified: bool,
    /// Largest probability assigned to any class other than the true label.
    pub wrong_confidence: f64,
    /// L∞ distance from the clean input.
    pub perturbation_norm: f64,
}

impl CandidateScore {
    pub fn from_prediction(prediction: &Prediction, label: usize, perturbation_norm: f64) -> Self {
        Self {
            misclassified: prediction.predicted_class != label,
            wrong_confidence: prediction.wrong_confidence(label),
            perturbation_norm,
        }
    }
}

fn check_candidate(example_index: usize, clean: &Example, candidate: &Candidate) -> Result<()> {
    if candidate.example_index != example_index {
        return Err(Error::contract(format!(
            "candidate for example {} scored against example {example_index}",
            candidate.example_index
        )));
    }
    if candidate.adversarial_input.len() != clean.dimension() {
        return Err(Error::Shape {
            what: "candidate",
            expected: clean.dimension(),
            got: candidate.adversarial_input.len(),
        });
    }
    Ok(())
}

/// Scores `candidate` against the clean example it was generated from.
pub fn score(
    model: &ModelParams,
    example_index: usize,
    clean: &Example,
    candidate: &Candidate,
) -> Result<CandidateScore> {
    check_candidate(example_index, clean, candidate)?;
    let prediction = model.predict(&candidate.adversarial_input)?;
    Ok(CandidateScore::from_prediction(
        &prediction,
        clean.label,
        linf_distance(&candidate.adversarial_input, &clean.features),
    ))
}

/// Scores against the mean of `spec.calls` noisy predictions.
pub fn score_stochastic(
    model: &ModelParams,
    spec: &StochasticSpec,
    example_index: usize,
    clean: &Example,
    candidate: &Candidate,
    seed: u64,
) -> Result<CandidateScore> {
    check_candidate(example_index, clean, candidate)?;
    let prediction = predict_stochastic(model, spec, &candidate.adversarial_input, seed)?;
    Ok(CandidateScore::from_prediction(
        &prediction,
        clean.label,
        linf_distance(&candidate.adversarial_input, &clean.features),
    ))
}

/// Orders two scores under `criterion`; `Greater` means `a` is preferred.
pub fn compare(a: &CandidateScore, b: &CandidateScore, criterion: &Criterion) -> Ordering {
    match a.misclassified.cmp(&b.misclassified) {
        Ordering::Equal => {}
        other => return other,
    }
    match criterion {
        Criterion::MinNorm if a.misclassified => b.perturbation_norm.total_cmp(&a.perturbation_norm),
        _ => a.wrong_confidence.total_cmp(&b.wrong_confidence),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    First,
    Second,
}

/// Picks between two scores; exact ties keep the first.
pub fn prefer(a: &CandidateScore, b: &CandidateScore, criterion: &Criterion) -> Choice {
    match compare(a, b, criterion) {
        Ordering::Less => Choice::Second,
        _ => Choice::First,
    }
}

/// When an example stops receiving attack units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Goal {
    /// Stop once any misclassified candidate exists.
    Misclassified,
    /// Stop once a misclassified candidate has wrong-class confidence above the threshold.
    ConfidenceAbove(f64),
    /// Run every attack.
    Exhaustive,
}

impl Goal {
    pub fn for_criterion(criterion: &Criterion) -> Self {
        match *criterion {
            Criterion::Misclassify => Goal::Misclassified,
            Criterion::MaxConfidence { threshold } => Goal::ConfidenceAbove(threshold),
            Criterion::MinNorm => Goal::Exhaustive,
        }
    }

    pub fn is_met(&self, best: &CandidateScore) -> bool {
        match *self {
            Goal::Misclassified => best.misclassified,
            Goal::ConfidenceAbove(t) => best.misclassified && best.wrong_confidence > t,
            Goal::Exhaustive => false,
        }
    }
}

/// Attack units are whole attack executions, restarts and samples included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetPolicy {
    pub max_units_per_example: Option<usize>,
    pub goal: Goal,
}

impl BudgetPolicy {
    /// Early stopping driven by the criterion's goal, no unit cap.
    pub fn for_criterion(criterion: &Criterion) -> Self {
        Self {
            max_units_per_example: None,
            goal: Goal::for_criterion(criterion),
        }
    }

    /// Every attack on every example.
    pub fn exhaustive() -> Self {
        Self {
            max_units_per_example: None,
            goal: Goal::Exhaustive,
        }
    }

    pub fn with_max_units(mut self, units: usize) -> Self {
        self.max_units_per_example = Some(units);
        self
    }
}

/// Where one example stands in the schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleProgress {
    pub next_attack: usize,
    pub units_spent: usize,
    pub best: CandidateScore,
}

impl ExampleProgress {
    pub fn new(baseline: CandidateScore) -> Self {
        Self {
            next_attack: 0,
            units_spent: 0,
            best: baseline,
        }
    }

    pub fn is_active(&self, budget: &BudgetPolicy, num_attacks: usize) -> bool {
        self.next_attack < num_attacks
            && budget
                .max_units_per_example
                .is_none_or(|max| self.units_spent < max)
            && !budget.goal.is_met(&self.best)
    }
}

/// Next round of `(example, attack)` assignments: one per still-active example,
/// in example order.
pub fn schedule(budget: &BudgetPolicy, state: &[ExampleProgress], num_attacks: usize) -> Vec<(usize, usize)> {
    state
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_active(budget, num_attacks))
        .map(|(i, p)| (i, p.next_attack))
        .collect()
}

/// Binary example-by-attack error indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeMatrix {
    pub attack_ids: Vec<String>,
    /// `rows[i][j]` is true iff attack `j` caused an error on example `i`.
    pub rows: Vec<Vec<bool>>,
    /// Clean-input errors, when the matrix comes from a bundle run.
    pub baseline: Option<Vec<bool>>,
}

impl OutcomeMatrix {
    pub fn num_examples(&self) -> usize {
        self.rows.len()
    }

    pub fn num_attacks(&self) -> usize {
        self.attack_ids.len()
    }

    pub fn column_rate(&self, attack: usize) -> f64 {
        mean_of(self.rows.iter().map(|r| r[attack]))
    }

    pub fn column_rates(&self) -> Vec<f64> {
        (0..self.num_attacks()).map(|j| self.column_rate(j)).collect()
    }

    pub fn baseline_rate(&self) -> f64 {
        self.baseline.as_ref().map_or(0.0, |b| mean_of(b.iter().copied()))
    }

    /// Row-wise OR, baseline included.
    pub fn row_or(&self, example: usize) -> bool {
        self.rows[example].iter().any(|&e| e) || self.baseline.as_ref().is_some_and(|b| b[example])
    }

    pub fn bundled_rate(&self) -> f64 {
        mean_of((0..self.num_examples()).map(|i| self.row_or(i)))
    }
}

fn mean_of(values: impl Iterator<Item = bool>) -> f64 {
    let (hits, total) = values.fold((0usize, 0usize), |(h, t), v| (h + usize::from(v), t + 1));
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// The `n × n` identity outcome matrix: attack `i` fools only example `i`.
pub fn wat_gap_construction(n: usize) -> Result<OutcomeMatrix> {
    if n < 1 {
        return Err(Error::contract("the gap construction needs n >= 1"));
    }
    Ok(OutcomeMatrix {
        attack_ids: (1..=n).map(|j| format!("attack-{j}")).collect(),
        rows: (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect(),
        baseline: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChosenCandidate {
    pub candidate: Candidate,
    pub score: CandidateScore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackRun {
    pub attack_id: String,
    /// Candidates produced (restarts or samples run).
    pub candidates: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExampleLog {
    pub runs: Vec<AttackRun>,
    pub units_spent: usize,
    /// True when the example stopped before every attack was run.
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundleResult {
    pub criterion: Criterion,
    pub chosen: Vec<ChosenCandidate>,
    pub outcome_matrix: OutcomeMatrix,
    pub per_attack_error_rates: Vec<f64>,
    pub clean_error_rate: f64,
    pub bundled_error_rate: f64,
    pub computation_log: Vec<ExampleLog>,
    /// Per attack: whether it ran on every example, so its column is exact.
    pub complete_columns: Vec<bool>,
}

impl BundleResult {
    pub fn total_units(&self) -> usize {
        self.computation_log.iter().map(|l| l.units_spent).sum()
    }

    pub fn attack_ids(&self) -> &[String] {
        &self.outcome_matrix.attack_ids
    }

    /// Writes one row per example:
    /// `index,attack_id,restart_index,misclassified,wrong_confidence,perturbation_norm,units_spent`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record([
            "index",
            "attack_id",
            "restart_index",
            "misclassified",
            "wrong_confidence",
            "perturbation_norm",
            "units_spent",
        ])?;
        for (i, (chosen, log)) in self.chosen.iter().zip(&self.computation_log).enumerate() {
            wtr.write_record([
                i.to_string(),
                chosen.candidate.attack_id.clone(),
                chosen.candidate.restart_index.to_string(),
                u8::from(chosen.score.misclassified).to_string(),
                chosen.score.wrong_confidence.to_string(),
                chosen.score.perturbation_norm.to_string(),
                log.units_spent.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Writes `attack_id,error_rate,complete`: the baseline, each attack, then `bundled`.
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["attack_id", "error_rate", "complete"])?;
        wtr.write_record([BASELINE_ID, &self.clean_error_rate.to_string(), "1"])?;
        for ((id, rate), complete) in self
            .attack_ids()
            .iter()
            .zip(&self.per_attack_error_rates)
            .zip(&self.complete_columns)
        {
            wtr.write_record([id.as_str(), &rate.to_string(), if *complete { "1" } else { "0" }])?;
        }
        wtr.write_record(["bundled", &self.bundled_error_rate.to_string(), "1"])?;
        wtr.flush()?;
        Ok(())
    }
}

/// How candidates are scored inside a bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scoring {
    Exact,
    /// Mean over repeated calls to a noisy model.
    Stochastic(StochasticSpec),
}

/// Bundles built-in attack configs with exact scoring.
pub fn bundle(
    model: &ModelParams,
    dataset: &Dataset,
    attacks: &[AttackConfig],
    criterion: &Criterion,
    budget: &BudgetPolicy,
    seed: u64,
) -> Result<BundleResult> {
    bundle_with(model, dataset, attacks, criterion, budget, seed, &Scoring::Exact)
}

/// Seed handed to `attack` for example `example_index`.
pub fn attack_seed(root: u64, example_index: usize, stream: &str) -> u64 {
    seed::derive(root, &[example_index as u64, seed::hash_str(stream)])
}

fn scoring_seed(root: u64, example_index: usize, stream: &str, restart: usize) -> u64 {
    seed::derive(
        root,
        &[
            example_index as u64,
            seed::hash_str(stream),
            restart as u64,
            SCORE_STREAM,
        ],
    )
}

struct Job {
    candidates: usize,
    best: Option<ChosenCandidate>,
    error: Option<String>,
}

/// Runs the bundle with any attacks and scoring mode.
///
/// A failing attack is logged for that example and contributes no candidate;
/// it never aborts the bundle. Candidates that break the L∞ or `[0, 1]`
/// constraints of a known budget are treated as failures too.
pub fn bundle_with<A: Attack>(
    model: &ModelParams,
    dataset: &Dataset,
    attacks: &[A],
    criterion: &Criterion,
    budget: &BudgetPolicy,
    seed: u64,
    scoring: &Scoring,
) -> Result<BundleResult> {
    criterion.validate()?;
    if dataset.is_empty() {
        return Err(Error::contract("cannot bundle over an empty dataset"));
    }
    if dataset.dimension() != model.dimension() || dataset.num_classes() > model.num_classes() {
        return Err(Error::Shape {
            what: "dataset vs model dimension",
            expected: model.dimension(),
            got: dataset.dimension(),
        });
    }
    let mut seen = HashSet::new();
    for a in attacks {
        if a.id() == BASELINE_ID || !seen.insert(a.id()) {
            return Err(Error::contract(format!(
                "attack id `{}` is reserved or duplicated",
                a.id()
            )));
        }
    }
    if let Some(max) = budget.max_units_per_example {
        if max == 0 {
            return Err(Error::contract("max_units_per_example must be positive"));
        }
    }

    let score_one = |i: usize, ex: &Example, c: &Candidate, stream: &str| -> Result<CandidateScore> {
        match scoring {
            Scoring::Exact => score(model, i, ex, c),
            Scoring::Stochastic(spec) => score_stochastic(
                model,
                spec,
                i,
                ex,
                c,
                scoring_seed(seed, i, stream, c.restart_index),
            ),
        }
    };

    let n = dataset.len();
    let num_attacks = attacks.len();
    let examples = dataset.examples();

    let mut chosen = Vec::with_capacity(n);
    let mut progress = Vec::with_capacity(n);
    let mut baseline = Vec::with_capacity(n);
    for (i, ex) in examples.iter().enumerate() {
        let candidate = Candidate {
            example_index: i,
            adversarial_input: ex.features.clone(),
            attack_id: BASELINE_ID.to_string(),
            restart_index: 0,
        };
        let s = score_one(i, ex, &candidate, BASELINE_ID)?;
        baseline.push(s.misclassified);
        progress.push(ExampleProgress::new(s));
        chosen.push(ChosenCandidate { candidate, score: s });
    }

    let mut rows = vec![vec![false; num_attacks]; n];
    let mut ran = vec![vec![false; num_attacks]; n];
    let mut logs = vec![ExampleLog::default(); n];

    loop {
        let round = schedule(budget, &progress, num_attacks);
        if round.is_empty() {
            break;
        }
        let jobs: Vec<Job> = round
            .par_iter()
            .map(|&(i, j)| {
                let attack = &attacks[j];
                let ex = &examples[i];
                let stream = attack.seed_stream();
                let run = || -> Result<(usize, Option<ChosenCandidate>)> {
                    let candidates = attack.generate(model, i, ex, attack_seed(seed, i, stream))?;
                    let mut best: Option<ChosenCandidate> = None;
                    for c in &candidates {
                        if let Some(eps) = attack.epsilon() {
                            validate_candidate(c, &ex.features, eps)?;
                        }
                        let s = score_one(i, ex, c, stream)?;
                        if best
                            .as_ref()
                            .is_none_or(|b| prefer(&b.score, &s, criterion) == Choice::Second)
                        {
                            best = Some(ChosenCandidate {
                                candidate: c.clone(),
                                score: s,
                            });
                        }
                    }
                    Ok((candidates.len(), best))
                };
                match run() {
                    Ok((candidates, best)) => Job {
                        candidates,
                        best,
                        error: None,
                    },
                    Err(e) => Job {
                        candidates: 0,
                        best: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect();

        for (&(i, j), job) in round.iter().zip(jobs) {
            let p = &mut progress[i];
            p.next_attack += 1;
            p.units_spent += 1;
            ran[i][j] = true;
            logs[i].units_spent += 1;
            logs[i].runs.push(AttackRun {
                attack_id: attacks[j].id().to_string(),
                candidates: job.candidates,
                error: job.error,
            });
            if let Some(best) = job.best {
                rows[i][j] = best.score.misclassified;
                if prefer(&chosen[i].score, &best.score, criterion) == Choice::Second {
                    p.best = best.score;
                    chosen[i] = best;
                }
            }
        }
    }

    for log in &mut logs {
        log.stopped_early = log.units_spent < num_attacks;
    }

    let outcome_matrix = OutcomeMatrix {
        attack_ids: attacks.iter().map(|a| a.id().to_string()).collect(),
        rows,
        baseline: Some(baseline),
    };
    let per_attack_error_rates = outcome_matrix.column_rates();
    let clean_error_rate = outcome_matrix.baseline_rate();
    let bundled_error_rate = mean_of(chosen.iter().map(|c| c.score.misclassified));
    debug_assert_eq!(bundled_error_rate, outcome_matrix.bundled_rate());
    let complete_columns = (0..num_attacks).map(|j| ran.iter().all(|r| r[j])).collect();

    Ok(BundleResult {
        criterion: *criterion,
        chosen,
        outcome_matrix,
        per_attack_error_rates,
        clean_error_rate,
        bundled_error_rate,
        computation_log: logs,
        complete_columns,
    })
}

/// Picks the candidate that fools the most ensemble members.
///
/// Ties go to the higher mean wrong-class confidence across members, then to
/// the earlier candidate.
pub fn select_by_ensemble<'a>(
    ensemble: &Ensemble,
    clean: &Example,
    candidates: &'a [Candidate],
) -> Result<&'a Candidate> {
    if candidates.is_empty() {
        return Err(Error::contract("select_by_ensemble needs at least one candidate"));
    }
    let mut best: Option<(usize, f64, &Candidate)> = None;
    for c in candidates {
        let mut fooled = 0;
        let mut conf = 0.0;
        for m in ensemble.members() {
            let p = m.predict(&c.adversarial_input)?;
            if p.predicted_class != clean.label {
                fooled += 1;
            }
            conf += p.wrong_confidence(clean.label);
        }
        let conf = conf / ensemble.len() as f64;
        let better = match best {
            None => true,
            Some((bf, bc, _)) => fooled > bf || (fooled == bf && conf > bc),
        };
        if better {
            best = Some((fooled, conf, c));
        }
    }
    Ok(best.expect("non-empty candidate list").2)
}
