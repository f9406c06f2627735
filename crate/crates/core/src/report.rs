//! Rate tables and curves derived from bundle results.
//!
//! All confidence comparisons are strict: an input is covered at threshold
//! `t` only if its confidence is `> t`.

use std::fmt;
use std::io::Write;

use crate::attacks::FEASIBILITY_TOL;
use crate::bundler::{wat_gap_construction, BundleResult, Criterion, OutcomeMatrix, BASELINE_ID};
use crate::error::{Error, Result};
use crate::model::{Dataset, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Mat,
    Wat,
    Bundled,
}

impl TableKind {
    pub fn tag(&self) -> &'static str {
        match self {
            TableKind::Mat => "MAT",
            TableKind::Wat => "WAT",
            TableKind::Bundled => "BUNDLED",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackRate {
    pub attack_id: String,
    pub error_rate: f64,
    /// False when the attack did not run on every example (early stopping),
    /// in which case `error_rate` is only a lower bound.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub kind: TableKind,
    pub clean_error: f64,
    pub per_attack: Vec<AttackRate>,
    pub wat_max: Option<f64>,
    pub bundled_rate: Option<f64>,
}

/// The many-attack, worst-attack and bundled tables of one outcome matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tables {
    pub mat: RateTable,
    pub wat: RateTable,
    pub bundled: RateTable,
}

pub fn make_tables(result: &BundleResult) -> Tables {
    tables_from_matrix(&result.outcome_matrix, Some(&result.complete_columns))
}

/// Builds the three tables from a bare outcome matrix. Columns are treated as
/// complete unless `complete` says otherwise.
pub fn tables_from_matrix(matrix: &OutcomeMatrix, complete: Option<&[bool]>) -> Tables {
    let per_attack: Vec<AttackRate> = matrix
        .attack_ids
        .iter()
        .enumerate()
        .map(|(j, id)| AttackRate {
            attack_id: id.clone(),
            error_rate: matrix.column_rate(j),
            complete: complete.is_none_or(|c| c[j]),
        })
        .collect();
    let clean_error = matrix.baseline_rate();
    let wat_max = per_attack.iter().map(|a| a.error_rate).fold(0.0, f64::max);
    let mat = RateTable {
        kind: TableKind::Mat,
        clean_error,
        per_attack,
        wat_max: None,
        bundled_rate: None,
    };
    let wat = RateTable {
        kind: TableKind::Wat,
        wat_max: Some(wat_max),
        ..mat.clone()
    };
    let bundled = RateTable {
        kind: TableKind::Bundled,
        bundled_rate: Some(matrix.bundled_rate()),
        ..wat.clone()
    };
    Tables { mat, wat, bundled }
}

impl fmt::Display for RateTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<8} {}={:.2}%",
            self.kind.tag(),
            BASELINE_ID,
            100.0 * self.clean_error
        )?;
        for a in &self.per_attack {
            let mark = if a.complete { "" } else { " (incomplete)" };
            write!(f, "  {}={:.2}%{mark}", a.attack_id, 100.0 * a.error_rate)?;
        }
        if let Some(m) = self.wat_max {
            write!(f, "  max={:.2}%", 100.0 * m)?;
        }
        if let Some(b) = self.bundled_rate {
            write!(f, "  bundled={:.2}%", 100.0 * b)?;
        }
        Ok(())
    }
}

fn rate_field(rate: f64, complete: bool) -> String {
    if complete {
        rate.to_string()
    } else {
        "NA".to_string()
    }
}

/// `rates.csv`: `kind,attack_id,rate`. Incomplete attack columns are written as `NA`.
pub fn write_rates_csv<W: Write>(tables: &Tables, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["kind", "attack_id", "rate"])?;
    for table in [&tables.mat, &tables.wat, &tables.bundled] {
        let kind = table.kind.tag();
        wtr.write_record([kind, BASELINE_ID, &table.clean_error.to_string()])?;
        for a in &table.per_attack {
            wtr.write_record([kind, a.attack_id.as_str(), &rate_field(a.error_rate, a.complete)])?;
        }
        if let Some(m) = table.wat_max {
            let complete = table.per_attack.iter().all(|a| a.complete);
            wtr.write_record([kind, "max", &rate_field(m, complete)])?;
        }
        if let Some(b) = table.bundled_rate {
            wtr.write_record([kind, "bundled", &b.to_string()])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessFailPoint {
    pub threshold: f64,
    /// Clean examples classified correctly with confidence above the threshold.
    pub success_rate: f64,
    /// Examples whose chosen candidate is misclassified with wrong-class
    /// confidence above the threshold.
    pub failure_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessFailCurve {
    pub points: Vec<SuccessFailPoint>,
}

/// `count` evenly spaced thresholds from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| {
                if i == count - 1 {
                    stop
                } else {
                    start + (stop - start) * i as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

fn check_sorted(values: &[f64], what: &str) -> Result<()> {
    if values
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt()))
    {
        return Err(Error::contract(format!("{what} must be sorted ascending")));
    }
    Ok(())
}

/// Success and failure rates of a confidence-thresholding defender.
///
/// Failure rates come from the stored chosen-candidate scores; the attacks are
/// not re-run.
pub fn success_fail_curve(
    model: &ModelParams,
    dataset: &Dataset,
    result: &BundleResult,
    grid: &[f64],
) -> Result<SuccessFailCurve> {
    if let Some(t) = grid.iter().find(|t| !(0.5..1.0).contains(*t)) {
        return Err(Error::contract(format!("threshold {t} lies outside [0.5, 1)")));
    }
    check_sorted(grid, "threshold grid")?;
    if result.chosen.len() != dataset.len() {
        return Err(Error::contract("bundle result does not match the dataset"));
    }
    let n = dataset.len().max(1) as f64;
    let clean_confidence: Vec<Option<f64>> = dataset
        .examples()
        .iter()
        .map(|ex| {
            let p = model.predict(&ex.features)?;
            Ok((p.predicted_class == ex.label).then_some(p.confidence))
        })
        .collect::<Result<_>>()?;

    let points = grid
        .iter()
        .map(|&t| {
            let successes = clean_confidence
                .iter()
                .filter(|c| c.is_some_and(|c| c > t))
                .count();
            let failures = result
                .chosen
                .iter()
                .filter(|c| c.score.misclassified && c.score.wrong_confidence > t)
                .count();
            SuccessFailPoint {
                threshold: t,
                success_rate: successes as f64 / n,
                failure_rate: failures as f64 / n,
            }
        })
        .collect();
    Ok(SuccessFailCurve { points })
}

/// `sf_curve.csv`: `t,success_rate,failure_rate`.
pub fn write_sf_curve_csv<W: Write>(curve: &SuccessFailCurve, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["t", "success_rate", "failure_rate"])?;
    for p in &curve.points {
        wtr.write_record([
            p.threshold.to_string(),
            p.success_rate.to_string(),
            p.failure_rate.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormPoint {
    pub epsilon: f64,
    pub error_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormCurve {
    pub points: Vec<NormPoint>,
}

/// Error rate as a function of the allowed L∞ radius, from a min-norm bundle.
///
/// An example counts at `ε` when its chosen candidate is misclassified with
/// norm `≤ ε` (up to the feasibility slack of the attacks). The chosen norm
/// only upper-bounds the true minimal adversarial norm, so each point is a
/// lower bound on the error at that radius.
pub fn norm_curve(result: &BundleResult, epsilons: &[f64]) -> Result<NormCurve> {
    if result.criterion != Criterion::MinNorm {
        return Err(Error::contract(format!(
            "norm curves need a min_norm bundle, got {}",
            result.criterion.tag()
        )));
    }
    if let Some(e) = epsilons.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(Error::contract(format!(
            "epsilon {e} must be finite and non-negative"
        )));
    }
    check_sorted(epsilons, "epsilon grid")?;
    let n = result.chosen.len().max(1) as f64;
    let mut norms: Vec<f64> = result
        .chosen
        .iter()
        .filter(|c| c.score.misclassified)
        .map(|c| c.score.perturbation_norm)
        .collect();
    norms.sort_by(f64::total_cmp);
    let points = epsilons
        .iter()
        .map(|&epsilon| {
            let covered = norms.partition_point(|&v| v <= epsilon + FEASIBILITY_TOL);
            NormPoint {
                epsilon,
                error_rate: covered as f64 / n,
            }
        })
        .collect();
    Ok(NormCurve { points })
}

/// `norm_curve.csv`: `epsilon,error_rate`.
pub fn write_norm_curve_csv<W: Write>(curve: &NormCurve, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["epsilon", "error_rate"])?;
    for p in &curve.points {
        wtr.write_record([p.epsilon.to_string(), p.error_rate.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub n: usize,
    pub wat: f64,
    pub bundled: f64,
    pub gap: f64,
}

/// How far the worst-attack rate falls below the bundled rate on the
/// `n × n` identity construction, for each `n`.
pub fn wat_underestimation_report(n_values: &[usize]) -> Result<Vec<GapRow>> {
    n_values
        .iter()
        .map(|&n| {
            let tables = tables_from_matrix(&wat_gap_construction(n)?, None);
            let wat = tables.wat.wat_max.unwrap_or(0.0);
            let bundled = tables.bundled.bundled_rate.unwrap_or(0.0);
            Ok(GapRow {
                n,
                wat,
                bundled,
                gap: bundled - wat,
            })
        })
        .collect()
}

/// `wat_gap.csv`: `n,wat,bundled,gap`.
pub fn write_gap_csv<W: Write>(rows: &[GapRow], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["n", "wat", "bundled", "gap"])?;
    for r in rows {
        wtr.write_record([
            r.n.to_string(),
            r.wat.to_string(),
            r.bundled.to_string(),
            r.gap.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_tables() {
        let t = tables_from_matrix(&wat_gap_construction(2).unwrap(), None);
        let rates: Vec<f64> = t.mat.per_attack.iter().map(|a| a.error_rate).collect();
        assert_eq!(rates, vec![0.5, 0.5]);
        assert_eq!(t.wat.wat_max, Some(0.5));
        assert_eq!(t.bundled.bundled_rate, Some(1.0));
        assert_eq!(t.mat.wat_max, None);
    }

    #[test]
    fn wat_takes_the_max_of_hypothetical_rates() {
        // 100 examples with per-attack error counts 3, 11 and 99.
        let counts = [3, 11, 99];
        let rows = (0..100)
            .map(|i| counts.iter().map(|&c| i < c).collect())
            .collect();
        let m = OutcomeMatrix {
            attack_ids: vec!["a1".into(), "a2".into(), "a3".into()],
            rows,
            baseline: Some((0..100).map(|i| i == 0).collect()),
        };
        let t = tables_from_matrix(&m, None);
        assert_eq!(t.wat.clean_error, 0.01);
        assert_eq!(t.wat.wat_max, Some(0.99));
    }

    #[test]
    fn all_zero_matrix() {
        let m = OutcomeMatrix {
            attack_ids: vec!["a".into(), "b".into()],
            rows: vec![vec![false, false]; 4],
            baseline: None,
        };
        let t = tables_from_matrix(&m, None);
        assert_eq!(t.wat.wat_max, Some(0.0));
        assert_eq!(t.bundled.bundled_rate, Some(0.0));
    }

    #[test]
    fn gap_rows() {
        let rows = wat_underestimation_report(&[1, 2, 1000]).unwrap();
        assert_eq!(rows[0].gap, 0.0);
        assert_eq!(rows[1].gap, 0.5);
        assert_eq!(rows[2].gap, 0.999);
        assert!(wat_underestimation_report(&[0]).is_err());
    }

    #[test]
    fn rates_csv_marks_incomplete_columns() {
        let m = wat_gap_construction(2).unwrap();
        let t = tables_from_matrix(&m, Some(&[true, false]));
        let mut buf = Vec::new();
        write_rates_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("kind,attack_id,rate\nMAT,none,0\nMAT,attack-1,0.5\nMAT,attack-2,NA\n"));
        assert!(text.contains("WAT,max,NA\n"));
        assert!(text.ends_with("BUNDLED,bundled,1\n"));
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(0.5, 0.99, 50);
        assert_eq!(g.len(), 50);
        assert_eq!(g[0], 0.5);
        assert_eq!(g[49], 0.99);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }
}
