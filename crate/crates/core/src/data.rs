//! Dataset ingestion and synthesis.
//!
//! CSV layout: `d` feature columns followed by one integer label column. A
//! header row is optional and detected by a non-numeric first field.

use std::f64::consts::TAU;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{Dataset, Example};
use crate::seed;

/// Parameters of the synthetic Gaussian-blob generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub seed: u64,
    /// Distance of each class mean from the origin, in units of the per-coordinate std-dev.
    pub separation: f64,
}

impl BlobSpec {
    pub fn new(n: usize, d: usize, k: usize, seed: u64) -> Self {
        Self {
            n,
            d,
            k,
            seed,
            separation: 3.0,
        }
    }
}

/// `k` balanced Gaussian blobs squashed into the unit cube.
pub fn synth_dataset(n: usize, d: usize, k: usize, seed: u64) -> Result<Dataset> {
    synth_blobs(&BlobSpec::new(n, d, k, seed))
}

/// Draws the blobs described by `spec`.
///
/// Class `c` is centered at angle `2πc/k` on a circle of radius `separation`
/// in the first two coordinates (on a line when `d = 1`); the remaining
/// coordinates are pure unit-variance noise. Labels cycle `0, 1, .., k-1` so
/// classes are balanced up to rounding. Each feature is then mapped affinely
/// from its sample range onto `[0, 1]`.
pub fn synth_blobs(spec: &BlobSpec) -> Result<Dataset> {
    let BlobSpec {
        n,
        d,
        k,
        seed,
        separation,
    } = *spec;
    if k < 2 || n < k || d == 0 {
        return Err(Error::contract(format!(
            "synthetic dataset needs n >= k >= 2 and d >= 1, got n = {n}, d = {d}, k = {k}"
        )));
    }
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(Error::contract("blob separation must be finite and non-negative"));
    }

    let means: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            let mut mean = vec![0.0; d];
            if d == 1 {
                mean[0] = separation * (2.0 * c as f64 / (k - 1) as f64 - 1.0);
            } else {
                let angle = TAU * c as f64 / k as f64;
                mean[0] = separation * angle.cos();
                mean[1] = separation * angle.sin();
            }
            mean
        })
        .collect();

    let mut rng = seed::rng(seed);
    let mut raw: Vec<(Vec<f64>, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % k;
        let point = means[label]
            .iter()
            .map(|m| m + rng.sample::<f64, _>(StandardNormal))
            .collect();
        raw.push((point, label));
    }

    for j in 0..d {
        let (lo, hi) = raw
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| {
                (lo.min(x[j]), hi.max(x[j]))
            });
        let span = hi - lo;
        for (x, _) in &mut raw {
            x[j] = if span > 0.0 {
                ((x[j] - lo) / span).clamp(0.0, 1.0)
            } else {
                0.5
            };
        }
    }

    let examples = raw
        .into_iter()
        .map(|(x, y)| Example::new(x, y))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(examples, k)
}

/// Reads a dataset from CSV. `num_classes` defaults to `max label + 1` (at least 2).
pub fn read_csv<R: Read>(reader: R, source_name: &str, num_classes: Option<usize>) -> Result<Dataset> {
    let data_err = |line: usize, message: String| Error::Data {
        source_name: source_name.to_string(),
        line,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut examples = Vec::new();
    let mut width = None;
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(row + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if row == 0 && record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if record.len() < 2 {
            return Err(data_err(line, "need at least one feature and a label".into()));
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(data_err(
                    line,
                    format!("expected {w} columns, found {}", record.len()),
                ))
            }
            _ => {}
        }
        let (label_field, feature_fields) = record
            .iter()
            .collect::<Vec<_>>()
            .split_last()
            .map(|(l, f)| (*l, f.to_vec()))
            .expect("record has at least two fields");
        let label: usize = label_field
            .parse()
            .map_err(|_| data_err(line, format!("label `{label_field}` is not a class index")))?;
        let features = feature_fields
            .iter()
            .map(|f| {
                let v: f64 = f
                    .parse()
                    .map_err(|_| data_err(line, format!("feature `{f}` is not a number")))?;
                if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                    return Err(data_err(line, format!("feature {v} lies outside [0, 1]")));
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        examples.push(Example { features, label });
    }
    if examples.is_empty() {
        return Err(data_err(0, "no examples found".into()));
    }
    let max_label = examples.iter().map(|e| e.label).max().unwrap_or(0);
    let k = num_classes.unwrap_or((max_label + 1).max(2));
    if max_label >= k {
        return Err(data_err(
            0,
            format!("label {max_label} out of range for {k} classes"),
        ));
    }
    Dataset::new(examples, k)
}

pub fn load_csv(path: &Path, num_classes: Option<usize>) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::Data {
        source_name: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    read_csv(file, &path.display().to_string(), num_classes)
}

/// Writes a header `x0,..,x{d-1},label` followed by one row per example.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..dataset.dimension()).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    wtr.write_record(&header)?;
    for ex in dataset.examples() {
        let mut row: Vec<String> = ex.features.iter().map(f64::to_string).collect();
        row.push(ex.label.to_string());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    write_csv(dataset, std::fs::File::create(path)?)
}
