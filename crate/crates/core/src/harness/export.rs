//! Result files: `config.resolved`, `records.jsonl`, `summary.csv`,
//! `selections.csv`, `repeats.csv` and `viz.csv`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentResult, HarnessError, IterationRecord, RepeatStatus};
use crate::corpus::DocId;
use crate::embedspace::{pca_project, EmbeddingMatrix};
use crate::strategies::{Provenance, Selection};

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(format!("creating {}", path.display()), e))
}

fn csv_error(path: &Path, e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(format!("writing {}", path.display()), io),
        other => HarnessError::Config(format!("{}: {other:?}", path.display())),
    }
}

/// Mean and sample standard deviation of one metric at one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub iteration: usize,
    pub metric: String,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Aggregate records across repeats per iteration. Metrics absent from a
/// record (e.g. skipped evaluations) are left out of that iteration's mean.
pub fn summarize_records<'a>(
    records: impl IntoIterator<Item = &'a IterationRecord>,
) -> Vec<SummaryRow> {
    let mut by_iter: BTreeMap<usize, BTreeMap<&'static str, Vec<f64>>> = BTreeMap::new();
    for r in records {
        let slot = by_iter.entry(r.iteration).or_default();
        let mut put = |name: &'static str, v: Option<f64>| {
            if let Some(v) = v {
                slot.entry(name).or_default().push(v);
            }
        };
        put("labeled", Some(r.labeled as f64));
        put("rouge1", r.scores.map(|s| s.rouge1));
        put("rouge2", r.scores.map(|s| s.rouge2));
        put("rougeL", r.scores.map(|s| s.rouge_l));
        put("diversity", r.diversity);
        put("outlier", r.outlier);
    }
    const ORDER: [&str; 6] = [
        "labeled",
        "rouge1",
        "rouge2",
        "rougeL",
        "diversity",
        "outlier",
    ];
    let mut rows = Vec::new();
    for (iteration, metrics) in by_iter {
        for name in ORDER {
            if let Some(values) = metrics.get(name) {
                let (mean, std) = mean_std(values);
                rows.push(SummaryRow {
                    iteration,
                    metric: name.to_string(),
                    n: values.len(),
                    mean,
                    std,
                });
            }
        }
    }
    rows
}

#[derive(Serialize, Deserialize)]
struct SelectionRow {
    repeat: usize,
    iteration: usize,
    id: String,
    provenance: Provenance,
    bleuvar: Option<f64>,
    idds_score: Option<f64>,
}

#[derive(Serialize)]
struct RepeatRow<'a> {
    repeat: usize,
    seed: u64,
    status: &'a str,
    iterations: usize,
    labeled: usize,
    exit_code: i32,
    message: &'a str,
}

/// Write every result file for `result` into `dir`, creating it if needed.
pub fn export_results(
    result: &ExperimentResult,
    dir: impl AsRef<Path>,
) -> Result<(), HarnessError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)
        .map_err(|e| HarnessError::io(format!("creating {}", dir.display()), e))?;

    let path = dir.join("config.resolved");
    fs::write(&path, result.config.to_toml())
        .map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))?;

    let path = dir.join("records.jsonl");
    let mut w = create(&path)?;
    for r in result.records() {
        serde_json::to_writer(&mut w, r)
            .map_err(|e| HarnessError::io(format!("writing {}", path.display()), e.into()))?;
        w.write_all(b"\n")
            .map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))?;
    }
    w.flush()
        .map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))?;

    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    for row in summarize_records(result.records()) {
        w.serialize(row).map_err(|e| csv_error(&path, e))?;
    }
    w.flush()
        .map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))?;

    let path = dir.join("selections.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    for r in result.records() {
        for s in &r.selections {
            w.serialize(SelectionRow {
                repeat: r.repeat,
                iteration: s.iteration,
                id: s.doc_id.to_string(),
                provenance: s.provenance,
                bleuvar: s.bleuvar,
                idds_score: s.idds_score,
            })
            .map_err(|e| csv_error(&path, e))?;
        }
    }
    w.flush()
        .map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))?;

    let path = dir.join("repeats.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    for rep in &result.repeats {
        let (status, exit_code, message) = match &rep.status {
            RepeatStatus::Complete => ("complete", 0, ""),
            RepeatStatus::PoolExhausted { .. } => ("pool_exhausted", 3, ""),
            RepeatStatus::Failed { exit_code, message } => ("failed", *exit_code, message.as_str()),
        };
        w.serialize(RepeatRow {
            repeat: rep.repeat,
            seed: rep.seed,
            status,
            iterations: rep.records.len(),
            labeled: rep.records.last().map_or(0, |r| r.labeled),
            exit_code,
            message,
        })
        .map_err(|e| csv_error(&path, e))?;
    }
    w.flush()
        .map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))?;
    Ok(())
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<IterationRecord>, HarnessError> {
    let path = path.as_ref();
    let file =
        File::open(path).map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| {
            HarnessError::Config(format!("{} line {}: {e}", path.display(), i + 1))
        })?);
    }
    Ok(out)
}

/// Read `selections.csv` back as `(repeat, selection)` pairs.
pub fn read_selections(path: impl AsRef<Path>) -> Result<Vec<(usize, Selection)>, HarnessError> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    reader
        .deserialize::<SelectionRow>()
        .map(|row| {
            let row = row.map_err(|e| csv_error(path, e))?;
            Ok((
                row.repeat,
                Selection {
                    doc_id: DocId::new(row.id),
                    provenance: row.provenance,
                    iteration: row.iteration,
                    bleuvar: row.bleuvar,
                    idds_score: row.idds_score,
                },
            ))
        })
        .collect()
}

/// One point of the 2-D embedding map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VizRow {
    pub id: String,
    pub x: f64,
    pub y: f64,
    /// `unselected`, or `<strategy>:<provenance>`.
    pub tag: String,
}

/// PCA-project every id in `ids` to two dimensions and tag the selected ones.
pub fn export_viz(
    ids: &[DocId],
    selections: &[Selection],
    embeddings: &EmbeddingMatrix,
    strategy: &str,
) -> Result<Vec<VizRow>, HarnessError> {
    let subset = embeddings.subset(ids)?;
    let projection = pca_project(&subset, 2)?;
    let tags: BTreeMap<&DocId, Provenance> = selections
        .iter()
        .map(|s| (&s.doc_id, s.provenance))
        .collect();
    Ok(projection
        .ids
        .iter()
        .zip(&projection.coords)
        .map(|(id, xy)| VizRow {
            id: id.to_string(),
            x: xy[0],
            y: xy[1],
            tag: match tags.get(id) {
                Some(p) => format!("{strategy}:{}", p.as_str()),
                None => "unselected".to_string(),
            },
        })
        .collect())
}

pub fn write_viz(path: impl AsRef<Path>, rows: &[VizRow]) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush()
        .map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))
}
