//! Backend-agnostic conformance checks. The same suite runs against the mock,
//! the mock served over HTTP, or an external model server.

use std::fmt;

use super::{BackendError, SummarizationBackend};
use crate::corpus::Document;

#[derive(Debug, Clone, PartialEq)]
pub struct ConformanceCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConformanceReport {
    pub checks: Vec<ConformanceCheck>,
}

impl ConformanceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn record(&mut self, name: &'static str, outcome: Result<String, String>) {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        self.checks.push(ConformanceCheck {
            name,
            passed,
            detail,
        });
    }
}

impl fmt::Display for ConformanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "[{}] {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        Ok(())
    }
}

fn err(e: BackendError) -> String {
    e.to_string()
}

/// Shape, determinism and reset-semantics checks. Finetunes the backend, so
/// its model state afterwards is whatever the last check trained.
pub fn run_conformance(backend: &mut dyn SummarizationBackend) -> ConformanceReport {
    let mut report = ConformanceReport::default();
    let texts: Vec<String> = [
        "the committee approved the annual budget after a long debate",
        "heavy rain flooded several streets in the old town overnight",
        "the team released a new version of the compiler with faster builds",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let dim = backend.descriptor().dim;

    report.record(
        "embed_shape",
        backend.embed(&texts).map_err(err).and_then(|rows| {
            if rows.len() != texts.len() {
                return Err(format!("{} rows for {} texts", rows.len(), texts.len()));
            }
            if rows.iter().any(|r| r.len() != dim) {
                return Err(format!("row dimension differs from {dim}"));
            }
            Ok(format!("{}x{dim}", rows.len()))
        }),
    );

    report.record(
        "embed_deterministic",
        (|| {
            let a = backend.embed(&texts[..1]).map_err(err)?;
            let b = backend.embed(&texts[..1]).map_err(err)?;
            if a == b {
                Ok("same text, same row".to_string())
            } else {
                Err("repeated embed differs".to_string())
            }
        })(),
    );

    let doc = Document::new(
        "conformance-0",
        texts[0].clone(),
        "committee approves budget",
    );
    report.record(
        "generate_shape",
        backend
            .generate_stochastic(&doc, 5, 11)
            .map_err(err)
            .and_then(|batch| {
                if batch.summaries.len() == 5 {
                    Ok("5 summaries for n=5".to_string())
                } else {
                    Err(format!("{} summaries for n=5", batch.summaries.len()))
                }
            }),
    );

    let pairs: Vec<(String, String)> = texts
        .iter()
        .zip(["budget approved", "streets flooded", "compiler released"])
        .map(|(s, r)| (s.clone(), r.to_string()))
        .collect();
    report.record(
        "finetune_reset_fingerprint",
        (|| {
            let first = backend.reset_and_finetune(&pairs, 5).map_err(err)?;
            let second = backend.reset_and_finetune(&pairs, 5).map_err(err)?;
            if first.fingerprint != second.fingerprint {
                return Err(format!("{} != {}", first.fingerprint, second.fingerprint));
            }
            let reseeded = backend.reset_and_finetune(&pairs, 6).map_err(err)?;
            if reseeded.fingerprint == first.fingerprint {
                return Err("different seed produced the same state".to_string());
            }
            Ok(format!("state {}", first.fingerprint))
        })(),
    );

    report.record(
        "finetune_rejects_empty",
        match backend.reset_and_finetune(&[], 5) {
            Ok(_) => Err("empty labeled set accepted".to_string()),
            Err(e) => Ok(format!("rejected: {e}")),
        },
    );

    report.record(
        "summarize_deterministic",
        (|| {
            let a = backend.summarize(&texts).map_err(err)?;
            let b = backend.summarize(&texts).map_err(err)?;
            if a.len() != texts.len() {
                return Err(format!("{} summaries for {} texts", a.len(), texts.len()));
            }
            if a != b {
                return Err("repeated summarize differs".to_string());
            }
            let empty = backend.summarize(&[]).map_err(err)?;
            if !empty.is_empty() {
                return Err("summaries returned for an empty request".to_string());
            }
            Ok("stable across calls".to_string())
        })(),
    );

    report
}
