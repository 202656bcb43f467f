use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{check_prefix, log_rows, validate_row, Scorer};
use crate::concept::OutputId;
use crate::error::ScorerError;

#[derive(Serialize, Deserialize)]
struct LogitJson {
    vocab: usize,
    sequences: BTreeMap<String, Vec<Vec<Option<f64>>>>,
}

/// Precomputed per-step log-probability rows for a set of sequences, e.g.
/// a classifier's outputs for each element of an image sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitFile {
    vocab: usize,
    sequences: BTreeMap<String, Arc<Vec<Vec<f64>>>>,
}

impl LogitFile {
    pub fn new(
        vocab: usize,
        sequences: impl IntoIterator<Item = (String, Vec<Vec<f64>>)>,
    ) -> Result<Self, ScorerError> {
        let mut map = BTreeMap::new();
        for (id, rows) in sequences {
            for (i, row) in rows.iter().enumerate() {
                validate_row(row, i, vocab)
                    .map_err(|e| ScorerError::Invalid(format!("sequence `{id}`: {e}")))?;
            }
            map.insert(id, Arc::new(rows));
        }
        Ok(LogitFile {
            vocab,
            sequences: map,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self, ScorerError> {
        let json: LogitJson =
            serde_json::from_str(text).map_err(|e| ScorerError::Invalid(e.to_string()))?;
        Self::new(
            json.vocab,
            json.sequences
                .into_iter()
                .map(|(id, rows)| (id, log_rows::from_json(rows))),
        )
    }

    pub fn to_json_string(&self) -> String {
        let json = LogitJson {
            vocab: self.vocab,
            sequences: self
                .sequences
                .iter()
                .map(|(id, rows)| (id.clone(), log_rows::to_json(rows)))
                .collect(),
        };
        serde_json::to_string(&json).expect("logits serialize")
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.sequences.keys().map(String::as_str)
    }

    pub fn rows(&self, id: &str) -> Option<&[Vec<f64>]> {
        self.sequences.get(id).map(|r| r.as_slice())
    }

    /// Scorer serving the rows of one sequence.
    pub fn scorer(&self, id: &str) -> Result<LogitFileScorer, ScorerError> {
        let rows = self
            .sequences
            .get(id)
            .ok_or_else(|| ScorerError::MissingSequence(id.to_string()))?;
        Ok(LogitFileScorer {
            vocab: self.vocab,
            rows: Arc::clone(rows),
        })
    }
}

/// Context-independent scorer: the row for a prefix of length `t` is the
/// stored row for step `t`.
#[derive(Debug, Clone)]
pub struct LogitFileScorer {
    vocab: usize,
    rows: Arc<Vec<Vec<f64>>>,
}

impl LogitFileScorer {
    pub fn steps(&self) -> usize {
        self.rows.len()
    }
}

impl Scorer for LogitFileScorer {
    fn vocab_size(&self) -> usize {
        self.vocab
    }

    fn score(&self, prefixes: &[&[OutputId]]) -> Result<Vec<Vec<f64>>, ScorerError> {
        prefixes
            .iter()
            .map(|p| {
                check_prefix(p, self.vocab)?;
                self.rows
                    .get(p.len())
                    .cloned()
                    .ok_or(ScorerError::StepOverflow {
                        step: p.len(),
                        available: self.rows.len(),
                    })
            })
            .collect()
    }
}
