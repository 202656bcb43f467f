//! Next-output scorers `log p(x_t | x_<t)`.

mod logit_file;
mod markov;
mod remote;

pub use logit_file::{LogitFile, LogitFileScorer};
pub use markov::MarkovTableScorer;
pub use remote::{RemoteOptions, RemoteScorer, ScoreRequest, ScoreResponse, VocabResponse};

use crate::concept::OutputId;
use crate::error::ScorerError;

/// Allowed deviation of `logsumexp(row)` from 0.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-4;

/// A next-output model. Each returned row is a log-distribution over
/// `0..vocab_size`; `-inf` marks a hard zero.
pub trait Scorer: Send + Sync {
    fn vocab_size(&self) -> usize;

    /// One row per prefix, in order.
    fn score(&self, prefixes: &[&[OutputId]]) -> Result<Vec<Vec<f64>>, ScorerError>;

    /// Exclusive scorers are never called concurrently.
    fn is_exclusive(&self) -> bool {
        false
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn score(&self, prefixes: &[&[OutputId]]) -> Result<Vec<Vec<f64>>, ScorerError> {
        (**self).score(prefixes)
    }

    fn is_exclusive(&self) -> bool {
        (**self).is_exclusive()
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn score(&self, prefixes: &[&[OutputId]]) -> Result<Vec<Vec<f64>>, ScorerError> {
        (**self).score(prefixes)
    }

    fn is_exclusive(&self) -> bool {
        (**self).is_exclusive()
    }
}

pub fn logsumexp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    max + row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Checks width, value range and normalization of one row.
pub fn validate_row(row: &[f64], index: usize, vocab: usize) -> Result<(), ScorerError> {
    if row.len() != vocab {
        return Err(ScorerError::Invalid(format!(
            "row {index} has width {}, expected {vocab}",
            row.len()
        )));
    }
    if row
        .iter()
        .any(|&x| x.is_nan() || x == f64::INFINITY || x > NORMALIZATION_TOLERANCE)
    {
        return Err(ScorerError::Normalization {
            row: index,
            logsumexp: logsumexp(row),
        });
    }
    let lse = logsumexp(row);
    if !(lse.abs() <= NORMALIZATION_TOLERANCE) {
        return Err(ScorerError::Normalization {
            row: index,
            logsumexp: lse,
        });
    }
    Ok(())
}

pub(crate) fn check_prefix(prefix: &[OutputId], vocab: usize) -> Result<(), ScorerError> {
    match prefix.iter().find(|&&o| o as usize >= vocab) {
        Some(&output) => Err(ScorerError::OutOfRange { output, vocab }),
        None => Ok(()),
    }
}

/// Log-probability rows: `null` in JSON stands for `-inf`.
pub(crate) mod log_rows {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_json(rows: &[Vec<f64>]) -> Vec<Vec<Option<f64>>> {
        rows.iter()
            .map(|r| r.iter().map(|&x| x.is_finite().then_some(x)).collect())
            .collect()
    }

    pub fn from_json(rows: Vec<Vec<Option<f64>>>) -> Vec<Vec<f64>> {
        rows.into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|x| x.unwrap_or(f64::NEG_INFINITY))
                    .collect()
            })
            .collect()
    }

    pub fn serialize<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        to_json(rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        Ok(from_json(Vec::deserialize(d)?))
    }
}

/// A single log-probability, `null` for `-inf`.
pub(crate) mod log_value {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        x.is_finite().then_some(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}
