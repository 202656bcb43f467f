use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_prefix, Scorer};
use crate::concept::OutputId;
use crate::error::ScorerError;

const STOCHASTIC_TOLERANCE: f64 = 1e-6;

#[derive(Serialize, Deserialize)]
struct MarkovJson {
    initial: Vec<f64>,
    transition: Vec<Vec<f64>>,
}

/// Time-homogeneous Markov chain over outputs. The row for a prefix is the
/// initial distribution when the prefix is empty, otherwise the transition
/// row of its last output.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovTableScorer {
    initial: Vec<f64>,
    transition: Vec<Vec<f64>>,
    log_initial: Vec<f64>,
    log_transition: Vec<Vec<f64>>,
}

fn check_distribution(p: &[f64], what: &str, vocab: usize) -> Result<(), ScorerError> {
    if p.len() != vocab {
        return Err(ScorerError::Invalid(format!(
            "{what} has {} entries, expected {vocab}",
            p.len()
        )));
    }
    if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(ScorerError::Invalid(format!(
            "{what} has entries outside [0, 1]"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > STOCHASTIC_TOLERANCE {
        return Err(ScorerError::Invalid(format!("{what} sums to {total}")));
    }
    Ok(())
}

impl MarkovTableScorer {
    /// Probabilities, not log-probabilities.
    pub fn new(initial: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self, ScorerError> {
        let vocab = initial.len();
        if vocab == 0 {
            return Err(ScorerError::Invalid("empty vocabulary".into()));
        }
        check_distribution(&initial, "initial distribution", vocab)?;
        if transition.len() != vocab {
            return Err(ScorerError::Invalid(format!(
                "transition has {} rows, expected {vocab}",
                transition.len()
            )));
        }
        for (i, row) in transition.iter().enumerate() {
            check_distribution(row, &format!("transition row {i}"), vocab)?;
        }
        let log = |p: &[f64]| p.iter().map(|x| x.ln()).collect::<Vec<_>>();
        Ok(MarkovTableScorer {
            log_initial: log(&initial),
            log_transition: transition.iter().map(|r| log(r)).collect(),
            initial,
            transition,
        })
    }

    pub fn uniform(vocab: usize) -> Self {
        let p = vec![1.0 / vocab as f64; vocab];
        Self::new(p.clone(), vec![p; vocab]).expect("uniform chain is valid")
    }

    /// Random chain with strictly positive entries; `sharpness` > 0 skews
    /// rows toward a few outputs.
    pub fn random(vocab: usize, sharpness: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let row = |rng: &mut ChaCha8Rng| {
            let w: Vec<f64> = (0..vocab)
                .map(|_| (sharpness * rng.gen::<f64>()).exp() + 1e-3)
                .collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect::<Vec<_>>()
        };
        let initial = row(&mut rng);
        let transition = (0..vocab).map(|_| row(&mut rng)).collect();
        Self::new(initial, transition).expect("random chain is valid")
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn from_json_str(text: &str) -> Result<Self, ScorerError> {
        let json: MarkovJson =
            serde_json::from_str(text).map_err(|e| ScorerError::Invalid(e.to_string()))?;
        Self::new(json.initial, json.transition)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&MarkovJson {
            initial: self.initial.clone(),
            transition: self.transition.clone(),
        })
        .expect("chain serializes")
    }

    pub fn row(&self, prefix: &[OutputId]) -> Result<&[f64], ScorerError> {
        check_prefix(prefix, self.initial.len())?;
        Ok(match prefix.last() {
            None => &self.log_initial,
            Some(&last) => &self.log_transition[last as usize],
        })
    }
}

impl Scorer for MarkovTableScorer {
    fn vocab_size(&self) -> usize {
        self.initial.len()
    }

    fn score(&self, prefixes: &[&[OutputId]]) -> Result<Vec<Vec<f64>>, ScorerError> {
        prefixes
            .iter()
            .map(|p| self.row(p).map(<[f64]>::to_vec))
            .collect()
    }
}
