use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use tempo_core::concept::{ConceptTable, Guide, OutputId};
use tempo_core::decoder::{decode_batch, DecodeConfig, DecodeResult};

use crate::error::CliError;
use crate::inputs::{AutomatonArgs, ScorerSpec};

/// Everything needed to rerun a decode or a beam sweep, plus what it
/// produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub command: String,
    pub automaton: AutomatonArgs,
    pub scorer: ScorerSpec,
    pub timeout_ms: u64,
    pub batch_limit: usize,
    pub prompts: Vec<Vec<OutputId>>,
    pub config: DecodeConfig,
    /// Beam counts of a sweep; empty for a single decode.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<usize>,
    pub seeds: Vec<u64>,
    pub timing_ms: BTreeMap<String, f64>,
    /// Fraction of runs whose output satisfies the constraint.
    pub coverage: f64,
    pub runs: Vec<RunRecord>,
    pub output_paths: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beams: Option<usize>,
    pub prompt: usize,
    #[serde(flatten)]
    pub result: DecodeResult,
}

/// A decode request as given on the command line or read from a manifest.
pub struct Job {
    pub automaton: AutomatonArgs,
    pub scorer: ScorerSpec,
    pub timeout: Duration,
    pub batch_limit: usize,
    pub prompts: Vec<Vec<OutputId>>,
    pub config: DecodeConfig,
}

pub struct Outcome {
    pub runs: Vec<RunRecord>,
    pub timing_ms: BTreeMap<String, f64>,
}

fn absolute(path: &Path) -> PathBuf {
    std::fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf())
}

impl Job {
    /// Runs one decode per scorer source, with all prompts batched.
    /// `beams` overrides the configured beam count.
    pub fn run(&self, beams: Option<usize>) -> Result<Outcome, CliError> {
        let load_start = Instant::now();
        let loaded = self.automaton.load()?;
        let table: ConceptTable = match loaded.table {
            Some(t) => t,
            None => ConceptTable::identity(&self.automaton.concepts)?,
        };
        let guide = Guide::new(&loaded.dfa, &table)?;
        let sources = self.scorer.open(self.timeout, self.batch_limit)?;
        let load_ms = load_start.elapsed().as_secs_f64() * 1e3 - loaded.compile_ms;
        let mut cfg = self.config.clone();
        if let Some(k) = beams {
            cfg.beams = k;
        }
        let prompts: Vec<&[OutputId]> = self.prompts.iter().map(Vec::as_slice).collect();
        let start = Instant::now();
        let mut runs = Vec::new();
        for source in &sources {
            let decoded = decode_batch(source.scorer.as_ref(), &guide, &prompts, &cfg)?;
            for (i, d) in decoded.iter().enumerate() {
                runs.push(RunRecord {
                    id: source.id.clone(),
                    beams,
                    prompt: i,
                    result: d.result(),
                });
            }
        }
        let timing_ms = BTreeMap::from([
            ("compile".to_string(), loaded.compile_ms),
            ("load".to_string(), load_ms),
            ("decode".to_string(), start.elapsed().as_secs_f64() * 1e3),
        ]);
        Ok(Outcome { runs, timing_ms })
    }

    pub fn manifest(&self, command: &str, sweep: Vec<usize>, outcome: &Outcome, outputs: Vec<PathBuf>) -> RunManifest {
        let mut automaton = self.automaton.clone();
        for p in [
            &mut automaton.formula_file,
            &mut automaton.dfa,
            &mut automaton.table,
            &mut automaton.costs,
        ]
        .into_iter()
        .flatten()
        {
            *p = absolute(p);
        }
        let scorer = match &self.scorer {
            ScorerSpec::Markov(p) => ScorerSpec::Markov(absolute(p)),
            ScorerSpec::Logits(p, id) => ScorerSpec::Logits(absolute(p), id.clone()),
            remote => remote.clone(),
        };
        RunManifest {
            tool: format!("tempo {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            automaton,
            scorer,
            timeout_ms: self.timeout.as_millis() as u64,
            batch_limit: self.batch_limit,
            prompts: self.prompts.clone(),
            config: self.config.clone(),
            sweep,
            seeds: vec![self.config.seed],
            timing_ms: outcome.timing_ms.clone(),
            coverage: coverage(&outcome.runs),
            runs: outcome.runs.clone(),
            output_paths: outputs.iter().map(|p| absolute(p)).collect(),
        }
    }
}

pub fn coverage(runs: &[RunRecord]) -> f64 {
    if runs.is_empty() {
        return 0.0;
    }
    runs.iter().filter(|r| r.result.satisfied).count() as f64 / runs.len() as f64
}

impl RunManifest {
    pub fn job(&self) -> Job {
        Job {
            automaton: self.automaton.clone(),
            scorer: self.scorer.clone(),
            timeout: Duration::from_millis(self.timeout_ms),
            batch_limit: self.batch_limit,
            prompts: self.prompts.clone(),
            config: self.config.clone(),
        }
    }

    /// Reruns the recorded work and returns the fresh records.
    pub fn replay(&self) -> Result<Vec<RunRecord>, CliError> {
        let job = self.job();
        if self.sweep.is_empty() {
            return Ok(job.run(None)?.runs);
        }
        let mut runs = Vec::new();
        for &k in &self.sweep {
            runs.extend(job.run(Some(k))?.runs);
        }
        Ok(runs)
    }
}
