use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use clap::Args;
use serde::{Deserialize, Serialize};
use tempo_core::concept::ConceptTable;
use tempo_core::constraints::parse_suite;
use tempo_core::dfa::{compile_with, CompileOptions, Dfa, DEFAULT_MAX_STATES};
use tempo_core::ltlf::{parse_formula, Atom, Formula, NO_MATCH};
use tempo_core::scorer::{LogitFile, MarkovTableScorer, RemoteOptions, RemoteScorer, Scorer};

use crate::error::CliError;

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input(path.display(), e))
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// Where the automaton comes from: a formula (inline or a suite file whose
/// lines are conjoined) compiled on the spot, or a saved matrix.
#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AutomatonArgs {
    /// Formula text.
    #[arg(long, conflicts_with_all = ["formula_file", "dfa"])]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    /// One formula per line; `#` comments and blank lines are skipped.
    #[arg(long, conflicts_with = "dfa")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula_file: Option<PathBuf>,
    /// Automaton saved by `compile --format json`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dfa: Option<PathBuf>,
    /// Concept names, when no concept table is given.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub concepts: Vec<String>,
    /// Concept table (JSON object of concept -> output ids).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    /// Vocabulary size, overriding the table header.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab_size: Option<usize>,
    /// JSON object of symbol costs, applied over the defaults.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
    #[serde(default = "default_max_states")]
    pub max_states: usize,
}

fn default_max_states() -> usize {
    DEFAULT_MAX_STATES
}

pub struct Loaded {
    pub dfa: Dfa,
    pub table: Option<ConceptTable>,
    pub compile_ms: f64,
}

impl AutomatonArgs {
    pub fn load_table(&self) -> Result<Option<ConceptTable>, CliError> {
        let Some(path) = &self.table else {
            return Ok(None);
        };
        ConceptTable::from_json_str(&read(path)?, self.vocab_size)
            .map(Some)
            .map_err(|e| CliError::input(path.display(), e))
    }

    fn formula(&self, names: &[String]) -> Result<Option<Formula>, CliError> {
        let mut alphabet: Vec<Atom> = names
            .iter()
            .map(|n| Atom::new(n.as_str()))
            .collect::<Result<_, _>>()?;
        alphabet.push(Atom::no_match());
        if let Some(text) = &self.formula {
            return Ok(Some(parse_formula(text, &alphabet)?));
        }
        if let Some(path) = &self.formula_file {
            let parts = parse_suite(&read(path)?, &alphabet)
                .map_err(|e| CliError::input(path.display(), e))?;
            if parts.is_empty() {
                return Err(CliError::input(path.display(), "no formula found"));
            }
            return Ok(Some(Formula::conjunction(parts)));
        }
        Ok(None)
    }

    fn costs(&self, names: &[String], table: Option<&ConceptTable>) -> Result<HashMap<String, u32>, CliError> {
        let mut costs = match table {
            Some(t) => t.costs(),
            None => names
                .iter()
                .map(String::as_str)
                .chain([NO_MATCH])
                .map(|n| (n.to_string(), 1))
                .collect(),
        };
        if let Some(path) = &self.costs {
            let extra: HashMap<String, u32> =
                serde_json::from_str(&read(path)?).map_err(|e| CliError::input(path.display(), e))?;
            costs.extend(extra);
        }
        Ok(costs)
    }

    /// Loads or compiles the automaton.
    pub fn load(&self) -> Result<Loaded, CliError> {
        let table = self.load_table()?;
        if let Some(path) = &self.dfa {
            let dfa = Dfa::from_json_str(&read(path)?).map_err(|e| CliError::input(path.display(), e))?;
            return Ok(Loaded {
                dfa,
                table,
                compile_ms: 0.0,
            });
        }
        let names: Vec<String> = match &table {
            Some(t) => t.concepts().to_vec(),
            None => self.concepts.clone(),
        };
        if names.is_empty() {
            return Err(CliError::Input("give --table or --concepts".into()));
        }
        let formula = self
            .formula(&names)?
            .ok_or_else(|| CliError::Input("give --formula, --formula-file or --dfa".into()))?;
        let costs = self.costs(&names, table.as_ref())?;
        let start = Instant::now();
        let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let options = CompileOptions {
            max_states: self.max_states,
            ..CompileOptions::default()
        };
        let dfa = compile_with(&formula, &name_refs, &costs, &options)?;
        Ok(Loaded {
            dfa,
            table,
            compile_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }
}

/// `markov:FILE`, `logits:FILE[#ID]` or `remote:URL`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScorerSpec {
    Markov(PathBuf),
    Logits(PathBuf, Option<String>),
    Remote(String),
}

impl FromStr for ScorerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("scorer `{s}` is not of the form KIND:ARG"))?;
        if rest.is_empty() {
            return Err(format!("scorer `{s}` has an empty argument"));
        }
        match kind {
            "markov" => Ok(ScorerSpec::Markov(rest.into())),
            "logits" => Ok(match rest.split_once('#') {
                Some((path, id)) => ScorerSpec::Logits(path.into(), Some(id.to_string())),
                None => ScorerSpec::Logits(rest.into(), None),
            }),
            "remote" => Ok(ScorerSpec::Remote(rest.to_string())),
            _ => Err(format!("unknown scorer kind `{kind}` (markov, logits, remote)")),
        }
    }
}

impl fmt::Display for ScorerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScorerSpec::Markov(p) => write!(f, "markov:{}", p.display()),
            ScorerSpec::Logits(p, None) => write!(f, "logits:{}", p.display()),
            ScorerSpec::Logits(p, Some(id)) => write!(f, "logits:{}#{id}", p.display()),
            ScorerSpec::Remote(url) => write!(f, "remote:{url}"),
        }
    }
}

impl Serialize for ScorerSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScorerSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A scorer to decode with; logit files yield one per sequence.
pub struct Source {
    pub id: Option<String>,
    pub scorer: Box<dyn Scorer>,
}

impl ScorerSpec {
    pub fn open(&self, timeout: Duration, batch_limit: usize) -> Result<Vec<Source>, CliError> {
        match self {
            ScorerSpec::Markov(path) => {
                let chain = MarkovTableScorer::from_json_str(&read(path)?)
                    .map_err(|e| CliError::input(path.display(), e))?;
                Ok(vec![Source {
                    id: None,
                    scorer: Box::new(chain),
                }])
            }
            ScorerSpec::Logits(path, id) => {
                let file = LogitFile::from_json_str(&read(path)?)
                    .map_err(|e| CliError::input(path.display(), e))?;
                let ids: Vec<String> = match id {
                    Some(id) => vec![id.clone()],
                    None => file.ids().map(String::from).collect(),
                };
                ids.into_iter()
                    .map(|id| {
                        Ok(Source {
                            scorer: Box::new(file.scorer(&id)?),
                            id: Some(id),
                        })
                    })
                    .collect()
            }
            ScorerSpec::Remote(url) => {
                let options = RemoteOptions {
                    timeout,
                    batch_limit,
                };
                Ok(vec![Source {
                    id: None,
                    scorer: Box::new(RemoteScorer::connect(url, options)?),
                }])
            }
        }
    }
}

/// Comma-separated output ids; empty text is the empty prompt.
pub fn parse_prompt(text: &str) -> Result<Vec<u32>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u32>().map_err(|e| format!("bad output id `{t}`: {e}")))
        .collect()
}
