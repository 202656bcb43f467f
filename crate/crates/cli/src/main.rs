//! `tempo`: compile LTLf constraints, check traces, and run constrained
//! beam search from the command line.

mod commands;
mod error;
mod inputs;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tempo_core::decoder::DecodeConfig;

use crate::error::CliError;
use crate::inputs::{parse_prompt, AutomatonArgs, ScorerSpec};
use crate::manifest::Job;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Dot,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Unordered,
    Ordered,
}

#[derive(Parser)]
#[command(name = "tempo", version, about = "LTLf-constrained beam search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a formula and report states, deadlocks and distances.
    Compile {
        #[command(flatten)]
        automaton: AutomatonArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Also write dfa.json, dfa.dot and report.txt here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print accept/reject for each trace line.
    Check {
        #[command(flatten)]
        automaton: AutomatonArgs,
        /// One trace per line: symbol names, space separated or a JSON array.
        traces: PathBuf,
        /// Report malformed lines and continue.
        #[arg(long)]
        keep_going: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Constrained beam search.
    Decode {
        #[command(flatten)]
        automaton: AutomatonArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 64)]
        beams: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Write results here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write a run manifest for `tempo replay`.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Print a keyword constraint pattern.
    GenConstraints {
        #[arg(long, value_enum)]
        mode: Mode,
        concepts: Vec<String>,
    },
    /// Time decoding across beam counts.
    Bench {
        #[command(flatten)]
        automaton: AutomatonArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
        beams: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Rerun a manifest and compare the outputs with the recorded ones.
    Replay {
        manifest: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Args)]
struct RunArgs {
    /// markov:FILE, logits:FILE[#ID] or remote:URL (tcp://, http://).
    #[arg(long)]
    scorer: ScorerSpec,
    #[arg(long, default_value_t = 32)]
    horizon: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha_min: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated prompt output ids; repeat for a batch.
    #[arg(long, value_parser = parse_prompt)]
    prompt: Vec<Vec<u32>>,
    /// Output id that ends a sequence early.
    #[arg(long)]
    eos: Option<u32>,
    /// Let prompt outputs advance the automaton.
    #[arg(long)]
    prompt_in_scope: bool,
    /// Remote scorer deadline per request.
    #[arg(long, default_value_t = 30_000)]
    timeout_ms: u64,
    /// Largest number of prefixes per remote request.
    #[arg(long, default_value_t = 64)]
    batch_limit: usize,
}

impl RunArgs {
    fn job(self, automaton: AutomatonArgs, beams: usize) -> Job {
        let prompts = if self.prompt.is_empty() {
            vec![Vec::new()]
        } else {
            self.prompt
        };
        Job {
            automaton,
            scorer: self.scorer,
            timeout: Duration::from_millis(self.timeout_ms),
            batch_limit: self.batch_limit,
            prompts,
            config: DecodeConfig {
                beams,
                horizon: self.horizon,
                alpha_min: self.alpha_min,
                gamma: self.gamma,
                epsilon: self.epsilon,
                seed: self.seed,
                eos: self.eos,
                prompt_in_scope: self.prompt_in_scope,
                trace: false,
            },
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Compile {
            automaton,
            format,
            out_dir,
        } => commands::compile(&automaton, format, out_dir.as_deref()),
        Command::Check {
            automaton,
            traces,
            keep_going,
            format,
        } => commands::check(&automaton, &traces, keep_going, format),
        Command::Decode {
            automaton,
            run,
            beams,
            format,
            output,
            manifest,
        } => commands::decode(&run.job(automaton, beams), format, output.as_deref(), manifest.as_deref()),
        Command::GenConstraints { mode, concepts } => commands::gen_constraints(mode, &concepts),
        Command::Bench {
            automaton,
            run,
            beams,
            reps,
            format,
            manifest,
        } => {
            let first = beams.first().copied().unwrap_or(1);
            commands::bench(&run.job(automaton, first), &beams, reps, format, manifest.as_deref())
        }
        Command::Replay { manifest, format } => commands::replay(&manifest, format),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tempo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
