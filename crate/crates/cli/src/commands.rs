use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use tempo_core::constraints::{ordered_text, unordered_text};
use tempo_core::dfa::Dfa;

use crate::error::CliError;
use crate::inputs::{read, write, AutomatonArgs};
use crate::manifest::{coverage, Job, RunManifest, RunRecord};
use crate::{Format, Mode};

fn emit(text: &str) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Runtime(format!("stdout: {e}")))
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

pub fn report(dfa: &Dfa) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "states: {}", dfa.num_states());
    let _ = writeln!(out, "accepting: {}", dfa.accepting_states().count());
    let _ = writeln!(out, "deadlocks: {}", dfa.deadlocks().count());
    let _ = writeln!(out, "initial distance: {}", dfa.distance(dfa.initial()));
    let _ = writeln!(out, "symbols: {}", dfa.symbols().join(" "));
    for q in 0..dfa.num_states() as u32 {
        let mut tags = Vec::new();
        if q == dfa.initial() {
            tags.push("initial");
        }
        if dfa.is_accepting(q) {
            tags.push("accepting");
        }
        if dfa.is_deadlock(q) {
            tags.push("deadlock");
        }
        let _ = writeln!(out, "  s{q}: d={} {}", dfa.distance(q), tags.join(" "));
    }
    out
}

pub fn compile(automaton: &AutomatonArgs, format: Format, out_dir: Option<&Path>) -> Result<(), CliError> {
    let loaded = automaton.load()?;
    let dfa = &loaded.dfa;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
        write(&dir.join("dfa.json"), &dfa.to_json_string())?;
        write(&dir.join("dfa.dot"), &dfa.export_dot())?;
        write(&dir.join("report.txt"), &report(dfa))?;
    }
    match format {
        Format::Text => emit(&report(dfa)),
        Format::Json => emit(&(dfa.to_json_string() + "\n")),
        Format::Dot => emit(&dfa.export_dot()),
    }
}

/// Parses a trace line: a JSON array of symbol names (singleton arrays are
/// unwrapped) or whitespace-separated names.
fn trace_line(line: &str) -> Result<Vec<String>, String> {
    let line = line.trim();
    if !line.starts_with('[') {
        return Ok(line.split_whitespace().map(String::from).collect());
    }
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let items = value.as_array().ok_or("expected a JSON array")?;
    items
        .iter()
        .map(|item| match item {
            serde_json::Value::String(s) => Ok(s.clone()),
            serde_json::Value::Array(a) if a.len() == 1 && a[0].is_string() => {
                Ok(a[0].as_str().unwrap_or_default().to_string())
            }
            other => Err(format!("instant {other} is not a single symbol")),
        })
        .collect()
}

pub fn check(automaton: &AutomatonArgs, traces: &Path, keep_going: bool, format: Format) -> Result<(), CliError> {
    let dfa = automaton.load()?.dfa;
    let file = std::fs::File::open(traces).map_err(|e| CliError::input(traces.display(), e))?;
    let mut out = String::new();
    for (i, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::input(traces.display(), e))?;
        let verdict = trace_line(&line).and_then(|t| dfa.accepts(&t).map_err(|e| e.to_string()));
        let n = i + 1;
        match (verdict, format) {
            (Ok(ok), Format::Json) => {
                let _ = writeln!(out, "{}", serde_json::json!({"line": n, "accepted": ok}));
            }
            (Ok(ok), _) => {
                let _ = writeln!(out, "{n}: {}", if ok { "accept" } else { "reject" });
            }
            (Err(e), _) if !keep_going => {
                emit(&out)?;
                return Err(CliError::Input(format!("{}:{n}: {e}", traces.display())));
            }
            (Err(e), Format::Json) => {
                let _ = writeln!(out, "{}", serde_json::json!({"line": n, "error": e}));
            }
            (Err(e), _) => {
                let _ = writeln!(out, "{n}: error: {e}");
            }
        }
    }
    emit(&out)
}

pub fn gen_constraints(mode: Mode, concepts: &[String]) -> Result<(), CliError> {
    let text = match mode {
        Mode::Unordered => unordered_text(concepts)?,
        Mode::Ordered => ordered_text(concepts)?,
    };
    emit(&(text + "\n"))
}

fn render_runs(runs: &[RunRecord], format: Format) -> String {
    let mut out = String::new();
    for r in runs {
        match format {
            Format::Text => {
                let label = r.id.as_deref().map(|id| format!("{id} ")).unwrap_or_default();
                let outputs: Vec<String> = r.result.outputs.iter().map(u32::to_string).collect();
                let _ = writeln!(
                    out,
                    "{label}prompt {}: {} | outputs {} | loglik {:.6} | {}",
                    r.prompt,
                    r.result.concepts.join(" "),
                    outputs.join(" "),
                    r.result.natural_loglik,
                    if r.result.satisfied { "satisfied" } else { "violated" }
                );
            }
            _ => {
                let _ = writeln!(out, "{}", serde_json::to_string(r).expect("serializable"));
            }
        }
    }
    out
}

pub fn decode(job: &Job, format: Format, output: Option<&Path>, manifest: Option<&Path>) -> Result<(), CliError> {
    if format == Format::Dot {
        return Err(CliError::Input("decode output is json or text".into()));
    }
    let outcome = job.run(None)?;
    let rendered = render_runs(&outcome.runs, format);
    let mut outputs = Vec::new();
    if let Some(path) = output {
        write(path, &rendered)?;
        outputs.push(path.to_path_buf());
    } else {
        emit(&rendered)?;
    }
    if let Some(path) = manifest {
        write(path, &json(&job.manifest("decode", Vec::new(), &outcome, outputs)))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchRow {
    beams: usize,
    mean_ms: f64,
    stderr_ms: f64,
    median_ms: f64,
    coverage: f64,
}

pub fn bench(job: &Job, sweep: &[usize], reps: usize, format: Format, manifest: Option<&Path>) -> Result<(), CliError> {
    if sweep.is_empty() || reps == 0 {
        return Err(CliError::Input("bench needs at least one beam count and one repetition".into()));
    }
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut compile_ms = 0.0;
    for &k in sweep {
        let mut times = Vec::with_capacity(reps);
        let mut last = None;
        for _ in 0..reps {
            let start = Instant::now();
            let outcome = job.run(Some(k))?;
            let total = start.elapsed().as_secs_f64() * 1e3;
            compile_ms = outcome.timing_ms["compile"];
            times.push(outcome.timing_ms["decode"].min(total));
            last = Some(outcome);
        }
        let outcome = last.expect("at least one repetition");
        let n = times.len() as f64;
        let mean = times.iter().sum::<f64>() / n;
        let var = if reps > 1 {
            times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        times.sort_by(f64::total_cmp);
        rows.push(BenchRow {
            beams: k,
            mean_ms: mean,
            stderr_ms: (var / n).sqrt(),
            median_ms: times[times.len() / 2],
            coverage: coverage(&outcome.runs),
        });
        runs.extend(outcome.runs);
    }
    match format {
        Format::Json => emit(&json(&rows))?,
        _ => {
            let mut out = String::new();
            let header: Vec<String> = rows.iter().map(|r| format!("{:>15}", r.beams)).collect();
            let cells: Vec<String> = rows
                .iter()
                .map(|r| format!("{:>15}", format!("{:.2} ± {:.2}", r.mean_ms, r.stderr_ms)))
                .collect();
            let cov: Vec<String> = rows.iter().map(|r| format!("{:>14.1}%", 100.0 * r.coverage)).collect();
            let _ = writeln!(out, "{:<12}|{}", "Method", header.join(" |"));
            let _ = writeln!(out, "{:<12}|{}", "tempo (ms)", cells.join(" |"));
            let _ = writeln!(out, "{:<12}|{}", "coverage", cov.join(" |"));
            emit(&out)?;
        }
    }
    if let Some(path) = manifest {
        let mut timing = std::collections::BTreeMap::from([("compile".to_string(), compile_ms)]);
        for r in &rows {
            timing.insert(format!("decode_k{}", r.beams), r.mean_ms);
        }
        let outcome = crate::manifest::Outcome { runs, timing_ms: timing };
        write(path, &json(&job.manifest("bench", sweep.to_vec(), &outcome, Vec::new())))?;
    }
    Ok(())
}

pub fn replay(path: &PathBuf, format: Format) -> Result<(), CliError> {
    let manifest: RunManifest =
        serde_json::from_str(&read(path)?).map_err(|e| CliError::input(path.display(), e))?;
    let fresh = manifest.replay()?;
    emit(&render_runs(&fresh, format))?;
    if fresh.len() != manifest.runs.len() {
        return Err(CliError::Mismatch(format!(
            "{} runs recorded, {} replayed",
            manifest.runs.len(),
            fresh.len()
        )));
    }
    for (i, (old, new)) in manifest.runs.iter().zip(&fresh).enumerate() {
        if old != new {
            return Err(CliError::Mismatch(format!("run {i} differs: recorded {old:?}, replayed {new:?}")));
        }
    }
    eprintln!("replay matches {} recorded runs", fresh.len());
    Ok(())
}
