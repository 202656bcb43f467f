//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tempo_core::concept::{ConceptTable, Guide, MatchState, OutputId};
use tempo_core::constraints::{fashion_suite, ordered, FASHION_LABELS};
use tempo_core::decoder::{decode, ramp_push_up, DecodeConfig, Viability};
use tempo_core::dfa::{compile, compile_with, CompileOptions, Distance, Dfa};
use tempo_core::error::DecodeError;
use tempo_core::ltlf::{eval_trace, Atom, Formula, Trace};
use tempo_core::oracle::{brute_force_map, feasible_exact, OracleOptions};
use tempo_core::scorer::{logsumexp, LogitFile, MarkovTableScorer};

const KEYWORD_BUDGET: Duration = Duration::from_secs(1);
const SUITE_BUDGET: Duration = Duration::from_secs(120);
const COMPILER_FORMULAS: u64 = 600;
const MAX_TRACE_LEN: usize = 5;
const SOUNDNESS_INSTANCES: usize = 300;
const ORACLE_INSTANCES: usize = 240;
const ORACLE_MAX_HORIZON: usize = 6;
const GAP_TOLERANCE: f64 = 1e-9;
const DEFAULT_EQUALITY_RATE: f64 = 0.95;
const GROWTH_LIMIT: f64 = 2.5;
const RAMP_TOLERANCE: f64 = 1e-12;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn one_hot_trace(names: &[impl AsRef<str>]) -> Trace {
    Trace::one_hot(names.iter().map(|n| Atom::new(n.as_ref()).unwrap()))
}

fn keyword_automaton(report: &mut Report) {
    let start = Instant::now();
    let dfa = example_dfa();
    let iso = keyword_isomorphism(&dfa);
    let elapsed = start.elapsed();
    let mut d: Vec<Option<u32>> = dfa.distances().iter().map(|d| d.get()).collect();
    d.sort_by_key(|x| x.unwrap_or(u32::MAX));
    let distances_ok = d == [Some(0), Some(1), Some(2), Some(4), Some(5), None];
    let per_state = iso.as_ref().is_some_and(|m| {
        m.iter()
            .zip(KEYWORD_DISTANCES)
            .all(|(&q, want)| dfa.distance(q).get() == want)
    });
    let pass = iso.is_some()
        && dfa.deadlocks().count() == 1
        && dfa.accepting_states().count() == 1
        && distances_ok
        && per_state
        && elapsed < KEYWORD_BUDGET;
    report.line(
        "keyword-automaton",
        pass,
        format!(
            "{} states, {} deadlock, {} accepting, distances {:?}, isomorphic {}, {:?}",
            dfa.num_states(),
            dfa.deadlocks().count(),
            dfa.accepting_states().count(),
            d,
            iso.is_some(),
            elapsed
        ),
    );
}

fn abc_dfa(f: &Formula) -> Dfa {
    let costs = [("a", 1), ("b", 1), ("c", 1), ("noMatch", 1)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    compile(f, &CONCEPTS, &costs).unwrap()
}

fn compiler_correctness(report: &mut Report) {
    let start = Instant::now();
    let symbols = ["a", "b", "c", "noMatch"];
    let mut traces: Vec<Vec<usize>> = vec![Vec::new()];
    let mut all = Vec::new();
    for _ in 0..MAX_TRACE_LEN {
        traces = traces
            .iter()
            .flat_map(|t| (0..4).map(move |s| [t.as_slice(), &[s]].concat()))
            .collect();
        all.extend(traces.iter().cloned());
    }
    let prepared: Vec<Trace> = all
        .iter()
        .map(|t| one_hot_trace(&t.iter().map(|&i| symbols[i]).collect::<Vec<_>>()))
        .collect();
    let mut mismatches = 0usize;
    let mut max_depth = 0;
    let mut checks = 0usize;
    for seed in 0..COMPILER_FORMULAS {
        let f = seeded_formula(seed);
        max_depth = max_depth.max(f.depth());
        let dfa = abc_dfa(&f);
        let ids: Vec<u32> = symbols.iter().map(|s| dfa.symbol_index(s).unwrap()).collect();
        for (t, trace) in all.iter().zip(&prepared) {
            let word: Vec<u32> = t.iter().map(|&i| ids[i]).collect();
            if dfa.accepts_symbols(&word) != eval_trace(&f, trace, 0) {
                mismatches += 1;
            }
            checks += 1;
        }
    }
    let elapsed = start.elapsed();
    report.line(
        "compiler-correctness",
        mismatches == 0 && max_depth <= 4 && elapsed < SUITE_BUDGET,
        format!(
            "{COMPILER_FORMULAS} formulas (max depth {max_depth}) x {} traces of length 1..={MAX_TRACE_LEN}, {checks} checks, {mismatches} mismatches, {elapsed:?}",
            all.len()
        ),
    );
}

fn satisfies_formula(table: &ConceptTable, f: &Formula, outputs: &[OutputId]) -> bool {
    let names = table.nu_names(outputs);
    !names.is_empty() && eval_trace(f, &one_hot_trace(&names), 0)
}

fn soundness(report: &mut Report) {
    let start = Instant::now();
    let (mut feasible, mut covered, mut exceptions) = (0usize, 0usize, 0usize);
    let (mut refused_exact, mut unreachable, mut tripped, mut checks) = (0usize, 0usize, 0usize, 0usize);
    let mut seed = 0u64;
    while feasible < SOUNDNESS_INSTANCES && seed < 20 * SOUNDNESS_INSTANCES as u64 {
        let table = table_variant(seed);
        let f = seeded_formula(seed);
        let dfa = compile_for(&f, &table);
        let guide = Guide::new(&dfa, &table).unwrap();
        let k = [1, 2, 4, 8][(seed / 3 % 4) as usize];
        let Some(d0) = guide.effective_distance(dfa.initial(), MatchState::EMPTY).get() else {
            unreachable += 1;
            seed += 1;
            continue;
        };
        let horizon = (d0 as usize).max(1) + (seed % 7) as usize;
        let scorer = seeded_chain(table.vocab_size(), seed);
        let result = decode(&scorer, &guide, &[], &DecodeConfig::new(k, horizon));
        if !feasible_exact(&guide, horizon) {
            match result {
                Err(DecodeError::NoExactLength { .. }) => refused_exact += 1,
                _ => exceptions += 1,
            }
            seed += 1;
            continue;
        }
        feasible += 1;
        match result {
            Ok(out) => {
                checks += out.stats.invariant_checks;
                let ok = out.satisfied
                    && out.beams.iter().all(|b| {
                        b.outputs.len() == horizon
                            && guide.accepts_outputs(&b.outputs).unwrap()
                            && satisfies_formula(&table, &f, &b.outputs)
                    });
                if ok {
                    covered += 1;
                }
            }
            Err(DecodeError::Internal(_)) => tripped += 1,
            Err(_) => exceptions += 1,
        }
        seed += 1;
    }
    let elapsed = start.elapsed();
    report.line(
        "soundness",
        feasible >= SOUNDNESS_INSTANCES
            && covered == feasible
            && exceptions == 0
            && tripped == 0
            && elapsed < SUITE_BUDGET,
        format!(
            "{covered}/{feasible} feasible instances satisfied, {exceptions} exceptions, {tripped} invariant trips in {checks} checks; refused {refused_exact} without an exact-length solution, skipped {unreachable} unsatisfiable; {elapsed:?}"
        ),
    );
}

fn oracle_gap(report: &mut Report) {
    let table = table_variant(0);
    let exact_cfg = |k: usize, t: usize| DecodeConfig {
        alpha_min: 0.0,
        gamma: 1e6,
        ..DecodeConfig::new(k, t)
    };
    let (mut instances, mut worse, mut refusals_wrong) = (0usize, 0usize, 0usize);
    let (mut eq_default, mut eq_ramp_off) = (0usize, 0usize);
    let mut seed = 0u64;
    while instances < ORACLE_INSTANCES && seed < 10_000 {
        let f = seeded_formula(seed);
        let dfa = compile_for(&f, &table);
        let guide = Guide::new(&dfa, &table).unwrap();
        let horizon = 1 + (seed as usize % ORACLE_MAX_HORIZON);
        let scorer = seeded_chain(3, seed);
        seed += 1;
        let oracle = brute_force_map(&scorer, &guide, horizon, OracleOptions::default()).unwrap();
        if oracle.feasible_count == 0 {
            if decode(&scorer, &guide, &[], &DecodeConfig::new(4, horizon)).is_ok() {
                refusals_wrong += 1;
            }
            continue;
        }
        instances += 1;
        for k in [1, 2, 4, 8] {
            let out = decode(&scorer, &guide, &[], &DecodeConfig::new(k, horizon)).unwrap();
            if -out.best.natural_loglik < oracle.best_nll() - GAP_TOLERANCE {
                worse += 1;
            }
        }
        let k = oracle.feasible_count as usize;
        let full = decode(&scorer, &guide, &[], &DecodeConfig::new(k, horizon)).unwrap();
        if (full.best.natural_loglik - oracle.best_loglik).abs() <= GAP_TOLERANCE {
            eq_default += 1;
        }
        let off = decode(&scorer, &guide, &[], &exact_cfg(k, horizon)).unwrap();
        if (off.best.natural_loglik - oracle.best_loglik).abs() <= GAP_TOLERANCE {
            eq_ramp_off += 1;
        }
    }
    let rate = eq_default as f64 / instances.max(1) as f64;
    report.line(
        "oracle-gap",
        instances >= ORACLE_INSTANCES
            && worse == 0
            && refusals_wrong == 0
            && rate >= DEFAULT_EQUALITY_RATE
            && eq_ramp_off == instances,
        format!(
            "{instances} feasible instances (vocab 3, T<={ORACLE_MAX_HORIZON}): {worse} decodes below the oracle over k in 1,2,4,8; k=feasible-count equality {eq_default}/{instances} default, {eq_ramp_off}/{instances} with alpha_min=0; {refusals_wrong} infeasible instances decoded"
        ),
    );
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let z = logsumexp(logits);
    logits.iter().map(|x| x - z).collect()
}

/// Uniform random walk over outputs that keep an exact-length accepting
/// completion available.
fn sample_truth(guide: &Guide<'_>, viability: &Viability, horizon: usize, rng: &mut ChaCha8Rng) -> Vec<OutputId> {
    let (mut q, mut m) = (guide.dfa().initial(), MatchState::EMPTY);
    let mut out = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let options: Vec<(OutputId, _, _)> = (0..guide.table().vocab_size() as OutputId)
            .filter_map(|x| {
                let (q2, m2) = guide.next_state(q, x, m).unwrap();
                viability.viable(horizon - t - 1, q2, m2).then_some((x, q2, m2))
            })
            .collect();
        let (x, q2, m2) = options[rng.gen_range(0..options.len())];
        out.push(x);
        q = q2;
        m = m2;
    }
    out
}

fn fashion(report: &mut Report) {
    const HORIZON: usize = 4;
    const PER_SEED: usize = 200;
    const SIGNAL: f64 = 2.5;
    const NOISE: f64 = 1.2;
    let suite = fashion_suite();
    let table = ConceptTable::identity(&FASHION_LABELS).unwrap();
    let costs = table.costs();
    let mut compiled = 0;
    for f in &suite {
        if compile(f, &FASHION_LABELS, &costs).is_ok() {
            compiled += 1;
        }
    }
    let all = Formula::conjunction(suite.iter().cloned());
    let Ok(dfa) = compile_with(&all, &FASHION_LABELS, &costs, &CompileOptions::default()) else {
        report.line("fashion-suite", false, "conjunction does not compile".into());
        return;
    };
    let guide = Guide::new(&dfa, &table).unwrap();
    let viability = Viability::new(&guide, HORIZON, None);
    let noise = Normal::new(0.0, NOISE).unwrap();
    let mut rows_out = Vec::new();
    let mut pass = compiled == suite.len();
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xfa5 + seed);
        let truths: Vec<Vec<OutputId>> = (0..PER_SEED)
            .map(|_| sample_truth(&guide, &viability, HORIZON, &mut rng))
            .collect();
        let sequences: Vec<(String, Vec<Vec<f64>>)> = truths
            .iter()
            .enumerate()
            .map(|(i, truth)| {
                let rows = truth
                    .iter()
                    .map(|&y| {
                        let logits: Vec<f64> = (0..FASHION_LABELS.len())
                            .map(|c| if c == y as usize { SIGNAL } else { 0.0 } + noise.sample(&mut rng))
                            .collect();
                        log_softmax(&logits)
                    })
                    .collect();
                (format!("s{i:03}"), rows)
            })
            .collect();
        let file = LogitFile::new(FASHION_LABELS.len(), sequences).unwrap();
        let (mut free_acc, mut free_cov, mut con_acc, mut con_cov) = (0usize, 0usize, 0usize, 0usize);
        for (i, truth) in truths.iter().enumerate() {
            let id = format!("s{i:03}");
            let argmax: Vec<OutputId> = file
                .rows(&id)
                .unwrap()
                .iter()
                .map(|row| {
                    (0..row.len())
                        .max_by(|&a, &b| row[a].total_cmp(&row[b]))
                        .unwrap() as OutputId
                })
                .collect();
            free_acc += usize::from(&argmax == truth);
            free_cov += usize::from(guide.accepts_outputs(&argmax).unwrap());
            let scorer = file.scorer(&id).unwrap();
            let out = decode(&scorer, &guide, &[], &DecodeConfig::new(8, HORIZON)).unwrap();
            con_acc += usize::from(&out.best.outputs == truth);
            con_cov += usize::from(
                guide.accepts_outputs(&out.best.outputs).unwrap()
                    && satisfies_formula(&table, &all, &out.best.outputs),
            );
        }
        pass &= con_acc >= free_acc && con_cov == PER_SEED && free_cov < PER_SEED;
        let pct = |x: usize| 100.0 * x as f64 / PER_SEED as f64;
        rows_out.push(format!(
            "seed {seed}: accuracy {:.1}% -> {:.1}%, coverage {:.1}% -> {:.1}%",
            pct(free_acc),
            pct(con_acc),
            pct(free_cov),
            pct(con_cov)
        ));
    }
    report.line(
        "fashion-suite",
        pass,
        format!(
            "{compiled}/{} rules compile, conjunction has {} states; argmax -> constrained (T={HORIZON}, {PER_SEED} sequences per seed)",
            suite.len(),
            dfa.num_states()
        ),
    );
    for r in rows_out {
        println!("    {r}");
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

fn complexity(report: &mut Report) {
    const HORIZON: usize = 32;
    const REPS: usize = 9;
    let scorer = MarkovTableScorer::from_json_str(include_str!("../fixtures/bench_markov.json")).unwrap();
    let table = ConceptTable::from_json_str(include_str!("../fixtures/bench_table.json"), None).unwrap();
    let f = ordered(&["alpha", "beta", "gamma"]).unwrap();
    let dfa = compile_for(&f, &table);
    let guide = Guide::new(&dfa, &table).unwrap();
    let beams = [4usize, 8, 16, 32];
    let mut medians = Vec::new();
    let mut cells = Vec::new();
    let mut satisfied = true;
    for &k in &beams {
        let cfg = DecodeConfig::new(k, HORIZON);
        satisfied &= decode(&scorer, &guide, &[], &cfg).unwrap().satisfied;
        let mut times: Vec<f64> = (0..REPS)
            .map(|_| {
                let start = Instant::now();
                let out = decode(&scorer, &guide, &[], &cfg).unwrap();
                let t = start.elapsed().as_secs_f64() * 1e3;
                satisfied &= out.satisfied;
                t
            })
            .collect();
        let mean = times.iter().sum::<f64>() / REPS as f64;
        let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (REPS - 1) as f64;
        cells.push(format!("{mean:.2} ± {:.2}", (var / REPS as f64).sqrt()));
        medians.push(median(&mut times));
    }
    let ratios: Vec<f64> = medians.windows(2).map(|w| w[1] / w[0]).collect();
    let pass = satisfied && ratios.iter().all(|&r| r <= GROWTH_LIMIT);
    report.line(
        "complexity-scaling",
        pass,
        format!(
            "T={HORIZON}, vocab {}, median growth per doubling {:?} (limit {GROWTH_LIMIT})",
            table.vocab_size(),
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
        ),
    );
    println!("    {:<10} | {}", "Method", beams.map(|k| format!("{k:>14}")).join(" | "));
    println!("    {:<10} | {}", "ms/decode", cells.iter().map(|c| format!("{c:>14}")).collect::<Vec<_>>().join(" | "));
}

fn ramp_grid(report: &mut Report) {
    let points = [
        ("clamp-high", 0.5, Distance::finite(5), 4, 1.0, 1.0),
        ("clamp-low", 0.5, Distance::ZERO, 4, 1.0, 0.5),
        ("midpoint", 0.5, Distance::finite(2), 4, 1.0, 0.75),
    ];
    let mut detail = Vec::new();
    let mut pass = true;
    for (name, alpha_min, d, rem, gamma, want) in points {
        let got = ramp_push_up(alpha_min, d, rem, gamma);
        pass &= (got - want).abs() <= RAMP_TOLERANCE;
        detail.push(format!("{name} {got}"));
    }
    report.line("ramp-grid", pass, detail.join(", "));
}

fn main() {
    let mut report = Report { failed: 0 };
    keyword_automaton(&mut report);
    compiler_correctness(&mut report);
    soundness(&mut report);
    oracle_gap(&mut report);
    fashion(&mut report);
    complexity(&mut report);
    ramp_grid(&mut report);
    if report.failed > 0 {
        println!("{} criteria failed", report.failed);
        std::process::exit(1);
    }
}
