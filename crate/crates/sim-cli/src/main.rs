//! Command line front end.
//!
//! Machine-readable JSON goes to standard output or `--out`; human
//! commentary goes to standard error. Exit codes are a stable contract:
//! 0 for success or a negative finding, 1 for a positive finding (a
//! violation witness or failed conformance), 2 for usage and parse errors.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use sim_core::engine::{
    run, run_values, AdversarySchedule, RunConfig, ValueMachine, ValueRun, ValueRunConfig,
};
use sim_core::harness::{falsify, horizon_cap, verify_verdict, Verdict};
use sim_core::model::validate::{validate_execution, validate_structure};
use sim_core::model::{Bit, ProcessId};
use sim_core::reductions::{
    byzantine_behavior, derive_anchors, AnchorError, BinaryOverlay, DsIc, IcThenSelect,
    BEHAVIOR_IDS,
};
use sim_core::registry;
use sim_core::trace::{TraceDoc, TraceOptions};
use sim_core::validity::{
    classify_solvability, resolve_property, GammaTable, InputConfiguration, Solvability, Value,
};

#[derive(Parser)]
#[command(
    name = "sim",
    version,
    about = "Round-synchronous agreement simulator and falsifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an algorithm under an omission schedule and emit the trace.
    Run(RunArgs),
    /// Hunt for a counterexample to a candidate within the message budget.
    Attack(AttackArgs),
    /// Validate a trace file against the execution guarantees.
    Check(CheckArgs),
    /// Classify a validity property: trivial, solvable, or unsolvable.
    Cc(CcArgs),
    /// Derive reduction anchors and check reduction conformance.
    Reduce(ReduceArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Algorithm identifier, e.g. star-leader or flood-echo-2.
    #[arg(long)]
    algo: String,
    #[arg(long)]
    n: u32,
    #[arg(long)]
    t: u32,
    /// Per-process proposals: all0, all1, or a bitstring of length n.
    #[arg(long)]
    propose: String,
    /// Omission schedule file (JSON); fault-free when omitted.
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Number of recorded rounds.
    #[arg(long)]
    horizon: u32,
    /// Record full internal states instead of digests only.
    #[arg(long)]
    full_state: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    /// Candidate identifier.
    #[arg(long)]
    algo: String,
    #[arg(long)]
    n: u32,
    #[arg(long)]
    t: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Trace file to validate.
    trace: PathBuf,
    /// Replay against this algorithm instead of the one named in the trace.
    #[arg(long)]
    algo: Option<String>,
}

#[derive(Args)]
struct CcArgs {
    /// Property reference: a JSON file or builtin:{weak,strong,ic,trivial}.
    #[arg(long)]
    property: String,
    #[arg(long)]
    n: u32,
    #[arg(long)]
    t: u32,
    /// Assume unforgeable signatures are available.
    #[arg(long, conflicts_with = "unauth")]
    auth: bool,
    /// Assume no authentication (default).
    #[arg(long)]
    unauth: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceArgs {
    #[command(subcommand)]
    kind: ReduceKind,
}

#[derive(Subcommand)]
enum ReduceKind {
    /// Overlay a binary interface onto a value-level agreement machine.
    Weak(ReduceWeakArgs),
    /// Check the select-over-broadcast agreement machine for a property.
    Agreement(ReduceAgreementArgs),
}

#[derive(Args)]
struct ReduceWeakArgs {
    /// Inner agreement machine identifier.
    #[arg(long, default_value = "ds-ic")]
    via: String,
    #[arg(long)]
    property: String,
    #[arg(long)]
    n: u32,
    #[arg(long)]
    t: u32,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceAgreementArgs {
    #[arg(long)]
    property: String,
    #[arg(long)]
    n: u32,
    #[arg(long)]
    t: u32,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Attack(args) => cmd_attack(args),
        Command::Check(args) => cmd_check(args),
        Command::Cc(args) => cmd_cc(args),
        Command::Reduce(args) => match args.kind {
            ReduceKind::Weak(a) => cmd_reduce_weak(a),
            ReduceKind::Agreement(a) => cmd_reduce_agreement(a),
        },
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn emit(value: &serde_json::Value, out: &Option<PathBuf>) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_proposals(spec: &str, n: u32) -> Result<Vec<Bit>, String> {
    match spec {
        "all0" => Ok(vec![Bit::Zero; n as usize]),
        "all1" => Ok(vec![Bit::One; n as usize]),
        other => {
            if other.len() != n as usize {
                return Err(format!(
                    "proposal string has length {}, expected n = {n}",
                    other.len()
                ));
            }
            other
                .chars()
                .map(|c| match c {
                    '0' => Ok(Bit::Zero),
                    '1' => Ok(Bit::One),
                    _ => Err(format!("bad proposal character {c:?}")),
                })
                .collect()
        }
    }
}

fn load_algorithm(id: &str, n: u32, t: u32) -> Result<Box<dyn sim_core::engine::Algorithm>, String> {
    registry::candidate(id, n, t).ok_or_else(|| {
        format!(
            "unknown algorithm {id:?}; known: {}",
            registry::CANDIDATE_IDS.join(", ")
        )
    })
}

fn cmd_run(args: RunArgs) -> Result<u8, String> {
    let algo = load_algorithm(&args.algo, args.n, args.t)?;
    let proposals = parse_proposals(&args.propose, args.n)?;
    let schedule = match &args.schedule {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str::<AdversarySchedule>(&text)
                .map_err(|e| format!("bad schedule file: {e}"))?
        }
        None => AdversarySchedule::fault_free(),
    };
    if !schedule.byzantine.is_empty() {
        return Err(
            "schedule binds byzantine behaviors; run drives the omission engine only".to_string(),
        );
    }
    schedule
        .validate(args.n, args.t)
        .map_err(|e| format!("bad schedule: {e}"))?;
    let cap = horizon_cap();
    if args.horizon == 0 || args.horizon > cap {
        return Err(format!(
            "horizon must be between 1 and {cap} (see SIM_HORIZON_CAP)"
        ));
    }
    let execution = run(
        algo.as_ref(),
        &proposals,
        &schedule,
        RunConfig::new(args.n, args.t, args.horizon),
    )
    .map_err(|e| format!("run failed: {e}"))?;
    let doc = TraceDoc::from_execution(
        &execution,
        &TraceOptions {
            full_state: args.full_state,
            algorithm: Some(args.algo.clone()),
            schedule: Some(schedule),
        },
    );
    let value = serde_json::to_value(&doc).map_err(|e| e.to_string())?;
    emit(&value, &args.out)?;
    eprintln!(
        "ran {} for {} rounds over {} processes",
        args.algo, args.horizon, args.n
    );
    Ok(0)
}

fn cmd_attack(args: AttackArgs) -> Result<u8, String> {
    let algo = load_algorithm(&args.algo, args.n, args.t)?;
    let started = Instant::now();
    let verdict = falsify(algo.as_ref(), args.n, args.t).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    if let Verdict::Violation(_) = &verdict {
        verify_verdict(&verdict, algo.as_ref())
            .map_err(|e| format!("harness produced an unverifiable witness: {e}"))?;
    }
    let value = serde_json::to_value(&verdict).map_err(|e| e.to_string())?;
    emit(&value, &args.out)?;
    match &verdict {
        Verdict::Violation(v) => {
            eprintln!(
                "violation of {} at probe {} after {:.2?}: {}",
                v.property, v.probe, elapsed, v.detail
            );
            Ok(1)
        }
        Verdict::BudgetExceeded(b) => {
            eprintln!(
                "budget exceeded after {:.2?}: {} sent {} correct messages against a budget of {}",
                elapsed, b.first_over_budget, b.observed, b.budget
            );
            Ok(0)
        }
    }
}

fn cmd_check(args: CheckArgs) -> Result<u8, String> {
    let text = std::fs::read_to_string(&args.trace)
        .map_err(|e| format!("cannot read {}: {e}", args.trace.display()))?;
    let doc = TraceDoc::parse(&text).map_err(|e| format!("bad trace: {e}"))?;
    let algo_id = args.algo.clone().or_else(|| doc.algorithm.clone());
    let replayable = doc.has_full_states();
    let algo = match (&algo_id, replayable) {
        (Some(id), true) => registry::candidate(id, doc.n, doc.t),
        _ => None,
    };
    let (mode, findings) = match &algo {
        Some(algo) => {
            let execution = doc
                .to_execution()
                .map_err(|e| format!("bad trace: {e}"))?;
            (
                "replay",
                validate_execution(&execution, algo.as_ref())
                    .into_iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>(),
            )
        }
        None => {
            let execution = if replayable {
                doc.to_execution().map_err(|e| format!("bad trace: {e}"))?
            } else {
                doc.to_execution_lossy()
                    .map_err(|e| format!("bad trace: {e}"))?
            };
            (
                "structural",
                validate_structure(&execution)
                    .into_iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>(),
            )
        }
    };
    for finding in &findings {
        eprintln!("{finding}");
    }
    let value = serde_json::json!({
        "trace": args.trace.display().to_string(),
        "mode": mode,
        "algorithm": algo_id,
        "findings": findings,
        "clean": findings.is_empty(),
    });
    emit(&value, &None)?;
    Ok(if value["clean"].as_bool() == Some(true) {
        0
    } else {
        1
    })
}

fn cmd_cc(args: CcArgs) -> Result<u8, String> {
    let property =
        resolve_property(&args.property, args.n, args.t).map_err(|e| e.to_string())?;
    let authenticated = args.auth && !args.unauth;
    let classification =
        classify_solvability(&property, authenticated).map_err(|e| e.to_string())?;
    let (label, witness) = match &classification {
        Solvability::Trivial { witness } => (
            "trivial",
            Some(serde_json::to_value(witness).map_err(|e| e.to_string())?),
        ),
        Solvability::Solvable => ("solvable", None),
        Solvability::UnsolvableCc { witness } => (
            "unsolvable-cc",
            Some(serde_json::to_value(witness).map_err(|e| e.to_string())?),
        ),
        Solvability::UnsolvableResilience => ("unsolvable-resilience", None),
    };
    let value = serde_json::json!({
        "property": property.name(),
        "n": args.n,
        "t": args.t,
        "authenticated": authenticated,
        "classification": label,
        "witness": witness,
    });
    emit(&value, &args.out)?;
    eprintln!("{}: {label}", property.name());
    Ok(0)
}

/// A deterministic corruption corpus: every shipped behavior, one or two
/// corrupted processes from the top of the id range, and three proposal
/// patterns.
struct CorpusCase {
    behavior: &'static str,
    corrupted: Vec<ProcessId>,
    pattern: &'static str,
}

fn corpus_cases(n: u32, t: u32) -> Vec<CorpusCase> {
    let mut cases = Vec::new();
    for behavior in BEHAVIOR_IDS {
        for count in [1u32, 2] {
            if count > t || count >= n {
                continue;
            }
            let corrupted: Vec<ProcessId> = (n - count + 1..=n).map(ProcessId).collect();
            for pattern in ["all0", "all1", "alternating"] {
                cases.push(CorpusCase {
                    behavior,
                    corrupted: corrupted.clone(),
                    pattern,
                });
            }
        }
    }
    cases
}

fn pattern_values(pattern: &str, n: u32, domain: &[Value]) -> Vec<Value> {
    let pick = |i: usize| -> Value {
        match pattern {
            "all0" => domain[0].clone(),
            "all1" => domain[domain.len().min(2) - 1].clone(),
            _ => domain[i % domain.len().min(2)].clone(),
        }
    };
    (0..n as usize).map(pick).collect()
}

fn run_corpus_case(
    machine: &dyn ValueMachine,
    case: &CorpusCase,
    proposals: &[Value],
    n: u32,
    t: u32,
    horizon: u32,
) -> Result<ValueRun, String> {
    let behavior = byzantine_behavior(case.behavior)
        .ok_or_else(|| format!("unknown behavior {:?}", case.behavior))?;
    let corrupt: BTreeMap<ProcessId, Arc<dyn sim_core::engine::ByzantineBehavior>> = case
        .corrupted
        .iter()
        .map(|p| (*p, behavior.clone()))
        .collect();
    run_values(
        machine,
        proposals,
        &corrupt,
        &ValueRunConfig {
            n,
            t,
            horizon,
            rushing: true,
        },
    )
    .map_err(|e| format!("corpus run failed: {e}"))
}

/// Limit above which the corruption corpus is skipped; the signed-relay
/// machine is quadratic in messages and the corpus is meant for small
/// properties.
const CORPUS_N_LIMIT: u32 = 16;

fn cmd_reduce_weak(args: ReduceWeakArgs) -> Result<u8, String> {
    if args.via != "ds-ic" {
        return Err(format!(
            "unknown inner machine {:?}; known: ds-ic",
            args.via
        ));
    }
    let property =
        resolve_property(&args.property, args.n, args.t).map_err(|e| e.to_string())?;
    let make_inner = || {
        let default = property.ctx.inputs[0].clone();
        IcThenSelect::new(DsIc::new(default), GammaTable::new(property.clone()))
    };
    let anchors = match derive_anchors(&property) {
        Ok(a) => a,
        Err(err @ (AnchorError::Trivial | AnchorError::NoBinarySplit)) => {
            let value = serde_json::json!({
                "property": property.name(),
                "status": "refused",
                "reason": err.to_string(),
            });
            emit(&value, &args.out)?;
            eprintln!("reduction refused: {err}");
            return Ok(1);
        }
        Err(other) => return Err(other.to_string()),
    };
    let (n, t) = (args.n, args.t);
    let horizon = DsIc::comm_rounds(t);
    let overlay = BinaryOverlay::new(make_inner(), anchors.clone(), "overlay-ds-ic");

    // Fully correct unanimous runs must land on the proposed bit, and the
    // overlay must be message-for-message identical to the inner machine
    // started from the matching anchor configuration.
    let mut checks = Vec::new();
    let mut all_ok = true;
    for bit in [0i64, 1] {
        let proposals = vec![Value::Int(bit); n as usize];
        let run = run_values(
            &overlay,
            &proposals,
            &BTreeMap::new(),
            &ValueRunConfig {
                n,
                t,
                horizon,
                rushing: false,
            },
        )
        .map_err(|e| format!("overlay run failed: {e}"))?;
        let decided: Vec<bool> = run
            .honest()
            .map(|p| run.decision(p) == Some(&Value::Int(bit)))
            .collect();
        let decisions_ok = decided.iter().all(|b| *b);

        let anchor = if bit == 0 { &anchors.c0 } else { &anchors.c1 };
        let inner_proposals: Vec<Value> = (1..=n)
            .map(|i| anchor.get(ProcessId(i)).cloned().unwrap_or(Value::Int(0)))
            .collect();
        let inner_run = run_values(
            &make_inner(),
            &inner_proposals,
            &BTreeMap::new(),
            &ValueRunConfig {
                n,
                t,
                horizon,
                rushing: false,
            },
        )
        .map_err(|e| format!("inner run failed: {e}"))?;
        let messages_equal = run.messages == inner_run.messages;
        all_ok &= decisions_ok && messages_equal;
        checks.push(serde_json::json!({
            "case": format!("unanimous-{bit}"),
            "decisions_ok": decisions_ok,
            "messages_equal": messages_equal,
        }));
    }

    let mut corpus = Vec::new();
    if n <= CORPUS_N_LIMIT {
        let cases = corpus_cases(n, t);
        let results = parallel_map(args.jobs, &cases, |case| {
            let proposals = pattern_values(case.pattern, n, &[Value::Int(0), Value::Int(1)]);
            let overlay = BinaryOverlay::new(make_inner(), anchors.clone(), "overlay-ds-ic");
            let run = run_corpus_case(&overlay, case, &proposals, n, t, horizon)?;
            let honest: Vec<ProcessId> = run.honest().collect();
            let decided = honest.iter().all(|p| run.decision(*p).is_some());
            let first = honest.first().and_then(|p| run.decision(*p));
            let agreement = honest.iter().all(|p| run.decision(*p) == first);
            let binary = honest.iter().all(|p| {
                matches!(run.decision(*p), Some(Value::Int(0)) | Some(Value::Int(1)) | None)
            });
            Ok(serde_json::json!({
                "behavior": case.behavior,
                "corrupted": case.corrupted.len(),
                "pattern": case.pattern,
                "termination": decided,
                "agreement": agreement,
                "binary": binary,
            }))
        })?;
        for r in results {
            all_ok &= r["termination"].as_bool() == Some(true)
                && r["agreement"].as_bool() == Some(true)
                && r["binary"].as_bool() == Some(true);
            corpus.push(r);
        }
    }

    let value = serde_json::json!({
        "property": property.name(),
        "status": if all_ok { "conformant" } else { "nonconformant" },
        "via": args.via,
        "anchors": {
            "c0": serde_json::to_value(&anchors.c0).map_err(|e| e.to_string())?,
            "v0": serde_json::to_value(&anchors.v0).map_err(|e| e.to_string())?,
            "c1_star": serde_json::to_value(&anchors.c1_star).map_err(|e| e.to_string())?,
            "c1": serde_json::to_value(&anchors.c1).map_err(|e| e.to_string())?,
            "v1": serde_json::to_value(&anchors.v1).map_err(|e| e.to_string())?,
        },
        "checks": checks,
        "corpus": corpus,
        "corpus_skipped": n > CORPUS_N_LIMIT,
    });
    emit(&value, &args.out)?;
    eprintln!(
        "reduce weak via {}: {}",
        args.via,
        value["status"].as_str().unwrap_or("?")
    );
    Ok(if all_ok { 0 } else { 1 })
}

fn cmd_reduce_agreement(args: ReduceAgreementArgs) -> Result<u8, String> {
    let property =
        resolve_property(&args.property, args.n, args.t).map_err(|e| e.to_string())?;
    let (n, t) = (args.n, args.t);
    let horizon = DsIc::comm_rounds(t);
    let domain = property.ctx.inputs.clone();
    let make_machine = || {
        let default = property.ctx.inputs[0].clone();
        IcThenSelect::new(DsIc::new(default), GammaTable::new(property.clone()))
    };

    let mut corpus = Vec::new();
    let mut all_ok = true;
    if n <= CORPUS_N_LIMIT {
        let cases = corpus_cases(n, t);
        let results = parallel_map(args.jobs, &cases, |case| {
            let proposals = pattern_values(case.pattern, n, &domain);
            let machine = make_machine();
            let run = run_corpus_case(&machine, case, &proposals, n, t, horizon)?;
            let honest: Vec<ProcessId> = run.honest().collect();
            let realized = InputConfiguration::new(run.honest_inputs());
            let admissible = property.admissible(&realized);
            let decided = honest.iter().all(|p| run.decision(*p).is_some());
            let first = honest.first().and_then(|p| run.decision(*p));
            let agreement = honest.iter().all(|p| run.decision(*p) == first);
            let valid = honest.iter().all(|p| match run.decision(*p) {
                Some(v) => admissible.contains(v),
                None => false,
            });
            Ok(serde_json::json!({
                "behavior": case.behavior,
                "corrupted": case.corrupted.len(),
                "pattern": case.pattern,
                "termination": decided,
                "agreement": agreement,
                "admissible": valid,
            }))
        })?;
        for r in results {
            all_ok &= r["termination"].as_bool() == Some(true)
                && r["agreement"].as_bool() == Some(true)
                && r["admissible"].as_bool() == Some(true);
            corpus.push(r);
        }
    } else {
        return Err(format!(
            "n = {n} exceeds the corpus limit {CORPUS_N_LIMIT}; the select machine corpus is for small properties"
        ));
    }

    let value = serde_json::json!({
        "property": property.name(),
        "status": if all_ok { "conformant" } else { "nonconformant" },
        "corpus": corpus,
    });
    emit(&value, &args.out)?;
    eprintln!(
        "reduce agreement: {}",
        value["status"].as_str().unwrap_or("?")
    );
    Ok(if all_ok { 0 } else { 1 })
}

/// Applies `f` to every item, fanning out over up to `jobs` threads while
/// keeping the output order stable.
fn parallel_map<T: Sync, R: Send>(
    jobs: usize,
    items: &[T],
    f: impl Fn(&T) -> Result<R, String> + Sync,
) -> Result<Vec<R>, String> {
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let mut slots: Vec<Option<Result<R, String>>> = Vec::new();
    slots.resize_with(items.len(), || None);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let result = f(&items[i]);
                slots.lock().expect("collector lock")[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("collector lock")
        .iter_mut()
        .map(|slot| slot.take().expect("every slot filled"))
        .collect()
}
