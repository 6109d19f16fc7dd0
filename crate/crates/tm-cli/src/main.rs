//! `tm` — work with Thinging Machine models from the command line.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use tm_core::behavior::{
    check_trace, classify_links, derive_constraints, enumerate_behaviors, EnumerationNote,
    EnumerationOptions, LinkBasis, Verdict, Violation,
};
use tm_core::dynamics::DynamicModel;
use tm_core::files;
use tm_core::simulator::{simulate_with, FanOutPolicy};
use tm_core::validate::Severity;
use tm_core::{json, tmlang, validate_model, StaticModel};

#[derive(Parser)]
#[command(name = "tm", version, about = "Parse, validate, and analyze TM conceptual models")]
struct Cli {
    /// Output format for the command payload.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the payload to a file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a model file and echo it back (canonical TM text or JSON).
    Parse { file: PathBuf },
    /// Report structural diagnostics; exits 1 when errors are present.
    Validate { file: PathBuf },
    /// Enumerate every acceptable chronology of the declared events.
    Behaviors {
        file: PathBuf,
        /// Events file declaring labeled regions.
        #[arg(long)]
        events: PathBuf,
        /// Upper bound on the number of events.
        #[arg(long, default_value_t = 12)]
        max_events: usize,
        /// Restrict chronologies to one event per slot.
        #[arg(long)]
        no_simultaneity: bool,
    },
    /// Check a trace against the derived constraints; exits 1 on rejection.
    Check {
        file: PathBuf,
        #[arg(long)]
        events: PathBuf,
        /// Trace file with label slots.
        #[arg(long)]
        trace: PathBuf,
    },
    /// Run the bounded token walker and emit the trace.
    Simulate {
        file: PathBuf,
        /// Sources file scheduling token injections.
        #[arg(long)]
        sources: PathBuf,
        /// Tick bound; overrides the sources file when given.
        #[arg(long)]
        max_ticks: Option<usize>,
        /// Duplicate tokens down every outgoing flow arc at fan-out.
        #[arg(long)]
        fork: bool,
    },
    /// Label each adjacent pair of an accepted trace by its static grounding.
    Classify {
        file: PathBuf,
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Emit a Graphviz digraph of the model.
    ExportDot {
        file: PathBuf,
        /// Color stages by event region.
        #[arg(long)]
        events: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome { payload, rejected }) => {
            if let Err(e) = emit(&cli, &payload) {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
            if rejected {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

struct Outcome {
    payload: String,
    rejected: bool,
}

fn ok(payload: String) -> Result<Outcome> {
    Ok(Outcome {
        payload,
        rejected: false,
    })
}

fn rejected(payload: String) -> Result<Outcome> {
    Ok(Outcome {
        payload,
        rejected: true,
    })
}

fn emit(cli: &Cli, payload: &str) -> Result<()> {
    match &cli.output {
        Some(path) => {
            let mut text = payload.to_string();
            if !text.is_empty() && !text.ends_with('\n') {
                text.push('\n');
            }
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            if !payload.is_empty() {
                use std::io::Write;
                let mut stdout = std::io::stdout().lock();
                if let Err(e) = writeln!(stdout, "{payload}") {
                    // A closed pipe downstream is normal termination.
                    if e.kind() == std::io::ErrorKind::BrokenPipe {
                        std::process::exit(0);
                    }
                    return Err(e.into());
                }
            }
        }
    }
    Ok(())
}

fn load_model(path: &Path) -> Result<StaticModel> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        Ok(json::from_json(&text)?)
    } else {
        let (_, model) = tmlang::parse(&text)?;
        Ok(model)
    }
}

fn load_dynamic(model_path: &Path, events_path: &Path) -> Result<DynamicModel> {
    let model = load_model(model_path)?;
    let text = fs::read_to_string(events_path)
        .with_context(|| format!("reading {}", events_path.display()))?;
    let dyn_model = files::load_events(&text, model)?;
    for id in dyn_model.disconnected_regions() {
        eprintln!(
            "note: region of {:?} spans disconnected parts of the model",
            dyn_model.label(id)
        );
    }
    Ok(dyn_model)
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Parse { file } => {
            let model = load_model(file)?;
            match cli.format {
                Format::Json => ok(json::to_json(&model)),
                Format::Text => ok(tmlang::serialize(&model)?),
            }
        }
        Command::Validate { file } => {
            let model = load_model(file)?;
            let diagnostics = validate_model(&model);
            let has_errors = diagnostics.iter().any(|d| d.is_error());
            let payload = match cli.format {
                Format::Json => serde_json::to_string(&diagnostics)?,
                Format::Text => diagnostics
                    .iter()
                    .map(|d| {
                        let sev = match d.severity {
                            Severity::Error => "error",
                            Severity::Warning => "warning",
                        };
                        format!("{sev}: {:?}: {}", d.code, d.message)
                    })
                    .collect::<Vec<_>>()
                    .join("\n"),
            };
            if has_errors {
                rejected(payload)
            } else {
                ok(payload)
            }
        }
        Command::Behaviors {
            file,
            events,
            max_events,
            no_simultaneity,
        } => {
            let dyn_model = load_dynamic(file, events)?;
            let graph = dyn_model.derive_event_graph();
            let cs = derive_constraints(&graph);
            let ids: BTreeSet<_> = dyn_model.event_ids();
            let options = EnumerationOptions {
                max_events: *max_events,
                allow_simultaneity: !*no_simultaneity,
            };
            let result = enumerate_behaviors(&cs, &ids, options)?;
            for note in &result.notes {
                match note {
                    EnumerationNote::CyclicObligation(events) => {
                        let labels: Vec<&str> =
                            events.iter().map(|&e| dyn_model.label(e)).collect();
                        eprintln!(
                            "note: cyclic obligation among {}; some behaviors may be unsatisfiable",
                            labels.join(", ")
                        );
                    }
                }
            }
            match cli.format {
                Format::Json => ok(serde_json::to_string(&files::behaviors_document(
                    result.behaviors,
                    &dyn_model,
                ))?),
                Format::Text => {
                    let mut rendered: Vec<Vec<Vec<String>>> = result
                        .behaviors
                        .iter()
                        .map(|c| files::chronology_labels(c, &dyn_model))
                        .collect();
                    files::sort_behaviors(&mut rendered);
                    ok(rendered
                        .iter()
                        .map(|slots| render_slots(slots))
                        .collect::<Vec<_>>()
                        .join("\n"))
                }
            }
        }
        Command::Check { file, events, trace } => {
            let dyn_model = load_dynamic(file, events)?;
            let trace_text = fs::read_to_string(trace)
                .with_context(|| format!("reading {}", trace.display()))?;
            let chron = files::load_trace(&trace_text, &dyn_model)?;
            let graph = dyn_model.derive_event_graph();
            let cs = derive_constraints(&graph);
            let verdict = check_trace(&cs, &chron)?;
            let payload = render_verdict(cli.format, &verdict, &dyn_model)?;
            if verdict.accepted {
                ok(payload)
            } else {
                rejected(payload)
            }
        }
        Command::Simulate {
            file,
            sources,
            max_ticks,
            fork,
        } => {
            let model = load_model(file)?;
            let text = fs::read_to_string(sources)
                .with_context(|| format!("reading {}", sources.display()))?;
            let sources = files::load_sources(&text)?;
            let ticks = max_ticks.unwrap_or(sources.max_ticks);
            let policy = if *fork {
                FanOutPolicy::Fork
            } else {
                FanOutPolicy::LowestArc
            };
            let trace = simulate_with(&model, &sources.spawn_points(), ticks, policy)?;
            match cli.format {
                Format::Json => ok(serde_json::to_string(&trace)?),
                Format::Text => ok(trace
                    .ticks
                    .iter()
                    .enumerate()
                    .map(|(i, tick)| {
                        let occupations: Vec<String> = tick
                            .occupations
                            .iter()
                            .map(|&(t, s)| format!("#{}@{}", t.0, model.stage_path(s)))
                            .collect();
                        let fired: Vec<String> =
                            tick.fired.iter().map(|a| a.to_string()).collect();
                        let mut line = format!("tick {i}: {}", occupations.join(" "));
                        if !fired.is_empty() {
                            line.push_str(&format!("  fired: {}", fired.join(" ")));
                        }
                        line
                    })
                    .collect::<Vec<_>>()
                    .join("\n")),
            }
        }
        Command::Classify { file, events, trace } => {
            let dyn_model = load_dynamic(file, events)?;
            let trace_text = fs::read_to_string(trace)
                .with_context(|| format!("reading {}", trace.display()))?;
            let chron = files::load_trace(&trace_text, &dyn_model)?;
            let graph = dyn_model.derive_event_graph();
            let links = classify_links(&graph, &chron)?;
            match cli.format {
                Format::Json => {
                    let docs: Vec<serde_json::Value> = links
                        .iter()
                        .map(|l| {
                            serde_json::json!({
                                "slot": l.slot,
                                "from": dyn_model.label(l.from),
                                "to": dyn_model.label(l.to),
                                "basis": basis_name(l.basis),
                            })
                        })
                        .collect();
                    ok(serde_json::to_string(&docs)?)
                }
                Format::Text => ok(links
                    .iter()
                    .map(|l| {
                        format!(
                            "slot {}→{}: {} → {}: {}",
                            l.slot,
                            l.slot + 1,
                            dyn_model.label(l.from),
                            dyn_model.label(l.to),
                            basis_name(l.basis)
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("\n")),
            }
        }
        Command::ExportDot { file, events } => {
            let model = load_model(file)?;
            let dot = match events {
                Some(events_path) => {
                    let text = fs::read_to_string(events_path)
                        .with_context(|| format!("reading {}", events_path.display()))?;
                    let dyn_model = files::load_events(&text, model.clone())?;
                    tm_core::dot::export_dot(&model, Some(&dyn_model))?
                }
                None => tm_core::dot::export_dot(&model, None)?,
            };
            match cli.format {
                Format::Json => ok(serde_json::to_string(&serde_json::json!({ "dot": dot }))?),
                Format::Text => ok(dot),
            }
        }
    }
}

fn render_slots(slots: &[Vec<String>]) -> String {
    slots
        .iter()
        .map(|slot| {
            if slot.len() == 1 {
                slot[0].clone()
            } else {
                format!("({})", slot.join(","))
            }
        })
        .collect::<Vec<_>>()
        .join(" → ")
}

fn basis_name(basis: LinkBasis) -> &'static str {
    match basis {
        LinkBasis::FlowBased => "flow-based",
        LinkBasis::TriggerBased => "trigger-based",
        LinkBasis::ModelerChoice => "modeler-choice",
    }
}

fn render_verdict(format: Format, verdict: &Verdict, dyn_model: &DynamicModel) -> Result<String> {
    let label = |e| format!("{:?}", dyn_model.label(e)).replace('"', "");
    match format {
        Format::Json => {
            let violations: Vec<serde_json::Value> = verdict
                .violations
                .iter()
                .map(|v| violation_json(v, dyn_model))
                .collect();
            Ok(serde_json::to_string(&serde_json::json!({
                "accepted": verdict.accepted,
                "violations": violations,
            }))?)
        }
        Format::Text => {
            if verdict.accepted {
                return Ok("accepted".to_string());
            }
            let mut lines = vec!["rejected".to_string()];
            for v in &verdict.violations {
                lines.push(match v {
                    Violation::Precedence { first, second } => format!(
                        "violation: precedence {}<{} broken (flow order reversed)",
                        label(*first),
                        label(*second)
                    ),
                    // Slots count from 1 in messages.
                    Violation::Obligation { source, target, slot } => format!(
                        "violation: obligation {}⊳{} unmet ({} not within slot {})",
                        label(*source),
                        label(*target),
                        label(*target),
                        slot + 2
                    ),
                    Violation::FlowEnablement { event, missing } => format!(
                        "violation: {} occurred without flow sources {}",
                        label(*event),
                        missing
                            .iter()
                            .map(|&e| label(e))
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                    Violation::TriggerEnablement { event, slot } => format!(
                        "violation: {} at slot {} has no trigger source in the preceding slot",
                        label(*event),
                        slot
                    ),
                    Violation::Simultaneity { first, second, slot } => format!(
                        "violation: {} and {} share slot {} but are linked",
                        label(*first),
                        label(*second),
                        slot
                    ),
                });
            }
            Ok(lines.join("\n"))
        }
    }
}

fn violation_json(v: &Violation, dyn_model: &DynamicModel) -> serde_json::Value {
    let label = |e| dyn_model.label(e).to_string();
    match v {
        Violation::Precedence { first, second } => serde_json::json!({
            "kind": "precedence", "events": [label(*first), label(*second)],
        }),
        Violation::Obligation { source, target, slot } => serde_json::json!({
            "kind": "obligation", "events": [label(*source), label(*target)], "slot": slot,
        }),
        Violation::FlowEnablement { event, missing } => serde_json::json!({
            "kind": "flow_enablement", "events": [label(*event)],
            "missing": missing.iter().map(|&e| label(e)).collect::<Vec<_>>(),
        }),
        Violation::TriggerEnablement { event, slot } => serde_json::json!({
            "kind": "trigger_enablement", "events": [label(*event)], "slot": slot,
        }),
        Violation::Simultaneity { first, second, slot } => serde_json::json!({
            "kind": "simultaneity", "events": [label(*first), label(*second)], "slot": slot,
        }),
    }
}
