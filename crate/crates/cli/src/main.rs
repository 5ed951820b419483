//! `ocpd`: discover object-centric Petri nets from object-centric event
//! logs, detect log patterns, replay logs against nets, and flatten logs per
//! object type.
//!
//! Exit codes: 0 success/sound, 1 input or I/O error, 2 pipeline error,
//! 3 unsound, 4 unknown verdict (cap hit), 5 patterns found, 6 replay failed.

use clap::{Args, Parser, Subcommand};
use ocpd_core::extensions::{ocpd_da, ocpd_sa, ocpd_si, RepairTrace, RepairVariant};
use ocpd_core::ocel::EventLog;
use ocpd_core::ocpn::{Ocpn, DEFAULT_MAX_BINDING_SUBSETS};
use ocpd_core::patterns::{detect_oiwl, detect_oiwl_sub, detect_spurious, PatternMatch};
use ocpd_core::petri::{Soundness, DEFAULT_MAX_MARKINGS};
use ocpd_core::pipeline::ocpd_base;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ocpd", version, about = "Object-centric process discovery toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discover an object-centric Petri net from an event log.
    Discover(DiscoverArgs),
    /// Detect the loop, loop-subpattern, and spurious-interaction patterns.
    Patterns {
        /// Event log (JSON).
        #[arg(long)]
        input: PathBuf,
    },
    /// Replay an event log against a net.
    Replay(ReplayArgs),
    /// Print per-object activity traces for one object type.
    Flatten {
        /// Event log (JSON).
        #[arg(long)]
        input: PathBuf,
        /// Object type to flatten onto.
        #[arg(long = "type")]
        object_type: String,
    },
}

#[derive(Args)]
struct DiscoverArgs {
    /// Event log (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Discovery variant.
    #[arg(long, default_value = "base", value_parser = ["base", "da", "sa", "si"])]
    variant: String,
    /// Write the net as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the net as Graphviz DOT.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write the repair trace as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Check object-centric soundness and map the verdict to the exit code.
    #[arg(long)]
    verify: bool,
    #[command(flatten)]
    caps: Caps,
}

#[derive(Args)]
struct ReplayArgs {
    /// Net (JSON).
    #[arg(long)]
    net: PathBuf,
    /// Event log (JSON).
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    caps: Caps,
}

#[derive(Args)]
struct Caps {
    /// Exploration cap on distinct markings (overrides OCPD_MAX_MARKINGS).
    #[arg(long)]
    max_markings: Option<usize>,
    /// Cap on enumerated subsets per variable-adjacent type.
    #[arg(long)]
    max_binding_subsets: Option<usize>,
}

impl Caps {
    fn markings(&self) -> usize {
        self.max_markings
            .or_else(|| {
                std::env::var("OCPD_MAX_MARKINGS")
                    .ok()
                    .and_then(|v| v.parse().ok())
            })
            .unwrap_or(DEFAULT_MAX_MARKINGS)
    }

    fn subsets(&self) -> usize {
        self.max_binding_subsets.unwrap_or(DEFAULT_MAX_BINDING_SUBSETS)
    }
}

fn read_log(path: &PathBuf) -> Result<EventLog, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(1)
    })?;
    EventLog::from_json_str(&text).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}

fn write_file(path: &PathBuf, content: &str) -> Result<(), ExitCode> {
    std::fs::write(path, content).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        ExitCode::from(1)
    })
}

fn cmd_discover(args: DiscoverArgs) -> ExitCode {
    let log = match read_log(&args.input) {
        Ok(l) => l,
        Err(code) => return code,
    };
    if log.events().is_empty() {
        eprintln!("error: cannot discover from an empty event log");
        return ExitCode::from(1);
    }
    let (net, trace): (Ocpn, Option<RepairTrace>) = match args.variant.as_str() {
        "base" => (ocpd_base(&log).ocpn, None),
        "da" => {
            let (n, t) = ocpd_da(&log);
            (n, Some(t))
        }
        "sa" => match ocpd_sa(&log) {
            Ok((n, t)) => (n, Some(t)),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        "si" => {
            let (n, t) = ocpd_si(&log);
            (n, Some(t))
        }
        _ => unreachable!("clap restricts the variant"),
    };
    if let Some(path) = &args.out {
        if write_file(path, &net.to_json_string()).is_err() {
            return ExitCode::from(1);
        }
    }
    if let Some(path) = &args.dot {
        if write_file(path, &net.to_dot()).is_err() {
            return ExitCode::from(1);
        }
    }
    if let Some(path) = &args.trace {
        let rendered = match &trace {
            Some(t) => serde_json::to_string_pretty(t).expect("trace serializes"),
            None => "null".to_string(),
        };
        if write_file(path, &rendered).is_err() {
            return ExitCode::from(1);
        }
    }
    if let Some(t) = &trace {
        if !t.matches.is_empty() {
            let applied = match t.variant {
                RepairVariant::Da => "different-activity relabeling",
                RepairVariant::Sa => "similar-activity transformation",
                RepairVariant::Si => "spurious-interaction relabeling",
            };
            eprintln!(
                "applied {applied}: {} match(es), {} edit(s)",
                t.matches.len(),
                t.edits.len()
            );
        }
    }
    if args.verify {
        match net.is_oc_sound(args.caps.markings(), args.caps.subsets()) {
            Soundness::Sound => {
                eprintln!("verdict: sound");
                ExitCode::SUCCESS
            }
            Soundness::Unsound(w) => {
                eprintln!("verdict: unsound ({})", w.reason);
                if !w.dead_transitions.is_empty() {
                    eprintln!("dead transitions: {}", w.dead_transitions.join(", "));
                }
                ExitCode::from(3)
            }
            Soundness::Unknown(why) => {
                eprintln!("verdict: unknown ({why})");
                ExitCode::from(4)
            }
        }
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_patterns(input: PathBuf) -> ExitCode {
    let log = match read_log(&input) {
        Ok(l) => l,
        Err(code) => return code,
    };
    let mut matches: Vec<PatternMatch> = Vec::new();
    matches.extend(detect_oiwl(&log));
    matches.extend(detect_oiwl_sub(&log));
    matches.extend(detect_spurious(&log));
    println!("{}", serde_json::to_string_pretty(&matches).expect("matches serialize"));
    if matches.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(5)
    }
}

fn cmd_replay(args: ReplayArgs) -> ExitCode {
    let log = match read_log(&args.input) {
        Ok(l) => l,
        Err(code) => return code,
    };
    let text = match std::fs::read_to_string(&args.net) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.net.display());
            return ExitCode::from(1);
        }
    };
    let net = match Ocpn::from_json_str(&text) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let report = net.replay(&log, args.caps.markings(), args.caps.subsets());
    println!(
        "{}",
        serde_json::json!({
            "success": report.success,
            "first_failing_event": report.first_failing_event,
            "events": report.event_results,
        })
    );
    if report.success {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(6)
    }
}

fn cmd_flatten(input: PathBuf, object_type: String) -> ExitCode {
    let log = match read_log(&input) {
        Ok(l) => l,
        Err(code) => return code,
    };
    if !log.object_types().contains(&object_type) {
        eprintln!("error: object type {object_type:?} does not appear in the log");
        return ExitCode::from(1);
    }
    for obj in log.objects_of_type(&object_type) {
        let acts: Vec<&str> = log
            .events()
            .iter()
            .filter(|e| e.objects(&object_type).contains(&obj))
            .map(|e| e.activity.as_str())
            .collect();
        println!("{obj}: {}", acts.join(", "));
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Discover(args) => cmd_discover(args),
        Command::Patterns { input } => cmd_patterns(input),
        Command::Replay(args) => cmd_replay(args),
        Command::Flatten { input, object_type } => cmd_flatten(input, object_type),
    }
}
