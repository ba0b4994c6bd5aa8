//! Command-line front end. Exit status 0 means the checked property holds or
//! the command succeeded, 1 that the property fails, 2 a usage or input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::blur::{compile_in, f_limits_flow, validate_blur, verify_cut_blur, BlurSpec};
use crate::compose::{build_shared_core, verify_composition};
use crate::cuts::{find_min_cut, is_cut, to_dot, ChannelSetTriple, MinCut};
use crate::disclosure::{check_symmetry, compatible_runs, no_disclosure};
use crate::enumerate::{Bound, OrderSemantics, Universe};
use crate::events::CanonicalRun;
use crate::format::{parse_frame, parse_machine, write_frame, FormatError, FrameDocument};
use crate::frame::{ChanSet, Frame};
use crate::purge::{check_nd, check_ni, nd_blur_agreement, purge_blur, validate_purge, Machine, MachineUniverse, PurgeKind};
use crate::report::Report;
use crate::scenarios::{build_firewall, build_voting, FirewallParams, Scenario, VotingParams};

const DEFAULT_BOUND: usize = 6;

#[derive(Parser, Debug)]
#[command(name = "cutblur", version, about = "Bounded information-flow analysis of message-passing frames")]
pub struct Cli {
    /// Emit the structured (JSON) report.
    #[arg(long, global = true)]
    json: bool,
    /// Include wall-clock time in the report.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct BoundArgs {
    /// Maximum number of events per execution [default: 6].
    #[arg(long)]
    bound: Option<usize>,
    /// Maximum number of events at any one location.
    #[arg(long)]
    per_location: Option<usize>,
    #[arg(long, value_enum, default_value_t = Semantics::Minimal)]
    semantics: Semantics,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Semantics {
    Minimal,
    Total,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Purge {
    Gm,
    HaighYoung,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and check a frame file.
    Validate {
        file: PathBuf,
        /// Include the frame graph in Graphviz form.
        #[arg(long)]
        dot: bool,
    },
    /// List executions within the bound.
    Enumerate {
        file: PathBuf,
        #[command(flatten)]
        bound: BoundArgs,
        /// Print at most this many executions.
        #[arg(long, default_value_t = 100)]
        limit: usize,
    },
    /// List the local runs on a channel set.
    Runs {
        file: PathBuf,
        #[arg(long)]
        channels: String,
        #[command(flatten)]
        bound: BoundArgs,
    },
    /// Source runs compatible with an observed run.
    Cmpt {
        file: PathBuf,
        #[arg(long)]
        observed: String,
        #[arg(long)]
        source: String,
        /// Observed run, e.g. "c=[v,w] d=[w] | c#0<d#0".
        #[arg(long)]
        run: String,
        #[command(flatten)]
        bound: BoundArgs,
    },
    /// Check that observed runs reveal nothing about source runs.
    Nodisclosure {
        file: PathBuf,
        #[arg(long)]
        source: String,
        #[arg(long)]
        observed: String,
        #[command(flatten)]
        bound: BoundArgs,
    },
    /// Check the blur laws and, with --observed, blur-limited flow.
    CheckBlur {
        file: PathBuf,
        #[arg(long)]
        blur: String,
        #[arg(long)]
        source: String,
        #[arg(long)]
        observed: Option<String>,
        /// Random run sets tested when the universe is too large for all subsets.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        bound: BoundArgs,
    },
    /// Check that a channel set separates source from sink.
    CheckCut {
        file: PathBuf,
        #[arg(long)]
        source: String,
        #[arg(long)]
        cut: String,
        #[arg(long)]
        sink: String,
    },
    /// Find a smallest separating channel set.
    MinCut {
        file: PathBuf,
        #[arg(long)]
        source: String,
        #[arg(long)]
        sink: String,
    },
    /// Check that blur-limited flow into a cut carries over to the far side.
    VerifyCutblur {
        file: PathBuf,
        #[arg(long)]
        source: String,
        #[arg(long)]
        cut: String,
        #[arg(long)]
        sink: String,
        #[arg(long)]
        blur: String,
        #[command(flatten)]
        bound: BoundArgs,
    },
    /// Transfer blur-limited flow from one frame to another sharing a core.
    Compose {
        first: PathBuf,
        second: PathBuf,
        /// Comma-separated core locations.
        #[arg(long)]
        core: String,
        #[arg(long)]
        source: String,
        #[arg(long)]
        observed: String,
        #[arg(long)]
        blur: String,
        #[command(flatten)]
        bound: BoundArgs,
    },
    /// Purge-based noninterference of a machine.
    Ni {
        #[command(flatten)]
        m: MachineArgs,
    },
    /// Purge-based nondeducibility of a machine.
    Nd {
        #[command(flatten)]
        m: MachineArgs,
    },
    /// The blur a purge induces on input runs.
    PurgeBlur {
        #[command(flatten)]
        m: MachineArgs,
    },
    /// Emit a frame file for a built-in example.
    Scenario {
        #[command(subcommand)]
        which: ScenarioCommand,
    },
}

#[derive(Args, Debug)]
struct MachineArgs {
    file: PathBuf,
    #[arg(long)]
    target: String,
    #[arg(long, value_enum, default_value_t = Purge::Gm)]
    purge: Purge,
    /// Maximum number of events per execution [default: 6].
    #[arg(long)]
    bound: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum ScenarioCommand {
    Voting {
        /// Voters per precinct, comma-separated.
        #[arg(long, default_value = "2")]
        precincts: String,
        #[arg(long, default_value_t = 2)]
        candidates: usize,
        /// Voters a restricted permutation blur keeps fixed.
        #[arg(long, default_value = "")]
        commissioners: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Firewall {
        #[arg(long)]
        discard_all: bool,
        #[arg(long, default_value_t = 1)]
        budget: usize,
        #[arg(long, default_value_t = 1)]
        capacity: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failure that ends the command with status 2.
#[derive(Debug)]
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Fatal {
        Fatal(e.to_string())
    }
}

type Outcome = Result<Output, Fatal>;

enum Output {
    Report(Report),
    Text(String),
}

fn read(path: &Path) -> Result<String, Fatal> {
    std::fs::read_to_string(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<FrameDocument, Fatal> {
    parse_frame(&read(path)?).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn bound_of(args: &BoundArgs, warn: &mut Vec<String>) -> (Bound, OrderSemantics) {
    let total = args.bound.unwrap_or_else(|| {
        warn.push(format!("no --bound given; using {DEFAULT_BOUND} total events"));
        DEFAULT_BOUND
    });
    let mut b = Bound::total(total);
    if let Some(p) = args.per_location {
        b = b.with_per_location(p);
    }
    let s = match args.semantics {
        Semantics::Minimal => OrderSemantics::Minimal,
        Semantics::Total => OrderSemantics::Total,
    };
    (b, s)
}

fn universe(doc: &FrameDocument, args: &BoundArgs, warn: &mut Vec<String>, r: &mut Report) -> Result<Universe, Fatal> {
    let (b, s) = bound_of(args, warn);
    r.bounded(b, s);
    let u = Universe::new(doc.frame.clone(), b, s)?;
    r.detail("executions", u.len());
    Ok(u)
}

fn blur_spec<'a>(docs: &[&'a FrameDocument], name: &str) -> Result<&'a BlurSpec, Fatal> {
    docs.iter().find_map(|d| d.blurs.get(name)).ok_or_else(|| Fatal(format!("no blur named {name}")))
}

fn text(run: &CanonicalRun, f: &Frame) -> String {
    run.display(f).to_string()
}

fn pair(p: &Option<(CanonicalRun, CanonicalRun)>, f: &Frame, a: &str, b: &str) -> serde_json::Value {
    match p {
        Some((x, y)) => json!({ a: text(x, f), b: text(y, f) }),
        None => serde_json::Value::Null,
    }
}

fn set_input(r: &mut Report, doc: &FrameDocument, key: &str, name: &str) -> Result<ChanSet, Fatal> {
    let set = doc.channels(name)?;
    r.input(key, json!({ "name": name, "channels": doc.frame.chan_names(&set) }));
    Ok(set)
}

fn machine_universe(m: &MachineArgs, warn: &mut Vec<String>, r: &mut Report) -> Result<(MachineUniverse, usize, PurgeKind), Fatal> {
    let spec = parse_machine(&read(&m.file)?).map_err(|e: FormatError| Fatal(format!("{}: {e}", m.file.display())))?;
    let machine = Machine::new(spec)?;
    let d = machine.domain_index(&m.target).ok_or_else(|| Fatal(format!("no domain named {}", m.target)))?;
    let total = m.bound.unwrap_or_else(|| {
        warn.push(format!("no --bound given; using {DEFAULT_BOUND} total events"));
        DEFAULT_BOUND
    });
    let kind = match m.purge {
        Purge::Gm => PurgeKind::Gm,
        Purge::HaighYoung => PurgeKind::HaighYoung,
    };
    r.input("machine", m.file.display().to_string()).input("target", m.target.clone()).input("purge", json!(kind));
    let mu = MachineUniverse::new(machine, Bound::total(total))?;
    r.bounded(Bound::total(total), OrderSemantics::Minimal);
    r.detail("executions", mu.universe.len());
    r.detail("quiescent_only", true);
    Ok((mu, d, kind))
}

fn scenario_output(s: &Scenario, out: &Option<PathBuf>, r: &mut Report) -> Outcome {
    let text = write_frame(&s.frame, &s.sets, &s.blurs);
    match out {
        None => Ok(Output::Text(text)),
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
            r.input("out", path.display().to_string());
            r.detail("locations", s.frame.num_locations());
            r.detail("channels", s.frame.num_channels());
            r.detail("sets", s.sets.keys().collect::<Vec<_>>());
            r.detail("blurs", s.blurs.keys().collect::<Vec<_>>());
            Ok(Output::Report(r.clone()))
        }
    }
}

fn execute(cmd: &Command, warn: &mut Vec<String>) -> Outcome {
    match cmd {
        Command::Validate { file, dot } => {
            let mut r = Report::new("validate");
            r.input("file", file.display().to_string());
            match parse_frame(&read(file)?) {
                Ok(doc) => {
                    r.verdict = Some(true);
                    let f = &doc.frame;
                    r.detail("locations", f.locations().iter().map(|l| l.name.clone()).collect::<Vec<_>>());
                    r.detail("channels", f.channels().iter().map(|c| c.name.clone()).collect::<Vec<_>>());
                    r.detail("data", f.data());
                    r.detail("sets", doc.sets.keys().collect::<Vec<_>>());
                    r.detail("blurs", doc.blurs.keys().collect::<Vec<_>>());
                    if *dot {
                        r.detail("dot", to_dot(f));
                    }
                }
                Err(FormatError::Invalid(msg)) => {
                    r.verdict = Some(false);
                    r.detail("violations", msg.split("; ").collect::<Vec<_>>());
                }
                Err(e) => return Err(Fatal(format!("{}: {e}", file.display()))),
            }
            Ok(Output::Report(r))
        }
        Command::Enumerate { file, bound, limit } => {
            let doc = load(file)?;
            let mut r = Report::new("enumerate");
            r.input("file", file.display().to_string());
            let u = universe(&doc, bound, warn, &mut r)?;
            let shown: Vec<String> = u
                .executions()
                .iter()
                .take(*limit)
                .map(|e| text(&e.canonicalize().expect("executions chain"), &doc.frame))
                .collect();
            r.detail("shown", shown);
            Ok(Output::Report(r))
        }
        Command::Runs { file, channels, bound } => {
            let doc = load(file)?;
            let mut r = Report::new("runs");
            r.input("file", file.display().to_string());
            let c = set_input(&mut r, &doc, "channels", channels)?;
            let u = universe(&doc, bound, warn, &mut r)?;
            let runs: Vec<String> = u.runs(&c).runs.iter().map(|x| text(x, &doc.frame)).collect();
            r.detail("count", runs.len()).detail("runs", runs);
            Ok(Output::Report(r))
        }
        Command::Cmpt { file, observed, source, run, bound } => {
            let doc = load(file)?;
            let mut r = Report::new("cmpt");
            r.input("file", file.display().to_string()).input("run", run.clone());
            let o = set_input(&mut r, &doc, "observed", observed)?;
            let s = set_input(&mut r, &doc, "source", source)?;
            let parsed = CanonicalRun::parse(&doc.frame, run)?;
            if !parsed.channels().is_subset(&o) {
                return Err(Fatal("the run uses channels outside the observed set".into()));
            }
            let u = universe(&doc, bound, warn, &mut r)?;
            let is_run = u.runs(&o).index_of(&parsed).is_some();
            let got: Vec<String> = compatible_runs(&u, &o, &s, &parsed).iter().map(|x| text(x, &doc.frame)).collect();
            r.detail("observed_is_run", is_run).detail("count", got.len()).detail("compatible", got);
            Ok(Output::Report(r))
        }
        Command::Nodisclosure { file, source, observed, bound } => {
            let doc = load(file)?;
            let mut r = Report::new("nodisclosure");
            r.input("file", file.display().to_string());
            let s = set_input(&mut r, &doc, "source", source)?;
            let o = set_input(&mut r, &doc, "observed", observed)?;
            let u = universe(&doc, bound, warn, &mut r)?;
            let v = no_disclosure(&u, &o, &s);
            let (fwd, back) = check_symmetry(&u, &o, &s);
            r.verdict = Some(v.holds);
            r.detail("observed_runs", v.runs_c).detail("source_runs", v.runs_c2);
            r.detail("counterexample", pair(&v.counterexample, &doc.frame, "observed_run", "incompatible_source_run"));
            r.detail("symmetric", fwd == back);
            Ok(Output::Report(r))
        }
        Command::CheckBlur { file, blur, source, observed, samples, seed, bound } => {
            let doc = load(file)?;
            let mut r = Report::new("check-blur");
            r.input("file", file.display().to_string()).input("blur", blur.clone()).input("seed", *seed);
            let s = set_input(&mut r, &doc, "source", source)?;
            let o = observed.as_ref().map(|name| set_input(&mut r, &doc, "observed", name)).transpose()?;
            let u = universe(&doc, bound, warn, &mut r)?;
            let compiled = compile_in(&u, blur_spec(&[&doc], blur)?, &s)?;
            let laws = validate_blur(&compiled, *samples, *seed);
            r.detail(
                "laws",
                json!({
                    "inclusion": laws.inclusion,
                    "idempotence": laws.idempotence,
                    "union": laws.union,
                    "partition_generated": laws.partition_generated,
                    "sets_checked": laws.sets_checked,
                    "failures": laws.failures,
                }),
            );
            r.detail("source_runs", compiled.universe_size());
            if let Some(classes) = compiled.classes() {
                r.detail("classes", classes.len());
            }
            let mut holds = laws.is_blur();
            if let Some(o) = o {
                let flow = f_limits_flow(&u, &s, &o, &compiled);
                holds &= flow.holds;
                r.detail(
                    "flow",
                    json!({
                        "holds": flow.holds,
                        "observed_runs": flow.observed_runs,
                        "counterexample": pair(&flow.counterexample, &doc.frame, "observed_run", "unblurred_source_run"),
                    }),
                );
            }
            r.verdict = Some(holds);
            Ok(Output::Report(r))
        }
        Command::CheckCut { file, source, cut, sink } => {
            let doc = load(file)?;
            let mut r = Report::new("check-cut");
            r.input("file", file.display().to_string());
            let t = ChannelSetTriple {
                source: set_input(&mut r, &doc, "source", source)?,
                cut: set_input(&mut r, &doc, "cut", cut)?,
                sink: set_input(&mut r, &doc, "sink", sink)?,
            };
            let c = is_cut(&doc.frame, &t)?;
            r.verdict = Some(c.holds);
            r.detail("witness_path", &c.witness);
            Ok(Output::Report(r))
        }
        Command::MinCut { file, source, sink } => {
            let doc = load(file)?;
            let mut r = Report::new("min-cut");
            r.input("file", file.display().to_string());
            let s = set_input(&mut r, &doc, "source", source)?;
            let o = set_input(&mut r, &doc, "sink", sink)?;
            match find_min_cut(&doc.frame, &s, &o)? {
                MinCut::Found(c) => {
                    r.verdict = Some(true);
                    r.detail("cut", doc.frame.chan_names(&c));
                }
                MinCut::Impossible => {
                    r.verdict = Some(false);
                    r.detail("cut", serde_json::Value::Null);
                }
            }
            Ok(Output::Report(r))
        }
        Command::VerifyCutblur { file, source, cut, sink, blur, bound } => {
            let doc = load(file)?;
            let mut r = Report::new("verify-cutblur");
            r.input("file", file.display().to_string()).input("blur", blur.clone());
            let t = ChannelSetTriple {
                source: set_input(&mut r, &doc, "source", source)?,
                cut: set_input(&mut r, &doc, "cut", cut)?,
                sink: set_input(&mut r, &doc, "sink", sink)?,
            };
            let u = universe(&doc, bound, warn, &mut r)?;
            let compiled = compile_in(&u, blur_spec(&[&doc], blur)?, &t.source)?;
            let v = verify_cut_blur(&u, &t, &compiled)?;
            r.verdict = Some(v.implication_holds());
            let f = &doc.frame;
            r.detail(
                "source_to_cut",
                json!({ "holds": v.antecedent.holds, "counterexample": pair(&v.antecedent.counterexample, f, "observed_run", "unblurred_source_run") }),
            );
            r.detail(
                "source_to_sink",
                json!({ "holds": v.consequent.holds, "counterexample": pair(&v.consequent.counterexample, f, "observed_run", "unblurred_source_run") }),
            );
            Ok(Output::Report(r))
        }
        Command::Compose { first, second, core, source, observed, blur, bound } => {
            let d1 = load(first)?;
            let d2 = load(second)?;
            let mut r = Report::new("compose");
            r.input("first", first.display().to_string()).input("second", second.display().to_string());
            r.input("blur", blur.clone());
            let core: Vec<String> = core.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            r.input("core", core.clone());
            let src = d1.channel_names(source)?;
            let obs = d2.channel_names(observed)?;
            r.input("source", src.clone()).input("observed", obs.clone());
            let (b, s) = bound_of(bound, warn);
            r.bounded(b, s);
            let u1 = Universe::new(d1.frame.clone(), b, s)?;
            let u2 = Universe::new(d2.frame.clone(), b, s)?;
            r.detail("executions", json!([u1.len(), u2.len()]));
            let shared = build_shared_core(&u1, &u2, &core)?;
            let spec = blur_spec(&[&d2, &d1], blur)?;
            let v = verify_composition(&shared, &u1, &u2, &src, &obs, spec)?;
            r.verdict = Some(v.implication_holds());
            r.detail(
                "core",
                json!({ "left": shared.left, "lcut": shared.lcut, "right_first": shared.right1, "right_second": shared.right2 }),
            );
            r.detail("side_condition", json!({ "holds": v.side_condition, "new_cut_run": shared.new_cut_run }));
            r.detail(
                "first_source_to_lcut",
                json!({ "holds": v.antecedent.holds, "counterexample": pair(&v.antecedent.counterexample, &d1.frame, "observed_run", "unblurred_source_run") }),
            );
            r.detail(
                "second_source_to_observed",
                json!({ "holds": v.consequent.holds, "counterexample": pair(&v.consequent.counterexample, &d2.frame, "observed_run", "unblurred_source_run") }),
            );
            Ok(Output::Report(r))
        }
        Command::Ni { m } | Command::Nd { m } => {
            let ni = matches!(cmd, Command::Ni { .. });
            let mut r = Report::new(if ni { "ni" } else { "nd" });
            let (mu, d, kind) = machine_universe(m, warn, &mut r)?;
            let valid = validate_purge(&mu, d, |e| mu.purge(kind, d, &mu.input_sequence(e)));
            r.detail("purge_valid", valid.is_purge());
            let v = if ni { check_ni(&mu, kind, d) } else { check_nd(&mu, kind, d) };
            r.verdict = Some(v.holds);
            r.detail("counterexample", pair(&v.counterexample, mu.frame(), "execution", "other_execution"));
            Ok(Output::Report(r))
        }
        Command::PurgeBlur { m } => {
            let mut r = Report::new("purge-blur");
            let (mu, d, kind) = machine_universe(m, warn, &mut r)?;
            let blur = purge_blur(&mu, kind, d);
            let table = mu.universe.runs(mu.inputs());
            let classes: Vec<Vec<String>> = blur
                .classes()
                .expect("purge blurs are partitions")
                .iter()
                .map(|c| c.iter().map(|&i| text(&table.runs[i as usize], mu.frame())).collect())
                .collect();
            let (nd, flow) = nd_blur_agreement(&mu, kind, d);
            r.verdict = Some(nd == flow);
            r.detail("input_runs", table.len()).detail("classes", classes);
            r.detail("nondeducible", nd).detail("blur_limited_flow", flow);
            Ok(Output::Report(r))
        }
        Command::Scenario { which } => match which {
            ScenarioCommand::Voting { precincts, candidates, commissioners, out } => {
                let precincts = precincts
                    .split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| Fatal(format!("--precincts: {e}")))?;
                let commissioners: Vec<String> =
                    commissioners.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
                let mut r = Report::new("scenario");
                r.input("which", "voting").input("precincts", json!(precincts)).input("candidates", *candidates);
                let s = build_voting(&VotingParams { precincts, candidates: *candidates, commissioners })?;
                scenario_output(&s, out, &mut r)
            }
            ScenarioCommand::Firewall { discard_all, budget, capacity, out } => {
                let mut r = Report::new("scenario");
                r.input("which", "firewall").input("discard_all", *discard_all);
                r.input("budget", *budget).input("capacity", *capacity);
                let params = FirewallParams { discard_all: *discard_all, budget: *budget, capacity: *capacity, ..FirewallParams::default() };
                let s = build_firewall(&params)?;
                scenario_output(&s, out, &mut r)
            }
        },
    }
}

/// Runs the command line `args`, writing the report to `out` and
/// diagnostics to `err`. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let start = Instant::now();
    let mut warnings = Vec::new();
    let result = execute(&cli.command, &mut warnings);
    for w in &warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    match result {
        Err(Fatal(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Ok(Output::Text(t)) => {
            let _ = out.write_all(t.as_bytes());
            0
        }
        Ok(Output::Report(mut r)) => {
            if cli.timing {
                r.timing_ms = Some(start.elapsed().as_millis());
            }
            let body = if cli.json { r.to_json() } else { r.to_text() };
            let _ = out.write_all(body.as_bytes());
            match r.verdict {
                Some(false) => 1,
                _ => 0,
            }
        }
    }
}
