//! Command-line front end. Exit codes: 0 success, 1 verdict failure, 2 usage or input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::cases::{load_graph, verify_counterexample, CaseError, CASES};
use crate::compare::{report, Comparison, Shift};
use crate::field::{parse_scalar, Activation, ExactScalar};
use crate::graph::{LabelledGraph, Partition};
use crate::matrix::Matrix;
use crate::mpnn::{builtin_layer, run_mpnn, spec_from_json, DegreeFn, FMode, Family, LayerDef, LayerParams, MpnnSpec};
use crate::synthesis::{stabilization_rounds, synthesize_dgnn6, synthesize_gnn_minus, SynthError, SynthOptions, SynthesisCertificate};
use crate::wl::{wl_rounds, wl_run};

type E = ExactScalar;

#[derive(Debug, Parser)]
#[command(name = "wlpower", version, about = "Run, compare and synthesize MPNNs against WL colour refinement")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// WL colour refinement.
    Wl {
        #[command(subcommand)]
        action: WlAction,
    },
    /// Run a network.
    Mpnn {
        #[command(subcommand)]
        action: MpnnAction,
    },
    /// Decide whether LEFT is weaker than RIGHT under a round shift.
    Compare(CompareArgs),
    /// Synthesize a network matching WL on one graph.
    Synth(SynthArgs),
    /// Built-in counterexample cases.
    Cases {
        #[command(subcommand)]
        action: CasesAction,
    },
}

#[derive(Debug, Subcommand)]
enum WlAction {
    Run {
        /// Built-in id (fig1, g1, g2, g3) or graph file.
        #[arg(long)]
        graph: String,
        /// Fixed round count; default runs to stabilization.
        #[arg(long)]
        rounds: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum MpnnAction {
    Run {
        #[arg(long)]
        graph: String,
        /// Family name (identity weights, ReLU) or JSON spec file.
        #[arg(long)]
        spec: String,
        /// Rounds for a family name.
        #[arg(long, default_value_t = 3)]
        rounds: usize,
    },
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    graph: String,
    /// `wl`, a family name or a JSON spec file.
    #[arg(long)]
    left: String,
    #[arg(long)]
    right: String,
    /// 0, +1 or xC.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    shift: String,
    /// Rounds of the left run.
    #[arg(long, default_value_t = 3)]
    rounds: usize,
    /// Also write the JSON verdict here.
    #[arg(long)]
    emit: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SynthTarget {
    GnnMinus,
    Dgnn6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SigmaArg {
    Relu,
    Sign,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    graph: String,
    #[arg(long, value_enum, default_value_t = SynthTarget::GnnMinus)]
    target: SynthTarget,
    #[arg(long, value_enum, default_value_t = SigmaArg::Relu)]
    sigma: SigmaArg,
    /// Default: the WL stabilization round.
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    p: Option<String>,
    /// Degree function g (dgnn6 only).
    #[arg(long, default_value = "inv-sqrt-deg-plus-one")]
    g: String,
    /// Degree function h (dgnn6 only).
    #[arg(long, default_value = "inv-sqrt-deg-plus-one")]
    h: String,
    #[arg(long)]
    uniform_q: bool,
    #[arg(long)]
    emit: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CasesAction {
    Verify {
        #[arg(long = "case")]
        case: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    List,
}

enum Failure {
    Verdict,
    Input(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Runs the CLI on `args` (including the program name).
pub fn cli_main<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(()) => 0,
        Err(Failure::Verdict) => 1,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let json = cli.format == Format::Json;
    match &cli.command {
        Command::Wl { action: WlAction::Run { graph, rounds } } => {
            let g = load_graph(graph)?;
            let trace = match rounds {
                Some(t) => wl_rounds(&g, *t),
                None => wl_run(&g, None),
            };
            if json {
                writeln!(out, "{}", trace.to_json())?;
            } else {
                write_partitions(out, &g, &trace.rounds)?;
                match trace.stabilized_at {
                    Some(t) => writeln!(out, "stabilized at round {t}")?,
                    None => writeln!(out, "not yet stable")?,
                }
            }
            Ok(())
        }
        Command::Mpnn { action: MpnnAction::Run { graph, spec, rounds } } => {
            let g = load_graph(graph)?;
            let spec = load_spec(spec, &g, *rounds)?;
            let trace = run_mpnn(&g, &spec)?;
            if json {
                let rounds: Vec<_> = trace
                    .labellings
                    .iter()
                    .zip(&trace.partitions)
                    .map(|(l, p)| {
                        let labels: Vec<Vec<String>> =
                            l.rows().iter().map(|r| r.iter().map(ToString::to_string).collect()).collect();
                        json!({ "labels": labels, "classes": p })
                    })
                    .collect();
                writeln!(out, "{}", serde_json::to_string_pretty(&json!({ "rounds": rounds }))?)?;
            } else {
                for (t, l) in trace.labellings.iter().enumerate() {
                    writeln!(out, "round {t} ({} classes)", trace.partitions[t].num_classes())?;
                    for v in 0..g.n() {
                        let cells: Vec<String> = l.row(v).iter().map(ToString::to_string).collect();
                        writeln!(out, "  {}: ({})", g.name(v), cells.join(", "))?;
                    }
                }
            }
            Ok(())
        }
        Command::Compare(a) => compare(a, json, out),
        Command::Synth(a) => synth(a, json, out, err),
        Command::Cases { action: CasesAction::List } => {
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&CASES)?)?;
            } else {
                for c in CASES {
                    let fams: Vec<&str> = c.families.iter().map(|f| f.name()).collect();
                    writeln!(out, "{}  graph {}  families {}", c.id, c.graph, fams.join(","))?;
                }
            }
            Ok(())
        }
        Command::Cases { action: CasesAction::Verify { case, trials, seed } } => {
            match verify_counterexample(case, *trials, *seed) {
                Ok(r) => {
                    write!(out, "{}", if json { r.to_json() + "\n" } else { r.to_text() })?;
                    Ok(())
                }
                Err(CaseError::Falsified(r)) => {
                    write!(out, "{}", if json { r.to_json() + "\n" } else { r.to_text() })?;
                    writeln!(err, "case {} falsified; rows and trial counts above", r.case)?;
                    Err(Failure::Verdict)
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn write_partitions(out: &mut dyn Write, g: &LabelledGraph<E>, rounds: &[Partition]) -> std::io::Result<()> {
    for (t, p) in rounds.iter().enumerate() {
        let classes: Vec<String> = p
            .members()
            .iter()
            .map(|c| format!("{{{}}}", c.iter().map(|&v| g.name(v)).collect::<Vec<_>>().join(",")))
            .collect();
        writeln!(out, "round {t}: {} classes {}", p.num_classes(), classes.join(" "))?;
    }
    Ok(())
}

/// Identity-weight ReLU layers of a family, or a JSON spec file.
pub fn load_spec(name: &str, g: &LabelledGraph<E>, rounds: usize) -> Result<MpnnSpec<E>, String> {
    let family = match name {
        "gcn" => Some(Family::GcnKipf),
        other => Family::from_name(other),
    };
    match family {
        Some(f) => preset_spec(f, g.labels().dim(), rounds).map_err(|e| e.to_string()),
        None => {
            let text = std::fs::read_to_string(name).map_err(|e| format!("{name}: {e}"))?;
            spec_from_json(&text).map_err(|e| format!("{name}: {e}"))
        }
    }
}

fn preset_spec(family: Family, dim: usize, rounds: usize) -> Result<MpnnSpec<E>, crate::mpnn::MpnnError> {
    let half = E::from_ratio(1, 2);
    let mut p = LayerParams::<E> { sigma: Activation::Relu, ..LayerParams::default() };
    let id = || Matrix::identity(dim);
    match family {
        Family::Gnn | Family::CombAggr => {
            p.w1 = Some(id());
            p.w2 = Some(id());
        }
        Family::GnnMinus => {
            p.w = Some(id());
            p.p = Some(half.clone());
            p.q = Some(half);
        }
        Family::Dgnn6 => {
            p.w = Some(id());
            p.p = Some(half.clone());
            p.r = Some(half);
        }
        Family::GeneralDgnn => {
            p.w2 = Some(id());
            p.p = Some(half);
            p.g_fn = Some(DegreeFn::InvSqrtDegPlusOne);
            p.h_fn = Some(DegreeFn::InvSqrtDegPlusOne);
        }
        _ => p.w = Some(id()),
    }
    let layer = LayerDef::Builtin(builtin_layer(family, p)?);
    let f_mode = if family.uses_degrees() { FMode::Degree } else { FMode::Zero };
    MpnnSpec::new(f_mode, vec![layer; rounds])
}

fn trace_for(name: &str, g: &LabelledGraph<E>, rounds: usize) -> Result<Vec<Partition>, String> {
    if name == "wl" {
        return Ok(wl_rounds(g, rounds).rounds);
    }
    let spec = load_spec(name, g, rounds)?;
    Ok(run_mpnn(g, &spec).map_err(|e| e.to_string())?.partitions)
}

fn compare(a: &CompareArgs, json: bool, out: &mut dyn Write) -> Outcome {
    let g = load_graph(&a.graph)?;
    let shift: Shift = a.shift.parse()?;
    let left = trace_for(&a.left, &g, a.rounds)?;
    let right = trace_for(&a.right, &g, shift.apply(a.rounds))?;
    let c = Comparison::run(&a.left, &left, &a.right, &right, shift, Some(g.names()))?;
    let r = report(vec![c]);
    if let Some(path) = &a.emit {
        std::fs::write(path, r.to_json())?;
    }
    write!(out, "{}", if json { r.to_json() + "\n" } else { r.to_text() })?;
    if r.fails > 0 {
        Err(Failure::Verdict)
    } else {
        Ok(())
    }
}

fn degree_fn(name: &str) -> Result<DegreeFn, String> {
    DegreeFn::from_name(name).ok_or_else(|| format!("unknown degree function {name:?}"))
}

fn synth(a: &SynthArgs, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let g = load_graph(&a.graph)?;
    let rounds = a.rounds.unwrap_or_else(|| stabilization_rounds(&g));
    let opts = SynthOptions {
        sigma: match a.sigma {
            SigmaArg::Relu => Activation::Relu,
            SigmaArg::Sign => Activation::Sign,
        },
        p: a.p.as_deref().map(parse_scalar).transpose()?,
        uniform_q: a.uniform_q,
    };
    let result = match a.target {
        SynthTarget::GnnMinus => synthesize_gnn_minus(&g, rounds, &opts),
        SynthTarget::Dgnn6 => synthesize_dgnn6(&g, rounds, &opts, degree_fn(&a.g)?, degree_fn(&a.h)?),
    };
    let (cert, failed): (SynthesisCertificate, bool) = match result {
        Ok(c) => {
            let bad = !c.all_verified();
            (c, bad)
        }
        Err(SynthError::Verification { round, certificate }) => {
            writeln!(err, "verification failed at round {round}")?;
            (*certificate, true)
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = &a.emit {
        std::fs::write(path, cert.to_json())?;
    }
    if json {
        writeln!(out, "{}", cert.to_json())?;
    } else {
        let d = cert.to_dto();
        let name = |v: serde_json::Value| v.as_str().unwrap_or_default().to_string();
        let (target, sigma) = (name(serde_json::json!(d.target)), name(serde_json::json!(d.sigma)));
        writeln!(out, "target {target}, sigma {sigma}, p = {}", d.p)?;
        if let Some(mp) = &d.m_p {
            writeln!(out, "m_p = {mp}")?;
        }
        for (t, r) in cert.rounds.iter().enumerate() {
            writeln!(
                out,
                "round {}: q = {}, base {}, equivalent {}, refines {}, independent {}{}",
                t + 1,
                r.q,
                r.base,
                r.equivalent_to_wl,
                r.refines_wl,
                r.row_independent,
                if r.kappa_fallback { ", degree-scaled labels dependent" } else { "" }
            )?;
        }
    }
    if failed {
        Err(Failure::Verdict)
    } else {
        Ok(())
    }
}
