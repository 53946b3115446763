//! Command-line front end. Every command prints one JSON [`Report`] on
//! standard output and a short summary on standard error.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 a result failed its
//! feasibility or consistency check.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bellmap::{bell_value, box_from_quantum, cglmp3, game_from_bell, strategy_from_box, BellFunctional, NoSignalingBox};
use crate::bounds::{local_bound, pnc_bound_lp_oracle, rac_pnc_bound, BoundMethod, BoundResult};
use crate::cglmp::{a3_quantum, alice_measurements, bob_measurements, optimal_state, quantum_strategy};
use crate::error::{Error, Result};
use crate::expdata::{analyze, fit_label_mapping, load_primary, AnalysisOptions, LabelMapping};
use crate::games::{
    behavior_from_quantum, make_cglmp3_game, make_rac_game, obliviousness_residual_quantum, performance, ObliviousGame,
    QuantumStrategy,
};
use crate::optimizer::{search, SearchConfig};

pub const SEED_ENV: &str = "OBLIVION_SEED";
/// Tolerance for the `map` consistency check.
pub const MAP_TOL: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(name = "oblivion", version, about = "Oblivious communication games and preparation contextuality")]
struct Cli {
    /// Worker threads for parallel sections
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Quantum value, classical bound and obliviousness residual of the CGLMP game
    Cglmp,
    /// Classical bound of a game: `rac:n,d`, `cglmp3` or a JSON file
    Bound {
        #[arg(long)]
        game: String,
        /// Use the LP oracle instead of a closed form
        #[arg(long)]
        oracle: bool,
        /// Message alphabet for the oracle (defaults to the outcome count)
        #[arg(long, requires = "oracle")]
        messages: Option<usize>,
    },
    /// Evaluate a Bell functional: `cglmp3` or a JSON file
    Bell {
        #[arg(long, default_value = "cglmp3")]
        bell: String,
        #[arg(long)]
        local_bound: bool,
        #[arg(long, requires = "box_file")]
        value: bool,
        /// Box JSON file, or `cglmp3` for the optimal qutrit box
        #[arg(long = "box")]
        box_file: Option<String>,
    },
    /// Check that a box scores the same in the Bell test and in the derived game
    Map {
        #[arg(long, default_value = "cglmp3")]
        bell: String,
        #[arg(long = "box")]
        box_file: String,
    },
    /// Analyse an experimental protocol table
    Exp {
        #[arg(long)]
        data: PathBuf,
        /// Refit the label mapping instead of using the bundled one
        #[arg(long, conflicts_with = "mapping")]
        fit_mapping: bool,
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long)]
        secondary: bool,
        /// Monte Carlo samples for the uncertainty estimate
        #[arg(long)]
        mc: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Search for good quantum strategies
    Optimize {
        #[arg(long)]
        game: String,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Strategy JSON used for the first restart
        #[arg(long)]
        warm_start: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub version: String,
}

#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    /// `None` when clap printed help or version text.
    pub report: Option<Report>,
    pub summary: String,
}

fn report(command: &str, inputs: Value, results: Value) -> Report {
    Report { command: command.into(), inputs, results, version: env!("CARGO_PKG_VERSION").into() }
}

fn default_seed() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| Error::Parse(format!("{SEED_ENV}={s} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// `rac:n,d`, `cglmp3`, or a path to a game JSON file.
pub fn parse_game(arg: &str) -> Result<ObliviousGame> {
    if arg == "cglmp3" {
        return Ok(make_cglmp3_game());
    }
    if let Some((n, d)) = parse_rac(arg)? {
        return make_rac_game(n, d);
    }
    ObliviousGame::from_json(&read(Path::new(arg))?)
}

fn parse_rac(arg: &str) -> Result<Option<(usize, usize)>> {
    let Some(rest) = arg.strip_prefix("rac:") else { return Ok(None) };
    let bad = || Error::Parse(format!("expected rac:n,d, got {arg}"));
    let (n, d) = rest.split_once(',').ok_or_else(bad)?;
    Ok(Some((n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?)))
}

fn parse_bell(arg: &str) -> Result<BellFunctional> {
    if arg == "cglmp3" {
        return Ok(cglmp3());
    }
    Ok(serde_json::from_str(&read(Path::new(arg))?)?)
}

fn parse_box(arg: &str) -> Result<NoSignalingBox> {
    if arg == "cglmp3" {
        return box_from_quantum(&optimal_state().density(), &alice_measurements(), &bob_measurements());
    }
    Ok(serde_json::from_str(&read(Path::new(arg))?)?)
}

fn bound_json(b: &BoundResult) -> Value {
    serde_json::to_value(b).expect("bound results serialize")
}

struct Done {
    report: Report,
    summary: String,
    flagged: bool,
}

fn execute(cmd: Command) -> Result<Done> {
    match cmd {
        Command::Cglmp => {
            let game = make_cglmp3_game();
            let strategy = quantum_strategy()?;
            let matrix = performance(&game, &behavior_from_quantum(&strategy)?)?;
            let bound = local_bound(&cglmp3())?;
            let residual = obliviousness_residual_quantum(&game, &strategy)?;
            Ok(Done {
                summary: format!("A3 = {:.6} (classical bound {})", a3_quantum(), bound.value),
                report: report(
                    "cglmp",
                    json!({}),
                    json!({
                        "value": a3_quantum(),
                        "value_matrix": matrix,
                        "bound": bound.value,
                        "obliviousness_residual": residual,
                    }),
                ),
                flagged: false,
            })
        }
        Command::Bound { game, oracle, messages } => {
            let inputs = json!({"game": game, "oracle": oracle, "messages": messages});
            let result = if oracle {
                let g = parse_game(&game)?;
                pnc_bound_lp_oracle(&g, messages.unwrap_or(g.outcomes()))?
            } else if let Some((n, d)) = parse_rac(&game)? {
                BoundResult { value: rac_pnc_bound(n, d)?, method: BoundMethod::Formula, witness: None }
            } else if game == "cglmp3" {
                local_bound(&cglmp3())?
            } else {
                return Err(Error::invalid("bound", "no closed form for this game; pass --oracle"));
            };
            Ok(Done {
                summary: format!("bound = {}", result.value),
                report: report("bound", inputs, bound_json(&result)),
                flagged: false,
            })
        }
        Command::Bell { bell, local_bound: want_bound, value, box_file } => {
            if !want_bound && !value {
                return Err(Error::invalid("bell", "pass --local-bound and/or --value --box <file>"));
            }
            let functional = parse_bell(&bell)?;
            let mut results = serde_json::Map::new();
            let mut summary = Vec::new();
            if want_bound {
                let b = local_bound(&functional)?;
                summary.push(format!("local bound = {}", b.value));
                results.insert("local_bound".into(), bound_json(&b));
            }
            if value {
                let arg = box_file.as_deref().expect("clap enforces --box");
                let v = bell_value(&functional, &parse_box(arg)?)?;
                summary.push(format!("value = {v}"));
                results.insert("value".into(), json!(v));
            }
            Ok(Done {
                summary: summary.join(", "),
                report: report("bell", json!({"bell": bell, "box": box_file}), Value::Object(results)),
                flagged: false,
            })
        }
        Command::Map { bell, box_file } => {
            let functional = parse_bell(&bell)?;
            let bx = parse_box(&box_file)?;
            let i_b = bell_value(&functional, &bx)?;
            let (p_g, behavior) = strategy_from_box(&bx)?;
            let game = game_from_bell(&functional, &p_g)?;
            let i_g = performance(&game, &behavior)?;
            let diff = (i_g - i_b).abs();
            Ok(Done {
                summary: format!("I_b = {i_b}, I_g = {i_g}"),
                report: report(
                    "map",
                    json!({"bell": bell, "box": box_file}),
                    json!({"bell_value": i_b, "game_value": i_g, "difference": diff, "agrees": diff < MAP_TOL, "p_g": p_g}),
                ),
                flagged: !(diff < MAP_TOL),
            })
        }
        Command::Exp { data, fit_mapping, mapping, secondary, mc, seed } => {
            let table = load_primary(&data)?;
            let map = if fit_mapping {
                fit_label_mapping(&table).0
            } else if let Some(path) = &mapping {
                LabelMapping::from_json(&read(path)?)?
            } else {
                LabelMapping::pinned()
            };
            let seed = match seed {
                Some(s) => s,
                None => default_seed()?,
            };
            let opts = AnalysisOptions { secondary, monte_carlo: mc.map(|n| (n, seed)) };
            let r = analyze(&table, &map, &opts)?;
            let mut summary = format!("A3 primary = {:.4}", r.a3_primary);
            if let (Some(s), Some(a)) = (r.s, r.a3_secondary) {
                summary.push_str(&format!(", S = {s:.4}, A3 secondary = {a:.4}"));
            }
            if let Some(sp) = r.sigma_pri {
                summary.push_str(&format!(", sigma = {sp:.4}"));
            }
            let flagged = r.residuals.secondary_constraint.is_some_and(|v| !(v < 1e-8));
            Ok(Done {
                summary,
                report: report(
                    "exp",
                    json!({"data": data, "fit_mapping": fit_mapping, "mapping": mapping, "secondary": secondary, "mc": mc, "seed": seed}),
                    serde_json::to_value(&r)?,
                ),
                flagged,
            })
        }
        Command::Optimize { game, dim, restarts, max_iters, seed, warm_start } => {
            let g = parse_game(&game)?;
            let seed = match seed {
                Some(s) => s,
                None => default_seed()?,
            };
            let warm: Option<QuantumStrategy> = match &warm_start {
                Some(p) => Some(serde_json::from_str(&read(p)?)?),
                None => None,
            };
            let cfg = SearchConfig { restarts, max_iters, seed, warm_start: warm, ..SearchConfig::new(dim) };
            let r = search(&g, &cfg)?;
            Ok(Done {
                summary: format!(
                    "value = {:.6}, residual = {:.1e}{}",
                    r.value,
                    r.feasibility_residual,
                    if r.infeasible { " (INFEASIBLE)" } else { "" }
                ),
                report: report(
                    "optimize",
                    json!({"game": game, "dim": dim, "restarts": restarts, "max_iters": max_iters, "seed": seed, "warm_start": warm_start}),
                    serde_json::to_value(&r)?,
                ),
                flagged: r.infeasible,
            })
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Cglmp => "cglmp",
        Command::Bound { .. } => "bound",
        Command::Bell { .. } => "bell",
        Command::Map { .. } => "map",
        Command::Exp { .. } => "exp",
        Command::Optimize { .. } => "optimize",
    }
}

fn failure(command: &str, message: String) -> Outcome {
    Outcome { code: 2, report: Some(report(command, json!({}), json!({"error": message}))), summary: message }
}

pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome { code: 0, report: None, summary: text },
                _ => failure("usage", text),
            };
        }
    };
    let name = command_name(&cli.command);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => return failure(name, format!("thread pool: {e}")),
    };
    match pool.install(|| execute(cli.command)) {
        Ok(done) => Outcome { code: if done.flagged { 3 } else { 0 }, report: Some(done.report), summary: done.summary },
        Err(e) => failure(name, e.to_string()),
    }
}
