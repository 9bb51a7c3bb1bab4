//! `opaq`: execution-time opacity analysis for timed automata models.
//!
//! Exit codes: 0 = analysis ran (the verdict is in the payload), 1 = usage
//! or validation error, 2 = a state/depth budget was exceeded and the
//! printed result is partial.

use std::collections::BTreeMap;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use opaq_core::durset::DurationSet;
use opaq_core::model::{
    apply_valuation, classify_lu, parse_model, DeltaBound, LuVerdict, Model, ParamValuation,
};
use opaq_core::opacity::{self, DurationReport, SweepMode, Verdict};
use opaq_core::oracle;
use opaq_core::polyparam;
use opaq_core::rat::{self, Rational};
use opaq_core::tickgraph;
use opaq_core::{Budget, Error, RunClass};

#[derive(Parser)]
#[command(name = "opaq", version, about = "Execution-time opacity analysis for timed automata")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProblemArg {
    Exists,
    Weak,
    Full,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Weak,
    Full,
}

#[derive(Args)]
struct ModelArgs {
    /// Path to the model file.
    model: String,
    /// Parameter binding `name=value` (repeatable; value decimal or a/b).
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Decide an opacity problem (expiring variant when --delta is given).
    Check {
        #[arg(long, value_enum)]
        problem: ProblemArg,
        /// Expiration bound: a non-negative rational or `inf`.
        #[arg(long)]
        delta: Option<String>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Print the exact duration sets of private/public runs.
    Durations {
        #[arg(long)]
        delta: Option<String>,
        /// Also dump the explored region graph, one line per transition.
        #[arg(long)]
        dump_graph: bool,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Compute the maximal set of opaque execution times.
    OpaqueTimes {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Synthesize parameter valuations with an opaque execution time.
    SynthExists {
        /// Bound on discrete depth explored per path.
        #[arg(long, default_value_t = 200)]
        depth: usize,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Classify parameters into lower/upper bound roles.
    LuClassify {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Decide non-emptiness of the opaque valuation set of an L/U model.
    LuExists {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Sample an expiring verdict over a range of bounds.
    SweepDelta {
        #[arg(long)]
        max: String,
        #[arg(long)]
        step: String,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Enumerate grid-delay runs exhaustively (independent ground truth).
    Oracle {
        /// Delays are multiples of 1/granularity.
        #[arg(long)]
        granularity: u64,
        /// Enumerate runs up to this duration.
        #[arg(long)]
        horizon: String,
        #[arg(long)]
        delta: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        /// Additionally sample this many random (off-grid) runs.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Compare oracle samples against the symbolic duration sets.
    Crosscheck {
        /// Defaults to twice the model's rescaling factor.
        #[arg(long)]
        granularity: Option<u64>,
        /// Defaults to covering the periodic structure of the sets.
        #[arg(long)]
        horizon: Option<String>,
        #[arg(long)]
        delta: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        #[command(flatten)]
        model: ModelArgs,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::BudgetExceeded { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn budget_from_env() -> Result<Budget, Failure> {
    match std::env::var("OPAQ_STATE_BUDGET") {
        Err(_) => Ok(Budget::default()),
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .map(Budget::new)
            .map_err(|_| Failure::usage(format!("OPAQ_STATE_BUDGET is not a number: `{s}`"))),
    }
}

fn load_model(path: &str) -> Result<Model, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {path}: {e}")))?;
    parse_model(&text).map_err(|e| Failure::usage(format!("{path}: {e}")))
}

fn parse_bindings(args: &[String]) -> Result<Vec<(String, Rational)>, Failure> {
    args.iter()
        .map(|raw| {
            let (name, value) = raw
                .split_once('=')
                .ok_or_else(|| Failure::usage(format!("--param expects NAME=VALUE, got `{raw}`")))?;
            let value = rat::parse_rational(value)
                .map_err(|e| Failure::usage(format!("--param {name}: {e}")))?;
            Ok((name.trim().to_string(), value))
        })
        .collect()
}

/// Loads the model and instantiates all parameters; errors name the unbound
/// ones, so a parametric model cannot slip into a plain analysis.
fn load_instantiated(args: &ModelArgs) -> Result<Model, Failure> {
    let m = load_model(&args.model)?;
    let bindings = parse_bindings(&args.params)?;
    if m.params.is_empty() && !bindings.is_empty() {
        return Err(Failure::usage("--param given for a model without parameters"));
    }
    let unbound: Vec<String> = m
        .params
        .iter()
        .filter(|p| !bindings.iter().any(|(n, _)| n == *p))
        .cloned()
        .collect();
    if !unbound.is_empty() {
        return Err(Failure::usage(format!(
            "unbound parameters: {} (bind with --param name=value)",
            unbound.join(", ")
        )));
    }
    let v = ParamValuation::from_pairs(&m, &bindings).map_err(Failure::from)?;
    apply_valuation(&m, &v).map_err(Failure::from)
}

fn parse_delta(s: &str) -> Result<DeltaBound, Failure> {
    DeltaBound::parse(s).map_err(|e| Failure::usage(format!("--delta: {e}")))
}

fn delta_json(d: &Option<DeltaBound>) -> serde_json::Value {
    match d {
        None => serde_json::Value::Null,
        Some(d) => json!(d.to_string()),
    }
}

fn print_verdict(v: &Verdict, format: Format) {
    match format {
        Format::Json => println!("{}", serde_json::to_string(v).unwrap()),
        Format::Text => {
            match &v.delta {
                Some(d) => println!("problem: {} (delta = {d})", v.problem.as_str()),
                None => println!("problem: {}", v.problem.as_str()),
            }
            println!("answer: {}", v.answer);
            if let Some(w) = &v.witness {
                println!("witness: {}", rat::format_rational(w));
            }
        }
    }
}

#[derive(serde::Serialize)]
struct ReportPayload<'a> {
    d_visit: &'a DurationSet,
    d_avoid: &'a DurationSet,
    d_secret: &'a Option<DurationSet>,
    d_late: &'a Option<DurationSet>,
    delta: Option<String>,
}

fn report_json(r: &DurationReport) -> String {
    serde_json::to_string(&ReportPayload {
        d_visit: &r.d_visit,
        d_avoid: &r.d_avoid,
        d_secret: &r.d_secret,
        d_late: &r.d_late,
        delta: r.delta.as_ref().map(|d| d.to_string()),
    })
    .unwrap()
}

fn print_report(r: &DurationReport, format: Format) {
    match format {
        Format::Json => println!("{}", report_json(r)),
        Format::Text => {
            println!("DVisit_priv = {}", r.d_visit);
            println!("DAvoid_priv = {}", r.d_avoid);
            if let (Some(secret), Some(late), Some(delta)) = (&r.d_secret, &r.d_late, &r.delta) {
                println!("DSecret_priv = {secret}");
                println!("DLate_priv = {late}");
                println!("delta = {delta}");
            }
        }
    }
}

fn class_key(class: RunClass) -> &'static str {
    match class {
        RunClass::Private => "d_visit",
        RunClass::Public => "d_avoid",
        RunClass::Secret => "d_secret",
        RunClass::Late => "d_late",
    }
}

fn samples_json(report: &oracle::SampleReport) -> serde_json::Value {
    let mut samples = serde_json::Map::new();
    for (class, durations) in &report.samples {
        let list: Vec<String> = durations.iter().map(rat::format_rational).collect();
        samples.insert(class_key(*class).to_string(), json!(list));
    }
    json!({
        "granularity": report.granularity,
        "horizon": rat::format_rational(&report.horizon),
        "delta": delta_json(&report.delta),
        "budget_exceeded": report.budget_exceeded,
        "samples": samples,
    })
}

/// A horizon long enough to exercise the full periodic structure of every
/// set in the report, in unscaled time.
fn auto_horizon(r: &DurationReport) -> Rational {
    let mut worst: u64 = 0;
    let mut sets: Vec<&DurationSet> = vec![&r.d_visit, &r.d_avoid];
    if let Some(s) = &r.d_secret {
        sets.push(s);
    }
    if let Some(s) = &r.d_late {
        sets.push(s);
    }
    for s in sets {
        let span = match s.periodic_tail() {
            Some(p) => p.threshold + 2 * p.period,
            None => s
                .initial_intervals()
                .iter()
                .filter_map(|iv| iv.hi.as_ref())
                .map(|h| rat::to_u64(&h.ceil()).unwrap_or(0))
                .max()
                .unwrap_or(0),
        };
        worst = worst.max(span);
    }
    rat::rat(worst as i64 + 2, r.scale as i64)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let budget = budget_from_env()?;
    let format = cli.format;
    match cli.command {
        Command::Check {
            problem,
            delta,
            model,
        } => {
            let m = load_instantiated(&model)?;
            let delta = delta.as_deref().map(parse_delta).transpose()?;
            let verdict = match (problem, &delta) {
                (ProblemArg::Exists, None) => opacity::decide_exists(&m, &budget)?,
                (ProblemArg::Weak, None) => opacity::decide_weak(&m, &budget)?,
                (ProblemArg::Full, None) => opacity::decide_full(&m, &budget)?,
                (ProblemArg::Exists, Some(d)) => opacity::decide_exists_exp(&m, d, &budget)?,
                (ProblemArg::Weak, Some(d)) => opacity::decide_weak_exp(&m, d, &budget)?,
                (ProblemArg::Full, Some(d)) => opacity::decide_full_exp(&m, d, &budget)?,
            };
            print_verdict(&verdict, format);
            Ok(0)
        }
        Command::Durations {
            delta,
            dump_graph,
            model,
        } => {
            let m = load_instantiated(&model)?;
            let delta = delta.as_deref().map(parse_delta).transpose()?;
            if dump_graph {
                let bound = delta.clone().unwrap_or(DeltaBound::Infinite);
                let (scaled, scaled_delta, _) =
                    opaq_core::model::rescale_to_integers(&m, &bound)?;
                let mode = match &delta {
                    None => tickgraph::ObserverMode::Plain,
                    Some(_) => tickgraph::ObserverMode::Expiring(scaled_delta),
                };
                let observer = tickgraph::build_observer(&scaled, mode)?;
                let nfa = tickgraph::explore(&observer, &budget)?;
                print!("{}", tickgraph::dump_graph(&nfa));
            }
            let report = opacity::duration_report(&m, delta.as_ref(), &budget)?;
            print_report(&report, format);
            Ok(0)
        }
        Command::OpaqueTimes { model } => {
            let m = load_instantiated(&model)?;
            let times = opacity::compute_opaque_times(&m, &budget)?;
            match format {
                Format::Json => println!("{}", serde_json::to_string(&times).unwrap()),
                Format::Text => println!("OpaqueTimes = {times}"),
            }
            Ok(0)
        }
        Command::SynthExists { depth, model } => {
            let m = load_model(&model.model)?;
            if !model.params.is_empty() {
                return Err(Failure::usage(
                    "synth-exists synthesizes all parameters; drop --param",
                ));
            }
            let (constraint, complete) =
                polyparam::synth_exists_opaque(&m, Some(depth), &budget)?;
            match format {
                Format::Json => {
                    println!(
                        "{}",
                        json!({
                            "complete": complete,
                            "constraint": constraint.to_strings(),
                        })
                    );
                }
                Format::Text => {
                    if constraint.is_empty() {
                        println!("constraint: {{}}");
                    } else {
                        for (i, disjunct) in constraint.to_strings().iter().enumerate() {
                            println!("disjunct {}: {}", i + 1, disjunct.join(" && "));
                        }
                    }
                    if complete {
                        println!("complete: true");
                    } else {
                        println!("UNDER-APPROXIMATION: exploration stopped at depth {depth}");
                    }
                }
            }
            Ok(if complete { 0 } else { 2 })
        }
        Command::LuClassify { model } => {
            let m = load_model(&model.model)?;
            match classify_lu(&m) {
                LuVerdict::Lu(roles) => {
                    let named: BTreeMap<String, String> = roles
                        .iter()
                        .map(|(p, r)| (m.params[p.0].clone(), r.to_string()))
                        .collect();
                    match format {
                        Format::Json => {
                            println!("{}", json!({"lu": true, "assignment": named}))
                        }
                        Format::Text => {
                            println!("lower/upper: yes");
                            for (p, r) in named {
                                println!("{p}: {r}");
                            }
                        }
                    }
                }
                LuVerdict::Violation {
                    context,
                    atom,
                    param,
                } => {
                    let pname = &m.params[param.0];
                    match format {
                        Format::Json => println!(
                            "{}",
                            json!({
                                "lu": false,
                                "violation": {
                                    "param": pname,
                                    "context": context,
                                    "relation": atom.rel.symbol(),
                                }
                            })
                        ),
                        Format::Text => {
                            println!("lower/upper: no");
                            println!(
                                "violation: parameter {pname} used with conflicting roles in {context}"
                            );
                        }
                    }
                }
            }
            Ok(0)
        }
        Command::LuExists { model } => {
            let m = load_model(&model.model)?;
            let nonempty = polyparam::lu_exists_nonempty(&m, &budget)?;
            match format {
                Format::Json => println!("{}", json!({ "nonempty": nonempty })),
                Format::Text => println!("nonempty: {nonempty}"),
            }
            Ok(0)
        }
        Command::SweepDelta {
            max,
            step,
            mode,
            model,
        } => {
            let m = load_instantiated(&model)?;
            let max = rat::parse_rational(&max).map_err(Failure::usage)?;
            let step = rat::parse_rational(&step).map_err(Failure::usage)?;
            let mode = match mode {
                ModeArg::Weak => SweepMode::Weak,
                ModeArg::Full => SweepMode::Full,
            };
            let rows = opacity::sweep_delta(&m, &max, &step, mode, &budget)?;
            match format {
                Format::Json => {
                    let samples: Vec<serde_json::Value> = rows
                        .iter()
                        .map(|(d, a)| json!({"delta": d.to_string(), "answer": a}))
                        .collect();
                    println!(
                        "{}",
                        json!({
                            "mode": if mode == SweepMode::Weak { "weak" } else { "full" },
                            "exhaustive": false,
                            "samples": samples,
                        })
                    );
                }
                Format::Text => {
                    for (d, a) in &rows {
                        println!("delta = {d}: {a}");
                    }
                    println!("warning: sampled bounds only, not an exhaustive answer");
                }
            }
            Ok(0)
        }
        Command::Oracle {
            granularity,
            horizon,
            delta,
            max_steps,
            random,
            seed,
            model,
        } => {
            let m = load_instantiated(&model)?;
            let delta = delta.as_deref().map(parse_delta).transpose()?;
            let horizon = rat::parse_rational(&horizon).map_err(Failure::usage)?;
            let report = oracle::digitized_durations(
                &m,
                granularity,
                &horizon,
                max_steps,
                delta.as_ref(),
                &budget,
            )?;
            let random_samples = if random > 0 {
                oracle::random_runs(&m, random, seed, delta.as_ref())?
            } else {
                Vec::new()
            };
            match format {
                Format::Json => {
                    let mut v = samples_json(&report);
                    if random > 0 {
                        let list: Vec<serde_json::Value> = random_samples
                            .iter()
                            .map(|(d, c)| json!([rat::format_rational(d), c.as_str()]))
                            .collect();
                        v["random_runs"] = json!(list);
                    }
                    println!("{v}");
                }
                Format::Text => {
                    for (class, durations) in &report.samples {
                        let list: Vec<String> =
                            durations.iter().map(rat::format_rational).collect();
                        println!("{class}: {}", list.join(", "));
                    }
                    for (d, c) in &random_samples {
                        println!("random run: {} ({c})", rat::format_rational(d));
                    }
                    if report.budget_exceeded {
                        println!("warning: state budget exceeded, enumeration is partial");
                    }
                }
            }
            Ok(if report.budget_exceeded { 2 } else { 0 })
        }
        Command::Crosscheck {
            granularity,
            horizon,
            delta,
            max_steps,
            model,
        } => {
            let m = load_instantiated(&model)?;
            let delta = delta.as_deref().map(parse_delta).transpose()?;
            let sets = opacity::duration_report(&m, delta.as_ref(), &budget)?;
            let granularity = granularity.unwrap_or(2 * sets.scale);
            let horizon = match horizon {
                Some(h) => rat::parse_rational(&h).map_err(Failure::usage)?,
                None => auto_horizon(&sets),
            };
            let report = oracle::digitized_durations(
                &m,
                granularity,
                &horizon,
                max_steps,
                delta.as_ref(),
                &budget,
            )?;
            let strict = m.has_strict_constraints();
            let disagreements = oracle::crosscheck(&report, &sets, strict);
            match format {
                Format::Json => {
                    let list: Vec<serde_json::Value> = disagreements
                        .iter()
                        .map(|d| {
                            json!({
                                "duration": rat::format_rational(&d.duration),
                                "class": d.class.as_str(),
                                "oracle": d.oracle_member,
                                "symbolic": d.set_member,
                            })
                        })
                        .collect();
                    println!(
                        "{}",
                        json!({
                            "granularity": granularity,
                            "horizon": rat::format_rational(&horizon),
                            "strict_guards": strict,
                            "budget_exceeded": report.budget_exceeded,
                            "count": disagreements.len(),
                            "disagreements": list,
                        })
                    );
                }
                Format::Text => {
                    println!(
                        "crosscheck at granularity {granularity}, horizon {}{}",
                        rat::format_rational(&horizon),
                        if strict { " (soundness only)" } else { "" }
                    );
                    if disagreements.is_empty() {
                        println!("agreement: yes");
                    } else {
                        for d in &disagreements {
                            println!(
                                "disagreement: {} ({}) oracle={} symbolic={}",
                                rat::format_rational(&d.duration),
                                d.class,
                                d.oracle_member,
                                d.set_member
                            );
                        }
                    }
                    if report.budget_exceeded {
                        println!("warning: state budget exceeded, enumeration is partial");
                    }
                }
            }
            Ok(if report.budget_exceeded { 2 } else { 0 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
