//! Command-line front end.
//!
//! Exit codes: 0 success, 1 inequality violation in assertion mode, 2 input
//! error, 3 exploratory run completed.

pub mod render;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::channel::{load_channel_file, Channel, Prior};
use crate::coding::random_code_trial;
use crate::error::{Error, Result};
use crate::exponent::{eq_aux, uniform_grid};
use crate::inequality::{fuzz, tau, FuzzConfig, InequalityId, SSampling, Witness};
use crate::random::StateEnsemble;
use crate::rate::{capacity_estimate, curve};
use crate::verify::verify_channel;
use render::{fmt_num, json, Units};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_EXPLORATORY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cqrel", version, about = "Random-coding exponents and trace inequalities for classical-quantum channels")]
pub struct Cli {
    /// Emit machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Display unit for rates and exponents.
    #[arg(long, global = true, value_enum, default_value = "nats")]
    units: Units,
    /// Write the document here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate E_q at one s or over a grid.
    Eq(EqArgs),
    /// Rate-exponent curve as CSV.
    Curve(CurveArgs),
    /// Capacity estimate (maximized Holevo quantity).
    Capacity(ChannelArgs),
    /// Run the property suite over a channel, or replay a witness.
    Verify(VerifyArgs),
    /// Random inequality campaign.
    Fuzz(FuzzArgs),
    /// Random-coding trials with square-root-measurement decoding.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct ChannelArgs {
    /// Channel JSON document.
    #[arg(long)]
    channel: PathBuf,
    /// Comma-separated prior replacing the document's.
    #[arg(long)]
    prior: Option<String>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("points").required(true).args(["s", "s_grid"])))]
struct EqArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
    /// `lo:hi:points` or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    s_grid: Option<String>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("rates").required(true).args(["r", "r_grid"])))]
struct CurveArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Single rate in nats.
    #[arg(long)]
    r: Option<f64>,
    /// Rates in nats: `lo:hi:points` or a comma-separated list.
    #[arg(long)]
    r_grid: Option<String>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["channel", "witness"])))]
struct VerifyArgs {
    #[arg(long)]
    channel: Option<PathBuf>,
    #[arg(long, requires = "channel")]
    prior: Option<String>,
    /// Replay a witness document instead.
    #[arg(long)]
    witness: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    instances: usize,
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Debug, Args)]
struct FuzzArgs {
    #[arg(long, default_value = "theorem")]
    inequality: InequalityId,
    #[arg(long, default_value_t = 1000)]
    instances: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    s_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    s_max: f64,
    /// Sample s from this many equally spaced points instead of uniformly.
    #[arg(long)]
    s_points: Option<usize>,
    #[arg(long, default_value_t = 1)]
    a_min: usize,
    #[arg(long, default_value_t = 4)]
    a_max: usize,
    #[arg(long, default_value_t = 2)]
    d_min: usize,
    #[arg(long, default_value_t = 6)]
    d_max: usize,
    /// Comma-separated state ensembles, cycled over instances.
    #[arg(long, default_value = "haar-mixed,diagonal,near-identical")]
    ensembles: String,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    no_shrink: bool,
    /// Also write the worst witness to this file.
    #[arg(long)]
    witness_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("size").required(true).args(["m", "rate"])))]
struct SimulateArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Comma-separated block lengths.
    #[arg(long, default_value = "1")]
    n: String,
    /// Number of codewords.
    #[arg(long)]
    m: Option<usize>,
    /// Rate in nats; `M = round(exp(nR))`, at least 1.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
}

struct Outcome {
    document: String,
    code: i32,
    /// Diagnostics for the error stream.
    notes: Vec<String>,
}

impl Outcome {
    fn ok(document: String) -> Self {
        Outcome {
            document,
            code: EXIT_OK,
            notes: Vec::new(),
        }
    }
}

pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("cannot parse {what} entry '{t}'")))
        })
        .collect()
}

/// `lo:hi:points` (inclusive, equally spaced) or a comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [lo, hi, n] => {
            let lo: f64 = parse_list(lo, "grid bound")?[0];
            let hi: f64 = parse_list(hi, "grid bound")?[0];
            let n: usize = parse_list(n, "grid size")?[0];
            if n < 2 || !(lo < hi) {
                return Err(Error::InvalidParameter(format!("bad grid '{text}'")));
            }
            Ok(uniform_grid(lo, hi, n))
        }
        [_] => parse_list(text, "grid"),
        _ => Err(Error::InvalidParameter(format!("bad grid '{text}'"))),
    }
}

fn load(args: &ChannelArgs) -> Result<(Channel, Prior)> {
    let (ch, prior) = load_channel_file(&args.channel)?;
    let prior = match &args.prior {
        Some(p) => {
            let p = Prior::new(parse_list(p, "prior")?)?;
            ch.check_prior(&p)?;
            p
        }
        None => prior,
    };
    Ok((ch, prior))
}

#[derive(Serialize)]
struct EqPoint {
    s: f64,
    value: f64,
}

#[derive(Serialize)]
struct EqDocument {
    units: Units,
    points: Vec<EqPoint>,
}

fn cmd_eq(cli: &Cli, args: &EqArgs) -> Result<Outcome> {
    let (ch, prior) = load(&args.channel)?;
    let grid = match (args.s, &args.s_grid) {
        (Some(s), _) => vec![s],
        (None, Some(g)) => parse_grid(g)?,
        (None, None) => unreachable!("clap enforces one of --s / --s-grid"),
    };
    let values = grid
        .iter()
        .map(|&s| Ok((s, eq_aux(&ch, &prior, s)?)))
        .collect::<Result<Vec<_>>>()?;
    let doc = if cli.json {
        json(&EqDocument {
            units: cli.units,
            points: values
                .iter()
                .map(|&(s, v)| EqPoint {
                    s,
                    value: cli.units.convert(v),
                })
                .collect(),
        })
    } else if args.s.is_some() {
        format!("{}\n", fmt_num(cli.units.convert(values[0].1)))
    } else {
        render::eq_csv(&values, cli.units)
    };
    Ok(Outcome::ok(doc))
}

#[derive(Serialize)]
struct CurveDocument {
    units: Units,
    points: Vec<crate::rate::RateExponentPoint>,
}

fn cmd_curve(cli: &Cli, args: &CurveArgs) -> Result<Outcome> {
    let (ch, _) = load(&args.channel)?;
    let rates = match (args.r, &args.r_grid) {
        (Some(r), _) => vec![r],
        (None, Some(g)) => parse_grid(g)?,
        (None, None) => unreachable!("clap enforces one of --r / --r-grid"),
    };
    let points = curve(&ch, &rates, cli.seed)?;
    let doc = if cli.json {
        json(&CurveDocument {
            units: cli.units,
            points: points
                .into_iter()
                .map(|mut p| {
                    p.rate = cli.units.convert(p.rate);
                    p.value = cli.units.convert(p.value);
                    p
                })
                .collect(),
        })
    } else {
        render::curve_csv(&points, cli.units)
    };
    Ok(Outcome::ok(doc))
}

#[derive(Serialize)]
struct CapacityDocument {
    units: Units,
    capacity: f64,
    prior: Prior,
}

fn cmd_capacity(cli: &Cli, args: &ChannelArgs) -> Result<Outcome> {
    let (ch, _) = load(args)?;
    let (c, prior) = capacity_estimate(&ch, cli.seed)?;
    let doc = if cli.json {
        json(&CapacityDocument {
            units: cli.units,
            capacity: cli.units.convert(c),
            prior,
        })
    } else {
        let w: Vec<String> = prior.weights().iter().map(|&x| fmt_num(x)).collect();
        format!("capacity {}\nprior {}\n", fmt_num(cli.units.convert(c)), w.join(","))
    };
    Ok(Outcome::ok(doc))
}

fn check_tau(t: Option<f64>) -> Result<f64> {
    match t {
        Some(t) if !(t >= 0.0) || !t.is_finite() => Err(Error::InvalidParameter(format!("tolerance {t}"))),
        Some(t) => Ok(t),
        None => Ok(tau()),
    }
}

fn cmd_verify(cli: &Cli, args: &VerifyArgs) -> Result<Outcome> {
    let tau = check_tau(args.tau)?;
    if let Some(path) = &args.witness {
        let w = Witness::from_json(&read(path)?)?;
        let report = w.replay()?;
        let code = if w.s < 0.0 {
            EXIT_EXPLORATORY
        } else if report.holds(tau) {
            EXIT_OK
        } else {
            EXIT_VIOLATION
        };
        let doc = if cli.json { json(&report) } else { render::report_table(&report, tau) };
        return Ok(Outcome {
            document: doc,
            code,
            notes: Vec::new(),
        });
    }
    let channel = ChannelArgs {
        channel: args.channel.clone().expect("clap enforces --channel or --witness"),
        prior: args.prior.clone(),
    };
    let (ch, prior) = load(&channel)?;
    if args.instances == 0 {
        return Err(Error::InvalidParameter("instances must be at least 1".into()));
    }
    let summary = verify_channel(&ch, &prior, args.instances, cli.seed, tau)?;
    let code = if summary.violations() == 0 { EXIT_OK } else { EXIT_VIOLATION };
    let doc = if cli.json { json(&summary) } else { render::verify_table(&summary) };
    Ok(Outcome {
        document: doc,
        code,
        notes: Vec::new(),
    })
}

fn cmd_fuzz(cli: &Cli, args: &FuzzArgs) -> Result<Outcome> {
    let ensembles = parse_list::<StateEnsemble>(&args.ensembles, "ensemble")?;
    let cfg = FuzzConfig {
        a_range: (args.a_min, args.a_max),
        d_range: (args.d_min, args.d_max),
        s_range: (args.s_min, args.s_max),
        s_sampling: args.s_points.map_or(SSampling::Uniform, SSampling::Grid),
        instance_count: args.instances,
        seed: cli.seed,
        ensembles,
        tau: check_tau(args.tau)?,
        shrink: !args.no_shrink,
    };
    let summary = fuzz(args.inequality, &cfg)?;
    let witness = summary.worst.as_ref().and_then(|r| r.witness.as_ref());
    if let (Some(path), Some(w)) = (&args.witness_out, witness) {
        std::fs::write(path, w.to_json() + "\n")?;
    }
    let mut notes = Vec::new();
    let code = if summary.exploratory {
        notes.push(format!(
            "exploratory run over s in [{}, {}]: report only, no pass/fail claim",
            fmt_num(args.s_min),
            fmt_num(args.s_max)
        ));
        EXIT_EXPLORATORY
    } else if summary.violations > 0 {
        notes.push(format!("{} violation(s) at tau = {}", summary.violations, fmt_num(cfg.tau)));
        EXIT_VIOLATION
    } else {
        EXIT_OK
    };
    if summary.errors > 0 {
        notes.push(format!("{} instance(s) could not be evaluated", summary.errors));
    }
    let doc = if cli.json { json(&summary) } else { render::fuzz_text(&summary) };
    Ok(Outcome {
        document: doc,
        code,
        notes,
    })
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> Result<Outcome> {
    let (ch, prior) = load(&args.channel)?;
    let ns: Vec<usize> = parse_list(&args.n, "block length")?;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let m = match (args.m, args.rate) {
            (Some(m), _) => m,
            (None, Some(r)) if r >= 0.0 && r.is_finite() => ((n as f64 * r).exp().round() as usize).max(1),
            (None, Some(r)) => return Err(Error::InvalidParameter(format!("rate {r}"))),
            (None, None) => unreachable!("clap enforces one of --m / --rate"),
        };
        rows.push(random_code_trial(&ch, &prior, n, m, args.trials, cli.seed)?);
    }
    let doc = if cli.json { json(&rows) } else { render::simulate_csv(&rows) };
    Ok(Outcome::ok(doc))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Eq(a) => cmd_eq(cli, a),
        Command::Curve(a) => cmd_curve(cli, a),
        Command::Capacity(a) => cmd_capacity(cli, a),
        Command::Verify(a) => cmd_verify(cli, a),
        Command::Fuzz(a) => cmd_fuzz(cli, a),
        Command::Simulate(a) => cmd_simulate(cli, a),
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let outcome = match dispatch(&cli) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    for n in &outcome.notes {
        let _ = writeln!(err, "{n}");
    }
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &outcome.document).map_err(|e| format!("{}: {e}", path.display())),
        None => out.write_all(outcome.document.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: cannot write output: {e}");
        return EXIT_INPUT;
    }
    outcome.code
}
