//! `maxineq` command line: `verify`, `bound` and `replicate`.
//!
//! Exit codes: 0 when every check passes, 1 on a statistical failure, 2 on
//! usage or data errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::marketdata::{self, Replication};
use crate::pricing::{self, BoundSet};
use crate::sim::{self, Model, PathBatch, SimConfig};
use crate::stats::MomentEstimate;
use crate::theory::{self, CheckReport, Verdict, DEFAULT_Z_THRESHOLD};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "maxineq", version, about = "Doob maximal inequality checks and lookback bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a model and run the applicable identity and inequality checks.
    Verify(VerifyArgs),
    /// Compute upper bounds on E[M_T], optionally against a Monte Carlo price.
    Bound(BoundArgs),
    /// Replicate E[X_T^2] from an option chain CSV and bound E[M_T].
    Replicate(ReplicateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Bm,
    Gbm,
    Absbm,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Bm => Model::BrownianMotion,
            ModelArg::Gbm => Model::GbmMartingale,
            ModelArg::Absbm => Model::AbsBrownian,
        }
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long)]
    x0: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long = "t", default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = SimConfig::DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, default_value_t = SimConfig::DEFAULT_PATHS)]
    paths: usize,
    #[arg(long, default_value_t = SimConfig::DEFAULT_SEED)]
    seed: u64,
    /// Exponent p; repeatable. Lp checks use q = p + 1.
    #[arg(long = "p")]
    p: Vec<f64>,
    /// Tail thresholds for the Doob tail check; repeatable.
    #[arg(long = "a")]
    a: Vec<f64>,
    #[arg(long)]
    no_bridge: bool,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the simulated batch as CSV (path_id,terminal,maximum).
    #[arg(long)]
    dump: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_Z_THRESHOLD)]
    z_threshold: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct BoundArgs {
    #[arg(long)]
    x0: f64,
    #[arg(long, conflicts_with = "model")]
    l2: Option<f64>,
    #[arg(long, value_enum, requires = "sigma")]
    model: Option<ModelArg>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "t", default_value_t = 1.0)]
    horizon: f64,
    /// Monte Carlo price the lookback with this many paths.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long, default_value_t = SimConfig::DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, default_value_t = SimConfig::DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_Z_THRESHOLD)]
    z_threshold: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct ReplicateArgs {
    #[arg(long)]
    chain: PathBuf,
    #[arg(long)]
    forward: f64,
    #[arg(long)]
    expiry: f64,
    /// Defaults to the forward.
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Settings echoed into a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigEcho {
    Verify {
        sim: SimConfig,
        p: Vec<f64>,
        a: Vec<f64>,
        z_threshold: f64,
    },
    Bound {
        x0: f64,
        l2: f64,
        sim: Option<SimConfig>,
    },
    Replicate {
        chain: String,
        forward: f64,
        expiry: f64,
        x0: f64,
        n_quotes: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub config: ConfigEcho,
    pub checks: Vec<CheckReport>,
    /// Integrability diagnostics; never gate the exit code.
    pub diagnostics: Vec<MomentEstimate>,
    pub bounds: Option<BoundSet>,
    pub mc_lookback: Option<MomentEstimate>,
    pub replication: Option<Replication>,
    pub wall_time_ms: u64,
}

impl RunReport {
    fn new(config: ConfigEcho) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            checks: Vec::new(),
            diagnostics: Vec::new(),
            bounds: None,
            mc_lookback: None,
            replication: None,
            wall_time_ms: 0,
        }
    }

    pub fn any_fail(&self) -> bool {
        self.checks.iter().any(|c| c.verdict == Verdict::Fail)
    }
}

struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = if e.use_stderr() { e.render().ansi().to_string() } else { e.render().to_string() };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{text}");
            return code;
        }
    };
    let started = Instant::now();
    let (result, json) = match cli.command {
        Command::Verify(a) => {
            let json = a.json.clone();
            (verify(a, out), json)
        }
        Command::Bound(a) => {
            let json = a.json.clone();
            (bound(a, out), json)
        }
        Command::Replicate(a) => {
            let json = a.json.clone();
            (replicate(a, out), json)
        }
    };
    let (mut report, code) = match result {
        Ok(r) => r,
        Err(Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    report.wall_time_ms = started.elapsed().as_millis() as u64;
    if let Some(path) = json {
        if let Err(e) = write_json(&path, &report) {
            let _ = writeln!(err, "error: writing {}: {e}", path.display());
            return EXIT_USAGE;
        }
    }
    code
}

fn write_json(path: &PathBuf, report: &RunReport) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    w.flush()
}

fn check_threshold(z: f64) -> Result<(), Usage> {
    if z.is_finite() && z > 0.0 {
        Ok(())
    } else {
        Err(Usage(format!("--z-threshold must be > 0, got {z}")))
    }
}

fn default_tail_grid(batch: &PathBatch) -> Vec<f64> {
    let cfg = batch.config();
    let scale = if batch.x0() > 0.0 { batch.x0() } else { cfg.sigma * cfg.horizon.sqrt() };
    [1.1, 1.5, 2.0].iter().map(|m| m * scale).collect()
}

/// Checks that apply to `model`, in report order.
fn run_checks(
    batch: &PathBatch,
    ps: &[f64],
    tails: &[f64],
) -> Result<(Vec<CheckReport>, Vec<MomentEstimate>), Usage> {
    let model = batch.model();
    let identities = batch.config().bridge_correction;
    let mut checks = Vec::new();
    let mut diagnostics = Vec::new();
    for &p in ps {
        if model.is_martingale() && identities {
            checks.push(theory::identity_residual(batch, p)?);
            diagnostics.push(sim::qv_integral(batch, p)?);
        }
        if model.is_nonnegative() {
            checks.push(theory::submartingale_gap(batch, p)?);
            checks.push(theory::lp_bound_check(batch, p + 1.0, false)?);
            checks.push(theory::lp_bound_check(batch, p + 1.0, true)?);
        }
    }
    if model.is_martingale() {
        if identities {
            checks.push(theory::squared_gap_check(batch)?);
        }
        checks.push(pricing::bound_gap_report(batch)?);
    }
    if model.is_nonnegative() {
        for &a in tails {
            checks.push(theory::doob_tail_check(batch, a)?);
        }
    }
    Ok((checks, diagnostics))
}

fn verify(args: VerifyArgs, out: &mut dyn Write) -> Result<(RunReport, u8), Usage> {
    check_threshold(args.z_threshold)?;
    let model: Model = args.model.into();
    let ps = if args.p.is_empty() { vec![1.0] } else { args.p.clone() };
    for &p in &ps {
        if !(p.is_finite() && p > 0.0) {
            return Err(Usage(format!("--p must be > 0, got {p}")));
        }
        if !model.is_nonnegative() && p != 1.0 {
            return Err(Usage(format!(
                "model {model} is signed; only p = 1 applies (got p = {p})"
            )));
        }
    }
    let cfg = SimConfig {
        model,
        x0: args.x0,
        sigma: args.sigma,
        horizon: args.horizon,
        n_steps: args.steps,
        n_paths: args.paths,
        seed: args.seed,
        bridge_correction: !args.no_bridge,
    };
    cfg.validate()?;
    let batch = sim::simulate_paths(&cfg)?;
    if let Some(path) = &args.dump {
        batch.write_csv(BufWriter::new(File::create(path)?))?;
    }
    let tails = if args.a.is_empty() { default_tail_grid(&batch) } else { args.a.clone() };
    let (checks, diagnostics) = run_checks(&batch, &ps, &tails)?;
    let checks: Vec<CheckReport> = checks.into_iter().map(|c| c.with_threshold(args.z_threshold)).collect();

    let mut report = RunReport::new(ConfigEcho::Verify {
        sim: cfg.clone(),
        p: ps,
        a: tails,
        z_threshold: args.z_threshold,
    });
    report.checks = checks;
    report.diagnostics = diagnostics;

    writeln!(
        out,
        "model={} x0={} sigma={} T={} steps={} paths={} seed={} bridge={}",
        cfg.model, cfg.x0, cfg.sigma, cfg.horizon, cfg.n_steps, cfg.n_paths, cfg.seed, cfg.bridge_correction
    )?;
    if !cfg.bridge_correction && model.is_martingale() {
        writeln!(out, "note: identity checks need the bridge correction and were skipped")?;
    }
    write_table(out, &report.checks)?;
    for d in &report.diagnostics {
        writeln!(out, "diagnostic {:<28} {:>14.6e} +- {:.2e}", d.label, d.mean, d.stderr)?;
    }
    let code = if report.any_fail() { EXIT_FAIL } else { EXIT_OK };
    Ok((report, code))
}

fn write_table(out: &mut dyn Write, checks: &[CheckReport]) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<28} {:>6} {:>14} {:>14} {:>9}  {}",
        "check_id", "p", "lhs", "rhs", "z", "verdict"
    )?;
    for c in checks {
        writeln!(
            out,
            "{:<28} {:>6} {:>14.8} {:>14.8} {:>9.3}  {:?}",
            c.check_id,
            c.p,
            c.lhs.mean,
            c.rhs.value(),
            c.z,
            c.verdict
        )?;
    }
    Ok(())
}

fn write_bounds(out: &mut dyn Write, b: &BoundSet) -> std::io::Result<()> {
    writeln!(out, "x0       {:.6}", b.x0)?;
    writeln!(out, "l2       {:.6}", b.l2)?;
    writeln!(out, "tight    {:.6}", b.tight)?;
    writeln!(out, "sqrt2    {:.6}", b.sqrt2)?;
    writeln!(out, "classic  {:.6}", b.classic)
}

fn bound(args: BoundArgs, out: &mut dyn Write) -> Result<(RunReport, u8), Usage> {
    check_threshold(args.z_threshold)?;
    let (l2, sim_cfg) = match (args.l2, args.model) {
        (Some(l2), None) => {
            if args.paths.is_some() {
                return Err(Usage("--paths needs --model gbm".into()));
            }
            (l2, None)
        }
        (None, Some(ModelArg::Gbm)) => {
            let sigma = args.sigma.expect("clap requires --sigma with --model");
            let mut cfg = SimConfig::new(Model::GbmMartingale, args.x0, sigma, args.horizon)
                .steps(args.steps)
                .seed(args.seed);
            if let Some(n) = args.paths {
                cfg = cfg.paths(n);
            }
            cfg.validate()?;
            (pricing::gbm_l2(args.x0, sigma, args.horizon), Some(cfg))
        }
        (None, Some(other)) => {
            return Err(Usage(format!(
                "closed-form l2 is available for --model gbm only, got {:?}",
                other
            )))
        }
        (None, None) => return Err(Usage("give either --l2 or --model gbm with --sigma".into())),
        (Some(_), Some(_)) => unreachable!("clap rejects --l2 with --model"),
    };
    let bounds = pricing::lookback_bounds(args.x0, l2)?;
    let mut report = RunReport::new(ConfigEcho::Bound {
        x0: args.x0,
        l2,
        sim: sim_cfg.clone().filter(|_| args.paths.is_some()),
    });
    report.bounds = Some(bounds);
    write_bounds(out, &bounds)?;

    let mut code = EXIT_OK;
    if let (Some(cfg), Some(_)) = (sim_cfg, args.paths) {
        let batch = sim::simulate_paths(&cfg)?;
        let est = pricing::mc_lookback(&batch)?;
        let ok = est.mean <= bounds.tight + args.z_threshold * est.stderr;
        writeln!(
            out,
            "mc E[M_T] {:.6} +- {:.6}  (<= tight: {})",
            est.mean,
            est.stderr,
            if ok { "Pass" } else { "Fail" }
        )?;
        if !ok {
            code = EXIT_FAIL;
        }
        report.mc_lookback = Some(est);
    }
    Ok((report, code))
}

fn replicate(args: ReplicateArgs, out: &mut dyn Write) -> Result<(RunReport, u8), Usage> {
    let file = File::open(&args.chain).map_err(|e| Usage(format!("{}: {e}", args.chain.display())))?;
    let chain = marketdata::parse_chain(std::io::BufReader::new(file), args.forward, args.expiry)
        .map_err(|e| Usage(format!("{}: {e}", args.chain.display())))?;
    let rep = marketdata::replicate(&chain);
    let x0 = args.x0.unwrap_or(args.forward);
    let bounds = pricing::lookback_bounds(x0, rep.l2())?;
    writeln!(out, "E[X_T^2] {:.8}", rep.second_moment)?;
    writeln!(
        out,
        "strikes  [{}, {}] (no extrapolation beyond)",
        rep.lower_strike, rep.upper_strike
    )?;
    write_bounds(out, &bounds)?;
    let mut report = RunReport::new(ConfigEcho::Replicate {
        chain: args.chain.display().to_string(),
        forward: args.forward,
        expiry: args.expiry,
        x0,
        n_quotes: chain.quotes().len(),
    });
    report.bounds = Some(bounds);
    report.replication = Some(rep);
    Ok((report, EXIT_OK))
}
