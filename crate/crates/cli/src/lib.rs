//! Command dispatch for the `infoloss` binary.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use infoloss::bounds::{
    cor1_bound, default_m_prime_max, insight_delta_bound, old_bound, pinsker_delta_bound,
    thm1_bound, thm3_exponent, thm4_tail_bound, type2_bound, BoundReport, KModel,
};
use infoloss::coupling::{build_coupling, verify_coupling};
use infoloss::experiment::{
    json_bytes, run_stability, run_tail_experiment, run_trial_experiment, trials_csv_bytes,
    write_file, ExperimentConfig, StabilityConfig, STABILITY_JSON, TAILS_JSON, TRIALS_CSV,
};
use infoloss::figure::{emit_bound_fig, emit_toyfig, write_curve_csv, BoundFigParams, Panel, ToyFigSpec};
use infoloss::ib::{ib_curve, type2_loss_measured};
use infoloss::info::model_info;
use infoloss::verify::verify_all;
use infoloss::{Error, ModelFile};

pub const OUT_ENV: &str = "INFOLOSS_OUT";

pub mod exit {
    pub const OK: u8 = 0;
    pub const CHECK_FAILED: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const IO: u8 = 3;
}

#[derive(Debug, Parser)]
#[command(name = "infoloss", version, about = "Information-loss bounds on finite models")]
pub struct Cli {
    /// Output directory (overridden by INFOLOSS_OUT).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed override for randomized commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact information quantities of a model.
    Info {
        #[arg(long)]
        model: PathBuf,
    },
    #[command(subcommand)]
    Coupling(CouplingCmd),
    #[command(subcommand)]
    Bound(BoundCmd),
    #[command(subcommand)]
    Ib(IbCmd),
    #[command(subcommand)]
    Lab(LabCmd),
    #[command(subcommand)]
    Verify(VerifyCmd),
    #[command(subcommand)]
    Fig(FigCmd),
}

#[derive(Debug, Subcommand)]
pub enum CouplingCmd {
    /// Build the conditional maximal coupling and check it.
    Verify {
        #[arg(long)]
        model: PathBuf,
        /// Model file whose p_y_given_x is the estimate.
        #[arg(long)]
        est: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Formula {
    Thm1,
    Cor1,
    Type2,
    Old,
    Pinsker,
    Thm3,
    Thm4,
    Insight,
    All,
}

#[derive(Debug, Subcommand)]
pub enum BoundCmd {
    /// Evaluate one formula.
    Eval {
        #[arg(long, value_enum)]
        formula: Formula,
        /// Inline JSON object or path to a JSON file.
        #[arg(long)]
        params: String,
    },
    /// Evaluate a formula over the cartesian product of parameter lists.
    Sweep {
        #[arg(long, value_enum)]
        formula: Formula,
        /// JSON object mapping each parameter to a list of values.
        #[arg(long)]
        grid: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum IbCmd {
    /// Trace the relevance-compression frontier by a β sweep.
    Curve(IbCurveArgs),
}

#[derive(Debug, Args)]
pub struct IbCurveArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated ascending β values.
    #[arg(long, default_value = "0,0.5,1,1.5,2,3,4,6,8,12,16,32,64")]
    pub betas: String,
    /// Cardinality of Z (defaults to |X|).
    #[arg(long)]
    pub z_card: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Estimated model; adds the measured type-2 loss.
    #[arg(long)]
    pub est: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum LabCmd {
    /// Run trials for every m and write trials.csv.
    Trial {
        #[arg(long)]
        config: PathBuf,
    },
    /// Tail frequencies, fitted k(m') and the finite-sample bound.
    Tail {
        #[arg(long)]
        config: PathBuf,
    },
    /// Perturbation ladder of the stability probe.
    Stability {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    /// Run every oracle suite.
    All {
        #[arg(long, default_value_t = 1000)]
        seeds: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum FigCmd {
    /// Closed-form curves of the toy panels (all three by default).
    Toy {
        #[arg(long)]
        panel: Option<String>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// The toy figure recomputed from the bound formulas.
    Bound {
        /// Inline JSON object or path to a JSON file.
        #[arg(long)]
        params: Option<String>,
    },
}

/// A command outcome that is not an error but should exit nonzero.
#[derive(Debug)]
pub struct CheckFailed(pub String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "check failed: {}", self.0)
    }
}

impl std::error::Error for CheckFailed {}

/// Maps an error chain to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<CheckFailed>().is_some() {
        return exit::CHECK_FAILED;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io { .. } | Error::Csv(_) => exit::IO,
                Error::CounterexampleFound(_) | Error::BoundViolated(_) => exit::CHECK_FAILED,
                _ => exit::CONFIG,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return exit::IO;
        }
    }
    exit::CONFIG
}

pub struct RunContext {
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub json: bool,
}

impl RunContext {
    pub fn from_cli(cli: &Cli) -> Self {
        Self::resolve(cli, std::env::var_os(OUT_ENV))
    }

    /// `env_out` wins over `--out`; the fallback is `./out`.
    pub fn resolve(cli: &Cli, env_out: Option<std::ffi::OsString>) -> Self {
        let out = env_out
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .or_else(|| cli.out.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Self { out, seed: cli.seed, json: cli.json }
    }
}

/// Runs the parsed command, writing human or JSON output to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> anyhow::Result<()> {
    run_with(&RunContext::from_cli(cli), &cli.command, stdout)
}

pub fn run_with(ctx: &RunContext, command: &Command, stdout: &mut dyn Write) -> anyhow::Result<()> {
    match command {
        Command::Info { model } => cmd_info(ctx, model, stdout),
        Command::Coupling(CouplingCmd::Verify { model, est }) => cmd_coupling(model, est, stdout),
        Command::Bound(BoundCmd::Eval { formula, params }) => {
            let params = parse_object(params, "params")?;
            let v = eval_formula(*formula, &params)?;
            writeln!(stdout, "{}", serde_json::to_string_pretty(&v)?)?;
            Ok(())
        }
        Command::Bound(BoundCmd::Sweep { formula, grid }) => cmd_sweep(ctx, *formula, grid, stdout),
        Command::Ib(IbCmd::Curve(args)) => cmd_ib(ctx, args, stdout),
        Command::Lab(LabCmd::Trial { config }) => cmd_lab_trial(ctx, config, stdout),
        Command::Lab(LabCmd::Tail { config }) => cmd_lab_tail(ctx, config, stdout),
        Command::Lab(LabCmd::Stability { config }) => cmd_stability(ctx, config, stdout),
        Command::Verify(VerifyCmd::All { seeds }) => cmd_verify(ctx, *seeds, stdout),
        Command::Fig(FigCmd::Toy { panel, step }) => cmd_fig_toy(ctx, panel.as_deref(), *step, stdout),
        Command::Fig(FigCmd::Bound { params }) => cmd_fig_bound(ctx, params.as_deref(), stdout),
    }
}

fn load_model_file(path: &Path) -> anyhow::Result<ModelFile> {
    Ok(ModelFile::load(path)?)
}

fn print_json<T: Serialize>(stdout: &mut dyn Write, v: &T) -> anyhow::Result<()> {
    writeln!(stdout, "{}", serde_json::to_string_pretty(v)?)?;
    Ok(())
}

fn cmd_info(ctx: &RunContext, model: &Path, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let file = load_model_file(model)?;
    let m = file.to_model()?;
    let report = model_info(&m);
    if ctx.json {
        return print_json(stdout, &report);
    }
    writeln!(stdout, "|X| = {}  |Y| = {}  |Z| = {}", m.x_card(), m.y_card(), m.z_card())?;
    for (k, v) in [
        ("H(X)", report.h_x),
        ("H(Y)", report.h_y),
        ("I(X;Y)", report.i_xy),
        ("I(X;Z)", report.i_xz),
        ("I(Y;Z)", report.i_yz),
        ("I(Y;Z|X)", report.i_yz_given_x),
    ] {
        writeln!(stdout, "{k:<10} {v:.6} bits")?;
    }
    Ok(())
}

fn cmd_coupling(model: &Path, est: &Path, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let truth = load_model_file(model)?;
    let estimate = load_model_file(est)?;
    let p_x = truth.p_x()?;
    let p = truth.label_conditional()?;
    let q = estimate.label_conditional()?;
    let c = build_coupling(&p_x, &p, &q)?;
    let report = verify_coupling(&c, &p_x, &p, &q);
    print_json(stdout, &report)?;
    if !report.passed {
        return Err(CheckFailed(format!("{} coupling check(s) failed", report.failures().len())).into());
    }
    Ok(())
}

/// Inline JSON, or the contents of a file when the argument is not JSON.
fn parse_object(arg: &str, key: &str) -> anyhow::Result<Map<String, Value>> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Error::Io { path: arg.into(), source: e })?
    };
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(Error::Config { key: key.into(), message: "expected a JSON object".into() }.into()),
        Err(e) => Err(Error::Config { key: key.into(), message: e.to_string() }.into()),
    }
}

fn cfg_err(key: &str, message: impl Into<String>) -> anyhow::Error {
    Error::Config { key: key.into(), message: message.into() }.into()
}

fn get_f64(p: &Map<String, Value>, key: &str, default: Option<f64>) -> anyhow::Result<f64> {
    match p.get(key) {
        Some(v) => v.as_f64().ok_or_else(|| cfg_err(key, "expected a number")),
        None => default.ok_or_else(|| cfg_err(key, "missing")),
    }
}

fn get_u64(p: &Map<String, Value>, key: &str, default: Option<u64>) -> anyhow::Result<u64> {
    match p.get(key) {
        Some(v) => v.as_u64().ok_or_else(|| cfg_err(key, "expected a non-negative integer")),
        None => default.ok_or_else(|| cfg_err(key, "missing")),
    }
}

fn known_keys(p: &Map<String, Value>, keys: &[&str]) -> anyhow::Result<()> {
    match p.keys().find(|k| !keys.contains(&k.as_str())) {
        Some(k) => Err(cfg_err(k, format!("unknown parameter; expected one of {keys:?}"))),
        None => Ok(()),
    }
}

fn k_model(p: &Map<String, Value>) -> anyhow::Result<KModel> {
    Ok(KModel::new(get_f64(p, "k_c", Some(0.0))?, get_f64(p, "r", Some(0.0))?)?)
}

/// Evaluates `formula` on named parameters.
pub fn eval_formula(formula: Formula, p: &Map<String, Value>) -> anyhow::Result<Value> {
    let value = match formula {
        Formula::Thm1 => {
            known_keys(p, &["delta_bar", "i_xz"])?;
            json!({ "value": thm1_bound(get_f64(p, "delta_bar", None)?, get_f64(p, "i_xz", None)?)? })
        }
        Formula::Cor1 => {
            known_keys(p, &["delta_bar", "h_x"])?;
            json!({ "value": cor1_bound(get_f64(p, "delta_bar", None)?, get_f64(p, "h_x", None)?)? })
        }
        Formula::Type2 => {
            known_keys(p, &["k", "eps", "delta_bar", "i_xz"])?;
            let k = match p.get("k") {
                Some(_) => get_f64(p, "k", None)?,
                None => thm1_bound(get_f64(p, "delta_bar", None)?, get_f64(p, "i_xz", None)?)?,
            };
            json!({ "value": type2_bound(k, get_f64(p, "eps", Some(0.0))?)? })
        }
        Formula::Old => {
            known_keys(p, &["y_card", "m", "i_xz", "c"])?;
            json!({ "value": old_bound(
                get_u64(p, "y_card", None)? as usize,
                get_u64(p, "m", None)?,
                get_f64(p, "i_xz", None)?,
                get_f64(p, "c", Some(1.0))?,
            )? })
        }
        Formula::Pinsker => {
            known_keys(p, &["cross_entropy_nats"])?;
            json!({ "value": pinsker_delta_bound(get_f64(p, "cross_entropy_nats", None)?)? })
        }
        Formula::Thm3 => {
            known_keys(p, &["zeta", "eps"])?;
            json!({ "value": thm3_exponent(get_f64(p, "zeta", None)?, get_f64(p, "eps", None)?)? })
        }
        Formula::Thm4 => {
            known_keys(p, &["m", "y_card", "eps", "zeta", "k_c", "r", "m_prime_max"])?;
            let m = get_u64(p, "m", None)?;
            let t = thm4_tail_bound(
                m,
                get_u64(p, "y_card", None)? as usize,
                get_f64(p, "eps", None)?,
                get_f64(p, "zeta", Some(0.0))?,
                &k_model(p)?,
                get_u64(p, "m_prime_max", Some(default_m_prime_max(m)))?,
            )?;
            json!({ "value": t.bound, "argmin_m_prime": t.argmin_m_prime })
        }
        Formula::Insight => {
            known_keys(p, &["m", "y_card", "nu", "zeta", "k_c", "r", "m_prime_max"])?;
            let m = get_u64(p, "m", None)?;
            let t = insight_delta_bound(
                m,
                get_u64(p, "y_card", None)? as usize,
                get_f64(p, "nu", None)?,
                get_f64(p, "zeta", Some(0.0))?,
                &k_model(p)?,
                get_u64(p, "m_prime_max", Some(default_m_prime_max(m)))?,
            )?;
            json!({ "value": t.bound, "argmin_m_prime": t.argmin_m_prime })
        }
        Formula::All => {
            known_keys(p, &["delta_bar", "i_xz", "h_x", "eps", "y_card", "m", "c"])?;
            let r = BoundReport::compute(
                get_f64(p, "delta_bar", None)?,
                get_f64(p, "i_xz", None)?,
                get_f64(p, "h_x", None)?,
                get_f64(p, "eps", Some(0.0))?,
                get_u64(p, "y_card", None)? as usize,
                get_u64(p, "m", None)?,
                get_f64(p, "c", Some(1.0))?,
            )?;
            return Ok(serde_json::to_value(r)?);
        }
    };
    let mut obj = Map::new();
    obj.insert("formula".into(), json!(format!("{formula:?}").to_lowercase()));
    obj.insert("params".into(), Value::Object(p.clone()));
    if let Value::Object(v) = value {
        obj.extend(v);
    }
    Ok(Value::Object(obj))
}

fn formula_name(f: Formula) -> String {
    format!("{f:?}").to_lowercase()
}

/// CSV of the formula over the cartesian product of `grid` (keys sorted).
pub fn sweep_csv(formula: Formula, grid: &Map<String, Value>) -> anyhow::Result<Vec<u8>> {
    if formula == Formula::All {
        return Err(cfg_err("formula", "sweep needs a single formula"));
    }
    let axes: BTreeMap<&str, Vec<Value>> = grid
        .iter()
        .map(|(k, v)| match v {
            Value::Array(a) if !a.is_empty() => Ok((k.as_str(), a.clone())),
            _ => Err(cfg_err(k, "expected a non-empty list")),
        })
        .collect::<anyhow::Result<_>>()?;
    let names: Vec<&str> = axes.keys().copied().collect();
    let has_argmin = matches!(formula, Formula::Thm4 | Formula::Insight);
    let mut wr = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = names.clone();
    header.push("value");
    if has_argmin {
        header.push("argmin_m_prime");
    }
    wr.write_record(&header)?;
    let lens: Vec<usize> = axes.values().map(Vec::len).collect();
    let total: usize = lens.iter().product();
    for flat in 0..total {
        let mut rem = flat;
        let mut point = Map::new();
        // last axis varies fastest
        for (i, name) in names.iter().enumerate().rev() {
            point.insert((*name).to_string(), axes[name][rem % lens[i]].clone());
            rem /= lens[i];
        }
        let out = eval_formula(formula, &point)?;
        let mut row: Vec<String> = names.iter().map(|n| point[*n].to_string()).collect();
        row.push(out["value"].to_string());
        if has_argmin {
            row.push(out["argmin_m_prime"].to_string());
        }
        wr.write_record(&row)?;
    }
    wr.into_inner().map_err(|e| anyhow!("csv flush: {e}"))
}

fn cmd_sweep(ctx: &RunContext, formula: Formula, grid: &str, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let grid = parse_object(grid, "grid")?;
    let bytes = sweep_csv(formula, &grid)?;
    let path = write_file(&ctx.out, &format!("sweep_{}.csv", formula_name(formula)), &bytes)?;
    report_paths(ctx, stdout, &[path])
}

fn report_paths(ctx: &RunContext, stdout: &mut dyn Write, paths: &[PathBuf]) -> anyhow::Result<()> {
    if ctx.json {
        print_json(stdout, &json!({ "written": paths }))
    } else {
        for p in paths {
            writeln!(stdout, "wrote {}", p.display())?;
        }
        Ok(())
    }
}

fn parse_betas(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| cfg_err("betas", format!("'{t}': {e}"))))
        .collect()
}

fn cmd_ib(ctx: &RunContext, args: &IbCurveArgs, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let file = load_model_file(&args.model)?;
    let joint = file.joint_xy()?;
    let betas = parse_betas(&args.betas)?;
    let z_card = args.z_card.unwrap_or(joint.x_card());
    let seed = ctx.seed.unwrap_or(0);
    let curve = ib_curve(&joint, &betas, z_card, args.restarts, seed)?;
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(["beta", "i_xz", "i_yz", "objective", "certificate", "converged", "iterations"])?;
    for s in &curve {
        wr.write_record([
            s.beta.to_string(),
            s.i_xz.to_string(),
            s.i_yz.to_string(),
            s.objective.to_string(),
            s.certificate.to_string(),
            s.converged.to_string(),
            s.iterations.to_string(),
        ])?;
    }
    let bytes = wr.into_inner().map_err(|e| anyhow!("csv flush: {e}"))?;
    let mut paths = vec![write_file(&ctx.out, "ib_curve.csv", &bytes)?];
    if let Some(est) = &args.est {
        let q = load_model_file(est)?.label_conditional()?;
        let pts = type2_loss_measured(&joint, &q, &betas, z_card, args.restarts, seed)?;
        paths.push(write_file(&ctx.out, "type2.json", &json_bytes(&pts)?)?);
    }
    report_paths(ctx, stdout, &paths)
}

fn load_experiment(ctx: &RunContext, config: &Path) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = ctx.seed {
        cfg.base_seed = s;
    }
    Ok(cfg)
}

fn cmd_lab_trial(ctx: &RunContext, config: &Path, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = load_experiment(ctx, config)?;
    let model = cfg.load_model()?;
    let records = run_trial_experiment(&cfg, &model)?;
    let path = write_file(&ctx.out, TRIALS_CSV, &trials_csv_bytes(&records)?)?;
    report_paths(ctx, stdout, &[path])
}

fn cmd_lab_tail(ctx: &RunContext, config: &Path, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = load_experiment(ctx, config)?;
    let model = cfg.load_model()?;
    let (report, records) = run_tail_experiment(&cfg, &model)?;
    let paths = vec![
        write_file(&ctx.out, TRIALS_CSV, &trials_csv_bytes(&records)?)?,
        write_file(&ctx.out, TAILS_JSON, &json_bytes(&report)?)?,
    ];
    if !ctx.json {
        writeln!(stdout, "{:>8} {:>10} {:>10} {:>12}", "m", "freq", "wilson_hi", "tail_bound")?;
        for (i, t) in report.tails.iter().enumerate() {
            let b = report.thm4.get(i).map_or(f64::NAN, |p| p.bound);
            writeln!(stdout, "{:>8} {:>10.4} {:>10.4} {:>12.4e}", t.m, t.freq, t.wilson_hi, b)?;
        }
    }
    report_paths(ctx, stdout, &paths)
}

fn cmd_stability(ctx: &RunContext, config: &Path, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = StabilityConfig::load(config)?;
    let model = ModelFile::load(&cfg.model)?.to_model()?;
    let report = run_stability(&cfg, &model)?;
    let path = write_file(&ctx.out, STABILITY_JSON, &json_bytes(&report)?)?;
    if !ctx.json {
        for s in &report.ladder {
            writeln!(stdout, "mass {:>12.4e}  dTV {:>12.4e}", s.perturb_mass, s.delta_tv)?;
        }
    }
    report_paths(ctx, stdout, &[path])?;
    if !report.monotone {
        return Err(CheckFailed("stability ladder is not monotone".into()).into());
    }
    Ok(())
}

fn cmd_verify(ctx: &RunContext, seeds: usize, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let report = verify_all(seeds)?;
    let path = write_file(&ctx.out, "verify.json", &json_bytes(&report)?)?;
    if ctx.json {
        print_json(stdout, &report)?;
    } else {
        let mark = |b: bool| if b { "PASS" } else { "FAIL" };
        writeln!(stdout, "{:<20} {:>10} {:>10}  result", "suite", "instances", "violations")?;
        for s in report.suites.iter().chain([&report.coupling_checks, &report.coupling_search]) {
            writeln!(stdout, "{:<20} {:>10} {:>10}  {}", s.name, s.instances, s.violations, mark(s.pass))?;
        }
        match (&report.thm1, &report.thm1_error) {
            (Some(t), _) => writeln!(
                stdout,
                "{:<20} {:>10} {:>10}  PASS (tightest ratio {:.4})",
                "thm1_exhaustive", t.instances, t.violations, t.tightest_ratio
            )?,
            (None, Some(e)) => writeln!(stdout, "{:<20} {:>10} {:>10}  FAIL ({e})", "thm1_exhaustive", "-", 1)?,
            (None, None) => {}
        }
        writeln!(stdout, "report: {}", path.display())?;
    }
    if !report.passed {
        return Err(CheckFailed("one or more oracle suites failed".into()).into());
    }
    Ok(())
}

fn cmd_fig_toy(ctx: &RunContext, panel: Option<&str>, step: Option<f64>, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let panels = match panel {
        Some(p) => vec![p.parse::<Panel>()?],
        None => vec![Panel::LowEntropyNew, Panel::LowEntropyOld, Panel::HighEntropyNew],
    };
    let mut paths = Vec::with_capacity(panels.len());
    for panel in panels {
        let spec = match step {
            Some(s) => ToyFigSpec::with_step(panel, s)?,
            None => ToyFigSpec::new(panel),
        };
        let pts = emit_toyfig(&spec)?;
        let mut bytes = Vec::new();
        write_curve_csv(&pts, &mut bytes)?;
        paths.push(write_file(&ctx.out, &format!("toy_{panel}.csv"), &bytes)?);
    }
    report_paths(ctx, stdout, &paths)
}

fn cmd_fig_bound(ctx: &RunContext, params: Option<&str>, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let params: BoundFigParams = match params {
        Some(p) => serde_json::from_value(Value::Object(parse_object(p, "params")?))
            .map_err(|e| cfg_err("params", e.to_string()))?,
        None => BoundFigParams::default(),
    };
    let pts = emit_bound_fig(&params)?;
    let mut bytes = Vec::new();
    write_curve_csv(&pts, &mut bytes)?;
    let path = write_file(&ctx.out, "bound_fig.csv", &bytes).context("writing figure")?;
    report_paths(ctx, stdout, &[path])
}
