//! Command-line front end. Every command reads its settings from flags and an
//! optional JSON config file (flags win), and echoes the effective settings
//! in the metadata of its output.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::abm::{compare_to_ode, AbmConfig};
use crate::bifurcation::{
    const_region_scan, default_const_axes, feedback_region_scan, hopf_curve, region_areas, Axis, HopfSweep, Param,
};
use crate::equilibria::{classify_const_region, equilibria};
use crate::error::Error;
use crate::io::{abm_table, areas_table, grid_table, hopf_table, trajectory_table, write_atomic, JsonDoc, Table};
use crate::odeint::{default_initial_conditions, integrate, AttractorConfig, IntegrateOptions, Tolerances};
use crate::plot::plot_table;
use crate::{ModelParams, Scenario, ScenarioKind, SystemState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "repdyn", version, about = "Replicator dynamics of automatic versus controlled agents")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one trajectory and write `t,x[,beta][,rho]`.
    Simulate(Invocation),
    /// Fixed points with eigenvalues and stability (JSON).
    Equilibria(Invocation),
    /// Constant-environment region label over the (beta, rho) unit square.
    Regions(Invocation),
    /// Region area fractions for a list of `a` values.
    Areas(Invocation),
    /// Hopf threshold tau* across the fixed environment parameter.
    Hopf(Invocation),
    /// Long-run outcome mask over a grid of a feedback system.
    Classify(Invocation),
    /// Finite-population simulation compared with the replicator equation.
    Abm(Invocation),
    /// Render a data file written by another command as SVG.
    Plot(Invocation),
}

impl Command {
    fn parts(&self) -> (&'static str, &Invocation) {
        match self {
            Command::Simulate(i) => ("simulate", i),
            Command::Equilibria(i) => ("equilibria", i),
            Command::Regions(i) => ("regions", i),
            Command::Areas(i) => ("areas", i),
            Command::Hopf(i) => ("hopf", i),
            Command::Classify(i) => ("classify", i),
            Command::Abm(i) => ("abm", i),
            Command::Plot(i) => ("plot", i),
        }
    }
}

#[derive(Debug, Args)]
struct Invocation {
    /// JSON file with settings; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

/// Settings shared by all commands. The JSON config file uses the same
/// field names; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Only checked against the subcommand when given in a config file.
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    /// const, beta, rho or both.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_rho: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Sampling interval of `simulate` output.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    /// Cells per axis (`regions`, `areas`) or sweep points (`hopf`).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// `lo:hi:step` or a comma-separated list.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_values: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_param: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_log: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_param: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_log: Option<bool>,
    /// Integration time of the first attractor-detection attempt.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extensions: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub population: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generation_length: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generations: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Input data file (`plot`).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Also render the output as SVG to this path.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::StepUnderflow { .. } | Error::Overshoot { .. } | Error::TooManySteps { .. } => {
                Failure::Numeric(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Out<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Out<T> {
    Err(Failure::Usage(msg.into()))
}

/// Overlay the flags on the config file.
fn merge(file: Settings, flags: &Settings) -> Out<Settings> {
    let Value::Object(mut base) = serde_json::to_value(file).unwrap() else { unreachable!() };
    let Value::Object(over) = serde_json::to_value(flags).unwrap() else { unreachable!() };
    base.extend(over);
    serde_json::from_value(Value::Object(base)).map_err(|e| Failure::Usage(e.to_string()))
}

fn load_settings(command: &str, inv: &Invocation) -> Out<Settings> {
    let file = match &inv.config {
        None => Settings::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
        }
    };
    if let Some(c) = &file.command {
        if c != command {
            return usage(format!("config is for command '{c}', not '{command}'"));
        }
    }
    let mut s = merge(file, &inv.settings)?;
    s.command = Some(command.to_string());
    Ok(s)
}

fn require<T: Copy>(v: Option<T>, flag: &str) -> Out<T> {
    v.ok_or_else(|| Failure::Usage(format!("--{flag} is required")))
}

fn kind(s: &Settings, default: ScenarioKind) -> Out<ScenarioKind> {
    match &s.scenario {
        None => Ok(default),
        Some(k) => Ok(k.parse()?),
    }
}

fn scenario(s: &Settings, kind: ScenarioKind) -> Out<Scenario> {
    let tb = if kind.beta_dynamic() { require(s.tau_beta, "tau-beta")? } else { f64::NAN };
    let tr = if kind.rho_dynamic() { require(s.tau_rho, "tau-rho")? } else { f64::NAN };
    let sc = kind.with_lags(tb, tr);
    sc.validate()?;
    Ok(sc)
}

/// Model parameters; a dynamic environment parameter defaults to its
/// initial value.
fn params(s: &Settings, kind: ScenarioKind) -> Out<ModelParams> {
    let a = require(s.a, "a")?;
    let rho = match s.rho {
        Some(r) => r,
        None if kind.rho_dynamic() => s.rho0.unwrap_or(0.5),
        None => require(s.rho, "rho")?,
    };
    let beta = match s.beta {
        Some(b) => b,
        None if kind.beta_dynamic() => s.beta0.unwrap_or(0.5),
        None => require(s.beta, "beta")?,
    };
    Ok(ModelParams::new(a, rho, beta)?)
}

fn tolerances(s: &Settings) -> Tolerances {
    let d = Tolerances::default();
    Tolerances { rtol: s.rtol.unwrap_or(d.rtol), atol: s.atol.unwrap_or(d.atol), ..d }
}

fn config_meta(s: &Settings) -> Value {
    serde_json::to_value(s).unwrap()
}

fn emit(s: &Settings, text: &str) -> Out<()> {
    match &s.out {
        Some(p) => write_atomic(p, text.as_bytes()).map_err(Failure::from),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::from(e).into()),
            _ => Ok(()),
        },
    }
}

fn emit_table(s: &Settings, table: Table) -> Out<()> {
    let table = table.with_meta("config", config_meta(s));
    if let Some(svg) = &s.svg {
        write_atomic(svg, plot_table(&table)?.as_bytes())?;
    }
    emit(s, &table.to_csv_string())
}

fn cmd_simulate(s: &Settings) -> Out<()> {
    let k = kind(s, ScenarioKind::ConstantEnv)?;
    let sc = scenario(s, k)?;
    let p = params(s, k)?;
    let x0 = s.x0.unwrap_or(0.5);
    let b0 = s.beta0.unwrap_or(p.beta);
    let r0 = s.rho0.unwrap_or(p.rho);
    let state = match k {
        ScenarioKind::ConstantEnv => SystemState::constant(x0),
        ScenarioKind::BetaFeedback => SystemState::with_beta(x0, b0),
        ScenarioKind::RhoFeedback => SystemState::with_rho(x0, r0),
        ScenarioKind::DualFeedback => SystemState::dual(x0, b0, r0),
    };
    let t_end = s.t_end.unwrap_or(if k == ScenarioKind::ConstantEnv { 5000.0 } else { 20_000.0 });
    let opts = IntegrateOptions { tol: tolerances(s), sample_dt: Some(s.dt.unwrap_or(t_end / 2000.0)) };
    let tr = integrate(&sc, &p, &state, t_end, &opts)?;
    emit_table(s, trajectory_table(&tr))
}

fn cmd_equilibria(s: &Settings) -> Out<()> {
    let k = kind(s, ScenarioKind::ConstantEnv)?;
    let sc = scenario(s, k)?;
    let p = params(s, k)?;
    let reports = equilibria(&sc, &p)?;
    let mut meta = Map::new();
    meta.insert("config".into(), config_meta(s));
    meta.insert("scenario".into(), serde_json::to_value(sc).unwrap());
    meta.insert("params".into(), serde_json::to_value(p).unwrap());
    if k == ScenarioKind::ConstantEnv {
        meta.insert("region".into(), serde_json::to_value(classify_const_region(&p)?.label).unwrap());
    }
    emit(s, &JsonDoc::new(meta, &reports).to_string_pretty())
}

fn cmd_regions(s: &Settings) -> Out<()> {
    let k = kind(s, ScenarioKind::ConstantEnv)?;
    if k != ScenarioKind::ConstantEnv {
        return usage("regions applies to the constant environment; use classify for feedback systems");
    }
    let base = ModelParams::new(require(s.a, "a")?, 0.5, 0.5)?;
    let (xa, ya) = default_const_axes(s.n.unwrap_or(512));
    emit_table(s, grid_table(&const_region_scan(&base, xa, ya)?))
}

fn parse_values(text: &str) -> Out<Vec<f64>> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("bad number '{t}'")));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0 && hi >= lo) {
            return usage(format!("bad range '{text}'"));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|k| lo + k as f64 * step).collect());
    }
    text.split(',').map(num).collect()
}

fn cmd_areas(s: &Settings) -> Out<()> {
    let values = match (&s.a_values, s.a) {
        (Some(v), _) => parse_values(v)?,
        (None, Some(a)) => vec![a],
        (None, None) => return usage("--a-values is required"),
    };
    let n = s.n.unwrap_or(512);
    emit_table(s, areas_table(&region_areas(&values, n)?, n))
}

fn cmd_hopf(s: &Settings) -> Out<()> {
    let k = kind(s, ScenarioKind::ConstantEnv)?;
    if !matches!(k, ScenarioKind::BetaFeedback | ScenarioKind::RhoFeedback) {
        return usage("hopf needs --scenario beta or rho");
    }
    let d = HopfSweep::default();
    let sweep = HopfSweep {
        min: s.sweep_min.unwrap_or(d.min),
        max: s.sweep_max.unwrap_or(d.max),
        n: s.n.unwrap_or(d.n),
        ..d
    };
    emit_table(s, hopf_table(&hopf_curve(k, require(s.a, "a")?, &sweep)?))
}

fn axis(s: &Settings, first: bool, default: Axis) -> Out<Axis> {
    let (param, min, max, n, log) = if first {
        (&s.x_param, s.x_min, s.x_max, s.nx, s.x_log)
    } else {
        (&s.y_param, s.y_min, s.y_max, s.ny, s.y_log)
    };
    let mut ax = default;
    if let Some(p) = param {
        let p: Param = p.parse()?;
        if p != ax.param {
            let tau = matches!(p, Param::TauBeta | Param::TauRho);
            ax = if tau { Axis::log(p, 10.0, 1e4, ax.n) } else { Axis::linear(p, 0.0, 1.0, ax.n) };
        }
    }
    ax.min = min.unwrap_or(ax.min);
    ax.max = max.unwrap_or(ax.max);
    ax.n = n.unwrap_or(ax.n);
    if let Some(l) = log {
        ax.scale = if l { crate::bifurcation::AxisScale::Log } else { crate::bifurcation::AxisScale::Linear };
    }
    ax.validate()?;
    Ok(ax)
}

fn cmd_classify(s: &Settings) -> Out<()> {
    let k = kind(s, ScenarioKind::BetaFeedback)?;
    let (dx, dy) = match k {
        ScenarioKind::ConstantEnv => return usage("classify needs a feedback scenario; use regions for const"),
        ScenarioKind::BetaFeedback => (Axis::linear(Param::Rho, 0.0, 1.0, 64), Axis::log(Param::TauBeta, 10.0, 1e4, 64)),
        ScenarioKind::RhoFeedback => (Axis::linear(Param::Beta, 0.0, 1.0, 64), Axis::log(Param::TauRho, 10.0, 1e4, 64)),
        ScenarioKind::DualFeedback => {
            (Axis::log(Param::TauBeta, 10.0, 1e4, 64), Axis::log(Param::TauRho, 10.0, 1e4, 64))
        }
    };
    let (xa, ya) = (axis(s, true, dx)?, axis(s, false, dy)?);
    let base = ModelParams::new(require(s.a, "a")?, s.rho.unwrap_or(0.5), s.beta.unwrap_or(0.5))?;
    let sc = k.with_lags(s.tau_beta.unwrap_or(100.0), s.tau_rho.unwrap_or(100.0));
    let d = AttractorConfig::default();
    let cfg = AttractorConfig {
        budget: s.budget.or(d.budget),
        extensions: s.extensions.unwrap_or(d.extensions),
        tol: tolerances(s),
        ..d
    };
    let grid = feedback_region_scan(&sc, &base, xa, ya, &default_initial_conditions(k), &cfg)?;
    emit_table(s, grid_table(&grid))
}

fn cmd_abm(s: &Settings) -> Out<()> {
    let cfg = AbmConfig {
        params: params(s, ScenarioKind::ConstantEnv)?,
        population: s.population.unwrap_or(1000),
        generation_length: s.generation_length.unwrap_or(50),
        generations: s.generations.unwrap_or(200),
        seed: s.seed.unwrap_or(0),
    };
    let c = compare_to_ode(&cfg, s.x0.unwrap_or(0.5))?;
    emit_table(s, abm_table(&c).with_meta("abm", cfg))
}

fn cmd_plot(s: &Settings) -> Out<()> {
    let input = s.input.as_deref().ok_or_else(|| Failure::Usage("--input is required".into()))?;
    let svg = plot_table(&Table::read(input)?)?;
    emit(s, &svg)
}

fn threads() -> Out<Option<usize>> {
    match std::env::var("REPDYN_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => usage(format!("REPDYN_THREADS must be a positive integer, got '{v}'")),
        },
    }
}

fn dispatch(cmd: &Command) -> Out<()> {
    let (name, inv) = cmd.parts();
    let s = load_settings(name, inv)?;
    let run = || match cmd {
        Command::Simulate(_) => cmd_simulate(&s),
        Command::Equilibria(_) => cmd_equilibria(&s),
        Command::Regions(_) => cmd_regions(&s),
        Command::Areas(_) => cmd_areas(&s),
        Command::Hopf(_) => cmd_hopf(&s),
        Command::Classify(_) => cmd_classify(&s),
        Command::Abm(_) => cmd_abm(&s),
        Command::Plot(_) => cmd_plot(&s),
    };
    match threads()? {
        None => run(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Usage(e.to_string()))?
            .install(run),
    }
}

/// Run the tool on `args` (including the program name) and return the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.cmd) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("numerical failure: {m}");
            EXIT_NUMERIC
        }
    }
}

