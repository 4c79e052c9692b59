//! `barrier`: price barrier options and reproduce the published tables.

mod reference;
mod report;
mod schemes;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use barrier_core::boundary::CutoffConfig;
use barrier_core::contracts::ConfigError;
use barrier_core::pde_engine::heat_kernel_error;
use barrier_core::scheme_lab::SmaxRule;
use barrier_core::{analytic, validate, BarrierContract, ContractConfig, MarketParams, PricingError};
use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;

use schemes::{Scheme, Settings};

#[derive(Debug, Parser)]
#[command(
    name = "barrier",
    version,
    about = "Finite-difference barrier option pricer and reproduction harness"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Normal quantile that sets the domain cutoff.
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Mesh as MxL (space intervals x time steps).
    #[arg(long, global = true)]
    mesh: Option<Mesh>,
    #[arg(long, global = true, value_enum)]
    scheme: Option<Scheme>,
    /// continuous, daily, weekly or a date count.
    #[arg(long, global = true)]
    monitoring: Option<String>,
    /// Time steps per monitoring interval.
    #[arg(long, global = true)]
    rho: Option<usize>,
    /// TOML file with contract and market keys; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Price one contract.
    Price(ContractArgs),
    /// Price on a ladder of meshes and estimate the convergence order.
    Converge(ConvergeArgs),
    /// Reproduce a table (T1..T7) or figure data set (F1..F3), or ALL.
    Table {
        /// T1..T7, F1..F3 or ALL.
        id: String,
    },
    /// Price one contract with several schemes.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
struct ContractArgs {
    /// Spot price.
    #[arg(long)]
    s0: Option<f64>,
    /// Strike.
    #[arg(long)]
    k: Option<f64>,
    /// Single barrier level.
    #[arg(long)]
    b: Option<f64>,
    /// Lower barrier of a double knock-out.
    #[arg(long)]
    b_low: Option<f64>,
    /// Upper barrier of a double knock-out.
    #[arg(long)]
    b_high: Option<f64>,
    /// Expiry in years.
    #[arg(long)]
    t: Option<f64>,
    /// Volatility.
    #[arg(long)]
    sigma: Option<f64>,
    /// Risk-free rate.
    #[arg(long)]
    r: Option<f64>,
    /// Dividend yield.
    #[arg(long)]
    q: Option<f64>,
    /// Cash paid on knock-out.
    #[arg(long)]
    rebate: Option<f64>,
    /// down, up or double; inferred from the barriers when absent.
    #[arg(long)]
    barrier_type: Option<String>,
    /// Explicit-scheme grid constant: dy = lambda sigma sqrt(dt).
    #[arg(long, default_value_t = 3f64.sqrt())]
    lambda: f64,
    /// Far-field edge for habis/mefd: 2s0+200, 2s0, s0+100 or a number.
    #[arg(long, default_value = "2s0+200")]
    smax_rule: SmaxRule,
}

#[derive(Debug, Args)]
struct ConvergeArgs {
    #[command(flatten)]
    contract: ContractArgs,
    /// Explicit ladder, e.g. 25x25,50x50,100x100.
    #[arg(long, value_delimiter = ',')]
    meshes: Vec<Mesh>,
    /// Number of doublings of --mesh when --meshes is absent.
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Exact value to measure errors against (default: closed form).
    #[arg(long)]
    reference: Option<f64>,
    /// Run the heat-equation test problem instead of a contract, with
    /// dtau = dx^2 / 2.
    #[arg(long)]
    heat_kernel: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    contract: ContractArgs,
    /// At least two schemes, comma separated.
    #[arg(long, value_delimiter = ',', required = true, value_enum)]
    schemes: Vec<Scheme>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Mesh(usize, usize);

impl FromStr for Mesh {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (m, l) = s
            .to_ascii_lowercase()
            .split_once('x')
            .map(|(a, b)| (a.trim().parse::<usize>(), b.trim().parse::<usize>()))
            .ok_or_else(|| format!("mesh `{s}` is not of the form MxL"))?;
        match (m, l) {
            (Ok(m), Ok(l)) if m >= 2 && l >= 1 => Ok(Mesh(m, l)),
            _ => Err(format!("mesh `{s}` needs integers M >= 2 and L >= 1")),
        }
    }
}

impl std::fmt::Display for Mesh {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.0, self.1)
    }
}

/// Failure classes, each with its own exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Validation(String),
    Numeric(String),
    TableFailed,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::TableFailed => 4,
        }
    }
}

impl From<PricingError> for Failure {
    fn from(e: PricingError) -> Self {
        match e {
            PricingError::Validation(_) | PricingError::Domain(_) | PricingError::Unsupported(_) => {
                Failure::Validation(e.to_string())
            }
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(format!("output error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let sub = match &cli.command {
        Command::Price(_) => "price",
        Command::Converge(_) => "converge",
        Command::Table { .. } => "table",
        Command::Compare(_) => "compare",
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Usage(msg) => eprintln!("error: {msg}\n\n{}", usage_for(sub)),
                Failure::Validation(msg) | Failure::Numeric(msg) => eprintln!("error: {msg}"),
                Failure::TableFailed => {}
            }
            ExitCode::from(failure.code())
        }
    }
}

fn usage_for(sub: &str) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    let usage = match cmd.find_subcommand_mut(sub) {
        Some(sub) => sub.render_usage(),
        None => cmd.render_usage(),
    };
    format!("{usage}\n\nFor more information, try '--help'.")
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::Price(args) => cmd_price(g, args),
        Command::Converge(args) => cmd_converge(g, args),
        Command::Table { id } => cmd_table(g, id),
        Command::Compare(args) => cmd_compare(g, args),
    }
}

/// Contract, market and run settings from the config file and flags.
fn resolve(
    g: &GlobalArgs,
    args: &ContractArgs,
    default_mesh: Mesh,
) -> Result<(BarrierContract, MarketParams, Settings), Failure> {
    let base = match &g.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            ContractConfig::from_toml_str(&text).map_err(|e| Failure::Validation(e.to_string()))?
        }
        None => ContractConfig::default(),
    };
    let flags = ContractConfig {
        strike: args.k,
        expiry: args.t,
        s0: args.s0,
        barrier_type: args.barrier_type.clone(),
        barrier: args.b,
        barrier_low: args.b_low,
        barrier_high: args.b_high,
        rebate: args.rebate,
        monitoring: g.monitoring.clone(),
        r: args.r,
        q: args.q,
        sigma: args.sigma,
        delta: g.delta,
    };
    let merged = base.merged_with(&flags);
    let (contract, market) = merged.build().map_err(|e| match e {
        ConfigError::Missing(key) => Failure::Usage(format!("missing required value `{key}` (flag or config key)")),
        other => Failure::Validation(other.to_string()),
    })?;
    validate(&contract, &market).map_err(|v| Failure::Validation(format!("invalid contract: {v}")))?;
    let delta = merged.delta.unwrap_or(barrier_core::boundary::DEFAULT_DELTA);
    let cutoff = CutoffConfig::new(delta)?;
    let mesh = g.mesh.unwrap_or(default_mesh);
    let mut settings = Settings::new((mesh.0, mesh.1), cutoff);
    settings.rho = g.rho;
    settings.lambda = args.lambda;
    settings.s_max_rule = args.smax_rule;
    Ok((contract, market, settings))
}

#[derive(Serialize)]
struct PriceRow {
    scheme: String,
    mesh: String,
    value: String,
    boundary_mode: String,
    extraction: String,
    wall_time: String,
}

fn cmd_price(g: &GlobalArgs, args: &ContractArgs) -> Result<(), Failure> {
    let (contract, market, settings) = resolve(g, args, Mesh(200, 200))?;
    let scheme = g.scheme.unwrap_or(Scheme::Hobis);
    let r = schemes::price(scheme, &contract, &market, &settings)?;
    let mesh = format!("{}x{}", r.mesh.0, r.mesh.1);
    println!(
        "value={} scheme={} mesh={mesh} boundary={} extraction={} wall_time={:.4}s",
        report::price(r.value),
        scheme.name(),
        r.boundary_mode,
        r.extraction,
        r.wall_time
    );
    if let Some(path) = &g.out {
        let row = PriceRow {
            scheme: scheme.name().into(),
            mesh,
            value: report::price(r.value),
            boundary_mode: r.boundary_mode.to_string(),
            extraction: r.extraction.to_string(),
            wall_time: format!("{:.6}", r.wall_time),
        };
        report::emit(Some(path), &[row])?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ConvergeRow {
    mesh: String,
    value: String,
    abs_error: String,
    wall_time: String,
    order: String,
}

/// Observed order between consecutive rungs: from errors when a reference
/// exists, otherwise from the Richardson ratio of three values.
fn observed_orders(h: &[f64], values: &[f64], errors: Option<&[f64]>) -> Vec<Option<f64>> {
    (0..values.len())
        .map(|i| match errors {
            Some(e) if i >= 1 => Some((e[i - 1] / e[i]).ln() / (h[i - 1] / h[i]).ln()),
            None if i >= 2 => {
                let ratio = (values[i - 2] - values[i - 1]) / (values[i - 1] - values[i]);
                Some(ratio.abs().ln() / (h[i - 1] / h[i]).ln())
            }
            _ => None,
        })
        .collect()
}

fn cmd_converge(g: &GlobalArgs, args: &ConvergeArgs) -> Result<(), Failure> {
    let meshes: Vec<Mesh> = if args.meshes.is_empty() {
        let base = g.mesh.unwrap_or(Mesh(25, 25));
        (0..=args.levels).map(|i| Mesh(base.0 << i, base.1 << i)).collect()
    } else {
        args.meshes.clone()
    };
    let scheme = g.scheme.unwrap_or(Scheme::Hobis);
    let mut values = Vec::new();
    let mut errors = Vec::new();
    let mut times = Vec::new();
    let mut h = Vec::new();
    let explicit = matches!(scheme, Scheme::Obes | Scheme::Mefd);

    if args.heat_kernel {
        let policy = scheme.policy().ok_or_else(|| {
            Failure::Usage(format!(
                "--heat-kernel needs hobis, cn or implicit, not {}",
                scheme.name()
            ))
        })?;
        let tau = 0.1;
        for mesh in &meshes {
            let l = (2.0 * tau * (mesh.0 * mesh.0) as f64).round().max(1.0) as usize;
            let started = std::time::Instant::now();
            let e = heat_kernel_error(mesh.0, l, tau, policy)?;
            times.push(started.elapsed().as_secs_f64());
            errors.push(e);
            h.push(1.0 / mesh.0 as f64);
        }
        let orders = observed_orders(&h, &errors, Some(&errors));
        let rows: Vec<ConvergeRow> = meshes
            .iter()
            .enumerate()
            .map(|(i, mesh)| ConvergeRow {
                mesh: format!(
                    "{}x{}",
                    mesh.0,
                    (2.0 * tau * (mesh.0 * mesh.0) as f64).round().max(1.0) as usize
                ),
                value: String::new(),
                abs_error: report::error(errors[i]),
                wall_time: format!("{:.6}", times[i]),
                order: orders[i].map(report::error).unwrap_or_default(),
            })
            .collect();
        report::emit(g.out.as_deref(), &rows)?;
        return Ok(());
    }

    let (contract, market, settings) = resolve(g, &args.contract, Mesh(25, 25))?;
    let exact = match args.reference {
        Some(v) => Some(v),
        None if contract.monitoring.is_continuous() => analytic::closed_form_price(&contract, &market).ok(),
        None => None,
    };
    let mut used = Vec::new();
    for mesh in &meshes {
        let r = schemes::price(scheme, &contract, &market, &settings.with_mesh((mesh.0, mesh.1)))?;
        values.push(r.value);
        times.push(r.wall_time);
        used.push(format!("{}x{}", r.mesh.0, r.mesh.1));
        h.push(1.0 / if explicit { mesh.1 } else { mesh.0 } as f64);
    }
    if let Some(x) = exact {
        errors = values.iter().map(|v| (v - x).abs()).collect();
    }
    let orders = observed_orders(&h, &values, exact.map(|_| errors.as_slice()));
    let rows: Vec<ConvergeRow> = (0..values.len())
        .map(|i| ConvergeRow {
            mesh: used[i].clone(),
            value: report::price(values[i]),
            abs_error: errors.get(i).map(|&e| report::error(e)).unwrap_or_default(),
            wall_time: format!("{:.6}", times[i]),
            order: orders[i]
                .filter(|o| o.is_finite())
                .map(report::error)
                .unwrap_or_default(),
        })
        .collect();
    report::emit(g.out.as_deref(), &rows)?;
    Ok(())
}

fn cmd_table(g: &GlobalArgs, id: &str) -> Result<(), Failure> {
    let rows = tables::run(id).ok_or_else(|| {
        Failure::Usage(format!(
            "unknown table id `{id}`; expected one of {} or ALL",
            tables::TABLE_IDS.join(", ")
        ))
    })?;
    report::emit(g.out.as_deref(), &rows)?;
    let checked = rows
        .iter()
        .filter(|r| matches!(r.status, report::Status::Pass) || r.status.is_failure())
        .count();
    let failed = rows.iter().filter(|r| r.status.is_failure()).count();
    eprintln!(
        "{}: {checked} checked, {} passed, {failed} failed",
        id.to_ascii_uppercase(),
        checked - failed
    );
    if failed > 0 {
        Err(Failure::TableFailed)
    } else {
        Ok(())
    }
}

#[derive(Serialize)]
struct CompareRow {
    scheme: String,
    value: String,
    max_error: String,
    wall_time: String,
}

fn cmd_compare(g: &GlobalArgs, args: &CompareArgs) -> Result<(), Failure> {
    if args.schemes.len() < 2 {
        return Err(Failure::Usage("compare needs at least two schemes".into()));
    }
    let (contract, market, settings) = resolve(g, &args.contract, Mesh(40, 40))?;
    let mut rows = Vec::new();
    for &scheme in &args.schemes {
        let r = schemes::price(scheme, &contract, &market, &settings)?;
        let max_error = schemes::max_error(scheme, &contract, &market, &settings, r.value)
            .map(report::error)
            .unwrap_or_default();
        rows.push(CompareRow {
            scheme: scheme.name().into(),
            value: report::price(r.value),
            max_error,
            wall_time: format!("{:.6}", r.wall_time),
        });
    }
    report::emit(g.out.as_deref(), &rows)?;
    Ok(())
}
