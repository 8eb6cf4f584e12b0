//! Command-line front end.
//!
//! Results go to stdout (or `--output`), and a run manifest goes to
//! `--manifest`, `<output>.manifest.json`, or stderr, in that order of
//! preference. Keeping the manifest off stdout means stdout is byte-identical
//! across reruns.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bounds::{
    even_range, format_cell, format_value, omega_min_closed_form, omega_min_solver, percent_bound, percent_table,
    BoundReport, PercentTable,
};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::moments::MomentSpec;
use crate::quad::{QuadConfig, Rule};
use crate::rmt::{rmt_check, AuditMode, Normalization, RmtConfig};
use crate::selftest::run_selftest;
use crate::testfun::make_naive;

pub const THREADS_ENV: &str = "LOWZERO_THREADS";

#[derive(Debug, Parser)]
#[command(name = "lowzero", version, about = "Bounds on low-lying zeros from centered moments")]
pub struct Cli {
    /// Cap on worker threads (falls back to LOWZERO_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Where to write the run manifest.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    /// Write results here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Smallest interval (-ω, ω) forced to contain a normalized zero.
    OmegaMin(OmegaArgs),
    /// Upper bound on the fraction of forms with at least r zeros in (-ρ, ρ).
    Percent(PercentArgs),
    /// Reproduce one of the three published percentage tables.
    Table(TableArgs),
    /// Compare moment predictions with Haar-random SO(2N) samples.
    RmtCheck(RmtArgs),
    /// Run the invariant suites.
    Selftest(SelftestArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QuadArgs {
    /// Grid points per dimension.
    #[arg(long, default_value_t = 4001)]
    pub grid: usize,
    /// Target absolute error.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = RuleArg::Trapezoid)]
    pub rule: RuleArg,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleArg {
    MidpointRiemann,
    Trapezoid,
    GaussLegendre,
}

impl QuadArgs {
    fn config(&self) -> Result<QuadConfig> {
        let rule = match self.rule {
            RuleArg::MidpointRiemann => Rule::MidpointRiemann,
            RuleArg::Trapezoid => Rule::Trapezoid,
            RuleArg::GaussLegendre => Rule::GaussLegendre,
        };
        let cfg = QuadConfig { rule, points_per_dim: self.grid, refinement: 1, tolerance: self.tol };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Solve,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OmegaArgs {
    #[arg(long, default_value_t = 1)]
    pub n_level: u32,
    /// S-parameter; defaults to the level.
    #[arg(long)]
    pub a: Option<u32>,
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    /// Seed kernel: cos or quadratic.
    #[arg(long, default_value = "cos")]
    pub kernel: String,
    /// Defaults to closed-form at level 1 and solve otherwise.
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long, default_value_t = crate::bounds::DEFAULT_BRACKET.0)]
    pub bracket_lo: f64,
    #[arg(long, default_value_t = crate::bounds::DEFAULT_BRACKET.1)]
    pub bracket_hi: f64,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PercentArgs {
    /// Even levels; repeat or separate with commas.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_level: Vec<u32>,
    /// Explicit even r values; repeat or separate with commas.
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<u32>,
    #[arg(long, default_value_t = 2)]
    pub r_min: u32,
    #[arg(long, default_value_t = 20)]
    pub r_max: u32,
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub a: Option<u32>,
    /// Defaults to text for a single bound and csv for a table.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Directory for per-level `r,percent` curves.
    #[arg(long)]
    pub figure_data: Option<PathBuf>,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TableArgs {
    /// 1 (ρ = 0.2), 2 (ρ = 0.4) or 3 (ρ = 0.8).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=3))]
    pub table: u32,
    #[arg(long)]
    pub a: Option<u32>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub figure_data: Option<PathBuf>,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationArg {
    UnitSpacing,
    Dimension,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RmtArgs {
    /// N, for 2N × 2N matrices.
    #[arg(long, default_value_t = 50)]
    pub matrix_size: usize,
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Highest centered moment to compare (at most 6).
    #[arg(long, default_value_t = 3)]
    pub n_level: u32,
    /// S-parameter; defaults to each moment's order.
    #[arg(long)]
    pub a: Option<u32>,
    /// Support of the naive test function.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value_t = NormalizationArg::UnitSpacing)]
    pub normalization: NormalizationArg,
    /// Audit every draw instead of one in a hundred.
    #[arg(long)]
    pub audit_all: bool,
    #[command(flatten)]
    pub quad: QuadArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelftestArgs {
    #[arg(long, conflicts_with = "full")]
    pub quick: bool,
    #[arg(long)]
    pub full: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReplayArgs {
    pub manifest_path: PathBuf,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Command-line arguments after the program name.
    pub args: Vec<String>,
    pub resolved: serde_json::Value,
    pub tool_version: String,
    pub threads: Option<usize>,
    pub wall_clock_seconds: f64,
}

/// Outcome of a subcommand: the text to emit and whether checks passed.
struct Outcome {
    body: String,
    ok: bool,
    resolved: serde_json::Value,
}

fn report_text(r: &BoundReport) -> String {
    let mut s = match r.value {
        Some(v) if r.applicable => format_value(v),
        _ => "N/A".to_string(),
    };
    if let Some(note) = &r.note {
        s.push_str(&format!("\n{note}"));
    }
    s.push('\n');
    s
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn cmd_omega_min(a: &OmegaArgs) -> Result<Outcome> {
    let cfg = a.quad.config()?;
    let kernel = Kernel::by_name(&a.kernel)?;
    if a.n_level.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "omega-min needs an odd --n-level (got {}): only odd levels are used because even centered moments carry a positive Gaussian term",
            a.n_level
        )));
    }
    let method = a.method.unwrap_or(if a.n_level == 1 { Method::ClosedForm } else { Method::Solve });
    let spec = MomentSpec::new(a.n_level).with_a(a.a.unwrap_or(a.n_level)).with_sigma(a.sigma);
    spec.validate()?;
    let report = match method {
        Method::ClosedForm => {
            if a.n_level != 1 {
                return Err(Error::invalid("--method closed-form is only available at --n-level 1"));
            }
            omega_min_closed_form(&kernel, a.sigma, &cfg)?
        }
        Method::Solve => omega_min_solver(&spec, &kernel, &cfg, (a.bracket_lo, a.bracket_hi))?,
    };
    let body = match a.format {
        Format::Json => to_json(&report)?,
        Format::Text | Format::Csv => report_text(&report),
    };
    Ok(Outcome { body, ok: true, resolved: json!({ "args": a, "method": method, "a": spec.a }) })
}

fn emit_table(table: &PercentTable, format: Format, figure: Option<&Path>) -> Result<String> {
    if let Some(dir) = figure {
        table.write_figure_data(dir)?;
    }
    match format {
        Format::Json => to_json(&table.reports()),
        Format::Csv => table.to_csv_string(),
        Format::Text => {
            let mut out = String::new();
            for (r, row) in table.r_values.iter().zip(&table.cells) {
                let cells: Vec<String> = row.iter().map(format_cell).collect();
                out.push_str(&format!("{r}\t{}\n", cells.join("\t")));
            }
            Ok(out)
        }
    }
}

fn cmd_percent(a: &PercentArgs) -> Result<Outcome> {
    let cfg = a.quad.config()?;
    if let Some(&r) = a.r.iter().find(|&&r| r % 2 == 1 || r == 0) {
        return Err(Error::invalid(format!(
            "--r {r} is not allowed: zeros come in symmetric pairs, so r is an even number"
        )));
    }
    let r_values = if a.r.is_empty() { even_range(a.r_min, a.r_max) } else { a.r.clone() };
    if r_values.is_empty() {
        return Err(Error::invalid("the r range is empty"));
    }
    let single = a.n_level.len() == 1 && r_values.len() == 1;
    let format = a.format.unwrap_or(if single { Format::Text } else { Format::Csv });
    let resolved = json!({ "args": a, "r_values": r_values });
    if single && a.figure_data.is_none() {
        let n = a.n_level[0];
        let spec = MomentSpec::new(n).with_a(a.a.unwrap_or(n));
        let report = percent_bound(&spec, r_values[0], a.rho, &cfg)?;
        let body = match format {
            Format::Json => to_json(&report)?,
            Format::Csv => format!("r,level{n}\n{},{}\n", r_values[0], format_cell(&report)),
            Format::Text => report_text(&report),
        };
        return Ok(Outcome { body, ok: true, resolved });
    }
    let table = percent_table(&a.n_level, &r_values, a.rho, a.a, &cfg)?;
    let body = emit_table(&table, format, a.figure_data.as_deref())?;
    Ok(Outcome { body, ok: true, resolved })
}

/// `(ρ, r values)` of the published tables.
pub fn published_table(which: u32) -> Option<(f64, Vec<u32>)> {
    match which {
        1 => Some((0.2, even_range(2, 20))),
        2 => Some((0.4, even_range(4, 20))),
        3 => Some((0.8, vec![6, 16, 26, 28, 30, 32, 34])),
        _ => None,
    }
}

fn cmd_table(a: &TableArgs) -> Result<Outcome> {
    let cfg = a.quad.config()?;
    let (rho, r_values) = published_table(a.table).ok_or_else(|| Error::invalid("--table must be 1, 2 or 3"))?;
    let table = percent_table(&[2, 4, 6], &r_values, rho, a.a, &cfg)?;
    let body = emit_table(&table, a.format, a.figure_data.as_deref())?;
    Ok(Outcome { body, ok: true, resolved: json!({ "args": a, "rho": rho, "r_values": r_values }) })
}

const Z_LIMIT: f64 = 4.0;

fn cmd_rmt_check(a: &RmtArgs) -> Result<Outcome> {
    let quad = a.quad.config()?;
    let cfg = RmtConfig {
        half_size: a.matrix_size,
        samples: a.samples,
        seed: a.seed,
        normalization: match a.normalization {
            NormalizationArg::UnitSpacing => Normalization::UnitSpacing,
            NormalizationArg::Dimension => Normalization::Dimension,
        },
        audit: if a.audit_all { AuditMode::Every } else { AuditMode::OnePercent },
    };
    cfg.validate()?;
    if !(1..=6).contains(&a.n_level) {
        return Err(Error::invalid("--n-level must be between 1 and 6"));
    }
    let tf = make_naive(a.sigma)?;
    let check = rmt_check(&cfg, &tf, a.n_level.max(1), a.a, &quad)?;
    let ok = check.max_abs_z() <= Z_LIMIT;
    Ok(Outcome { body: to_json(&check)?, ok, resolved: json!({ "args": a, "z_limit": Z_LIMIT }) })
}

fn cmd_selftest(a: &SelftestArgs) -> Result<Outcome> {
    let report = run_selftest(!a.full);
    Ok(Outcome { body: to_json(&report)?, ok: report.passed, resolved: json!({ "args": a }) })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::OmegaMin(_) => "omega-min",
        Command::Percent(_) => "percent",
        Command::Table(_) => "table",
        Command::RmtCheck(_) => "rmt-check",
        Command::Selftest(_) => "selftest",
        Command::Replay(_) => "replay",
    }
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(t) = flag {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::invalid(format!("{THREADS_ENV} must be a positive integer (got `{v}`)"))),
        _ => Ok(None),
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::OmegaMin(a) => cmd_omega_min(a),
        Command::Percent(a) => cmd_percent(a),
        Command::Table(a) => cmd_table(a),
        Command::RmtCheck(a) => cmd_rmt_check(a),
        Command::Selftest(a) => cmd_selftest(a),
        Command::Replay(_) => Err(Error::invalid("replay cannot be nested")),
    }
}

fn write_manifest(cli: &Cli, manifest: &RunManifest) -> Result<()> {
    let text = to_json(manifest)?;
    let path = cli.manifest.clone().or_else(|| {
        cli.output.as_ref().map(|o| {
            let mut s = o.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stderr().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execute(cli: &Cli, args: Vec<String>) -> Result<bool> {
    let threads = resolve_threads(cli.threads)?;
    if threads == Some(0) {
        return Err(Error::invalid("--threads must be at least 1"));
    }
    let start = Instant::now();
    let work = || dispatch(cli);
    let outcome = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    match &cli.output {
        Some(p) => std::fs::write(p, &outcome.body)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(outcome.body.as_bytes())?;
            out.flush()?;
        }
    }
    let manifest = RunManifest {
        subcommand: command_name(&cli.command).to_string(),
        args,
        resolved: outcome.resolved,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        threads,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    write_manifest(cli, &manifest)?;
    Ok(outcome.ok)
}

fn exit_code(r: Result<bool>) -> i32 {
    match r {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

/// Parse `argv` (including the program name), run, and return the exit code:
/// 0 on success, 1 on numerical failure, 2 on usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let args: Vec<String> = argv.iter().skip(1).map(|s| s.to_string_lossy().into_owned()).collect();
    if let Command::Replay(r) = &cli.command {
        return exit_code(replay(&r.manifest_path));
    }
    exit_code(execute(&cli, args))
}

fn replay(path: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(path)?;
    let manifest: RunManifest = serde_json::from_str(&text)?;
    let mut argv = vec!["lowzero".to_string()];
    argv.extend(manifest.args.iter().cloned());
    let cli = Cli::try_parse_from(&argv).map_err(|e| Error::invalid(format!("manifest arguments do not parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Error::invalid("a manifest cannot record a replay"));
    }
    execute(&cli, manifest.args)
}
