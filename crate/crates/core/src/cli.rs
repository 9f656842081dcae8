//! `channel-metric` command-line driver.
//!
//! Exit codes: 0 ok, 2 invalid configuration, 3 numerical failure, 4 memory
//! budget exceeded, 5 degenerate estimation problem.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::channels::{ChannelFamily, ChannelSpec, Resolved};
use crate::error::{Error, ErrorKind};
use crate::estim::{rate_scan, Estimator, RateReport, Strategy};
use crate::metrics::{
    cp_ball_radius, g_max_upper, g_max_upper_family, g_min, g_r_output, parallel_scaling, MetricOptions, MetricReport,
    MixtureSimulation, ScalingRow, Witness,
};
use crate::states::ExtReal;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;
pub const EXIT_DEGENERATE: i32 = 5;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "CHANNEL_METRIC_THREADS";

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "channel-metric",
    version,
    about = "Monotone metrics on quantum channel spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write a JSON report record to this path.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case", tag = "command")]
pub enum Command {
    /// Compute channel metrics at one point.
    Metric {
        #[arg(value_enum)]
        which: MetricKind,
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        opts: OptArgs,
    },
    /// Normalized smallest metric of n parallel copies.
    Scaling {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        #[arg(long)]
        #[serde(skip)]
        csv: Option<PathBuf>,
        #[arg(long)]
        #[serde(skip)]
        svg: Option<PathBuf>,
        #[command(flatten)]
        opts: OptArgs,
    },
    /// Monte Carlo estimation and MSE rate.
    Simulate {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_enum, default_value_t = StrategyKind::Computational)]
        strategy: StrategyKind,
        #[arg(long, value_enum, default_value_t = PovmKind::Strategy)]
        povm: PovmKind,
        #[arg(long, value_enum, default_value_t = EstimatorKind::Grid)]
        estimator: EstimatorKind,
        /// Comma-separated channel-use counts, ascending.
        #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000")]
        n_list: Vec<u64>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        #[serde(skip)]
        csv: Option<PathBuf>,
        #[arg(long)]
        #[serde(skip)]
        svg: Option<PathBuf>,
        #[command(flatten)]
        opts: OptArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Smallest monotone metric.
    Min,
    /// Output RLD quantity.
    Rld,
    /// Upper bound on the largest monotone metric.
    Max,
    /// CP-ball radius and its bound.
    Cpball,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Computational,
    Bell,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PovmKind {
    /// The strategy's own measurement.
    Strategy,
    /// The trivial measurement `{I}`.
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Grid,
    Newton,
}

#[derive(Debug, Args, Serialize)]
pub struct SourceArgs {
    /// Catalog family name.
    #[arg(long, conflicts_with = "spec")]
    pub family: Option<String>,
    /// Family parameters as a JSON object.
    #[arg(long, requires = "family")]
    pub params: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Channel-spec JSON file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct OptArgs {
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) => match e.kind() {
                ErrorKind::Config => EXIT_CONFIG,
                ErrorKind::Numeric => EXIT_NUMERIC,
                ErrorKind::Budget => EXIT_BUDGET,
                ErrorKind::Degenerate => EXIT_DEGENERATE,
            },
            CliError::Io { .. } => EXIT_CONFIG,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io { path, message } => write!(f, "{}: {message}", path.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Structured record of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub command: Vec<String>,
    /// SHA-256 of the parsed configuration.
    pub config_hash: String,
    pub version: String,
    pub results: Value,
    /// Seconds; the only field that varies between identical runs.
    pub wall_time: f64,
}

/// Result of a command: its record plus the human-readable summary.
#[derive(Debug)]
pub struct Outcome {
    pub record: ReportRecord,
    pub summary: String,
}

/// Hash of everything that affects results; output paths are left out so
/// the same computation written to different files hashes the same.
pub fn config_hash(cli: &Cli) -> String {
    let canonical = serde_json::to_string(cli).expect("configuration serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn threads_from_env() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::param(THREADS_ENV, format!("`{v}` is not a positive integer")).into()),
        Err(_) => Ok(None),
    }
}

impl OptArgs {
    fn metric_options(&self) -> CliResult<MetricOptions> {
        let mut o = MetricOptions {
            threads: threads_from_env()?,
            ..Default::default()
        };
        if let Some(r) = self.restarts {
            if r == 0 {
                return Err(Error::param("restarts", "must be at least 1").into());
            }
            o.restarts = r;
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(Error::param("tol", format!("{t} is not positive")).into());
            }
            o.tol = t;
        }
        if let Some(m) = self.max_iter {
            if m == 0 {
                return Err(Error::param("max_iter", "must be at least 1").into());
            }
            o.max_iter = m;
        }
        if let Some(s) = self.seed {
            o.seed = s;
        }
        Ok(o)
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

impl SourceArgs {
    fn spec(&self) -> CliResult<ChannelSpec> {
        match (&self.family, &self.spec) {
            (Some(name), None) => {
                let params = match &self.params {
                    Some(text) => serde_json::from_str(text).map_err(|e| Error::param("params", e.to_string()))?,
                    None => Value::Null,
                };
                ChannelFamily::from_catalog(name, &params)?;
                let theta = self
                    .theta
                    .ok_or_else(|| Error::param("theta", "required with --family"))?;
                Ok(ChannelSpec::Catalog {
                    name: name.clone(),
                    params,
                    theta,
                })
            }
            (None, Some(path)) => {
                let mut spec = ChannelSpec::from_json(&read_file(path)?)?;
                if let (Some(t), ChannelSpec::Catalog { theta, .. }) = (self.theta, &mut spec) {
                    *theta = t;
                }
                Ok(spec)
            }
            _ => Err(Error::param("family", "give either --family or --spec").into()),
        }
    }

    fn resolve(&self) -> CliResult<Resolved> {
        let spec = self.spec()?;
        if let ChannelSpec::Catalog { theta, .. } = &spec {
            if !theta.is_finite() {
                return Err(Error::param("theta", format!("{theta} is not finite")).into());
            }
        }
        Ok(spec.resolve()?)
    }

    fn family_point(&self) -> CliResult<(ChannelFamily, f64)> {
        let r = self.resolve()?;
        match (r.family, r.theta) {
            (Some(f), Some(t)) => Ok((f, t)),
            _ => Err(Error::param(
                "spec",
                "this command needs a catalog family, not an explicit Choi matrix",
            )
            .into()),
        }
    }
}

fn ext(v: ExtReal) -> String {
    match v {
        ExtReal::Finite(x) => format!("{x}"),
        ExtReal::Infinite => "inf".into(),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn describe(name: &str, r: &MetricReport, out: &mut String) {
    let _ = write!(out, "{name} = {}", ext(r.value));
    if let Some(reason) = r.divergence {
        let _ = write!(out, " ({})", to_value(&reason).as_str().unwrap_or_default());
    }
    let _ = writeln!(
        out,
        "  [iterations {}, converged {}, restarts {}/{} converged]",
        r.iterations, r.converged, r.restarts_converged, r.restarts_used
    );
    if let Witness::Probe(p) = &r.witness {
        let top = p.vector().iter().map(|z| z.norm_sqr()).fold(0.0_f64, f64::max);
        let _ = writeln!(
            out,
            "  witness: probe on {}x{}, largest amplitude weight {top:.6}",
            p.d_in(),
            p.d_anc()
        );
    }
}

fn cmd_metric(which: MetricKind, source: &SourceArgs, opts: &OptArgs) -> CliResult<(Value, String)> {
    let r = source.resolve()?;
    let delta = r
        .tangent
        .clone()
        .ok_or_else(|| Error::param("tangent", "the explicit spec has no tangent"))?;
    let o = opts.metric_options()?;
    let mut results = serde_json::Map::new();
    let mut summary = String::new();
    if matches!(which, MetricKind::Min | MetricKind::All) {
        let rep = g_min(&r.channel, &delta, &o)?;
        describe("g_min", &rep, &mut summary);
        results.insert("g_min".into(), to_value(&rep));
    }
    if matches!(which, MetricKind::Rld | MetricKind::All) {
        let rep = g_r_output(&r.channel, &delta, &o)?;
        describe("g_r_output", &rep, &mut summary);
        results.insert("g_r_output".into(), to_value(&rep));
    }
    if matches!(which, MetricKind::Max | MetricKind::Cpball | MetricKind::All) {
        let rep = match (&r.family, r.theta) {
            (Some(f), Some(t)) => g_max_upper_family(f, t)?,
            _ => g_max_upper(&r.channel, &delta, &[] as &[MixtureSimulation])?,
        };
        if matches!(which, MetricKind::Cpball | MetricKind::All) {
            let ball = cp_ball_radius(&r.channel, &delta)?;
            let _ = writeln!(
                summary,
                "cp_ball_radius = {}{}",
                ball.radius,
                if ball.capped { " (capped)" } else { "" }
            );
            results.insert("cp_ball".into(), to_value(&ball));
        }
        let _ = write!(summary, "g_max_upper = {}", ext(rep.value));
        if let Some(m) = rep.mixture_bound {
            let _ = write!(summary, "  [cp bound {}, mixture bound {}]", ext(rep.cp_bound), ext(m));
        }
        summary.push('\n');
        results.insert("g_max_upper".into(), to_value(&rep));
    }
    Ok((Value::Object(results), summary))
}

fn scaling_csv(rows: &[ScalingRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Numerical(format!("CSV encoding failed: {e}"));
    w.write_record(["n", "g_min_over_n", "restarts_used", "converged"])
        .map_err(io)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            ext(r.g_min_over_n),
            r.restarts_used.to_string(),
            r.converged.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
}

fn simulate_csv(rep: &RateReport) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Numerical(format!("CSV encoding failed: {e}"));
    w.write_record(["n", "mse", "n_mse", "cr_floor"]).map_err(io)?;
    for r in &rep.rows {
        w.write_record([
            r.n.to_string(),
            r.mse.to_string(),
            r.n_mse.to_string(),
            rep.cr_floor.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
}

fn cmd_scaling(
    source: &SourceArgs,
    n_max: usize,
    csv_path: Option<&Path>,
    svg_path: Option<&Path>,
    opts: &OptArgs,
) -> CliResult<(Value, String)> {
    if n_max == 0 {
        return Err(Error::param("n_max", "must be at least 1").into());
    }
    let (family, theta) = source.family_point()?;
    let rows = parallel_scaling(&family, theta, n_max, &opts.metric_options()?)?;
    let mut summary = String::new();
    for r in &rows {
        let _ = writeln!(
            summary,
            "n = {}: g_min/n = {}  [restarts {}, converged {}]",
            r.n,
            ext(r.g_min_over_n),
            r.restarts_used,
            r.converged
        );
    }
    if let Some(p) = csv_path {
        write_file(p, &scaling_csv(&rows)?)?;
    }
    if let Some(p) = svg_path {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| r.g_min_over_n.finite().map(|v| (r.n as f64, v)))
            .collect();
        let title = format!("{} at theta = {theta}", family.name());
        write_file(p, &svg::line_plot(&title, "n", "g_min / n", &[("g_min/n", pts)], false))?;
    }
    Ok((
        json!({ "family": family.name(), "theta": theta, "rows": rows }),
        summary,
    ))
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    source: &SourceArgs,
    strategy: StrategyKind,
    povm: PovmKind,
    estimator: EstimatorKind,
    n_list: &[u64],
    trials: usize,
    csv_path: Option<&Path>,
    svg_path: Option<&Path>,
    opts: &OptArgs,
) -> CliResult<(Value, String)> {
    let (family, theta) = source.family_point()?;
    let mut s = match strategy {
        StrategyKind::Computational => Strategy::computational(&family),
        StrategyKind::Bell => Strategy::bell(&family)?,
    };
    if povm == PovmKind::Identity {
        s = s.with_trivial_povm();
    }
    if estimator == EstimatorKind::Newton {
        s = s.with_estimator(Estimator::MleNewton {
            tol: 1e-9,
            max_iter: 100,
        });
    }
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1").into());
    }
    let o = opts.metric_options()?;
    let rep = rate_scan(&family, theta, &s, n_list, trials, o.seed, &o)?;
    let mut summary = String::new();
    for r in &rep.rows {
        let _ = writeln!(
            summary,
            "n = {}: mse = {:.6e}, n*mse = {:.6}, clipped {}, excluded {}",
            r.n, r.mse, r.n_mse, r.clipped, r.excluded
        );
    }
    let _ = writeln!(
        summary,
        "slope = {:.4}, cr_floor = {:.6} (1/g_min), strategy fisher = {}",
        rep.slope,
        rep.cr_floor,
        ext(rep.strategy_fisher)
    );
    if let Some(p) = csv_path {
        write_file(p, &simulate_csv(&rep)?)?;
    }
    if let Some(p) = svg_path {
        let mse: Vec<(f64, f64)> = rep.rows.iter().map(|r| (r.n as f64, r.mse)).collect();
        let floor: Vec<(f64, f64)> = rep
            .rows
            .iter()
            .map(|r| (r.n as f64, rep.cr_floor / r.n as f64))
            .collect();
        let title = format!("{} at theta = {theta}", family.name());
        write_file(
            p,
            &svg::line_plot(&title, "n", "MSE", &[("MSE", mse), ("1/(n g_min)", floor)], true),
        )?;
    }
    Ok((
        json!({ "family": family.name(), "theta": theta, "report": rep }),
        summary,
    ))
}

/// Executes a parsed command.
pub fn run(cli: &Cli, argv: &[String]) -> CliResult<Outcome> {
    let start = Instant::now();
    let (results, summary) = match &cli.command {
        Command::Metric { which, source, opts } => cmd_metric(*which, source, opts)?,
        Command::Scaling {
            source,
            n_max,
            csv,
            svg,
            opts,
        } => cmd_scaling(source, *n_max, csv.as_deref(), svg.as_deref(), opts)?,
        Command::Simulate {
            source,
            strategy,
            povm,
            estimator,
            n_list,
            trials,
            csv,
            svg,
            opts,
        } => cmd_simulate(
            source,
            *strategy,
            *povm,
            *estimator,
            n_list,
            *trials,
            csv.as_deref(),
            svg.as_deref(),
            opts,
        )?,
    };
    let record = ReportRecord {
        command: argv.to_vec(),
        config_hash: config_hash(cli),
        version: env!("CARGO_PKG_VERSION").to_string(),
        results,
        wall_time: start.elapsed().as_secs_f64(),
    };
    if let Some(p) = &cli.record {
        write_file(p, &serde_json::to_string_pretty(&record).expect("record serializes"))?;
    }
    Ok(Outcome { record, summary })
}

/// Parses `argv`, runs, prints, and returns the exit code.
pub fn main_with_args(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    match run(&cli, &argv) {
        Ok(out) => {
            print!("{}", out.summary);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    main_with_args(std::env::args().collect())
}

mod svg {
    //! Minimal self-contained line plots.

    use std::fmt::Write as _;

    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 60.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

    fn escape(s: &str) -> String {
        s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
    }

    pub fn line_plot(
        title: &str,
        x_label: &str,
        y_label: &str,
        series: &[(&str, Vec<(f64, f64)>)],
        log: bool,
    ) -> String {
        let tf = |v: f64| if log { v.log10() } else { v };
        let pts: Vec<(f64, f64)> = series
            .iter()
            .flat_map(|(_, s)| s.iter().copied())
            .filter(|&(x, y)| x.is_finite() && y.is_finite() && (!log || (x > 0.0 && y > 0.0)))
            .map(|(x, y)| (tf(x), tf(y)))
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
        );
        if pts.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-12 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.05 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
        let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
        let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            escape(title)
        );
        let _ = writeln!(
            s,
            r#"<path d="M{M},{M} V{} H{}" fill="none" stroke="black"/>"#,
            H - M,
            W - M
        );
        let axis = |v: f64| {
            if log {
                format!("{:.3e}", 10f64.powf(v))
            } else {
                format!("{v:.4}")
            }
        };
        for (k, (xv, yv)) in [(x0, y0), (x1, y1)].into_iter().enumerate() {
            let anchor = if k == 0 { "start" } else { "end" };
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{}" text-anchor="{anchor}">{}</text>"#,
                px(xv),
                H - M + 18.0,
                axis(xv)
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                M - 6.0,
                py(yv),
                axis(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 16.0,
            escape(x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(y_label)
        );
        for (i, (name, data)) in series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let coords: Vec<String> = data
                .iter()
                .filter(|&&(x, y)| x.is_finite() && y.is_finite() && (!log || (x > 0.0 && y > 0.0)))
                .map(|&(x, y)| format!("{:.2},{:.2}", px(tf(x)), py(tf(y))))
                .collect();
            if !coords.is_empty() {
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                    coords.join(" ")
                );
                for c in &coords {
                    let (cx, cy) = c.split_once(',').expect("coordinate pair");
                    let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
                }
            }
            let ly = M + 16.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{}</text>"#,
                W - M,
                escape(name)
            );
        }
        s.push_str("</svg>\n");
        s
    }

    #[cfg(test)]
    mod tests {
        use super::*;

        #[test]
        fn plot_is_well_formed() {
            let svg = line_plot(
                "t <1>",
                "n",
                "y",
                &[("a", vec![(1.0, 2.0), (2.0, 3.0)]), ("b", vec![])],
                false,
            );
            assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
            assert!(svg.contains("t &lt;1&gt;"));
            assert_eq!(svg.matches("<polyline").count(), 1);
            let log = line_plot(
                "",
                "n",
                "mse",
                &[("a", vec![(10.0, 1e-3), (100.0, 1e-4), (0.0, 1.0)])],
                true,
            );
            assert_eq!(log.matches("<circle").count(), 2);
        }
    }
}
