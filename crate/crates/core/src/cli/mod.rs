//! Command-line front end.
//!
//! `analyze` evaluates closed forms, `sim` runs the Monte Carlo engine and
//! `reproduce` regenerates the standard figure data sets. CSV goes to
//! stdout unless `--out` is given, in which case a `<out>.config.json`
//! sidecar carrying the resolved config (and simulation reports) is written
//! next to it.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage or config error,
//! 3 infeasible or unsupported request.

mod config;
mod figures;
mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{db_to_linear, LinkBudget, RateConfig};
use crate::markov::{
    build_transition_matrix, enumerate_states, p_brs_total, ratio_to_f64, ChainDump,
};
use crate::outage::{gains_brs, gains_hrs, gains_mmrs, iid_curve, mmrs_gain_limit_db, GainSummary};
use crate::selection::Scheme;
use crate::sim::{
    empirical_p_brs, run_delay_sim, run_outage_sim, BufferMode, SimConfig, SimReport,
};
use crate::{Error, Result};

pub use config::{
    half_full, resolve_workers, BufferPoint, ExperimentConfig, Format, ResolvedConfig, SCHEMA,
    WORKERS_ENV,
};
pub use figures::Figure;
pub use output::{format_number, Row, ValueKind, CSV_HEADER, FORMAT_VERSION};

/// Largest chain `analyze states` will dump densely.
const MAX_DUMP_STATES: usize = 5000;

#[derive(Debug, Parser)]
#[command(
    name = "bufrelay",
    version,
    about = "Buffer-aided relay selection: analysis and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form results.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Monte Carlo simulation.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Regenerate a standard figure data set.
    Reproduce(ReproduceArgs),
    /// Print the JSON schema of `--config` files.
    Schema,
}

#[derive(Debug, Subcommand)]
enum AnalyzeCommand {
    /// Outage probability versus mean SNR.
    Outage(ExperimentArgs),
    /// Long-run probability that HRS falls back to BRS.
    Pbrs(ExperimentArgs),
    /// Dump the buffer state space and exact transition matrix (JSON).
    States(ExperimentArgs),
    /// Diversity order, coding gain and SNR gain over BRS.
    Gains(ExperimentArgs),
}

#[derive(Debug, Subcommand)]
enum SimCommand {
    /// Simulated outage probability.
    Outage(ExperimentArgs),
    /// Simulated mean packet delay (BRS, HRS).
    Delay(ExperimentArgs),
    /// Simulated HRS fallback frequency (SNR grid defaults to 20 dB).
    Pbrs(ExperimentArgs),
}

#[derive(Debug, Clone, Default, Args)]
struct ExperimentArgs {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated schemes: brs, mmrs, hrs.
    #[arg(long = "scheme", value_delimiter = ',')]
    schemes: Option<Vec<Scheme>>,
    /// Number of relays.
    #[arg(long)]
    n: Option<usize>,
    /// Buffer size(s) L_b, comma separated.
    #[arg(long, value_delimiter = ',')]
    lb: Option<Vec<u32>>,
    /// Total full elements N_e, comma separated [default: ceil(N L_b / 2)].
    #[arg(long, value_delimiter = ',')]
    ne: Option<Vec<u64>>,
    /// Mean SNR grid in dB, comma separated.
    #[arg(long = "snr-db", value_delimiter = ',', allow_hyphen_values = true)]
    snr_db: Option<Vec<f64>>,
    /// Target rate R in bit/s/Hz [default: 1].
    #[arg(long)]
    rate: Option<f64>,
    /// Measured transmission intervals per point [default: 1000000].
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed [default: 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [default: $BUFRELAY_WORKERS, else all cores].
    #[arg(long)]
    workers: Option<usize>,
    /// analysis_matched or outage_aware.
    #[arg(long = "buffer-mode", value_parser = parse_buffer_mode)]
    buffer_mode: Option<BufferMode>,
    /// Burn-in intervals for buffer chains [default: 10 N L_b].
    #[arg(long = "burn-in")]
    burn_in: Option<u64>,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl ExperimentArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let file = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        Ok(file.overridden_by(ExperimentConfig {
            schemes: self.schemes.clone(),
            n: self.n,
            lb: self.lb.clone(),
            ne: self.ne.clone(),
            snr_db: self.snr_db.clone(),
            rate: self.rate,
            trials: self.trials,
            seed: self.seed,
            workers: self.workers,
            buffer_mode: self.buffer_mode,
            burn_in: self.burn_in,
            out: self.out.clone(),
            format: self.format,
        }))
    }
}

#[derive(Debug, Clone, Args)]
struct ReproduceArgs {
    #[arg(value_enum)]
    figure: Figure,
    /// Monte Carlo intervals per point [default: 1000000].
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long = "buffer-mode", value_parser = parse_buffer_mode)]
    buffer_mode: Option<BufferMode>,
    #[arg(long = "burn-in")]
    burn_in: Option<u64>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn parse_buffer_mode(s: &str) -> std::result::Result<BufferMode, String> {
    match s.replace('-', "_").as_str() {
        "analysis_matched" => Ok(BufferMode::AnalysisMatched),
        "outage_aware" => Ok(BufferMode::OutageAware),
        _ => Err(format!(
            "unknown buffer mode `{s}` (expected analysis_matched or outage_aware)"
        )),
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => 2,
        Error::Infeasible { .. } | Error::Unsupported(_) => 3,
        Error::DimensionMismatch { .. } | Error::Internal(_) | Error::Io(_) => 1,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(cmd) => match cmd {
            AnalyzeCommand::Outage(a) => analyze_outage(&a.load()?),
            AnalyzeCommand::Pbrs(a) => analyze_pbrs(&a.load()?),
            AnalyzeCommand::States(a) => analyze_states(&a.load()?),
            AnalyzeCommand::Gains(a) => analyze_gains(&a.load()?),
        },
        Command::Sim(cmd) => match cmd {
            SimCommand::Outage(a) => sim_outage(&a.load()?),
            SimCommand::Delay(a) => sim_delay(&a.load()?),
            SimCommand::Pbrs(a) => sim_pbrs(&a.load()?),
        },
        Command::Reproduce(a) => reproduce(&a),
        Command::Schema => {
            print!("{SCHEMA}");
            Ok(())
        }
    }
}

/// HRS is included by default only when a buffer size is given.
fn default_schemes(cfg: &ExperimentConfig) -> &'static [Scheme] {
    if cfg.lb.is_some() {
        &Scheme::ALL
    } else {
        &[Scheme::Brs, Scheme::Mmrs]
    }
}

fn require_only_hrs(r: &ResolvedConfig, what: &str) -> Result<()> {
    if r.schemes.iter().any(|&s| s != Scheme::Hrs) {
        return Err(Error::Config(format!("{what} is only defined for HRS")));
    }
    Ok(())
}

fn analyze_outage(cfg: &ExperimentConfig) -> Result<()> {
    let r = cfg.resolve(default_schemes(cfg))?;
    r.require_snr_grid()?;
    let mut rows = Vec::new();
    for &scheme in &r.schemes {
        let buffers: Vec<Option<BufferPoint>> = match scheme {
            Scheme::Hrs => r.buffers.iter().copied().map(Some).collect(),
            _ => vec![None],
        };
        for b in buffers {
            let curve = iid_curve(scheme, r.n, b.map(|b| (b.lb, b.ne)), &r.snr_db, r.threshold)?;
            for p in &curve.points {
                let row = Row::analytic(
                    scheme,
                    r.n,
                    ValueKind::OutageAnalytic,
                    p.probability,
                    r.rate,
                )
                .at_snr(p.mean_snr_db);
                rows.push(match b {
                    Some(b) => row.with_buffers(b.lb, b.ne),
                    None => row,
                });
            }
        }
    }
    emit(cfg, "analyze outage", &r, &rows, &[])
}

fn analyze_pbrs(cfg: &ExperimentConfig) -> Result<()> {
    let r = cfg.resolve(&[Scheme::Hrs])?;
    require_only_hrs(&r, "P_BRS")?;
    let mut rows = Vec::new();
    let mut text = String::new();
    for b in &r.buffers {
        let m = p_brs_total(r.n, b.lb, b.ne)?;
        let p = m.p_brs_f64();
        text += &format!(
            "N={} L_b={} N_e={}: P_BRS = {} = {:.6} ({} states), P_MMRS = {}\n",
            r.n,
            b.lb,
            b.ne,
            m.p_brs,
            p,
            m.n_states,
            m.p_mmrs()
        );
        rows.push(
            Row::analytic(Scheme::Hrs, r.n, ValueKind::PBrsAnalytic, p, r.rate)
                .with_buffers(b.lb, b.ne),
        );
    }
    if wants_text(cfg) {
        print!("{text}");
        return Ok(());
    }
    emit(cfg, "analyze pbrs", &r, &rows, &[])
}

#[derive(Serialize)]
struct ChainEntry {
    #[serde(flatten)]
    chain: ChainDump,
    p_brs: String,
    p_brs_value: f64,
}

#[derive(Serialize)]
struct StatesDocument<'a> {
    format_version: u32,
    command: &'a str,
    config: &'a ResolvedConfig,
    chains: Vec<ChainEntry>,
}

fn analyze_states(cfg: &ExperimentConfig) -> Result<()> {
    let r = cfg.resolve(&[Scheme::Hrs])?;
    require_only_hrs(&r, "the buffer state chain")?;
    if cfg.format == Some(Format::Csv) {
        return Err(Error::Config("`analyze states` writes JSON only".into()));
    }
    let mut chains = Vec::new();
    for b in &r.buffers {
        let space = enumerate_states(r.n, b.lb, b.ne)?;
        if space.len() > MAX_DUMP_STATES {
            return Err(Error::Unsupported(format!(
                "{} states exceed the dense dump limit of {MAX_DUMP_STATES}",
                space.len()
            )));
        }
        let m = build_transition_matrix(&space);
        let p = p_brs_total(r.n, b.lb, b.ne)?.p_brs;
        chains.push(ChainEntry {
            chain: ChainDump::new(&space, &m),
            p_brs: p.to_string(),
            p_brs_value: ratio_to_f64(p),
        });
    }
    let doc = StatesDocument {
        format_version: FORMAT_VERSION,
        command: "analyze states",
        config: &r,
        chains,
    };
    let mut json = serde_json::to_string_pretty(&doc).expect("documents always serialize");
    json.push('\n');
    write_out(cfg.out.as_deref(), json.as_bytes())
}

#[derive(Serialize)]
struct GainEntry {
    scheme: Scheme,
    n: usize,
    lb: Option<u32>,
    ne: Option<u64>,
    p_brs: Option<f64>,
    #[serde(flatten)]
    gains: GainSummary,
}

#[derive(Serialize)]
struct GainsDocument<'a> {
    format_version: u32,
    command: &'a str,
    config: &'a ResolvedConfig,
    gains: Vec<GainEntry>,
    mmrs_gain_limit_db: f64,
}

fn analyze_gains(cfg: &ExperimentConfig) -> Result<()> {
    let r = cfg.resolve(default_schemes(cfg))?;
    if cfg.format == Some(Format::Csv) {
        return Err(Error::Config(
            "`analyze gains` writes text or JSON only".into(),
        ));
    }
    let n = r.n;
    let mut entries = Vec::new();
    let mut text = String::new();
    for &scheme in &r.schemes {
        match scheme {
            Scheme::Brs => {
                let g = gains_brs(n);
                text += &format!(
                    "brs: G_d = {n}, G_c = 1/2 = {}, SNR gain over BRS = 0.00 dB\n",
                    format_number(g.coding_gain)
                );
                entries.push(GainEntry {
                    scheme,
                    n,
                    lb: None,
                    ne: None,
                    p_brs: None,
                    gains: g,
                });
            }
            Scheme::Mmrs => {
                let g = gains_mmrs(n);
                text += &format!(
                    "mmrs: G_d = {n}, G_c = 2^(-1/{n}) = {}, SNR gain over BRS = {:.2} dB\n",
                    format_number(g.coding_gain),
                    g.snr_gain_db_vs_brs
                );
                entries.push(GainEntry {
                    scheme,
                    n,
                    lb: None,
                    ne: None,
                    p_brs: None,
                    gains: g,
                });
            }
            Scheme::Hrs => {
                for b in &r.buffers {
                    let p = p_brs_total(n, b.lb, b.ne)?.p_brs_f64();
                    let g = gains_hrs(n, p);
                    text += &format!(
                        "hrs (L_b={}, N_e={}, P_BRS={}): G_d = {n}, G_c = (2 P_MMRS + 2^{n} P_BRS)^(-1/{n}) = {}, SNR gain over BRS = {:.2} dB\n",
                        b.lb,
                        b.ne,
                        format_number(p),
                        format_number(g.coding_gain),
                        g.snr_gain_db_vs_brs
                    );
                    entries.push(GainEntry {
                        scheme,
                        n,
                        lb: Some(b.lb),
                        ne: Some(b.ne),
                        p_brs: Some(p),
                        gains: g,
                    });
                }
            }
        }
    }
    let limit = mmrs_gain_limit_db();
    if wants_text(cfg) {
        print!("{text}");
        println!("MMRS gain over BRS as N grows: {limit:.4} dB");
        return Ok(());
    }
    let doc = GainsDocument {
        format_version: FORMAT_VERSION,
        command: "analyze gains",
        config: &r,
        gains: entries,
        mmrs_gain_limit_db: limit,
    };
    let mut json = serde_json::to_string_pretty(&doc).expect("documents always serialize");
    json.push('\n');
    write_out(cfg.out.as_deref(), json.as_bytes())
}

/// Per-run settings shared by every point of a sweep.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SimOptions {
    pub trials: u64,
    pub seed: u64,
    pub rate: f64,
    pub buffer_mode: BufferMode,
    pub burn_in: Option<u64>,
}

impl From<&ResolvedConfig> for SimOptions {
    fn from(r: &ResolvedConfig) -> Self {
        Self {
            trials: r.trials,
            seed: r.seed,
            rate: r.rate,
            buffer_mode: r.buffer_mode,
            burn_in: r.burn_in,
        }
    }
}

/// One Monte Carlo point; `stream` is its index within the sweep.
pub(crate) fn point_config(
    opts: &SimOptions,
    scheme: Scheme,
    n: usize,
    snr_db: f64,
    buffers: Option<(u32, u64)>,
    stream: u64,
) -> Result<SimConfig> {
    let budget = LinkBudget::iid(n, db_to_linear(snr_db))?;
    let rate = RateConfig::new(opts.rate).map_err(|e| Error::Config(e.to_string()))?;
    let mut c = SimConfig::new(scheme, budget, rate, opts.trials, opts.seed)
        .with_stream(stream)
        .with_buffer_mode(opts.buffer_mode);
    if let Some((lb, ne)) = buffers {
        c = c.with_buffers(lb, ne);
    }
    if let Some(b) = opts.burn_in {
        c = c.with_burn_in(b);
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum SimKind {
    Outage,
    Delay,
    PBrs,
}

/// Run every point on a pool of `workers` threads. Each point owns its
/// stream, so the reports do not depend on scheduling.
pub(crate) fn run_points(
    configs: Vec<SimConfig>,
    workers: usize,
    kind: SimKind,
) -> Result<Vec<SimReport>> {
    let inner = (workers / configs.len().max(1)).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        configs
            .into_par_iter()
            .map(|c| {
                let c = c.with_workers(inner);
                match kind {
                    SimKind::Outage => run_outage_sim(&c),
                    SimKind::Delay => run_delay_sim(&c),
                    SimKind::PBrs => empirical_p_brs(&c),
                }
            })
            .collect()
    })
}

/// Points of a `sim` sweep: scheme-major, then buffers, then SNR.
fn sweep(
    r: &ResolvedConfig,
    snr_db: &[f64],
    with_buffers: impl Fn(Scheme) -> bool,
) -> Result<Vec<SimConfig>> {
    let opts = SimOptions::from(r);
    let mut configs = Vec::new();
    for &scheme in &r.schemes {
        let buffers: Vec<Option<(u32, u64)>> = if with_buffers(scheme) {
            r.buffers.iter().map(|b| Some((b.lb, b.ne))).collect()
        } else {
            vec![None]
        };
        for b in buffers {
            for &db in snr_db {
                let stream = configs.len() as u64;
                configs.push(point_config(&opts, scheme, r.n, db, b, stream)?);
            }
        }
    }
    Ok(configs)
}

fn sim_row(
    report: &SimReport,
    kind: ValueKind,
    value: f64,
    stderr: Option<f64>,
    snr_db: f64,
) -> Row {
    let c = &report.config;
    let row = Row::analytic(c.policy, c.n_relays(), kind, value, c.rate.rate()).at_snr(snr_db);
    let row = match (c.lb, c.ne) {
        (Some(lb), Some(ne)) => row.with_buffers(lb, ne),
        _ => row,
    };
    row.simulated(stderr, report.intervals, c.seed)
}

fn report_snr_db(report: &SimReport) -> f64 {
    let mean = report
        .config
        .budget
        .iid_mean()
        .expect("sweeps use i.i.d. budgets");
    10.0 * mean.log10()
}

fn sim_outage(cfg: &ExperimentConfig) -> Result<()> {
    let r = cfg.resolve(default_schemes(cfg))?;
    r.require_snr_grid()?;
    announce(r.seed);
    let configs = sweep(&r, &r.snr_db, |s| s == Scheme::Hrs)?;
    let snrs: Vec<f64> = configs
        .iter()
        .enumerate()
        .map(|(i, _)| r.snr_db[i % r.snr_db.len()])
        .collect();
    let reports = run_points(configs, resolve_workers(cfg.workers), SimKind::Outage)?;
    let mut rows = Vec::new();
    for (report, &db) in reports.iter().zip(&snrs) {
        let c = &report.config;
        if c.buffer_mode == BufferMode::AnalysisMatched || c.policy != Scheme::Hrs {
            let buffers = c.lb.zip(c.ne);
            let analytic = iid_curve(c.policy, c.n_relays(), buffers, &[db], r.threshold)?.points
                [0]
            .probability;
            let row = Row::analytic(
                c.policy,
                c.n_relays(),
                ValueKind::OutageAnalytic,
                analytic,
                r.rate,
            )
            .at_snr(db);
            rows.push(match buffers {
                Some((lb, ne)) => row.with_buffers(lb, ne),
                None => row,
            });
        }
        rows.push(sim_row(
            report,
            ValueKind::OutageSim,
            report.outage_estimate,
            Some(report.stderr),
            db,
        ));
    }
    emit(cfg, "sim outage", &r, &rows, &reports)
}

fn sim_delay(cfg: &ExperimentConfig) -> Result<()> {
    let r = cfg.resolve(&[Scheme::Hrs])?;
    if r.schemes.contains(&Scheme::Mmrs) {
        return Err(Error::Unsupported(
            "MMRS assumes unbounded buffers, so its packet delay is undefined".into(),
        ));
    }
    r.require_snr_grid()?;
    announce(r.seed);
    let configs = sweep(&r, &r.snr_db, |s| s == Scheme::Hrs)?;
    let reports = run_points(configs, resolve_workers(cfg.workers), SimKind::Delay)?;
    let rows = reports
        .iter()
        .map(|rep| {
            sim_row(
                rep,
                ValueKind::DelaySim,
                rep.average_delay.unwrap_or(0.0),
                None,
                report_snr_db(rep),
            )
        })
        .collect::<Vec<_>>();
    emit(cfg, "sim delay", &r, &rows, &reports)
}

fn sim_pbrs(cfg: &ExperimentConfig) -> Result<()> {
    let r = cfg.resolve(&[Scheme::Hrs])?;
    require_only_hrs(&r, "P_BRS")?;
    let snr_db = if r.snr_db.is_empty() {
        vec![20.0]
    } else {
        r.snr_db.clone()
    };
    announce(r.seed);
    let configs = sweep(&r, &snr_db, |_| true)?;
    let snrs: Vec<f64> = (0..configs.len())
        .map(|i| snr_db[i % snr_db.len()])
        .collect();
    let reports = run_points(configs, resolve_workers(cfg.workers), SimKind::PBrs)?;
    let mut rows = Vec::new();
    for (rep, &db) in reports.iter().zip(&snrs) {
        let (lb, ne) = rep
            .config
            .lb
            .zip(rep.config.ne)
            .expect("HRS points carry buffers");
        let exact = p_brs_total(r.n, lb, ne)?.p_brs_f64();
        rows.push(
            Row::analytic(Scheme::Hrs, r.n, ValueKind::PBrsAnalytic, exact, r.rate)
                .at_snr(db)
                .with_buffers(lb, ne),
        );
        let value = rep
            .empirical_p_brs
            .ok_or_else(|| Error::Internal("missing P_BRS estimate".into()))?;
        rows.push(sim_row(
            rep,
            ValueKind::PBrsSim,
            value,
            rep.p_brs_stderr_batch,
            db,
        ));
    }
    emit(cfg, "sim pbrs", &r, &rows, &reports)
}

fn reproduce(a: &ReproduceArgs) -> Result<()> {
    let opts = figures::FigureOptions {
        trials: a.trials.unwrap_or(config::DEFAULT_TRIALS),
        seed: a.seed.unwrap_or(config::DEFAULT_SEED),
        buffer_mode: a.buffer_mode.unwrap_or_default(),
        burn_in: a.burn_in,
    };
    if opts.trials == 0 {
        return Err(Error::Config("`trials` must be at least 1".into()));
    }
    announce(opts.seed);
    let out = figures::build(a.figure, &opts, resolve_workers(a.workers))?;
    let sink = ExperimentConfig {
        out: a.out.clone(),
        format: a.format,
        ..Default::default()
    };
    emit(
        &sink,
        &format!("reproduce {}", a.figure.as_str()),
        &out.preset,
        &out.rows,
        &out.reports,
    )
}

fn announce(seed: u64) {
    eprintln!("seed: {seed}");
}

fn wants_text(cfg: &ExperimentConfig) -> bool {
    cfg.format.is_none() && cfg.out.is_none()
}

fn write_out(out: Option<&str>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn emit<C: Serialize>(
    cfg: &ExperimentConfig,
    command: &str,
    config: &C,
    rows: &[Row],
    reports: &[SimReport],
) -> Result<()> {
    let doc = output::Document {
        format_version: FORMAT_VERSION,
        command,
        config,
        rows,
        reports,
    };
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => write_out(cfg.out.as_deref(), doc.to_json().as_bytes()),
        Format::Csv => {
            let mut buf = Vec::new();
            output::write_csv(rows, &mut buf)?;
            write_out(cfg.out.as_deref(), &buf)?;
            if let Some(path) = &cfg.out {
                std::fs::write(output::sidecar_path(path.as_ref()), doc.to_json())?;
            }
            Ok(())
        }
    }
}
