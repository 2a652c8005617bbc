//! `scop`: spectral copula analysis from the command line.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric or domain error.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use scop_core::analysis::{analyze_pair, rank_coherence_matrix, AnalysisConfig, EpochRange, FrequencyChoice};
use scop_core::copula::{CoherenceLink, Family};
use scop_core::ingest::{ingest, Format};
use scop_core::plots::{emit_plot_data, spectrum_csv, PlotKind, ReportSource};
use scop_core::selection::FitMethod;
use scop_core::signal::EpochedSeries;
use scop_core::simstudy::{run_sim1, run_sim2, Ar2Spec, Sim1Config, Sim2Config};
use scop_core::Error;

use config::Settings;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Run(e) => match e {
                Error::Ingest(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::Validation(_)
                | Error::OutOfRange { .. }
                | Error::LengthMismatch { .. }
                | Error::TooFew { .. } => 3,
                Error::AboveNyquist { .. }
                | Error::EmptyBand { .. }
                | Error::NonStationary { .. }
                | Error::UndefinedCoherence
                | Error::Parameter { .. }
                | Error::InversionDomain { .. }
                | Error::Degenerate(_)
                | Error::NoAdmissibleFamily => 4,
            },
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "scop",
    version,
    about = "Copula models of spectral dependence between channels"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "SCOP_THREADS")]
    threads: Option<usize>,

    /// Settings file with `key = value` lines; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Read a data file and report its shape.
    IngestCheck(InputArgs),
    /// Dependence and copula fit for one channel pair.
    Analyze(AnalyzeArgs),
    /// Rank coherence for every channel pair.
    Matrix(MatrixArgs),
    /// Run a simulation study.
    #[command(subcommand)]
    Simulate(Scenario),
    /// Write plot-ready CSV data from a report or an AR(2) model.
    EmitPlots(PlotArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Data file (CSV long format or SCOP0001 binary).
    input: Option<PathBuf>,
    /// csv or binary; detected from the file when omitted.
    #[arg(long)]
    format: Option<String>,
    /// Sampling rate in Hz (required for CSV).
    #[arg(long)]
    fs: Option<f64>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Channel pair as `a,b` (1-based).
    #[arg(long)]
    channels: Option<String>,
    /// Frequency in Hz, or a band: delta, theta, alpha, beta, gamma, LOW-HIGH.
    #[arg(long)]
    freq: Option<String>,
    /// Epoch range `r:s` (1-based, inclusive).
    #[arg(long)]
    epochs: Option<String>,
    /// Second epoch range for the second channel, paired entrywise.
    #[arg(long)]
    paired_epochs: Option<String>,
    /// Comma-separated candidate families.
    #[arg(long)]
    candidates: Option<String>,
    /// ml or tau.
    #[arg(long)]
    method: Option<String>,
    /// Independence test level.
    #[arg(long)]
    level: Option<f64>,
    /// Fit copulas even when independence is not rejected.
    #[arg(long)]
    force_fit: bool,
    /// Coherence-to-correlation link: direct or sqrt.
    #[arg(long)]
    link: Option<String>,
    /// Surface grid size.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; the JSON report goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MatrixArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    freq: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Scenario {
    /// Latent AR(2) observed by two noisy channels.
    Sim1(Sim1Args),
    /// Alpha/beta mixture with a non-linear beta coupling.
    Sim2(Sim2Args),
}

#[derive(Args, Debug)]
struct SimCommon {
    /// Number of replicates.
    #[arg(long = "B")]
    b: Option<usize>,
    /// Epochs per replicate.
    #[arg(long = "R")]
    r: Option<usize>,
    /// Samples per epoch.
    #[arg(long = "T")]
    t: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Sim1Args {
    #[command(flatten)]
    common: SimCommon,
    /// Observation noise sd as a multiple of the latent process sd.
    #[arg(long)]
    sigma_eps: Option<f64>,
}

#[derive(Args, Debug)]
struct Sim2Args {
    #[command(flatten)]
    common: SimCommon,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    candidates: Option<String>,
    /// Replace both observed channels by their noise terms.
    #[arg(long)]
    noise_only: bool,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// JSON report written by `analyze` or `simulate`.
    #[arg(long)]
    report: Option<PathBuf>,
    /// scatter, surface, spectrum or all.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    grid: Option<usize>,
    /// AR(2) coefficients `phi1,phi2` for a stand-alone spectrum.
    #[arg(long)]
    ar2: Option<String>,
    #[arg(long)]
    sd: Option<f64>,
    #[arg(long)]
    fs: Option<f64>,
    #[arg(long = "T")]
    t: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_with<T>(s: &Settings, flag: Option<String>, key: &str) -> Result<Option<T>, Failure>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    s.pick::<String>(flag, key)?
        .map(|v| v.parse::<T>().map_err(|e| usage(format!("--{key}: {e}"))))
        .transpose()
}

fn load_series(s: &Settings, args: InputArgs) -> Result<EpochedSeries, Failure> {
    let input: PathBuf = s
        .pick(args.input, "input")?
        .ok_or_else(|| usage("an input data file is required"))?;
    let format: Option<Format> = parse_with(s, args.format, "format")?;
    let fs: Option<f64> = s.pick(args.fs, "fs")?;
    if !input.exists() {
        return Err(Failure::Run(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} does not exist", input.display()),
        ))));
    }
    let resolved = match format {
        Some(f) => f,
        None => Format::detect(&input)?,
    };
    if resolved == Format::Csv && fs.is_none() {
        return Err(usage("CSV input needs --fs"));
    }
    Ok(ingest(&input, Some(resolved), fs)?)
}

fn parse_channels(text: &str) -> Result<(usize, usize), Failure> {
    let bad = || {
        usage(format!(
            "--channels '{text}' must be two 1-based indices like 1,2"
        ))
    };
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_families(text: &str) -> Result<Vec<Family>, Failure> {
    let list: Vec<Family> = text
        .split(',')
        .map(|f| f.parse::<Family>().map_err(|e| usage(e.to_string())))
        .collect::<Result<_, _>>()?;
    if list.is_empty() {
        return Err(usage("candidate list is empty"));
    }
    Ok(list)
}

fn emit_json(out: Option<&Path>, json: &str) {
    if out.is_none() {
        println!("{json}");
    }
}

fn run_ingest_check(s: &Settings, args: InputArgs) -> Result<(), Failure> {
    let series = load_series(s, args)?;
    println!(
        "ok: channels={} epochs={} samples={} fs={}",
        series.channel_count(),
        series.epoch_count(),
        series.samples_per_epoch(),
        series.sampling_rate()
    );
    Ok(())
}

fn run_analyze(s: &Settings, args: AnalyzeArgs) -> Result<(), Failure> {
    let channels = s
        .pick::<String>(args.channels, "channels")?
        .ok_or_else(|| usage("--channels is required"))?;
    let freq = s
        .pick::<String>(args.freq, "freq")?
        .ok_or_else(|| usage("--freq is required"))?;
    let epochs: Option<EpochRange> = parse_with(s, args.epochs, "epochs")?;
    let paired: Option<EpochRange> = parse_with(s, args.paired_epochs, "paired-epochs")?;
    let candidates = s.pick::<String>(args.candidates, "candidates")?;
    let method: Option<FitMethod> = parse_with(s, args.method, "method")?;
    let link: Option<CoherenceLink> = parse_with(s, args.link, "link")?;
    let level = s.pick(args.level, "level")?;
    let grid = s.pick(args.grid, "grid")?;
    let seed = s.pick(args.seed, "seed")?;
    let force_fit = s.switch(args.force_fit, "force-fit")?;
    let out: Option<PathBuf> = s.pick(args.out, "out")?;

    let channels = parse_channels(&channels)?;
    let candidates = candidates.as_deref().map(parse_families).transpose()?;
    let series = load_series(s, args.input)?;
    let frequency =
        FrequencyChoice::parse(&freq, series.sampling_rate()).map_err(|e| usage(e.to_string()))?;

    let mut cfg = AnalysisConfig::new(channels, frequency);
    cfg.epochs = epochs;
    cfg.paired_epochs = paired;
    if let Some(c) = candidates {
        cfg.candidates = c;
    }
    cfg.fit_method = method.unwrap_or_default();
    cfg.coherence_link = link.unwrap_or_default();
    cfg.level = level.unwrap_or(cfg.level);
    cfg.surface_grid = grid.unwrap_or(cfg.surface_grid);
    cfg.seed = seed.unwrap_or(cfg.seed);
    cfg.force_fit = force_fit;

    let report = analyze_pair(&series, &cfg)?;
    if let Some(dir) = &out {
        report.write_to(dir)?;
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "rank coherence {:.4}, p = {:.4}, selected {}",
        report.rank_coherence.value,
        report.independence_test.p_value,
        report
            .selected
            .map_or("none".to_string(), |c| c.family().to_string())
    );
    emit_json(out.as_deref(), &report.to_json()?);
    Ok(())
}

fn run_matrix(s: &Settings, args: MatrixArgs) -> Result<(), Failure> {
    let freq = s
        .pick::<String>(args.freq, "freq")?
        .ok_or_else(|| usage("--freq is required"))?;
    let epochs: Option<EpochRange> = parse_with(s, args.epochs, "epochs")?;
    let out: Option<PathBuf> = s.pick(args.out, "out")?;
    let series = load_series(s, args.input)?;
    let frequency =
        FrequencyChoice::parse(&freq, series.sampling_rate()).map_err(|e| usage(e.to_string()))?;
    let report = rank_coherence_matrix(&series, &frequency, epochs)?;
    if let Some(dir) = &out {
        report.write_to(dir)?;
    }
    emit_json(out.as_deref(), &report.to_json()?);
    Ok(())
}

fn replicates(s: &Settings, common: &SimCommon) -> Result<usize, Failure> {
    s.pick(common.b, "B")?
        .ok_or_else(|| usage("--B (number of replicates) is required"))
}

fn run_simulate(s: &Settings, scenario: Scenario) -> Result<(), Failure> {
    let (report, out) = match scenario {
        Scenario::Sim1(a) => {
            let mut cfg = Sim1Config {
                replicates: replicates(s, &a.common)?,
                ..Sim1Config::default()
            };
            cfg.epochs = s.pick(a.common.r, "R")?.unwrap_or(cfg.epochs);
            cfg.samples = s.pick(a.common.t, "T")?.unwrap_or(cfg.samples);
            cfg.seed = s.pick(a.common.seed, "seed")?.unwrap_or(cfg.seed);
            cfg.sigma_eps = s.pick(a.sigma_eps, "sigma-eps")?.unwrap_or(cfg.sigma_eps);
            (run_sim1(&cfg)?, s.pick(a.common.out, "out")?)
        }
        Scenario::Sim2(a) => {
            let mut cfg = Sim2Config {
                replicates: replicates(s, &a.common)?,
                ..Sim2Config::default()
            };
            cfg.epochs = s.pick(a.common.r, "R")?.unwrap_or(cfg.epochs);
            cfg.samples = s.pick(a.common.t, "T")?.unwrap_or(cfg.samples);
            cfg.seed = s.pick(a.common.seed, "seed")?.unwrap_or(cfg.seed);
            if let Some(m) = parse_with::<FitMethod>(s, a.method, "method")? {
                cfg.fit_method = m;
            }
            if let Some(c) = s.pick::<String>(a.candidates, "candidates")? {
                cfg.candidates = parse_families(&c)?;
            }
            cfg.noise_only = s.switch(a.noise_only, "noise-only")?;
            (run_sim2(&cfg)?, s.pick(a.common.out, "out")?)
        }
    };
    for f in &report.frequencies {
        eprintln!(
            "{} Hz: mean rank coherence {:.4}, modal family {}",
            f.frequency_hz,
            f.rank_coherence.mean,
            f.modal_family.map_or("-".to_string(), |m| m.to_string())
        );
    }
    if let Some(t) = &report.tau_raw {
        eprintln!("raw tau: mean {:.4}", t.mean);
    }
    match out {
        Some(dir) => report.write_to(&dir)?,
        None => println!("{}", report.to_json()?),
    }
    Ok(())
}

fn run_emit_plots(s: &Settings, args: PlotArgs) -> Result<(), Failure> {
    let out: PathBuf = s
        .pick(args.out, "out")?
        .ok_or_else(|| usage("--out is required"))?;
    let kind: PlotKind = parse_with(s, args.kind, "kind")?.unwrap_or(PlotKind::All);
    let grid: usize = s.pick(args.grid, "grid")?.unwrap_or(20);
    let report: Option<PathBuf> = s.pick(args.report, "report")?;
    let ar2: Option<String> = s.pick(args.ar2, "ar2")?;
    let written = match (report, ar2) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path).map_err(|e| Failure::Run(e.into()))?;
            let source = ReportSource::from_json(&text)?;
            emit_plot_data(&source, kind, &out, grid)?
        }
        (None, Some(coefs)) => {
            let bad = || usage(format!("--ar2 '{coefs}' must be phi1,phi2"));
            let (p1, p2) = coefs.split_once(',').ok_or_else(bad)?;
            let phi1: f64 = p1.trim().parse().map_err(|_| bad())?;
            let phi2: f64 = p2.trim().parse().map_err(|_| bad())?;
            let sd = s.pick(args.sd, "sd")?.unwrap_or(1.0);
            let fs = s
                .pick(args.fs, "fs")?
                .ok_or_else(|| usage("--fs is required with --ar2"))?;
            let t = s
                .pick(args.t, "T")?
                .ok_or_else(|| usage("--T is required with --ar2"))?;
            let spec = Ar2Spec::new(phi1, phi2, sd, "ar2")?;
            let path = out.join("spectrum.csv");
            scop_core::output::write_atomic(&path, &spectrum_csv(&spec, t, fs)?)?;
            vec![path]
        }
        _ => return Err(usage("give exactly one of --report or --ar2")),
    };
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let settings = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    let threads: Option<usize> = settings.pick(cli.threads, "threads")?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(usage("--threads must be positive"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| usage(format!("cannot start thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::IngestCheck(a) => run_ingest_check(&settings, a),
        Command::Analyze(a) => run_analyze(&settings, a),
        Command::Matrix(a) => run_matrix(&settings, a),
        Command::Simulate(sc) => run_simulate(&settings, sc),
        Command::EmitPlots(a) => run_emit_plots(&settings, a),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("usage error: {m}"),
                Failure::Run(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}
