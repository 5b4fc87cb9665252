//! Command-line front end.
//!
//! Exit codes: 0 success, 1 numeric or validation failure, 2 usage error.
//! Result files either embed a `manifest` object (JSON reports) or get a
//! `<file>.manifest.json` sidecar (channels, CSV).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::capacity::{
    cooperation_gap, eta_sweep, gba_sum_capacity, sweep_to_csv, GbaConfig, InitMode,
};
use crate::channels::{
    build_game_channel, closed_form_sum_capacity, validate_game_channel, Channel, ChannelMode,
    ChannelParams, GameChannelReport, DEFAULT_CHECK_TOL,
};
use crate::correlations::{
    classical_max_win, make_pr_box, table_from_deterministic, winning_probability,
    CorrelationTable, DEFAULT_ENUMERATION_BUDGET,
};
use crate::error::Error;
use crate::games::{builtin, Game};
use crate::quantum::{born_table, make_ghz_parity, make_mermin_peres, make_tsirelson_chsh};
use crate::simulate::{empirical_decomposition_test, end_to_end, Codebook, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "GAMECAP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "gamecap", version, about = "Capacity of channels driven by non-local games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Inspect games and cooperation boxes.
    #[command(subcommand)]
    Game(GameCmd),
    /// Build and validate game channels.
    #[command(subcommand)]
    Channel(ChannelCmd),
    /// Sum capacities and the cooperation gap.
    #[command(subcommand)]
    Capacity(CapacityCmd),
    /// Gap over a grid of noise levels, as CSV.
    Sweep(SweepArgs),
    /// Monte Carlo runs of the cooperative scheme.
    #[command(subcommand)]
    Simulate(SimulateCmd),
}

#[derive(Debug, Clone, Args, Serialize)]
struct GameArg {
    /// Built-in name (chsh, magic-square, parity, N-parity) or a game JSON file.
    game: String,
    /// Number of players for the parity game.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum GameCmd {
    /// Print alphabets and the size of the winning set.
    Show(GameArg),
    /// Winning probability of a cooperation box.
    Winprob {
        #[command(flatten)]
        game: GameArg,
        #[arg(long, value_enum)]
        class: BoxClass,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum BoxClass {
    /// Best deterministic strategy.
    Classical,
    Pr,
    Tsirelson,
    MerminPeres,
    Ghz,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    PerReceiver,
    Global,
}

impl From<ModeArg> for ChannelMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::PerReceiver => ChannelMode::PerReceiver,
            ModeArg::Global => ChannelMode::Global,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct NoiseArgs {
    /// Sets eta_w = 1 - eta and eta_l = eta.
    #[arg(long, conflicts_with_all = ["eta_w", "eta_l"])]
    eta: Option<f64>,
    #[arg(long, requires = "eta_l")]
    eta_w: Option<f64>,
    #[arg(long, requires = "eta_w")]
    eta_l: Option<f64>,
    #[arg(long, value_enum, default_value = "per-receiver")]
    mode: ModeArg,
}

impl NoiseArgs {
    fn params(&self) -> Result<ChannelParams, CliError> {
        let mode = self.mode.into();
        match (self.eta, self.eta_w, self.eta_l) {
            (Some(e), _, _) => Ok(ChannelParams::from_eta(e, mode)?),
            (None, Some(w), Some(l)) => Ok(ChannelParams::new(w, l, mode)?),
            _ => Err(CliError::Usage("give --eta or both --eta-w and --eta-l".into())),
        }
    }
}

#[derive(Debug, Subcommand)]
enum ChannelCmd {
    /// Build a game channel and write it as JSON.
    Build {
        #[command(flatten)]
        game: GameArg,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Output file; the channel goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a channel file against a game.
    Validate {
        file: PathBuf,
        #[arg(long)]
        game: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_CHECK_TOL)]
        tol: f64,
        /// Print the per-receiver report as CSV.
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Debug, Clone, Args, Serialize)]
struct ChannelSource {
    #[command(flatten)]
    game: GameArg,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Use a channel file instead of building one from the noise flags.
    #[arg(long)]
    channel: Option<PathBuf>,
}

impl ChannelSource {
    fn load(&self) -> Result<(Game, Channel), CliError> {
        let g = resolve_game(&self.game)?;
        let ch = match &self.channel {
            Some(path) => Channel::from_json(&read(path)?)?,
            None => build_game_channel(&g, &self.noise.params()?, g.question_sizes())?,
        };
        Ok((g, ch))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct GbaArgs {
    #[arg(long, default_value_t = 50)]
    starts: usize,
    /// Random seed; drawn and recorded in the manifest when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    /// Start every run from the uniform distribution.
    #[arg(long)]
    uniform_init: bool,
}

impl GbaArgs {
    fn config(&self, seed: u64) -> GbaConfig {
        GbaConfig {
            tolerance: self.tol,
            max_iterations: self.max_iter,
            num_starts: self.starts,
            rng_seed: seed,
            init: if self.uniform_init {
                InitMode::Uniform
            } else {
                InitMode::RandomDirichlet
            },
            record_history: false,
        }
    }
}

#[derive(Debug, Subcommand)]
enum CapacityCmd {
    /// Cooperative sum capacity from the per-receiver entropies.
    ClosedForm {
        #[command(flatten)]
        src: ChannelSource,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Product-input sum capacity by multi-start Blahut-Arimoto.
    Gba {
        #[command(flatten)]
        src: ChannelSource,
        #[command(flatten)]
        gba: GbaArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed form minus the product-input capacity.
    Gap {
        #[command(flatten)]
        src: ChannelSource,
        #[command(flatten)]
        gba: GbaArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args, Serialize)]
struct SweepArgs {
    #[command(flatten)]
    game: GameArg,
    /// `start:stop:step` (stop excluded) or a comma-separated list.
    #[arg(long, default_value = "0:0.5:0.02")]
    eta_grid: String,
    #[command(flatten)]
    gba: GbaArgs,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SimCommon {
    #[command(flatten)]
    game: GameArg,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Winning cooperation box to drive the transmitters.
    #[arg(long = "box", value_enum, value_name = "BOX")]
    cbox: BoxClass,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CodeKind {
    Repetition,
    Random,
}

#[derive(Debug, Subcommand)]
enum SimulateCmd {
    /// Empirical sub-channels versus the analytic ones.
    Decompose {
        #[command(flatten)]
        common: SimCommon,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Message error rates with per-receiver ML decoding.
    E2e {
        #[command(flatten)]
        common: SimCommon,
        /// Block length.
        #[arg(long, default_value_t = 15)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, value_enum, default_value = "repetition")]
        code: CodeKind,
        /// Messages per transmitter for repetition codes.
        #[arg(long, default_value_t = 2)]
        messages: usize,
        /// Bits per channel use per transmitter for random codes.
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
        /// Load the codebook from a JSON file instead.
        #[arg(long)]
        codebook: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failure(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::OutOfRange(_)
            | Error::Malformed(_)
            | Error::Json(_)
            | Error::Io(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

type CliResult = Result<(), CliError>;

/// Provenance record written next to or inside every result file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: serde_json::Value,
    pub rng_seed: Option<u64>,
    pub tool_version: String,
    pub started_unix_secs: f64,
    pub wall_clock_secs: f64,
    pub outputs: Vec<String>,
}

struct Run {
    subcommand: String,
    parameters: serde_json::Value,
    rng_seed: Option<u64>,
    started: SystemTime,
    clock: Instant,
}

impl Run {
    fn new(subcommand: &str, parameters: impl Serialize) -> Self {
        Self {
            subcommand: subcommand.into(),
            parameters: serde_json::to_value(parameters).unwrap_or(serde_json::Value::Null),
            rng_seed: None,
            started: SystemTime::now(),
            clock: Instant::now(),
        }
    }

    /// Uses `seed` or draws one, and records it.
    fn seed(&mut self, seed: Option<u64>) -> u64 {
        let s = seed.unwrap_or_else(rand::random);
        if seed.is_none() {
            log::info!("no --seed given; using {s}");
        }
        self.rng_seed = Some(s);
        s
    }

    fn manifest(&self, outputs: &[&Path]) -> RunManifest {
        RunManifest {
            subcommand: self.subcommand.clone(),
            parameters: self.parameters.clone(),
            rng_seed: self.rng_seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            started_unix_secs: self
                .started
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs_f64())
                .unwrap_or(0.0),
            wall_clock_secs: self.clock.elapsed().as_secs_f64(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        }
    }

    /// Writes `body` with the manifest embedded under `manifest`.
    fn write_report(&self, path: &Path, body: impl Serialize) -> CliResult {
        let mut value = serde_json::to_value(body).map_err(Error::from)?;
        if let serde_json::Value::Object(map) = &mut value {
            let m = serde_json::to_value(self.manifest(&[path])).map_err(Error::from)?;
            map.insert("manifest".into(), m);
        }
        let text = serde_json::to_string_pretty(&value).map_err(Error::from)?;
        write(path, &text)
    }

    /// Writes `text` verbatim plus a manifest sidecar.
    fn write_with_sidecar(&self, path: &Path, text: &str) -> CliResult {
        write(path, text)?;
        let mut side = path.as_os_str().to_owned();
        side.push(".manifest.json");
        let side = PathBuf::from(side);
        let m = serde_json::to_string_pretty(&self.manifest(&[path])).map_err(Error::from)?;
        write(&side, &m)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text)
        .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))
}

fn resolve_game(arg: &GameArg) -> Result<Game, CliError> {
    let path = Path::new(&arg.game);
    if path.is_file() {
        return Ok(Game::from_json(&read(path)?)?);
    }
    Ok(builtin(&arg.game, arg.k)?)
}

fn shape_matches(t: &CorrelationTable, g: &Game) -> bool {
    t.question_sizes() == g.question_sizes() && t.answer_sizes() == g.answer_sizes()
}

/// The cooperation box of the requested class, shaped for `g`.
fn make_box(class: BoxClass, g: &Game) -> Result<CorrelationTable, CliError> {
    let table = match class {
        BoxClass::Classical => {
            let best = classical_max_win(g, DEFAULT_ENUMERATION_BUDGET)?;
            table_from_deterministic(&best.strategy)
        }
        BoxClass::Pr => make_pr_box(),
        BoxClass::Tsirelson => born_table(&make_tsirelson_chsh())?,
        BoxClass::MerminPeres => born_table(&make_mermin_peres())?,
        BoxClass::Ghz => born_table(&make_ghz_parity(g.num_parties())?)?,
    };
    if !shape_matches(&table, g) {
        return Err(CliError::Usage(format!(
            "box '{}' does not fit game '{}'",
            class.to_possible_value().map(|v| v.get_name().to_owned()).unwrap_or_default(),
            g.name()
        )));
    }
    Ok(table)
}

fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("bad eta grid '{s}'"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step.is_nan() || step <= 0.0 || a.is_nan() || b.is_nan() || b <= a {
            return Err(bad());
        }
        let count = ((b - a) / step - 1e-9).ceil() as usize;
        // Rounding keeps 0.06 from printing as 0.060000000000000005.
        Ok((0..count)
            .map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12)
            .collect())
    } else {
        s.split(',').map(num).collect()
    }
}

fn print_report(report: &GameChannelReport) {
    for r in &report.receivers {
        println!(
            "receiver {}: transmitters {:?}, |Q| = {}, |Y| = {}, h_w = {:.6} bits",
            r.receiver, r.transmitters, r.question_size, r.output_size, r.h_w_bits
        );
    }
    println!("factorization residual: {:.3e}", report.factorization_residual);
    println!(
        "winning entropy {:.6} < losing entropy {:.6}",
        report.max_winning_entropy, report.min_losing_entropy
    );
    println!("closed-form sum capacity: {:.6} bits", closed_form_sum_capacity(report));
}

fn cmd_game(cmd: GameCmd) -> CliResult {
    match cmd {
        GameCmd::Show(arg) => {
            let g = resolve_game(&arg)?;
            println!("game: {}", g.name());
            println!("players: {}", g.num_parties());
            println!("question sizes: {:?}", g.question_sizes());
            println!("answer sizes: {:?}", g.answer_sizes());
            println!(
                "winning tuples: {} of {}",
                g.winning_count(),
                g.num_question_tuples() * g.num_answer_tuples()
            );
        }
        GameCmd::Winprob { game, class } => {
            let g = resolve_game(&game)?;
            let p = match class {
                BoxClass::Classical => classical_max_win(&g, DEFAULT_ENUMERATION_BUDGET)?.value,
                _ => winning_probability(&g, &make_box(class, &g)?)?,
            };
            println!("{p}");
        }
    }
    Ok(())
}

fn cmd_channel(cmd: ChannelCmd) -> CliResult {
    match cmd {
        ChannelCmd::Build { game, noise, out } => {
            let run = Run::new("channel build", (&game, &noise));
            let g = resolve_game(&game)?;
            let ch = build_game_channel(&g, &noise.params()?, g.question_sizes())?;
            let report = validate_game_channel(&ch, &g, DEFAULT_CHECK_TOL)?;
            match out {
                Some(path) => {
                    run.write_with_sidecar(&path, &ch.to_json()?)?;
                    print_report(&report);
                }
                None => println!("{}", ch.to_json()?),
            }
        }
        ChannelCmd::Validate {
            file,
            game,
            k,
            tol,
            csv,
        } => {
            let g = resolve_game(&GameArg { game, k })?;
            let ch = Channel::from_json(&read(&file)?)?;
            let report = validate_game_channel(&ch, &g, tol)?;
            if csv {
                print!("{}", report.to_csv());
            } else {
                print_report(&report);
                println!("valid game channel");
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ClosedFormDoc<'a> {
    closed_form_bits: f64,
    report: &'a GameChannelReport,
}

fn cmd_capacity(cmd: CapacityCmd) -> CliResult {
    match cmd {
        CapacityCmd::ClosedForm { src, out } => {
            let run = Run::new("capacity closed-form", &src);
            let (g, ch) = src.load()?;
            let report = validate_game_channel(&ch, &g, DEFAULT_CHECK_TOL)?;
            let bits = closed_form_sum_capacity(&report);
            println!("{bits:.6}");
            if let Some(path) = out {
                run.write_report(
                    &path,
                    ClosedFormDoc {
                        closed_form_bits: bits,
                        report: &report,
                    },
                )?;
            }
        }
        CapacityCmd::Gba { src, gba, out } => {
            let mut run = Run::new("capacity gba", (&src, &gba));
            let (_, ch) = src.load()?;
            let cfg = gba.config(run.seed(gba.seed));
            let r = gba_sum_capacity(&ch, &cfg)?;
            println!("{:.6}", r.value);
            log::info!("{} of {} starts converged", r.converged_starts(), r.starts.len());
            if let Some(path) = out {
                run.write_report(&path, &r)?;
            }
        }
        CapacityCmd::Gap { src, gba, out } => {
            let mut run = Run::new("capacity gap", (&src, &gba));
            let (g, ch) = src.load()?;
            let cfg = gba.config(run.seed(gba.seed));
            let r = cooperation_gap(&ch, &g, &cfg)?;
            println!("{:.6}", r.gap_bits);
            log::info!(
                "closed form {:.6}, product inputs {:.6}",
                r.closed_form_bits,
                r.gba_bits
            );
            if let Some(path) = out {
                run.write_report(&path, &r)?;
            }
        }
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CliResult {
    let mut run = Run::new("sweep", &args);
    let g = resolve_game(&args.game)?;
    let grid = parse_grid(&args.eta_grid)?;
    let cfg = args.gba.config(run.seed(args.gba.seed));
    let rows = eta_sweep(&g, &grid, &cfg)?;
    let csv = sweep_to_csv(&rows);
    match &args.out {
        Some(path) => run.write_with_sidecar(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct SimDoc<'a, T> {
    config: &'a SimConfig,
    result: T,
}

fn cmd_simulate(cmd: SimulateCmd) -> CliResult {
    match cmd {
        SimulateCmd::Decompose { common, samples } => {
            let mut run = Run::new("simulate decompose", (&common, samples));
            let g = resolve_game(&common.game)?;
            let cbox = make_box(common.cbox, &g)?;
            let ch = build_game_channel(&g, &common.noise.params()?, g.question_sizes())?;
            let seed = run.seed(common.seed);
            let r = empirical_decomposition_test(&ch, &g, &cbox, samples, seed)?;
            println!("winning fraction: {}", r.winning_fraction);
            for (i, tv) in r.tv_per_receiver.iter().enumerate() {
                println!("receiver {i}: total variation {tv:.6}");
            }
            println!(
                "conditional dependence: {:.6} bits",
                r.conditional_dependence_bits
            );
            if let Some(path) = &common.out {
                let config = SimConfig {
                    block_length: 1,
                    samples,
                    rng_seed: seed,
                    rates: vec![],
                };
                run.write_report(path, SimDoc { config: &config, result: &r })?;
            }
        }
        SimulateCmd::E2e {
            common,
            n,
            trials,
            code,
            messages,
            rate,
            codebook,
        } => {
            let mut run = Run::new(
                "simulate e2e",
                (&common, n, trials, code, messages, rate, &codebook),
            );
            let g = resolve_game(&common.game)?;
            let cbox = make_box(common.cbox, &g)?;
            let ch = build_game_channel(&g, &common.noise.params()?, g.question_sizes())?;
            let k = g.num_parties();
            let cfg = SimConfig {
                block_length: n,
                samples: trials,
                rng_seed: run.seed(common.seed),
                rates: vec![rate; k],
            };
            let book = match (&codebook, code) {
                (Some(path), _) => Codebook::from_json(&read(path)?)?,
                (None, CodeKind::Repetition) => {
                    Codebook::repetition(g.question_sizes(), &vec![messages; k], n)?
                }
                (None, CodeKind::Random) => Codebook::random(g.question_sizes(), &cfg)?,
            };
            let r = end_to_end(&ch, &g, &cbox, &book, &cfg)?;
            println!("winning fraction: {}", r.winning_fraction);
            for (i, e) in r.per_receiver_error_rate.iter().enumerate() {
                println!("receiver {i}: error rate {e:.6}");
            }
            println!("message error rate: {:.6}", r.message_error_rate);
            if let Some(path) = &common.out {
                run.write_report(path, SimDoc { config: &cfg, result: &r })?;
            }
        }
    }
    Ok(())
}

fn configure_threads() -> CliResult {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer")))?;
    if n == 0 {
        return Err(CliError::Usage(format!("{THREADS_ENV} must be positive")));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Failure(e.to_string()))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Game(c) => cmd_game(c),
        Command::Channel(c) => cmd_channel(c),
        Command::Capacity(c) => cmd_capacity(c),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Simulate(c) => cmd_simulate(c),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Failure(m)) => {
            eprintln!("error: {m}");
            EXIT_FAILURE
        }
    }
}

pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    run(std::env::args_os())
}
