//! `qkdh` command line: sessions, sweeps, hybrid file encryption and games.
//!
//! Parameters resolve field by field as flag, then `--config` JSON file, then
//! (for the seed only) the `QKDH_SEED` environment variable, then the default.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 protocol abort,
//! 3 tag verification failure, 4 enumeration over budget.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::Bits;
use crate::dem::{DemError, DemMode};
use crate::games::{
    self, sd::SdReport, DemGameParams, GameConfig, GameError, GameReport, KemGameParams, Projection, QheGameParams,
    TinyInstance,
};
use crate::hybrid::{self, HybridCiphertext, HybridEnvelope, HybridError};
use crate::kem::{self, EncapParams, GenError, KemError, KeyLengthRule};
use crate::par;
use crate::protocol::{self, SessionParams, SessionStatus};
use crate::qsim::{AdversaryStrategy, ChannelModel};
use crate::recon::ReconConfig;
use crate::rng::{derive_seed, session_rng};

pub const SEED_ENV: &str = "QKDH_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("session aborted: {0}")]
    Abort(String),
    #[error("tag verification failed; ciphertext rejected")]
    Tag,
    #[error("{0}")]
    OverBudget(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Abort(_) => 2,
            CliError::Tag => 3,
            CliError::OverBudget(_) => 4,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "qkdh",
    version,
    about = "BB84 sessions, qKEM/DEM hybrid encryption and security games"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one session and print its outcome as JSON.
    Session(SessionCmd),
    /// Aggregate sessions over a grid of flip and intercept probabilities (CSV).
    Sweep(SweepCmd),
    /// Run a session, encrypt a file under its key, write Bob's raw key.
    Encrypt(EncryptCmd),
    /// Decrypt a ciphertext envelope with a raw-key file.
    Decrypt(DecryptCmd),
    /// Play a security game or evaluate the exact SD oracle.
    Game(GameCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Otp,
    Keystream,
}

impl From<ModeArg> for DemMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Otp => DemMode::OneTimePad,
            ModeArg::Keystream => DemMode::Keystream,
        }
    }
}

/// Every parameter that may come from a flag or the config file.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFlags {
    /// Number of signals sent.
    #[arg(long)]
    pub lambda: Option<usize>,
    #[arg(long)]
    pub sample_r: Option<usize>,
    #[arg(long)]
    pub eta0: Option<f64>,
    #[arg(long)]
    pub flip_prob: Option<f64>,
    #[arg(long)]
    pub intercept_prob: Option<f64>,
    #[arg(long)]
    pub tag_bits: Option<usize>,
    #[arg(long)]
    pub eps_pe: Option<f64>,
    #[arg(long)]
    pub eps_pa: Option<f64>,
    /// Reconciliation passes.
    #[arg(long)]
    pub passes: Option<usize>,
    /// Hamming block length, 2^k - 1.
    #[arg(long)]
    pub block_len: Option<usize>,
    /// Interleaver seed bits per pass; 0 is the identity permutation.
    #[arg(long)]
    pub seed_len: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Fixed key length instead of the finite-size policy.
    #[arg(long)]
    pub ell: Option<usize>,
    /// Message length in bits for the DEM and hybrid games.
    #[arg(long)]
    pub message_len: Option<usize>,
}

impl ParamFlags {
    /// Field-wise `self` over `lower`.
    pub fn overlay(self, lower: ParamFlags) -> ParamFlags {
        ParamFlags {
            lambda: self.lambda.or(lower.lambda),
            sample_r: self.sample_r.or(lower.sample_r),
            eta0: self.eta0.or(lower.eta0),
            flip_prob: self.flip_prob.or(lower.flip_prob),
            intercept_prob: self.intercept_prob.or(lower.intercept_prob),
            tag_bits: self.tag_bits.or(lower.tag_bits),
            eps_pe: self.eps_pe.or(lower.eps_pe),
            eps_pa: self.eps_pa.or(lower.eps_pa),
            passes: self.passes.or(lower.passes),
            block_len: self.block_len.or(lower.block_len),
            seed_len: self.seed_len.or(lower.seed_len),
            seed: self.seed.or(lower.seed),
            trials: self.trials.or(lower.trials),
            mode: self.mode.or(lower.mode),
            ell: self.ell.or(lower.ell),
            message_len: self.message_len.or(lower.message_len),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[command(flatten)]
    pub params: ParamFlags,
    /// JSON file with any of the parameter fields; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SessionCmd {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated flip probabilities; defaults to the single base value.
    #[arg(long, value_delimiter = ',')]
    pub flip_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub intercept_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncryptCmd {
    #[command(flatten)]
    pub common: Common,
    /// Message file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Ciphertext envelope (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Where Bob's raw key is written.
    #[arg(long)]
    pub key_file: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecryptCmd {
    /// Ciphertext envelope (JSON).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub key_file: PathBuf,
    /// Plaintext output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GameKind {
    Ikind,
    Dem,
    Qhe,
    Sd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProjectionArg {
    Full,
    WithoutEve,
    KeyOnly,
}

impl From<ProjectionArg> for Projection {
    fn from(p: ProjectionArg) -> Self {
        match p {
            ProjectionArg::Full => Projection::Full,
            ProjectionArg::WithoutEve => Projection::WithoutEve,
            ProjectionArg::KeyOnly => Projection::KeyOnly,
        }
    }
}

#[derive(Debug, Args)]
pub struct GameCmd {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub kind: GameKind,
    /// Library distinguisher name; see `--list`.
    #[arg(long, default_value = "random_guess")]
    pub distinguisher: String,
    /// Print the distinguisher names for `--kind` and exit.
    #[arg(long)]
    pub list: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// What the SD oracle conditions on.
    #[arg(long, value_enum, default_value = "full")]
    pub projection: ProjectionArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_MESSAGE_LEN: usize = 256;
pub const DEFAULT_DEM_KEY_LEN: usize = 256;

/// A fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub session: SessionParams,
    pub trials: usize,
    pub mode: DemMode,
    pub ell: Option<usize>,
    pub message_len: usize,
}

fn read_config(path: &Path) -> Result<ParamFlags, CliError> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
}

fn env_seed(env: Option<&str>) -> Result<Option<u64>, CliError> {
    env.map(|s| {
        s.trim()
            .parse()
            .map_err(|_| usage(format!("invalid seed in {SEED_ENV}: {s:?}")))
    })
    .transpose()
}

/// Merged flags, file and environment, before defaults.
pub fn layered(common: &Common, env: Option<&str>) -> Result<ParamFlags, CliError> {
    let file = match &common.config {
        Some(p) => read_config(p)?,
        None => ParamFlags::default(),
    };
    let env = ParamFlags {
        seed: env_seed(env)?,
        ..ParamFlags::default()
    };
    Ok(common.params.clone().overlay(file).overlay(env))
}

/// Applies defaults and validates. `lambda` has no default.
pub fn resolve(p: &ParamFlags) -> Result<RunConfig, CliError> {
    let lambda = p
        .lambda
        .ok_or_else(|| usage("missing required parameter lambda (pass --lambda or set \"lambda\" in --config)"))?;
    let base = SessionParams::new(lambda);
    let recon = ReconConfig {
        passes: p.passes.unwrap_or(base.recon.passes),
        block_len: p.block_len.unwrap_or(base.recon.block_len),
        seed_len: p.seed_len.unwrap_or(base.recon.seed_len),
    };
    let channel =
        ChannelModel::new(p.flip_prob.unwrap_or(0.0)).map_err(|e| usage(format!("invalid flip_prob: {e}")))?;
    let adversary = AdversaryStrategy::from_intercept_prob(p.intercept_prob.unwrap_or(0.0))
        .map_err(|e| usage(format!("invalid intercept_prob: {e}")))?;
    let session = SessionParams {
        lambda,
        sample_r: p.sample_r.unwrap_or(base.sample_r),
        eta0: p.eta0.unwrap_or(base.eta0),
        tag_bits: p.tag_bits.unwrap_or(base.tag_bits),
        eps_pe: p.eps_pe.unwrap_or(base.eps_pe),
        eps_pa: p.eps_pa.unwrap_or(base.eps_pa),
        channel,
        adversary,
        recon,
        seed: p.seed.unwrap_or(0),
    };
    session.validate().map_err(usage)?;
    let trials = p.trials.unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(usage("invalid trials: must be at least 1"));
    }
    if p.ell == Some(0) {
        return Err(usage("invalid ell: must be at least 1"));
    }
    Ok(RunConfig {
        session,
        trials,
        mode: p.mode.unwrap_or(ModeArg::Keystream).into(),
        ell: p.ell,
        message_len: p.message_len.unwrap_or(DEFAULT_MESSAGE_LEN),
    })
}

impl RunConfig {
    pub fn rule(&self) -> KeyLengthRule {
        self.ell.map_or(KeyLengthRule::Policy, KeyLengthRule::Fixed)
    }
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(usage),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn cmd_session(cmd: &SessionCmd, env: Option<&str>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = resolve(&layered(&cmd.common, env)?)?;
    let outcome = protocol::run_session(&cfg.session).map_err(usage)?;
    emit(cmd.out.as_deref(), &to_json(&outcome.report(&cfg.session)), stdout)?;
    match outcome.status {
        SessionStatus::Completed if outcome.tag_match == Some(false) => Err(CliError::Tag),
        SessionStatus::Completed => Ok(()),
        SessionStatus::AbortedPe => Err(CliError::Abort("estimated error rate above threshold".into())),
        SessionStatus::AbortedLen => Err(CliError::Abort("no extractable key length".into())),
    }
}

pub const SWEEP_HEADER: &str = "flip_prob,intercept_prob,trials,abort_rate,mean_eta_hat,mean_ell,frame_success";

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Sweep CSV for a grid; trial `i` of grid point `g` uses seed
/// `derive_seed(seed, g * trials + i)`.
pub fn sweep_csv(cfg: &RunConfig, flips: &[f64], intercepts: &[f64]) -> Result<String, CliError> {
    if flips.is_empty() || intercepts.is_empty() {
        return Err(usage("sweep grid is empty"));
    }
    let mut grid = Vec::with_capacity(flips.len() * intercepts.len());
    for &f in flips {
        for &q in intercepts {
            let session = SessionParams {
                channel: ChannelModel::new(f).map_err(|e| usage(format!("invalid flip_prob: {e}")))?,
                adversary: AdversaryStrategy::from_intercept_prob(q)
                    .map_err(|e| usage(format!("invalid intercept_prob: {e}")))?,
                ..cfg.session.clone()
            };
            session.validate().map_err(usage)?;
            grid.push(session);
        }
    }
    let t = cfg.trials;
    let runs = par::map_indexed(grid.len() * t, |k| {
        let session = SessionParams {
            seed: derive_seed(cfg.session.seed, k as u64),
            ..grid[k / t].clone()
        };
        protocol::run_session(&session)
    });
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for (g, session) in grid.iter().enumerate() {
        let rows = runs[g * t..(g + 1) * t]
            .iter()
            .map(|r| r.as_ref().map_err(|e| usage(e.to_string())));
        let rows: Vec<_> = rows.collect::<Result<_, _>>()?;
        let aborted = rows.iter().filter(|o| o.status != SessionStatus::Completed).count();
        let eta = mean(rows.iter().filter_map(|o| o.eta_hat));
        let ell = mean(rows.iter().map(|o| o.ell as f64));
        let success = mean(
            rows.iter()
                .filter(|o| o.status == SessionStatus::Completed)
                .map(|o| (o.reconciled == Some(true)) as u8 as f64),
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            session.channel.flip_prob(),
            session.adversary.intercept_prob(),
            t,
            aborted as f64 / t as f64,
            eta,
            ell,
            success
        ));
    }
    Ok(csv)
}

fn cmd_sweep(cmd: &SweepCmd, env: Option<&str>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = resolve(&layered(&cmd.common, env)?)?;
    let flips = cmd
        .flip_grid
        .clone()
        .unwrap_or_else(|| vec![cfg.session.channel.flip_prob()]);
    let intercepts = cmd
        .intercept_grid
        .clone()
        .unwrap_or_else(|| vec![cfg.session.adversary.intercept_prob()]);
    let csv = sweep_csv(&cfg, &flips, &intercepts)?;
    emit(cmd.out.as_deref(), &csv, stdout)
}

/// Bob's side of a session, persisted for `decrypt`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyFile {
    pub n: usize,
    pub raw_key: String,
}

fn cmd_encrypt(cmd: &EncryptCmd, env: Option<&str>) -> Result<(), CliError> {
    let cfg = resolve(&layered(&cmd.common, env)?)?;
    let message = fs::read(&cmd.input).map_err(|e| usage(format!("cannot read {}: {e}", cmd.input.display())))?;
    let mut rng = session_rng(cfg.session.seed);
    let g = match kem::gen_with(&cfg.session, &mut rng) {
        Ok(g) => g,
        Err(GenError::Aborted { eta_hat, .. }) => {
            return Err(CliError::Abort(format!("parameter estimation (eta_hat = {eta_hat:?})")))
        }
        Err(GenError::Protocol(e)) => return Err(usage(e)),
    };
    let ep = EncapParams::from_session(&cfg.session, g.eta_hat).with_rule(cfg.rule());
    let c = match hybrid::qhe_enc(&g.x_a, &Bits::from_bytes(&message), &ep, cfg.mode, &mut rng) {
        Ok(c) => c,
        Err(HybridError::Kem(e @ KemError::KeyLength { .. })) => return Err(CliError::Abort(e.to_string())),
        Err(e @ HybridError::Dem(DemError::OtpLength { .. })) => {
            return Err(usage(format!("{e}; use --mode keystream for long messages")))
        }
        Err(e) => return Err(usage(e)),
    };
    let env = c.to_envelope().map_err(usage)?;
    let key = KeyFile {
        n: g.x_b.len(),
        raw_key: g.x_b.to_hex(),
    };
    fs::write(&cmd.out, to_json(&env)).map_err(|e| usage(format!("cannot write {}: {e}", cmd.out.display())))?;
    fs::write(&cmd.key_file, to_json(&key))
        .map_err(|e| usage(format!("cannot write {}: {e}", cmd.key_file.display())))?;
    Ok(())
}

fn cmd_decrypt(cmd: &DecryptCmd) -> Result<(), CliError> {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())));
    let env: HybridEnvelope =
        serde_json::from_str(&read(&cmd.input)?).map_err(|e| usage(format!("invalid ciphertext envelope: {e}")))?;
    let key: KeyFile =
        serde_json::from_str(&read(&cmd.key_file)?).map_err(|e| usage(format!("invalid key file: {e}")))?;
    let x_b = Bits::from_hex(&key.raw_key, key.n).map_err(|e| usage(format!("invalid key file: {e}")))?;
    let c = HybridCiphertext::from_envelope(&env).map_err(|e| usage(format!("invalid ciphertext envelope: {e}")))?;
    let m = hybrid::qhe_dec(&x_b, &c).map_err(usage)?.ok_or(CliError::Tag)?;
    fs::write(&cmd.out, m.to_bytes()).map_err(|e| usage(format!("cannot write {}: {e}", cmd.out.display())))
}

fn game_error(e: GameError) -> CliError {
    match e {
        GameError::OverBudget { .. } => CliError::OverBudget(e.to_string()),
        other => usage(other),
    }
}

fn report_text(r: &GameReport, format: Format) -> String {
    match format {
        Format::Json => to_json(r),
        Format::Csv => format!("{}\n{}\n", games::CSV_HEADER, r.csv_row()),
    }
}

fn unknown(kind: &str, name: &str, names: Vec<String>) -> CliError {
    usage(format!(
        "unknown {kind} distinguisher {name:?}; available: {}",
        names.join(", ")
    ))
}

fn cmd_game(cmd: &GameCmd, env: Option<&str>, stdout: &mut dyn Write) -> Result<(), CliError> {
    if cmd.list {
        let names: Vec<String> = match cmd.kind {
            GameKind::Ikind => games::kem_library().iter().map(|d| d.name().to_string()).collect(),
            GameKind::Dem => games::dem_library().iter().map(|d| d.name().to_string()).collect(),
            GameKind::Qhe => games::qhe_library().iter().map(|d| d.name().to_string()).collect(),
            GameKind::Sd => vec![],
        };
        return emit(None, &(names.join("\n") + "\n"), stdout);
    }
    let p = layered(&cmd.common, env)?;
    let text = match cmd.kind {
        GameKind::Sd => {
            let base = TinyInstance::honest();
            let inst = TinyInstance {
                lambda: p.lambda.unwrap_or(base.lambda),
                flip_prob: p.flip_prob.unwrap_or(base.flip_prob),
                intercept_prob: p.intercept_prob.unwrap_or(base.intercept_prob),
                sample_r: p.sample_r.unwrap_or(base.sample_r),
                eta0: p.eta0.unwrap_or(base.eta0),
                ell: p.ell.unwrap_or(base.ell),
                tag_bits: p.tag_bits.unwrap_or(base.tag_bits),
                seed_len: p.seed_len.unwrap_or(base.seed_len),
                projection: cmd.projection.into(),
            };
            let res = games::sd_oracle(&inst).map_err(game_error)?;
            let rep: SdReport = res.report(&inst);
            match cmd.format {
                Format::Json => to_json(&rep),
                Format::Csv => format!(
                    "game,lambda,ell,tag_bits,states,sd,abort_prob\nsd,{},{},{},{},{},{}\n",
                    inst.lambda, inst.ell, inst.tag_bits, rep.states, rep.sd, rep.abort_prob
                ),
            }
        }
        GameKind::Dem => {
            let key_len = p.ell.unwrap_or(DEFAULT_DEM_KEY_LEN);
            let params = DemGameParams {
                mode: p.mode.unwrap_or(ModeArg::Otp).into(),
                key_len,
                message_len: p.message_len.unwrap_or(key_len),
            };
            let lib = games::dem_library();
            let d = lib.iter().find(|d| d.name() == cmd.distinguisher).ok_or_else(|| {
                unknown(
                    "dem",
                    &cmd.distinguisher,
                    lib.iter().map(|d| d.name().to_string()).collect(),
                )
            })?;
            let gc = GameConfig::new(p.trials.unwrap_or(DEFAULT_TRIALS), p.seed.unwrap_or(0));
            report_text(
                &games::play_dem_ind_ot(&params, d.as_ref(), &gc).map_err(game_error)?,
                cmd.format,
            )
        }
        GameKind::Ikind => {
            let cfg = resolve(&p)?;
            let lib = games::kem_library();
            let d = lib.iter().find(|d| d.name() == cmd.distinguisher).ok_or_else(|| {
                unknown(
                    "ikind",
                    &cmd.distinguisher,
                    lib.iter().map(|d| d.name().to_string()).collect(),
                )
            })?;
            let params = KemGameParams {
                session: cfg.session.clone(),
                rule: cfg.rule(),
            };
            let gc = GameConfig::new(cfg.trials, cfg.session.seed);
            report_text(
                &games::play_ikind_ot(&params, d.as_ref(), &gc).map_err(game_error)?,
                cmd.format,
            )
        }
        GameKind::Qhe => {
            let cfg = resolve(&p)?;
            let lib = games::qhe_library();
            let d = lib.iter().find(|d| d.name() == cmd.distinguisher).ok_or_else(|| {
                unknown(
                    "qhe",
                    &cmd.distinguisher,
                    lib.iter().map(|d| d.name().to_string()).collect(),
                )
            })?;
            let params = QheGameParams {
                kem: KemGameParams {
                    session: cfg.session.clone(),
                    rule: cfg.rule(),
                },
                mode: cfg.mode,
                message_len: cfg.message_len,
            };
            let gc = GameConfig::new(cfg.trials, cfg.session.seed);
            report_text(
                &games::play_qhe_ind_ot(&params, d.as_ref(), &gc).map_err(game_error)?,
                cmd.format,
            )
        }
    };
    emit(cmd.out.as_deref(), &text, stdout)
}

pub fn run(cli: &Cli, env: Option<&str>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Session(c) => cmd_session(c, env, stdout),
        Command::Sweep(c) => cmd_sweep(c, env, stdout),
        Command::Encrypt(c) => cmd_encrypt(c, env),
        Command::Decrypt(c) => cmd_decrypt(c),
        Command::Game(c) => cmd_game(c, env, stdout),
    }
}

/// Parses `args`, runs, reports errors on stderr and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let env = std::env::var(SEED_ENV).ok();
    let mut stdout = std::io::stdout().lock();
    match run(&cli, env.as_deref(), &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
