//! Security experiments: IKIND-OT for the KEM, IND-OT for the DEM and the
//! hybrid scheme, plus an exact statistical-distance oracle ([`sd`]) for tiny
//! instances.
//!
//! Every game is a batch of independent trials. Trial `i` runs from
//! `derive_seed(master, i)`; the challenger uses `session_rng` of that seed
//! and the distinguisher gets its own stream from `derive_seed(trial_seed, 1)`.
//! Aborted sessions are counted and excluded, so advantages are conditioned on
//! completion.

pub mod sd;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bits::Bits;
use crate::dem::{self, DemCiphertext, DemError, DemMode};
use crate::hybrid::{self, HybridCiphertext, HybridError};
use crate::kem::{self, EncapParams, GenError, KemCiphertext, KemError, KeyLengthRule};
use crate::par;
use crate::protocol::{EveView, Party, ProtocolError, SessionParams};
use crate::recon;
use crate::rng::{derive_seed, session_rng, SessionRng};

pub use sd::{
    distinguisher_from_set, sd_oracle, JointDistribution, Projection, SdResult, SetDistinguisher, TinyInstance,
    WitnessSet,
};

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("a game needs at least one trial")]
    NoTrials,
    #[error("message pair has unequal lengths {left} and {right}")]
    UnequalMessages { left: usize, right: usize },
    #[error("enumeration needs {states} weighted states, budget is {budget}")]
    OverBudget { states: u128, budget: u128 },
    #[error("invalid tiny instance: {0}")]
    Tiny(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Kem(#[from] KemError),
    #[error(transparent)]
    Dem(#[from] DemError),
    #[error(transparent)]
    Hybrid(#[from] HybridError),
}

/// Trial count, master seed, and whether b = 1 (instead of b = 0) shows the
/// real key or message `M_0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameConfig {
    pub trials: usize,
    pub seed: u64,
    pub swap_labels: bool,
}

impl GameConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            swap_labels: false,
        }
    }
}

/// Wilson score half-width at 95% for `k` successes in `n` trials.
pub fn wilson_half_width(k: usize, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let z = 1.959_963_984_540_054_f64;
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameReport {
    pub game: String,
    pub distinguisher: String,
    pub params_hash: String,
    pub trials: usize,
    pub aborted: usize,
    /// Completed trials with b = 0 and b = 1.
    pub n0: usize,
    pub n1: usize,
    /// Of those, how many the distinguisher answered 1.
    pub ones0: usize,
    pub ones1: usize,
    pub advantage: f64,
    /// Sum of the two per-arm Wilson half-widths.
    pub ci: f64,
    pub abort_rate: f64,
    /// Set when an arm is empty and the advantage is undefined.
    pub degenerate: bool,
}

pub const CSV_HEADER: &str = "game,params_hash,trials,advantage,ci,abort_rate";

impl GameReport {
    fn tally(game: &str, distinguisher: &str, params_hash: String, outcomes: &[Option<(bool, bool)>]) -> Self {
        let (mut n0, mut n1, mut ones0, mut ones1, mut aborted) = (0, 0, 0, 0, 0);
        for o in outcomes {
            match *o {
                None => aborted += 1,
                Some((false, g)) => {
                    n0 += 1;
                    ones0 += g as usize;
                }
                Some((true, g)) => {
                    n1 += 1;
                    ones1 += g as usize;
                }
            }
        }
        let degenerate = n0 == 0 || n1 == 0;
        let advantage = if degenerate {
            0.0
        } else {
            (ones0 as f64 / n0 as f64 - ones1 as f64 / n1 as f64).abs()
        };
        let trials = outcomes.len();
        Self {
            game: game.to_string(),
            distinguisher: distinguisher.to_string(),
            params_hash,
            trials,
            aborted,
            n0,
            n1,
            ones0,
            ones1,
            advantage,
            ci: wilson_half_width(ones0, n0) + wilson_half_width(ones1, n1),
            abort_rate: aborted as f64 / trials as f64,
            degenerate,
        }
    }

    pub fn completed(&self) -> usize {
        self.n0 + self.n1
    }

    /// Three worst-case binomial standard deviations of the advantage
    /// estimate, `1.5 * sqrt(1/n0 + 1/n1)`.
    pub fn three_sigma(&self) -> f64 {
        if self.degenerate {
            return f64::INFINITY;
        }
        1.5 * (1.0 / self.n0 as f64 + 1.0 / self.n1 as f64).sqrt()
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.game, self.params_hash, self.trials, self.advantage, self.ci, self.abort_rate
        )
    }
}

fn params_hash<T: Serialize>(game: &str, distinguisher: &str, params: &T, cfg: &GameConfig) -> String {
    let mut h = Sha256::new();
    h.update(game.as_bytes());
    h.update([0]);
    h.update(distinguisher.as_bytes());
    h.update([0]);
    h.update(serde_json::to_vec(params).expect("game parameters serialize"));
    h.update(serde_json::to_vec(cfg).expect("game config serializes"));
    hex::encode(&h.finalize()[..8])
}

fn run_trials<F>(cfg: &GameConfig, trial: F) -> Result<Vec<Option<(bool, bool)>>, GameError>
where
    F: Fn(u64) -> Result<Option<(bool, bool)>, GameError> + Sync + Send,
{
    if cfg.trials == 0 {
        return Err(GameError::NoTrials);
    }
    par::map_indexed(cfg.trials, |i| trial(derive_seed(cfg.seed, i as u64)))
        .into_iter()
        .collect()
}

fn distinguisher_rng(trial_seed: u64) -> SessionRng {
    session_rng(derive_seed(trial_seed, 1))
}

// --- IKIND-OT ---------------------------------------------------------------

/// What the IKIND-OT challenger hands the distinguisher. `raw_key` is Alice's
/// raw key, which a legitimate distinguisher must not read.
pub struct KemChallenge<'a> {
    pub eve_view: &'a EveView,
    pub ciphertext: &'a KemCiphertext,
    pub key: &'a Bits,
    pub raw_key: &'a Bits,
}

pub trait KemDistinguisher: Sync {
    fn name(&self) -> &str;
    fn guess(&self, ch: &KemChallenge<'_>, rng: &mut SessionRng) -> bool;
    /// False for distinguishers that read [`KemChallenge::raw_key`].
    fn legitimate(&self) -> bool {
        true
    }
}

pub struct ConstantZero;
pub struct RandomGuess;
/// Recomputes `h_S(X_A)` from the raw key and answers 1 on mismatch.
pub struct RecomputeKey;
pub struct FirstKeyBit;
/// Rebuilds a guess of the raw key from Eve's intercept log, feeds it through
/// reconciliation and hashing, and answers 1 on mismatch with the key.
pub struct EveRecordsKey;

impl KemDistinguisher for ConstantZero {
    fn name(&self) -> &str {
        "constant_zero"
    }
    fn guess(&self, _: &KemChallenge<'_>, _: &mut SessionRng) -> bool {
        false
    }
}

impl KemDistinguisher for RandomGuess {
    fn name(&self) -> &str {
        "random_guess"
    }
    fn guess(&self, _: &KemChallenge<'_>, rng: &mut SessionRng) -> bool {
        rng.gen()
    }
}

impl KemDistinguisher for RecomputeKey {
    fn name(&self) -> &str {
        "recompute_key"
    }
    fn guess(&self, ch: &KemChallenge<'_>, _: &mut SessionRng) -> bool {
        ch.ciphertext.s.apply(ch.raw_key).map_or(true, |k| &k != ch.key)
    }
    fn legitimate(&self) -> bool {
        false
    }
}

impl KemDistinguisher for FirstKeyBit {
    fn name(&self) -> &str {
        "first_key_bit"
    }
    fn guess(&self, ch: &KemChallenge<'_>, _: &mut SessionRng) -> bool {
        ch.key.get(0)
    }
}

impl KemDistinguisher for EveRecordsKey {
    fn name(&self) -> &str {
        "eve_records_key"
    }
    fn guess(&self, ch: &KemChallenge<'_>, _: &mut SessionRng) -> bool {
        eve_key_guess(ch.eve_view, ch.ciphertext).map_or(true, |k| &k != ch.key)
    }
}

/// Eve's estimate of the raw key: her outcome where she measured in the
/// announced basis, zero elsewhere.
pub fn eve_raw_key_guess(view: &EveView) -> Option<Bits> {
    let t = &view.transcript;
    let sifted = t.sifted_positions()?;
    let alice = t.bases(Party::Alice)?;
    let sample = t.sample().map(|(idx, _, _)| idx.to_vec()).unwrap_or_default();
    let mut s = sample.iter().peekable();
    let mut guess = Bits::with_capacity(sifted.len());
    for (k, &pos) in sifted.iter().enumerate() {
        if s.peek() == Some(&&k) {
            s.next();
            continue;
        }
        let bit = match view.records.get(pos) {
            Some(m) if m.basis.as_bit() == alice.get(pos) => m.outcome,
            _ => false,
        };
        guess.push(bit);
    }
    Some(guess)
}

/// `h_S(dec(W, guess))` for Eve's raw-key guess.
pub fn eve_key_guess(view: &EveView, c: &KemCiphertext) -> Option<Bits> {
    let guess = eve_raw_key_guess(view)?;
    let corrected = recon::dec(&c.w, &guess, &c.w.config()).ok()?;
    c.s.apply(&corrected).ok()
}

pub fn kem_library() -> Vec<Box<dyn KemDistinguisher>> {
    vec![
        Box::new(ConstantZero),
        Box::new(RandomGuess),
        Box::new(RecomputeKey),
        Box::new(FirstKeyBit),
        Box::new(EveRecordsKey),
    ]
}

/// Session parameters plus the key-length rule used at encapsulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KemGameParams {
    pub session: SessionParams,
    pub rule: KeyLengthRule,
}

impl KemGameParams {
    pub fn new(session: SessionParams) -> Self {
        Self {
            session,
            rule: KeyLengthRule::Policy,
        }
    }
}

/// Gen and encap for one trial; `None` on either abort.
fn kem_trial(
    params: &KemGameParams,
    trial_seed: u64,
    rng: &mut SessionRng,
) -> Result<Option<(kem::Generated, kem::KemOutput, EncapParams)>, GameError> {
    let session = SessionParams {
        seed: trial_seed,
        ..params.session.clone()
    };
    let g = match kem::gen_with(&session, rng) {
        Ok(g) => g,
        Err(GenError::Aborted { .. }) => return Ok(None),
        Err(GenError::Protocol(e)) => return Err(e.into()),
    };
    let ep = EncapParams::from_session(&session, g.eta_hat).with_rule(params.rule);
    match kem::encap(&g.x_a, &ep, rng) {
        Ok(out) => Ok(Some((g, out, ep))),
        Err(KemError::KeyLength { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// IKIND-OT: the distinguisher sees `(C*, K, eve_view)` where `K` is the real
/// key for b = 0 and a fresh uniform key for b = 1.
pub fn play_ikind_ot(
    params: &KemGameParams,
    d: &dyn KemDistinguisher,
    cfg: &GameConfig,
) -> Result<GameReport, GameError> {
    params.session.validate()?;
    let outcomes = run_trials(cfg, |seed| {
        let mut rng = session_rng(seed);
        let Some((g, out, _)) = kem_trial(params, seed, &mut rng)? else {
            return Ok(None);
        };
        let b: bool = rng.gen();
        let uniform = Bits::random(out.key.len(), &mut rng);
        let shown = if b == cfg.swap_labels { &out.key } else { &uniform };
        let ch = KemChallenge {
            eve_view: &g.eve_view,
            ciphertext: &out.ciphertext,
            key: shown,
            raw_key: &g.x_a,
        };
        let guess = d.guess(&ch, &mut distinguisher_rng(seed));
        Ok(Some((b, guess)))
    })?;
    let hash = params_hash("ikind", d.name(), params, cfg);
    Ok(GameReport::tally("ikind", d.name(), hash, &outcomes))
}

// --- DEM IND-OT -------------------------------------------------------------

pub trait DemDistinguisher: Sync {
    fn name(&self) -> &str;
    /// The challenge pair `(M_0, M_1)`; lengths must agree.
    fn choose(&self, message_len: usize, rng: &mut SessionRng) -> (Bits, Bits);
    fn guess(&self, c: &DemCiphertext, messages: (&Bits, &Bits), rng: &mut SessionRng) -> bool;
}

pub struct DemRandomGuess;
/// `M_0 = 0...0`, `M_1 = 1...1`, answers the first ciphertext bit.
pub struct FirstCiphertextBit;
/// `M_0 = M_1`, so both arms are identically distributed.
pub struct SameMessage;

fn zeros_ones(len: usize) -> (Bits, Bits) {
    (Bits::zeros(len), Bits::ones(len))
}

impl DemDistinguisher for DemRandomGuess {
    fn name(&self) -> &str {
        "random_guess"
    }
    fn choose(&self, len: usize, _: &mut SessionRng) -> (Bits, Bits) {
        zeros_ones(len)
    }
    fn guess(&self, _: &DemCiphertext, _: (&Bits, &Bits), rng: &mut SessionRng) -> bool {
        rng.gen()
    }
}

impl DemDistinguisher for FirstCiphertextBit {
    fn name(&self) -> &str {
        "first_ciphertext_bit"
    }
    fn choose(&self, len: usize, _: &mut SessionRng) -> (Bits, Bits) {
        zeros_ones(len)
    }
    fn guess(&self, c: &DemCiphertext, _: (&Bits, &Bits), _: &mut SessionRng) -> bool {
        !c.body.is_empty() && c.body.get(0)
    }
}

impl DemDistinguisher for SameMessage {
    fn name(&self) -> &str {
        "same_message"
    }
    fn choose(&self, len: usize, rng: &mut SessionRng) -> (Bits, Bits) {
        let m = Bits::random(len, rng);
        (m.clone(), m)
    }
    fn guess(&self, c: &DemCiphertext, _: (&Bits, &Bits), _: &mut SessionRng) -> bool {
        !c.body.is_empty() && c.body.get(0)
    }
}

pub fn dem_library() -> Vec<Box<dyn DemDistinguisher>> {
    vec![
        Box::new(DemRandomGuess),
        Box::new(FirstCiphertextBit),
        Box::new(SameMessage),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemGameParams {
    pub mode: DemMode,
    pub key_len: usize,
    pub message_len: usize,
}

fn check_pair(m0: &Bits, m1: &Bits) -> Result<(), GameError> {
    if m0.len() != m1.len() {
        return Err(GameError::UnequalMessages {
            left: m0.len(),
            right: m1.len(),
        });
    }
    Ok(())
}

fn pick<'a>(b: bool, swap: bool, m0: &'a Bits, m1: &'a Bits) -> &'a Bits {
    if b == swap {
        m0
    } else {
        m1
    }
}

pub fn play_dem_ind_ot(
    params: &DemGameParams,
    d: &dyn DemDistinguisher,
    cfg: &GameConfig,
) -> Result<GameReport, GameError> {
    let outcomes = run_trials(cfg, |seed| {
        let mut rng = session_rng(seed);
        let mut drng = distinguisher_rng(seed);
        let key = dem::dem_gen(params.key_len, &mut rng)?;
        let (m0, m1) = d.choose(params.message_len, &mut drng);
        check_pair(&m0, &m1)?;
        let b: bool = rng.gen();
        let c = dem::dem_enc(&key, pick(b, cfg.swap_labels, &m0, &m1), params.mode)?;
        Ok(Some((b, d.guess(&c, (&m0, &m1), &mut drng))))
    })?;
    let hash = params_hash("dem", d.name(), params, cfg);
    Ok(GameReport::tally("dem", d.name(), hash, &outcomes))
}

// --- qHE IND-OT -------------------------------------------------------------

pub trait QheDistinguisher: Sync {
    fn name(&self) -> &str;
    fn choose(&self, view: &EveView, message_len: usize, rng: &mut SessionRng) -> (Bits, Bits);
    fn guess(&self, view: &EveView, c: &HybridCiphertext, messages: (&Bits, &Bits), rng: &mut SessionRng) -> bool;
}

pub struct QheRandomGuess;
/// Equal-length pair; answers whether the body length differs from `|M_0|`.
pub struct CiphertextLength;
pub struct FirstBodyBit;
/// Decrypts with [`eve_key_guess`] and answers the first plaintext bit.
pub struct EveKeyDecrypt;

impl QheDistinguisher for QheRandomGuess {
    fn name(&self) -> &str {
        "random_guess"
    }
    fn choose(&self, _: &EveView, len: usize, _: &mut SessionRng) -> (Bits, Bits) {
        zeros_ones(len)
    }
    fn guess(&self, _: &EveView, _: &HybridCiphertext, _: (&Bits, &Bits), rng: &mut SessionRng) -> bool {
        rng.gen()
    }
}

impl QheDistinguisher for CiphertextLength {
    fn name(&self) -> &str {
        "ciphertext_length"
    }
    fn choose(&self, _: &EveView, len: usize, _: &mut SessionRng) -> (Bits, Bits) {
        zeros_ones(len)
    }
    fn guess(&self, _: &EveView, c: &HybridCiphertext, (m0, _): (&Bits, &Bits), _: &mut SessionRng) -> bool {
        c.c2.body.len() != m0.len()
    }
}

impl QheDistinguisher for FirstBodyBit {
    fn name(&self) -> &str {
        "first_body_bit"
    }
    fn choose(&self, _: &EveView, len: usize, _: &mut SessionRng) -> (Bits, Bits) {
        zeros_ones(len)
    }
    fn guess(&self, _: &EveView, c: &HybridCiphertext, _: (&Bits, &Bits), _: &mut SessionRng) -> bool {
        !c.c2.body.is_empty() && c.c2.body.get(0)
    }
}

impl QheDistinguisher for EveKeyDecrypt {
    fn name(&self) -> &str {
        "eve_key_decrypt"
    }
    fn choose(&self, _: &EveView, len: usize, _: &mut SessionRng) -> (Bits, Bits) {
        zeros_ones(len)
    }
    fn guess(&self, view: &EveView, c: &HybridCiphertext, _: (&Bits, &Bits), rng: &mut SessionRng) -> bool {
        match eve_key_guess(view, &c.c1).and_then(|k| dem::dem_dec(&k, &c.c2).ok()) {
            Some(m) if !m.is_empty() => m.get(0),
            _ => rng.gen(),
        }
    }
}

pub fn qhe_library() -> Vec<Box<dyn QheDistinguisher>> {
    vec![
        Box::new(QheRandomGuess),
        Box::new(CiphertextLength),
        Box::new(FirstBodyBit),
        Box::new(EveKeyDecrypt),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QheGameParams {
    pub kem: KemGameParams,
    pub mode: DemMode,
    pub message_len: usize,
}

pub fn play_qhe_ind_ot(
    params: &QheGameParams,
    d: &dyn QheDistinguisher,
    cfg: &GameConfig,
) -> Result<GameReport, GameError> {
    params.kem.session.validate()?;
    let outcomes = run_trials(cfg, |seed| {
        let mut rng = session_rng(seed);
        let mut drng = distinguisher_rng(seed);
        let session = SessionParams {
            seed,
            ..params.kem.session.clone()
        };
        let g = match hybrid::qhe_gen_with(&session, &mut rng) {
            Ok(g) => g,
            Err(GenError::Aborted { .. }) => return Ok(None),
            Err(GenError::Protocol(e)) => return Err(e.into()),
        };
        let (m0, m1) = d.choose(&g.eve_view, params.message_len, &mut drng);
        check_pair(&m0, &m1)?;
        let b: bool = rng.gen();
        let ep = EncapParams::from_session(&session, g.eta_hat).with_rule(params.kem.rule);
        let c = match hybrid::qhe_enc(&g.x_a, pick(b, cfg.swap_labels, &m0, &m1), &ep, params.mode, &mut rng) {
            Ok(c) => c,
            Err(HybridError::Kem(KemError::KeyLength { .. })) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        Ok(Some((b, d.guess(&g.eve_view, &c, (&m0, &m1), &mut drng))))
    })?;
    let hash = params_hash("qhe", d.name(), params, cfg);
    Ok(GameReport::tally("qhe", d.name(), hash, &outcomes))
}
