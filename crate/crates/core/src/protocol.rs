//! BB84 session orchestration: signals, sifting, parameter estimation,
//! reconciliation, privacy amplification, and the finite-size key-length
//! policy.
//!
//! The extractable length is
//!
//! ```text
//! mu  = sqrt(ln(2 / eps_pe) / (2 r))
//! ell = max(0, floor(n (1 - h(min(eta_hat + mu, 1/2))) - |W| - t - 2 log2(1 / eps_pa)))
//! ```
//!
//! where `mu` is a one-sided Hoeffding margin on the sampled error rate and
//! `|W|` is the exact reconciliation leakage.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::Bits;
use crate::hashing::ToeplitzSeed;
use crate::kem::{self, EncapParams, KemError};
use crate::qsim::{self, AdversaryStrategy, Basis, ChannelModel, EveRecord};
use crate::recon::{HelperData, ReconConfig};
use crate::rng::session_rng;

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("invalid {field}: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("input vectors have mismatched lengths")]
    LengthMismatch,
    #[error("sample size {r} must satisfy 0 < r < N = {sifted}")]
    SampleSize { r: usize, sifted: usize },
    #[error("sample indices must be strictly increasing and below {0}")]
    SampleIndices(usize),
    #[error(transparent)]
    Kem(#[from] KemError),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ProtocolError {
    ProtocolError::InvalidParam {
        field,
        reason: reason.into(),
    }
}

/// Every protocol knob for one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionParams {
    /// Number of signals sent.
    pub lambda: usize,
    /// Parameter-estimation sample size.
    pub sample_r: usize,
    /// Abort threshold on the sampled error rate.
    pub eta0: f64,
    /// Verification tag length.
    pub tag_bits: usize,
    pub eps_pe: f64,
    pub eps_pa: f64,
    pub channel: ChannelModel,
    pub adversary: AdversaryStrategy,
    pub recon: ReconConfig,
    pub seed: u64,
}

pub const DEFAULT_SAMPLE_R: usize = 4096;
pub const DEFAULT_ETA0: f64 = 0.05;
pub const DEFAULT_TAG_BITS: usize = 32;
pub const DEFAULT_EPS: f64 = 1.0 / (1u64 << 20) as f64;

impl SessionParams {
    pub fn new(lambda: usize) -> Self {
        Self {
            lambda,
            sample_r: DEFAULT_SAMPLE_R,
            eta0: DEFAULT_ETA0,
            tag_bits: DEFAULT_TAG_BITS,
            eps_pe: DEFAULT_EPS,
            eps_pa: DEFAULT_EPS,
            channel: ChannelModel::noiseless(),
            adversary: AdversaryStrategy::Passive,
            recon: ReconConfig::session_default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.lambda == 0 {
            return Err(invalid("lambda", "must be positive"));
        }
        if self.sample_r == 0 || 2 * self.sample_r >= self.lambda {
            return Err(invalid(
                "sample_r",
                format!("must satisfy 0 < r < lambda/2 = {}", self.lambda / 2),
            ));
        }
        if !(self.eta0 > 0.0 && self.eta0 < 0.5) {
            return Err(invalid("eta0", "must lie in (0, 0.5)"));
        }
        if self.tag_bits == 0 {
            return Err(invalid("tag_bits", "must be at least 1"));
        }
        for (field, eps) in [("eps_pe", self.eps_pe), ("eps_pa", self.eps_pa)] {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(invalid(field, "must lie in (0, 1)"));
            }
        }
        ChannelModel::new(self.channel.flip_prob()).map_err(|e| invalid("flip_prob", e.to_string()))?;
        AdversaryStrategy::from_intercept_prob(self.adversary.intercept_prob())
            .map_err(|e| invalid("intercept_prob", e.to_string()))?;
        self.recon.validate().map_err(|e| invalid("recon", e.to_string()))?;
        Ok(())
    }
}

pub fn binary_entropy(p: f64) -> Result<f64, ProtocolError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ProtocolError::Probability(p));
    }
    Ok(entropy(p))
}

fn entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Hoeffding margin `sqrt(ln(2 / eps_pe) / (2 r))`.
pub fn finite_size_penalty(eps_pe: f64, r: usize) -> f64 {
    ((2.0 / eps_pe).ln() / (2.0 * r as f64)).sqrt()
}

pub fn key_length(n: usize, eta_hat: f64, r: usize, eps_pe: f64, leak_w: usize, t: usize, eps_pa: f64) -> usize {
    key_length_with_penalty(n, eta_hat, finite_size_penalty(eps_pe, r), leak_w, t, eps_pa)
}

pub fn key_length_with_penalty(n: usize, eta_hat: f64, mu: f64, leak_w: usize, t: usize, eps_pa: f64) -> usize {
    let q = (eta_hat + mu).min(0.5);
    let v = n as f64 * (1.0 - entropy(q)) - leak_w as f64 - t as f64 - 2.0 * (1.0 / eps_pa).log2();
    if v <= 0.0 {
        0
    } else {
        v.floor() as usize
    }
}

/// Both parties' per-signal choices and results, plus Eve's log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantumRecord {
    pub alice_bits: Bits,
    pub alice_bases: Bits,
    pub bob_bases: Bits,
    pub bob_bits: Bits,
    pub eve: EveRecord,
}

pub fn simulate_signals<R: Rng + ?Sized>(params: &SessionParams, rng: &mut R) -> QuantumRecord {
    let lambda = params.lambda;
    let mut rec = QuantumRecord {
        alice_bits: Bits::with_capacity(lambda),
        alice_bases: Bits::with_capacity(lambda),
        bob_bases: Bits::with_capacity(lambda),
        bob_bits: Bits::with_capacity(lambda),
        eve: EveRecord::new(),
    };
    for i in 0..lambda {
        let bit: bool = rng.gen();
        let basis = Basis::random(rng);
        let (received, intercepted) =
            qsim::transmit(qsim::prepare(bit, basis), i, &params.channel, &params.adversary, rng);
        let bob_basis = Basis::random(rng);
        let outcome = qsim::measure(received, bob_basis, rng);
        rec.alice_bits.push(bit);
        rec.alice_bases.push(basis.as_bit());
        rec.bob_bases.push(bob_basis.as_bit());
        rec.bob_bits.push(outcome);
        if let Some(m) = intercepted {
            rec.eve.push(m);
        }
    }
    rec
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiftedPair {
    pub x_a: Bits,
    pub x_b: Bits,
    pub kept_indices: Vec<usize>,
}

impl SiftedPair {
    pub fn len(&self) -> usize {
        self.x_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_a.is_empty()
    }
}

/// Keeps the positions where preparation and measurement bases agree.
/// Bases are encoded with [`Basis::as_bit`].
pub fn sift(
    alice_bits: &Bits,
    alice_bases: &Bits,
    bob_bases: &Bits,
    bob_outcomes: &Bits,
) -> Result<SiftedPair, ProtocolError> {
    let lambda = alice_bits.len();
    if alice_bases.len() != lambda || bob_bases.len() != lambda || bob_outcomes.len() != lambda {
        return Err(ProtocolError::LengthMismatch);
    }
    let mut agree = alice_bases.xor(bob_bases);
    agree.xor_assign(&Bits::ones(lambda));
    let kept_indices = agree.ones_positions();
    Ok(SiftedPair {
        x_a: alice_bits.select(&kept_indices),
        x_b: bob_outcomes.select(&kept_indices),
        kept_indices,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateOutcome {
    Ok,
    Abort,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub eta_hat: f64,
    /// Sampled positions within the sifted strings, ascending.
    pub sample_indices: Vec<usize>,
    pub outcome: EstimateOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimation {
    pub result: EstimationResult,
    pub alice_sample: Bits,
    pub bob_sample: Bits,
    /// Sifted strings with the sample removed.
    pub x_a: Bits,
    pub x_b: Bits,
}

/// Samples `r` sifted positions uniformly without replacement and compares.
pub fn estimate<R: Rng + ?Sized>(
    pair: &SiftedPair,
    r: usize,
    eta0: f64,
    rng: &mut R,
) -> Result<Estimation, ProtocolError> {
    if r == 0 || r >= pair.len() {
        return Err(ProtocolError::SampleSize { r, sifted: pair.len() });
    }
    let mut sample = rand::seq::index::sample(rng, pair.len(), r).into_vec();
    sample.sort_unstable();
    estimate_with_sample(pair, sample, eta0)
}

/// Estimation on an explicitly chosen sample (ascending sifted positions).
/// The boundary `eta_hat == eta0` passes.
pub fn estimate_with_sample(pair: &SiftedPair, sample: Vec<usize>, eta0: f64) -> Result<Estimation, ProtocolError> {
    let big_n = pair.len();
    let r = sample.len();
    if r == 0 || r >= big_n {
        return Err(ProtocolError::SampleSize { r, sifted: big_n });
    }
    if sample.windows(2).any(|w| w[0] >= w[1]) || sample[r - 1] >= big_n {
        return Err(ProtocolError::SampleIndices(big_n));
    }
    let alice_sample = pair.x_a.select(&sample);
    let bob_sample = pair.x_b.select(&sample);
    let eta_hat = alice_sample.hamming_distance(&bob_sample) as f64 / r as f64;
    let outcome = if eta_hat <= eta0 {
        EstimateOutcome::Ok
    } else {
        EstimateOutcome::Abort
    };

    let mut keep = Vec::with_capacity(big_n - r);
    let mut s = sample.iter().peekable();
    for i in 0..big_n {
        if s.peek() == Some(&&i) {
            s.next();
        } else {
            keep.push(i);
        }
    }
    Ok(Estimation {
        result: EstimationResult {
            eta_hat,
            sample_indices: sample,
            outcome,
        },
        alice_sample,
        bob_sample,
        x_a: pair.x_a.select(&keep),
        x_b: pair.x_b.select(&keep),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Alice,
    Bob,
}

/// One message on the authenticated classical channel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PublicMessage {
    Bases {
        party: Party,
        bases: Bits,
    },
    Sample {
        indices: Vec<usize>,
        alice_bits: Bits,
        bob_bits: Bits,
    },
    Reconciliation(HelperData),
    PaSeed(ToeplitzSeed),
    TagSeed(ToeplitzSeed),
    Tag(Bits),
}

/// Append-only record of the public channel.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Transcript {
    messages: Vec<PublicMessage>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, m: PublicMessage) {
        self.messages.push(m);
    }

    pub fn messages(&self) -> &[PublicMessage] {
        &self.messages
    }

    pub fn bases(&self, party: Party) -> Option<&Bits> {
        self.messages.iter().find_map(|m| match m {
            PublicMessage::Bases { party: p, bases } if *p == party => Some(bases),
            _ => None,
        })
    }

    pub fn sample(&self) -> Option<(&[usize], &Bits, &Bits)> {
        self.messages.iter().find_map(|m| match m {
            PublicMessage::Sample {
                indices,
                alice_bits,
                bob_bits,
            } => Some((indices.as_slice(), alice_bits, bob_bits)),
            _ => None,
        })
    }

    /// Sifted positions, recomputed from the two basis announcements.
    pub fn sifted_positions(&self) -> Option<Vec<usize>> {
        let a = self.bases(Party::Alice)?;
        let b = self.bases(Party::Bob)?;
        Some((0..a.len()).filter(|&i| a.get(i) == b.get(i)).collect())
    }
}

/// Everything Eve holds: the public channel plus her measurement log.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct EveView {
    pub transcript: Transcript,
    pub records: EveRecord,
}

/// Output of signal exchange, sifting and parameter estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    pub sifted_len: usize,
    /// `None` when sifting left too few bits to sample.
    pub estimation: Option<EstimationResult>,
    /// Raw keys of length `n = N - r`; empty when aborted.
    pub x_a: Bits,
    pub x_b: Bits,
    pub eve_view: EveView,
}

impl Correlation {
    pub fn is_aborted(&self) -> bool {
        !matches!(&self.estimation, Some(e) if e.outcome == EstimateOutcome::Ok)
    }

    pub fn eta_hat(&self) -> Option<f64> {
        self.estimation.as_ref().map(|e| e.eta_hat)
    }
}

/// Sifts, publishes, and estimates on `sample`; `None` means `N <= r`.
pub fn assemble_correlation(
    record: QuantumRecord,
    eta0: f64,
    sample: Option<Vec<usize>>,
) -> Result<Correlation, ProtocolError> {
    let pair = sift(
        &record.alice_bits,
        &record.alice_bases,
        &record.bob_bases,
        &record.bob_bits,
    )?;
    let mut transcript = Transcript::new();
    transcript.push(PublicMessage::Bases {
        party: Party::Alice,
        bases: record.alice_bases,
    });
    transcript.push(PublicMessage::Bases {
        party: Party::Bob,
        bases: record.bob_bases,
    });
    let sifted_len = pair.len();
    let (estimation, x_a, x_b) = match sample {
        None => (None, Bits::new(), Bits::new()),
        Some(sample) => {
            let est = estimate_with_sample(&pair, sample, eta0)?;
            transcript.push(PublicMessage::Sample {
                indices: est.result.sample_indices.clone(),
                alice_bits: est.alice_sample,
                bob_bits: est.bob_sample,
            });
            let ok = est.result.outcome == EstimateOutcome::Ok;
            let (x_a, x_b) = if ok {
                (est.x_a, est.x_b)
            } else {
                (Bits::new(), Bits::new())
            };
            (Some(est.result), x_a, x_b)
        }
    };
    Ok(Correlation {
        sifted_len,
        estimation,
        x_a,
        x_b,
        eve_view: EveView {
            transcript,
            records: record.eve,
        },
    })
}

/// Signals, sifting and parameter estimation on the caller's generator.
pub fn correlate<R: Rng + ?Sized>(params: &SessionParams, rng: &mut R) -> Result<Correlation, ProtocolError> {
    params.validate()?;
    let record = simulate_signals(params, rng);
    let sifted = record.alice_bases.len() - record.alice_bases.hamming_distance(&record.bob_bases);
    let sample = if sifted > params.sample_r {
        let mut s = rand::seq::index::sample(rng, sifted, params.sample_r).into_vec();
        s.sort_unstable();
        Some(s)
    } else {
        None
    };
    assemble_correlation(record, params.eta0, sample)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Completed,
    AbortedPe,
    AbortedLen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub status: SessionStatus,
    pub sifted_len: usize,
    pub raw_len: usize,
    pub eta_hat: Option<f64>,
    pub ell: usize,
    /// `(K_A, K_B)`, present only when completed.
    pub keys: Option<(Bits, Bits)>,
    /// Whether Bob's tag check passed; present only when completed.
    pub tag_match: Option<bool>,
    /// Simulation-side diagnostic: did reconciliation recover `X_A` exactly.
    pub reconciled: Option<bool>,
    pub eve_view: EveView,
}

impl SessionOutcome {
    pub fn transcript(&self) -> &Transcript {
        &self.eve_view.transcript
    }

    pub fn keys_agree(&self) -> bool {
        matches!(&self.keys, Some((a, b)) if a == b)
    }

    pub fn report(&self, params: &SessionParams) -> SessionReport {
        let t = self.transcript();
        let helper_bits = t.messages().iter().find_map(|m| match m {
            PublicMessage::Reconciliation(w) => Some(w.total_bits()),
            _ => None,
        });
        let tag = t.messages().iter().find_map(|m| match m {
            PublicMessage::Tag(v) => Some(v.to_hex()),
            _ => None,
        });
        let (sample_size, sample_errors) = match t.sample() {
            Some((idx, a, b)) => (idx.len(), a.hamming_distance(b)),
            None => (0, 0),
        };
        SessionReport {
            status: self.status,
            lambda: params.lambda,
            seed: params.seed,
            sifted_len: self.sifted_len,
            raw_len: self.raw_len,
            eta_hat: self.eta_hat,
            ell: self.ell,
            key_a: self.keys.as_ref().map(|(a, _)| a.to_hex()),
            key_b: self.keys.as_ref().map(|(_, b)| b.to_hex()),
            keys_match: self.keys.as_ref().map(|(a, b)| a == b),
            tag_match: self.tag_match,
            transcript: TranscriptSummary {
                messages: t.messages().len(),
                alice_bases: t.bases(Party::Alice).map(Bits::to_hex).unwrap_or_default(),
                bob_bases: t.bases(Party::Bob).map(Bits::to_hex).unwrap_or_default(),
                sample_size,
                sample_errors,
                helper_bits,
                tag,
            },
            intercepted: self.eve_view.records.len(),
        }
    }
}

/// JSON form of a session outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub status: SessionStatus,
    pub lambda: usize,
    pub seed: u64,
    pub sifted_len: usize,
    pub raw_len: usize,
    pub eta_hat: Option<f64>,
    pub ell: usize,
    pub key_a: Option<String>,
    pub key_b: Option<String>,
    pub keys_match: Option<bool>,
    pub tag_match: Option<bool>,
    pub transcript: TranscriptSummary,
    pub intercepted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSummary {
    pub messages: usize,
    pub alice_bases: String,
    pub bob_bases: String,
    pub sample_size: usize,
    pub sample_errors: usize,
    pub helper_bits: Option<usize>,
    pub tag: Option<String>,
}

/// Runs one full session from `params.seed`.
pub fn run_session(params: &SessionParams) -> Result<SessionOutcome, ProtocolError> {
    let mut rng = session_rng(params.seed);
    let corr = correlate(params, &mut rng)?;
    let Correlation {
        sifted_len,
        estimation,
        x_a,
        x_b,
        mut eve_view,
    } = corr;
    let eta_hat = estimation.as_ref().map(|e| e.eta_hat);
    let aborted = |status, eve_view| SessionOutcome {
        status,
        sifted_len,
        raw_len: x_a.len(),
        eta_hat,
        ell: 0,
        keys: None,
        tag_match: None,
        reconciled: None,
        eve_view,
    };
    let Some(eta) = eta_hat.filter(|_| matches!(&estimation, Some(e) if e.outcome == EstimateOutcome::Ok)) else {
        return Ok(aborted(SessionStatus::AbortedPe, eve_view));
    };

    let ep = EncapParams::from_session(params, eta);
    let out = match kem::encap(&x_a, &ep, &mut rng) {
        Ok(out) => out,
        Err(KemError::KeyLength { .. }) => return Ok(aborted(SessionStatus::AbortedLen, eve_view)),
        Err(e) => return Err(e.into()),
    };
    let c = &out.ciphertext;
    eve_view.transcript.push(PublicMessage::Reconciliation(c.w.clone()));
    eve_view.transcript.push(PublicMessage::PaSeed(c.s.clone()));
    eve_view.transcript.push(PublicMessage::TagSeed(c.s_prime.clone()));
    eve_view.transcript.push(PublicMessage::Tag(c.v.clone()));

    let corrected = kem::reconcile(&x_b, c)?;
    let key_b = c.s.apply(&corrected).map_err(KemError::from)?;
    let tag_match = c.s_prime.apply(&corrected).map_err(KemError::from)? == c.v;
    Ok(SessionOutcome {
        status: SessionStatus::Completed,
        sifted_len,
        raw_len: x_a.len(),
        eta_hat,
        ell: out.key.len(),
        reconciled: Some(corrected == x_a),
        keys: Some((out.key, key_b)),
        tag_match: Some(tag_match),
        eve_view,
    })
}
