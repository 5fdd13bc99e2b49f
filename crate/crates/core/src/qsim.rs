//! Classical simulation of BB84 signals.
//!
//! A qubit in flight is the pair (basis, bit). Under channel bit flips and
//! intercept-resend eavesdropping only the four BB84 states ever occur, so the
//! pair is an exact representation rather than an approximation.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QsimError {
    #[error("flip_prob must lie in [0, 0.5], got {0}")]
    FlipProb(f64),
    #[error("intercept_prob must lie in [0, 1], got {0}")]
    InterceptProb(f64),
}

/// Preparation / measurement basis: computational {|0>, |1>} or
/// Hadamard {|+>, |->}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Computational,
    Hadamard,
}

impl Basis {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::from_bit(rng.gen())
    }

    /// Wire encoding used in basis announcements: Computational = 0.
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Basis::Hadamard
        } else {
            Basis::Computational
        }
    }

    pub fn as_bit(self) -> bool {
        self == Basis::Hadamard
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bb84Symbol {
    pub basis: Basis,
    pub bit: bool,
}

pub fn prepare(bit: bool, basis: Basis) -> Bb84Symbol {
    Bb84Symbol { basis, bit }
}

/// Born-rule measurement: deterministic in the matching basis, a fair coin
/// otherwise (`|<+|0>|^2 = 1/2`).
pub fn measure<R: Rng + ?Sized>(symbol: Bb84Symbol, basis: Basis, rng: &mut R) -> bool {
    if basis == symbol.basis {
        symbol.bit
    } else {
        rng.gen()
    }
}

/// In-basis bit flip applied once per Alice-to-Bob transit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    flip_prob: f64,
}

impl ChannelModel {
    pub fn new(flip_prob: f64) -> Result<Self, QsimError> {
        if !(0.0..=0.5).contains(&flip_prob) {
            return Err(QsimError::FlipProb(flip_prob));
        }
        Ok(Self { flip_prob })
    }

    pub fn noiseless() -> Self {
        Self { flip_prob: 0.0 }
    }

    pub fn flip_prob(&self) -> f64 {
        self.flip_prob
    }
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self::noiseless()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub enum AdversaryStrategy {
    #[default]
    Passive,
    /// Each symbol is independently intercepted with `intercept_prob`,
    /// measured in a uniform basis and resent in that basis.
    InterceptResend { intercept_prob: f64 },
}

impl AdversaryStrategy {
    pub fn intercept_resend(intercept_prob: f64) -> Result<Self, QsimError> {
        if !(0.0..=1.0).contains(&intercept_prob) {
            return Err(QsimError::InterceptProb(intercept_prob));
        }
        Ok(Self::InterceptResend { intercept_prob })
    }

    /// `Passive` for probability zero, intercept-resend otherwise.
    pub fn from_intercept_prob(intercept_prob: f64) -> Result<Self, QsimError> {
        if intercept_prob == 0.0 {
            Ok(Self::Passive)
        } else {
            Self::intercept_resend(intercept_prob)
        }
    }

    pub fn intercept_prob(&self) -> f64 {
        match *self {
            Self::Passive => 0.0,
            Self::InterceptResend { intercept_prob } => intercept_prob,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EveMeasurement {
    pub index: usize,
    pub basis: Basis,
    pub outcome: bool,
}

/// Eve's measurement log for one session, indices strictly increasing.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EveRecord {
    entries: Vec<EveMeasurement>,
}

impl EveRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, m: EveMeasurement) {
        if let Some(last) = self.entries.last() {
            assert!(m.index > last.index, "eve record indices must increase");
        }
        self.entries.push(m);
    }

    pub fn entries(&self) -> &[EveMeasurement] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&EveMeasurement> {
        self.entries
            .binary_search_by_key(&index, |m| m.index)
            .ok()
            .map(|k| &self.entries[k])
    }
}

/// One Alice-to-Bob transit of the symbol sent at `index`: channel noise
/// first, then (maybe) interception.
pub fn transmit<R: Rng + ?Sized>(
    symbol: Bb84Symbol,
    index: usize,
    channel: &ChannelModel,
    strategy: &AdversaryStrategy,
    rng: &mut R,
) -> (Bb84Symbol, Option<EveMeasurement>) {
    let mut noisy = symbol;
    if channel.flip_prob > 0.0 && rng.gen_bool(channel.flip_prob) {
        noisy.bit = !noisy.bit;
    }
    let q = strategy.intercept_prob();
    if q > 0.0 && rng.gen_bool(q) {
        let basis = Basis::random(rng);
        let outcome = measure(noisy, basis, rng);
        (prepare(outcome, basis), Some(EveMeasurement { index, basis, outcome }))
    } else {
        (noisy, None)
    }
}
