//! One-way information reconciliation by interleaved Hamming syndromes.
//!
//! Each pass permutes the string with a seeded interleaver, splits it into
//! blocks of `block_len = 2^k - 1` bits (the last one zero-padded) and sends
//! the `k`-bit Hamming syndrome of every block. The parity-check matrix has
//! column `j` equal to the binary representation of `j` (1-based), so a block
//! position `p` (0-based) contributes `p + 1` to the syndrome and a single
//! error at `p` yields syndrome `p + 1`.
//!
//! The interleaver for a pass seed `s` is Fisher-Yates driven by
//! [`SplitMix64`] seeded with `s`: for `i` from `n - 1` down to `1`, swap
//! positions `i` and `(next_u64 * (i + 1)) >> 64`. A `seed_len` of zero selects
//! the identity permutation and sends no seed bits.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{Bits, BitsError};
use crate::rng::SplitMix64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReconError {
    #[error("reconciliation needs at least one pass")]
    NoPasses,
    #[error("block length {0} is not 2^k - 1 with 3 <= k <= 10")]
    BlockLen(usize),
    #[error("interleaver seed length {0} exceeds 64 bits")]
    SeedLen(u32),
    #[error("cannot reconcile an empty string")]
    Empty,
    #[error("helper data is for {expected} bits, got {got}")]
    Length { expected: usize, got: usize },
    #[error("helper data does not match the reconciliation config")]
    ConfigMismatch,
    #[error("expected {expected} pass seeds, got {got}")]
    SeedCount { expected: usize, got: usize },
    #[error(transparent)]
    Encoding(#[from] BitsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReconConfig {
    pub passes: usize,
    pub block_len: usize,
    pub seed_len: u32,
}

impl Default for ReconConfig {
    /// Two passes of Hamming(7,4) with 64-bit interleaver seeds.
    fn default() -> Self {
        Self {
            passes: 2,
            block_len: 7,
            seed_len: 64,
        }
    }
}

impl ReconConfig {
    /// Five passes of Hamming(63,57). Two passes of (7,4) leak about 6n/7
    /// bits, which leaves no extractable key at a few-percent QBER.
    pub fn session_default() -> Self {
        Self {
            passes: 5,
            block_len: 63,
            seed_len: 64,
        }
    }

    pub fn validate(&self) -> Result<(), ReconError> {
        if self.passes == 0 {
            return Err(ReconError::NoPasses);
        }
        let k = (self.block_len + 1).trailing_zeros();
        if !(self.block_len + 1).is_power_of_two() || !(3..=10).contains(&k) {
            return Err(ReconError::BlockLen(self.block_len));
        }
        if self.seed_len > 64 {
            return Err(ReconError::SeedLen(self.seed_len));
        }
        Ok(())
    }

    /// Syndrome width `k` for `block_len = 2^k - 1`.
    pub fn syndrome_bits(&self) -> usize {
        (self.block_len + 1).trailing_zeros() as usize
    }

    pub fn blocks(&self, n: usize) -> usize {
        n.div_ceil(self.block_len)
    }

    /// Exact size of the helper data for an `n`-bit string.
    pub fn leakage(&self, n: usize) -> usize {
        self.passes * (self.seed_len as usize + self.syndrome_bits() * self.blocks(n))
    }

    fn seed_mask(&self) -> u64 {
        match self.seed_len {
            0 => 0,
            64 => u64::MAX,
            l => (1u64 << l) - 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PassHelper {
    pub seed: u64,
    pub syndromes: Bits,
}

/// The public helper message W.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HelperData {
    n: usize,
    config: ReconConfig,
    passes: Vec<PassHelper>,
    total_bits: usize,
}

impl HelperData {
    pub fn input_len(&self) -> usize {
        self.n
    }

    pub fn config(&self) -> ReconConfig {
        self.config
    }

    pub fn passes(&self) -> &[PassHelper] {
        &self.passes
    }

    /// Leakage accounting |W|.
    pub fn total_bits(&self) -> usize {
        self.total_bits
    }

    /// The exact bit string sent: per pass, seed then syndromes.
    pub fn to_bits(&self) -> Bits {
        let mut out = Bits::with_capacity(self.total_bits);
        for p in &self.passes {
            out.extend_from(&seed_bits(p.seed, self.config.seed_len));
            out.extend_from(&p.syndromes);
        }
        out
    }

    pub fn to_envelope(&self) -> HelperEnvelope {
        HelperEnvelope {
            n: self.n,
            block_len: self.config.block_len,
            seed_len: self.config.seed_len,
            passes: self
                .passes
                .iter()
                .map(|p| PassEnvelope {
                    seed: seed_bits(p.seed, self.config.seed_len).to_hex(),
                    syndromes: p.syndromes.to_hex(),
                })
                .collect(),
            total_bits: self.total_bits,
        }
    }

    pub fn from_envelope(env: &HelperEnvelope) -> Result<Self, ReconError> {
        let config = ReconConfig {
            passes: env.passes.len(),
            block_len: env.block_len,
            seed_len: env.seed_len,
        };
        config.validate()?;
        if env.n == 0 {
            return Err(ReconError::Empty);
        }
        let syn_len = config.syndrome_bits() * config.blocks(env.n);
        let passes = env
            .passes
            .iter()
            .map(|p| {
                let seed = Bits::from_hex(&p.seed, config.seed_len as usize)?;
                let syndromes = Bits::from_hex(&p.syndromes, syn_len)?;
                Ok(PassHelper {
                    seed: if config.seed_len == 0 { 0 } else { seed.to_u64() },
                    syndromes,
                })
            })
            .collect::<Result<Vec<_>, ReconError>>()?;
        let total_bits = config.leakage(env.n);
        if env.total_bits != total_bits {
            return Err(ReconError::ConfigMismatch);
        }
        Ok(Self {
            n: env.n,
            config,
            passes,
            total_bits,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassEnvelope {
    pub seed: String,
    pub syndromes: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HelperEnvelope {
    pub n: usize,
    pub block_len: usize,
    pub seed_len: u32,
    pub passes: Vec<PassEnvelope>,
    pub total_bits: usize,
}

fn seed_bits(seed: u64, seed_len: u32) -> Bits {
    Bits::from_u64(seed, seed_len as usize)
}

/// `perm[k]` is the source index of position `k` in the interleaved string.
pub fn interleaver(seed: u64, seed_len: u32, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    if seed_len == 0 {
        return perm;
    }
    let mut prng = SplitMix64::new(seed);
    for i in (1..n).rev() {
        let j = prng.below(i as u64 + 1) as usize;
        perm.swap(i, j);
    }
    perm
}

/// Syndromes of `x` read through `perm`, `k` bits per block, MSB first.
fn syndromes(x: &Bits, perm: &[usize], cfg: &ReconConfig) -> Vec<u16> {
    let blocks = cfg.blocks(x.len());
    let mut syn = vec![0u16; blocks];
    for (k, &src) in perm.iter().enumerate() {
        if x.get(src) {
            syn[k / cfg.block_len] ^= (k % cfg.block_len + 1) as u16;
        }
    }
    syn
}

fn pack(syn: &[u16], width: usize) -> Bits {
    let mut out = Bits::with_capacity(syn.len() * width);
    for &s in syn {
        out.extend_from(&Bits::from_u64(s as u64, width));
    }
    out
}

fn unpack(bits: &Bits, width: usize) -> Vec<u16> {
    (0..bits.len() / width)
        .map(|b| (0..width).fold(0u16, |acc, i| (acc << 1) | bits.get(b * width + i) as u16))
        .collect()
}

/// Alice's side: helper data for `x`, drawing one interleaver seed per pass.
pub fn enc<R: Rng + ?Sized>(x: &Bits, cfg: &ReconConfig, rng: &mut R) -> Result<HelperData, ReconError> {
    cfg.validate()?;
    let seeds: Vec<u64> = (0..cfg.passes).map(|_| rng.gen::<u64>() & cfg.seed_mask()).collect();
    enc_with_seeds(x, cfg, &seeds)
}

/// Deterministic core of [`enc`] for explicitly chosen pass seeds.
pub fn enc_with_seeds(x: &Bits, cfg: &ReconConfig, seeds: &[u64]) -> Result<HelperData, ReconError> {
    cfg.validate()?;
    if x.is_empty() {
        return Err(ReconError::Empty);
    }
    if seeds.len() != cfg.passes {
        return Err(ReconError::SeedCount {
            expected: cfg.passes,
            got: seeds.len(),
        });
    }
    let width = cfg.syndrome_bits();
    let passes = seeds
        .iter()
        .map(|&seed| {
            let seed = seed & cfg.seed_mask();
            let perm = interleaver(seed, cfg.seed_len, x.len());
            PassHelper {
                seed,
                syndromes: pack(&syndromes(x, &perm, cfg), width),
            }
        })
        .collect();
    Ok(HelperData {
        n: x.len(),
        config: *cfg,
        passes,
        total_bits: cfg.leakage(x.len()),
    })
}

/// Bob's side: corrects `y` toward Alice's string, pass by pass.
pub fn dec(w: &HelperData, y: &Bits, cfg: &ReconConfig) -> Result<Bits, ReconError> {
    cfg.validate()?;
    if *cfg != w.config {
        return Err(ReconError::ConfigMismatch);
    }
    if y.len() != w.n {
        return Err(ReconError::Length {
            expected: w.n,
            got: y.len(),
        });
    }
    let width = cfg.syndrome_bits();
    let n = y.len();
    let mut work = y.clone();
    for pass in &w.passes {
        let perm = interleaver(pass.seed, cfg.seed_len, n);
        let local = syndromes(&work, &perm, cfg);
        let remote = unpack(&pass.syndromes, width);
        for (b, (l, r)) in local.iter().zip(&remote).enumerate() {
            let diff = (l ^ r) as usize;
            if diff != 0 {
                // Positions past n are padding and never flipped.
                let k = b * cfg.block_len + diff - 1;
                if k < n {
                    work.flip(perm[k]);
                }
            }
        }
    }
    Ok(work)
}
