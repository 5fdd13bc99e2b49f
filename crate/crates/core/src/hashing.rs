//! Toeplitz two-universal hashing over GF(2).
//!
//! An `m x n` Toeplitz matrix is fixed by its `n + m - 1` diagonals with
//! `T[i][j] = diagonals[i - j + n - 1]`. Hashing is the matrix-vector product,
//! so the family is linear and, for `x != x'`, exactly a `2^-m` fraction of
//! seeds collide.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{Bits, BitsError};
use crate::par;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HashError {
    #[error("output length m={m} must satisfy 0 < m <= n={n}")]
    Dimensions { n: usize, m: usize },
    #[error("seed has {got} diagonal bits, expected n + m - 1 = {expected}")]
    SeedLength { expected: usize, got: usize },
    #[error("input has {got} bits, seed expects {expected}")]
    InputLength { expected: usize, got: usize },
    #[error(transparent)]
    Encoding(#[from] BitsError),
}

/// Below this many matrix bits the row loop stays on the calling thread.
const PARALLEL_THRESHOLD: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ToeplitzSeed {
    diagonals: Bits,
    n: usize,
    m: usize,
}

fn check_dims(n: usize, m: usize) -> Result<(), HashError> {
    if m == 0 || m > n {
        return Err(HashError::Dimensions { n, m });
    }
    Ok(())
}

pub fn sample_seed<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<ToeplitzSeed, HashError> {
    check_dims(n, m)?;
    Ok(ToeplitzSeed {
        diagonals: Bits::random(n + m - 1, rng),
        n,
        m,
    })
}

pub fn apply(seed: &ToeplitzSeed, input: &Bits) -> Result<Bits, HashError> {
    seed.apply(input)
}

impl ToeplitzSeed {
    pub fn new(diagonals: Bits, n: usize, m: usize) -> Result<Self, HashError> {
        check_dims(n, m)?;
        if diagonals.len() != n + m - 1 {
            return Err(HashError::SeedLength {
                expected: n + m - 1,
                got: diagonals.len(),
            });
        }
        Ok(Self { diagonals, n, m })
    }

    pub fn input_len(&self) -> usize {
        self.n
    }

    pub fn output_len(&self) -> usize {
        self.m
    }

    pub fn diagonals(&self) -> &Bits {
        &self.diagonals
    }

    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.diagonals.get(i + self.n - 1 - j)
    }

    pub fn apply(&self, input: &Bits) -> Result<Bits, HashError> {
        self.apply_with(input, self.n * self.m >= PARALLEL_THRESHOLD)
    }

    /// Same result as [`ToeplitzSeed::apply`], never leaving the calling thread.
    pub fn apply_seq(&self, input: &Bits) -> Result<Bits, HashError> {
        self.apply_with(input, false)
    }

    fn apply_with(&self, input: &Bits, parallel: bool) -> Result<Bits, HashError> {
        if input.len() != self.n {
            return Err(HashError::InputLength {
                expected: self.n,
                got: input.len(),
            });
        }
        // Row i is the dot product of diagonals[i..i + n] with the reversed
        // input, so every row is a shifted window over the same word array.
        let rev = input.reversed();
        let rev = rev.words();
        let mut diag = self.diagonals.words().to_vec();
        diag.push(0);
        let diag = &diag[..];
        let m = self.m;

        let out_word = |ow: usize| -> u64 {
            let mut word = 0u64;
            let first = ow * 64;
            for i in first..(first + 64).min(m) {
                let base = i >> 6;
                let shift = (i & 63) as u32;
                let mut acc = 0u64;
                if shift == 0 {
                    for (w, &r) in rev.iter().enumerate() {
                        acc ^= diag[base + w] & r;
                    }
                } else {
                    for (w, &r) in rev.iter().enumerate() {
                        let win = (diag[base + w] << shift) | (diag[base + w + 1] >> (64 - shift));
                        acc ^= win & r;
                    }
                }
                if acc.count_ones() & 1 == 1 {
                    word |= 1u64 << (63 - (i - first));
                }
            }
            word
        };

        let nwords = m.div_ceil(64);
        let words = if parallel {
            par::map_indexed(nwords, out_word)
        } else {
            par::map_indexed_seq(nwords, out_word)
        };
        Ok(Bits::from_words(words, m))
    }

    pub fn to_envelope(&self) -> SeedEnvelope {
        SeedEnvelope {
            n: self.n,
            m: self.m,
            diagonals: self.diagonals.to_hex(),
        }
    }

    pub fn from_envelope(env: &SeedEnvelope) -> Result<Self, HashError> {
        check_dims(env.n, env.m)?;
        let diagonals = Bits::from_hex(&env.diagonals, env.n + env.m - 1)?;
        Self::new(diagonals, env.n, env.m)
    }
}

/// Wire form of a seed: diagonals as MSB-first hex plus explicit dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedEnvelope {
    pub n: usize,
    pub m: usize,
    pub diagonals: String,
}
