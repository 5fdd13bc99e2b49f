//! Quantum-enabled KEM built from the BB84 session.
//!
//! `gen` stops after parameter estimation and hands back the raw keys. The
//! ciphertext `C = (W, S, S', V)` carries the reconciliation helper data, the
//! privacy-amplification seed, the tag seed, and the tag `V = h_{S'}(X_A)`.
//! Bob reconciles, checks the tag, and only then hashes.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{Bits, BitsError};
use crate::hashing::{self, HashError, SeedEnvelope, ToeplitzSeed};
use crate::protocol::{self, EveView, ProtocolError, SessionParams};
use crate::recon::{self, HelperData, HelperEnvelope, ReconConfig, ReconError};
use crate::rng::session_rng;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KemError {
    #[error("no extractable key: ell={ell}, n={n}, t={t}")]
    KeyLength { ell: usize, n: usize, t: usize },
    #[error("raw key has {got} bits, ciphertext expects {expected}")]
    InputLength { expected: usize, got: usize },
    #[error("malformed ciphertext: {0}")]
    Malformed(String),
    #[error(transparent)]
    Recon(#[from] ReconError),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error(transparent)]
    Encoding(#[from] BitsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyLengthRule {
    /// The finite-size policy in [`protocol::key_length`].
    Policy,
    /// A fixed length, for toy instances where the policy gives zero.
    Fixed(usize),
}

/// Everything `encap` needs besides the raw key. `eta_hat` comes from `gen`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncapParams {
    pub recon: ReconConfig,
    pub tag_bits: usize,
    pub eps_pe: f64,
    pub eps_pa: f64,
    pub sample_r: usize,
    pub eta_hat: f64,
    pub rule: KeyLengthRule,
}

impl EncapParams {
    pub fn from_session(params: &SessionParams, eta_hat: f64) -> Self {
        Self {
            recon: params.recon,
            tag_bits: params.tag_bits,
            eps_pe: params.eps_pe,
            eps_pa: params.eps_pa,
            sample_r: params.sample_r,
            eta_hat,
            rule: KeyLengthRule::Policy,
        }
    }

    pub fn with_rule(mut self, rule: KeyLengthRule) -> Self {
        self.rule = rule;
        self
    }

    /// Key length for an `n`-bit raw key; zero when nothing is extractable.
    pub fn key_length(&self, n: usize) -> usize {
        let ell = match self.rule {
            KeyLengthRule::Fixed(ell) => ell,
            KeyLengthRule::Policy => protocol::key_length(
                n,
                self.eta_hat,
                self.sample_r,
                self.eps_pe,
                self.recon.leakage(n),
                self.tag_bits,
                self.eps_pa,
            ),
        };
        if ell > n || self.tag_bits > n {
            0
        } else {
            ell
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KemCiphertext {
    pub w: HelperData,
    pub s: ToeplitzSeed,
    pub s_prime: ToeplitzSeed,
    pub v: Bits,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KemOutput {
    pub key: Bits,
    pub ciphertext: KemCiphertext,
}

/// Raw correlated strings and Eve's view after a non-aborted `gen`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub x_a: Bits,
    pub x_b: Bits,
    pub eta_hat: f64,
    pub eve_view: EveView,
}

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("parameter estimation aborted (eta_hat = {eta_hat:?})")]
    Aborted {
        eta_hat: Option<f64>,
        eve_view: Box<EveView>,
    },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Correlation phase from `params.seed`.
pub fn gen(params: &SessionParams) -> Result<Generated, GenError> {
    gen_with(params, &mut session_rng(params.seed))
}

pub fn gen_with<R: Rng + ?Sized>(params: &SessionParams, rng: &mut R) -> Result<Generated, GenError> {
    let corr = protocol::correlate(params, rng)?;
    if corr.is_aborted() {
        return Err(GenError::Aborted {
            eta_hat: corr.eta_hat(),
            eve_view: Box::new(corr.eve_view),
        });
    }
    Ok(Generated {
        eta_hat: corr.eta_hat().expect("non-aborted correlation has an estimate"),
        x_a: corr.x_a,
        x_b: corr.x_b,
        eve_view: corr.eve_view,
    })
}

/// Draws `S'`, then `S`, then the interleaver seeds, and builds `C`.
pub fn encap<R: Rng + ?Sized>(x_a: &Bits, params: &EncapParams, rng: &mut R) -> Result<KemOutput, KemError> {
    let n = x_a.len();
    let ell = params.key_length(n);
    if ell == 0 {
        return Err(KemError::KeyLength {
            ell,
            n,
            t: params.tag_bits,
        });
    }
    let s_prime = hashing::sample_seed(n, params.tag_bits, rng)?;
    let s = hashing::sample_seed(n, ell, rng)?;
    let w = recon::enc(x_a, &params.recon, rng)?;
    encap_with(x_a, w, s, s_prime)
}

/// Deterministic encapsulation from chosen helper data and seeds.
pub fn encap_with(x_a: &Bits, w: HelperData, s: ToeplitzSeed, s_prime: ToeplitzSeed) -> Result<KemOutput, KemError> {
    if w.input_len() != x_a.len() {
        return Err(KemError::InputLength {
            expected: w.input_len(),
            got: x_a.len(),
        });
    }
    let key = s.apply(x_a)?;
    let v = s_prime.apply(x_a)?;
    Ok(KemOutput {
        key,
        ciphertext: KemCiphertext { w, s, s_prime, v },
    })
}

/// Bob's reconciled string `X'_B = dec(W, X_B)`.
pub fn reconcile(x_b: &Bits, c: &KemCiphertext) -> Result<Bits, KemError> {
    if x_b.len() != c.w.input_len() {
        return Err(KemError::InputLength {
            expected: c.w.input_len(),
            got: x_b.len(),
        });
    }
    Ok(recon::dec(&c.w, x_b, &c.w.config())?)
}

/// `Ok(None)` is the rejection symbol: the tag did not verify.
pub fn decap(x_b: &Bits, c: &KemCiphertext) -> Result<Option<Bits>, KemError> {
    c.validate()?;
    let corrected = reconcile(x_b, c)?;
    if c.s_prime.apply(&corrected)? != c.v {
        return Ok(None);
    }
    Ok(Some(c.s.apply(&corrected)?))
}

impl KemCiphertext {
    pub fn raw_len(&self) -> usize {
        self.w.input_len()
    }

    pub fn key_len(&self) -> usize {
        self.s.output_len()
    }

    pub fn tag_len(&self) -> usize {
        self.s_prime.output_len()
    }

    fn validate(&self) -> Result<(), KemError> {
        let n = self.raw_len();
        if self.s.input_len() != n || self.s_prime.input_len() != n {
            return Err(KemError::Malformed("seed input lengths differ from n".into()));
        }
        if self.v.len() != self.tag_len() {
            return Err(KemError::Malformed("tag length differs from t".into()));
        }
        Ok(())
    }

    pub fn to_envelope(&self) -> KemEnvelope {
        KemEnvelope {
            n: self.raw_len(),
            ell: self.key_len(),
            t: self.tag_len(),
            w: self.w.to_envelope(),
            s: self.s.to_envelope(),
            s_prime: self.s_prime.to_envelope(),
            v: self.v.to_hex(),
        }
    }

    pub fn from_envelope(env: &KemEnvelope) -> Result<Self, KemError> {
        let w = HelperData::from_envelope(&env.w)?;
        let s = ToeplitzSeed::from_envelope(&env.s)?;
        let s_prime = ToeplitzSeed::from_envelope(&env.s_prime)?;
        if w.input_len() != env.n || s.output_len() != env.ell || s_prime.output_len() != env.t {
            return Err(KemError::Malformed("envelope dimensions disagree".into()));
        }
        let v = Bits::from_hex(&env.v, env.t)?;
        let c = Self { w, s, s_prime, v };
        c.validate()?;
        Ok(c)
    }
}

/// JSON envelope `{n, ell, t, w, s, s_prime, v}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KemEnvelope {
    pub n: usize,
    pub ell: usize,
    pub t: usize,
    pub w: HelperEnvelope,
    pub s: SeedEnvelope,
    pub s_prime: SeedEnvelope,
    pub v: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{AdversaryStrategy, ChannelModel};

    fn encap_params(tag_bits: usize, rule: KeyLengthRule) -> EncapParams {
        EncapParams {
            recon: ReconConfig::session_default(),
            tag_bits,
            eps_pe: 1e-6,
            eps_pa: 1e-6,
            sample_r: 4096,
            eta_hat: 0.0,
            rule,
        }
    }

    #[test]
    fn noiseless_gen_gives_equal_raw_keys() {
        let g = gen(&SessionParams::new(1 << 14)).unwrap();
        assert_eq!(g.x_a, g.x_b);
        assert_eq!(g.eta_hat, 0.0);
    }

    #[test]
    fn gen_aborts_under_full_interception() {
        let params = SessionParams {
            adversary: AdversaryStrategy::intercept_resend(1.0).unwrap(),
            eta0: 0.11,
            ..SessionParams::new(1 << 15)
        };
        assert!(matches!(gen(&params), Err(GenError::Aborted { .. })));
    }

    #[test]
    fn gen_raw_disagreement_tracks_flip_prob() {
        let params = SessionParams {
            channel: ChannelModel::new(0.02).unwrap(),
            lambda: 1 << 16,
            seed: 3,
            ..SessionParams::new(1 << 16)
        };
        let g = gen(&params).unwrap();
        assert!(g.x_a.len() >= 10_000);
        let d = g.x_a.hamming_distance(&g.x_b) as f64 / g.x_a.len() as f64;
        assert!((0.015..=0.025).contains(&d), "{d}");
    }

    #[test]
    fn key_length_follows_policy() {
        let mut rng = session_rng(1);
        let x = Bits::random(20_000, &mut rng);
        let p = encap_params(32, KeyLengthRule::Policy);
        let out = encap(&x, &p, &mut rng).unwrap();
        assert_eq!(out.key.len(), p.key_length(20_000));
        assert_eq!(out.ciphertext.v.len(), 32);
        assert_eq!(decap(&x, &out.ciphertext).unwrap(), Some(out.key));
    }

    #[test]
    fn zero_length_is_an_abort() {
        let mut rng = session_rng(2);
        let x = Bits::random(500, &mut rng);
        let err = encap(&x, &encap_params(32, KeyLengthRule::Policy), &mut rng).unwrap_err();
        assert!(matches!(err, KemError::KeyLength { ell: 0, .. }));
        let err = encap(&x, &encap_params(32, KeyLengthRule::Fixed(501)), &mut rng).unwrap_err();
        assert!(matches!(err, KemError::KeyLength { .. }));
    }

    #[test]
    fn fresh_seeds_give_fresh_ciphertexts() {
        let mut rng = session_rng(3);
        let x = Bits::random(4000, &mut rng);
        let p = encap_params(16, KeyLengthRule::Fixed(128));
        let a = encap(&x, &p, &mut rng).unwrap();
        let b = encap(&x, &p, &mut rng).unwrap();
        assert_ne!(a.ciphertext, b.ciphertext);
        assert_eq!(decap(&x, &a.ciphertext).unwrap(), Some(a.key));
        assert_eq!(decap(&x, &b.ciphertext).unwrap(), Some(b.key));
    }

    #[test]
    fn one_error_per_block_still_decapsulates() {
        let mut rng = session_rng(4);
        let recon = ReconConfig {
            passes: 1,
            block_len: 7,
            seed_len: 0,
        };
        let p = EncapParams {
            recon,
            ..encap_params(16, KeyLengthRule::Fixed(64))
        };
        let x = Bits::random(700, &mut rng);
        let out = encap(&x, &p, &mut rng).unwrap();
        let mut y = x.clone();
        for blk in 0..100 {
            y.flip(blk * 7 + rng.gen_range(0..7));
        }
        assert_eq!(decap(&y, &out.ciphertext).unwrap(), Some(out.key));
    }

    #[test]
    fn key_is_function_of_raw_key_and_seed() {
        let mut rng = session_rng(5);
        let x = Bits::random(300, &mut rng);
        let p = encap_params(8, KeyLengthRule::Fixed(40));
        let out = encap(&x, &p, &mut rng).unwrap();
        let c = out.ciphertext.clone();
        let again = encap_with(&x, c.w.clone(), c.s.clone(), c.s_prime.clone()).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn tampered_tag_is_rejected() {
        let mut rng = session_rng(6);
        let x = Bits::random(1000, &mut rng);
        let out = encap(&x, &encap_params(8, KeyLengthRule::Fixed(16)), &mut rng).unwrap();
        let mut c = out.ciphertext;
        c.v.flip(0);
        assert_eq!(decap(&x, &c).unwrap(), None);
    }

    #[test]
    fn envelope_round_trip_and_rejection() {
        let mut rng = session_rng(7);
        let x = Bits::random(900, &mut rng);
        let out = encap(&x, &encap_params(8, KeyLengthRule::Fixed(16)), &mut rng).unwrap();
        let env = out.ciphertext.to_envelope();
        let json = serde_json::to_string(&env).unwrap();
        let back: KemEnvelope = serde_json::from_str(&json).unwrap();
        assert_eq!(KemCiphertext::from_envelope(&back).unwrap(), out.ciphertext);
        let bad = KemEnvelope { ell: 17, ..env.clone() };
        assert!(KemCiphertext::from_envelope(&bad).is_err());
        let bad = KemEnvelope {
            v: "0000".into(),
            ..env
        };
        assert!(KemCiphertext::from_envelope(&bad).is_err());
    }

    #[test]
    fn input_length_checked() {
        let mut rng = session_rng(8);
        let x = Bits::random(100, &mut rng);
        let out = encap(&x, &encap_params(4, KeyLengthRule::Fixed(8)), &mut rng).unwrap();
        assert!(matches!(
            decap(&Bits::zeros(99), &out.ciphertext),
            Err(KemError::InputLength { .. })
        ));
    }

    fn matvec(diag: u64, n: usize, m: usize, x: u64) -> u64 {
        let len = n + m - 1;
        (0..m).fold(0, |out, i| {
            let bit = (0..n).fold(0, |acc, j| {
                acc ^ (diag >> (len - 1 - (i + n - 1 - j)) & x >> (n - 1 - j) & 1)
            });
            out << 1 | bit
        })
    }

    #[test]
    fn every_key_seed_gives_the_matrix_product() {
        let (n, ell) = (8, 2);
        let cfg = ReconConfig::default();
        let s_prime = ToeplitzSeed::new(Bits::from_u64(0b1_0110_1101, 9), n, 2).unwrap();
        for x in [0u64, 1, 0x80, 0xa5, 0xff] {
            let xa = Bits::from_u64(x, n);
            for diag in 0..1u64 << (n + ell - 1) {
                let s = ToeplitzSeed::new(Bits::from_u64(diag, n + ell - 1), n, ell).unwrap();
                let w = recon::enc_with_seeds(&xa, &cfg, &[3, 4]).unwrap();
                let out = encap_with(&xa, w, s, s_prime.clone()).unwrap();
                assert_eq!(out.key.to_u64(), matvec(diag, n, ell, x));
                assert_eq!(decap(&xa, &out.ciphertext).unwrap(), Some(out.key));
            }
        }
    }

    #[test]
    fn tag_collisions_are_exactly_two_to_minus_t() {
        for n in 1..=6usize {
            for t in 1..=3usize.min(n) {
                let seeds = 1u64 << (n + t - 1);
                for x in 0..1u64 << n {
                    for y in (0..1u64 << n).filter(|&y| y != x) {
                        let hits = (0..seeds).filter(|&d| matvec(d, n, t, x) == matvec(d, n, t, y)).count() as u64;
                        assert_eq!(hits << t, seeds, "n={n} t={t}");
                    }
                }
                if n < 3 {
                    continue;
                }
                // Two errors in one block become three after decoding, so the
                // reconciled string always differs from x and only the tag decides.
                let x = Bits::zeros(n);
                let mut y = x.clone();
                y.flip(0);
                y.flip(1);
                let cfg = ReconConfig {
                    passes: 1,
                    block_len: 7,
                    seed_len: 0,
                };
                let accepted = (0..seeds)
                    .filter(|&d| {
                        let sp = ToeplitzSeed::new(Bits::from_u64(d, n + t - 1), n, t).unwrap();
                        let s = ToeplitzSeed::new(Bits::zeros(n), n, 1).unwrap();
                        let w = recon::enc_with_seeds(&x, &cfg, &[0]).unwrap();
                        let c = encap_with(&x, w, s, sp).unwrap().ciphertext;
                        assert_ne!(reconcile(&y, &c).unwrap(), x);
                        decap(&y, &c).unwrap().is_some()
                    })
                    .count() as u64;
                assert_eq!(accepted << t, seeds, "n={n} t={t}");
            }
        }
    }
}
