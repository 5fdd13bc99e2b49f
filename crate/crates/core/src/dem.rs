//! One-time data encapsulation under a KEM key.
//!
//! `OneTimePad` XORs the message with a key prefix and needs `|M| <= |K|`.
//! `Keystream` XORs with a ChaCha20 stream keyed by
//! `SHA-256("qkdh-dem-keystream" || u64be(|K|) || K)` under the all-zero nonce,
//! so any message length works. Neither mode authenticates.

use chacha20::cipher::{KeyIvInit, StreamCipher};
use chacha20::ChaCha20;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bits::Bits;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DemError {
    #[error("DEM key length must be positive")]
    EmptyKey,
    #[error("one-time pad needs |M| <= |K|, got |M|={message} and |K|={key}")]
    OtpLength { message: usize, key: usize },
    #[error("ciphertext is {got}, expected {expected}")]
    ModeMismatch { expected: DemMode, got: DemMode },
    #[error("malformed DEM ciphertext: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemMode {
    OneTimePad,
    Keystream,
}

impl DemMode {
    pub fn as_byte(self) -> u8 {
        match self {
            DemMode::OneTimePad => 0,
            DemMode::Keystream => 1,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self, DemError> {
        match b {
            0 => Ok(DemMode::OneTimePad),
            1 => Ok(DemMode::Keystream),
            other => Err(DemError::Format(format!("unknown mode byte {other}"))),
        }
    }
}

impl std::fmt::Display for DemMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DemMode::OneTimePad => "one_time_pad",
            DemMode::Keystream => "keystream",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DemCiphertext {
    pub mode: DemMode,
    pub body: Bits,
}

impl DemCiphertext {
    /// Mode byte followed by the body bytes. Only whole-byte bodies survive
    /// the round trip through [`DemCiphertext::from_file_bytes`].
    pub fn to_file_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(1 + self.body.len().div_ceil(8));
        out.push(self.mode.as_byte());
        out.extend_from_slice(&self.body.to_bytes());
        out
    }

    pub fn from_file_bytes(bytes: &[u8]) -> Result<Self, DemError> {
        let (&mode, body) = bytes
            .split_first()
            .ok_or_else(|| DemError::Format("missing mode byte".into()))?;
        Ok(Self {
            mode: DemMode::from_byte(mode)?,
            body: Bits::from_bytes(body),
        })
    }
}

pub fn dem_gen<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Bits, DemError> {
    if len == 0 {
        return Err(DemError::EmptyKey);
    }
    Ok(Bits::random(len, rng))
}

/// `len` bits of the keystream expander `G(key)`.
pub fn keystream(key: &Bits, len: usize) -> Bits {
    let mut h = Sha256::new();
    h.update(b"qkdh-dem-keystream");
    h.update((key.len() as u64).to_be_bytes());
    h.update(key.to_bytes());
    let k: [u8; 32] = h.finalize().into();
    let mut buf = vec![0u8; len.div_ceil(8)];
    ChaCha20::new(&k.into(), &[0u8; 12].into()).apply_keystream(&mut buf);
    Bits::from_bytes_len(&buf, len)
}

fn mask(key: &Bits, len: usize, mode: DemMode) -> Result<Bits, DemError> {
    if key.is_empty() {
        return Err(DemError::EmptyKey);
    }
    match mode {
        DemMode::OneTimePad if len > key.len() => Err(DemError::OtpLength {
            message: len,
            key: key.len(),
        }),
        DemMode::OneTimePad => Ok(key.prefix(len)),
        DemMode::Keystream => Ok(keystream(key, len)),
    }
}

pub fn dem_enc(key: &Bits, message: &Bits, mode: DemMode) -> Result<DemCiphertext, DemError> {
    let mut body = mask(key, message.len(), mode)?;
    body.xor_assign(message);
    Ok(DemCiphertext { mode, body })
}

pub fn dem_dec(key: &Bits, c: &DemCiphertext) -> Result<Bits, DemError> {
    let mut m = mask(key, c.body.len(), c.mode)?;
    m.xor_assign(&c.body);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::session_rng;
    use proptest::prelude::*;
    use std::collections::HashMap;

    #[test]
    fn gen_length_and_bias() {
        let mut rng = session_rng(1);
        assert_eq!(dem_gen(8, &mut rng).unwrap().len(), 8);
        assert_eq!(dem_gen(0, &mut rng), Err(DemError::EmptyKey));
        let ones: usize = (0..100_000).map(|_| dem_gen(1, &mut rng).unwrap().count_ones()).sum();
        let bias = ones as f64 / 1e5;
        assert!((0.49..=0.51).contains(&bias), "{bias}");
        assert_ne!(
            dem_gen(128, &mut session_rng(2)).unwrap(),
            dem_gen(128, &mut session_rng(3)).unwrap()
        );
    }

    #[test]
    fn otp_zero_message_reveals_key_prefix() {
        let mut rng = session_rng(4);
        let k = dem_gen(40, &mut rng).unwrap();
        let c = dem_enc(&k, &Bits::zeros(30), DemMode::OneTimePad).unwrap();
        assert_eq!(c.body, k.prefix(30));
    }

    #[test]
    fn otp_length_violation() {
        let k = Bits::ones(8);
        assert_eq!(
            dem_enc(&k, &Bits::zeros(9), DemMode::OneTimePad),
            Err(DemError::OtpLength { message: 9, key: 8 })
        );
        assert!(dem_enc(&k, &Bits::zeros(9), DemMode::Keystream).is_ok());
    }

    #[test]
    fn otp_ciphertexts_uniform_over_keys() {
        for m in [0u64, 1, 0xA5, 0xFF] {
            let msg = Bits::from_u64(m, 8);
            let mut seen: HashMap<Bits, usize> = HashMap::new();
            for k in 0..256u64 {
                let c = dem_enc(&Bits::from_u64(k, 8), &msg, DemMode::OneTimePad).unwrap();
                *seen.entry(c.body).or_default() += 1;
            }
            assert_eq!(seen.len(), 256);
            assert!(seen.values().all(|&c| c == 1));
        }
    }

    #[test]
    fn otp_perfect_secrecy_up_to_ten_bits() {
        for len in 1..=10usize {
            let keys = 1u64 << len;
            let mut table: Option<Vec<usize>> = None;
            for m in [0u64, keys - 1, keys / 3] {
                let mut counts = vec![0usize; keys as usize];
                for k in 0..keys {
                    let c = dem_enc(&Bits::from_u64(k, len), &Bits::from_u64(m, len), DemMode::OneTimePad).unwrap();
                    counts[c.body.to_u64() as usize] += 1;
                }
                assert!(counts.iter().all(|&c| c == 1));
                if let Some(prev) = &table {
                    assert_eq!(prev, &counts);
                }
                table = Some(counts);
            }
        }
    }

    #[test]
    fn empty_message_round_trips() {
        let k = Bits::ones(4);
        for mode in [DemMode::OneTimePad, DemMode::Keystream] {
            let c = dem_enc(&k, &Bits::new(), mode).unwrap();
            assert!(c.body.is_empty());
            assert_eq!(dem_dec(&k, &c).unwrap(), Bits::new());
        }
    }

    #[test]
    fn keystream_mebibyte_round_trip() {
        let mut rng = session_rng(5);
        let k = dem_gen(256, &mut rng).unwrap();
        let m = Bits::random(8 << 20, &mut rng);
        let c = dem_enc(&k, &m, DemMode::Keystream).unwrap();
        assert_eq!(c.body.len(), m.len());
        assert_ne!(c.body, m);
        assert_eq!(dem_dec(&k, &c).unwrap(), m);
    }

    #[test]
    fn keystream_depends_on_key_length() {
        let a = keystream(&Bits::zeros(8), 64);
        let b = keystream(&Bits::zeros(16), 64);
        assert_ne!(a, b);
        assert_eq!(keystream(&Bits::zeros(8), 64), a);
        assert_eq!(keystream(&Bits::zeros(8), 20), a.prefix(20));
    }

    #[test]
    fn otp_is_malleable() {
        let mut rng = session_rng(6);
        let k = dem_gen(64, &mut rng).unwrap();
        let m = Bits::random(64, &mut rng);
        let mut c = dem_enc(&k, &m, DemMode::OneTimePad).unwrap();
        c.body.flip(17);
        let mut expected = m;
        expected.flip(17);
        assert_eq!(dem_dec(&k, &c).unwrap(), expected);
    }

    #[test]
    fn file_format() {
        let c = DemCiphertext {
            mode: DemMode::Keystream,
            body: Bits::from_bytes(&[0xde, 0xad]),
        };
        let bytes = c.to_file_bytes();
        assert_eq!(bytes, vec![1, 0xde, 0xad]);
        assert_eq!(DemCiphertext::from_file_bytes(&bytes).unwrap(), c);
        assert!(DemCiphertext::from_file_bytes(&[]).is_err());
        assert!(DemCiphertext::from_file_bytes(&[7, 0]).is_err());
    }

    proptest! {
        #[test]
        fn perfect_correctness(seed in any::<u64>(), klen in 1usize..300, mlen in 0usize..600) {
            let mut rng = session_rng(seed);
            let k = dem_gen(klen, &mut rng).unwrap();
            let m = Bits::random(mlen, &mut rng);
            for mode in [DemMode::OneTimePad, DemMode::Keystream] {
                match dem_enc(&k, &m, mode) {
                    Ok(c) => prop_assert_eq!(dem_dec(&k, &c).unwrap(), m.clone()),
                    Err(e) => prop_assert_eq!(e, DemError::OtpLength { message: mlen, key: klen }),
                }
            }
        }
    }
}
