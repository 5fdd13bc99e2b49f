//! Hybrid encryption: a fresh KEM key per message, used once by the DEM.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::Bits;
use crate::dem::{self, DemCiphertext, DemError, DemMode};
use crate::kem::{self, EncapParams, GenError, Generated, KemCiphertext, KemEnvelope, KemError};
use crate::protocol::SessionParams;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HybridError {
    #[error(transparent)]
    Kem(#[from] KemError),
    #[error(transparent)]
    Dem(#[from] DemError),
    #[error("DEM body of {0} bits is not byte aligned")]
    Unaligned(usize),
    #[error("malformed hybrid envelope: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HybridCiphertext {
    pub c1: KemCiphertext,
    pub c2: DemCiphertext,
}

/// JSON envelope `{c1, mode, c2_hex}`. The DEM body is carried as whole bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HybridEnvelope {
    pub c1: KemEnvelope,
    pub mode: DemMode,
    pub c2_hex: String,
}

impl HybridCiphertext {
    pub fn to_envelope(&self) -> Result<HybridEnvelope, HybridError> {
        if self.c2.body.len() % 8 != 0 {
            return Err(HybridError::Unaligned(self.c2.body.len()));
        }
        Ok(HybridEnvelope {
            c1: self.c1.to_envelope(),
            mode: self.c2.mode,
            c2_hex: self.c2.body.to_hex(),
        })
    }

    pub fn from_envelope(env: &HybridEnvelope) -> Result<Self, HybridError> {
        let c1 = KemCiphertext::from_envelope(&env.c1)?;
        let body = hex::decode(&env.c2_hex).map_err(|e| HybridError::Malformed(e.to_string()))?;
        Ok(Self {
            c1,
            c2: DemCiphertext {
                mode: env.mode,
                body: Bits::from_bytes(&body),
            },
        })
    }
}

pub fn qhe_gen(params: &SessionParams) -> Result<Generated, GenError> {
    kem::gen(params)
}

pub fn qhe_gen_with<R: Rng + ?Sized>(params: &SessionParams, rng: &mut R) -> Result<Generated, GenError> {
    kem::gen_with(params, rng)
}

pub fn qhe_enc<R: Rng + ?Sized>(
    x_a: &Bits,
    message: &Bits,
    params: &EncapParams,
    mode: DemMode,
    rng: &mut R,
) -> Result<HybridCiphertext, HybridError> {
    if mode == DemMode::OneTimePad {
        let ell = params.key_length(x_a.len());
        if ell > 0 && message.len() > ell {
            return Err(DemError::OtpLength {
                message: message.len(),
                key: ell,
            }
            .into());
        }
    }
    let out = kem::encap(x_a, params, rng)?;
    let c2 = dem::dem_enc(&out.key, message, mode)?;
    Ok(HybridCiphertext { c1: out.ciphertext, c2 })
}

/// `Ok(None)` when the KEM rejects.
pub fn qhe_dec(x_b: &Bits, c: &HybridCiphertext) -> Result<Option<Bits>, HybridError> {
    match kem::decap(x_b, &c.c1)? {
        None => Ok(None),
        Some(k) => Ok(Some(dem::dem_dec(&k, &c.c2)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kem::KeyLengthRule;
    use crate::qsim::ChannelModel;
    use crate::rng::session_rng;

    fn session() -> (SessionParams, Generated) {
        let params = SessionParams::new(1 << 15);
        let g = qhe_gen(&params).unwrap();
        (params, g)
    }

    #[test]
    fn noiseless_round_trip() {
        let (params, g) = session();
        let ep = EncapParams::from_session(&params, g.eta_hat);
        let ell = ep.key_length(g.x_a.len());
        assert!(ell > 1000);
        let mut rng = session_rng(9);
        for mode in [DemMode::OneTimePad, DemMode::Keystream] {
            let m = Bits::random(ell, &mut rng);
            let c = qhe_enc(&g.x_a, &m, &ep, mode, &mut rng).unwrap();
            assert_eq!(c.c2.body.len(), m.len());
            assert_eq!(qhe_dec(&g.x_b, &c).unwrap(), Some(m));
        }
    }

    #[test]
    fn fresh_c1_per_encryption() {
        let (params, g) = session();
        let ep = EncapParams::from_session(&params, g.eta_hat);
        let mut rng = session_rng(10);
        let m = Bits::from_bytes(b"attack at dawn");
        let a = qhe_enc(&g.x_a, &m, &ep, DemMode::Keystream, &mut rng).unwrap();
        let b = qhe_enc(&g.x_a, &m, &ep, DemMode::Keystream, &mut rng).unwrap();
        assert_ne!(a.c1, b.c1);
    }

    #[test]
    fn otp_overlong_message_fails_at_enc() {
        let mut rng = session_rng(11);
        let x = Bits::random(200, &mut rng);
        let ep = EncapParams {
            recon: Default::default(),
            tag_bits: 8,
            eps_pe: 0.1,
            eps_pa: 0.1,
            sample_r: 10,
            eta_hat: 0.0,
            rule: KeyLengthRule::Fixed(16),
        };
        let err = qhe_enc(&x, &Bits::zeros(17), &ep, DemMode::OneTimePad, &mut rng).unwrap_err();
        assert_eq!(err, HybridError::Dem(DemError::OtpLength { message: 17, key: 16 }));
    }

    #[test]
    fn corrupted_tag_rejects() {
        let mut rng = session_rng(12);
        let x = Bits::random(2000, &mut rng);
        let ep = EncapParams {
            recon: Default::default(),
            tag_bits: 8,
            eps_pe: 0.1,
            eps_pa: 0.1,
            sample_r: 10,
            eta_hat: 0.0,
            rule: KeyLengthRule::Fixed(64),
        };
        let mut c = qhe_enc(&x, &Bits::ones(64), &ep, DemMode::OneTimePad, &mut rng).unwrap();
        c.c1.v.flip(3);
        assert_eq!(qhe_dec(&x, &c).unwrap(), None);
    }

    #[test]
    fn abort_propagates() {
        let params = SessionParams {
            adversary: crate::qsim::AdversaryStrategy::intercept_resend(1.0).unwrap(),
            eta0: 0.11,
            ..SessionParams::new(1 << 15)
        };
        assert!(matches!(qhe_gen(&params), Err(GenError::Aborted { .. })));
        assert_eq!(qhe_gen(&params), kem::gen(&params));
    }

    #[test]
    fn envelope_round_trip() {
        let params = SessionParams {
            channel: ChannelModel::new(0.01).unwrap(),
            ..SessionParams::new(1 << 15)
        };
        let g = qhe_gen(&params).unwrap();
        let ep = EncapParams::from_session(&params, g.eta_hat);
        let mut rng = session_rng(13);
        let c = qhe_enc(&g.x_a, &Bits::from_bytes(b"hello"), &ep, DemMode::Keystream, &mut rng).unwrap();
        let json = serde_json::to_string(&c.to_envelope().unwrap()).unwrap();
        let env: HybridEnvelope = serde_json::from_str(&json).unwrap();
        assert_eq!(HybridCiphertext::from_envelope(&env).unwrap(), c);
        let odd = HybridCiphertext {
            c2: DemCiphertext {
                mode: DemMode::Keystream,
                body: Bits::zeros(3),
            },
            ..c
        };
        assert_eq!(odd.to_envelope(), Err(HybridError::Unaligned(3)));
    }
}
