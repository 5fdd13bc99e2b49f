//! Exact `SD((Z, C*, K*), (Z, C*, U))` for tiny sessions.
//!
//! Each signal contributes a handful of weighted outcomes
//! (bases, bits, Eve's record). At unsifted positions the bits never reach the
//! transcript or the keys, so they are summed out. The enumerator walks the
//! product of per-signal outcomes, every estimation sample, every interleaver
//! seed and every pair of Toeplitz seeds, and accumulates the probability of
//! each `(context, key)` pair, where the context is the canonical encoding of
//! Eve's view and the ciphertext. Probabilities are conditioned on the session
//! completing.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{GameError, KemChallenge, KemDistinguisher, KemGameParams};
use crate::bits::Bits;
use crate::hashing::ToeplitzSeed;
use crate::kem::{KemCiphertext, KemError, KeyLengthRule};
use crate::protocol::{EveView, Party, PublicMessage, SessionParams, Transcript};
use crate::qsim::{AdversaryStrategy, Basis, ChannelModel, EveMeasurement, EveRecord};
use crate::recon::{self, ReconConfig};
use crate::rng::SessionRng;

/// Hard cap on enumerated weighted states.
pub const BUDGET: u128 = 1 << 26;

/// Which part of Eve's side the distinguisher may condition on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// Transcript, intercept log and ciphertext.
    Full,
    /// Transcript and ciphertext only.
    WithoutEve,
    /// The key alone.
    KeyOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TinyInstance {
    pub lambda: usize,
    pub flip_prob: f64,
    pub intercept_prob: f64,
    pub sample_r: usize,
    pub eta0: f64,
    pub ell: usize,
    pub tag_bits: usize,
    /// Interleaver seed bits for the single reconciliation pass.
    pub seed_len: u32,
    pub projection: Projection,
}

impl TinyInstance {
    /// Four signals, passive Eve, noiseless channel, one-bit key and tag.
    pub fn honest() -> Self {
        Self {
            lambda: 4,
            flip_prob: 0.0,
            intercept_prob: 0.0,
            sample_r: 1,
            eta0: 0.25,
            ell: 1,
            tag_bits: 1,
            seed_len: 0,
            projection: Projection::Full,
        }
    }

    pub fn recon(&self) -> ReconConfig {
        ReconConfig {
            passes: 1,
            block_len: 7,
            seed_len: self.seed_len,
        }
    }

    pub fn session_params(&self) -> Result<SessionParams, GameError> {
        let bad = |e: crate::qsim::QsimError| GameError::Tiny(e.to_string());
        Ok(SessionParams {
            lambda: self.lambda,
            sample_r: self.sample_r,
            eta0: self.eta0,
            tag_bits: self.tag_bits,
            eps_pe: 0.5,
            eps_pa: 0.5,
            channel: ChannelModel::new(self.flip_prob).map_err(bad)?,
            adversary: AdversaryStrategy::from_intercept_prob(self.intercept_prob).map_err(bad)?,
            recon: self.recon(),
            seed: 0,
        })
    }

    /// The same instance as an IKIND-OT game with a fixed key length.
    pub fn game_params(&self) -> Result<KemGameParams, GameError> {
        Ok(KemGameParams {
            session: self.session_params()?,
            rule: KeyLengthRule::Fixed(self.ell),
        })
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if self.lambda > 6 {
            return Err(GameError::Tiny(format!("lambda={} exceeds 6", self.lambda)));
        }
        if !(1..=2).contains(&self.ell) || !(1..=2).contains(&self.tag_bits) {
            return Err(GameError::Tiny("ell and tag_bits must lie in 1..=2".into()));
        }
        if self.seed_len > 2 {
            return Err(GameError::Tiny("seed_len must be at most 2".into()));
        }
        self.session_params()?.validate()?;
        Ok(())
    }

    /// A priori count of weighted leaf states the enumeration visits.
    pub fn state_bound(&self) -> u128 {
        let syms = symbol_outcomes(self.flip_prob, self.intercept_prob);
        let ls = syms.iter().filter(|s| s.sifted()).count() as u128;
        let lu = syms.len() as u128 - ls;
        let (lambda, r) = (self.lambda as u32, self.sample_r);
        let mut total = 0u128;
        for big_n in (r + 1)..=self.lambda {
            let n = big_n - r;
            if n < self.ell.max(self.tag_bits) {
                continue;
            }
            let states = binom(self.lambda, big_n) * ls.pow(big_n as u32) * lu.pow(lambda - big_n as u32);
            let seeds = 1u128 << (self.seed_len as usize + 2 * n + self.ell + self.tag_bits - 2);
            total += states * binom(big_n, r) * seeds;
        }
        total
    }
}

fn binom(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// One merged per-signal outcome. Bits are `false` when unsifted.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Sym {
    a_basis: bool,
    b_basis: bool,
    a_bit: bool,
    b_bit: bool,
    eve: Option<(bool, bool)>,
    weight: f64,
}

impl Sym {
    fn sifted(&self) -> bool {
        self.a_basis == self.b_basis
    }
}

/// Per-signal outcome distribution with irrelevant bits marginalized.
fn symbol_outcomes(p: f64, q: f64) -> Vec<Sym> {
    type Key = (bool, bool, bool, bool, Option<(bool, bool)>);
    let mut merged: BTreeMap<Key, f64> = BTreeMap::new();
    let flips: &[(bool, f64)] = &[(false, 1.0 - p), (true, p)];
    let coin = [(false, 0.5), (true, 0.5)];
    for (a_bit, wa) in coin {
        for (a_basis, wb) in coin {
            for &(flip, wf) in flips {
                let noisy = a_bit ^ flip;
                // (resent basis, resent bit, record, weight)
                let mut resend = vec![(a_basis, noisy, None, 1.0 - q)];
                for (e_basis, we) in coin {
                    if e_basis == a_basis {
                        resend.push((e_basis, noisy, Some((e_basis, noisy)), q * we));
                    } else {
                        for (o, wo) in coin {
                            resend.push((e_basis, o, Some((e_basis, o)), q * we * wo));
                        }
                    }
                }
                for (r_basis, r_bit, rec, wr) in resend {
                    for (b_basis, wbb) in coin {
                        let outs: Vec<(bool, f64)> = if b_basis == r_basis {
                            vec![(r_bit, 1.0)]
                        } else {
                            coin.to_vec()
                        };
                        for (b_bit, wo) in outs {
                            let w = wa * wb * wf * wr * wbb * wo;
                            if w == 0.0 {
                                continue;
                            }
                            let sifted = a_basis == b_basis;
                            let key = (a_basis, b_basis, sifted && a_bit, sifted && b_bit, rec);
                            *merged.entry(key).or_default() += w;
                        }
                    }
                }
            }
        }
    }
    merged
        .into_iter()
        .map(|((a_basis, b_basis, a_bit, b_bit, eve), weight)| Sym {
            a_basis,
            b_basis,
            a_bit,
            b_bit,
            eve,
            weight,
        })
        .collect()
}

fn push_bits(out: &mut Vec<u8>, b: &Bits) {
    out.extend_from_slice(&(b.len() as u32).to_le_bytes());
    out.extend_from_slice(&b.to_bytes());
}

/// Canonical bytes of Eve's view under `projection`.
pub fn encode_view(view: &EveView, projection: Projection, out: &mut Vec<u8>) {
    if projection == Projection::KeyOnly {
        return;
    }
    for m in view.transcript.messages() {
        match m {
            PublicMessage::Bases { party, bases } => {
                out.push(if *party == Party::Alice { 0 } else { 1 });
                push_bits(out, bases);
            }
            PublicMessage::Sample {
                indices,
                alice_bits,
                bob_bits,
            } => {
                out.push(2);
                out.extend_from_slice(&(indices.len() as u32).to_le_bytes());
                for &i in indices {
                    out.extend_from_slice(&(i as u32).to_le_bytes());
                }
                push_bits(out, alice_bits);
                push_bits(out, bob_bits);
            }
            PublicMessage::Reconciliation(w) => {
                out.push(3);
                push_bits(out, &w.to_bits());
            }
            PublicMessage::PaSeed(s) => {
                out.push(4);
                push_bits(out, s.diagonals());
            }
            PublicMessage::TagSeed(s) => {
                out.push(5);
                push_bits(out, s.diagonals());
            }
            PublicMessage::Tag(v) => {
                out.push(6);
                push_bits(out, v);
            }
        }
    }
    if projection == Projection::Full {
        out.push(7);
        out.extend_from_slice(&(view.records.len() as u32).to_le_bytes());
        for m in view.records.entries() {
            out.extend_from_slice(&(m.index as u32).to_le_bytes());
            out.push(m.basis.as_bit() as u8);
            out.push(m.outcome as u8);
        }
    }
}

fn push_ciphertext(out: &mut Vec<u8>, w: &Bits, s: &Bits, s_prime: &Bits, v: &Bits) {
    out.push(8);
    push_bits(out, w);
    push_bits(out, s);
    push_bits(out, s_prime);
    push_bits(out, v);
}

/// Canonical bytes of `(Z, C*)` under `projection`.
pub fn encode_context(view: &EveView, c: &KemCiphertext, projection: Projection) -> Vec<u8> {
    let mut out = Vec::new();
    encode_view(view, projection, &mut out);
    if projection != Projection::KeyOnly {
        push_ciphertext(&mut out, &c.w.to_bits(), c.s.diagonals(), c.s_prime.diagonals(), &c.v);
    }
    out
}

/// Exact table of `Pr[(Z, C*) = context, K* = k]`, conditioned on completion.
/// Rows are indexed by `k` read as an MSB-first integer.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    pub ell: usize,
    pub table: HashMap<Vec<u8>, Vec<f64>>,
}

impl JointDistribution {
    /// Rows in byte order of their context, so float sums are reproducible.
    fn sorted_rows(&self) -> Vec<(&Vec<u8>, &Vec<f64>)> {
        let mut rows: Vec<_> = self.table.iter().collect();
        rows.sort_unstable_by(|a, b| a.0.cmp(b.0));
        rows
    }

    pub fn total(&self) -> f64 {
        self.sorted_rows().into_iter().flat_map(|(_, row)| row).sum()
    }

    /// SD against the same context marginal paired with a uniform key, and the
    /// event set achieving it.
    pub fn sd_vs_uniform(&self, projection: Projection) -> (f64, WitnessSet) {
        let keys = 1usize << self.ell;
        let mut members = HashMap::new();
        let mut sum = 0.0;
        for (ctx, row) in self.sorted_rows() {
            let q = row.iter().sum::<f64>() / keys as f64;
            let mut mask = 0u64;
            for (k, &p) in row.iter().enumerate() {
                sum += (p - q).abs();
                if p > q {
                    mask |= 1 << k;
                }
            }
            if mask != 0 {
                members.insert(ctx.clone(), mask);
            }
        }
        let w = WitnessSet {
            projection,
            everything: false,
            members,
        };
        (sum / 2.0, w)
    }

    /// Exact `|Pr_real[W] - Pr_uniform[W]|`.
    pub fn advantage_of(&self, w: &WitnessSet) -> f64 {
        let keys = 1usize << self.ell;
        let mut acc = 0.0;
        for (ctx, row) in self.sorted_rows() {
            let q = row.iter().sum::<f64>() / keys as f64;
            for (k, &p) in row.iter().enumerate() {
                if w.contains(ctx, k as u64) {
                    acc += p - q;
                }
            }
        }
        acc.abs()
    }
}

/// Half the L1 distance between two finite distributions.
pub fn statistical_distance<K: std::hash::Hash + Eq>(p: &HashMap<K, f64>, q: &HashMap<K, f64>) -> f64 {
    let mut sum: f64 = p
        .iter()
        .map(|(k, &pk)| (pk - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum();
    sum += q
        .iter()
        .filter(|(k, _)| !p.contains_key(*k))
        .map(|(_, &qk)| qk)
        .sum::<f64>();
    sum / 2.0
}

/// A set of `(context, key)` outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessSet {
    pub projection: Projection,
    /// The whole outcome space, regardless of `members`.
    pub everything: bool,
    /// Context bytes to a bitmask over key values.
    pub members: HashMap<Vec<u8>, u64>,
}

impl WitnessSet {
    pub fn empty(projection: Projection) -> Self {
        Self {
            projection,
            everything: false,
            members: HashMap::new(),
        }
    }

    pub fn everything(projection: Projection) -> Self {
        Self {
            everything: true,
            ..Self::empty(projection)
        }
    }

    pub fn contains(&self, ctx: &[u8], key: u64) -> bool {
        self.everything || self.members.get(ctx).is_some_and(|m| m >> key & 1 == 1)
    }

    pub fn len(&self) -> usize {
        self.members.values().map(|m| m.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        !self.everything && self.members.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdResult {
    pub sd: f64,
    /// Probability the session aborts (beta of the unconditioned process).
    pub abort_prob: f64,
    /// Weighted states actually visited.
    pub states: u128,
    pub joint: JointDistribution,
    pub witness: WitnessSet,
}

/// Summary written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdReport {
    pub game: String,
    pub instance: TinyInstance,
    pub sd: f64,
    pub abort_prob: f64,
    pub states: u128,
    pub contexts: usize,
    pub witness_size: usize,
}

impl SdResult {
    pub fn report(&self, instance: &TinyInstance) -> SdReport {
        SdReport {
            game: "sd".into(),
            instance: instance.clone(),
            sd: self.sd,
            abort_prob: self.abort_prob,
            states: self.states,
            contexts: self.joint.table.len(),
            witness_size: self.witness.len(),
        }
    }
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..r).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..r).rev().find(|&i| cur[i] < n - r + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..r {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

fn basis_bits(bits: impl Iterator<Item = bool>) -> Bits {
    bits.collect()
}

pub fn sd_oracle(inst: &TinyInstance) -> Result<SdResult, GameError> {
    inst.validate()?;
    let bound = inst.state_bound();
    if bound > BUDGET {
        return Err(GameError::OverBudget {
            states: bound,
            budget: BUDGET,
        });
    }
    let syms = symbol_outcomes(inst.flip_prob, inst.intercept_prob);
    let (lambda, r, ell, t) = (inst.lambda, inst.sample_r, inst.ell, inst.tag_bits);
    let cfg = inst.recon();
    let keys = 1usize << ell;
    let mut table: HashMap<Vec<u8>, Vec<f64>> = HashMap::new();
    let (mut abort, mut ok, mut states) = (0.0f64, 0.0f64, 0u128);

    let mut digits = vec![0usize; lambda];
    loop {
        let state: Vec<Sym> = digits.iter().map(|&d| syms[d]).collect();
        let weight: f64 = state.iter().map(|s| s.weight).product();
        let sifted: Vec<usize> = (0..lambda).filter(|&i| state[i].sifted()).collect();
        let big_n = sifted.len();
        if big_n <= r {
            abort += weight;
        } else {
            let samples = combinations(big_n, r);
            let ws = weight / samples.len() as f64;
            for sample in samples {
                let errors = sample
                    .iter()
                    .filter(|&&k| state[sifted[k]].a_bit != state[sifted[k]].b_bit)
                    .count();
                let n = big_n - r;
                if errors as f64 / r as f64 > inst.eta0 || ell > n || t > n {
                    abort += ws;
                    continue;
                }
                ok += ws;
                let keep: Vec<usize> = (0..big_n).filter(|k| !sample.contains(k)).collect();
                let x_a = basis_bits(keep.iter().map(|&k| state[sifted[k]].a_bit));

                let mut transcript = Transcript::new();
                transcript.push(PublicMessage::Bases {
                    party: Party::Alice,
                    bases: basis_bits(state.iter().map(|s| s.a_basis)),
                });
                transcript.push(PublicMessage::Bases {
                    party: Party::Bob,
                    bases: basis_bits(state.iter().map(|s| s.b_basis)),
                });
                transcript.push(PublicMessage::Sample {
                    alice_bits: basis_bits(sample.iter().map(|&k| state[sifted[k]].a_bit)),
                    bob_bits: basis_bits(sample.iter().map(|&k| state[sifted[k]].b_bit)),
                    indices: sample,
                });
                let mut records = EveRecord::new();
                for (index, s) in state.iter().enumerate() {
                    if let Some((basis, outcome)) = s.eve {
                        records.push(EveMeasurement {
                            index,
                            basis: Basis::from_bit(basis),
                            outcome,
                        });
                    }
                }
                let mut prefix = Vec::new();
                encode_view(&EveView { transcript, records }, inst.projection, &mut prefix);

                let hashes = |m: usize| -> Result<Vec<(Bits, usize)>, GameError> {
                    (0..1u64 << (n + m - 1))
                        .map(|d| {
                            let diag = Bits::from_u64(d, n + m - 1);
                            let out = ToeplitzSeed::new(diag.clone(), n, m)
                                .and_then(|s| s.apply(&x_a))
                                .map_err(KemError::from)?;
                            Ok((diag, out.to_u64() as usize))
                        })
                        .collect()
                };
                let pa = hashes(ell)?;
                let tags = hashes(t)?;
                let seeds = 1u64 << inst.seed_len;
                let leaf = ws / (seeds as f64 * pa.len() as f64 * tags.len() as f64);
                for seed in 0..seeds {
                    let w = recon::enc_with_seeds(&x_a, &cfg, &[seed])
                        .map_err(KemError::from)?
                        .to_bits();
                    for (s_diag, k) in &pa {
                        for (sp_diag, v) in &tags {
                            states += 1;
                            let ctx = if inst.projection == Projection::KeyOnly {
                                Vec::new()
                            } else {
                                let mut ctx = prefix.clone();
                                push_ciphertext(&mut ctx, &w, s_diag, sp_diag, &Bits::from_u64(*v as u64, t));
                                ctx
                            };
                            table.entry(ctx).or_insert_with(|| vec![0.0; keys])[*k] += leaf;
                        }
                    }
                }
            }
        }

        // Next odometer state.
        let mut pos = 0;
        loop {
            if pos == lambda {
                let total = ok + abort;
                if ok == 0.0 {
                    return Err(GameError::Tiny("every branch aborts".into()));
                }
                for row in table.values_mut() {
                    for p in row.iter_mut() {
                        *p /= ok;
                    }
                }
                let joint = JointDistribution { ell, table };
                let (sd, witness) = joint.sd_vs_uniform(inst.projection);
                return Ok(SdResult {
                    sd,
                    abort_prob: abort / total,
                    states,
                    joint,
                    witness,
                });
            }
            digits[pos] += 1;
            if digits[pos] < syms.len() {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// Answers 1 iff `(Z, C*, K)` lies in the witness set.
pub struct SetDistinguisher {
    witness: Arc<WitnessSet>,
}

pub fn distinguisher_from_set(witness: WitnessSet) -> SetDistinguisher {
    SetDistinguisher {
        witness: Arc::new(witness),
    }
}

impl KemDistinguisher for SetDistinguisher {
    fn name(&self) -> &str {
        "witness_set"
    }

    fn guess(&self, ch: &KemChallenge<'_>, _: &mut SessionRng) -> bool {
        let ctx = encode_context(ch.eve_view, ch.ciphertext, self.witness.projection);
        self.witness.contains(&ctx, ch.key.to_u64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{play_ikind_ot, GameConfig};

    fn eve_instance() -> TinyInstance {
        TinyInstance {
            lambda: 3,
            flip_prob: 0.0,
            intercept_prob: 1.0,
            sample_r: 1,
            eta0: 0.25,
            ..TinyInstance::honest()
        }
    }

    #[test]
    fn symbol_weights_sum_to_one() {
        for (p, q) in [(0.0, 0.0), (0.1, 0.0), (0.0, 1.0), (0.2, 0.7)] {
            let s: f64 = symbol_outcomes(p, q).iter().map(|s| s.weight).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_eq!(symbol_outcomes(0.0, 0.0).len(), 6);
    }

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(
            combinations(4, 2),
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(binom(6, 3), 20);
    }

    #[test]
    fn sd_of_distribution_with_itself_is_zero() {
        let p: HashMap<u8, f64> = [(0, 0.25), (1, 0.75)].into_iter().collect();
        assert_eq!(statistical_distance(&p, &p), 0.0);
    }

    #[test]
    fn public_bit_key_has_sd_half() {
        // Z is one uniform bit, K = Z: real (z, z) vs (z, u).
        let real: HashMap<(u8, u8), f64> = [((0, 0), 0.5), ((1, 1), 0.5)].into_iter().collect();
        let ideal: HashMap<(u8, u8), f64> = [((0, 0), 0.25), ((0, 1), 0.25), ((1, 0), 0.25), ((1, 1), 0.25)]
            .into_iter()
            .collect();
        assert!((statistical_distance(&real, &ideal) - 0.5).abs() < 1e-15);
        let joint = JointDistribution {
            ell: 1,
            table: [(vec![0u8], vec![0.5, 0.0]), (vec![1u8], vec![0.0, 0.5])]
                .into_iter()
                .collect(),
        };
        let (sd, w) = joint.sd_vs_uniform(Projection::Full);
        assert!((sd - 0.5).abs() < 1e-15);
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn honest_instance_is_normalized_and_witness_is_optimal() {
        let res = sd_oracle(&TinyInstance::honest()).unwrap();
        assert!((res.joint.total() - 1.0).abs() < 1e-9);
        assert!(res.sd > 0.0 && res.sd <= 1.0);
        assert!((res.joint.advantage_of(&res.witness) - res.sd).abs() < 1e-12);
        assert_eq!(res.joint.advantage_of(&WitnessSet::empty(Projection::Full)), 0.0);
        assert!(res.joint.advantage_of(&WitnessSet::everything(Projection::Full)) < 1e-12);
        assert!(res.states <= TinyInstance::honest().state_bound());
    }

    #[test]
    fn marginals_do_not_increase_sd() {
        let full = sd_oracle(&eve_instance()).unwrap().sd;
        for projection in [Projection::WithoutEve, Projection::KeyOnly] {
            let sd = sd_oracle(&TinyInstance {
                projection,
                ..eve_instance()
            })
            .unwrap()
            .sd;
            assert!(sd <= full + 1e-12, "{projection:?}: {sd} > {full}");
        }
    }

    #[test]
    fn over_budget_refused() {
        let inst = TinyInstance {
            lambda: 6,
            intercept_prob: 0.5,
            flip_prob: 0.1,
            sample_r: 1,
            ell: 2,
            tag_bits: 2,
            seed_len: 2,
            ..TinyInstance::honest()
        };
        assert!(matches!(sd_oracle(&inst), Err(GameError::OverBudget { .. })));
        assert!(matches!(
            sd_oracle(&TinyInstance {
                lambda: 7,
                ..TinyInstance::honest()
            }),
            Err(GameError::Tiny(_))
        ));
    }

    #[test]
    fn set_distinguisher_tracks_exact_sd() {
        let inst = TinyInstance::honest();
        let res = sd_oracle(&inst).unwrap();
        let d = distinguisher_from_set(res.witness.clone());
        let r = play_ikind_ot(&inst.game_params().unwrap(), &d, &GameConfig::new(20_000, 11)).unwrap();
        assert!(
            (r.advantage - res.sd).abs() <= r.ci,
            "mc {} exact {} ci {}",
            r.advantage,
            res.sd,
            r.ci
        );
        assert!((r.abort_rate - res.abort_prob).abs() < 0.02);
    }
}
