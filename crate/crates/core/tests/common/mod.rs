//! Second SD enumerator, written without the library's bit vectors, hashing
//! or reconciliation code. It branches on every raw coin of every signal and
//! never merges outcomes early.

#![allow(dead_code)]

use std::collections::HashMap;

#[derive(Clone, Copy, Debug)]
pub struct Tiny {
    pub lambda: usize,
    pub p: f64,
    pub q: f64,
    pub r: usize,
    pub eta0: f64,
    pub ell: usize,
    pub t: usize,
    pub seed_len: u32,
    /// Include Eve's intercept log in the context.
    pub with_eve: bool,
    /// Context is empty: compare the key alone against uniform.
    pub key_only: bool,
}

#[derive(Clone, Copy, Debug)]
struct Raw {
    a: u8,
    alpha: u8,
    beta: u8,
    bob: u8,
    eve: Option<(u8, u8)>,
}

/// `(weight, basis, bit, eve)` of the symbol reaching Bob.
type Carrier = (f64, u8, u8, Option<(u8, u8)>);

fn raw_signal_paths(p: f64, q: f64) -> Vec<(f64, Raw)> {
    let mut out = Vec::new();
    for a in 0..2u8 {
        for alpha in 0..2u8 {
            let flips: Vec<(u8, f64)> = if p > 0.0 {
                vec![(0, 1.0 - p), (1, p)]
            } else {
                vec![(0, 1.0)]
            };
            for (f, wf) in flips {
                let bit = a ^ f;
                let mut carriers: Vec<Carrier> = Vec::new();
                if q < 1.0 {
                    carriers.push((1.0 - q, alpha, bit, None));
                }
                if q > 0.0 {
                    for e in 0..2u8 {
                        if e == alpha {
                            carriers.push((q * 0.5, e, bit, Some((e, bit))));
                        } else {
                            for o in 0..2u8 {
                                carriers.push((q * 0.25, e, o, Some((e, o))));
                            }
                        }
                    }
                }
                for (wc, cb, cbit, eve) in carriers {
                    for beta in 0..2u8 {
                        if beta == cb {
                            out.push((
                                0.25 * wf * wc * 0.5,
                                Raw {
                                    a,
                                    alpha,
                                    beta,
                                    bob: cbit,
                                    eve,
                                },
                            ));
                        } else {
                            for bob in 0..2u8 {
                                out.push((
                                    0.25 * wf * wc * 0.25,
                                    Raw {
                                        a,
                                        alpha,
                                        beta,
                                        bob,
                                        eve,
                                    },
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn permutation(seed: u64, seed_len: u32, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    if seed_len == 0 {
        return perm;
    }
    let mut st = seed;
    for i in (1..n).rev() {
        let j = ((splitmix(&mut st) as u128 * (i as u128 + 1)) >> 64) as usize;
        perm.swap(i, j);
    }
    perm
}

/// Hamming(7,4) syndromes of zero-padded blocks, one integer per block.
fn syndromes(x: &[u8], perm: &[usize]) -> Vec<u8> {
    let y: Vec<u8> = perm.iter().map(|&k| x[k]).collect();
    y.chunks(7)
        .map(|blk| {
            blk.iter()
                .enumerate()
                .fold(0u8, |s, (p, &b)| if b == 1 { s ^ (p as u8 + 1) } else { s })
        })
        .collect()
}

/// `out_i = xor_j d[i - j + n - 1] x_j` with `d` read MSB-first from `diag`.
fn toeplitz(diag: u64, n: usize, m: usize, x: &[u8]) -> u64 {
    let len = n + m - 1;
    let d = |k: usize| ((diag >> (len - 1 - k)) & 1) as u8;
    let mut out = 0u64;
    for i in 0..m {
        let mut acc = 0u8;
        for (j, &xj) in x.iter().enumerate() {
            acc ^= d(i + n - 1 - j) & xj;
        }
        out = (out << 1) | acc as u64;
    }
    out
}

fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == r)
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
        .collect()
}

pub struct Outcome {
    pub sd: f64,
    pub abort_prob: f64,
    pub total: f64,
}

pub fn sd_raw(s: &Tiny) -> Outcome {
    let paths = raw_signal_paths(s.p, s.q);
    let keys = 1usize << s.ell;
    let mut table: HashMap<Vec<u8>, Vec<f64>> = HashMap::new();
    let (mut ok, mut abort) = (0.0f64, 0.0f64);
    let mut stack: Vec<(f64, Vec<Raw>)> = vec![(1.0, Vec::new())];
    while let Some((w, sigs)) = stack.pop() {
        if sigs.len() < s.lambda {
            for (pw, raw) in &paths {
                let mut next = sigs.clone();
                next.push(*raw);
                stack.push((w * pw, next));
            }
            continue;
        }
        let sifted: Vec<usize> = (0..s.lambda).filter(|&i| sigs[i].alpha == sigs[i].beta).collect();
        if sifted.len() <= s.r {
            abort += w;
            continue;
        }
        let choices = subsets(sifted.len(), s.r);
        let wc = w / choices.len() as f64;
        for sample in choices {
            let errs = sample
                .iter()
                .filter(|&&k| sigs[sifted[k]].a != sigs[sifted[k]].bob)
                .count();
            let n = sifted.len() - s.r;
            if errs as f64 > s.eta0 * s.r as f64 || s.ell > n || s.t > n {
                abort += wc;
                continue;
            }
            ok += wc;
            let x: Vec<u8> = (0..sifted.len())
                .filter(|k| !sample.contains(k))
                .map(|k| sigs[sifted[k]].a)
                .collect();
            let mut view = Vec::new();
            if !s.key_only {
                for g in &sigs {
                    view.extend([g.alpha, g.beta]);
                }
                for &k in &sample {
                    view.extend([k as u8, sigs[sifted[k]].a, sigs[sifted[k]].bob]);
                }
                if s.with_eve {
                    for g in &sigs {
                        view.push(match g.eve {
                            None => 9,
                            Some((e, o)) => 2 * e + o,
                        });
                    }
                }
            }
            let seeds = 1u64 << s.seed_len;
            let s_count = 1u64 << (n + s.ell - 1);
            let sp_count = 1u64 << (n + s.t - 1);
            let leaf = wc / (seeds * s_count * sp_count) as f64;
            for seed in 0..seeds {
                let syn = syndromes(&x, &permutation(seed, s.seed_len, n));
                for sd in 0..s_count {
                    let k = toeplitz(sd, n, s.ell, &x) as usize;
                    for spd in 0..sp_count {
                        let v = toeplitz(spd, n, s.t, &x);
                        let ctx = if s.key_only {
                            Vec::new()
                        } else {
                            let mut c = view.clone();
                            c.push(seed as u8);
                            c.extend(&syn);
                            c.extend([sd as u8, spd as u8, v as u8]);
                            c
                        };
                        table.entry(ctx).or_insert_with(|| vec![0.0; keys])[k] += leaf;
                    }
                }
            }
        }
    }
    let mut sum = 0.0;
    let mut total = 0.0;
    for row in table.values() {
        let pc: f64 = row.iter().sum::<f64>() / ok;
        for &p in row {
            sum += (p / ok - pc / keys as f64).abs();
            total += p / ok;
        }
    }
    Outcome {
        sd: sum / 2.0,
        abort_prob: abort / (ok + abort),
        total,
    }
}
