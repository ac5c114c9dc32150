//! One encode/decode round of the binning code, on either engine.
//!
//! The encoder looks for the smallest codeword index that is jointly typical
//! with its labelled input at the encoder radius; the decoder looks for the
//! smallest index in the received bin that is jointly typical with its side
//! information at the decoder radius. Failures fall back to index 0.
//!
//! The lazy engine never materializes the codebook. Codewords are i.i.d., so
//! the first encoder hit `ℓ*` is geometric with the exact probability `p_A` of
//! the encoder event, earlier codewords are i.i.d. conditioned on missing it,
//! later ones are unconditioned, and bin membership of every other index is
//! an independent coin with probability `1/M`. Only the codewords the decoder
//! actually inspects are drawn.

use std::f64::consts::LN_2;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classical::counts_within;
use crate::error::{Error, Result};
use crate::protocol::ball::{joint_counts, sample_iid, Ball, Constraint};
use crate::protocol::codebook::Codebook;

const REJECTION_TRIES: usize = 10_000;
const SCAN_CAP: usize = 1_000_000;

/// A labelled sequence and the joint pmf (label × codeword symbol) it is
/// tested against.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Side<'a> {
    pub labels: &'a [usize],
    pub num_labels: usize,
    pub target: &'a [f64],
    pub radius: f64,
}

impl Side<'_> {
    fn typical(&self, u: &[u8], nu: usize) -> bool {
        let n = self.labels.len();
        counts_within(
            &joint_counts(self.labels, self.num_labels, u, nu),
            n,
            self.target,
            self.radius,
        )
    }

    fn constraint(&self, inside: bool) -> Constraint<'_> {
        Constraint {
            map: None,
            groups: 0,
            target: self.target,
            radius: self.radius,
            inside,
        }
    }
}

pub(crate) struct Problem<'a> {
    pub p_u: &'a [f64],
    pub enc: Side<'a>,
    pub dec: Side<'a>,
    /// Decoder label of each encoder label when the decoder's labels are a
    /// function of the encoder's and its target is the matching marginal.
    /// The encoder event then implies the decoder event.
    pub nested: Option<Vec<usize>>,
    /// `false` sends the arbitrary transmission `ℓ = 0, m = 0` without search.
    pub source_typical: bool,
    pub log2_codewords: u32,
    pub log2_bins: u32,
    pub lnfact: &'a [f64],
}

/// Indices chosen in one round (0-based). Large indices are stored as `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CodeIndices {
    pub ell: f64,
    /// Bin sent; absent when the engine never realizes it.
    pub m: Option<u128>,
    pub ell_hat: f64,
    pub encoder_fallback: bool,
    pub decoder_fallback: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct Coded {
    pub idx: CodeIndices,
    /// Codeword selected by the encoder.
    pub sent: Vec<u8>,
    /// Codeword output by the decoder.
    pub decoded: Vec<u8>,
}

pub(crate) fn explicit(pb: &Problem<'_>, cb: &Codebook) -> Coded {
    let nu = pb.p_u.len();
    let (ell, m, enc_fb) = if !pb.source_typical {
        (0, 0, false)
    } else {
        match cb.first_match(None, |u| pb.enc.typical(u, nu)) {
            Some(l) => (l, cb.bin(l), false),
            None => (0, cb.bin(0), true),
        }
    };
    let (ell_hat, dec_fb) = match cb.first_match(Some(m), |u| pb.dec.typical(u, nu)) {
        Some(l) => (l, false),
        None => (0, true),
    };
    let m = (cb.log2_bins() <= 128).then_some(m);
    Coded {
        idx: CodeIndices {
            ell: ell as f64,
            m,
            ell_hat: ell_hat as f64,
            encoder_fallback: enc_fb,
            decoder_fallback: dec_fb,
        },
        sent: cb.codeword(ell).to_vec(),
        decoded: cb.codeword(ell_hat).to_vec(),
    }
}

/// Failures before the first success of independent trials with success
/// probability `exp(ln_p)`; `inf` when the probability is zero.
pub(crate) fn geometric<R: Rng>(rng: &mut R, ln_p: f64) -> f64 {
    if ln_p >= 0.0 {
        return 0.0;
    }
    if ln_p == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let e = -(1.0 - rng.gen::<f64>()).ln();
    let p = ln_p.exp();
    if p > 1e-8 {
        (e / -(-p).ln_1p()).floor()
    } else {
        (e.ln() - ln_p).exp().floor()
    }
}

fn bernoulli<R: Rng>(rng: &mut R, ln_p: f64) -> bool {
    rng.gen::<f64>() < ln_p.exp()
}

/// `ln(e^a − e^b)` for `a ≥ b`.
fn ln_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        a
    } else if b >= a {
        f64::NEG_INFINITY
    } else {
        a + (-(b - a).exp_m1()).ln()
    }
}

/// Index and codeword of the first decoder hit in a bin.
type Hit = (f64, Vec<u8>);

struct Lazy<'p, 'a> {
    pb: &'p Problem<'a>,
    nu: usize,
    n: usize,
    ln_pa: f64,
    ln_pt: f64,
}

impl Lazy<'_, '_> {
    fn enc_ball(&self, inside: bool) -> Ball<'_> {
        Ball::new(
            self.pb.enc.labels,
            self.pb.enc.num_labels,
            self.pb.p_u,
            self.pb.lnfact,
            vec![self.pb.enc.constraint(inside)],
        )
    }

    fn dec_ball(&self) -> Ball<'_> {
        Ball::new(
            self.pb.dec.labels,
            self.pb.dec.num_labels,
            self.pb.p_u,
            self.pb.lnfact,
            vec![self.pb.dec.constraint(true)],
        )
    }

    fn cap(what: &str) -> Error {
        Error::ResourceCap(format!("lazy codebook sampling exceeded its budget while {what}"))
    }

    /// Codeword conditioned on missing the encoder event.
    fn sample_not_a(&self, rng: &mut ChaCha8Rng) -> Result<Vec<u8>> {
        let ln_miss = ln_sub(0.0, self.ln_pa);
        if ln_miss > (0.01f64).ln() {
            for _ in 0..REJECTION_TRIES {
                let u = sample_iid(rng, self.pb.p_u, self.n);
                if !self.pb.enc.typical(&u, self.nu) {
                    return Ok(u);
                }
            }
        }
        self.enc_ball(false).sample(rng, ln_miss)
    }

    /// Codeword conditioned on hitting the decoder event but missing the
    /// encoder event. Only used when the encoder event is nested.
    fn sample_t_not_a(&self, rng: &mut ChaCha8Rng, map: &[usize]) -> Result<Vec<u8>> {
        let dec = self.dec_ball();
        for _ in 0..REJECTION_TRIES {
            let u = dec.sample(rng, self.ln_pt)?;
            if !self.pb.enc.typical(&u, self.nu) {
                return Ok(u);
            }
        }
        let ball = Ball::new(
            self.pb.enc.labels,
            self.pb.enc.num_labels,
            self.pb.p_u,
            self.pb.lnfact,
            vec![
                Constraint {
                    map: Some(map.to_vec()),
                    groups: self.pb.dec.num_labels,
                    target: self.pb.dec.target,
                    radius: self.pb.dec.radius,
                    inside: true,
                },
                self.pb.enc.constraint(false),
            ],
        );
        let lm = ball.ln_mass()?;
        ball.sample(rng, lm)
    }

    /// First index in `[start, end)` that lies in the bin and whose codeword,
    /// conditioned on missing the encoder event, passes the decoder test.
    /// Bin members are proposed at rate `P(D) / P(¬A)` with a decoder-ball
    /// codeword and kept when it misses the encoder event, which thins the
    /// proposals to the exact per-index rate `P(D | ¬A) / M`. Falls back to a
    /// member-by-member scan when that proposal rate exceeds one. Returns
    /// whether thinning was used.
    fn find_not_a(
        &self,
        cw: &mut ChaCha8Rng,
        bins: &mut ChaCha8Rng,
        start: f64,
        end: f64,
        zero: &mut Option<Vec<u8>>,
    ) -> Result<(Option<Hit>, bool)> {
        let ln_inv_m = -(self.pb.log2_bins as f64) * LN_2;
        let ln_r = self.ln_pt - ln_sub(0.0, self.ln_pa);
        if ln_r > 0.0 || ln_r.is_nan() {
            let first = start + geometric(bins, ln_inv_m);
            return Ok((self.scan_not_a(cw, bins, first, end, zero)?, false));
        }
        let dec = self.dec_ball();
        let mut pos = start + geometric(bins, ln_r + ln_inv_m);
        let mut steps = 0;
        while pos < end {
            steps += 1;
            if steps > SCAN_CAP {
                return Err(Self::cap("thinning a bin"));
            }
            let u = dec.sample(cw, self.ln_pt)?;
            if !self.pb.enc.typical(&u, self.nu) {
                return Ok((Some((pos, u)), true));
            }
            pos += 1.0 + geometric(bins, ln_r + ln_inv_m);
        }
        Ok((None, true))
    }

    /// Codeword at index 0 given that it was not a thinning hit.
    fn sample_zero_after_thinning(&self, cw: &mut ChaCha8Rng, bins: &mut ChaCha8Rng) -> Result<Vec<u8>> {
        let ln_inv_m = -(self.pb.log2_bins as f64) * LN_2;
        for _ in 0..REJECTION_TRIES {
            let u = self.sample_not_a(cw)?;
            if !(bernoulli(bins, ln_inv_m) && self.pb.dec.typical(&u, self.nu)) {
                return Ok(u);
            }
        }
        Err(Self::cap("resampling codeword 0"))
    }

    /// Scans bin members at `start, start + 1 + G, ...` below `end`, each a
    /// codeword conditioned on missing the encoder event, and returns the
    /// first one passing the decoder test. `zero` records the codeword at
    /// index 0 if it is inspected.
    fn scan_not_a(
        &self,
        cw: &mut ChaCha8Rng,
        bins: &mut ChaCha8Rng,
        start: f64,
        end: f64,
        zero: &mut Option<Vec<u8>>,
    ) -> Result<Option<Hit>> {
        let ln_inv_m = -(self.pb.log2_bins as f64) * LN_2;
        let mut pos = start;
        let mut steps = 0;
        while pos < end {
            steps += 1;
            if steps > SCAN_CAP {
                return Err(Self::cap("scanning a bin"));
            }
            let u = self.sample_not_a(cw)?;
            let hit = self.pb.dec.typical(&u, self.nu);
            if pos == 0.0 {
                *zero = Some(u.clone());
            }
            if hit {
                return Ok(Some((pos, u)));
            }
            pos += 1.0 + geometric(bins, ln_inv_m);
        }
        Ok(None)
    }
}

pub(crate) fn lazy(pb: &Problem<'_>, cw: &mut ChaCha8Rng, bins: &mut ChaCha8Rng) -> Result<Coded> {
    let nu = pb.p_u.len();
    let n = pb.enc.labels.len();
    let size = 2f64.powi(pb.log2_codewords as i32);
    let ln_inv_m = -(pb.log2_bins as f64) * LN_2;
    let mut engine = Lazy {
        pb,
        nu,
        n,
        ln_pa: f64::NEG_INFINITY,
        ln_pt: 0.0,
    };
    engine.ln_pt = engine.dec_ball().ln_mass()?;
    let ln_pt = engine.ln_pt;

    let done =
        |ell: f64, m: Option<u128>, ell_hat: f64, enc_fb: bool, dec_fb: bool, sent: Vec<u8>, decoded: Vec<u8>| Coded {
            idx: CodeIndices {
                ell,
                m,
                ell_hat,
                encoder_fallback: enc_fb,
                decoder_fallback: dec_fb,
            },
            sent,
            decoded,
        };

    if !pb.source_typical {
        // Bin 0 is sent; every codeword is unconditioned.
        let u0 = sample_iid(cw, pb.p_u, n);
        if bernoulli(bins, ln_inv_m) && pb.dec.typical(&u0, nu) {
            return Ok(done(0.0, Some(0), 0.0, false, false, u0.clone(), u0));
        }
        let hit = 1.0 + geometric(bins, ln_pt + ln_inv_m);
        if hit < size {
            let u = engine.dec_ball().sample(cw, ln_pt)?;
            return Ok(done(0.0, Some(0), hit, false, false, u0, u));
        }
        return Ok(done(0.0, Some(0), 0.0, false, true, u0.clone(), u0));
    }

    engine.ln_pa = engine.enc_ball(true).ln_mass()?;
    let ln_pa = engine.ln_pa;
    let ell_star = geometric(cw, ln_pa);
    // Decoder-event probability of a codeword that misses the encoder event,
    // valid when the encoder event implies the decoder event.
    let ln_miss = ln_sub(0.0, ln_pa);
    let ln_q = if ln_miss == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        (ln_sub(ln_pt, ln_pa) - ln_miss).min(0.0)
    };

    if ell_star >= size {
        // No codeword is encoder-typical; index 0 is sent in bin b(0).
        let u0 = engine.sample_not_a(cw)?;
        if pb.dec.typical(&u0, nu) {
            return Ok(done(0.0, None, 0.0, true, false, u0.clone(), u0));
        }
        let found = match &pb.nested {
            Some(map) => {
                let hit = 1.0 + geometric(bins, ln_q + ln_inv_m);
                if hit < size {
                    Some((hit, engine.sample_t_not_a(cw, map)?))
                } else {
                    None
                }
            }
            None => engine.find_not_a(cw, bins, 1.0, size, &mut None)?.0,
        };
        return Ok(match found {
            Some((hit, u)) => done(0.0, None, hit, true, false, u0, u),
            None => done(0.0, None, 0.0, true, true, u0.clone(), u0),
        });
    }

    let u_star = engine.enc_ball(true).sample(cw, ln_pa)?;
    if let Some(map) = &pb.nested {
        let hit = geometric(bins, ln_q + ln_inv_m);
        if hit < ell_star {
            let u = engine.sample_t_not_a(cw, map)?;
            return Ok(done(ell_star, None, hit, false, false, u_star, u));
        }
        return Ok(done(ell_star, None, ell_star, false, false, u_star.clone(), u_star));
    }

    let mut zero = None;
    let (found, thinned) = engine.find_not_a(cw, bins, 0.0, ell_star, &mut zero)?;
    if let Some((hit, u)) = found {
        return Ok(done(ell_star, None, hit, false, false, u_star, u));
    }
    if pb.dec.typical(&u_star, nu) {
        return Ok(done(ell_star, None, ell_star, false, false, u_star.clone(), u_star));
    }
    let hit = ell_star + 1.0 + geometric(bins, ln_pt + ln_inv_m);
    if hit < size {
        let u = engine.dec_ball().sample(cw, ln_pt)?;
        return Ok(done(ell_star, None, hit, false, false, u_star, u));
    }
    let u0 = if ell_star == 0.0 {
        u_star.clone()
    } else {
        match zero {
            Some(u) => u,
            None if thinned => engine.sample_zero_after_thinning(cw, bins)?,
            None => engine.sample_not_a(cw)?,
        }
    };
    Ok(done(ell_star, None, 0.0, false, true, u_star, u0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::collections::HashMap;

    fn histogram_tv(a: &HashMap<Vec<u64>, usize>, b: &HashMap<Vec<u64>, usize>, total: usize) -> f64 {
        let keys: std::collections::HashSet<_> = a.keys().chain(b.keys()).collect();
        keys.into_iter()
            .map(|k| (*a.get(k).unwrap_or(&0) as f64 - *b.get(k).unwrap_or(&0) as f64).abs())
            .sum::<f64>()
            / (2 * total) as f64
    }

    #[test]
    fn lazy_matches_explicit_when_the_events_are_not_nested() {
        // Encoder and decoder label the four slots differently, so a codeword
        // can pass either test alone: P(A) = P(D) = 5/16, P(A ∧ D) = 2/16.
        let target = [0.4, 0.1, 0.1, 0.4];
        let lnfact = crate::protocol::ball::ln_factorials(4);
        let p_u = [0.5, 0.5];
        let trials = 200_000;
        for source_typical in [true, false] {
            let pb = Problem {
                p_u: &p_u,
                enc: Side {
                    labels: &[0, 0, 1, 1],
                    num_labels: 2,
                    target: &target,
                    radius: 0.3,
                },
                dec: Side {
                    labels: &[0, 1, 0, 1],
                    num_labels: 2,
                    target: &target,
                    radius: 0.3,
                },
                nested: None,
                source_typical,
                log2_codewords: 3,
                log2_bins: 1,
                lnfact: &lnfact,
            };
            let mut cw = ChaCha8Rng::seed_from_u64(3);
            let mut bins = ChaCha8Rng::seed_from_u64(4);
            let mut hist = [HashMap::new(), HashMap::new()];
            for _ in 0..trials {
                let cb = Codebook::realize(4, 3, 1, &p_u, &mut cw, &mut bins).unwrap();
                for (h, c) in hist
                    .iter_mut()
                    .zip([explicit(&pb, &cb), lazy(&pb, &mut cw, &mut bins).unwrap()])
                {
                    let word: u64 = c.decoded.iter().fold(0, |acc, &b| acc * 2 + b as u64);
                    let fb = c.idx.decoder_fallback as u64;
                    for key in [
                        vec![0, c.idx.ell_hat as u64, fb],
                        vec![1, word],
                        vec![2, c.idx.ell as u64, word],
                    ] {
                        *h.entry(key).or_insert(0) += 1;
                    }
                }
            }
            let tv = histogram_tv(&hist[0], &hist[1], 3 * trials);
            assert!(tv < 0.01, "source typical {source_typical}: {tv}");
        }
    }

    #[test]
    fn geometric_matches_its_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p: f64 = 0.2;
        let k = 100_000;
        let mean: f64 = (0..k).map(|_| geometric(&mut rng, p.ln())).sum::<f64>() / k as f64;
        assert!((mean - (1.0 - p) / p).abs() < 0.05, "{mean}");
        assert_eq!(geometric(&mut rng, 0.0), 0.0);
        assert_eq!(geometric(&mut rng, f64::NEG_INFINITY), f64::INFINITY);
        let tiny = geometric(&mut rng, -500.0);
        assert!(tiny > 1e200 && tiny.is_finite());
    }

    #[test]
    fn log_subtraction() {
        assert!((ln_sub(0.5f64.ln(), 0.25f64.ln()).exp() - 0.25).abs() < 1e-15);
        assert_eq!(ln_sub(0.0, 0.0), f64::NEG_INFINITY);
        assert_eq!(ln_sub(-1.0, f64::NEG_INFINITY), -1.0);
    }
}
