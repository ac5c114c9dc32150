use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classical::{strictly_within, tv_counts, JointPmf};
use crate::error::{invalid, Error, Result};
use crate::protocol::ball::{joint_counts, sample_iid};
use crate::protocol::seeds::{stream_rng, Stream, SHARED_TRIAL};

/// Largest codeword or bin exponent accepted by either engine.
pub const MAX_EXPONENT: u32 = 1000;
/// Symbol budget `L·n` of a materialized codebook.
pub const MAX_CODEBOOK_SYMBOLS: u128 = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodebookParams {
    pub n: usize,
    /// Bin rate in bits per symbol.
    pub rate: f64,
    /// Codeword rate in bits per symbol.
    pub rate0: f64,
    pub delta: f64,
    pub seed: u64,
}

/// `⌈n·rate⌉`, the base-2 exponent of a codeword or bin count.
pub fn exponent(n: usize, rate: f64) -> Result<u32> {
    if !(rate.is_finite() && rate >= 0.0) {
        return invalid(format!("rate must be finite and nonnegative, got {rate}"));
    }
    let e = (n as f64 * rate).ceil();
    if e > MAX_EXPONENT as f64 {
        return Err(Error::ResourceCap(format!(
            "2^{e} exceeds the 2^{MAX_EXPONENT} index cap; lower n or the rate"
        )));
    }
    Ok(e as u32)
}

impl CodebookParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("block length must be at least 1");
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return invalid(format!("delta must be positive, got {}", self.delta));
        }
        exponent(self.n, self.rate)?;
        exponent(self.n, self.rate0)?;
        Ok(())
    }

    pub fn log2_codewords(&self) -> Result<u32> {
        exponent(self.n, self.rate0)
    }

    pub fn log2_bins(&self) -> Result<u32> {
        exponent(self.n, self.rate)
    }
}

/// Materialized random codebook: `2^{⌈nR0⌉}` codewords drawn i.i.d. from
/// `p_U`, each hashed to a uniform bin in `[2^{⌈nR⌉}]`.
///
/// Bin indices are exact for exponents up to 128; beyond that each codeword
/// carries a uniform 128-bit label instead.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    n: usize,
    log2_bins: u32,
    words: Vec<u8>,
    bins: Vec<u128>,
}

pub(crate) fn bin_label<R: Rng>(rng: &mut R, log2_bins: u32) -> u128 {
    match log2_bins {
        0 => 0,
        b if b < 128 => rng.gen::<u128>() >> (128 - b),
        _ => rng.gen::<u128>(),
    }
}

impl Codebook {
    /// Draws codewords from `cw_rng` and bins from `bin_rng`, both in index
    /// order, so a larger codebook from the same streams extends a smaller one.
    pub(crate) fn realize<R: Rng>(
        n: usize,
        log2_codewords: u32,
        log2_bins: u32,
        p_u: &[f64],
        cw_rng: &mut R,
        bin_rng: &mut R,
    ) -> Result<Self> {
        let size = 1u128.checked_shl(log2_codewords).unwrap_or(u128::MAX);
        if size.saturating_mul(n as u128) > MAX_CODEBOOK_SYMBOLS {
            return Err(Error::ResourceCap(format!(
                "codebook of 2^{log2_codewords} words of length {n} exceeds 2^30 symbols; \
                 lower n or R0, or use the lazy engine"
            )));
        }
        let size = size as usize;
        let mut words = Vec::with_capacity(size * n);
        for _ in 0..size {
            words.extend(sample_iid(cw_rng, p_u, n));
        }
        let bins = (0..size).map(|_| bin_label(bin_rng, log2_bins)).collect();
        Ok(Self {
            n,
            log2_bins,
            words,
            bins,
        })
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    pub fn log2_bins(&self) -> u32 {
        self.log2_bins
    }

    pub fn codeword(&self, ell: usize) -> &[u8] {
        &self.words[ell * self.n..(ell + 1) * self.n]
    }

    pub fn bin(&self, ell: usize) -> u128 {
        self.bins[ell]
    }

    /// Smallest index whose codeword passes `typical`, restricted to bin `m`
    /// when given.
    pub(crate) fn first_match(&self, m: Option<u128>, typical: impl Fn(&[u8]) -> bool) -> Option<usize> {
        (0..self.len()).find(|&l| m.is_none_or(|m| self.bins[l] == m) && typical(self.codeword(l)))
    }
}

/// Builds the codebook for `params` over the single-variable pmf `p_u`, using
/// the shared codebook streams of `params.seed`.
pub fn build_codebook(params: &CodebookParams, p_u: &JointPmf<f64>) -> Result<Codebook> {
    params.validate()?;
    if p_u.variables().len() != 1 {
        return invalid("codeword pmf must be over a single variable");
    }
    if p_u.probs().len() > u8::MAX as usize + 1 {
        return invalid("codeword alphabet is limited to 256 symbols");
    }
    let mut cw = stream_rng(params.seed, SHARED_TRIAL, Stream::YCodebook);
    let mut bins = stream_rng(params.seed, SHARED_TRIAL, Stream::YBins);
    Codebook::realize(
        params.n,
        params.log2_codewords()?,
        params.log2_bins()?,
        p_u.probs(),
        &mut cw,
        &mut bins,
    )
}

/// Flattens aligned label sequences to row-major indices over their
/// alphabets and checks that `target` is over those alphabets plus one
/// trailing codeword variable.
pub(crate) fn flatten(seqs: &[&[usize]], target: &JointPmf<f64>, n: usize) -> Result<(Vec<usize>, usize, usize)> {
    let shape = target.shape();
    if shape.len() != seqs.len() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "target has {} variables, expected {} inputs plus the codeword",
            shape.len(),
            seqs.len()
        )));
    }
    let mut labels = vec![0usize; n];
    for (k, seq) in seqs.iter().enumerate() {
        if seq.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "sequence {k} has length {}, expected {n}",
                seq.len()
            )));
        }
        for (i, &s) in seq.iter().enumerate() {
            if s >= shape[k] {
                return invalid(format!("symbol {s} out of range in sequence {k}"));
            }
            labels[i] = labels[i] * shape[k] + s;
        }
    }
    let ns: usize = shape[..seqs.len()].iter().product();
    Ok((labels, ns, shape[seqs.len()]))
}

/// Outcome of one encoder or decoder search. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Search {
    pub index: usize,
    pub fallback: bool,
}

/// Smallest `ℓ` with `(inputs, u^n(ℓ))` jointly typical at `radius` against
/// `target` (whose last variable is the codeword); `ℓ = 0` with the
/// fallback flag when there is none. The bin index is `cb.bin(ℓ)`.
pub fn encode_generic(cb: &Codebook, inputs: &[&[usize]], target: &JointPmf<f64>, radius: f64) -> Result<Search> {
    let (labels, ns, nu) = flatten(inputs, target, cb.block_length())?;
    let n = cb.block_length();
    let found = cb.first_match(None, |u| {
        strictly_within(tv_counts(&joint_counts(&labels, ns, u, nu), n, target.probs()), radius)
    });
    Ok(match found {
        Some(index) => Search { index, fallback: false },
        None => Search {
            index: 0,
            fallback: true,
        },
    })
}

/// Smallest `ℓ` in bin `m` with `(side, u^n(ℓ))` jointly typical at `radius`;
/// `ℓ = 0` with the fallback flag when there is none.
pub fn decode_generic(
    cb: &Codebook,
    side: &[&[usize]],
    m: u128,
    target: &JointPmf<f64>,
    radius: f64,
) -> Result<Search> {
    let (labels, ns, nu) = flatten(side, target, cb.block_length())?;
    let n = cb.block_length();
    let found = cb.first_match(Some(m), |u| {
        strictly_within(tv_counts(&joint_counts(&labels, ns, u, nu), n, target.probs()), radius)
    });
    Ok(match found {
        Some(index) => Search { index, fallback: false },
        None => Search {
            index: 0,
            fallback: true,
        },
    })
}
