use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{counts_within, strictly_within, tv_counts, ToleranceSchedule};
use crate::error::{invalid, Error, Result};
use crate::model::{NetworkKind, ValidatedExtension};
use crate::protocol::ball::{ln_factorials, sample_iid};
use crate::protocol::codebook::{exponent, Codebook, MAX_CODEBOOK_SYMBOLS};
use crate::protocol::coder::{self, CodeIndices, Coded, Problem, Side};
use crate::protocol::seeds::{derive_seed, stream_rng, Stream, SHARED_TRIAL};
use crate::quantum::{ComplexMatrix, DensityOperator};

/// How codebooks are realized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Explicit when the codebook fits the symbol budget, lazy otherwise.
    #[default]
    Auto,
    Explicit,
    Lazy,
}

/// Parameters of a simulation run. Rates are in bits per symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub n: usize,
    pub delta: f64,
    pub seed: u64,
    pub trials: usize,
    #[serde(default)]
    pub engine: Engine,
    /// `γ = gamma_factor·δ`; defaults to the product of the classical
    /// alphabet sizes of the extension.
    #[serde(default)]
    pub gamma_factor: Option<f64>,
    /// Bin rate of the `Y` codebook (`R_{1→2}` for two nodes, `R′` for the
    /// cascade).
    pub rate: f64,
    /// Codeword rate of the `Y` codebook; defaults to the covering rate
    /// plus `2γ`.
    #[serde(default)]
    pub rate0: Option<f64>,
    /// Bin rate of the `Z` codebook (`R″ = R_{2→3}`); cascade only.
    #[serde(default)]
    pub rate_z: Option<f64>,
    #[serde(default)]
    pub rate0_z: Option<f64>,
}

/// Record of one simulated block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationTrace {
    pub trial: u64,
    pub source: Vec<u8>,
    pub source_typical: bool,
    /// Alice's choice and Bob's decoding in the `Y` codebook.
    pub y: CodeIndices,
    /// Alice's choice and Bob's decoding in the `Z` codebook (cascade).
    pub z: Option<CodeIndices>,
    /// Charlie's index in the `Z` codebook (cascade).
    pub charlie_index: Option<f64>,
    pub bob_charlie_match: bool,
    /// Joint counts `N(x, y, z)` of the source and the decoded codewords,
    /// row-major with `z` fastest. These determine the averaged state.
    pub counts: Vec<u64>,
    /// Total variation between the joint type of the source and decoded
    /// codewords and the extension's pmf.
    pub decoded_tv: f64,
    /// `decoded_tv < γ`.
    pub decoded_typical: bool,
    pub distance_to_target: f64,
    pub distance_to_tau: f64,
}

/// Outcome of a run together with the resolved parameters.
#[derive(Debug, Clone, Serialize)]
pub struct Simulation {
    pub kind: NetworkKind,
    pub n: usize,
    pub delta: f64,
    pub gamma: f64,
    pub rate: f64,
    pub rate0: f64,
    pub rate_z: Option<f64>,
    pub rate0_z: Option<f64>,
    pub engine_y: Engine,
    pub engine_z: Option<Engine>,
    pub source_seed: u64,
    pub codebook_seed: u64,
    /// Whether one codebook realization was shared by every trial.
    pub codebook_fixed: bool,
    pub traces: Vec<SimulationTrace>,
}

impl Simulation {
    pub fn distances(&self) -> Vec<f64> {
        self.traces.iter().map(|t| t.distance_to_target).collect()
    }

    pub fn mean_distance(&self) -> f64 {
        self.traces.iter().map(|t| t.distance_to_target).sum::<f64>() / self.traces.len() as f64
    }

    pub fn median_distance(&self) -> f64 {
        quantile(&self.distances(), 0.5)
    }
}

/// Linear-interpolation quantile of an unsorted sample.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// One codebook of the scheme with its resolved sizes.
#[derive(Debug, Clone)]
struct Book {
    p_u: Vec<f64>,
    log2_codewords: u32,
    log2_bins: u32,
    engine: Engine,
    cw_stream: Stream,
    bin_stream: Stream,
}

impl Book {
    fn new(n: usize, p_u: Vec<f64>, rate: f64, rate0: f64, engine: Engine, streams: (Stream, Stream)) -> Result<Self> {
        let log2_codewords = exponent(n, rate0)?;
        let log2_bins = exponent(n, rate)?;
        let fits = 1u128
            .checked_shl(log2_codewords)
            .is_some_and(|l| l.saturating_mul(n as u128) <= MAX_CODEBOOK_SYMBOLS);
        let engine = match engine {
            Engine::Auto if fits => Engine::Explicit,
            Engine::Auto => Engine::Lazy,
            e => e,
        };
        Ok(Self {
            p_u,
            log2_codewords,
            log2_bins,
            engine,
            cw_stream: streams.0,
            bin_stream: streams.1,
        })
    }

    fn realize(&self, n: usize, seed: u64, trial: u64) -> Result<Codebook> {
        let mut cw = stream_rng(seed, trial, self.cw_stream);
        let mut bins = stream_rng(seed, trial, self.bin_stream);
        Codebook::realize(n, self.log2_codewords, self.log2_bins, &self.p_u, &mut cw, &mut bins)
    }

    fn run(&self, pb: &Problem<'_>, fixed: Option<&Codebook>, n: usize, seed: u64, trial: u64) -> Result<Coded> {
        if let Some(cb) = fixed {
            return Ok(coder::explicit(pb, cb));
        }
        match self.engine {
            Engine::Lazy => {
                let mut cw = stream_rng(seed, trial, self.cw_stream);
                let mut bins = stream_rng(seed, trial, self.bin_stream);
                coder::lazy(pb, &mut cw, &mut bins)
            }
            _ => Ok(coder::explicit(pb, &self.realize(n, seed, trial)?)),
        }
    }
}

/// Codebooks shared by every trial of a run.
pub(crate) struct FixedBooks {
    y: Codebook,
    z: Option<Codebook>,
}

/// Prepared run: resolved rates, codebook sizes, target pmfs and the
/// product states `σ_A^x ⊗ σ_B^y (⊗ σ_C^z)` for every label triple.
pub struct Simulator {
    ext: ValidatedExtension,
    spec: SimSpec,
    tol: ToleranceSchedule,
    nx: usize,
    ny: usize,
    nz: usize,
    p_x: Vec<f64>,
    /// `p(x, y, z)`.
    p_xyz: Vec<f64>,
    y_book: Book,
    z_book: Option<Book>,
    /// `p(x, z, y)` for the cascade `Y` encoder, `p(x, y)` otherwise.
    y_enc_target: Vec<f64>,
    /// `p(z, y)` for the cascade `Y` decoder, `p(y)` otherwise.
    y_dec_target: Vec<f64>,
    p_xz: Vec<f64>,
    p_z: Vec<f64>,
    atoms: Vec<ComplexMatrix<f64>>,
    omega: DensityOperator<f64>,
    lnfact: Vec<f64>,
}

fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter().filter(|&&q| q > 0.0).map(|&q| q * q.log2()).sum::<f64>()
}

/// `I(A;B)` of a row-major joint `p(a, b)` with `nb` columns.
pub(crate) fn mutual_information(p: &[f64], nb: usize) -> f64 {
    let na = p.len() / nb;
    let pa: Vec<f64> = (0..na).map(|a| p[a * nb..(a + 1) * nb].iter().sum()).collect();
    let pb: Vec<f64> = (0..nb).map(|b| (0..na).map(|a| p[a * nb + b]).sum()).collect();
    (entropy_bits(&pa) + entropy_bits(&pb) - entropy_bits(p)).max(0.0)
}

impl Simulator {
    pub fn new(ext: &ValidatedExtension, spec: &SimSpec) -> Result<Self> {
        let kind = ext.kind();
        if kind == NetworkKind::Isolated {
            return invalid("the isolated-node network has no simulated protocol");
        }
        if spec.n == 0 {
            return invalid("block length must be at least 1");
        }
        if spec.trials == 0 {
            return invalid("at least one trial is required");
        }
        let e = ext.extension();
        let (nx, ny, nz) = (e.num_x(), e.num_y(), e.num_z());
        if ny > 256 || nz > 256 {
            return invalid("codeword alphabets are limited to 256 symbols");
        }
        let factor = spec.gamma_factor.unwrap_or((nx * ny * nz) as f64);
        let tol = ToleranceSchedule::new(spec.delta, factor)?;
        let gamma = tol.gamma();

        let mut p_xyz = vec![0.0; nx * ny * nz];
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    p_xyz[(x * ny + y) * nz + z] = e.p(x, y, z);
                }
            }
        }
        let p_x: Vec<f64> = (0..nx).map(|x| e.p_x(x)).collect();
        let mut p_xz = vec![0.0; nx * nz];
        let mut p_xzy = vec![0.0; nx * nz * ny];
        let mut p_zy = vec![0.0; nz * ny];
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    let p = p_xyz[(x * ny + y) * nz + z];
                    p_xz[x * nz + z] += p;
                    p_xzy[(x * nz + z) * ny + y] += p;
                    p_zy[z * ny + y] += p;
                }
            }
        }
        let p_z: Vec<f64> = (0..nz).map(|z| (0..ny).map(|y| p_zy[z * ny + y]).sum()).collect();
        let p_y: Vec<f64> = (0..ny).map(|y| (0..nz).map(|z| p_zy[z * ny + y]).sum()).collect();

        let (y_book, z_book, y_enc_target, y_dec_target) = match kind {
            NetworkKind::TwoNode => {
                if spec.rate_z.is_some() || spec.rate0_z.is_some() {
                    return invalid("rate_z and rate0_z apply to the cascade only");
                }
                let rate0 = spec.rate0.unwrap_or(mutual_information(&p_xzy, ny) + 2.0 * gamma);
                let y = Book::new(
                    spec.n,
                    p_y,
                    spec.rate,
                    rate0,
                    spec.engine,
                    (Stream::YCodebook, Stream::YBins),
                )?;
                (y, None, p_xzy, p_zy)
            }
            _ => {
                let Some(rate_z) = spec.rate_z else {
                    return invalid("the cascade needs rate_z, the rate of the Bob-to-Charlie link");
                };
                let rate0_z = spec.rate0_z.unwrap_or(mutual_information(&p_xz, nz) + 2.0 * gamma);
                let rate0 = spec.rate0.unwrap_or(mutual_information(&p_xzy, ny) + 2.0 * gamma);
                let z = Book::new(
                    spec.n,
                    p_z.clone(),
                    rate_z,
                    rate0_z,
                    spec.engine,
                    (Stream::ZCodebook, Stream::ZBins),
                )?;
                let y = Book::new(
                    spec.n,
                    p_y,
                    spec.rate,
                    rate0,
                    spec.engine,
                    (Stream::YCodebook, Stream::YBins),
                )?;
                (y, Some(z), p_xzy, p_zy)
            }
        };

        let mut atoms = Vec::with_capacity(nx * ny * nz);
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    atoms.push(e.atoms_a()[x].tensor(&e.rest_atom(y, z)?)?.matrix().clone());
                }
            }
        }
        Ok(Self {
            ext: ext.clone(),
            spec: spec.clone(),
            tol,
            nx,
            ny,
            nz,
            p_x,
            p_xyz,
            y_book,
            z_book,
            y_enc_target,
            y_dec_target,
            p_xz,
            p_z,
            atoms,
            omega: ext.target().average_state()?,
            lnfact: ln_factorials(spec.n),
        })
    }

    pub fn extension(&self) -> &ValidatedExtension {
        &self.ext
    }

    pub fn spec(&self) -> &SimSpec {
        &self.spec
    }

    pub fn tolerances(&self) -> &ToleranceSchedule {
        &self.tol
    }

    /// Runs every trial with codebooks drawn afresh per trial from `seed`.
    pub fn run(&self) -> Result<Simulation> {
        self.run_with(self.spec.seed, self.spec.seed, false)
    }

    /// Runs with sources from `source_seed` and codebooks from
    /// `codebook_seed`. With `fix_codebook`, one realization is shared by all
    /// trials where the engine allows it.
    pub fn run_with(&self, source_seed: u64, codebook_seed: u64, fix_codebook: bool) -> Result<Simulation> {
        let explicit = |b: &Book| b.engine == Engine::Explicit;
        let fixed = if fix_codebook && explicit(&self.y_book) && self.z_book.as_ref().is_none_or(explicit) {
            Some(FixedBooks {
                y: self.y_book.realize(self.spec.n, codebook_seed, SHARED_TRIAL)?,
                z: match &self.z_book {
                    Some(b) => Some(b.realize(self.spec.n, codebook_seed, SHARED_TRIAL)?),
                    None => None,
                },
            })
        } else {
            None
        };
        let traces = (0..self.spec.trials as u64)
            .into_par_iter()
            .map(|t| self.trial(t, source_seed, codebook_seed, fixed.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Simulation {
            kind: self.ext.kind(),
            n: self.spec.n,
            delta: self.spec.delta,
            gamma: self.tol.gamma(),
            rate: self.spec.rate,
            rate0: self.spec.rate0.unwrap_or(self.default_rate0(&self.y_book)),
            rate_z: self.spec.rate_z,
            rate0_z: self
                .z_book
                .as_ref()
                .map(|b| self.spec.rate0_z.unwrap_or(self.default_rate0(b))),
            engine_y: self.y_book.engine,
            engine_z: self.z_book.as_ref().map(|b| b.engine),
            source_seed,
            codebook_seed,
            codebook_fixed: fixed.is_some(),
            traces,
        })
    }

    fn default_rate0(&self, book: &Book) -> f64 {
        let gamma = self.tol.gamma();
        if book.cw_stream == Stream::ZCodebook {
            mutual_information(&self.p_xz, self.nz) + 2.0 * gamma
        } else {
            mutual_information(&self.y_enc_target, self.ny) + 2.0 * gamma
        }
    }

    fn trial(
        &self,
        trial: u64,
        source_seed: u64,
        codebook_seed: u64,
        fixed: Option<&FixedBooks>,
    ) -> Result<SimulationTrace> {
        let n = self.spec.n;
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        let mut src = ChaCha8Rng::seed_from_u64(derive_seed(source_seed, trial, Stream::Source));
        let x = sample_iid(&mut src, &self.p_x, n);
        let xl: Vec<usize> = x.iter().map(|&s| s as usize).collect();
        let mut x_counts = vec![0u64; nx];
        for &s in &xl {
            x_counts[s] += 1;
        }
        let source_typical = counts_within(&x_counts, n, &self.p_x, self.tol.source_radius());
        let enc_r = self.tol.encode_radius();
        let dec_r = self.tol.decode_radius();
        let zeros = vec![0usize; n];

        // Z stage: Alice covers x with a Z codeword; Bob and Charlie decode
        // the same bin with the same rule.
        let (z_stage, z_star, z_hat) = match &self.z_book {
            Some(book) => {
                let pb = Problem {
                    p_u: &book.p_u,
                    enc: Side {
                        labels: &xl,
                        num_labels: nx,
                        target: &self.p_xz,
                        radius: enc_r,
                    },
                    dec: Side {
                        labels: &zeros,
                        num_labels: 1,
                        target: &self.p_z,
                        radius: dec_r,
                    },
                    nested: Some(vec![0; nx]),
                    source_typical,
                    log2_codewords: book.log2_codewords,
                    log2_bins: book.log2_bins,
                    lnfact: &self.lnfact,
                };
                let coded = book.run(&pb, fixed.and_then(|f| f.z.as_ref()), n, codebook_seed, trial)?;
                let sent: Vec<usize> = coded.sent.iter().map(|&u| u as usize).collect();
                let dec: Vec<usize> = coded.decoded.iter().map(|&u| u as usize).collect();
                (Some(coded.idx), sent, dec)
            }
            None => (None, zeros.clone(), zeros.clone()),
        };

        // Y stage: encoder labels (x, z*), decoder labels ẑ.
        let enc_labels: Vec<usize> = xl.iter().zip(&z_star).map(|(&a, &c)| a * nz + c).collect();
        let nested = (z_star == z_hat).then(|| (0..nx * nz).map(|s| s % nz).collect());
        let pb = Problem {
            p_u: &self.y_book.p_u,
            enc: Side {
                labels: &enc_labels,
                num_labels: nx * nz,
                target: &self.y_enc_target,
                radius: enc_r,
            },
            dec: Side {
                labels: &z_hat,
                num_labels: nz,
                target: &self.y_dec_target,
                radius: dec_r,
            },
            nested,
            source_typical,
            log2_codewords: self.y_book.log2_codewords,
            log2_bins: self.y_book.log2_bins,
            lnfact: &self.lnfact,
        };
        let y_coded = self.y_book.run(&pb, fixed.map(|f| &f.y), n, codebook_seed, trial)?;

        let mut counts = vec![0u64; nx * ny * nz];
        for i in 0..n {
            counts[(xl[i] * ny + y_coded.decoded[i] as usize) * nz + z_hat[i]] += 1;
        }
        let decoded_tv = tv_counts(&counts, n, &self.p_xyz);
        let rho = self.rho_bar(&counts)?;
        let tau = self.ext.target().type_weighted_state(&x_counts)?;
        Ok(SimulationTrace {
            trial,
            source: x,
            source_typical,
            y: y_coded.idx,
            z: z_stage,
            charlie_index: z_stage.map(|s| s.ell_hat),
            bob_charlie_match: true,
            counts,
            decoded_tv,
            decoded_typical: strictly_within(decoded_tv, self.tol.gamma()),
            distance_to_target: rho.trace_distance(&self.omega)?,
            distance_to_tau: rho.trace_distance(&tau)?,
        })
    }

    /// `ρ̄ = Σ N(x,y,z)/n · σ_A^x ⊗ σ_B^y (⊗ σ_C^z)`.
    pub fn rho_bar(&self, counts: &[u64]) -> Result<DensityOperator<f64>> {
        if counts.len() != self.atoms.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} counts for {} label triples",
                counts.len(),
                self.atoms.len()
            )));
        }
        let n: u64 = counts.iter().sum();
        let d = self.atoms[0].rows();
        let mut acc = ComplexMatrix::zeros(d, d);
        for (c, a) in counts.iter().zip(&self.atoms) {
            if *c > 0 {
                acc.axpy(*c as f64 / n as f64, a)?;
            }
        }
        DensityOperator::new(acc, "rho_bar")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;

    fn decomposition_b() -> ValidatedExtension {
        ValidatedExtension::self_consistent(families::example1_decomposition_b().unwrap()).unwrap()
    }

    fn spec(n: usize, rate: f64, engine: Engine) -> SimSpec {
        SimSpec {
            n,
            delta: 0.05,
            seed: 11,
            trials: 8,
            engine,
            gamma_factor: None,
            rate,
            rate0: None,
            rate_z: None,
            rate0_z: None,
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let sim = Simulator::new(&decomposition_b(), &spec(60, 0.5, Engine::Lazy)).unwrap();
        let a = sim.run().unwrap();
        let b = sim.run().unwrap();
        assert_eq!(a.traces, b.traces);
    }

    #[test]
    fn averaged_states_are_density_operators() {
        let mut s = spec(40, 0.4, Engine::Explicit);
        s.rate0 = Some(0.4);
        let sim = Simulator::new(&decomposition_b(), &s).unwrap();
        let run = sim.run().unwrap();
        for t in &run.traces {
            assert_eq!(t.counts.iter().sum::<u64>(), 40);
            sim.rho_bar(&t.counts).unwrap();
            assert!((0.0..=1.0).contains(&t.distance_to_target));
        }
    }

    #[test]
    fn auto_engine_respects_the_symbol_budget() {
        let small = Simulator::new(&decomposition_b(), &spec(20, 0.4, Engine::Auto)).unwrap();
        assert_eq!(small.y_book.engine, Engine::Explicit);
        let big = Simulator::new(&decomposition_b(), &spec(400, 0.4, Engine::Auto)).unwrap();
        assert_eq!(big.y_book.engine, Engine::Lazy);
    }

    #[test]
    fn explicit_oversized_codebook_is_rejected() {
        let sim = Simulator::new(&decomposition_b(), &spec(400, 0.4, Engine::Explicit)).unwrap();
        assert!(matches!(sim.run(), Err(Error::ResourceCap(_))));
    }

    #[test]
    fn degenerate_source_reaches_the_target_with_ample_codebook() {
        let ext = ValidatedExtension::self_consistent(families::example2(0.0).unwrap()).unwrap();
        let mut s = spec(200, 1.2, Engine::Lazy);
        s.trials = 4;
        let run = Simulator::new(&ext, &s).unwrap().run().unwrap();
        // Y = X here, so a correct decode reproduces the target up to the
        // source type fluctuation.
        for t in &run.traces {
            assert!(t.distance_to_target < 0.15, "{}", t.distance_to_target);
        }
    }

    #[test]
    fn cascade_requires_the_second_rate() {
        let ext = ValidatedExtension::self_consistent(families::bsc_cascade(0.1).unwrap()).unwrap();
        assert!(Simulator::new(&ext, &spec(20, 0.5, Engine::Auto)).is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(quantile(&[0.0, 1.0], 0.25), 0.25);
    }
}
