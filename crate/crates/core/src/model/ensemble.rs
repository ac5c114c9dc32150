use crate::classical::{Alphabet, JointPmf};
use crate::error::{invalid, Error, Result};
use crate::quantum::{ComplexMatrix, DensityOperator};

/// Trace-distance gate for factorization and atom identity checks.
pub const STATE_TOL: f64 = 1e-9;

/// Target c-q ensemble `{p_X(x), ω^x}` on registers `A B` or `A B C`.
///
/// Each `ω^x` is split into its `A` marginal and the marginal on the
/// remaining registers. The split is exact only when `ω^x` factorizes; the
/// measured gap is kept so callers can report an empty extension set.
#[derive(Debug, Clone)]
pub struct CqEnsemble {
    source: JointPmf<f64>,
    dims: Vec<usize>,
    states: Vec<DensityOperator<f64>>,
    a_parts: Vec<DensityOperator<f64>>,
    rest_parts: Vec<DensityOperator<f64>>,
    factor_gaps: Vec<f64>,
}

impl CqEnsemble {
    /// `dims` lists the register dimensions `[A, B]` or `[A, B, C]`.
    pub fn new(source: JointPmf<f64>, dims: Vec<usize>, states: Vec<DensityOperator<f64>>) -> Result<Self> {
        if source.variables().len() != 1 {
            return invalid("ensemble source must be a pmf over a single variable");
        }
        if !(dims.len() == 2 || dims.len() == 3) || dims.contains(&0) {
            return invalid(format!("register dims {dims:?} must list A, B and optionally C"));
        }
        let nx = source.variables()[0].len();
        if states.len() != nx {
            return Err(Error::DimensionMismatch(format!(
                "{} states for a source alphabet of size {nx}",
                states.len()
            )));
        }
        let total: usize = dims.iter().product();
        let rest: Vec<usize> = (1..dims.len()).collect();
        let mut a_parts = Vec::with_capacity(nx);
        let mut rest_parts = Vec::with_capacity(nx);
        let mut factor_gaps = Vec::with_capacity(nx);
        for (x, w) in states.iter().enumerate() {
            if w.dim() != total {
                return Err(Error::DimensionMismatch(format!(
                    "state {x} has dim {}, registers need {total}",
                    w.dim()
                )));
            }
            let a = w.partial_trace(&dims, &[0])?;
            let r = w.partial_trace(&dims, &rest)?;
            factor_gaps.push(a.tensor(&r)?.trace_distance(w)?);
            a_parts.push(a);
            rest_parts.push(r);
        }
        Ok(Self {
            source,
            dims,
            states,
            a_parts,
            rest_parts,
            factor_gaps,
        })
    }

    /// `ω^x = a^x ⊗ rest^x`.
    pub fn from_factors(
        source: JointPmf<f64>,
        a_parts: Vec<DensityOperator<f64>>,
        rest_parts: Vec<DensityOperator<f64>>,
        rest_dims: &[usize],
    ) -> Result<Self> {
        if a_parts.len() != rest_parts.len() || a_parts.is_empty() {
            return invalid("one A part and one remainder per source symbol");
        }
        let da = a_parts[0].dim();
        let mut dims = vec![da];
        dims.extend_from_slice(rest_dims);
        let states = a_parts
            .iter()
            .zip(&rest_parts)
            .map(|(a, r)| a.tensor(r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(source, dims, states)
    }

    pub fn source(&self) -> &JointPmf<f64> {
        &self.source
    }

    pub fn source_alphabet(&self) -> &Alphabet {
        &self.source.variables()[0]
    }

    pub fn num_symbols(&self) -> usize {
        self.states.len()
    }

    pub fn p(&self, x: usize) -> f64 {
        self.source.probs()[x]
    }

    /// Register dimensions `[A, B]` or `[A, B, C]`.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn has_c(&self) -> bool {
        self.dims.len() == 3
    }

    pub fn state(&self, x: usize) -> &DensityOperator<f64> {
        &self.states[x]
    }

    pub fn states(&self) -> &[DensityOperator<f64>] {
        &self.states
    }

    pub fn a_part(&self, x: usize) -> &DensityOperator<f64> {
        &self.a_parts[x]
    }

    /// Marginal of `ω^x` on `B` (or `BC`).
    pub fn rest_part(&self, x: usize) -> &DensityOperator<f64> {
        &self.rest_parts[x]
    }

    /// Trace distance between `ω^x` and the product of its marginals.
    pub fn factor_gap(&self, x: usize) -> f64 {
        self.factor_gaps[x]
    }

    /// Fails when some `ω^x` is not a product across `A` and the rest, in
    /// which case no c-q extension exists.
    pub fn require_factorization(&self) -> Result<()> {
        for (x, &g) in self.factor_gaps.iter().enumerate() {
            if g > STATE_TOL && self.p(x) > 0.0 {
                return Err(Error::ValidationFailed(format!(
                    "state for x = `{}` is not a product across A (gap {g:e}); \
                     the extension set is empty and coordination is impossible",
                    self.source_alphabet().symbols()[x]
                )));
            }
        }
        Ok(())
    }

    /// `Σ_x p(x) ω^x`.
    pub fn average_state(&self) -> Result<DensityOperator<f64>> {
        let refs: Vec<&DensityOperator<f64>> = self.states.iter().collect();
        DensityOperator::mixture(self.source.probs(), &refs)
    }

    /// Merges source symbols whose `A` parts coincide. The merged remainder is
    /// the `p`-weighted mixture, so the average state is unchanged. Returns
    /// `None` when no two symbols can be merged; otherwise the coarse ensemble
    /// and the fine-to-coarse symbol map.
    pub fn coarsen(&self) -> Result<Option<(CqEnsemble, Vec<usize>)>> {
        self.require_factorization()?;
        let nx = self.num_symbols();
        let mut map = vec![usize::MAX; nx];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for x in 0..nx {
            if map[x] != usize::MAX {
                continue;
            }
            map[x] = groups.len();
            let mut g = vec![x];
            for (x2, slot) in map.iter_mut().enumerate().skip(x + 1) {
                if *slot == usize::MAX && self.a_parts[x].trace_distance(&self.a_parts[x2])? < STATE_TOL {
                    *slot = groups.len();
                    g.push(x2);
                }
            }
            groups.push(g);
        }
        if groups.len() == nx {
            return Ok(None);
        }
        let symbols = self.source_alphabet().symbols();
        let names: Vec<String> = groups
            .iter()
            .map(|g| g.iter().map(|&x| symbols[x].as_str()).collect::<Vec<_>>().join("|"))
            .collect();
        let alphabet = Alphabet::new(self.source_alphabet().name(), names)?;
        let mut probs = Vec::with_capacity(groups.len());
        let mut a_parts = Vec::with_capacity(groups.len());
        let mut rests = Vec::with_capacity(groups.len());
        for g in &groups {
            let mass: f64 = g.iter().map(|&x| self.p(x)).sum();
            probs.push(mass);
            a_parts.push(self.a_parts[g[0]].clone());
            let weights: Vec<f64> = if mass > 0.0 {
                g.iter().map(|&x| self.p(x) / mass).collect()
            } else {
                vec![1.0 / g.len() as f64; g.len()]
            };
            let members: Vec<&DensityOperator<f64>> = g.iter().map(|&x| &self.rest_parts[x]).collect();
            rests.push(DensityOperator::mixture(&weights, &members)?);
        }
        let source = JointPmf::new(vec![alphabet], probs)?;
        let coarse = Self::from_factors(source, a_parts, rests, &self.dims[1..])?;
        Ok(Some((coarse, map)))
    }

    /// `(1/n) Σ_i ω^{x_i}` computed from symbol counts.
    pub fn type_weighted_state(&self, counts: &[u64]) -> Result<DensityOperator<f64>> {
        let n: u64 = counts.iter().sum();
        if counts.len() != self.num_symbols() || n == 0 {
            return invalid("counts must cover the source alphabet and be nonempty");
        }
        let d = self.states[0].dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for (c, w) in counts.iter().zip(&self.states) {
            if *c > 0 {
                acc.axpy(*c as f64 / n as f64, w.matrix())?;
            }
        }
        DensityOperator::new(acc, "tau")
    }
}
