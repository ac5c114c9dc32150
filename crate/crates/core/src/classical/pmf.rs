use std::collections::HashSet;

use crate::error::{invalid, Error, Result};
use crate::scalar::{plog2p, Real};

/// Largest dense table a [`JointPmf`] may hold.
pub const MAX_TABLE: usize = 1_000_000;

/// Finite alphabet of a named classical variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    name: String,
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, symbols: Vec<String>) -> Result<Self> {
        let name = name.into();
        if symbols.is_empty() {
            return invalid(format!("alphabet `{name}` is empty"));
        }
        let mut seen = HashSet::new();
        for s in &symbols {
            if !seen.insert(s.as_str()) {
                return invalid(format!("alphabet `{name}` repeats symbol `{s}`"));
            }
        }
        Ok(Self { name, symbols })
    }

    /// Symbols `"0", "1", ..., "size-1"`.
    pub fn indexed(name: impl Into<String>, size: usize) -> Result<Self> {
        Self::new(name, (0..size).map(|i| i.to_string()).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn position(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            symbols: self.symbols.clone(),
        }
    }
}

/// Dense joint distribution over named variables.
///
/// The table is row-major over the variable order: the first variable varies
/// slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf<T> {
    variables: Vec<Alphabet>,
    probs: Vec<T>,
}

impl<T: Real> JointPmf<T> {
    /// Validates entries and total mass. A mass within `pmf_tol` of one is
    /// divided out unless it is off by rounding only.
    pub fn new(variables: Vec<Alphabet>, probs: Vec<T>) -> Result<Self> {
        let size = table_size(&variables)?;
        if probs.len() != size {
            return Err(Error::DimensionMismatch(format!(
                "pmf table needs {size} entries, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < T::zero()) {
            return invalid(format!("pmf entry {p} is negative or not finite"));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > T::pmf_tol() {
            return invalid(format!("pmf sums to {total}"));
        }
        let rounding = T::epsilon() * T::from_usize(4 * size).unwrap_or_else(T::one);
        let probs = if (total - T::one()).abs() <= rounding {
            probs
        } else {
            probs.into_iter().map(|p| p / total).collect()
        };
        Ok(Self { variables, probs })
    }

    /// Builds from sparse `(symbol indices, probability)` entries; missing cells are zero.
    pub fn from_entries(variables: Vec<Alphabet>, entries: &[(Vec<usize>, T)]) -> Result<Self> {
        let size = table_size(&variables)?;
        let mut probs = vec![T::zero(); size];
        for (tuple, p) in entries {
            let idx = flat_index(&variables, tuple)?;
            probs[idx] += *p;
        }
        Self::new(variables, probs)
    }

    pub fn uniform(variables: Vec<Alphabet>) -> Result<Self> {
        let size = table_size(&variables)?;
        let w = T::one() / T::from_usize(size).unwrap_or_else(T::one);
        Self::new(variables, vec![w; size])
    }

    pub fn variables(&self) -> &[Alphabet] {
        &self.variables
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// Alphabet sizes in variable order.
    pub fn shape(&self) -> Vec<usize> {
        self.variables.iter().map(Alphabet::len).collect()
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn index_of(&self, tuple: &[usize]) -> Result<usize> {
        flat_index(&self.variables, tuple)
    }

    pub fn get(&self, tuple: &[usize]) -> Result<T> {
        Ok(self.probs[self.index_of(tuple)?])
    }

    /// Decodes a flat index into its symbol tuple.
    pub fn tuple_of(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.variables.len()];
        for (slot, a) in out.iter_mut().zip(&self.variables).rev() {
            *slot = flat % a.len();
            flat /= a.len();
        }
        out
    }

    /// Marginal on the named variables, in the order given.
    pub fn marginal(&self, names: &[&str]) -> Result<Self> {
        if names.is_empty() {
            return invalid("marginal over an empty variable set");
        }
        let idx = names.iter().map(|n| self.var_index(n)).collect::<Result<Vec<_>>>()?;
        let mut seen = HashSet::new();
        for n in names {
            if !seen.insert(*n) {
                return Err(Error::OverlappingVariables(n.to_string()));
            }
        }
        let vars: Vec<Alphabet> = idx.iter().map(|&i| self.variables[i].clone()).collect();
        let mut probs = vec![T::zero(); table_size(&vars)?];
        for (flat, &p) in self.probs.iter().enumerate() {
            if p == T::zero() {
                continue;
            }
            let t = self.tuple_of(flat);
            let sub: Vec<usize> = idx.iter().map(|&i| t[i]).collect();
            probs[flat_index(&vars, &sub)?] += p;
        }
        Ok(Self { variables: vars, probs })
    }

    /// Shannon entropy of the marginal on `names`, in bits.
    pub fn entropy(&self, names: &[&str]) -> Result<T> {
        Ok(self.marginal(names)?.probs.iter().map(|&p| plog2p(p)).sum())
    }

    /// `I(A;B) = H(A) + H(B) − H(AB)`.
    pub fn mutual_information(&self, a: &[&str], b: &[&str]) -> Result<T> {
        disjoint(&[a, b])?;
        let ab: Vec<&str> = a.iter().chain(b).copied().collect();
        Ok(self.entropy(a)? + self.entropy(b)? - self.entropy(&ab)?)
    }

    /// `I(A;B|C) = H(AC) + H(BC) − H(ABC) − H(C)`; an empty `c` gives `I(A;B)`.
    pub fn conditional_mutual_information(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<T> {
        if c.is_empty() {
            return self.mutual_information(a, b);
        }
        disjoint(&[a, b, c])?;
        let ac: Vec<&str> = a.iter().chain(c).copied().collect();
        let bc: Vec<&str> = b.iter().chain(c).copied().collect();
        let abc: Vec<&str> = a.iter().chain(b).chain(c).copied().collect();
        Ok(self.entropy(&ac)? + self.entropy(&bc)? - self.entropy(&abc)? - self.entropy(c)?)
    }

    /// `½ Σ |p − q|`.
    pub fn total_variation(&self, other: &Self) -> Result<T> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "total variation between shapes {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(total_variation_slices(&self.probs, &other.probs))
    }

    /// Same table with the variables renamed positionally.
    pub fn renamed(&self, names: &[&str]) -> Result<Self> {
        if names.len() != self.variables.len() {
            return invalid("rename needs one name per variable");
        }
        let variables = self.variables.iter().zip(names).map(|(a, n)| a.renamed(*n)).collect();
        Ok(Self {
            variables,
            probs: self.probs.clone(),
        })
    }

    pub fn cast<U: Real>(&self) -> JointPmf<U> {
        JointPmf {
            variables: self.variables.clone(),
            probs: self.probs.iter().map(|p| U::lit(p.to_f64_lossy())).collect(),
        }
    }
}

pub(crate) fn total_variation_slices<T: Real>(p: &[T], q: &[T]) -> T {
    let s: T = p.iter().zip(q).map(|(a, b)| (*a - *b).abs()).sum();
    (s * T::lit(0.5)).min(T::one())
}

fn disjoint(sets: &[&[&str]]) -> Result<()> {
    let mut seen = HashSet::new();
    for set in sets {
        if set.is_empty() {
            return invalid("information quantity over an empty variable set");
        }
        for n in *set {
            if !seen.insert(*n) {
                return Err(Error::OverlappingVariables(n.to_string()));
            }
        }
    }
    Ok(())
}

pub(crate) fn table_size(variables: &[Alphabet]) -> Result<usize> {
    if variables.is_empty() {
        return invalid("pmf needs at least one variable");
    }
    let mut names = HashSet::new();
    let mut size = 1usize;
    for a in variables {
        if !names.insert(a.name.as_str()) {
            return invalid(format!("variable `{}` declared twice", a.name));
        }
        size = size.saturating_mul(a.len());
    }
    if size > MAX_TABLE {
        return invalid(format!("table of {size} entries exceeds the {MAX_TABLE} cap"));
    }
    Ok(size)
}

pub(crate) fn flat_index(variables: &[Alphabet], tuple: &[usize]) -> Result<usize> {
    if tuple.len() != variables.len() {
        return Err(Error::DimensionMismatch(format!(
            "tuple of length {} for {} variables",
            tuple.len(),
            variables.len()
        )));
    }
    let mut idx = 0;
    for (&s, a) in tuple.iter().zip(variables) {
        if s >= a.len() {
            return invalid(format!("symbol index {s} outside alphabet `{}`", a.name));
        }
        idx = idx * a.len() + s;
    }
    Ok(idx)
}
