use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::quantum::eigen::{eigen_hermitian, HermitianEigen};
use crate::quantum::matrix::ComplexMatrix;
use crate::scalar::{plog2p, Real};

/// Default ceiling on composite dimensions produced by [`DensityOperator::tensor`].
pub const MAX_DIM: usize = 1024;

/// Positive semidefinite, unit-trace operator on a finite register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator<T> {
    matrix: ComplexMatrix<T>,
    label: String,
}

impl<T: Real> DensityOperator<T> {
    /// Validates and normalizes. The trace is divided out exactly when it is
    /// within the tolerance gate of one; the stored matrix is the Hermitian part.
    pub fn new(matrix: ComplexMatrix<T>, label: impl Into<String>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "density operator must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let tol = T::state_tol();
        let dev = matrix.hermitian_deviation();
        if dev > tol {
            return Err(Error::NotHermitian(dev.to_f64_lossy()));
        }
        let tr = matrix.trace();
        if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidTrace(tr.re.to_f64_lossy()));
        }
        let mut matrix = matrix.hermitian_part();
        if tr.re != T::one() {
            matrix = matrix.scale(T::one() / tr.re);
        }
        let eig = eigen_hermitian(&matrix)?;
        let min = eig.values.last().copied().unwrap_or(T::zero());
        if min < -tol {
            return Err(Error::NotPsd(min.to_f64_lossy()));
        }
        Ok(Self {
            matrix,
            label: label.into(),
        })
    }

    /// Computational basis projector `|index><index|`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return invalid(format!("basis index {index} out of range for dim {dim}"));
        }
        let mut diag = vec![T::zero(); dim];
        diag[index] = T::one();
        Self::new(ComplexMatrix::from_real_diagonal(&diag), format!("|{index}>"))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        let w = T::one() / T::from_usize(dim).unwrap_or_else(T::one);
        Self::new(ComplexMatrix::from_real_diagonal(&vec![w; dim]), "I/d")
    }

    /// Diagonal state for a classical register.
    pub fn diagonal(probs: &[T]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diagonal(probs), "diag")
    }

    /// `|ψ><ψ|` for a ket, normalized.
    pub fn pure(ket: &[Complex<T>]) -> Result<Self> {
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if norm <= T::zero() {
            return invalid("zero ket");
        }
        let v: Vec<_> = ket.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&v), "pure")
    }

    /// `|+>`.
    pub fn plus() -> Result<Self> {
        let h = Complex::new(T::lit(std::f64::consts::FRAC_1_SQRT_2), T::zero());
        Self::pure(&[h, h]).map(|s| s.with_label("|+>"))
    }

    /// `|->`.
    pub fn minus() -> Result<Self> {
        let h = T::lit(std::f64::consts::FRAC_1_SQRT_2);
        Self::pure(&[Complex::new(h, T::zero()), Complex::new(-h, T::zero())]).map(|s| s.with_label("|->"))
    }

    /// Convex combination `Σ w_i ρ_i`; weights must sum to one.
    pub fn mixture(weights: &[T], states: &[&Self]) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return invalid("mixture needs one weight per state");
        }
        let dim = states[0].dim();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (&w, s) in weights.iter().zip(states) {
            if w < T::zero() {
                return invalid("negative mixture weight");
            }
            acc.axpy(w, &s.matrix)?;
        }
        Self::new(acc, "mixture")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eigen(&self) -> HermitianEigen<T> {
        eigen_hermitian(&self.matrix).expect("density operator is Hermitian")
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        self.tensor_with_limit(other, MAX_DIM)
    }

    pub fn tensor_with_limit(&self, other: &Self, max_dim: usize) -> Result<Self> {
        let dim = self.dim() * other.dim();
        if dim > max_dim {
            return invalid(format!("tensor dimension {dim} exceeds limit {max_dim}"));
        }
        Ok(Self {
            matrix: self.matrix.kron(&other.matrix),
            label: format!("{}⊗{}", self.label, other.label),
        })
    }

    /// Reduced state on the subsystems listed in `keep` (ascending order in the output).
    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) || total != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "subsystem dims {dims:?} do not multiply to {}",
                self.dim()
            )));
        }
        if keep.is_empty() {
            return invalid("partial trace must keep at least one subsystem");
        }
        let mut kept: Vec<usize> = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if kept.len() != keep.len() || kept.iter().any(|&k| k >= dims.len()) {
            return invalid(format!("invalid keep set {keep:?} for {} subsystems", dims.len()));
        }
        let traced: Vec<usize> = (0..dims.len()).filter(|i| !kept.contains(i)).collect();
        let dk: usize = kept.iter().map(|&i| dims[i]).product();
        let dt: usize = traced.iter().map(|&i| dims[i]).product();

        // strides of the full register, last subsystem fastest
        let mut strides = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let offset = |sub: &[usize], mut idx: usize| -> usize {
            let mut off = 0;
            for &s in sub.iter().rev() {
                off += (idx % dims[s]) * strides[s];
                idx /= dims[s];
            }
            off
        };
        let keep_off: Vec<usize> = (0..dk).map(|k| offset(&kept, k)).collect();
        let trace_off: Vec<usize> = (0..dt).map(|t| offset(&traced, t)).collect();

        let mut out = ComplexMatrix::zeros(dk, dk);
        for (i, &ki) in keep_off.iter().enumerate() {
            for (j, &kj) in keep_off.iter().enumerate() {
                let mut acc = Complex::new(T::zero(), T::zero());
                for &t in &trace_off {
                    acc += self.matrix[(ki + t, kj + t)];
                }
                out[(i, j)] = acc;
            }
        }
        Self::new(out, format!("tr[{}]", self.label))
    }

    /// Normalized trace distance `½‖a − b‖₁`.
    pub fn trace_distance(&self, other: &Self) -> Result<T> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "trace distance between dims {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        let diff = self.matrix.sub(&other.matrix)?;
        Ok((trace_norm(&diff)? * T::lit(0.5)).min(T::one()))
    }

    /// Von Neumann entropy in bits.
    pub fn von_neumann_entropy(&self) -> T {
        self.eigen().values.into_iter().map(|l| plog2p(l.max(T::zero()))).sum()
    }

    /// Born-rule outcome distribution `tr(D_j ρ)`.
    pub fn born_distribution(&self, povm: &Povm<T>) -> Result<Vec<T>> {
        if povm.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "POVM on dim {} applied to state of dim {}",
                povm.dim(),
                self.dim()
            )));
        }
        povm.elements
            .iter()
            .map(|d| Ok(d.trace_product(&self.matrix)?.re.max(T::zero())))
            .collect()
    }

    /// `tr(O ρ)`.
    pub fn expectation(&self, obs: &HermitianObservable<T>) -> Result<T> {
        if obs.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "observable on dim {} applied to state of dim {}",
                obs.dim(),
                self.dim()
            )));
        }
        Ok(obs.matrix.trace_product(&self.matrix)?.re)
    }
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm<T: Real>(m: &ComplexMatrix<T>) -> Result<T> {
    Ok(eigen_hermitian(m)?.values.into_iter().map(T::abs).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianObservable<T> {
    matrix: ComplexMatrix<T>,
}

impl<T: Real> HermitianObservable<T> {
    pub fn new(matrix: ComplexMatrix<T>) -> Result<Self> {
        let dev = matrix.hermitian_deviation();
        if dev > T::state_tol() {
            return Err(Error::NotHermitian(dev.to_f64_lossy()));
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim),
        }
    }

    pub fn pauli_x() -> Self {
        let o = T::one();
        Self::new(ComplexMatrix::from_real_diagonal(&[T::zero(), T::zero()]).with_offdiag(o))
            .expect("Pauli X is Hermitian")
    }

    pub fn pauli_z() -> Self {
        Self::new(ComplexMatrix::from_real_diagonal(&[T::one(), -T::one()])).expect("Pauli Z is Hermitian")
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }
}

trait WithOffdiag<T> {
    fn with_offdiag(self, v: T) -> Self;
}

impl<T: Real> WithOffdiag<T> for ComplexMatrix<T> {
    fn with_offdiag(mut self, v: T) -> Self {
        self[(0, 1)] = Complex::new(v, T::zero());
        self[(1, 0)] = Complex::new(v, T::zero());
        self
    }
}

/// Positive operator-valued measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm<T> {
    elements: Vec<ComplexMatrix<T>>,
}

impl<T: Real> Povm<T> {
    pub fn new(elements: Vec<ComplexMatrix<T>>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return invalid("POVM needs at least one element");
        };
        let dim = first.rows();
        let tol = T::state_tol();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for e in &elements {
            if e.rows() != dim || e.cols() != dim {
                return Err(Error::DimensionMismatch("POVM elements differ in shape".into()));
            }
            let eig = eigen_hermitian(e)?;
            let min = eig.values.last().copied().unwrap_or(T::zero());
            if min < -tol {
                return Err(Error::NotPsd(min.to_f64_lossy()));
            }
            sum.axpy(T::one(), e)?;
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(dim))?;
        if dev > tol {
            return invalid(format!(
                "POVM elements sum to identity only within {:e}",
                dev.to_f64_lossy()
            ));
        }
        Ok(Self { elements })
    }

    pub fn computational_basis(dim: usize) -> Self {
        let elements = (0..dim)
            .map(|i| {
                let mut d = vec![T::zero(); dim];
                d[i] = T::one();
                ComplexMatrix::from_real_diagonal(&d)
            })
            .collect();
        Self { elements }
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix<T>] {
        &self.elements
    }
}
