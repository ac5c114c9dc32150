//! Convex-hull membership of a target conditional in a set of cell states.
//!
//! Hermitian `d×d` matrices are embedded in `R^{d²}` (diagonal, then real and
//! imaginary parts of the strict upper triangle). A ones row pins the weights
//! to the simplex, so `Σ_j w_j σ_j = η` becomes `A w = b, w ≥ 0`.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quantum::{ComplexMatrix, DensityOperator};

const NNLS_TOL: f64 = 1e-13;
const RANK_TOL: f64 = 1e-10;
const SUPPORT_TOL: f64 = 1e-9;

/// Feasible set of one conditional, restricted to its maximal support.
#[derive(Debug, Clone)]
pub struct Feasibility {
    /// Max entrywise residual of the best nonnegative fit.
    pub residual: f64,
    /// Cells that take positive weight somewhere in the feasible set.
    pub support: Vec<usize>,
    /// Point in the relative interior, indexed like `support`.
    pub interior: Vec<f64>,
    /// Orthonormal basis of the null space of the support columns.
    pub null_basis: DMatrix<f64>,
}

pub(crate) fn embed(m: &ComplexMatrix<f64>) -> Vec<f64> {
    let d = m.rows();
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push(m[(i, i)].re);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            out.push(m[(i, j)].re);
            out.push(m[(i, j)].im);
        }
    }
    out
}

/// `[embed(σ_j); 1]` as columns.
pub(crate) fn system(cells: &[DensityOperator<f64>]) -> DMatrix<f64> {
    let d = cells[0].dim();
    let rows = d * d + 1;
    let mut a = DMatrix::zeros(rows, cells.len());
    for (j, c) in cells.iter().enumerate() {
        for (i, v) in embed(c.matrix()).into_iter().enumerate() {
            a[(i, j)] = v;
        }
        a[(rows - 1, j)] = 1.0;
    }
    a
}

pub(crate) fn rhs(eta: &DensityOperator<f64>) -> DVector<f64> {
    let mut v = embed(eta.matrix());
    v.push(1.0);
    DVector::from_vec(v)
}

fn max_residual(a: &DMatrix<f64>, w: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a * w - b).amax()
}

/// Lawson–Hanson nonnegative least squares.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    for _ in 0..(3 * n + 3) {
        let grad = a.transpose() * (b - a * &x);
        let next = (0..n)
            .filter(|&j| !passive[j] && grad[j] > NNLS_TOL)
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(j) = next else { break };
        passive[j] = true;
        for _ in 0..(3 * n + 3) {
            let z = restricted_lstsq(a, b, &passive);
            if (0..n).all(|k| !passive[k] || z[k] > 0.0) {
                x = z;
                break;
            }
            let mut step = 1.0f64;
            for k in 0..n {
                if passive[k] && z[k] <= 0.0 {
                    step = step.min(x[k] / (x[k] - z[k]));
                }
            }
            x += (z - &x) * step;
            for k in 0..n {
                if passive[k] && x[k] <= NNLS_TOL {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
        }
    }
    x
}

fn restricted_lstsq(a: &DMatrix<f64>, b: &DVector<f64>, cols: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..cols.len()).filter(|&j| cols[j]).collect();
    let mut z = DVector::zeros(cols.len());
    if idx.is_empty() {
        return z;
    }
    let sub = a.select_columns(&idx);
    let sol = lstsq(&sub, b);
    for (k, &j) in idx.iter().enumerate() {
        z[j] = sol[k];
    }
    z
}

/// Minimum-norm least-squares solution.
pub(crate) fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(b, RANK_TOL * smax.max(1.0))
        .unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Orthonormal basis (as columns) of `ker a`.
pub(crate) fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    let mut padded = DMatrix::zeros(a.nrows().max(n), n);
    padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..n)
        .filter(|&k| svd.singular_values[k] <= RANK_TOL * smax.max(1.0))
        .collect();
    DMatrix::from_fn(n, keep.len(), |i, k| v_t[(keep[k], i)])
}

/// Largest feasible value of each `w_j`, from one LP per cell over the
/// row-reduced system `V_rᵀ w = V_rᵀ w0`.
fn support_lps(a: &DMatrix<f64>, w0: &DVector<f64>) -> Vec<Option<DVector<f64>>> {
    let n = a.ncols();
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let smax = svd.singular_values.max();
    let rows: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > RANK_TOL * smax.max(1.0))
        .collect();
    (0..n)
        .map(|target| {
            let mut lp = Problem::new(OptimizationDirection::Maximize);
            let vars: Vec<_> = (0..n)
                .map(|j| lp.add_var(if j == target { 1.0 } else { 0.0 }, (0.0, f64::INFINITY)))
                .collect();
            for &r in &rows {
                let coeffs: Vec<_> = (0..n).map(|j| (vars[j], v_t[(r, j)])).collect();
                let rhs: f64 = (0..n).map(|j| v_t[(r, j)] * w0[j]).sum();
                lp.add_constraint(coeffs.as_slice(), ComparisonOp::Eq, rhs);
            }
            lp.solve()
                .ok()
                .map(|sol| DVector::from_fn(n, |j, _| sol[vars[j]].max(0.0)))
        })
        .collect()
}

/// Decides whether `eta` is a convex combination of `cells` and describes
/// the feasible face. Fails with [`Error::Infeasible`] when the best
/// nonnegative fit misses by more than `feas_tol` in some entry.
pub fn feasible_set(cells: &[DensityOperator<f64>], eta: &DensityOperator<f64>, feas_tol: f64) -> Result<Feasibility> {
    if cells.is_empty() {
        return Err(Error::Infeasible {
            max_residual: f64::INFINITY,
            detail: "no atoms".into(),
        });
    }
    if cells[0].dim() != eta.dim() {
        return Err(Error::DimensionMismatch(format!(
            "atoms have dim {}, conditional has dim {}",
            cells[0].dim(),
            eta.dim()
        )));
    }
    let a = system(cells);
    let b = rhs(eta);
    let w0 = nnls(&a, &b);
    let residual = max_residual(&a, &w0, &b);
    if residual > feas_tol {
        return Err(Error::Infeasible {
            max_residual: residual,
            detail: format!("conditional `{}` is outside the atom hull", eta.label()),
        });
    }
    let n = cells.len();
    let maximizers = support_lps(&a, &w0);
    let mut support = Vec::new();
    let mut acc = DVector::zeros(n);
    for (j, m) in maximizers.iter().enumerate() {
        match m {
            Some(w) if w[j] > SUPPORT_TOL => {
                support.push(j);
                acc += w;
            }
            Some(_) => {}
            None if w0[j] > SUPPORT_TOL => {
                support.push(j);
                acc += &w0;
            }
            None => {}
        }
    }
    if support.is_empty() {
        support = (0..n).filter(|&j| w0[j] > 0.0).collect();
        acc = w0.clone();
    } else {
        acc /= support.len() as f64;
    }
    let a_s = a.select_columns(&support);
    let mut interior = DVector::from_fn(support.len(), |k, _| acc[support[k]]);
    let correction = lstsq(&a_s, &(&a_s * &interior - &b));
    let projected = &interior - correction;
    if projected.iter().all(|&v| v > 0.0) {
        interior = projected;
    }
    let residual = (&a_s * &interior - &b).amax();
    Ok(Feasibility {
        residual,
        support,
        interior: interior.iter().copied().collect(),
        null_basis: null_space(&a_s),
    })
}
