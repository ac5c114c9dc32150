//! Per-symbol convex subproblem, solved by damped Newton in null-space
//! coordinates of the feasible face.
//!
//! Cells are indexed `j = y·nz + z`. For fixed outer variables the objective
//! on one conditional `w` is
//!
//! `f(w) = Σ_j w_j ln w_j − Σ_j w_j c_j + α Σ_z m_z ln m_z − Σ_z m_z d_z`
//!
//! with `m_z = Σ_y w_{y·nz+z}`. It is convex whenever `α ≥ −1`.

use nalgebra::{DMatrix, DVector};

use crate::optimizer::feasibility::Feasibility;

const MAX_NEWTON: usize = 200;
const DECREMENT_TOL: f64 = 1e-28;
const RIDGE: f64 = 1e-12;
const LOCAL_DECREMENT: f64 = 1e-10;

pub(crate) struct CellObjective<'a> {
    pub nz: usize,
    pub c: &'a [f64],
    pub alpha: f64,
    pub d: &'a [f64],
}

fn xlnx(v: f64) -> f64 {
    if v > 0.0 {
        v * v.ln()
    } else {
        0.0
    }
}

impl CellObjective<'_> {
    fn z_marginal(&self, support: &[usize], w: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.nz];
        for (k, &j) in support.iter().enumerate() {
            m[j % self.nz] += w[k];
        }
        m
    }

    pub fn value(&self, support: &[usize], w: &[f64]) -> f64 {
        let mut f = 0.0;
        for (k, &j) in support.iter().enumerate() {
            f += xlnx(w[k]) - w[k] * self.c[j];
        }
        if self.alpha != 0.0 || self.d.iter().any(|&v| v != 0.0) {
            for (z, &mz) in self.z_marginal(support, w).iter().enumerate() {
                if mz > 0.0 {
                    f += self.alpha * xlnx(mz) - mz * self.d[z];
                }
            }
        }
        f
    }

    fn gradient_hessian(&self, support: &[usize], w: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let s = support.len();
        let m = self.z_marginal(support, w);
        let mut g = DVector::zeros(s);
        let mut h = DMatrix::zeros(s, s);
        for (k, &j) in support.iter().enumerate() {
            let z = j % self.nz;
            g[k] = w[k].ln() + 1.0 - self.c[j] - self.d[z];
            if self.alpha != 0.0 {
                g[k] += self.alpha * (m[z].ln() + 1.0);
            }
            h[(k, k)] = 1.0 / w[k];
            if self.alpha != 0.0 {
                for (l, &i) in support.iter().enumerate() {
                    if i % self.nz == z {
                        h[(k, l)] += self.alpha / m[z];
                    }
                }
            }
        }
        (g, h)
    }
}

/// Minimizes `obj` over the feasible face, starting from `w` (indexed like
/// `feas.support`) and never increasing the objective. Returns the number of
/// Newton steps taken.
pub(crate) fn newton(feas: &Feasibility, obj: &CellObjective<'_>, w: &mut Vec<f64>) -> usize {
    let basis = &feas.null_basis;
    if basis.ncols() == 0 {
        return 0;
    }
    let support = &feas.support;
    let mut f = obj.value(support, w);
    for it in 0..MAX_NEWTON {
        let (g, h) = obj.gradient_hessian(support, w);
        let gr = basis.transpose() * &g;
        let mut hr = basis.transpose() * &h * basis;
        let scale = hr.diagonal().amax().max(1.0);
        for k in 0..hr.nrows() {
            hr[(k, k)] += RIDGE * scale;
        }
        let step = match hr.cholesky() {
            Some(ch) => -ch.solve(&gr),
            None => -gr.clone(),
        };
        let slope = gr.dot(&step);
        if -slope / 2.0 < DECREMENT_TOL || !slope.is_finite() {
            return it;
        }
        let dir = basis * step;
        if -slope < LOCAL_DECREMENT {
            // Inside the quadratic region the Armijo test is below rounding
            // noise; take the full step if it stays interior.
            let trial: Vec<f64> = w.iter().zip(dir.iter()).map(|(a, b)| a + b).collect();
            if trial.iter().all(|&v| v > 0.0) {
                *w = trial;
                f = obj.value(support, w);
                continue;
            }
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..80 {
            let trial: Vec<f64> = w.iter().zip(dir.iter()).map(|(a, b)| a + t * b).collect();
            if trial.iter().all(|&v| v > 0.0) {
                let ft = obj.value(support, &trial);
                if ft <= f + 1e-4 * t * slope {
                    *w = trial;
                    f = ft;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return it;
        }
    }
    MAX_NEWTON
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::feasibility::feasible_set;
    use crate::quantum::DensityOperator;

    type Rho = DensityOperator<f64>;

    #[test]
    fn projection_onto_the_mixed_state_face() {
        // Minimizing Σ w ln w over decompositions of I/2 into |0⟩,|1⟩,|+⟩,|−⟩
        // gives the uniform split.
        let cells = [
            Rho::basis(2, 0).unwrap(),
            Rho::basis(2, 1).unwrap(),
            Rho::plus().unwrap(),
            Rho::minus().unwrap(),
        ];
        let feas = feasible_set(&cells, &Rho::maximally_mixed(2).unwrap(), 1e-8).unwrap();
        let zeros = [0.0; 4];
        let obj = CellObjective {
            nz: 1,
            c: &zeros,
            alpha: 0.0,
            d: &[0.0],
        };
        let mut w = vec![0.45, 0.45, 0.05, 0.05];
        newton(&feas, &obj, &mut w);
        for v in &w {
            assert!((v - 0.25).abs() < 1e-9, "{w:?}");
        }
    }

    #[test]
    fn biased_reference_tilts_the_projection() {
        let cells = [
            Rho::basis(2, 0).unwrap(),
            Rho::basis(2, 1).unwrap(),
            Rho::plus().unwrap(),
            Rho::minus().unwrap(),
        ];
        let feas = feasible_set(&cells, &Rho::maximally_mixed(2).unwrap(), 1e-8).unwrap();
        let c = [0.0, 0.0, (4.0f64).ln(), (4.0f64).ln()];
        let obj = CellObjective {
            nz: 1,
            c: &c,
            alpha: 0.0,
            d: &[0.0],
        };
        let mut w = feas.interior.clone();
        let before = obj.value(&feas.support, &w);
        newton(&feas, &obj, &mut w);
        assert!(obj.value(&feas.support, &w) <= before);
        // Face is w = (s, s, ½−s, ½−s); optimum solves ln(s) = ln(½−s) − ln 4.
        let s = 0.5 / 5.0;
        assert!((w[0] - s).abs() < 1e-9 && (w[2] - (0.5 - s)).abs() < 1e-9, "{w:?}");
    }
}
