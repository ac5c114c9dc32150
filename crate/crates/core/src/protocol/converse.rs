//! Rate lower bounds measured on simulated codes.
//!
//! Bob (and Charlie) measure their registers in the computational basis. The
//! per-slot average of the resulting classical statistics, together with the
//! source type, gives `p̄`; any code of rate `R` must satisfy
//! `I(X;Y)_p̄ ≤ R + α_n` up to finite-sample slack.

use serde::Serialize;

use crate::classical::alpha_n;
use crate::error::{invalid, Result};
use crate::model::NetworkKind;
use crate::protocol::sim::{mutual_information, Simulation, Simulator};
use crate::quantum::{trace_norm, ComplexMatrix};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConverseCheck {
    pub trial: u64,
    /// `‖ρ̄_{XAB(C)} − ω_{XAB(C)}‖₁` with `X` kept classical.
    pub epsilon: f64,
    pub alpha: f64,
    /// `I(X;Y)` for two nodes, `I(X;YZ)` for the cascade.
    pub measured_r12: f64,
    /// `R_{1→2} + α + slack − measured_r12`.
    pub margin_r12: f64,
    /// `I(X;Z)` for the cascade.
    pub measured_r23: Option<f64>,
    pub margin_r23: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConverseReport {
    pub rate12: f64,
    pub rate23: Option<f64>,
    pub slack: f64,
    pub checks: Vec<ConverseCheck>,
    pub violations: usize,
}

/// Diagonal of a density matrix.
fn diagonal(m: &ComplexMatrix<f64>) -> Vec<f64> {
    (0..m.rows()).map(|i| m[(i, i)].re).collect()
}

/// Checks every trace of `run` against the rate bounds with additive `slack`.
pub fn converse_check(sim: &Simulator, run: &Simulation, slack: f64) -> Result<ConverseReport> {
    let v = sim.extension();
    let ext = v.extension();
    let target = v.target();
    if run.kind != ext.kind() {
        return invalid("simulation and extension are for different networks");
    }
    let (nx, ny, nz) = (ext.num_x(), ext.num_y(), ext.num_z());
    let cascade = run.kind == NetworkKind::Cascade;
    let (rate12, rate23) = if cascade {
        let Some(rz) = run.rate_z else {
            return invalid("cascade simulation lacks the Bob-to-Charlie rate");
        };
        (run.rate + rz, Some(rz))
    } else {
        (run.rate, None)
    };
    let b_diag: Vec<Vec<f64>> = ext.atoms_b().iter().map(|s| diagonal(s.matrix())).collect();
    let c_diag: Vec<Vec<f64>> = if cascade {
        ext.atoms_c().iter().map(|s| diagonal(s.matrix())).collect()
    } else {
        vec![vec![1.0]]
    };
    let db = b_diag[0].len();
    let dc = c_diag[0].len();
    let k = nx * db * dc;

    let mut blocks = Vec::with_capacity(nx * ny * nz);
    for x in 0..nx {
        for y in 0..ny {
            for z in 0..nz {
                blocks.push(ext.atoms_a()[x].tensor(&ext.rest_atom(y, z)?)?.matrix().clone());
            }
        }
    }

    let mut checks = Vec::with_capacity(run.traces.len());
    for t in &run.traces {
        if t.counts.len() != nx * ny * nz {
            return invalid(format!("trace {} lacks the joint counts of every register", t.trial));
        }
        let n: u64 = t.counts.iter().sum();
        let inv_n = 1.0 / n as f64;
        let mut epsilon = 0.0;
        let mut p_bar = vec![0.0; nx * db * dc];
        for x in 0..nx {
            let mut block = target.state(x).matrix().scale(-target.p(x));
            for y in 0..ny {
                for z in 0..nz {
                    let c = t.counts[(x * ny + y) * nz + z];
                    if c == 0 {
                        continue;
                    }
                    let w = c as f64 * inv_n;
                    block.axpy(w, &blocks[(x * ny + y) * nz + z])?;
                    for b in 0..db {
                        for cc in 0..dc {
                            p_bar[(x * db + b) * dc + cc] += w * b_diag[y][b] * c_diag[z][cc];
                        }
                    }
                }
            }
            epsilon += trace_norm(&block)?;
        }
        let alpha = alpha_n(epsilon, k);
        let measured_r12 = mutual_information(&p_bar, db * dc);
        let margin_r12 = rate12 + alpha + slack - measured_r12;
        let (measured_r23, margin_r23) = match rate23 {
            Some(r23) => {
                let mut p_xc = vec![0.0; nx * dc];
                for x in 0..nx {
                    for b in 0..db {
                        for c in 0..dc {
                            p_xc[x * dc + c] += p_bar[(x * db + b) * dc + c];
                        }
                    }
                }
                let m = mutual_information(&p_xc, dc);
                (Some(m), Some(r23 + alpha + slack - m))
            }
            None => (None, None),
        };
        let passed = margin_r12 >= 0.0 && margin_r23.is_none_or(|m| m >= 0.0);
        checks.push(ConverseCheck {
            trial: t.trial,
            epsilon,
            alpha,
            measured_r12,
            margin_r12,
            measured_r23,
            margin_r23,
            passed,
        });
    }
    let violations = checks.iter().filter(|c| !c.passed).count();
    Ok(ConverseReport {
        rate12,
        rate23,
        slack,
        checks,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use crate::model::ValidatedExtension;
    use crate::protocol::sim::{Engine, SimSpec};

    fn spec(rate: f64, rate_z: Option<f64>) -> SimSpec {
        SimSpec {
            n: 200,
            delta: 0.05,
            seed: 5,
            trials: 10,
            engine: Engine::Lazy,
            gamma_factor: None,
            rate,
            rate0: None,
            rate_z,
            rate0_z: None,
        }
    }

    #[test]
    fn zero_rate_measures_little_information() {
        let ext = ValidatedExtension::self_consistent(families::example1_decomposition_b().unwrap()).unwrap();
        let sim = Simulator::new(&ext, &spec(0.0, None)).unwrap();
        let run = sim.run().unwrap();
        let report = converse_check(&sim, &run, 0.02).unwrap();
        assert_eq!(report.violations, 0);
        for c in &report.checks {
            assert!(c.measured_r12 < 0.05, "{}", c.measured_r12);
        }
    }

    #[test]
    fn cascade_checks_both_links() {
        let ext = ValidatedExtension::self_consistent(families::bsc_cascade(0.1).unwrap()).unwrap();
        let sim = Simulator::new(&ext, &spec(0.6, Some(0.7))).unwrap();
        let run = sim.run().unwrap();
        let report = converse_check(&sim, &run, 0.02).unwrap();
        assert!((report.rate12 - 1.3).abs() < 1e-12);
        assert_eq!(report.violations, 0, "{:?}", report.checks);
        assert!(report.checks.iter().all(|c| c.measured_r23.is_some()));
    }

    #[test]
    fn orthogonal_atoms_give_twice_the_decoded_tv() {
        // The four product states |x⟩ ⊗ |±⟩ are mutually orthogonal, so the
        // trace norm reduces to the ℓ1 distance of the joint type.
        let ext = ValidatedExtension::self_consistent(families::example2(0.0).unwrap()).unwrap();
        let sim = Simulator::new(&ext, &spec(1.2, None)).unwrap();
        let run = sim.run().unwrap();
        let report = converse_check(&sim, &run, 0.02).unwrap();
        for (c, t) in report.checks.iter().zip(&run.traces) {
            assert!(
                (c.epsilon - 2.0 * t.decoded_tv).abs() < 1e-9,
                "{} vs {}",
                c.epsilon,
                t.decoded_tv
            );
        }
    }
}
