use crate::error::{invalid, Result};
use crate::quantum::{DensityOperator, HermitianObservable, Povm};

/// Both sides of `(1/n) Σ_i ⟨O⟩_{ρ_i} = tr[O ρ̄]`, computed independently:
/// the left side slot by slot, the right side on the averaged state.
pub fn measurement_statistics(slots: &[DensityOperator<f64>], obs: &HermitianObservable<f64>) -> Result<(f64, f64)> {
    let avg = average_state(slots)?;
    let mut sum = 0.0;
    for s in slots {
        sum += s.expectation(obs)?;
    }
    Ok((sum / slots.len() as f64, avg.expectation(obs)?))
}

/// Outcome-wise version of [`measurement_statistics`] for a POVM.
pub fn povm_statistics(slots: &[DensityOperator<f64>], povm: &Povm<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let avg = average_state(slots)?;
    let mut acc = vec![0.0; povm.len()];
    for s in slots {
        for (a, p) in acc.iter_mut().zip(s.born_distribution(povm)?) {
            *a += p;
        }
    }
    let n = slots.len() as f64;
    Ok((acc.into_iter().map(|a| a / n).collect(), avg.born_distribution(povm)?))
}

/// `ρ̄ = (1/n) Σ_i ρ_i`.
pub fn average_state(slots: &[DensityOperator<f64>]) -> Result<DensityOperator<f64>> {
    if slots.is_empty() {
        return invalid("no slots to average");
    }
    let w = vec![1.0 / slots.len() as f64; slots.len()];
    let refs: Vec<&DensityOperator<f64>> = slots.iter().collect();
    DensityOperator::mixture(&w, &refs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::ComplexMatrix;
    use num_complex::Complex;
    use proptest::prelude::*;

    type Rho = DensityOperator<f64>;

    #[test]
    fn identical_slots() {
        let s = Rho::plus().unwrap();
        let (lhs, rhs) = measurement_statistics(&[s.clone(), s.clone(), s], &HermitianObservable::pauli_x()).unwrap();
        assert!((lhs - 1.0).abs() < 1e-15 && (rhs - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_orthogonal_slots() {
        let slots = [Rho::basis(2, 0).unwrap(), Rho::basis(2, 1).unwrap()];
        let (lhs, rhs) = measurement_statistics(&slots, &HermitianObservable::pauli_z()).unwrap();
        assert_eq!(lhs, 0.0);
        assert_eq!(rhs, 0.0);
    }

    #[test]
    fn four_slots_pauli_x() {
        let z = Rho::basis(2, 0).unwrap();
        let slots = [z.clone(), z, Rho::basis(2, 1).unwrap(), Rho::plus().unwrap()];
        let (lhs, rhs) = measurement_statistics(&slots, &HermitianObservable::pauli_x()).unwrap();
        assert!((lhs - 0.25).abs() < 1e-15);
        assert!((rhs - 0.25).abs() < 1e-15);
    }

    #[test]
    fn povm_sides_agree() {
        let slots = [Rho::basis(2, 0).unwrap(), Rho::plus().unwrap()];
        let (lhs, rhs) = povm_statistics(&slots, &Povm::computational_basis(2)).unwrap();
        assert!((lhs[0] - 0.75).abs() < 1e-15 && (rhs[0] - 0.75).abs() < 1e-15);
    }

    fn arb_state() -> impl Strategy<Value = Rho> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4).prop_map(|v| {
            let g = ComplexMatrix::new(2, 2, v.into_iter().map(|(a, b)| Complex::new(a, b)).collect()).unwrap();
            let mut p = g.matmul(&g.adjoint()).unwrap();
            p.axpy(1e-3, &ComplexMatrix::identity(2)).unwrap();
            let tr = p.trace().re;
            Rho::new(p.scale(1.0 / tr), "").unwrap()
        })
    }

    fn arb_observable() -> impl Strategy<Value = HermitianObservable<f64>> {
        (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b, re, im)| {
            let m = ComplexMatrix::new(
                2,
                2,
                vec![
                    Complex::new(a, 0.0),
                    Complex::new(re, im),
                    Complex::new(re, -im),
                    Complex::new(b, 0.0),
                ],
            )
            .unwrap();
            HermitianObservable::new(m).unwrap()
        })
    }

    proptest! {
        #[test]
        fn linearity_of_trace(slots in proptest::collection::vec(arb_state(), 1..12), obs in arb_observable()) {
            let (lhs, rhs) = measurement_statistics(&slots, &obs).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
