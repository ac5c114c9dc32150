use serde::Serialize;

use crate::error::Result;
use crate::model::{CqEnsemble, STATE_TOL};
use crate::quantum::DensityOperator;

/// Where a candidate atom came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "order")]
pub enum Provenance {
    /// Eigenvector of a target conditional.
    Spectral,
    /// Weighted mixture of this many target conditionals.
    Merged(usize),
    User,
}

#[derive(Debug, Clone)]
pub struct Atom {
    pub state: DensityOperator<f64>,
    pub provenance: Provenance,
}

/// Candidate atoms for `B` and, on three-register targets, for `C`.
#[derive(Debug, Clone)]
pub struct AtomCandidateSet {
    pub b: Vec<Atom>,
    pub c: Vec<Atom>,
}

impl AtomCandidateSet {
    pub fn user(b: Vec<DensityOperator<f64>>, c: Vec<DensityOperator<f64>>) -> Self {
        let wrap = |v: Vec<DensityOperator<f64>>| {
            v.into_iter()
                .map(|state| Atom {
                    state,
                    provenance: Provenance::User,
                })
                .collect()
        };
        Self { b: wrap(b), c: wrap(c) }
    }

    pub fn b_states(&self) -> Vec<DensityOperator<f64>> {
        self.b.iter().map(|a| a.state.clone()).collect()
    }

    pub fn c_states(&self) -> Vec<DensityOperator<f64>> {
        self.c.iter().map(|a| a.state.clone()).collect()
    }

    /// Appends atoms from `other` that are not already present.
    pub fn union(&mut self, other: &AtomCandidateSet) -> Result<()> {
        for a in &other.b {
            push_unique(&mut self.b, a.clone())?;
        }
        for a in &other.c {
            push_unique(&mut self.c, a.clone())?;
        }
        Ok(())
    }
}

/// Spectral atoms of every target conditional plus all `p`-weighted merges of
/// up to `max_merge_order` distinct conditionals, deduplicated at trace
/// distance `STATE_TOL`. Order 0 keeps the spectral atoms only.
///
/// Eigenvectors are taken only from non-degenerate, nonzero eigenvalues; a
/// degenerate eigenspace has no preferred basis and is covered by the
/// conditional itself (order 1).
pub fn propose_atoms(target: &CqEnsemble, max_merge_order: usize) -> Result<AtomCandidateSet> {
    target.require_factorization()?;
    let dims = target.dims();
    let conds_b: Vec<DensityOperator<f64>>;
    let mut conds_c: Vec<DensityOperator<f64>> = Vec::new();
    if target.has_c() {
        let rest = [dims[1], dims[2]];
        conds_b = (0..target.num_symbols())
            .map(|x| target.rest_part(x).partial_trace(&rest, &[0]))
            .collect::<Result<_>>()?;
        conds_c = (0..target.num_symbols())
            .map(|x| target.rest_part(x).partial_trace(&rest, &[1]))
            .collect::<Result<_>>()?;
    } else {
        conds_b = (0..target.num_symbols()).map(|x| target.rest_part(x).clone()).collect();
    }
    let weights = target.source().probs();
    Ok(AtomCandidateSet {
        b: atoms_for(&conds_b, weights, max_merge_order)?,
        c: if target.has_c() {
            atoms_for(&conds_c, weights, max_merge_order)?
        } else {
            Vec::new()
        },
    })
}

fn atoms_for(conds: &[DensityOperator<f64>], p: &[f64], max_order: usize) -> Result<Vec<Atom>> {
    let mut out = Vec::new();
    for (x, eta) in conds.iter().enumerate() {
        if p[x] <= 0.0 {
            continue;
        }
        let eig = eta.eigen();
        let vals = &eig.values;
        for (k, &lam) in vals.iter().enumerate() {
            let degenerate = vals
                .iter()
                .enumerate()
                .any(|(j, &mu)| j != k && (mu - lam).abs() <= STATE_TOL);
            if lam <= STATE_TOL || degenerate {
                continue;
            }
            let state = DensityOperator::pure(&eig.vector(k))?.with_label(format!("eig{k}[{x}]"));
            push_unique(
                &mut out,
                Atom {
                    state,
                    provenance: Provenance::Spectral,
                },
            )?;
        }
    }
    let support: Vec<usize> = (0..conds.len()).filter(|&x| p[x] > 0.0).collect();
    for order in 1..=max_order.min(support.len()) {
        for subset in combinations(&support, order) {
            let mass: f64 = subset.iter().map(|&x| p[x]).sum();
            let w: Vec<f64> = subset.iter().map(|&x| p[x] / mass).collect();
            let members: Vec<&DensityOperator<f64>> = subset.iter().map(|&x| &conds[x]).collect();
            let state = DensityOperator::mixture(&w, &members)?.with_label(format!("merge{subset:?}"));
            push_unique(
                &mut out,
                Atom {
                    state,
                    provenance: Provenance::Merged(order),
                },
            )?;
        }
    }
    Ok(out)
}

fn push_unique(list: &mut Vec<Atom>, atom: Atom) -> Result<()> {
    for a in list.iter() {
        if a.state.trace_distance(&atom.state)? < STATE_TOL {
            return Ok(());
        }
    }
    list.push(atom);
    Ok(())
}

/// All `k`-subsets of `items` in lexicographic order.
pub(crate) fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;

    fn contains(set: &[Atom], s: &DensityOperator<f64>) -> bool {
        set.iter().any(|a| a.state.trace_distance(s).unwrap() < 1e-9)
    }

    #[test]
    fn example1_atoms() {
        let set = propose_atoms(&families::example1_target().unwrap(), 2).unwrap();
        assert!(contains(&set.b, &DensityOperator::basis(2, 0).unwrap()));
        assert!(contains(&set.b, &DensityOperator::plus().unwrap()));
        assert!(contains(&set.b, &families::eta().unwrap()));
        assert!(set.c.is_empty());
    }

    #[test]
    fn product_target_collapses_to_maximally_mixed() {
        let set = propose_atoms(&families::example2_target(0.5).unwrap(), 3).unwrap();
        assert_eq!(set.b.len(), 1);
        assert!(
            set.b[0]
                .state
                .trace_distance(&DensityOperator::maximally_mixed(2).unwrap())
                .unwrap()
                < 1e-12
        );
    }

    #[test]
    fn pure_conditionals_are_their_own_atoms() {
        let target = families::example1_target().unwrap();
        let set = propose_atoms(&target, 1).unwrap();
        assert_eq!(set.b.len(), 2);
        assert!(contains(&set.b, &DensityOperator::basis(2, 0).unwrap()));
        assert!(contains(&set.b, &DensityOperator::plus().unwrap()));
        let spectral = propose_atoms(&target, 0).unwrap();
        assert_eq!(spectral.b.len(), 2);
        assert!(spectral.b.iter().all(|a| a.provenance == Provenance::Spectral));
    }

    #[test]
    fn three_register_targets_get_c_atoms() {
        let target = families::bsc_cascade(0.1).unwrap().induced_ensemble().unwrap();
        let set = propose_atoms(&target, 1).unwrap();
        assert!(contains(&set.c, &DensityOperator::basis(2, 0).unwrap()));
        assert!(contains(&set.c, &DensityOperator::basis(2, 1).unwrap()));
    }

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(combinations(&[0, 1, 2], 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(combinations(&[0, 1], 3), Vec::<Vec<usize>>::new());
    }
}
