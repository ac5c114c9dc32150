//! Minimizes the rate functional over conditional pmfs on a fixed atom set,
//! and searches over proposed atom sets.
//!
//! The inner solver alternates between the closed-form optimal output
//! marginals and a per-symbol I-projection onto the set of conditionals that
//! reproduce the target exactly. Every step is a descent step, so the
//! recorded objective trace never increases.

mod atoms;
mod feasibility;
mod inner;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{Alphabet, JointPmf};
use crate::error::{invalid, Error, Result};
use crate::model::{
    cascade_rate_point, isolated_rate, two_node_rate, CqEnsemble, Extension, NetworkKind, RatePoint,
    ValidatedExtension, STATE_TOL,
};
use crate::quantum::{ComplexMatrix, DensityOperator};

pub use atoms::{propose_atoms, Atom, AtomCandidateSet, Provenance};
pub use feasibility::{feasible_set, nnls, Feasibility};

use inner::{newton, CellObjective};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOptions {
    /// Outer-iteration budget per candidate atom set.
    pub max_iters: usize,
    /// Stop once an outer iteration improves the objective by less than this (bits).
    pub tol: f64,
    /// Entrywise residual allowed in the reconstruction constraints.
    pub feas_tol: f64,
    /// Gate used when validating the returned extension.
    pub validation_tol: f64,
    pub max_merge_order: usize,
    /// Also search atom sets on the ensemble with `A`-identical symbols merged.
    pub coarsen: bool,
    /// Weight on `I(X;Z)` in the cascade objective.
    pub lambda: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            tol: 1e-9,
            feas_tol: 1e-8,
            validation_tol: 1e-6,
            max_merge_order: 3,
            coarsen: true,
            lambda: 1.0,
        }
    }
}

/// One atom set tried by [`optimize`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateRecord {
    pub label: String,
    pub atoms_b: usize,
    pub atoms_c: usize,
    pub value: Option<f64>,
    pub max_residual: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct OptimizerResult {
    pub extension: ValidatedExtension,
    /// Final objective in bits.
    pub value: f64,
    pub rate: RatePoint,
    pub iterations: usize,
    /// Objective after each outer iteration, in bits.
    pub trace: Vec<f64>,
    /// Max entrywise reconstruction residual per source symbol.
    pub residuals: Vec<f64>,
    /// `p(cell | x)` per source symbol over the full cell grid of the atom set.
    pub conditionals: Vec<Vec<f64>>,
    /// Fine-to-coarse symbol map when the winner lives on the coarsened source.
    pub coarse_map: Option<Vec<usize>>,
    pub candidates: Vec<CandidateRecord>,
}

fn check_registers(target: &CqEnsemble, atoms: &AtomCandidateSet, kind: NetworkKind) -> Result<()> {
    let dims = target.dims();
    let wants_c = kind != NetworkKind::TwoNode;
    if wants_c != target.has_c() {
        return invalid(format!(
            "{kind} optimization needs a target on {} registers",
            kind.arity()
        ));
    }
    if atoms.b.is_empty() || (wants_c && atoms.c.is_empty()) {
        return invalid("atom lists must be nonempty");
    }
    if !wants_c && !atoms.c.is_empty() {
        return invalid("two-node optimization takes no C atoms");
    }
    if atoms.b.iter().any(|a| a.state.dim() != dims[1]) || atoms.c.iter().any(|a| a.state.dim() != dims[2]) {
        return Err(Error::DimensionMismatch(
            "atom dims do not match the target registers".into(),
        ));
    }
    Ok(())
}

/// Fails when the target's `AC` marginal is correlated, which no
/// isolated-node extension can reproduce.
fn check_isolated_target(target: &CqEnsemble) -> Result<()> {
    let dims = target.dims();
    let (da, db, dc) = (dims[0], dims[1], dims[2]);
    let mut ac = ComplexMatrix::zeros(da * dc, da * dc);
    for x in 0..target.num_symbols() {
        if target.p(x) > 0.0 {
            let c = target.rest_part(x).partial_trace(&[db, dc], &[1])?;
            ac.axpy(target.p(x), target.a_part(x).tensor(&c)?.matrix())?;
        }
    }
    let ac = DensityOperator::new(ac, "omega_AC")?;
    let a = ac.partial_trace(&[da, dc], &[0])?;
    let c = ac.partial_trace(&[da, dc], &[1])?;
    let gap = a.tensor(&c)?.trace_distance(&ac)?;
    if gap > STATE_TOL {
        return Err(Error::ValidationFailed(format!(
            "target AC marginal is correlated (gap {gap:e}); no isolated-node extension exists"
        )));
    }
    Ok(())
}

struct Grid {
    ny: usize,
    nz: usize,
    cells: Vec<DensityOperator<f64>>,
}

fn cell_grid(atoms: &AtomCandidateSet, kind: NetworkKind) -> Result<Grid> {
    if kind == NetworkKind::TwoNode {
        return Ok(Grid {
            ny: atoms.b.len(),
            nz: 1,
            cells: atoms.b_states(),
        });
    }
    let mut cells = Vec::with_capacity(atoms.b.len() * atoms.c.len());
    for b in &atoms.b {
        for c in &atoms.c {
            cells.push(b.state.tensor(&c.state)?);
        }
    }
    Ok(Grid {
        ny: atoms.b.len(),
        nz: atoms.c.len(),
        cells,
    })
}

fn xlogy_ratio(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        a * (a / b).ln()
    } else {
        0.0
    }
}

/// Alternating-minimization state: one conditional per source symbol,
/// indexed like that symbol's feasible support.
struct Solver<'a> {
    kind: NetworkKind,
    lambda: f64,
    grid: &'a Grid,
    px: Vec<f64>,
    feas: Vec<Option<Feasibility>>,
    w: Vec<Vec<f64>>,
}

impl Solver<'_> {
    fn ncells(&self) -> usize {
        self.grid.cells.len()
    }

    fn full(&self, x: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.ncells()];
        if let Some(f) = &self.feas[x] {
            for (k, &j) in f.support.iter().enumerate() {
                out[j] = self.w[x][k];
            }
        }
        out
    }

    fn z_marginal(&self, cond: &[f64]) -> Vec<f64> {
        let nz = self.grid.nz;
        let mut m = vec![0.0; nz];
        for (j, &v) in cond.iter().enumerate() {
            m[j % nz] += v;
        }
        m
    }

    /// Output marginals `q(y,z)` and `r(z)` induced by the current conditionals.
    fn marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let mut q = vec![0.0; self.ncells()];
        for x in 0..self.px.len() {
            if self.px[x] > 0.0 {
                for (j, v) in self.full(x).into_iter().enumerate() {
                    q[j] += self.px[x] * v;
                }
            }
        }
        let r = self.z_marginal(&q);
        (q, r)
    }

    /// Objective in bits at the current conditionals.
    fn objective(&self) -> f64 {
        let (q, r) = self.marginals();
        let nz = self.grid.nz;
        let mut total = 0.0;
        for x in 0..self.px.len() {
            if self.px[x] <= 0.0 {
                continue;
            }
            let w = self.full(x);
            let m = self.z_marginal(&w);
            let term: f64 = match self.kind {
                NetworkKind::TwoNode => w.iter().zip(&q).map(|(&a, &b)| xlogy_ratio(a, b)).sum(),
                NetworkKind::Cascade => {
                    let joint: f64 = w.iter().zip(&q).map(|(&a, &b)| xlogy_ratio(a, b)).sum();
                    let zpart: f64 = m.iter().zip(&r).map(|(&a, &b)| xlogy_ratio(a, b)).sum();
                    joint + self.lambda * zpart
                }
                NetworkKind::Isolated => w.iter().enumerate().map(|(j, &a)| xlogy_ratio(a, m[j % nz])).sum(),
            };
            total += self.px[x] * term;
        }
        if self.kind == NetworkKind::Isolated {
            total -= q
                .iter()
                .enumerate()
                .map(|(j, &a)| xlogy_ratio(a, r[j % nz]))
                .sum::<f64>();
        }
        (total / std::f64::consts::LN_2).max(0.0)
    }

    fn step(&mut self) {
        let (q, r) = self.marginals();
        let nz = self.grid.nz;
        let log = |v: f64| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY };
        let (c, alpha, d): (Vec<f64>, f64, Vec<f64>) = match self.kind {
            NetworkKind::TwoNode => (q.iter().map(|&v| log(v)).collect(), 0.0, vec![0.0]),
            NetworkKind::Cascade => (
                q.iter().map(|&v| log(v)).collect(),
                self.lambda,
                r.iter().map(|&v| self.lambda * log(v)).collect(),
            ),
            NetworkKind::Isolated => (
                q.iter().enumerate().map(|(j, &v)| log(v) - log(r[j % nz])).collect(),
                -1.0,
                vec![0.0; nz],
            ),
        };
        let obj = CellObjective {
            nz,
            c: &c,
            alpha,
            d: &d,
        };
        for x in 0..self.px.len() {
            if let Some(f) = &self.feas[x] {
                newton(f, &obj, &mut self.w[x]);
            }
        }
    }
}

/// Minimizes `I(X;Y)`, `I(X;YZ) + λ I(X;Z)` or `I(X;Y|Z)` (by `kind`) over
/// conditionals on the cells of `atoms` that reproduce every target
/// conditional. Fails with [`Error::Infeasible`] if some conditional is
/// outside the atom hull.
pub fn minimize_conditional(
    target: &CqEnsemble,
    atoms: &AtomCandidateSet,
    kind: NetworkKind,
    opts: &OptimizerOptions,
) -> Result<OptimizerResult> {
    target.require_factorization()?;
    check_registers(target, atoms, kind)?;
    if kind == NetworkKind::Isolated {
        check_isolated_target(target)?;
    }
    if kind == NetworkKind::Cascade && (opts.lambda.is_nan() || opts.lambda < 0.0) {
        return invalid("cascade weight must be nonnegative");
    }
    let grid = cell_grid(atoms, kind)?;
    let nx = target.num_symbols();
    let px: Vec<f64> = (0..nx).map(|x| target.p(x)).collect();
    let mut feas = Vec::with_capacity(nx);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (x, &p) in px.iter().enumerate() {
        if p <= 0.0 {
            feas.push(None);
            continue;
        }
        match feasible_set(&grid.cells, target.rest_part(x), opts.feas_tol) {
            Ok(f) => feas.push(Some(f)),
            Err(Error::Infeasible { max_residual, .. }) => {
                worst = worst.max(max_residual);
                failures.push(target.source_alphabet().symbols()[x].clone());
                feas.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Infeasible {
            max_residual: worst,
            detail: format!(
                "conditionals for x in {{{}}} are outside the atom hull",
                failures.join(", ")
            ),
        });
    }
    let w = feas
        .iter()
        .map(|f| f.as_ref().map(|f| f.interior.clone()).unwrap_or_default())
        .collect();
    let mut solver = Solver {
        kind,
        lambda: opts.lambda,
        grid: &grid,
        px,
        feas,
        w,
    };
    let mut trace = vec![solver.objective()];
    while trace.len() <= opts.max_iters {
        solver.step();
        let v = solver.objective();
        let prev = *trace.last().expect("trace starts nonempty");
        trace.push(v);
        if prev - v < opts.tol {
            break;
        }
    }
    let residuals = solver
        .feas
        .iter()
        .map(|f| f.as_ref().map_or(0.0, |f| f.residual))
        .collect();
    let conditionals: Vec<Vec<f64>> = (0..nx).map(|x| solver.full(x)).collect();
    let ext = build_extension(target, atoms, &grid, kind, &conditionals)?;
    let extension = ValidatedExtension::with_tolerance(ext, target.clone(), opts.validation_tol)?;
    let rate = match kind {
        NetworkKind::TwoNode => RatePoint {
            r12: two_node_rate(&extension)?,
            r23: None,
        },
        NetworkKind::Cascade => cascade_rate_point(&extension)?,
        NetworkKind::Isolated => RatePoint {
            r12: isolated_rate(&extension)?,
            r23: None,
        },
    };
    Ok(OptimizerResult {
        extension,
        value: *trace.last().expect("trace starts nonempty"),
        rate,
        iterations: trace.len() - 1,
        trace,
        residuals,
        conditionals,
        coarse_map: None,
        candidates: Vec::new(),
    })
}

/// Extension over the labels that carry positive mass.
fn build_extension(
    target: &CqEnsemble,
    atoms: &AtomCandidateSet,
    grid: &Grid,
    kind: NetworkKind,
    conditionals: &[Vec<f64>],
) -> Result<Extension> {
    let (ny, nz) = (grid.ny, grid.nz);
    let mut used_y = vec![false; ny];
    let mut used_z = vec![false; nz];
    for cond in conditionals {
        for (j, &v) in cond.iter().enumerate() {
            if v > 0.0 {
                used_y[j / nz] = true;
                used_z[j % nz] = true;
            }
        }
    }
    let ys: Vec<usize> = (0..ny).filter(|&y| used_y[y]).collect();
    let zs: Vec<usize> = (0..nz).filter(|&z| used_z[z]).collect();
    let x_alpha = target.source_alphabet().clone();
    let y_name = if x_alpha.name() == "Y" { "Y'" } else { "Y" };
    let z_name = if x_alpha.name() == "Z" { "Z'" } else { "Z" };
    let mut vars = vec![x_alpha, Alphabet::indexed(y_name, ys.len())?];
    if kind != NetworkKind::TwoNode {
        vars.push(Alphabet::indexed(z_name, zs.len())?);
    }
    let mut probs = Vec::with_capacity(conditionals.len() * ys.len() * zs.len());
    for (x, cond) in conditionals.iter().enumerate() {
        for &y in &ys {
            for &z in &zs {
                probs.push(target.p(x) * cond[y * nz + z]);
            }
        }
    }
    let joint = JointPmf::new(vars, probs)?;
    let atoms_a = (0..target.num_symbols()).map(|x| target.a_part(x).clone()).collect();
    let atoms_b = ys.iter().map(|&y| atoms.b[y].state.clone()).collect();
    let atoms_c = if kind == NetworkKind::TwoNode {
        Vec::new()
    } else {
        zs.iter().map(|&z| atoms.c[z].state.clone()).collect()
    };
    Extension::new(kind, joint, atoms_a, atoms_b, atoms_c)
}

fn lex_cmp(a: &[Vec<f64>], b: &[Vec<f64>]) -> std::cmp::Ordering {
    let fa = a.iter().flatten();
    let fb = b.iter().flatten();
    for (x, y) in fa.zip(fb) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.iter().map(Vec::len).sum::<usize>().cmp(&b.iter().map(Vec::len).sum())
}

/// Runs [`minimize_conditional`] on the atom sets proposed at every merge
/// order up to `opts.max_merge_order`, on the target and (if enabled) on its
/// coarsening, and returns the best result with every candidate recorded.
/// Values within `opts.tol` tie and are broken by the lexicographically
/// smallest conditional table.
pub fn optimize(target: &CqEnsemble, kind: NetworkKind, opts: &OptimizerOptions) -> Result<OptimizerResult> {
    target.require_factorization()?;
    let mut ensembles = vec![("fine", target.clone(), None)];
    if opts.coarsen {
        if let Some((coarse, map)) = target.coarsen()? {
            ensembles.push(("coarse", coarse, Some(map)));
        }
    }
    let mut jobs = Vec::new();
    for (name, ens, map) in &ensembles {
        for order in 0..=opts.max_merge_order {
            let mut atoms = propose_atoms(ens, order)?;
            if map.is_some() {
                // The fine conditionals' spectra are valid atoms for the
                // coarse source and are what makes merging pay off.
                atoms.union(&propose_atoms(target, order)?)?;
            }
            jobs.push((format!("{name}/order-{order}"), ens, map, atoms));
        }
    }
    let outcomes: Vec<Result<OptimizerResult>> = jobs
        .par_iter()
        .map(|(_, ens, _, atoms)| minimize_conditional(ens, atoms, kind, opts))
        .collect();

    let mut records = Vec::with_capacity(jobs.len());
    let mut best: Option<OptimizerResult> = None;
    let mut min_residual = f64::INFINITY;
    for ((label, _, map, atoms), outcome) in jobs.iter().zip(outcomes) {
        let mut rec = CandidateRecord {
            label: label.clone(),
            atoms_b: atoms.b.len(),
            atoms_c: atoms.c.len(),
            value: None,
            max_residual: None,
            error: None,
        };
        match outcome {
            Ok(mut res) => {
                rec.value = Some(res.value);
                rec.max_residual = res.residuals.iter().copied().reduce(f64::max);
                res.coarse_map = (*map).clone();
                let better = match &best {
                    None => true,
                    Some(b) if res.value < b.value - opts.tol => true,
                    Some(b) if res.value <= b.value + opts.tol => {
                        lex_cmp(&res.conditionals, &b.conditionals) == std::cmp::Ordering::Less
                    }
                    Some(_) => false,
                };
                if better {
                    best = Some(res);
                }
            }
            Err(Error::Infeasible { max_residual, detail }) => {
                min_residual = min_residual.min(max_residual);
                rec.max_residual = Some(max_residual);
                rec.error = Some(detail);
            }
            Err(e) => rec.error = Some(e.to_string()),
        }
        records.push(rec);
    }
    match best {
        Some(mut res) => {
            res.candidates = records;
            Ok(res)
        }
        None => Err(Error::Infeasible {
            max_residual: min_residual,
            detail: format!(
                "all {} candidate atom sets failed; the extension set may be empty: {}",
                records.len(),
                records
                    .iter()
                    .map(|r| format!("{} ({})", r.label, r.error.as_deref().unwrap_or("?")))
                    .collect::<Vec<_>>()
                    .join("; ")
            ),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;

    type Rho = DensityOperator<f64>;

    fn h(p: f64) -> f64 {
        if p <= 0.0 || p >= 1.0 {
            0.0
        } else {
            -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
        }
    }

    fn nonincreasing(trace: &[f64]) -> bool {
        trace.windows(2).all(|w| w[1] <= w[0] + 1e-9)
    }

    #[test]
    fn example1_two_atoms() {
        let atoms = AtomCandidateSet::user(vec![Rho::basis(2, 0).unwrap(), Rho::plus().unwrap()], vec![]);
        let target = families::example1_coarse_target().unwrap();
        let res = minimize_conditional(&target, &atoms, NetworkKind::TwoNode, &OptimizerOptions::default()).unwrap();
        assert!((res.value - (h(0.25) - 0.5)).abs() < 1e-9, "{}", res.value);
        assert!((res.value - 0.311278).abs() < 5e-6);
        assert!((res.conditionals[1][1] - 0.5).abs() < 1e-9);
        assert!(res.residuals.iter().all(|&r| r <= 1e-8));
    }

    #[test]
    fn example1_duplicate_atoms_stay_below_identity_code() {
        let atoms = AtomCandidateSet::user(
            vec![
                Rho::basis(2, 0).unwrap(),
                Rho::basis(2, 0).unwrap(),
                Rho::plus().unwrap(),
            ],
            vec![],
        );
        let target = families::example1_target().unwrap();
        let res = minimize_conditional(&target, &atoms, NetworkKind::TwoNode, &OptimizerOptions::default()).unwrap();
        assert!(res.value <= 1.5);
        assert!((res.value - h(0.25)).abs() < 1e-6, "{}", res.value);
        assert!(nonincreasing(&res.trace));
    }

    #[test]
    fn example2_closed_form() {
        for p in [0.1, 0.25, 0.5] {
            let atoms = AtomCandidateSet::user(vec![Rho::plus().unwrap(), Rho::minus().unwrap()], vec![]);
            let target = families::example2_target(p).unwrap();
            let res =
                minimize_conditional(&target, &atoms, NetworkKind::TwoNode, &OptimizerOptions::default()).unwrap();
            assert!((res.value - (1.0 - h(p))).abs() < 1e-9, "p={p}: {}", res.value);
        }
    }

    #[test]
    fn infeasible_atoms_report_the_residual() {
        let atoms = AtomCandidateSet::user(vec![Rho::basis(2, 0).unwrap()], vec![]);
        let target = families::example2_target(0.1).unwrap();
        match minimize_conditional(&target, &atoms, NetworkKind::TwoNode, &OptimizerOptions::default()) {
            Err(Error::Infeasible { max_residual, .. }) => assert!(max_residual > 0.1),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn pipeline_example1() {
        let res = optimize(
            &families::example1_target().unwrap(),
            NetworkKind::TwoNode,
            &OptimizerOptions::default(),
        )
        .unwrap();
        assert!(res.value <= 0.3113, "{} {:#?}", res.value, res.candidates);
        assert!(res.coarse_map.is_some());
        assert!(nonincreasing(&res.trace));
        assert!(res.extension.report().passed());
        assert!(!res.candidates.is_empty());
        assert!((two_node_rate(&res.extension).unwrap() - res.value).abs() < 1e-9);
    }

    #[test]
    fn pipeline_example2_and_product() {
        let opts = OptimizerOptions::default();
        let res = optimize(&families::example2_target(0.1).unwrap(), NetworkKind::TwoNode, &opts).unwrap();
        assert!((res.value - (1.0 - h(0.1))).abs() < 1e-6, "{}", res.value);
        let res = optimize(&families::example2_target(0.5).unwrap(), NetworkKind::TwoNode, &opts).unwrap();
        assert!(res.value.abs() < 1e-12);
        assert_eq!(res.extension.extension().num_y(), 1);
    }

    #[test]
    fn merged_atoms_never_lose_to_spectral_atoms() {
        let target = families::example1_coarse_target().unwrap();
        let opts = OptimizerOptions::default();
        let pure = minimize_conditional(
            &target,
            &propose_atoms(&target, 0).unwrap(),
            NetworkKind::TwoNode,
            &opts,
        );
        let merged = minimize_conditional(
            &target,
            &propose_atoms(&target, 2).unwrap(),
            NetworkKind::TwoNode,
            &opts,
        )
        .unwrap();
        if let Ok(pure) = pure {
            assert!(pure.value >= merged.value - 1e-9);
        }
    }

    #[test]
    fn cascade_bsc_corner_point() {
        let target = families::bsc_cascade(0.1).unwrap().induced_ensemble().unwrap();
        let atoms = AtomCandidateSet::user(
            vec![Rho::basis(2, 0).unwrap(), Rho::basis(2, 1).unwrap()],
            vec![Rho::basis(2, 0).unwrap(), Rho::basis(2, 1).unwrap()],
        );
        let opts = OptimizerOptions {
            lambda: 0.5,
            ..Default::default()
        };
        let res = minimize_conditional(&target, &atoms, NetworkKind::Cascade, &opts).unwrap();
        assert!((res.rate.r12 - 1.0).abs() < 1e-9);
        assert!((res.rate.r23.unwrap() - (1.0 - h(0.1))).abs() < 1e-9);
        assert!((res.value - (1.0 + 0.5 * (1.0 - h(0.1)))).abs() < 1e-9);
    }

    #[test]
    fn isolated_objective_matches_closed_form() {
        // X uniform, Z independent uniform, Y = X xor Z: I(X;Y|Z) = 1.
        let mut t = [[[0.0; 2]; 2]; 2];
        for x in 0..2 {
            for z in 0..2 {
                t[x][x ^ z][z] = 0.25;
            }
        }
        let ext = families::isolated_bits(t).unwrap();
        let target = ext.induced_ensemble().unwrap();
        let atoms = AtomCandidateSet::user(
            vec![Rho::basis(2, 0).unwrap(), Rho::basis(2, 1).unwrap()],
            vec![Rho::basis(2, 0).unwrap(), Rho::basis(2, 1).unwrap()],
        );
        let res = minimize_conditional(&target, &atoms, NetworkKind::Isolated, &OptimizerOptions::default());
        // η^x = ½(|x,0⟩⟨x,0| + |x̄,1⟩⟨x̄,1|) is a unique decomposition.
        let res = res.unwrap();
        assert!((res.value - 1.0).abs() < 1e-9, "{}", res.value);
    }

    #[test]
    fn isolated_rejects_correlated_ac() {
        let mut t = [[[0.0; 2]; 2]; 2];
        t[0][0][0] = 0.5;
        t[1][1][1] = 0.5;
        let target = families::isolated_bits(t).unwrap().induced_ensemble().unwrap();
        let atoms = AtomCandidateSet::user(
            vec![Rho::basis(2, 0).unwrap(), Rho::basis(2, 1).unwrap()],
            vec![Rho::basis(2, 0).unwrap(), Rho::basis(2, 1).unwrap()],
        );
        assert!(matches!(
            minimize_conditional(&target, &atoms, NetworkKind::Isolated, &OptimizerOptions::default()),
            Err(Error::ValidationFailed(_))
        ));
    }

    #[test]
    fn mixed_conditionals_trace_is_monotone() {
        // Both conditionals are interior to the hull of the four atoms, so
        // the feasible faces have free directions.
        let mixed = Rho::maximally_mixed(2).unwrap();
        let a = Rho::mixture(&[0.6, 0.4], &[&mixed, &Rho::basis(2, 0).unwrap()]).unwrap();
        let b = Rho::mixture(&[0.6, 0.4], &[&mixed, &Rho::minus().unwrap()]).unwrap();
        let src = JointPmf::new(vec![Alphabet::indexed("X", 2).unwrap()], vec![0.3, 0.7]).unwrap();
        let target = CqEnsemble::from_factors(
            src,
            vec![Rho::basis(2, 0).unwrap(), Rho::basis(2, 1).unwrap()],
            vec![a, b],
            &[2],
        )
        .unwrap();
        let atoms = AtomCandidateSet::user(
            vec![
                Rho::basis(2, 0).unwrap(),
                Rho::basis(2, 1).unwrap(),
                Rho::plus().unwrap(),
                Rho::minus().unwrap(),
            ],
            vec![],
        );
        let res = minimize_conditional(&target, &atoms, NetworkKind::TwoNode, &OptimizerOptions::default()).unwrap();
        assert!(res.trace.len() > 2);
        assert!(nonincreasing(&res.trace));
        assert!(res.value <= res.trace[0]);
    }
}
