use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classical::JointPmf;
use crate::error::{invalid, Error, Result};
use crate::model::ensemble::CqEnsemble;
use crate::quantum::{ComplexMatrix, DensityOperator};

/// Default gate for every admissibility constraint.
pub const VALIDATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetworkKind {
    TwoNode,
    Cascade,
    Isolated,
}

impl NetworkKind {
    /// Number of classical variables in the extension's joint pmf.
    pub fn arity(self) -> usize {
        match self {
            NetworkKind::TwoNode => 2,
            NetworkKind::Cascade | NetworkKind::Isolated => 3,
        }
    }
}

impl fmt::Display for NetworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NetworkKind::TwoNode => "two-node",
            NetworkKind::Cascade => "cascade",
            NetworkKind::Isolated => "isolated",
        })
    }
}

/// Candidate c-q extension: a joint pmf over `X Y` (or `X Y Z`) plus the
/// product atoms prepared for each label.
#[derive(Debug, Clone)]
pub struct Extension {
    kind: NetworkKind,
    joint: JointPmf<f64>,
    atoms_a: Vec<DensityOperator<f64>>,
    atoms_b: Vec<DensityOperator<f64>>,
    atoms_c: Vec<DensityOperator<f64>>,
}

impl Extension {
    /// The joint pmf's variables are read positionally as `X, Y[, Z]`.
    /// `atoms_c` must be empty for the two-node kind.
    pub fn new(
        kind: NetworkKind,
        joint: JointPmf<f64>,
        atoms_a: Vec<DensityOperator<f64>>,
        atoms_b: Vec<DensityOperator<f64>>,
        atoms_c: Vec<DensityOperator<f64>>,
    ) -> Result<Self> {
        let shape = joint.shape();
        if shape.len() != kind.arity() {
            return Err(Error::DimensionMismatch(format!(
                "{kind} extension needs {} classical variables, joint has {}",
                kind.arity(),
                shape.len()
            )));
        }
        check_atoms("A", &atoms_a, shape[0])?;
        check_atoms("B", &atoms_b, shape[1])?;
        if kind == NetworkKind::TwoNode {
            if !atoms_c.is_empty() {
                return invalid("two-node extension takes no C atoms");
            }
        } else {
            check_atoms("C", &atoms_c, shape[2])?;
        }
        Ok(Self {
            kind,
            joint,
            atoms_a,
            atoms_b,
            atoms_c,
        })
    }

    pub fn kind(&self) -> NetworkKind {
        self.kind
    }

    pub fn joint(&self) -> &JointPmf<f64> {
        &self.joint
    }

    pub fn atoms_a(&self) -> &[DensityOperator<f64>] {
        &self.atoms_a
    }

    pub fn atoms_b(&self) -> &[DensityOperator<f64>] {
        &self.atoms_b
    }

    pub fn atoms_c(&self) -> &[DensityOperator<f64>] {
        &self.atoms_c
    }

    pub fn num_x(&self) -> usize {
        self.joint.shape()[0]
    }

    pub fn num_y(&self) -> usize {
        self.joint.shape()[1]
    }

    /// Size of the `Z` alphabet; 1 for the two-node kind.
    pub fn num_z(&self) -> usize {
        self.joint.shape().get(2).copied().unwrap_or(1)
    }

    /// Register dims `[A, B]` or `[A, B, C]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.atoms_a[0].dim(), self.atoms_b[0].dim()];
        if let Some(c) = self.atoms_c.first() {
            d.push(c.dim());
        }
        d
    }

    /// `p(x, y, z)` with `z = 0` for the two-node kind.
    pub fn p(&self, x: usize, y: usize, z: usize) -> f64 {
        let (ny, nz) = (self.num_y(), self.num_z());
        self.joint.probs()[(x * ny + y) * nz + z]
    }

    pub fn p_x(&self, x: usize) -> f64 {
        let (ny, nz) = (self.num_y(), self.num_z());
        self.joint.probs()[x * ny * nz..(x + 1) * ny * nz].iter().sum()
    }

    /// Product atom for the label pair `(y, z)` on `B` (or `B ⊗ C`).
    pub fn rest_atom(&self, y: usize, z: usize) -> Result<DensityOperator<f64>> {
        if self.kind == NetworkKind::TwoNode {
            Ok(self.atoms_b[y].clone())
        } else {
            self.atoms_b[y].tensor(&self.atoms_c[z])
        }
    }

    /// `Σ_{y,z} p(y,z|x) σ_B^y ⊗ σ_C^z`, or `None` when `p(x) = 0`.
    pub fn reconstruction(&self, x: usize) -> Result<Option<DensityOperator<f64>>> {
        let px = self.p_x(x);
        if px <= 0.0 {
            return Ok(None);
        }
        let d: usize = self.dims()[1..].iter().product();
        let mut acc = ComplexMatrix::zeros(d, d);
        for y in 0..self.num_y() {
            for z in 0..self.num_z() {
                let w = self.p(x, y, z);
                if w > 0.0 {
                    acc.axpy(w / px, self.rest_atom(y, z)?.matrix())?;
                }
            }
        }
        DensityOperator::new(acc, "reconstruction").map(Some)
    }

    /// Ensemble `{p(x), σ_A^x ⊗ reconstruction(x)}` this extension is exact for.
    /// Symbols with `p(x) = 0` receive the uniform mixture of the atoms.
    pub fn induced_ensemble(&self) -> Result<CqEnsemble> {
        let source = self.joint.marginal(&[self.joint.variables()[0].name()])?;
        let mut rests = Vec::with_capacity(self.num_x());
        for x in 0..self.num_x() {
            let r = match self.reconstruction(x)? {
                Some(r) => r,
                None => self.rest_atom(0, 0)?,
            };
            rests.push(r);
        }
        CqEnsemble::from_factors(source, self.atoms_a.clone(), rests, &self.dims()[1..])
    }

    /// `σ_{AC} = Σ_{x,z} p(x,z) σ_A^x ⊗ σ_C^z`.
    fn sigma_ac(&self) -> Result<DensityOperator<f64>> {
        let da = self.atoms_a[0].dim();
        let dc = self.atoms_c[0].dim();
        let mut acc = ComplexMatrix::zeros(da * dc, da * dc);
        for x in 0..self.num_x() {
            for z in 0..self.num_z() {
                let w: f64 = (0..self.num_y()).map(|y| self.p(x, y, z)).sum();
                if w > 0.0 {
                    acc.axpy(w, self.atoms_a[x].tensor(&self.atoms_c[z])?.matrix())?;
                }
            }
        }
        DensityOperator::new(acc, "sigma_AC")
    }

    fn weighted_average(
        atoms: &[DensityOperator<f64>],
        weights: impl Iterator<Item = f64>,
    ) -> Result<DensityOperator<f64>> {
        let w: Vec<f64> = weights.collect();
        let refs: Vec<&DensityOperator<f64>> = atoms.iter().collect();
        DensityOperator::mixture(&w, &refs)
    }
}

fn check_atoms(register: &str, atoms: &[DensityOperator<f64>], expected: usize) -> Result<()> {
    if atoms.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "{} {register} atoms for an alphabet of size {expected}",
            atoms.len()
        )));
    }
    if atoms.iter().any(|a| a.dim() != atoms[0].dim()) {
        return Err(Error::DimensionMismatch(format!(
            "{register} atoms differ in dimension"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub deviation: f64,
    pub passed: bool,
}

/// Outcome of every admissibility constraint, with measured deviations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub tolerance: f64,
    pub checks: Vec<ConstraintCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn max_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.deviation).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: String, deviation: f64) {
        let passed = deviation <= self.tolerance;
        self.checks.push(ConstraintCheck {
            name,
            deviation,
            passed,
        });
    }
}

/// Checks `ext` against `target` at [`VALIDATION_TOL`].
pub fn validate_extension(ext: &Extension, target: &CqEnsemble) -> Result<ValidationReport> {
    validate_extension_with(ext, target, VALIDATION_TOL)
}

/// Shape or dimension mismatches are errors; violated constraints are
/// reported with their deviation (TV for the source marginal, trace distance
/// for states).
pub fn validate_extension_with(ext: &Extension, target: &CqEnsemble, tol: f64) -> Result<ValidationReport> {
    let dims = ext.dims();
    if dims != target.dims() {
        return Err(Error::DimensionMismatch(format!(
            "extension registers {dims:?} vs target registers {:?}",
            target.dims()
        )));
    }
    if ext.num_x() != target.num_symbols() {
        return Err(Error::DimensionMismatch(format!(
            "extension has {} source symbols, target has {}",
            ext.num_x(),
            target.num_symbols()
        )));
    }
    let mut report = ValidationReport {
        tolerance: tol,
        checks: Vec::new(),
    };
    let px: Vec<f64> = (0..ext.num_x()).map(|x| ext.p_x(x)).collect();
    let tv = 0.5
        * px.iter()
            .zip(target.source().probs())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    report.push("source marginal (TV)".into(), tv);

    let symbols = target.source_alphabet().symbols();
    for x in 0..ext.num_x() {
        if target.p(x) <= 0.0 && px[x] <= 0.0 {
            continue;
        }
        report.push(format!("factorization x={}", symbols[x]), target.factor_gap(x));
        report.push(
            format!("A atom x={}", symbols[x]),
            ext.atoms_a[x].trace_distance(target.a_part(x))?,
        );
        let dev = match ext.reconstruction(x)? {
            Some(r) => r.trace_distance(target.rest_part(x))?,
            None => 1.0,
        };
        report.push(format!("reconstruction x={}", symbols[x]), dev);
    }

    if ext.kind == NetworkKind::Isolated {
        let ac = ext.sigma_ac()?;
        let pz: Vec<f64> = (0..ext.num_z())
            .map(|z| {
                (0..ext.num_x())
                    .flat_map(|x| (0..ext.num_y()).map(move |y| (x, y)))
                    .map(|(x, y)| ext.p(x, y, z))
                    .sum()
            })
            .collect();
        let sa = Extension::weighted_average(&ext.atoms_a, px.iter().copied())?;
        let sc = Extension::weighted_average(&ext.atoms_c, pz.into_iter())?;
        report.push(
            "isolated: sigma_AC = sigma_A x sigma_C".into(),
            ac.trace_distance(&sa.tensor(&sc)?)?,
        );
    }
    Ok(report)
}

/// An extension that passed validation against a target ensemble.
#[derive(Debug, Clone)]
pub struct ValidatedExtension {
    ext: Extension,
    target: CqEnsemble,
    report: ValidationReport,
}

impl ValidatedExtension {
    pub fn new(ext: Extension, target: CqEnsemble) -> Result<Self> {
        Self::with_tolerance(ext, target, VALIDATION_TOL)
    }

    pub fn with_tolerance(ext: Extension, target: CqEnsemble, tol: f64) -> Result<Self> {
        let report = validate_extension_with(&ext, &target, tol)?;
        if !report.passed() {
            let detail: Vec<String> = report
                .failures()
                .map(|c| format!("{} deviates by {:e}", c.name, c.deviation))
                .collect();
            return Err(Error::ValidationFailed(detail.join("; ")));
        }
        Ok(Self { ext, target, report })
    }

    /// Validates against the ensemble the extension itself induces.
    pub fn self_consistent(ext: Extension) -> Result<Self> {
        let target = ext.induced_ensemble()?;
        Self::new(ext, target)
    }

    pub fn extension(&self) -> &Extension {
        &self.ext
    }

    pub fn target(&self) -> &CqEnsemble {
        &self.target
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn kind(&self) -> NetworkKind {
        self.ext.kind
    }

    fn names(&self) -> Vec<&str> {
        self.ext.joint.variables().iter().map(|a| a.name()).collect()
    }

    fn expect_kind(&self, kind: NetworkKind) -> Result<()> {
        if self.ext.kind != kind {
            return Err(Error::WrongKind {
                expected: kind.to_string(),
                got: self.ext.kind.to_string(),
            });
        }
        Ok(())
    }
}

/// `(R_{1→2}, R_{2→3})` in bits per symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub r12: f64,
    pub r23: Option<f64>,
}

/// `I(X;Y)` of a two-node extension.
pub fn two_node_rate(v: &ValidatedExtension) -> Result<f64> {
    v.expect_kind(NetworkKind::TwoNode)?;
    let n = v.names();
    Ok(v.ext.joint.mutual_information(&[n[0]], &[n[1]])?.max(0.0))
}

/// Corner point `(I(X;YZ), I(X;Z))` of a cascade extension.
pub fn cascade_rate_point(v: &ValidatedExtension) -> Result<RatePoint> {
    v.expect_kind(NetworkKind::Cascade)?;
    let n = v.names();
    let r12 = v.ext.joint.mutual_information(&[n[0]], &[n[1], n[2]])?.max(0.0);
    let r23 = v.ext.joint.mutual_information(&[n[0]], &[n[2]])?.max(0.0);
    Ok(RatePoint { r12, r23: Some(r23) })
}

/// `I(X;Y|Z)` of an isolated-node extension.
pub fn isolated_rate(v: &ValidatedExtension) -> Result<f64> {
    v.expect_kind(NetworkKind::Isolated)?;
    let n = v.names();
    Ok(v.ext
        .joint
        .conditional_mutual_information(&[n[0]], &[n[1]], &[n[2]])?
        .max(0.0))
}
