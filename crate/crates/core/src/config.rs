//! JSON model files: ensembles, extensions and the literal formats they use.
//!
//! A matrix literal is a row-major nested array of `[re, im]` pairs, e.g.
//! `[[[0.75,0],[0.25,0]],[[0.25,0],[0.25,0]]]`. A pmf literal names its
//! variables with their symbols and lists the nonzero cells by symbol tuple:
//!
//! ```json
//! {"variables": [{"name": "X", "symbols": ["0", "1"]}],
//!  "entries": [{"tuple": ["0"], "p": 0.5}, {"tuple": ["1"], "p": 0.5}]}
//! ```
//!
//! A model file carries a `schema` tag and either an ensemble, an extension,
//! or both. An extension alone is paired with the ensemble it induces.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::classical::{Alphabet, JointPmf};
use crate::error::{Error, Result};
use crate::families;
use crate::model::{CqEnsemble, Extension, NetworkKind, ValidatedExtension, VALIDATION_TOL};
use crate::quantum::{ComplexMatrix, DensityOperator};

/// Schema tag of model files.
pub const MODEL_SCHEMA: &str = "qcoord.model/1";

pub type MatrixLiteral = Vec<Vec<[f64; 2]>>;

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub fn matrix_from_literal(lit: &MatrixLiteral) -> Result<ComplexMatrix<f64>> {
    let rows = lit.len();
    let cols = lit.first().map_or(0, Vec::len);
    if lit.iter().any(|r| r.len() != cols) {
        return Err(config_err("matrix literal rows differ in length"));
    }
    let data = lit.iter().flatten().map(|&[re, im]| Complex::new(re, im)).collect();
    ComplexMatrix::new(rows, cols, data)
}

pub fn matrix_to_literal(m: &ComplexMatrix<f64>) -> MatrixLiteral {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn state_from_literal(lit: &MatrixLiteral, label: &str) -> Result<DensityOperator<f64>> {
    DensityOperator::new(matrix_from_literal(lit)?, label)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableLiteral {
    pub name: String,
    pub symbols: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryLiteral {
    pub tuple: Vec<String>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmfLiteral {
    pub variables: Vec<VariableLiteral>,
    pub entries: Vec<EntryLiteral>,
}

impl PmfLiteral {
    pub fn to_pmf(&self) -> Result<JointPmf<f64>> {
        let vars = self
            .variables
            .iter()
            .map(|v| Alphabet::new(v.name.clone(), v.symbols.clone()))
            .collect::<Result<Vec<_>>>()?;
        let mut probs = vec![0.0; vars.iter().map(Alphabet::len).product()];
        for e in &self.entries {
            if e.tuple.len() != vars.len() {
                return Err(config_err(format!("pmf entry {:?} has the wrong arity", e.tuple)));
            }
            let mut idx = 0;
            for (a, s) in vars.iter().zip(&e.tuple) {
                let k = a
                    .position(s)
                    .ok_or_else(|| config_err(format!("unknown symbol `{s}` for variable `{}`", a.name())))?;
                idx = idx * a.len() + k;
            }
            probs[idx] += e.p;
        }
        JointPmf::new(vars, probs)
    }

    pub fn from_pmf(pmf: &JointPmf<f64>) -> Self {
        let variables = pmf
            .variables()
            .iter()
            .map(|a| VariableLiteral {
                name: a.name().to_string(),
                symbols: a.symbols().to_vec(),
            })
            .collect();
        let entries = pmf
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(flat, &p)| EntryLiteral {
                tuple: pmf
                    .tuple_of(flat)
                    .iter()
                    .zip(pmf.variables())
                    .map(|(&k, a)| a.symbols()[k].clone())
                    .collect(),
                p,
            })
            .collect();
        Self { variables, entries }
    }
}

/// Target ensemble: a source pmf and one joint state per source symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub source: PmfLiteral,
    /// Register dimensions `[A, B]` or `[A, B, C]`.
    pub dims: Vec<usize>,
    /// `ω^x` on the full register, in source-symbol order.
    pub states: Vec<MatrixLiteral>,
}

impl EnsembleConfig {
    pub fn to_ensemble(&self) -> Result<CqEnsemble> {
        let source = self.source.to_pmf()?;
        let states = self
            .states
            .iter()
            .enumerate()
            .map(|(x, m)| state_from_literal(m, &format!("omega_{x}")))
            .collect::<Result<Vec<_>>>()?;
        CqEnsemble::new(source, self.dims.clone(), states)
    }

    pub fn from_ensemble(e: &CqEnsemble) -> Self {
        Self {
            source: PmfLiteral::from_pmf(e.source()),
            dims: e.dims().to_vec(),
            states: e.states().iter().map(|s| matrix_to_literal(s.matrix())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionConfig {
    pub kind: NetworkKind,
    /// Joint pmf over `X, Y[, Z]` in that order.
    pub joint: PmfLiteral,
    pub atoms_a: Vec<MatrixLiteral>,
    pub atoms_b: Vec<MatrixLiteral>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms_c: Vec<MatrixLiteral>,
}

fn atoms(lits: &[MatrixLiteral], register: &str) -> Result<Vec<DensityOperator<f64>>> {
    lits.iter()
        .enumerate()
        .map(|(k, m)| state_from_literal(m, &format!("{register}_{k}")))
        .collect()
}

impl ExtensionConfig {
    pub fn to_extension(&self) -> Result<Extension> {
        Extension::new(
            self.kind,
            self.joint.to_pmf()?,
            atoms(&self.atoms_a, "a")?,
            atoms(&self.atoms_b, "b")?,
            atoms(&self.atoms_c, "c")?,
        )
    }

    pub fn from_extension(e: &Extension) -> Self {
        let lits = |v: &[DensityOperator<f64>]| v.iter().map(|s| matrix_to_literal(s.matrix())).collect();
        Self {
            kind: e.kind(),
            joint: PmfLiteral::from_pmf(e.joint()),
            atoms_a: lits(e.atoms_a()),
            atoms_b: lits(e.atoms_b()),
            atoms_c: lits(e.atoms_c()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension: Option<ExtensionConfig>,
    /// Validation gate for the extension against the ensemble.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        if m.schema != MODEL_SCHEMA {
            return Err(config_err(format!(
                "unsupported schema `{}`, expected `{MODEL_SCHEMA}`",
                m.schema
            )));
        }
        if m.ensemble.is_none() && m.extension.is_none() {
            return Err(config_err("model file needs an ensemble, an extension, or both"));
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files serialize")
    }

    pub fn from_parts(ensemble: Option<&CqEnsemble>, extension: Option<&Extension>) -> Self {
        Self {
            schema: MODEL_SCHEMA.to_string(),
            ensemble: ensemble.map(EnsembleConfig::from_ensemble),
            extension: extension.map(ExtensionConfig::from_extension),
            tolerance: None,
        }
    }

    pub fn ensemble(&self) -> Result<Option<CqEnsemble>> {
        self.ensemble.as_ref().map(EnsembleConfig::to_ensemble).transpose()
    }

    pub fn extension(&self) -> Result<Option<Extension>> {
        self.extension.as_ref().map(ExtensionConfig::to_extension).transpose()
    }

    /// Target ensemble: the declared one, else the one the extension induces.
    pub fn target(&self) -> Result<CqEnsemble> {
        match (self.ensemble()?, self.extension()?) {
            (Some(e), _) => Ok(e),
            (None, Some(x)) => x.induced_ensemble(),
            (None, None) => Err(config_err("model file has neither ensemble nor extension")),
        }
    }

    /// The extension validated against [`ModelFile::target`].
    pub fn validated(&self) -> Result<ValidatedExtension> {
        let ext = self
            .extension()?
            .ok_or_else(|| config_err("model file declares no extension"))?;
        ValidatedExtension::with_tolerance(ext, self.target()?, self.tolerance.unwrap_or(VALIDATION_TOL))
    }
}

/// Built-in models by name. `param` is the flip probability of `example2`
/// and `bsc-cascade`.
pub fn builtin(name: &str, param: Option<f64>) -> Result<ModelFile> {
    let need = |what: &str| param.ok_or_else(|| config_err(format!("builtin `{name}` needs `{what}`")));
    if param.is_some() && !PARAMETRIC.contains(&name) {
        return Err(config_err(format!("builtin `{name}` takes no parameter")));
    }
    let (ens, ext) = match name {
        "example1" => (Some(families::example1_target()?), None),
        "example1-a" => (
            Some(families::example1_target()?),
            Some(families::example1_decomposition_a()?),
        ),
        "example1-coarse" => (Some(families::example1_coarse_target()?), None),
        "example1-b" => (
            Some(families::example1_coarse_target()?),
            Some(families::example1_decomposition_b()?),
        ),
        "example1-b-cascade" => (
            None,
            Some(families::degenerate_z_cascade(&families::example1_decomposition_b()?)?),
        ),
        "example2" => (None, Some(families::example2(need("p")?)?)),
        "bsc-cascade" => (None, Some(families::bsc_cascade(need("p")?)?)),
        other => return Err(config_err(format!("unknown builtin model `{other}`"))),
    };
    Ok(ModelFile::from_parts(ens.as_ref(), ext.as_ref()))
}

/// Builtins that take a family parameter.
pub const PARAMETRIC: &[&str] = &["example2", "bsc-cascade"];

/// Names accepted by [`builtin`].
pub const BUILTINS: &[&str] = &[
    "example1",
    "example1-a",
    "example1-coarse",
    "example1-b",
    "example1-b-cascade",
    "example2",
    "bsc-cascade",
];
