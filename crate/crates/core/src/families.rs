//! Built-in ensembles and extensions used by the tests, the CLI and the
//! README walkthrough.

use crate::classical::{Alphabet, JointPmf};
use crate::error::Result;
use crate::model::{CqEnsemble, Extension, NetworkKind};
use crate::quantum::{ComplexMatrix, DensityOperator};

type Rho = DensityOperator<f64>;

fn named(name: &str, symbols: &[&str]) -> Result<Alphabet> {
    Alphabet::new(name, symbols.iter().map(|s| s.to_string()).collect())
}

fn ket(i: usize) -> Result<Rho> {
    Rho::basis(2, i)
}

/// `η = ½|0⟩⟨0| + ½|+⟩⟨+|`.
pub fn eta() -> Result<Rho> {
    Rho::mixture(&[0.5, 0.5], &[&ket(0)?, &Rho::plus()?]).map(|r| r.with_label("eta"))
}

/// `½|00⟩⟨00| + ¼|10⟩⟨10| + ¼|1+⟩⟨1+|` with the three-letter source.
pub fn example1_target() -> Result<CqEnsemble> {
    let src = JointPmf::new(vec![Alphabet::indexed("X", 3)?], vec![0.5, 0.25, 0.25])?;
    CqEnsemble::from_factors(
        src,
        vec![ket(0)?, ket(1)?, ket(1)?],
        vec![ket(0)?, ket(0)?, Rho::plus()?],
        &[2],
    )
}

/// `Y = X` on the three-letter source with atoms `|0⟩, |0⟩, |+⟩`.
pub fn example1_decomposition_a() -> Result<Extension> {
    let joint = JointPmf::from_entries(
        vec![Alphabet::indexed("X", 3)?, Alphabet::indexed("Y", 3)?],
        &[(vec![0, 0], 0.5), (vec![1, 1], 0.25), (vec![2, 2], 0.25)],
    )?;
    Extension::new(
        NetworkKind::TwoNode,
        joint,
        vec![ket(0)?, ket(1)?, ket(1)?],
        vec![ket(0)?, ket(0)?, Rho::plus()?],
        vec![],
    )
}

/// Two-letter source `½|0⟩⟨0|⊗|0⟩⟨0| + ½|1⟩⟨1|⊗η`.
pub fn example1_coarse_target() -> Result<CqEnsemble> {
    let src = JointPmf::new(vec![Alphabet::indexed("X", 2)?], vec![0.5, 0.5])?;
    CqEnsemble::from_factors(src, vec![ket(0)?, ket(1)?], vec![ket(0)?, eta()?], &[2])
}

/// Atoms `|0⟩, |+⟩` with joint `{(0,0): ½, (1,0): ¼, (1,+): ¼}`, rate
/// `h(¼) − ½ ≈ 0.311278` bits. Taking the coarse source's product form
/// literally as `Y = X` gives 1 bit instead; the saving comes from splitting
/// `η` over `|0⟩` and `|+⟩`.
pub fn example1_decomposition_b() -> Result<Extension> {
    let joint = JointPmf::from_entries(
        vec![Alphabet::indexed("X", 2)?, named("Y", &["0", "+"])?],
        &[(vec![0, 0], 0.5), (vec![1, 0], 0.25), (vec![1, 1], 0.25)],
    )?;
    Extension::new(
        NetworkKind::TwoNode,
        joint,
        vec![ket(0)?, ket(1)?],
        vec![ket(0)?, Rho::plus()?],
        vec![],
    )
}

/// Phase-flip target `½|0⟩⟨0|⊗[(1−p)|+⟩⟨+| + p|−⟩⟨−|] + ½|1⟩⟨1|⊗[p|+⟩⟨+| + (1−p)|−⟩⟨−|]`.
pub fn example2_target(p: f64) -> Result<CqEnsemble> {
    example2(p)?.induced_ensemble()
}

/// Extension of the phase-flip target over atoms `|+⟩, |−⟩`.
pub fn example2(p: f64) -> Result<Extension> {
    let joint = JointPmf::from_entries(
        vec![Alphabet::indexed("X", 2)?, named("Y", &["+", "-"])?],
        &[
            (vec![0, 0], 0.5 * (1.0 - p)),
            (vec![0, 1], 0.5 * p),
            (vec![1, 0], 0.5 * p),
            (vec![1, 1], 0.5 * (1.0 - p)),
        ],
    )?;
    Extension::new(
        NetworkKind::TwoNode,
        joint,
        vec![ket(0)?, ket(1)?],
        vec![Rho::plus()?, Rho::minus()?],
        vec![],
    )
}

/// The one-dimensional register state `[[1]]`.
pub fn trivial_register() -> Result<Rho> {
    Rho::new(ComplexMatrix::from_real_rows(&[&[1.0]])?, "1")
}

/// Cascade extension with a single-symbol `Z` and a one-dimensional `C`,
/// carrying the same `X Y` law and atoms as a two-node extension.
pub fn degenerate_z_cascade(two_node: &Extension) -> Result<Extension> {
    let j = two_node.joint();
    let mut vars = j.variables().to_vec();
    vars.push(Alphabet::indexed("Z", 1)?);
    let joint = JointPmf::new(vars, j.probs().to_vec())?;
    Extension::new(
        NetworkKind::Cascade,
        joint,
        two_node.atoms_a().to_vec(),
        two_node.atoms_b().to_vec(),
        vec![trivial_register()?],
    )
}

/// Uniform bit `X`, `Y = X`, `Z = X` through a binary symmetric channel with
/// crossover `flip`; all atoms are computational-basis states.
pub fn bsc_cascade(flip: f64) -> Result<Extension> {
    let mut entries = Vec::new();
    for x in 0..2 {
        for z in 0..2 {
            let pz = if z == x { 1.0 - flip } else { flip };
            entries.push((vec![x, x, z], 0.5 * pz));
        }
    }
    let joint = JointPmf::from_entries(
        vec![
            Alphabet::indexed("X", 2)?,
            Alphabet::indexed("Y", 2)?,
            Alphabet::indexed("Z", 2)?,
        ],
        &entries,
    )?;
    Extension::new(
        NetworkKind::Cascade,
        joint,
        vec![ket(0)?, ket(1)?],
        vec![ket(0)?, ket(1)?],
        vec![ket(0)?, ket(1)?],
    )
}

/// Isolated-node extension from an explicit `p(x, y, z)` table over bits with
/// computational-basis atoms on every register.
pub fn isolated_bits(table: [[[f64; 2]; 2]; 2]) -> Result<Extension> {
    let mut entries = Vec::new();
    for (x, ty) in table.iter().enumerate() {
        for (y, tz) in ty.iter().enumerate() {
            for (z, &p) in tz.iter().enumerate() {
                entries.push((vec![x, y, z], p));
            }
        }
    }
    let joint = JointPmf::from_entries(
        vec![
            Alphabet::indexed("X", 2)?,
            Alphabet::indexed("Y", 2)?,
            Alphabet::indexed("Z", 2)?,
        ],
        &entries,
    )?;
    Extension::new(
        NetworkKind::Isolated,
        joint,
        vec![ket(0)?, ket(1)?],
        vec![ket(0)?, ket(1)?],
        vec![ket(0)?, ket(1)?],
    )
}
