//! Hilbert space of the processor: two information resonators, the bus
//! resonator and a three-level transmon.
//!
//! Basis states are ordered `(n1, n_bus, n2, level)` with the qutrit level
//! varying fastest, i.e. the space is `r1 ⊗ R ⊗ r2 ⊗ q`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub const QUTRIT_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subsystem {
    R1,
    Bus,
    R2,
    Qutrit,
}

impl Subsystem {
    pub fn name(self) -> &'static str {
        match self {
            Subsystem::R1 => "r1",
            Subsystem::Bus => "R",
            Subsystem::R2 => "r2",
            Subsystem::Qutrit => "q",
        }
    }

    fn slot(self) -> usize {
        match self {
            Subsystem::R1 => 0,
            Subsystem::Bus => 1,
            Subsystem::R2 => 2,
            Subsystem::Qutrit => 3,
        }
    }
}

/// Transmon level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    G,
    E,
    F,
}

impl Level {
    pub fn index(self) -> usize {
        match self {
            Level::G => 0,
            Level::E => 1,
            Level::F => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Level> {
        match i {
            0 => Some(Level::G),
            1 => Some(Level::E),
            2 => Some(Level::F),
            _ => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Level::G => 'g',
            Level::E => 'e',
            Level::F => 'f',
        };
        write!(f, "{c}")
    }
}

/// Qutrit operators appearing in the Hamiltonian and the dissipators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QutritOp {
    /// `|e><g|`
    RaiseGe,
    /// `|f><e|`
    RaiseEf,
    /// `|e><e|`
    ProjectE,
    /// `|f><f|`
    ProjectF,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisLabel {
    pub n1: usize,
    pub n_bus: usize,
    pub n2: usize,
    pub level: Level,
}

impl BasisLabel {
    /// Total number of excitations; the qutrit contributes 0, 1 or 2.
    pub fn excitations(&self) -> usize {
        self.n1 + self.n_bus + self.n2 + self.level.index()
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{},{},{}>", self.n1, self.n_bus, self.n2, self.level)
    }
}

/// Truncated tensor-product layout `r1 ⊗ R ⊗ r2 ⊗ q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceLayout {
    resonator_dims: [usize; 3],
}

impl Default for SpaceLayout {
    fn default() -> Self {
        SpaceLayout {
            resonator_dims: [3, 3, 3],
        }
    }
}

impl SpaceLayout {
    /// Builds the layout from the Fock truncations of `(r1, R, r2)`.
    pub fn new(resonator_dims: [usize; 3]) -> Result<Self> {
        if let Some(&d) = resonator_dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidTruncation(d));
        }
        Ok(SpaceLayout { resonator_dims })
    }

    pub fn resonator_dims(&self) -> [usize; 3] {
        self.resonator_dims
    }

    pub fn dims(&self) -> [usize; 4] {
        let [a, b, c] = self.resonator_dims;
        [a, b, c, QUTRIT_DIM]
    }

    pub fn dim(&self, sub: Subsystem) -> usize {
        self.dims()[sub.slot()]
    }

    pub fn total_dim(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn index(&self, n1: usize, n_bus: usize, n2: usize, level: Level) -> Result<usize> {
        let [d1, db, d2] = self.resonator_dims;
        for (sub, n, d) in [
            (Subsystem::R1, n1, d1),
            (Subsystem::Bus, n_bus, db),
            (Subsystem::R2, n2, d2),
        ] {
            if n >= d {
                return Err(Error::OutOfRange {
                    subsystem: sub.name(),
                    occupation: n,
                    dim: d,
                });
            }
        }
        Ok(((n1 * db + n_bus) * d2 + n2) * QUTRIT_DIM + level.index())
    }

    pub fn label(&self, index: usize) -> BasisLabel {
        let [_, db, d2] = self.resonator_dims;
        let level = Level::from_index(index % QUTRIT_DIM).expect("qutrit index < 3");
        let rest = index / QUTRIT_DIM;
        let n2 = rest % d2;
        let rest = rest / d2;
        BasisLabel {
            n1: rest / db,
            n_bus: rest % db,
            n2,
            level,
        }
    }

    pub fn labels(&self) -> impl Iterator<Item = BasisLabel> + '_ {
        (0..self.total_dim()).map(move |i| self.label(i))
    }

    /// Embeds a local operator acting on `sub` into the full space.
    fn embed(&self, sub: Subsystem, local: &CMatrix) -> CMatrix {
        let dims = self.dims();
        debug_assert_eq!(local.nrows(), dims[sub.slot()]);
        let mut out = CMatrix::identity(1, 1);
        for (slot, &d) in dims.iter().enumerate() {
            let factor = if slot == sub.slot() {
                local.clone()
            } else {
                CMatrix::identity(d, d)
            };
            out = out.kronecker(&factor);
        }
        out
    }

    fn check(&self, other: &SpaceLayout) -> Result<()> {
        if self != other {
            return Err(Error::DimensionMismatch {
                expected: self.total_dim(),
                found: other.total_dim(),
            });
        }
        Ok(())
    }
}

/// A dense operator on the full processor space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    layout: SpaceLayout,
    matrix: CMatrix,
}

impl Operator {
    pub fn from_matrix(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
        let n = layout.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Operator { layout, matrix })
    }

    pub fn zeros(layout: SpaceLayout) -> Self {
        let n = layout.total_dim();
        Operator {
            layout,
            matrix: CMatrix::zeros(n, n),
        }
    }

    pub fn identity(layout: SpaceLayout) -> Self {
        let n = layout.total_dim();
        Operator {
            layout,
            matrix: CMatrix::identity(n, n),
        }
    }

    pub fn layout(&self) -> SpaceLayout {
        self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            layout: self.layout,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, c: C64) -> Operator {
        Operator {
            layout: self.layout,
            matrix: &self.matrix * c,
        }
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        Operator {
            layout: self.layout,
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        }
    }

    pub fn apply(&self, psi: &PureState) -> Result<CVector> {
        self.layout.check(&psi.layout)?;
        Ok(&self.matrix * &psi.amplitudes)
    }

    /// Relative Hermiticity defect `‖A − A†‖_F / ‖A‖_F` (0 for the zero operator).
    pub fn hermiticity_defect(&self) -> f64 {
        let norm = self.matrix.norm();
        if norm == 0.0 {
            return 0.0;
        }
        (&self.matrix - self.matrix.adjoint()).norm() / norm
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.layout, rhs.layout, "layout mismatch");
        Operator {
            layout: self.layout,
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.layout, rhs.layout, "layout mismatch");
        Operator {
            layout: self.layout,
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.layout, rhs.layout, "layout mismatch");
        Operator {
            layout: self.layout,
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(C64::new(rhs, 0.0))
    }
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Annihilation operator of a bosonic mode, identity elsewhere.
pub fn annihilation(layout: SpaceLayout, mode: Subsystem) -> Result<Operator> {
    if mode == Subsystem::Qutrit {
        return Err(Error::WrongSubsystem(mode.name()));
    }
    let d = layout.dim(mode);
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(Operator {
        layout,
        matrix: layout.embed(mode, &a),
    })
}

pub fn creation(layout: SpaceLayout, mode: Subsystem) -> Result<Operator> {
    Ok(annihilation(layout, mode)?.adjoint())
}

pub fn number(layout: SpaceLayout, mode: Subsystem) -> Result<Operator> {
    let a = annihilation(layout, mode)?;
    Ok(&a.adjoint() * &a)
}

pub fn qutrit_op(layout: SpaceLayout, which: QutritOp) -> Operator {
    let (row, col) = match which {
        QutritOp::RaiseGe => (1, 0),
        QutritOp::RaiseEf => (2, 1),
        QutritOp::ProjectE => (1, 1),
        QutritOp::ProjectF => (2, 2),
    };
    let mut local = CMatrix::zeros(QUTRIT_DIM, QUTRIT_DIM);
    local[(row, col)] = ONE;
    Operator {
        layout,
        matrix: layout.embed(Subsystem::Qutrit, &local),
    }
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    layout: SpaceLayout,
    amplitudes: CVector,
}

impl PureState {
    /// Accepts amplitudes that are already normalized to within 1e-12.
    pub fn from_amplitudes(layout: SpaceLayout, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.total_dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::param("amplitudes", format!("norm {norm} is not 1")));
        }
        Ok(PureState { layout, amplitudes })
    }

    /// Normalizes the given amplitudes; fails on the zero vector.
    pub fn normalized(layout: SpaceLayout, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::param("amplitudes", "cannot normalize a zero vector"));
        }
        PureState::from_amplitudes(layout, amplitudes / C64::new(norm, 0.0))
    }

    pub fn layout(&self) -> SpaceLayout {
        self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, n1: usize, n_bus: usize, n2: usize, level: Level) -> Result<C64> {
        Ok(self.amplitudes[self.layout.index(n1, n_bus, n2, level)?])
    }

    /// `<self|other>`
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        self.layout.check(&other.layout)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix {
            layout: self.layout,
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    /// Largest excitation number carrying nonzero amplitude.
    pub fn max_excitations(&self) -> usize {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(i, _)| self.layout.label(i).excitations())
            .max()
            .unwrap_or(0)
    }
}

/// `|n1, n_bus, n2, level>`
pub fn basis_state(layout: SpaceLayout, n1: usize, n_bus: usize, n2: usize, level: Level) -> Result<PureState> {
    let idx = layout.index(n1, n_bus, n2, level)?;
    let mut amplitudes = CVector::zeros(layout.total_dim());
    amplitudes[idx] = ONE;
    Ok(PureState { layout, amplitudes })
}

/// Summary of how far a matrix is from a valid density operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Physicality {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl Physicality {
    pub const IDEAL: Physicality = Physicality {
        trace_error: 0.0,
        hermiticity_error: 0.0,
        min_eigenvalue: f64::INFINITY,
    };

    /// Worst case of two reports.
    pub fn worst(self, other: Physicality) -> Physicality {
        Physicality {
            trace_error: self.trace_error.max(other.trace_error),
            hermiticity_error: self.hermiticity_error.max(other.hermiticity_error),
            min_eigenvalue: self.min_eigenvalue.min(other.min_eigenvalue),
        }
    }

    /// Checks the density-matrix tolerances used throughout the crate:
    /// unit trace to 1e-9, Hermitian to 1e-10, eigenvalues above -1e-8.
    pub fn is_physical(&self) -> bool {
        self.trace_error <= 1e-9 && self.hermiticity_error <= 1e-10 && self.min_eigenvalue >= -1e-8
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: SpaceLayout,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn from_matrix(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
        let n = layout.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(DensityMatrix { layout, matrix })
    }

    pub fn layout(&self) -> SpaceLayout {
        self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ ρ_ij ρ_ji = Σ |ρ_ij|² for Hermitian ρ.
        (&self.matrix * &self.matrix).trace().re
    }

    /// `<ψ|ρ|ψ>`
    pub fn expectation(&self, psi: &PureState) -> Result<f64> {
        self.layout.check(&psi.layout)?;
        let v = &self.matrix * &psi.amplitudes;
        Ok(psi.amplitudes.dotc(&v).re)
    }

    pub fn expectation_op(&self, op: &Operator) -> Result<C64> {
        self.layout.check(&op.layout)?;
        Ok((&op.matrix * &self.matrix).trace())
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(herm)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn physicality(&self) -> Physicality {
        Physicality {
            trace_error: (self.trace() - ONE).norm(),
            hermiticity_error: self.hermiticity_error(),
            min_eigenvalue: self.min_eigenvalue(),
        }
    }

    /// Largest excitation number appearing on the diagonal.
    pub fn max_excitations(&self) -> usize {
        (0..self.layout.total_dim())
            .filter(|&i| self.matrix[(i, i)].norm() > 0.0)
            .map(|i| self.layout.label(i).excitations())
            .max()
            .unwrap_or(0)
    }
}

impl From<&PureState> for DensityMatrix {
    fn from(psi: &PureState) -> Self {
        psi.projector()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_layout() -> SpaceLayout {
        SpaceLayout::new([3, 3, 3]).unwrap()
    }

    #[test]
    fn total_dimensions() {
        assert_eq!(SpaceLayout::new([2, 2, 2]).unwrap().total_dim(), 24);
        assert_eq!(SpaceLayout::new([3, 3, 3]).unwrap().total_dim(), 81);
        assert_eq!(SpaceLayout::new([3, 4, 3]).unwrap().total_dim(), 108);
    }

    #[test]
    fn truncation_below_two_is_rejected() {
        assert_eq!(SpaceLayout::new([3, 1, 3]), Err(Error::InvalidTruncation(1)));
        assert_eq!(SpaceLayout::new([0, 3, 3]), Err(Error::InvalidTruncation(0)));
    }

    #[test]
    fn index_round_trip() {
        let layout = SpaceLayout::new([3, 4, 2]).unwrap();
        for i in 0..layout.total_dim() {
            let l = layout.label(i);
            assert_eq!(layout.index(l.n1, l.n_bus, l.n2, l.level).unwrap(), i);
        }
    }

    #[test]
    fn ladder_on_fock_states() {
        let layout = default_layout();
        let a = annihilation(layout, Subsystem::Bus).unwrap();
        let vac = basis_state(layout, 0, 0, 0, Level::G).unwrap();
        assert_eq!(a.apply(&vac).unwrap().norm(), 0.0);

        let one = basis_state(layout, 0, 1, 0, Level::G).unwrap();
        assert_eq!(&a.apply(&one).unwrap(), vac.amplitudes());

        let two = basis_state(layout, 0, 2, 0, Level::G).unwrap();
        let n = number(layout, Subsystem::Bus).unwrap();
        let out = n.apply(&two).unwrap();
        assert!((out - two.amplitudes() * C64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn qutrit_is_not_a_mode() {
        assert_eq!(
            annihilation(default_layout(), Subsystem::Qutrit),
            Err(Error::WrongSubsystem("q"))
        );
    }

    #[test]
    fn qutrit_transitions() {
        let layout = default_layout();
        let g = basis_state(layout, 0, 0, 0, Level::G).unwrap();
        let e = basis_state(layout, 0, 0, 0, Level::E).unwrap();
        let raise_ge = qutrit_op(layout, QutritOp::RaiseGe);
        assert_eq!(&raise_ge.apply(&g).unwrap(), e.amplitudes());
        let raise_ef = qutrit_op(layout, QutritOp::RaiseEf);
        assert_eq!(raise_ef.apply(&g).unwrap().norm(), 0.0);
        let pe = qutrit_op(layout, QutritOp::ProjectE);
        assert_eq!(&pe * &pe, pe);
    }

    #[test]
    fn basis_state_bounds() {
        let layout = SpaceLayout::new([3, 2, 3]).unwrap();
        assert!(basis_state(layout, 0, 1, 0, Level::E).is_ok());
        assert!(matches!(
            basis_state(layout, 0, 2, 0, Level::E),
            Err(Error::OutOfRange {
                subsystem: "R",
                occupation: 2,
                dim: 2
            })
        ));
        let psi1 = basis_state(default_layout(), 1, 0, 0, Level::G).unwrap();
        assert_eq!(psi1.amplitude(1, 0, 0, Level::G).unwrap(), ONE);
    }

    #[test]
    fn distinct_subsystems_commute_exactly() {
        let layout = SpaceLayout::new([3, 3, 2]).unwrap();
        let mut ops = Vec::new();
        for mode in [Subsystem::R1, Subsystem::Bus, Subsystem::R2] {
            let a = annihilation(layout, mode).unwrap();
            ops.push((mode, a.adjoint()));
            ops.push((mode, a));
        }
        for q in [
            QutritOp::RaiseGe,
            QutritOp::RaiseEf,
            QutritOp::ProjectE,
            QutritOp::ProjectF,
        ] {
            let op = qutrit_op(layout, q);
            ops.push((Subsystem::Qutrit, op.adjoint()));
            ops.push((Subsystem::Qutrit, op));
        }
        for (sa, a) in &ops {
            for (sb, b) in &ops {
                if sa != sb {
                    assert_eq!(a.commutator(b).max_abs(), 0.0, "{sa:?} vs {sb:?}");
                }
            }
        }
    }

    #[test]
    fn number_operator_spectrum_has_expected_multiplicities() {
        let layout = SpaceLayout::new([2, 4, 3]).unwrap();
        let n = number(layout, Subsystem::Bus).unwrap();
        let eig = SymmetricEigen::new(n.into_matrix()).eigenvalues;
        let mut counts = [0usize; 4];
        for v in eig.iter() {
            let k = v.round() as usize;
            assert!((v - k as f64).abs() < 1e-12);
            counts[k] += 1;
        }
        assert_eq!(counts, [layout.total_dim() / 4; 4]);
    }

    #[test]
    fn density_matrix_diagnostics() {
        let layout = default_layout();
        let psi = basis_state(layout, 1, 0, 0, Level::G).unwrap();
        let rho = psi.projector();
        assert_eq!(rho.expectation(&psi).unwrap(), 1.0);
        let other = basis_state(layout, 0, 0, 1, Level::G).unwrap();
        assert_eq!(rho.expectation(&other).unwrap(), 0.0);
        assert!(rho.physicality().is_physical());
        assert!((rho.purity() - 1.0).abs() < 1e-15);
        assert_eq!(rho.max_excitations(), 1);
    }
}
