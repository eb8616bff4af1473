//! Dense linear algebra on small labeled tensor-product Hilbert spaces.
//!
//! Basis ordering follows the usual ket notation: the leftmost subsystem is
//! the most significant digit of the computational-basis index, so for two
//! qubits `|xy>` sits at index `2x + y`. All energies use `hbar = 1`.

mod entropy;
mod evolve;
mod measure;

pub use entropy::{partial_trace, vn_entropy};
pub use evolve::{evolve_exact, Propagator};
pub use measure::{local_projectors, measure_projective, MeasurementOutcome, ProjectiveMeasurement};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance for normalization, hermiticity and trace checks.
pub const TOLERANCE: f64 = 1e-10;

#[cfg(test)]
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
#[cfg(test)]
pub(crate) const I: C64 = C64::new(0.0, 1.0);

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.iter().any(|&d| d < 2) {
        return Err(Error::InvalidDims(dims.to_vec()));
    }
    Ok(dims.iter().product())
}

/// Computational-basis index of the product state with the given level on
/// each subsystem.
pub fn basis_index(dims: &[usize], levels: &[usize]) -> Result<usize> {
    check_dims(dims)?;
    if levels.len() != dims.len() || levels.iter().zip(dims).any(|(&l, &d)| l >= d) {
        return Err(Error::InvalidArgument(format!(
            "levels {levels:?} do not fit dimensions {dims:?}"
        )));
    }
    Ok(levels.iter().zip(dims).fold(0, |acc, (&l, &d)| acc * d + l))
}

/// Inverse of [`basis_index`].
pub(crate) fn basis_levels(dims: &[usize], mut index: usize) -> Vec<usize> {
    let mut levels = vec![0; dims.len()];
    for (slot, &d) in levels.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
    levels
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Normalized pure state on a tensor-product space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amps: CVector,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized.
    pub fn new(dims: &[usize], amps: Vec<C64>) -> Result<Self> {
        let dim = check_dims(dims)?;
        if amps.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: vec![dim],
                found: vec![amps.len()],
            });
        }
        let amps = CVector::from_vec(amps);
        let norm_sqr = amps.norm_squared();
        if (norm_sqr - 1.0).abs() > TOLERANCE {
            return Err(Error::NotNormalized(norm_sqr));
        }
        Ok(Self {
            dims: dims.to_vec(),
            amps,
        })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(dims: &[usize], amps: Vec<C64>) -> Result<Self> {
        let dim = check_dims(dims)?;
        if amps.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: vec![dim],
                found: vec![amps.len()],
            });
        }
        let amps = CVector::from_vec(amps);
        let norm = amps.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized(norm * norm));
        }
        Ok(Self {
            dims: dims.to_vec(),
            amps: amps.unscale(norm),
        })
    }

    pub fn basis(dims: &[usize], index: usize) -> Result<Self> {
        let dim = check_dims(dims)?;
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = CVector::zeros(dim);
        amps[index] = ONE;
        Ok(Self {
            dims: dims.to_vec(),
            amps,
        })
    }

    /// Product basis state, e.g. `from_levels(&[2, 2], &[1, 0])` is `|10>`.
    pub fn from_levels(dims: &[usize], levels: &[usize]) -> Result<Self> {
        Self::basis(dims, basis_index(dims, levels)?)
    }

    pub(crate) fn from_raw(dims: Vec<usize>, amps: CVector) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), amps.len());
        Self { dims, amps }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &CVector {
        &self.amps
    }

    pub fn amp(&self, index: usize) -> C64 {
        self.amps[index]
    }

    /// Born probability of a computational-basis state.
    pub fn population(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.ensure_same_dims(&other.dims)?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// `|<self|other>|²`, insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        StateVector {
            dims,
            amps: self.amps.kronecker(&other.amps),
        }
    }

    /// Applies a unitary operator. Fails if the result is not normalized.
    pub fn apply_unitary(&self, op: &Operator) -> Result<StateVector> {
        self.ensure_same_dims(&op.dims)?;
        let amps = &op.mat * &self.amps;
        let norm_sqr = amps.norm_squared();
        if (norm_sqr - 1.0).abs() > TOLERANCE {
            return Err(Error::NotNormalized(norm_sqr));
        }
        Ok(StateVector {
            dims: self.dims.clone(),
            amps,
        })
    }

    pub(crate) fn ensure_same_dims(&self, dims: &[usize]) -> Result<()> {
        if self.dims != dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                found: dims.to_vec(),
            });
        }
        Ok(())
    }
}

/// Square operator on a tensor-product space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dims: Vec<usize>,
    mat: CMatrix,
    hermitian: bool,
}

impl Operator {
    pub fn new(dims: &[usize], mat: CMatrix) -> Result<Self> {
        let dim = check_dims(dims)?;
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: vec![dim, dim],
                found: vec![mat.nrows(), mat.ncols()],
            });
        }
        Ok(Self::from_raw(dims.to_vec(), mat))
    }

    /// Builds an operator from real row-major entries.
    pub fn from_real(dims: &[usize], entries: &[f64]) -> Result<Self> {
        let dim = check_dims(dims)?;
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: vec![dim * dim],
                found: vec![entries.len()],
            });
        }
        Self::new(
            dims,
            CMatrix::from_row_iterator(dim, dim, entries.iter().map(|&x| C64::new(x, 0.0))),
        )
    }

    pub(crate) fn from_raw(dims: Vec<usize>, mat: CMatrix) -> Self {
        let hermitian = hermitian_deviation(&mat) < TOLERANCE;
        Self {
            dims,
            mat,
            hermitian,
        }
    }

    pub fn identity(dims: &[usize]) -> Result<Self> {
        let dim = check_dims(dims)?;
        Ok(Self::from_raw(dims.to_vec(), CMatrix::identity(dim, dim)))
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let dim = check_dims(dims)?;
        Ok(Self::from_raw(dims.to_vec(), CMatrix::zeros(dim, dim)))
    }

    /// Qubit lowering operator `|0><1|`.
    pub fn lowering() -> Self {
        Self::from_real(&[2], &[0.0, 1.0, 0.0, 0.0]).expect("static 2x2")
    }

    /// Qubit number operator `|1><1|`.
    pub fn number() -> Self {
        Self::lowering().dagger().compose(&Self::lowering())
    }

    pub fn pauli_x() -> Self {
        Self::lowering() + Self::lowering().dagger()
    }

    /// `|ket><bra|` between two states of equal shape.
    pub fn outer(ket: &StateVector, bra: &StateVector) -> Result<Self> {
        ket.ensure_same_dims(&bra.dims)?;
        Ok(Self::from_raw(
            ket.dims.clone(),
            &ket.amps * bra.amps.adjoint(),
        ))
    }

    /// Lifts a single-subsystem operator to `I ⊗ .. ⊗ op ⊗ .. ⊗ I`.
    pub fn embed(&self, dims: &[usize], site: usize) -> Result<Self> {
        check_dims(dims)?;
        if site >= dims.len() || self.dims != [dims[site]] {
            return Err(Error::DimensionMismatch {
                expected: vec![*dims.get(site).unwrap_or(&0)],
                found: self.dims.clone(),
            });
        }
        let left: usize = dims[..site].iter().product();
        let right: usize = dims[site + 1..].iter().product();
        let mat = CMatrix::identity(left, left)
            .kronecker(&self.mat)
            .kronecker(&CMatrix::identity(right, right));
        Ok(Self::from_raw(dims.to_vec(), mat))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn element(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dagger(&self) -> Self {
        Self::from_raw(self.dims.clone(), self.mat.adjoint())
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &Operator) -> Self {
        assert_eq!(self.dims, other.dims, "operator dimensions differ");
        Self::from_raw(self.dims.clone(), &self.mat * &other.mat)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_raw(self.dims.clone(), self.mat.scale(factor))
    }

    pub fn tensor(&self, other: &Operator) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self::from_raw(dims, self.mat.kronecker(&other.mat))
    }

    pub fn apply(&self, psi: &StateVector) -> Result<CVector> {
        psi.ensure_same_dims(&self.dims)?;
        Ok(&self.mat * &psi.amps)
    }
}

impl std::ops::Add for Operator {
    type Output = Operator;

    fn add(self, rhs: Operator) -> Operator {
        assert_eq!(self.dims, rhs.dims, "operator dimensions differ");
        Operator::from_raw(self.dims, self.mat + rhs.mat)
    }
}

impl std::ops::Sub for Operator {
    type Output = Operator;

    fn sub(self, rhs: Operator) -> Operator {
        assert_eq!(self.dims, rhs.dims, "operator dimensions differ");
        Operator::from_raw(self.dims, self.mat - rhs.mat)
    }
}

/// Either side of a tensor product.
#[derive(Clone, Debug, PartialEq)]
pub enum Factor {
    State(StateVector),
    Operator(Operator),
}

/// Kronecker product of two states or two operators; subsystem order is
/// left to right.
pub fn tensor(a: &Factor, b: &Factor) -> Result<Factor> {
    match (a, b) {
        (Factor::State(x), Factor::State(y)) => Ok(Factor::State(x.tensor(y))),
        (Factor::Operator(x), Factor::Operator(y)) => Ok(Factor::Operator(x.tensor(y))),
        _ => Err(Error::KindMismatch),
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(dims: &[usize], mat: CMatrix) -> Result<Self> {
        let dim = check_dims(dims)?;
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: vec![dim, dim],
                found: vec![mat.nrows(), mat.ncols()],
            });
        }
        let dev = hermitian_deviation(&mat);
        if dev >= TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!(
                "not hermitian (deviation {dev:e})"
            )));
        }
        let trace = mat.trace();
        if (trace - ONE).norm() > TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!("trace {trace} != 1")));
        }
        let min_eig = mat
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            mat,
        })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        Self {
            dims: psi.dims.clone(),
            mat: &psi.amps * psi.amps.adjoint(),
        }
    }

    /// Statistical mixture `Σ p_k |ψ_k><ψ_k|`.
    pub fn mixture(components: &[(f64, StateVector)]) -> Result<Self> {
        let (_, first) = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let dim = first.dim();
        let mut mat = CMatrix::zeros(dim, dim);
        for (p, psi) in components {
            first.ensure_same_dims(&psi.dims)?;
            if *p < 0.0 {
                return Err(Error::InvalidDensityMatrix(format!("negative weight {p}")));
            }
            mat += (&psi.amps * psi.amps.adjoint()).scale(*p);
        }
        Self::new(&first.dims, mat)
    }

    pub fn maximally_mixed(dims: &[usize]) -> Result<Self> {
        let dim = check_dims(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            mat: CMatrix::identity(dim, dim).unscale(dim as f64),
        })
    }

    pub(crate) fn from_raw(dims: Vec<usize>, mat: CMatrix) -> Self {
        Self { dims, mat }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn element(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut eigs: Vec<f64> = self
            .mat
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        eigs.sort_by(f64::total_cmp);
        eigs
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            dims,
            mat: self.mat.kronecker(&other.mat),
        }
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, unitary: &Operator) -> Result<DensityMatrix> {
        if unitary.dims != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                found: unitary.dims.clone(),
            });
        }
        Ok(Self {
            dims: self.dims.clone(),
            mat: &unitary.mat * &self.mat * unitary.mat.adjoint(),
        })
    }

    pub fn max_deviation(&self, other: &DensityMatrix) -> f64 {
        max_abs(&(&self.mat - &other.mat))
    }
}

/// States that carry expectation values of hermitian observables.
pub trait Expectation {
    /// `<ψ|O|ψ>` or `Tr[ρ O]`.
    fn expval(&self, op: &Operator) -> Result<f64>;
}

fn real_part(value: C64, op: &Operator) -> Result<f64> {
    let scale = max_abs(&op.mat).max(1.0);
    if value.im.abs() > TOLERANCE * scale {
        return Err(Error::HermiticityViolation(value.im));
    }
    Ok(value.re)
}

fn check_observable(dims: &[usize], op: &Operator) -> Result<()> {
    if dims != op.dims {
        return Err(Error::DimensionMismatch {
            expected: dims.to_vec(),
            found: op.dims.clone(),
        });
    }
    if !op.hermitian {
        return Err(Error::NotHermitian(hermitian_deviation(&op.mat)));
    }
    Ok(())
}

impl Expectation for StateVector {
    fn expval(&self, op: &Operator) -> Result<f64> {
        check_observable(&self.dims, op)?;
        real_part(self.amps.dotc(&(&op.mat * &self.amps)), op)
    }
}

impl Expectation for DensityMatrix {
    fn expval(&self, op: &Operator) -> Result<f64> {
        check_observable(&self.dims, op)?;
        real_part((&self.mat * &op.mat).trace(), op)
    }
}

pub fn expval<S: Expectation + ?Sized>(state: &S, op: &Operator) -> Result<f64> {
    state.expval(op)
}
