use nalgebra::DVector;

use super::{CMatrix, CVector, Operator, StateVector, C64};
use crate::error::{Error, Result};

/// Spectral decomposition of a time-independent Hamiltonian, reusable for
/// propagating to any number of times.
#[derive(Clone, Debug)]
pub struct Propagator {
    dims: Vec<usize>,
    energies: DVector<f64>,
    eigvecs: CMatrix,
    eigvecs_adj: CMatrix,
}

impl Propagator {
    pub fn new(hamiltonian: &Operator) -> Result<Self> {
        if !hamiltonian.is_hermitian() {
            let m = hamiltonian.matrix();
            let dev = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            return Err(Error::NotHermitian(dev));
        }
        let eig = hamiltonian.matrix().clone().symmetric_eigen();
        Ok(Self {
            dims: hamiltonian.dims().to_vec(),
            eigvecs_adj: eig.eigenvectors.adjoint(),
            eigvecs: eig.eigenvectors,
            energies: eig.eigenvalues,
        })
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// `exp(-i H t) |psi>`.
    pub fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        psi.ensure_same_dims(&self.dims)?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "evolution time must be finite and non-negative, got {t}"
            )));
        }
        let mut coeffs: CVector = &self.eigvecs_adj * psi.amps();
        for (c, &e) in coeffs.iter_mut().zip(self.energies.iter()) {
            *c *= C64::from_polar(1.0, -e * t);
        }
        Ok(StateVector::from_raw(self.dims.clone(), &self.eigvecs * coeffs))
    }

    /// The propagator matrix `exp(-i H t)` itself.
    pub fn unitary(&self, t: f64) -> Operator {
        let phases = CVector::from_iterator(
            self.energies.len(),
            self.energies.iter().map(|&e| C64::from_polar(1.0, -e * t)),
        );
        let mat = &self.eigvecs * CMatrix::from_diagonal(&phases) * &self.eigvecs_adj;
        Operator::from_raw(self.dims.clone(), mat)
    }
}

/// One-shot propagation; build a [`Propagator`] directly when sampling many
/// times under the same Hamiltonian.
pub fn evolve_exact(hamiltonian: &Operator, psi: &StateVector, t: f64) -> Result<StateVector> {
    Propagator::new(hamiltonian)?.evolve(psi, t)
}
