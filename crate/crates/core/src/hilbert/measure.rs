use rand::Rng;

use super::{CMatrix, DensityMatrix, Operator, StateVector, TOLERANCE};
use crate::error::{Error, Result};

/// Result of one projective measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementOutcome {
    /// Index of the projector that fired.
    pub index: usize,
    /// Post-measurement state `P_k ψ / ‖P_k ψ‖`.
    pub state: StateVector,
    /// Born probability `<ψ|P_k|ψ>` of this outcome.
    pub probability: f64,
}

/// A validated complete set of orthogonal projectors.
#[derive(Clone, Debug)]
pub struct ProjectiveMeasurement {
    dims: Vec<usize>,
    projectors: Vec<Operator>,
}

impl ProjectiveMeasurement {
    pub fn new(projectors: Vec<Operator>) -> Result<Self> {
        let first = projectors
            .first()
            .ok_or_else(|| Error::IncompleteProjectors("no projectors given".into()))?;
        let dims = first.dims().to_vec();
        let dim = first.dim();
        let mut sum = CMatrix::zeros(dim, dim);
        for (j, pj) in projectors.iter().enumerate() {
            if pj.dims() != dims.as_slice() {
                return Err(Error::DimensionMismatch {
                    expected: dims.clone(),
                    found: pj.dims().to_vec(),
                });
            }
            for (k, pk) in projectors.iter().enumerate() {
                let prod = pj.matrix() * pk.matrix();
                let target = if j == k { pk.matrix().clone() } else { CMatrix::zeros(dim, dim) };
                let dev = (prod - target).iter().map(|z| z.norm()).fold(0.0, f64::max);
                if dev > TOLERANCE {
                    return Err(Error::IncompleteProjectors(format!(
                        "P{j}·P{k} deviates from δ_jk P_k by {dev:e}"
                    )));
                }
            }
            sum += pj.matrix();
        }
        let dev = (sum - CMatrix::identity(dim, dim))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > TOLERANCE {
            return Err(Error::IncompleteProjectors(format!(
                "projectors sum to identity only within {dev:e}"
            )));
        }
        Ok(Self { dims, projectors })
    }

    pub fn projectors(&self) -> &[Operator] {
        &self.projectors
    }

    pub fn probabilities(&self, psi: &StateVector) -> Result<Vec<f64>> {
        psi.ensure_same_dims(&self.dims)?;
        Ok(self
            .projectors
            .iter()
            .map(|p| (p.matrix() * psi.amps()).norm_squared())
            .collect())
    }

    /// Samples an outcome with Born statistics and collapses the state.
    pub fn measure<R: Rng + ?Sized>(&self, psi: &StateVector, rng: &mut R) -> Result<MeasurementOutcome> {
        psi.ensure_same_dims(&self.dims)?;
        let branches: Vec<_> = self
            .projectors
            .iter()
            .map(|p| {
                let amps = p.matrix() * psi.amps();
                let prob = amps.norm_squared();
                (amps, prob)
            })
            .collect();
        let u: f64 = rng.random();
        let mut cumulative = 0.0;
        let mut chosen = None;
        for (k, (_, prob)) in branches.iter().enumerate() {
            cumulative += prob;
            if *prob > 0.0 && u < cumulative {
                chosen = Some(k);
                break;
            }
        }
        // Rounding can leave u just above the final cumulative sum.
        let index = chosen.unwrap_or_else(|| {
            branches
                .iter()
                .rposition(|(_, p)| *p > 0.0)
                .expect("normalized state has a nonzero branch")
        });
        let (amps, probability) = branches.into_iter().nth(index).expect("index in range");
        let norm = probability.sqrt();
        Ok(MeasurementOutcome {
            index,
            state: StateVector::from_raw(self.dims.clone(), amps.unscale(norm)),
            probability,
        })
    }

    /// Outcome-averaged post-measurement state `Σ_k P_k ρ P_k`.
    pub fn unselective(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dims() != self.dims.as_slice() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                found: rho.dims().to_vec(),
            });
        }
        let dim = rho.dim();
        let mat = self
            .projectors
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, p| {
                acc + p.matrix() * rho.matrix() * p.matrix()
            });
        Ok(DensityMatrix::from_raw(self.dims.clone(), mat))
    }
}

/// One-shot projective measurement; validates the projector set on every
/// call, so prefer [`ProjectiveMeasurement`] in loops.
pub fn measure_projective<R: Rng + ?Sized>(
    psi: &StateVector,
    projectors: &[Operator],
    rng: &mut R,
) -> Result<MeasurementOutcome> {
    ProjectiveMeasurement::new(projectors.to_vec())?.measure(psi, rng)
}

/// Projectors onto each level of subsystem `site`, ordered by level.
pub fn local_projectors(dims: &[usize], site: usize) -> Result<Vec<Operator>> {
    let d = *dims.get(site).ok_or_else(|| {
        Error::InvalidArgument(format!("site {site} out of range for {dims:?}"))
    })?;
    (0..d)
        .map(|level| {
            let ket = StateVector::basis(&[d], level)?;
            Operator::outer(&ket, &ket)?.embed(dims, site)
        })
        .collect()
}
