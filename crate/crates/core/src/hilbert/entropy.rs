use super::{basis_levels, CMatrix, DensityMatrix};
use crate::error::{Error, Result};

/// Eigenvalues below this are treated as exactly zero in entropy sums.
const EIGEN_FLOOR: f64 = 1e-12;

/// Reduced density matrix on the subsystems listed in `keep`.
///
/// The kept subsystems retain their original relative order regardless of
/// the order of `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::InvalidArgument("keep set is empty".into()));
    }
    let dims = rho.dims();
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || kept.iter().any(|&k| k >= dims.len()) {
        return Err(Error::InvalidArgument(format!(
            "invalid subsystem indices {keep:?} for {} subsystems",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let reduced_dim: usize = kept_dims.iter().product();

    let split = |index: usize| -> (usize, Vec<usize>) {
        let levels = basis_levels(dims, index);
        let reduced = kept.iter().fold(0, |acc, &k| acc * dims[k] + levels[k]);
        let env = traced.iter().map(|&k| levels[k]).collect();
        (reduced, env)
    };
    let parts: Vec<(usize, Vec<usize>)> = (0..rho.dim()).map(split).collect();

    let mut out = CMatrix::zeros(reduced_dim, reduced_dim);
    for (i, (ri, ei)) in parts.iter().enumerate() {
        for (j, (rj, ej)) in parts.iter().enumerate() {
            if ei == ej {
                out[(*ri, *rj)] += rho.element(i, j);
            }
        }
    }
    Ok(DensityMatrix::from_raw(kept_dims, out))
}

/// Von Neumann entropy in bits.
pub fn vn_entropy(rho: &DensityMatrix) -> f64 {
    rho.matrix()
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .map(|&l| l.clamp(0.0, 1.0))
        .filter(|&l| l >= EIGEN_FLOOR)
        .map(|l| -l * l.log2())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Operator, StateVector, C64, ONE};
    use proptest::prelude::*;

    fn qubit_rho(p: f64, coh: C64) -> DensityMatrix {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(p, 0.0), coh, coh.conj(), C64::new(1.0 - p, 0.0)],
        );
        DensityMatrix::new(&[2], m).unwrap()
    }

    #[test]
    fn product_state_reduces_to_factor() {
        let a = qubit_rho(0.3, C64::new(0.1, 0.2));
        let b = qubit_rho(0.8, C64::new(-0.05, 0.1));
        let ab = a.tensor(&b);
        assert!(partial_trace(&ab, &[0]).unwrap().max_deviation(&a) < 1e-12);
        assert!(partial_trace(&ab, &[1]).unwrap().max_deviation(&b) < 1e-12);
        assert!(partial_trace(&ab, &[0, 1]).unwrap().max_deviation(&ab) < 1e-15);
    }

    #[test]
    fn bell_state_marginals_are_maximally_mixed() {
        let bell = StateVector::normalized(&[2, 2], vec![0.0.into(), ONE, ONE, 0.0.into()]).unwrap();
        let rho = DensityMatrix::from_pure(&bell);
        let half = DensityMatrix::maximally_mixed(&[2]).unwrap();
        for keep in [0, 1] {
            let red = partial_trace(&rho, &[keep]).unwrap();
            assert!(red.max_deviation(&half) < 1e-15);
            assert!((vn_entropy(&red) - 1.0).abs() < 1e-12);
        }
        assert!(vn_entropy(&rho).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_argument_errors() {
        let rho = DensityMatrix::maximally_mixed(&[2, 2]).unwrap();
        assert!(partial_trace(&rho, &[]).is_err());
        assert!(partial_trace(&rho, &[2]).is_err());
        assert!(partial_trace(&rho, &[0, 0]).is_err());
    }

    #[test]
    fn middle_subsystem_trace_on_three_qubits() {
        // |0>⊗|+>⊗|1>: tracing the middle keeps |01><01|.
        let plus = StateVector::normalized(&[2], vec![ONE, ONE]).unwrap();
        let psi = StateVector::basis(&[2], 0)
            .unwrap()
            .tensor(&plus)
            .tensor(&StateVector::basis(&[2], 1).unwrap());
        let red = partial_trace(&DensityMatrix::from_pure(&psi), &[2, 0]).unwrap();
        assert_eq!(red.dims(), &[2, 2]);
        assert!((red.element(1, 1) - ONE).norm() < 1e-15);
    }

    #[test]
    fn entropy_reference_values() {
        assert!(vn_entropy(&DensityMatrix::from_pure(&StateVector::basis(&[2], 0).unwrap())).abs() < 1e-15);
        assert!((vn_entropy(&DensityMatrix::maximally_mixed(&[2]).unwrap()) - 1.0).abs() < 1e-15);
        assert!((vn_entropy(&DensityMatrix::maximally_mixed(&[2, 2]).unwrap()) - 2.0).abs() < 1e-14);
        // p = 0.2: -0.2 log2 0.2 - 0.8 log2 0.8
        let h = -0.2f64 * 0.2f64.log2() - 0.8 * 0.8f64.log2();
        assert!((vn_entropy(&qubit_rho(0.2, 0.0.into())) - h).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn entropy_is_unitarily_invariant(p in 0.0f64..1.0, re in -0.2f64..0.2, im in -0.2f64..0.2, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let bound = (p * (1.0 - p)).sqrt();
            let coh = C64::new(re, im);
            let coh = if coh.norm() > bound { coh * (bound / coh.norm()) * 0.99 } else { coh };
            let rho = qubit_rho(p, coh);
            let h = Operator::new(&[2], CMatrix::from_row_slice(2, 2, &[C64::new(a, 0.0), C64::new(b, a) , C64::new(b, -a), C64::new(-b, 0.0)])).unwrap();
            let u = crate::hilbert::Propagator::new(&h).unwrap().unitary(0.7);
            let rotated = rho.conjugate(&u).unwrap();
            prop_assert!((vn_entropy(&rho) - vn_entropy(&rotated)).abs() < 1e-9);
        }
    }
}
