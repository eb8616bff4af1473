//! Full 2^N state-vector check of the up-conversion chain.
//!
//! The library simulates each hop in its two-dimensional single-excitation
//! subspace. Here the whole register is kept instead: every qubit carries its
//! own frequency, only the active pair is coupled during a hop, and after each
//! hop the target qubit is projected onto its excited level. The squared norm
//! left at the end is the probability that every hop succeeded.

use qengine::chain::{success_probability, ChainParams};
use qengine::hilbert::{Operator, Propagator, StateVector};

fn full_register_success(p: &ChainParams) -> f64 {
    let n = p.n();
    let dims = vec![2; n];
    let embed = |op: &Operator, site: usize| op.embed(&dims, site).unwrap();

    let mut h_free = Operator::zeros(&dims).unwrap();
    for site in 0..n {
        h_free = h_free + embed(&Operator::number(), site).scale(p.frequency(site + 1));
    }

    let mut levels = vec![0; n];
    levels[0] = 1;
    let mut amps = StateVector::from_levels(&dims, &levels).unwrap().amps().clone();

    for k in 0..p.hops() {
        let raise = embed(&Operator::lowering().dagger(), k);
        let lower = embed(&Operator::lowering(), k + 1);
        let hop = raise.compose(&lower);
        let h = h_free.clone() + (hop.clone() + hop.dagger()).scale(p.g() / 2.0);
        let u = Propagator::new(&h).unwrap().unitary(p.hop_time());
        amps = u.matrix() * amps;

        // keep only the branch where qubit k+1 is excited
        let projector = embed(&Operator::number(), k + 1);
        amps = projector.matrix() * amps;
    }
    amps.norm_squared()
}

#[test]
fn full_register_matches_product_formula() {
    for n in 2..=4 {
        for ratio in [0.5, 1.0, 2.0] {
            let p = ChainParams::new(n, 5.0, 1.0, ratio).unwrap();
            let full = full_register_success(&p);
            let formula = success_probability(&p);
            assert!(
                (full - formula).abs() < 1e-9,
                "N={n}, g/delta={ratio}: register {full} vs formula {formula}"
            );
        }
    }
}

#[test]
fn three_qubit_register_reference_value() {
    // tan θ_3 = 2 at g = δ, so sin²θ_3 = 4/5 per hop
    let p = ChainParams::new(3, 5.0, 1.0, 1.0).unwrap();
    assert!((full_register_success(&p) - 0.64).abs() < 1e-9);
}
