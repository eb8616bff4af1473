//! The two-qubit measurement-fueled engine.
//!
//! Qubits A and B (frequencies `ω_A < ω_B = ω_A + δ`) exchange a single
//! excitation through a flip-flop coupling of strength `g`. Starting from
//! `|10>`, the pair evolves for `t0 = π/Ω`, B's energy is measured, and the
//! classical outcome drives a feedback step that extracts `δ` whenever the
//! excitation was found on B.

use std::f64::consts::{LN_2, PI};

use rand::Rng;

use crate::error::{Error, Result};
use crate::hilbert::{
    local_projectors, DensityMatrix, Expectation, Operator, ProjectiveMeasurement, Propagator,
    StateVector, C64, TOLERANCE,
};
use crate::mc::{self, Estimate};

/// Subsystem layout: qubit A, then qubit B.
pub const DIMS: [usize; 2] = [2, 2];
/// Index of `|01>` (excitation on B).
pub const KET_01: usize = 1;
/// Index of `|10>` (excitation on A).
pub const KET_10: usize = 2;

/// Engine parameters. `theta`, `rabi_frequency` and `t0` are derived.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineParams {
    omega_a: f64,
    delta: f64,
    g: f64,
}

impl EngineParams {
    pub fn new(omega_a: f64, delta: f64, g: f64) -> Result<Self> {
        if !(omega_a > 0.0 && omega_a.is_finite()) {
            return Err(Error::Parameter(format!("omega_a must be positive, got {omega_a}")));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::Parameter(format!("detuning must be non-negative, got {delta}")));
        }
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::Parameter(format!("coupling must be positive, got {g}")));
        }
        Ok(Self { omega_a, delta, g })
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }

    pub fn omega_b(&self) -> f64 {
        self.omega_a + self.delta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    /// Mixing angle with `tan θ = g/δ`; `π/2` at zero detuning.
    pub fn theta(&self) -> f64 {
        self.g.atan2(self.delta)
    }

    /// Generalized Rabi frequency `Ω = sqrt(g² + δ²)`.
    pub fn rabi_frequency(&self) -> f64 {
        self.g.hypot(self.delta)
    }

    /// Measurement time `π/Ω`, at half a Rabi period.
    pub fn t0(&self) -> f64 {
        PI / self.rabi_frequency()
    }

    /// `sin²θ = g²/(g²+δ²)`: probability of finding the excitation on B at `t0`.
    pub fn success_probability(&self) -> f64 {
        let g2 = self.g * self.g;
        g2 / (g2 + self.delta * self.delta)
    }

    /// `cos²θ = δ²/(g²+δ²)`.
    pub fn failure_probability(&self) -> f64 {
        let d2 = self.delta * self.delta;
        d2 / (self.g * self.g + d2)
    }
}

/// Free Hamiltonian `ω_A σ_A†σ_A + ω_B σ_B†σ_B`.
pub fn local_hamiltonian(p: &EngineParams) -> Operator {
    let n_a = Operator::number().embed(&DIMS, 0).expect("two-qubit layout");
    let n_b = Operator::number().embed(&DIMS, 1).expect("two-qubit layout");
    n_a.scale(p.omega_a()) + n_b.scale(p.omega_b())
}

/// Coupling `V = (g/2)(σ_A†σ_B + σ_B†σ_A)`.
pub fn coupling(p: &EngineParams) -> Operator {
    let hop = Operator::lowering().dagger().tensor(&Operator::lowering());
    (hop.dagger() + hop).scale(p.g() / 2.0)
}

pub fn build_hamiltonian(p: &EngineParams, coupling_on: bool) -> Operator {
    let h = local_hamiltonian(p);
    if coupling_on {
        h + coupling(p)
    } else {
        h
    }
}

/// `|10>`, the engine's initial state.
pub fn initial_state() -> StateVector {
    StateVector::basis(&DIMS, KET_10).expect("two-qubit layout")
}

/// Closed-form rotating-frame state of the coupled pair after time `t`,
/// omitting the common free phase.
pub fn analytic_state(p: &EngineParams, t: f64) -> StateVector {
    let half = p.theta() / 2.0;
    let (s, c) = half.sin_cos();
    let fwd = C64::from_polar(1.0, p.rabi_frequency() * t / 2.0);
    let bwd = fwd.conj();
    let mut amps = vec![C64::new(0.0, 0.0); 4];
    amps[KET_10] = fwd * (c * c) + bwd * (s * s);
    amps[KET_01] = -(fwd - bwd) * (c * s);
    StateVector::normalized(&DIMS, amps).expect("unit amplitudes")
}

/// Mean total, local and interaction energies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyComponents {
    pub total: f64,
    pub local: f64,
    pub interaction: f64,
}

pub fn energy_components(psi: &StateVector, p: &EngineParams) -> Result<EnergyComponents> {
    let local = psi.expval(&local_hamiltonian(p))?;
    let interaction = psi.expval(&coupling(p))?;
    Ok(EnergyComponents {
        total: local + interaction,
        local,
        interaction,
    })
}

/// Energy injected by the measurement, `δ sin²θ`.
pub fn measurement_energy(p: &EngineParams) -> f64 {
    p.delta() * p.success_probability()
}

fn entropy_term(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.log2()
    } else {
        0.0
    }
}

/// Binary entropy in bits.
pub fn binary_entropy(prob: f64) -> f64 {
    entropy_term(prob) + entropy_term(1.0 - prob)
}

/// Entropy of the post-measurement mixture, in bits.
pub fn measurement_entropy(p: &EngineParams) -> f64 {
    // both weights from g² and δ² directly; 1 - sin²θ cancels badly near θ = π/2
    entropy_term(p.success_probability()) + entropy_term(p.failure_probability())
}

/// Energy delivered per bit of measurement entropy.
pub fn temperature_ratio(p: &EngineParams) -> Result<f64> {
    let s = measurement_entropy(p);
    if s <= 0.0 {
        return Err(Error::DivergentRatio(format!(
            "measurement entropy vanishes at theta = {} (delta = {}, g = {})",
            p.theta(),
            p.delta(),
            p.g()
        )));
    }
    Ok(measurement_energy(p) / s)
}

/// Large-coupling asymptote `-δ / [2x² log₂ x]` with `x = π/2 - θ`.
pub fn temperature_ratio_asymptote(p: &EngineParams) -> f64 {
    // π/2 - θ = atan(δ/g), evaluated directly to keep precision near π/2
    let x = p.delta().atan2(p.g());
    -p.delta() / (2.0 * x * x * x.log2())
}

/// Minimal Landauer cost of erasing `s_meas` bits at bath temperature `t_bath`.
pub fn erasure_cost(s_meas: f64, t_bath: f64) -> f64 {
    debug_assert!(s_meas >= 0.0 && t_bath >= 0.0);
    t_bath * LN_2 * s_meas
}

/// Measurement outcome on qubit B.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    ExcitationOnB,
    ExcitationOnA,
}

/// How the demon uses its memory during feedback.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FeedbackPolicy {
    /// Pulse iff the excitation was found on B.
    Ideal,
    /// Ignore the memory: pulse every cycle when `sin²θ > 1/2`, never otherwise.
    Blind,
    /// Read the memory with probability `read_fraction`, otherwise act blindly.
    Partial { read_fraction: f64 },
}

impl FeedbackPolicy {
    pub fn partial(read_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&read_fraction) {
            return Err(Error::Parameter(format!(
                "read fraction must lie in [0, 1], got {read_fraction}"
            )));
        }
        Ok(Self::Partial { read_fraction })
    }

    /// Fraction of cycles in which the memory is consulted.
    pub fn read_fraction(&self) -> f64 {
        match *self {
            Self::Ideal => 1.0,
            Self::Blind => 0.0,
            Self::Partial { read_fraction } => read_fraction,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ideal => "ideal",
            Self::Blind => "blind",
            Self::Partial { .. } => "partial",
        }
    }
}

fn blind_pulses(p: &EngineParams) -> bool {
    p.success_probability() > 0.5
}

/// Bookkeeping for one engine cycle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleRecord {
    pub outcome: Outcome,
    /// Energy released by the feedback pulses: `δ`, `-δ` or `0`.
    pub work_extracted: f64,
    /// Entropy written to the memory, bits.
    pub entropy_meas: f64,
    /// Mutual information used by the feedback, bits.
    pub info_consumed: f64,
    pub erasure_cost: f64,
    pub final_state_fidelity_to_10: f64,
    pub memory_read: bool,
    pub pulses_applied: bool,
    /// The pair did not end in `|10>` and needs an extra reset step.
    pub reset_required: bool,
    /// Energy the reset must supply to restore `|10>` (negative: released).
    /// Kept out of `work_extracted`.
    pub reset_energy: f64,
}

/// A configured engine with its propagator and measurement prepared once.
#[derive(Clone, Debug)]
pub struct Engine {
    params: EngineParams,
    bath_temperature: f64,
    h_loc: Operator,
    v: Operator,
    propagator: Propagator,
    measurement: ProjectiveMeasurement,
    pi_pulses: Operator,
    /// Pair state at `t0`; identical for every cycle.
    stroke: StateVector,
}

impl Engine {
    pub fn new(params: EngineParams) -> Result<Self> {
        let pulse = Operator::pauli_x();
        let propagator = Propagator::new(&build_hamiltonian(&params, true))?;
        let stroke = propagator.evolve(&initial_state(), params.t0())?;
        Ok(Self {
            params,
            bath_temperature: 0.0,
            h_loc: local_hamiltonian(&params),
            v: coupling(&params),
            propagator,
            measurement: ProjectiveMeasurement::new(local_projectors(&DIMS, 1)?)?,
            pi_pulses: pulse.tensor(&pulse),
            stroke,
        })
    }

    /// Temperature of the bath in which the memory is erased (`k_B = 1`).
    pub fn with_bath_temperature(mut self, t_bath: f64) -> Result<Self> {
        if !(t_bath >= 0.0 && t_bath.is_finite()) {
            return Err(Error::Parameter(format!(
                "bath temperature must be non-negative, got {t_bath}"
            )));
        }
        self.bath_temperature = t_bath;
        Ok(self)
    }

    pub fn params(&self) -> &EngineParams {
        &self.params
    }

    /// Pair state after the entangling stroke.
    pub fn state_at(&self, t: f64) -> Result<StateVector> {
        self.propagator.evolve(&initial_state(), t)
    }

    /// Outcome-averaged state right after measuring B at `t0`.
    pub fn unselective_post_measurement(&self) -> Result<DensityMatrix> {
        let psi = self.state_at(self.params.t0())?;
        self.measurement.unselective(&DensityMatrix::from_pure(&psi))
    }

    pub fn run_cycle<R: Rng + ?Sized>(&self, policy: FeedbackPolicy, rng: &mut R) -> Result<CycleRecord> {
        let p = &self.params;
        let s_meas = measurement_entropy(p);

        // (i) entangling stroke from |10>, precomputed
        // (ii) energy measurement of B, outcome stored in the memory
        let measured = self.measurement.measure(&self.stroke, rng)?;
        let outcome = if measured.index == 1 {
            Outcome::ExcitationOnB
        } else {
            Outcome::ExcitationOnA
        };
        let mut state = measured.state;
        debug_assert!(state.expval(&self.v)?.abs() < TOLERANCE, "coupling switched off at a cost");

        // (iii) feedback with the coupling off
        let memory_read = match policy {
            FeedbackPolicy::Ideal => true,
            FeedbackPolicy::Blind => false,
            FeedbackPolicy::Partial { read_fraction } => rng.random::<f64>() < read_fraction,
        };
        let pulses_applied = if memory_read {
            outcome == Outcome::ExcitationOnB
        } else {
            blind_pulses(p)
        };
        let mut work_extracted = 0.0;
        if pulses_applied {
            let before = state.expval(&self.h_loc)?;
            state = state.apply_unitary(&self.pi_pulses)?;
            work_extracted = before - state.expval(&self.h_loc)?;
        }

        let fidelity = state.population(KET_10);
        let reset_required = fidelity < 1.0 - TOLERANCE;
        let reset_energy = if reset_required {
            p.omega_a() - state.expval(&self.h_loc)?
        } else {
            0.0
        };

        // (iv) memory erasure
        Ok(CycleRecord {
            outcome,
            work_extracted,
            entropy_meas: s_meas,
            info_consumed: if memory_read { s_meas } else { 0.0 },
            erasure_cost: erasure_cost(s_meas, self.bath_temperature),
            final_state_fidelity_to_10: fidelity,
            memory_read,
            pulses_applied,
            reset_required,
            reset_energy,
        })
    }

    /// Runs a reproducible batch of independent cycles.
    pub fn run_cycles(&self, policy: FeedbackPolicy, trajectories: u64, master_seed: u64) -> Result<CycleStats> {
        // Cycles cannot fail once the engine is built; surface any error anyway.
        let failure = std::sync::Mutex::new(None);
        let sums = mc::reduce(trajectories, master_seed, |_, rng| match self.run_cycle(policy, rng) {
            Ok(r) => [
                r.work_extracted,
                r.work_extracted * r.work_extracted,
                f64::from(u8::from(r.outcome == Outcome::ExcitationOnB)),
                r.info_consumed,
                f64::from(u8::from(r.reset_required)),
                r.reset_energy,
                r.erasure_cost,
            ],
            Err(e) => {
                failure.lock().expect("poisoned").get_or_insert(e);
                [0.0; 7]
            }
        });
        if let Some(e) = failure.into_inner().expect("poisoned") {
            return Err(e);
        }
        let n = trajectories.max(1) as f64;
        Ok(CycleStats {
            policy,
            trajectories,
            work: Estimate::from_sums(sums[0], sums[1], trajectories),
            excitation_on_b: sums[2] as u64,
            mean_info_consumed: sums[3] / n,
            resets: sums[4] as u64,
            mean_reset_energy: sums[5] / n,
            mean_erasure_cost: sums[6] / n,
        })
    }
}

/// One-shot cycle; builds an [`Engine`] per call.
pub fn run_cycle<R: Rng + ?Sized>(p: &EngineParams, policy: FeedbackPolicy, rng: &mut R) -> Result<CycleRecord> {
    Engine::new(*p)?.run_cycle(policy, rng)
}

/// Aggregate of a Monte Carlo batch of cycles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleStats {
    pub policy: FeedbackPolicy,
    pub trajectories: u64,
    pub work: Estimate,
    pub excitation_on_b: u64,
    pub mean_info_consumed: f64,
    pub resets: u64,
    pub mean_reset_energy: f64,
    pub mean_erasure_cost: f64,
}

/// Closed-form mean work of a policy.
pub fn mean_work(p: &EngineParams, policy: FeedbackPolicy) -> f64 {
    let ideal = p.delta() * p.success_probability();
    let blind = if blind_pulses(p) {
        p.delta() * (p.success_probability() - p.failure_probability())
    } else {
        0.0
    };
    let f = policy.read_fraction();
    f * ideal + (1.0 - f) * blind
}

/// Work-to-fuel conversion of a policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConversionRatio {
    /// `max(eta_raw, 0)`.
    pub eta: f64,
    pub eta_raw: f64,
    pub mean_work: f64,
    /// Mutual information consumed per cycle, bits.
    pub delta_info: f64,
    /// No net work is extracted (`eta_raw <= 0`).
    pub no_work: bool,
}

pub fn conversion_ratio(p: &EngineParams, policy: FeedbackPolicy) -> Result<ConversionRatio> {
    let fuel = measurement_energy(p);
    if fuel <= 0.0 {
        return Err(Error::Parameter(
            "conversion ratio needs a positive measurement energy (delta > 0)".into(),
        ));
    }
    let work = mean_work(p, policy);
    let eta_raw = work / fuel;
    Ok(ConversionRatio {
        eta: eta_raw.max(0.0),
        eta_raw,
        mean_work: work,
        delta_info: policy.read_fraction() * measurement_entropy(p),
        no_work: eta_raw <= 0.0,
    })
}

/// Bloch vector of the effective two-level system `{|10>, |01>}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Bloch coordinates with `|10>` at the north pole and `|01>` at the south.
pub fn bloch_coordinates(psi: &StateVector) -> Result<BlochVector> {
    psi.ensure_same_dims(&DIMS)?;
    let outside = psi.population(0) + psi.population(3);
    if outside > 1e-9 {
        return Err(Error::OutsideSubspace(outside));
    }
    let north = psi.amp(KET_10);
    let south = psi.amp(KET_01);
    let coh = north.conj() * south;
    Ok(BlochVector {
        x: 2.0 * coh.re,
        y: 2.0 * coh.im,
        z: north.norm_sqr() - south.norm_sqr(),
    })
}

/// One sample of the entangling stroke.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub energies: EnergyComponents,
    pub bloch: BlochVector,
}

/// Exact lab-frame trajectory from `|10>` over one Rabi period `[0, 2π/Ω]`,
/// on `intervals + 1` evenly spaced samples.
pub fn stroke_trace(p: &EngineParams, intervals: usize) -> Result<Vec<TracePoint>> {
    if intervals == 0 {
        return Err(Error::InvalidArgument("need at least one time interval".into()));
    }
    let engine = Engine::new(*p)?;
    let period = 2.0 * p.t0();
    (0..=intervals)
        .map(|k| {
            let t = period * k as f64 / intervals as f64;
            let psi = engine.state_at(t)?;
            Ok(TracePoint {
                t,
                energies: energy_components(&psi, p)?,
                bloch: bloch_coordinates(&psi)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{evolve_exact, vn_entropy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(delta: f64, g: f64) -> EngineParams {
        EngineParams::new(5.0, delta, g).unwrap()
    }

    #[test]
    fn derived_quantities() {
        let p = params(2.0, 1.0);
        assert!((p.rabi_frequency().powi(2) - 5.0).abs() < 1e-12);
        assert!((p.theta().tan() * p.delta() - p.g()).abs() < 1e-12);
        assert!((p.success_probability() - 0.2).abs() < 1e-15);
        let resonant = params(0.0, 1.0);
        assert_eq!(resonant.theta(), std::f64::consts::FRAC_PI_2);
        assert_eq!(measurement_energy(&resonant), 0.0);
        assert!(EngineParams::new(5.0, -1.0, 1.0).is_err());
        assert!(EngineParams::new(5.0, 1.0, 0.0).is_err());
        assert!(EngineParams::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn hamiltonian_matrix_elements() {
        let p = params(1.0, 0.8);
        let off = build_hamiltonian(&p, false);
        let on = build_hamiltonian(&p, true);
        let ket10 = initial_state();
        let image = off.apply(&ket10).unwrap();
        assert!((image[KET_10] - C64::from(p.omega_a())).norm() < 1e-15);
        assert!((on.element(KET_01, KET_10) - C64::from(0.4)).norm() < 1e-15);
        assert_eq!(on.element(0, 3), C64::new(0.0, 0.0));
        assert_eq!(on.element(3, 0), C64::new(0.0, 0.0));
        // excitation-number blocks
        for (r, c) in [(0, 1), (0, 2), (3, 1), (3, 2)] {
            assert_eq!(on.element(r, c), C64::new(0.0, 0.0));
        }
        assert!(on.is_hermitian());
    }

    #[test]
    fn analytic_state_reference_points() {
        let p = params(1.0, 1.0);
        let start = analytic_state(&p, 0.0);
        assert!((start.fidelity(&initial_state()).unwrap() - 1.0).abs() < 1e-15);
        let at_t0 = analytic_state(&p, p.t0());
        assert!((at_t0.population(KET_10) - 0.5).abs() < 1e-12);
        assert!((at_t0.population(KET_01) - 0.5).abs() < 1e-12);
        // i[cos θ |10> - sin θ |01>]
        let p = params(2.0, 1.0);
        let psi = analytic_state(&p, p.t0());
        let (s, c) = p.theta().sin_cos();
        assert!((psi.amp(KET_10) - C64::new(0.0, c)).norm() < 1e-12);
        assert!((psi.amp(KET_01) - C64::new(0.0, -s)).norm() < 1e-12);
    }

    #[test]
    fn analytic_state_matches_propagator() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let delta = rng.random_range(0.0..3.0);
            let g = rng.random_range(0.05..3.0);
            let p = params(delta, g);
            let t = rng.random_range(0.0..4.0 * p.t0());
            let exact = evolve_exact(&build_hamiltonian(&p, true), &initial_state(), t).unwrap();
            let fid = exact.fidelity(&analytic_state(&p, t)).unwrap();
            assert!(fid >= 1.0 - 1e-9, "fidelity {fid} at δ={delta}, g={g}, t={t}");
        }
    }

    #[test]
    fn energy_components_reference_points() {
        let p = params(1.0, 1.0);
        let e = energy_components(&initial_state(), &p).unwrap();
        assert_eq!((e.total, e.local, e.interaction), (5.0, 5.0, 0.0));
        for (delta, g) in [(1.0, 1.0), (2.0, 1.0), (0.3, 1.7)] {
            let p = params(delta, g);
            let psi = Engine::new(p).unwrap().state_at(p.t0()).unwrap();
            let e = energy_components(&psi, &p).unwrap();
            let fuel = delta * p.success_probability();
            assert!((e.local - p.omega_a() - fuel).abs() < 1e-12);
            assert!((e.interaction + fuel).abs() < 1e-12);
            assert!((e.total - e.local - e.interaction).abs() < 1e-12);
        }
    }

    #[test]
    fn stroke_conserves_energy_and_binds() {
        let p = params(0.7, 1.3);
        for pt in stroke_trace(&p, 300).unwrap() {
            assert!((pt.energies.total - p.omega_a()).abs() < 1e-9);
            assert!(pt.energies.interaction <= 1e-12);
            assert!((pt.bloch.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn thermodynamic_reference_values() {
        assert!((measurement_energy(&params(1.0, 1.0)) - 0.5).abs() < 1e-15);
        assert!((measurement_energy(&params(2.0, 1.0)) - 0.4).abs() < 1e-15);
        assert!(measurement_energy(&params(1.0, 1e-9)) < 1e-17);
        assert!((measurement_entropy(&params(1.0, 1.0)) - 1.0).abs() < 1e-15);
        assert!((measurement_entropy(&params(2.0, 1.0)) - 0.721_928_094_887_362_3).abs() < 1e-12);
        assert!(measurement_entropy(&params(1.0, 1e-9)) < 1e-15);
        assert!((temperature_ratio(&params(1.0, 1.0)).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            temperature_ratio(&params(0.0, 1.0)),
            Err(Error::DivergentRatio(_))
        ));
    }

    #[test]
    fn entropy_matches_unselective_mixture() {
        for (delta, g) in [(1.0, 1.0), (2.0, 1.0), (0.2, 3.0)] {
            let p = params(delta, g);
            let rho = Engine::new(p).unwrap().unselective_post_measurement().unwrap();
            assert!((vn_entropy(&rho) - measurement_entropy(&p)).abs() < 1e-10);
            let e_loc_before = p.omega_a() + measurement_energy(&p);
            let h_loc = local_hamiltonian(&p);
            let h = build_hamiltonian(&p, true);
            assert!((rho.expval(&h_loc).unwrap() - e_loc_before).abs() < 1e-10);
            // ⟨H_2qb⟩ rises from ω_A by exactly E^meas
            assert!((rho.expval(&h).unwrap() - p.omega_a() - measurement_energy(&p)).abs() < 1e-10);
        }
    }

    #[test]
    fn temperature_ratio_grows_with_coupling() {
        let mut last = 0.0;
        for k in 0..200 {
            let g = 1.0 + 0.05 * k as f64;
            let t = temperature_ratio(&params(1.0, g)).unwrap();
            assert!(t > last, "not increasing at g = {g}");
            last = t;
        }
    }

    #[test]
    fn temperature_ratio_approaches_asymptote() {
        // Independent evaluation at x = π/2 - θ: E = δ cos²x, S = H₂(sin²x),
        // asymptote = δ / (-2x² log₂ x).
        let ratio_at = |x: f64| {
            let delta = 1.0;
            let p = params(delta, delta / x.tan());
            temperature_ratio(&p).unwrap() / temperature_ratio_asymptote(&p)
        };
        let oracle = |x: f64| {
            let s2 = x.sin().powi(2);
            let s = -s2 * s2.log2() - (1.0 - s2) * (1.0 - s2).log2();
            (x.cos().powi(2) / s) / (-1.0 / (2.0 * x * x * x.log2()))
        };
        for x in [1e-3, 1e-6, 1e-12] {
            assert!((ratio_at(x) - oracle(x)).abs() < 1e-9);
        }
        // Slow logarithmic approach: 0.9325 at 1e-3, 0.9651 at 1e-6, 0.9997 at 1e-12.
        assert!((ratio_at(1e-3) - 0.932_502_558_654_77).abs() < 1e-6);
        assert!(ratio_at(1e-3) < ratio_at(1e-6) && ratio_at(1e-6) < ratio_at(1e-12));
        assert!((ratio_at(1e-12) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn ideal_cycle_on_success_resets_to_initial_state() {
        let p = params(1.0, 1.0);
        let engine = Engine::new(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = [false; 2];
        for _ in 0..200 {
            let r = engine.run_cycle(FeedbackPolicy::Ideal, &mut rng).unwrap();
            assert!((r.final_state_fidelity_to_10 - 1.0).abs() < 1e-12);
            assert!(!r.reset_required);
            assert!((r.info_consumed - r.entropy_meas).abs() < 1e-15);
            match r.outcome {
                Outcome::ExcitationOnB => {
                    assert!((r.work_extracted - 1.0).abs() < 1e-12);
                    seen[0] = true;
                }
                Outcome::ExcitationOnA => {
                    assert_eq!(r.work_extracted, 0.0);
                    seen[1] = true;
                }
            }
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn blind_cycle_records_losses_and_resets() {
        let p = params(1.0 / 3f64.sqrt(), 1.0);
        let engine = Engine::new(p).unwrap().with_bath_temperature(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let r = engine.run_cycle(FeedbackPolicy::Blind, &mut rng).unwrap();
            assert!(r.pulses_applied && !r.memory_read);
            assert_eq!(r.info_consumed, 0.0);
            assert!((r.erasure_cost - 2.0 * LN_2 * r.entropy_meas).abs() < 1e-12);
            match r.outcome {
                Outcome::ExcitationOnB => assert!((r.work_extracted - p.delta()).abs() < 1e-12),
                Outcome::ExcitationOnA => {
                    assert!((r.work_extracted + p.delta()).abs() < 1e-12);
                    assert!(r.reset_required);
                    assert!((r.reset_energy + p.delta()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn blind_with_large_detuning_never_pulses() {
        let p = params(2.0, 1.0);
        let ratio = conversion_ratio(&p, FeedbackPolicy::Blind).unwrap();
        assert!(ratio.no_work);
        assert_eq!(ratio.eta, 0.0);
        assert!(ratio.mean_work <= 0.0);
        assert_eq!(ratio.delta_info, 0.0);
    }

    #[test]
    fn conversion_ratio_policy_family() {
        for (delta, g) in [(0.5, 1.0), (1.0, 1.0), (3.0, 1.0)] {
            let p = params(delta, g);
            let s = measurement_entropy(&p);
            let ideal = conversion_ratio(&p, FeedbackPolicy::Ideal).unwrap();
            assert!((ideal.eta - 1.0).abs() < 1e-15);
            assert!((ideal.delta_info - s).abs() < 1e-15);
            for f in [0.0, 0.25, 0.5, 0.99] {
                let r = conversion_ratio(&p, FeedbackPolicy::partial(f).unwrap()).unwrap();
                assert!(r.delta_info <= s);
                assert!(r.eta < 1.0);
            }
        }
        let half = conversion_ratio(&params(1.0, 1.0), FeedbackPolicy::partial(0.5).unwrap()).unwrap();
        assert!((half.eta - 0.5).abs() < 1e-15);
        assert!(FeedbackPolicy::partial(1.5).is_err());
        assert!(conversion_ratio(&params(0.0, 1.0), FeedbackPolicy::Ideal).is_err());
    }

    #[test]
    fn erasure_cost_values() {
        assert_eq!(erasure_cost(1.0, 0.0), 0.0);
        assert!((erasure_cost(1.0, 3.0) - 3.0 * LN_2).abs() < 1e-15);
        let s = measurement_entropy(&params(1.0, 1.0));
        assert!((erasure_cost(s, 0.7) - 0.7 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn bloch_reference_points() {
        let north = bloch_coordinates(&initial_state()).unwrap();
        assert_eq!((north.x, north.y, north.z), (0.0, 0.0, 1.0));
        for (delta, g) in [(1.0, 1.0), (2.0, 1.0), (0.4, 1.0)] {
            let p = params(delta, g);
            let b = bloch_coordinates(&Engine::new(p).unwrap().state_at(p.t0()).unwrap()).unwrap();
            assert!((b.z - (2.0 * p.theta()).cos()).abs() < 1e-12);
        }
        let outside = StateVector::basis(&DIMS, 3).unwrap();
        assert!(matches!(bloch_coordinates(&outside), Err(Error::OutsideSubspace(_))));
    }

    #[test]
    fn successful_ideal_cycle_closes_on_the_bloch_sphere() {
        let p = params(1.0, 1.0);
        let engine = Engine::new(p).unwrap();
        let stroke = engine.state_at(p.t0()).unwrap();
        let projectors = local_projectors(&DIMS, 1).unwrap();
        let collapsed = StateVector::normalized(&DIMS, projectors[1].apply(&stroke).unwrap().iter().copied().collect()).unwrap();
        let south = bloch_coordinates(&collapsed).unwrap();
        assert!((south.z + 1.0).abs() < 1e-12);
        let pulse = Operator::pauli_x().tensor(&Operator::pauli_x());
        let back = bloch_coordinates(&collapsed.apply_unitary(&pulse).unwrap()).unwrap();
        assert!(back.x.abs() < 1e-12 && back.y.abs() < 1e-12 && (back.z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn switching_coupling_at_zero_binding_is_free() {
        let p = params(1.0, 1.0);
        let on = build_hamiltonian(&p, true);
        let off = build_hamiltonian(&p, false);
        for psi in [initial_state(), StateVector::basis(&DIMS, KET_01).unwrap()] {
            assert!((psi.expval(&on).unwrap() - psi.expval(&off).unwrap()).abs() < 1e-12);
        }
    }
}
