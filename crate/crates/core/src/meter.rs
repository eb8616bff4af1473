//! Pre-measurement of qubit B by a degenerate meter qubit `m`.
//!
//! From `t0` the meter couples to B's excitation number through
//! `V_m = χ_eff σ_B†σ_B ⊗ σ_x^m` while the qubits keep interacting through
//! `V`. The three-body state is propagated exactly and compared with the
//! zeroth-order (quantum non-demolition) solution obtained by dropping `V`,
//! which is accurate up to corrections in `ε = g/χ`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::engine2q::{self, EngineParams};
use crate::error::{Error, Result};
use crate::hilbert::{partial_trace, DensityMatrix, Expectation, Operator, Propagator, StateVector, C64};

/// Subsystem layout: qubit A, qubit B, meter.
pub const DIMS: [usize; 3] = [2, 2, 2];
pub const KET_100: usize = 4;
pub const KET_101: usize = 5;
pub const KET_010: usize = 2;
pub const KET_011: usize = 3;

/// Above this `ε` a warning is logged.
pub const EPSILON_WARN: f64 = 0.2;
/// Above this `ε` parameters are rejected.
pub const EPSILON_MAX: f64 = 0.5;

/// How the meter coupling constant relates to the readout time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ReadoutConvention {
    /// `V_m = (χ/2) n_B ⊗ σ_x`; the meter flips after `π/χ`.
    #[default]
    HalfChi,
    /// `V_m = χ n_B ⊗ σ_x`; the meter flips after `π/(2χ)`.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeterParams {
    engine: EngineParams,
    chi: f64,
    convention: ReadoutConvention,
    dt: f64,
}

impl MeterParams {
    pub fn new(engine: EngineParams, chi: f64) -> Result<Self> {
        if !(chi > 0.0 && chi.is_finite()) {
            return Err(Error::Parameter(format!("measurement strength must be positive, got {chi}")));
        }
        let epsilon = engine.g() / chi;
        if epsilon > EPSILON_MAX {
            return Err(Error::Parameter(format!(
                "epsilon = g/chi = {epsilon} exceeds {EPSILON_MAX}; the meter is too weak"
            )));
        }
        if epsilon > EPSILON_WARN {
            log::warn!("epsilon = g/chi = {epsilon} is outside the perturbative regime (> {EPSILON_WARN})");
        }
        Ok(Self {
            engine,
            chi,
            convention: ReadoutConvention::HalfChi,
            dt: Self::max_dt(chi) / 8.0,
        })
    }

    /// Meter strength given as a multiple of the Rabi frequency `Ω`.
    pub fn with_chi_over_omega(engine: EngineParams, factor: f64) -> Result<Self> {
        Self::new(engine, factor * engine.rabi_frequency())
    }

    pub fn with_convention(mut self, convention: ReadoutConvention) -> Self {
        self.convention = convention;
        self
    }

    /// Sampling step; must resolve the meter oscillation.
    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        let max = Self::max_dt(self.chi);
        if !(dt > 0.0 && dt <= max) {
            return Err(Error::Parameter(format!(
                "time step {dt} must lie in (0, {max}] for chi = {}",
                self.chi
            )));
        }
        self.dt = dt;
        Ok(self)
    }

    fn max_dt(chi: f64) -> f64 {
        2.0 * PI / chi / 50.0
    }

    pub fn engine(&self) -> &EngineParams {
        &self.engine
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn convention(&self) -> ReadoutConvention {
        self.convention
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn epsilon(&self) -> f64 {
        self.engine.g() / self.chi
    }

    /// Prefactor of `n_B ⊗ σ_x` in `V_m`.
    pub fn meter_coupling(&self) -> f64 {
        match self.convention {
            ReadoutConvention::HalfChi => self.chi / 2.0,
            ReadoutConvention::Literal => self.chi,
        }
    }

    /// `t_m - t0`: time for the zeroth-order meter to flip completely.
    pub fn readout_duration(&self) -> f64 {
        PI / (2.0 * self.meter_coupling())
    }

    pub fn t0(&self) -> f64 {
        self.engine.t0()
    }

    pub fn t_m(&self) -> f64 {
        self.t0() + self.readout_duration()
    }

    /// Uniform grid over `[t0, t_m]` with step at most `dt`.
    pub fn time_grid(&self) -> Vec<f64> {
        let span = self.readout_duration();
        let steps = ((span / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (0..=steps)
            .map(|k| self.t0() + span * k as f64 / steps as f64)
            .collect()
    }
}

fn lift(op: &Operator) -> Operator {
    op.tensor(&Operator::identity(&[2]).expect("qubit"))
}

/// The observables of the qubits-meter system.
#[derive(Clone, Debug)]
pub struct MeterOperators {
    pub h_loc: Operator,
    pub v: Operator,
    pub v_m: Operator,
    /// `H_loc + V`, the two-qubit Hamiltonian on the joint space.
    pub h_2qb: Operator,
}

impl MeterOperators {
    pub fn new(p: &MeterParams) -> Self {
        let h_loc = lift(&engine2q::local_hamiltonian(&p.engine));
        let v = lift(&engine2q::coupling(&p.engine));
        let v_m = Operator::identity(&[2])
            .expect("qubit")
            .tensor(&Operator::number())
            .tensor(&Operator::pauli_x())
            .scale(p.meter_coupling());
        let h_2qb = h_loc.clone() + v.clone();
        Self { h_loc, v, v_m, h_2qb }
    }
}

/// `H_loc + V + V_m` on qubits and meter, with `V_m` dropped when the meter
/// is off. The meter levels are degenerate at zero energy.
pub fn build_meter_hamiltonian(p: &MeterParams, meter_on: bool) -> Operator {
    let ops = MeterOperators::new(p);
    if meter_on {
        ops.h_2qb + ops.v_m
    } else {
        ops.h_2qb
    }
}

/// `i(cos θ |100> - sin θ |010>)`: the pair at `t0` with the meter ready.
pub fn initial_state(p: &MeterParams) -> StateVector {
    let (s, c) = p.engine.theta().sin_cos();
    let mut amps = vec![C64::new(0.0, 0.0); 8];
    amps[KET_100] = C64::new(0.0, c);
    amps[KET_010] = C64::new(0.0, -s);
    StateVector::new(&DIMS, amps).expect("unit amplitudes")
}

fn check_window(p: &MeterParams, t: f64) -> Result<f64> {
    let tau = t - p.t0();
    let span = p.readout_duration();
    if !(tau >= -1e-12 * span && tau <= span * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!(
            "time {t} outside the readout window [{}, {}]",
            p.t0(),
            p.t_m()
        )));
    }
    Ok(tau.clamp(0.0, span))
}

/// Closed-form evolution under `H_loc + V_m` alone.
///
/// The `|100>` branch only picks up the free phase `e^{-iω_A τ}`; on the
/// `|01>` branch the meter rotates from `|0>` to `|1>`.
pub fn zeroth_order_state(p: &MeterParams, t: f64) -> Result<StateVector> {
    let tau = check_window(p, t)?;
    let (s, c) = p.engine.theta().sin_cos();
    let (sin_m, cos_m) = (p.meter_coupling() * tau).sin_cos();
    let phase_a = C64::from_polar(1.0, -p.engine.omega_a() * tau);
    let phase_b = C64::from_polar(1.0, -p.engine.omega_b() * tau);
    let i = C64::new(0.0, 1.0);
    let mut amps = vec![C64::new(0.0, 0.0); 8];
    amps[KET_100] = i * c * phase_a;
    amps[KET_010] = -i * s * phase_b * cos_m;
    amps[KET_011] = -i * s * phase_b * (-i * sin_m);
    StateVector::normalized(&DIMS, amps)
}

/// First-order binding energy `<Ψ0(t)|V|Ψ0(t)> = -E_meas cos(χ_eff τ) cos(δ τ)`.
pub fn first_order_binding_energy(p: &MeterParams, t: f64) -> Result<f64> {
    let tau = check_window(p, t)?;
    Ok(-engine2q::measurement_energy(&p.engine)
        * (p.meter_coupling() * tau).cos()
        * (p.engine.delta() * tau).cos())
}

/// Sampled observables over the readout window.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub channels: Vec<(String, Vec<f64>)>,
}

impl TimeSeries {
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, name: &str, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.times.len());
        self.channels.push((name.to_string(), values));
    }
}

/// Channel names produced by [`simulate_premeasurement`], in order.
pub const CHANNELS: [&str; 10] = [
    "p_100", "p_101", "p_010", "p_011", "h_2qb", "h_loc", "v", "v_m", "coherence", "v_first_order",
];

/// Exact run over `[t0, t_m]`.
#[derive(Clone, Debug)]
pub struct Premeasurement {
    pub params: MeterParams,
    pub series: TimeSeries,
    pub states: Vec<StateVector>,
}

impl Premeasurement {
    /// Energy supplied when the meter coupling is switched off at `t_m`,
    /// `-<V_m(t_m)>`.
    pub fn switch_off_cost(&self) -> f64 {
        -self.last("v_m")
    }

    pub fn last(&self, channel: &str) -> f64 {
        *self
            .series
            .channel(channel)
            .and_then(|c| c.last())
            .expect("simulated channel")
    }

    pub fn first(&self, channel: &str) -> f64 {
        *self
            .series
            .channel(channel)
            .and_then(|c| c.first())
            .expect("simulated channel")
    }
}

/// Propagates the joint state exactly under `H_loc + V + V_m` and samples
/// populations, energies and the reduced qubit-pair coherence.
pub fn simulate_premeasurement(p: &MeterParams) -> Result<Premeasurement> {
    let ops = MeterOperators::new(p);
    let propagator = Propagator::new(&(ops.h_2qb.clone() + ops.v_m.clone()))?;
    let psi0 = initial_state(p);
    let times = p.time_grid();
    let states = times
        .iter()
        .map(|&t| propagator.evolve(&psi0, t - p.t0()))
        .collect::<Result<Vec<_>>>()?;

    let mut series = TimeSeries {
        times: times.clone(),
        channels: Vec::new(),
    };
    for (name, idx) in [("p_100", KET_100), ("p_101", KET_101), ("p_010", KET_010), ("p_011", KET_011)] {
        series.push(name, states.iter().map(|s| s.population(idx)).collect());
    }
    for (name, op) in [("h_2qb", &ops.h_2qb), ("h_loc", &ops.h_loc), ("v", &ops.v), ("v_m", &ops.v_m)] {
        series.push(name, states.iter().map(|s| s.expval(op)).collect::<Result<_>>()?);
    }
    series.push(
        "coherence",
        states.iter().map(pair_coherence).collect::<Result<_>>()?,
    );
    series.push(
        "v_first_order",
        times
            .iter()
            .map(|&t| first_order_binding_energy(p, t))
            .collect::<Result<_>>()?,
    );
    Ok(Premeasurement {
        params: *p,
        series,
        states,
    })
}

/// `|<01| Tr_m ρ |10>|`, the qubit-pair coherence after tracing out the meter.
pub fn pair_coherence(psi: &StateVector) -> Result<f64> {
    let pair = partial_trace(&DensityMatrix::from_pure(psi), &[0, 1])?;
    Ok(pair.element(engine2q::KET_01, engine2q::KET_10).norm())
}

/// `-<V_m(t_m)>` from a fresh exact simulation.
pub fn switch_off_cost(p: &MeterParams) -> Result<f64> {
    Ok(simulate_premeasurement(p)?.switch_off_cost())
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_order(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

/// Deviations of one exact run from perturbation theory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergencePoint {
    pub chi: f64,
    pub epsilon: f64,
    /// Max over the grid and basis states of |exact - zeroth-order population|.
    pub population_deviation: f64,
    /// Max over the grid of `1 - |<Ψ0|Ψ>|²`.
    pub fidelity_deficit: f64,
    /// Max over the grid of |<V> - <V>_first order|.
    pub binding_deviation: f64,
    pub switch_off_cost: f64,
    /// |switch-off cost - E_meas|.
    pub switch_off_gap: f64,
    /// `<V(t_m)>`.
    pub final_binding: f64,
    /// `<H_loc>(t_m) - <H_loc>(t0)`.
    pub h_loc_drift: f64,
    /// `<H_2qb>(t_m) - <H_2qb>(t0)`.
    pub h_2qb_gain: f64,
}

fn convergence_point(p: &MeterParams) -> Result<ConvergencePoint> {
    let run = simulate_premeasurement(p)?;
    let mut population_deviation: f64 = 0.0;
    let mut fidelity_deficit: f64 = 0.0;
    for (t, exact) in run.series.times.iter().zip(&run.states) {
        let zeroth = zeroth_order_state(p, *t)?;
        for (a, b) in exact.populations().iter().zip(zeroth.populations()) {
            population_deviation = population_deviation.max((a - b).abs());
        }
        fidelity_deficit = fidelity_deficit.max(1.0 - exact.fidelity(&zeroth)?);
    }
    let v = run.series.channel("v").expect("v");
    let v1 = run.series.channel("v_first_order").expect("v_first_order");
    let binding_deviation = v.iter().zip(v1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let e_meas = engine2q::measurement_energy(&p.engine);
    Ok(ConvergencePoint {
        chi: p.chi,
        epsilon: p.epsilon(),
        population_deviation,
        fidelity_deficit,
        binding_deviation,
        switch_off_cost: run.switch_off_cost(),
        switch_off_gap: (run.switch_off_cost() - e_meas).abs(),
        final_binding: run.last("v"),
        h_loc_drift: run.last("h_loc") - run.first("h_loc"),
        h_2qb_gain: run.last("h_2qb") - run.first("h_2qb"),
    })
}

/// Perturbative convergence across meter strengths.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceStudy {
    pub points: Vec<ConvergencePoint>,
    /// Fitted exponent of population deviation vs `ε`.
    pub population_order: f64,
    /// Fitted exponent of the first-order binding-energy deviation vs `ε`.
    pub binding_order: f64,
    /// Fitted exponent of the switch-off gap vs `ε`.
    pub switch_off_order: f64,
    /// `C` in `1 - F <= C ε²`, fitted on the two strongest meters.
    pub fidelity_constant: f64,
}

/// Runs the exact simulation at `χ = factor · Ω` for each factor (in
/// parallel; results keep the input order).
pub fn convergence_study(
    engine: EngineParams,
    chi_factors: &[f64],
    convention: ReadoutConvention,
) -> Result<ConvergenceStudy> {
    if chi_factors.len() < 2 {
        return Err(Error::InvalidArgument("need at least two meter strengths".into()));
    }
    let points = chi_factors
        .par_iter()
        .map(|&f| {
            let p = MeterParams::with_chi_over_omega(engine, f)?.with_convention(convention);
            convergence_point(&p)
        })
        .collect::<Result<Vec<_>>>()?;
    let eps: Vec<f64> = points.iter().map(|p| p.epsilon).collect();
    let order = |f: fn(&ConvergencePoint) -> f64| {
        fit_order(&eps, &points.iter().map(f).collect::<Vec<_>>())
    };
    let mut by_strength: Vec<&ConvergencePoint> = points.iter().collect();
    by_strength.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let fidelity_constant = by_strength[..2]
        .iter()
        .map(|p| p.fidelity_deficit / (p.epsilon * p.epsilon))
        .fold(0.0, f64::max);
    Ok(ConvergenceStudy {
        population_order: order(|p| p.population_deviation),
        binding_order: order(|p| p.binding_deviation),
        switch_off_order: order(|p| p.switch_off_gap),
        fidelity_constant,
        points,
    })
}
