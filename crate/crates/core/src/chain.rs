//! Up-conversion along a chain of `N` qubits with equally spaced frequencies
//! `ω_i = ω_A + (i-1) δ/(N-1)`.
//!
//! A single excitation starts on qubit 1. Each hop couples qubits `k` and
//! `k+1` for `t_N = π/Ω_N` and then measures qubit `k+1`; the protocol stops
//! at the first hop that finds it in the ground state.

use rand::Rng;

use crate::error::{Error, Result};
use crate::hilbert::{local_projectors, Operator, ProjectiveMeasurement, Propagator, StateVector};
use crate::mc::{self, Estimate};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainParams {
    n: usize,
    omega_a: f64,
    delta: f64,
    g: f64,
}

impl ChainParams {
    pub fn new(n: usize, omega_a: f64, delta: f64, g: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("a chain needs at least 2 qubits, got {n}")));
        }
        if !(omega_a > 0.0 && omega_a.is_finite()) {
            return Err(Error::Parameter(format!("omega_a must be positive, got {omega_a}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Parameter(format!("total detuning must be positive, got {delta}")));
        }
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::Parameter(format!("coupling must be positive, got {g}")));
        }
        Ok(Self { n, omega_a, delta, g })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn hops(&self) -> usize {
        self.n - 1
    }

    /// Frequency of qubit `i` (1-based).
    pub fn frequency(&self, i: usize) -> f64 {
        self.omega_a + (i as f64 - 1.0) * self.hop_detuning()
    }

    /// Detuning between neighbours, `δ/(N-1)`.
    pub fn hop_detuning(&self) -> f64 {
        self.delta / self.hops() as f64
    }

    /// `Ω_N = sqrt(g² + (δ/(N-1))²)`.
    pub fn hop_rabi_frequency(&self) -> f64 {
        self.g.hypot(self.hop_detuning())
    }

    /// `tan θ_N = (N-1) g / δ`.
    pub fn theta_n(&self) -> f64 {
        (self.hops() as f64 * self.g).atan2(self.delta)
    }

    /// Duration of each hop, `π/Ω_N`.
    pub fn hop_time(&self) -> f64 {
        std::f64::consts::PI / self.hop_rabi_frequency()
    }

    /// Per-hop transfer probability `sin²θ_N`.
    pub fn hop_success_probability(&self) -> f64 {
        let x = self.hops() as f64 * self.g;
        x * x / (x * x + self.delta * self.delta)
    }
}

/// Probability `sin^{2(N-1)}(θ_N)` that the excitation reaches qubit `N`.
pub fn success_probability(p: &ChainParams) -> f64 {
    let hops = p.hops() as f64;
    (hops * p.hop_success_probability().ln()).exp()
}

/// Outcome of one run of the protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainRecord {
    pub hops_completed: usize,
    pub success: bool,
    /// `hops_completed · δ/(N-1)`.
    pub energy_gain: f64,
    /// Result of each attempted hop; only the last entry can be `false`.
    pub per_hop_outcomes: Vec<bool>,
    /// Qubit (1-based) holding the excitation when the run ends.
    pub stranded_on: usize,
}

/// Prepared per-hop dynamics, shared by all hops of a chain.
///
/// Each hop lives in the two-dimensional single-excitation subspace
/// `{|1_k 0_{k+1}>, |0_k 1_{k+1}>}`. Every hop has the same relative
/// detuning; the absolute offset `ω_k` only adds a global phase and is
/// dropped.
#[derive(Clone, Debug)]
pub struct Chain {
    params: ChainParams,
    propagator: Propagator,
    measurement: ProjectiveMeasurement,
    start: StateVector,
}

impl Chain {
    pub fn new(params: ChainParams) -> Result<Self> {
        // basis: index 0 = excitation on qubit k, index 1 = on qubit k+1
        let h = Operator::from_real(
            &[2],
            &[
                0.0,
                params.g() / 2.0,
                params.g() / 2.0,
                params.hop_detuning(),
            ],
        )?;
        Ok(Self {
            params,
            propagator: Propagator::new(&h)?,
            measurement: ProjectiveMeasurement::new(local_projectors(&[2], 0)?)?,
            start: StateVector::basis(&[2], 0)?,
        })
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChainRecord> {
        let hops = self.params.hops();
        let mut outcomes = Vec::with_capacity(hops);
        for _ in 0..hops {
            let evolved = self.propagator.evolve(&self.start, self.params.hop_time())?;
            let moved = self.measurement.measure(&evolved, rng)?.index == 1;
            outcomes.push(moved);
            if !moved {
                break;
            }
        }
        let completed = outcomes.iter().filter(|&&m| m).count();
        Ok(ChainRecord {
            hops_completed: completed,
            success: completed == hops,
            energy_gain: completed as f64 * self.params.hop_detuning(),
            per_hop_outcomes: outcomes,
            stranded_on: completed + 1,
        })
    }

    pub fn run_many(&self, trajectories: u64, master_seed: u64) -> Result<ChainStats> {
        let failure = std::sync::Mutex::new(None);
        let sums = mc::reduce(trajectories, master_seed, |_, rng| match self.run(rng) {
            Ok(r) => {
                let s = f64::from(u8::from(r.success));
                [s, s, r.hops_completed as f64, r.energy_gain]
            }
            Err(e) => {
                failure.lock().expect("poisoned").get_or_insert(e);
                [0.0; 4]
            }
        });
        if let Some(e) = failure.into_inner().expect("poisoned") {
            return Err(e);
        }
        let n = trajectories.max(1) as f64;
        Ok(ChainStats {
            trajectories,
            successes: sums[0] as u64,
            success: Estimate::from_sums(sums[0], sums[1], trajectories),
            mean_hops: sums[2] / n,
            mean_energy_gain: sums[3] / n,
        })
    }
}

/// One-shot run; builds a [`Chain`] per call.
pub fn run_chain<R: Rng + ?Sized>(p: &ChainParams, rng: &mut R) -> Result<ChainRecord> {
    Chain::new(*p)?.run(rng)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainStats {
    pub trajectories: u64,
    pub successes: u64,
    pub success: Estimate,
    pub mean_hops: f64,
    pub mean_energy_gain: f64,
}

/// Monte Carlo settings for sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McSettings {
    pub trajectories: u64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub g_over_delta: f64,
    pub analytic: f64,
    pub monte_carlo: Option<Estimate>,
}

/// Success probability over a grid of chain lengths and coupling ratios,
/// with `δ = 1`. Monte Carlo rows use seed `seed + row_index`.
pub fn sweep_chain(
    n_values: &[usize],
    ratio_values: &[f64],
    omega_a: f64,
    mc: Option<McSettings>,
) -> Result<Vec<SweepRow>> {
    if n_values.is_empty() || ratio_values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one N and one g/delta".into()));
    }
    let mut rows = Vec::with_capacity(n_values.len() * ratio_values.len());
    for &n in n_values {
        for &ratio in ratio_values {
            let p = ChainParams::new(n, omega_a, 1.0, ratio)?;
            let monte_carlo = match mc {
                Some(s) => Some(
                    Chain::new(p)?
                        .run_many(s.trajectories, s.seed.wrapping_add(rows.len() as u64))?
                        .success,
                ),
                None => None,
            };
            rows.push(SweepRow {
                n,
                g_over_delta: ratio,
                analytic: success_probability(&p),
                monte_carlo,
            });
        }
    }
    Ok(rows)
}
