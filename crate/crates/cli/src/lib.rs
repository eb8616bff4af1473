//! Command implementations behind the `qengine` binary.
//!
//! Every command turns a parsed argument set into a complete CSV document
//! (metadata header included), so the binary only has to deal with thread
//! pools, files and exit codes. Output depends only on the arguments: thread
//! count and output location are deliberately kept out of the header.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qengine::chain::{self, Chain, ChainParams};
use qengine::engine2q::{self, Engine, EngineParams, FeedbackPolicy};
use qengine::meter::{self, MeterParams, ReadoutConvention};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed request: empty grids, bad combinations, refused overwrite.
    #[error("usage error: {0}")]
    Usage(String),
    /// Well-formed request outside the physical parameter domain.
    #[error(transparent)]
    Domain(#[from] qengine::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Domain(_) => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "qengine", version, about = "Measurement-fueled quantum engine simulations, exported as CSV")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the CSV here instead of standard output
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,

    /// Overwrite an existing output file
    #[arg(long, global = true)]
    pub force: bool,

    /// Worker threads for Monte Carlo and sweeps (1 = sequential)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energy split and Bloch vector over one coupling period
    EngineTrace(EngineTraceArgs),
    /// Measurement energy, entropy, temperature and conversion ratios over a detuning grid
    EngineSweep(EngineSweepArgs),
    /// Monte Carlo engine cycles under the feedback policies
    CycleMc(CycleMcArgs),
    /// Analytic chain success probability versus chain length
    ChainSweep(ChainSweepArgs),
    /// Monte Carlo chain runs compared with the analytic success probability
    ChainMc(ChainMcArgs),
    /// Qubits-meter populations and energy channels during the readout
    MeterTrace(MeterTraceArgs),
    /// Deviation from perturbation theory across meter strengths
    MeterConvergence(MeterConvergenceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    /// Frequency of qubit A (sets the energy unit)
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub omega_a: f64,
    /// Detuning omega_B - omega_A
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub delta: f64,
    /// Exchange coupling
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub g: f64,
}

impl EngineArgs {
    fn params(&self) -> CliResult<EngineParams> {
        Ok(EngineParams::new(self.omega_a, self.delta, self.g)?)
    }

    fn record(&self, h: &mut Header) {
        h.num("omega_a", self.omega_a).num("delta", self.delta).num("g", self.g);
    }
}

#[derive(Debug, Clone, Args)]
pub struct EngineTraceArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Number of time intervals over [0, 2 pi / Omega]
    #[arg(long, default_value_t = 400)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EngineSweepArgs {
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub omega_a: f64,
    /// Coupling strengths, one sweep per value
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2", allow_negative_numbers = true)]
    pub g: Vec<f64>,
    /// Smallest detuning of the grid
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub delta_min: f64,
    /// Largest detuning of the grid
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    pub delta_max: f64,
    /// Number of grid points
    #[arg(long, default_value_t = 400)]
    pub delta_points: usize,
    /// Memory read probability of the partial-feedback column
    #[arg(long, default_value_t = 0.5)]
    pub read_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyName {
    Ideal,
    Blind,
    Partial,
}

#[derive(Debug, Clone, Args)]
pub struct CycleMcArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Policies to simulate, one row each
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ideal,blind,partial")]
    pub policy: Vec<PolicyName>,
    /// Memory read probability of the partial policy
    #[arg(long, default_value_t = 0.5)]
    pub read_fraction: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trajectories: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Temperature of the bath used to price memory erasure
    #[arg(long)]
    pub bath_temperature: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ChainSweepArgs {
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub omega_a: f64,
    /// Total detuning between the first and last qubit
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub delta: f64,
    /// Coupling ratios g/delta
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2", allow_negative_numbers = true)]
    pub ratios: Vec<f64>,
    /// Chain lengths; defaults to every N from 2 to --n-max
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub n_max: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ChainMcArgs {
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub omega_a: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub delta: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2", allow_negative_numbers = true)]
    pub ratios: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "2,3,5,10")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub trajectories: u64,
    /// Master seed; row k uses seed + k
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionName {
    /// V_m = (chi/2) n_B sigma_x, readout time pi/chi
    HalfChi,
    /// V_m = chi n_B sigma_x, readout time pi/(2 chi)
    Literal,
}

impl From<ConventionName> for ReadoutConvention {
    fn from(c: ConventionName) -> Self {
        match c {
            ConventionName::HalfChi => ReadoutConvention::HalfChi,
            ConventionName::Literal => ReadoutConvention::Literal,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MeterArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long, value_enum, default_value = "half-chi")]
    pub convention: ConventionName,
}

#[derive(Debug, Clone, Args)]
pub struct MeterTraceArgs {
    #[command(flatten)]
    pub meter: MeterArgs,
    /// Meter strength as an absolute rate (overrides --chi-over-omega)
    #[arg(long, allow_negative_numbers = true)]
    pub chi: Option<f64>,
    /// Meter strength in units of the Rabi frequency
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub chi_over_omega: f64,
    /// Sampling step (default: one 400th of a meter period)
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct MeterConvergenceArgs {
    #[command(flatten)]
    pub meter: MeterArgs,
    /// Meter strengths in units of the Rabi frequency
    #[arg(long, value_delimiter = ',', default_value = "10,20,40,80")]
    pub chi_factors: Vec<f64>,
}

/// Formats like C's `%.12g`.
pub fn fmt_num(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..DIGITS).contains(&exp) {
        let fixed = format!("{:.*}", (DIGITS - 1 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Ordered `key = value` metadata written as `#` comment lines.
#[derive(Debug, Default)]
pub struct Header {
    entries: Vec<(String, String)>,
}

impl Header {
    fn text(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.entries.push((key.into(), value.into()));
        self
    }

    fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.text(key, fmt_num(value))
    }

    fn list<T: ToString>(&mut self, key: &str, values: &[T]) -> &mut Self {
        let joined = values.iter().map(T::to_string).collect::<Vec<_>>().join(",");
        self.text(key, joined)
    }
}

struct Csv {
    out: String,
    width: usize,
}

impl Csv {
    fn new(command: &str, header: &Header, columns: &[&str]) -> Self {
        let mut out = format!("# qengine {VERSION}\n# command = {command}\n");
        for (k, v) in &header.entries {
            writeln!(out, "# {k} = {v}").expect("string write");
        }
        out.push_str(&columns.join(","));
        out.push('\n');
        Self {
            out,
            width: columns.len(),
        }
    }

    fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.width);
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }

    fn nums(&mut self, values: &[f64]) {
        self.row(&values.iter().map(|&v| fmt_num(v)).collect::<Vec<_>>());
    }
}

pub fn run(command: &Command) -> CliResult<String> {
    match command {
        Command::EngineTrace(a) => engine_trace(a),
        Command::EngineSweep(a) => engine_sweep(a),
        Command::CycleMc(a) => cycle_mc(a),
        Command::ChainSweep(a) => chain_sweep(a),
        Command::ChainMc(a) => chain_mc(a),
        Command::MeterTrace(a) => meter_trace(a),
        Command::MeterConvergence(a) => meter_convergence(a),
    }
}

pub fn engine_trace(a: &EngineTraceArgs) -> CliResult<String> {
    if a.samples < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    let p = a.engine.params()?;
    let mut h = Header::default();
    a.engine.record(&mut h);
    h.text("samples", a.samples.to_string());
    let mut csv = Csv::new(
        "engine-trace",
        &h,
        &["t", "e_total", "e_loc", "e_int", "bloch_x", "bloch_y", "bloch_z"],
    );
    for pt in engine2q::stroke_trace(&p, a.samples)? {
        let e = pt.energies;
        csv.nums(&[pt.t, e.total, e.local, e.interaction, pt.bloch.x, pt.bloch.y, pt.bloch.z]);
    }
    Ok(csv.out)
}

fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + step * i as f64).collect()
}

pub fn engine_sweep(a: &EngineSweepArgs) -> CliResult<String> {
    if a.g.is_empty() || a.delta_points == 0 {
        return Err(CliError::Usage("the detuning/coupling grid is empty".into()));
    }
    if a.delta_points > 1 && a.delta_min.partial_cmp(&a.delta_max) != Some(std::cmp::Ordering::Less) {
        return Err(CliError::Usage("--delta-min must be below --delta-max".into()));
    }
    let partial = FeedbackPolicy::partial(a.read_fraction)?;
    let mut h = Header::default();
    h.num("omega_a", a.omega_a)
        .list("g", &a.g)
        .num("delta_min", a.delta_min)
        .num("delta_max", a.delta_max)
        .text("delta_points", a.delta_points.to_string())
        .num("read_fraction", a.read_fraction);
    let mut csv = Csv::new(
        "engine-sweep",
        &h,
        &[
            "delta", "g", "e_meas", "s_meas", "t_meas", "eta_ideal", "eta_blind", "blind_no_work",
            "eta_partial", "delta_info",
        ],
    );
    for &g in &a.g {
        for delta in linspace(a.delta_min, a.delta_max, a.delta_points) {
            let p = EngineParams::new(a.omega_a, delta, g)?;
            let ideal = engine2q::conversion_ratio(&p, FeedbackPolicy::Ideal)?;
            let blind = engine2q::conversion_ratio(&p, FeedbackPolicy::Blind)?;
            let part = engine2q::conversion_ratio(&p, partial)?;
            let mut cells: Vec<String> = [
                delta,
                g,
                engine2q::measurement_energy(&p),
                engine2q::measurement_entropy(&p),
                engine2q::temperature_ratio(&p)?,
                ideal.eta,
                blind.eta,
            ]
            .iter()
            .map(|&v| fmt_num(v))
            .collect();
            cells.push(u8::from(blind.no_work).to_string());
            cells.push(fmt_num(part.eta));
            cells.push(fmt_num(part.delta_info));
            csv.row(&cells);
        }
    }
    Ok(csv.out)
}

pub fn cycle_mc(a: &CycleMcArgs) -> CliResult<String> {
    if a.policy.is_empty() {
        return Err(CliError::Usage("--policy needs at least one policy".into()));
    }
    if a.trajectories == 0 {
        return Err(CliError::Usage("--trajectories must be positive".into()));
    }
    let p = a.engine.params()?;
    let mut engine = Engine::new(p)?;
    if let Some(t) = a.bath_temperature {
        engine = engine.with_bath_temperature(t)?;
    }
    let partial = FeedbackPolicy::partial(a.read_fraction)?;

    let mut h = Header::default();
    a.engine.record(&mut h);
    let names: Vec<String> = a
        .policy
        .iter()
        .map(|n| n.to_possible_value().expect("named").get_name().to_string())
        .collect();
    h.list("policy", &names)
        .num("read_fraction", a.read_fraction)
        .text("trajectories", a.trajectories.to_string())
        .text("seed", a.seed.to_string())
        .text(
            "bath_temperature",
            a.bath_temperature.map_or("none".into(), fmt_num),
        );
    let mut csv = Csv::new(
        "cycle-mc",
        &h,
        &[
            "policy", "read_fraction", "trajectories", "mean_work", "std_err", "analytic_work",
            "z_score", "p_excitation_on_b", "mean_info", "resets", "mean_reset_energy",
            "mean_erasure_cost",
        ],
    );
    for (k, name) in a.policy.iter().enumerate() {
        let policy = match name {
            PolicyName::Ideal => FeedbackPolicy::Ideal,
            PolicyName::Blind => FeedbackPolicy::Blind,
            PolicyName::Partial => partial,
        };
        // each row draws from its own seed so rows are independent samples
        let stats = engine.run_cycles(policy, a.trajectories, a.seed.wrapping_add(k as u64))?;
        let analytic = engine2q::mean_work(&p, policy);
        let z = if stats.work.std_err > 0.0 {
            (stats.work.mean - analytic) / stats.work.std_err
        } else {
            0.0
        };
        let n = stats.trajectories as f64;
        csv.row(&[
            policy.name().to_string(),
            fmt_num(policy.read_fraction()),
            stats.trajectories.to_string(),
            fmt_num(stats.work.mean),
            fmt_num(stats.work.std_err),
            fmt_num(analytic),
            fmt_num(z),
            fmt_num(stats.excitation_on_b as f64 / n),
            fmt_num(stats.mean_info_consumed),
            stats.resets.to_string(),
            fmt_num(stats.mean_reset_energy),
            fmt_num(stats.mean_erasure_cost),
        ]);
    }
    Ok(csv.out)
}

fn check_chain_grid(n: &[usize], ratios: &[f64]) -> CliResult<()> {
    if n.is_empty() || ratios.is_empty() {
        return Err(CliError::Usage("chain grid needs at least one N and one g/delta".into()));
    }
    if let Some(bad) = n.iter().find(|&&n| n < 2) {
        return Err(CliError::Usage(format!("chain length must be at least 2, got {bad}")));
    }
    Ok(())
}

pub fn chain_sweep(a: &ChainSweepArgs) -> CliResult<String> {
    let lengths: Vec<usize> = if a.n.is_empty() {
        if a.n_max < 2 {
            return Err(CliError::Usage(format!("--n-max must be at least 2, got {}", a.n_max)));
        }
        (2..=a.n_max).collect()
    } else {
        a.n.clone()
    };
    check_chain_grid(&lengths, &a.ratios)?;
    let mut h = Header::default();
    h.num("omega_a", a.omega_a)
        .num("delta", a.delta)
        .list("ratios", &a.ratios)
        .list("n", &lengths);
    let mut csv = Csv::new(
        "chain-sweep",
        &h,
        &["n", "g_over_delta", "theta_n", "p_hop", "p_success", "zeno_estimate"],
    );
    for &n in &lengths {
        for &r in &a.ratios {
            let p = ChainParams::new(n, a.omega_a, a.delta, r * a.delta)?;
            // large-N form: ln P ≈ -(δ/g)²/(N-1)
            let zeno = (-1.0 / (r * r * (n - 1) as f64)).exp();
            let mut cells = vec![n.to_string()];
            cells.extend(
                [r, p.theta_n(), p.hop_success_probability(), chain::success_probability(&p), zeno]
                    .iter()
                    .map(|&v| fmt_num(v)),
            );
            csv.row(&cells);
        }
    }
    Ok(csv.out)
}

pub fn chain_mc(a: &ChainMcArgs) -> CliResult<String> {
    check_chain_grid(&a.n, &a.ratios)?;
    if a.trajectories == 0 {
        return Err(CliError::Usage("--trajectories must be positive".into()));
    }
    let mut h = Header::default();
    h.num("omega_a", a.omega_a)
        .num("delta", a.delta)
        .list("ratios", &a.ratios)
        .list("n", &a.n)
        .text("trajectories", a.trajectories.to_string())
        .text("seed", a.seed.to_string());
    let mut csv = Csv::new(
        "chain-mc",
        &h,
        &[
            "n", "g_over_delta", "analytic", "mc_success", "mc_std_err", "z_score", "successes",
            "mean_hops", "mean_energy_gain",
        ],
    );
    let mut row = 0u64;
    for &n in &a.n {
        for &r in &a.ratios {
            let p = ChainParams::new(n, a.omega_a, a.delta, r * a.delta)?;
            let stats = Chain::new(p)?.run_many(a.trajectories, a.seed.wrapping_add(row))?;
            row += 1;
            let analytic = chain::success_probability(&p);
            let est = stats.success;
            let z = if est.std_err > 0.0 { (est.mean - analytic) / est.std_err } else { 0.0 };
            csv.row(&[
                n.to_string(),
                fmt_num(r),
                fmt_num(analytic),
                fmt_num(est.mean),
                fmt_num(est.std_err),
                fmt_num(z),
                stats.successes.to_string(),
                fmt_num(stats.mean_hops),
                fmt_num(stats.mean_energy_gain),
            ]);
        }
    }
    Ok(csv.out)
}

fn convention_name(c: ConventionName) -> &'static str {
    match c {
        ConventionName::HalfChi => "half-chi",
        ConventionName::Literal => "literal",
    }
}

pub fn meter_trace(a: &MeterTraceArgs) -> CliResult<String> {
    let engine = a.meter.engine.params()?;
    let mut p = match a.chi {
        Some(chi) => MeterParams::new(engine, chi)?,
        None => MeterParams::with_chi_over_omega(engine, a.chi_over_omega)?,
    }
    .with_convention(a.meter.convention.into());
    if let Some(dt) = a.dt {
        p = p.with_dt(dt)?;
    }
    let run = meter::simulate_premeasurement(&p)?;

    let mut h = Header::default();
    a.meter.engine.record(&mut h);
    h.num("chi", p.chi())
        .num("epsilon", p.epsilon())
        .text("convention", convention_name(a.meter.convention))
        .num("dt", p.dt())
        .num("t0", p.t0())
        .num("t_m", p.t_m())
        .num("e_meas", engine2q::measurement_energy(&engine))
        .num("switch_off_cost", run.switch_off_cost());
    let mut columns = vec!["t"];
    columns.extend(meter::CHANNELS);
    columns.push("pop_sum");
    let mut csv = Csv::new("meter-trace", &h, &columns);

    let channels: Vec<&[f64]> = meter::CHANNELS
        .iter()
        .map(|c| run.series.channel(c).expect("declared channel"))
        .collect();
    let pops: Vec<&[f64]> = ["p_100", "p_101", "p_010", "p_011"]
        .iter()
        .map(|c| run.series.channel(c).expect("population channel"))
        .collect();
    for (i, &t) in run.series.times.iter().enumerate() {
        let mut values = vec![t];
        values.extend(channels.iter().map(|c| c[i]));
        values.push(pops.iter().map(|c| c[i]).sum());
        csv.nums(&values);
    }
    Ok(csv.out)
}

pub fn meter_convergence(a: &MeterConvergenceArgs) -> CliResult<String> {
    if a.chi_factors.len() < 2 {
        return Err(CliError::Usage("--chi-factors needs at least two values".into()));
    }
    let engine = a.meter.engine.params()?;
    let study = meter::convergence_study(engine, &a.chi_factors, a.meter.convention.into())?;
    let mut h = Header::default();
    a.meter.engine.record(&mut h);
    h.list("chi_factors", &a.chi_factors)
        .text("convention", convention_name(a.meter.convention))
        .num("e_meas", engine2q::measurement_energy(&engine))
        .num("population_order", study.population_order)
        .num("binding_order", study.binding_order)
        .num("switch_off_order", study.switch_off_order)
        .num("fidelity_constant", study.fidelity_constant);
    let mut csv = Csv::new(
        "meter-convergence",
        &h,
        &[
            "chi", "epsilon", "population_deviation", "fidelity_deficit", "binding_deviation",
            "switch_off_cost", "switch_off_gap", "final_binding", "h_loc_drift", "h_2qb_gain",
        ],
    );
    for pt in &study.points {
        csv.nums(&[
            pt.chi,
            pt.epsilon,
            pt.population_deviation,
            pt.fidelity_deficit,
            pt.binding_deviation,
            pt.switch_off_cost,
            pt.switch_off_gap,
            pt.final_binding,
            pt.h_loc_drift,
            pt.h_2qb_gain,
        ]);
    }
    Ok(csv.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("qengine").chain(args.iter().copied())).unwrap()
    }

    fn body(csv: &str) -> Vec<Vec<f64>> {
        csv.lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect())
            .collect()
    }

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(5.0), "5");
        assert_eq!(fmt_num(-0.5), "-0.5");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(123456.789), "123456.789");
        assert_eq!(fmt_num(1e-5), "1e-05");
        assert_eq!(fmt_num(2.5e13), "2.5e+13");
        assert_eq!(fmt_num(0.0001), "0.0001");
        assert_eq!(fmt_num(f64::NAN), "nan");
    }

    #[test]
    fn engine_trace_reference_points() {
        let cli = parse(&["engine-trace"]);
        let csv = run(&cli.command).unwrap();
        assert!(csv.starts_with("# qengine "));
        let rows = body(&csv);
        assert_eq!(rows.len(), 401);
        for r in &rows {
            assert!((r[1] - 5.0).abs() < 1e-9);
        }
        // t = π/Ω sits exactly at the middle sample
        let mid = &rows[200];
        assert!((mid[0] - std::f64::consts::PI / 2f64.sqrt()).abs() < 1e-12);
        assert!((mid[2] - 5.5).abs() < 1e-9);
        assert!((mid[3] + 0.5).abs() < 1e-9);
        let min_int = rows.iter().map(|r| r[3]).fold(f64::INFINITY, f64::min);
        assert!((min_int + 0.5).abs() < 1e-9);
    }

    #[test]
    fn engine_sweep_shape() {
        let cli = parse(&["engine-sweep", "--g", "1", "--delta-points", "400"]);
        let rows = body(&run(&cli.command).unwrap());
        assert_eq!(rows.len(), 400);
        let best = rows.iter().max_by(|a, b| a[2].total_cmp(&b[2])).unwrap();
        let nearest = rows
            .iter()
            .min_by(|a, b| (a[0] - 1.0).abs().total_cmp(&(b[0] - 1.0).abs()))
            .unwrap();
        assert_eq!(best[0], nearest[0]);
        assert!(rows.iter().all(|r| r[5] == 1.0));
    }

    #[test]
    fn chain_grids() {
        let rows = body(&run(&parse(&["chain-sweep", "--n", "2,5", "--ratios", "1"]).command).unwrap());
        assert!((rows[0][4] - 0.5).abs() < 1e-12);
        assert!((rows[1][4] - (16.0f64 / 17.0).powi(4)).abs() < 1e-12);
        let err = run(&parse(&["chain-mc", "--n", "1"]).command).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn domain_and_usage_errors() {
        let err = run(&parse(&["engine-trace", "--g", "-1"]).command).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let err = run(&parse(&["meter-trace", "--chi-over-omega", "1"]).command).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let err = run(&parse(&["engine-sweep", "--delta-points", "0"]).command).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(Cli::try_parse_from(["qengine", "no-such-command"]).is_err());
    }

    #[test]
    fn meter_trace_columns() {
        let csv = run(&parse(&["meter-trace"]).command).unwrap();
        let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
        assert!(header.starts_with("t,p_100,p_101,p_010,p_011,h_2qb"));
        assert!(header.ends_with("pop_sum"));
        for r in body(&csv) {
            assert!((r[r.len() - 1] - 1.0).abs() < 1e-9);
        }
    }
}
