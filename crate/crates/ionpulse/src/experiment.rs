//! Monte Carlo execution and analysis: projective readout over repeated
//! cycles, truncated-sequence time scans, parity oscillations with their
//! cosine fit, and the population/visibility gate fidelity.
//!
//! Two run modes exist. `Sampled` mirrors the experiment: every shot draws
//! noise parameters, evolves the state, projects it, and passes the outcome
//! through the detection-error channel. `Analytic` averages exact
//! populations over the same noise draws and applies detection errors as a
//! confusion map, which removes projection noise entirely; with zero noise
//! it reproduces the exact unitary prediction.

use crate::error::{Error, Result};
use crate::gates::{cz_cnot, Sequence, Timing};
use crate::hilbert::{qubit_string_label, Qubit, RegisterConfig, RegisterState};
use crate::noise::{detection_flip, sample_shot, NoiseConfig, ShotParams, STREAM_MEASURE};
use crate::pulse::{Pulse, PulseContext};
use crate::rng::Stream;

/// Experiment-id tags for measurement streams, so different experiments on
/// the same seed never share draws.
pub mod experiment_ids {
    pub const RUN: u64 = 0;
    pub const TRUTH_TABLE: u64 = 1;
    pub const TIME_SCAN: u64 = 2;
    pub const PARITY_SCAN: u64 = 3;
    pub const SPIN_ECHO: u64 = 4;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Projective sampling with detection flips, like the hardware.
    Sampled,
    /// Exact populations averaged over noise draws; no projection noise.
    Analytic,
}

impl RunMode {
    pub fn label(&self) -> &'static str {
        match self {
            RunMode::Sampled => "sampled",
            RunMode::Analytic => "analytic",
        }
    }
}

impl std::str::FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sampled" => Ok(RunMode::Sampled),
            "analytic" => Ok(RunMode::Analytic),
            other => Err(Error::InputOutOfRange(format!(
                "unknown run mode '{other}' (expected 'sampled' or 'analytic')"
            ))),
        }
    }
}

/// Identifies which experiment and grid point a batch of shots belongs to;
/// keys the measurement random streams.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeasureStream {
    pub experiment: u64,
    pub point: u64,
}

impl MeasureStream {
    pub fn new(experiment: u64, point: u64) -> Self {
        MeasureStream { experiment, point }
    }
}

/// Register, pulse timing, and noise model for one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentContext {
    pub register: RegisterConfig,
    pub timing: Timing,
    pub noise: NoiseConfig,
}

impl ExperimentContext {
    pub fn new(register: RegisterConfig, timing: Timing, noise: NoiseConfig) -> Result<Self> {
        noise.validate(register.num_ions)?;
        Ok(ExperimentContext {
            register,
            timing,
            noise,
        })
    }

    /// Noise-free context over `num_ions` ions with default timing.
    pub fn ideal(num_ions: usize) -> Self {
        ExperimentContext {
            register: RegisterConfig {
                num_ions,
                ..RegisterConfig::default()
            },
            timing: Timing::uniform(num_ions),
            noise: NoiseConfig::ideal(num_ions),
        }
    }

    pub(crate) fn pulse_context(&self, shot: ShotParams) -> PulseContext {
        PulseContext {
            rabi: self.timing.rabi.clone(),
            addressing: self.noise.addressing.clone(),
            shot,
            ac_stark: self.noise.ac_stark,
        }
    }
}

/// Estimated qubit-string populations over repeated cycles.
#[derive(Debug, Clone)]
pub struct PopulationEstimate {
    pub num_ions: usize,
    pub shots: u64,
    /// Raw counts per qubit string; present in sampled mode only.
    pub counts: Option<Vec<u64>>,
    /// Probability per qubit string (index = string value, ion 1 = MSB).
    pub probabilities: Vec<f64>,
    /// Binomial standard error per string at this shot count.
    pub std_errors: Vec<f64>,
    /// P(D) per ion, after detection errors.
    pub pd_per_ion: Vec<f64>,
    pub pd_std_errors: Vec<f64>,
    /// Mean bus-number marginal of the pre-measurement state.
    pub bus: Vec<f64>,
}

impl PopulationEstimate {
    pub fn label(&self, index: usize) -> String {
        qubit_string_label(index, self.num_ions)
    }

    pub fn probability(&self, label: &str) -> Option<f64> {
        let qubits = crate::hilbert::parse_qubits(label)?;
        if qubits.len() != self.num_ions {
            return None;
        }
        let q = qubits.iter().fold(0usize, |acc, x| (acc << 1) | x.bit());
        self.probabilities.get(q).copied()
    }

    /// Expectation of the qubit-string parity (+1 for an even number of D's).
    pub fn parity(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(q, p)| if q.count_ones() % 2 == 0 { *p } else { -*p })
            .sum()
    }
}

fn binomial_err(p: f64, shots: u64) -> f64 {
    (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / shots as f64).sqrt()
}

/// Detection-error channel on qubit-string probabilities: each ion's readout
/// flips independently with probability `1 - accuracy`.
fn detection_confusion(probabilities: &[f64], accuracy: f64, num_ions: usize) -> Vec<f64> {
    if accuracy >= 1.0 {
        return probabilities.to_vec();
    }
    let n = probabilities.len();
    let mut out = vec![0.0; n];
    for (reported, slot) in out.iter_mut().enumerate() {
        for (truth, p) in probabilities.iter().enumerate() {
            let flips = (reported ^ truth).count_ones() as i32;
            let keeps = num_ions as i32 - flips;
            *slot += p * accuracy.powi(keeps) * (1.0 - accuracy).powi(flips);
        }
    }
    out
}

fn pd_from_strings(probabilities: &[f64], num_ions: usize) -> Vec<f64> {
    (0..num_ions)
        .map(|ion| {
            probabilities
                .iter()
                .enumerate()
                .filter(|(q, _)| (q >> (num_ions - 1 - ion)) & 1 == 1)
                .map(|(_, p)| p)
                .sum()
        })
        .collect()
}

/// Project one state onto the qubit basis (the bus number is discarded) and
/// pass the outcome through the detection-error channel.
pub fn measure_shot(state: &RegisterState, noise: &NoiseConfig, stream: &mut Stream) -> Vec<Qubit> {
    let cfg = state.config();
    let u = stream.uniform();
    let mut cumulative = 0.0;
    let mut drawn = state.amplitudes().len() - 1;
    for (i, amp) in state.amplitudes().iter().enumerate() {
        cumulative += amp.norm_sqr();
        if u < cumulative {
            drawn = i;
            break;
        }
    }
    let (q, _) = cfg.split_index(drawn);
    let outcome: Vec<Qubit> = (0..cfg.num_ions)
        .map(|ion| Qubit::from_bit((q >> (cfg.num_ions - 1 - ion)) & 1))
        .collect();
    detection_flip(&outcome, noise.detection_accuracy, stream)
}

/// Run `shots` cycles of `sequence` from the basis state `init` (bus number
/// drawn thermally per shot) and estimate the qubit-string populations.
pub fn run_shots(
    ctx: &ExperimentContext,
    sequence: &Sequence,
    init: &[Qubit],
    shots: u64,
    mode: RunMode,
    stream: MeasureStream,
) -> Result<PopulationEstimate> {
    if shots == 0 {
        return Err(Error::InputOutOfRange("shots must be at least 1".into()));
    }
    let reg = ctx.register;
    if init.len() != reg.num_ions {
        return Err(Error::QubitCount {
            expected: reg.num_ions,
            got: init.len(),
        });
    }
    ctx.noise.validate(reg.num_ions)?;

    let num_strings = 1usize << reg.num_ions;
    let mut string_acc = vec![0.0; num_strings];
    let mut bus_acc = vec![0.0; reg.fock_dim()];
    let mut counts = vec![0u64; num_strings];

    for shot in 0..shots {
        let params = sample_shot(&ctx.noise, reg.num_ions, reg.n_max(), shot);
        let initial_n = params.initial_n.min(reg.n_max());
        let state = RegisterState::basis(reg, init, initial_n)?;
        let pulse_ctx = ctx.pulse_context(params);
        let final_state = sequence.apply(&state, &pulse_ctx)?;
        let pops = final_state.populations();
        for (acc, p) in bus_acc.iter_mut().zip(&pops.bus) {
            *acc += p;
        }
        match mode {
            RunMode::Analytic => {
                for (acc, p) in string_acc.iter_mut().zip(&pops.qubit_strings) {
                    *acc += p;
                }
            }
            RunMode::Sampled => {
                let mut meas = Stream::new(
                    ctx.noise.seed,
                    &[STREAM_MEASURE, stream.experiment, stream.point, shot],
                );
                let outcome = measure_shot(&final_state, &ctx.noise, &mut meas);
                let q = outcome.iter().fold(0usize, |acc, x| (acc << 1) | x.bit());
                counts[q] += 1;
            }
        }
    }

    let bus: Vec<f64> = bus_acc.iter().map(|b| b / shots as f64).collect();
    let (counts, probabilities) = match mode {
        RunMode::Analytic => {
            let mean: Vec<f64> = string_acc.iter().map(|p| p / shots as f64).collect();
            let confused = detection_confusion(&mean, ctx.noise.detection_accuracy, reg.num_ions);
            (None, confused)
        }
        RunMode::Sampled => {
            let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / shots as f64).collect();
            (Some(counts), probs)
        }
    };
    let std_errors = probabilities
        .iter()
        .map(|&p| binomial_err(p, shots))
        .collect();
    let pd_per_ion = pd_from_strings(&probabilities, reg.num_ions);
    let pd_std_errors = pd_per_ion.iter().map(|&p| binomial_err(p, shots)).collect();
    Ok(PopulationEstimate {
        num_ions: reg.num_ions,
        shots,
        counts,
        probabilities,
        std_errors,
        pd_per_ion,
        pd_std_errors,
        bus,
    })
}

/// Populations as a function of time under a truncated pulse sequence.
#[derive(Debug, Clone)]
pub struct TimeScan {
    pub times: Vec<f64>,
    pub estimates: Vec<PopulationEstimate>,
}

/// Truncate `sequence` at a grid of times from 0 to its total duration and
/// estimate populations at each point.
pub fn time_scan(
    ctx: &ExperimentContext,
    sequence: &Sequence,
    init: &[Qubit],
    num_points: usize,
    shots: u64,
    mode: RunMode,
) -> Result<TimeScan> {
    if num_points < 2 {
        return Err(Error::InputOutOfRange(
            "time scan needs at least 2 points".into(),
        ));
    }
    let total = sequence.total_duration();
    let mut times = Vec::with_capacity(num_points);
    let mut estimates = Vec::with_capacity(num_points);
    for i in 0..num_points {
        let t = if i == num_points - 1 {
            total
        } else {
            total * i as f64 / (num_points - 1) as f64
        };
        let truncated = sequence.truncated_at(t);
        let estimate = run_shots(
            ctx,
            &truncated,
            init,
            shots,
            mode,
            MeasureStream::new(experiment_ids::TIME_SCAN, i as u64),
        )?;
        times.push(t);
        estimates.push(estimate);
    }
    Ok(TimeScan { times, estimates })
}

/// Cosine fit of a parity scan.
#[derive(Debug, Clone, Copy)]
pub struct ParityFit {
    pub offset: f64,
    /// Amplitude and phase of the cos(phi) component.
    pub amp_cos_phi: f64,
    pub phase_cos_phi: f64,
    /// Amplitude and phase of the cos(2 phi) component; this is the
    /// two-qubit coherence witness.
    pub amp_cos_2phi: f64,
    pub phase_cos_2phi: f64,
}

/// Parity vs. analysis phase with the fitted cosine components.
#[derive(Debug, Clone)]
pub struct ParityCurve {
    pub phi: Vec<f64>,
    pub parity: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub fit: ParityFit,
}

/// After running `prep`, apply a carrier pi/2 analysis pulse at phase `phi`
/// to every ion in turn and measure the parity
/// P = P_even - P_odd (for two ions: P_SS + P_DD - P_SD - P_DS), scanning
/// `phi` over `num_phi` points in [0, 2pi).
pub fn parity_scan(
    ctx: &ExperimentContext,
    prep: &Sequence,
    init: &[Qubit],
    num_phi: usize,
    shots: u64,
    mode: RunMode,
) -> Result<ParityCurve> {
    if num_phi < 8 {
        return Err(Error::InputOutOfRange(
            "parity scan needs at least 8 phase points".into(),
        ));
    }
    let mut phi_values = Vec::with_capacity(num_phi);
    let mut parity = Vec::with_capacity(num_phi);
    let mut std_errors = Vec::with_capacity(num_phi);
    for j in 0..num_phi {
        let phi = 2.0 * std::f64::consts::PI * j as f64 / num_phi as f64;
        let mut analysis = Vec::with_capacity(ctx.register.num_ions);
        for ion in 1..=ctx.register.num_ions {
            analysis.push(Pulse::carrier(
                ion,
                std::f64::consts::FRAC_PI_2,
                phi,
                &ctx.timing.rabi,
            )?);
        }
        let full = prep.extended(&analysis, ctx.timing.settle)?;
        let estimate = run_shots(
            ctx,
            &full,
            init,
            shots,
            mode,
            MeasureStream::new(experiment_ids::PARITY_SCAN, j as u64),
        )?;
        let p = estimate.parity();
        phi_values.push(phi);
        parity.push(p);
        std_errors.push(((1.0 - p * p).max(0.0) / shots as f64).sqrt());
    }
    let (offset, terms) = crate::fit::cosine_series_fit(&phi_values, &parity, &[1, 2])?;
    Ok(ParityCurve {
        phi: phi_values,
        parity,
        std_errors,
        fit: ParityFit {
            offset,
            amp_cos_phi: terms[0].amplitude,
            phase_cos_phi: terms[0].phase,
            amp_cos_2phi: terms[1].amplitude,
            phase_cos_2phi: terms[1].phase,
        },
    })
}

/// Gate fidelity from Bell-state populations and parity visibility:
/// F = (P_SS + P_DD)/2 + V/2.
pub fn sackett_fidelity(p_ss: f64, p_dd: f64, visibility: f64) -> Result<f64> {
    for (name, v) in [("P_SS", p_ss), ("P_DD", p_dd), ("visibility", visibility)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InputOutOfRange(format!(
                "{name} must lie in [0,1], got {v}"
            )));
        }
    }
    Ok((p_ss + p_dd) / 2.0 + visibility / 2.0)
}

/// Truth-table run of the two-ion controlled-NOT.
#[derive(Debug, Clone)]
pub struct TruthTable {
    /// Input labels in run order: SS, SD, DS, DD.
    pub inputs: Vec<String>,
    /// `matrix[i][j]` = probability of output string j for input i.
    pub matrix: Vec<Vec<f64>>,
    /// Probability of the correct output |a, a xor b> per input.
    pub per_input: Vec<f64>,
    pub mean_fidelity: f64,
}

/// Run the controlled-NOT (`control` = ion 1, `target` = ion 2) from each of
/// the four computational inputs.
pub fn truth_table(ctx: &ExperimentContext, shots: u64, mode: RunMode) -> Result<TruthTable> {
    if ctx.register.num_ions != 2 {
        return Err(Error::InputOutOfRange(format!(
            "truth table is defined for a 2-ion register, got {}",
            ctx.register.num_ions
        )));
    }
    let sequence = cz_cnot(1, 2, &ctx.timing)?;
    let mut inputs = Vec::with_capacity(4);
    let mut matrix = Vec::with_capacity(4);
    let mut per_input = Vec::with_capacity(4);
    for a in 0..2usize {
        for b in 0..2usize {
            let init = [Qubit::from_bit(a), Qubit::from_bit(b)];
            let estimate = run_shots(
                ctx,
                &sequence,
                &init,
                shots,
                mode,
                MeasureStream::new(experiment_ids::TRUTH_TABLE, (a * 2 + b) as u64),
            )?;
            let expected = a * 2 + (a ^ b);
            inputs.push(qubit_string_label(a * 2 + b, 2));
            per_input.push(estimate.probabilities[expected]);
            matrix.push(estimate.probabilities.clone());
        }
    }
    let mean_fidelity = per_input.iter().sum::<f64>() / per_input.len() as f64;
    Ok(TruthTable {
        inputs,
        matrix,
        per_input,
        mean_fidelity,
    })
}

/// Populations, parity visibility, and fidelity of the Bell state produced
/// by the controlled-NOT acting on a control-ion superposition.
#[derive(Debug, Clone)]
pub struct BellExperiment {
    pub populations: PopulationEstimate,
    pub parity: ParityCurve,
    pub fidelity: f64,
}

/// The entangling experiment end to end: prepare (|S>+|D>)/sqrt2 on the
/// control with a carrier pi/2 pulse, run the controlled-NOT, read out the
/// populations, then scan the analysis-pulse phase for the parity fit.
pub fn bell_experiment(
    ctx: &ExperimentContext,
    num_phi: usize,
    shots: u64,
    mode: RunMode,
) -> Result<BellExperiment> {
    if ctx.register.num_ions != 2 {
        return Err(Error::InputOutOfRange(format!(
            "the Bell experiment runs on a 2-ion register, got {}",
            ctx.register.num_ions
        )));
    }
    let prep = crate::gates::entangling_sequence(1, 2, &ctx.timing)?;
    let init = [Qubit::S, Qubit::S];
    let populations = run_shots(
        ctx,
        &prep,
        &init,
        shots,
        mode,
        MeasureStream::new(experiment_ids::RUN, u64::MAX),
    )?;
    let parity = parity_scan(ctx, &prep, &init, num_phi, shots, mode)?;
    let fidelity = sackett_fidelity(
        populations.probability("SS").unwrap().clamp(0.0, 1.0),
        populations.probability("DD").unwrap().clamp(0.0, 1.0),
        parity.fit.amp_cos_2phi.clamp(0.0, 1.0),
    )?;
    Ok(BellExperiment {
        populations,
        parity,
        fidelity,
    })
}
