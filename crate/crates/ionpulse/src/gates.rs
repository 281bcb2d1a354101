//! Named pulse sequences: the composite phase gate, the single-ion CNOT, the
//! full two-ion controlled-NOT mediated by the bus mode, and the spin-echo
//! experiment used to calibrate the deflection phase.
//!
//! Sequences are ordered pulse lists with retarget waits inserted whenever
//! two consecutive pulses address different ions (the deflector needs a
//! settling time). Waits are idle evolution: dephasing still accrues.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{RegisterConfig, RegisterState};
use crate::pulse::{
    apply_pulse, deflection_phase, rabi_profile, AddressingModel, Pulse, PulseContext, PulseKind,
    RabiConfig,
};

/// Calibrated pulse timing: Rabi rates plus the deflector settling time
/// inserted on every ion retarget.
#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub rabi: RabiConfig,
    /// Settling wait (s) between pulses addressing different ions.
    pub settle: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            rabi: RabiConfig::default(),
            settle: 15.0e-6,
        }
    }
}

impl Timing {
    pub fn uniform(num_ions: usize) -> Self {
        Timing {
            rabi: RabiConfig::uniform(num_ions),
            settle: 15.0e-6,
        }
    }
}

/// An ordered, timed list of pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pulses: Vec<Pulse>,
    total_duration: f64,
}

impl Sequence {
    pub fn empty() -> Self {
        Sequence {
            pulses: Vec::new(),
            total_duration: 0.0,
        }
    }

    /// Build from raw pulses, inserting a retarget wait of `settle` seconds
    /// between consecutive pulses that address different ions.
    pub fn from_pulses(raw: Vec<Pulse>, settle: f64) -> Result<Sequence> {
        let mut builder = SequenceBuilder::new(settle);
        for pulse in raw {
            builder.push(pulse)?;
        }
        Ok(builder.finish())
    }

    /// Continue this sequence with more pulses; the retarget rule keeps
    /// applying across the boundary.
    pub fn extended(&self, extra: &[Pulse], settle: f64) -> Result<Sequence> {
        let mut builder = SequenceBuilder {
            settle,
            pulses: self.pulses.clone(),
            last_ion: self
                .pulses
                .iter()
                .rev()
                .find(|p| p.kind != PulseKind::Wait)
                .map(|p| p.ion),
        };
        for pulse in extra {
            builder.push(pulse.clone())?;
        }
        Ok(builder.finish())
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn total_duration(&self) -> f64 {
        self.total_duration
    }

    pub fn pulse_count(&self) -> usize {
        self.pulses
            .iter()
            .filter(|p| p.kind != PulseKind::Wait)
            .count()
    }

    /// Apply every pulse in order.
    pub fn apply(&self, state: &RegisterState, ctx: &PulseContext) -> Result<RegisterState> {
        let mut current = state.clone();
        for pulse in &self.pulses {
            current = apply_pulse(&current, pulse, ctx)?;
        }
        Ok(current)
    }

    /// The sequence truncated at wall-clock time `t`: completed pulses stay,
    /// the pulse in progress is cut to the elapsed fraction of its area.
    pub fn truncated_at(&self, t: f64) -> Sequence {
        if t >= self.total_duration {
            return self.clone();
        }
        let mut pulses = Vec::new();
        let mut elapsed = 0.0;
        for pulse in &self.pulses {
            if t - elapsed >= pulse.duration {
                elapsed += pulse.duration;
                pulses.push(pulse.clone());
            } else {
                let remain = t - elapsed;
                if remain > 0.0 && pulse.duration > 0.0 {
                    pulses.push(pulse.truncated(remain / pulse.duration));
                }
                break;
            }
        }
        let total_duration = pulses.iter().map(|p| p.duration).sum();
        Sequence {
            pulses,
            total_duration,
        }
    }
}

struct SequenceBuilder {
    settle: f64,
    pulses: Vec<Pulse>,
    last_ion: Option<usize>,
}

impl SequenceBuilder {
    fn new(settle: f64) -> Self {
        SequenceBuilder {
            settle,
            pulses: Vec::new(),
            last_ion: None,
        }
    }

    fn push(&mut self, pulse: Pulse) -> Result<()> {
        if pulse.kind != PulseKind::Wait {
            if let Some(prev) = self.last_ion {
                if prev != pulse.ion && self.settle > 0.0 {
                    self.pulses.push(Pulse::wait(self.settle)?);
                }
            }
            self.last_ion = Some(pulse.ion);
        }
        self.pulses.push(pulse);
        Ok(())
    }

    fn finish(self) -> Sequence {
        let total_duration = self.pulses.iter().map(|p| p.duration).sum();
        Sequence {
            pulses: self.pulses,
            total_duration,
        }
    }
}

/// Raw pulses of the composite phase gate: four blue-sideband pulses with
/// nominal areas (pi/sqrt2, pi, pi/sqrt2, pi) and phases (pi/2, 0, pi/2, 0),
/// first pulse first. Net effect: sign flip of every computational basis
/// state except |D,0>.
pub fn composite_phase_gate_pulses(ion: usize, timing: &Timing) -> Result<Vec<Pulse>> {
    let half = std::f64::consts::FRAC_PI_2;
    let root2 = std::f64::consts::PI / 2.0_f64.sqrt();
    Ok(vec![
        Pulse::blue_sideband(ion, root2, half, &timing.rabi)?,
        Pulse::blue_sideband(ion, std::f64::consts::PI, 0.0, &timing.rabi)?,
        Pulse::blue_sideband(ion, root2, half, &timing.rabi)?,
        Pulse::blue_sideband(ion, std::f64::consts::PI, 0.0, &timing.rabi)?,
    ])
}

pub fn composite_phase_gate(ion: usize, timing: &Timing) -> Result<Sequence> {
    Sequence::from_pulses(composite_phase_gate_pulses(ion, timing)?, timing.settle)
}

/// Raw pulses of the single-ion CNOT: the phase gate sandwiched between
/// carrier pi/2 pulses, R(pi/2,0) . R_phase . R(pi/2,pi) with the rightmost
/// factor applied first. Flips the ion's qubit iff the bus is in n = 0.
pub fn cnot_single_ion_pulses(ion: usize, timing: &Timing) -> Result<Vec<Pulse>> {
    let half = std::f64::consts::FRAC_PI_2;
    let mut pulses = vec![Pulse::carrier(ion, half, std::f64::consts::PI, &timing.rabi)?];
    pulses.extend(composite_phase_gate_pulses(ion, timing)?);
    pulses.push(Pulse::carrier(ion, half, 0.0, &timing.rabi)?);
    Ok(pulses)
}

pub fn cnot_single_ion(ion: usize, timing: &Timing) -> Result<Sequence> {
    Sequence::from_pulses(cnot_single_ion_pulses(ion, timing)?, timing.settle)
}

/// Raw pulses of the two-ion controlled-NOT: map the control qubit onto the
/// bus with a sideband pi-pulse, run the single-ion CNOT on the target, then
/// map the bus back with a sideband pi-pulse at phase pi.
pub fn cz_cnot_pulses(control: usize, target: usize, timing: &Timing) -> Result<Vec<Pulse>> {
    if control == target {
        return Err(Error::ControlEqualsTarget(control));
    }
    let mut pulses = vec![Pulse::blue_sideband(
        control,
        std::f64::consts::PI,
        0.0,
        &timing.rabi,
    )?];
    pulses.extend(cnot_single_ion_pulses(target, timing)?);
    pulses.push(Pulse::blue_sideband(
        control,
        std::f64::consts::PI,
        std::f64::consts::PI,
        &timing.rabi,
    )?);
    Ok(pulses)
}

pub fn cz_cnot(control: usize, target: usize, timing: &Timing) -> Result<Sequence> {
    Sequence::from_pulses(cz_cnot_pulses(control, target, timing)?, timing.settle)
}

/// Controlled-NOT preceded by a carrier pi/2 pulse on the control, so a
/// register starting in |S,S> leaves as the Bell state (|S,S> + e^{i a}|D,D>)
/// up to local phases.
pub fn entangling_sequence(control: usize, target: usize, timing: &Timing) -> Result<Sequence> {
    let mut pulses = vec![Pulse::carrier(
        control,
        std::f64::consts::FRAC_PI_2,
        -std::f64::consts::FRAC_PI_2,
        &timing.rabi,
    )?];
    pulses.extend(cz_cnot_pulses(control, target, timing)?);
    Sequence::from_pulses(pulses, timing.settle)
}

/// Spin-echo sequence for measuring the deflection phase: two framing pi/2
/// pulses with the beam deflected by `deflection` meters (phases
/// delta_phi + pi and delta_phi, stretched to keep the pulse area) around a
/// centered pi-pulse at phase `phi`. Scanning `phi` yields
/// P_D = cos^2(phi - delta_phi).
pub fn spin_echo(
    deflection: f64,
    phi: f64,
    model: &AddressingModel,
    timing: &Timing,
) -> Result<Sequence> {
    let half = std::f64::consts::FRAC_PI_2;
    let delta_phi = deflection_phase(deflection, model).phase;
    let scale = rabi_profile(deflection, model);
    let pulses = vec![
        Pulse::scaled_carrier(1, half, delta_phi + std::f64::consts::PI, scale, &timing.rabi)?,
        Pulse::carrier(1, std::f64::consts::PI, phi, &timing.rabi)?,
        Pulse::scaled_carrier(1, half, delta_phi, scale, &timing.rabi)?,
    ];
    Sequence::from_pulses(pulses, timing.settle)
}

/// Exact unitary of a sequence over the full register basis.
#[derive(Debug, Clone)]
pub struct GateUnitary {
    pub matrix: Array2<Complex64>,
    pub global_phase_normalized: bool,
}

/// Build the full-register matrix of a sequence by applying it to each basis
/// vector. The context must be a concrete shot realization, which makes the
/// result deterministic by construction.
pub fn unitary_of(
    sequence: &Sequence,
    config: RegisterConfig,
    ctx: &PulseContext,
) -> Result<GateUnitary> {
    let dim = config.dim();
    let mut matrix = Array2::zeros((dim, dim));
    for col in 0..dim {
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[col] = Complex64::new(1.0, 0.0);
        let state = RegisterState::from_amplitudes(config, amps)?;
        let out = sequence.apply(&state, ctx)?;
        for (row, amp) in out.amplitudes().iter().enumerate() {
            matrix[(row, col)] = *amp;
        }
    }
    Ok(GateUnitary {
        matrix,
        global_phase_normalized: false,
    })
}

impl GateUnitary {
    /// Max entrywise deviation of U†U from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let dim = self.matrix.nrows();
        let mut worst = 0.0_f64;
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..dim {
                    acc += self.matrix[(k, i)].conj() * self.matrix[(k, j)];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - Complex64::new(expect, 0.0)).norm());
            }
        }
        worst
    }

    /// Divide out the phase of the first diagonal entry of maximal magnitude
    /// (ties resolved toward the lowest basis index).
    pub fn normalize_global_phase(mut self) -> Self {
        self.matrix = normalized_global_phase(&self.matrix);
        self.global_phase_normalized = true;
        self
    }

    /// Restriction of the matrix to the given basis indices, in their order.
    pub fn subspace(&self, indices: &[usize]) -> Array2<Complex64> {
        let k = indices.len();
        let mut sub = Array2::zeros((k, k));
        for (i, &row) in indices.iter().enumerate() {
            for (j, &col) in indices.iter().enumerate() {
                sub[(i, j)] = self.matrix[(row, col)];
            }
        }
        sub
    }
}

/// Global-phase normalization of an arbitrary square matrix: divide by the
/// phase of the first diagonal entry within 1e-9 of the maximal magnitude.
pub fn normalized_global_phase(matrix: &Array2<Complex64>) -> Array2<Complex64> {
    let dim = matrix.nrows();
    let max_mag = (0..dim)
        .map(|i| matrix[(i, i)].norm())
        .fold(0.0_f64, f64::max);
    let pick = (0..dim)
        .find(|&i| matrix[(i, i)].norm() >= max_mag - 1e-9)
        .unwrap_or(0);
    let mag = matrix[(pick, pick)].norm();
    if mag < 1e-300 {
        return matrix.clone();
    }
    let phase = matrix[(pick, pick)] / mag;
    matrix.mapv(|v| v / phase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Qubit, RegisterConfig, RegisterState};
    use std::f64::consts::PI;

    type M2 = [[Complex64; 2]; 2];

    // Test-side oracle: the bare 2x2 rotation in the (lower, upper) basis of
    // one sideband manifold, multiplied out independently of the simulator.
    fn rot(theta: f64, phi: f64) -> M2 {
        let c = Complex64::new((theta / 2.0).cos(), 0.0);
        let s = (theta / 2.0).sin();
        let m_i = Complex64::new(0.0, -1.0);
        [
            [c, m_i * Complex64::from_polar(s, phi)],
            [m_i * Complex64::from_polar(s, -phi), c],
        ]
    }

    fn matmul(a: M2, b: M2) -> M2 {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }

    fn composite_manifold_oracle(n: usize) -> M2 {
        let scale = ((n + 1) as f64).sqrt();
        let r1 = rot(PI / 2.0_f64.sqrt() * scale, PI / 2.0);
        let r2 = rot(PI * scale, 0.0);
        let r3 = rot(PI / 2.0_f64.sqrt() * scale, PI / 2.0);
        let r4 = rot(PI * scale, 0.0);
        matmul(r4, matmul(r3, matmul(r2, r1)))
    }

    fn single_ion_cfg() -> RegisterConfig {
        RegisterConfig::new(1, 8).unwrap()
    }

    #[test]
    fn composite_gate_matches_manifold_oracle() {
        // The four-pulse product is -I on both the n=0 and n=1 manifolds.
        for n in 0..2 {
            let u = composite_manifold_oracle(n);
            for i in 0..2 {
                for j in 0..2 {
                    let expect = if i == j {
                        Complex64::new(-1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    assert!((u[i][j] - expect).norm() < 1e-12, "manifold {n} ({i},{j})");
                }
            }
        }
        // and the simulator reproduces it on |S,0> and |S,1>
        let cfg = single_ion_cfg();
        let timing = Timing::uniform(1);
        let ctx = PulseContext::ideal(1);
        let gate = composite_phase_gate(1, &timing).unwrap();
        for n in 0..2 {
            let state = RegisterState::basis(cfg, &[Qubit::S], n).unwrap();
            let out = gate.apply(&state, &ctx).unwrap();
            let amp = out.amplitude(&[Qubit::S], n).unwrap();
            assert!((amp - Complex64::new(-1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn composite_gate_diagonal_is_1_m1_m1_m1() {
        let cfg = single_ion_cfg();
        let timing = Timing::uniform(1);
        let ctx = PulseContext::ideal(1);
        let gate = composite_phase_gate(1, &timing).unwrap();
        let unitary = unitary_of(&gate, cfg, &ctx).unwrap();
        let indices = [
            cfg.basis_index(&[Qubit::D], 0).unwrap(),
            cfg.basis_index(&[Qubit::D], 1).unwrap(),
            cfg.basis_index(&[Qubit::S], 0).unwrap(),
            cfg.basis_index(&[Qubit::S], 1).unwrap(),
        ];
        let sub = normalized_global_phase(&unitary.subspace(&indices));
        let expected = [1.0, -1.0, -1.0, -1.0];
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j {
                    Complex64::new(expected[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert!((sub[(i, j)] - want).norm() < 1e-10, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn composite_gate_first_three_pulses_act_as_pi_pulse() {
        // Spin-echo structure: R3 R2 R1 equals the plain pi-pulse R(pi,0) on
        // the n=0 manifold.
        let oracle = {
            let r1 = rot(PI / 2.0_f64.sqrt(), PI / 2.0);
            let r2 = rot(PI, 0.0);
            let r3 = rot(PI / 2.0_f64.sqrt(), PI / 2.0);
            matmul(r3, matmul(r2, r1))
        };
        let pi_pulse = rot(PI, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                assert!((oracle[i][j] - pi_pulse[i][j]).norm() < 1e-12);
            }
        }
        // and through the simulator, pulse by pulse
        let cfg = single_ion_cfg();
        let timing = Timing::uniform(1);
        let ctx = PulseContext::ideal(1);
        let pulses = composite_phase_gate_pulses(1, &timing).unwrap();
        let state = RegisterState::basis(cfg, &[Qubit::S], 0).unwrap();
        let mut partial = state.clone();
        for pulse in &pulses[..3] {
            partial = apply_pulse(&partial, pulse, &ctx).unwrap();
        }
        let direct = crate::pulse::blue_sideband(&state, 1, PI, 0.0).unwrap();
        let dist: f64 = partial
            .amplitudes()
            .iter()
            .zip(direct.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        assert!(dist.sqrt() < 1e-9);
    }

    #[test]
    fn single_ion_cnot_flips_iff_bus_empty() {
        let cfg = single_ion_cfg();
        let timing = Timing::uniform(1);
        let ctx = PulseContext::ideal(1);
        let gate = cnot_single_ion(1, &timing).unwrap();
        assert_eq!(gate.pulse_count(), 6);
        let unitary = unitary_of(&gate, cfg, &ctx).unwrap();
        let idx = |q: Qubit, n: usize| cfg.basis_index(&[q], n).unwrap();
        // bus empty: NOT
        let p = unitary.matrix[(idx(Qubit::D, 0), idx(Qubit::S, 0))].norm_sqr();
        assert!((p - 1.0).abs() < 1e-10);
        let p = unitary.matrix[(idx(Qubit::S, 0), idx(Qubit::D, 0))].norm_sqr();
        assert!((p - 1.0).abs() < 1e-10);
        // bus excited: populations return to themselves
        let p = unitary.matrix[(idx(Qubit::S, 1), idx(Qubit::S, 1))].norm_sqr();
        assert!((p - 1.0).abs() < 1e-10);
        let p = unitary.matrix[(idx(Qubit::D, 1), idx(Qubit::D, 1))].norm_sqr();
        assert!((p - 1.0).abs() < 1e-10);
    }

    #[test]
    fn single_ion_cnot_duration_near_380us() {
        let timing = Timing::uniform(1);
        let gate = cnot_single_ion(1, &timing).unwrap();
        let omega_c = timing.rabi.carrier_rabi[0];
        let omega_sb = timing.rabi.sideband_rabi[0];
        let expected = 2.0 * (PI / 2.0) / omega_c
            + 2.0 * (PI / 2.0_f64.sqrt()) / omega_sb
            + 2.0 * PI / omega_sb;
        assert!((gate.total_duration() - expected).abs() < 1e-12);
        // lands within 15% of the 380 us block observed on hardware
        assert!((gate.total_duration() / 380.0e-6 - 1.0).abs() < 0.15);
    }

    #[test]
    fn cz_cnot_structure() {
        let timing = Timing::default();
        let gate = cz_cnot(1, 2, &timing).unwrap();
        assert_eq!(gate.pulse_count(), 8);
        let waits = gate
            .pulses()
            .iter()
            .filter(|p| p.kind == PulseKind::Wait)
            .count();
        assert_eq!(waits, 2);
        let sum: f64 = gate.pulses().iter().map(|p| p.duration).sum();
        assert_eq!(sum, gate.total_duration());
        assert!(cz_cnot(1, 1, &timing).is_err());
    }

    #[test]
    fn cz_cnot_truth_table_and_bus_reset() {
        let cfg = RegisterConfig::default();
        let timing = Timing::default();
        let ctx = PulseContext::ideal(2);
        let gate = cz_cnot(1, 2, &timing).unwrap();
        let cases = [
            ([Qubit::S, Qubit::S], [Qubit::S, Qubit::S]),
            ([Qubit::S, Qubit::D], [Qubit::S, Qubit::D]),
            ([Qubit::D, Qubit::S], [Qubit::D, Qubit::D]),
            ([Qubit::D, Qubit::D], [Qubit::D, Qubit::S]),
        ];
        for (input, expected) in cases {
            let state = RegisterState::basis(cfg, &input, 0).unwrap();
            let out = gate.apply(&state, &ctx).unwrap();
            let pops = out.populations();
            let label: String = expected.iter().map(|q| q.to_string()).collect();
            assert!(
                (pops.qubit_string(&label).unwrap() - 1.0).abs() < 1e-9,
                "input {input:?}"
            );
            assert!((pops.bus[0] - 1.0).abs() < 1e-9, "bus not reset for {input:?}");
            assert!(out.truncation_leakage() < 1e-12);
        }
    }

    #[test]
    fn cz_cnot_is_involution_on_populations() {
        let cfg = RegisterConfig::default();
        let timing = Timing::default();
        let ctx = PulseContext::ideal(2);
        let gate = cz_cnot(1, 2, &timing).unwrap();
        for q1 in [Qubit::S, Qubit::D] {
            for q2 in [Qubit::S, Qubit::D] {
                let state = RegisterState::basis(cfg, &[q1, q2], 0).unwrap();
                let once = gate.apply(&state, &ctx).unwrap();
                let twice = gate.apply(&once, &ctx).unwrap();
                let label: String = [q1, q2].iter().map(|q| q.to_string()).collect();
                let p = twice.populations().qubit_string(&label).unwrap();
                assert!((p - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cz_cnot_magnitudes_match_cnot_permutation() {
        let cfg = RegisterConfig::default();
        let timing = Timing::default();
        let ctx = PulseContext::ideal(2);
        let unitary = unitary_of(&cz_cnot(1, 2, &timing).unwrap(), cfg, &ctx).unwrap();
        assert!(unitary.unitarity_error() < 1e-10);
        let basis: Vec<usize> = [
            [Qubit::S, Qubit::S],
            [Qubit::S, Qubit::D],
            [Qubit::D, Qubit::S],
            [Qubit::D, Qubit::D],
        ]
        .iter()
        .map(|qs| cfg.basis_index(qs, 0).unwrap())
        .collect();
        let sub = unitary.subspace(&basis);
        // |a,b> -> |a, a xor b>
        let perm = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]];
        for i in 0..4 {
            for j in 0..4 {
                assert!(
                    (sub[(i, j)].norm() - perm[i][j] as f64).abs() < 1e-9,
                    "entry ({i},{j}) = {}",
                    sub[(i, j)]
                );
            }
        }
    }

    #[test]
    fn generated_sequences_are_unitary() {
        let timing = Timing::default();
        let ctx = PulseContext::ideal(2);
        let cfg = RegisterConfig::new(2, 6).unwrap();
        for seq in [
            composite_phase_gate(2, &timing).unwrap(),
            cnot_single_ion(2, &timing).unwrap(),
            cz_cnot(1, 2, &timing).unwrap(),
            entangling_sequence(1, 2, &timing).unwrap(),
        ] {
            let u = unitary_of(&seq, cfg, &ctx).unwrap();
            assert!(u.unitarity_error() < 1e-10);
        }
    }

    #[test]
    fn empty_sequence_unitary_is_identity() {
        let cfg = RegisterConfig::new(1, 3).unwrap();
        let ctx = PulseContext::ideal(1);
        let u = unitary_of(&Sequence::empty(), cfg, &ctx).unwrap();
        for i in 0..cfg.dim() {
            for j in 0..cfg.dim() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((u.matrix[(i, j)] - Complex64::new(expect, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn entangling_sequence_makes_a_bell_state() {
        let cfg = RegisterConfig::default();
        let timing = Timing::default();
        let ctx = PulseContext::ideal(2);
        let seq = entangling_sequence(1, 2, &timing).unwrap();
        let state = RegisterState::basis(cfg, &[Qubit::S, Qubit::S], 0).unwrap();
        let out = seq.apply(&state, &ctx).unwrap();
        let pops = out.populations();
        assert!((pops.qubit_string("SS").unwrap() - 0.5).abs() < 1e-9);
        assert!((pops.qubit_string("DD").unwrap() - 0.5).abs() < 1e-9);
        assert!(pops.qubit_string("SD").unwrap() < 1e-9);
        assert!(pops.qubit_string("DS").unwrap() < 1e-9);
        assert!((out.single_ion_purity(1).unwrap() - 0.5).abs() < 1e-9);
        assert!((out.single_ion_purity(2).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn spin_echo_population_follows_cos_squared() {
        let timing = Timing::uniform(1);
        let model = AddressingModel::default();
        let cfg = single_ion_cfg();
        let ctx = PulseContext::ideal(1);
        for delta_phi in [0.0, 0.3] {
            let deflection = delta_phi / model.phase_slope;
            for k in 0..16 {
                let phi = 2.0 * PI * k as f64 / 16.0;
                let seq = spin_echo(deflection, phi, &model, &timing).unwrap();
                let state = RegisterState::basis(cfg, &[Qubit::S], 0).unwrap();
                let out = seq.apply(&state, &ctx).unwrap();
                let pd = out.populations().pd_per_ion[0];
                let expected = (phi - delta_phi).cos().powi(2);
                assert!(
                    (pd - expected).abs() < 1e-9,
                    "delta_phi {delta_phi}, phi {phi}: {pd} vs {expected}"
                );
            }
        }
        // no spin flip at phi = +-pi/2 when the deflection phase vanishes
        for phi in [PI / 2.0, -PI / 2.0] {
            let seq = spin_echo(0.0, phi, &model, &timing).unwrap();
            let state = RegisterState::basis(cfg, &[Qubit::S], 0).unwrap();
            let out = seq.apply(&state, &ctx).unwrap();
            assert!(out.populations().pd_per_ion[0] < 1e-12);
        }
    }

    #[test]
    fn truncation_splits_pulses_by_area() {
        let timing = Timing::uniform(2);
        let seq = cz_cnot(1, 2, &timing).unwrap();
        // halfway through the first mapping pi-pulse
        let halfway = seq.truncated_at(47.5e-6);
        assert_eq!(halfway.pulses().len(), 1);
        assert!((halfway.pulses()[0].theta - PI / 2.0).abs() < 1e-12);
        // at or beyond the end: the full sequence, exactly
        let full = seq.truncated_at(seq.total_duration());
        assert_eq!(full, seq);
        let beyond = seq.truncated_at(seq.total_duration() + 1.0);
        assert_eq!(beyond, seq);
        // t = 0: nothing
        assert_eq!(seq.truncated_at(0.0).pulses().len(), 0);
    }

    #[test]
    fn extended_sequences_settle_on_retarget() {
        let timing = Timing::default();
        let base = Sequence::from_pulses(
            vec![Pulse::carrier(1, PI, 0.0, &timing.rabi).unwrap()],
            timing.settle,
        )
        .unwrap();
        let extended = base
            .extended(
                &[Pulse::carrier(2, PI, 0.0, &timing.rabi).unwrap()],
                timing.settle,
            )
            .unwrap();
        assert_eq!(extended.pulses().len(), 3);
        assert_eq!(extended.pulses()[1].kind, PulseKind::Wait);
        // same ion: no settle
        let same = base
            .extended(
                &[Pulse::carrier(1, PI, 1.0, &timing.rabi).unwrap()],
                timing.settle,
            )
            .unwrap();
        assert_eq!(same.pulses().len(), 2);
    }
}
