//! Elementary laser operations on the register.
//!
//! Two resonant interactions are modeled in closed form, both as 2x2
//! rotations with the convention
//!
//! ```text
//! R(theta, phi) = [ cos(theta/2)              -i e^{ i phi} sin(theta/2) ]
//!                 [ -i e^{-i phi} sin(theta/2)  cos(theta/2)             ]
//! ```
//!
//! in the (S, D) basis. A carrier pulse applies this for every bus number n.
//! A blue-sideband pulse applies it on each pair |S,n> <-> |D,n+1> with the
//! effective angle theta*sqrt(n+1), leaving |D,0> (and the truncation
//! boundary |S,n_max>) untouched; `theta` always means the nominal n = 0
//! angle.
//!
//! [`apply_pulse`] layers the documented imperfections on top: intensity
//! jitter, addressing crosstalk onto neighbor ions, an uncompensated
//! AC-Stark phase during sideband pulses, and quasi-static per-ion detuning
//! phases that accrue over the pulse duration (waits included).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::RegisterState;
use crate::noise::ShotParams;

/// Beam deflections beyond this range leave the regime where the deflection
/// phase grows linearly.
pub const LINEAR_DEFLECTION_RANGE: f64 = 2.0e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseKind {
    Carrier,
    BlueSideband,
    Wait,
}

/// One laser pulse (or idle wait) in a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    pub kind: PulseKind,
    /// Addressed ion, 1-based. Unused (0) for waits.
    pub ion: usize,
    /// Rotation angle in radians; for sidebands the nominal n = 0 angle.
    pub theta: f64,
    /// Optical phase in radians.
    pub phi: f64,
    /// Rabi-rate scaling from beam deflection; durations stretch as 1/scale.
    pub rabi_scale: f64,
    /// Wall-clock length in seconds.
    pub duration: f64,
}

impl Pulse {
    pub fn carrier(ion: usize, theta: f64, phi: f64, rabi: &RabiConfig) -> Result<Pulse> {
        Self::scaled_carrier(ion, theta, phi, 1.0, rabi)
    }

    /// Carrier pulse with a deflected beam: the Rabi rate drops by
    /// `rabi_scale` and the duration stretches to keep the pulse area.
    pub fn scaled_carrier(
        ion: usize,
        theta: f64,
        phi: f64,
        rabi_scale: f64,
        rabi: &RabiConfig,
    ) -> Result<Pulse> {
        Self::check_angle(theta)?;
        if !(rabi_scale > 0.0) {
            return Err(Error::InvalidPulse(format!(
                "rabi scale must be positive, got {rabi_scale}"
            )));
        }
        let omega = rabi.carrier_rate(ion)?;
        Ok(Pulse {
            kind: PulseKind::Carrier,
            ion,
            theta,
            phi,
            rabi_scale,
            duration: theta / (omega * rabi_scale),
        })
    }

    pub fn blue_sideband(ion: usize, theta: f64, phi: f64, rabi: &RabiConfig) -> Result<Pulse> {
        Self::check_angle(theta)?;
        let omega = rabi.sideband_rate(ion)?;
        Ok(Pulse {
            kind: PulseKind::BlueSideband,
            ion,
            theta,
            phi,
            rabi_scale: 1.0,
            duration: theta / omega,
        })
    }

    pub fn wait(duration: f64) -> Result<Pulse> {
        if duration < 0.0 {
            return Err(Error::InvalidPulse(format!(
                "wait duration must be non-negative, got {duration}"
            )));
        }
        Ok(Pulse {
            kind: PulseKind::Wait,
            ion: 0,
            theta: 0.0,
            phi: 0.0,
            rabi_scale: 1.0,
            duration,
        })
    }

    fn check_angle(theta: f64) -> Result<()> {
        if theta < 0.0 || !theta.is_finite() {
            return Err(Error::InvalidPulse(format!(
                "rotation angle must be finite and non-negative, got {theta}"
            )));
        }
        Ok(())
    }

    /// The leading `fraction` of this pulse (rotation angle and duration
    /// scale together); used by time scans.
    pub fn truncated(&self, fraction: f64) -> Pulse {
        let f = fraction.clamp(0.0, 1.0);
        Pulse {
            theta: self.theta * f,
            duration: self.duration * f,
            ..self.clone()
        }
    }
}

/// Per-ion Rabi rates (rad/s) for the two transitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiConfig {
    pub carrier_rabi: Vec<f64>,
    pub sideband_rabi: Vec<f64>,
}

impl Default for RabiConfig {
    fn default() -> Self {
        RabiConfig::uniform(2)
    }
}

impl RabiConfig {
    /// Default rates for `num_ions` ions: carrier 2pi*35.5 kHz, sideband
    /// pi/95us (a 95 us sideband pi-pulse).
    pub fn uniform(num_ions: usize) -> Self {
        let carrier = 2.0 * std::f64::consts::PI * 35.5e3;
        let sideband = std::f64::consts::PI / 95.0e-6;
        RabiConfig {
            carrier_rabi: vec![carrier; num_ions],
            sideband_rabi: vec![sideband; num_ions],
        }
    }

    pub fn num_ions(&self) -> usize {
        self.carrier_rabi.len().min(self.sideband_rabi.len())
    }

    pub fn carrier_rate(&self, ion: usize) -> Result<f64> {
        Self::rate(&self.carrier_rabi, ion)
    }

    pub fn sideband_rate(&self, ion: usize) -> Result<f64> {
        Self::rate(&self.sideband_rabi, ion)
    }

    fn rate(rates: &[f64], ion: usize) -> Result<f64> {
        if ion == 0 || ion > rates.len() {
            return Err(Error::IonOutOfRange {
                ion,
                num_ions: rates.len(),
            });
        }
        let omega = rates[ion - 1];
        if !(omega > 0.0) {
            return Err(Error::InvalidPulse(format!(
                "Rabi rate for ion {ion} must be positive, got {omega}"
            )));
        }
        Ok(omega)
    }
}

/// Which quantity the Gaussian beam profile describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamProfile {
    /// Rabi frequency falls as exp(-x^2/w^2).
    #[default]
    RabiWaist,
    /// Intensity falls as exp(-x^2/w^2); the Rabi rate as its square root.
    IntensityWaist,
}

/// Addressing-beam model: residual coupling to neighbor ions and the
/// deflection-dependent beam amplitude and phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AddressingModel {
    /// Rabi-rate ratio felt by each neighbor, indexed by the *addressed* ion.
    #[serde(default = "AddressingModel::default_errors")]
    pub error_on_neighbor: Vec<f64>,
    /// Optical phase offset of the residual light at the neighbor (rad).
    #[serde(default)]
    pub crosstalk_phase: f64,
    /// Gaussian beam waist (m).
    #[serde(default = "AddressingModel::default_waist")]
    pub beam_waist: f64,
    /// Projected two-ion distance (m).
    #[serde(default = "AddressingModel::default_spacing")]
    pub ion_spacing: f64,
    /// Linear deflection-phase coefficient (rad per meter of deflection).
    #[serde(default = "AddressingModel::default_phase_slope")]
    pub phase_slope: f64,
    #[serde(default)]
    pub profile: BeamProfile,
}

impl Default for AddressingModel {
    fn default() -> Self {
        AddressingModel {
            error_on_neighbor: Self::default_errors(),
            crosstalk_phase: 0.0,
            beam_waist: Self::default_waist(),
            ion_spacing: Self::default_spacing(),
            phase_slope: Self::default_phase_slope(),
            profile: BeamProfile::RabiWaist,
        }
    }
}

impl AddressingModel {
    fn default_errors() -> Vec<f64> {
        // Measured Rabi-rate ratios when addressing ion 1 resp. ion 2.
        vec![0.069, 0.029]
    }

    fn default_waist() -> f64 {
        2.5e-6
    }

    fn default_spacing() -> f64 {
        4.90e-6
    }

    fn default_phase_slope() -> f64 {
        // The measured phase grows linearly at roughly half a radian per
        // micrometer of deflection; freely configurable.
        0.5e6
    }

    /// No crosstalk at all; beam geometry kept at defaults.
    pub fn ideal(num_ions: usize) -> Self {
        AddressingModel {
            error_on_neighbor: vec![0.0; num_ions],
            ..AddressingModel::default()
        }
    }

    pub fn neighbor_error(&self, addressed_ion: usize) -> f64 {
        self.error_on_neighbor
            .get(addressed_ion - 1)
            .copied()
            .unwrap_or(0.0)
    }
}

/// AC-Stark shift of the qubit levels during sideband pulses.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcStark {
    /// Light shift in Hz.
    #[serde(default)]
    pub shift: f64,
    /// When compensated (the hardware adds a counteracting light field) the
    /// effective shift is zero.
    #[serde(default = "AcStark::default_compensated")]
    pub compensated: bool,
}

impl AcStark {
    fn default_compensated() -> bool {
        true
    }

    pub fn compensated() -> Self {
        AcStark {
            shift: 0.0,
            compensated: true,
        }
    }

    pub fn effective_shift(&self) -> f64 {
        if self.compensated {
            0.0
        } else {
            self.shift
        }
    }
}

/// Everything a pulse application needs besides the pulse itself: calibrated
/// Rabi rates, the addressing model, this shot's noise realization, and the
/// AC-Stark setting.
#[derive(Debug, Clone)]
pub struct PulseContext {
    pub rabi: RabiConfig,
    pub addressing: AddressingModel,
    pub shot: ShotParams,
    pub ac_stark: AcStark,
}

impl PulseContext {
    /// Noise-free context: no crosstalk, no detuning, unit intensity.
    pub fn ideal(num_ions: usize) -> Self {
        PulseContext {
            rabi: RabiConfig::uniform(num_ions),
            addressing: AddressingModel::ideal(num_ions),
            shot: ShotParams::ideal(num_ions),
            ac_stark: AcStark::compensated(),
        }
    }
}

/// Carrier rotation R(theta, phi) on one ion, identical for every bus number.
pub fn carrier(state: &RegisterState, ion: usize, theta: f64, phi: f64) -> Result<RegisterState> {
    let cfg = *state.config();
    cfg.check_ion(ion)?;
    let mut out = state.clone();
    let fock = cfg.fock_dim();
    let stride = (1usize << (cfg.num_ions - ion)) * fock;
    let (c, ms) = half_angle(theta, phi);
    let amps = out.amplitudes_mut();
    for i in 0..amps.len() {
        let q = i / fock;
        if (q >> (cfg.num_ions - ion)) & 1 == 0 {
            rotate_pair(amps, i, i + stride, c, ms, phi);
        }
    }
    Ok(out)
}

/// Blue-sideband rotation on one ion: couples |S,n> to |D,n+1> with angle
/// theta*sqrt(n+1). |D,0> and the boundary |S,n_max> are left invariant.
pub fn blue_sideband(
    state: &RegisterState,
    ion: usize,
    theta: f64,
    phi: f64,
) -> Result<RegisterState> {
    let cfg = *state.config();
    cfg.check_ion(ion)?;
    let mut out = state.clone();
    let fock = cfg.fock_dim();
    let stride = (1usize << (cfg.num_ions - ion)) * fock;
    let amps = out.amplitudes_mut();
    for i in 0..amps.len() {
        let q = i / fock;
        let n = i % fock;
        if (q >> (cfg.num_ions - ion)) & 1 == 0 && n + 1 < fock {
            let eff = theta * ((n + 1) as f64).sqrt();
            let (c, ms) = half_angle(eff, phi);
            rotate_pair(amps, i, i + stride + 1, c, ms, phi);
        }
    }
    Ok(out)
}

#[inline]
fn half_angle(theta: f64, _phi: f64) -> (f64, f64) {
    ((theta / 2.0).cos(), (theta / 2.0).sin())
}

#[inline]
fn rotate_pair(amps: &mut [Complex64], i_s: usize, i_d: usize, c: f64, s: f64, phi: f64) {
    let a = amps[i_s];
    let b = amps[i_d];
    let m_i = Complex64::new(0.0, -1.0);
    let e_pos = Complex64::from_polar(1.0, phi);
    let e_neg = Complex64::from_polar(1.0, -phi);
    amps[i_s] = c * a + m_i * e_pos * s * b;
    amps[i_d] = m_i * e_neg * s * a + c * b;
}

/// Multiply the |D> components of one ion by exp(i*angle).
fn phase_on_excited(state: &mut RegisterState, ion: usize, angle: f64) {
    let cfg = *state.config();
    let fock = cfg.fock_dim();
    let bit = cfg.num_ions - ion;
    let factor = Complex64::from_polar(1.0, angle);
    for (i, a) in state.amplitudes_mut().iter_mut().enumerate() {
        let q = i / fock;
        if (q >> bit) & 1 == 1 {
            *a *= factor;
        }
    }
}

/// Apply one pulse with all configured imperfections.
///
/// Order of operations: intensity-jittered rotation on the addressed ion,
/// then crosstalk rotations on each neighbor (sequential by convention; the
/// difference from simultaneous evolution is O(eps*theta^2)), then the
/// AC-Stark phase for uncompensated sideband pulses, then the per-ion
/// quasi-static detuning phases over the pulse duration. Waits apply the
/// detuning phases only.
pub fn apply_pulse(state: &RegisterState, pulse: &Pulse, ctx: &PulseContext) -> Result<RegisterState> {
    if pulse.duration < 0.0 {
        return Err(Error::InvalidPulse(format!(
            "negative pulse duration {}",
            pulse.duration
        )));
    }
    let cfg = *state.config();
    let mut out = match pulse.kind {
        PulseKind::Wait => state.clone(),
        PulseKind::Carrier | PulseKind::BlueSideband => {
            cfg.check_ion(pulse.ion)?;
            let theta = pulse.theta * ctx.shot.intensity_factor;
            let rotate = |st: &RegisterState, ion: usize, th: f64, ph: f64| match pulse.kind {
                PulseKind::Carrier => carrier(st, ion, th, ph),
                PulseKind::BlueSideband => blue_sideband(st, ion, th, ph),
                PulseKind::Wait => unreachable!(),
            };
            let mut st = rotate(state, pulse.ion, theta, pulse.phi)?;
            let eps = ctx.addressing.neighbor_error(pulse.ion);
            if eps != 0.0 {
                for neighbor in 1..=cfg.num_ions {
                    if neighbor != pulse.ion {
                        st = rotate(
                            &st,
                            neighbor,
                            theta * eps,
                            pulse.phi + ctx.addressing.crosstalk_phase,
                        )?;
                    }
                }
            }
            if pulse.kind == PulseKind::BlueSideband {
                let shift = ctx.ac_stark.effective_shift();
                if shift != 0.0 {
                    phase_on_excited(
                        &mut st,
                        pulse.ion,
                        -2.0 * std::f64::consts::PI * shift * pulse.duration,
                    );
                }
            }
            st
        }
    };
    if pulse.duration > 0.0 {
        for ion in 1..=cfg.num_ions {
            let delta = ctx.shot.detuning.get(ion - 1).copied().unwrap_or(0.0);
            if delta != 0.0 {
                phase_on_excited(
                    &mut out,
                    ion,
                    -2.0 * std::f64::consts::PI * delta * pulse.duration,
                );
            }
        }
    }
    Ok(out)
}

/// Relative Rabi rate at a beam deflection `x` from the addressed ion.
pub fn rabi_profile(deflection: f64, model: &AddressingModel) -> f64 {
    let w = model.beam_waist;
    let x2 = deflection * deflection / (w * w);
    match model.profile {
        BeamProfile::RabiWaist => (-x2).exp(),
        BeamProfile::IntensityWaist => (-x2 / 2.0).exp(),
    }
}

/// Deflection phase with a validity flag for the linear model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeflectionPhase {
    pub phase: f64,
    /// False when |deflection| exceeds the linear range; the linear model is
    /// then known to be invalid.
    pub within_linear_range: bool,
}

/// Optical phase picked up by the beam when deflected by `x` meters.
pub fn deflection_phase(deflection: f64, model: &AddressingModel) -> DeflectionPhase {
    DeflectionPhase {
        phase: model.phase_slope * deflection,
        within_linear_range: deflection.abs() <= LINEAR_DEFLECTION_RANGE,
    }
}
