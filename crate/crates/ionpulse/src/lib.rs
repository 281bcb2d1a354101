//! Desk-scale simulator of a two-ion trapped-ion quantum processor: qubits
//! coupled through a shared vibrational bus mode, driven by carrier and
//! blue-sideband laser pulses, with the documented experimental
//! imperfections and the measurement/analysis pipeline (truth tables, time
//! scans, parity oscillations, gate fidelity).

pub mod error;
pub mod experiment;
pub mod fit;
pub mod gates;
pub mod hilbert;
pub mod noise;
pub mod output;
pub mod program;
pub mod pulse;
pub mod rng;

pub use error::{Error, Result};
pub use gates::{
    cnot_single_ion, composite_phase_gate, cz_cnot, entangling_sequence, spin_echo, unitary_of,
    GateUnitary, Sequence, Timing,
};
pub use hilbert::{
    mode_frequencies, ModeSpectrum, PopulationTable, Qubit, RegisterConfig, RegisterState,
    TrapConfig,
};
pub use noise::{detection_flip, sample_shot, thermal_n, NoiseConfig, ShotParams};
pub use pulse::{
    apply_pulse, blue_sideband, carrier, deflection_phase, rabi_profile, AcStark, AddressingModel,
    Pulse, PulseContext, PulseKind, RabiConfig,
};
