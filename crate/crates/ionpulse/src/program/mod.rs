//! Plain-text pulse programs (`.ips` files) and their scheduler.
//!
//! The format is line-oriented with `#` comments. Angles are decimals with
//! an optional `pi` suffix multiplied out at parse time; waits are given in
//! microseconds, beam deflections in micrometers:
//!
//! ```text
//! # map control, flip target conditionally, unmap
//! init DS n=0
//! pulse blue ion=1 theta=1pi phi=0
//! gate cnot1 ion=2
//! pulse blue ion=1 theta=1pi phi=1pi
//! measure
//! ```
//!
//! Gate macros expand through the gate library, so a program can never
//! drift from the canonical sequences. The scheduler assigns durations from
//! the configured Rabi rates and inserts the settling wait on every ion
//! retarget.

mod parse;

pub use parse::parse_program;

use crate::error::{Error, Result};
use crate::gates::{
    cnot_single_ion_pulses, composite_phase_gate_pulses, cz_cnot_pulses, spin_echo, Sequence,
    Timing,
};
use crate::hilbert::Qubit;
use crate::pulse::{AddressingModel, Pulse, PulseKind};

/// Diagnostic severity. Parse failures are always errors; warnings are
/// reserved for valid-but-suspicious constructs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// A positioned parser or scheduler message.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub severity: Severity,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let severity = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{}:{}: {}: {}",
            self.line, self.column, severity, self.message
        )
    }
}

/// Gate macros that expand into library sequences.
#[derive(Debug, Clone, PartialEq)]
pub enum GateMacro {
    /// Composite phase gate on one ion.
    Phase { ion: usize },
    /// Single-ion CNOT (phase gate between carrier pi/2 pulses).
    Cnot1 { ion: usize },
    /// Two-ion controlled-NOT via the bus mode.
    CzCnot { control: usize, target: usize },
    /// Deflection-phase spin echo; requires a single-ion register.
    SpinEcho {
        /// Beam deflection in micrometers.
        deflection_um: f64,
        /// Phase of the central pi-pulse (radians).
        phi: f64,
    },
}

/// One program statement.
#[derive(Debug, Clone, PartialEq)]
pub enum StatementKind {
    /// Register declaration: qubit string (ion 1 first) and the initial bus
    /// number.
    Init { qubits: Vec<Qubit>, n: usize },
    /// An explicit laser pulse; `kind` is Carrier or BlueSideband.
    Pulse {
        kind: PulseKind,
        ion: usize,
        theta: f64,
        phi: f64,
    },
    /// Idle wait, stored in microseconds as written.
    Wait { duration_us: f64 },
    Gate(GateMacro),
    Measure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub kind: StatementKind,
    pub line: usize,
}

/// A parsed pulse program. Structural invariants (exactly one leading init,
/// measure last if present) are enforced by the parser.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    statements: Vec<Statement>,
}

impl Program {
    pub(crate) fn from_statements(statements: Vec<Statement>) -> Self {
        Program { statements }
    }

    pub fn statements(&self) -> &[Statement] {
        &self.statements
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// The declared initial qubit string and bus number.
    pub fn init(&self) -> (&[Qubit], usize) {
        match &self.statements[0].kind {
            StatementKind::Init { qubits, n } => (qubits, *n),
            _ => unreachable!("parser guarantees a leading init"),
        }
    }

    pub fn num_ions(&self) -> usize {
        self.init().0.len()
    }

    pub fn has_measure(&self) -> bool {
        matches!(
            self.statements.last().map(|s| &s.kind),
            Some(StatementKind::Measure)
        )
    }
}

impl std::fmt::Display for Program {
    /// Canonical text form; parsing it back yields a structurally identical
    /// program (angles print in radians with round-trip precision).
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for statement in &self.statements {
            match &statement.kind {
                StatementKind::Init { qubits, n } => {
                    let labels: String = qubits.iter().map(|q| q.to_string()).collect();
                    writeln!(f, "init {labels} n={n}")?;
                }
                StatementKind::Pulse {
                    kind,
                    ion,
                    theta,
                    phi,
                } => {
                    let name = match kind {
                        PulseKind::Carrier => "carrier",
                        PulseKind::BlueSideband => "blue",
                        PulseKind::Wait => unreachable!("wait is a dedicated statement"),
                    };
                    writeln!(f, "pulse {name} ion={ion} theta={theta} phi={phi}")?;
                }
                StatementKind::Wait { duration_us } => writeln!(f, "wait {duration_us}us")?,
                StatementKind::Gate(gate) => match gate {
                    GateMacro::Phase { ion } => writeln!(f, "gate phase ion={ion}")?,
                    GateMacro::Cnot1 { ion } => writeln!(f, "gate cnot1 ion={ion}")?,
                    GateMacro::CzCnot { control, target } => {
                        writeln!(f, "gate czcnot control={control} target={target}")?
                    }
                    GateMacro::SpinEcho { deflection_um, phi } => {
                        writeln!(f, "gate spinecho deflection={deflection_um}um phi={phi}")?
                    }
                },
                StatementKind::Measure => writeln!(f, "measure")?,
            }
        }
        Ok(())
    }
}

/// Everything the scheduler needs: pulse timing, the beam model (for the
/// spin-echo macro), and the register's Fock cutoff.
#[derive(Debug, Clone)]
pub struct ScheduleParams {
    pub timing: Timing,
    pub addressing: AddressingModel,
    pub fock_cutoff: usize,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        ScheduleParams {
            timing: Timing::default(),
            addressing: AddressingModel::default(),
            fock_cutoff: crate::hilbert::RegisterConfig::default().fock_cutoff,
        }
    }
}

fn schedule_err(line: usize, message: impl Into<String>) -> Error {
    Error::Schedule {
        line,
        message: message.into(),
    }
}

/// Expand a program into a timed pulse sequence: gate macros go through the
/// gate library, durations come from theta/omega, and a settling wait is
/// inserted on every ion retarget.
pub fn schedule(program: &Program, params: &ScheduleParams) -> Result<Sequence> {
    let num_ions = program.num_ions();
    let (_, init_n) = program.init();
    if init_n > params.fock_cutoff {
        return Err(schedule_err(
            program.statements()[0].line,
            format!(
                "initial bus number {init_n} exceeds the Fock cutoff {}",
                params.fock_cutoff
            ),
        ));
    }
    let check_ion = |ion: usize, line: usize| -> Result<()> {
        if ion == 0 || ion > num_ions {
            return Err(schedule_err(
                line,
                format!("ion {ion} outside the {num_ions}-ion register"),
            ));
        }
        Ok(())
    };

    let timing = &params.timing;
    let mut raw: Vec<Pulse> = Vec::new();
    for statement in program.statements() {
        let line = statement.line;
        match &statement.kind {
            StatementKind::Init { .. } | StatementKind::Measure => {}
            StatementKind::Pulse {
                kind,
                ion,
                theta,
                phi,
            } => {
                check_ion(*ion, line)?;
                let pulse = match kind {
                    PulseKind::Carrier => Pulse::carrier(*ion, *theta, *phi, &timing.rabi),
                    PulseKind::BlueSideband => {
                        Pulse::blue_sideband(*ion, *theta, *phi, &timing.rabi)
                    }
                    PulseKind::Wait => unreachable!("parser never emits wait pulses"),
                };
                raw.push(pulse.map_err(|e| schedule_err(line, e.to_string()))?);
            }
            StatementKind::Wait { duration_us } => {
                raw.push(
                    Pulse::wait(duration_us * 1.0e-6)
                        .map_err(|e| schedule_err(line, e.to_string()))?,
                );
            }
            StatementKind::Gate(gate) => match gate {
                GateMacro::Phase { ion } => {
                    check_ion(*ion, line)?;
                    raw.extend(composite_phase_gate_pulses(*ion, timing)?);
                }
                GateMacro::Cnot1 { ion } => {
                    check_ion(*ion, line)?;
                    raw.extend(cnot_single_ion_pulses(*ion, timing)?);
                }
                GateMacro::CzCnot { control, target } => {
                    check_ion(*control, line)?;
                    check_ion(*target, line)?;
                    raw.extend(
                        cz_cnot_pulses(*control, *target, timing)
                            .map_err(|e| schedule_err(line, e.to_string()))?,
                    );
                }
                GateMacro::SpinEcho { deflection_um, phi } => {
                    if num_ions != 1 {
                        return Err(schedule_err(
                            line,
                            format!("spinecho needs a single-ion register, got {num_ions} ions"),
                        ));
                    }
                    let echo =
                        spin_echo(deflection_um * 1.0e-6, *phi, &params.addressing, timing)?;
                    raw.extend(echo.pulses().iter().cloned());
                }
            },
        }
    }
    Sequence::from_pulses(raw, timing.settle)
}
