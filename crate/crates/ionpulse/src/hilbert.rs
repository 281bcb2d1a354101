//! Register Hilbert space: N two-level qubits coupled to one truncated
//! vibrational bus mode.
//!
//! Basis ordering is fixed so that file outputs are bit-reproducible: the bus
//! quantum number `n` is the fastest-running index, qubits follow with ion 1
//! most significant. A basis state `(q1..qN, n)` therefore sits at
//! `index = (q1*2^(N-1) + .. + qN) * (n_max+1) + n` with `S = 0`, `D = 1`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const NORM_TOLERANCE: f64 = 1e-9;

/// Electronic qubit level: `S` is the ground state (logic 0), `D` the
/// metastable excited state (logic 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Qubit {
    S,
    D,
}

impl Qubit {
    pub fn bit(self) -> usize {
        match self {
            Qubit::S => 0,
            Qubit::D => 1,
        }
    }

    pub fn from_bit(bit: usize) -> Qubit {
        if bit == 0 {
            Qubit::S
        } else {
            Qubit::D
        }
    }

    pub fn from_char(c: char) -> Option<Qubit> {
        match c {
            'S' => Some(Qubit::S),
            'D' => Some(Qubit::D),
            _ => None,
        }
    }

    pub fn flipped(self) -> Qubit {
        match self {
            Qubit::S => Qubit::D,
            Qubit::D => Qubit::S,
        }
    }
}

impl std::fmt::Display for Qubit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Qubit::S => write!(f, "S"),
            Qubit::D => write!(f, "D"),
        }
    }
}

/// Parse a qubit string such as "SD" (ion 1 first).
pub fn parse_qubits(s: &str) -> Option<Vec<Qubit>> {
    s.chars().map(Qubit::from_char).collect()
}

/// Label of the qubit string with value `q` (ion 1 = most significant bit).
pub fn qubit_string_label(q: usize, num_ions: usize) -> String {
    (0..num_ions)
        .map(|i| {
            if (q >> (num_ions - 1 - i)) & 1 == 0 {
                'S'
            } else {
                'D'
            }
        })
        .collect()
}

/// Size of the register: number of ions and the Fock-space cutoff of the bus
/// mode. Amplitudes with `n = n_max` are retained but flagged by
/// [`RegisterState::truncation_leakage`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterConfig {
    pub num_ions: usize,
    pub fock_cutoff: usize,
}

impl Default for RegisterConfig {
    fn default() -> Self {
        // n_max = 8 leaves headroom: the composite gate reaches n = 2 and a
        // thermal bus at nbar ~ 0.01 has negligible weight beyond that.
        RegisterConfig {
            num_ions: 2,
            fock_cutoff: 8,
        }
    }
}

impl RegisterConfig {
    pub fn new(num_ions: usize, fock_cutoff: usize) -> Result<Self> {
        if num_ions < 1 {
            return Err(Error::InvalidRegister("need at least one ion".into()));
        }
        if fock_cutoff < 2 {
            return Err(Error::InvalidRegister(
                "Fock cutoff must be at least 2 (the composite gate reaches n = 2)".into(),
            ));
        }
        Ok(RegisterConfig {
            num_ions,
            fock_cutoff,
        })
    }

    pub fn n_max(&self) -> usize {
        self.fock_cutoff
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_cutoff + 1
    }

    pub fn dim(&self) -> usize {
        (1 << self.num_ions) * self.fock_dim()
    }

    pub fn check_ion(&self, ion: usize) -> Result<()> {
        if ion == 0 || ion > self.num_ions {
            return Err(Error::IonOutOfRange {
                ion,
                num_ions: self.num_ions,
            });
        }
        Ok(())
    }

    /// Flat index of the basis state `(qubits, n)` under the declared order.
    pub fn basis_index(&self, qubits: &[Qubit], n: usize) -> Result<usize> {
        if qubits.len() != self.num_ions {
            return Err(Error::QubitCount {
                expected: self.num_ions,
                got: qubits.len(),
            });
        }
        if n > self.fock_cutoff {
            return Err(Error::FockOutOfRange {
                n,
                n_max: self.fock_cutoff,
            });
        }
        let q = qubits
            .iter()
            .fold(0usize, |acc, qubit| (acc << 1) | qubit.bit());
        Ok(q * self.fock_dim() + n)
    }

    /// Inverse of [`basis_index`]: qubit-string value and bus number.
    pub fn split_index(&self, index: usize) -> (usize, usize) {
        (index / self.fock_dim(), index % self.fock_dim())
    }
}

/// Pure state of the register as a complex amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisterState {
    config: RegisterConfig,
    amps: Vec<Complex64>,
}

impl RegisterState {
    /// Basis state `|q1..qN> ⊗ |n>`.
    pub fn basis(config: RegisterConfig, qubits: &[Qubit], n: usize) -> Result<Self> {
        let idx = config.basis_index(qubits, n)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); config.dim()];
        amps[idx] = Complex64::new(1.0, 0.0);
        Ok(RegisterState { config, amps })
    }

    /// Build a state from raw amplitudes; must already be normalized.
    pub fn from_amplitudes(config: RegisterConfig, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != config.dim() {
            return Err(Error::InvalidRegister(format!(
                "amplitude vector has length {}, expected {}",
                amps.len(),
                config.dim()
            )));
        }
        let state = RegisterState { config, amps };
        if (state.norm() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidRegister(format!(
                "state is not normalized (norm = {})",
                state.norm()
            )));
        }
        Ok(state)
    }

    pub fn config(&self) -> &RegisterConfig {
        &self.config
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn amplitude(&self, qubits: &[Qubit], n: usize) -> Result<Complex64> {
        Ok(self.amps[self.config.basis_index(qubits, n)?])
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Population with the bus at the truncation boundary `n = n_max`.
    /// Nonzero values mean the cutoff is too small for the dynamics run.
    pub fn truncation_leakage(&self) -> f64 {
        let fock = self.config.fock_dim();
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i % fock == fock - 1)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Per-basis probabilities plus the marginals used by the analysis
    /// pipeline.
    pub fn populations(&self) -> PopulationTable {
        let fock = self.config.fock_dim();
        let num_strings = 1 << self.config.num_ions;
        let mut basis = Vec::with_capacity(self.amps.len());
        let mut qubit_strings = vec![0.0; num_strings];
        let mut bus = vec![0.0; fock];
        let mut pd_per_ion = vec![0.0; self.config.num_ions];
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            basis.push(p);
            let (q, n) = self.config.split_index(i);
            qubit_strings[q] += p;
            bus[n] += p;
            for ion in 0..self.config.num_ions {
                if (q >> (self.config.num_ions - 1 - ion)) & 1 == 1 {
                    pd_per_ion[ion] += p;
                }
            }
        }
        PopulationTable {
            num_ions: self.config.num_ions,
            basis,
            qubit_strings,
            pd_per_ion,
            bus,
        }
    }

    /// Reduced density matrix of a single ion's qubit, traced over everything
    /// else. Row/column order is (S, D).
    pub fn reduced_qubit_density(&self, ion: usize) -> Result<[[Complex64; 2]; 2]> {
        self.config.check_ion(ion)?;
        let fock = self.config.fock_dim();
        let bit = self.config.num_ions - ion;
        let stride = (1usize << bit) * fock;
        let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, a) in self.amps.iter().enumerate() {
            let (q, _) = self.config.split_index(i);
            if (q >> bit) & 1 == 0 {
                let b = self.amps[i + stride];
                rho[0][0] += a * a.conj();
                rho[0][1] += a * b.conj();
                rho[1][0] += b * a.conj();
                rho[1][1] += b * b.conj();
            }
        }
        Ok(rho)
    }

    /// Purity Tr(rho^2) of one ion's reduced state; 1 for product states,
    /// 1/2 when the ion is maximally entangled with the rest.
    pub fn single_ion_purity(&self, ion: usize) -> Result<f64> {
        let rho = self.reduced_qubit_density(ion)?;
        let mut tr = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                tr += rho[i][j] * rho[j][i];
            }
        }
        Ok(tr.re)
    }
}

/// Probabilities extracted from a [`RegisterState`].
#[derive(Debug, Clone)]
pub struct PopulationTable {
    pub num_ions: usize,
    /// One entry per basis state, in basis-index order.
    pub basis: Vec<f64>,
    /// Qubit-string marginals summed over the bus (index = string value).
    pub qubit_strings: Vec<f64>,
    /// Probability of |D> per ion (ion 1 first).
    pub pd_per_ion: Vec<f64>,
    /// Bus-number marginal distribution.
    pub bus: Vec<f64>,
}

impl PopulationTable {
    /// Marginal for a named qubit string such as "DS".
    pub fn qubit_string(&self, label: &str) -> Option<f64> {
        let qubits = parse_qubits(label)?;
        if qubits.len() != self.num_ions {
            return None;
        }
        let q = qubits.iter().fold(0usize, |acc, x| (acc << 1) | x.bit());
        self.qubit_strings.get(q).copied()
    }
}

/// Static trap parameters. The Lamb-Dicke factors are carried as metadata;
/// pulse dynamics take Rabi frequencies directly from configuration.
#[derive(Debug, Clone, Copy)]
pub struct TrapConfig {
    /// Axial center-of-mass angular frequency (rad/s).
    pub omega_ax: f64,
    /// Radial center-of-mass angular frequencies (rad/s).
    pub omega_rad_x: f64,
    pub omega_rad_y: f64,
    pub lamb_dicke_ax: f64,
    pub lamb_dicke_rad: f64,
}

impl Default for TrapConfig {
    fn default() -> Self {
        TrapConfig {
            omega_ax: 2.0 * std::f64::consts::PI * 1.2e6,
            omega_rad_x: 2.0 * std::f64::consts::PI * 5.0e6,
            omega_rad_y: 2.0 * std::f64::consts::PI * 5.0e6,
            lamb_dicke_ax: 0.033,
            lamb_dicke_rad: 0.040,
        }
    }
}

/// Normal-mode angular frequencies of the two-ion crystal (rad/s).
#[derive(Debug, Clone, Copy)]
pub struct ModeSpectrum {
    pub com_ax: f64,
    pub com_rad_x: f64,
    pub com_rad_y: f64,
    pub breathing: f64,
    pub rocking_x: f64,
    pub rocking_y: f64,
}

/// Two-ion mode spectrum: center-of-mass modes coincide with the single-ion
/// trap frequencies, the axial breathing mode sits at sqrt(3)*omega_ax and
/// the radial rocking modes at sqrt(omega_rad^2 - omega_ax^2).
pub fn mode_frequencies(trap: &TrapConfig) -> Result<ModeSpectrum> {
    let rock = |omega_rad: f64| -> Result<f64> {
        if omega_rad <= trap.omega_ax {
            return Err(Error::RockingModeUndefined {
                omega_rad,
                omega_ax: trap.omega_ax,
            });
        }
        Ok((omega_rad * omega_rad - trap.omega_ax * trap.omega_ax).sqrt())
    };
    Ok(ModeSpectrum {
        com_ax: trap.omega_ax,
        com_rad_x: trap.omega_rad_x,
        com_rad_y: trap.omega_rad_y,
        breathing: 3.0_f64.sqrt() * trap.omega_ax,
        rocking_x: rock(trap.omega_rad_x)?,
        rocking_y: rock(trap.omega_rad_y)?,
    })
}
