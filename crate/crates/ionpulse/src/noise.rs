//! Static imperfection parameters and their per-shot random realizations.
//!
//! The error budget is sampled Monte-Carlo style: each shot draws a thermal
//! initial bus number, one quasi-static detuning per ion (laser frequency
//! noise and magnetic field drift are indistinguishable here and share one
//! parameter), and a global intensity factor. Detection errors flip each
//! ion's readout independently.
//!
//! All draws come from counter-based streams keyed by `(seed, shot_index)`,
//! so shot parameters are reproducible and order-independent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::Qubit;
use crate::pulse::{AcStark, AddressingModel};
use crate::rng::Stream;

/// Stream-id namespace tags; keep distinct so parameter and measurement
/// draws never alias.
pub(crate) const STREAM_SHOT_PARAMS: u64 = 0x01;
pub(crate) const STREAM_MEASURE: u64 = 0x02;

/// Full static noise model plus the RNG seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Mean thermal occupation of the bus mode after cooling.
    #[serde(default = "NoiseConfig::default_nbar")]
    pub thermal_nbar: f64,
    /// Std. dev. (Hz) of the per-shot qubit detuning, one entry per ion.
    #[serde(default = "NoiseConfig::default_sigma")]
    pub dephasing_sigma: Vec<f64>,
    /// Relative rms of the laser intensity (scales all Rabi rates).
    #[serde(default = "NoiseConfig::default_intensity_rms")]
    pub intensity_rms: f64,
    /// Probability that an ion's readout is reported correctly.
    #[serde(default = "NoiseConfig::default_detection")]
    pub detection_accuracy: f64,
    #[serde(default)]
    pub addressing: AddressingModel,
    #[serde(default)]
    pub ac_stark: AcStark,
    #[serde(default)]
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            thermal_nbar: Self::default_nbar(),
            dephasing_sigma: Self::default_sigma(),
            intensity_rms: Self::default_intensity_rms(),
            detection_accuracy: Self::default_detection(),
            addressing: AddressingModel::default(),
            ac_stark: AcStark::default(),
            seed: 0,
        }
    }
}

impl NoiseConfig {
    fn default_nbar() -> f64 {
        // 99% ground-state population: p(0) = 1/(1+nbar) = 0.99.
        1.0 / 99.0
    }

    fn default_sigma() -> Vec<f64> {
        vec![0.0, 0.0]
    }

    fn default_intensity_rms() -> f64 {
        0.01
    }

    fn default_detection() -> f64 {
        0.98
    }

    /// Noise-free configuration: exact gates, perfect detection.
    pub fn ideal(num_ions: usize) -> Self {
        NoiseConfig {
            thermal_nbar: 0.0,
            dephasing_sigma: vec![0.0; num_ions],
            intensity_rms: 0.0,
            detection_accuracy: 1.0,
            addressing: AddressingModel::ideal(num_ions),
            ac_stark: AcStark::compensated(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, num_ions: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.detection_accuracy) {
            return Err(Error::InvalidNoiseConfig(format!(
                "detection_accuracy must lie in [0,1], got {}",
                self.detection_accuracy
            )));
        }
        if self.thermal_nbar < 0.0 {
            return Err(Error::InvalidNoiseConfig(format!(
                "thermal_nbar must be non-negative, got {}",
                self.thermal_nbar
            )));
        }
        if self.intensity_rms < 0.0 {
            return Err(Error::InvalidNoiseConfig(format!(
                "intensity_rms must be non-negative, got {}",
                self.intensity_rms
            )));
        }
        if self.dephasing_sigma.len() < num_ions {
            return Err(Error::InvalidNoiseConfig(format!(
                "dephasing_sigma has {} entries but the register has {} ions",
                self.dephasing_sigma.len(),
                num_ions
            )));
        }
        if self.addressing.error_on_neighbor.len() < num_ions {
            return Err(Error::InvalidNoiseConfig(format!(
                "addressing.error_on_neighbor has {} entries but the register has {} ions",
                self.addressing.error_on_neighbor.len(),
                num_ions
            )));
        }
        for &eps in &self.addressing.error_on_neighbor {
            if !(0.0..1.0).contains(&eps) {
                return Err(Error::InvalidNoiseConfig(format!(
                    "addressing error ratio must lie in [0,1), got {eps}"
                )));
            }
        }
        Ok(())
    }

    /// Parse from JSON; unknown keys are rejected so misspelled fields never
    /// silently revert to defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidNoiseConfig(format!("JSON parse error: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("NoiseConfig always serializes")
    }
}

/// One shot's concrete noise realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotParams {
    /// Initial bus occupation drawn from the thermal distribution.
    pub initial_n: usize,
    /// Per-ion detuning in Hz, constant within the shot.
    pub detuning: Vec<f64>,
    /// Multiplier on all Rabi rates for this shot.
    pub intensity_factor: f64,
}

impl ShotParams {
    pub fn ideal(num_ions: usize) -> Self {
        ShotParams {
            initial_n: 0,
            detuning: vec![0.0; num_ions],
            intensity_factor: 1.0,
        }
    }
}

/// Inverse-CDF sample of the thermal distribution
/// p(n) = nbar^n / (1+nbar)^(n+1), clipped at `n_max`.
pub fn thermal_n(nbar: f64, u: f64, n_max: usize) -> usize {
    if nbar <= 0.0 {
        return 0;
    }
    let ratio = nbar / (1.0 + nbar);
    let mut p = 1.0 / (1.0 + nbar);
    let mut cdf = p;
    let mut n = 0;
    while u >= cdf && n < n_max {
        n += 1;
        p *= ratio;
        cdf += p;
    }
    n
}

/// Deterministic per-shot parameter draw. Identical `(cfg.seed, shot_index)`
/// always produce identical parameters, independent of evaluation order.
pub fn sample_shot(cfg: &NoiseConfig, num_ions: usize, n_max: usize, shot_index: u64) -> ShotParams {
    let mut stream = Stream::new(cfg.seed, &[STREAM_SHOT_PARAMS, shot_index]);
    let initial_n = thermal_n(cfg.thermal_nbar, stream.uniform(), n_max);
    let detuning = (0..num_ions)
        .map(|ion| {
            let sigma = cfg.dephasing_sigma.get(ion).copied().unwrap_or(0.0);
            if sigma > 0.0 {
                sigma * stream.normal()
            } else {
                // keep the draw so downstream draws stay aligned
                stream.normal();
                0.0
            }
        })
        .collect();
    let intensity_factor = if cfg.intensity_rms > 0.0 {
        (1.0 + cfg.intensity_rms * stream.truncated_normal(4.0)).max(1e-6)
    } else {
        1.0
    };
    ShotParams {
        initial_n,
        detuning,
        intensity_factor,
    }
}

/// Flip each ion's readout independently with probability
/// `1 - detection_accuracy`.
pub fn detection_flip(outcome: &[Qubit], accuracy: f64, stream: &mut Stream) -> Vec<Qubit> {
    outcome
        .iter()
        .map(|&q| {
            if stream.uniform() < 1.0 - accuracy {
                q.flipped()
            } else {
                q
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermal_zero_nbar_is_always_ground() {
        for u in [0.0, 0.3, 0.999_999] {
            assert_eq!(thermal_n(0.0, u, 8), 0);
        }
    }

    #[test]
    fn thermal_ground_state_fraction_matches_nbar() {
        // p(0) = 1/(1+nbar) = 0.99 at the default nbar
        let nbar = NoiseConfig::default_nbar();
        assert!((1.0 / (1.0 + nbar) - 0.99).abs() < 1e-12);
        assert_eq!(thermal_n(nbar, 0.989, 8), 0);
        assert_eq!(thermal_n(nbar, 0.991, 8), 1);
    }

    #[test]
    fn thermal_mean_converges() {
        let mut stream = Stream::new(77, &[0]);
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += thermal_n(0.5, stream.uniform(), 60) as f64;
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn zero_noise_gives_identity_params() {
        let cfg = NoiseConfig::ideal(2);
        for shot in [0u64, 1, 99] {
            let p = sample_shot(&cfg, 2, 8, shot);
            assert_eq!(p, ShotParams::ideal(2));
        }
    }

    #[test]
    fn sample_shot_is_deterministic() {
        let cfg = NoiseConfig {
            dephasing_sigma: vec![120.0, 240.0],
            seed: 31,
            ..NoiseConfig::default()
        };
        let a = sample_shot(&cfg, 2, 8, 17);
        let b = sample_shot(&cfg, 2, 8, 17);
        assert_eq!(a, b);
        let c = sample_shot(&cfg, 2, 8, 18);
        assert_ne!(a, c);
    }

    #[test]
    fn detuning_spread_matches_sigma() {
        let sigma = 200.0;
        let cfg = NoiseConfig {
            dephasing_sigma: vec![sigma, sigma],
            seed: 5,
            ..NoiseConfig::default()
        };
        let n = 100_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for shot in 0..n {
            let p = sample_shot(&cfg, 2, 8, shot);
            sum += p.detuning[0];
            sq += p.detuning[0] * p.detuning[0];
        }
        let mean = sum / n as f64;
        let std = (sq / n as f64 - mean * mean).sqrt();
        assert!((std / sigma - 1.0).abs() < 0.02, "std {std}");
        assert!(mean.abs() < 3.0 * sigma / (n as f64).sqrt() + 2.0);
    }

    #[test]
    fn intensity_factor_is_positive_and_truncated() {
        let cfg = NoiseConfig {
            intensity_rms: 0.05,
            seed: 8,
            ..NoiseConfig::default()
        };
        for shot in 0..50_000 {
            let p = sample_shot(&cfg, 2, 8, shot);
            assert!(p.intensity_factor > 0.0);
            assert!((p.intensity_factor - 1.0).abs() <= 0.05 * 4.0 + 1e-12);
        }
    }

    #[test]
    fn detection_flip_identity_at_full_accuracy() {
        let mut stream = Stream::new(1, &[STREAM_MEASURE, 0]);
        let outcome = vec![Qubit::S, Qubit::D];
        assert_eq!(detection_flip(&outcome, 1.0, &mut stream), outcome);
    }

    #[test]
    fn detection_flip_rate_matches_accuracy() {
        let n = 100_000;
        let mut both_correct = 0;
        for shot in 0..n {
            let mut stream = Stream::new(3, &[STREAM_MEASURE, shot]);
            let reported = detection_flip(&[Qubit::S, Qubit::S], 0.98, &mut stream);
            if reported == [Qubit::S, Qubit::S] {
                both_correct += 1;
            }
        }
        let frac = both_correct as f64 / n as f64;
        assert!((frac - 0.9604).abs() < 0.005, "fraction {frac}");
    }

    #[test]
    fn detection_flip_half_accuracy_is_uniform() {
        let n = 40_000;
        let mut counts = [0u32; 4];
        for shot in 0..n {
            let mut stream = Stream::new(4, &[STREAM_MEASURE, shot]);
            let reported = detection_flip(&[Qubit::S, Qubit::S], 0.5, &mut stream);
            let idx = reported[0].bit() * 2 + reported[1].bit();
            counts[idx] += 1;
        }
        for c in counts {
            let frac = c as f64 / n as f64;
            assert!((frac - 0.25).abs() < 0.02, "fraction {frac}");
        }
    }

    #[test]
    fn json_roundtrip_and_unknown_key_rejection() {
        let cfg = NoiseConfig {
            dephasing_sigma: vec![150.0, 150.0],
            seed: 99,
            ..NoiseConfig::default()
        };
        let text = cfg.to_json();
        let back = NoiseConfig::from_json(&text).unwrap();
        assert_eq!(cfg, back);

        let bad = r#"{ "thermal_nbar": 0.01, "dephasing_sgima": [0, 0] }"#;
        assert!(NoiseConfig::from_json(bad).is_err());

        let nested_bad = r#"{ "addressing": { "beam_wiast": 2.5e-6 } }"#;
        assert!(NoiseConfig::from_json(nested_bad).is_err());
    }

    #[test]
    fn validate_checks_ranges_and_lengths() {
        let mut cfg = NoiseConfig::default();
        assert!(cfg.validate(2).is_ok());
        assert!(cfg.validate(3).is_err()); // arrays sized for 2 ions
        cfg.detection_accuracy = 1.2;
        assert!(cfg.validate(2).is_err());
        let mut cfg = NoiseConfig::default();
        cfg.thermal_nbar = -0.1;
        assert!(cfg.validate(2).is_err());
    }
}
