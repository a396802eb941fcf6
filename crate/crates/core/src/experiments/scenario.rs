//! Named sensing scenarios.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_fds_prime, build_ods_prime, effective_bloch, ControlErrorParams, FloquetDriveParams, HamiltonianSpec,
    SensorParams, SignalParams,
};
use crate::metrology::{qfi_exact, QfiEstimate};
use crate::propagator::{evolve_to, stroboscopic_effective_bloch, PropagatorOptions, StateVector};
use crate::units::mhz_to_angular;

/// Sensor configuration behind a Rabi or QFI experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    OdsResonant,
    OdsDetuned,
    Fds(u32),
}

impl Preset {
    pub const STANDARD: [Preset; 5] = [
        Preset::OdsResonant,
        Preset::OdsDetuned,
        Preset::Fds(1),
        Preset::Fds(3),
        Preset::Fds(5),
    ];

    pub fn name(&self) -> String {
        match self {
            Preset::OdsResonant => "ods-resonant".into(),
            Preset::OdsDetuned => "ods-detuned".into(),
            Preset::Fds(k) => format!("fds-k{k}"),
        }
    }

    pub fn harmonics(&self) -> Option<u32> {
        match self {
            Preset::Fds(k) => Some(*k),
            _ => None,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ods-resonant" => Ok(Preset::OdsResonant),
            "ods-detuned" => Ok(Preset::OdsDetuned),
            _ => s
                .strip_prefix("fds-k")
                .and_then(|k| k.parse::<u32>().ok())
                .filter(|&k| k >= 1)
                .map(Preset::Fds)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown preset '{s}'"))),
        }
    }
}

/// Every scenario name the command line accepts.
pub const SCENARIO_NAMES: [&str; 9] = [
    "ods-resonant",
    "ods-detuned",
    "fds-k1",
    "fds-k3",
    "fds-k5",
    "robustness-amp",
    "robustness-freq",
    "dd-off",
    "dd-on",
];

/// Dynamics used for noisy trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dynamics {
    /// Time-dependent rotating-frame Hamiltonian, integrated numerically.
    #[default]
    Full,
    /// Static Floquet Hamiltonian with the kick-operator frame change.
    Effective,
}

/// A preset with concrete physical parameters (angular units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub preset: Preset,
    pub sensor: SensorParams,
    /// Nominal Ω_s, rad·µs⁻¹.
    pub omega_s: f64,
    /// Δ for detuned presets, rad·µs⁻¹.
    pub detuning: f64,
    pub drive_amplitude: f64,
    pub drive_frequency: f64,
    pub errors: ControlErrorParams,
}

impl Scenario {
    /// Ω_s/2π = Δ/2π = 0.5 MHz, Ω_F/2π = 1 MHz, ω_F/2π = 36.54 MHz.
    pub fn new(preset: Preset) -> Self {
        Scenario {
            preset,
            sensor: SensorParams::nv_default(),
            omega_s: mhz_to_angular(0.5),
            detuning: mhz_to_angular(0.5),
            drive_amplitude: mhz_to_angular(1.0),
            drive_frequency: mhz_to_angular(36.54),
            errors: ControlErrorParams::default(),
        }
    }

    pub fn with_errors(mut self, errors: ControlErrorParams) -> Self {
        self.errors = errors;
        self
    }

    /// Δ actually applied: zero for the resonant preset.
    pub fn applied_detuning(&self) -> f64 {
        match self.preset {
            Preset::OdsResonant => 0.0,
            _ => self.detuning,
        }
    }

    /// Nominal drive (before control errors); `None` without a drive.
    pub fn drive(&self) -> Option<FloquetDriveParams> {
        self.preset.harmonics().map(|k| FloquetDriveParams {
            amplitude: self.drive_amplitude,
            frequency: self.drive_frequency,
            harmonics: k,
            ..FloquetDriveParams::standard(k)
        })
    }

    /// Drive as applied, with control errors.
    pub fn applied_drive(&self) -> Result<Option<FloquetDriveParams>> {
        self.drive().map(|d| self.errors.apply(&d)).transpose()
    }

    pub fn signal(&self, omega: f64) -> Result<SignalParams> {
        SignalParams::with_detuning(&self.sensor, omega, self.applied_detuning())
    }

    /// Signal-rotating-frame Hamiltonian (RWA) for amplitude `omega`.
    pub fn hamiltonian(&self, omega: f64) -> Result<HamiltonianSpec> {
        let signal = self.signal(omega)?;
        match self.drive() {
            None => Ok(build_ods_prime(&self.sensor, &signal)),
            Some(d) => build_fds_prime(&self.sensor, &signal, &d, &self.errors),
        }
    }

    /// Pauli vector of the effective static Hamiltonian.
    pub fn effective_bloch(&self, omega: f64) -> Result<[f64; 3]> {
        let delta = self.applied_detuning();
        Ok(match self.applied_drive()? {
            None => [0.5 * omega, 0.0, 0.5 * delta],
            Some(d) => effective_bloch(omega, delta, &d),
        })
    }

    /// Pauli vector of the static Hamiltonian recovered numerically from one
    /// drive period, to all orders in the drive strength.
    pub fn floquet_bloch(&self, omega: f64, opts: &PropagatorOptions) -> Result<[f64; 3]> {
        match self.applied_drive()? {
            None => self.effective_bloch(omega),
            Some(d) => stroboscopic_effective_bloch(&self.hamiltonian(omega)?, &d, opts),
        }
    }

    /// State after sensing time `t` from |0⟩ for signal amplitude `omega`.
    pub fn state(&self, omega: f64, t: f64, opts: &PropagatorOptions) -> Result<StateVector> {
        evolve_to(&self.hamiltonian(omega)?, &StateVector::ground(), t, opts)
    }

    /// Exact-oracle QFI about the nominal Ω_s at time `t`.
    pub fn qfi_exact(&self, t: f64, opts: &PropagatorOptions) -> Result<QfiEstimate> {
        qfi_exact(|om| self.state(om, t, opts), self.omega_s, None)
    }
}
