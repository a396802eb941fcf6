//! Sensor, signal and drive parameters; lab- and rotating-frame Hamiltonians;
//! the first-order kick operator and effective Hamiltonian of the periodically
//! driven sensor.
//!
//! Conventions: angular frequencies in rad·µs⁻¹, times in µs, ħ = 1.
//! Ladder operators are unnormalized, σ± = σx ± iσy, so that
//! [σ₋, σ₊] = −4σz.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Axis, Mat2};
use crate::units;

/// NV sensor parameters. The transition frequency is ω₀ = D − γₑ·B₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorParams {
    /// Zero-field splitting D, rad·µs⁻¹.
    pub zero_field_splitting: f64,
    /// Gyromagnetic ratio γₑ, rad·µs⁻¹·G⁻¹.
    pub gamma_e: f64,
    /// Static bias field B₀, G.
    pub b0: f64,
}

impl SensorParams {
    pub fn new(zero_field_splitting: f64, gamma_e: f64, b0: f64) -> Result<Self> {
        let s = SensorParams {
            zero_field_splitting,
            gamma_e,
            b0,
        };
        if !(s.omega_0() > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "transition frequency ω₀ = D − γₑB₀ = {} must be positive",
                s.omega_0()
            )));
        }
        Ok(s)
    }

    /// D/2π = 2870 MHz, γₑ/2π = 2.8 MHz/G, B₀ = 500 G, giving ω₀/2π = 1470 MHz.
    pub fn nv_default() -> Self {
        SensorParams {
            zero_field_splitting: units::mhz_to_angular(units::ZERO_FIELD_SPLITTING_MHZ),
            gamma_e: units::mhz_to_angular(units::GAMMA_E_MHZ_PER_G),
            b0: 500.0,
        }
    }

    pub fn omega_0(&self) -> f64 {
        self.zero_field_splitting - self.gamma_e * self.b0
    }

    /// γₑ in cyclic Hz per nT.
    pub fn gamma_e_hz_per_nt(&self) -> f64 {
        units::angular_to_mhz(self.gamma_e) * 1e6 / 1e5
    }
}

impl Default for SensorParams {
    fn default() -> Self {
        Self::nv_default()
    }
}

/// Signal microwave: Rabi amplitude Ωₛ and carrier ωₛ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalParams {
    pub amplitude: f64,
    pub frequency: f64,
}

impl SignalParams {
    pub fn new(amplitude: f64, frequency: f64) -> Result<Self> {
        if !(amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "signal Rabi amplitude must be nonnegative, got {amplitude}"
            )));
        }
        if !(frequency > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "signal carrier frequency must be positive, got {frequency}"
            )));
        }
        Ok(SignalParams {
            amplitude,
            frequency,
        })
    }

    /// Signal with carrier ωₛ = ω₀ + Δ.
    pub fn with_detuning(sensor: &SensorParams, amplitude: f64, detuning: f64) -> Result<Self> {
        Self::new(amplitude, sensor.omega_0() + detuning)
    }

    /// Δ = ωₛ − ω₀.
    pub fn detuning(&self, sensor: &SensorParams) -> f64 {
        self.frequency - sensor.omega_0()
    }
}

/// Multi-harmonic periodic control drive (Ω_F, ω_F, k).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetDriveParams {
    /// Ω_F, rad·µs⁻¹.
    pub amplitude: f64,
    /// ω_F, rad·µs⁻¹.
    pub frequency: f64,
    /// Number of harmonics k ≥ 1.
    pub harmonics: u32,
    /// Required ratio ω_F / max(Ω_F, Ωₛ, |Δ|) for the effective description.
    pub validity_factor: f64,
}

/// Outcome of the high-frequency validity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Validity {
    /// ω_F / max(Ω_F, Ωₛ, |Δ|).
    pub ratio: f64,
    pub required: f64,
    pub satisfied: bool,
}

impl FloquetDriveParams {
    pub const DEFAULT_VALIDITY_FACTOR: f64 = 10.0;

    pub fn new(amplitude: f64, frequency: f64, harmonics: u32) -> Result<Self> {
        if !(frequency > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "drive frequency ω_F must be positive, got {frequency}"
            )));
        }
        if harmonics < 1 {
            return Err(Error::InvalidParameter("harmonic count k must be ≥ 1".into()));
        }
        if !(amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "drive amplitude Ω_F must be nonnegative, got {amplitude}"
            )));
        }
        Ok(FloquetDriveParams {
            amplitude,
            frequency,
            harmonics,
            validity_factor: Self::DEFAULT_VALIDITY_FACTOR,
        })
    }

    /// Ω_F/2π = 1 MHz, ω_F/2π = 36.54 MHz with `k` harmonics.
    pub fn standard(harmonics: u32) -> Self {
        FloquetDriveParams {
            amplitude: units::mhz_to_angular(1.0),
            frequency: units::mhz_to_angular(36.54),
            harmonics,
            validity_factor: Self::DEFAULT_VALIDITY_FACTOR,
        }
    }

    pub fn with_validity_factor(mut self, factor: f64) -> Self {
        self.validity_factor = factor;
        self
    }

    /// Drive period T = 2π/ω_F.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.frequency
    }

    /// Σ_{l=1}^{k} 1/l.
    pub fn harmonic_sum(&self) -> f64 {
        (1..=self.harmonics).map(|l| 1.0 / l as f64).sum()
    }

    pub fn validity(&self, signal_amplitude: f64, detuning: f64) -> Validity {
        let scale = self.amplitude.max(signal_amplitude).max(detuning.abs());
        let ratio = if scale > 0.0 {
            self.frequency / scale
        } else {
            f64::INFINITY
        };
        Validity {
            ratio,
            required: self.validity_factor,
            satisfied: ratio >= self.validity_factor,
        }
    }
}

/// Additive control errors εΩ_F and δω_F, both rad·µs⁻¹.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlErrorParams {
    pub amp_error: f64,
    pub freq_error: f64,
}

impl ControlErrorParams {
    pub fn amplitude(amp_error: f64) -> Self {
        ControlErrorParams {
            amp_error,
            freq_error: 0.0,
        }
    }

    pub fn frequency(freq_error: f64) -> Self {
        ControlErrorParams {
            amp_error: 0.0,
            freq_error,
        }
    }

    /// Drive with Ω_F → Ω_F + εΩ_F and ω_F → ω_F + δω_F.
    pub fn apply(&self, drive: &FloquetDriveParams) -> Result<FloquetDriveParams> {
        let amplitude = drive.amplitude + self.amp_error;
        if amplitude < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "perturbed drive amplitude Ω_F + εΩ_F = {amplitude} is negative"
            )));
        }
        let frequency = drive.frequency + self.freq_error;
        if !(frequency > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "perturbed drive frequency ω_F + δω_F = {frequency} is not positive"
            )));
        }
        Ok(FloquetDriveParams {
            amplitude,
            frequency,
            ..*drive
        })
    }
}

/// Time dependence of a single Pauli coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Envelope {
    Constant(f64),
    /// amplitude · cos(frequency·t + phase)
    Cosine {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
}

impl Envelope {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant(c) => c,
            Envelope::Cosine {
                amplitude,
                frequency,
                phase,
            } => amplitude * (frequency * t + phase).cos(),
        }
    }

    pub fn frequency(&self) -> f64 {
        match *self {
            Envelope::Constant(_) => 0.0,
            Envelope::Cosine { frequency, .. } => frequency.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub axis: Axis,
    pub envelope: Envelope,
}

impl PauliTerm {
    pub fn constant(axis: Axis, c: f64) -> Self {
        PauliTerm {
            axis,
            envelope: Envelope::Constant(c),
        }
    }

    pub fn cosine(axis: Axis, amplitude: f64, frequency: f64, phase: f64) -> Self {
        PauliTerm {
            axis,
            envelope: Envelope::Cosine {
                amplitude,
                frequency,
                phase,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    Lab,
    /// Frame of U_s = exp(−iωₛtσz/2).
    SignalRotating,
    /// Frame of U_F = exp(iK(t)).
    FloquetRotating,
}

impl Frame {
    pub fn name(self) -> &'static str {
        match self {
            Frame::Lab => "lab",
            Frame::SignalRotating => "signal-rotating",
            Frame::FloquetRotating => "floquet-rotating",
        }
    }
}

/// Parameter sets a spec was built from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SpecMetadata {
    pub sensor: Option<SensorParams>,
    pub signal: Option<SignalParams>,
    pub drive: Option<FloquetDriveParams>,
    pub errors: Option<ControlErrorParams>,
    pub rwa: Option<bool>,
}

/// A frame-tagged sum of Pauli terms with constant or sinusoidal envelopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub frame: Frame,
    pub terms: Vec<PauliTerm>,
    pub metadata: SpecMetadata,
}

impl HamiltonianSpec {
    pub fn new(frame: Frame, terms: Vec<PauliTerm>) -> Self {
        HamiltonianSpec {
            frame,
            terms,
            metadata: SpecMetadata::default(),
        }
    }

    pub fn zero(frame: Frame) -> Self {
        Self::new(frame, Vec::new())
    }

    /// Pauli vector (hx, hy, hz) of H(t) = h·σ.
    #[inline]
    pub fn coefficients(&self, t: f64) -> [f64; 3] {
        let mut h = [0.0; 3];
        for term in &self.terms {
            h[term.axis.index()] += term.envelope.eval(t);
        }
        h
    }

    pub fn matrix(&self, t: f64) -> Mat2 {
        Mat2::from_bloch(self.coefficients(t))
    }

    /// Highest angular frequency among the envelopes (0 for static specs).
    pub fn max_frequency(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.envelope.frequency())
            .fold(0.0, f64::max)
    }

    pub fn is_static(&self) -> bool {
        self.terms
            .iter()
            .all(|t| matches!(t.envelope, Envelope::Constant(_)) || t.envelope.frequency() == 0.0)
    }

    /// Sum of absolute envelope amplitudes per axis: a bound on ‖H(t)‖ per axis.
    pub fn amplitude_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| match t.envelope {
                Envelope::Constant(c) => c.abs(),
                Envelope::Cosine { amplitude, .. } => amplitude.abs(),
            })
            .sum()
    }

    /// Merges constant terms per axis, folds zero-frequency cosines into
    /// constants, normalizes negative frequencies and drops vanishing terms.
    pub fn simplified(&self) -> Self {
        let mut constants = [0.0f64; 3];
        let mut terms = Vec::new();
        for term in &self.terms {
            match term.envelope {
                Envelope::Constant(c) => constants[term.axis.index()] += c,
                Envelope::Cosine {
                    amplitude,
                    frequency,
                    phase,
                } => {
                    if amplitude == 0.0 {
                        continue;
                    }
                    if frequency == 0.0 {
                        constants[term.axis.index()] += amplitude * phase.cos();
                    } else if frequency < 0.0 {
                        terms.push(PauliTerm::cosine(term.axis, amplitude, -frequency, -phase));
                    } else {
                        terms.push(*term);
                    }
                }
            }
        }
        let mut out: Vec<PauliTerm> = Axis::ALL
            .iter()
            .filter(|a| constants[a.index()] != 0.0)
            .map(|&a| PauliTerm::constant(a, constants[a.index()]))
            .collect();
        out.extend(terms);
        HamiltonianSpec {
            frame: self.frame,
            terms: out,
            metadata: self.metadata,
        }
    }

    /// Constant coefficient on an axis (sum of its constant terms).
    pub fn constant_coefficient(&self, axis: Axis) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.axis == axis)
            .filter_map(|t| match t.envelope {
                Envelope::Constant(c) => Some(c),
                _ => None,
            })
            .sum()
    }

    /// Returns a copy with an extra term appended.
    pub fn with_term(&self, term: PauliTerm) -> Self {
        let mut s = self.clone();
        s.terms.push(term);
        s
    }
}

/// ℋ_ODS = −ω₀σz/2 + Ωₛcos(ωₛt)σx in the lab frame.
pub fn build_lab_ods(sensor: &SensorParams, signal: &SignalParams) -> HamiltonianSpec {
    let mut terms = vec![PauliTerm::constant(Axis::Z, -0.5 * sensor.omega_0())];
    if signal.amplitude != 0.0 {
        terms.push(PauliTerm::cosine(Axis::X, signal.amplitude, signal.frequency, 0.0));
    }
    HamiltonianSpec {
        frame: Frame::Lab,
        terms,
        metadata: SpecMetadata {
            sensor: Some(*sensor),
            signal: Some(*signal),
            ..Default::default()
        },
    }
}

/// Lab-frame ODS Hamiltonian plus the control drive
/// 4Ω_F Σ_{l=1}^{k} cos[(ωₛ − lω_F)t] σx, with control errors applied.
pub fn build_lab_fds(
    sensor: &SensorParams,
    signal: &SignalParams,
    drive: &FloquetDriveParams,
    errors: &ControlErrorParams,
) -> Result<HamiltonianSpec> {
    let perturbed = errors.apply(drive)?;
    let mut spec = build_lab_ods(sensor, signal);
    if perturbed.amplitude != 0.0 {
        for l in 1..=perturbed.harmonics {
            spec.terms.push(PauliTerm::cosine(
                Axis::X,
                4.0 * perturbed.amplitude,
                signal.frequency - l as f64 * perturbed.frequency,
                0.0,
            ));
        }
    }
    spec.metadata.drive = Some(*drive);
    spec.metadata.errors = Some(*errors);
    Ok(spec)
}

/// Transforms a lab-frame spec into the frame of U_s = exp(−iωₛtσz/2):
/// ℋ′ = U_s ℋ U_s† + (ωₛ/2)σz.
///
/// Every transverse term at lab frequency ν splits into a difference
/// component at ν − ωₛ and a sum component at ν + ωₛ. With `apply_rwa` the sum
/// components are dropped; constant transverse lab fields (both components at
/// ±ωₛ) are dropped as well.
pub fn to_signal_rotating(
    spec: &HamiltonianSpec,
    signal: &SignalParams,
    apply_rwa: bool,
) -> Result<HamiltonianSpec> {
    if spec.frame != Frame::Lab {
        return Err(Error::WrongFrame {
            expected: Frame::Lab.name(),
            found: spec.frame.name(),
        });
    }
    let ws = signal.frequency;
    let mut terms = vec![PauliTerm::constant(Axis::Z, 0.5 * ws)];
    for term in &spec.terms {
        let (amp, nu, phi) = match term.envelope {
            Envelope::Constant(c) => (c, 0.0, 0.0),
            Envelope::Cosine {
                amplitude,
                frequency,
                phase,
            } => {
                if frequency < 0.0 {
                    (amplitude, -frequency, -phase)
                } else {
                    (amplitude, frequency, phase)
                }
            }
        };
        let half = 0.5 * amp;
        let keep_difference = !apply_rwa || nu != 0.0;
        match term.axis {
            Axis::Z => terms.push(*term),
            Axis::X => {
                // A cos(νt+φ)[σx cos ωₛt + σy sin ωₛt]
                if keep_difference {
                    terms.push(PauliTerm::cosine(Axis::X, half, nu - ws, phi));
                    terms.push(PauliTerm::cosine(Axis::Y, half, nu - ws, phi + FRAC_PI_2));
                }
                if !apply_rwa {
                    terms.push(PauliTerm::cosine(Axis::X, half, nu + ws, phi));
                    terms.push(PauliTerm::cosine(Axis::Y, half, nu + ws, phi - FRAC_PI_2));
                }
            }
            Axis::Y => {
                // A cos(νt+φ)[σy cos ωₛt − σx sin ωₛt]
                if keep_difference {
                    terms.push(PauliTerm::cosine(Axis::Y, half, nu - ws, phi));
                    terms.push(PauliTerm::cosine(Axis::X, half, nu - ws, phi - FRAC_PI_2));
                }
                if !apply_rwa {
                    terms.push(PauliTerm::cosine(Axis::Y, half, nu + ws, phi));
                    terms.push(PauliTerm::cosine(Axis::X, half, nu + ws, phi + FRAC_PI_2));
                }
            }
        }
    }
    let mut out = HamiltonianSpec {
        frame: Frame::SignalRotating,
        terms,
        metadata: spec.metadata,
    }
    .simplified();
    out.metadata.rwa = Some(apply_rwa);
    Ok(out)
}

/// Rotating-frame ODS Hamiltonian (Δ/2)σz + (Ωₛ/2)σx.
pub fn build_ods_prime(sensor: &SensorParams, signal: &SignalParams) -> HamiltonianSpec {
    to_signal_rotating(&build_lab_ods(sensor, signal), signal, true)
        .expect("lab spec is always accepted")
}

/// Rotating-frame FDS Hamiltonian
/// (Δ/2)σz + (Ωₛ/2)σx + 2Ω_F Σ_{l=1}^{k}[cos(lω_F t)σx + sin(lω_F t)σy],
/// with control errors applied to the drive.
pub fn build_fds_prime(
    sensor: &SensorParams,
    signal: &SignalParams,
    drive: &FloquetDriveParams,
    errors: &ControlErrorParams,
) -> Result<HamiltonianSpec> {
    let lab = build_lab_fds(sensor, signal, drive, errors)?;
    to_signal_rotating(&lab, signal, true)
}

/// First-order kick operator
/// K(t) = (1/iω_F) Σ_{l=1}^{k} (1/l)(Ω_F σ₋ e^{ilω_F t} − Ω_F σ₊ e^{−ilω_F t}).
///
/// The result is Hermitian, so U_F = e^{iK} is unitary, and T-periodic.
pub fn kick_operator(drive: &FloquetDriveParams, t: f64) -> Mat2 {
    let prefactor = C64::new(0.0, -1.0 / drive.frequency); // 1/(iω_F)
    let sm = Mat2::sigma_minus();
    let sp = Mat2::sigma_plus();
    let mut acc = Mat2::zero();
    for l in 1..=drive.harmonics {
        let lf = l as f64;
        let ph = C64::from_polar(1.0, lf * drive.frequency * t);
        let term = sm.scale(ph * drive.amplitude) - sp.scale(ph.conj() * drive.amplitude);
        acc = acc + term.scale_re(1.0 / lf);
    }
    acc.scale(prefactor)
}

/// Quasi-energy shift Δ_F = 8 Σ_{l=1}^{k} Ω_F² / (l ω_F).
pub fn quasi_energy_shift(drive: &FloquetDriveParams) -> f64 {
    8.0 * drive.amplitude * drive.amplitude * drive.harmonic_sum() / drive.frequency
}

/// Pauli vector of the first-order effective Hamiltonian
/// (Ωₛ/2)σx + (Δ/2 − (4/ω_F) Σ Ω_F²/l)σz.
pub fn effective_bloch(signal_amplitude: f64, detuning: f64, drive: &FloquetDriveParams) -> [f64; 3] {
    [
        0.5 * signal_amplitude,
        0.0,
        0.5 * (detuning - quasi_energy_shift(drive)),
    ]
}

/// First-order time-independent effective Hamiltonian in the Floquet frame.
pub fn effective_hamiltonian(
    sensor: &SensorParams,
    signal: &SignalParams,
    drive: &FloquetDriveParams,
) -> Mat2 {
    Mat2::from_bloch(effective_bloch(signal.amplitude, signal.detuning(sensor), drive))
}

/// The effective Hamiltonian as a static spec tagged with the Floquet frame.
pub fn effective_spec(
    sensor: &SensorParams,
    signal: &SignalParams,
    drive: &FloquetDriveParams,
) -> HamiltonianSpec {
    let [hx, _, hz] = effective_bloch(signal.amplitude, signal.detuning(sensor), drive);
    HamiltonianSpec {
        frame: Frame::FloquetRotating,
        terms: vec![PauliTerm::constant(Axis::Z, hz), PauliTerm::constant(Axis::X, hx)],
        metadata: SpecMetadata {
            sensor: Some(*sensor),
            signal: Some(*signal),
            drive: Some(*drive),
            ..Default::default()
        },
    }
}
