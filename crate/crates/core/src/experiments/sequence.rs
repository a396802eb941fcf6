//! Sensing sequences, dephasing noise and the trajectory engine.
//!
//! A trajectory starts in |0⟩ at the beginning of the sensing window, evolves
//! under the sensing Hamiltonian plus a piecewise-constant detuning noise
//! (δ/2)σz, and receives instantaneous π pulses. States are reported in the
//! signal rotating frame with the net pulse rotation undone before readout.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{kick_operator, FloquetDriveParams, HamiltonianSpec};
use crate::linalg::{su2_apply, Axis, Mat2};
use crate::propagator::{evolve_interval, PropagatorOptions, StateVector, WithDetuning};
use crate::rng;

/// Ideal instantaneous π rotation e^{−iπσ/2} = −iσ.
pub fn pi_pulse(axis: Axis) -> Mat2 {
    axis.matrix().scale(C64::new(0.0, -1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Segment {
    /// Optical repolarization into |0⟩, µs.
    Polarize(f64),
    /// Free delay, µs; identity on the spin.
    Wait(f64),
    /// Signal exposure under the sequence Hamiltonian, µs.
    Sense(f64),
    PiPulse(Axis),
    /// Fluorescence readout window, µs.
    Detect(f64),
}

/// Carr–Purcell decoupling: π pulses at τ, 3τ, 5τ, … of the sensing window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdConfig {
    /// Half the pulse spacing, µs.
    pub tau: f64,
    pub axis: Axis,
}

impl Default for DdConfig {
    fn default() -> Self {
        DdConfig {
            tau: 0.5,
            axis: Axis::X,
        }
    }
}

impl DdConfig {
    pub fn new(tau: f64, axis: Axis) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!("τ must be positive, got {tau}")));
        }
        Ok(DdConfig { tau, axis })
    }

    /// Pulse times strictly inside (0, t).
    pub fn pulse_times(&self, t: f64) -> Vec<f64> {
        (0..)
            .map(|j| (2 * j + 1) as f64 * self.tau)
            .take_while(|&p| p < t)
            .collect()
    }

    pub fn pulse_count(&self, t: f64) -> usize {
        self.pulse_times(t).len()
    }
}

pub const POLARIZE_US: f64 = 5.0;
pub const WAIT_US: f64 = 0.3;
pub const DETECT_US: f64 = 0.94;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub segments: Vec<Segment>,
    /// Hamiltonian acting during Sense segments; its clock starts at the
    /// beginning of the sensing window.
    pub hamiltonian: HamiltonianSpec,
}

impl PulseSequence {
    /// Polarize, Wait, Sense(t), Detect.
    pub fn rabi(hamiltonian: HamiltonianSpec, t: f64) -> Result<Self> {
        let seq = PulseSequence {
            segments: vec![
                Segment::Polarize(POLARIZE_US),
                Segment::Wait(WAIT_US),
                Segment::Sense(t),
                Segment::Detect(DETECT_US),
            ],
            hamiltonian,
        };
        seq.validate()?;
        Ok(seq)
    }

    /// Sensing window of length `t` split by Carr–Purcell π pulses.
    pub fn carr_purcell(hamiltonian: HamiltonianSpec, t: f64, dd: &DdConfig) -> Result<Self> {
        if 2.0 * dd.tau > t {
            return Err(Error::InvalidParameter(format!(
                "sensing time {t} µs is shorter than one pulse spacing 2τ = {} µs",
                2.0 * dd.tau
            )));
        }
        let mut segments = vec![Segment::Polarize(POLARIZE_US), Segment::Wait(WAIT_US)];
        let mut last = 0.0;
        for p in dd.pulse_times(t) {
            segments.push(Segment::Sense(p - last));
            segments.push(Segment::PiPulse(dd.axis));
            last = p;
        }
        segments.push(Segment::Sense(t - last));
        segments.push(Segment::Detect(DETECT_US));
        let seq = PulseSequence { segments, hamiltonian };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.segments.len();
        let detects = self.segments.iter().filter(|s| matches!(s, Segment::Detect(_))).count();
        if detects != 1 || !matches!(self.segments.last(), Some(Segment::Detect(_))) {
            return Err(Error::InvalidParameter("sequence needs exactly one Detect, at the end".into()));
        }
        let sense: Vec<usize> = (0..n).filter(|&i| matches!(self.segments[i], Segment::Sense(_))).collect();
        if let (Some(&first), Some(&last)) = (sense.first(), sense.last()) {
            for i in first..=last {
                if !matches!(self.segments[i], Segment::Sense(_) | Segment::PiPulse(_)) {
                    return Err(Error::InvalidParameter("sensing segments must be contiguous".into()));
                }
            }
            for (i, s) in self.segments.iter().enumerate() {
                if matches!(s, Segment::PiPulse(_)) && !(i > first && i < last) {
                    return Err(Error::InvalidParameter("π pulses must lie inside the sensing window".into()));
                }
            }
        } else if self.segments.iter().any(|s| matches!(s, Segment::PiPulse(_))) {
            return Err(Error::InvalidParameter("π pulses without a sensing window".into()));
        }
        for s in &self.segments {
            if let Segment::Polarize(d) | Segment::Wait(d) | Segment::Sense(d) | Segment::Detect(d) = s {
                if !(*d >= 0.0) {
                    return Err(Error::InvalidParameter(format!("negative segment duration {d}")));
                }
            }
        }
        Ok(())
    }

    pub fn sensing_time(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| if let Segment::Sense(d) = s { *d } else { 0.0 })
            .sum()
    }

    /// π pulses as (time within the sensing window, axis).
    pub fn pulses(&self) -> Vec<(f64, Axis)> {
        let mut t = 0.0;
        let mut out = Vec::new();
        for s in &self.segments {
            match s {
                Segment::Sense(d) => t += d,
                Segment::PiPulse(a) => out.push((t, *a)),
                _ => {}
            }
        }
        out
    }

    /// Readout population P0 under the given noise path, integrating the
    /// sequence Hamiltonian numerically. Polarize prepares |0⟩ and Wait is the
    /// identity, so only the sensing window evolves the spin.
    pub fn simulate(&self, noise: &NoisePath, opts: &PropagatorOptions) -> Result<f64> {
        self.validate()?;
        let stepper = FullStepper {
            spec: &self.hamiltonian,
            opts: *opts,
        };
        let pulses: Vec<(f64, Mat2)> = self.pulses().into_iter().map(|(t, a)| (t, pi_pulse(a))).collect();
        let states = walk(&stepper, noise, &pulses, &[self.sensing_time()])?;
        Ok(states[0].population0())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    #[default]
    None,
    QuasiStatic,
    OrnsteinUhlenbeck,
}

impl NoiseKind {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseKind::None => "none",
            NoiseKind::QuasiStatic => "quasi-static",
            NoiseKind::OrnsteinUhlenbeck => "ornstein-uhlenbeck",
        }
    }
}

/// Gaussian detuning noise δ(t) entering as (δ/2)σz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Standard deviation of δ, rad·µs⁻¹.
    pub sigma_z: f64,
    /// Correlation time, µs (Ornstein–Uhlenbeck only).
    pub tau_c: f64,
    pub seed: u64,
}

pub const DEFAULT_TAU_C: f64 = 50.0;

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel {
            kind: NoiseKind::None,
            sigma_z: 0.0,
            tau_c: DEFAULT_TAU_C,
            seed: 0,
        }
    }

    pub fn new(kind: NoiseKind, sigma_z: f64, tau_c: f64, seed: u64) -> Result<Self> {
        if !(sigma_z >= 0.0) {
            return Err(Error::InvalidParameter(format!("σ_z must be nonnegative, got {sigma_z}")));
        }
        if kind == NoiseKind::OrnsteinUhlenbeck && !(tau_c > 0.0) {
            return Err(Error::InvalidParameter(format!("τ_c must be positive, got {tau_c}")));
        }
        Ok(NoiseModel {
            kind,
            sigma_z,
            tau_c,
            seed,
        })
    }

    pub fn with_sigma(self, sigma_z: f64) -> Self {
        NoiseModel { sigma_z, ..self }
    }

    pub fn is_silent(&self) -> bool {
        self.kind == NoiseKind::None || self.sigma_z == 0.0
    }

    /// Unit-variance path for realization `index`; scaling by σ_z is applied
    /// separately so paths for different σ_z share random numbers.
    pub fn unit_path(&self, index: u64, dt: f64, duration: f64) -> NoisePath {
        let n = ((duration / dt).ceil() as usize).max(1);
        let mut g = rng::stream(self.seed, &[index]);
        let values = match self.kind {
            NoiseKind::None => vec![0.0; n],
            NoiseKind::QuasiStatic => vec![g.sample::<f64, _>(StandardNormal); n],
            NoiseKind::OrnsteinUhlenbeck => {
                let rho = (-dt / self.tau_c).exp();
                let kick = (1.0 - rho * rho).sqrt();
                let mut x: f64 = g.sample(StandardNormal);
                let mut v = Vec::with_capacity(n);
                for _ in 0..n {
                    v.push(x);
                    x = rho * x + kick * g.sample::<f64, _>(StandardNormal);
                }
                v
            }
        };
        NoisePath { dt, values }
    }

    pub fn path(&self, index: u64, dt: f64, duration: f64) -> NoisePath {
        let mut p = self.unit_path(index, dt, duration);
        p.scale(self.sigma_z);
        p
    }
}

/// Piecewise-constant δ(t) on [k·dt, (k+1)·dt).
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl NoisePath {
    pub fn quiet() -> Self {
        NoisePath {
            dt: f64::INFINITY,
            values: vec![0.0],
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    fn value(&self, k: usize) -> f64 {
        self.values[k.min(self.values.len() - 1)]
    }
}

/// Evolution of one trajectory in some internal representation.
pub trait Stepper {
    fn initial(&self) -> [C64; 2];
    fn advance(&self, psi: [C64; 2], t0: f64, t1: f64, delta: f64) -> Result<[C64; 2]>;
    fn pulse(&self, psi: [C64; 2], t: f64, pulse: &Mat2) -> [C64; 2];
    /// Signal-rotating-frame state.
    fn observe(&self, psi: [C64; 2], t: f64) -> StateVector;
}

/// Numerical integration of the full time-dependent Hamiltonian.
pub struct FullStepper<'a> {
    pub spec: &'a HamiltonianSpec,
    pub opts: PropagatorOptions,
}

impl Stepper for FullStepper<'_> {
    fn initial(&self) -> [C64; 2] {
        StateVector::ground().amplitudes()
    }

    fn advance(&self, psi: [C64; 2], t0: f64, t1: f64, delta: f64) -> Result<[C64; 2]> {
        let h = WithDetuning {
            inner: self.spec,
            detuning: delta,
        };
        evolve_interval(&h, &StateVector::from_amplitudes(psi), t0, t1, &self.opts).map(|(s, _)| s.amplitudes())
    }

    fn pulse(&self, psi: [C64; 2], _t: f64, pulse: &Mat2) -> [C64; 2] {
        pulse.apply(psi)
    }

    fn observe(&self, psi: [C64; 2], _t: f64) -> StateVector {
        StateVector::from_amplitudes(psi)
    }
}

/// Static effective Hamiltonian in the Floquet frame; the state is carried
/// as |ψ̃⟩ = e^{iK(t)}|ψ'⟩.
pub struct EffectiveStepper {
    pub bloch: [f64; 3],
    pub drive: Option<FloquetDriveParams>,
}

impl EffectiveStepper {
    fn into_frame(&self, t: f64) -> Mat2 {
        self.drive.map_or(Mat2::identity(), |d| kick_operator(&d, t).exp_neg_i(-1.0))
    }

    fn out_of_frame(&self, t: f64) -> Mat2 {
        self.drive.map_or(Mat2::identity(), |d| kick_operator(&d, t).exp_neg_i(1.0))
    }
}

impl Stepper for EffectiveStepper {
    fn initial(&self) -> [C64; 2] {
        self.into_frame(0.0).apply(StateVector::ground().amplitudes())
    }

    fn advance(&self, psi: [C64; 2], t0: f64, t1: f64, delta: f64) -> Result<[C64; 2]> {
        let h = [self.bloch[0], self.bloch[1], self.bloch[2] + 0.5 * delta];
        Ok(su2_apply(h, t1 - t0, psi))
    }

    fn pulse(&self, psi: [C64; 2], t: f64, pulse: &Mat2) -> [C64; 2] {
        (self.into_frame(t) * *pulse * self.out_of_frame(t)).apply(psi)
    }

    fn observe(&self, psi: [C64; 2], t: f64) -> StateVector {
        StateVector::from_amplitudes(self.out_of_frame(t).apply(psi))
    }
}

/// Runs one trajectory through sorted pulse and output times.
///
/// Pulses at times strictly before an output time are applied before it. The
/// returned states have the accumulated pulse rotation undone.
pub fn walk(
    stepper: &dyn Stepper,
    noise: &NoisePath,
    pulses: &[(f64, Mat2)],
    outputs: &[f64],
) -> Result<Vec<StateVector>> {
    let mut psi = stepper.initial();
    let mut t = 0.0;
    let mut applied = Mat2::identity();
    let mut next_pulse = 0;
    let mut out = Vec::with_capacity(outputs.len());

    let advance_to = |psi: [C64; 2], t0: f64, t1: f64| -> Result<[C64; 2]> {
        let mut psi = psi;
        let mut a = t0;
        while a < t1 {
            let k = if noise.dt.is_finite() { (a / noise.dt).floor() as usize } else { 0 };
            let edge = if noise.dt.is_finite() { (k + 1) as f64 * noise.dt } else { f64::INFINITY };
            // Guard against a boundary that rounds onto `a`.
            let (k, edge) = if edge <= a { (k + 1, (k + 2) as f64 * noise.dt) } else { (k, edge) };
            let b = edge.min(t1);
            psi = stepper.advance(psi, a, b, noise.value(k))?;
            a = b;
        }
        Ok(psi)
    };

    for &t_out in outputs {
        if t_out < t {
            return Err(Error::InvalidParameter("output times must be sorted".into()));
        }
        while next_pulse < pulses.len() && pulses[next_pulse].0 < t_out {
            let (tp, ref p) = pulses[next_pulse];
            psi = advance_to(psi, t, tp)?;
            t = tp;
            psi = stepper.pulse(psi, t, p);
            applied = *p * applied;
            next_pulse += 1;
        }
        psi = advance_to(psi, t, t_out)?;
        t = t_out;
        let state = stepper.observe(psi, t);
        out.push(state.apply(&applied.dagger()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::scenario::{Preset, Scenario};
    use crate::propagator::rabi_population;

    #[test]
    fn pi_pulse_flips_ground() {
        let s = StateVector::ground().apply(&pi_pulse(Axis::X));
        assert!(s.population0() < 1e-30);
        let back = s.apply(&pi_pulse(Axis::X));
        assert!((back.population0() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn carr_purcell_spacing() {
        let dd = DdConfig::default();
        assert_eq!(dd.pulse_times(4.0), vec![0.5, 1.5, 2.5, 3.5]);
        assert_eq!(dd.pulse_count(1.0), 1);
        let seq = PulseSequence::carr_purcell(HamiltonianSpec::zero(crate::hamiltonian::Frame::SignalRotating), 4.0, &dd).unwrap();
        let senses: Vec<f64> = seq
            .segments
            .iter()
            .filter_map(|s| if let Segment::Sense(d) = s { Some(*d) } else { None })
            .collect();
        assert_eq!(senses, vec![0.5, 1.0, 1.0, 1.0, 0.5]);
        assert_eq!(seq.sensing_time(), 4.0);
        assert!(PulseSequence::carr_purcell(seq.hamiltonian.clone(), 0.5, &dd).is_err());
    }

    #[test]
    fn sequence_validation() {
        let h = HamiltonianSpec::zero(crate::hamiltonian::Frame::SignalRotating);
        let bad = PulseSequence {
            segments: vec![Segment::Sense(1.0), Segment::Detect(1.0), Segment::Wait(1.0)],
            hamiltonian: h.clone(),
        };
        assert!(bad.validate().is_err());
        let edge_pulse = PulseSequence {
            segments: vec![Segment::PiPulse(Axis::X), Segment::Sense(1.0), Segment::Detect(1.0)],
            hamiltonian: h.clone(),
        };
        assert!(edge_pulse.validate().is_err());
        let split = PulseSequence {
            segments: vec![Segment::Sense(1.0), Segment::Wait(1.0), Segment::Sense(1.0), Segment::Detect(1.0)],
            hamiltonian: h,
        };
        assert!(split.validate().is_err());
    }

    #[test]
    fn polarize_resets_and_wait_is_identity() {
        let s = Scenario::new(Preset::OdsDetuned);
        let h = s.hamiltonian(s.omega_s).unwrap();
        let base = PulseSequence::rabi(h.clone(), 1.3).unwrap();
        let padded = PulseSequence {
            segments: vec![
                Segment::Polarize(5.0),
                Segment::Wait(123.0),
                Segment::Polarize(2.0),
                Segment::Wait(0.1),
                Segment::Sense(1.3),
                Segment::Detect(0.94),
            ],
            hamiltonian: h,
        };
        let opts = PropagatorOptions::default();
        let a = base.simulate(&NoisePath::quiet(), &opts).unwrap();
        let b = padded.simulate(&NoisePath::quiet(), &opts).unwrap();
        assert_eq!(a, b);
        assert!((a - rabi_population(s.omega_s, s.detuning, 1.3)).abs() < 1e-12);
    }

    #[test]
    fn ou_path_statistics() {
        let n = NoiseModel::new(NoiseKind::OrnsteinUhlenbeck, 2.0, 5.0, 3).unwrap();
        let mut m2 = 0.0;
        let mut lag = 0.0;
        let count = 400;
        for i in 0..count {
            let p = n.path(i, 0.5, 20.0);
            m2 += p.values[0] * p.values[0];
            lag += p.values[0] * p.values[10];
        }
        let var = m2 / count as f64;
        let corr = lag / m2;
        assert!((var / 4.0 - 1.0).abs() < 0.2, "{var}");
        assert!((corr - (-1.0f64).exp()).abs() < 0.15, "{corr}");
    }

    #[test]
    fn quasi_static_path_is_constant() {
        let n = NoiseModel::new(NoiseKind::QuasiStatic, 1.0, 1.0, 1).unwrap();
        let p = n.path(4, 0.1, 3.0);
        assert!(p.values.iter().all(|&v| v == p.values[0]));
        let u = n.with_sigma(3.0).path(4, 0.1, 3.0);
        assert_eq!(u.values[0], 3.0 * p.values[0]);
    }

    #[test]
    fn walker_matches_closed_form_without_noise() {
        let s = Scenario::new(Preset::OdsDetuned);
        let spec = s.hamiltonian(s.omega_s).unwrap();
        let stepper = FullStepper {
            spec: &spec,
            opts: PropagatorOptions::default(),
        };
        let grid: Vec<f64> = (0..20).map(|i| 0.3 * i as f64).collect();
        let states = walk(&stepper, &NoisePath::quiet(), &[], &grid).unwrap();
        for (t, st) in grid.iter().zip(&states) {
            assert!((st.population0() - rabi_population(s.omega_s, s.detuning, *t)).abs() < 1e-12);
        }
    }

    #[test]
    fn static_noise_equals_shifted_detuning() {
        let s = Scenario::new(Preset::OdsDetuned);
        let spec = s.hamiltonian(s.omega_s).unwrap();
        let stepper = FullStepper {
            spec: &spec,
            opts: PropagatorOptions::default(),
        };
        let path = NoisePath {
            dt: 0.1,
            values: vec![0.7; 40],
        };
        let st = walk(&stepper, &path, &[], &[3.3]).unwrap();
        let expected = rabi_population(s.omega_s, s.detuning + 0.7, 3.3);
        assert!((st[0].population0() - expected).abs() < 1e-12);
    }

    #[test]
    fn effective_stepper_tracks_full_dynamics() {
        let s = Scenario::new(Preset::Fds(5));
        let spec = s.hamiltonian(s.omega_s).unwrap();
        let full = FullStepper {
            spec: &spec,
            opts: PropagatorOptions::fixed(40.0),
        };
        let eff = EffectiveStepper {
            bloch: s.floquet_bloch(s.omega_s, &PropagatorOptions::default()).unwrap(),
            drive: s.drive(),
        };
        let noise = NoiseModel::new(NoiseKind::OrnsteinUhlenbeck, 0.5, 5.0, 2).unwrap().path(0, 0.05, 6.0);
        let dd = DdConfig::default();
        let pulses: Vec<(f64, Mat2)> = dd.pulse_times(6.0).into_iter().map(|t| (t, pi_pulse(Axis::X))).collect();
        let grid = [1.0, 2.5, 4.0, 6.0];
        let a = walk(&full, &noise, &pulses, &grid).unwrap();
        let b = walk(&eff, &noise, &pulses, &grid).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.population0() - y.population0()).abs() < 0.02);
        }
    }

    #[test]
    fn sequence_simulation_matches_walker() {
        let s = Scenario::new(Preset::Fds(1));
        let spec = s.hamiltonian(s.omega_s).unwrap();
        let dd = DdConfig::default();
        let opts = PropagatorOptions::default();
        let noise = NoiseModel::new(NoiseKind::QuasiStatic, 0.4, 1.0, 9).unwrap().path(1, 0.05, 3.0);
        let seq = PulseSequence::carr_purcell(spec.clone(), 3.0, &dd).unwrap();
        let p = seq.simulate(&noise, &opts).unwrap();
        let stepper = FullStepper { spec: &spec, opts };
        let pulses: Vec<(f64, Mat2)> = dd.pulse_times(3.0).into_iter().map(|t| (t, pi_pulse(Axis::X))).collect();
        let w = walk(&stepper, &noise, &pulses, &[1.0, 3.0]).unwrap();
        assert!((w[1].population0() - p).abs() < 1e-9);
    }
}
