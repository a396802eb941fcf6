//! Quantum Fisher information, Cramér–Rao bounds and magnetic sensitivity.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};

use crate::error::{Error, Result};
use crate::propagator::StateVector;
use crate::units::{us_to_s, GAMMA_E_HZ_PER_NT};

/// |ψ⟩ = cosθ|+⟩ + sinθ e^{iφ}|−⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureStateParam {
    pub theta: f64,
    pub phi: f64,
}

impl PureStateParam {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=FRAC_PI_2).contains(&theta) {
            return Err(Error::InvalidParameter(format!("theta {theta} outside [0, π/2]")));
        }
        if !(phi > -PI && phi <= PI) {
            return Err(Error::InvalidParameter(format!("phi {phi} outside (−π, π]")));
        }
        Ok(PureStateParam { theta, phi })
    }

    pub fn state(&self) -> StateVector {
        state_from_angles(self.theta, self.phi)
    }
}

/// cosθ|+⟩ + sinθ e^{iφ}|−⟩ for arbitrary real angles.
pub fn state_from_angles(theta: f64, phi: f64) -> StateVector {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let c = C64::new(theta.cos() * r, 0.0);
    let s = C64::from_polar(theta.sin() * r, phi);
    StateVector {
        a0: c + s,
        a1: c - s,
    }
}

/// Angles recovered from Pauli expectations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleEstimate {
    pub param: PureStateParam,
    /// ⟨σy⟩ = ⟨σz⟩ = 0, so φ is undefined and reported as 0.
    pub degenerate: bool,
}

/// θ = arccos(⟨σx⟩)/2 and φ = atan2(−⟨σy⟩, ⟨σz⟩).
pub fn theta_phi_from_expectations(sx: f64, sy: f64, sz: f64) -> AngleEstimate {
    let theta = 0.5 * sx.clamp(-1.0, 1.0).acos();
    let degenerate = sy == 0.0 && sz == 0.0;
    let mut phi = if degenerate { 0.0 } else { (-sy).atan2(sz) };
    if phi <= -PI {
        phi += TAU;
    }
    AngleEstimate {
        param: PureStateParam { theta, phi },
        degenerate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QfiMethod {
    ExactFd,
    FidelityFd,
    ThetaPhiFit,
    MonteCarlo,
}

impl QfiMethod {
    pub fn name(&self) -> &'static str {
        match self {
            QfiMethod::ExactFd => "exact-fd",
            QfiMethod::FidelityFd => "fidelity-fd",
            QfiMethod::ThetaPhiFit => "theta-phi-fit",
            QfiMethod::MonteCarlo => "monte-carlo",
        }
    }
}

/// QFI with respect to Ω_s, in µs².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiEstimate {
    pub value: f64,
    pub method: QfiMethod,
    pub stderr: f64,
}

impl QfiEstimate {
    pub fn deterministic(value: f64, method: QfiMethod) -> Self {
        QfiEstimate {
            value,
            method,
            stderr: 0.0,
        }
    }
}

/// Default finite-difference step for a nominal Ω_s.
pub fn default_fd_step(omega: f64) -> f64 {
    1e-4 * omega.abs().max(TAU * 0.1)
}

const FD_AGREEMENT: f64 = 0.01;
// Smallest 1 − |⟨ψ|ψ'⟩| the fidelity form resolves after long propagations
// (accumulated round-off).
const FIDELITY_RESOLUTION: f64 = 1e-12;

/// QFI of a pure-state family Ω ↦ |ψ(Ω)⟩ by finite differences.
///
/// The state derivative uses a five-point central stencil and enters
/// 𝓘 = 4(⟨∂ψ|∂ψ⟩ − |⟨ψ|∂ψ⟩|²). The fidelity form
/// 8(1 − |⟨ψ(Ω)|ψ(Ω±h)⟩|)/h², averaged over both sides, must agree within 1%.
pub fn qfi_exact<F>(family: F, omega: f64, h: Option<f64>) -> Result<QfiEstimate>
where
    F: Fn(f64) -> Result<StateVector>,
{
    let h = h.unwrap_or_else(|| default_fd_step(omega));
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("finite-difference step {h}")));
    }
    let psi = family(omega)?;
    let p1 = family(omega + h)?;
    let m1 = family(omega - h)?;
    let p2 = family(omega + 2.0 * h)?;
    let m2 = family(omega - 2.0 * h)?;
    let d = |k: usize| {
        let a = |s: &StateVector| s.amplitudes()[k];
        (a(&m2) - a(&p2) + (a(&p1) - a(&m1)) * 8.0) / (12.0 * h)
    };
    let dpsi = StateVector { a0: d(0), a1: d(1) };
    let derivative = 4.0 * (dpsi.inner(&dpsi).re - psi.inner(&dpsi).norm_sqr());
    let fidelity = 4.0 * (2.0 - psi.inner(&p1).norm() - psi.inner(&m1).norm()) / (h * h);
    let scale = derivative.abs().max(fidelity.abs());
    let floor = 8.0 * FIDELITY_RESOLUTION / (h * h);
    if (derivative - fidelity).abs() > FD_AGREEMENT * scale + floor {
        return Err(Error::DerivativeBreakdown {
            derivative,
            fidelity,
        });
    }
    Ok(QfiEstimate::deterministic(derivative.max(0.0), QfiMethod::ExactFd))
}

/// 𝓘 = 4(∂θ/∂Ω)² + sin²(2θ)(∂φ/∂Ω)².
pub fn qfi_theta_phi(theta: f64, dtheta: f64, dphi: f64) -> QfiEstimate {
    let s = (2.0 * theta).sin();
    QfiEstimate::deterministic(4.0 * dtheta * dtheta + s * s * dphi * dphi, QfiMethod::ThetaPhiFit)
}

/// Minimum standard deviation of Ω_s: 1/√(repetitions·𝓘); +∞ for zero QFI.
pub fn cramer_rao(qfi: &QfiEstimate, repetitions: u64) -> Result<f64> {
    if repetitions == 0 {
        return Err(Error::InvalidParameter("repetitions must be at least 1".into()));
    }
    if qfi.value <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (repetitions as f64 * qfi.value).sqrt())
}

/// Readout and coherence figures entering the sensitivity formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityParams {
    pub contrast: f64,
    /// counts/s
    pub count_rate: f64,
    /// µs
    pub t_det: f64,
    /// µs
    pub t2: f64,
    /// Hz/nT
    pub gamma_e_cyclic: f64,
}

impl SensitivityParams {
    pub fn new(contrast: f64, count_rate: f64, t_det: f64, t2: f64, gamma_e_cyclic: f64) -> Result<Self> {
        if !(contrast > 0.0 && contrast < 1.0) {
            return Err(Error::InvalidParameter(format!("contrast {contrast} outside (0, 1)")));
        }
        for (name, v) in [
            ("count rate", count_rate),
            ("detection time", t_det),
            ("T2", t2),
            ("gyromagnetic ratio", gamma_e_cyclic),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(SensitivityParams {
            contrast,
            count_rate,
            t_det,
            t2,
            gamma_e_cyclic,
        })
    }

    /// C = 0.13, N = 9.5×10⁴ s⁻¹, t_det = 0.94 µs, γ = 28 Hz/nT.
    pub fn nv_default(t2: f64) -> Self {
        SensitivityParams {
            contrast: 0.13,
            count_rate: 9.5e4,
            t_det: 0.94,
            t2,
            gamma_e_cyclic: GAMMA_E_HZ_PER_NT,
        }
    }

    pub fn with_t2(self, t2: f64) -> Self {
        SensitivityParams { t2, ..self }
    }
}

/// η(t) in nT·Hz^{−1/2}, t in µs.
pub fn sensitivity(params: &SensitivityParams, t: f64) -> f64 {
    if t <= 0.0 {
        return f64::INFINITY;
    }
    let prefactor = 1.0 / (params.gamma_e_cyclic * params.contrast * params.count_rate.sqrt());
    let ts = us_to_s(t);
    prefactor * (1.0 + t / params.t_det).sqrt() / (ts * (-t / params.t2).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalSensing {
    /// µs
    pub t_opt: f64,
    pub eta_opt: f64,
    pub eta_at_t2: f64,
}

/// Minimizes η over (0, 10·T₂] by golden-section search.
pub fn optimal_sensing_time(params: &SensitivityParams) -> OptimalSensing {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |t: f64| sensitivity(params, t);
    let mut a = 1e-9 * params.t2;
    let mut b = 10.0 * params.t2;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > 1e-4 * (a + b) * 0.5 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let t_opt = 0.5 * (a + b);
    OptimalSensing {
        t_opt,
        eta_opt: f(t_opt),
        eta_at_t2: f(params.t2),
    }
}

/// Angular γ_e in rad·µs⁻¹·nT⁻¹.
fn gamma_angular(gamma_e_cyclic: f64) -> f64 {
    TAU * gamma_e_cyclic * 1e-6
}

/// B_s = √2·Ω_s/γ_e in nT, Ω_s in rad·µs⁻¹.
pub fn field_from_rabi(omega_s: f64) -> f64 {
    SQRT_2 * omega_s / gamma_angular(GAMMA_E_HZ_PER_NT)
}

/// Inverse of [`field_from_rabi`].
pub fn rabi_from_field(field_nt: f64) -> f64 {
    field_nt * gamma_angular(GAMMA_E_HZ_PER_NT) / SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{
        build_fds_prime, build_ods_prime, ControlErrorParams, FloquetDriveParams, SensorParams, SignalParams,
    };
    use crate::linalg::Axis;
    use crate::propagator::{evolve_to, expectation, PropagatorOptions};
    use crate::units::mhz_to_angular;
    use proptest::prelude::*;

    fn ods_family(delta: f64, t: f64) -> impl Fn(f64) -> Result<StateVector> {
        move |om| {
            let s = SensorParams::nv_default();
            let spec = build_ods_prime(&s, &SignalParams::with_detuning(&s, om, delta)?);
            evolve_to(&spec, &StateVector::ground(), t, &PropagatorOptions::default())
        }
    }

    #[test]
    fn resonant_qfi_is_t_squared() {
        for &t in &[0.5, 1.0, 2.0, 3.8, 4.0] {
            let q = qfi_exact(ods_family(0.0, t), mhz_to_angular(0.5), None).unwrap();
            assert!((q.value / (t * t) - 1.0).abs() < 1e-6, "t={t}: {}", q.value);
        }
    }

    #[test]
    fn constant_family_has_zero_qfi() {
        let q = qfi_exact(|_| Ok(StateVector::plus()), 1.0, None).unwrap();
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn detuned_ods_below_heisenberg() {
        let d = mhz_to_angular(0.5);
        let t = 4.0;
        let q = qfi_exact(ods_family(d, t), d, None).unwrap();
        assert!(q.value < t * t);
        assert!(q.value / (t * t) < 0.6);
    }

    #[test]
    fn noisy_family_reports_breakdown() {
        // Discontinuous in Ω: derivative and fidelity forms disagree.
        let f = |om: f64| {
            let th = if om > 1.0 { 0.3 } else { 0.0 };
            Ok(state_from_angles(0.2 + th + 0.01 * om, 0.0))
        };
        assert!(matches!(qfi_exact(f, 1.0, Some(1e-3)), Err(Error::DerivativeBreakdown { .. })));
    }

    #[test]
    fn theta_phi_examples() {
        let t = 3.0;
        assert!((qfi_theta_phi(PI / 4.0, 0.0, t).value - t * t).abs() < 1e-12);
        assert_eq!(qfi_theta_phi(0.4, 0.0, 0.0).value, 0.0);
        assert!((qfi_theta_phi(0.0, 1.5, 7.0).value - 9.0).abs() < 1e-12);
    }

    #[test]
    fn angle_extraction_examples() {
        let a = theta_phi_from_expectations(1.0, 0.0, 0.0);
        assert_eq!(a.param.theta, 0.0);
        assert!(a.degenerate);
        let b = theta_phi_from_expectations(0.0, 0.0, 1.0);
        assert!((b.param.theta - PI / 4.0).abs() < 1e-15);
        assert_eq!(b.param.phi, 0.0);
        let c = theta_phi_from_expectations(0.0, -1.0, 0.0);
        assert!((c.param.phi - PI / 2.0).abs() < 1e-15);
        // overshoot tolerated
        assert_eq!(theta_phi_from_expectations(1.02, 0.0, 0.1).param.theta, 0.0);
        let d = theta_phi_from_expectations(0.0, 0.0, -1.0);
        assert_eq!(d.param.phi, PI);
    }

    #[test]
    fn cramer_rao_examples() {
        let t = 2.0;
        let q = QfiEstimate::deterministic(t * t, QfiMethod::ExactFd);
        assert!((cramer_rao(&q, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((cramer_rao(&q, 100).unwrap() - 0.05).abs() < 1e-15);
        let zero = QfiEstimate::deterministic(0.0, QfiMethod::ExactFd);
        assert_eq!(cramer_rao(&zero, 5).unwrap(), f64::INFINITY);
        assert!(cramer_rao(&q, 0).is_err());
    }

    #[test]
    fn detuned_ods_has_worse_bound_than_fds() {
        let s = SensorParams::nv_default();
        let d = mhz_to_angular(0.5);
        let t = 4.0;
        let drive = FloquetDriveParams::standard(5);
        let fds = |om: f64| {
            let spec = build_fds_prime(&s, &SignalParams::with_detuning(&s, om, d)?, &drive, &ControlErrorParams::default())?;
            evolve_to(&spec, &StateVector::ground(), t, &PropagatorOptions::default())
        };
        let q_fds = qfi_exact(fds, d, None).unwrap();
        let q_ods = qfi_exact(ods_family(d, t), d, None).unwrap();
        assert!(cramer_rao(&q_ods, 1).unwrap() > cramer_rao(&q_fds, 1).unwrap());
    }

    #[test]
    fn sensitivity_endpoints() {
        let a = SensitivityParams::nv_default(17.9);
        let eta_a = sensitivity(&a, 17.9);
        assert!((eta_a / 602.0 - 1.0).abs() < 0.01, "{eta_a}");
        let b = SensitivityParams::nv_default(162.5);
        let eta_b = sensitivity(&b, 162.5);
        assert!((eta_b / 195.0 - 1.0).abs() < 0.015, "{eta_b}");
        assert_eq!(sensitivity(&a, 0.0), f64::INFINITY);
        assert!(sensitivity(&a, 1e-9) > 1e6);
    }

    #[test]
    fn optimum_near_half_t2() {
        let p = SensitivityParams::nv_default(17.9);
        let o = optimal_sensing_time(&p);
        assert!(o.eta_opt < o.eta_at_t2);
        // d/dt log η = 0 at the optimum
        let g = 1.0 / (2.0 * (p.t_det + o.t_opt)) + 1.0 / p.t2 - 1.0 / o.t_opt;
        assert!(g.abs() * o.t_opt < 1e-3);
        assert!(o.t_opt > 0.4 * p.t2 && o.t_opt < 0.6 * p.t2);
        let dd = optimal_sensing_time(&p.with_t2(162.5));
        assert!((dd.eta_at_t2 / 195.0 - 1.0).abs() < 0.015);
    }

    #[test]
    fn long_t2_makes_eta_decreasing() {
        let p = SensitivityParams::nv_default(1e9);
        let o = optimal_sensing_time(&p);
        assert!((o.t_opt / (0.5 * p.t2) - 1.0).abs() < 1e-3);
        let mut last = f64::INFINITY;
        for i in 1..50 {
            let e = sensitivity(&p, i as f64 * 1e3);
            assert!(e < last);
            last = e;
        }
    }

    #[test]
    fn field_conversion() {
        assert_eq!(field_from_rabi(0.0), 0.0);
        let b = field_from_rabi(TAU);
        assert!((b - SQRT_2 * 1e6 / 28.0).abs() < 1e-6);
        assert!((b - 5.05e4).abs() < 0.01e4);
        assert!((field_from_rabi(rabi_from_field(1234.5)) - 1234.5).abs() < 1e-9);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(SensitivityParams::new(1.2, 1.0, 1.0, 1.0, 28.0).is_err());
        assert!(SensitivityParams::new(0.1, 0.0, 1.0, 1.0, 28.0).is_err());
        assert!(PureStateParam::new(2.0, 0.0).is_err());
        assert!(PureStateParam::new(0.5, -PI).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn angle_form_matches_overlap_form(
            a in 0.1f64..1.4, b in -3.0f64..3.0, c in -2.0f64..2.0,
            p in -3.0f64..3.0, q in -5.0f64..5.0, r in -2.0f64..2.0,
        ) {
            let om0 = 0.7;
            let theta = move |x: f64| a + b * (x - om0) + c * (x - om0).powi(2);
            let phi = move |x: f64| p + q * (x - om0) + r * (x - om0).powi(2);
            let exact = qfi_exact(|x| Ok(state_from_angles(theta(x), phi(x))), om0, None).unwrap();
            let analytic = qfi_theta_phi(a, b, q);
            let scale = analytic.value.max(1e-3);
            prop_assert!((exact.value - analytic.value).abs() / scale < 1e-6,
                "{} vs {}", exact.value, analytic.value);
        }

        #[test]
        fn qfi_bounded_by_t_squared(
            om in 0.5f64..6.0, delta in -5.0f64..5.0, t in 0.2f64..4.0, k in 1u32..4,
        ) {
            let s = SensorParams::nv_default();
            let drive = FloquetDriveParams::standard(k);
            let fam = |x: f64| {
                let spec = build_fds_prime(&s, &SignalParams::with_detuning(&s, x, delta)?, &drive, &ControlErrorParams::default())?;
                evolve_to(&spec, &StateVector::ground(), t, &PropagatorOptions::default())
            };
            let q = qfi_exact(fam, om, None).unwrap();
            prop_assert!(q.value <= t * t * (1.0 + 1e-6));
        }

        #[test]
        fn angles_round_trip(theta in 0.01f64..(FRAC_PI_2 - 0.01), phi in -3.1f64..3.1) {
            let st = PureStateParam::new(theta, phi).unwrap().state();
            let back = theta_phi_from_expectations(
                expectation(&st, Axis::X), expectation(&st, Axis::Y), expectation(&st, Axis::Z));
            prop_assert!((back.param.theta - theta).abs() < 1e-9);
            prop_assert!((back.param.phi - phi).abs() < 1e-9);
        }

        #[test]
        fn resonant_optimality(om in 0.3f64..6.0, t in 0.1f64..5.0) {
            let q = qfi_exact(ods_family(0.0, t), om, None).unwrap();
            prop_assert!((q.value / (t * t) - 1.0).abs() < 1e-6);
        }
    }
}
