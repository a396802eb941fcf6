//! Unitary time evolution of two-level states.
//!
//! Time-dependent Hamiltonians are integrated with a fourth-order
//! commutator-free Magnus scheme: each substep is a product of two exact SU(2)
//! exponentials, so every substep is unitary to machine precision. Substep
//! counts start from a frequency-resolving guess and are doubled until two
//! successive refinements agree within the requested tolerance.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{kick_operator, FloquetDriveParams, HamiltonianSpec};
use crate::linalg::{su2_apply, su2_exp, Axis, Mat2};

/// Normalized two-level state a0|0⟩ + a1|1⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub a0: C64,
    pub a1: C64,
}

impl StateVector {
    pub const NORM_TOLERANCE: f64 = 1e-12;

    /// Normalizes the given amplitudes.
    pub fn new(a0: C64, a1: C64) -> Result<Self> {
        let n = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParameter("state amplitudes vanish".into()));
        }
        Ok(StateVector {
            a0: a0 / n,
            a1: a1 / n,
        })
    }

    /// |0⟩, the polarized initial state.
    pub fn ground() -> Self {
        StateVector {
            a0: C64::new(1.0, 0.0),
            a1: C64::new(0.0, 0.0),
        }
    }

    pub fn excited() -> Self {
        StateVector {
            a0: C64::new(0.0, 0.0),
            a1: C64::new(1.0, 0.0),
        }
    }

    /// |+⟩ = (|0⟩ + |1⟩)/√2.
    pub fn plus() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        StateVector {
            a0: C64::new(r, 0.0),
            a1: C64::new(r, 0.0),
        }
    }

    /// |−⟩ = (|0⟩ − |1⟩)/√2.
    pub fn minus() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        StateVector {
            a0: C64::new(r, 0.0),
            a1: C64::new(-r, 0.0),
        }
    }

    /// (|0⟩ + i|1⟩)/√2.
    pub fn plus_i() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        StateVector {
            a0: C64::new(r, 0.0),
            a1: C64::new(0.0, r),
        }
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        [self.a0, self.a1]
    }

    pub fn from_amplitudes(a: [C64; 2]) -> Self {
        StateVector { a0: a[0], a1: a[1] }
    }

    pub fn norm(&self) -> f64 {
        (self.a0.norm_sqr() + self.a1.norm_sqr()).sqrt()
    }

    /// P0 = |a0|².
    pub fn population0(&self) -> f64 {
        self.a0.norm_sqr()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.a0.conj() * other.a0 + self.a1.conj() * other.a1
    }

    pub fn apply(&self, m: &Mat2) -> StateVector {
        StateVector::from_amplitudes(m.apply(self.amplitudes()))
    }

    /// Euclidean distance between amplitude vectors.
    pub fn distance(&self, other: &StateVector) -> f64 {
        ((self.a0 - other.a0).norm_sqr() + (self.a1 - other.a1).norm_sqr()).sqrt()
    }

    /// Bloch vector (⟨σx⟩, ⟨σy⟩, ⟨σz⟩).
    pub fn bloch(&self) -> [f64; 3] {
        let c = self.a0.conj() * self.a1;
        [
            2.0 * c.re,
            2.0 * c.im,
            self.a0.norm_sqr() - self.a1.norm_sqr(),
        ]
    }
}

/// Pauli expectation value ⟨σ_axis⟩.
pub fn expectation(state: &StateVector, axis: Axis) -> f64 {
    state.bloch()[axis.index()]
}

/// Anything that supplies a Pauli vector h(t) with H(t) = h(t)·σ.
pub trait TimeDependent {
    fn coefficients(&self, t: f64) -> [f64; 3];
    /// Highest angular frequency present; sets the initial substep count.
    fn max_frequency(&self) -> f64;
    fn is_static(&self) -> bool;
}

impl TimeDependent for HamiltonianSpec {
    #[inline]
    fn coefficients(&self, t: f64) -> [f64; 3] {
        HamiltonianSpec::coefficients(self, t)
    }

    fn max_frequency(&self) -> f64 {
        HamiltonianSpec::max_frequency(self)
    }

    fn is_static(&self) -> bool {
        HamiltonianSpec::is_static(self)
    }
}

/// A Hamiltonian with an extra constant σz term (δ/2)σz.
#[derive(Debug, Clone, Copy)]
pub struct WithDetuning<'a, H: ?Sized> {
    pub inner: &'a H,
    pub detuning: f64,
}

impl<H: TimeDependent + ?Sized> TimeDependent for WithDetuning<'_, H> {
    #[inline]
    fn coefficients(&self, t: f64) -> [f64; 3] {
        let mut h = self.inner.coefficients(t);
        h[2] += 0.5 * self.detuning;
        h
    }

    fn max_frequency(&self) -> f64 {
        self.inner.max_frequency()
    }

    fn is_static(&self) -> bool {
        self.inner.is_static()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorOptions {
    /// Accepted amplitude discrepancy between successive refinements, per
    /// output interval.
    pub rel_tol: f64,
    /// Largest substep, µs.
    pub max_step: f64,
    /// Minimum substeps per period of the fastest frequency.
    pub steps_per_period: f64,
    /// Refinement doublings allowed before reporting step underflow.
    pub max_doublings: u32,
    /// When false, the initial substep count is used without refinement.
    pub adaptive: bool,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        PropagatorOptions {
            rel_tol: 1e-10,
            max_step: 0.25,
            steps_per_period: 40.0,
            max_doublings: 14,
            adaptive: true,
        }
    }
}

impl PropagatorOptions {
    /// Single pass at the frequency-resolving substep count.
    pub fn fixed(steps_per_period: f64) -> Self {
        PropagatorOptions {
            steps_per_period,
            adaptive: false,
            ..Default::default()
        }
    }

    pub fn with_tolerance(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    fn initial_substeps(&self, h: &(impl TimeDependent + ?Sized), span: f64) -> usize {
        let by_step = (span / self.max_step).ceil();
        let by_freq = (span * h.max_frequency() * self.steps_per_period / std::f64::consts::TAU).ceil();
        by_step.max(by_freq).max(1.0) as usize
    }
}

/// Time grid with the evolved states.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// P0 = |a0(t)|² per grid point.
    pub populations: Vec<f64>,
    /// Substeps used to reach each grid point from the previous one.
    pub substeps: Vec<usize>,
}

impl EvolutionResult {
    pub fn last(&self) -> Option<&StateVector> {
        self.states.last()
    }
}

// Gauss–Legendre nodes and the fourth-order commutator-free weights.
const SQRT3: f64 = 1.732_050_807_568_877_2;
const C1: f64 = 0.5 - SQRT3 / 6.0;
const C2: f64 = 0.5 + SQRT3 / 6.0;
const A1: f64 = (3.0 - 2.0 * SQRT3) / 12.0;
const A2: f64 = (3.0 + 2.0 * SQRT3) / 12.0;

#[inline]
fn cf4_generators(h: &(impl TimeDependent + ?Sized), t: f64, dt: f64) -> ([f64; 3], [f64; 3]) {
    let h1 = h.coefficients(t + C1 * dt);
    let h2 = h.coefficients(t + C2 * dt);
    let first = [
        A2 * h1[0] + A1 * h2[0],
        A2 * h1[1] + A1 * h2[1],
        A2 * h1[2] + A1 * h2[2],
    ];
    let second = [
        A1 * h1[0] + A2 * h2[0],
        A1 * h1[1] + A2 * h2[1],
        A1 * h1[2] + A2 * h2[2],
    ];
    (first, second)
}

fn march_state(
    h: &(impl TimeDependent + ?Sized),
    psi: [C64; 2],
    t0: f64,
    t1: f64,
    n: usize,
) -> [C64; 2] {
    let dt = (t1 - t0) / n as f64;
    let mut v = psi;
    for i in 0..n {
        let t = t0 + i as f64 * dt;
        let (g1, g2) = cf4_generators(h, t, dt);
        v = su2_apply(g1, dt, v);
        v = su2_apply(g2, dt, v);
    }
    v
}

fn march_unitary(h: &(impl TimeDependent + ?Sized), t0: f64, t1: f64, n: usize) -> Mat2 {
    let dt = (t1 - t0) / n as f64;
    let mut u = Mat2::identity();
    for i in 0..n {
        let t = t0 + i as f64 * dt;
        let (g1, g2) = cf4_generators(h, t, dt);
        u = su2_exp(g2, dt) * (su2_exp(g1, dt) * u);
    }
    u
}

fn mat_distance(a: &Mat2, b: &Mat2) -> f64 {
    (*a - *b).max_abs()
}

/// Refines the substep count until successive results agree.
fn refine<T>(
    opts: &PropagatorOptions,
    n0: usize,
    t0: f64,
    t1: f64,
    run: impl Fn(usize) -> T,
    distance: impl Fn(&T, &T) -> f64,
) -> Result<(T, usize)> {
    let coarse = run(n0);
    if !opts.adaptive {
        return Ok((coarse, n0));
    }
    let mut n = n0;
    let mut coarse = coarse;
    for _ in 0..opts.max_doublings {
        let fine = run(2 * n);
        let err = distance(&coarse, &fine);
        if !err.is_finite() {
            return Err(Error::StepUnderflow {
                t_start: t0,
                t_end: t1,
                substeps: 2 * n,
                error: err,
            });
        }
        if err <= opts.rel_tol {
            return Ok((fine, 2 * n));
        }
        n *= 2;
        coarse = fine;
    }
    Err(Error::StepUnderflow {
        t_start: t0,
        t_end: t1,
        substeps: n,
        error: f64::NAN,
    })
}

/// Evolves `psi` from `t0` to `t1`; returns the state and the substep count.
pub fn evolve_interval(
    h: &(impl TimeDependent + ?Sized),
    psi: &StateVector,
    t0: f64,
    t1: f64,
    opts: &PropagatorOptions,
) -> Result<(StateVector, usize)> {
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((*psi, 0));
    }
    if h.is_static() {
        let v = su2_apply(h.coefficients(t0), span, psi.amplitudes());
        return Ok((StateVector::from_amplitudes(v), 1));
    }
    let n0 = opts.initial_substeps(h, span.abs());
    let (v, n) = refine(
        opts,
        n0,
        t0,
        t1,
        |n| march_state(h, psi.amplitudes(), t0, t1, n),
        |a, b| ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sqrt(),
    )?;
    Ok((StateVector::from_amplitudes(v), n))
}

/// Time-ordered propagator U(t1, t0).
pub fn propagator(
    h: &(impl TimeDependent + ?Sized),
    t0: f64,
    t1: f64,
    opts: &PropagatorOptions,
) -> Result<Mat2> {
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(Mat2::identity());
    }
    if h.is_static() {
        return Ok(su2_exp(h.coefficients(t0), span));
    }
    let n0 = opts.initial_substeps(h, span.abs());
    refine(opts, n0, t0, t1, |n| march_unitary(h, t0, t1, n), mat_distance).map(|(u, _)| u)
}

/// Evolves `psi0` (given at t = 0) through a sorted, nonnegative time grid.
pub fn evolve(
    h: &(impl TimeDependent + ?Sized),
    psi0: &StateVector,
    times: &[f64],
    opts: &PropagatorOptions,
) -> Result<EvolutionResult> {
    if (psi0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "initial state is not normalized (norm {})",
            psi0.norm()
        )));
    }
    let mut prev = 0.0;
    for &t in times {
        if !(t >= prev) {
            return Err(Error::InvalidParameter(
                "time grid must be nonnegative and sorted".into(),
            ));
        }
        prev = t;
    }
    let mut states = Vec::with_capacity(times.len());
    let mut substeps = Vec::with_capacity(times.len());
    let mut psi = *psi0;
    let mut t_prev = 0.0;
    for &t in times {
        let (next, n) = evolve_interval(h, &psi, t_prev, t, opts)?;
        psi = next;
        t_prev = t;
        states.push(psi);
        substeps.push(n);
    }
    Ok(EvolutionResult {
        times: times.to_vec(),
        populations: states.iter().map(StateVector::population0).collect(),
        states,
        substeps,
    })
}

/// Final state after evolving `psi0` from 0 to `t`.
pub fn evolve_to(
    h: &(impl TimeDependent + ?Sized),
    psi0: &StateVector,
    t: f64,
    opts: &PropagatorOptions,
) -> Result<StateVector> {
    evolve_interval(h, psi0, 0.0, t, opts).map(|(s, _)| s)
}

/// Closed-form Rabi population
/// P0(t) = 1 − Ωₛ²/(Ωₛ²+Δ²)·sin²(√(Ωₛ²+Δ²)·t/2).
pub fn rabi_population(omega_s: f64, detuning: f64, t: f64) -> f64 {
    let gen2 = omega_s * omega_s + detuning * detuning;
    if gen2 == 0.0 {
        return 1.0;
    }
    let s = (0.5 * gen2.sqrt() * t).sin();
    1.0 - omega_s * omega_s / gen2 * s * s
}

/// ‖U_full(t) − e^{−iK(t)} e^{−iH̃t} e^{iK(0)}‖ in the spectral norm.
pub fn micromotion_error(
    spec: &HamiltonianSpec,
    drive: &FloquetDriveParams,
    effective: &Mat2,
    t: f64,
    opts: &PropagatorOptions,
) -> Result<f64> {
    let full = propagator(spec, 0.0, t, opts)?;
    let approx = kick_operator(drive, t).exp_neg_i(1.0)
        * effective.exp_neg_i(t)
        * kick_operator(drive, 0.0).exp_neg_i(-1.0);
    Ok((full - approx).spectral_norm())
}

/// Effective Hamiltonian recovered from one period of exact propagation.
///
/// With U(T) = e^{−iH_F T} the one-period propagator, the first-order kick is
/// undone, H̃ ≈ e^{iK(0)} H_F e^{−iK(0)}; the Pauli vector of the result is
/// returned.
pub fn stroboscopic_effective_bloch(
    spec: &HamiltonianSpec,
    drive: &FloquetDriveParams,
    opts: &PropagatorOptions,
) -> Result<[f64; 3]> {
    let period = drive.period();
    let u = propagator(spec, 0.0, period, opts)?;
    let floquet = Mat2::from_bloch(u.log_unitary_bloch(period));
    let kick = kick_operator(drive, 0.0);
    let into = kick.exp_neg_i(-1.0);
    let out = kick.exp_neg_i(1.0);
    Ok((into * floquet * out).bloch())
}
