//! Photon-count readout with Poisson shot noise and the QFI-from-data
//! pipeline.
//!
//! |0⟩ is the bright state. A shot collects Poisson(µ(p0)) photons with
//! µ(p0) = N·t_det·[1 − C·(1 − p0)].

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use crate::error::{Error, Result};
use crate::linalg::{Axis, Mat2};
use crate::metrology::{qfi_theta_phi, theta_phi_from_expectations, QfiEstimate, QfiMethod};
use crate::propagator::{expectation, StateVector};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    /// counts/s
    pub count_rate: f64,
    /// µs
    pub t_det: f64,
    pub contrast: f64,
}

impl Default for ReadoutModel {
    fn default() -> Self {
        ReadoutModel::nv_default()
    }
}

impl ReadoutModel {
    pub fn new(count_rate: f64, t_det: f64, contrast: f64) -> Result<Self> {
        if !(count_rate > 0.0) || !(t_det > 0.0) {
            return Err(Error::InvalidParameter(
                "count rate and detection window must be positive".into(),
            ));
        }
        if !(contrast > 0.0 && contrast < 1.0) {
            return Err(Error::InvalidParameter(format!("contrast {contrast} outside (0, 1)")));
        }
        Ok(ReadoutModel {
            count_rate,
            t_det,
            contrast,
        })
    }

    /// N = 9.5×10⁴ s⁻¹, t_det = 0.94 µs, C = 0.13.
    pub fn nv_default() -> Self {
        ReadoutModel {
            count_rate: 9.5e4,
            t_det: 0.94,
            contrast: 0.13,
        }
    }

    /// Mean counts per shot for |0⟩.
    pub fn mu_bright(&self) -> f64 {
        self.count_rate * self.t_det * 1e-6
    }

    pub fn mu_dark(&self) -> f64 {
        self.mu_bright() * (1.0 - self.contrast)
    }

    pub fn mean_counts(&self, p0: f64) -> f64 {
        self.mu_bright() * (1.0 - self.contrast * (1.0 - p0))
    }
}

/// One readout shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub counts: u64,
    pub basis: Axis,
    /// Poisson mean the shot was drawn with.
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    /// Readout shots per grid point and measurement basis.
    pub shots: u64,
    pub repeats: u32,
    pub seed: u64,
}

impl MonteCarloConfig {
    pub fn new(shots: u64, repeats: u32, seed: u64) -> Result<Self> {
        if shots == 0 || repeats == 0 {
            return Err(Error::InvalidParameter("shots and repeats must be at least 1".into()));
        }
        Ok(MonteCarloConfig {
            shots,
            repeats,
            seed,
        })
    }
}

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

fn check_p0(p0: f64) -> Result<()> {
    if !(-1e-12..=1.0 + 1e-12).contains(&p0) {
        return Err(Error::InvalidParameter(format!("population {p0} outside [0, 1]")));
    }
    Ok(())
}

fn poisson(mean: f64) -> Option<Poisson<f64>> {
    if mean > 0.0 {
        Poisson::new(mean).ok()
    } else {
        None
    }
}

/// Draws `shots` independent readouts of a state with population `p0`.
pub fn simulate_counts(
    p0: f64,
    basis: Axis,
    model: &ReadoutModel,
    shots: u64,
    seed: u64,
) -> Result<Vec<ShotRecord>> {
    check_p0(p0)?;
    let mean = model.mean_counts(p0.clamp(0.0, 1.0));
    let dist = poisson(mean);
    let mut rng = rng::stream(seed, &[]);
    Ok((0..shots)
        .map(|_| ShotRecord {
            counts: dist.map_or(0, |d| d.sample(&mut rng) as u64),
            basis,
            mean,
        })
        .collect())
}

/// Total photons over `shots` readouts; a sum of Poisson draws is Poisson.
pub fn sample_total_counts<R: Rng + ?Sized>(p0: f64, model: &ReadoutModel, shots: u64, rng: &mut R) -> u64 {
    let mean = shots as f64 * model.mean_counts(p0.clamp(0.0, 1.0));
    poisson(mean).map_or(0, |d| d.sample(rng) as u64)
}

/// p0_hat = 1 − (1 − m̄/µ_bright)/C from a photon total; not clamped.
pub fn estimate_p0_from_total(total: u64, shots: u64, model: &ReadoutModel) -> Result<Estimate> {
    if shots == 0 {
        return Err(Error::NoShots);
    }
    let mb = model.mu_bright();
    let mean = total as f64 / shots as f64;
    Ok(Estimate {
        value: 1.0 - (1.0 - mean / mb) / model.contrast,
        stderr: (mean / shots as f64).sqrt() / (model.contrast * mb),
    })
}

pub fn estimate_p0(records: &[ShotRecord], model: &ReadoutModel) -> Result<Estimate> {
    let total = records.iter().map(|r| r.counts).sum();
    estimate_p0_from_total(total, records.len() as u64, model)
}

/// Ideal rotation mapping the ±1 eigenstates of σ_axis onto |0⟩, |1⟩.
pub fn basis_rotation(axis: Axis) -> Mat2 {
    let r = C64::new(FRAC_1_SQRT_2, 0.0);
    let i = C64::new(0.0, FRAC_1_SQRT_2);
    match axis {
        Axis::X => Mat2([[r, r], [r, -r]]),
        Axis::Y => Mat2([[r, -i], [r, i]]),
        Axis::Z => Mat2::identity(),
    }
}

/// Population of |0⟩ after the readout rotation for `axis`.
pub fn readout_population(state: &StateVector, axis: Axis) -> f64 {
    state.apply(&basis_rotation(axis)).population0()
}

fn expectation_from_total<R: Rng + ?Sized>(
    state: &StateVector,
    axis: Axis,
    model: &ReadoutModel,
    shots: u64,
    rng: &mut R,
) -> Result<Estimate> {
    let p0 = readout_population(state, axis);
    let total = sample_total_counts(p0, model, shots, rng);
    let p = estimate_p0_from_total(total, shots, model)?;
    Ok(Estimate {
        value: 2.0 * p.value - 1.0,
        stderr: 2.0 * p.stderr,
    })
}

/// Shot-noise-limited estimate of ⟨σ_axis⟩.
pub fn measure_expectation(
    state: &StateVector,
    axis: Axis,
    model: &ReadoutModel,
    shots: u64,
    seed: u64,
) -> Result<Estimate> {
    if (state.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("state is not normalized".into()));
    }
    expectation_from_total(state, axis, model, shots, &mut rng::stream(seed, &[]))
}

/// Default Ω grid: 7 points within ±2% of nominal.
pub const DEFAULT_GRID_POINTS: usize = 7;
pub const DEFAULT_GRID_HALF_WIDTH: f64 = 0.02;

/// `points` values spanning nominal·(1 ± half_width).
pub fn omega_grid(nominal: f64, half_width: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![nominal];
    }
    (0..points)
        .map(|i| nominal * (1.0 - half_width + 2.0 * half_width * i as f64 / (points - 1) as f64))
        .collect()
}

/// Sequential nearest-branch unwrapping; steps larger than π/2 are rejected.
pub fn unwrap_phases(phi: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(phi.len());
    for (i, &p) in phi.iter().enumerate() {
        if i == 0 {
            out.push(p);
            continue;
        }
        let prev = out[i - 1];
        let jump = (p - prev + PI).rem_euclid(TAU) - PI;
        if jump.abs() > PI / 2.0 {
            return Err(Error::PhaseUnwrap {
                index: i - 1,
                next: i,
                jump,
            });
        }
        out.push(prev + jump);
    }
    Ok(out)
}

/// Least-squares line; returns (mean x, mean y, slope, regression weights).
fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, Vec<f64>)> {
    let n = x.len();
    if n < 3 {
        return Err(Error::DegenerateFit(format!("{n} grid points, need at least 3")));
    }
    let xm = x.iter().sum::<f64>() / n as f64;
    let ym = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    if !(sxx > 1e-300) || sxx < 1e-24 * xm * xm {
        return Err(Error::DegenerateFit("grid has no spread".into()));
    }
    let w: Vec<f64> = x.iter().map(|v| (v - xm) / sxx).collect();
    let slope = w.iter().zip(y).map(|(w, y)| w * y).sum();
    Ok((xm, ym, slope, w))
}

/// Result of one pass of the angle-fit analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleFit {
    /// Fitted θ at the nominal Ω_s.
    pub theta: f64,
    pub dtheta: f64,
    pub dphi: f64,
    pub qfi: f64,
    /// Delta-method uncertainty of `qfi` from per-point angle variances.
    pub propagated_stderr: f64,
}

/// Fits θ(Ω) and unwrapped φ(Ω) lines and evaluates 𝓘 = 4θ'² + sin²2θ·φ'².
///
/// `variances` holds per-point variances of ⟨σx⟩, ⟨σy⟩, ⟨σz⟩; pass zeros for
/// exact data. They are mapped to angle variances at the fitted lines rather
/// than at the noisy samples, which may sit on a pole.
pub fn fit_angles(grid: &[f64], nominal: f64, theta: &[f64], phi: &[f64], variances: &[[f64; 3]]) -> Result<AngleFit> {
    let phi = unwrap_phases(phi)?;
    let (xm, tm, dtheta, w) = ols(grid, theta)?;
    let (_, pm, dphi, _) = ols(grid, &phi)?;
    let n = grid.len() as f64;
    let theta_c = tm + dtheta * (nominal - xm);
    let s2 = (2.0 * theta_c).sin();
    let c2 = (2.0 * theta_c).cos();
    let qfi = qfi_theta_phi(theta_c, dtheta, dphi).value;

    let mut var = 0.0;
    let (mut var_dth, mut var_dph) = (0.0, 0.0);
    for (i, &[vx, vy, vz]) in variances.iter().enumerate() {
        let r2 = (2.0 * (tm + dtheta * (grid[i] - xm))).sin().powi(2).max(1e-12);
        let p = pm + dphi * (grid[i] - xm);
        let vt = vx / (4.0 * r2);
        let vp = (p.cos().powi(2) * vy + p.sin().powi(2) * vz) / r2;
        let ci = 1.0 / n + (nominal - xm) * w[i];
        let g_theta = 8.0 * dtheta * w[i] + 4.0 * s2 * c2 * dphi * dphi * ci;
        let g_phi = 2.0 * s2 * s2 * dphi * w[i];
        var += g_theta * g_theta * vt + g_phi * g_phi * vp;
        var_dth += w[i] * w[i] * vt;
        var_dph += w[i] * w[i] * vp;
    }
    // Second-order Gaussian terms of the squared slopes.
    var += 32.0 * var_dth * var_dth + 2.0 * s2.powi(4) * var_dph * var_dph;
    Ok(AngleFit {
        theta: theta_c,
        dtheta,
        dphi,
        qfi,
        propagated_stderr: var.sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    /// Mean over repeats; stderr is the spread of single-repeat estimates.
    pub estimate: QfiEstimate,
    pub repeats: Vec<AngleFit>,
}

impl PipelineResult {
    /// Mean delta-method stderr over repeats.
    pub fn mean_propagated_stderr(&self) -> f64 {
        self.repeats.iter().map(|r| r.propagated_stderr).sum::<f64>() / self.repeats.len() as f64
    }

    /// Sample standard deviation of single-repeat estimates.
    pub fn empirical_std(&self) -> f64 {
        let n = self.repeats.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.repeats.iter().map(|r| r.qfi).sum::<f64>() / n as f64;
        (self.repeats.iter().map(|r| (r.qfi - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

/// Readout mode for [`qfi_pipeline`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Readout {
    /// Exact expectations (infinite shots).
    Noiseless,
    Poisson(MonteCarloConfig),
}

/// QFI from simulated tomography: measure ⟨σx,y,z⟩ on each grid point,
/// convert to (θ, φ), fit lines in Ω and evaluate the angle form of the QFI.
pub fn qfi_pipeline<F>(family: F, nominal: f64, grid: &[f64], model: &ReadoutModel, readout: Readout) -> Result<PipelineResult>
where
    F: Fn(f64) -> Result<StateVector>,
{
    let states = grid.iter().map(|&om| family(om)).collect::<Result<Vec<_>>>()?;
    match readout {
        Readout::Noiseless => {
            let (theta, phi): (Vec<f64>, Vec<f64>) = states
                .iter()
                .map(|s| {
                    let a = theta_phi_from_expectations(
                        expectation(s, Axis::X),
                        expectation(s, Axis::Y),
                        expectation(s, Axis::Z),
                    );
                    (a.param.theta, a.param.phi)
                })
                .unzip();
            let fit = fit_angles(grid, nominal, &theta, &phi, &vec![[0.0; 3]; grid.len()])?;
            Ok(PipelineResult {
                estimate: QfiEstimate::deterministic(fit.qfi, QfiMethod::ThetaPhiFit),
                repeats: vec![fit],
            })
        }
        Readout::Poisson(mc) => {
            if mc.shots == 0 || mc.repeats == 0 {
                return Err(Error::NoShots);
            }
            let mut fits = Vec::with_capacity(mc.repeats as usize);
            for r in 0..mc.repeats {
                let mut theta = Vec::with_capacity(grid.len());
                let mut phi = Vec::with_capacity(grid.len());
                let mut var = Vec::with_capacity(grid.len());
                for (i, s) in states.iter().enumerate() {
                    let mut e = [Estimate { value: 0.0, stderr: 0.0 }; 3];
                    for axis in Axis::ALL {
                        let mut g = rng::stream(mc.seed, &[r as u64, i as u64, axis.index() as u64]);
                        e[axis.index()] = expectation_from_total(s, axis, model, mc.shots, &mut g)?;
                    }
                    let [sx, sy, sz] = e;
                    let a = theta_phi_from_expectations(sx.value, sy.value, sz.value);
                    theta.push(a.param.theta);
                    phi.push(a.param.phi);
                    var.push(e.map(|v| v.stderr * v.stderr));
                }
                fits.push(fit_angles(grid, nominal, &theta, &phi, &var)?);
            }
            let n = fits.len() as f64;
            let mean = fits.iter().map(|f| f.qfi).sum::<f64>() / n;
            let mut result = PipelineResult {
                estimate: QfiEstimate {
                    value: mean,
                    method: QfiMethod::MonteCarlo,
                    stderr: 0.0,
                },
                repeats: fits,
            };
            result.estimate.stderr = if result.repeats.len() > 1 {
                result.empirical_std()
            } else {
                result.repeats[0].propagated_stderr
            };
            Ok(result)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_ods_prime, SensorParams, SignalParams};
    use crate::metrology::{qfi_exact, state_from_angles};
    use crate::propagator::{evolve_to, PropagatorOptions};
    use crate::units::mhz_to_angular;
    use proptest::prelude::*;

    #[test]
    fn readout_means() {
        let m = ReadoutModel::nv_default();
        assert!((m.mean_counts(1.0) - 0.0893).abs() < 1e-12);
        assert!((m.mean_counts(0.0) - 0.0893 * 0.87).abs() < 1e-12);
        assert!(m.mu_dark() < m.mu_bright());
    }

    #[test]
    fn vanishing_contrast_hides_population() {
        let m = ReadoutModel {
            contrast: 1e-300,
            ..ReadoutModel::nv_default()
        };
        assert_eq!(m.mean_counts(0.0), m.mean_counts(1.0));
        let a = simulate_counts(0.0, Axis::Z, &m, 100, 3).unwrap();
        let b = simulate_counts(1.0, Axis::Z, &m, 100, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bright_mean_gives_unit_population() {
        let m = ReadoutModel::nv_default();
        let shots = 1_000_000u64;
        let total = (m.mu_bright() * shots as f64).round() as u64;
        let p = estimate_p0_from_total(total, shots, &m).unwrap();
        assert!((p.value - 1.0).abs() < 1e-4);
    }

    #[test]
    fn zero_shots_rejected() {
        assert!(matches!(estimate_p0(&[], &ReadoutModel::nv_default()), Err(Error::NoShots)));
    }

    #[test]
    fn per_shot_and_total_estimators_agree_in_distribution() {
        let m = ReadoutModel::nv_default();
        let recs = simulate_counts(0.5, Axis::Z, &m, 200_000, 11).unwrap();
        let e = estimate_p0(&recs, &m).unwrap();
        assert!((e.value - 0.5).abs() < 4.0 * e.stderr);
        assert!(recs.iter().all(|r| r.basis == Axis::Z));
    }

    #[test]
    fn p0_estimator_coverage() {
        let m = ReadoutModel::nv_default();
        let shots = 1_000_000u64;
        let seeds = 400;
        let mut covered = 0;
        for s in 0..seeds {
            let total = sample_total_counts(0.5, &m, shots, &mut rng::stream(s, &[]));
            let e = estimate_p0_from_total(total, shots, &m).unwrap();
            if (e.value - 0.5).abs() < 3.0 * e.stderr {
                covered += 1;
            }
        }
        assert!(covered as f64 >= 0.99 * seeds as f64, "{covered}/{seeds}");
    }

    #[test]
    fn estimator_consistency() {
        let m = ReadoutModel::nv_default();
        let mut errs = Vec::new();
        for &shots in &[1e4 as u64, 1e6 as u64, 1e8 as u64] {
            let mut sq = 0.0;
            for s in 0..50 {
                let total = sample_total_counts(0.3, &m, shots, &mut rng::stream(s, &[shots]));
                sq += (estimate_p0_from_total(total, shots, &m).unwrap().value - 0.3).powi(2);
            }
            errs.push((sq / 50.0).sqrt());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert!(errs[2] < 0.01);
    }

    #[test]
    fn basis_rotations_map_eigenstates_to_bright() {
        assert!((readout_population(&StateVector::ground(), Axis::Z) - 1.0).abs() < 1e-15);
        assert!((readout_population(&StateVector::plus(), Axis::X) - 1.0).abs() < 1e-15);
        assert!((readout_population(&StateVector::plus_i(), Axis::Y) - 1.0).abs() < 1e-15);
        assert!(readout_population(&StateVector::minus(), Axis::X).abs() < 1e-15);
    }

    #[test]
    fn expectation_large_shot_limit() {
        let m = ReadoutModel::nv_default();
        let e = measure_expectation(&StateVector::ground(), Axis::Z, &m, 1e10 as u64, 1).unwrap();
        assert!((e.value - 1.0).abs() < 5e-3);
        let e = measure_expectation(&StateVector::plus(), Axis::X, &m, 1e10 as u64, 2).unwrap();
        assert!((e.value - 1.0).abs() < 5e-3);
    }

    #[test]
    fn expectation_stderr_scaling() {
        let m = ReadoutModel::nv_default();
        let st = StateVector::plus();
        let s: Vec<f64> = [1e3, 1e4, 1e5]
            .iter()
            .map(|&n| measure_expectation(&st, Axis::Z, &m, n as u64, 5).unwrap().stderr)
            .collect();
        for w in s.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 10f64.sqrt()).abs() < 0.3, "{ratio}");
        }
    }

    #[test]
    fn grid_and_unwrap() {
        let g = omega_grid(2.0, 0.05, 7);
        assert_eq!(g.len(), 7);
        assert!((g[0] - 1.9).abs() < 1e-15 && (g[6] - 2.1).abs() < 1e-15 && (g[3] - 2.0).abs() < 1e-15);
        let u = unwrap_phases(&[3.0, -3.0, -2.6]).unwrap();
        assert!((u[1] - (TAU - 3.0)).abs() < 1e-12);
        assert!((u[2] - (TAU - 2.6)).abs() < 1e-12);
        assert!(matches!(unwrap_phases(&[0.0, 2.0]), Err(Error::PhaseUnwrap { index: 0, next: 1, .. })));
    }

    #[test]
    fn degenerate_grid_rejected() {
        let fam = |_: f64| Ok(StateVector::plus());
        let m = ReadoutModel::nv_default();
        assert!(matches!(qfi_pipeline(fam, 1.0, &[1.0, 1.1], &m, Readout::Noiseless), Err(Error::DegenerateFit(_))));
        assert!(matches!(qfi_pipeline(fam, 1.0, &[1.0, 1.0, 1.0], &m, Readout::Noiseless), Err(Error::DegenerateFit(_))));
    }

    fn ods_family(delta: f64, t: f64) -> impl Fn(f64) -> Result<StateVector> {
        move |om| {
            let s = SensorParams::nv_default();
            let spec = build_ods_prime(&s, &SignalParams::with_detuning(&s, om, delta)?);
            evolve_to(&spec, &StateVector::ground(), t, &PropagatorOptions::default())
        }
    }

    #[test]
    fn noiseless_resonant_pipeline_is_heisenberg() {
        let t = 3.8;
        let om = mhz_to_angular(0.5);
        let r = qfi_pipeline(ods_family(0.0, t), om, &omega_grid(om, 0.05, 7), &ReadoutModel::nv_default(), Readout::Noiseless).unwrap();
        assert!((r.estimate.value / (t * t) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn noiseless_pipeline_matches_exact_off_resonance() {
        let om = mhz_to_angular(0.5);
        for &t in &[1.0, 2.5, 4.0] {
            let fam = ods_family(om, t);
            let exact = qfi_exact(&fam, om, None).unwrap().value;
            let p = qfi_pipeline(&fam, om, &omega_grid(om, DEFAULT_GRID_HALF_WIDTH, DEFAULT_GRID_POINTS), &ReadoutModel::nv_default(), Readout::Noiseless)
                .unwrap()
                .estimate
                .value;
            assert!((p / exact - 1.0).abs() < 0.01, "t={t}: {p} vs {exact}");
        }
    }

    #[test]
    fn independent_family_has_zero_qfi() {
        let fam = |_: f64| Ok(state_from_angles(0.6, 0.3));
        let m = ReadoutModel::nv_default();
        let r = qfi_pipeline(fam, 1.0, &omega_grid(1.0, 0.05, 7), &m, Readout::Noiseless).unwrap();
        assert!(r.estimate.value.abs() < 1e-20);
        let mc = MonteCarloConfig::new(1e12 as u64, 3, 9).unwrap();
        let r = qfi_pipeline(fam, 1.0, &omega_grid(1.0, 0.05, 7), &m, Readout::Poisson(mc)).unwrap();
        assert!(r.estimate.value < 1e-3, "{}", r.estimate.value);
    }

    #[test]
    fn pipeline_is_deterministic() {
        let om = mhz_to_angular(0.5);
        let mc = MonteCarloConfig::new(100_000, 4, 42).unwrap();
        let m = ReadoutModel::nv_default();
        let g = omega_grid(om, 0.05, 7);
        let a = qfi_pipeline(ods_family(0.0, 3.8), om, &g, &m, Readout::Poisson(mc)).unwrap();
        let b = qfi_pipeline(ods_family(0.0, 3.8), om, &g, &m, Readout::Poisson(mc)).unwrap();
        assert_eq!(a, b);
        let c = qfi_pipeline(ods_family(0.0, 3.8), om, &g, &m, Readout::Poisson(MonteCarloConfig { seed: 43, ..mc })).unwrap();
        assert_ne!(a, c);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn unwrap_recovers_smooth_phase(start in -10.0f64..10.0, step in -1.5f64..1.5, n in 2usize..20) {
            let truth: Vec<f64> = (0..n).map(|i| start + step * i as f64).collect();
            let wrapped: Vec<f64> = truth.iter().map(|p| (p + PI).rem_euclid(TAU) - PI).collect();
            let u = unwrap_phases(&wrapped).unwrap();
            let offset = u[0] - truth[0];
            for (a, b) in u.iter().zip(&truth) {
                prop_assert!((a - b - offset).abs() < 1e-9);
            }
        }

        #[test]
        fn fitted_lines_recover_slopes(a in 0.2f64..1.3, b in -2.0f64..2.0, p in -3.0f64..3.0, q in -8.0f64..8.0) {
            let grid = omega_grid(1.0, 0.05, 7);
            let theta: Vec<f64> = grid.iter().map(|x| a + b * (x - 1.0)).collect();
            let phi: Vec<f64> = grid.iter().map(|x| p + q * (x - 1.0)).map(|v| (v + PI).rem_euclid(TAU) - PI).collect();
            let f = fit_angles(&grid, 1.0, &theta, &phi, &vec![[0.0; 3]; 7]).unwrap();
            prop_assert!((f.dtheta - b).abs() < 1e-9);
            prop_assert!((f.dphi - q).abs() < 1e-9);
            prop_assert!((f.theta - a).abs() < 1e-9);
        }
    }
}
