//! Decaying-cosine fit y = a + b·e^{−t/T₂}·cos(ωt + ϕ).

use nalgebra::{Matrix3, Matrix5, Vector3, Vector5};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// µs. When `t2_lower_bound` is set this is the grid span.
    pub t2: f64,
    pub t2_lower_bound: bool,
    pub amplitude: f64,
    /// rad·µs⁻¹
    pub frequency: f64,
    pub phase: f64,
    pub offset: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    pub iterations: usize,
}

const MAX_ITERATIONS: usize = 500;

fn model(p: &Vector5<f64>, t: f64) -> f64 {
    p[0] + p[1] * (-p[2] * t).exp() * (p[3] * t + p[4]).cos()
}

fn cost(p: &Vector5<f64>, t: &[f64], y: &[f64]) -> f64 {
    t.iter().zip(y).map(|(&t, &y)| (y - model(p, t)).powi(2)).sum()
}

/// Dominant angular frequency of uniformly sampled data (zero-padded FFT
/// with parabolic peak interpolation).
fn fft_peak(dt: f64, y: &[f64]) -> f64 {
    let n = (y.len() * 8).next_power_of_two();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut buf: Vec<Complex<f64>> = y.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    buf.resize(n, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mag: Vec<f64> = buf[..n / 2 + 1].iter().map(|c| c.norm()).collect();
    let (k, _) = mag
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &m)| if m > acc.1 { (i, m) } else { acc });
    let shift = if k > 0 && k < mag.len() - 1 {
        let (l, c, r) = (mag[k - 1], mag[k], mag[k + 1]);
        let den = l - 2.0 * c + r;
        if den != 0.0 { 0.5 * (l - r) / den } else { 0.0 }
    } else {
        0.0
    };
    TAU * (k as f64 + shift) / (n as f64 * dt)
}

/// Decay rate from a log-linear regression of windowed envelope maxima.
fn envelope_rate(t: &[f64], y: &[f64], offset: f64, omega: f64) -> Option<f64> {
    let span = t[t.len() - 1] - t[0];
    let window = if omega > 0.0 { (TAU / omega).max(span / 64.0) } else { span / 8.0 };
    let mut pts = Vec::new();
    let mut start = 0;
    while start < t.len() {
        let mut end = start;
        let mut best = (t[start], 0.0f64);
        while end < t.len() && t[end] < t[start] + window {
            let d = (y[end] - offset).abs();
            if d > best.1 {
                best = (t[end], d);
            }
            end += 1;
        }
        if best.1 > 0.0 {
            pts.push((best.0, best.1.ln()));
        }
        start = end.max(start + 1);
    }
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

/// Linear least squares for offset and quadrature amplitudes at fixed (r, ω).
fn linear_start(t: &[f64], y: &[f64], rate: f64, omega: f64) -> Option<Vector5<f64>> {
    let mut a = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for (&t, &y) in t.iter().zip(y) {
        let e = (-rate * t).exp();
        let row = Vector3::new(1.0, e * (omega * t).cos(), e * (omega * t).sin());
        a += row * row.transpose();
        b += row * y;
    }
    let c = a.lu().solve(&b)?;
    let amp = c[1].hypot(c[2]);
    Some(Vector5::new(c[0], amp, rate, omega, (-c[2]).atan2(c[1])))
}

/// Levenberg–Marquardt fit on a uniform time grid.
pub fn fit_decaying_cosine(t: &[f64], y: &[f64]) -> Result<DecayFit> {
    if t.len() != y.len() {
        return Err(Error::InvalidParameter("time and data lengths differ".into()));
    }
    if t.len() < 8 {
        return Err(Error::DegenerateFit(format!("{} samples, need at least 8", t.len())));
    }
    let dt = t[1] - t[0];
    let span = t[t.len() - 1] - t[0];
    if !(dt > 0.0) || t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * span.max(1.0)) {
        return Err(Error::DegenerateFit("time grid must be uniform and increasing".into()));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    if y.iter().all(|v| (v - mean).abs() < 1e-14) {
        return Err(Error::DegenerateFit("data carry no oscillation".into()));
    }

    let omega0 = fft_peak(dt, y);
    let rate0 = envelope_rate(t, y, mean, omega0).unwrap_or(1.0 / span).max(0.0);
    let mut p = linear_start(t, y, rate0, omega0)
        .ok_or_else(|| Error::DegenerateFit("singular initial regression".into()))?;
    let mut c = cost(&p, t, y);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut jtj = Matrix5::zeros();
        let mut jtr = Vector5::zeros();
        for (&t, &y) in t.iter().zip(y) {
            let e = (-p[2] * t).exp();
            let (s, co) = (p[3] * t + p[4]).sin_cos();
            let j = Vector5::new(1.0, e * co, -t * p[1] * e * co, -t * p[1] * e * s, -p[1] * e * s);
            jtj += j * j.transpose();
            jtr += j * (y - model(&p, t));
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj;
            for i in 0..5 {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(step) = a.cholesky().map(|ch| ch.solve(&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let ct = cost(&trial, t, y);
            if ct.is_finite() && ct <= c {
                let rel = (c - ct) / c.max(1e-300);
                p = trial;
                c = ct;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if rel < 1e-12 || step.norm() < 1e-12 * (1.0 + p.norm()) {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            // No downhill step at any damping: stationary point.
            converged = true;
        }
        if converged {
            break;
        }
    }
    let residual = (c / t.len() as f64).sqrt();
    if !converged || !p.iter().all(|v| v.is_finite()) {
        return Err(Error::FitNonConvergence { iterations, residual });
    }

    // Canonical form: positive amplitude and frequency, phase in (−π, π].
    let (mut amp, mut omega, mut phase) = (p[1], p[3], p[4]);
    if omega < 0.0 {
        omega = -omega;
        phase = -phase;
    }
    if amp < 0.0 {
        amp = -amp;
        phase += std::f64::consts::PI;
    }
    phase = phase - TAU * ((phase + std::f64::consts::PI) / TAU).ceil() + TAU;
    let rate = p[2];
    let lower = rate * span <= 1.0;
    Ok(DecayFit {
        t2: if lower { span } else { 1.0 / rate },
        t2_lower_bound: lower,
        amplitude: amp,
        frequency: omega,
        phase,
        offset: p[0],
        residual,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn recovers_synthetic_decay() {
        let t = grid(240, 0.25);
        let y: Vec<f64> = t.iter().map(|&t| 0.5 + 0.4 * (-t / 17.9).exp() * (3.1 * t + 0.3).cos()).collect();
        let f = fit_decaying_cosine(&t, &y).unwrap();
        assert!((f.t2 - 17.9).abs() < 1e-6, "{f:?}");
        assert!((f.frequency - 3.1).abs() < 1e-8);
        assert!((f.phase - 0.3).abs() < 1e-8);
        assert!((f.offset - 0.5).abs() < 1e-9);
        assert!(!f.t2_lower_bound);
        assert!(f.residual < 1e-9);
    }

    #[test]
    fn undamped_oscillation_is_lower_bound() {
        let t = grid(200, 0.25);
        let y: Vec<f64> = t.iter().map(|&t| (0.5 * std::f64::consts::PI * t).cos().powi(2)).collect();
        let f = fit_decaying_cosine(&t, &y).unwrap();
        assert!(f.t2_lower_bound);
        assert_eq!(f.t2, t[t.len() - 1]);
    }

    #[test]
    fn flat_data_rejected() {
        let t = grid(50, 1.0);
        assert!(matches!(fit_decaying_cosine(&t, &[0.3; 50]), Err(Error::DegenerateFit(_))));
        assert!(fit_decaying_cosine(&t[..5], &[0.0, 1.0, 0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn nonuniform_grid_rejected() {
        let mut t = grid(20, 1.0);
        t[5] += 0.3;
        let y: Vec<f64> = t.iter().map(|t| t.cos()).collect();
        assert!(fit_decaying_cosine(&t, &y).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn recovers_random_parameters(
            t2 in 5.0f64..60.0, omega in 1.0f64..5.0, phase in -3.0f64..3.0,
            amp in 0.1f64..0.5, offset in 0.3f64..0.7,
        ) {
            let t = grid(400, 0.25);
            let y: Vec<f64> = t.iter().map(|&t| offset + amp * (-t / t2).exp() * (omega * t + phase).cos()).collect();
            let f = fit_decaying_cosine(&t, &y).unwrap();
            prop_assert!((f.t2 / t2 - 1.0).abs() < 1e-5, "{:?}", f);
            prop_assert!((f.frequency - omega).abs() < 1e-6);
        }
    }
}
