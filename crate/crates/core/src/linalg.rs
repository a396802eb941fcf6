//! Dense 2×2 complex matrices and the Pauli algebra.
//!
//! Everything in this crate lives in a two-dimensional Hilbert space, so a
//! fixed-size matrix with closed-form exponentials is both faster and more
//! accurate than a general dense solver.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    pub fn matrix(self) -> Mat2 {
        match self {
            Axis::X => Mat2::sigma_x(),
            Axis::Y => Mat2::sigma_y(),
            Axis::Z => Mat2::sigma_z(),
        }
    }
}

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub const fn zero() -> Self {
        Mat2::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn identity() -> Self {
        Mat2::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn sigma_x() -> Self {
        Mat2::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn sigma_y() -> Self {
        Mat2::new(ZERO, C64::new(0.0, -1.0), I, ZERO)
    }

    pub const fn sigma_z() -> Self {
        Mat2::new(ONE, ZERO, ZERO, C64::new(-1.0, 0.0))
    }

    /// σ₊ = σx + iσy (no ½ factor).
    pub fn sigma_plus() -> Self {
        Mat2::sigma_x() + Mat2::sigma_y().scale(I)
    }

    /// σ₋ = σx − iσy (no ½ factor).
    pub fn sigma_minus() -> Self {
        Mat2::sigma_x() - Mat2::sigma_y().scale(I)
    }

    /// Real combination hx·σx + hy·σy + hz·σz.
    pub fn from_bloch(h: [f64; 3]) -> Self {
        let [hx, hy, hz] = h;
        Mat2::new(
            C64::new(hz, 0.0),
            C64::new(hx, -hy),
            C64::new(hx, hy),
            C64::new(-hz, 0.0),
        )
    }

    /// Pauli coefficients (Re part) of the traceless component:
    /// tr(σ_a M)/2 for a = x, y, z.
    pub fn bloch(&self) -> [f64; 3] {
        let m = &self.0;
        let x = (m[0][1] + m[1][0]) * 0.5;
        let y = (m[1][0] - m[0][1]) * (-0.5 * I);
        let z = (m[0][0] - m[1][1]) * 0.5;
        [x.re, y.re, z.re]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn commutator(&self, other: &Mat2) -> Mat2 {
        *self * *other - *other * *self
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// max |M − M†|; zero for Hermitian matrices.
    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.dagger()).max_abs()
    }

    /// Spectral (operator 2-) norm: largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let g = self.dagger() * *self;
        let a = g.0[0][0].re;
        let d = g.0[1][1].re;
        let b = g.0[0][1].norm();
        let half_tr = 0.5 * (a + d);
        let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (half_tr + disc).max(0.0).sqrt()
    }

    /// Exponential of an anti-Hermitian-generated rotation: returns e^{−i·H·t}
    /// for a Hermitian `self`.
    pub fn exp_neg_i(&self, t: f64) -> Mat2 {
        let a0 = 0.5 * self.trace().re;
        let phase = C64::from_polar(1.0, -a0 * t);
        su2_exp(self.bloch(), t).scale(phase)
    }

    /// Hermitian generator H with e^{−i·H·t} = U (traceless part, principal
    /// branch with rotation angle in [0, π]). Only the Pauli vector is returned;
    /// the global phase is discarded.
    pub fn log_unitary_bloch(&self, t: f64) -> [f64; 3] {
        // Strip the global phase to land in SU(2).
        let chi = 0.5 * self.det().arg();
        let mut v = self.scale(C64::from_polar(1.0, -chi));
        if v.trace().re < 0.0 {
            v = -v;
        }
        // v = cos(a)·1 − i sin(a)·n·σ
        let c = (0.5 * v.trace().re).clamp(-1.0, 1.0);
        let gen = (v - v.dagger()).scale(0.5 * I); // = sin(a) n·σ
        let s_vec = gen.bloch();
        let s = (s_vec[0].powi(2) + s_vec[1].powi(2) + s_vec[2].powi(2)).sqrt();
        if s < 1e-300 {
            return [0.0; 3];
        }
        let a = s.atan2(c);
        let k = a / (s * t);
        [s_vec[0] * k, s_vec[1] * k, s_vec[2] * k]
    }
}

/// e^{−i t (h·σ)} in closed form.
pub fn su2_exp(h: [f64; 3], t: f64) -> Mat2 {
    let [hx, hy, hz] = h;
    let n = (hx * hx + hy * hy + hz * hz).sqrt();
    let theta = n * t;
    let c = theta.cos();
    // sin(n t)/n, with the n → 0 limit t
    let s = if n > 0.0 { theta.sin() / n } else { t };
    Mat2::new(
        C64::new(c, -s * hz),
        C64::new(-s * hy, -s * hx),
        C64::new(s * hy, -s * hx),
        C64::new(c, s * hz),
    )
}

/// Applies e^{−i t (h·σ)} to a state without forming the matrix.
#[inline]
pub fn su2_apply(h: [f64; 3], t: f64, v: [C64; 2]) -> [C64; 2] {
    let [hx, hy, hz] = h;
    let n = (hx * hx + hy * hy + hz * hz).sqrt();
    let theta = n * t;
    let (sn, c) = theta.sin_cos();
    let s = if n > 0.0 { sn / n } else { t };
    let m00 = C64::new(c, -s * hz);
    let m01 = C64::new(-s * hy, -s * hx);
    let m10 = C64::new(s * hy, -s * hx);
    let m11 = C64::new(c, s * hz);
    [m00 * v[0] + m01 * v[1], m10 * v[0] + m11 * v[1]]
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(a[0][0] - b[0][0], a[0][1] - b[0][1], a[1][0] - b[1][0], a[1][1] - b[1][1])
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale_re(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}
