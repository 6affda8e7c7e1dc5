//! Eigenmodes of the cycle propagator and the CPMG / CP decomposition.
//!
//! The `k = 0` mode is the rotation axis itself (the CPMG mode). The `k = +1`
//! and `k = -1` modes are complex conjugates of each other and pick up the
//! phase factors `exp(-i k alpha)` per cycle (the CP modes).

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2, TAU};

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cycle::EffectiveRotation;
use crate::error::{Error, Result};
use crate::rotation::Vec3;

pub type CVec3 = [Complex64; 3];

/// Inner products smaller than this between successive eigenvectors mean the
/// sampling is too coarse for a meaningful geometric phase.
pub const ORTHOGONAL_STEP_TOL: f64 = 1e-6;

const A0_IMAG_WARN: f64 = 1e-8;

fn cdot_conj(a: &CVec3, b: &CVec3) -> Complex64 {
    // a* . b
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn real_dot_conj(m: Vec3, v: &CVec3) -> Complex64 {
    v[0].conj() * m.x + v[1].conj() * m.y + v[2].conj() * m.z
}

fn conj3(v: &CVec3) -> CVec3 {
    [v[0].conj(), v[1].conj(), v[2].conj()]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenBasis {
    pub v0: Vec3,
    pub v_plus: CVec3,
    pub v_minus: CVec3,
}

impl EigenBasis {
    /// Basis for an axis in cylindrical form `(n_perp, epsilon, n_z)`.
    pub fn from_cylindrical(n_perp: f64, n_z: f64, epsilon: f64) -> Self {
        let (se, ce) = epsilon.sin_cos();
        let i = Complex64::i();
        let pre = Complex64::new(0.0, -FRAC_1_SQRT_2);
        let v_plus = [pre * (n_z * ce - i * se), pre * (n_z * se + i * ce), pre * Complex64::new(-n_perp, 0.0)];
        EigenBasis { v0: Vec3::new(n_perp * ce, n_perp * se, n_z), v_plus, v_minus: conj3(&v_plus) }
    }

    /// Basis for an arbitrary unit axis; the azimuth defaults to 0 on the z axis.
    pub fn from_axis(axis: Vec3) -> Self {
        let n_perp = axis.x.hypot(axis.y);
        let epsilon = if n_perp > 0.0 { axis.y.atan2(axis.x) } else { 0.0 };
        Self::from_cylindrical(n_perp, axis.z, epsilon)
    }

    /// Largest deviation of `v_k . v_l* = delta_kl` over all pairs.
    pub fn orthonormality_error(&self) -> f64 {
        let v0 = [Complex64::from(self.v0.x), Complex64::from(self.v0.y), Complex64::from(self.v0.z)];
        let vs = [v0, self.v_plus, self.v_minus];
        let mut worst: f64 = 0.0;
        for (k, a) in vs.iter().enumerate() {
            for (l, b) in vs.iter().enumerate() {
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((cdot_conj(b, a) - target).norm());
            }
        }
        worst
    }
}

/// Eigenbasis of a cycle propagator. Fails on a degenerate axis; callers
/// tracking a time series should use [`AxisTracker`] which carries the
/// previous axis over instead.
pub fn eigenbasis(er: &EffectiveRotation) -> Result<EigenBasis> {
    if er.degenerate_axis {
        return Err(Error::DegenerateAxis {
            omega0: f64::NAN,
            omega1: f64::NAN,
            detail: "unity propagator has no eigenbasis; supply a carried-over axis".into(),
        });
    }
    Ok(EigenBasis::from_cylindrical(er.n_perp, er.n_z, er.epsilon))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeAmplitudes {
    pub a0: f64,
    pub a_plus: Complex64,
    /// Imaginary residue of the `k = 0` projection.
    pub a0_imag: f64,
}

impl ModeAmplitudes {
    pub fn a_minus(&self) -> Complex64 {
        self.a_plus.conj()
    }

    /// Magnitude of the CP magnetization, `sqrt(2) |a_+1|`.
    pub fn cp_magnitude(&self) -> f64 {
        SQRT_2 * self.a_plus.norm()
    }

    /// `a0^2 + |a_CP|^2`, which equals `|M|^2`.
    pub fn total_norm_sqr(&self) -> f64 {
        self.a0 * self.a0 + 2.0 * self.a_plus.norm_sqr()
    }
}

/// Projects `m` onto the eigenbasis: `a_k = M . v_k*`.
pub fn decompose(m: Vec3, b: &EigenBasis) -> ModeAmplitudes {
    let v0 = [Complex64::from(b.v0.x), Complex64::from(b.v0.y), Complex64::from(b.v0.z)];
    let a0 = real_dot_conj(m, &v0);
    if a0.im.abs() > A0_IMAG_WARN {
        warn!("CPMG amplitude has imaginary residue {:e}", a0.im);
    }
    ModeAmplitudes { a0: a0.re, a_plus: real_dot_conj(m, &b.v_plus), a0_imag: a0.im }
}

/// Full complex sum `sum_k a_k exp(-i k N alpha) v_k`; its imaginary part
/// vanishes up to rounding.
pub fn reconstruct_complex(a: &ModeAmplitudes, b: &EigenBasis, echo: f64, alpha: f64) -> CVec3 {
    let phase = Complex64::from_polar(1.0, -echo * alpha);
    let cp = a.a_plus * phase;
    let cm = a.a_minus() * phase.conj();
    let mut out = [Complex64::new(0.0, 0.0); 3];
    let v0 = b.v0.to_array();
    for i in 0..3 {
        out[i] = Complex64::from(a.a0 * v0[i]) + cp * b.v_plus[i] + cm * b.v_minus[i];
    }
    out
}

/// Magnetization at echo `echo` of a static train, `M = sum_k a_k exp(-i k N alpha) v_k`.
pub fn reconstruct(a: &ModeAmplitudes, b: &EigenBasis, echo: f64, alpha: f64) -> Vec3 {
    let c = reconstruct_complex(a, b, echo, alpha);
    Vec3::new(c[0].re, c[1].re, c[2].re)
}

/// CPMG part of `m`: its projection `(M . n) n` onto the rotation axis.
pub fn project_cpmg(m: Vec3, axis: Vec3) -> Vec3 {
    axis.scale(m.dot(axis))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricStep {
    pub gamma: f64,
    /// Successive eigenvectors were nearly orthogonal.
    pub flagged: bool,
}

/// Geometric phase increment `-Im ln(v_now* . v_next)` between the same mode
/// of two successive cycles.
pub fn geometric_phase_increment(v_now: &CVec3, v_next: &CVec3) -> GeometricStep {
    let overlap = cdot_conj(v_now, v_next);
    GeometricStep { gamma: -overlap.arg(), flagged: overlap.norm() < ORTHOGONAL_STEP_TOL }
}

/// Same as [`geometric_phase_increment`] for real (`k = 0`) vectors.
pub fn geometric_phase_increment_real(v_now: Vec3, v_next: Vec3) -> GeometricStep {
    let a = [Complex64::from(v_now.x), Complex64::from(v_now.y), Complex64::from(v_now.z)];
    let b = [Complex64::from(v_next.x), Complex64::from(v_next.y), Complex64::from(v_next.z)];
    geometric_phase_increment(&a, &b)
}

/// Cycle rotation expressed about an axis whose sign is chosen for continuity
/// with the previous sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedRotation {
    /// Canonical closed-form result (`alpha` in `[0, pi]`).
    pub canonical: EffectiveRotation,
    /// `+canonical axis` or `-canonical axis`.
    pub axis: Vec3,
    /// Rotation angle about `axis`, in `[0, 2 pi)`.
    pub angle: f64,
    /// Axis is the negated canonical axis.
    pub flipped: bool,
    /// Canonical axis was degenerate and the previous axis was carried over.
    pub carried_over: bool,
}

impl OrientedRotation {
    pub fn basis(&self) -> EigenBasis {
        EigenBasis::from_axis(self.axis)
    }

    /// Axis sign relative to the canonical axis.
    pub fn sign(&self) -> f64 {
        if self.flipped {
            -1.0
        } else {
            1.0
        }
    }
}

/// Keeps the rotation axis continuous along a time series.
///
/// The canonical fold `alpha <= pi` flips the axis whenever `alpha` passes
/// `pi`; the tracker undoes those flips so that mode amplitudes do not jump
/// sign, and records where it did so.
#[derive(Clone, Debug, Default)]
pub struct AxisTracker {
    previous: Option<Vec3>,
    samples: usize,
    flipped: bool,
    flip_events: Vec<usize>,
}

impl AxisTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts from a known orientation instead of the first canonical axis.
    pub fn with_reference(axis: Vec3) -> Self {
        AxisTracker { previous: Some(axis), ..Self::default() }
    }

    pub fn previous(&self) -> Option<Vec3> {
        self.previous
    }

    /// Sample indices at which the orientation relative to the canonical axis changed.
    pub fn flip_events(&self) -> &[usize] {
        &self.flip_events
    }

    pub fn orient(&mut self, er: &EffectiveRotation) -> Result<OrientedRotation> {
        let index = self.samples;
        self.samples += 1;
        if er.degenerate_axis {
            let axis = self.previous.ok_or_else(|| Error::DegenerateAxis {
                omega0: f64::NAN,
                omega1: f64::NAN,
                detail: "first sample of a series is a unity propagator".into(),
            })?;
            return Ok(OrientedRotation { canonical: *er, axis, angle: 0.0, flipped: false, carried_over: true });
        }
        let n = er.axis();
        let flipped = matches!(self.previous, Some(prev) if prev.dot(n) < 0.0);
        if flipped != self.flipped && index > 0 {
            self.flip_events.push(index);
        }
        let (axis, angle) = if flipped { (-n, (TAU - er.alpha) % TAU) } else { (n, er.alpha) };
        self.previous = Some(axis);
        self.flipped = flipped;
        Ok(OrientedRotation { canonical: *er, axis, angle, flipped, carried_over: false })
    }
}
