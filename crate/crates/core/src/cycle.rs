//! Effective rotation of one CPMG refocusing cycle.
//!
//! A cycle is free precession for `(t_E - t_p)/2`, a rectangular refocusing
//! pulse of duration `t_p`, and a second identical free-precession interval.
//! The pulse duration is fixed at `t_p = t_180` so that `omega1_norm` only
//! changes the nutation rate. Frequencies are normalized by the nominal
//! nutation frequency (`omega_1,nom * t_180 = pi`) and times by `t_E`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotation::{Rotation, Vec3, DEGENERATE_SIN_HALF};

/// Static and instantaneous-rate parameters of one refocusing cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleParams {
    /// Offset frequency over the nominal nutation frequency.
    pub omega0: f64,
    /// Nutation frequency over its nominal value.
    pub omega1: f64,
    /// Echo spacing over the nominal 180-degree pulse length.
    pub te_ratio: f64,
    /// Phase of the refocusing pulses (0 for x pulses).
    pub pulse_phase: f64,
    /// `d omega0 / d tau`, tau in units of the echo spacing.
    pub ramp0: f64,
    /// `d omega1 / d tau`.
    pub ramp1: f64,
}

impl CycleParams {
    pub fn new(omega0: f64, omega1: f64, te_ratio: f64) -> Self {
        Self { omega0, omega1, te_ratio, pulse_phase: 0.0, ramp0: 0.0, ramp1: 0.0 }
    }

    pub fn with_ramps(mut self, ramp0: f64, ramp1: f64) -> Self {
        self.ramp0 = ramp0;
        self.ramp1 = ramp1;
        self
    }

    pub fn with_phase(mut self, pulse_phase: f64) -> Self {
        self.pulse_phase = pulse_phase;
        self
    }

    pub fn with_omega0(mut self, omega0: f64) -> Self {
        self.omega0 = omega0;
        self
    }

    pub fn with_omega1(mut self, omega1: f64) -> Self {
        self.omega1 = omega1;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.omega0, self.omega1, self.te_ratio, self.pulse_phase, self.ramp0, self.ramp1];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite cycle parameter in {self:?}")));
        }
        if self.te_ratio <= 1.0 {
            return Err(Error::Input(format!("te_ratio must exceed 1, got {}", self.te_ratio)));
        }
        if self.omega1 < 0.0 {
            return Err(Error::Input(format!("omega1 must be non-negative, got {}", self.omega1)));
        }
        Ok(())
    }

    /// Refocusing pulse duration in units of the echo spacing.
    pub fn pulse_fraction(&self) -> f64 {
        1.0 / self.te_ratio
    }

    /// Free-precession angle of each of the two free intervals.
    pub fn beta1(&self) -> f64 {
        0.5 * PI * self.omega0 * (self.te_ratio - 1.0)
    }

    /// Half of the pulse nutation angle.
    pub fn beta2(&self) -> f64 {
        FRAC_PI_2 * self.omega0.hypot(self.omega1)
    }
}

/// Closed-form summary of the echo-to-echo propagator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRotation {
    pub n_perp: f64,
    pub n_z: f64,
    /// Azimuth of the rotation axis.
    pub epsilon: f64,
    /// Rotation angle in `[0, pi]`.
    pub alpha: f64,
    /// The propagator is the identity; the axis is a placeholder.
    pub degenerate_axis: bool,
}

impl EffectiveRotation {
    pub fn axis(&self) -> Vec3 {
        let (s, c) = self.epsilon.sin_cos();
        Vec3::new(self.n_perp * c, self.n_perp * s, self.n_z)
    }

    pub fn rotation(&self) -> Rotation {
        Rotation::about_unit(self.axis(), self.alpha)
    }

    /// Polar angle of the axis, `atan2(n_perp, n_z)`.
    pub fn theta(&self) -> f64 {
        self.n_perp.atan2(self.n_z)
    }

    fn from_canonical_quaternion(w: f64, v: Vec3, fallback_phase: f64) -> Self {
        let delta = v.norm();
        if delta <= DEGENERATE_SIN_HALF {
            return EffectiveRotation { n_perp: 1.0, n_z: 0.0, epsilon: 0.0, alpha: 0.0, degenerate_axis: true };
        }
        let alpha = 2.0 * delta.atan2(w);
        let n = v.scale(1.0 / delta);
        let n_perp = n.x.hypot(n.y);
        let epsilon = if n_perp > 0.0 { n.y.atan2(n.x) } else { fallback_phase };
        EffectiveRotation { n_perp, n_z: n.z, epsilon, alpha, degenerate_axis: false }
    }
}

/// Quaternion of the cycle propagator before the `[0, pi]` fold, as
/// `(cos(alpha/2), n sin(alpha/2))`. It depends smoothly on the parameters,
/// unlike the canonical axis which flips sign whenever `alpha` crosses `pi`.
pub fn cycle_quaternion(p: &CycleParams) -> (f64, Vec3) {
    let b1 = p.beta1();
    let omega = p.omega0.hypot(p.omega1);
    let b2 = FRAC_PI_2 * omega;
    let (s1, c1) = b1.sin_cos();
    let (s2, c2) = b2.sin_cos();
    // sin(beta2) / Omega, finite as Omega -> 0
    let s2_over = if omega > 1e-6 { s2 / omega } else { FRAC_PI_2 * (1.0 - b2 * b2 / 6.0) };
    let w = c1 * c2 - p.omega0 * s1 * s2_over;
    let perp = p.omega1 * s2_over;
    let z = s1 * c2 + p.omega0 * c1 * s2_over;
    let (se, ce) = p.pulse_phase.sin_cos();
    (w, Vec3::new(perp * ce, perp * se, z))
}

/// Closed-form effective rotation for static fields. Ramp terms are ignored;
/// the axis azimuth equals the pulse phase (or the phase plus `pi` after the
/// fold into `alpha <= pi`).
pub fn effective_rotation(p: &CycleParams) -> Result<EffectiveRotation> {
    p.validate()?;
    let (w, v) = cycle_quaternion(p);
    let (w, v) = if w < 0.0 { (-w, -v) } else { (w, v) };
    Ok(EffectiveRotation::from_canonical_quaternion(w, v, p.pulse_phase))
}

/// Effective rotation including the first-order azimuthal tilt produced by
/// `ramp0` during the cycle.
pub fn dynamic_rotation(p: &CycleParams) -> Result<EffectiveRotation> {
    effective_rotation(&p.with_phase(p.pulse_phase + azimuthal_correction(p)))
}

/// The three interval rotations of a static cycle, in time order.
pub fn cycle_intervals(p: &CycleParams) -> [Rotation; 3] {
    let free = Rotation::about_z(p.beta1());
    let (se, ce) = p.pulse_phase.sin_cos();
    // rates in units of omega_1,nom; pulse lasts t_180, i.e. pi / omega_1,nom
    let field = Vec3::new(p.omega1 * ce, p.omega1 * se, p.omega0);
    let pulse = Rotation::from_rotation_vector(field, PI);
    [free, pulse, free]
}

/// Brute-force route: composes the three interval rotations and extracts the
/// canonical axis-angle.
pub fn effective_rotation_oracle(p: &CycleParams) -> Result<EffectiveRotation> {
    p.validate()?;
    let [a, b, c] = cycle_intervals(p);
    let total = a.then(&b).then(&c);
    let aa = total.to_axis_angle();
    if aa.degenerate {
        return Ok(EffectiveRotation { n_perp: 1.0, n_z: 0.0, epsilon: 0.0, alpha: 0.0, degenerate_axis: true });
    }
    let n_perp = aa.axis.x.hypot(aa.axis.y);
    let epsilon = if n_perp > 0.0 { aa.axis.y.atan2(aa.axis.x) } else { p.pulse_phase };
    Ok(EffectiveRotation { n_perp, n_z: aa.axis.z, epsilon, alpha: aa.angle, degenerate_axis: false })
}

/// First-order change of the axis azimuth caused by the offset ramp during
/// one cycle: `(pi/8) (t_E/t_180) d omega0/d tau`.
pub fn azimuthal_correction(p: &CycleParams) -> f64 {
    FRAC_PI_8 * p.te_ratio * p.ramp0
}

/// Eigenvalues of the average Hamiltonian, `E_k = k alpha` in units of `hbar / t_E`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyLevels {
    pub minus: f64,
    pub zero: f64,
    pub plus: f64,
}

impl EnergyLevels {
    pub fn gap(&self) -> f64 {
        self.plus - self.zero
    }
}

pub fn energy_levels(p: &CycleParams) -> Result<EnergyLevels> {
    let er = effective_rotation(p)?;
    Ok(EnergyLevels { minus: -er.alpha, zero: 0.0, plus: er.alpha })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_agree(p: &CycleParams, tol: f64) {
        let a = effective_rotation(p).unwrap();
        let b = effective_rotation_oracle(p).unwrap();
        assert_eq!(a.degenerate_axis, b.degenerate_axis, "{p:?}");
        assert!((a.alpha - b.alpha).abs() < tol, "{p:?}: {} vs {}", a.alpha, b.alpha);
        let (na, nb) = (a.axis(), b.axis());
        // the axis sign is ambiguous exactly at alpha = pi
        let d = if (a.alpha - PI).abs() < 1e-7 { (na - nb).norm().min((na + nb).norm()) } else { (na - nb).norm() };
        assert!(d < tol, "{p:?}: {na} vs {nb}");
    }

    #[test]
    fn on_resonance_perfect_pulse() {
        for te in [2.0, 8.0, 15.0] {
            let er = effective_rotation(&CycleParams::new(0.0, 1.0, te)).unwrap();
            assert!((er.alpha - PI).abs() < 1e-12);
            assert!((er.axis() - Vec3::X).norm() < 1e-15);
        }
    }

    #[test]
    fn free_precession_limit() {
        let (w0, te) = (0.37, 8.0);
        let er = effective_rotation(&CycleParams::new(w0, 0.0, te)).unwrap();
        let expected = crate::rotation::fold_angle(w0 * PI * te);
        assert!((er.alpha - expected).abs() < 1e-12);
        assert!(er.n_perp.abs() < 1e-12);
        assert!((er.n_z.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_pi_pulse_on_resonance_is_identity() {
        let p = CycleParams::new(0.0, 2.0, 8.0);
        let er = effective_rotation(&p).unwrap();
        assert!(er.degenerate_axis);
        assert_eq!(er.alpha, 0.0);
        let [a, b, c] = cycle_intervals(&p);
        assert!(a.then(&b).then(&c).approx_eq(&Rotation::IDENTITY, 1e-12));
        assert!(effective_rotation_oracle(&p).unwrap().degenerate_axis);
    }

    #[test]
    fn closed_form_matches_composition_on_coarse_grid() {
        for te in [8.0, 8.1, 15.0] {
            for i in 0..=120 {
                for j in 1..=16 {
                    let p = CycleParams::new(-6.0 + 0.1 * i as f64, 0.25 * j as f64, te);
                    assert_agree(&p, 1e-10);
                }
            }
        }
    }

    #[test]
    fn matches_composition_at_reference_point() {
        assert_agree(&CycleParams::new(0.5, 1.0, 8.0), 1e-10);
        assert_agree(&CycleParams::new(0.5, 1.0, 8.0).with_phase(0.4), 1e-10);
    }

    #[test]
    fn parity_under_offset_reversal() {
        for w0 in [0.13, 0.9, 1.7, 2.6, 4.4] {
            let a = effective_rotation(&CycleParams::new(w0, 1.0, 15.0)).unwrap();
            let b = effective_rotation(&CycleParams::new(-w0, 1.0, 15.0)).unwrap();
            assert!((a.alpha - b.alpha).abs() < 1e-12);
            assert!((a.n_perp - b.n_perp).abs() < 1e-12);
            assert!((a.n_z + b.n_z).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_axis_and_alpha_range() {
        for i in 0..200 {
            let p = CycleParams::new(-5.0 + 0.05 * i as f64, 0.8, 8.1);
            let er = effective_rotation(&p).unwrap();
            assert!((er.n_perp.powi(2) + er.n_z.powi(2) - 1.0).abs() < 1e-10);
            assert!((0.0..=PI).contains(&er.alpha));
            assert!(er.n_perp >= 0.0);
        }
    }

    #[test]
    fn azimuthal_correction_values() {
        let base = CycleParams::new(0.0, 1.0, 8.0);
        assert_eq!(azimuthal_correction(&base), 0.0);
        let p = base.with_ramps(1e-3, 0.0);
        assert!((azimuthal_correction(&p) - PI / 8.0 * 8.0 * 1e-3).abs() < 1e-18);
        let deg = azimuthal_correction(&CycleParams::new(0.0, 1.0, 15.0).with_ramps(1e-2, 0.0)).to_degrees();
        assert!((deg - 3.4).abs() < 0.05, "{deg}");
    }

    #[test]
    fn dynamic_rotation_tilts_axis() {
        let p = CycleParams::new(0.0, 1.0, 15.0).with_ramps(1e-2, 0.0);
        let er = dynamic_rotation(&p).unwrap();
        assert!((er.epsilon - azimuthal_correction(&p)).abs() < 1e-14);
        assert!((er.alpha - PI).abs() < 1e-12);
    }

    #[test]
    fn energy_levels_zero_mode_and_gap() {
        let e = energy_levels(&CycleParams::new(0.0, 1.0, 8.1)).unwrap();
        assert_eq!(e.zero, 0.0);
        assert!((e.gap() - PI).abs() < 1e-12);
        assert_eq!(e.minus, -e.plus);
        for i in 0..50 {
            let e = energy_levels(&CycleParams::new(-3.0 + 0.13 * i as f64, 1.0, 8.1)).unwrap();
            assert_eq!(e.zero, 0.0);
        }
    }

    #[test]
    fn gap_nearly_closes_near_1_7() {
        let gap = |w0: f64| energy_levels(&CycleParams::new(w0, 1.0, 8.1)).unwrap().gap();
        let (mut best, mut at) = (f64::INFINITY, 0.0);
        for i in 0..=400 {
            let w0 = 1.4 + 0.001 * i as f64;
            if gap(w0) < best {
                best = gap(w0);
                at = w0;
            }
        }
        assert!(best < 0.2 * PI, "min gap {best} at {at}");
        assert!((at - 1.7).abs() < 0.1, "{at}");
        assert!(gap(1.4) > best && gap(1.8) > best);
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(effective_rotation(&CycleParams::new(0.0, 1.0, 1.0)).is_err());
        assert!(effective_rotation(&CycleParams::new(0.0, -1.0, 8.0)).is_err());
        assert!(effective_rotation(&CycleParams::new(f64::NAN, 1.0, 8.0)).is_err());
    }
}
