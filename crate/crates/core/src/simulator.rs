//! Direct piecewise-rotation simulation of a CPMG sequence.
//!
//! Time `tau` runs in echo spacings from the centre of the excitation pulse.
//! Cycle `k` spans `[k-1, k]`: free precession, a refocusing pulse centred at
//! `k - 1/2`, free precession. Echoes are sampled at integer `tau`.
//! Relaxation is not modelled.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::cycle::{CycleParams, EffectiveRotation};
use crate::error::{Error, Result};
use crate::profile::FieldProfile;
use crate::rotation::{Rotation, Vec3};

/// Norm tolerance for recorded echoes.
pub const ECHO_NORM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceTiming {
    /// `t_E / t_180`.
    pub te_ratio: f64,
    /// `t_90 / t_180`.
    #[serde(default = "default_t90")]
    pub t90_ratio: f64,
    /// Number of refocusing cycles.
    pub echo_count: usize,
    #[serde(default = "default_excitation_phase")]
    pub excitation_phase: f64,
    #[serde(default)]
    pub refocusing_phase: f64,
}

fn default_t90() -> f64 {
    0.5
}

fn default_excitation_phase() -> f64 {
    FRAC_PI_2
}

impl SequenceTiming {
    pub fn new(te_ratio: f64, echo_count: usize) -> Self {
        SequenceTiming { te_ratio, t90_ratio: default_t90(), echo_count, excitation_phase: default_excitation_phase(), refocusing_phase: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.te_ratio.is_finite() && self.te_ratio > 1.0) {
            return Err(Error::config("timing.te_ratio", format!("must be a finite number above 1, got {}", self.te_ratio)));
        }
        if self.echo_count == 0 {
            return Err(Error::config("timing.echo_count", "must be at least 1"));
        }
        if !(self.t90_ratio.is_finite() && self.t90_ratio >= 0.0) {
            return Err(Error::config("timing.t90_ratio", "must be finite and non-negative"));
        }
        if !self.excitation_phase.is_finite() || !self.refocusing_phase.is_finite() {
            return Err(Error::config("timing", "pulse phases must be finite"));
        }
        Ok(())
    }

    /// Pulse length in echo spacings.
    pub fn pulse_length(&self) -> f64 {
        1.0 / self.te_ratio
    }

    /// Length of each free-precession interval in echo spacings.
    pub fn free_length(&self) -> f64 {
        0.5 * (1.0 - 1.0 / self.te_ratio)
    }

    /// Cycle parameters at `tau`, with instantaneous ramps from the profile.
    pub fn cycle_params(&self, profile: &FieldProfile, tau: f64) -> CycleParams {
        CycleParams::new(profile.omega0(tau), profile.omega1(tau), self.te_ratio)
            .with_phase(self.refocusing_phase)
            .with_ramps(profile.omega0_rate(tau), profile.omega1_rate(tau))
    }
}

/// Substeps per free interval and per pulse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubstepPolicy {
    pub free: usize,
    pub pulse: usize,
}

impl Default for SubstepPolicy {
    fn default() -> Self {
        SubstepPolicy { free: 4, pulse: 8 }
    }
}

impl SubstepPolicy {
    pub fn uniform(n: usize) -> Self {
        SubstepPolicy { free: n, pulse: n }
    }

    pub fn validate(&self) -> Result<()> {
        if self.free == 0 || self.pulse == 0 {
            return Err(Error::config("substeps", "substep counts must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EchoRecord {
    pub index: usize,
    pub tau: f64,
    pub omega0: f64,
    pub m: Vec3,
}

/// Parameters that produced an echo train.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationManifest {
    pub timing: SequenceTiming,
    pub substeps: SubstepPolicy,
    pub profile: FieldProfile,
    pub code_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EchoTrain {
    /// Echo 0 is the magnetization right after excitation.
    pub records: Vec<EchoRecord>,
    /// Absent for trains built by [`static_propagate`].
    pub manifest: Option<SimulationManifest>,
}

impl EchoTrain {
    pub fn magnetizations(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.records.iter().map(|r| r.m)
    }

    pub fn last(&self) -> &EchoRecord {
        self.records.last().expect("echo train is never empty")
    }

    /// Largest `||M| - 1|` over the train.
    pub fn max_norm_error(&self) -> f64 {
        self.records.iter().map(|r| (r.m.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Excitation rotation referred to the pulse centre: the rectangular pulse
/// followed by free precession backwards over half its length.
pub fn excitation_rotation(profile: &FieldProfile, timing: &SequenceTiming) -> Rotation {
    let w0 = profile.omega0(0.0);
    let w1 = profile.omega1(0.0);
    let (s, c) = timing.excitation_phase.sin_cos();
    let duration = PI * timing.t90_ratio;
    let pulse = Rotation::from_rotation_vector(Vec3::new(w1 * c, w1 * s, w0), duration);
    pulse.then(&Rotation::about_z(-0.5 * w0 * duration))
}

/// Magnetization after excitation from `+z`, referred to `tau = 0`.
pub fn excite(profile: &FieldProfile, timing: &SequenceTiming) -> Vec3 {
    excitation_rotation(profile, timing).apply(Vec3::Z)
}

/// Rotation of cycle `k` (1-based). Free intervals use the offset at substep
/// midpoints; the pulse takes fourth-order Magnus steps. The nutation
/// frequency is held at its value at the pulse centre.
pub fn cycle_rotation(profile: &FieldProfile, timing: &SequenceTiming, substeps: SubstepPolicy, k: usize) -> Rotation {
    let start = (k - 1) as f64;
    let free = timing.free_length();
    let pulse = timing.pulse_length();
    // precession angle per unit tau is omega0 * pi * te_ratio
    let rate = PI * timing.te_ratio;
    // z rotations commute, so each free interval is one rotation
    let free_interval = |t0: f64| {
        let d = free / substeps.free as f64;
        let angle: f64 = (0..substeps.free).map(|i| profile.omega0(t0 + (i as f64 + 0.5) * d)).sum::<f64>() * rate * d;
        Rotation::about_z(angle)
    };
    let mut rot = free_interval(start);
    let p0 = start + free;
    let w1 = profile.omega1(p0 + 0.5 * pulse);
    let (s, c) = timing.refocusing_phase.sin_cos();
    let d = pulse / substeps.pulse as f64;
    let h = PI / substeps.pulse as f64;
    let field = |tau: f64| Vec3::new(w1 * c, w1 * s, profile.omega0(tau));
    // fourth-order Magnus step from the two Gauss nodes of each substep
    let node = d * 3f64.sqrt() / 6.0;
    for i in 0..substeps.pulse {
        let mid = p0 + (i as f64 + 0.5) * d;
        let (f1, f2) = (field(mid - node), field(mid + node));
        let generator = (f1 + f2).scale(0.5 * h) - f1.cross(f2).scale(3f64.sqrt() / 12.0 * h * h);
        rot = rot.then(&Rotation::from_rotation_vector(generator, 1.0));
    }
    rot.then(&free_interval(p0 + pulse))
}

fn code_version() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

/// Simulates excitation and `echo_count` refocusing cycles.
pub fn simulate_cpmg(profile: &FieldProfile, timing: &SequenceTiming, substeps: SubstepPolicy) -> Result<EchoTrain> {
    simulate_cpmg_from(profile, timing, substeps, excite(profile, timing))
}

/// Runs the refocusing cycles starting from `m0` at `tau = 0` instead of
/// the excited magnetization.
pub fn simulate_cpmg_from(profile: &FieldProfile, timing: &SequenceTiming, substeps: SubstepPolicy, m0: Vec3) -> Result<EchoTrain> {
    timing.validate()?;
    substeps.validate()?;
    let n = timing.echo_count;
    profile.validate(0.0, n as f64)?;
    if !m0.is_finite() || (m0.norm() - 1.0).abs() > ECHO_NORM_TOL {
        return Err(Error::Input(format!("initial magnetization {m0} is not a unit vector")));
    }
    let mut m = m0;
    let mut records = Vec::with_capacity(n + 1);
    records.push(EchoRecord { index: 0, tau: 0.0, omega0: profile.omega0(0.0), m });
    for k in 1..=n {
        m = cycle_rotation(profile, timing, substeps, k).apply(m);
        let tau = k as f64;
        records.push(EchoRecord { index: k, tau, omega0: profile.omega0(tau), m });
    }
    let worst = records.iter().map(|r| (r.m.norm() - 1.0).abs()).fold(0.0, f64::max);
    if worst > ECHO_NORM_TOL {
        return Err(Error::Numerical(format!("magnetization norm drifted by {worst:e}")));
    }
    let manifest = SimulationManifest { timing: *timing, substeps, profile: profile.clone(), code_version: code_version() };
    Ok(EchoTrain { records, manifest: Some(manifest) })
}

/// `N`-fold application of one fixed cycle rotation; `omega0` only labels
/// the records.
pub fn static_propagate(er: &EffectiveRotation, m_exc: Vec3, n: usize, omega0: f64) -> EchoTrain {
    let rot = er.rotation();
    let mut m = m_exc;
    let mut records = Vec::with_capacity(n + 1);
    records.push(EchoRecord { index: 0, tau: 0.0, omega0, m });
    for k in 1..=n {
        m = rot.apply(m);
        records.push(EchoRecord { index: k, tau: k as f64, omega0, m });
    }
    EchoTrain { records, manifest: None }
}
