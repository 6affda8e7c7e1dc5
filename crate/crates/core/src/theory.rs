//! Analytical predictions to set against direct simulation: adiabatic mode
//! transport, the first-order correction in `1/A`, the continuous-limit
//! integrator, and segmentation into adiabatic and non-adiabatic regions.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::adiabaticity::{adiabaticity, AxisRange};
use crate::cycle::{dynamic_rotation, CycleParams};
use crate::eigenmode::{decompose, geometric_phase_increment, geometric_phase_increment_real, AxisTracker, OrientedRotation};
use crate::error::{Error, Result};
use crate::profile::FieldProfile;
use crate::rotation::Vec3;
use crate::simulator::{excite, EchoTrain, SequenceTiming};

/// Mode amplitudes at one echo.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeRecord {
    pub cycle: usize,
    pub tau: f64,
    pub omega0: f64,
    pub a0: f64,
    pub cp_magnitude: f64,
    pub adiabaticity: f64,
    /// Accumulated `sum alpha` about the tracked axis.
    pub phase_dyn: f64,
    /// Accumulated geometric phase of the `k = +1` mode.
    pub phase_geo: f64,
    /// Accumulated geometric phase of the `k = 0` mode.
    pub phase_geo0: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeTrace {
    pub records: Vec<ModeRecord>,
    /// Echo indices at which the tracked axis changed orientation relative
    /// to the canonical one.
    pub flip_events: Vec<usize>,
}

impl ModeTrace {
    pub fn a0(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.a0).collect()
    }

    pub fn cp_magnitude(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cp_magnitude).collect()
    }

    /// Largest `|a0^2 + |a_CP|^2 - 1|`.
    pub fn max_partition_error(&self) -> f64 {
        self.records.iter().map(|r| (r.a0 * r.a0 + r.cp_magnitude * r.cp_magnitude - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Eigen-axes at every echo time, oriented for continuity.
#[derive(Clone, Debug)]
pub struct EchoAxes {
    pub params: Vec<CycleParams>,
    pub oriented: Vec<OrientedRotation>,
    pub flip_events: Vec<usize>,
}

/// Tracked eigenbases of the dynamic cycle rotation at `tau = 0..=N`.
pub fn echo_axes(profile: &FieldProfile, timing: &SequenceTiming) -> Result<EchoAxes> {
    let mut tracker = AxisTracker::new();
    let mut params = Vec::with_capacity(timing.echo_count + 1);
    let mut oriented = Vec::with_capacity(timing.echo_count + 1);
    for k in 0..=timing.echo_count {
        let p = timing.cycle_params(profile, k as f64);
        let er = dynamic_rotation(&p)?;
        oriented.push(tracker.orient(&er).map_err(|e| locate(e, &p))?);
        params.push(p);
    }
    Ok(EchoAxes { params, oriented, flip_events: tracker.flip_events().to_vec() })
}

fn locate(err: Error, p: &CycleParams) -> Error {
    match err {
        Error::DegenerateAxis { detail, .. } => Error::DegenerateAxis { omega0: p.omega0, omega1: p.omega1, detail },
        other => other,
    }
}

/// Cycle angle about `reference`: `alpha` if the canonical axis points the
/// same way, `-(alpha)` otherwise.
fn signed_angle(p: &CycleParams, reference: Vec3) -> Result<f64> {
    let er = dynamic_rotation(p)?;
    if er.degenerate_axis {
        return Ok(0.0);
    }
    Ok(if er.axis().dot(reference) < 0.0 { -er.alpha } else { er.alpha })
}

fn phase_steps(axes: &EchoAxes, profile: &FieldProfile, timing: &SequenceTiming, k: usize) -> Result<(f64, f64, f64)> {
    let (prev, next) = (&axes.oriented[k - 1], &axes.oriented[k]);
    let centre = timing.cycle_params(profile, k as f64 - 0.5);
    let alpha = signed_angle(&centre, prev.axis)?;
    let (bp, bn) = (prev.basis(), next.basis());
    let gamma = geometric_phase_increment(&bp.v_plus, &bn.v_plus).gamma;
    let gamma0 = geometric_phase_increment_real(bp.v0, bn.v0).gamma;
    Ok((alpha, gamma, gamma0))
}

/// Decomposes a simulated echo train into tracked eigenmodes.
pub fn mode_trace_from_train(train: &EchoTrain, profile: &FieldProfile, timing: &SequenceTiming) -> Result<ModeTrace> {
    let axes = echo_axes(profile, &SequenceTiming { echo_count: train.records.len() - 1, ..*timing })?;
    let mut records = Vec::with_capacity(train.records.len());
    let (mut dynamic, mut geo, mut geo0) = (0.0, 0.0, 0.0);
    for (k, rec) in train.records.iter().enumerate() {
        if k > 0 {
            let (a, g, g0) = phase_steps(&axes, profile, timing, k)?;
            dynamic += a;
            geo += g;
            geo0 += g0;
        }
        let amp = decompose(rec.m, &axes.oriented[k].basis());
        records.push(ModeRecord {
            cycle: k,
            tau: rec.tau,
            omega0: rec.omega0,
            a0: amp.a0,
            cp_magnitude: amp.cp_magnitude(),
            adiabaticity: adiabaticity(&axes.params[k])?,
            phase_dyn: dynamic,
            phase_geo: geo,
            phase_geo0: geo0,
        });
    }
    Ok(ModeTrace { records, flip_events: axes.flip_events })
}

/// Adiabatic prediction: mode amplitudes frozen at their initial
/// projections, CP modes carrying dynamic and geometric phases.
#[derive(Clone, Debug, PartialEq)]
pub struct AdiabaticPrediction {
    pub trace: ModeTrace,
    pub echoes: Vec<Vec3>,
}

pub fn adiabatic_predict(profile: &FieldProfile, timing: &SequenceTiming, m_exc: Vec3) -> Result<AdiabaticPrediction> {
    timing.validate()?;
    profile.validate(0.0, timing.echo_count as f64)?;
    let axes = echo_axes(profile, timing)?;
    let initial = decompose(m_exc, &axes.oriented[0].basis());
    let mut records = Vec::with_capacity(timing.echo_count + 1);
    let mut echoes = Vec::with_capacity(timing.echo_count + 1);
    let (mut dynamic, mut geo, mut geo0) = (0.0, 0.0, 0.0);
    for k in 0..=timing.echo_count {
        if k > 0 {
            let (a, g, g0) = phase_steps(&axes, profile, timing, k)?;
            dynamic += a;
            geo += g;
            geo0 += g0;
        }
        let b = axes.oriented[k].basis();
        let a_plus = initial.a_plus * Complex64::from_polar(1.0, geo - dynamic);
        let cp: Vec3 = Vec3::new(2.0 * (a_plus * b.v_plus[0]).re, 2.0 * (a_plus * b.v_plus[1]).re, 2.0 * (a_plus * b.v_plus[2]).re);
        echoes.push(b.v0.scale(initial.a0) + cp);
        let tau = k as f64;
        records.push(ModeRecord {
            cycle: k,
            tau,
            omega0: profile.omega0(tau),
            a0: initial.a0,
            cp_magnitude: initial.cp_magnitude(),
            adiabaticity: adiabaticity(&axes.params[k])?,
            phase_dyn: dynamic,
            phase_geo: geo,
            phase_geo0: geo0,
        });
    }
    Ok(AdiabaticPrediction { trace: ModeTrace { records, flip_events: axes.flip_events }, echoes })
}

/// Scalar first-order components from the in-plane axis magnitude, the
/// azimuthal tilt and `1/A`:
/// `Mx = (cos(de) n_perp - sin(de)/A) / sqrt(1 + 1/A^2)`,
/// `|My| = |sin(de) n_perp + cos(de)/A| / sqrt(1 + 1/A^2)`.
pub fn first_order_components(n_perp: f64, delta_eps: f64, inv_a: f64) -> (f64, f64) {
    let (s, c) = delta_eps.sin_cos();
    let norm = (1.0 + inv_a * inv_a).sqrt();
    ((c * n_perp - inv_a * s) / norm, ((s * n_perp + inv_a * c) / norm).abs())
}

/// First-order spin-locked magnetization at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstOrder {
    pub tau: f64,
    pub omega0: f64,
    /// Signed in-plane component of the tracked axis along its azimuth.
    pub n_perp: f64,
    pub delta_eps: f64,
    /// Signed `1/A` entering the first-order formula.
    pub inv_a: f64,
    pub m: Vec3,
    pub mx: f64,
    pub my_abs: f64,
}

/// Step in `tau` used to differentiate the axis along the profile, scaled
/// by the local drift speed.
const PATH_STEP: f64 = 1e-6;

/// First-order prediction `M = (n - (theta'/g) e_phi) / sqrt(1 + (theta'/g)^2)`
/// where `theta'` is the polar-angle rate of the tracked axis along the profile
/// and `g` is the cycle angle about that axis.
pub fn first_order_predict(profile: &FieldProfile, timing: &SequenceTiming, tau: f64, reference: Vec3) -> Result<FirstOrder> {
    let p = timing.cycle_params(profile, tau);
    let er = dynamic_rotation(&p)?;
    if er.degenerate_axis {
        return Err(Error::DegenerateAxis { omega0: p.omega0, omega1: p.omega1, detail: "first-order prediction".into() });
    }
    let sign = if er.axis().dot(reference) < 0.0 { -1.0 } else { 1.0 };
    let n = er.axis().scale(sign);
    let g = sign * er.alpha;
    let speed = p.ramp0.hypot(p.ramp1);
    let theta_rate = if speed > 0.0 {
        let s = PATH_STEP.max(1e-12) / speed;
        let at = |h: f64| -> Result<Vec3> {
            let q = p.with_omega0(p.omega0 + h * p.ramp0).with_omega1(p.omega1 + h * p.ramp1);
            let e = dynamic_rotation(&q)?;
            let a = e.axis();
            Ok(if a.dot(n) < 0.0 { -a } else { a })
        };
        let dn = (at(s)? - at(-s)?).scale(0.5 / s);
        let e_theta = theta_unit(n);
        dn.dot(e_theta)
    } else {
        0.0
    };
    let ratio = theta_rate / g;
    let e_phi = phi_unit(n);
    let m = (n - e_phi.scale(ratio)).scale(1.0 / (1.0 + ratio * ratio).sqrt());
    let azimuth = n.y.atan2(n.x);
    let n_perp_signed = if (azimuth - p.pulse_phase).cos() >= 0.0 { n.x.hypot(n.y) } else { -n.x.hypot(n.y) };
    Ok(FirstOrder {
        tau,
        omega0: p.omega0,
        n_perp: n_perp_signed,
        delta_eps: crate::cycle::azimuthal_correction(&p),
        inv_a: -ratio,
        m,
        mx: m.x,
        my_abs: m.y.abs(),
    })
}

fn theta_unit(n: Vec3) -> Vec3 {
    let rho = n.x.hypot(n.y);
    if rho == 0.0 {
        return Vec3::X.scale(n.z.signum());
    }
    Vec3::new(n.z * n.x / rho, n.z * n.y / rho, -rho)
}

fn phi_unit(n: Vec3) -> Vec3 {
    let rho = n.x.hypot(n.y);
    if rho == 0.0 {
        return Vec3::Y;
    }
    Vec3::new(-n.y / rho, n.x / rho, 0.0)
}

/// First-order prediction at every echo, with the axis orientation carried
/// along from `tau = 0`.
pub fn first_order_trace(profile: &FieldProfile, timing: &SequenceTiming) -> Result<Vec<FirstOrder>> {
    let axes = echo_axes(profile, timing)?;
    (0..=timing.echo_count).map(|k| first_order_predict(profile, timing, k as f64, axes.oriented[k].axis)).collect()
}

/// Largest per-step RK4 rotation angle of the continuous solver.
pub const CONTINUOUS_MAX_ANGLE_STEP: f64 = 0.04;

/// Nominal RK4 step in echo spacings.
pub const CONTINUOUS_STEP: f64 = 0.125;

/// Norm drift after which the continuous solver renormalizes and warns.
pub const CONTINUOUS_NORM_TOL: f64 = 1e-6;

/// Options of the continuous-limit integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousOptions {
    /// Upper bound on the step in echo spacings.
    pub step: f64,
    /// Upper bound on `alpha * step`.
    pub max_angle_step: f64,
}

impl Default for ContinuousOptions {
    fn default() -> Self {
        ContinuousOptions { step: CONTINUOUS_STEP, max_angle_step: CONTINUOUS_MAX_ANGLE_STEP }
    }
}

/// Result of the continuous-limit integration.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousSolution {
    pub trace: ModeTrace,
    /// Magnetization at each echo time.
    pub echoes: Vec<Vec3>,
    /// Cycle centres at which the canonical axis flipped relative to the previous cycle.
    pub flip_points: Vec<f64>,
    pub renormalizations: usize,
    pub steps: usize,
}

struct Field<'a> {
    profile: &'a FieldProfile,
    timing: &'a SequenceTiming,
}

impl Field<'_> {
    fn params(&self, tau: f64) -> CycleParams {
        self.timing.cycle_params(self.profile, tau)
    }

    /// Average field per echo spacing, expressed about the orientation of
    /// `reference`: `alpha n` when the canonical axis agrees with it,
    /// `(2 pi - alpha)(-n)` otherwise. Both generate the same cycle rotation.
    fn average(&self, tau: f64, reference: Vec3) -> Result<Vec3> {
        let er = dynamic_rotation(&self.params(tau))?;
        if er.degenerate_axis {
            return Ok(Vec3::ZERO);
        }
        let n = er.axis();
        Ok(if n.dot(reference) < 0.0 { n.scale(er.alpha - TAU) } else { n.scale(er.alpha) })
    }

    /// Canonical axis at the centre of cycle `k`.
    fn centre_axis(&self, k: usize) -> Result<Option<Vec3>> {
        let er = dynamic_rotation(&self.params(k as f64 - 0.5))?;
        Ok((!er.degenerate_axis).then(|| er.axis()))
    }

    fn rhs(&self, tau: f64, m: Vec3, r: Vec3) -> Result<Vec3> {
        Ok(self.average(tau, r)?.cross(m))
    }

    fn rk4(&self, tau: f64, h: f64, m: Vec3, r: Vec3) -> Result<Vec3> {
        let k1 = self.rhs(tau, m, r)?;
        let k2 = self.rhs(tau + 0.5 * h, m + k1.scale(0.5 * h), r)?;
        let k3 = self.rhs(tau + 0.5 * h, m + k2.scale(0.5 * h), r)?;
        let k4 = self.rhs(tau + h, m + k3.scale(h), r)?;
        Ok(m + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0))
    }
}

/// Integrates `dM/dtau = G(tau) x M` with RK4, where `G` is the average field
/// of the instantaneous cycle.
///
/// The canonical axis flips whenever `alpha` passes `pi`. Within each cycle
/// the field is expressed about the orientation of the canonical axis at the
/// cycle centre, so it stays continuous there and any change of branch falls
/// on an echo boundary; the equation is solved piecewise cycle by cycle.
/// Mode amplitudes are read at integer `tau` in the tracked echo bases.
pub fn continuous_mode_evolution(profile: &FieldProfile, timing: &SequenceTiming, m0: Vec3, options: ContinuousOptions) -> Result<ContinuousSolution> {
    timing.validate()?;
    profile.validate(0.0, timing.echo_count as f64)?;
    if !(options.step > 0.0 && options.max_angle_step > 0.0) {
        return Err(Error::config("continuous", "step sizes must be positive"));
    }
    let field = Field { profile, timing };
    // |G| stays below 2 pi
    let n_steps = (1.0 / options.step.min(options.max_angle_step / TAU)).ceil() as usize;
    let h = 1.0 / n_steps as f64;
    let mut m = m0;
    let mut echoes = vec![m];
    let mut flip_points = Vec::new();
    let (mut renormalizations, mut steps) = (0usize, 0usize);
    let mut reference: Option<Vec3> = None;
    for k in 1..=timing.echo_count {
        let start = (k - 1) as f64;
        let r = match (field.centre_axis(k)?, reference) {
            (Some(n), Some(prev)) => {
                if n.dot(prev) < 0.0 {
                    flip_points.push(start + 0.5);
                }
                n
            }
            (Some(n), None) => n,
            (None, Some(prev)) => prev,
            (None, None) => Vec3::X,
        };
        reference = Some(r);
        for i in 0..n_steps {
            let t = start + i as f64 * h;
            m = field.rk4(t, h, m, r)?;
            steps += 1;
            let b = t + h;
            let drift = (m.norm() - 1.0).abs();
            if drift > CONTINUOUS_NORM_TOL {
                log::warn!("continuous solver: |M| drifted by {drift:e} at tau = {b}; renormalizing");
                m = m.scale(1.0 / m.norm());
                renormalizations += 1;
            }
        }
        echoes.push(m);
    }
    let axes = echo_axes(profile, timing)?;
    let mut records = Vec::with_capacity(echoes.len());
    let (mut dynamic, mut geo, mut geo0) = (0.0, 0.0, 0.0);
    for (k, &mk) in echoes.iter().enumerate() {
        if k > 0 {
            let (a, g, g0) = phase_steps(&axes, profile, timing, k)?;
            dynamic += a;
            geo += g;
            geo0 += g0;
        }
        let amp = decompose(mk, &axes.oriented[k].basis());
        let tau = k as f64;
        records.push(ModeRecord {
            cycle: k,
            tau,
            omega0: profile.omega0(tau),
            a0: amp.a0,
            cp_magnitude: amp.cp_magnitude(),
            adiabaticity: adiabaticity(&axes.params[k])?,
            phase_dyn: dynamic,
            phase_geo: geo,
            phase_geo0: geo0,
        });
    }
    Ok(ContinuousSolution { trace: ModeTrace { records, flip_events: axes.flip_events }, echoes, flip_points, renormalizations, steps })
}

/// Continuous-limit evolution starting from the excited magnetization.
pub fn continuous_from_excitation(profile: &FieldProfile, timing: &SequenceTiming, options: ContinuousOptions) -> Result<ContinuousSolution> {
    continuous_mode_evolution(profile, timing, excite(profile, timing), options)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionLabel {
    Adiabatic,
    NonAdiabatic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub label: RegionLabel,
}

/// Partition of a 1-D domain by `A > threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSegmentation {
    /// Name of the domain coordinate (`omega0_norm` or `tau`).
    pub axis: String,
    pub threshold: f64,
    pub segments: Vec<Segment>,
}

impl RegionSegmentation {
    pub fn label_at(&self, x: f64) -> Option<RegionLabel> {
        self.segments.iter().find(|s| s.start <= x && x <= s.end).map(|s| s.label)
    }

    pub fn non_adiabatic(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(|s| s.label == RegionLabel::NonAdiabatic)
    }
}

fn label_of(a: f64, threshold: f64) -> RegionLabel {
    if a > threshold {
        RegionLabel::Adiabatic
    } else {
        RegionLabel::NonAdiabatic
    }
}

/// Crossing of `threshold` between two samples, linear in `ln A`.
fn crossing(x0: f64, a0: f64, x1: f64, a1: f64, threshold: f64) -> f64 {
    let ok = |v: f64| v.is_finite() && v > 0.0;
    if !(ok(a0) && ok(a1) && ok(threshold)) {
        return 0.5 * (x0 + x1);
    }
    let (l0, l1, lt) = (a0.ln(), a1.ln(), threshold.ln());
    if l1 == l0 {
        return 0.5 * (x0 + x1);
    }
    x0 + ((lt - l0) / (l1 - l0)).clamp(0.0, 1.0) * (x1 - x0)
}

/// Segments sampled `(x, A)` pairs (sorted by `x`).
pub fn segment_samples(axis: &str, samples: &[(f64, f64)], threshold: f64) -> Result<RegionSegmentation> {
    if samples.is_empty() {
        return Err(Error::Input("segmentation needs at least one sample".into()));
    }
    if threshold.is_nan() {
        return Err(Error::Input("threshold is NaN".into()));
    }
    let mut segments = Vec::new();
    let mut start = samples[0].0;
    let mut label = label_of(samples[0].1, threshold);
    for w in samples.windows(2) {
        let ((x0, a0), (x1, a1)) = (w[0], w[1]);
        let next = label_of(a1, threshold);
        if next != label {
            let x = crossing(x0, a0, x1, a1, threshold);
            segments.push(Segment { start, end: x, label });
            start = x;
            label = next;
        }
    }
    segments.push(Segment { start, end: samples[samples.len() - 1].0, label });
    Ok(RegionSegmentation { axis: axis.into(), threshold, segments })
}

/// Segments an offset range swept at a constant `ramp0` with fixed `omega1`.
pub fn segment_offset_range(range: AxisRange, omega1: f64, te_ratio: f64, ramp0: f64, threshold: f64) -> Result<RegionSegmentation> {
    range.validate("omega0")?;
    let samples = range
        .values()
        .into_iter()
        .map(|w0| Ok((w0, adiabaticity(&CycleParams::new(w0, omega1, te_ratio).with_ramps(ramp0, 0.0))?)))
        .collect::<Result<Vec<_>>>()?;
    segment_samples("omega0_norm", &samples, threshold)
}

/// Segments a profile in time, one sample per echo.
pub fn segment_profile(profile: &FieldProfile, timing: &SequenceTiming, threshold: f64) -> Result<RegionSegmentation> {
    let samples = (0..=timing.echo_count).map(|k| Ok((k as f64, adiabaticity(&timing.cycle_params(profile, k as f64))?))).collect::<Result<Vec<_>>>()?;
    segment_samples("tau", &samples, threshold)
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > std::f64::consts::PI {
        r - TAU
    } else {
        r
    }
}
