//! Critical ramp rates, the instantaneous adiabaticity parameter, singular
//! points of the cycle propagator and 2-D adiabaticity maps.
//!
//! `theta` is the polar angle of the rotation axis. Its derivatives with
//! respect to the normalized offset and nutation frequencies are taken by
//! central differences of the axis direction, with the sign of the axis
//! aligned between the two stencil points so that the canonical `alpha <= pi`
//! fold does not show up as a jump.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cycle::{cycle_quaternion, effective_rotation, effective_rotation_oracle, CycleParams};
use crate::error::{Error, Result};
use crate::profile::FieldProfile;
use crate::rotation::{Rotation, Vec3, DEGENERATE_SIN_HALF};
use crate::simulator::SequenceTiming;

/// Finite-difference step in normalized frequency units.
pub const DERIVATIVE_STEP: f64 = 1e-6;

/// Adiabaticity values are capped here when written to files.
pub const ADIABATICITY_CAP: f64 = 1e9;

/// Default threshold separating adiabatic from non-adiabatic regions.
pub const DEFAULT_THRESHOLD: f64 = 2.0;

/// Canonical axis and angle straight from the closed form, without
/// parameter validation (stencil points may sit at `omega1 < 0`).
fn axis_and_angle(p: &CycleParams) -> Option<(Vec3, f64)> {
    let (w, v) = cycle_quaternion(p);
    let (w, v) = if w < 0.0 { (-w, -v) } else { (w, v) };
    let delta = v.norm();
    (delta > DEGENERATE_SIN_HALF).then(|| (v.scale(1.0 / delta), 2.0 * delta.atan2(w)))
}

/// Polar angle of the rotation axis in `[0, pi]`.
pub fn theta(p: &CycleParams) -> Result<f64> {
    let er = effective_rotation(p)?;
    if er.degenerate_axis {
        return Err(Error::DegenerateAxis { omega0: p.omega0, omega1: p.omega1, detail: "singular point: the cycle propagator is the identity".into() });
    }
    Ok(er.theta())
}

/// Which normalized frequency a derivative is taken along.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Offset,
    Nutation,
}

fn shifted(p: &CycleParams, dir: (f64, f64), h: f64) -> CycleParams {
    p.with_omega0(p.omega0 + dir.0 * h).with_omega1(p.omega1 + dir.1 * h)
}

/// Rate at which the axis direction turns per unit move along `dir` in the
/// `(omega0, omega1)` plane; `None` when a stencil point is a singular point.
fn axis_turn_rate(p: &CycleParams, dir: (f64, f64), h: f64) -> Option<f64> {
    let (lo, _) = axis_and_angle(&shifted(p, dir, -h))?;
    let (hi, _) = axis_and_angle(&shifted(p, dir, h))?;
    let hi = if hi.dot(lo) < 0.0 { -hi } else { hi };
    Some(lo.angle_to(hi) / (2.0 * h))
}

/// `|d theta / d omega|` along one axis with a Richardson cross-check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivativeEstimate {
    /// Central difference at step `h`.
    pub value: f64,
    /// Richardson combination of steps `h` and `h/2`.
    pub extrapolated: f64,
}

impl DerivativeEstimate {
    pub fn relative_difference(&self) -> f64 {
        let scale = self.extrapolated.abs().max(f64::MIN_POSITIVE);
        (self.value - self.extrapolated).abs() / scale
    }
}

pub fn theta_derivative(p: &CycleParams, direction: Direction) -> Option<DerivativeEstimate> {
    let dir = match direction {
        Direction::Offset => (1.0, 0.0),
        Direction::Nutation => (0.0, 1.0),
    };
    let d1 = axis_turn_rate(p, dir, DERIVATIVE_STEP)?;
    let d2 = axis_turn_rate(p, dir, 0.5 * DERIVATIVE_STEP)?;
    Some(DerivativeEstimate { value: d1, extrapolated: (4.0 * d2 - d1) / 3.0 })
}

/// Critical ramp rates for offset and nutation drifts. `f64::INFINITY`
/// marks a direction in which the axis does not turn at all.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalRates {
    pub nu0: f64,
    pub nu1: f64,
}

fn critical_rate(alpha: f64, turn_rate: Option<f64>) -> f64 {
    match turn_rate {
        None => 0.0,
        Some(d) if d == 0.0 => f64::INFINITY,
        Some(d) => (alpha / d).abs(),
    }
}

/// `nu0 = |alpha / (d theta / d omega0)|` and `nu1 = |alpha / (d theta / d omega1)|`.
/// Both vanish at singular points.
pub fn critical_rates(p: &CycleParams) -> Result<CriticalRates> {
    p.validate()?;
    let Some((_, alpha)) = axis_and_angle(p) else {
        return Ok(CriticalRates { nu0: 0.0, nu1: 0.0 });
    };
    Ok(CriticalRates {
        nu0: critical_rate(alpha, axis_turn_rate(p, (1.0, 0.0), DERIVATIVE_STEP)),
        nu1: critical_rate(alpha, axis_turn_rate(p, (0.0, 1.0), DERIVATIVE_STEP)),
    })
}

/// Instantaneous adiabaticity parameter for the ramps carried in `p`:
/// `1/A = |d theta/d tau| / alpha`, the generalized combination of both
/// drifts. With only one ramp non-zero it is exactly `nu_crit / |ramp|`.
/// Returns `f64::INFINITY` when both ramps vanish.
pub fn adiabaticity(p: &CycleParams) -> Result<f64> {
    p.validate()?;
    let (r0, r1) = (p.ramp0, p.ramp1);
    if r0 == 0.0 && r1 == 0.0 {
        return Ok(f64::INFINITY);
    }
    if r1 == 0.0 {
        return Ok(critical_rates(p)?.nu0 / r0.abs());
    }
    if r0 == 0.0 {
        return Ok(critical_rates(p)?.nu1 / r1.abs());
    }
    let Some((_, alpha)) = axis_and_angle(p) else {
        return Ok(0.0);
    };
    let speed = r0.hypot(r1);
    let dir = (r0 / speed, r1 / speed);
    Ok(match axis_turn_rate(p, dir, DERIVATIVE_STEP) {
        None => 0.0,
        Some(d) if d == 0.0 => f64::INFINITY,
        Some(d) => alpha / (d * speed),
    })
}

/// One adiabaticity sample along a field path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticitySample {
    pub tau: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub adiabaticity: f64,
}

/// Samples along a path, once per refocusing cycle.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticityTrace {
    pub samples: Vec<AdiabaticitySample>,
}

impl AdiabaticityTrace {
    pub fn minimum(&self) -> Option<AdiabaticitySample> {
        self.samples.iter().copied().min_by(|a, b| a.adiabaticity.total_cmp(&b.adiabaticity))
    }
}

/// Adiabaticity at every echo of a profile.
pub fn adiabaticity_trace(profile: &FieldProfile, timing: &SequenceTiming) -> Result<AdiabaticityTrace> {
    timing.validate()?;
    profile.validate(0.0, timing.echo_count as f64)?;
    let samples = (0..=timing.echo_count)
        .map(|k| {
            let tau = k as f64;
            let p = timing.cycle_params(profile, tau);
            Ok(AdiabaticitySample { tau, omega0: p.omega0, omega1: p.omega1, adiabaticity: adiabaticity(&p)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AdiabaticityTrace { samples })
}

/// A point where the cycle propagator is exactly the identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub omega0: f64,
    pub omega1: f64,
    pub l: u32,
    pub m: u32,
}

/// Tolerance used when confirming singular points with the composed propagator.
pub const SINGULAR_IDENTITY_TOL: f64 = 1e-9;

/// Enumerates `omega0 = +-2(l-m)/(t_E/t_180 - 1)`, `omega1 = sqrt((2l)^2 - omega0^2)`
/// for integers `1 <= l <= l_max` and `l <= m < l t_E/t_180`, keeping points with
/// `0 < omega1 <= omega1_max` whose composed cycle propagator is the identity.
pub fn singular_points(te_ratio: f64, l_max: u32, omega1_max: f64) -> Result<Vec<SingularPoint>> {
    if !(te_ratio > 1.0) || !te_ratio.is_finite() {
        return Err(Error::Input(format!("te_ratio must exceed 1, got {te_ratio}")));
    }
    let mut out: Vec<SingularPoint> = Vec::new();
    for l in 1..=l_max {
        let radius = 2.0 * l as f64;
        let mut m = l;
        while (m as f64) < l as f64 * te_ratio {
            let w0 = 2.0 * (m as f64 - l as f64) / (te_ratio - 1.0);
            let w1_sq = radius * radius - w0 * w0;
            m += 1;
            if w1_sq <= 0.0 {
                continue;
            }
            let w1 = w1_sq.sqrt();
            if w1 > omega1_max {
                continue;
            }
            for sign in [1.0, -1.0] {
                let cand = SingularPoint { omega0: sign * w0, omega1: w1, l, m: m - 1 };
                let dup = out.iter().any(|q| (q.omega0 - cand.omega0).abs() < 1e-12 && (q.omega1 - cand.omega1).abs() < 1e-12);
                if dup {
                    continue;
                }
                if is_identity_cycle(&CycleParams::new(cand.omega0, cand.omega1, te_ratio)) {
                    out.push(cand);
                } else {
                    log::debug!("discarding candidate singular point {cand:?}");
                }
            }
        }
    }
    out.sort_by(|a, b| a.omega1.total_cmp(&b.omega1).then(a.omega0.total_cmp(&b.omega0)));
    Ok(out)
}

/// Brute-force check that the composed cycle propagator is the identity.
pub fn is_identity_cycle(p: &CycleParams) -> bool {
    let [a, b, c] = crate::cycle::cycle_intervals(p);
    a.then(&b).then(&c).approx_eq(&Rotation::IDENTITY, SINGULAR_IDENTITY_TOL)
        && effective_rotation_oracle(p).map(|e| e.alpha < SINGULAR_IDENTITY_TOL).unwrap_or(false)
}

/// Offsets where the line of constant `omega1` meets the circles of radius
/// `2l` on which a refocusing pulse nutates by a multiple of `2 pi`.
pub fn circle_crossings(omega1: f64, l_max: u32) -> Vec<f64> {
    let mut out = Vec::new();
    for l in 1..=l_max {
        let r = 2.0 * l as f64;
        if r > omega1 {
            let x = (r * r - omega1 * omega1).sqrt();
            out.push(-x);
            out.push(x);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Evenly spaced samples, both ends included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.min],
            n => (0..n).map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64).collect(),
        }
    }

    pub fn spacing(&self) -> f64 {
        if self.count > 1 {
            (self.max - self.min) / (self.count - 1) as f64
        } else {
            0.0
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::config(name, "range bounds must be finite"));
        }
        if self.count == 0 {
            return Err(Error::config(name, "range needs at least one point"));
        }
        if self.max < self.min {
            return Err(Error::config(name, "max is below min"));
        }
        Ok(())
    }
}

/// What a 2-D map holds and what its second axis is.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapKind {
    /// Adiabaticity over `(omega0, ramp0)` at fixed `omega1`.
    OffsetRamp { omega1: f64 },
    /// `nu0` over `(omega0, omega1)`.
    Nu0,
    /// `nu1` over `(omega0, omega1)`.
    Nu1,
}

impl MapKind {
    pub fn y_name(&self) -> &'static str {
        match self {
            MapKind::OffsetRamp { .. } => "ramp0",
            MapKind::Nu0 | MapKind::Nu1 => "omega1_norm",
        }
    }

    pub fn value_name(&self) -> &'static str {
        match self {
            MapKind::OffsetRamp { .. } => "adiabaticity",
            MapKind::Nu0 => "nu0_crit",
            MapKind::Nu1 => "nu1_crit",
        }
    }
}

/// Row-major map: `values[iy * nx + ix]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticityMap {
    pub te_ratio: f64,
    pub kind: MapKind,
    pub omega0: AxisRange,
    pub y: AxisRange,
    pub values: Vec<f64>,
}

impl AdiabaticityMap {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.omega0.count + ix]
    }

    /// Points where a row of the map crosses `threshold`, found by linear
    /// interpolation in `log(value)` between neighbouring cells.
    pub fn contour(&self, threshold: f64) -> Vec<(f64, f64)> {
        let xs = self.omega0.values();
        let ys = self.y.values();
        let lt = threshold.ln();
        let mut out = Vec::new();
        for (iy, &y) in ys.iter().enumerate() {
            for ix in 1..xs.len() {
                let (a, b) = (self.get(ix - 1, iy), self.get(ix, iy));
                if (a < threshold) == (b < threshold) {
                    continue;
                }
                let (la, lb) = (a.max(1e-300).min(ADIABATICITY_CAP).ln(), b.max(1e-300).min(ADIABATICITY_CAP).ln());
                let t = if lb != la { ((lt - la) / (lb - la)).clamp(0.0, 1.0) } else { 0.5 };
                out.push((xs[ix - 1] + t * (xs[ix] - xs[ix - 1]), y));
            }
        }
        out
    }
}

/// Evaluates a 2-D map; cells are independent and computed in parallel, the
/// result does not depend on scheduling.
pub fn adiabaticity_grid(te_ratio: f64, kind: MapKind, omega0: AxisRange, y: AxisRange) -> Result<AdiabaticityMap> {
    omega0.validate("omega0")?;
    y.validate(kind.y_name())?;
    CycleParams::new(0.0, 1.0, te_ratio).validate()?;
    let xs = omega0.values();
    let ys = y.values();
    let cells: Vec<(f64, f64)> = ys.iter().flat_map(|&yv| xs.iter().map(move |&xv| (xv, yv))).collect();
    let values = cells
        .par_iter()
        .map(|&(x, yv)| -> Result<f64> {
            match kind {
                MapKind::OffsetRamp { omega1 } => adiabaticity(&CycleParams::new(x, omega1, te_ratio).with_ramps(yv, 0.0)),
                MapKind::Nu0 => Ok(critical_rates(&CycleParams::new(x, yv, te_ratio))?.nu0),
                MapKind::Nu1 => Ok(critical_rates(&CycleParams::new(x, yv, te_ratio))?.nu1),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(AdiabaticityMap { te_ratio, kind, omega0, y, values })
}

/// Local minima of `nu0` along a line of constant `omega1`, refined by
/// golden-section search on a bracketing scan of spacing `step`.
pub fn nu0_minima(te_ratio: f64, omega1: f64, lo: f64, hi: f64, step: f64) -> Result<Vec<(f64, f64)>> {
    let nu = |w0: f64| critical_rates(&CycleParams::new(w0, omega1, te_ratio)).map(|c| c.nu0);
    let n = ((hi - lo) / step).ceil() as usize;
    let xs: Vec<f64> = (0..=n).map(|i| lo + step * i as f64).collect();
    let vals = xs.iter().map(|&x| nu(x)).collect::<Result<Vec<f64>>>()?;
    let mut out = Vec::new();
    for i in 1..xs.len().saturating_sub(1) {
        if vals[i] <= vals[i - 1] && vals[i] < vals[i + 1] {
            let (mut a, mut b) = (xs[i - 1], xs[i + 1]);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let mut c = b - g * (b - a);
            let mut d = a + g * (b - a);
            let (mut fc, mut fd) = (nu(c)?, nu(d)?);
            for _ in 0..60 {
                if fc < fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - g * (b - a);
                    fc = nu(c)?;
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + g * (b - a);
                    fd = nu(d)?;
                }
            }
            let x = 0.5 * (a + b);
            out.push((x, nu(x)?));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn theta_on_resonance_and_free_precession() {
        assert!((theta(&CycleParams::new(0.0, 1.0, 8.0)).unwrap() - FRAC_PI_2).abs() < 1e-12);
        // omega1 -> 0: the axis is +-z
        let t = theta(&CycleParams::new(0.2, 0.0, 8.0)).unwrap();
        assert!(t.abs() < 1e-12 || (t - PI).abs() < 1e-12, "{t}");
        assert!(theta(&CycleParams::new(0.0, 2.0, 8.0)).is_err());
    }

    #[test]
    fn theta_parity() {
        for w0 in [0.05, 0.3, 1.1, 2.2, 3.3] {
            let a = theta(&CycleParams::new(w0, 1.0, 15.0)).unwrap();
            let b = theta(&CycleParams::new(-w0, 1.0, 15.0)).unwrap();
            assert!((a + b - PI).abs() < 1e-10, "{w0}: {a} {b}");
        }
    }

    #[test]
    fn richardson_agrees_away_from_singular_points() {
        for i in 0..60 {
            let w0 = -2.9 + 0.1 * i as f64;
            let p = CycleParams::new(w0, 1.0, 8.1);
            let d = theta_derivative(&p, Direction::Offset).unwrap();
            assert!(d.relative_difference() < 1e-6, "{w0}: {d:?}");
            let d1 = theta_derivative(&p, Direction::Nutation).unwrap();
            assert!(d1.relative_difference() < 1e-6, "{w0}: {d1:?}");
        }
    }

    #[test]
    fn critical_rate_parity() {
        for w0 in [0.1, 0.7, 1.5, 2.5, 3.5] {
            let a = critical_rates(&CycleParams::new(w0, 1.0, 8.1)).unwrap();
            let b = critical_rates(&CycleParams::new(-w0, 1.0, 8.1)).unwrap();
            assert!((a.nu0 - b.nu0).abs() <= 1e-6 * a.nu0, "{w0}: {a:?} {b:?}");
        }
    }

    #[test]
    fn critical_rates_vanish_at_singular_point() {
        let r = critical_rates(&CycleParams::new(0.0, 2.0, 8.0)).unwrap();
        assert_eq!(r.nu0, 0.0);
        // approaching it, nu0 drops towards zero
        let near = critical_rates(&CycleParams::new(0.0, 1.999, 8.0)).unwrap().nu0;
        let far = critical_rates(&CycleParams::new(0.0, 1.9, 8.0)).unwrap().nu0;
        assert!(near < far);
    }

    #[test]
    fn adiabaticity_special_cases() {
        let p = CycleParams::new(0.4, 1.0, 15.0);
        assert_eq!(adiabaticity(&p).unwrap(), f64::INFINITY);
        let with_ramp = p.with_ramps(-1e-3, 0.0);
        let nu0 = critical_rates(&p).unwrap().nu0;
        assert_eq!(adiabaticity(&with_ramp).unwrap(), nu0 / 1e-3);
    }

    #[test]
    fn generalized_adiabaticity_combines_ramps() {
        let p = CycleParams::new(0.9, 1.1, 8.0);
        let r = critical_rates(&p).unwrap();
        let a0 = adiabaticity(&p.with_ramps(1e-3, 0.0)).unwrap();
        let a1 = adiabaticity(&p.with_ramps(0.0, 1e-3)).unwrap();
        assert!((a0 - r.nu0 / 1e-3).abs() < 1e-9 * a0);
        assert!((a1 - r.nu1 / 1e-3).abs() < 1e-9 * a1);
        let both = adiabaticity(&p.with_ramps(1e-3, 1e-3)).unwrap();
        let opposed = adiabaticity(&p.with_ramps(1e-3, -1e-3)).unwrap();
        // one sign adds, the other subtracts the two turning rates
        let (sum, diff) = (1.0 / a0 + 1.0 / a1, (1.0 / a0 - 1.0 / a1).abs());
        let inv = [1.0 / both, 1.0 / opposed];
        let mut got = inv;
        got.sort_by(f64::total_cmp);
        assert!((got[0] - diff).abs() < 1e-6 * sum, "{got:?} {diff}");
        assert!((got[1] - sum).abs() < 1e-6 * sum, "{got:?} {sum}");
    }

    #[test]
    fn singular_points_basic() {
        let pts = singular_points(8.0, 2, f64::INFINITY).unwrap();
        assert!(pts.iter().any(|p| p.omega0 == 0.0 && (p.omega1 - 2.0).abs() < 1e-15 && p.l == 1 && p.m == 1));
        for p in &pts {
            assert!(is_identity_cycle(&CycleParams::new(p.omega0, p.omega1, 8.0)));
            assert!(p.omega1 > 0.0);
        }
        let w0s: Vec<f64> = pts.iter().map(|p| p.omega0).collect();
        for p in &pts {
            assert!(w0s.iter().any(|&x| (x + p.omega0).abs() < 1e-12), "mirror of {p:?}");
        }
        let few = singular_points(8.0, 2, 1.5).unwrap();
        assert!(few.iter().all(|p| p.omega1 <= 1.5));
        assert!(singular_points(1.0, 2, 4.0).is_err());
    }

    #[test]
    fn circle_crossings_on_nominal_line() {
        let c = circle_crossings(1.0, 3);
        let expect = [-5.9161, -3.8730, -1.7321, 1.7321, 3.8730, 5.9161];
        for (a, b) in c.iter().zip(expect) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn map_symmetry_and_zero_ramp_row() {
        let map = adiabaticity_grid(15.0, MapKind::OffsetRamp { omega1: 1.0 }, AxisRange::new(-3.0, 3.0, 61), AxisRange::new(0.0, 1e-2, 5)).unwrap();
        for ix in 0..61 {
            assert_eq!(map.get(ix, 0), f64::INFINITY);
            for iy in 1..5 {
                let (a, b) = (map.get(ix, iy), map.get(60 - ix, iy));
                assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-12), "{ix} {iy}: {a} {b}");
            }
        }
        assert!(!map.contour(2.0).is_empty());
    }

    #[test]
    fn axis_range_values() {
        assert_eq!(AxisRange::new(0.0, 1.0, 3).values(), vec![0.0, 0.5, 1.0]);
        assert_eq!(AxisRange::new(2.0, 2.0, 1).values(), vec![2.0]);
        assert!(AxisRange::new(1.0, 0.0, 3).validate("x").is_err());
    }
}
