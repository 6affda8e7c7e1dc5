//! Time-dependent offset and nutation frequencies.
//!
//! Time `tau` is measured in echo spacings from the centre of the excitation
//! pulse; frequencies are normalized by the nominal nutation frequency.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of a tabulated field record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSample {
    pub tau: f64,
    pub omega0: f64,
    pub omega1: f64,
}

/// Piecewise-linear interpolation of `(tau, value)` knots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table {
    pub tau: Vec<f64>,
    pub value: Vec<f64>,
}

impl Table {
    pub fn new(tau: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        let t = Table { tau, value };
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<()> {
        if self.tau.len() != self.value.len() {
            return Err(Error::Input("table columns differ in length".into()));
        }
        if self.tau.len() < 2 {
            return Err(Error::Input("table needs at least two samples".into()));
        }
        if self.tau.iter().chain(&self.value).any(|v| !v.is_finite()) {
            return Err(Error::Input("table contains non-finite values".into()));
        }
        if self.tau.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input("table times must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.tau[0], self.tau[self.tau.len() - 1])
    }

    /// Segment index for `tau`, clamped to the table.
    fn segment(&self, tau: f64) -> usize {
        let i = self.tau.partition_point(|&t| t <= tau);
        i.clamp(1, self.tau.len() - 1) - 1
    }

    pub fn value(&self, tau: f64) -> f64 {
        let i = self.segment(tau);
        let (t0, t1) = (self.tau[i], self.tau[i + 1]);
        let s = (tau - t0) / (t1 - t0);
        self.value[i] + s * (self.value[i + 1] - self.value[i])
    }

    pub fn slope(&self, tau: f64) -> f64 {
        let i = self.segment(tau);
        (self.value[i + 1] - self.value[i]) / (self.tau[i + 1] - self.tau[i])
    }
}

/// `omega0_norm(tau)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OffsetProfile {
    Constant {
        value: f64,
    },
    /// `start + ramp * tau`.
    Linear {
        #[serde(default)]
        start: f64,
        ramp: f64,
    },
    /// `offset + amplitude * sin(2 pi tau / period)`, period in echo spacings.
    Harmonic {
        amplitude: f64,
        period: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Ramp from `start` to `peak` and back at `|rate|`, then hold at `start`.
    BiLinear {
        start: f64,
        peak: f64,
        rate: f64,
    },
    Tabulated(Table),
}

impl OffsetProfile {
    pub fn omega0(&self, tau: f64) -> f64 {
        match self {
            OffsetProfile::Constant { value } => *value,
            OffsetProfile::Linear { start, ramp } => start + ramp * tau,
            OffsetProfile::Harmonic { amplitude, period, offset } => offset + amplitude * (TAU * tau / period).sin(),
            OffsetProfile::BiLinear { start, peak, rate } => {
                let half = bilinear_half(*start, *peak, *rate);
                let dir = (peak - start).signum() * rate.abs();
                if tau <= 0.0 || half == 0.0 {
                    *start
                } else if tau <= half {
                    start + dir * tau
                } else if tau <= 2.0 * half {
                    peak - dir * (tau - half)
                } else {
                    *start
                }
            }
            OffsetProfile::Tabulated(t) => t.value(tau),
        }
    }

    pub fn omega0_rate(&self, tau: f64) -> f64 {
        match self {
            OffsetProfile::Constant { .. } => 0.0,
            OffsetProfile::Linear { ramp, .. } => *ramp,
            OffsetProfile::Harmonic { amplitude, period, .. } => amplitude * TAU / period * (TAU * tau / period).cos(),
            OffsetProfile::BiLinear { start, peak, rate } => {
                let half = bilinear_half(*start, *peak, *rate);
                let dir = (peak - start).signum() * rate.abs();
                if tau < 0.0 || half == 0.0 || tau >= 2.0 * half {
                    0.0
                } else if tau < half {
                    dir
                } else {
                    -dir
                }
            }
            OffsetProfile::Tabulated(t) => t.slope(tau),
        }
    }

    /// Interval on which the profile is defined.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            OffsetProfile::Tabulated(t) => t.domain(),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Duration of the excursion for bi-linear profiles.
    pub fn excursion_length(&self) -> Option<f64> {
        match self {
            OffsetProfile::BiLinear { start, peak, rate } => Some(2.0 * bilinear_half(*start, *peak, *rate)),
            _ => None,
        }
    }

    fn check(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Input(format!("offset profile `{name}` must be finite")))
            }
        };
        match self {
            OffsetProfile::Constant { value } => finite("value", *value),
            OffsetProfile::Linear { start, ramp } => finite("start", *start).and(finite("ramp", *ramp)),
            OffsetProfile::Harmonic { amplitude, period, offset } => {
                finite("amplitude", *amplitude)?;
                finite("offset", *offset)?;
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::Input("harmonic period must be positive".into()));
                }
                Ok(())
            }
            OffsetProfile::BiLinear { start, peak, rate } => {
                finite("start", *start)?;
                finite("peak", *peak)?;
                if !(rate.is_finite() && *rate != 0.0) && start != peak {
                    return Err(Error::Input("bi-linear rate must be finite and non-zero".into()));
                }
                Ok(())
            }
            OffsetProfile::Tabulated(t) => t.check(),
        }
    }
}

fn bilinear_half(start: f64, peak: f64, rate: f64) -> f64 {
    if start == peak {
        0.0
    } else {
        (peak - start).abs() / rate.abs()
    }
}

/// `omega1_norm(tau)`; 1 is the nominal 180-degree pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NutationProfile {
    Constant { value: f64 },
    Linear { start: f64, ramp: f64 },
    Tabulated(Table),
}

impl Default for NutationProfile {
    fn default() -> Self {
        NutationProfile::Constant { value: 1.0 }
    }
}

impl NutationProfile {
    pub fn omega1(&self, tau: f64) -> f64 {
        match self {
            NutationProfile::Constant { value } => *value,
            NutationProfile::Linear { start, ramp } => start + ramp * tau,
            NutationProfile::Tabulated(t) => t.value(tau),
        }
    }

    pub fn omega1_rate(&self, tau: f64) -> f64 {
        match self {
            NutationProfile::Constant { .. } => 0.0,
            NutationProfile::Linear { ramp, .. } => *ramp,
            NutationProfile::Tabulated(t) => t.slope(tau),
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            NutationProfile::Tabulated(t) => t.domain(),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            NutationProfile::Constant { value } if !value.is_finite() => Err(Error::Input("nutation value must be finite".into())),
            NutationProfile::Linear { start, ramp } if !start.is_finite() || !ramp.is_finite() => Err(Error::Input("nutation ramp must be finite".into())),
            NutationProfile::Tabulated(t) => t.check(),
            _ => Ok(()),
        }
    }
}

/// Offset and nutation drifts seen by the spins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldProfile {
    pub offset: OffsetProfile,
    #[serde(default)]
    pub nutation: NutationProfile,
}

impl FieldProfile {
    pub fn new(offset: OffsetProfile) -> Self {
        FieldProfile { offset, nutation: NutationProfile::default() }
    }

    pub fn constant(omega0: f64) -> Self {
        Self::new(OffsetProfile::Constant { value: omega0 })
    }

    pub fn linear(start: f64, ramp: f64) -> Self {
        Self::new(OffsetProfile::Linear { start, ramp })
    }

    pub fn harmonic(amplitude: f64, period: f64) -> Self {
        Self::new(OffsetProfile::Harmonic { amplitude, period, offset: 0.0 })
    }

    pub fn bilinear(start: f64, peak: f64, rate: f64) -> Self {
        Self::new(OffsetProfile::BiLinear { start, peak, rate })
    }

    pub fn with_nutation(mut self, nutation: NutationProfile) -> Self {
        self.nutation = nutation;
        self
    }

    pub fn omega0(&self, tau: f64) -> f64 {
        self.offset.omega0(tau)
    }

    pub fn omega0_rate(&self, tau: f64) -> f64 {
        self.offset.omega0_rate(tau)
    }

    pub fn omega1(&self, tau: f64) -> f64 {
        self.nutation.omega1(tau)
    }

    pub fn omega1_rate(&self, tau: f64) -> f64 {
        self.nutation.omega1_rate(tau)
    }

    /// Intersection of the offset and nutation domains.
    pub fn domain(&self) -> (f64, f64) {
        let (a0, b0) = self.offset.domain();
        let (a1, b1) = self.nutation.domain();
        (a0.max(a1), b0.min(b1))
    }

    /// Checks parameters and that `[start, end]` lies inside the domain.
    pub fn validate(&self, start: f64, end: f64) -> Result<()> {
        let domain_err = |detail: String| Error::ProfileDomain { start, end, detail };
        self.offset.check().map_err(|e| domain_err(e.to_string()))?;
        self.nutation.check().map_err(|e| domain_err(e.to_string()))?;
        let (lo, hi) = self.domain();
        if start < lo || end > hi {
            return Err(domain_err(format!("profile is only defined on [{lo}, {hi}]")));
        }
        Ok(())
    }

    /// Builds tabulated offset and nutation profiles from `tau,omega0,omega1`
    /// CSV rows (header required).
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut samples = Vec::new();
        for row in rdr.deserialize::<FieldSample>() {
            samples.push(row.map_err(|e| Error::Input(format!("field table: {e}")))?);
        }
        Self::from_samples(&samples)
    }

    pub fn from_samples(samples: &[FieldSample]) -> Result<Self> {
        let tau: Vec<f64> = samples.iter().map(|s| s.tau).collect();
        let w0 = samples.iter().map(|s| s.omega0).collect();
        let w1 = samples.iter().map(|s| s.omega1).collect();
        Ok(FieldProfile { offset: OffsetProfile::Tabulated(Table::new(tau.clone(), w0)?), nutation: NutationProfile::Tabulated(Table::new(tau, w1)?) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_and_harmonic() {
        let p = FieldProfile::linear(-1.0, 1e-3);
        assert_eq!(p.omega0(1000.0), 0.0);
        assert_eq!(p.omega0_rate(5.0), 1e-3);
        assert_eq!(p.omega1(3.0), 1.0);
        let h = FieldProfile::harmonic(1.4, 300.0);
        assert!((h.omega0(75.0) - 1.4).abs() < 1e-12);
        assert!((h.omega0_rate(0.0) - 1.4 * TAU / 300.0).abs() < 1e-15);
    }

    #[test]
    fn bilinear_shape() {
        let p = FieldProfile::bilinear(0.5, -1.5, 1e-3);
        assert_eq!(p.offset.excursion_length(), Some(4000.0));
        assert_eq!(p.omega0(-1.0), 0.5);
        assert!((p.omega0(1000.0) + 0.5).abs() < 1e-12);
        assert!((p.omega0(2000.0) + 1.5).abs() < 1e-12);
        assert!((p.omega0(3000.0) + 0.5).abs() < 1e-12);
        assert_eq!(p.omega0(4000.0), 0.5);
        assert_eq!(p.omega0(5000.0), 0.5);
        assert_eq!(p.omega0_rate(100.0), -1e-3);
        assert_eq!(p.omega0_rate(2100.0), 1e-3);
        assert_eq!(p.omega0_rate(4100.0), 0.0);
        let flat = FieldProfile::bilinear(0.3, 0.3, 1e-3);
        assert_eq!(flat.omega0(10.0), 0.3);
        assert_eq!(flat.offset.excursion_length(), Some(0.0));
    }

    #[test]
    fn tabulated_interpolation() {
        let csv = "tau,omega0,omega1\n0,0,1\n10,1,1.2\n20,1,1\n";
        let p = FieldProfile::from_csv_reader(csv.as_bytes()).unwrap();
        assert!((p.omega0(5.0) - 0.5).abs() < 1e-15);
        assert!((p.omega0_rate(5.0) - 0.1).abs() < 1e-15);
        assert!((p.omega1(15.0) - 1.1).abs() < 1e-15);
        assert!((p.omega1_rate(15.0) + 0.02).abs() < 1e-15);
        assert!(p.validate(0.0, 20.0).is_ok());
        assert!(matches!(p.validate(0.0, 21.0), Err(Error::ProfileDomain { .. })));
    }

    #[test]
    fn bad_tables_rejected() {
        assert!(Table::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(Table::new(vec![0.0], vec![1.0]).is_err());
        assert!(FieldProfile::from_csv_reader("tau,omega0\n0,1\n".as_bytes()).is_err());
        assert!(FieldProfile::harmonic(1.0, 0.0).validate(0.0, 1.0).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let p = FieldProfile::harmonic(1.4, 3002.0);
        let s = toml::to_string(&p).unwrap();
        let q: FieldProfile = toml::from_str(&s).unwrap();
        assert_eq!(p, q);
        let bad = "[offset]\nkind = \"linear\"\nramp = 1e-3\nslope = 2\n";
        assert!(toml::from_str::<FieldProfile>(bad).is_err());
    }
}
