//! Run configuration read from a TOML file. Every section has defaults, so an
//! empty file is a valid configuration; unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adiabaticity::{AxisRange, DEFAULT_THRESHOLD};
use crate::cycle::CycleParams;
use crate::error::{Error, Result};
use crate::profile::FieldProfile;
use crate::simulator::{SequenceTiming, SubstepPolicy};
use crate::theory::ContinuousOptions;

/// The canned experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    CycleProperties,
    LinearRamp,
    RampRateMap,
    Harmonic,
    ReturnToOrigin,
    ContinuousCompare,
    SingularPoints,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 7] = [
        ScenarioName::CycleProperties,
        ScenarioName::LinearRamp,
        ScenarioName::RampRateMap,
        ScenarioName::Harmonic,
        ScenarioName::ReturnToOrigin,
        ScenarioName::ContinuousCompare,
        ScenarioName::SingularPoints,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::CycleProperties => "cycle-properties",
            ScenarioName::LinearRamp => "linear-ramp",
            ScenarioName::RampRateMap => "ramp-rate-map",
            ScenarioName::Harmonic => "harmonic",
            ScenarioName::ReturnToOrigin => "return-to-origin",
            ScenarioName::ContinuousCompare => "continuous-compare",
            ScenarioName::SingularPoints => "singular-points",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| {
            let names: Vec<&str> = ScenarioName::ALL.iter().map(|n| n.as_str()).collect();
            Error::config("scenario", format!("unknown scenario `{s}`, expected one of {}", names.join(", ")))
        })
    }
}

/// A single cycle operating point for the `cycle` and `adiabaticity` commands.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CyclePoint {
    pub omega0: f64,
    pub omega1: f64,
    pub te_ratio: f64,
    pub ramp0: f64,
    pub ramp1: f64,
    pub phase: f64,
}

impl Default for CyclePoint {
    fn default() -> Self {
        CyclePoint { omega0: 0.0, omega1: 1.0, te_ratio: 15.0, ramp0: 0.0, ramp1: 0.0, phase: 0.0 }
    }
}

impl CyclePoint {
    pub fn params(&self) -> CycleParams {
        CycleParams::new(self.omega0, self.omega1, self.te_ratio).with_ramps(self.ramp0, self.ramp1).with_phase(self.phase)
    }

    fn validate(&self) -> Result<()> {
        self.params().validate().map_err(|e| Error::config("cycle", e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepQuantity {
    /// `nu0_crit` over `(omega0, omega1)`.
    Nu0,
    /// `nu1_crit` over `(omega0, omega1)`.
    Nu1,
    /// Adiabaticity over `(omega0, ramp0)` at fixed `omega1`.
    Adiabaticity,
    /// Simulated CPMG amplitude over `(omega0, ramp0)` for linear ramps from resonance.
    A0,
}

impl SweepQuantity {
    pub fn name(&self) -> &'static str {
        match self {
            SweepQuantity::Nu0 => "nu0",
            SweepQuantity::Nu1 => "nu1",
            SweepQuantity::Adiabaticity => "adiabaticity",
            SweepQuantity::A0 => "a0",
        }
    }

    pub fn y_name(&self) -> &'static str {
        match self {
            SweepQuantity::Nu0 | SweepQuantity::Nu1 => "omega1_norm",
            SweepQuantity::Adiabaticity | SweepQuantity::A0 => "ramp0",
        }
    }
}

/// A 1-D or 2-D grid. Without `y` the second axis is the single value
/// `omega1` (for `nu0`, `nu1`) or `ramp` (for `adiabaticity`, `a0`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub quantity: SweepQuantity,
    #[serde(default = "default_te")]
    pub te_ratio: f64,
    pub x: AxisRange,
    #[serde(default)]
    pub y: Option<AxisRange>,
    #[serde(default = "one")]
    pub omega1: f64,
    #[serde(default = "default_ramp")]
    pub ramp: f64,
}

impl SweepConfig {
    pub fn y_axis(&self) -> AxisRange {
        self.y.unwrap_or_else(|| {
            let v = match self.quantity {
                SweepQuantity::Nu0 | SweepQuantity::Nu1 => self.omega1,
                SweepQuantity::Adiabaticity | SweepQuantity::A0 => self.ramp,
            };
            AxisRange::new(v, v, 1)
        })
    }

    fn validate(&self) -> Result<()> {
        check_te("sweep.te_ratio", self.te_ratio)?;
        self.x.validate("sweep.x")?;
        let y = self.y_axis();
        y.validate("sweep.y")?;
        match self.quantity {
            SweepQuantity::Nu0 | SweepQuantity::Nu1 => {
                if y.min <= 0.0 {
                    return Err(Error::config("sweep.y", "omega1 values must be positive"));
                }
            }
            SweepQuantity::Adiabaticity => check_positive("sweep.omega1", self.omega1)?,
            SweepQuantity::A0 => {
                check_positive("sweep.omega1", self.omega1)?;
                if y.min <= 0.0 {
                    return Err(Error::config("sweep.y", "ramp rates must be positive"));
                }
                if self.x.min < 0.0 {
                    return Err(Error::config("sweep.x", "ramps start from resonance, so offsets must be non-negative"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CyclePropertiesConfig {
    pub te_ratios: Vec<f64>,
    pub omega1: f64,
    pub omega0: AxisRange,
}

impl Default for CyclePropertiesConfig {
    fn default() -> Self {
        CyclePropertiesConfig { te_ratios: vec![8.0, 8.1, 15.0], omega1: 1.0, omega0: AxisRange::new(-6.0, 6.0, 1201) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearRampConfig {
    pub te_ratio: f64,
    pub omega1: f64,
    /// Ramp rates `d omega0 / d tau`; each ramp starts from resonance.
    pub rates: Vec<f64>,
    /// Offset at which each ramp stops.
    pub end_omega0: f64,
    /// Echo count used for a zero rate.
    pub static_echoes: usize,
}

impl Default for LinearRampConfig {
    fn default() -> Self {
        LinearRampConfig { te_ratio: 15.0, omega1: 1.0, rates: vec![1e-4, 5e-4, 1e-3, 5e-3, 1e-2], end_omega0: 6.0, static_echoes: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RampRateMapConfig {
    pub te_ratio: f64,
    pub omega1: f64,
    pub omega0: AxisRange,
    /// Ramp rates as `log10(d omega0 / d tau)`.
    pub log10_rate: AxisRange,
    pub full_omega0_count: usize,
    pub full_rate_count: usize,
}

impl Default for RampRateMapConfig {
    fn default() -> Self {
        RampRateMapConfig {
            te_ratio: 15.0,
            omega1: 1.0,
            omega0: AxisRange::new(0.0, 6.0, 121),
            log10_rate: AxisRange::new(-4.0, -2.0, 21),
            full_omega0_count: 601,
            full_rate_count: 101,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarmonicConfig {
    pub te_ratio: f64,
    pub amplitude: f64,
    /// Periods in echo spacings, one path each.
    pub periods: Vec<f64>,
    /// Number of periods simulated per path.
    pub repeats: f64,
}

impl Default for HarmonicConfig {
    fn default() -> Self {
        HarmonicConfig { te_ratio: 15.0, amplitude: 1.4, periods: vec![3e4, 3002.0, 300.2], repeats: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReturnToOriginConfig {
    pub te_ratio: f64,
    /// Magnitude of both ramps.
    pub rate: f64,
    /// Shared axis for start and peak offsets.
    pub grid: AxisRange,
    pub full_count: usize,
    /// Bound on `|M_CPMG(T) - M_CPMG(0)|` checked inside the measured square.
    pub reversible_tolerance: f64,
    /// `|M_CPMG(T) - M_CPMG(0)|` above which a cell counts as having passed
    /// through a mode transition; sets the measured square.
    pub transition_tolerance: f64,
}

impl Default for ReturnToOriginConfig {
    fn default() -> Self {
        ReturnToOriginConfig {
            te_ratio: 15.0,
            rate: 1e-3,
            grid: AxisRange::new(-4.0, 4.0, 60),
            full_count: 241,
            reversible_tolerance: 0.02,
            transition_tolerance: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuousCompareConfig {
    pub te_ratio: f64,
    pub rates: Vec<f64>,
    pub end_omega0: f64,
    pub solver: ContinuousOptions,
}

impl Default for ContinuousCompareConfig {
    fn default() -> Self {
        ContinuousCompareConfig { te_ratio: 8.0, rates: vec![5e-4, 1e-3], end_omega0: 3.0, solver: ContinuousOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingularPointsConfig {
    pub te_ratios: Vec<f64>,
    pub l_max: u32,
    pub omega0: AxisRange,
    pub omega1: AxisRange,
    pub full_omega0_count: usize,
    pub full_omega1_count: usize,
}

impl Default for SingularPointsConfig {
    fn default() -> Self {
        SingularPointsConfig {
            te_ratios: vec![8.0, 15.0],
            l_max: 3,
            omega0: AxisRange::new(-6.0, 6.0, 241),
            omega1: AxisRange::new(0.05, 4.0, 80),
            full_omega0_count: 1201,
            full_omega1_count: 400,
        }
    }
}

/// Everything a run needs. CLI flags override the file; see the README for
/// the precedence of the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Option<ScenarioName>,
    pub output_dir: Option<PathBuf>,
    /// Worker threads; all available cores when absent.
    pub threads: Option<usize>,
    /// Use the full-resolution grids instead of the desk-scale defaults.
    pub full_scale: bool,
    /// Adiabaticity threshold separating the segment labels.
    pub threshold: f64,
    pub substeps: SubstepPolicy,
    pub timing: Option<SequenceTiming>,
    pub profile: Option<FieldProfile>,
    /// CSV with columns `tau,omega0` and optionally `omega1`.
    pub profile_csv: Option<PathBuf>,
    pub cycle: CyclePoint,
    pub sweep: Option<SweepConfig>,
    pub cycle_properties: CyclePropertiesConfig,
    pub linear_ramp: LinearRampConfig,
    pub ramp_rate_map: RampRateMapConfig,
    pub harmonic: HarmonicConfig,
    pub return_to_origin: ReturnToOriginConfig,
    pub continuous_compare: ContinuousCompareConfig,
    pub singular_points: SingularPointsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: None,
            output_dir: None,
            threads: None,
            full_scale: false,
            threshold: DEFAULT_THRESHOLD,
            substeps: SubstepPolicy::default(),
            timing: None,
            profile: None,
            profile_csv: None,
            cycle: CyclePoint::default(),
            sweep: None,
            cycle_properties: CyclePropertiesConfig::default(),
            linear_ramp: LinearRampConfig::default(),
            ramp_rate_map: RampRateMapConfig::default(),
            harmonic: HarmonicConfig::default(),
            return_to_origin: ReturnToOriginConfig::default(),
            continuous_compare: ContinuousCompareConfig::default(),
            singular_points: SingularPointsConfig::default(),
        }
    }
}

fn default_te() -> f64 {
    15.0
}

fn one() -> f64 {
    1.0
}

fn default_ramp() -> f64 {
    1e-3
}

fn check_te(field: &str, te: f64) -> Result<()> {
    if te.is_finite() && te > 1.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be a finite number above 1, got {te}")))
    }
}

fn check_positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive and finite, got {v}")))
    }
}

fn check_finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite, got {v}")))
    }
}

fn check_list(field: &str, values: &[f64], check: impl Fn(&str, f64) -> Result<()>) -> Result<()> {
    if values.is_empty() {
        return Err(Error::config(field, "list is empty"));
    }
    values.iter().enumerate().try_for_each(|(i, &v)| check(&format!("{field}[{i}]"), v))
}

fn check_count(field: &str, n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::config(field, "must be at least 1"))
    } else {
        Ok(())
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::config(toml_field(&e), e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_toml_str(&text).map_err(|e| match e {
            Error::Config { field, message } => Error::config(field, format!("{message} (in {})", path.display())),
            other => other,
        })
    }

    /// Checks every section; called before any computation.
    pub fn validate(&self) -> Result<()> {
        if self.threads == Some(0) {
            return Err(Error::config("threads", "must be at least 1"));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::config("threshold", "must be positive and finite"));
        }
        self.substeps.validate()?;
        if let Some(t) = &self.timing {
            t.validate()?;
        }
        if let Some(p) = &self.profile {
            if self.profile_csv.is_some() {
                return Err(Error::config("profile_csv", "give either `profile` or `profile_csv`, not both"));
            }
            let end = self.timing.map(|t| t.echo_count as f64).unwrap_or(0.0);
            p.validate(0.0, end).map_err(|e| Error::config("profile", e.to_string()))?;
        }
        self.cycle.validate()?;
        if let Some(s) = &self.sweep {
            s.validate()?;
        }

        let c = &self.cycle_properties;
        check_list("cycle_properties.te_ratios", &c.te_ratios, check_te)?;
        check_positive("cycle_properties.omega1", c.omega1)?;
        c.omega0.validate("cycle_properties.omega0")?;

        let l = &self.linear_ramp;
        check_te("linear_ramp.te_ratio", l.te_ratio)?;
        check_positive("linear_ramp.omega1", l.omega1)?;
        check_list("linear_ramp.rates", &l.rates, |f, v| {
            check_finite(f, v)?;
            if v < 0.0 {
                return Err(Error::config(f, "rates must be non-negative"));
            }
            Ok(())
        })?;
        check_positive("linear_ramp.end_omega0", l.end_omega0)?;
        check_count("linear_ramp.static_echoes", l.static_echoes)?;

        let r = &self.ramp_rate_map;
        check_te("ramp_rate_map.te_ratio", r.te_ratio)?;
        check_positive("ramp_rate_map.omega1", r.omega1)?;
        r.omega0.validate("ramp_rate_map.omega0")?;
        if r.omega0.min < 0.0 {
            return Err(Error::config("ramp_rate_map.omega0", "ramps start from resonance, so offsets must be non-negative"));
        }
        r.log10_rate.validate("ramp_rate_map.log10_rate")?;
        check_count("ramp_rate_map.full_omega0_count", r.full_omega0_count)?;
        check_count("ramp_rate_map.full_rate_count", r.full_rate_count)?;

        let h = &self.harmonic;
        check_te("harmonic.te_ratio", h.te_ratio)?;
        check_finite("harmonic.amplitude", h.amplitude)?;
        check_list("harmonic.periods", &h.periods, check_positive)?;
        check_positive("harmonic.repeats", h.repeats)?;

        let o = &self.return_to_origin;
        check_te("return_to_origin.te_ratio", o.te_ratio)?;
        check_positive("return_to_origin.rate", o.rate)?;
        o.grid.validate("return_to_origin.grid")?;
        check_count("return_to_origin.full_count", o.full_count)?;
        check_positive("return_to_origin.reversible_tolerance", o.reversible_tolerance)?;
        check_positive("return_to_origin.transition_tolerance", o.transition_tolerance)?;

        let k = &self.continuous_compare;
        check_te("continuous_compare.te_ratio", k.te_ratio)?;
        check_list("continuous_compare.rates", &k.rates, check_positive)?;
        check_positive("continuous_compare.end_omega0", k.end_omega0)?;
        check_positive("continuous_compare.solver.step", k.solver.step)?;
        check_positive("continuous_compare.solver.max_angle_step", k.solver.max_angle_step)?;

        let s = &self.singular_points;
        check_list("singular_points.te_ratios", &s.te_ratios, check_te)?;
        if s.l_max == 0 {
            return Err(Error::config("singular_points.l_max", "must be at least 1"));
        }
        s.omega0.validate("singular_points.omega0")?;
        s.omega1.validate("singular_points.omega1")?;
        if s.omega1.min <= 0.0 {
            return Err(Error::config("singular_points.omega1", "omega1 values must be positive"));
        }
        check_count("singular_points.full_omega0_count", s.full_omega0_count)?;
        check_count("singular_points.full_omega1_count", s.full_omega1_count)?;
        Ok(())
    }

    /// The profile for `simulate`, `decompose` and `adiabaticity`, from the
    /// inline table or the CSV file.
    pub fn resolved_profile(&self) -> Result<Option<FieldProfile>> {
        match (&self.profile, &self.profile_csv) {
            (Some(p), None) => Ok(Some(p.clone())),
            (None, Some(path)) => FieldProfile::from_csv_path(path).map(Some).map_err(|e| Error::config("profile_csv", e.to_string())),
            (None, None) => Ok(None),
            (Some(_), Some(_)) => Err(Error::config("profile_csv", "give either `profile` or `profile_csv`, not both")),
        }
    }
}

/// Best-effort key path for a TOML error.
fn toml_field(e: &toml::de::Error) -> String {
    let msg = e.message();
    if let Some(start) = msg.find('`') {
        if let Some(len) = msg[start + 1..].find('`') {
            return msg[start + 1..start + 1 + len].to_string();
        }
    }
    "config".to_string()
}

/// Resizes an axis to `count` points over the same span.
pub fn with_count(r: AxisRange, count: usize) -> AxisRange {
    AxisRange::new(r.min, r.max, count)
}
