//! Scenario kernels and the runners that turn them into files.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::adiabaticity::{
    adiabaticity, adiabaticity_grid, adiabaticity_trace, critical_rates, nu0_minima, singular_points, AdiabaticityTrace, AxisRange, MapKind,
};
use crate::cycle::{effective_rotation, CycleParams};
use crate::eigenmode::{decompose, project_cpmg};
use crate::error::{Error, Result};
use crate::profile::FieldProfile;
use crate::rotation::Vec3;
use crate::simulator::{simulate_cpmg, simulate_cpmg_from, EchoTrain, SequenceTiming, SubstepPolicy};
use crate::theory::{
    continuous_mode_evolution, echo_axes, first_order_trace, mode_trace_from_train, segment_offset_range, ContinuousOptions, ContinuousSolution, FirstOrder,
    ModeTrace, RegionSegmentation,
};

use super::config::{
    with_count, ContinuousCompareConfig, CyclePropertiesConfig, HarmonicConfig, LinearRampConfig, RampRateMapConfig, ReturnToOriginConfig, RunConfig,
    ScenarioName, SingularPointsConfig, SweepConfig, SweepQuantity,
};
use super::output::{adiabaticity_table, echo_table, first_order_table, grid_table, map_table, mode_table, OutputSet, Table};

/// Segmentation samples per unit offset.
const SEGMENT_DENSITY: f64 = 200.0;

fn rate_tag(rate: f64) -> String {
    format!("{rate:e}")
}

fn rms(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n as f64).sqrt()
}

/// A linear ramp from resonance, with its mode decomposition and predictions.
#[derive(Clone, Debug)]
pub struct LinearRampRun {
    pub rate: f64,
    pub profile: FieldProfile,
    pub timing: SequenceTiming,
    pub train: EchoTrain,
    pub modes: ModeTrace,
    pub first_order: Vec<FirstOrder>,
    pub segments: RegionSegmentation,
}

/// Echo count that takes a ramp from resonance to `end`.
pub fn ramp_echoes(rate: f64, end: f64) -> usize {
    ((end / rate).ceil() as usize).max(1)
}

pub fn linear_ramp_run(cfg: &LinearRampConfig, rate: f64, substeps: SubstepPolicy, threshold: f64) -> Result<LinearRampRun> {
    let echoes = if rate == 0.0 { cfg.static_echoes } else { ramp_echoes(rate, cfg.end_omega0) };
    let profile = FieldProfile::linear(0.0, rate).with_nutation(crate::profile::NutationProfile::Constant { value: cfg.omega1 });
    let timing = SequenceTiming::new(cfg.te_ratio, echoes);
    let train = simulate_cpmg(&profile, &timing, substeps)?;
    let modes = mode_trace_from_train(&train, &profile, &timing)?;
    let first_order = first_order_trace(&profile, &timing)?;
    let end = profile.omega0(echoes as f64);
    let samples = ((end * SEGMENT_DENSITY).ceil() as usize).max(1) + 1;
    let segments = segment_offset_range(AxisRange::new(0.0, end, samples), cfg.omega1, cfg.te_ratio, rate, threshold)?;
    Ok(LinearRampRun { rate, profile, timing, train, modes, first_order, segments })
}

/// Simulated `a0` and `|a_CP|` over `(omega0, rate)` for ramps from
/// resonance, each sampled at the echo nearest to the requested offset.
/// Row-major in `rates`.
pub fn a0_map(te_ratio: f64, omega1: f64, omega0: &AxisRange, rates: &[f64], substeps: SubstepPolicy) -> Result<(Vec<f64>, Vec<f64>)> {
    let xs = omega0.values();
    let rows = rates
        .par_iter()
        .map(|&rate| -> Result<Vec<(f64, f64)>> {
            let profile = FieldProfile::linear(0.0, rate).with_nutation(crate::profile::NutationProfile::Constant { value: omega1 });
            let n = ramp_echoes(rate, omega0.max);
            let timing = SequenceTiming::new(te_ratio, n);
            let train = simulate_cpmg(&profile, &timing, substeps)?;
            let axes = echo_axes(&profile, &timing)?;
            Ok(xs
                .iter()
                .map(|&w| {
                    let k = ((w / rate).round() as usize).min(n);
                    let a = decompose(train.records[k].m, &axes.oriented[k].basis());
                    (a.a0, a.cp_magnitude())
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let flat: Vec<(f64, f64)> = rows.into_iter().flatten().collect();
    Ok((flat.iter().map(|p| p.0).collect(), flat.iter().map(|p| p.1).collect()))
}

/// One harmonic path `omega0 = A sin(2 pi tau / T)`.
#[derive(Clone, Debug)]
pub struct HarmonicPath {
    pub period: f64,
    pub profile: FieldProfile,
    pub timing: SequenceTiming,
    pub train: EchoTrain,
    pub modes: ModeTrace,
    pub adiabaticity: AdiabaticityTrace,
    pub min_adiabaticity: f64,
    /// `|M(T) - M(0)|` at the echo nearest to one period.
    pub periodicity_error: f64,
    pub max_cp_magnitude: f64,
}

pub fn harmonic_path(cfg: &HarmonicConfig, period: f64, substeps: SubstepPolicy) -> Result<HarmonicPath> {
    let echoes = ((period * cfg.repeats).round() as usize).max(1);
    let profile = FieldProfile::harmonic(cfg.amplitude, period);
    let timing = SequenceTiming::new(cfg.te_ratio, echoes);
    let train = simulate_cpmg(&profile, &timing, substeps)?;
    let modes = mode_trace_from_train(&train, &profile, &timing)?;
    let trace = adiabaticity_trace(&profile, &timing)?;
    let min_adiabaticity = trace.minimum().map(|s| s.adiabaticity).unwrap_or(f64::INFINITY);
    let k = (period.round() as usize).min(echoes);
    let periodicity_error = (train.records[k].m - train.records[0].m).norm();
    let max_cp_magnitude = modes.cp_magnitude().into_iter().fold(0.0, f64::max);
    Ok(HarmonicPath { period, profile, timing, train, modes, adiabaticity: trace, min_adiabaticity, periodicity_error, max_cp_magnitude })
}

/// Outcome of one excursion `start -> peak -> start`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReturnCell {
    pub start: f64,
    pub peak: f64,
    pub echoes: usize,
    /// Magnetization at the end of the excursion.
    pub m: Vec3,
    /// `M_CPMG(0)` and `M_CPMG(T)`, both projected on the static axis at `start`.
    pub cpmg_initial: Vec3,
    pub cpmg_final: Vec3,
    pub reversibility_error: f64,
}

/// Simulates one excursion at `|ramp| = rate`.
pub fn return_to_origin_cell(start: f64, peak: f64, rate: f64, te_ratio: f64, substeps: SubstepPolicy) -> Result<ReturnCell> {
    let profile = FieldProfile::bilinear(start, peak, rate);
    let length = profile.offset.excursion_length().unwrap_or(0.0);
    let echoes = (length.ceil() as usize).max(1);
    let timing = SequenceTiming::new(te_ratio, echoes);
    let train = simulate_cpmg(&profile, &timing, substeps)?;
    let axis = effective_rotation(&CycleParams::new(start, 1.0, te_ratio))?.axis();
    let (m0, m) = (train.records[0].m, train.last().m);
    let (cpmg_initial, cpmg_final) = (project_cpmg(m0, axis), project_cpmg(m, axis));
    Ok(ReturnCell { start, peak, echoes, m, cpmg_initial, cpmg_final, reversibility_error: (cpmg_final - cpmg_initial).norm() })
}

/// Excursion grid over `(start, peak)`; `cells[ipeak * n + istart]`.
#[derive(Clone, Debug)]
pub struct ReturnGrid {
    pub axis: AxisRange,
    pub cells: Vec<ReturnCell>,
}

pub fn return_to_origin_grid(axis: AxisRange, rate: f64, te_ratio: f64, substeps: SubstepPolicy) -> Result<ReturnGrid> {
    axis.validate("return_to_origin.grid")?;
    let xs = axis.values();
    let pairs: Vec<(f64, f64)> = xs.iter().flat_map(|&peak| xs.iter().map(move |&start| (start, peak))).collect();
    let cells = pairs.par_iter().map(|&(start, peak)| return_to_origin_cell(start, peak, rate, te_ratio, substeps)).collect::<Result<Vec<_>>>()?;
    Ok(ReturnGrid { axis, cells })
}

/// Size of the reversible square around the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CentralSquare {
    /// Largest grid half-width whose square is reversible throughout.
    pub inner: f64,
    /// Next grid half-width, where the square first contains an irreversible cell.
    pub outer: Option<f64>,
    /// Midpoint of `inner` and `outer`.
    pub half_width: f64,
}

impl ReturnGrid {
    pub fn get(&self, istart: usize, ipeak: usize) -> &ReturnCell {
        &self.cells[ipeak * self.axis.count + istart]
    }

    /// Grows a square centred on the origin one grid ring at a time while
    /// every cell inside stays below `tolerance`.
    pub fn central_square(&self, tolerance: f64) -> Option<CentralSquare> {
        let xs = self.axis.values();
        let mut radii: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        let ok = |g: f64| self.cells.iter().filter(|c| c.start.abs() <= g && c.peak.abs() <= g).all(|c| c.reversibility_error < tolerance);
        let mut inner = None;
        for (i, &g) in radii.iter().enumerate() {
            if ok(g) {
                inner = Some(g);
                continue;
            }
            return inner
                .map(|inner| CentralSquare { inner, outer: Some(g), half_width: 0.5 * (inner + g) })
                .or_else(|| (i == 0).then_some(CentralSquare { inner: 0.0, outer: Some(g), half_width: 0.5 * g }));
        }
        inner.map(|inner| CentralSquare { inner, outer: None, half_width: inner })
    }

    /// Largest reversibility error over cells with both offsets strictly inside `half_width`.
    pub fn max_error_inside(&self, half_width: f64) -> f64 {
        self.cells.iter().filter(|c| c.start.abs() < half_width && c.peak.abs() < half_width).map(|c| c.reversibility_error).fold(0.0, f64::max)
    }
}

/// Direct simulation and continuous-limit solution from a pure CPMG state.
#[derive(Clone, Debug)]
pub struct ContinuousComparison {
    pub rate: f64,
    pub simulated: ModeTrace,
    pub continuous: ContinuousSolution,
    pub rms_a0: f64,
    pub rms_cp: f64,
}

pub fn continuous_comparison(te_ratio: f64, rate: f64, end_omega0: f64, options: ContinuousOptions, substeps: SubstepPolicy) -> Result<ContinuousComparison> {
    let profile = FieldProfile::linear(0.0, rate);
    let timing = SequenceTiming::new(te_ratio, ramp_echoes(rate, end_omega0));
    let m0 = echo_axes(&profile, &SequenceTiming { echo_count: 1, ..timing })?.oriented[0].axis;
    let train = simulate_cpmg_from(&profile, &timing, substeps, m0)?;
    let simulated = mode_trace_from_train(&train, &profile, &timing)?;
    let continuous = continuous_mode_evolution(&profile, &timing, m0, options)?;
    let rms_a0 = rms(&simulated.a0(), &continuous.trace.a0());
    let rms_cp = rms(&simulated.cp_magnitude(), &continuous.trace.cp_magnitude());
    Ok(ContinuousComparison { rate, simulated, continuous, rms_a0, rms_cp })
}

/// Runs a named scenario, writing its files and a summary into `out`.
pub fn run_scenario(name: ScenarioName, config: &RunConfig, out: &mut OutputSet) -> Result<serde_json::Value> {
    config.validate()?;
    let summary = match name {
        ScenarioName::CycleProperties => cycle_properties(&config.cycle_properties, out)?,
        ScenarioName::LinearRamp => linear_ramp(&config.linear_ramp, config, out)?,
        ScenarioName::RampRateMap => ramp_rate_map(&config.ramp_rate_map, config, out)?,
        ScenarioName::Harmonic => harmonic(&config.harmonic, config, out)?,
        ScenarioName::ReturnToOrigin => return_to_origin(&config.return_to_origin, config, out)?,
        ScenarioName::ContinuousCompare => continuous_compare(&config.continuous_compare, config, out)?,
        ScenarioName::SingularPoints => singular(&config.singular_points, config.full_scale, out)?,
    };
    out.write_text("README.md", &readme(name))?;
    out.write_json("summary.json", &summary)?;
    Ok(summary)
}

fn cycle_properties(cfg: &CyclePropertiesConfig, out: &mut OutputSet) -> Result<serde_json::Value> {
    let xs = cfg.omega0.values();
    let mut minima = Vec::new();
    for &te in &cfg.te_ratios {
        let rows = xs
            .par_iter()
            .map(|&w0| -> Result<[f64; 10]> {
                let p = CycleParams::new(w0, cfg.omega1, te);
                let er = effective_rotation(&p)?;
                let n = er.axis();
                let nu = critical_rates(&p)?;
                Ok([w0, er.alpha, n.x, n.y, n.z, er.n_perp, er.epsilon, er.alpha, super::output::cap(nu.nu0), super::output::cap(nu.nu1)])
            })
            .collect::<Result<Vec<_>>>()?;
        let mut t = Table::new(&["omega0_norm", "alpha", "n_x", "n_y", "n_z", "n_perp", "epsilon", "energy_plus", "nu0_crit", "nu1_crit"])
            .comment(format!("te_ratio={te} omega1_norm={}", cfg.omega1))
            .comment("energy levels are 0 and +-energy_plus in units of hbar/t_E");
        rows.iter().for_each(|r| t.row(r));
        out.write_table(&format!("cycle_te{te}.csv"), &t)?;
        let found = nu0_minima(te, cfg.omega1, cfg.omega0.min, cfg.omega0.max, 0.01)?;
        minima.push(json!({ "te_ratio": te, "nu0_minima": found.iter().map(|(w, v)| json!({"omega0": w, "nu0": v})).collect::<Vec<_>>() }));
    }
    Ok(json!({ "scenario": "cycle-properties", "omega1": cfg.omega1, "minima": minima }))
}

fn linear_ramp(cfg: &LinearRampConfig, config: &RunConfig, out: &mut OutputSet) -> Result<serde_json::Value> {
    let runs = cfg.rates.par_iter().map(|&r| linear_ramp_run(cfg, r, config.substeps, config.threshold)).collect::<Result<Vec<_>>>()?;
    let mut items = Vec::new();
    for run in &runs {
        let tag = rate_tag(run.rate);
        out.write_table(&format!("linear_ramp_rate{tag}_echoes.csv"), &echo_table(&run.train))?;
        out.write_table(&format!("linear_ramp_rate{tag}_modes.csv"), &mode_table(&run.modes))?;
        out.write_table(&format!("linear_ramp_rate{tag}_first_order.csv"), &first_order_table(&run.first_order))?;
        out.write_json(&format!("linear_ramp_rate{tag}_segments.json"), &run.segments)?;
        let first = run.modes.records.first().map(|r| r.a0).unwrap_or(0.0);
        let last = run.modes.records.last().map(|r| r.a0).unwrap_or(0.0);
        items.push(json!({
            "rate": run.rate,
            "echoes": run.timing.echo_count,
            "a0_initial": first,
            "a0_final": last,
            "max_norm_error": run.train.max_norm_error(),
            "non_adiabatic": run.segments.non_adiabatic().map(|s| [s.start, s.end]).collect::<Vec<_>>(),
        }));
    }
    Ok(json!({ "scenario": "linear-ramp", "te_ratio": cfg.te_ratio, "threshold": config.threshold, "runs": items }))
}

fn log_rates(r: &AxisRange) -> Vec<f64> {
    r.values().into_iter().map(|e| 10f64.powf(e)).collect()
}

fn ramp_rate_map(cfg: &RampRateMapConfig, config: &RunConfig, out: &mut OutputSet) -> Result<serde_json::Value> {
    let (omega0, log_rate) = if config.full_scale {
        (with_count(cfg.omega0, cfg.full_omega0_count), with_count(cfg.log10_rate, cfg.full_rate_count))
    } else {
        (cfg.omega0, cfg.log10_rate)
    };
    let rates = log_rates(&log_rate);
    let (a0, cp) = a0_map(cfg.te_ratio, cfg.omega1, &omega0, &rates, config.substeps)?;
    out.write_table("a0_map.csv", &grid_table("omega0_norm", &omega0, "log10_ramp0", &log_rate, "a0", &a0))?;
    out.write_table("cp_map.csv", &grid_table("omega0_norm", &omega0, "log10_ramp0", &log_rate, "cp_magnitude", &cp))?;
    let contour = threshold_contour(cfg.te_ratio, cfg.omega1, &omega0, &rates, config.threshold)?;
    let mut t = Table::new(&["omega0_norm", "log10_ramp0"]).comment(format!("adiabaticity = {}", config.threshold));
    contour.iter().for_each(|&(w, r)| t.row(&[w, r.log10()]));
    out.write_table("threshold_contour.csv", &t)?;
    Ok(json!({
        "scenario": "ramp-rate-map",
        "te_ratio": cfg.te_ratio,
        "omega0": omega0,
        "log10_rate": log_rate,
        "contour_points": contour.len(),
    }))
}

/// Threshold crossings of the adiabaticity along each rate.
fn threshold_contour(te_ratio: f64, omega1: f64, omega0: &AxisRange, rates: &[f64], threshold: f64) -> Result<Vec<(f64, f64)>> {
    let fine = AxisRange::new(omega0.min, omega0.max, ((omega0.max - omega0.min) * SEGMENT_DENSITY).ceil() as usize + 1);
    let rows = rates
        .par_iter()
        .map(|&r| -> Result<Vec<(f64, f64)>> {
            let seg = segment_offset_range(fine, omega1, te_ratio, r, threshold)?;
            Ok(seg.segments.iter().skip(1).map(|s| (s.start, r)).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn harmonic(cfg: &HarmonicConfig, config: &RunConfig, out: &mut OutputSet) -> Result<serde_json::Value> {
    let paths = cfg.periods.par_iter().map(|&p| harmonic_path(cfg, p, config.substeps)).collect::<Result<Vec<_>>>()?;
    let mut items = Vec::new();
    for (i, path) in paths.iter().enumerate() {
        let tag = format!("path{}", i + 1);
        out.write_table(&format!("harmonic_{tag}_echoes.csv"), &echo_table(&path.train))?;
        out.write_table(&format!("harmonic_{tag}_modes.csv"), &mode_table(&path.modes))?;
        out.write_table(&format!("harmonic_{tag}_adiabaticity.csv"), &adiabaticity_table(&path.adiabaticity))?;
        items.push(json!({
            "path": tag,
            "period": path.period,
            "echoes": path.timing.echo_count,
            "min_adiabaticity": super::output::cap(path.min_adiabaticity),
            "periodicity_error": path.periodicity_error,
            "max_cp_magnitude": path.max_cp_magnitude,
        }));
    }
    Ok(json!({ "scenario": "harmonic", "te_ratio": cfg.te_ratio, "amplitude": cfg.amplitude, "paths": items }))
}

fn return_to_origin(cfg: &ReturnToOriginConfig, config: &RunConfig, out: &mut OutputSet) -> Result<serde_json::Value> {
    let axis = if config.full_scale { with_count(cfg.grid, cfg.full_count) } else { cfg.grid };
    let grid = return_to_origin_grid(axis, cfg.rate, cfg.te_ratio, config.substeps)?;
    let values = |f: &dyn Fn(&ReturnCell) -> f64| grid.cells.iter().map(f).collect::<Vec<f64>>();
    let map = |name: &str, v: &[f64]| grid_table("omega0_start", &axis, "omega0_peak", &axis, name, v);
    out.write_table("mx_final.csv", &map("Mx", &values(&|c| c.m.x)))?;
    out.write_table("cpmg_x_final.csv", &map("M_cpmg_x", &values(&|c| c.cpmg_final.x)))?;
    out.write_table("reversibility_error.csv", &map("reversibility_error", &values(&|c| c.reversibility_error)))?;
    let mut initial = Table::new(&["omega0_norm", "M_cpmg_x_initial", "adiabaticity"]).comment(format!("ramp magnitude {}", cfg.rate));
    for (i, &w) in axis.values().iter().enumerate() {
        let a = adiabaticity(&CycleParams::new(w, 1.0, cfg.te_ratio).with_ramps(cfg.rate, 0.0))?;
        initial.row(&[w, grid.get(i, i).cpmg_initial.x, super::output::cap(a)]);
    }
    out.write_table("initial_cpmg.csv", &initial)?;
    let square = grid.central_square(cfg.transition_tolerance);
    let inside = square.map(|s| grid.max_error_inside(s.inner + 0.5 * axis.spacing()));
    Ok(json!({
        "scenario": "return-to-origin",
        "te_ratio": cfg.te_ratio,
        "rate": cfg.rate,
        "grid": axis,
        "transition_tolerance": cfg.transition_tolerance,
        "reversible_tolerance": cfg.reversible_tolerance,
        "central_square": square,
        "max_error_inside_square": inside,
        "reversible_inside_square": inside.map(|e| e < cfg.reversible_tolerance),
        "grid_spacing": axis.spacing(),
    }))
}

fn continuous_compare(cfg: &ContinuousCompareConfig, config: &RunConfig, out: &mut OutputSet) -> Result<serde_json::Value> {
    let runs =
        cfg.rates.par_iter().map(|&r| continuous_comparison(cfg.te_ratio, r, cfg.end_omega0, cfg.solver, config.substeps)).collect::<Result<Vec<_>>>()?;
    let mut items = Vec::new();
    for run in &runs {
        let tag = rate_tag(run.rate);
        out.write_table(&format!("compare_rate{tag}_simulated.csv"), &mode_table(&run.simulated))?;
        out.write_table(&format!("compare_rate{tag}_continuous.csv"), &mode_table(&run.continuous.trace))?;
        items.push(json!({
            "rate": run.rate,
            "rms_a0": run.rms_a0,
            "rms_cp_magnitude": run.rms_cp,
            "flip_points": run.continuous.flip_points,
            "renormalizations": run.continuous.renormalizations,
            "steps": run.continuous.steps,
        }));
    }
    Ok(json!({ "scenario": "continuous-compare", "te_ratio": cfg.te_ratio, "runs": items }))
}

/// Crossings of `omega1 = 1` with the singular circles, `(l, omega0)`.
pub fn unit_nutation_crossings(l_max: u32) -> Vec<(u32, f64)> {
    (1..=l_max)
        .flat_map(|l| {
            let x = (4.0 * (l * l) as f64 - 1.0).sqrt();
            [(l, -x), (l, x)]
        })
        .collect()
}

fn singular(cfg: &SingularPointsConfig, full_scale: bool, out: &mut OutputSet) -> Result<serde_json::Value> {
    let (omega0, omega1) =
        if full_scale { (with_count(cfg.omega0, cfg.full_omega0_count), with_count(cfg.omega1, cfg.full_omega1_count)) } else { (cfg.omega0, cfg.omega1) };
    let mut counts = Vec::new();
    for &te in &cfg.te_ratios {
        let points = singular_points(te, cfg.l_max, omega1.max)?;
        let mut t = Table::new(&["omega0_norm", "omega1_norm", "l", "m"]).comment(format!("te_ratio={te}"));
        points.iter().for_each(|p| t.row(&[p.omega0, p.omega1, p.l as f64, p.m as f64]));
        out.write_table(&format!("singular_points_te{te}.csv"), &t)?;
        for kind in [MapKind::Nu0, MapKind::Nu1] {
            let map = adiabaticity_grid(te, kind, omega0, omega1)?;
            out.write_table(&format!("{}_map_te{te}.csv", kind.value_name()), &map_table(&map))?;
        }
        counts.push(json!({ "te_ratio": te, "points": points.len() }));
    }
    let mut t = Table::new(&["l", "omega0_norm"]).comment("omega1_norm=1");
    unit_nutation_crossings(cfg.l_max).iter().for_each(|&(l, w)| t.row(&[l as f64, w]));
    out.write_table("unit_nutation_crossings.csv", &t)?;
    Ok(json!({ "scenario": "singular-points", "l_max": cfg.l_max, "te_ratios": counts }))
}

/// Evaluates a sweep grid; `values[iy * nx + ix]`.
pub fn sweep_values(cfg: &SweepConfig, substeps: SubstepPolicy) -> Result<Vec<f64>> {
    let y = cfg.y_axis();
    match cfg.quantity {
        SweepQuantity::Nu0 => Ok(adiabaticity_grid(cfg.te_ratio, MapKind::Nu0, cfg.x, y)?.values),
        SweepQuantity::Nu1 => Ok(adiabaticity_grid(cfg.te_ratio, MapKind::Nu1, cfg.x, y)?.values),
        SweepQuantity::Adiabaticity => Ok(adiabaticity_grid(cfg.te_ratio, MapKind::OffsetRamp { omega1: cfg.omega1 }, cfg.x, y)?.values),
        SweepQuantity::A0 => Ok(a0_map(cfg.te_ratio, cfg.omega1, &cfg.x, &y.values(), substeps)?.0),
    }
}

/// Runs the configured sweep and writes the grid with its overlays.
pub fn run_sweep(config: &RunConfig, out: &mut OutputSet) -> Result<serde_json::Value> {
    config.validate()?;
    let cfg = config.sweep.ok_or_else(|| Error::config("sweep", "no [sweep] section given"))?;
    let y = cfg.y_axis();
    let values: Vec<f64> = sweep_values(&cfg, config.substeps)?.into_iter().map(super::output::cap).collect();
    let name = cfg.quantity.name();
    let value_name = match cfg.quantity {
        SweepQuantity::Nu0 => "nu0_crit",
        SweepQuantity::Nu1 => "nu1_crit",
        SweepQuantity::Adiabaticity => "adiabaticity",
        SweepQuantity::A0 => "a0",
    };
    let table = grid_table("omega0_norm", &cfg.x, cfg.quantity.y_name(), &y, value_name, &values).comment(format!("te_ratio={}", cfg.te_ratio));
    out.write_table(&format!("sweep_{name}.csv"), &table)?;
    let overlay = match cfg.quantity {
        SweepQuantity::Nu0 | SweepQuantity::Nu1 => {
            let points: Vec<_> =
                singular_points(cfg.te_ratio, 8, y.max)?.into_iter().filter(|p| p.omega0 >= cfg.x.min && p.omega0 <= cfg.x.max && p.omega1 >= y.min).collect();
            let mut t = Table::new(&["omega0_norm", "omega1_norm", "l", "m"]);
            points.iter().for_each(|p| t.row(&[p.omega0, p.omega1, p.l as f64, p.m as f64]));
            out.write_table("sweep_singular_points.csv", &t)?;
            points.len()
        }
        SweepQuantity::Adiabaticity | SweepQuantity::A0 => {
            let contour = threshold_contour(cfg.te_ratio, cfg.omega1, &cfg.x, &y.values(), config.threshold)?;
            let mut t = Table::new(&["omega0_norm", "ramp0"]).comment(format!("adiabaticity = {}", config.threshold));
            contour.iter().for_each(|&(w, r)| t.row(&[w, r]));
            out.write_table("sweep_threshold_contour.csv", &t)?;
            contour.len()
        }
    };
    out.write_json("summary.json", &json!({ "sweep": name, "cells": values.len(), "overlay_points": overlay }))?;
    Ok(json!({ "sweep": name, "cells": values.len() }))
}

fn readme(name: ScenarioName) -> String {
    let body = match name {
        ScenarioName::CycleProperties => {
            "Effective rotation of one refocusing cycle versus normalized offset, one file per echo-spacing ratio: \
             angle alpha, axis components, azimuth, the CP energy level and both critical ramp rates. \
             Mirrors the figures of alpha and n versus offset, the energy diagram and the critical-rate cross sections. \
             summary.json lists the local minima of nu0_crit."
        }
        ScenarioName::LinearRamp => {
            "Linear offset ramps starting from resonance. For each rate: the echo train, the CPMG and CP mode amplitudes \
             with the instantaneous adiabaticity, the first-order spin-locking prediction of Mx and |My|, and the \
             adiabatic/non-adiabatic segmentation. Mirrors the linear-ramp magnetization, mode amplitude and first-order comparison figures."
        }
        ScenarioName::RampRateMap => {
            "Simulated CPMG amplitude a0 and CP magnitude over offset and log10 ramp rate for ramps from resonance, \
             with the adiabaticity threshold contour. Mirrors the 2-D map of mode levels versus offset and ramp rate."
        }
        ScenarioName::Harmonic => {
            "Harmonic offset fluctuations of fixed amplitude and three periods: the echo trains, mode amplitudes and the \
             adiabaticity along each path. summary.json gives the minimum adiabaticity, |M(T) - M(0)| and the largest CP magnitude. \
             Mirrors the harmonic path and magnetization figures."
        }
        ScenarioName::ReturnToOrigin => {
            "Offset excursions start -> peak -> start at a fixed ramp magnitude over a square grid. Maps of Mx(T), the \
             in-phase CPMG component at T and |M_CPMG(T) - M_CPMG(0)|, plus the initial CPMG component and adiabaticity \
             versus offset. summary.json gives the measured central reversible square. Mirrors the return-to-origin figures."
        }
        ScenarioName::ContinuousCompare => {
            "Mode amplitudes for linear ramps from a pure CPMG state, computed by direct simulation and by the \
             continuous-limit integrator, with RMS differences in summary.json. Mirrors the continuous-limit comparison figure."
        }
        ScenarioName::SingularPoints => {
            "Points where the cycle propagator is the identity, the critical-rate maps over offset and nutation they \
             punctuate, and the crossings of the nominal-nutation line with the singular circles. Mirrors the 2-D \
             critical-rate figure with its crosses."
        }
    };
    format!("# {name}\n\n{body}\n\nAll CSV floats are shortest round-trip decimals. Adiabaticity and critical rates are capped at 1e9.\n")
}
