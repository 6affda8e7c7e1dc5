//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error.
//! Output directory: `--out`, then `output_dir` in the config file, then
//! `CPMG_OUT_DIR`, then `./cpmg-out`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::SystemTime;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use cpmg_dynamics::adiabaticity::{adiabaticity, adiabaticity_trace, critical_rates, is_identity_cycle, theta};
use cpmg_dynamics::cycle::{azimuthal_correction, dynamic_rotation, effective_rotation, energy_levels};
use cpmg_dynamics::profile::FieldProfile;
use cpmg_dynamics::scenario::output::{adiabaticity_table, echo_table, first_order_table, mode_table};
use cpmg_dynamics::scenario::{run_scenario, run_sweep, OutputSet, RunConfig, ScenarioName, SweepQuantity};
use cpmg_dynamics::simulator::{simulate_cpmg, SequenceTiming};
use cpmg_dynamics::theory::{continuous_from_excitation, first_order_trace, mode_trace_from_train, segment_profile};
use cpmg_dynamics::{Error, Result};

const OUT_ENV: &str = "CPMG_OUT_DIR";
const DEFAULT_OUT: &str = "cpmg-out";

#[derive(Parser, Debug)]
#[command(name = "cpmg", version, about = "CPMG echo-train dynamics in drifting B0 and B1 fields")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Use full-resolution grids.
    #[arg(long, global = true)]
    full_scale: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Effective rotation, energy levels and critical rates of one cycle.
    Cycle(PointArgs),
    /// Adiabaticity at one point, or along the configured profile with --trace.
    Adiabaticity {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Evaluate along the profile and write a trace.
        #[arg(long)]
        trace: bool,
    },
    /// Simulate an echo train.
    Simulate(RunArgs),
    /// Simulate and decompose into CPMG and CP modes.
    Decompose {
        #[command(flatten)]
        run: RunArgs,
        /// Also integrate the continuous-limit equation.
        #[arg(long)]
        continuous: bool,
    },
    /// Run a canned experiment.
    Scenario {
        /// One of cycle-properties, linear-ramp, ramp-rate-map, harmonic,
        /// return-to-origin, continuous-compare, singular-points.
        name: Option<String>,
    },
    /// Evaluate the configured [sweep] grid.
    Sweep {
        /// Override the swept quantity: nu0, nu1, adiabaticity or a0.
        #[arg(long)]
        quantity: Option<String>,
    },
}

#[derive(Args, Debug, Default)]
struct PointArgs {
    #[arg(long, allow_hyphen_values = true)]
    omega0: Option<f64>,
    #[arg(long)]
    omega1: Option<f64>,
    #[arg(long)]
    te_ratio: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    ramp0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    ramp1: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// `t_E / t_180` of the sequence.
    #[arg(long = "te", value_name = "RATIO")]
    te: Option<f64>,
    /// Number of refocusing cycles.
    #[arg(long)]
    echoes: Option<usize>,
    /// Linear offset profile: rate per echo spacing.
    #[arg(long, allow_hyphen_values = true)]
    ramp: Option<f64>,
    /// Linear offset profile: offset at the excitation.
    #[arg(long, allow_hyphen_values = true)]
    start: Option<f64>,
    /// Tabulated profile with columns tau,omega0[,omega1].
    #[arg(long, value_name = "PATH")]
    profile_csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.threads.is_some() {
        config.threads = cli.threads;
    }
    if cli.full_scale {
        config.full_scale = true;
    }
    let out_dir = resolve_out_dir(cli.out.as_deref(), &config);
    config.output_dir = Some(out_dir.clone());
    config.validate()?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = config.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?
    };
    pool.install(|| dispatch(cli.command, config, &out_dir))
}

fn resolve_out_dir(flag: Option<&Path>, config: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn apply_point(config: &mut RunConfig, p: &PointArgs) -> Result<()> {
    let c = &mut config.cycle;
    c.omega0 = p.omega0.unwrap_or(c.omega0);
    c.omega1 = p.omega1.unwrap_or(c.omega1);
    c.te_ratio = p.te_ratio.unwrap_or(c.te_ratio);
    c.ramp0 = p.ramp0.unwrap_or(c.ramp0);
    c.ramp1 = p.ramp1.unwrap_or(c.ramp1);
    config.validate()
}

/// Timing and profile from flags, falling back to the config file.
fn apply_run(config: &mut RunConfig, r: &RunArgs) -> Result<(SequenceTiming, FieldProfile)> {
    let timing = match (config.timing, r.te, r.echoes) {
        (Some(t), te, n) => SequenceTiming { te_ratio: te.unwrap_or(t.te_ratio), echo_count: n.unwrap_or(t.echo_count), ..t },
        (None, Some(te), Some(n)) => SequenceTiming::new(te, n),
        (None, _, _) => return Err(Error::config("timing", "give [timing] in the config file or both --te and --echoes")),
    };
    config.timing = Some(timing);
    if let Some(path) = &r.profile_csv {
        config.profile = None;
        config.profile_csv = Some(path.clone());
    } else if r.ramp.is_some() || r.start.is_some() {
        config.profile_csv = None;
        config.profile = Some(FieldProfile::linear(r.start.unwrap_or(0.0), r.ramp.unwrap_or(0.0)));
    }
    config.validate()?;
    let profile = config.resolved_profile()?.ok_or_else(|| Error::config("profile", "give [profile], profile_csv, --profile-csv or --ramp"))?;
    profile.validate(0.0, timing.echo_count as f64).map_err(|e| Error::config("profile", e.to_string()))?;
    Ok((timing, profile))
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("JSON values always serialize"));
}

fn dispatch(command: Command, mut config: RunConfig, out_dir: &Path) -> Result<()> {
    let started = SystemTime::now();
    match command {
        Command::Cycle(point) => {
            apply_point(&mut config, &point)?;
            let p = config.cycle.params();
            let er = effective_rotation(&p)?;
            let dynamic = dynamic_rotation(&p)?;
            print_json(&json!({
                "params": p,
                "effective_rotation": er,
                "axis": er.axis(),
                "theta": if er.degenerate_axis { None } else { Some(er.theta()) },
                "energy_levels": energy_levels(&p)?,
                "critical_rates": critical_rates(&p)?,
                "delta_epsilon": azimuthal_correction(&p),
                "dynamic_axis": dynamic.axis(),
                "identity_propagator": is_identity_cycle(&p),
            }));
            Ok(())
        }
        Command::Adiabaticity { point, run, trace } => {
            if trace {
                let (timing, profile) = apply_run(&mut config, &run)?;
                let mut out = OutputSet::create(out_dir)?;
                out.write_table("adiabaticity.csv", &adiabaticity_table(&adiabaticity_trace(&profile, &timing)?))?;
                out.write_json("segments.json", &segment_profile(&profile, &timing, config.threshold)?)?;
                finish(out, "adiabaticity", &config, started)
            } else {
                apply_point(&mut config, &point)?;
                let p = config.cycle.params();
                print_json(&json!({
                    "params": p,
                    "adiabaticity": adiabaticity(&p)?,
                    "critical_rates": critical_rates(&p)?,
                    "theta": theta(&p).ok(),
                }));
                Ok(())
            }
        }
        Command::Simulate(run) => {
            let (timing, profile) = apply_run(&mut config, &run)?;
            let train = simulate_cpmg(&profile, &timing, config.substeps)?;
            let mut out = OutputSet::create(out_dir)?;
            out.write_table("echoes.csv", &echo_table(&train))?;
            finish(out, "simulate", &config, started)
        }
        Command::Decompose { run, continuous } => {
            let (timing, profile) = apply_run(&mut config, &run)?;
            let train = simulate_cpmg(&profile, &timing, config.substeps)?;
            let modes = mode_trace_from_train(&train, &profile, &timing)?;
            let mut out = OutputSet::create(out_dir)?;
            out.write_table("echoes.csv", &echo_table(&train))?;
            out.write_table("modes.csv", &mode_table(&modes))?;
            out.write_table("first_order.csv", &first_order_table(&first_order_trace(&profile, &timing)?))?;
            out.write_json("segments.json", &segment_profile(&profile, &timing, config.threshold)?)?;
            if continuous {
                let sol = continuous_from_excitation(&profile, &timing, Default::default())?;
                out.write_table("continuous_modes.csv", &mode_table(&sol.trace))?;
            }
            finish(out, "decompose", &config, started)
        }
        Command::Scenario { name } => {
            let name = match name {
                Some(n) => n.parse::<ScenarioName>()?,
                None => config.scenario.ok_or_else(|| Error::config("scenario", "name a scenario on the command line or in the config"))?,
            };
            config.scenario = Some(name);
            let mut out = OutputSet::create(out_dir)?;
            let summary = run_scenario(name, &config, &mut out)?;
            print_json(&summary);
            finish(out, &format!("scenario {name}"), &config, started)
        }
        Command::Sweep { quantity } => {
            if let Some(q) = quantity {
                let q: SweepQuantity = serde_json::from_value(json!(q))
                    .map_err(|_| Error::config("--quantity", format!("unknown quantity `{q}`, expected nu0, nu1, adiabaticity or a0")))?;
                let sweep = config.sweep.as_mut().ok_or_else(|| Error::config("sweep", "no [sweep] section given"))?;
                sweep.quantity = q;
            }
            let mut out = OutputSet::create(out_dir)?;
            let summary = run_sweep(&config, &mut out)?;
            print_json(&summary);
            finish(out, "sweep", &config, started)
        }
    }
}

fn finish(out: OutputSet, command: &str, config: &RunConfig, started: SystemTime) -> Result<()> {
    let dir = out.dir().to_path_buf();
    let manifest = out.finish(command, config, started)?;
    eprintln!("wrote {} files and the manifest to {}", manifest.outputs.len(), dir.display());
    Ok(())
}
