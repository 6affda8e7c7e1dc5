//! Harmonic offset excursions of amplitude 1.4 at three periods: one stays
//! adiabatic and periodic, one is marginal, one drives mode transitions.

use cpmg_dynamics::scenario::config::HarmonicConfig;
use cpmg_dynamics::scenario::runner::harmonic_path;
use cpmg_dynamics::simulator::SubstepPolicy;

fn main() -> cpmg_dynamics::Result<()> {
    let cfg = HarmonicConfig { repeats: 1.0, ..HarmonicConfig::default() };
    for &period in &cfg.periods {
        let path = harmonic_path(&cfg, period, SubstepPolicy::default())?;
        println!(
            "period {period:>8}: min A {:8.3}, |M(T) - M(0)| {:.2e}, max |a_CP| {:.3}",
            path.min_adiabaticity, path.periodicity_error, path.max_cp_magnitude
        );
    }
    Ok(())
}
