//! Continuous-limit mode evolution against the direct pulse-by-pulse
//! simulation for two slow ramps.

use cpmg_dynamics::scenario::runner::continuous_comparison;
use cpmg_dynamics::simulator::SubstepPolicy;
use cpmg_dynamics::theory::ContinuousOptions;

fn main() -> cpmg_dynamics::Result<()> {
    for rate in [5e-4, 1e-3] {
        let c = continuous_comparison(8.0, rate, 3.0, ContinuousOptions::default(), SubstepPolicy::default())?;
        println!("rate {rate}: RMS difference a0 {:.2e}, |a_CP| {:.2e}", c.rms_a0, c.rms_cp);
        let n = c.simulated.records.len();
        for k in (0..n).step_by(n / 6) {
            let (s, t) = (&c.simulated.records[k], &c.continuous.trace.records[k]);
            println!("  omega0 {:5.2}: a0 {:+.4} vs {:+.4}", s.omega0, s.a0, t.a0);
        }
    }
    Ok(())
}
