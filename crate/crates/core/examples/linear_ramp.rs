//! Linear offset ramp from resonance: echo magnetization, mode amplitudes
//! and where the adiabaticity criterion flags transitions.
//!
//!     cargo run --release --example linear_ramp -- 1e-3

use cpmg_dynamics::profile::FieldProfile;
use cpmg_dynamics::simulator::{simulate_cpmg, SequenceTiming, SubstepPolicy};
use cpmg_dynamics::theory::{first_order_trace, mode_trace_from_train, segment_profile};

fn main() -> cpmg_dynamics::Result<()> {
    let ramp: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let profile = FieldProfile::linear(0.0, ramp);
    let timing = SequenceTiming::new(15.0, (4.0 / ramp) as usize);
    let train = simulate_cpmg(&profile, &timing, SubstepPolicy::default())?;
    let modes = mode_trace_from_train(&train, &profile, &timing)?;
    let first = first_order_trace(&profile, &timing)?;
    let step = train.records.len() / 20;
    println!("{:>7} {:>8} {:>8} {:>8} {:>8} {:>9}", "omega0", "Mx", "My", "|My| 1st", "a0", "|a_CP|");
    for k in (0..train.records.len()).step_by(step) {
        let (r, m, f) = (&train.records[k], &modes.records[k], &first[k]);
        println!("{:7.3} {:8.4} {:8.4} {:8.4} {:8.4} {:9.4}", r.omega0, r.m.x, r.m.y, f.my_abs, m.a0, m.cp_magnitude);
    }
    let segments = segment_profile(&profile, &timing, 2.0)?;
    for s in segments.non_adiabatic() {
        println!("non-adiabatic: omega0 {:.4} to {:.4}", profile.omega0(s.start), profile.omega0(s.end));
    }
    Ok(())
}
