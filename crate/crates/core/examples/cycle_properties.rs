//! Effective rotation of one refocusing cycle across offsets, with the
//! energy levels and critical ramp rates.
//!
//!     cargo run --example cycle_properties -- 15

use cpmg_dynamics::adiabaticity::critical_rates;
use cpmg_dynamics::cycle::{effective_rotation, energy_levels, CycleParams};

fn main() -> cpmg_dynamics::Result<()> {
    let te: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8.0);
    println!("t_E/t_180 = {te}, omega1 = nominal");
    println!("{:>7} {:>8} {:>8} {:>8} {:>8} {:>10}", "omega0", "alpha", "n_perp", "n_z", "E_+1", "nu0_crit");
    for i in 0..=24 {
        let w0 = -3.0 + 0.25 * i as f64;
        let p = CycleParams::new(w0, 1.0, te);
        let er = effective_rotation(&p)?;
        let levels = energy_levels(&p)?;
        let nu0 = critical_rates(&p).map(|c| c.nu0).unwrap_or(f64::NAN);
        println!("{w0:7.2} {:8.4} {:8.4} {:8.4} {:8.4} {nu0:10.3e}", er.alpha, er.n_perp, er.n_z, levels.plus);
    }
    Ok(())
}
