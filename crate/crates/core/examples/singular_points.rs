//! Offsets and nutation rates where the refocusing cycle is the identity,
//! checked against direct composition of the cycle.

use cpmg_dynamics::adiabaticity::{circle_crossings, is_identity_cycle, singular_points};
use cpmg_dynamics::cycle::CycleParams;

fn main() -> cpmg_dynamics::Result<()> {
    for te in [8.0, 15.0] {
        let points = singular_points(te, 2, 4.0)?;
        println!("t_E/t_180 = {te}: {} points with l <= 2, omega1 <= 4", points.len());
        for p in points.iter().take(8) {
            let identity = is_identity_cycle(&CycleParams::new(p.omega0, p.omega1, te));
            println!("  l {} m {:2}: omega0 {:+.4}, omega1 {:.4}, identity {identity}", p.l, p.m, p.omega0, p.omega1);
        }
    }
    println!("crossings of omega1 = 1: {:?}", circle_crossings(1.0, 3));
    Ok(())
}
