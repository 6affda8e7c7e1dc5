//! Adiabaticity over offset and ramp rate, printed as a coarse text map.
//! `#` marks non-adiabatic cells (A <= 2).

use cpmg_dynamics::adiabaticity::{adiabaticity_grid, AxisRange, MapKind};

fn main() -> cpmg_dynamics::Result<()> {
    let omega0 = AxisRange::new(0.0, 6.0, 97);
    let ramps = AxisRange::new(-4.0, -2.0, 9);
    let log_ramps: Vec<f64> = ramps.values().iter().map(|e| 10f64.powf(*e)).collect();
    // the map takes a linear axis, so evaluate one row per rate
    for (i, &r) in log_ramps.iter().enumerate().rev() {
        let map = adiabaticity_grid(15.0, MapKind::OffsetRamp { omega1: 1.0 }, omega0, AxisRange::new(r, r, 1))?;
        let row: String = map
            .values
            .iter()
            .map(|&a| {
                if a <= 2.0 {
                    '#'
                } else if a <= 10.0 {
                    '+'
                } else {
                    '.'
                }
            })
            .collect();
        println!("1e{:+.2} {row}", ramps.values()[i]);
    }
    println!("        omega0 from {} to {} ({} points), te_ratio 15", omega0.min, omega0.max, omega0.count);
    Ok(())
}
