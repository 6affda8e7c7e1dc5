//! Offset excursions that go out to a peak and come back. Prints the
//! change of the CPMG component for a coarse grid of start and peak offsets.

use cpmg_dynamics::adiabaticity::AxisRange;
use cpmg_dynamics::scenario::runner::return_to_origin_grid;
use cpmg_dynamics::simulator::SubstepPolicy;

fn main() -> cpmg_dynamics::Result<()> {
    let axis = AxisRange::new(-3.0, 3.0, 13);
    let grid = return_to_origin_grid(axis, 1e-3, 15.0, SubstepPolicy::default())?;
    let values = axis.values();
    print!("peak\\start");
    values.iter().for_each(|v| print!(" {v:5.1}"));
    println!();
    for (ip, peak) in values.iter().enumerate().rev() {
        print!("{peak:10.1}");
        for is in 0..values.len() {
            print!(" {:5.3}", grid.get(is, ip).reversibility_error);
        }
        println!();
    }
    if let Some(sq) = grid.central_square(0.2) {
        println!("reversible square half-width about {:.2}", sq.half_width);
    }
    Ok(())
}
