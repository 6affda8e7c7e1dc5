//! Splits a magnetization into its CPMG and CP parts and propagates both
//! over a few echoes of a static cycle.

use cpmg_dynamics::cycle::{effective_rotation, CycleParams};
use cpmg_dynamics::eigenmode::{decompose, eigenbasis, reconstruct};
use cpmg_dynamics::profile::FieldProfile;
use cpmg_dynamics::rotation::Vec3;
use cpmg_dynamics::simulator::{excite, SequenceTiming};

fn main() -> cpmg_dynamics::Result<()> {
    let w0 = 0.6;
    let er = effective_rotation(&CycleParams::new(w0, 1.0, 15.0))?;
    let basis = eigenbasis(&er)?;
    let m = excite(&FieldProfile::constant(w0), &SequenceTiming::new(15.0, 1));
    let a = decompose(m, &basis);
    println!("axis n = {:?}, alpha = {:.4}", er.axis(), er.alpha);
    println!("excited M = {m:?}");
    println!("a0 = {:.6}, |a_CP| = {:.6}, sum of squares = {:.12}", a.a0, a.cp_magnitude(), a.total_norm_sqr());
    let rot = er.rotation();
    let mut direct = m;
    for echo in 1..=4 {
        direct = rot.apply(direct);
        let modal = reconstruct(&a, &basis, echo as f64, er.alpha);
        let Vec3 { x, y, z } = modal;
        println!("echo {echo}: M = ({x:+.5}, {y:+.5}, {z:+.5}), mismatch {:.1e}", (modal - direct).norm());
    }
    Ok(())
}
