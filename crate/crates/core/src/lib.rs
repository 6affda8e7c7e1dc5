//! Spin dynamics of CPMG echo trains in time-dependent offset and nutation fields.
//!
//! The refocusing cycle is reduced to one effective rotation whose axis and
//! angle define the CPMG (`k = 0`) and CP (`k = +-1`) eigenmodes. Slow field
//! drifts are characterized by the adiabaticity parameter; the direct
//! simulator and the analytical predictions can be compared echo by echo.

pub mod adiabaticity;
pub mod cycle;
pub mod eigenmode;
pub mod error;
pub mod profile;
pub mod rotation;
pub mod scenario;
pub mod simulator;
pub mod theory;

pub use error::{Error, Result};
