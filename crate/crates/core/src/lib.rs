//! Driven-dissipative spin dynamics of an optically pumped alkali vapor,
//! with the thermodynamic (entropy, entropy production, ergotropy,
//! polarization efficiency) and metrological (quantum Fisher information)
//! observables computed along each trajectory.

pub mod cell_rates;
pub mod cli;
pub mod dynamics;
pub mod linalg;
pub mod metrology;
pub mod spin_algebra;
pub mod thermo;
