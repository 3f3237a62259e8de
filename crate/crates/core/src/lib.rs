//! Composite two-qubit controlled-phase gates robust to systematic
//! rotation-angle errors.

pub mod abserr;
pub mod analysis;
pub mod deriv;
pub mod error;
pub mod gates;
pub mod iontrap;
pub mod smallmat;
pub mod solver;

pub use deriv::ErrorModel;
pub use error::{Error, Result};
pub use gates::{CompositeSequence, Family, PhasedGate};
