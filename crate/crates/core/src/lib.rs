//! Conceptual glacial-cycle model: a two-variable energy/ice-mass system with
//! analytic equilibrium, stability and Hopf machinery, a regime-switching
//! simulator, and numerical cross-checks for every closed form.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod equilibria;
pub mod error;
pub mod io;
pub mod model;
pub mod ode;
pub mod oracle;
pub mod params;
pub mod roots;
pub mod sigmoid;
pub mod simulator;
pub mod stability;
pub mod verify;

pub use error::{Error, Result};
pub use params::{ModelParams, PhysicalParams, Scales, State};
pub use sigmoid::{SigmoidFamily, SigmoidResponse};
