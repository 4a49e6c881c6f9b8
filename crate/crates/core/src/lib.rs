//! Perfect distinguishability between a quantum operation and the identity.
//!
//! The crate computes maximal and q-maximal fidelities between channels,
//! closed-form query-count bounds, and constructs executable adaptive
//! discrimination protocols that are verified by exact evolution and
//! Monte Carlo simulation.

pub mod bounds;
pub mod channel;
pub mod error;
pub mod fidelity;
pub mod io;
pub mod linalg;
pub mod optimize;
pub mod protocol;
pub mod simulator;
pub mod state;

pub use channel::{ChannelValidity, KrausChannel};
pub use error::{Error, Result};
pub use fidelity::{Alpha0Result, FidelityResult, WitnessInput};
pub use linalg::{CMatrix, CVector};
pub use optimize::OptimizerConfig;
pub use state::{DensityOperator, Projector, PureState};
