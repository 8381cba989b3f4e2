//! Core of the continuous-variable QRNG: shared domain types, a software
//! homodyne detector, and the min-entropy certification calculus.
//!
//! Units follow the phase-space convention in which the vacuum quadrature
//! variance is one half ([`model::SNL_VARIANCE`]). Every noise figure given
//! in dB is relative to that shot-noise level.

pub mod bits;
pub mod blockfile;
pub mod curves;
pub mod entropy;
pub mod error;
pub mod model;
pub mod prolate;
pub mod sim;

pub use bits::BitString;
pub use entropy::{BinDistribution, EntropyReport};
pub use error::{Error, Result};
pub use model::{
    DiscretizationGrid, NoiseBudget, Quadrature, Sample, SampleBlock, SlotKind, StateModel,
    SNL_VARIANCE,
};
pub use sim::{Homodyne, LoModel, ProtocolSchedule};
