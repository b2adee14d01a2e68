//! Weak-noise modulation-estimation of vector parameters over the discrete-time
//! AWGN channel.
//!
//! * [`theory`]: capacity, the optimal weak-noise error cost exponent and rate
//!   split, a brute-force sup-min oracle, the Gaussian tail and the finite-n
//!   converse bound.
//! * [`scan`]: diagonal serialization of the two-parameter converse grid.
//! * [`modulate`]: quantize-and-code, linear and spiral modulators, random shell
//!   codebooks, signal-locus length.
//! * [`channel`]: seeded counter-based AWGN.
//! * [`estimate`]: decode-and-dequantize, ML grid search, linear correlator.
//! * [`harness`]: Monte Carlo experiments, SNR sweeps and converse checks.
//!
//! The closed-form math is generic over [`Real`] (`f32`/`f64`); the aliases below
//! fix it to `f64`, which the simulation layers use throughout.

pub mod channel;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod modulate;
pub mod num;
pub mod report;
pub mod rng;
pub mod scan;
pub mod theory;

pub use error::{Error, Result};
pub use num::Real;

pub type ChannelSpec = theory::ChannelSpec<f64>;
pub type ErrorCostSpec = theory::ErrorCostSpec<f64>;
pub type RateAssignment = theory::RateAssignment<f64>;
pub type OracleResult = theory::OracleResult<f64>;
pub type MacBounds = theory::MacBounds<f64>;
pub type Quantized = modulate::Quantized<f64>;

pub type ChannelSpecF32 = theory::ChannelSpec<f32>;
pub type ErrorCostSpecF32 = theory::ErrorCostSpec<f32>;
pub type RateAssignmentF32 = theory::RateAssignment<f32>;
