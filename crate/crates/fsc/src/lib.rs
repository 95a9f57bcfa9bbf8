//! Flow-driven spectral chaos (FSC): spectral propagation of uncertainty
//! through stochastic ODEs of arbitrary order.
//!
//! The solution is expanded over an orthogonal basis of the random function
//! space. Instead of a fixed polynomial chaos, the basis is rebuilt at every
//! time step from the time derivatives of the solution itself (the enriched
//! stochastic flow map), so its size is bounded by the equation order plus
//! the flow-map order regardless of how many random variables drive the
//! system. Probability information moves between consecutive bases either in
//! the mean-square sense (FSC-1) or exactly through a covariance closed form
//! (FSC-2).
//!
//! The crate ships:
//!
//! * the four supported probability laws and their product measures
//!   ([`distribution`]);
//! * Gauss rules, tensor grids and Monte Carlo node sets ([`quadrature`]);
//! * random functions, Gram-Schmidt and closed-form orthogonalization, and
//!   the operation-count models for both routes ([`rfs`]);
//! * chaos bases, random modes and probability moments ([`spectral`]);
//! * derivative chains, finite-difference fallbacks and Taylor flow maps
//!   ([`flowmap`]);
//! * the FSC time stepper itself ([`fsc`]);
//! * the benchmark systems ([`problems`]);
//! * reference solutions and error metrics ([`oracle`]);
//! * the batch driver behind the `fsc` binary ([`config`], [`driver`]).
//!
//! Start with the `examples/` directory: each file runs one capability end
//! to end.

// Indexed loops over several aligned arrays are the clearest form for the
// numerical kernels here.
#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod distribution;
pub mod driver;
pub mod error;
pub mod flowmap;
pub mod fsc;
pub mod oracle;
pub mod plot;
pub mod problems;
pub mod quadrature;
pub mod rfs;
pub mod rng;
pub mod special;
pub mod spectral;

pub use distribution::{Distribution, ProductMeasure};
pub use error::{Error, Result};
pub use flowmap::{EnrichedState, OdeSystem};
pub use fsc::{FscConfig, FscRun, Orthogonalizer, SpectralState, TransferKind};
pub use quadrature::{NodeKind, NodeSet};
pub use rfs::{Basis, RandomFunction};
pub use spectral::MomentSeries;
