//! Cavity photon-echo quantum memory with off-resonant processing nodes.
//!
//! The crate has three numerical layers:
//!
//! * [`spectral`]: closed-form storage and retrieval efficiencies of the
//!   memory node, including both impedance matching conditions.
//! * [`transfer`]: the memory-to-processor transfer kernel, its self-mode
//!   and the transfer efficiency.
//! * [`oracle`]: a direct time-domain integrator of the linear equations of
//!   motion over a discretized ensemble, used to check the other two.
//!
//! [`sweep`] regenerates figure data and runs the 1-D searches, [`io`]
//! handles configuration and CSV output, and [`verify`] bundles the
//! analytic-versus-oracle checks.

// `!(x > 0.0)` guards also reject NaN; index loops mirror the stage algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod poly;
pub mod quadrature;
pub mod spectral;
pub mod sweep;
pub mod transfer;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    derived_quantities, validate_network, DerivedQuantities, MemoryNodeSpec, NetworkSpec,
    ProcessingNodeSpec, RateParams, SignalModeSpec, SpectralShape, UnitSystem, Violation,
};
pub use transfer::TransferConfig;
