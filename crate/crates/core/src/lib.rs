//! Sparse phase retrieval from power spectra.
//!
//! The crate measures signals through their power spectrum and periodic
//! autocorrelation, models sparse signals over a generic basis, certifies or
//! refutes uniqueness of recovery with lifted linear operators, recovers
//! sparse signals numerically and tabulates the sparsity thresholds under
//! which recovery is guaranteed.
//!
//! ```
//! use crystal_pr::signal::{power_spectrum, Signal};
//!
//! let x = Signal::real(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
//! let p = power_spectrum(&x);
//! assert!((p.values[0] - 100.0).abs() < 1e-12);
//! ```

pub mod bounds;
pub mod certify;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod lm;
pub mod model;
pub mod quad;
pub mod recover;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
pub use signal::{Field, Signal};
