//! Secret key rates for continuous-variable measurement-device-independent
//! QKD with Gaussian-modulated coherent states, heterodyne detection and
//! reverse reconciliation, including finite-size effects.
//!
//! The crate is layered:
//!
//! * [`gaussian`]: bosonic entropy, symplectic spectra, Holevo bound.
//! * [`protocol`]: fiber links, the four-mode covariance and its equivalent
//!   one-way protocol.
//! * [`finite_size`]: confidence intervals, worst-case covariance, key rate.
//! * [`estimation`]: seeded Monte Carlo sampling and maximum-likelihood estimators.
//! * [`optimizer`]: variance optimisation, distance searches, sweeps.
//!
//! ```
//! use cvmdi::finite_size::{finite_key_rate, EstimationMode, FiniteSizeParams, KeyRateOptions};
//! use cvmdi::protocol::ProtocolParams;
//!
//! let p = ProtocolParams { l_ac: 30.0, ..ProtocolParams::default() };
//! let r = finite_key_rate(&p, &FiniteSizeParams::new(1_000_000), &EstimationMode::Theory, &KeyRateOptions::default())?;
//! assert!(r.k > 0.0);
//! # Ok::<(), cvmdi::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod finite_size;
pub mod gaussian;
pub mod optimizer;
pub mod protocol;

pub use error::{Error, Result};
pub use finite_size::{asymptotic_key_rate, finite_key_rate, FiniteSizeParams, KeyRateReport};
pub use gaussian::TwoModeCov;
pub use optimizer::Scenario;
pub use protocol::ProtocolParams;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/gaussian.md")]
    mod gaussian {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
    #[doc = include_str!("../../../book/src/finite_size.md")]
    mod finite_size {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/optimization.md")]
    mod optimization {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
