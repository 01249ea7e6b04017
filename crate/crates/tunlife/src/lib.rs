//! Root-mean-square tunneling lifetimes for a particle initially confined in
//! a square well behind an l = 1 centrifugal barrier.
//!
//! The lifetime is characterized by <t^2>^(1/2) over the decaying part of the
//! survival probability. The headline route reduces both time moments to
//! single semi-infinite wavenumber quadratures ([`moments`]); two independent
//! brute-force routes verify it: direct time-domain reconstruction of the
//! survival probability ([`timedomain`]) and an exp(-alpha t) regularized
//! double integral extrapolated to alpha -> 0 ([`regularized`]).
//!
//! Everything is computed in units hbar = m = 1, with the natural time unit
//! t0 = 2 a^2 for a well of width a.

pub mod error;
pub mod moments;
pub mod quad;
pub mod regularized;
pub mod spectral;
pub mod sweep;
pub mod timedomain;

pub use error::{Error, Result};
pub use moments::{lifetime, MomentResult};
pub use quad::{FDConfig, QuadratureConfig};
pub use spectral::{PotentialSpec, SpectralKernel};
