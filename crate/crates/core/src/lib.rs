//! Error pre-compensation for noisy quantum channels.
//!
//! Given a channel in Kraus form and a target output state, this crate either
//! solves `E(rho_in) = rho_t` exactly by (pseudo-)inverting the channel's
//! transfer matrix, or finds the input state maximizing the Uhlmann fidelity
//! of the output against the target via semidefinite programming.
//!
//! Modules:
//! - [`numcore`]: dense complex linear algebra primitives (eig, SVD, pinv, sqrtm).
//! - [`channels`]: density matrices, Kraus channels, named channel constructors.
//! - [`vectorize`]: the row-stacking operator/vector correspondence.
//! - [`precomp`]: the analytic case-by-case input-state solver.
//! - [`sdp`]: a self-contained primal-dual interior-point SDP solver plus the
//!   feasibility and fidelity-maximization programs built on it.
//! - [`experiments`]: Monte Carlo studies, closed-form oracles, and the
//!   error-correcting-code fidelity comparison curves.

pub mod channels;
pub mod experiments;
pub mod numcore;
pub mod precomp;
pub mod sdp;
pub mod vectorize;

pub use channels::{BlochVector, DensityMatrix, Ensemble, KrausChannel, PauliChannelParams};
pub use numcore::CMatrix;
pub use precomp::PrecompResult;
