//! Pseudo-spectral toolkit for the 2D inviscid incompressible MHD equations
//! with velocity damping near a stratified background flow.
//!
//! The domain is the periodic-in-x strip `[0, L_x) x [0, 1]` with rigid
//! boundary conditions in y encoded by parity (cosine/sine expansions).
//! The crate provides:
//!
//! - [`basis`]: mixed Fourier(x) x cosine/sine(y) spectral representation,
//!   transforms, differentiation and Sobolev norms,
//! - [`background`]: the exact modal solution of the damped background wave
//!   equation and its decay rate,
//! - [`linear`]: exact per-mode evolution of the linearized system
//!   (closed-form propagators, Duhamel forcing, spectral abscissa),
//! - [`sim`]: RK4 pseudo-spectral time integration of the full perturbed
//!   system with spectral pressure elimination and dealiasing,
//! - [`diagnostics`]: energy functionals, cancellation-identity checks,
//!   decay-rate fitting and bootstrap-bound monitoring,
//! - [`oracle`]: independent reference implementations (RK4, matrix
//!   exponential, finite-difference quadrature norms) used for validation.

pub mod background;
pub mod basis;
pub mod diagnostics;
pub mod error;
pub mod linear;
pub mod oracle;
pub mod sim;
pub mod snapshot;

pub use background::{BackgroundModal, BackgroundProfiles, Params, Regime};
pub use basis::{GridField, Parity, Spectrum};
pub use diagnostics::{DecayFit, EnergyReport};
pub use error::SimError;
pub use sim::{PerturbationState, SimConfig};
