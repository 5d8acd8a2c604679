//! Optimal advertising control of spatially distributed goodwill.
//!
//! Goodwill `x(t, xi)` on a rectangle `[0, L] x [0, H]` diffuses, decays at
//! rate `rho` and is driven by advertising effort `u` through an
//! effectiveness density `b`:
//!
//! ```text
//! x_t = Laplacian x - rho x + b u,   zero flux on the boundary
//! ```
//!
//! Everything is computed in the cosine eigenbasis of the Neumann Laplacian
//! ([`spectral`]), where the dynamics decouple into scalar modes
//! ([`dynamics`]). On top of that sit
//!
//! * maximum-principle strategies with capped quadratic or linear effort
//!   costs and a budget-constrained variant ([`maximum_principle`]);
//! * the indefinite quadratic problem with terminal reward, solved by a
//!   closed-form Riccati feedback ([`lq_indefinite`]);
//! * terminal targeting of a goodwill profile ([`lq_targeting`]);
//! * independent oracles: finite differences, discrete dynamic programming
//!   and derivative probes ([`verification`]);
//! * a scenario file format and runner ([`scenario`], [`runner`]).
//!
//! ```
//! use goodwill::dynamics::{mild_solve, uniform_times, ControlSignal, ModelParams};
//! use goodwill::spectral::{DomainSpec, SpectralField};
//!
//! let domain = DomainSpec::unit_square(4, 4);
//! let params = ModelParams::new(SpectralField::constant(&domain, 1.0), 0.5, 1.0);
//! let times = uniform_times(1.0, 100);
//! let u = ControlSignal::zero(&domain, times.clone()).unwrap();
//! let traj = mild_solve(&params, &u, &times).unwrap();
//! let total = traj.final_state().integral();
//! assert!((total - (-0.5f64).exp()).abs() < 1e-12);
//! ```

pub mod dynamics;
pub mod error;
pub mod grid;
pub mod lq_indefinite;
pub mod lq_targeting;
pub mod maximum_principle;
pub mod runner;
pub mod scenario;
pub mod spectral;
pub mod verification;

pub use error::{Error, Result};
