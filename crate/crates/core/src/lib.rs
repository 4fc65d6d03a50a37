//! Blow-up laboratory for `u_tt = Δu + |u|^{p-1} u ln^a(u² + 2)` at the
//! conformal exponent `p = 1 + 4/(n-1)`.
//!
//! The crate evolves radial solutions in physical and in similarity
//! variables, evaluates the energy and Lyapunov functionals of the
//! similarity formulation, and turns the monotonicity, positivity and
//! boundedness statements about them into numerical checks.

pub mod error;
pub mod functionals;
pub mod model;
pub mod ode;
pub mod par;
pub mod pde;
pub mod quad;
pub mod record;
pub mod simvars;
pub mod verify;

pub use error::{ModelError, QuadError, SolverError, VerifyError};
pub use model::{kappa, ModelParams, NonlinearityTable};
