//! Root finding, quadrature and fixed-step ODE integration shared by the
//! closed-form pipeline and the test oracles.

mod ode;
mod quad;
mod root;

pub use ode::{integrate_ode, OdePath};
pub use quad::{integrate, integrate_lenient, QuadratureSpec};
pub use root::{find_root, find_root_in, Bracket, DEFAULT_ROOT_TOL};
