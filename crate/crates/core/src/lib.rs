//! Optimal pacing for middle-distance running.
//!
//! The runner is a point mass with velocity `v`, propulsive force `f`, a
//! finite anaerobic energy store `e` and an aerobic supply σ(e). The neural
//! drive `u` controls the force, and the optimal race minimizes the final
//! time plus a small motor-control cost.
//!
//! * [`model`]: constants, σ(e), track gradient, dynamics.
//! * [`turnpike`]: closed-form three-phase approximation of the optimal
//!   velocity.
//! * [`ocp`]: the full free-final-time optimal control problem, solved by
//!   direct collocation, plus the reduced end-of-race problem and the
//!   sigmoid solutions of the simplified motor-control problem.
//! * [`fit`]: identification of the physiological parameters from a
//!   measured velocity curve.
//!
//! ```
//! use pacing::{fixtures, turnpike};
//!
//! let c = fixtures::regional();
//! let (sol, _profile) = turnpike::assemble_profile(&c.runner, &c.sigma).unwrap();
//! assert!((sol.v_bar - 6.06).abs() < 0.01);
//! assert!((sol.t_f - 245.19).abs() < 0.5);
//! ```

pub mod ad;
pub mod error;
pub mod fit;
pub mod fixtures;
pub mod io;
pub mod model;
pub mod numerics;
pub mod ocp;
pub mod turnpike;

pub use error::{Error, Result};
pub use model::{ModelConfig, RunnerParams, SigmaProfile, SigmaVariant, SlopeProfile, SlopeSegment, State};

/// The guide's chapters, compiled as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/numerics.md")]
    mod numerics {}
    #[doc = include_str!("../../../book/src/turnpike.md")]
    mod turnpike {}
    #[doc = include_str!("../../../book/src/optimal-control.md")]
    mod optimal_control {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
