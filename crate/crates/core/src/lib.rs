//! Linearly edge-reinforced random walks on the half-line and their Beta
//! random-environment representation.
//!
//! * [`scheme`]: initial weights, the linear reinforcement rule, recurrence.
//! * [`special`]: log-gamma, digamma, trigamma, log-beta.
//! * [`analytic`]: the constant `K(α, Δ)`, moments of `S_x`, scaling laws.
//! * [`environment`]: Beta environments, resistances and hitting times.
//! * [`simulator`]: the reinforced walk and the walk in a fixed environment.
//! * [`oracle`]: exact path enumeration, annealed path laws, the `Θ` martingale.
//! * [`harness`]: seeded experiments, CSV/JSON output, the verification suite.

pub mod analytic;
pub mod environment;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod rng;
pub mod scheme;
pub mod simulator;
pub mod special;

pub use error::{Error, Result};
pub use scheme::WalkConfig;
