//! Model-free reinforcement learning for the average-cost noisy linear
//! quadratic regulator, together with the exact analytic layer needed to
//! measure it.
//!
//! The crate is organized in four layers:
//!
//! - [`symlin`] — dense symmetric linear algebra: the `svec`/`smat`
//!   vectorization, symmetric Kronecker products, discrete Lyapunov and
//!   Riccati solvers, Gaussian moment identities.
//! - [`oracle`] — closed-form evaluation of any stabilizing feedback gain:
//!   stationary covariances, average cost, gradients, the Q-function
//!   quadratic form, and the TD fixed point, all computed from the model.
//! - [`mod@env`] — the simulated environment: Gaussian policies, noisy dynamics,
//!   quadratic features, and stationary-distribution sampling.
//! - [`algos`] — the learners: a single-sample two-timescale natural
//!   actor-critic, a double-loop natural actor-critic, and a zeroth-order
//!   natural policy gradient method.
//!
//! All randomness flows through seeded [`rng::RngStream`]s, so every run is
//! reproducible bit for bit on a given platform.

pub mod algos;
pub mod benchmarks;
pub mod env;
pub mod error;
pub mod oracle;
pub mod rng;
pub mod symlin;

pub use error::{Error, Result};
