//! Curvature of multiply warped product space-times.
//!
//! A multiply generalized Robertson-Walker space-time is an interval
//! `(t1, t2)` with metric `-dt^2`, warped over Riemannian fibers
//! `F_1, ..., F_m` by positive functions `b_i(t)`:
//!
//! ```text
//! g = -dt^2 + b_1(t)^2 g_F1 + ... + b_m(t)^2 g_Fm
//! ```
//!
//! This crate evaluates the closed-form Riemann, Ricci and scalar curvature
//! of such metrics, decides Einstein and constant-scalar-curvature
//! conditions (including the generalized Kasner classification tables and
//! the BTZ lapse-function families), and cross-validates every closed
//! formula against an independent finite-difference curvature oracle built
//! from the raw coordinate metric.
//!
//! Main entry points:
//!
//! - [`spacetime::WarpedSpacetime`] and [`spacetime::KasnerSpec`] — data
//!   model with validation and presets.
//! - [`curvature`] — scalar curvature in three equivalent forms, Ricci
//!   blocks, Riemann frame blocks.
//! - [`einstein`] — Einstein residual systems, Ricci-constant inference,
//!   scalar-curvature constancy checks.
//! - [`kasner`] — conformally-powered warps: parameter identities, ODE
//!   reductions and families, classification tables, constant-solution
//!   counting.
//! - [`btz`] — lapse-function transform `t = F(r)` and the Einstein /
//!   constant-scalar-curvature lapse families, with the interior
//!   Schwarzschild and static BTZ presets.
//! - [`oracle`] — finite-difference Levi-Civita pipeline over coordinate
//!   charts with model fibers; the ground truth everything else is checked
//!   against.
//! - [`cli`] and [`config`] — the `multiwarp` binary: TOML configs in,
//!   JSON/CSV reports out.
//!
//! The `examples/` directory has one runnable program per capability; start
//! with `cargo run --example curvature_grid`.

pub mod btz;
pub mod cli;
pub mod config;
pub mod curvature;
pub mod einstein;
pub mod error;
pub mod jet;
pub mod kasner;
pub mod oracle;
pub mod quad;
pub mod spacetime;
pub mod warp;

pub use error::{Error, Result};
pub use jet::ScalarJet;
pub use spacetime::{FiberModel, FiberSpec, KasnerSpec, WarpedSpacetime};
pub use warp::{Expr, Interval, WarpFn};
