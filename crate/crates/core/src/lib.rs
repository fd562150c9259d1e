//! Simulation and verification toolkit for Glauber-Kawasaki dynamics and its
//! sharp-interface hydrodynamic limit.
//!
//! The crate is organised bottom-up:
//!
//! - [`lattice`]: discrete torus, occupancy configurations and the elementary
//!   exchange / flip / translation moves.
//! - [`rates`]: local flip rates, the induced reaction polynomial `f`, the
//!   bistable/unbalanced checks and the constants derived from `f`.
//! - [`kmc`]: continuous-time simulation of the particle system (exchanges
//!   drawn from the discordant bonds, flips by thinning), product-measure
//!   sampling, empirical densities and an exact generator oracle for tiny
//!   lattices.
//! - [`rd`]: explicit solvers for the lattice and continuum Allen-Cahn type
//!   problems plus comparison, generation and gradient checks.
//! - [`wave`]: traveling-wave speed and profile by shooting.
//! - [`front`]: signed distances, Huygens front evolution, cutoff distance and
//!   the sub/super solution construction with residual evaluation.

pub mod error;
pub mod front;
pub mod kmc;
pub mod lattice;
pub mod poly;
pub mod rates;
pub mod rd;
pub mod wave;

mod ode;
pub mod stats;

pub use error::{Error, Result};
