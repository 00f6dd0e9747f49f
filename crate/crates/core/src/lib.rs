//! Constructive solver for the planar Monge–Ampère equation `det D²u = f`.
//!
//! Global solutions with prescribed asymptotics `½x'Ax + b·x + d log√(x'Ax) + c`
//! are built from a radial base solution and a contracting Picard cascade;
//! exterior Dirichlet problems outside a disk are reduced to the global case and
//! a Kelvin-transformed linear solve.

pub mod asymptotics;
pub mod cli;
pub mod config;
pub mod elliptic;
pub mod error;
pub mod exterior;
pub mod fd;
pub mod global;
pub mod grid;
pub mod linalg;
pub mod oracle;
pub mod problem;
pub mod quadrature;
pub mod radial;

pub use error::{Error, Result};
