//! Orlicz-Sobolev tools for the radial g-Laplacian Hénon problem.

pub mod admissibility;
pub mod diagnostics;
pub mod error;
pub mod luxemburg;
pub mod nfunction;
pub mod quadrature;
pub mod radial;
pub mod roots;

pub use error::{Error, Result};
