//! Hybrid quantum-classical phase spaces, characteristic functions, and
//! quasifree channels, with a truncated Fock-space oracle for cross-checks.

pub mod channel;
pub mod charfun;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod json;
pub mod phasespace;
pub mod protocols;

pub use error::{Error, Result};
