//! Temperature-induced Zeno subspaces of a three-level system coupled to
//! thermal harmonic modes.

pub mod bounds;
pub mod error;
pub mod evolution;
pub mod linalg;
pub mod model;
pub mod numerics;
pub mod parallel;
mod secular;
pub mod thermal;
pub mod verify;

pub use error::{Error, Result};
