//! Mass-lumped second-order edge elements on tetrahedra for the
//! time-domain Maxwell equations, with explicit leapfrog time stepping.

pub mod assembly;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mesh;
pub mod refelem;

pub use error::{Error, Result};
