pub mod admissibility;
pub mod certificates;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod linalg;
pub mod par;
pub mod proximinality;
pub mod regularizer;
pub mod rng;
pub mod simplex;
pub mod solvers;
pub mod spaces;

pub use error::{Error, Result};
