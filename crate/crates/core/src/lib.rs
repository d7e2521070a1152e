pub mod cli;
pub mod error;
pub mod forge;
pub mod io;
pub mod liouville;
pub mod matrix;
pub mod metric;
pub mod pencil;

pub use error::{Error, Result};
pub use matrix::ComplexMatrix;
