pub mod algebra;
pub mod catalog;
pub mod dpw;
pub mod error;
pub mod frames;
pub mod gauss;
pub mod grid;
pub mod loops;
pub mod mesh;
pub mod numfmt;

pub use error::{Error, Result};
