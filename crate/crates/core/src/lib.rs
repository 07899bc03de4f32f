pub mod assembly;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod postprocess;
pub mod quadrature;
pub mod spline;

pub use error::{Error, Result};
