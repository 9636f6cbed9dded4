//! Complex-valued neural network primitives with reverse-mode
//! differentiation and three interchangeable execution backends.

pub mod autograd;
pub mod bench;
pub mod ctensor;
pub mod error;
pub mod experiments;
pub mod kernels;
pub mod layers;
pub mod losses;
pub mod signal;
pub mod verify;

pub use ctensor::{CTensor, RTensor, Shape};
pub use error::{Error, Result};
