//! Define-by-run reverse-mode differentiation over real and complex values.
//!
//! Gradients with respect to a complex tensor `z = x + iy` are the real pair
//! `(∂L/∂x, ∂L/∂y)`.

pub mod gradcheck;
pub mod ops;
pub mod optim;
pub mod params;
pub mod tape;

pub use gradcheck::{check_params, GradCheckReport};
pub use optim::{Adam, Optimizer, Sgd};
pub use params::{ParamId, ParamKind, ParamStore, Parameter};
pub use tape::{GradPair, Gradients, Tape, Value, Var};
