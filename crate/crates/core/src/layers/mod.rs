//! Parameterized complex layers. Every complex linear map runs on one of
//! three interchangeable backends that agree up to rounding.

pub mod activation;
pub mod conv;
pub mod init;
pub mod linear;
pub mod norm;
pub mod quant;
pub mod serialize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autograd::params::{ParamId, ParamStore};
use crate::autograd::tape::{Tape, Var};
use crate::ctensor::CTensor;
use crate::error::{Error, Result};

pub use activation::{mag_activation, split_activation, Activation, MagFn};
pub use conv::{ComplexConv1d, ComplexConv2d};
pub use linear::{ComplexLinear, RealLinear};
pub use norm::ComplexLayerNorm;
pub use quant::{phase_quantize, PhaseQuantizer};

/// How a complex linear map `W z` is executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Four real products on split planes: `W_r x − W_i y`, `W_i x + W_r y`.
    Naive,
    /// Three real products (Karatsuba).
    Gauss,
    /// One fused real product with the `[[W_r, −W_i], [W_i, W_r]]` block
    /// matrix applied to stacked `[x; y]`.
    Block,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::Naive, Backend::Gauss, Backend::Block];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Naive => "naive",
            Backend::Gauss => "gauss",
            Backend::Block => "block",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "naive" => Ok(Backend::Naive),
            "gauss" => Ok(Backend::Gauss),
            "block" => Ok(Backend::Block),
            other => Err(Error::Config(format!("unknown backend '{other}'"))),
        }
    }
}

/// A module whose parameters live in a [`ParamStore`].
pub trait Layer {
    fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var>;

    fn params(&self) -> Vec<ParamId>;

    /// Forward pass on a throwaway tape.
    fn apply(&self, store: &ParamStore, z: &CTensor) -> Result<CTensor> {
        let mut tape = Tape::new();
        let x = tape.constant(z.clone());
        let y = self.forward(&mut tape, store, x)?;
        Ok(tape.complex(y)?.clone())
    }
}
