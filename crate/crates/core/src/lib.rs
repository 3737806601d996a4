// `!(x > 0.0)` is used throughout so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod families;
pub mod family;
pub mod intervals;
pub mod numerics;
pub mod prediction;
pub mod saddlepoint;
pub mod verify;
mod theta_quad;

pub use error::{Error, Result};
pub use family::{FamilyDescriptor, FamilyKind, GaussianCov, MeanParam, NaturalParam, ObservationBatch, TAU};
