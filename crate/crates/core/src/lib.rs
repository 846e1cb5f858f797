//! Numerical tools for the S-transform, the free multiplicative law of
//! large numbers, and the μ(α, β) family of measures on [0, ∞).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod family;
pub mod limit_law;
pub mod measure;
pub mod quadrature;
pub mod rmt;
mod roots;
pub mod transforms;

pub use error::{Error, Result};
pub use family::FamilyParams;
pub use limit_law::{LimitLaw, LogMoments};
pub use measure::{Atom, Cdf, EmpiricalDist, Measure, QuantileTable};
pub use rmt::{McConfig, McSource, SpectralSample};
pub use transforms::STransform;
