//! Control-design toolkit for active reactor step-back studies:
//! ARX identification from step-back data, FOPTD/SOPTD model reduction,
//! LQR-based PID tuning, fractional-order phase-shaper design and
//! realization, and closed-loop gain-robustness analysis.
//!
//! The numeric core is generic over the scalar type ([`scalar::Scalar`]:
//! `f32` or `f64`); the aliases below fix `f64`, which is what the fixtures,
//! the pipeline and the CLI use.

pub mod analysis;
pub mod error;
pub mod fixtures;
pub mod freq;
mod optim;
pub mod poly;
pub mod reduce;
pub mod scalar;
pub mod shaper;
pub mod sim;
pub mod ss;
pub mod synth;
pub mod sysid;
pub mod tf;
pub mod tune;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` aliases for the core types.
pub type Poly = poly::Polynomial<f64>;
pub type Tf = tf::RationalTf<f64>;
pub type Samples = Vec<freq::FreqSample<f64>>;
pub type Series = sim::TimeSeries<f64>;
pub type Ss = ss::StateSpace<f64>;
pub type Foptd = reduce::FoptdModel<f64>;
pub type Soptd = reduce::SoptdModel<f64>;
pub type Pid = tune::PidGains<f64>;
pub type Shaper = shaper::PhaseShaperParams<f64>;
