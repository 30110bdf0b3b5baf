//! Bayesian spatial smoothing with a thin-plate-spline prior.
//!
//! For Gaussian data the joint posterior of the field, the noise variance and
//! the smoothing parameter is sampled directly (independent draws, no
//! burn-in) through the eigen-decomposition of the penalty matrix. For
//! binomial data the same machinery is used as one block of a
//! Metropolis-within-Gibbs chain.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod diagnostics;
pub mod error;
pub mod glmm;
pub mod kernel;
pub mod penalty;
pub mod posterior;
pub mod prior;
pub mod rou;
pub mod synth;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use design::{build_design, CoordTransform, SpatialDesign};
pub use error::{Error, ErrorKind, Result};
pub use kernel::{tps_kernel_eval, TpsKernel};
pub use penalty::{
    build_penalty, evaluate_surface, recover_coefficients, SplineCoefficients, SplinePenalty,
    SurfaceBasis,
};
pub use posterior::{
    build_cache, build_rou_envelope, draw_joint, log_marginal_eta, sample_delta0, sample_eta,
    sample_nu, JointDraws, PosteriorCache,
};
pub use prior::{EtaPrior, EtaPriorRegistry, Pareto, UserLogDensity};
pub use rou::RouEnvelope;
