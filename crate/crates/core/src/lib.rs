//! Latent-space operations for generative-model priors and their
//! distribution-matched counterparts.
//!
//! Interpolating, perturbing or combining latent samples changes their
//! distribution: the midpoint of two uniform vectors is triangular, the sum
//! of Gaussian increments grows in variance. A generator trained on the
//! prior then sees inputs it never saw during training. The matched
//! operations here follow each raw operation with a componentwise monotone
//! transport map `F_Z⁻¹ ∘ F_Y` that restores the prior exactly (closed
//! forms) or up to Monte-Carlo error (tabulated maps).
//!
//! Modules:
//! - [`priors`]: component distributions, CDFs, quantiles, sampling
//! - [`ops`]: raw operations, SLERP and random walks
//! - [`transport`]: monotone maps and the matched-operation dispatcher
//! - [`stats`]: KS statistics, squared-norm CLT approximations, histograms
//! - [`io`]: LVF1 batch files, CSV and JSON reports
//! - [`cli`]: the `latent-match` command line

pub mod batch;
pub mod cli;
pub mod error;
pub mod io;
pub mod ops;
pub mod priors;
pub mod rng;
pub mod stats;
pub mod transport;

pub use batch::LatentBatch;
pub use error::{Error, Result};
pub use ops::{OpKind, OperationSpec};
pub use priors::{PriorSpec, ScalarDist};
pub use stats::{KsReport, NormApprox};
pub use transport::{MapBuildConfig, TransportMap1D};
