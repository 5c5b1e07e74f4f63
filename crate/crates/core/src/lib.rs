//! Frequency-domain estimation and inference for stationary spatial point
//! processes: tapered DFTs and periodograms, kernel spectral density
//! estimation, spectral means, Whittle fitting, and subsampling variance.

// Negated comparisons are used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dft;
pub mod error;
pub mod io;
pub mod irdft;
pub mod mc;
pub mod models;
pub mod optim;
pub mod geometry;
pub mod quad;
pub mod rng;
pub mod smoothing;
pub mod special;
pub mod specmean;
pub mod taper;
pub mod variance;
pub mod whittle;

pub use error::{Error, Result};
pub use geometry::{DomainSpec, FrequencyGrid, PeriodogramField, PointPattern, SpacingRule, Window};
pub use models::{Family, SpectralModel};
pub use taper::Taper;
