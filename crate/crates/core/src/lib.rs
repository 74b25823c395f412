//! Multiresolution representation of functions and operators in 1-3
//! dimensions: adaptive multiwavelet trees, separated Gaussian expansions of
//! radial kernels and the non-standard form for applying them.

pub mod basis;
pub mod crosscorr;
pub mod error;
pub mod experiments;
pub mod funtree;
pub mod gaussfit;
pub mod key;
pub mod nsform;
pub mod par;
pub mod quad;
pub mod tensor;

pub use basis::{block_eval, samples_to_block, Basis, CoeffBlock, QuadratureRule, TwoScaleFilters};
pub use error::{MrokError, Result};
pub use key::BoxKey;
