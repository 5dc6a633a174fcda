//! Dense self-adjoint matrices: spectral decomposition, functional calculus,
//! Schatten norms, spectral truncation and increment ratios.

mod norms;
mod operator;
mod ratio;
mod spectral;

pub use norms::{schatten_norm, SchattenNorm, SchattenP};
pub(crate) use norms::hermitian_schatten;
pub use operator::{HermitianOperator, MatrixJson, C64};
pub use ratio::{increment_ratio, trace_transfer_check, NormKind, RatioWitness, TraceTransferReport};
pub use spectral::{apply_function, decompose, spectral_truncation, SpectralDecomposition};
