//! Dense 3-mode tensors, PARAFAC and TUCKER3 fitting, the core consistency diagnostic
//! (CORCONDIA), and randomized modewise compression with a Monte Carlo harness that measures
//! how well compression preserves the diagnostic.

pub mod cli;
pub mod compress;
pub mod corcondia;
pub mod decomp;
pub mod error;
pub mod harness;
pub mod io;
pub mod matrix;
pub mod seed;
pub mod synth;
pub mod tensor;

pub use compress::{
    compress, gaussian_operator, orthonormal_operator, project_onto_rowspaces, ratio_to_dims, tucker_operator,
    CompressionOperator, RatioSpec, Scheme,
};
pub use corcondia::{corcondia, corcondia_core, corcondia_sweep, CorcondiaReport};
pub use decomp::{cp_als, orthonormalize_tucker, pseudoinverse, tucker3, CpModel, FitConfig, TuckerModel};
pub use error::{Error, Result};
pub use harness::{run_experiment, summarize, ExperimentConfig, ExperimentResult, SummaryStats};
pub use matrix::Matrix;
pub use synth::{synth_tensor, FactorDistribution, SynthSpec};
pub use tensor::{reconstruct_cp, reconstruct_tucker, superdiagonal_identity, DenseTensor3, Dims, Mode};
