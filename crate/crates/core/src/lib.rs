//! Fragment-based molecular generation.
//!
//! Molecules are cut into BRICS fragment chains, rare fragments are folded
//! into frequency tokens, and a GRU variational autoencoder learns the
//! fragment sequences. See the `fraggen` binary for the end-to-end pipeline.

pub mod evalmetrics;
pub mod pipeline;
pub mod sampler;
pub mod seqmodel;
pub mod skipgram;
pub mod vocab;

pub use fraggen_chem as chem;
