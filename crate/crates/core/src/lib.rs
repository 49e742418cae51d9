//! Exchangeable Gibbs partitions: exact laws of block frequencies and
//! record indices, their conditional representations, and samplers.

pub mod combin;
pub mod error;
pub mod laws;
pub mod logprob;
pub mod model;
pub mod oracle;
pub mod quad;
pub mod sim;
pub mod stats;
pub mod verify;

pub use combin::{AgeOrderedPartition, FrequencyComposition, RecordIndexVector};
pub use error::{GibbsError, Result};
pub use logprob::LogProb;
pub use model::{validate_model, Family, GibbsModel, ModelSpec};
