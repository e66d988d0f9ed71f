//! Siamese convolutional answer selection: a question arm and an answer arm
//! encode each sentence, the two representations are joined with four word
//! overlap features, and a small classifier scores the pair.

pub mod error;
pub mod grad_check;
pub mod kernel;
pub mod model;
pub mod persist;
pub mod rerank;
pub mod train;

pub use error::{Error, Result};
pub use model::{Model, ModelConfig};
