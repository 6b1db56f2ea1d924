//! A self-contained convolutional neural network toolkit: dense f32
//! tensors, seven layer kinds with hand-derived backward passes, the
//! Adam optimizer, a PNG dataset pipeline, and a deterministic training
//! loop. No ML framework underneath.

pub mod error;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use rng::Rng;
pub use tensor::{ReduceOp, Shape, Tensor};
