//! Double-precision neural kernels with reverse-mode gradients: embedding
//! lookup, a bidirectional tanh RNN, max-pooling, softmax attention, gates,
//! small MLPs and two-class cross-entropy, plus a finite-difference checker,
//! SGD and text checkpoints.

pub mod brnn;
pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod optim;
pub mod param;
pub mod tape;
pub mod tensor;

pub use brnn::BrnnParams;
pub use error::{Error, Result};
pub use gradcheck::{grad_check, relative_error, resolution_floor, GradCheck};
pub use optim::Sgd;
pub use param::{Gradients, ParamId, ParamStore, Parameter};
pub use tape::{attention_weights, softmax, Tape, Var};
pub use tensor::Tensor;
