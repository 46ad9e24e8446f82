//! Minimal dense-tensor kernel for the sequence reconstruction models.
//!
//! Tensors are row-major `f64` buffers. Sequence layers take `(batch, steps, features)`
//! inputs. Every layer implements an explicit forward pass that saves what it needs
//! (in training mode) and a matching backward pass that accumulates parameter
//! gradients and returns the input gradient, so a [`Sequential`] stack is
//! differentiated in reverse layer order.

pub mod error;
pub mod gradcheck;
pub mod layers;
pub mod linalg;
pub mod loss;
pub mod optim;
pub mod rng;
pub mod tensor;

pub use error::{NnError, Result};
pub use layers::{
    BatchNorm, Conv1d, Dense, Dropout, FeedForward, Layer, LayerNorm, Lstm, Mode,
    MultiHeadAttention, Param, PositionalEncoding, Relu, Residual, Sequential, StateMut, StateRef,
};
pub use loss::mse_loss;
pub use optim::{Adam, AdamConfig};
pub use rng::Rng;
pub use tensor::Tensor;
