//! Minimal neural-network engine: tensors, 1D-CNN/dense layers, exact
//! analytic backprop, stable softmax cross-entropy, and flat parameter
//! vectors. Everything is `f64` and deterministic given a seeded generator.

mod layer;
mod loss;
mod params;
mod stack;
mod tensor;

pub use layer::LayerSpec;
pub use loss::{argmax_rows, softmax_cross_entropy, softmax_rows};
pub use params::ParamVector;
pub use stack::{ForwardCache, LayerStack};
pub use tensor::Tensor;
