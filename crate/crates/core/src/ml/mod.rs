//! From-scratch neural regressors and their training loops: dense and
//! convolutional layers with hand-written backpropagation, Adam, early
//! stopping, and the joint measurement-plus-network optimizer.

mod hybrid;
mod layers;
mod network;
mod optimizer;
mod tensor;
mod train;

pub use hybrid::{
    composed_loss_and_grads, hybrid_train, hybrid_train_with, HybridOptions, HybridState, ThetaInit,
};
pub use layers::{Activation, LayerSpec};
pub use network::{cnn_build, fnn_build, BackwardResult, CnnVariant, NetworkModel};
pub use optimizer::Adam;
pub use tensor::Tensor;
pub use train::{evaluate, train, EpochStats, History, Metrics, TrainConfig};
