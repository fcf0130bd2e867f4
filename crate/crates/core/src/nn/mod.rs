//! Convolutional pedal classifier: layers, network, training and checkpoints.

mod checkpoint;
pub mod layers;
mod network;
mod optim;
mod real;
mod tensor;
mod train;

pub use checkpoint::{load_network, network_from_bytes, network_to_bytes, save_network, NETWORK_KIND};
pub use network::{ConvBranch, Inference, Network, NetworkConfig, TrainPass, DEFAULT_INPUT, PEDAL_CLASS};
pub use optim::{Adam, AdamConfig};
pub use real::Real;
pub use tensor::Tensor;
pub use train::{
    evaluate, history_to_csv, mel_to_input, pooled_features, predict_dataset, retrain_head, retrain_head_on_pooled,
    stratified_split, train, Dataset, EpochRecord, TrainConfig, TrainOutcome, HISTORY_HEADER,
};
