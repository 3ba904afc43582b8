//! Stacked sparse autoencoder classifier.
//!
//! Sigmoid autoencoders are pretrained greedily one layer at a time, a
//! softmax head is trained on the top-level features, and the whole stack
//! is then fine-tuned with backpropagation. Everything runs on a small
//! dense `f64` matrix kernel with seeded, bitwise-reproducible training.
//!
//! ```
//! use sae_core::data::{split, synth_blobs};
//! use sae_core::eval::evaluate;
//! use sae_core::train::{fine_tune, pretrain};
//! use sae_core::TrainConfig;
//!
//! # fn main() -> sae_core::Result<()> {
//! let data = synth_blobs(20, 8, 0.1, 1)?;
//! let (train, val) = split(&data, 0.2, 1)?;
//! let cfg = TrainConfig { seed: 1, ..TrainConfig::for_layers(2) };
//! let (net, _) = pretrain(&train, Some(&val), &[64, 16, 8], &cfg)?;
//! let (net, _) = fine_tune(net, &train, Some(&val), &cfg)?;
//! println!("{}", evaluate(&net, &val)?.report());
//! # Ok(())
//! # }
//! ```

pub mod autoencoder;
pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod matrix;
pub mod model_io;
pub mod network;
pub mod raster;
pub mod selfcheck;
pub mod softmax;
pub mod train;

pub use autoencoder::{AutoencoderParams, LayerGradients, SparsityConfig};
pub use data::{Dataset, PreprocessConfig};
pub use error::{Error, Result};
pub use eval::{ConfusionCounts, Evaluation, Metrics, Rate};
pub use matrix::{Matrix, RngState};
pub use network::StackedNetwork;
pub use raster::{GrayImage, ResizeFilter};
pub use softmax::SoftmaxParams;
pub use train::{PhaseConfig, TrainConfig, TrainingTrace};
