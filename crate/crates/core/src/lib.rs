//! Adaptive structural learning for restricted Boltzmann machines and deep
//! belief networks, with dynamic arrangement of multi-modal visible blocks.
//!
//! * [`rbm`]: binary RBM energy, exact enumeration, conditionals, CD-k and SGD.
//! * [`adaptive`]: Walking-Distance tracking and neuron generation/annihilation.
//! * [`arrangement`]: image/CSV blocks, the interleaved starting layout, the
//!   block sorter and the look-up table replayed at inference.
//! * [`dbn`]: greedy layer-wise training, layer generation, softmax head and
//!   inference.
//! * [`data`]: binarization of images and tabular items, k-fold splits,
//!   synthetic datasets and file loaders.
//! * [`bench`]: per-layer reports comparing training regimes.
//! * [`cli`]: the `adbn` command line.

pub mod adaptive;
pub mod arrangement;
pub mod bench;
pub mod cli;
pub mod data;
pub mod dbn;
pub mod error;
pub mod rbm;

pub use adaptive::{GrowthConfig, WdTracker};
pub use arrangement::{BlockLayout, LookupTable};
pub use dbn::{DbnModel, Mode, TrainConfig};
pub use error::{Error, Result};
pub use rbm::{BinaryVector, RbmParams};
