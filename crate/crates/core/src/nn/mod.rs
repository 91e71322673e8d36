//! Dense and LSTM layers with hand-written backpropagation, Adam, and checkpoints.

mod adam;
mod checkpoint;
mod network;
mod params;

pub use adam::Adam;
pub use checkpoint::{CheckpointReader, CheckpointWriter, MAGIC, VERSION};
pub use network::{batch_of_one, stack_rows, Block, Head, LayerBlocks, Layout, NetSpec, Network, Tape};
pub use params::ParamSet;
