//! Echo state network representation, state update and linear readout.
//!
//! A network evolves as `a_t = f(W a_{t-1} + w_in x_t + b)` with a per-neuron
//! transfer function `f`. Substrate-built networks additionally clamp one
//! designated input neuron to the raw input after every update. The readout
//! is a linear map fitted by least squares on the collected states.

mod generate;
mod network;
mod readout;

pub use generate::{generate_random_esn, prune_random};
pub(crate) use generate::uniform;
pub use network::{NetworkDocument, NetworkError, NetworkState, ReservoirNetwork, Transfer, WeightsDocument};
pub use readout::{train_readout, train_readout_with, Readout, ReadoutOptions};
