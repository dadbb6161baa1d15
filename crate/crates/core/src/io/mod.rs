//! Dataset loading, network-state serialization, and kernel visualization
//! export.

pub mod idx;
pub mod manifest;
pub mod netfile;
pub mod pgm;

pub use idx::{load_idx, Dataset};
pub use netfile::{load_network, save_network};
pub use pgm::export_kernels_pgm;
