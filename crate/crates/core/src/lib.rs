//! Clock-driven spiking neural network simulator with convolutional STDP
//! feature learning.
//!
//! A single excitatory layer of leaky integrate-and-fire neurons learns
//! shared weight kernels through power-law weight-dependent STDP while a
//! time-multiplexed stride schedule sweeps each kernel over the input
//! image. Lateral inhibition through one-to-one inhibitory partners
//! differentiates the receptive fields. A fully-connected baseline with
//! adaptive thresholds is included for comparison, along with Poisson
//! rate-coded input encoding, dataset loading, unsupervised training,
//! neuron labeling, classification/detection, and the experiment
//! protocols.

pub mod config;
pub mod encoding;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod io;
pub mod network;
pub mod neuron;
pub mod plasticity;
pub mod topology;

pub use config::{NetworkConfig, TopologyKind};
pub use encoding::{EncoderConfig, GrayImage, RgbImage};
pub use engine::{
    assign_labels, classify, detect_binary, evaluate, evaluate_sequential, train_unsupervised,
    EvalReport, LabelAssignment, Prediction, TrainReport,
};
pub use error::{Error, Result};
pub use network::{Network, PresentOutcome, Synapses};
pub use neuron::{lif_step, NeuronParams, NeuronState};
pub use plasticity::{apply_delta, stdp_delta, update_trace, StdpParams, TraceState};
pub use topology::{build_stride_schedule, InhibitionConfig, KernelBank, StrideSchedule};
