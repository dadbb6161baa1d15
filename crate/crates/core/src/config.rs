//! Network configuration: every tunable constant in one serializable
//! structure, with the default parameter sets for both topologies.
//!
//! Configs round-trip through TOML so a run can write its fully resolved
//! configuration next to its outputs and be reproduced exactly.

use crate::encoding::EncoderConfig;
use crate::error::{Error, Result};
use crate::neuron::NeuronParams;
use crate::plasticity::StdpParams;
use crate::topology::InhibitionConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    Convolutional,
    FullyConnected,
}

/// Layer geometry and drive scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySection {
    pub kind: TopologyKind,
    pub num_excitatory: usize,
    pub image_h: usize,
    pub image_w: usize,
    /// Kernel extent; required for the convolutional topology.
    pub kernel_h: Option<usize>,
    pub kernel_w: Option<usize>,
    /// Stride counts (horizontal, vertical); required for convolutional.
    pub strides_h: Option<usize>,
    pub strides_v: Option<usize>,
    /// Input gain: mV of potential increment per unit weight per pre-spike.
    pub input_gain: f64,
}

/// Training-loop policy knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSection {
    /// Passes over the training images.
    pub passes: usize,
    /// Interleave classes round-robin when ordering the training set.
    pub interleave_classes: bool,
    /// Retries with boosted rates when an image elicits no spikes at
    /// inference.
    pub max_silent_retries: u32,
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            passes: 3,
            interleave_classes: true,
            max_silent_retries: 3,
        }
    }
}

/// Complete, self-contained description of one network and its run policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub seed: u64,
    pub network: TopologySection,
    pub excitatory: NeuronParams,
    pub inhibitory: NeuronParams,
    pub stdp: StdpParams,
    pub encoder: EncoderConfig,
    pub inhibition: InhibitionConfig,
    pub training: TrainingSection,
}

/// Excitatory defaults shared by both topologies (adaptation off).
pub fn excitatory_defaults() -> NeuronParams {
    NeuronParams {
        v_rest: -65.0,
        v_reset: -65.0,
        v_thresh: -52.0,
        tau_mem: 100.0,
        refrac_period: 5.0,
        theta_plus: 0.0,
        tau_theta: 1.0e7,
    }
}

/// Inhibitory defaults: fast membrane, low threshold, short refractory,
/// so one excitatory spike reliably triggers the partner.
pub fn inhibitory_defaults() -> NeuronParams {
    NeuronParams {
        v_rest: -60.0,
        v_reset: -45.0,
        v_thresh: -40.0,
        tau_mem: 10.0,
        refrac_period: 2.0,
        theta_plus: 0.0,
        tau_theta: 1.0e7,
    }
}

pub fn stdp_defaults() -> StdpParams {
    StdpParams {
        eta: 0.002,
        tau: 20.0,
        offset: 0.4,
        w_max: 1.0,
        mu: 0.9,
    }
}

pub fn inhibition_defaults() -> InhibitionConfig {
    InhibitionConfig {
        w_inh: 17.0,
        exc_to_inh: 22.0,
    }
}

impl NetworkConfig {
    /// Default convolutional network: strong lateral inhibition carries
    /// neuron differentiation, adaptive thresholds stay off.
    pub fn convolutional(
        seed: u64,
        num_excitatory: usize,
        image_h: usize,
        image_w: usize,
        kernel: usize,
        strides_h: usize,
        strides_v: usize,
    ) -> Self {
        NetworkConfig {
            seed,
            network: TopologySection {
                kind: TopologyKind::Convolutional,
                num_excitatory,
                image_h,
                image_w,
                kernel_h: Some(kernel),
                kernel_w: Some(kernel),
                strides_h: Some(strides_h),
                strides_v: Some(strides_v),
                input_gain: 1.0,
            },
            excitatory: excitatory_defaults(),
            inhibitory: inhibitory_defaults(),
            stdp: stdp_defaults(),
            encoder: EncoderConfig::default(),
            inhibition: inhibition_defaults(),
            training: TrainingSection::default(),
        }
    }

    /// Default fully-connected baseline: adaptive thresholds on (required
    /// for neuron differentiation in this topology).
    pub fn fully_connected(
        seed: u64,
        num_excitatory: usize,
        image_h: usize,
        image_w: usize,
    ) -> Self {
        NetworkConfig {
            seed,
            network: TopologySection {
                kind: TopologyKind::FullyConnected,
                num_excitatory,
                image_h,
                image_w,
                kernel_h: None,
                kernel_w: None,
                strides_h: None,
                strides_v: None,
                input_gain: 1.0,
            },
            excitatory: NeuronParams {
                theta_plus: 0.05,
                ..excitatory_defaults()
            },
            inhibitory: inhibitory_defaults(),
            stdp: stdp_defaults(),
            encoder: EncoderConfig::default(),
            inhibition: inhibition_defaults(),
            training: TrainingSection::default(),
        }
    }

    pub fn num_pixels(&self) -> usize {
        self.network.image_h * self.network.image_w
    }

    pub fn steps_per_presentation(&self) -> usize {
        (self.encoder.presentation_ms / self.encoder.dt).round() as usize
    }

    pub fn steps_per_rest(&self) -> usize {
        (self.encoder.rest_ms / self.encoder.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.network.num_excitatory == 0 {
            return Err(Error::Config("num_excitatory must be at least 1".into()));
        }
        if self.network.image_h == 0 || self.network.image_w == 0 {
            return Err(Error::Config("image dimensions must be positive".into()));
        }
        if !self.network.input_gain.is_finite() || self.network.input_gain <= 0.0 {
            return Err(Error::Config(format!(
                "input_gain must be positive, got {}",
                self.network.input_gain
            )));
        }
        if self.network.kind == TopologyKind::Convolutional {
            for (name, v) in [
                ("kernel_h", self.network.kernel_h),
                ("kernel_w", self.network.kernel_w),
                ("strides_h", self.network.strides_h),
                ("strides_v", self.network.strides_v),
            ] {
                if v.is_none() {
                    return Err(Error::Config(format!(
                        "{name} is required for the convolutional topology"
                    )));
                }
            }
        }
        self.excitatory.validate()?;
        self.inhibitory.validate()?;
        self.stdp.validate()?;
        self.encoder.validate()?;
        self.inhibition.validate()?;
        if self.training.passes == 0 {
            return Err(Error::Config("training.passes must be at least 1".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("serialize config: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: NetworkConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("parse config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
