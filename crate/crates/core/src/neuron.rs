//! Leaky integrate-and-fire neuron dynamics.
//!
//! Each step accumulates the input current into the membrane potential,
//! detects a threshold crossing, and otherwise lets the potential decay
//! exponentially toward rest. Spiking resets the potential and opens a
//! refractory window during which input is ignored. An optional adaptive
//! threshold (`theta_plus` > 0) raises the effective threshold on every
//! spike and decays it slowly between spikes.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Fixed membrane-dynamics constants for one neuron population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronParams {
    /// Resting potential (mV); the leak target.
    pub v_rest: f64,
    /// Post-spike reset potential (mV).
    pub v_reset: f64,
    /// Firing threshold (mV).
    pub v_thresh: f64,
    /// Membrane time constant (ms).
    pub tau_mem: f64,
    /// Refractory period after a spike (ms).
    pub refrac_period: f64,
    /// Adaptive-threshold bump per spike (mV); 0 disables adaptation.
    pub theta_plus: f64,
    /// Adaptive-threshold decay time constant (ms).
    pub tau_theta: f64,
}

impl NeuronParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_reset < self.v_thresh) {
            return Err(Error::Config(format!(
                "v_reset ({}) must be below v_thresh ({})",
                self.v_reset, self.v_thresh
            )));
        }
        if !(self.tau_mem > 0.0) {
            return Err(Error::Config(format!(
                "tau_mem must be positive, got {}",
                self.tau_mem
            )));
        }
        if self.refrac_period < 0.0 {
            return Err(Error::Config(format!(
                "refrac_period must be non-negative, got {}",
                self.refrac_period
            )));
        }
        if self.theta_plus < 0.0 {
            return Err(Error::Config(format!(
                "theta_plus must be non-negative, got {}",
                self.theta_plus
            )));
        }
        if self.theta_plus > 0.0 && !(self.tau_theta > 0.0) {
            return Err(Error::Config(format!(
                "tau_theta must be positive when theta_plus > 0, got {}",
                self.tau_theta
            )));
        }
        Ok(())
    }
}

/// Mutable per-neuron state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronState {
    /// Membrane potential (mV).
    pub v: f64,
    /// Absolute time (ms) until which the neuron is refractory.
    pub refrac_until: f64,
    /// Adaptive threshold offset (mV), always >= 0.
    pub theta_adapt: f64,
    /// Spikes emitted since this state was created or reset.
    pub spike_count: u64,
}

impl NeuronState {
    /// A fresh state resting at `v_rest` with no history.
    pub fn resting(params: &NeuronParams) -> Self {
        NeuronState {
            v: params.v_rest,
            refrac_until: 0.0,
            theta_adapt: 0.0,
            spike_count: 0,
        }
    }
}

/// Advance one neuron by one time-step of length `dt` ending the input
/// accumulation at time `t`.
///
/// Semantics, in order:
/// 1. the adaptive threshold decays by `exp(-dt/tau_theta)` (when enabled);
/// 2. inside the refractory window the input is ignored and the potential is
///    held at `v_reset`;
/// 3. the input current (in mV) accumulates into the potential, and the
///    neuron fires iff the accumulated potential reaches
///    `v_thresh + theta_adapt` (boundary inclusive); firing resets to
///    `v_reset`, starts the refractory window, and bumps the adaptive
///    threshold;
/// 4. a non-firing potential decays exactly:
///    `v' = v_rest + (v - v_rest) * exp(-dt/tau_mem)`.
///
/// Pure: identical arguments give bit-identical results.
pub fn lif_step(
    state: NeuronState,
    input_current: f64,
    params: &NeuronParams,
    t: f64,
    dt: f64,
) -> Result<(NeuronState, bool)> {
    if !input_current.is_finite() {
        return Err(Error::NonFinite("input_current"));
    }
    debug_assert!(dt > 0.0);

    let mut next = state;
    if params.theta_plus > 0.0 {
        next.theta_adapt *= (-dt / params.tau_theta).exp();
    }

    if t < next.refrac_until {
        next.v = params.v_reset;
        return Ok((next, false));
    }

    let accumulated = next.v + input_current;
    if accumulated >= params.v_thresh + next.theta_adapt {
        next.v = params.v_reset;
        next.refrac_until = t + params.refrac_period;
        next.spike_count += 1;
        next.theta_adapt += params.theta_plus;
        Ok((next, true))
    } else {
        next.v = params.v_rest + (accumulated - params.v_rest) * (-dt / params.tau_mem).exp();
        Ok((next, false))
    }
}
