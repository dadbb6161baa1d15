//! The clock-driven simulation core: one network object owning the synaptic
//! state, the excitatory/inhibitory populations, and the presentation loop
//! that binds encoding, forward drive, neuron dynamics, plasticity, and
//! lateral inhibition.
//!
//! Presentation semantics:
//! * `learn = true` runs against the persistent network state: membrane
//!   potentials, refractory windows, and adaptive thresholds carry across
//!   images, and post-spikes trigger STDP updates on the firing neuron's
//!   kernel (or full weight row).
//! * `learn = false` is stateless inference: weights are untouched and the
//!   run uses an isolated copy of the neuron state (adaptive thresholds
//!   frozen at their trained values), so inference calls are independent
//!   and safe to fan out across threads.

use crate::config::{NetworkConfig, TopologyKind};
use crate::encoding::{poisson_step_indices, GrayImage};
use crate::error::{Error, Result};
use crate::neuron::{lif_step, NeuronState};
use crate::plasticity::{apply_delta, stdp_delta, TraceState};
use crate::topology::{inhibitory_currents, FcWeights, KernelBank, StrideSchedule};
use rand_chacha::ChaCha8Rng;

/// Trainable synaptic state for either topology.
#[derive(Debug, Clone, PartialEq)]
pub enum Synapses {
    Conv(KernelBank),
    Fc(FcWeights),
}

impl Synapses {
    pub fn w_max(&self) -> f64 {
        match self {
            Synapses::Conv(bank) => bank.w_max,
            Synapses::Fc(fc) => fc.w_max,
        }
    }

    pub fn num_neurons(&self) -> usize {
        match self {
            Synapses::Conv(bank) => bank.num_neurons(),
            Synapses::Fc(fc) => fc.num_neurons(),
        }
    }

    /// Weights of one neuron as a flat slice (kernel cells or full row).
    pub fn neuron_weights(&self, neuron: usize) -> &[f64] {
        match self {
            Synapses::Conv(bank) => &bank.kernels[neuron],
            Synapses::Fc(fc) => &fc.rows[neuron],
        }
    }

    /// Accumulate forward current from this step's spikes into `out`
    /// (one entry per excitatory neuron), before gain scaling.
    fn accumulate_forward(
        &self,
        spikes: &[u32],
        window: &Window,
        image_w: usize,
        out: &mut [f64],
    ) {
        match self {
            Synapses::Conv(bank) => {
                let (r0, c0) = window.origin;
                let (kh, kw) = (bank.kernel_h, bank.kernel_w);
                for &p in spikes {
                    let p = p as usize;
                    let r = p / image_w;
                    let c = p % image_w;
                    if r < r0 || r >= r0 + kh || c < c0 || c >= c0 + kw {
                        continue;
                    }
                    let cell = (r - r0) * kw + (c - c0);
                    for (acc, kernel) in out.iter_mut().zip(&bank.kernels) {
                        *acc += kernel[cell];
                    }
                }
            }
            Synapses::Fc(fc) => {
                for &p in spikes {
                    let p = p as usize;
                    for (acc, row) in out.iter_mut().zip(&fc.rows) {
                        *acc += row[p];
                    }
                }
            }
        }
    }

    /// STDP update for one post-spike: sample the pre-trace of every input
    /// in the active window and move the corresponding weight. Returns the
    /// number of weights touched.
    fn stdp_update(
        &mut self,
        neuron: usize,
        window: &Window,
        traces: &[TraceState],
        t: f64,
        stdp: &crate::plasticity::StdpParams,
    ) -> Result<u64> {
        let weights: &mut [f64] = match self {
            Synapses::Conv(bank) => &mut bank.kernels[neuron],
            Synapses::Fc(fc) => &mut fc.rows[neuron],
        };
        debug_assert_eq!(weights.len(), window.pixels.len());
        for (cell, &pixel) in window.pixels.iter().enumerate() {
            let trace_value = traces[pixel].sample_at(t, stdp.tau);
            let dw = stdp_delta(trace_value, weights[cell], stdp)?;
            weights[cell] = apply_delta(weights[cell], dw, stdp.w_max);
        }
        Ok(window.pixels.len() as u64)
    }
}

/// One receptive-field window: kernel origin plus the flat pixel indices
/// it covers, in kernel row-major order.
#[derive(Debug, Clone)]
struct Window {
    origin: (usize, usize),
    pixels: Vec<usize>,
}

/// Per-presentation result.
#[derive(Debug, Clone, PartialEq)]
pub struct PresentOutcome {
    /// Spikes each excitatory neuron emitted during the presentation window.
    pub spike_counts: Vec<u32>,
    /// Individual synaptic weights updated (0 unless learning).
    pub weight_updates: u64,
}

impl PresentOutcome {
    pub fn total_spikes(&self) -> u64 {
        self.spike_counts.iter().map(|&c| c as u64).sum()
    }
}

/// Simulation event stream for instrumented runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimEvent {
    PostSpike { neuron: usize, t: f64 },
    WeightUpdate { neuron: usize, t: f64 },
}

#[derive(Debug, Clone)]
pub struct Network {
    pub config: NetworkConfig,
    pub synapses: Synapses,
    pub schedule: Option<StrideSchedule>,
    windows: Vec<Window>,
    /// Persistent training-phase neuron state.
    pub exc_states: Vec<NeuronState>,
    pub inh_states: Vec<NeuronState>,
    /// Training-phase simulation clock (ms).
    pub sim_time: f64,
}

impl Network {
    /// Build a network with randomly initialized weights drawn from `rng`.
    pub fn build(config: NetworkConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        config.validate()?;
        let n = config.network.num_excitatory;
        let (synapses, schedule, windows) = match config.network.kind {
            TopologyKind::Convolutional => {
                let (kh, kw) = (
                    config.network.kernel_h.unwrap(),
                    config.network.kernel_w.unwrap(),
                );
                let schedule = StrideSchedule::build(
                    config.network.image_h,
                    config.network.image_w,
                    kh,
                    kw,
                    config.network.strides_h.unwrap(),
                    config.network.strides_v.unwrap(),
                )?;
                let windows = (0..schedule.len())
                    .map(|i| Window {
                        origin: schedule.positions[i],
                        pixels: schedule.window_pixels(i),
                    })
                    .collect();
                let bank = KernelBank::random(n, kh, kw, config.stdp.w_max, rng);
                (Synapses::Conv(bank), Some(schedule), windows)
            }
            TopologyKind::FullyConnected => {
                let num_pixels = config.num_pixels();
                let fc = FcWeights::random(n, num_pixels, config.stdp.w_max, rng);
                let windows = vec![Window {
                    origin: (0, 0),
                    pixels: (0..num_pixels).collect(),
                }];
                (Synapses::Fc(fc), None, windows)
            }
        };
        let exc_states = vec![NeuronState::resting(&config.excitatory); n];
        let inh_states = vec![NeuronState::resting(&config.inhibitory); n];
        Ok(Network {
            config,
            synapses,
            schedule,
            windows,
            exc_states,
            inh_states,
            sim_time: 0.0,
        })
    }

    /// Rebuild a network around existing synaptic and threshold state
    /// (used when loading a saved network).
    pub fn restore(
        config: NetworkConfig,
        synapses: Synapses,
        theta_adapt: Vec<f64>,
    ) -> Result<Self> {
        use rand::SeedableRng;
        let mut scratch = ChaCha8Rng::seed_from_u64(0);
        let mut net = Network::build(config, &mut scratch)?;
        if synapses.num_neurons() != net.config.network.num_excitatory {
            return Err(Error::Config(format!(
                "synapse state holds {} neurons, config declares {}",
                synapses.num_neurons(),
                net.config.network.num_excitatory
            )));
        }
        net.synapses = synapses;
        for (state, theta) in net.exc_states.iter_mut().zip(theta_adapt) {
            state.theta_adapt = theta;
        }
        Ok(net)
    }

    pub fn num_excitatory(&self) -> usize {
        self.config.network.num_excitatory
    }

    /// Present one image (see module docs for learn-mode semantics).
    pub fn present_image(
        &mut self,
        image: &GrayImage,
        learn: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<PresentOutcome> {
        self.present_with_boost(image, learn, 1.0, rng)
    }

    pub fn present_with_boost(
        &mut self,
        image: &GrayImage,
        learn: bool,
        boost: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<PresentOutcome> {
        self.simulate(image, learn, boost, rng, None)
    }

    /// Present with an event log of post-spikes and weight updates.
    pub fn present_recorded(
        &mut self,
        image: &GrayImage,
        learn: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<(PresentOutcome, Vec<SimEvent>)> {
        let mut events = Vec::new();
        let outcome = self.simulate(image, learn, 1.0, rng, Some(&mut events))?;
        Ok((outcome, events))
    }

    /// Stateless inference on a shared network reference. Clones the
    /// synaptic state once; batch callers should instead clone the network
    /// per worker and call [`Network::present_image`] with `learn = false`.
    pub fn infer(
        &self,
        image: &GrayImage,
        boost: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<PresentOutcome> {
        let mut copy = self.clone();
        copy.present_with_boost(image, false, boost, rng)
    }

    fn simulate(
        &mut self,
        image: &GrayImage,
        learn: bool,
        boost: f64,
        rng: &mut ChaCha8Rng,
        mut events: Option<&mut Vec<SimEvent>>,
    ) -> Result<PresentOutcome> {
        if image.height != self.config.network.image_h
            || image.width != self.config.network.image_w
        {
            return Err(Error::Domain(format!(
                "image is {}x{} but the network expects {}x{}",
                image.height, image.width, self.config.network.image_h, self.config.network.image_w
            )));
        }

        let n = self.num_excitatory();
        let dt = self.config.encoder.dt;
        let present_steps = self.config.steps_per_presentation();
        let rest_steps = self.config.steps_per_rest();
        let image_w = self.config.network.image_w;

        // Learning runs on the persistent state; inference on an isolated
        // copy that keeps only the trained adaptive thresholds.
        let mut local_exc;
        let mut local_inh;
        let (exc, inh, t0): (&mut [NeuronState], &mut [NeuronState], f64) = if learn {
            (&mut self.exc_states, &mut self.inh_states, self.sim_time)
        } else {
            local_exc = self
                .exc_states
                .iter()
                .map(|s| NeuronState {
                    theta_adapt: s.theta_adapt,
                    ..NeuronState::resting(&self.config.excitatory)
                })
                .collect::<Vec<_>>();
            local_inh = vec![NeuronState::resting(&self.config.inhibitory); n];
            (&mut local_exc, &mut local_inh, 0.0)
        };

        let base_counts: Vec<u64> = exc.iter().map(|s| s.spike_count).collect();
        let mut traces = vec![TraceState::new(); image.num_pixels()];
        let mut pending_inh = vec![0.0f64; n];
        let mut forward = vec![0.0f64; n];
        let mut exc_fired = vec![false; n];
        let mut inh_fired = vec![false; n];
        let mut weight_updates = 0u64;

        let no_spikes: Vec<u32> = Vec::new();
        for step in 0..present_steps + rest_steps {
            let t = t0 + (step + 1) as f64 * dt;
            let presenting = step < present_steps;

            let spikes = if presenting {
                poisson_step_indices(image, &self.config.encoder, boost, rng)?
            } else {
                no_spikes.clone()
            };

            // Convolutional windows cycle the stride schedule; the FC
            // topology has a single full-image window.
            let window = &self.windows[step % self.windows.len()];

            forward.iter_mut().for_each(|f| *f = 0.0);
            self.synapses
                .accumulate_forward(&spikes, window, image_w, &mut forward);

            for i in 0..n {
                let current = self.config.network.input_gain * forward[i] + pending_inh[i];
                let (next, fired) =
                    lif_step(exc[i], current, &self.config.excitatory, t, dt)?;
                exc[i] = next;
                exc_fired[i] = fired;
                if fired {
                    if let Some(log) = events.as_deref_mut() {
                        log.push(SimEvent::PostSpike { neuron: i, t });
                    }
                    if learn {
                        weight_updates += self.synapses.stdp_update(
                            i,
                            window,
                            &traces,
                            t,
                            &self.config.stdp,
                        )?;
                        if let Some(log) = events.as_deref_mut() {
                            log.push(SimEvent::WeightUpdate { neuron: i, t });
                        }
                    }
                }
            }

            for i in 0..n {
                let drive = if exc_fired[i] {
                    self.config.inhibition.exc_to_inh
                } else {
                    0.0
                };
                let (next, fired) = lif_step(inh[i], drive, &self.config.inhibitory, t, dt)?;
                inh[i] = next;
                inh_fired[i] = fired;
            }
            pending_inh = inhibitory_currents(&inh_fired, &self.config.inhibition);

            for &p in &spikes {
                traces[p as usize].record_spike(t, self.config.stdp.tau);
            }
        }

        if learn {
            self.sim_time += (present_steps + rest_steps) as f64 * dt;
        }

        let spike_counts = exc
            .iter()
            .zip(base_counts)
            .map(|(s, base)| (s.spike_count - base) as u32)
            .collect();
        Ok(PresentOutcome {
            spike_counts,
            weight_updates,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn tiny_conv_config(seed: u64) -> NetworkConfig {
        let mut cfg = NetworkConfig::convolutional(seed, 10, 16, 16, 8, 2, 2);
        cfg.encoder.presentation_ms = 200.0;
        cfg.encoder.rest_ms = 50.0;
        cfg.network.input_gain = 2.0;
        cfg
    }

    fn blob_image() -> GrayImage {
        // A bright diagonal band on a 16x16 canvas.
        let mut px = vec![0u8; 256];
        for r in 0..16usize {
            for c in 0..16usize {
                if r.abs_diff(c) <= 3 {
                    px[r * 16 + c] = 255;
                }
            }
        }
        GrayImage::new(16, 16, px).unwrap()
    }

    #[test]
    fn all_black_image_elicits_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = Network::build(tiny_conv_config(5), &mut rng).unwrap();
        let out = net
            .present_image(&GrayImage::zeros(16, 16), true, &mut rng)
            .unwrap();
        assert_eq!(out.spike_counts, vec![0; 10]);
        assert_eq!(out.weight_updates, 0);
    }

    #[test]
    fn inference_leaves_weights_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut net = Network::build(tiny_conv_config(9), &mut rng).unwrap();
        let before = net.synapses.clone();
        let out = net.present_image(&blob_image(), false, &mut rng).unwrap();
        assert_eq!(net.synapses, before);
        assert_eq!(out.weight_updates, 0);
        // Persistent training state is also untouched by inference.
        assert_eq!(net.sim_time, 0.0);
        assert!(net.exc_states.iter().all(|s| s.spike_count == 0));
    }

    #[test]
    fn learning_changes_weights_on_spikes() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut net = Network::build(tiny_conv_config(21), &mut rng).unwrap();
        let before = net.synapses.clone();
        let out = net.present_image(&blob_image(), true, &mut rng).unwrap();
        assert!(out.total_spikes() > 0, "fixture image must drive spikes");
        assert!(out.weight_updates > 0);
        assert_ne!(net.synapses, before);
    }

    #[test]
    fn fixed_seed_presentation_is_bit_reproducible() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            let mut net = Network::build(tiny_conv_config(77), &mut rng).unwrap();
            let img = blob_image();
            let mut counts = Vec::new();
            for _ in 0..3 {
                counts.push(net.present_image(&img, true, &mut rng).unwrap().spike_counts);
            }
            (counts, net.synapses)
        };
        let (counts_a, syn_a) = run();
        let (counts_b, syn_b) = run();
        assert_eq!(counts_a, counts_b);
        match (&syn_a, &syn_b) {
            (Synapses::Conv(a), Synapses::Conv(b)) => {
                for (ka, kb) in a.kernels.iter().zip(&b.kernels) {
                    for (wa, wb) in ka.iter().zip(kb) {
                        assert_eq!(wa.to_bits(), wb.to_bits());
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn weight_updates_only_at_post_spikes() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut net = Network::build(tiny_conv_config(33), &mut rng).unwrap();
        let (outcome, events) = net.present_recorded(&blob_image(), true, &mut rng).unwrap();
        assert!(outcome.total_spikes() > 0);
        let spikes: std::collections::HashSet<(usize, u64)> = events
            .iter()
            .filter_map(|e| match e {
                SimEvent::PostSpike { neuron, t } => Some((*neuron, t.to_bits())),
                _ => None,
            })
            .collect();
        let updates: Vec<(usize, u64)> = events
            .iter()
            .filter_map(|e| match e {
                SimEvent::WeightUpdate { neuron, t } => Some((*neuron, t.to_bits())),
                _ => None,
            })
            .collect();
        assert!(!updates.is_empty());
        for u in updates {
            assert!(spikes.contains(&u), "update without matching post-spike");
        }
    }

    #[test]
    fn competitive_differentiation_on_ten_neuron_fixture() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = Network::build(tiny_conv_config(2), &mut rng).unwrap();
        let out = net.present_image(&blob_image(), true, &mut rng).unwrap();
        let mut sorted = out.spike_counts.clone();
        sorted.sort_unstable();
        let median = sorted[sorted.len() / 2];
        let max = *sorted.last().unwrap();
        assert!(
            max > median,
            "winner ({max}) must strictly exceed median ({median}); counts {:?}",
            out.spike_counts
        );
    }

    #[test]
    fn mismatched_image_dimensions_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net = Network::build(tiny_conv_config(4), &mut rng).unwrap();
        let wrong = GrayImage::zeros(28, 28);
        assert!(net.present_image(&wrong, false, &mut rng).is_err());
    }

    #[test]
    fn fc_topology_runs_and_learns() {
        let mut cfg = NetworkConfig::fully_connected(6, 8, 16, 16);
        cfg.encoder.presentation_ms = 100.0;
        cfg.encoder.rest_ms = 30.0;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut net = Network::build(cfg, &mut rng).unwrap();
        let out = net.present_image(&blob_image(), true, &mut rng).unwrap();
        assert!(out.total_spikes() > 0);
        assert!(out.weight_updates > 0);
        // Homeostasis leaves a trace: some neuron's theta rose.
        assert!(net.exc_states.iter().any(|s| s.theta_adapt > 0.0));
    }
}
