//! Power-law weight-dependent STDP realized through exponentially decaying
//! pre-synaptic traces sampled at post-spike instants.
//!
//! Each pre-synaptic input carries a trace that decays with time constant
//! `tau` and jumps by one whenever the input spikes. At the instant a
//! post-neuron fires, the trace value equals `sum(exp(-(t_post - t_pre)/tau))`
//! over recent pre-spikes, and the weight update is
//!
//! `dw = eta * (trace - offset) * (w_max - w)^mu`
//!
//! Traces above the offset potentiate (recent, causal pre-activity); stale
//! traces depress. The `(w_max - w)^mu` factor shrinks updates near the
//! bound.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// STDP rule constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdpParams {
    /// Learning rate.
    pub eta: f64,
    /// Pre-trace decay time constant (ms).
    pub tau: f64,
    /// Trace level separating potentiation from depression, in [0, 1).
    pub offset: f64,
    /// Upper weight bound.
    pub w_max: f64,
    /// Weight-dependence exponent.
    pub mu: f64,
}

impl StdpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::Config(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if !(0.0..1.0).contains(&self.offset) {
            return Err(Error::Config(format!(
                "offset must lie in [0, 1), got {}",
                self.offset
            )));
        }
        if !(self.w_max > 0.0) {
            return Err(Error::Config(format!(
                "w_max must be positive, got {}",
                self.w_max
            )));
        }
        if self.mu < 0.0 {
            return Err(Error::Config(format!(
                "mu must be non-negative, got {}",
                self.mu
            )));
        }
        Ok(())
    }
}

/// Exponentially decaying trace of one pre-synaptic input.
///
/// `value` is the amplitude at `last_update`; decay between events is
/// computed lazily from the elapsed time, which is equivalent to applying
/// the per-step decay factor at every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceState {
    pub value: f64,
    pub last_update: f64,
}

impl TraceState {
    pub fn new() -> Self {
        TraceState {
            value: 0.0,
            last_update: 0.0,
        }
    }

    /// Trace amplitude at time `t >= last_update` without mutating.
    pub fn sample_at(&self, t: f64, tau: f64) -> f64 {
        self.value * (-(t - self.last_update) / tau).exp()
    }

    /// Register a pre-spike at time `t`: decay to `t`, then add one.
    pub fn record_spike(&mut self, t: f64, tau: f64) {
        self.value = self.sample_at(t, tau) + 1.0;
        self.last_update = t;
    }
}

impl Default for TraceState {
    fn default() -> Self {
        Self::new()
    }
}

/// Advance a trace by one step of length `dt`: decay, then accumulate a
/// unit bump if the input spiked during the step.
pub fn update_trace(trace: TraceState, pre_spiked: bool, dt: f64, tau: f64) -> TraceState {
    debug_assert!(dt > 0.0 && tau > 0.0);
    let mut value = trace.value * (-dt / tau).exp();
    if pre_spiked {
        value += 1.0;
    }
    TraceState {
        value,
        last_update: trace.last_update + dt,
    }
}

/// Weight change for a post-spike given the sampled pre-trace value.
///
/// Positive when `trace_value > offset`, negative otherwise; scaled by
/// `(w_max - w)^mu` so updates vanish at the upper bound.
pub fn stdp_delta(trace_value: f64, w: f64, params: &StdpParams) -> Result<f64> {
    if !(0.0..=params.w_max).contains(&w) {
        return Err(Error::Domain(format!(
            "weight {} outside [0, {}]",
            w, params.w_max
        )));
    }
    debug_assert!(trace_value >= 0.0);
    Ok(params.eta * (trace_value - params.offset) * (params.w_max - w).powf(params.mu))
}

/// Apply a weight change, clamping the result into [0, w_max].
pub fn apply_delta(w: f64, dw: f64, w_max: f64) -> f64 {
    (w + dw).clamp(0.0, w_max)
}

/// Initial synaptic weight: uniform in [0, 0.3 * w_max], leaving headroom
/// for potentiation.
pub fn initial_weight<R: Rng + ?Sized>(rng: &mut R, w_max: f64) -> f64 {
    rng.gen_range(0.0..=0.3 * w_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn paper_params() -> StdpParams {
        StdpParams {
            eta: 0.002,
            tau: 20.0,
            offset: 0.4,
            w_max: 1.0,
            mu: 0.9,
        }
    }

    #[test]
    fn trace_zero_is_fixed_point() {
        let t = update_trace(TraceState::new(), false, 0.5, 20.0);
        assert_eq!(t.value, 0.0);
    }

    #[test]
    fn trace_decays_to_e_inverse_over_one_tau() {
        let t = TraceState {
            value: 1.0,
            last_update: 0.0,
        };
        let t = update_trace(t, false, 20.0, 20.0);
        assert!((t.value - (-1.0f64).exp()).abs() < 1e-15);
        assert!((t.value - 0.367_879_441_171_442_3).abs() < 1e-12);
    }

    #[test]
    fn trace_unit_bump_from_zero() {
        let t = update_trace(TraceState::new(), true, 0.5, 20.0);
        assert_eq!(t.value, 1.0);
    }

    #[test]
    fn lazy_sampling_matches_stepped_decay() {
        let mut lazy = TraceState::new();
        let mut stepped = TraceState::new();
        let tau = 20.0;
        let dt = 0.5;
        let spike_steps = [3usize, 4, 10, 11, 12, 40];
        for step in 0..100usize {
            let t = (step + 1) as f64 * dt;
            let fired = spike_steps.contains(&step);
            stepped = update_trace(stepped, fired, dt, tau);
            if fired {
                lazy.record_spike(t, tau);
            }
            assert!((lazy.sample_at(t, tau) - stepped.value).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_matches_reference_potentiation_value() {
        // trace 1.0, w 0.5, eta 0.002, offset 0.4, w_max 1, mu 0.9:
        // dw = 0.002 * 0.6 * 0.5^0.9
        let dw = stdp_delta(1.0, 0.5, &paper_params()).unwrap();
        assert!((dw - 6.430_640_775_217_759e-4).abs() < 1e-15, "dw = {dw:e}");
        assert!(dw > 0.0);
    }

    #[test]
    fn delta_zero_at_offset() {
        let params = paper_params();
        for &w in &[0.0, 0.3, 0.99] {
            assert_eq!(stdp_delta(params.offset, w, &params).unwrap(), 0.0);
        }
    }

    #[test]
    fn delta_zero_at_weight_bound() {
        let params = paper_params();
        for &trace in &[0.0, 0.4, 2.0] {
            assert_eq!(stdp_delta(trace, params.w_max, &params).unwrap(), 0.0);
        }
    }

    #[test]
    fn delta_matches_reference_depression_value() {
        // Stale trace (0.0): dw = 0.002 * (-0.4) * 0.5^0.9
        let dw = stdp_delta(0.0, 0.5, &paper_params()).unwrap();
        assert!((dw - (-4.287_093_850_145_173e-4)).abs() < 1e-15, "dw = {dw:e}");
        assert!(dw < 0.0);
    }

    #[test]
    fn delta_rejects_out_of_range_weight() {
        let params = paper_params();
        assert!(stdp_delta(1.0, -0.01, &params).is_err());
        assert!(stdp_delta(1.0, 1.01, &params).is_err());
    }

    #[test]
    fn apply_delta_examples() {
        assert!((apply_delta(0.5, 6.431e-4, 1.0) - 0.5006431).abs() < 1e-12);
        assert_eq!(apply_delta(0.0, -0.1, 1.0), 0.0);
        assert_eq!(apply_delta(1.0, 0.1, 1.0), 1.0);
    }

    #[test]
    fn zero_crossing_at_tau_ln_inverse_offset() {
        // For a single isolated pre-spike, the trace at the post instant is
        // exp(-dt_pair/tau); the update changes sign where that equals the
        // offset. Bisect the sign change independently and compare with the
        // closed form tau * ln(1/offset).
        let params = paper_params();
        let w = 0.5;
        let delta_at = |gap: f64| {
            stdp_delta((-gap / params.tau).exp(), w, &params).unwrap()
        };
        let (mut lo, mut hi) = (0.0f64, 100.0f64);
        assert!(delta_at(lo) > 0.0 && delta_at(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if delta_at(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        let closed_form = params.tau * (1.0 / params.offset).ln();
        assert!((closed_form - 18.325_814_637_483_102).abs() < 1e-9);
        assert!((root - closed_form).abs() < 1e-9, "root {root}");
    }

    #[test]
    fn potentiation_shrinks_with_weight() {
        // Soft bound: at equal trace, larger weights get smaller updates.
        let params = paper_params();
        let mut prev = f64::INFINITY;
        for i in 0..20 {
            let w = i as f64 * 0.05;
            let dw = stdp_delta(1.0, w, &params).unwrap();
            assert!(dw < prev);
            prev = dw;
        }
    }

    proptest! {
        #[test]
        fn weights_stay_bounded_under_random_updates(
            seed in any::<u64>(),
            steps in 1usize..400,
        ) {
            use rand::{Rng, SeedableRng};
            let params = paper_params();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut w = initial_weight(&mut rng, params.w_max);
            for _ in 0..steps {
                let trace: f64 = rng.gen_range(0.0..3.0);
                let dw = stdp_delta(trace, w, &params).unwrap();
                w = apply_delta(w, dw, params.w_max);
                prop_assert!((0.0..=params.w_max).contains(&w));
            }
        }

        #[test]
        fn delta_strictly_increasing_in_trace(
            w in 0.0f64..0.999,
            t1 in 0.0f64..3.0,
            bump in 1e-6f64..1.0,
        ) {
            let params = paper_params();
            let lo = stdp_delta(t1, w, &params).unwrap();
            let hi = stdp_delta(t1 + bump, w, &params).unwrap();
            prop_assert!(hi > lo);
        }

        #[test]
        fn trace_updates_match_pairwise_sum_oracle(
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            // Random pre-spike train on a dt grid; the stepped trace sampled
            // at random instants must equal the brute-force pairwise sum
            // sum(exp(-(t_post - t_pre)/tau)) to 1e-12 relative.
            let tau = 20.0;
            let dt = 0.5;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut trace = TraceState::new();
            let mut pre_times: Vec<f64> = Vec::new();
            for step in 0..600usize {
                let t = (step + 1) as f64 * dt;
                let fired = rng.gen_bool(0.08);
                trace = update_trace(trace, fired, dt, tau);
                if fired {
                    pre_times.push(t);
                }
                if rng.gen_bool(0.05) {
                    // Treat t as a post-spike instant and compare.
                    let brute: f64 = pre_times
                        .iter()
                        .map(|&tp| (-(t - tp) / tau).exp())
                        .sum();
                    let err = (trace.value - brute).abs();
                    let tol = 1e-12 * brute.max(1.0);
                    prop_assert!(err <= tol, "err {err:e} at t {t}");
                }
            }
        }
    }
}
