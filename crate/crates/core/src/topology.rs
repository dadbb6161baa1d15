//! Network wiring: the time-multiplexed stride schedule for shared weight
//! kernels, the fully-connected baseline weight matrix, and the one-to-one
//! excitatory/inhibitory pairing with all-but-self lateral inhibition.

use crate::error::{Error, Result};
use crate::plasticity::initial_weight;
use rand::Rng;

/// Ordered kernel origins cycled over successive simulation time-steps.
///
/// Origins are spaced evenly over `[0, image - kernel]` in each dimension
/// (with rounding), which reproduces exact tiling whenever
/// `strides * kernel == image` and minimizes overlap otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrideSchedule {
    pub positions: Vec<(usize, usize)>,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub image_h: usize,
    pub image_w: usize,
}

fn axis_origins(image: usize, kernel: usize, strides: usize, axis: &str) -> Result<Vec<usize>> {
    if kernel > image {
        return Err(Error::Config(format!(
            "kernel {axis} extent {kernel} exceeds image extent {image}"
        )));
    }
    if strides == 0 {
        return Err(Error::Config(format!(
            "stride count along {axis} must be at least 1"
        )));
    }
    if strides * kernel < image {
        return Err(Error::Config(format!(
            "{strides} stride(s) of a {kernel}-pixel kernel cannot cover {image} pixels along {axis}"
        )));
    }
    if strides == 1 {
        // Coverage check above already forces kernel == image here.
        return Ok(vec![0]);
    }
    let span = (image - kernel) as f64;
    let denom = (strides - 1) as f64;
    Ok((0..strides)
        .map(|i| (i as f64 * span / denom).round() as usize)
        .collect())
}

impl StrideSchedule {
    /// Build the schedule from stride counts, row-major over (row, column)
    /// origins. Fails if the kernel windows cannot cover the image.
    pub fn build(
        image_h: usize,
        image_w: usize,
        kernel_h: usize,
        kernel_w: usize,
        strides_h: usize,
        strides_v: usize,
    ) -> Result<Self> {
        let rows = axis_origins(image_h, kernel_h, strides_v, "the vertical dimension")?;
        let cols = axis_origins(image_w, kernel_w, strides_h, "the horizontal dimension")?;
        let mut positions = Vec::with_capacity(rows.len() * cols.len());
        for &r in &rows {
            for &c in &cols {
                positions.push((r, c));
            }
        }
        let schedule = StrideSchedule {
            positions,
            kernel_h,
            kernel_w,
            image_h,
            image_w,
        };
        // Rounding cannot open gaps when the stride preconditions hold, but
        // coverage is part of the contract, so verify it outright.
        if let Some((r, c)) = schedule.first_uncovered_pixel() {
            return Err(Error::Config(format!(
                "schedule leaves pixel ({r}, {c}) uncovered"
            )));
        }
        Ok(schedule)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Kernel origin active at a given time-step; steps cycle the schedule.
    pub fn active_origin(&self, step_index: usize) -> (usize, usize) {
        self.positions[step_index % self.positions.len()]
    }

    /// Flat pixel indices of the window at `position_index`, in kernel
    /// row-major order (index k maps to kernel cell k).
    pub fn window_pixels(&self, position_index: usize) -> Vec<usize> {
        let (r0, c0) = self.positions[position_index];
        let mut pixels = Vec::with_capacity(self.kernel_h * self.kernel_w);
        for r in r0..r0 + self.kernel_h {
            for c in c0..c0 + self.kernel_w {
                pixels.push(r * self.image_w + c);
            }
        }
        pixels
    }

    fn coverage_counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.image_h * self.image_w];
        for idx in 0..self.positions.len() {
            for p in self.window_pixels(idx) {
                counts[p] += 1;
            }
        }
        counts
    }

    fn first_uncovered_pixel(&self) -> Option<(usize, usize)> {
        self.coverage_counts()
            .iter()
            .position(|&c| c == 0)
            .map(|p| (p / self.image_w, p % self.image_w))
    }

    /// Total overlap area: sum over pixels of (coverage - 1). Zero means the
    /// windows tile the image exactly.
    pub fn overlap_area(&self) -> usize {
        self.coverage_counts()
            .iter()
            .map(|&c| (c.saturating_sub(1)) as usize)
            .sum()
    }
}

/// Spec'd entry point mirroring the paper's stride notation
/// (`strides_h` horizontal by `strides_v` vertical).
pub fn build_stride_schedule(
    image_h: usize,
    image_w: usize,
    kernel_h: usize,
    kernel_w: usize,
    strides_h: usize,
    strides_v: usize,
) -> Result<StrideSchedule> {
    StrideSchedule::build(image_h, image_w, kernel_h, kernel_w, strides_h, strides_v)
}

/// One shared k x k weight kernel per excitatory neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank {
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub w_max: f64,
    /// One flat kernel (row-major) per excitatory neuron.
    pub kernels: Vec<Vec<f64>>,
}

impl KernelBank {
    pub fn random<R: Rng + ?Sized>(
        num_neurons: usize,
        kernel_h: usize,
        kernel_w: usize,
        w_max: f64,
        rng: &mut R,
    ) -> Self {
        let kernels = (0..num_neurons)
            .map(|_| {
                (0..kernel_h * kernel_w)
                    .map(|_| initial_weight(rng, w_max))
                    .collect()
            })
            .collect();
        KernelBank {
            kernel_h,
            kernel_w,
            w_max,
            kernels,
        }
    }

    pub fn num_neurons(&self) -> usize {
        self.kernels.len()
    }

    pub fn kernel_len(&self) -> usize {
        self.kernel_h * self.kernel_w
    }
}

/// Full input-to-excitatory weight matrix for the baseline topology.
#[derive(Debug, Clone, PartialEq)]
pub struct FcWeights {
    pub num_pixels: usize,
    pub w_max: f64,
    /// One row of `num_pixels` weights per excitatory neuron.
    pub rows: Vec<Vec<f64>>,
}

impl FcWeights {
    pub fn random<R: Rng + ?Sized>(
        num_neurons: usize,
        num_pixels: usize,
        w_max: f64,
        rng: &mut R,
    ) -> Self {
        let rows = (0..num_neurons)
            .map(|_| (0..num_pixels).map(|_| initial_weight(rng, w_max)).collect())
            .collect();
        FcWeights {
            num_pixels,
            w_max,
            rows,
        }
    }

    pub fn num_neurons(&self) -> usize {
        self.rows.len()
    }
}

/// Lateral-inhibition strength. Wiring is fixed: each excitatory neuron
/// drives its own inhibitory partner, which inhibits every other
/// excitatory neuron.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InhibitionConfig {
    /// Inhibitory current magnitude (mV) delivered per inhibitory spike.
    pub w_inh: f64,
    /// Forward drive (mV) from an excitatory spike into its partner.
    pub exc_to_inh: f64,
}

impl InhibitionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.w_inh < 0.0 {
            return Err(Error::Config(format!(
                "w_inh must be non-negative, got {}",
                self.w_inh
            )));
        }
        if self.exc_to_inh < 0.0 {
            return Err(Error::Config(format!(
                "exc_to_inh must be non-negative, got {}",
                self.exc_to_inh
            )));
        }
        Ok(())
    }
}

/// Current into one post-neuron from the spikes inside its active window,
/// modulated by its kernel.
pub fn conv_forward_current(kernel: &[f64], spikes_in_window: &[bool], gain: f64) -> Result<f64> {
    if kernel.len() != spikes_in_window.len() {
        return Err(Error::Domain(format!(
            "kernel has {} weights but window has {} pixels",
            kernel.len(),
            spikes_in_window.len()
        )));
    }
    let sum: f64 = kernel
        .iter()
        .zip(spikes_in_window)
        .filter(|(_, &s)| s)
        .map(|(w, _)| w)
        .sum();
    Ok(gain * sum)
}

/// Current into one post-neuron from the full input vector (baseline).
pub fn fc_forward_current(weights_row: &[f64], spikes: &[bool], gain: f64) -> Result<f64> {
    conv_forward_current(weights_row, spikes, gain)
}

/// Inhibitory current onto each excitatory neuron: every inhibitory spike
/// suppresses all excitatory neurons except its own partner.
pub fn inhibitory_currents(inh_spikes: &[bool], cfg: &InhibitionConfig) -> Vec<f64> {
    let total = inh_spikes.iter().filter(|&&s| s).count();
    inh_spikes
        .iter()
        .map(|&own| {
            let others = total - usize::from(own);
            -cfg.w_inh * others as f64
        })
        .collect()
}
