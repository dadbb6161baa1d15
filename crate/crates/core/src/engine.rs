//! Training, labeling, classification, detection, and evaluation on top of
//! the simulation core.
//!
//! Training is strictly sequential (plasticity is order-dependent).
//! Labeling and evaluation are inference-only and fan out across images:
//! every image gets its own RNG stream derived from the seed and the image
//! index, so results are identical whether the batch runs sequentially or
//! on a rayon pool, and in either case bit-reproducible.

use crate::encoding::GrayImage;
use crate::error::{Error, Result};
use crate::network::{Network, PresentOutcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// RNG stream families for derived per-image generators.
const STREAM_LABELING: u64 = 1 << 56;
const STREAM_EVALUATION: u64 = 2 << 56;

/// Independent generator for image `index` within a stream family.
/// ChaCha streams are independent by construction, so batch order and
/// parallel scheduling cannot change any image's spike draws.
pub fn derived_rng(seed: u64, stream_family: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_family | (index & 0x00FF_FFFF_FFFF_FFFF));
    rng
}

/// Per-kernel weight statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

fn weight_stats(weights: &[f64]) -> WeightStats {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &w in weights {
        min = min.min(w);
        max = max.max(w);
        sum += w;
    }
    WeightStats {
        min,
        max,
        mean: sum / weights.len() as f64,
    }
}

/// Summary of one unsupervised training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Total excitatory spikes per presented image, in presentation order.
    pub per_image_spikes: Vec<u64>,
    /// Individual synaptic weight updates applied.
    pub weight_updates: u64,
    /// Final min/max/mean per kernel (or per FC row).
    pub kernel_stats: Vec<WeightStats>,
}

/// Present every image with learning enabled, in order, for `passes`
/// passes. Labels are never consulted.
pub fn train_unsupervised(
    network: &mut Network,
    images: &[GrayImage],
    passes: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TrainReport> {
    if images.is_empty() {
        return Err(Error::Config("training image list is empty".into()));
    }
    let mut per_image_spikes = Vec::with_capacity(images.len() * passes);
    let mut weight_updates = 0u64;
    for _ in 0..passes {
        for image in images {
            let outcome = network.present_image(image, true, rng)?;
            per_image_spikes.push(outcome.total_spikes());
            weight_updates += outcome.weight_updates;
        }
    }
    let kernel_stats = (0..network.num_excitatory())
        .map(|i| weight_stats(network.synapses.neuron_weights(i)))
        .collect();
    Ok(TrainReport {
        per_image_spikes,
        weight_updates,
        kernel_stats,
    })
}

/// Round-robin interleave images by class: one example of each class in
/// turn, preventing any class from monopolizing early plasticity.
pub fn interleave_by_class(images: &[GrayImage], labels: &[u8]) -> Vec<GrayImage> {
    let mut by_class: Vec<(u8, Vec<&GrayImage>)> = Vec::new();
    for (img, &label) in images.iter().zip(labels) {
        match by_class.iter_mut().find(|(c, _)| *c == label) {
            Some((_, bucket)) => bucket.push(img),
            None => by_class.push((label, vec![img])),
        }
    }
    by_class.sort_by_key(|(c, _)| *c);
    let mut out = Vec::with_capacity(images.len());
    let longest = by_class.iter().map(|(_, b)| b.len()).max().unwrap_or(0);
    for i in 0..longest {
        for (_, bucket) in &by_class {
            if let Some(img) = bucket.get(i) {
                out.push((*img).clone());
            }
        }
    }
    out
}

/// Per-neuron class tags derived from spike tallies over a labeled set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelAssignment {
    /// Argmax class per neuron; `None` when the neuron never spiked.
    pub tags: Vec<Option<u8>>,
    /// Spike tallies per neuron per class.
    pub tallies: Vec<Vec<u64>>,
    pub num_classes: usize,
}

impl LabelAssignment {
    /// Build tags from raw tallies: argmax per neuron, ties toward the
    /// lower class index, all-zero rows left unlabeled.
    pub fn from_tallies(tallies: Vec<Vec<u64>>, num_classes: usize) -> Self {
        let tags = tallies
            .iter()
            .map(|row| {
                let best = row.iter().enumerate().max_by(|a, b| {
                    a.1.cmp(b.1).then(b.0.cmp(&a.0)) // prefer lower index on ties
                });
                match best {
                    Some((class, &count)) if count > 0 => Some(class as u8),
                    _ => None,
                }
            })
            .collect();
        LabelAssignment {
            tags,
            tallies,
            num_classes,
        }
    }

    pub fn labeled_neurons(&self) -> usize {
        self.tags.iter().filter(|t| t.is_some()).count()
    }
}

/// Present each labeled image with learning frozen and tag every neuron
/// with the class it spiked for most.
pub fn assign_labels(
    network: &Network,
    images: &[GrayImage],
    labels: &[u8],
) -> Result<LabelAssignment> {
    if images.len() != labels.len() {
        return Err(Error::Config(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    let num_classes = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let n = network.num_excitatory();
    let seed = network.config.seed;

    let counts = infer_batch(network, images, seed, STREAM_LABELING, 1.0)?;

    let mut tallies = vec![vec![0u64; num_classes]; n];
    for (outcome, &label) in counts.iter().zip(labels) {
        for (neuron, &c) in outcome.spike_counts.iter().enumerate() {
            tallies[neuron][label as usize] += c as u64;
        }
    }
    Ok(LabelAssignment::from_tallies(tallies, num_classes))
}

/// Inference over a batch of images with per-image derived RNG streams.
/// Runs on the rayon pool when the `parallel` feature is enabled.
fn infer_batch(
    network: &Network,
    images: &[GrayImage],
    seed: u64,
    stream_family: u64,
    boost: f64,
) -> Result<Vec<PresentOutcome>> {
    #[cfg(feature = "parallel")]
    {
        const CHUNK: usize = 32;
        let chunks: Vec<Result<Vec<PresentOutcome>>> = images
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(chunk_idx, chunk)| {
                let mut worker = network.clone();
                chunk
                    .iter()
                    .enumerate()
                    .map(|(offset, image)| {
                        let index = (chunk_idx * CHUNK + offset) as u64;
                        let mut rng = derived_rng(seed, stream_family, index);
                        worker.present_with_boost(image, false, boost, &mut rng)
                    })
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(images.len());
        for chunk in chunks {
            out.extend(chunk?);
        }
        Ok(out)
    }
    #[cfg(not(feature = "parallel"))]
    {
        infer_batch_sequential(network, images, seed, stream_family, boost)
    }
}

/// Sequential reference path for the batch inference fan-out; always
/// available so the two execution modes can be compared directly.
pub fn infer_batch_sequential(
    network: &Network,
    images: &[GrayImage],
    seed: u64,
    stream_family: u64,
    boost: f64,
) -> Result<Vec<PresentOutcome>> {
    let mut worker = network.clone();
    images
        .iter()
        .enumerate()
        .map(|(index, image)| {
            let mut rng = derived_rng(seed, stream_family, index as u64);
            worker.present_with_boost(image, false, boost, &mut rng)
        })
        .collect()
}

/// Classification outcome for one image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prediction {
    Class(u8),
    /// Every class group stayed silent even after boosted retries.
    NoPrediction,
}

/// Class means over the labeled neuron groups; `None` for classes with no
/// tagged neurons.
fn class_means(assignment: &LabelAssignment, counts: &[u32]) -> Vec<Option<f64>> {
    let mut sums = vec![0u64; assignment.num_classes];
    let mut sizes = vec![0u64; assignment.num_classes];
    for (tag, &count) in assignment.tags.iter().zip(counts) {
        if let Some(class) = tag {
            sums[*class as usize] += count as u64;
            sizes[*class as usize] += 1;
        }
    }
    sums.iter()
        .zip(&sizes)
        .map(|(&s, &n)| if n > 0 { Some(s as f64 / n as f64) } else { None })
        .collect()
}

fn predict_from_counts(assignment: &LabelAssignment, counts: &[u32]) -> Prediction {
    let means = class_means(assignment, counts);
    let mut best: Option<(usize, f64)> = None;
    for (class, mean) in means.iter().enumerate() {
        if let Some(m) = mean {
            let better = match best {
                None => true,
                Some((_, cur)) => *m > cur, // ties keep the lower class index
            };
            if better {
                best = Some((class, *m));
            }
        }
    }
    match best {
        Some((class, mean)) if mean > 0.0 => Prediction::Class(class as u8),
        _ => Prediction::NoPrediction,
    }
}

/// Present with the silent-image retry policy, then predict the class with
/// the highest average spike count over its tagged neurons.
fn classify_core(
    network: &mut Network,
    assignment: &LabelAssignment,
    image: &GrayImage,
    rng: &mut ChaCha8Rng,
) -> Result<Prediction> {
    let retries = network.config.training.max_silent_retries;
    let boost_factor = network.config.encoder.boost_factor;
    let mut boost = 1.0;
    let mut outcome = network.present_with_boost(image, false, boost, rng)?;
    for _ in 0..retries {
        if outcome.total_spikes() > 0 {
            break;
        }
        boost *= boost_factor;
        outcome = network.present_with_boost(image, false, boost, rng)?;
    }
    Ok(predict_from_counts(assignment, &outcome.spike_counts))
}

/// Classify one image against a shared network reference.
pub fn classify(
    network: &Network,
    assignment: &LabelAssignment,
    image: &GrayImage,
    rng: &mut ChaCha8Rng,
) -> Result<Prediction> {
    if assignment.labeled_neurons() == 0 {
        return Err(Error::Config(
            "label assignment has no labeled neurons".into(),
        ));
    }
    let mut worker = network.clone();
    classify_core(&mut worker, assignment, image, rng)
}

/// Binary detection: true iff at least `quorum_fraction` of the excitatory
/// neurons fire at least once (boundary inclusive).
pub fn detect_binary(
    network: &Network,
    image: &GrayImage,
    quorum_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Result<bool> {
    if !(quorum_fraction > 0.0 && quorum_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "quorum_fraction must lie in (0, 1], got {quorum_fraction}"
        )));
    }
    let outcome = network.infer(image, 1.0, rng)?;
    Ok(quorum_met(&outcome.spike_counts, quorum_fraction))
}

fn quorum_met(counts: &[u32], quorum_fraction: f64) -> bool {
    let active = counts.iter().filter(|&&c| c >= 1).count();
    active as f64 >= quorum_fraction * counts.len() as f64
}

/// Rate-threshold detection variant: true iff the mean spike count across
/// all excitatory neurons reaches `min_mean_spikes`.
pub fn detect_rate(
    network: &Network,
    image: &GrayImage,
    min_mean_spikes: f64,
    rng: &mut ChaCha8Rng,
) -> Result<bool> {
    let outcome = network.infer(image, 1.0, rng)?;
    let mean = outcome.total_spikes() as f64 / network.num_excitatory() as f64;
    Ok(mean >= min_mean_spikes)
}

/// Confusion matrix: rows are actual classes, columns are predicted
/// classes plus a trailing NO_PREDICTION column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Confusion {
    pub num_classes: usize,
    /// `matrix[actual][predicted]`; column `num_classes` is NO_PREDICTION.
    pub matrix: Vec<Vec<u64>>,
}

impl Confusion {
    fn new(num_classes: usize) -> Self {
        Confusion {
            num_classes,
            matrix: vec![vec![0u64; num_classes + 1]; num_classes],
        }
    }

    fn record(&mut self, actual: u8, prediction: Prediction) {
        let col = match prediction {
            Prediction::Class(c) => c as usize,
            Prediction::NoPrediction => self.num_classes,
        };
        self.matrix[actual as usize][col] += 1;
    }

    pub fn row_sum(&self, actual: usize) -> u64 {
        self.matrix[actual].iter().sum()
    }
}

/// Evaluation summary over a labeled test set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    pub confusion: Confusion,
    /// Per-image predictions in test-set order.
    pub predictions: Vec<Prediction>,
}

fn assemble_report(
    labels: &[u8],
    predictions: Vec<Prediction>,
    num_classes: usize,
) -> EvalReport {
    let mut confusion = Confusion::new(num_classes);
    let mut correct = 0usize;
    for (&actual, &pred) in labels.iter().zip(&predictions) {
        confusion.record(actual, pred);
        if pred == Prediction::Class(actual) {
            correct += 1;
        }
    }
    EvalReport {
        correct,
        total: labels.len(),
        accuracy: correct as f64 / labels.len() as f64,
        confusion,
        predictions,
    }
}

fn eval_num_classes(assignment: &LabelAssignment, labels: &[u8]) -> usize {
    let max_label = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    assignment.num_classes.max(max_label)
}

/// Classify every test image and reduce to accuracy plus a confusion
/// matrix. Fans out on the rayon pool when the `parallel` feature is
/// enabled; results are identical to the sequential path.
pub fn evaluate(
    network: &Network,
    assignment: &LabelAssignment,
    images: &[GrayImage],
    labels: &[u8],
) -> Result<EvalReport> {
    check_eval_inputs(assignment, images, labels)?;
    let seed = network.config.seed;
    let num_classes = eval_num_classes(assignment, labels);

    #[cfg(feature = "parallel")]
    let predictions: Vec<Prediction> = {
        const CHUNK: usize = 32;
        let chunks: Vec<Result<Vec<Prediction>>> = images
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(chunk_idx, chunk)| {
                let mut worker = network.clone();
                chunk
                    .iter()
                    .enumerate()
                    .map(|(offset, image)| {
                        let index = (chunk_idx * CHUNK + offset) as u64;
                        let mut rng = derived_rng(seed, STREAM_EVALUATION, index);
                        classify_core(&mut worker, assignment, image, &mut rng)
                    })
                    .collect()
            })
            .collect();
        let mut all = Vec::with_capacity(images.len());
        for chunk in chunks {
            all.extend(chunk?);
        }
        all
    };
    #[cfg(not(feature = "parallel"))]
    let predictions = sequential_predictions(network, assignment, images, seed)?;

    Ok(assemble_report(labels, predictions, num_classes))
}

/// Sequential reference evaluation; always available for comparison
/// against the parallel path.
pub fn evaluate_sequential(
    network: &Network,
    assignment: &LabelAssignment,
    images: &[GrayImage],
    labels: &[u8],
) -> Result<EvalReport> {
    check_eval_inputs(assignment, images, labels)?;
    let seed = network.config.seed;
    let num_classes = eval_num_classes(assignment, labels);
    let predictions = sequential_predictions(network, assignment, images, seed)?;
    Ok(assemble_report(labels, predictions, num_classes))
}

fn sequential_predictions(
    network: &Network,
    assignment: &LabelAssignment,
    images: &[GrayImage],
    seed: u64,
) -> Result<Vec<Prediction>> {
    let mut worker = network.clone();
    images
        .iter()
        .enumerate()
        .map(|(index, image)| {
            let mut rng = derived_rng(seed, STREAM_EVALUATION, index as u64);
            classify_core(&mut worker, assignment, image, &mut rng)
        })
        .collect()
}

fn check_eval_inputs(
    assignment: &LabelAssignment,
    images: &[GrayImage],
    labels: &[u8],
) -> Result<()> {
    if images.is_empty() {
        return Err(Error::Config("test set is empty".into()));
    }
    if images.len() != labels.len() {
        return Err(Error::Config(format!(
            "{} test images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    if assignment.labeled_neurons() == 0 {
        return Err(Error::Config(
            "label assignment has no labeled neurons".into(),
        ));
    }
    Ok(())
}

/// Connectivity-saving metric: full connectivity per neuron over kernel
/// size.
pub fn sparsity_ratio(num_pixels: usize, kernel_h: usize, kernel_w: usize) -> f64 {
    num_pixels as f64 / (kernel_h * kernel_w) as f64
}

/// Size the rayon pool (no-op without the `parallel` feature). Safe to call
/// once before any parallel work; later calls are ignored.
#[cfg(feature = "parallel")]
pub fn set_threads(n: usize) {
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
}

#[cfg(not(feature = "parallel"))]
pub fn set_threads(_n: usize) {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NetworkConfig;

    fn fixture_assignment() -> LabelAssignment {
        // 10 neurons over 4 classes.
        let tallies = vec![
            vec![50, 0, 0, 0],
            vec![40, 1, 0, 0],
            vec![0, 30, 0, 0],
            vec![0, 28, 2, 0],
            vec![0, 0, 60, 0],
            vec![0, 0, 55, 5],
            vec![0, 0, 0, 45],
            vec![0, 0, 0, 52],
            vec![10, 10, 0, 0], // tie -> class 0
            vec![0, 0, 0, 0],   // unlabeled
        ];
        LabelAssignment::from_tallies(tallies, 4)
    }

    #[test]
    fn tags_are_argmax_with_tie_toward_lower_class() {
        let a = fixture_assignment();
        assert_eq!(a.tags[0], Some(0));
        assert_eq!(a.tags[2], Some(1));
        assert_eq!(a.tags[8], Some(0), "tie must break toward lower class");
        assert_eq!(a.tags[9], None, "all-zero tallies stay unlabeled");
        assert_eq!(a.labeled_neurons(), 9);
    }

    #[test]
    fn prediction_uses_group_means_not_sums() {
        // Class A: two neurons with counts 4 and 0 (mean 2).
        // Class B: one neuron with count 3 (mean 3). B must win.
        let tallies = vec![vec![1, 0], vec![1, 0], vec![0, 1]];
        let a = LabelAssignment::from_tallies(tallies, 2);
        let pred = predict_from_counts(&a, &[4, 0, 3]);
        assert_eq!(pred, Prediction::Class(1));
    }

    #[test]
    fn prediction_simple_majority() {
        let tallies = vec![vec![1, 0], vec![0, 1]];
        let a = LabelAssignment::from_tallies(tallies, 2);
        assert_eq!(predict_from_counts(&a, &[5, 2]), Prediction::Class(0));
    }

    #[test]
    fn prediction_matches_brute_force_oracle_on_fixture() {
        let a = fixture_assignment();
        // Exhaustive oracle over a deterministic set of count vectors.
        let mut counts = vec![0u32; 10];
        for trial in 0..200u32 {
            for (i, c) in counts.iter_mut().enumerate() {
                *c = (trial.wrapping_mul(31).wrapping_add(i as u32 * 17)) % 7;
            }
            // Oracle: argmax of class means over labeled neurons.
            let mut best: Option<(usize, f64)> = None;
            for class in 0..4usize {
                let group: Vec<f64> = a
                    .tags
                    .iter()
                    .zip(&counts)
                    .filter(|(t, _)| **t == Some(class as u8))
                    .map(|(_, &c)| c as f64)
                    .collect();
                if group.is_empty() {
                    continue;
                }
                let mean = group.iter().sum::<f64>() / group.len() as f64;
                let better = match best {
                    None => true,
                    Some((_, b)) => mean > b,
                };
                if better {
                    best = Some((class, mean));
                }
            }
            let expected = match best {
                Some((class, mean)) if mean > 0.0 => Prediction::Class(class as u8),
                _ => Prediction::NoPrediction,
            };
            assert_eq!(predict_from_counts(&a, &counts), expected, "trial {trial}");
        }
    }

    #[test]
    fn silent_counts_give_no_prediction() {
        let a = fixture_assignment();
        assert_eq!(predict_from_counts(&a, &[0; 10]), Prediction::NoPrediction);
    }

    #[test]
    fn quorum_boundary_is_inclusive() {
        assert!(quorum_met(&[1, 1, 1, 1, 1, 0, 0, 0, 0, 0], 0.5));
        assert!(!quorum_met(&[1, 1, 1, 1, 0, 0, 0, 0, 0, 0], 0.5));
        assert!(!quorum_met(&[0; 10], 0.5));
    }

    #[test]
    fn confusion_rows_sum_to_class_counts() {
        let labels = vec![0u8, 0, 1, 1, 1, 2];
        let predictions = vec![
            Prediction::Class(0),
            Prediction::Class(1),
            Prediction::Class(1),
            Prediction::NoPrediction,
            Prediction::Class(1),
            Prediction::Class(2),
        ];
        let report = assemble_report(&labels, predictions, 3);
        assert_eq!(report.confusion.row_sum(0), 2);
        assert_eq!(report.confusion.row_sum(1), 3);
        assert_eq!(report.confusion.row_sum(2), 1);
        assert_eq!(report.correct, 4);
        assert!((report.accuracy - 4.0 / 6.0).abs() < 1e-12);
        // NO_PREDICTION lands in the trailing column and counts as wrong.
        assert_eq!(report.confusion.matrix[1][3], 1);
    }

    #[test]
    fn forced_correct_predictions_give_unit_accuracy() {
        let labels = vec![0u8, 1, 2, 3];
        let predictions = labels.iter().map(|&l| Prediction::Class(l)).collect();
        let report = assemble_report(&labels, predictions, 4);
        assert_eq!(report.accuracy, 1.0);
        let labels = vec![0u8, 0, 0, 1];
        let predictions = vec![
            Prediction::Class(0),
            Prediction::Class(0),
            Prediction::Class(1),
            Prediction::Class(1),
        ];
        let report = assemble_report(&labels, predictions, 2);
        assert_eq!(report.accuracy, 0.75);
    }

    #[test]
    fn sparsity_examples() {
        assert_eq!(sparsity_ratio(784, 14, 14), 4.0);
        assert_eq!(sparsity_ratio(784, 28, 28), 1.0);
        assert_eq!(sparsity_ratio(1024, 16, 16), 4.0);
    }

    #[test]
    fn zero_passes_leave_weights_unchanged() {
        use rand::SeedableRng;
        let cfg = NetworkConfig::convolutional(3, 4, 16, 16, 8, 2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Network::build(cfg, &mut rng).unwrap();
        let before = net.synapses.clone();
        let images = vec![GrayImage::zeros(16, 16)];
        let report = train_unsupervised(&mut net, &images, 0, &mut rng).unwrap();
        assert_eq!(net.synapses, before);
        assert_eq!(report.weight_updates, 0);
        assert!(report.per_image_spikes.is_empty());
    }

    #[test]
    fn empty_training_set_is_a_configuration_error() {
        use rand::SeedableRng;
        let cfg = NetworkConfig::convolutional(3, 4, 16, 16, 8, 2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Network::build(cfg, &mut rng).unwrap();
        assert!(train_unsupervised(&mut net, &[], 1, &mut rng).is_err());
    }

    #[test]
    fn interleave_orders_classes_round_robin() {
        let mk = |v: u8| GrayImage::new(1, 1, vec![v]).unwrap();
        let images = vec![mk(10), mk(11), mk(20), mk(21), mk(30)];
        let labels = vec![1u8, 1, 2, 2, 0];
        let out = interleave_by_class(&images, &labels);
        let first: Vec<u8> = out.iter().map(|i| i.pixels()[0]).collect();
        assert_eq!(first, vec![30, 10, 20, 11, 21]);
    }

    #[test]
    fn training_ignores_label_metadata() {
        use rand::SeedableRng;
        // Same images, same order, different labels: identical weights.
        let mut images = Vec::new();
        for i in 0..6u8 {
            let mut px = vec![0u8; 256];
            for (j, p) in px.iter_mut().enumerate() {
                if (j + i as usize * 13) % 11 < 3 {
                    *p = 200;
                }
            }
            images.push(GrayImage::new(16, 16, px).unwrap());
        }
        let mut cfg = NetworkConfig::convolutional(8, 6, 16, 16, 8, 2, 2);
        cfg.encoder.presentation_ms = 60.0;
        cfg.encoder.rest_ms = 20.0;

        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            let mut net = Network::build(cfg.clone(), &mut rng).unwrap();
            train_unsupervised(&mut net, &images, 1, &mut rng).unwrap();
            net.synapses
        };
        // Labels are simply never passed in; two runs differing only in
        // (unused) label metadata are the same run.
        assert_eq!(run(), run());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_and_sequential_evaluation_agree() {
        use rand::SeedableRng;
        let mut cfg = NetworkConfig::convolutional(15, 6, 16, 16, 8, 2, 2);
        cfg.encoder.presentation_ms = 150.0;
        cfg.encoder.rest_ms = 30.0;
        cfg.network.input_gain = 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let mut net = Network::build(cfg, &mut rng).unwrap();

        let mut images = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40usize {
            let mut px = vec![0u8; 256];
            for (j, p) in px.iter_mut().enumerate() {
                if (j * 7 + i * 3) % 13 < 5 {
                    *p = 255;
                }
            }
            images.push(GrayImage::new(16, 16, px).unwrap());
            labels.push((i % 3) as u8);
        }
        train_unsupervised(&mut net, &images[..6], 1, &mut rng).unwrap();
        let assignment = assign_labels(&net, &images[..6], &labels[..6]).unwrap();

        let par = evaluate(&net, &assignment, &images, &labels).unwrap();
        let seq = evaluate_sequential(&net, &assignment, &images, &labels).unwrap();
        assert_eq!(par.predictions, seq.predictions);
        assert_eq!(par.confusion, seq.confusion);
        assert_eq!(par.accuracy, seq.accuracy);
    }
}
