//! End-to-end experiment protocols with their default configurations:
//! MNIST subset and full-set runs, the stride and kernel sweeps, the
//! fully-connected baseline comparison, synthetic-fixture face detection,
//! rotation-invariance on Gabor-preprocessed shapes, and out-of-set
//! generalization.

use crate::config::NetworkConfig;
use crate::encoding::{gabor_downsample, rotate_about_center, yuv_luma_threshold, GaborBank, GrayImage};
use crate::engine::{
    assign_labels, detect_binary, evaluate, interleave_by_class, train_unsupervised, EvalReport,
    LabelAssignment, Prediction, TrainReport,
};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::io::idx::{load_idx, Dataset};
use crate::network::Network;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    MnistSubset1679,
    MnistSubset0238,
    MnistStrideSweep,
    MnistKernelSweep,
    MnistFull400,
    MnistFcBaseline,
    Face,
    CaltechRotation,
    OutOfSet67To91,
    OutOfSet28To03,
}

pub const ALL_EXPERIMENTS: [ExperimentId; 10] = [
    ExperimentId::MnistSubset1679,
    ExperimentId::MnistSubset0238,
    ExperimentId::MnistStrideSweep,
    ExperimentId::MnistKernelSweep,
    ExperimentId::MnistFull400,
    ExperimentId::MnistFcBaseline,
    ExperimentId::Face,
    ExperimentId::CaltechRotation,
    ExperimentId::OutOfSet67To91,
    ExperimentId::OutOfSet28To03,
];

impl ExperimentId {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentId::MnistSubset1679 => "mnist-subset-1679",
            ExperimentId::MnistSubset0238 => "mnist-subset-0238",
            ExperimentId::MnistStrideSweep => "mnist-stride-sweep",
            ExperimentId::MnistKernelSweep => "mnist-kernel-sweep",
            ExperimentId::MnistFull400 => "mnist-full-400",
            ExperimentId::MnistFcBaseline => "mnist-fc-baseline",
            ExperimentId::Face => "face",
            ExperimentId::CaltechRotation => "caltech-rotation",
            ExperimentId::OutOfSet67To91 => "out-of-set-67-to-91",
            ExperimentId::OutOfSet28To03 => "out-of-set-28-to-03",
        }
    }
}

impl std::str::FromStr for ExperimentId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ALL_EXPERIMENTS
            .iter()
            .find(|e| e.name() == s)
            .copied()
            .ok_or_else(|| {
                let names: Vec<&str> = ALL_EXPERIMENTS.iter().map(|e| e.name()).collect();
                Error::Config(format!(
                    "unknown experiment {s:?}; registered: {}",
                    names.join(", ")
                ))
            })
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One named result row (metric name, value).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub name: String,
    pub value: f64,
}

/// Everything an experiment produces in memory; the CLI layer turns this
/// into files.
pub struct ExperimentOutcome {
    pub id: ExperimentId,
    pub config: NetworkConfig,
    pub metrics: Vec<MetricRow>,
    pub network: Option<Network>,
    pub assignment: Option<LabelAssignment>,
    pub train_report: Option<TrainReport>,
    pub eval_report: Option<EvalReport>,
}

impl ExperimentOutcome {
    fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push(MetricRow {
            name: name.into(),
            value,
        });
    }
}

/// Default run policy for the MNIST experiments.
pub struct MnistPaths {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
}

impl MnistPaths {
    /// Standard file names under a dataset directory.
    pub fn in_dir(dir: &Path) -> Self {
        MnistPaths {
            train_images: dir.join("train-images-idx3-ubyte"),
            train_labels: dir.join("train-labels-idx1-ubyte"),
            test_images: dir.join("t10k-images-idx3-ubyte"),
            test_labels: dir.join("t10k-labels-idx1-ubyte"),
        }
    }

    pub fn exist(&self) -> bool {
        self.train_images.exists()
            && self.train_labels.exists()
            && self.test_images.exists()
            && self.test_labels.exists()
    }

    fn load_train(&self, filter: &[u8], cap: usize) -> Result<Dataset> {
        let set: HashSet<u8> = filter.iter().copied().collect();
        load_idx(
            &self.train_images,
            &self.train_labels,
            Some(&set),
            Some(cap),
        )
    }

    fn load_test(&self, filter: Option<&[u8]>, cap: Option<usize>) -> Result<Dataset> {
        let set: Option<HashSet<u8>> = filter.map(|f| f.iter().copied().collect());
        load_idx(&self.test_images, &self.test_labels, set.as_ref(), cap)
    }
}

/// Build, train, label, and evaluate one configuration on MNIST data.
/// Training images are interleaved round-robin by class when the config
/// asks for it; labeling reuses the training images with learning frozen.
pub fn run_mnist_pipeline(
    config: NetworkConfig,
    paths: &MnistPaths,
    train_filter: &[u8],
    per_class_cap: usize,
    test_filter: Option<&[u8]>,
    test_cap: Option<usize>,
) -> Result<(Network, LabelAssignment, TrainReport, EvalReport)> {
    let train = paths.load_train(train_filter, per_class_cap)?;
    let test = paths.load_test(test_filter, test_cap)?;
    run_pipeline_on(config, &train, &test)
}

/// The same pipeline on in-memory datasets.
pub fn run_pipeline_on(
    config: NetworkConfig,
    train: &Dataset,
    test: &Dataset,
) -> Result<(Network, LabelAssignment, TrainReport, EvalReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let passes = config.training.passes;
    let ordered = if config.training.interleave_classes {
        interleave_by_class(&train.images, train.labels()?)
    } else {
        train.images.clone()
    };
    let mut network = Network::build(config, &mut rng)?;
    let report = train_unsupervised(&mut network, &ordered, passes, &mut rng)?;
    let assignment = assign_labels(&network, &train.images, train.labels()?)?;
    let eval = evaluate(&network, &assignment, &test.images, test.labels()?)?;
    Ok((network, assignment, report, eval))
}

fn outcome(id: ExperimentId, config: NetworkConfig) -> ExperimentOutcome {
    ExperimentOutcome {
        id,
        config,
        metrics: Vec::new(),
        network: None,
        assignment: None,
        train_report: None,
        eval_report: None,
    }
}

/// Paper-default configuration for the optimized convolutional topology
/// on MNIST: 50 neurons, 14x14 kernel, 4 strides (2h, 2v).
pub fn mnist_subset_config(seed: u64) -> NetworkConfig {
    NetworkConfig::convolutional(seed, 50, 28, 28, 14, 2, 2)
}

fn run_mnist_subset(
    id: ExperimentId,
    digits: [u8; 4],
    seed: u64,
    paths: &MnistPaths,
    config_override: Option<NetworkConfig>,
) -> Result<ExperimentOutcome> {
    let config = config_override.unwrap_or_else(|| mnist_subset_config(seed));
    let (network, assignment, train_report, eval) =
        run_mnist_pipeline(config.clone(), paths, &digits, 40, Some(&digits), None)?;
    let mut out = outcome(id, config);
    out.metric("accuracy", eval.accuracy);
    out.metric("test_images", eval.total as f64);
    out.metric(
        "labeled_neurons",
        assignment.labeled_neurons() as f64,
    );
    out.network = Some(network);
    out.assignment = Some(assignment);
    out.train_report = Some(train_report);
    out.eval_report = Some(eval);
    Ok(out)
}

pub fn run_subset_1679(seed: u64, paths: &MnistPaths) -> Result<ExperimentOutcome> {
    run_mnist_subset(
        ExperimentId::MnistSubset1679,
        [1, 6, 7, 9],
        seed,
        paths,
        None,
    )
}

pub fn run_subset_0238(seed: u64, paths: &MnistPaths) -> Result<ExperimentOutcome> {
    run_mnist_subset(
        ExperimentId::MnistSubset0238,
        [0, 2, 3, 8],
        seed,
        paths,
        None,
    )
}

/// Stride sweep on the {1,6,7,9} subset: 14x14 kernel at 4 (2h,2v),
/// 6 (3h,2v), and 9 (3h,3v) strides.
pub fn run_stride_sweep(
    seeds: &[u64],
    paths: &MnistPaths,
) -> Result<ExperimentOutcome> {
    let digits = [1u8, 6, 7, 9];
    let mut out = outcome(ExperimentId::MnistStrideSweep, mnist_subset_config(seeds[0]));
    for &(sh, sv) in &[(2usize, 2usize), (3, 2), (3, 3)] {
        let strides = sh * sv;
        let mut mean = 0.0;
        for &seed in seeds {
            let config = NetworkConfig::convolutional(seed, 50, 28, 28, 14, sh, sv);
            let (_, _, _, eval) =
                run_mnist_pipeline(config, paths, &digits, 40, Some(&digits), None)?;
            out.metric(format!("accuracy_strides_{strides}_seed_{seed}"), eval.accuracy);
            mean += eval.accuracy;
        }
        out.metric(
            format!("accuracy_strides_{strides}_mean"),
            mean / seeds.len() as f64,
        );
    }
    Ok(out)
}

/// Kernel sweep on the {1,6,7,9} subset: 18x18, 16x16, 14x14, each at its
/// minimal covering stride count of 4 (2h, 2v).
pub fn run_kernel_sweep(seed: u64, paths: &MnistPaths) -> Result<ExperimentOutcome> {
    let digits = [1u8, 6, 7, 9];
    let mut out = outcome(ExperimentId::MnistKernelSweep, mnist_subset_config(seed));
    for &k in &[18usize, 16, 14] {
        let config = NetworkConfig::convolutional(seed, 50, 28, 28, k, 2, 2);
        let (_, _, _, eval) =
            run_mnist_pipeline(config, paths, &digits, 40, Some(&digits), None)?;
        out.metric(format!("accuracy_kernel_{k}"), eval.accuracy);
    }
    Ok(out)
}

/// Full MNIST: 400 neurons, 80 examples per class, evaluated on the whole
/// 10000-image test set.
pub fn run_full_400(seed: u64, paths: &MnistPaths) -> Result<ExperimentOutcome> {
    let digits: Vec<u8> = (0..10).collect();
    let config = NetworkConfig::convolutional(seed, 400, 28, 28, 14, 2, 2);
    let (network, assignment, train_report, eval) =
        run_mnist_pipeline(config.clone(), paths, &digits, 80, None, None)?;
    let mut out = outcome(ExperimentId::MnistFull400, config);
    out.metric("accuracy", eval.accuracy);
    out.metric("test_images", eval.total as f64);
    out.network = Some(network);
    out.assignment = Some(assignment);
    out.train_report = Some(train_report);
    out.eval_report = Some(eval);
    Ok(out)
}

/// Fully-connected baseline of equivalent size on both training subsets.
pub fn run_fc_baseline(seed: u64, paths: &MnistPaths) -> Result<ExperimentOutcome> {
    let config = NetworkConfig::fully_connected(seed, 50, 28, 28);
    let mut out = outcome(ExperimentId::MnistFcBaseline, config.clone());
    for digits in [[1u8, 6, 7, 9], [0u8, 2, 3, 8]] {
        let (_, _, _, eval) = run_mnist_pipeline(
            config.clone(),
            paths,
            &digits,
            40,
            Some(&digits),
            None,
        )?;
        let tag: String = digits.iter().map(|d| d.to_string()).collect();
        out.metric(format!("fc_accuracy_{tag}"), eval.accuracy);
    }
    Ok(out)
}

/// Face-detection configuration: 10 neurons, 16x16 kernel, 4 strides over
/// 32x32 luma-thresholded inputs.
pub fn face_config(seed: u64) -> NetworkConfig {
    NetworkConfig::convolutional(seed, 10, 32, 32, 16, 2, 2)
}

/// Face detection on the synthetic fixture set: train on faces only,
/// detect with the 50% quorum rule.
pub fn run_face(seed: u64) -> Result<ExperimentOutcome> {
    let config = face_config(seed);
    let threshold = 120u8;
    let mut fixture_rng = ChaCha8Rng::seed_from_u64(seed ^ 0xFACE);
    let fixture = fixtures::face_fixture(&mut fixture_rng, 32, 10, 100);

    let preprocess = |yuv: &[u8]| yuv_luma_threshold(yuv, 32, 32, threshold);
    let train: Vec<GrayImage> = fixture
        .train_yuv
        .iter()
        .map(|y| preprocess(y))
        .collect::<Result<_>>()?;
    let test: Vec<GrayImage> = fixture
        .test_yuv
        .iter()
        .map(|y| preprocess(y))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut network = Network::build(config.clone(), &mut rng)?;
    let train_report = train_unsupervised(&mut network, &train, config.training.passes, &mut rng)?;

    let mut correct = 0usize;
    for (index, (image, &label)) in test.iter().zip(&fixture.test_labels).enumerate() {
        let mut image_rng = crate::engine::derived_rng(config.seed, 2 << 56, index as u64);
        let detected = detect_binary(&network, image, 0.5, &mut image_rng)?;
        if detected == (label == 1) {
            correct += 1;
        }
    }
    let accuracy = correct as f64 / test.len() as f64;

    let mut out = outcome(ExperimentId::Face, config);
    out.metric("accuracy", accuracy);
    out.metric("test_images", test.len() as f64);
    out.metric("sparsity_ratio", crate::engine::sparsity_ratio(1024, 16, 16));
    out.network = Some(network);
    out.train_report = Some(train_report);
    Ok(out)
}

/// Rotation configuration: 10 neurons, 16x16 kernel, 6 strides (3h, 2v)
/// over 32x32 Gabor-preprocessed inputs.
pub fn rotation_config(seed: u64) -> NetworkConfig {
    NetworkConfig::convolutional(seed, 10, 32, 32, 16, 3, 2)
}

/// Rotation invariance on Gabor-preprocessed shape fixtures: train on 3
/// upright shapes, test on their rotated copies.
pub fn run_caltech_rotation(seed: u64) -> Result<ExperimentOutcome> {
    let config = rotation_config(seed);
    let bank = GaborBank::default();
    let shapes = fixtures::shape_images(64);
    let train: Vec<GrayImage> = shapes
        .iter()
        .map(|rgb| gabor_downsample(rgb, &bank, 32, 32))
        .collect::<Result<_>>()?;
    let labels: Vec<u8> = (0..train.len() as u8).collect();

    let train_ds = Dataset {
        images: train.clone(),
        labels: Some(labels.clone()),
    };

    let mut rotated90 = Vec::new();
    let mut rotated45 = Vec::new();
    for img in &train {
        rotated90.push(rotate_about_center(img, 90.0));
        rotated45.push(rotate_about_center(img, 45.0));
    }
    let test_ds = Dataset {
        images: rotated90.iter().chain(&rotated45).cloned().collect(),
        labels: Some(labels.iter().chain(&labels).copied().collect()),
    };

    let (network, assignment, train_report, eval) =
        run_pipeline_on(config.clone(), &train_ds, &test_ds)?;

    let mut correct90 = 0usize;
    for (i, pred) in eval.predictions.iter().take(3).enumerate() {
        if *pred == Prediction::Class(labels[i]) {
            correct90 += 1;
        }
    }
    let mut out = outcome(ExperimentId::CaltechRotation, config);
    out.metric("accuracy_all_rotations", eval.accuracy);
    out.metric("correct_90deg", correct90 as f64);
    out.metric("total_90deg", 3.0);
    out.network = Some(network);
    out.assignment = Some(assignment);
    out.train_report = Some(train_report);
    out.eval_report = Some(eval);
    Ok(out)
}

/// Out-of-set result bundle: mapped-label accuracy plus the neuron
/// association counts behind it.
pub struct OutOfSetOutcome {
    pub outcome: ExperimentOutcome,
    /// Per held-out class: (held_out_class, trained_class, majority_count,
    /// class_total).
    pub associations: Vec<(u8, u8, usize, usize)>,
}

/// Train on two digits, test on two never-seen digits with labels mapped
/// through the feature association (trained -> held-out).
pub fn run_out_of_set(
    id: ExperimentId,
    trained: [u8; 2],
    held_out: [u8; 2],
    seed: u64,
    paths: &MnistPaths,
) -> Result<OutOfSetOutcome> {
    let config = NetworkConfig::convolutional(seed, 10, 28, 28, 14, 2, 2);
    let train = paths.load_train(&trained, 10)?;
    let test = paths.load_test(Some(&held_out), Some(1000))?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let ordered = interleave_by_class(&train.images, train.labels()?);
    let mut network = Network::build(config.clone(), &mut rng)?;
    let train_report =
        train_unsupervised(&mut network, &ordered, config.training.passes, &mut rng)?;
    let assignment = assign_labels(&network, &train.images, train.labels()?)?;

    // Map test labels into the trained class space: held_out[i] is
    // expected to light up the neurons tagged trained[i].
    let mapped_labels: Vec<u8> = test
        .labels()?
        .iter()
        .map(|&l| {
            if l == held_out[0] {
                trained[0]
            } else {
                trained[1]
            }
        })
        .collect();
    let eval = evaluate(&network, &assignment, &test.images, &mapped_labels)?;

    // Association property: per held-out class, how many test images had
    // their top class-average among neurons tagged with the paired
    // trained class.
    let mut associations = Vec::new();
    for (held, paired) in held_out.iter().zip(&trained) {
        let mut majority = 0usize;
        let mut total = 0usize;
        for (pred, &actual) in eval.predictions.iter().zip(test.labels()?) {
            if actual != *held {
                continue;
            }
            total += 1;
            if *pred == Prediction::Class(*paired) {
                majority += 1;
            }
        }
        associations.push((*held, *paired, majority, total));
    }

    let mut out = outcome(id, config);
    out.metric("mapped_accuracy", eval.accuracy);
    out.metric("test_images", eval.total as f64);
    for (held, paired, majority, total) in &associations {
        out.metric(
            format!("association_{held}_to_{paired}"),
            *majority as f64 / (*total).max(1) as f64,
        );
    }
    out.network = Some(network);
    out.assignment = Some(assignment);
    out.train_report = Some(train_report);
    out.eval_report = Some(eval);
    Ok(OutOfSetOutcome {
        outcome: out,
        associations,
    })
}

pub fn run_out_of_set_67_to_91(seed: u64, paths: &MnistPaths) -> Result<OutOfSetOutcome> {
    run_out_of_set(
        ExperimentId::OutOfSet67To91,
        [6, 7],
        [9, 1],
        seed,
        paths,
    )
}

pub fn run_out_of_set_28_to_03(seed: u64, paths: &MnistPaths) -> Result<OutOfSetOutcome> {
    run_out_of_set(
        ExperimentId::OutOfSet28To03,
        [2, 8],
        [0, 3],
        seed,
        paths,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_names_round_trip() {
        for id in ALL_EXPERIMENTS {
            let parsed: ExperimentId = id.name().parse().unwrap();
            assert_eq!(parsed, id);
        }
        assert!("mnist-everything".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn registered_conv_configs_are_valid() {
        for cfg in [
            mnist_subset_config(1),
            face_config(1),
            rotation_config(1),
            NetworkConfig::convolutional(1, 50, 28, 28, 14, 3, 2),
            NetworkConfig::convolutional(1, 50, 28, 28, 14, 3, 3),
            NetworkConfig::convolutional(1, 50, 28, 28, 16, 2, 2),
            NetworkConfig::convolutional(1, 50, 28, 28, 18, 2, 2),
            NetworkConfig::convolutional(1, 400, 28, 28, 14, 2, 2),
            NetworkConfig::convolutional(1, 10, 28, 28, 14, 2, 2),
        ] {
            cfg.validate().unwrap();
        }
    }
}
