//! Command-line front end: train, label, evaluate, run the registered
//! experiment protocols, and export kernel visualizations.
//!
//! Every run writes its fully resolved configuration (`config.toml`) next
//! to its outputs, sufficient to reproduce the run exactly.

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use convsnn_core::config::NetworkConfig;
use convsnn_core::encoding::GaborBank;
use convsnn_core::engine::{
    assign_labels, evaluate, interleave_by_class, train_unsupervised, EvalReport, LabelAssignment,
    Prediction, TrainReport,
};
use convsnn_core::experiments::{self, ExperimentId, ExperimentOutcome, MnistPaths};
use convsnn_core::io::idx::{load_idx, Dataset};
use convsnn_core::io::manifest::{load_role, read_manifest, Ingest, Role};
use convsnn_core::io::netfile::{load_network, save_network};
use convsnn_core::io::pgm::export_kernels_pgm;
use convsnn_core::network::{Network, Synapses};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "convsnn", version, about = "Convolutional STDP spiking network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Output directory (created if missing); all result paths are
    /// relative to it.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for evaluation/labeling fan-out.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Clone)]
struct DatasetOpts {
    /// Directory holding the MNIST IDX files.
    #[arg(long)]
    dataset_dir: Option<PathBuf>,
    /// Manifest file (`path label role` lines) for raster datasets.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Ingestion mode for manifest datasets.
    #[arg(long, default_value = "pgm")]
    ingest: String,
    /// Luma threshold for `--ingest yuv`.
    #[arg(long, default_value_t = 120)]
    yuv_threshold: u8,
    /// Keep only these classes (comma-separated ids).
    #[arg(long, value_delimiter = ',')]
    filter: Option<Vec<u8>>,
    /// Keep at most this many examples per class.
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network from a config file and write the network state,
    /// train report, and kernel montage.
    Train {
        /// Network config TOML.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        data: DatasetOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Tag each neuron with the class it spikes most for.
    Label {
        /// Saved network-state file.
        #[arg(long)]
        network: PathBuf,
        #[command(flatten)]
        data: DatasetOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Evaluate a labeled network on a test set.
    Eval {
        /// Saved network-state file (must carry a label assignment).
        #[arg(long)]
        network: PathBuf,
        #[command(flatten)]
        data: DatasetOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run a registered experiment protocol end to end.
    Experiment {
        /// Experiment id (see `--help` for the registered set).
        id: String,
        #[command(flatten)]
        data: DatasetOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Export the kernel montage of a saved network.
    Visualize {
        #[arg(long)]
        network: PathBuf,
        /// Montage width in tiles; defaults to ceil(sqrt(num_neurons)).
        #[arg(long)]
        grid_cols: Option<usize>,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train {
            config,
            data,
            common,
        } => cmd_train(&config, &data, &common),
        Command::Label {
            network,
            data,
            common,
        } => cmd_label(&network, &data, &common),
        Command::Eval {
            network,
            data,
            common,
        } => cmd_eval(&network, &data, &common),
        Command::Experiment { id, data, common } => cmd_experiment(&id, &data, &common),
        Command::Visualize {
            network,
            grid_cols,
            common,
        } => cmd_visualize(&network, grid_cols, &common),
    }
}

fn prepare_out(common: &CommonOpts) -> anyhow::Result<()> {
    std::fs::create_dir_all(&common.out)
        .with_context(|| format!("creating output directory {}", common.out.display()))?;
    if let Some(n) = common.threads {
        convsnn_core::engine::set_threads(n);
    }
    Ok(())
}

fn write_resolved_config(config: &NetworkConfig, out: &Path) -> anyhow::Result<()> {
    std::fs::write(out.join("config.toml"), config.to_toml()?)?;
    Ok(())
}

fn load_dataset(data: &DatasetOpts, role: Role) -> anyhow::Result<Dataset> {
    if let Some(manifest_path) = &data.manifest {
        let entries = read_manifest(manifest_path)?;
        let ingest = match data.ingest.as_str() {
            "pgm" => Ingest::PgmGray,
            "yuv" => Ingest::YuvThreshold {
                height: 32,
                width: 32,
                pixel_threshold: data.yuv_threshold,
            },
            "ppm-gabor" => Ingest::PpmGabor {
                bank: GaborBank::default(),
                out_h: 32,
                out_w: 32,
            },
            other => bail!("unknown ingest mode {other:?} (pgm, yuv, ppm-gabor)"),
        };
        return Ok(load_role(&entries, role, &ingest)?);
    }
    let dir = data
        .dataset_dir
        .as_ref()
        .context("either --dataset-dir or --manifest is required")?;
    let paths = MnistPaths::in_dir(dir);
    let filter: Option<HashSet<u8>> = data.filter.as_ref().map(|f| f.iter().copied().collect());
    let (images, labels) = match role {
        Role::Train => (paths.train_images, paths.train_labels),
        Role::Test => (paths.test_images, paths.test_labels),
    };
    Ok(load_idx(&images, &labels, filter.as_ref(), data.cap)?)
}

fn default_grid_cols(num_neurons: usize) -> usize {
    (num_neurons as f64).sqrt().ceil() as usize
}

fn export_montage_if_conv(network: &Network, path: &Path, grid_cols: Option<usize>) -> anyhow::Result<bool> {
    if let Synapses::Conv(bank) = &network.synapses {
        let cols = grid_cols.unwrap_or_else(|| default_grid_cols(bank.num_neurons()));
        export_kernels_pgm(bank, cols, path)?;
        return Ok(true);
    }
    Ok(false)
}

fn write_train_report(report: &TrainReport, out: &Path) -> anyhow::Result<()> {
    let mut csv = String::from("image_index,total_spikes\n");
    for (i, spikes) in report.per_image_spikes.iter().enumerate() {
        csv.push_str(&format!("{i},{spikes}\n"));
    }
    std::fs::write(out.join("train_report.csv"), csv)?;

    let mut stats = String::from("neuron,w_min,w_max,w_mean\n");
    for (i, s) in report.kernel_stats.iter().enumerate() {
        stats.push_str(&format!("{i},{},{},{}\n", s.min, s.max, s.mean));
    }
    std::fs::write(out.join("kernel_stats.csv"), stats)?;
    Ok(())
}

fn write_labels_csv(assignment: &LabelAssignment, out: &Path) -> anyhow::Result<()> {
    let mut csv = String::from("neuron,tag\n");
    for (i, tag) in assignment.tags.iter().enumerate() {
        match tag {
            Some(c) => csv.push_str(&format!("{i},{c}\n")),
            None => csv.push_str(&format!("{i},UNLABELED\n")),
        }
    }
    std::fs::write(out.join("labels.csv"), csv)?;
    Ok(())
}

fn write_accuracy_csv(report: &EvalReport, out: &Path) -> anyhow::Result<()> {
    let mut acc = String::from("metric,value\n");
    acc.push_str(&format!("accuracy,{}\n", report.accuracy));
    acc.push_str(&format!("correct,{}\n", report.correct));
    acc.push_str(&format!("total,{}\n", report.total));
    std::fs::write(out.join("accuracy.csv"), acc)?;
    Ok(())
}

fn write_confusion_csv(report: &EvalReport, out: &Path) -> anyhow::Result<()> {
    let n = report.confusion.num_classes;
    let mut csv = String::from("actual");
    for c in 0..n {
        csv.push_str(&format!(",pred_{c}"));
    }
    csv.push_str(",no_prediction\n");
    for (actual, row) in report.confusion.matrix.iter().enumerate() {
        csv.push_str(&actual.to_string());
        for v in row {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    }
    std::fs::write(out.join("confusion.csv"), csv)?;
    Ok(())
}

fn write_metrics_csv(outcome: &ExperimentOutcome, out: &Path) -> anyhow::Result<()> {
    let mut csv = String::from("metric,value\n");
    for row in &outcome.metrics {
        csv.push_str(&format!("{},{}\n", row.name, row.value));
    }
    std::fs::write(out.join("accuracy.csv"), csv)?;
    Ok(())
}

fn cmd_train(config_path: &Path, data: &DatasetOpts, common: &CommonOpts) -> anyhow::Result<()> {
    prepare_out(common)?;
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("reading config {}", config_path.display()))?;
    let mut config = NetworkConfig::from_toml(&text)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    write_resolved_config(&config, &common.out)?;

    let dataset = load_dataset(data, Role::Train)?;
    let ordered = if config.training.interleave_classes && dataset.labels.is_some() {
        interleave_by_class(&dataset.images, dataset.labels()?)
    } else {
        dataset.images.clone()
    };

    let passes = config.training.passes;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut network = Network::build(config, &mut rng)?;
    let report = train_unsupervised(&mut network, &ordered, passes, &mut rng)?;

    save_network(&network, None, &common.out.join("network.bin"))?;
    write_train_report(&report, &common.out)?;
    export_montage_if_conv(&network, &common.out.join("kernels.pgm"), None)?;
    println!(
        "trained {} images x {} passes, {} weight updates -> {}",
        ordered.len(),
        passes,
        report.weight_updates,
        common.out.display()
    );
    Ok(())
}

fn cmd_label(network_path: &Path, data: &DatasetOpts, common: &CommonOpts) -> anyhow::Result<()> {
    prepare_out(common)?;
    let (network, _) = load_network(network_path)?;
    write_resolved_config(&network.config, &common.out)?;
    let dataset = load_dataset(data, Role::Train)?;
    let assignment = assign_labels(&network, &dataset.images, dataset.labels()?)?;
    save_network(&network, Some(&assignment), &common.out.join("network.bin"))?;
    write_labels_csv(&assignment, &common.out)?;
    println!(
        "labeled {} of {} neurons -> {}",
        assignment.labeled_neurons(),
        network.num_excitatory(),
        common.out.display()
    );
    Ok(())
}

fn cmd_eval(network_path: &Path, data: &DatasetOpts, common: &CommonOpts) -> anyhow::Result<()> {
    prepare_out(common)?;
    let (network, assignment) = load_network(network_path)?;
    let assignment =
        assignment.context("network file carries no label assignment; run `label` first")?;
    write_resolved_config(&network.config, &common.out)?;
    let dataset = load_dataset(data, Role::Test)?;
    let report = evaluate(&network, &assignment, &dataset.images, dataset.labels()?)?;
    write_accuracy_csv(&report, &common.out)?;
    write_confusion_csv(&report, &common.out)?;
    println!(
        "accuracy {:.4} ({}/{}) -> {}",
        report.accuracy,
        report.correct,
        report.total,
        common.out.display()
    );
    Ok(())
}

fn mnist_paths(data: &DatasetOpts) -> anyhow::Result<MnistPaths> {
    let dir = data
        .dataset_dir
        .as_ref()
        .context("--dataset-dir is required for MNIST experiments")?;
    let paths = MnistPaths::in_dir(dir);
    if !paths.exist() {
        bail!(
            "MNIST IDX files not found under {} (expected train-images-idx3-ubyte etc.)",
            dir.display()
        );
    }
    Ok(paths)
}

fn cmd_experiment(id: &str, data: &DatasetOpts, common: &CommonOpts) -> anyhow::Result<()> {
    prepare_out(common)?;
    let id: ExperimentId = id.parse()?;
    let seed = common.seed.unwrap_or(0);

    let outcome = match id {
        ExperimentId::MnistSubset1679 => {
            experiments::run_subset_1679(seed, &mnist_paths(data)?)?
        }
        ExperimentId::MnistSubset0238 => {
            experiments::run_subset_0238(seed, &mnist_paths(data)?)?
        }
        ExperimentId::MnistStrideSweep => {
            let seeds = [seed, seed + 1, seed + 2];
            experiments::run_stride_sweep(&seeds, &mnist_paths(data)?)?
        }
        ExperimentId::MnistKernelSweep => {
            experiments::run_kernel_sweep(seed, &mnist_paths(data)?)?
        }
        ExperimentId::MnistFull400 => experiments::run_full_400(seed, &mnist_paths(data)?)?,
        ExperimentId::MnistFcBaseline => {
            experiments::run_fc_baseline(seed, &mnist_paths(data)?)?
        }
        ExperimentId::Face => experiments::run_face(seed)?,
        ExperimentId::CaltechRotation => experiments::run_caltech_rotation(seed)?,
        ExperimentId::OutOfSet67To91 => {
            experiments::run_out_of_set_67_to_91(seed, &mnist_paths(data)?)?.outcome
        }
        ExperimentId::OutOfSet28To03 => {
            experiments::run_out_of_set_28_to_03(seed, &mnist_paths(data)?)?.outcome
        }
    };

    write_resolved_config(&outcome.config, &common.out)?;
    write_metrics_csv(&outcome, &common.out)?;
    if let Some(eval) = &outcome.eval_report {
        write_confusion_csv(eval, &common.out)?;
    }
    if let Some(report) = &outcome.train_report {
        write_train_report(report, &common.out)?;
    }
    if let Some(network) = &outcome.network {
        save_network(
            network,
            outcome.assignment.as_ref(),
            &common.out.join("network.bin"),
        )?;
        export_montage_if_conv(network, &common.out.join("kernels.pgm"), None)?;
    }
    for row in &outcome.metrics {
        println!("{} = {}", row.name, row.value);
    }
    println!("artifacts -> {}", common.out.display());
    Ok(())
}

fn cmd_visualize(
    network_path: &Path,
    grid_cols: Option<usize>,
    common: &CommonOpts,
) -> anyhow::Result<()> {
    prepare_out(common)?;
    let (network, _) = load_network(network_path)?;
    write_resolved_config(&network.config, &common.out)?;
    let path = common.out.join("kernels.pgm");
    if !export_montage_if_conv(&network, &path, grid_cols)? {
        bail!("network is fully-connected; kernel montage applies to the convolutional topology");
    }
    println!("wrote {}", path.display());
    Ok(())
}
