//! `thop`: build path-occurrence tensors, check their counting identities,
//! reduce them along depth and train T-Hop / MixHop models.
//!
//! Exit codes: 0 success, 1 identity failure or internal error, 2 input
//! error, 3 resource cap, 4 dimension error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use thop_core::experiments::{compare, generate_sbm, run_experiment, CompareTable, LabeledGraph, SbmParams};
use thop_core::format::TensorFile;
use thop_core::graph::parse_edge_list_bytes;
use thop_core::identities::{verify_all, IdentityTally};
use thop_core::model::ModelConfig;
use thop_core::paths::{EnumerationLimits, DEFAULT_ENUMERATION_CAP};
use thop_core::reduce::{apply_reduction, fit, reconstruction_error, ReductionKind};
use thop_core::tensor::{build_path_tensor, normalize_tensor};
use thop_core::{ErrorKind, Semantics};

#[derive(Parser)]
#[command(name = "thop", version, about = "Path-occurrence tensors and T-Hop graph convolutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the normalized tensor T^L of a graph and write it in THOP format.
    ///
    /// Exit codes: 0 ok, 2 unreadable or malformed graph, 3 enumeration cap exceeded
    /// or count overflow.
    BuildTensor {
        /// Edge-list file ("u v" per line, "#n N" sets the node count).
        #[arg(long)]
        graph: PathBuf,
        /// Path length L.
        #[arg(long = "L")]
        length: u32,
        /// Occurrence semantics.
        #[arg(long, value_enum)]
        semantics: SemanticsArg,
        /// Output tensor file.
        #[arg(long)]
        out: PathBuf,
        /// Largest graph accepted for simple-path enumeration.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
    },
    /// Check the cardinality and sum-recovery identities for all pairs and all L <= Lmax.
    ///
    /// Exit codes: 0 every check passed, 1 some check failed, 2 malformed graph,
    /// 3 enumeration cap exceeded.
    Verify {
        /// Edge-list file.
        #[arg(long)]
        graph: PathBuf,
        /// Largest path length checked.
        #[arg(long = "Lmax")]
        max_length: u32,
        /// Largest graph accepted for simple-path enumeration.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
    },
    /// Reduce a THOP tensor along its depth axis and write the fitted map as JSON.
    ///
    /// Exit codes: 0 ok, 2 unreadable or malformed tensor file, 4 d = 0, d > n,
    /// or d != 1 for sum.
    Reduce {
        /// Input tensor (normalized or integer counts).
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Output depth d.
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Seed for `randproj`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output reduced tensor.
        #[arg(long)]
        out: PathBuf,
        /// Reduction map output [default: <out>.map.json].
        #[arg(long)]
        map_out: Option<PathBuf>,
        /// Print the largest fiber reconstruction error (pca only).
        #[arg(long)]
        check_reconstruction: bool,
    },
    /// Train one model on one dataset.
    ///
    /// Writes run.json, metrics.jsonl, model.json, table.txt and timing.json.
    /// Exit codes: 0 ok, 2 bad config or dataset, 3 resource cap, 4 dimension error.
    Train {
        /// Dataset directory (edges.txt, labels.txt, features.txt, split.txt).
        #[arg(long)]
        dataset: PathBuf,
        /// Model config JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train every model of a comparison config on every dataset.
    ///
    /// The config is `{"models": [...], "seeds": [...]}`; `seeds` is optional.
    /// Writes table.json and table.txt.
    /// Exit codes: 0 ok, 2 bad config or dataset, 3 resource cap, 4 dimension error.
    Compare {
        /// Dataset directory; repeat for several datasets.
        #[arg(long, required = true)]
        dataset: Vec<PathBuf>,
        /// Comparison config JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a stochastic block model dataset.
    ///
    /// Exit codes: 0 ok, 2 invalid parameters.
    GenSbm {
        /// Comma-separated block sizes.
        #[arg(long, value_delimiter = ',', default_values_t = [30, 30])]
        sizes: Vec<usize>,
        /// Within-block edge probability.
        #[arg(long, default_value_t = 0.3)]
        p_in: f64,
        /// Cross-block edge probability.
        #[arg(long, default_value_t = 0.05)]
        p_out: f64,
        /// Standard deviation of the feature noise.
        #[arg(long, default_value_t = 0.5)]
        noise: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SemanticsArg {
    Simple,
    Walk,
}

impl From<SemanticsArg> for Semantics {
    fn from(s: SemanticsArg) -> Self {
        match s {
            SemanticsArg::Simple => Semantics::Simple,
            SemanticsArg::Walk => Semantics::Walk,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Sum,
    Pca,
    Randproj,
}

impl From<MethodArg> for ReductionKind {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Sum => ReductionKind::Sum,
            MethodArg::Pca => ReductionKind::Pca,
            MethodArg::Randproj => ReductionKind::RandomProjection,
        }
    }
}

enum Failure {
    Core(thop_core::Error),
    Identity(String),
}

impl From<thop_core::Error> for Failure {
    fn from(e: thop_core::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Core(e.into())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Identity(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Input => 2,
                ErrorKind::Resource => 3,
                ErrorKind::Dimension => 4,
                ErrorKind::Internal => 1,
            })
        }
    }
}

fn run(command: Command) -> CmdResult {
    match command {
        Command::BuildTensor { graph, length, semantics, out, cap } => build_tensor(&graph, length, semantics.into(), &out, cap),
        Command::Verify { graph, max_length, cap } => verify(&graph, max_length, cap),
        Command::Reduce { tensor, method, d, seed, out, map_out, check_reconstruction } => {
            let map_out = map_out.unwrap_or_else(|| sidecar_path(&out));
            reduce(&tensor, method.into(), d, seed, &out, &map_out, check_reconstruction)
        }
        Command::Train { dataset, config, out } => train(&dataset, &config, &out),
        Command::Compare { dataset, config, out } => compare_cmd(&dataset, &config, &out),
        Command::GenSbm { sizes, p_in, p_out, noise, seed, out } => {
            let data = generate_sbm(&SbmParams { block_sizes: sizes, p_in, p_out, noise, seed })?;
            data.write_dir(&out)?;
            println!("nodes {}", data.graph.node_count());
            println!("edges {}", data.graph.edge_count());
            println!("classes {}", data.class_count());
            Ok(())
        }
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".map.json");
    PathBuf::from(name)
}

fn build_tensor(graph: &Path, length: u32, semantics: Semantics, out: &Path, cap: usize) -> CmdResult {
    let g = parse_edge_list_bytes(&fs::read(graph)?)?;
    let b = build_path_tensor(&g, length, semantics, EnumerationLimits { max_nodes: cap })?;
    let t = normalize_tensor(&b);
    fs::write(out, TensorFile::from(&t).encode()?)?;
    println!("n {}", t.n());
    println!("L {length}");
    println!("semantics {semantics}");
    println!("nonzeros {}", t.nonzero_count());
    Ok(())
}

fn print_tally(name: &str, tally: &IdentityTally) {
    println!("{name}: {}/{} passed", tally.passed, tally.checked);
    for f in &tally.failures {
        eprintln!("  {name} failed: {f}");
    }
}

fn verify(graph: &Path, max_length: u32, cap: usize) -> CmdResult {
    let g = parse_edge_list_bytes(&fs::read(graph)?)?;
    let summary = verify_all(&g, max_length, EnumerationLimits { max_nodes: cap })?;
    print_tally("cardinality", &summary.cardinality);
    print_tally("sum_recovery_simple", &summary.simple_sum_recovery);
    print_tally("sum_recovery_walk", &summary.walk_sum_recovery);
    if summary.all_passed() {
        Ok(())
    } else {
        Err(Failure::Identity("identity check failed".into()))
    }
}

fn reduce(
    tensor: &Path,
    kind: ReductionKind,
    d: usize,
    seed: u64,
    out: &Path,
    map_out: &Path,
    check: bool,
) -> CmdResult {
    let t = TensorFile::decode(&fs::read(tensor)?)?.into_normalized()?;
    let map = fit(kind, &t, d, seed)?;
    let reduced = apply_reduction(&t, &map)?;
    let error = if check {
        if kind != ReductionKind::Pca {
            return Err(thop_core::Error::Invalid("--check-reconstruction needs --method pca".into()).into());
        }
        Some(reconstruction_error(&t, &map)?)
    } else {
        None
    };
    let bytes = TensorFile::from(&reduced).encode()?;
    let map_json = serde_json::to_string_pretty(&map)?;
    fs::write(out, bytes)?;
    fs::write(map_out, map_json + "\n")?;
    println!("n {}", reduced.n());
    println!("L {}", reduced.length());
    println!("d {}", reduced.depth());
    if let Some(err) = error {
        println!("reconstruction_error {err:e}");
    }
    Ok(())
}

fn dataset_name(dir: &Path) -> String {
    dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| dir.display().to_string())
}

fn train(dataset: &Path, config: &Path, out: &Path) -> CmdResult {
    let config: ModelConfig = serde_json::from_slice(&fs::read(config)?)?;
    let data = LabeledGraph::read_dir(dataset)?;
    let outcome = run_experiment(&dataset_name(dataset), &data, &config)?;
    let result = &outcome.result;

    let mut metrics = String::new();
    for m in &result.metrics {
        metrics.push_str(&serde_json::to_string(m)?);
        metrics.push('\n');
    }
    let table = CompareTable::from_rows(vec![result.clone()]);

    fs::create_dir_all(out)?;
    fs::write(out.join("run.json"), serde_json::to_string_pretty(result)? + "\n")?;
    fs::write(out.join("metrics.jsonl"), metrics)?;
    fs::write(out.join("model.json"), serde_json::to_string(&outcome.checkpoint)? + "\n")?;
    fs::write(out.join("table.txt"), table.to_text())?;
    fs::write(
        out.join("timing.json"),
        serde_json::to_string_pretty(&json!({ "wall_clock_seconds": result.wall_clock_seconds }))? + "\n",
    )?;
    println!("train_acc {:.4}", result.train_acc);
    println!("val_acc {:.4}", result.val_acc);
    println!("test_acc {:.4}", result.test_acc);
    println!("final_loss {:.6}", result.final_loss);
    Ok(())
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareConfig {
    models: Vec<ModelConfig>,
    #[serde(default)]
    seeds: Option<Vec<u64>>,
}

fn compare_cmd(datasets: &[PathBuf], config: &Path, out: &Path) -> CmdResult {
    let config: CompareConfig = serde_json::from_slice(&fs::read(config)?)?;
    let data = datasets
        .iter()
        .map(|dir| Ok((dataset_name(dir), LabeledGraph::read_dir(dir)?)))
        .collect::<thop_core::Result<Vec<_>>>()?;
    let table = compare(&data, &config.models, config.seeds.as_deref())?;
    let text = table.to_text();
    fs::create_dir_all(out)?;
    fs::write(out.join("table.json"), serde_json::to_string_pretty(&table)? + "\n")?;
    fs::write(out.join("table.txt"), &text)?;
    print!("{text}");
    Ok(())
}
