//! Synthetic node-classification datasets and training runs.
//!
//! Datasets come from a stochastic block model: block ids are the labels,
//! features are noisy block indicators, and the split is stratified. A run
//! builds the layer operators named by its [`ModelConfig`], trains with
//! full-batch gradient descent for a fixed number of epochs and reports
//! per-epoch metrics.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{adjacency, matrix_power, normalize_sym, parse_edge_list, real_power, Graph};
use crate::layers::HopOperators;
use crate::matrix::RealMatrix;
use crate::model::{accuracy, softmax_cross_entropy, Checkpoint, Model, ModelConfig, OperatorSource};
use crate::paths::EnumerationLimits;
use crate::reduce::{apply_reduction, fit, ReductionMap};
use crate::tensor::{build_path_tensor, normalize_tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Graph with node labels, features and a train/val/test assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph {
    pub graph: Graph,
    pub labels: Vec<usize>,
    pub features: RealMatrix,
    pub split: Vec<Split>,
}

impl LabeledGraph {
    pub fn validate(&self) -> Result<()> {
        let n = self.graph.node_count();
        if self.labels.len() != n || self.split.len() != n || self.features.rows() != n {
            return Err(Error::Invalid(format!(
                "{n} nodes but {} labels, {} split entries, {} feature rows",
                self.labels.len(),
                self.split.len(),
                self.features.rows()
            )));
        }
        if self.features.cols() == 0 {
            return Err(Error::Invalid("features have zero columns".into()));
        }
        let classes = self.class_count();
        for c in 0..classes {
            if !(0..n).any(|i| self.labels[i] == c && self.split[i] == Split::Train) {
                return Err(Error::Invalid(format!("class {c} has no training node")));
            }
        }
        Ok(())
    }

    pub fn class_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn mask(&self, which: Split) -> Vec<bool> {
        self.split.iter().map(|&s| s == which).collect()
    }

    /// Write `edges.txt`, `labels.txt`, `features.txt` and `split.txt`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(EDGES_FILE), self.graph.to_edge_list())?;
        let mut labels = String::new();
        let mut split = String::new();
        let mut features = String::new();
        for i in 0..self.graph.node_count() {
            writeln!(labels, "{i} {}", self.labels[i]).unwrap();
            writeln!(split, "{i} {}", self.split[i].as_str()).unwrap();
            let row: Vec<String> = self.features.row(i).iter().map(f64::to_string).collect();
            writeln!(features, "{}", row.join(" ")).unwrap();
        }
        std::fs::write(dir.join(LABELS_FILE), labels)?;
        std::fs::write(dir.join(FEATURES_FILE), features)?;
        std::fs::write(dir.join(SPLIT_FILE), split)?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let read = |name: &str| -> Result<String> {
            std::fs::read_to_string(dir.join(name))
                .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", dir.join(name).display())))
        };
        let mut graph = parse_edge_list(&read(EDGES_FILE)?)?;
        let labels_text = read(LABELS_FILE)?;
        let split_text = read(SPLIT_FILE)?;
        let features_text = read(FEATURES_FILE)?;

        let feature_rows: Vec<Vec<f64>> = data_lines(&features_text)
            .map(|(line, text)| {
                text.split_whitespace()
                    .map(|tok| {
                        tok.parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| parse_err(FEATURES_FILE, line, format!("bad feature '{tok}'")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let n = feature_rows.len().max(graph.node_count());
        if graph.node_count() < n {
            graph = Graph::new(n, graph.edges())?;
        }
        let features = RealMatrix::from_rows(&feature_rows)
            .map_err(|_| Error::Invalid(format!("{FEATURES_FILE}: rows differ in length")))?;

        let labels = keyed(&labels_text, LABELS_FILE, n, |tok| tok.parse::<usize>().ok())?;
        let split = keyed(&split_text, SPLIT_FILE, n, |tok| match tok {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        })?;
        let data = LabeledGraph { graph, labels, features, split };
        data.validate()?;
        Ok(data)
    }
}

pub const EDGES_FILE: &str = "edges.txt";
pub const LABELS_FILE: &str = "labels.txt";
pub const FEATURES_FILE: &str = "features.txt";
pub const SPLIT_FILE: &str = "split.txt";

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_err(file: &str, line: usize, message: String) -> Error {
    Error::Parse { line, message: format!("{file}: {message}") }
}

/// Parse `node_id value` lines into a dense per-node vector.
fn keyed<T: Clone>(text: &str, file: &str, n: usize, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let mut out: Vec<Option<T>> = vec![None; n];
    for (line, body) in data_lines(text) {
        let mut tokens = body.split_whitespace();
        let (Some(id), Some(value), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(parse_err(file, line, "expected '<node_id> <value>'".into()));
        };
        let id: usize = id
            .parse()
            .map_err(|_| parse_err(file, line, format!("bad node id '{id}'")))?;
        if id >= n {
            return Err(parse_err(file, line, format!("node {id} out of range for n = {n}")));
        }
        let value = parse(value).ok_or_else(|| parse_err(file, line, format!("bad value '{value}'")))?;
        out[id] = Some(value);
    }
    out.into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::Invalid(format!("{file}: node {i} missing"))))
        .collect()
}

/// Stochastic block model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    #[serde(default = "default_noise")]
    pub noise: f64,
    pub seed: u64,
}

fn default_noise() -> f64 {
    0.5
}

impl SbmParams {
    pub fn new(block_sizes: Vec<usize>, p_in: f64, p_out: f64, seed: u64) -> Self {
        Self { block_sizes, p_in, p_out, noise: default_noise(), seed }
    }
}

/// Sample a labeled SBM graph.
///
/// One ChaCha8 stream seeded with `seed` drives, in order: the edge draws
/// (pairs `u < v` lexicographically, uniform `[0, 1)` against `p_in` or
/// `p_out`), the Gaussian feature noise (row-major), and the per-class
/// shuffles of the stratified 60/20/20 split.
pub fn generate_sbm(params: &SbmParams) -> Result<LabeledGraph> {
    let SbmParams { block_sizes, p_in, p_out, noise, seed } = params;
    if block_sizes.len() < 2 {
        return Err(Error::Invalid("need at least 2 blocks".into()));
    }
    if block_sizes.contains(&0) {
        return Err(Error::Invalid("blocks must be nonempty".into()));
    }
    if !(0.0 <= *p_out && p_out < p_in && *p_in <= 1.0) {
        return Err(Error::Invalid(format!("need 0 <= p_out < p_in <= 1, got p_in = {p_in}, p_out = {p_out}")));
    }
    if !(noise.is_finite() && *noise >= 0.0) {
        return Err(Error::Invalid("noise must be finite and nonnegative".into()));
    }
    let labels: Vec<usize> = block_sizes.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat_n(b, s)).collect();
    let n = labels.len();
    let classes = block_sizes.len();
    let mut rng = ChaCha8Rng::seed_from_u64(*seed);

    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] { *p_in } else { *p_out };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    let graph = Graph::new(n, edges)?;

    let normal = Normal::new(0.0, *noise).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut features = RealMatrix::zeros(n, classes);
    for i in 0..n {
        for c in 0..classes {
            features[(i, c)] = f64::from(labels[i] == c) + normal.sample(&mut rng);
        }
    }

    let split = stratified_split(&labels, classes, &mut rng);
    let data = LabeledGraph { graph, labels, features, split };
    data.validate()?;
    Ok(data)
}

fn stratified_split(labels: &[usize], classes: usize, rng: &mut ChaCha8Rng) -> Vec<Split> {
    let mut split = vec![Split::Test; labels.len()];
    for c in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(rng);
        let m = members.len();
        let train = ((0.6 * m as f64).round() as usize).clamp(1, m);
        let val = ((0.2 * m as f64).round() as usize).min(m - train);
        for (rank, &i) in members.iter().enumerate() {
            split[i] = if rank < train {
                Split::Train
            } else if rank < train + val {
                Split::Val
            } else {
                Split::Test
            };
        }
    }
    split
}

/// Layer operators for a configuration, plus the fitted maps (T-Hop only;
/// one map per power, fitted independently).
pub fn build_operators(config: &ModelConfig, graph: &Graph) -> Result<(HopOperators, Vec<ReductionMap>)> {
    config.validate()?;
    let a = adjacency(graph);
    match config.source {
        OperatorSource::AdjPowers => {
            let ops = if config.normalize {
                let norm = normalize_sym(&a)?;
                config.powers.iter().map(|&p| real_power(&norm, p)).collect::<Result<Vec<_>>>()?
            } else {
                config
                    .powers
                    .iter()
                    .map(|&p| matrix_power(&a, p).map(|m| m.to_real()))
                    .collect::<Result<Vec<_>>>()?
            };
            Ok((HopOperators::single(ops)?, Vec::new()))
        }
        OperatorSource::ReducedTensor => {
            let limits = EnumerationLimits { max_nodes: config.enumeration_cap };
            let mut reduced = Vec::with_capacity(config.powers.len());
            let mut maps = Vec::with_capacity(config.powers.len());
            for &p in &config.powers {
                let t = normalize_tensor(&build_path_tensor(graph, p, config.semantics, limits)?);
                let map = fit(config.reduction, &t, config.depth, config.projection_seed)?;
                reduced.push(apply_reduction(&t, &map)?);
                maps.push(map);
            }
            Ok((HopOperators::from_reduced(&reduced)?, maps))
        }
    }
}

/// One row of the metrics stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub dataset: String,
    pub model: String,
    pub seed: u64,
    pub config: ModelConfig,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    pub final_loss: f64,
    pub loss_curve: Vec<f64>,
    pub metrics: Vec<EpochMetrics>,
    /// Excluded from serialization so result files are reproducible.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

/// A finished run: its result and the trained checkpoint.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: RunResult,
    pub checkpoint: Checkpoint,
}

#[cfg(not(target_arch = "wasm32"))]
fn timer() -> impl FnOnce() -> f64 {
    let start = std::time::Instant::now();
    move || start.elapsed().as_secs_f64()
}

#[cfg(target_arch = "wasm32")]
fn timer() -> impl FnOnce() -> f64 {
    || 0.0
}

/// Train one model on one dataset for exactly `config.epochs` epochs.
///
/// Metrics for epoch `e` come from the forward pass before the `e`-th
/// update; the final accuracies and loss come from a forward pass after the
/// last update.
pub fn run_experiment(dataset_name: &str, data: &LabeledGraph, config: &ModelConfig) -> Result<RunOutcome> {
    let elapsed = timer();
    data.validate()?;
    let (ops, _) = build_operators(config, &data.graph)?;
    let mut model = Model::init(config, data.features.cols(), data.class_count().max(2))?;
    let train = data.mask(Split::Train);
    let val = data.mask(Split::Val);
    let test = data.mask(Split::Test);

    let mut metrics = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let pass = model.forward(&ops, &data.features)?;
        let (loss, grad) = softmax_cross_entropy(&pass.logits, &data.labels, &train)?;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("loss diverged at epoch {epoch}")));
        }
        metrics.push(EpochMetrics {
            epoch,
            loss,
            train_acc: accuracy(&pass.logits, &data.labels, &train),
            val_acc: accuracy(&pass.logits, &data.labels, &val),
            test_acc: accuracy(&pass.logits, &data.labels, &test),
        });
        let grads = model.backward(&ops, &pass, &grad)?;
        model.apply_gradients(&grads, config.learning_rate);
    }
    let pass = model.forward(&ops, &data.features)?;
    let (final_loss, _) = softmax_cross_entropy(&pass.logits, &data.labels, &train)?;

    let result = RunResult {
        dataset: dataset_name.to_string(),
        model: config.name.clone(),
        seed: config.seed,
        config: config.clone(),
        train_acc: accuracy(&pass.logits, &data.labels, &train),
        val_acc: accuracy(&pass.logits, &data.labels, &val),
        test_acc: accuracy(&pass.logits, &data.labels, &test),
        final_loss,
        loss_curve: metrics.iter().map(|m| m.loss).collect(),
        metrics,
        wall_clock_seconds: elapsed(),
    };
    Ok(RunOutcome { result, checkpoint: Checkpoint { config: config.clone(), model } })
}

/// Mean and sample standard deviation of one model's runs on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub model: String,
    pub runs: usize,
    pub test_acc_mean: f64,
    pub test_acc_std: f64,
    pub val_acc_mean: f64,
    pub val_acc_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareTable {
    pub rows: Vec<RunResult>,
    pub summary: Vec<SummaryRow>,
}

/// Sample mean and (n − 1)-normalized standard deviation; the deviation is
/// 0 for a single value.
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Run every `(dataset, config, seed)` combination. With `seeds` given,
/// each config runs once per seed (overriding `config.seed`); otherwise the
/// config's own seed is used. Rows are sorted by dataset, model, seed.
pub fn compare(datasets: &[(String, LabeledGraph)], configs: &[ModelConfig], seeds: Option<&[u64]>) -> Result<CompareTable> {
    if datasets.is_empty() || configs.is_empty() {
        return Err(Error::Invalid("compare needs at least one dataset and one config".into()));
    }
    let mut jobs = Vec::new();
    for (name, data) in datasets {
        for cfg in configs {
            match seeds {
                Some(list) => {
                    for &seed in list {
                        jobs.push((name.as_str(), data, ModelConfig { seed, ..cfg.clone() }));
                    }
                }
                None => jobs.push((name.as_str(), data, cfg.clone())),
            }
        }
    }
    let run = |(name, data, cfg): &(&str, &LabeledGraph, ModelConfig)| run_experiment(name, data, cfg).map(|o| o.result);
    #[cfg(feature = "parallel")]
    let rows: Vec<RunResult> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<RunResult> = jobs.iter().map(run).collect::<Result<_>>()?;

    Ok(CompareTable::from_rows(rows))
}

impl CompareTable {
    /// Sort runs by dataset, model, seed and summarize each (dataset, model).
    pub fn from_rows(mut rows: Vec<RunResult>) -> Self {
        rows.sort_by(|a, b| (&a.dataset, &a.model, a.seed).cmp(&(&b.dataset, &b.model, b.seed)));

        let mut summary = Vec::new();
        for chunk in rows.chunk_by(|a, b| a.dataset == b.dataset && a.model == b.model) {
            let test: Vec<f64> = chunk.iter().map(|r| r.test_acc).collect();
            let val: Vec<f64> = chunk.iter().map(|r| r.val_acc).collect();
            let (test_acc_mean, test_acc_std) = mean_and_std(&test);
            let (val_acc_mean, val_acc_std) = mean_and_std(&val);
            summary.push(SummaryRow {
                dataset: chunk[0].dataset.clone(),
                model: chunk[0].model.clone(),
                runs: chunk.len(),
                test_acc_mean,
                test_acc_std,
                val_acc_mean,
                val_acc_std,
            });
        }
        CompareTable { rows, summary }
    }

    /// Aligned plain-text rendering: one line per run, then one summary
    /// line per (dataset, model).
    pub fn to_text(&self) -> String {
        let mut grid = vec![vec![
            "dataset".to_string(),
            "model".into(),
            "seed".into(),
            "train_acc".into(),
            "val_acc".into(),
            "test_acc".into(),
            "final_loss".into(),
        ]];
        for r in &self.rows {
            grid.push(vec![
                r.dataset.clone(),
                r.model.clone(),
                r.seed.to_string(),
                format!("{:.4}", r.train_acc),
                format!("{:.4}", r.val_acc),
                format!("{:.4}", r.test_acc),
                format!("{:.6}", r.final_loss),
            ]);
        }
        let mut out = render_grid(&grid);
        out.push('\n');
        let mut grid = vec![vec![
            "dataset".to_string(),
            "model".into(),
            "runs".into(),
            "test_mean".into(),
            "test_std".into(),
            "val_mean".into(),
            "val_std".into(),
        ]];
        for s in &self.summary {
            grid.push(vec![
                s.dataset.clone(),
                s.model.clone(),
                s.runs.to_string(),
                format!("{:.4}", s.test_acc_mean),
                format!("{:.4}", s.test_acc_std),
                format!("{:.4}", s.val_acc_mean),
                format!("{:.4}", s.val_acc_std),
            ]);
        }
        out.push_str(&render_grid(&grid));
        out
    }
}

fn render_grid(grid: &[Vec<String>]) -> String {
    let cols = grid[0].len();
    let widths: Vec<usize> = (0..cols).map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in grid {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(cell, &w)| format!("{cell:<w$}")).collect();
        writeln!(out, "{}", cells.join("  ").trim_end()).unwrap();
    }
    out
}
