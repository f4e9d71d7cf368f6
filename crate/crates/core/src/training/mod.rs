//! Training loops, hyper-parameter grid search, model selection, and
//! cross-dataset evaluation.
//!
//! An [`ExperimentConfig`] describes a whole experiment: the model, the
//! dataset directories whose samples are pooled for training, a
//! learning-rate grid (plus an unrolling-step grid for the recurrent
//! model), and the budget knobs. [`train`] runs one grid point end to end;
//! [`grid_search`] runs every point and selects the record with the best
//! validation accuracy. Held-out families are scored by [`evaluate`] and
//! [`cross_dataset_table`], which take an already-trained model — test
//! manifests have no field in the config, so the training path cannot read
//! them even by accident.
//!
//! Determinism: parameter init, the train/validation partition, and every
//! epoch's batch order are all drawn from streams keyed by the config seed,
//! and batch gradients are reduced over fixed chunk boundaries, so a run is
//! bit-reproducible regardless of thread count.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::{Differentiable, Gradients, Optimizer, OptimizerKind};
use crate::error::{Error, Result};
use crate::imggen::{load_dataset, Dataset};
use crate::models::{Model, ModelSpec};
use crate::rng::stream;
use crate::scalar::Scalar;
use crate::table::{fmt_f64, read_metadata, read_table, write_table, Table};
use crate::tensor::Tensor;

/// Stream coordinates for the training module's random decisions, chosen far
/// away from the small integers used by per-tensor init streams.
const TAG_SPLIT: u64 = 0x5350_4c49_5400; // train/validation partition
const TAG_EPOCH: u64 = 0x4550_4f43_4800; // per-epoch batch order
const TAG_SUBSET: u64 = 0x5355_4253_4500; // training-size subsampling

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const EPOCHS_FILE: &str = "epochs.csv";
pub const POINT_CONFIG_FILE: &str = "config.json";
pub const GRID_FILE: &str = "grid.csv";

fn default_validation_fraction() -> f64 {
    0.05
}

fn default_learning_rates() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5]
}

fn default_batch_size() -> usize {
    32
}

fn default_max_epochs() -> usize {
    50
}

fn default_patience() -> usize {
    10
}

/// One experiment: model, data, hyper-parameter grids, budget, seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    /// Dataset directories whose samples are pooled, shuffled, and split
    /// into train/validation. Training reads nothing else.
    pub train_datasets: Vec<PathBuf>,
    /// Fraction of the pool held out for validation-based selection.
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
    #[serde(default = "default_learning_rates")]
    pub learning_rates: Vec<f64>,
    /// Unrolling-step grid. Required (non-empty) for the recurrent model;
    /// must be empty for feed-forward models, which have no such axis.
    #[serde(default)]
    pub unroll_steps: Vec<usize>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    /// Epochs without a validation-accuracy improvement before stopping.
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default)]
    pub optimizer: OptimizerKind,
    /// Root seed for init, the train/validation split, and epoch shuffles.
    pub seed: u64,
    /// When set, train on a seeded subsample of this many pooled samples;
    /// the subsample is nested (a smaller size is a prefix of a larger one
    /// under the same seed), which is what the size sweep relies on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training_size: Option<usize>,
    /// Artifacts land here, one content-hashed subdirectory per grid point.
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.train_datasets.is_empty() {
            return Err(Error::InvalidSpec("train_datasets must name at least one dataset".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "validation_fraction must be in (0,1), got {}",
                self.validation_fraction
            )));
        }
        if self.learning_rates.is_empty() {
            return Err(Error::InvalidSpec("learning_rates grid must be non-empty".into()));
        }
        if self.learning_rates.iter().any(|&lr| !(lr.is_finite() && lr > 0.0)) {
            return Err(Error::InvalidSpec("learning rates must be finite and positive".into()));
        }
        let recurrent = matches!(self.model, ModelSpec::Lstm3 { .. });
        if recurrent {
            if self.unroll_steps.is_empty() {
                return Err(Error::InvalidSpec(
                    "unroll_steps grid must be non-empty for the recurrent model".into(),
                ));
            }
            if self.unroll_steps.iter().any(|&t| t == 0) {
                return Err(Error::InvalidSpec("unroll_steps must be ≥ 1".into()));
            }
        } else if !self.unroll_steps.is_empty() {
            return Err(Error::InvalidSpec(
                "unroll_steps only applies to the recurrent model".into(),
            ));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidSpec("batch_size must be ≥ 1".into()));
        }
        if self.max_epochs < 1 {
            return Err(Error::InvalidSpec("max_epochs must be ≥ 1".into()));
        }
        if self.patience < 1 {
            return Err(Error::InvalidSpec("patience must be ≥ 1".into()));
        }
        if self.training_size == Some(0) {
            return Err(Error::InvalidSpec("training_size 0 is not a training set".into()));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::InvalidSpec("output_dir must not be empty".into()));
        }
        Ok(())
    }

    /// True when the grids describe exactly one training run.
    pub fn is_single_point(&self) -> bool {
        let lr_single = self.learning_rates.len() == 1;
        match self.model {
            ModelSpec::Lstm3 { .. } => lr_single && self.unroll_steps.len() == 1,
            _ => lr_single,
        }
    }

    /// Expands the grids into single-point configs (learning rate × unroll
    /// steps for the recurrent model, learning rate alone otherwise), in
    /// declaration order. Each point's model spec carries its own step count.
    pub fn expand(&self) -> Result<Vec<ExperimentConfig>> {
        self.validate()?;
        let mut points = Vec::new();
        for &lr in &self.learning_rates {
            match self.model {
                ModelSpec::Lstm3 { channels, .. } => {
                    for &t in &self.unroll_steps {
                        let mut p = self.clone();
                        p.learning_rates = vec![lr];
                        p.unroll_steps = vec![t];
                        p.model = ModelSpec::Lstm3 { channels, steps: t };
                        points.push(p);
                    }
                }
                _ => {
                    let mut p = self.clone();
                    p.learning_rates = vec![lr];
                    points.push(p);
                }
            }
        }
        Ok(points)
    }

    /// Content hash of everything that defines the experiment outcome. The
    /// output directory is excluded so artifacts stay relocatable.
    pub fn config_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        value.as_object_mut().expect("config is a JSON object").remove("output_dir");
        // serde_json objects iterate in sorted key order, so this is canonical.
        let canonical = serde_json::to_string(&value).expect("value serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Artifact directory for this grid point: `output_dir/<hash prefix>`.
    pub fn point_dir(&self) -> PathBuf {
        self.output_dir.join(&self.config_hash()[..12])
    }
}

/// Loss and validation accuracy of one epoch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub train_loss: f64,
    pub val_accuracy: f64,
}

/// Everything a finished run reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub learning_rate: f64,
    /// Unrolling steps for the recurrent model, absent otherwise.
    pub unroll_steps: Option<usize>,
    /// Mean training-split loss at initialization, before any update.
    pub initial_train_loss: f64,
    /// Mean training-split loss measured fresh after the first epoch's
    /// updates (the per-epoch `train_loss` entries are running means taken
    /// while parameters move, so they lag this quantity).
    pub post_epoch1_train_loss: f64,
    pub epochs: Vec<EpochStats>,
    /// 1-based index of the checkpointed (best-validation) epoch.
    pub selected_epoch: usize,
    pub best_val_accuracy: f64,
    pub checkpoint: PathBuf,
}

impl RunRecord {
    pub fn validate(&self) -> Result<()> {
        if self.epochs.is_empty() {
            return Err(Error::InvalidInput("run record holds no epochs".into()));
        }
        if self.selected_epoch == 0 || self.selected_epoch > self.epochs.len() {
            return Err(Error::InvalidInput(format!(
                "selected epoch {} outside 1..={}",
                self.selected_epoch,
                self.epochs.len()
            )));
        }
        for (i, e) in self.epochs.iter().enumerate() {
            if !(0.0..=1.0).contains(&e.val_accuracy) {
                return Err(Error::InvalidInput(format!(
                    "epoch {} validation accuracy {} outside [0,1]",
                    i + 1,
                    e.val_accuracy
                )));
            }
        }
        let sel = self.epochs[self.selected_epoch - 1].val_accuracy;
        if sel != self.best_val_accuracy {
            return Err(Error::InvalidInput(format!(
                "selected epoch accuracy {} disagrees with best {}",
                sel, self.best_val_accuracy
            )));
        }
        Ok(())
    }
}

/// In-memory pool of training samples from one or more dataset directories.
struct SamplePool {
    side: usize,
    pixels: Vec<u8>,
    labels: Vec<u8>,
}

impl SamplePool {
    fn load(dirs: &[PathBuf]) -> Result<SamplePool> {
        let mut side = 0usize;
        let mut pixels = Vec::new();
        let mut labels = Vec::new();
        for dir in dirs {
            let ds = load_dataset(dir)?;
            if side == 0 {
                side = ds.side();
            } else if side != ds.side() {
                return Err(Error::shape(
                    format!("all pooled datasets at side {side}"),
                    format!("{} at side {}", dir.display(), ds.side()),
                ));
            }
            for i in 0..ds.len() {
                pixels.extend_from_slice(ds.image_bytes(i));
                labels.push(ds.label(i));
            }
        }
        if labels.is_empty() {
            return Err(Error::InvalidInput("sample pool is empty".into()));
        }
        Ok(SamplePool { side, pixels, labels })
    }

    fn len(&self) -> usize {
        self.labels.len()
    }

    /// Materializes the listed samples as a model input batch, mapping pixel
    /// bytes to [0,1].
    fn batch(&self, idxs: &[usize]) -> (Tensor<f32>, Vec<u8>) {
        let px = self.side * self.side;
        let mut x = Tensor::zeros(&[idxs.len(), 1, self.side, self.side]);
        let xd = x.data_mut();
        let mut y = Vec::with_capacity(idxs.len());
        for (bi, &i) in idxs.iter().enumerate() {
            let src = &self.pixels[i * px..(i + 1) * px];
            crate::models::unit_scale_into(src, &mut xd[bi * px..(bi + 1) * px]);
            y.push(self.labels[i]);
        }
        (x, y)
    }
}

/// Mean loss of `model` over the listed pool samples, without gradients.
fn pool_loss(model: &Model<f32>, pool: &SamplePool, idxs: &[usize], batch: usize) -> Result<f64> {
    let mut acc = 0.0;
    for chunk in idxs.chunks(batch) {
        let (x, y) = pool.batch(chunk);
        acc += model.loss(&x, &y)? * chunk.len() as f64;
    }
    Ok(acc / idxs.len() as f64)
}

/// Accuracy of `model` over the listed pool samples at threshold 0.5.
fn pool_accuracy(model: &Model<f32>, pool: &SamplePool, idxs: &[usize], batch: usize) -> Result<f64> {
    let mut correct = 0usize;
    for chunk in idxs.chunks(batch) {
        let (x, y) = pool.batch(chunk);
        let probs = model.forward(&x)?;
        for (p, &label) in probs.iter().zip(&y) {
            if (p.to_f64_lossy() > 0.5) == (label == 1) {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / idxs.len() as f64)
}

/// Trains one grid point: seeded split and shuffles, mean-BCE minimization,
/// best-validation checkpointing, and patience-based early stopping. Writes
/// `config.json`, `epochs.csv` (+ metadata sidecar), and `model.ckpt` into
/// the point's content-hashed directory and returns the run record.
///
/// A non-finite loss or parameter aborts the run with [`Error::Diverged`];
/// [`grid_search`] records such points as failed instead of dying.
pub fn train(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    if !config.is_single_point() {
        return Err(Error::InvalidSpec(
            "train() takes a single grid point; use grid_search() for grids".into(),
        ));
    }
    let lr = config.learning_rates[0];
    let unroll = match config.model {
        ModelSpec::Lstm3 { .. } => Some(config.unroll_steps[0]),
        _ => None,
    };
    // The point's model spec carries its own step count after expand(); a
    // hand-written single-point config may still say steps=X with
    // unroll_steps=[Y], so normalize here.
    let spec = match config.model {
        ModelSpec::Lstm3 { channels, .. } => {
            ModelSpec::Lstm3 { channels, steps: config.unroll_steps[0] }
        }
        ref other => other.clone(),
    };

    let mut pool = SamplePool::load(&config.train_datasets)?;
    if let Some(size) = config.training_size {
        pool = subsample(pool, size, config.seed)?;
    }
    let n = pool.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need ≥ 2 pooled samples, found {n}")));
    }
    let n_val = ((n as f64 * config.validation_fraction).round() as usize).clamp(1, n - 1);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(config.seed, &[TAG_SPLIT]));
    let (train_idx, val_idx) = order.split_at(n - n_val);
    let train_idx = train_idx.to_vec();
    let val_idx = val_idx.to_vec();

    let mut model = Model::<f32>::build(&spec, config.seed)?;
    let shapes: Vec<Vec<usize>> = model.params().iter().map(|p| p.shape().to_vec()).collect();
    let mut optimizer = Optimizer::<f32>::new(config.optimizer, lr, &shapes);
    let mut grads = Gradients::zeros_like(&model.params());

    let point_dir = config.point_dir();
    fs::create_dir_all(&point_dir)?;
    let ckpt_path = point_dir.join(CHECKPOINT_FILE);

    let initial_train_loss = pool_loss(&model, &pool, &train_idx, config.batch_size)?;

    let mut epochs: Vec<EpochStats> = Vec::new();
    let mut post_epoch1_train_loss = f64::NAN;
    let mut best_val = f64::NEG_INFINITY;
    let mut selected_epoch = 0usize;
    let mut since_improvement = 0usize;

    for epoch in 1..=config.max_epochs {
        let mut ep_idx = train_idx.clone();
        ep_idx.shuffle(&mut stream(config.seed, &[TAG_EPOCH, epoch as u64]));

        let mut loss_sum = 0.0;
        for (b, chunk) in ep_idx.chunks(config.batch_size).enumerate() {
            let (x, y) = pool.batch(chunk);
            grads.zero();
            let loss = model.loss_and_grads(&x, &y, &mut grads)?;
            if !loss.is_finite() {
                return Err(Error::Diverged(format!(
                    "non-finite loss at epoch {epoch}, batch {b} (lr {lr})"
                )));
            }
            loss_sum += loss * chunk.len() as f64;
            let mut params = model.params_mut();
            optimizer.step(&mut params, &grads.tensors);
            if !model.params().iter().all(|t| t.all_finite()) {
                return Err(Error::Diverged(format!(
                    "non-finite parameter after epoch {epoch}, batch {b} (lr {lr})"
                )));
            }
        }
        let train_loss = loss_sum / ep_idx.len() as f64;
        if epoch == 1 {
            post_epoch1_train_loss = pool_loss(&model, &pool, &train_idx, config.batch_size)?;
        }
        let val_accuracy = pool_accuracy(&model, &pool, &val_idx, config.batch_size)?;
        epochs.push(EpochStats { train_loss, val_accuracy });

        if val_accuracy > best_val {
            best_val = val_accuracy;
            selected_epoch = epoch;
            since_improvement = 0;
            model.save(&ckpt_path)?;
        } else {
            since_improvement += 1;
            if since_improvement >= config.patience {
                break;
            }
        }
    }

    let record = RunRecord {
        config_hash: config.config_hash(),
        learning_rate: lr,
        unroll_steps: unroll,
        initial_train_loss,
        post_epoch1_train_loss,
        epochs,
        selected_epoch,
        best_val_accuracy: best_val,
        checkpoint: ckpt_path,
    };
    record.validate()?;
    write_run_artifacts(config, &record, &point_dir)?;
    Ok(record)
}

/// Keeps a seeded subsample of `size` pooled samples. The selection order is
/// drawn once from the seed, so smaller sizes are prefixes of larger ones.
fn subsample(pool: SamplePool, size: usize, seed: u64) -> Result<SamplePool> {
    if size > pool.len() {
        return Err(Error::InvalidInput(format!(
            "training_size {} exceeds pool of {}",
            size,
            pool.len()
        )));
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(&mut stream(seed, &[TAG_SUBSET]));
    order.truncate(size);
    let px = pool.side * pool.side;
    let mut pixels = Vec::with_capacity(size * px);
    let mut labels = Vec::with_capacity(size);
    for &i in &order {
        pixels.extend_from_slice(&pool.pixels[i * px..(i + 1) * px]);
        labels.push(pool.labels[i]);
    }
    Ok(SamplePool { side: pool.side, pixels, labels })
}

fn write_run_artifacts(config: &ExperimentConfig, record: &RunRecord, dir: &Path) -> Result<()> {
    let mut cfg_bytes = serde_json::to_vec_pretty(config)?;
    cfg_bytes.push(b'\n');
    fs::write(dir.join(POINT_CONFIG_FILE), cfg_bytes)?;

    let mut t = Table::new(vec!["epoch", "train_loss", "val_accuracy"]);
    for (i, e) in record.epochs.iter().enumerate() {
        t.push_row(vec![
            (i + 1).to_string(),
            fmt_f64(e.train_loss),
            fmt_f64(e.val_accuracy),
        ])?;
    }
    let meta = serde_json::json!({
        "kind": "run_record",
        "config_hash": record.config_hash,
        "learning_rate": record.learning_rate,
        "unroll_steps": record.unroll_steps,
        "initial_train_loss": record.initial_train_loss,
        "post_epoch1_train_loss": record.post_epoch1_train_loss,
        "selected_epoch": record.selected_epoch,
        "best_val_accuracy": record.best_val_accuracy,
        "checkpoint": CHECKPOINT_FILE,
        "arch": record_arch(config),
        "seed": config.seed,
    });
    write_table(&dir.join(EPOCHS_FILE), &t, &meta)
}

fn record_arch(config: &ExperimentConfig) -> &'static str {
    config.model.arch_name()
}

/// Reloads a [`RunRecord`] from a grid point directory written by [`train`].
pub fn read_run_record(point_dir: &Path) -> Result<RunRecord> {
    let csv = point_dir.join(EPOCHS_FILE);
    let t = read_table(&csv)?;
    let meta = read_metadata(&csv)?;
    let losses = t.f64_column("train_loss")?;
    let accs = t.f64_column("val_accuracy")?;
    let epochs = losses
        .into_iter()
        .zip(accs)
        .map(|(train_loss, val_accuracy)| EpochStats { train_loss, val_accuracy })
        .collect();
    let get = |key: &str| {
        meta.get(key).cloned().ok_or_else(|| {
            Error::InvalidInput(format!("run metadata is missing {key:?} in {}", csv.display()))
        })
    };
    let record = RunRecord {
        config_hash: get("config_hash")?.as_str().unwrap_or_default().to_string(),
        learning_rate: get("learning_rate")?.as_f64().unwrap_or(f64::NAN),
        unroll_steps: get("unroll_steps")?.as_u64().map(|v| v as usize),
        initial_train_loss: get("initial_train_loss")?.as_f64().unwrap_or(f64::NAN),
        post_epoch1_train_loss: get("post_epoch1_train_loss")?.as_f64().unwrap_or(f64::NAN),
        epochs,
        selected_epoch: get("selected_epoch")?.as_u64().unwrap_or(0) as usize,
        best_val_accuracy: get("best_val_accuracy")?.as_f64().unwrap_or(f64::NAN),
        checkpoint: point_dir.join(CHECKPOINT_FILE),
    };
    record.validate()?;
    Ok(record)
}

/// A grid point that aborted with a divergence diagnostic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailedPoint {
    pub config_hash: String,
    pub learning_rate: f64,
    pub unroll_steps: Option<usize>,
    pub message: String,
}

#[derive(Clone, Debug)]
pub enum PointOutcome {
    Completed(RunRecord),
    Failed(FailedPoint),
}

#[derive(Clone, Debug)]
pub struct GridSearchResult {
    /// The completed record with the highest validation accuracy; ties go to
    /// the smaller learning rate, then the smaller unrolling-step count.
    pub best: RunRecord,
    /// Every grid point in declaration order, completed or failed.
    pub outcomes: Vec<PointOutcome>,
}

/// Trains every grid point of `config` and selects the best record. Diverged
/// points are recorded, not fatal; only a grid with zero completed points is
/// an error. Writes a `grid.csv` summary under the config's output directory.
pub fn grid_search(config: &ExperimentConfig) -> Result<GridSearchResult> {
    let points = config.expand()?;
    let mut outcomes = Vec::with_capacity(points.len());
    for point in &points {
        match train(point) {
            Ok(record) => outcomes.push(PointOutcome::Completed(record)),
            Err(Error::Diverged(message)) => outcomes.push(PointOutcome::Failed(FailedPoint {
                config_hash: point.config_hash(),
                learning_rate: point.learning_rates[0],
                unroll_steps: point.unroll_steps.first().copied(),
                message,
            })),
            Err(other) => return Err(other),
        }
    }

    let mut best: Option<&RunRecord> = None;
    for outcome in &outcomes {
        if let PointOutcome::Completed(r) = outcome {
            best = Some(match best {
                None => r,
                Some(b) => {
                    if prefer_record(r, b) {
                        r
                    } else {
                        b
                    }
                }
            });
        }
    }
    let best = best
        .cloned()
        .ok_or_else(|| Error::Diverged(format!("all {} grid points failed", outcomes.len())))?;

    write_grid_summary(config, &outcomes, &best)?;
    Ok(GridSearchResult { best, outcomes })
}

/// True when `a` beats `b`: higher validation accuracy, ties broken by
/// smaller learning rate, then smaller unrolling-step count.
fn prefer_record(a: &RunRecord, b: &RunRecord) -> bool {
    if a.best_val_accuracy != b.best_val_accuracy {
        return a.best_val_accuracy > b.best_val_accuracy;
    }
    if a.learning_rate != b.learning_rate {
        return a.learning_rate < b.learning_rate;
    }
    match (a.unroll_steps, b.unroll_steps) {
        (Some(ta), Some(tb)) => ta < tb,
        _ => false,
    }
}

fn write_grid_summary(
    config: &ExperimentConfig,
    outcomes: &[PointOutcome],
    best: &RunRecord,
) -> Result<()> {
    let mut t = Table::new(vec![
        "config_hash",
        "learning_rate",
        "unroll_steps",
        "status",
        "best_val_accuracy",
        "selected_epoch",
        "epochs_run",
        "checkpoint",
        "message",
    ]);
    for outcome in outcomes {
        match outcome {
            PointOutcome::Completed(r) => t.push_row(vec![
                r.config_hash.clone(),
                fmt_f64(r.learning_rate),
                r.unroll_steps.map(|v| v.to_string()).unwrap_or_default(),
                "ok".to_string(),
                fmt_f64(r.best_val_accuracy),
                r.selected_epoch.to_string(),
                r.epochs.len().to_string(),
                r.checkpoint.display().to_string(),
                String::new(),
            ])?,
            PointOutcome::Failed(f) => t.push_row(vec![
                f.config_hash.clone(),
                fmt_f64(f.learning_rate),
                f.unroll_steps.map(|v| v.to_string()).unwrap_or_default(),
                "diverged".to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                f.message.clone(),
            ])?,
        }
    }
    let meta = serde_json::json!({
        "kind": "grid_summary",
        "base_config_hash": config.config_hash(),
        "points": outcomes.len(),
        "selected_config_hash": best.config_hash,
        "seed": config.seed,
    });
    fs::create_dir_all(&config.output_dir)?;
    write_table(&config.output_dir.join(GRID_FILE), &t, &meta)
}

/// Scores of one model on one dataset.
#[derive(Clone, Debug)]
pub struct Evaluation {
    /// Fraction of samples with `(p > 0.5) == label`.
    pub accuracy: f64,
    /// Per-sample symmetric-class probabilities, in dataset order.
    pub probabilities: Vec<f64>,
    pub labels: Vec<u8>,
}

/// Accuracy at decision threshold 0.5 (a probability of exactly 0.5 counts
/// as a prediction of the nonsymmetric class).
pub fn accuracy_from_probs(probs: &[f64], labels: &[u8]) -> f64 {
    assert_eq!(probs.len(), labels.len(), "one probability per label");
    let correct =
        probs.iter().zip(labels).filter(|&(p, &y)| (*p > 0.5) == (y == 1)).count();
    correct as f64 / probs.len().max(1) as f64
}

/// Runs `model` over a whole dataset and returns accuracy plus per-sample
/// probabilities for downstream analysis.
pub fn evaluate(model: &Model<f32>, dataset: &Dataset, batch_size: usize) -> Result<Evaluation> {
    if batch_size == 0 {
        return Err(Error::InvalidInput("batch_size must be ≥ 1".into()));
    }
    let side = dataset.side();
    let px = side * side;
    let mut probabilities = Vec::with_capacity(dataset.len());
    let mut start = 0usize;
    while start < dataset.len() {
        let end = (start + batch_size).min(dataset.len());
        let mut x = Tensor::<f32>::zeros(&[end - start, 1, side, side]);
        let xd = x.data_mut();
        for (bi, i) in (start..end).enumerate() {
            crate::models::unit_scale_into(dataset.image_bytes(i), &mut xd[bi * px..(bi + 1) * px]);
        }
        let probs = model.forward(&x)?;
        probabilities.extend(probs.iter().map(|p| p.to_f64_lossy()));
        start = end;
    }
    let labels = dataset.labels().to_vec();
    let accuracy = accuracy_from_probs(&probabilities, &labels);
    Ok(Evaluation { accuracy, probabilities, labels })
}

/// Persists per-sample predictions as CSV (+ metadata sidecar).
pub fn write_predictions(path: &Path, eval: &Evaluation, meta: &serde_json::Value) -> Result<()> {
    let mut t = Table::new(vec!["index", "label", "probability"]);
    for (i, (&y, &p)) in eval.labels.iter().zip(&eval.probabilities).enumerate() {
        t.push_row(vec![i.to_string(), y.to_string(), fmt_f64(p)])?;
    }
    write_table(path, &t, meta)
}

/// One row of a cross-dataset accuracy table.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyAccuracy {
    pub family: String,
    pub n: usize,
    pub accuracy: f64,
}

/// Evaluates one trained model on each family dataset directory, in the
/// given order. These families were never visible to training or selection:
/// the experiment config has no test-dataset field at all.
pub fn cross_dataset_table(
    model: &Model<f32>,
    family_dirs: &[PathBuf],
    batch_size: usize,
) -> Result<Vec<FamilyAccuracy>> {
    let mut rows = Vec::with_capacity(family_dirs.len());
    for dir in family_dirs {
        let ds = load_dataset(dir)?;
        let eval = evaluate(model, &ds, batch_size)?;
        rows.push(FamilyAccuracy {
            family: ds.manifest.family.slug(),
            n: ds.len(),
            accuracy: eval.accuracy,
        });
    }
    Ok(rows)
}

/// Renders cross-dataset accuracies as a table.
pub fn family_accuracy_table(rows: &[FamilyAccuracy]) -> Table {
    let mut t = Table::new(vec!["family", "n", "accuracy"]);
    for r in rows {
        t.push_row(vec![r.family.clone(), r.n.to_string(), fmt_f64(r.accuracy)])
            .expect("fixed arity");
    }
    t
}

/// Trains one model per training-set size (same seed discipline throughout)
/// and scores each on the given family datasets. Returns — and writes under
/// the config's output directory — a long-form table of per-family accuracy
/// versus size.
pub fn training_size_sweep(
    base: &ExperimentConfig,
    sizes: &[usize],
    eval_dirs: &[PathBuf],
) -> Result<Table> {
    base.validate()?;
    if !base.is_single_point() {
        return Err(Error::InvalidSpec(
            "training_size_sweep holds hyper-parameters fixed; pass a single-point config".into(),
        ));
    }
    if sizes.is_empty() {
        return Err(Error::InvalidSpec("sizes must be non-empty".into()));
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidSpec("training size 0 is not a training set".into()));
    }
    if sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidSpec(format!("sizes must be ascending, got {sizes:?}")));
    }

    let mut t = Table::new(vec!["size", "family", "n", "accuracy"]);
    for &size in sizes {
        let mut cfg = base.clone();
        cfg.training_size = Some(size);
        let record = train(&cfg)?;
        let model = Model::<f32>::load(&record.checkpoint)?;
        for row in cross_dataset_table(&model, eval_dirs, cfg.batch_size)? {
            t.push_row(vec![
                size.to_string(),
                row.family,
                row.n.to_string(),
                fmt_f64(row.accuracy),
            ])?;
        }
    }
    let meta = serde_json::json!({
        "kind": "size_sweep",
        "base_config_hash": base.config_hash(),
        "sizes": sizes,
        "seed": base.seed,
    });
    write_table(&base.output_dir.join("size_sweep.csv"), &t, &meta)?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imggen::{build_dataset, left_right_correlation, Brightness, DatasetManifest, FamilySpec};
    use crate::models::{build_attention, build_conv_ff, build_dilated, build_lstm3};
    use rand::Rng;
    use std::fs;

    /// Builds a band dataset directory and returns its path.
    fn band_dir(
        root: &Path,
        name: &str,
        width: u8,
        brightness: Brightness,
        count: usize,
        balance: f64,
        seed: u64,
    ) -> PathBuf {
        let dir = root.join(name);
        let mut m = DatasetManifest::new(FamilySpec::band(width, brightness, true), count, seed);
        m.balance = balance;
        build_dataset(&m, &dir).unwrap();
        dir
    }

    fn base_config(model: ModelSpec, dirs: Vec<PathBuf>, out: PathBuf) -> ExperimentConfig {
        ExperimentConfig {
            model,
            train_datasets: dirs,
            validation_fraction: 0.2,
            learning_rates: vec![1e-2],
            unroll_steps: vec![],
            batch_size: 16,
            max_epochs: 3,
            patience: 10,
            optimizer: OptimizerKind::Adam,
            seed: 11,
            training_size: None,
            output_dir: out,
        }
    }

    #[test]
    fn config_validation_catches_bad_fields() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = band_dir(tmp.path(), "d", 4, Brightness::Bright, 32, 0.5, 1);
        let ok = base_config(build_conv_ff(2, 2), vec![ds.clone()], tmp.path().join("out"));
        assert!(ok.validate().is_ok());

        let mut c = ok.clone();
        c.learning_rates.clear();
        assert!(c.validate().is_err(), "empty learning-rate grid");
        let mut c = ok.clone();
        c.learning_rates = vec![-1.0];
        assert!(c.validate().is_err(), "negative learning rate");
        let mut c = ok.clone();
        c.validation_fraction = 0.0;
        assert!(c.validate().is_err(), "zero validation fraction");
        let mut c = ok.clone();
        c.validation_fraction = 1.0;
        assert!(c.validate().is_err(), "unit validation fraction");
        let mut c = ok.clone();
        c.batch_size = 0;
        assert!(c.validate().is_err(), "zero batch");
        let mut c = ok.clone();
        c.max_epochs = 0;
        assert!(c.validate().is_err(), "zero epochs");
        let mut c = ok.clone();
        c.patience = 0;
        assert!(c.validate().is_err(), "zero patience");
        let mut c = ok.clone();
        c.training_size = Some(0);
        assert!(c.validate().is_err(), "size-0 training set");
        let mut c = ok.clone();
        c.train_datasets.clear();
        assert!(c.validate().is_err(), "no datasets");
        // Unroll grid rules: required for the recurrent model, forbidden otherwise.
        let mut c = ok.clone();
        c.unroll_steps = vec![5];
        assert!(c.validate().is_err(), "unroll grid on a feed-forward model");
        let mut c = ok.clone();
        c.model = build_lstm3(2, 5);
        assert!(c.validate().is_err(), "recurrent model without unroll grid");
        c.unroll_steps = vec![5, 10];
        assert!(c.validate().is_ok());
        c.unroll_steps = vec![0];
        assert!(c.validate().is_err(), "zero unroll steps");
    }

    #[test]
    fn config_json_rejects_unknown_keys_and_fills_defaults() {
        let json = r#"{
            "model": {"arch": "conv_ff", "channels": 4, "depth": 3},
            "train_datasets": ["data/band0"],
            "seed": 7,
            "output_dir": "runs/x"
        }"#;
        let c: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.validation_fraction, 0.05);
        assert_eq!(c.learning_rates, vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5]);
        assert_eq!(c.batch_size, 32);
        assert_eq!(c.max_epochs, 50);
        assert_eq!(c.patience, 10);
        assert_eq!(c.optimizer, OptimizerKind::Adam);
        assert_eq!(c.training_size, None);

        let bad = json.replace("\"seed\": 7", "\"seed\": 7, \"learning_rate\": 0.1");
        let err = serde_json::from_str::<ExperimentConfig>(&bad);
        assert!(err.is_err(), "unknown key must be an error, not a warning");
    }

    #[test]
    fn config_hash_ignores_output_dir_and_separates_grid_points() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = band_dir(tmp.path(), "d", 0, Brightness::Bright, 32, 0.5, 1);
        let a = base_config(build_conv_ff(2, 2), vec![ds.clone()], tmp.path().join("out_a"));
        let mut b = a.clone();
        b.output_dir = tmp.path().join("somewhere_else");
        assert_eq!(a.config_hash(), b.config_hash());

        let mut c = a.clone();
        c.learning_rates = vec![1e-3];
        assert_ne!(a.config_hash(), c.config_hash());
        let mut d = a.clone();
        d.seed = 12;
        assert_ne!(a.config_hash(), d.config_hash());
        let mut e = a.clone();
        e.training_size = Some(16);
        assert_ne!(a.config_hash(), e.config_hash());
    }

    #[test]
    fn grid_expansion_crosses_learning_rates_with_unroll_steps() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = band_dir(tmp.path(), "d", 0, Brightness::Bright, 32, 0.5, 1);
        let mut c = base_config(build_lstm3(2, 5), vec![ds.clone()], tmp.path().join("out"));
        c.learning_rates = vec![1e-2, 1e-3];
        c.unroll_steps = vec![5, 10];
        let points = c.expand().unwrap();
        assert_eq!(points.len(), 4);
        assert!(points.iter().all(|p| p.is_single_point()));
        let coords: Vec<(f64, usize)> =
            points.iter().map(|p| (p.learning_rates[0], p.unroll_steps[0])).collect();
        assert_eq!(coords, vec![(1e-2, 5), (1e-2, 10), (1e-3, 5), (1e-3, 10)]);
        // Each point's model spec carries that point's unrolling depth.
        for p in &points {
            match p.model {
                ModelSpec::Lstm3 { steps, .. } => assert_eq!(steps, p.unroll_steps[0]),
                _ => unreachable!(),
            }
        }
        // Feed-forward grids expand over learning rate only.
        let mut c = base_config(build_conv_ff(2, 2), vec![ds], tmp.path().join("out2"));
        c.learning_rates = vec![1e-2, 1e-3, 1e-4];
        assert_eq!(c.expand().unwrap().len(), 3);
    }

    #[test]
    fn constant_label_dataset_reaches_perfect_validation_within_two_epochs() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = band_dir(tmp.path(), "all_sym", 4, Brightness::Bright, 160, 1.0, 3);
        let archs: Vec<(ModelSpec, Vec<usize>)> = vec![
            (build_conv_ff(2, 2), vec![]),
            (build_dilated(2), vec![]),
            (build_lstm3(2, 2), vec![2]),
            (build_attention(4, 8, 1), vec![]),
        ];
        for (spec, unroll) in archs {
            let name = spec.arch_name();
            let mut c = base_config(spec, vec![ds.clone()], tmp.path().join(format!("out_{name}")));
            c.max_epochs = 2;
            c.unroll_steps = unroll;
            let record = train(&c).unwrap();
            assert_eq!(
                record.best_val_accuracy, 1.0,
                "{name} should hit validation accuracy 1.0 on a constant-label set, got {:?}",
                record.epochs
            );
            assert!(record.selected_epoch <= 2);
        }
    }

    #[test]
    fn identical_configs_reproduce_records_and_checkpoints_bit_for_bit() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = band_dir(tmp.path(), "d", 0, Brightness::Bright, 120, 0.5, 5);
        let mut a = base_config(build_conv_ff(2, 2), vec![ds.clone()], tmp.path().join("out_a"));
        a.max_epochs = 3;
        let mut b = a.clone();
        b.output_dir = tmp.path().join("out_b");

        let ra = train(&a).unwrap();
        let rb = train(&b).unwrap();
        assert_eq!(ra.config_hash, rb.config_hash);
        assert_eq!(ra.epochs, rb.epochs);
        assert_eq!(ra.selected_epoch, rb.selected_epoch);
        assert_eq!(
            fs::read(&ra.checkpoint).unwrap(),
            fs::read(&rb.checkpoint).unwrap(),
            "checkpoints must be bit-identical"
        );
        assert_eq!(
            fs::read(a.point_dir().join(EPOCHS_FILE)).unwrap(),
            fs::read(b.point_dir().join(EPOCHS_FILE)).unwrap()
        );
        // A different seed takes a different path.
        let mut c = a.clone();
        c.seed = 6;
        c.output_dir = tmp.path().join("out_c");
        let rc = train(&c).unwrap();
        assert_ne!(ra.epochs, rc.epochs);
    }

    #[test]
    fn run_records_round_trip_through_the_point_directory() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = band_dir(tmp.path(), "d", 0, Brightness::Bright, 80, 0.5, 5);
        let mut c = base_config(build_conv_ff(2, 2), vec![ds], tmp.path().join("out"));
        c.max_epochs = 2;
        let record = train(&c).unwrap();
        let back = read_run_record(&c.point_dir()).unwrap();
        assert_eq!(record, back);
    }

    /// One converged small run, reused for several contract checks.
    ///
    /// The fixture labels align with a plain luminance cue (band0 at balance 0
    /// vs band18 at balance 1, so "symmetric" ⇔ "wide mid-gray band"), which a
    /// tiny net learns in a couple of epochs. Mirror equality itself needs
    /// orders of magnitude more data and steps to move off chance, so it is
    /// exercised by the long-run acceptance suite, not unit tests.
    #[test]
    fn converged_run_satisfies_loss_and_selection_invariants() {
        let tmp = tempfile::tempdir().unwrap();
        let d0 = band_dir(tmp.path(), "band0", 0, Brightness::Bright, 1200, 0.0, 21);
        let d18 = band_dir(tmp.path(), "band18", 18, Brightness::Bright, 1200, 1.0, 22);
        let mut c = base_config(
            build_dilated(4),
            vec![d0.clone(), d18.clone()],
            tmp.path().join("out"),
        );
        c.learning_rates = vec![1e-2];
        c.batch_size = 32;
        c.max_epochs = 8;
        c.patience = 3;
        c.validation_fraction = 0.1;
        let record = train(&c).unwrap();

        // Loss sanity: after one epoch the training loss beats initialization.
        assert!(
            record.post_epoch1_train_loss < record.initial_train_loss,
            "post-epoch-1 loss {} should undercut initial loss {}",
            record.post_epoch1_train_loss,
            record.initial_train_loss
        );
        // Monotone bookkeeping: best-so-far accuracy never decreases, and the
        // selected epoch is exactly the argmax.
        let mut best = f64::NEG_INFINITY;
        let mut argmax = 0;
        for (i, e) in record.epochs.iter().enumerate() {
            if e.val_accuracy > best {
                best = e.val_accuracy;
                argmax = i + 1;
            }
        }
        assert_eq!(record.selected_epoch, argmax);
        assert_eq!(record.best_val_accuracy, best);
        assert!(best >= 0.9, "wide-field stack should learn the training families, got {best}");

        // The checkpointed model scores about as well on its own training
        // pool as on validation (no selection leakage, no stale checkpoint).
        let model = Model::<f32>::load(&record.checkpoint).unwrap();
        let pool = SamplePool::load(&c.train_datasets).unwrap();
        let idxs: Vec<usize> = (0..pool.len()).collect();
        let train_acc = pool_accuracy(&model, &pool, &idxs, 64).unwrap();
        assert!(
            train_acc >= record.best_val_accuracy - 0.02,
            "training-pool accuracy {train_acc} far below validation {}",
            record.best_val_accuracy
        );

        // Cross-dataset scoring on the training families agrees with the pool.
        let rows = cross_dataset_table(&model, &[d0, d18], 64).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].family, "band0");
        assert_eq!(rows[1].family, "band18");
        for r in &rows {
            assert!(r.accuracy >= 0.85, "{} at {}", r.family, r.accuracy);
            assert_eq!(r.n, 1200);
        }
    }

    #[test]
    fn grid_ties_prefer_smaller_learning_rate_then_fewer_steps() {
        let tmp = tempfile::tempdir().unwrap();
        // Constant labels: every grid point lands at validation accuracy 1.0.
        let ds = band_dir(tmp.path(), "all_sym", 4, Brightness::Bright, 96, 1.0, 9);
        let mut c = base_config(build_lstm3(2, 2), vec![ds], tmp.path().join("out"));
        c.learning_rates = vec![1e-2, 1e-3];
        c.unroll_steps = vec![2, 1];
        c.max_epochs = 2;
        let result = grid_search(&c).unwrap();
        assert_eq!(result.outcomes.len(), 4);
        assert_eq!(result.best.best_val_accuracy, 1.0);
        assert_eq!(result.best.learning_rate, 1e-3, "ties go to the smaller learning rate");
        assert_eq!(result.best.unroll_steps, Some(1), "then to fewer unrolling steps");
        // The summary table exists and lists every point as completed.
        let grid = read_table(&c.output_dir.join(GRID_FILE)).unwrap();
        assert_eq!(grid.len(), 4);
        assert!(grid.str_column("status").unwrap().iter().all(|s| s == "ok"));
    }

    #[test]
    fn diverged_points_are_recorded_while_the_grid_survives() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = band_dir(tmp.path(), "d", 4, Brightness::Bright, 64, 0.5, 13);
        // A deep rectified stack overflows to non-finite values under an
        // absurd SGD rate (shallow stacks just die into a zero-activation
        // fixed point instead, and the gated recurrent model saturates).
        let mut c = base_config(build_dilated(2), vec![ds.clone()], tmp.path().join("out"));
        c.optimizer = OptimizerKind::Sgd;
        c.learning_rates = vec![1e10, 1e-2];
        c.max_epochs = 2;
        let result = grid_search(&c).unwrap();
        assert_eq!(result.outcomes.len(), 2);
        match &result.outcomes[0] {
            PointOutcome::Failed(f) => {
                assert_eq!(f.learning_rate, 1e10);
                assert!(f.message.contains("epoch"), "diagnostic names the epoch: {}", f.message);
            }
            PointOutcome::Completed(_) => panic!("lr 1e10 should diverge under SGD"),
        }
        assert_eq!(result.best.learning_rate, 1e-2);
        let grid = read_table(&c.output_dir.join(GRID_FILE)).unwrap();
        assert_eq!(grid.str_column("status").unwrap(), vec!["diverged", "ok"]);

        // A grid whose every point diverges is an explicit error.
        let mut dead = c.clone();
        dead.learning_rates = vec![1e10];
        dead.output_dir = tmp.path().join("out_dead");
        match grid_search(&dead) {
            Err(Error::Diverged(msg)) => assert!(msg.contains("all 1 grid points")),
            other => panic!("expected an all-failed error, got {other:?}"),
        }
    }

    #[test]
    fn training_never_touches_families_outside_its_config() {
        let tmp = tempfile::tempdir().unwrap();
        let train_dir = band_dir(tmp.path(), "band0", 0, Brightness::Bright, 96, 0.5, 31);
        // The held-out family does not even exist on disk while training
        // runs, so reading it is impossible rather than merely forbidden.
        let mut c = base_config(build_conv_ff(2, 2), vec![train_dir], tmp.path().join("out"));
        c.max_epochs = 2;
        let record = train(&c).unwrap();

        let test_dir = band_dir(tmp.path(), "band14", 14, Brightness::Bright, 64, 0.5, 32);
        let model = Model::<f32>::load(&record.checkpoint).unwrap();
        let rows = cross_dataset_table(&model, &[test_dir], 32).unwrap();
        assert_eq!(rows[0].family, "band14");
        assert_eq!(rows[0].n, 64);
    }

    #[test]
    fn accuracy_stubs_behave_like_their_distributions() {
        // Perfect-probability stub.
        let labels: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        let perfect: Vec<f64> = labels.iter().map(|&y| y as f64).collect();
        assert_eq!(accuracy_from_probs(&perfect, &labels), 1.0);

        // A probability of exactly 0.5 predicts the nonsymmetric class.
        assert_eq!(accuracy_from_probs(&[0.5], &[0]), 1.0);
        assert_eq!(accuracy_from_probs(&[0.5], &[1]), 0.0);

        // Coin-flip stub on balanced data, N = 10⁴: accuracy 0.5 ± 0.015 (3σ).
        let n = 10_000;
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let mut rng = stream(99, &[0xC0]);
        let flips: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let acc = accuracy_from_probs(&flips, &labels);
        assert!((acc - 0.5).abs() <= 0.015, "coin-flip accuracy {acc}");
    }

    #[test]
    fn flank_correlation_stub_is_perfect_on_every_synthetic_family() {
        let tmp = tempfile::tempdir().unwrap();
        let families = vec![
            FamilySpec::band(0, Brightness::Bright, true),
            FamilySpec::band(4, Brightness::Bright, true),
            FamilySpec::band(4, Brightness::Dark, true),
            FamilySpec::band(14, Brightness::Bright, true),
            FamilySpec::stripe(2, true),
            FamilySpec::stripe(10, true),
        ];
        for (k, fam) in families.into_iter().enumerate() {
            let dir = tmp.path().join(format!("f{k}"));
            let m = DatasetManifest::new(fam, 100, 40 + k as u64);
            let ds = build_dataset(&m, &dir).unwrap();
            // The stub knows the family's band width and thresholds the
            // left/right flank correlation — an oracle over the generator.
            let band = ds.manifest.family.band_width as usize;
            let probs: Vec<f64> = (0..ds.len())
                .map(|i| {
                    let corr = left_right_correlation(&ds.image(i), band).unwrap();
                    if corr >= 0.99 {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            let acc = accuracy_from_probs(&probs, ds.labels());
            assert_eq!(acc, 1.0, "family {}", ds.manifest.family.slug());
        }
    }

    #[test]
    fn untrained_model_scores_at_chance_on_balanced_data() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = band_dir(tmp.path(), "d", 0, Brightness::Bright, 10_000, 0.5, 55);
        let ds = load_dataset(&dir).unwrap();
        let model = Model::<f32>::build(&build_conv_ff(4, 3), 123).unwrap();
        let eval = evaluate(&model, &ds, 64).unwrap();
        assert!(
            (0.45..=0.55).contains(&eval.accuracy),
            "untrained accuracy {} should be near chance",
            eval.accuracy
        );
        assert_eq!(eval.probabilities.len(), 10_000);
    }

    #[test]
    fn predictions_persist_with_metadata() {
        let tmp = tempfile::tempdir().unwrap();
        let eval = Evaluation {
            accuracy: 0.5,
            probabilities: vec![0.25, 0.75],
            labels: vec![0, 1],
        };
        let path = tmp.path().join("preds.csv");
        write_predictions(&path, &eval, &serde_json::json!({"kind": "predictions"})).unwrap();
        let t = read_table(&path).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.f64_column("probability").unwrap(), vec![0.25, 0.75]);
    }

    #[test]
    fn size_sweep_validates_sizes_and_reproduces_duplicates() {
        let tmp = tempfile::tempdir().unwrap();
        let train_dir = band_dir(tmp.path(), "band0", 0, Brightness::Bright, 200, 0.5, 61);
        let eval_dir = band_dir(tmp.path(), "band0_eval", 0, Brightness::Bright, 64, 0.5, 62);
        let mut base = base_config(build_conv_ff(2, 2), vec![train_dir], tmp.path().join("out"));
        base.max_epochs = 2;
        base.validation_fraction = 0.25;

        assert!(training_size_sweep(&base, &[], &[eval_dir.clone()]).is_err());
        assert!(training_size_sweep(&base, &[0, 64], &[eval_dir.clone()]).is_err());
        assert!(training_size_sweep(&base, &[128, 64], &[eval_dir.clone()]).is_err());
        // A grid config is rejected: the sweep holds hyper-parameters fixed.
        let mut grid = base.clone();
        grid.learning_rates = vec![1e-2, 1e-3];
        assert!(training_size_sweep(&grid, &[64], &[eval_dir.clone()]).is_err());

        let t = training_size_sweep(&base, &[64, 64, 128], &[eval_dir]).unwrap();
        assert_eq!(t.len(), 3);
        let sizes = t.str_column("size").unwrap();
        assert_eq!(sizes, vec!["64", "64", "128"]);
        let accs = t.f64_column("accuracy").unwrap();
        assert_eq!(accs[0], accs[1], "duplicate sizes share seeds, so accuracies match");
        // Oversized request fails cleanly.
        assert!(training_size_sweep(&base, &[4096], &[]).is_err());
    }
}
