//! Scratch probe: can the stack fit the mirror task at all?
//!
//! Phase 1 (overfit check): tiny train pool, many epochs, several learning
//! rates — if train accuracy never leaves chance the machinery is broken;
//! if it overfits, the task is a data/steps question, not a gradient bug.
//! Phase 2: desk-sized pool at the most promising rates.

use std::path::PathBuf;
use std::time::Instant;

use symlab_core::imggen::{build_dataset, load_dataset, Brightness, DatasetManifest, FamilySpec};
use symlab_core::models::{Model, ModelSpec};
use symlab_core::training::{cross_dataset_table, train, ExperimentConfig};

fn dataset(root: &PathBuf, name: &str, width: u8, count: usize, seed: u64) -> PathBuf {
    let dir = root.join(name);
    let manifest = DatasetManifest::new(FamilySpec::band(width, Brightness::Bright, true), count, seed);
    if load_dataset(&dir).map(|d| d.manifest == manifest).unwrap_or(false) {
        return dir;
    }
    build_dataset(&manifest, &dir).unwrap();
    dir
}

fn run(tag: &str, model: ModelSpec, dirs: Vec<PathBuf>, lr: f64, epochs: usize, unroll: Vec<usize>, out: PathBuf) {
    let c = ExperimentConfig {
        model,
        train_datasets: dirs,
        validation_fraction: 0.1,
        learning_rates: vec![lr],
        unroll_steps: unroll,
        batch_size: 32,
        max_epochs: epochs,
        patience: epochs,
        optimizer: Default::default(),
        seed: 1,
        training_size: None,
        output_dir: out,
    };
    let t0 = Instant::now();
    let dirs = c.train_datasets.clone();
    match train(&c) {
        Ok(rec) => {
            let model = Model::<f32>::load(&rec.checkpoint).unwrap();
            let rows = cross_dataset_table(&model, &dirs, 64).unwrap();
            let train_acc: f64 =
                rows.iter().map(|r| r.accuracy).sum::<f64>() / rows.len() as f64;
            let tail: Vec<String> = rec
                .epochs
                .iter()
                .map(|e| format!("{:.3}/{:.3}", e.train_loss, e.val_accuracy))
                .collect();
            println!(
                "{tag} lr={lr}: TRAIN_ACC={train_acc:.3} best_val={:.3} @epoch {} ({} s)\n    loss/val per epoch: {}",
                rec.best_val_accuracy,
                rec.selected_epoch,
                t0.elapsed().as_secs(),
                tail.join(" ")
            );
        }
        Err(e) => println!("{tag} lr={lr}: ERROR {e} ({} s)", t0.elapsed().as_secs()),
    }
}

fn main() {
    let root = PathBuf::from("target/probe_data");
    std::fs::create_dir_all(&root).unwrap();
    let out_root = PathBuf::from("target/probe_out_lstm");
    let _ = std::fs::remove_dir_all(&out_root);

    // Learning-rate recon for the recurrent model at small data scale:
    // 1000+1000 band {0,4} samples, T=30, 16 channels, 6 epochs per rate.
    let small0 = dataset(&root, "small_band0", 0, 1000, 300);
    let small4 = dataset(&root, "small_band4", 4, 1000, 301);
    for lr in [1e-3] {
        run(
            "recon lstm3-16 T=30",
            ModelSpec::Lstm3 { channels: 16, steps: 30 },
            vec![small0.clone(), small4.clone()],
            lr,
            6,
            vec![30],
            out_root.join(format!("recon_{lr}")),
        );
    }
}
