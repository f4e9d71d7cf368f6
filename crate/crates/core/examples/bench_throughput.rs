//! Wall-clock throughput probe for the training-relevant models.
//!
//! Measures seconds per optimizer-step-sized batch so experiment budgets can
//! be planned from measured numbers rather than guesses.

use std::time::Instant;

use symlab_core::engine::{Differentiable, Gradients};
use symlab_core::models::{build_attention, build_conv_ff, build_dilated, build_lstm3, Model};
use symlab_core::rng::stream;
use symlab_core::tensor::Tensor;

fn random_batch(n: usize, side: usize) -> Tensor<f32> {
    use rand::Rng;
    let mut rng = stream(77, &[1]);
    let mut t = Tensor::zeros(&[n, 1, side, side]);
    for v in t.data_mut().iter_mut() {
        *v = rng.gen_range(0.0f32..1.0);
    }
    t
}

fn bench(name: &str, model: &Model<f32>, batch: &Tensor<f32>, labels: &[u8], iters: usize) {
    let mut grads = Gradients::zeros_like(&model.params());
    // Warm-up.
    grads.zero();
    model.loss_and_grads(batch, labels, &mut grads).unwrap();
    let start = Instant::now();
    for _ in 0..iters {
        grads.zero();
        model.loss_and_grads(batch, labels, &mut grads).unwrap();
    }
    let per_batch = start.elapsed().as_secs_f64() / iters as f64;
    // 2e4 samples, 95% train split, batch 32.
    let batches_per_epoch = (20_000.0 * 0.95_f64 / 32.0).ceil();
    println!(
        "{name:<22} {per_batch:>8.4} s/batch(32)   epoch(19k): {:>7.1} s   50 epochs: {:>6.1} min",
        per_batch * batches_per_epoch,
        per_batch * batches_per_epoch * 50.0 / 60.0
    );
}

fn main() {
    let n = 32;
    let batch = random_batch(n, 20);
    let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();

    let specs = vec![
        ("dilated-32ch", build_dilated(32)),
        ("dilated-16ch", build_dilated(16)),
        ("conv_ff-32ch-d7", build_conv_ff(32, 7)),
        ("lstm3-16ch-T30", build_lstm3(16, 30)),
        ("lstm3-16ch-T10", build_lstm3(16, 10)),
        ("lstm3-16ch-T5", build_lstm3(16, 5)),
        ("attention-p4-d32-L2", build_attention(4, 32, 2)),
    ];
    for (name, spec) in &specs {
        let model = Model::<f32>::build(spec, 7).unwrap();
        let iters = if name.contains("T30") { 3 } else { 6 };
        bench(name, &model, &batch, &labels, iters);
    }
}
