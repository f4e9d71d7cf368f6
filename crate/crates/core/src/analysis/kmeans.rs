//! K-means clustering of hidden activation maps.
//!
//! The recurrent model's cell-3 hidden state is a stack of channel maps per
//! sample; averaging over channels gives one "aggregated" spatial map per
//! image. Clustering those maps (per class, at chosen unroll depths) shows
//! which spatial evidence patterns the model has settled into at that point
//! of the computation. The clustering itself is plain Lloyd's algorithm from
//! a k-means++ start, deterministic for a given seed.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::imggen::Dataset;
use crate::models::{Model, ModelSpec};
use crate::table::{fmt_f64, write_table, Table};

/// Stream tag for the clustering RNG, far from per-tensor init indices.
const TAG_KMEANS: u64 = 0x4b4d_4541_4e53; // "KMEANS"

/// Maximum Lloyd iterations before giving up on an assignment fixpoint.
const MAX_ITERS: usize = 300;

/// Result of one k-means run.
#[derive(Clone, Debug)]
pub struct KmeansFit {
    /// `k` centroids, each of the input dimensionality.
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    /// Final sum of squared distances from each point to its centroid.
    pub inertia: f64,
    /// Lloyd iterations performed (assignment/update cycles).
    pub iterations: usize,
    /// Inertia after each assignment step; non-increasing.
    pub inertia_trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: first centroid uniform, then each next centroid drawn
/// with probability proportional to the squared distance to the nearest
/// centroid chosen so far. If every remaining point coincides with a chosen
/// centroid (total weight zero), the smallest-index unchosen point is taken.
fn seed_centroids(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut rng = crate::rng::stream(seed, &[TAG_KMEANS]);
    let mut chosen_idx = Vec::with_capacity(k);
    let first = rng.gen_range(0..n);
    chosen_idx.push(first);

    // Squared distance from each point to its nearest chosen centroid.
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while chosen_idx.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let r = rng.gen_range(0.0..total);
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > r {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // Degenerate geometry: duplicate points collapse every weight.
            (0..n)
                .find(|i| !chosen_idx.contains(i))
                .expect("k ≤ n guarantees an unchosen point exists")
        };
        chosen_idx.push(next);
        for (i, p) in points.iter().enumerate() {
            let d = sq_dist(p, &points[next]);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    chosen_idx.into_iter().map(|i| points[i].clone()).collect()
}

/// Lloyd's k-means from a k-means++ start.
///
/// Runs until the assignment reaches a fixpoint or 300 iterations. Ties in
/// the assignment go to the smaller cluster index; a cluster that loses all
/// its points keeps its previous centroid. Deterministic for a given seed.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KmeansFit> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be ≥ 1".into()));
    }
    if points.len() < k {
        return Err(Error::InvalidInput(format!(
            "k-means needs at least k points, got {} points for k = {k}",
            points.len()
        )));
    }
    let dim = points[0].len();
    if dim == 0 {
        return Err(Error::InvalidInput("points must have at least one coordinate".into()));
    }
    if let Some(bad) = points.iter().position(|p| p.len() != dim) {
        return Err(Error::shape(format!("{dim}-dimensional points"), format!("point {bad} has {} coordinates", points[bad].len())));
    }

    let mut centroids = seed_centroids(points, k, seed);
    let mut assignments = vec![usize::MAX; points.len()];
    let mut inertia_trace = Vec::new();

    for _ in 0..MAX_ITERS {
        // Assignment step (ties → smaller index via strict `<`).
        let mut changed = false;
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = sq_dist(p, &centroids[0]);
            for (c, cent) in centroids.iter().enumerate().skip(1) {
                let d = sq_dist(p, cent);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
            inertia += best_d;
        }
        inertia_trace.push(inertia);
        if !changed {
            break;
        }

        // Update step: empty clusters keep their previous centroid.
        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, &x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (cent, s) in centroids[c].iter_mut().zip(&sums[c]) {
                    *cent = s / counts[c] as f64;
                }
            }
        }
    }

    let inertia = *inertia_trace.last().unwrap();
    Ok(KmeansFit {
        centroids,
        assignments,
        inertia,
        iterations: inertia_trace.len(),
        inertia_trace,
    })
}

/// One channel-averaged hidden map per dataset image.
///
/// For each image, runs the recurrent model for `t_prime` steps and averages
/// cell 3's hidden maps over channels, yielding a side×side spatial map
/// (flattened). Returns the maps together with the dataset labels so callers
/// can cluster each class separately.
pub fn aggregated_hidden_maps(
    model: &Model<f32>,
    dataset: &Dataset,
    t_prime: usize,
) -> Result<(Vec<Vec<f64>>, Vec<u8>)> {
    let channels = match model.spec() {
        ModelSpec::Lstm3 { channels, steps } => {
            if t_prime < 1 || t_prime > steps {
                return Err(Error::InvalidInput(format!(
                    "unroll depth {t_prime} outside the trained range 1..={steps}"
                )));
            }
            channels
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "hidden-map clustering needs an lstm3 model, got {}",
                other.arch_name()
            )))
        }
    };
    let side = dataset.side();
    let px = side * side;
    let mut maps = Vec::with_capacity(dataset.len());
    for i in 0..dataset.len() {
        let scaled: Vec<f32> = crate::models::unit_scale(dataset.image_bytes(i));
        let hidden = model.hidden_at_timestep(&scaled, side, t_prime)?;
        debug_assert_eq!(hidden.len(), channels * px);
        let mut map = vec![0.0f64; px];
        for c in 0..channels {
            for (m, &h) in map.iter_mut().zip(&hidden[c * px..(c + 1) * px]) {
                *m += h as f64;
            }
        }
        for m in &mut map {
            *m /= channels as f64;
        }
        maps.push(map);
    }
    Ok((maps, dataset.labels().to_vec()))
}

/// Persists centroids as CSV: `cluster, size, x0..x{d−1}` (+ JSON sidecar).
pub fn write_kmeans_centroids(path: &Path, fit: &KmeansFit, meta: &serde_json::Value) -> Result<()> {
    let dim = fit.centroids.first().map_or(0, Vec::len);
    let mut header = vec!["cluster".to_string(), "size".to_string()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    let mut table = Table::new(header);
    for (c, cent) in fit.centroids.iter().enumerate() {
        let size = fit.assignments.iter().filter(|&&a| a == c).count();
        let mut cells = vec![c.to_string(), size.to_string()];
        cells.extend(cent.iter().map(|&v| fmt_f64(v)));
        table.push_row(cells)?;
    }
    write_table(path, &table, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imggen::{build_dataset, DatasetManifest, FamilySpec};
    use crate::models::build_lstm3;
    use crate::table::read_table;
    use rand::Rng;

    /// 10 well-separated blobs: blob b sits at 50·e_b in 10-D with ±0.5
    /// uniform jitter, so inter-blob distance (≈70) dwarfs the spread.
    fn planted_blobs(per_blob: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = crate::rng::stream(seed, &[1]);
        let mut points = Vec::new();
        let mut truth = Vec::new();
        for b in 0..10 {
            for _ in 0..per_blob {
                let mut p = vec![0.0f64; 10];
                for (j, v) in p.iter_mut().enumerate() {
                    *v = if j == b { 50.0 } else { 0.0 } + rng.gen_range(-0.5..0.5);
                }
                points.push(p);
                truth.push(b);
            }
        }
        (points, truth)
    }

    #[test]
    fn k_equals_n_reaches_zero_inertia_with_points_as_centroids() {
        let points: Vec<Vec<f64>> =
            (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let fit = kmeans(&points, 6, 3).unwrap();
        assert_eq!(fit.inertia, 0.0);
        // Centroids are exactly the input points, as a multiset.
        let mut got: Vec<Vec<String>> = fit
            .centroids
            .iter()
            .map(|c| c.iter().map(|v| format!("{v:.9}")).collect())
            .collect();
        let mut want: Vec<Vec<String>> = points
            .iter()
            .map(|c| c.iter().map(|v| format!("{v:.9}")).collect())
            .collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);
        // And every point is alone in its cluster.
        let mut seen = fit.assignments.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn planted_blobs_recovered_up_to_relabeling_across_seeds() {
        let (points, truth) = planted_blobs(30, 77);
        for seed in 0..10u64 {
            let fit = kmeans(&points, 10, seed).unwrap();
            // Majority vote maps each cluster to a planted blob; the map must
            // be a bijection and agree with the planting on ≥ 99% of points.
            let mut votes = vec![vec![0usize; 10]; 10];
            for (&a, &t) in fit.assignments.iter().zip(&truth) {
                votes[a][t] += 1;
            }
            let mapping: Vec<usize> = votes
                .iter()
                .map(|v| v.iter().enumerate().max_by_key(|&(_, c)| *c).unwrap().0)
                .collect();
            let mut sorted = mapping.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 10, "seed {seed}: cluster→blob map must be a bijection");
            let agree = fit
                .assignments
                .iter()
                .zip(&truth)
                .filter(|&(&a, &t)| mapping[a] == t)
                .count();
            let frac = agree as f64 / truth.len() as f64;
            assert!(frac >= 0.99, "seed {seed}: only {frac:.3} of points match the planting");
        }
    }

    #[test]
    fn inertia_trace_is_monotone_non_increasing() {
        let mut rng = crate::rng::stream(5, &[2]);
        let points: Vec<Vec<f64>> =
            (0..120).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let fit = kmeans(&points, 7, 11).unwrap();
        assert!(fit.iterations >= 1 && fit.iterations <= 300);
        assert_eq!(fit.inertia_trace.len(), fit.iterations);
        for w in fit.inertia_trace.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-9,
                "inertia increased: {} → {}",
                w[0],
                w[1]
            );
        }
        assert_eq!(fit.inertia, *fit.inertia_trace.last().unwrap());
    }

    #[test]
    fn same_seed_reproduces_the_fit_exactly() {
        let (points, _) = planted_blobs(5, 3);
        let a = kmeans(&points, 4, 42).unwrap();
        let b = kmeans(&points, 4, 42).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.centroids, b.centroids);
        assert_eq!(a.inertia_trace, b.inertia_trace);
    }

    #[test]
    fn degenerate_and_invalid_inputs_are_rejected_or_survived() {
        let points = vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]];
        // All-duplicate points: zero-weight fallback still yields k centroids.
        let fit = kmeans(&points, 3, 0).unwrap();
        assert_eq!(fit.centroids.len(), 3);
        assert_eq!(fit.inertia, 0.0);

        assert!(kmeans(&points, 0, 0).is_err(), "k = 0 must be rejected");
        assert!(kmeans(&points, 4, 0).is_err(), "k > n must be rejected");
        let ragged = vec![vec![1.0], vec![1.0, 2.0]];
        assert!(kmeans(&ragged, 1, 0).is_err(), "ragged points must be rejected");
        let empty: Vec<Vec<f64>> = vec![vec![], vec![]];
        assert!(kmeans(&empty, 1, 0).is_err(), "zero-dimensional points must be rejected");
    }

    #[test]
    fn hidden_maps_have_one_spatial_value_per_pixel() {
        let tmp = tempfile::tempdir().unwrap();
        let manifest = DatasetManifest::new(FamilySpec::stripe(4, true), 6, 19);
        let ds = build_dataset(&manifest, &tmp.path().join("s4")).unwrap();
        let model = Model::build(&build_lstm3(4, 5), 23).unwrap();

        let (maps, labels) = aggregated_hidden_maps(&model, &ds, 3).unwrap();
        assert_eq!(maps.len(), 6);
        assert_eq!(labels.len(), 6);
        assert!(maps.iter().all(|m| m.len() == 400));

        assert!(aggregated_hidden_maps(&model, &ds, 6).is_err(), "depth beyond trained T");
        assert!(aggregated_hidden_maps(&model, &ds, 0).is_err(), "depth 0");
        let conv = Model::build(&crate::models::build_conv_ff(4, 2), 1).unwrap();
        assert!(aggregated_hidden_maps(&conv, &ds, 1).is_err(), "non-recurrent model");
    }

    #[test]
    fn centroid_table_round_trips() {
        let (points, _) = planted_blobs(4, 9);
        let fit = kmeans(&points, 3, 1).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("kmeans_centroids.csv");
        write_kmeans_centroids(&path, &fit, &serde_json::json!({"k": 3, "seed": 1})).unwrap();

        let table = read_table(&path).unwrap();
        assert_eq!(table.columns()[..2], ["cluster".to_string(), "size".to_string()]);
        assert_eq!(table.columns().len(), 2 + 10);
        assert_eq!(table.rows().len(), 3);
        let sizes: usize = table.rows().iter().map(|r| r[1].parse::<usize>().unwrap()).sum();
        assert_eq!(sizes, points.len(), "cluster sizes must partition the points");
    }
}
