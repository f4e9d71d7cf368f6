//! Restricted-unroll accuracy sweeps for the recurrent model.
//!
//! A trained recurrent classifier can be read out early: run only `t'` of
//! its trained unroll steps and apply the trained head to cell 3's hidden
//! state at that point. Sweeping `t'` against datasets whose informative
//! columns sit at different distances from the midline shows how many local
//! propagation steps the evidence needs before the verdict stabilises.

use std::path::Path;

use crate::error::{Error, Result};
use crate::imggen::Dataset;
use crate::models::Model;
use crate::scalar::Scalar;
use crate::table::{fmt_f64, write_table, Table};
use crate::tensor::Tensor;
use crate::training::accuracy_from_probs;

/// Accuracy of one model read out at several restricted unroll depths,
/// evaluated against several datasets.
#[derive(Clone, Debug)]
pub struct TimestepGrid {
    /// Unroll depths actually swept: sorted, deduplicated, all ≤ trained T.
    pub t_values: Vec<usize>,
    /// One row per dataset, in input order.
    pub rows: Vec<TimestepRow>,
}

/// One dataset's accuracy across the swept unroll depths.
#[derive(Clone, Debug)]
pub struct TimestepRow {
    pub family: String,
    pub n: usize,
    /// `accuracies[i]` corresponds to `t_values[i]`.
    pub accuracies: Vec<f64>,
}

/// Probabilities from a restricted-unroll readout over a whole dataset.
fn readout_probs(
    model: &Model<f32>,
    dataset: &Dataset,
    t_prime: usize,
    batch_size: usize,
) -> Result<Vec<f64>> {
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
        let probs = model.readout_at_timestep(&x, t_prime)?;
        probabilities.extend(probs.iter().map(|p| p.to_f64_lossy()));
        start = end;
    }
    Ok(probabilities)
}

/// Sweeps restricted unroll depths `t_values` against each dataset.
///
/// `t_values` are sorted and deduplicated; each must be ≥ 1 and no larger
/// than the model's trained unroll depth. The model must be the recurrent
/// architecture (anything else has no notion of a partial unroll).
pub fn timestep_sweep(
    model: &Model<f32>,
    datasets: &[&Dataset],
    t_values: &[usize],
    batch_size: usize,
) -> Result<TimestepGrid> {
    if datasets.is_empty() {
        return Err(Error::InvalidInput("timestep sweep needs at least one dataset".into()));
    }
    if t_values.is_empty() {
        return Err(Error::InvalidInput("timestep sweep needs at least one unroll depth".into()));
    }
    if batch_size == 0 {
        return Err(Error::InvalidInput("batch_size must be ≥ 1".into()));
    }
    let trained_t = match model.spec() {
        crate::models::ModelSpec::Lstm3 { steps, .. } => steps,
        other => {
            return Err(Error::InvalidInput(format!(
                "timestep sweep needs an lstm3 model, got {}",
                other.arch_name()
            )))
        }
    };
    let mut ts: Vec<usize> = t_values.to_vec();
    ts.sort_unstable();
    ts.dedup();
    if ts[0] < 1 {
        return Err(Error::InvalidInput("unroll depths must be ≥ 1".into()));
    }
    if *ts.last().unwrap() > trained_t {
        return Err(Error::InvalidInput(format!(
            "unroll depth {} exceeds the trained depth {trained_t}",
            ts.last().unwrap()
        )));
    }

    let mut rows = Vec::with_capacity(datasets.len());
    for ds in datasets {
        let mut accuracies = Vec::with_capacity(ts.len());
        for &t in &ts {
            let probs = readout_probs(model, ds, t, batch_size)?;
            accuracies.push(accuracy_from_probs(&probs, ds.labels()));
        }
        rows.push(TimestepRow {
            family: ds.manifest.family.slug(),
            n: ds.len(),
            accuracies,
        });
    }
    Ok(TimestepGrid { t_values: ts, rows })
}

/// Persists a sweep grid as CSV: one row per dataset, one `t{v}` column per
/// swept unroll depth, plus a JSON metadata sidecar.
pub fn write_timestep_grid(path: &Path, grid: &TimestepGrid, meta: &serde_json::Value) -> Result<()> {
    let mut header = vec!["family".to_string(), "n".to_string()];
    header.extend(grid.t_values.iter().map(|t| format!("t{t}")));
    let mut table = Table::new(header);
    for row in &grid.rows {
        let mut cells = vec![row.family.clone(), row.n.to_string()];
        cells.extend(row.accuracies.iter().map(|&a| fmt_f64(a)));
        table.push_row(cells)?;
    }
    write_table(path, &table, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imggen::{build_dataset, DatasetManifest, FamilySpec};
    use crate::models::{build_conv_ff, build_lstm3, ModelSpec};
    use crate::table::read_table;
    use crate::training::evaluate;

    fn tiny_dataset(dir: &Path, offset: u8, count: usize, seed: u64) -> Dataset {
        let manifest = DatasetManifest::new(FamilySpec::stripe(offset, true), count, seed);
        build_dataset(&manifest, dir).unwrap()
    }

    fn lstm(channels: usize, steps: usize, seed: u64) -> Model<f32> {
        Model::build(&build_lstm3(channels, steps), seed).unwrap()
    }

    #[test]
    fn full_depth_column_matches_whole_model_evaluation() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(&tmp.path().join("s4"), 4, 24, 11);
        let model = lstm(4, 6, 3);

        let grid = timestep_sweep(&model, &[&ds], &[1, 3, 6], 8).unwrap();
        assert_eq!(grid.t_values, vec![1, 3, 6]);
        let full = evaluate(&model, &ds, 8).unwrap();
        let last = *grid.rows[0].accuracies.last().unwrap();
        assert_eq!(last, full.accuracy, "T' == trained T must reproduce the plain readout");
    }

    #[test]
    fn depths_are_sorted_deduplicated_and_bounded() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(&tmp.path().join("s2"), 2, 16, 7);
        let model = lstm(4, 5, 3);

        let grid = timestep_sweep(&model, &[&ds], &[5, 2, 2, 1], 8).unwrap();
        assert_eq!(grid.t_values, vec![1, 2, 5]);
        assert_eq!(grid.rows[0].accuracies.len(), 3);

        let too_deep = timestep_sweep(&model, &[&ds], &[6], 8);
        assert!(too_deep.is_err(), "depth beyond the trained unroll must be rejected");
        let zero = timestep_sweep(&model, &[&ds], &[0, 2], 8);
        assert!(zero.is_err(), "depth 0 must be rejected");
    }

    #[test]
    fn non_recurrent_model_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(&tmp.path().join("s6"), 6, 8, 3);
        let model = Model::build(&build_conv_ff(4, 3), 1).unwrap();
        let err = timestep_sweep(&model, &[&ds], &[1], 8).unwrap_err();
        assert!(err.to_string().contains("lstm3"), "unexpected error: {err}");
    }

    #[test]
    fn grid_round_trips_through_csv() {
        let tmp = tempfile::tempdir().unwrap();
        let ds_near = tiny_dataset(&tmp.path().join("near"), 8, 16, 5);
        let ds_far = tiny_dataset(&tmp.path().join("far"), 2, 16, 6);
        let model = lstm(4, 4, 9);
        let grid = timestep_sweep(&model, &[&ds_near, &ds_far], &[1, 2, 4], 8).unwrap();

        let path = tmp.path().join("timestep_grid.csv");
        write_timestep_grid(&path, &grid, &serde_json::json!({"seed": 9})).unwrap();
        let table = read_table(&path).unwrap();
        assert_eq!(table.columns(), &["family", "n", "t1", "t2", "t4"]);
        assert_eq!(table.rows().len(), 2);
        assert_eq!(table.rows()[0][0], "stripe8");
        assert_eq!(table.rows()[1][0], "stripe2");
        for (row, grid_row) in table.rows().iter().zip(&grid.rows) {
            for (cell, &acc) in row[2..].iter().zip(&grid_row.accuracies) {
                assert_eq!(cell.parse::<f64>().unwrap(), acc);
            }
        }
    }

    #[test]
    fn restricted_readout_differs_from_full_on_deep_model() {
        // Not a learning claim — just that the early-readout path truly runs
        // fewer steps (probabilities at t'=1 differ from t'=T in general).
        let tmp = tempfile::tempdir().unwrap();
        let ds = tiny_dataset(&tmp.path().join("s10"), 10, 8, 13);
        let model = lstm(4, 8, 21);
        match model.spec() {
            ModelSpec::Lstm3 { steps, .. } => assert_eq!(steps, 8),
            _ => unreachable!(),
        }
        let p1 = readout_probs(&model, &ds, 1, 4).unwrap();
        let p8 = readout_probs(&model, &ds, 8, 4).unwrap();
        assert_eq!(p1.len(), 8);
        assert!(
            p1.iter().zip(&p8).any(|(a, b)| (a - b).abs() > 1e-9),
            "deeper unroll should change at least one probability"
        );
    }
}
