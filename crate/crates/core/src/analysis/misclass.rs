//! Misclassification vs. degree of non-symmetry: per-sample left/right
//! flank correlations histogrammed by model verdict, plus a two-sample
//! Kolmogorov–Smirnov statistic comparing the two distributions.

use std::path::Path;

use crate::error::{Error, Result};
use crate::imggen::{left_right_correlation, Dataset};
use crate::table::{fmt_f64, write_table, Table};

/// Histogram of flank correlations split by classification outcome, over
/// uniform bins spanning [−1, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct MisclassHistogram {
    /// Bin edges, `bins + 1` ascending values from −1 to 1.
    pub edges: Vec<f64>,
    pub correct: Vec<usize>,
    pub incorrect: Vec<usize>,
    /// Per-sample flank correlations, in dataset order.
    pub correlations: Vec<f64>,
    /// Per-sample verdicts, in dataset order.
    pub verdicts: Vec<bool>,
    /// Two-sample KS statistic between the correct and incorrect correlation
    /// distributions; `None` when either side is empty. Reported because
    /// "the distributions look alike" is not directly assertable.
    pub ks: Option<f64>,
}

impl MisclassHistogram {
    pub fn bins(&self) -> usize {
        self.correct.len()
    }
}

/// Builds the histogram from a dataset and per-sample probabilities (from
/// [`crate::training::evaluate`] or any stub). The per-image correlation
/// excludes the family's band columns; the verdict threshold is the same
/// p > 0.5 rule evaluation uses. No pass/fail judgement is imposed.
pub fn misclass_histogram(
    dataset: &Dataset,
    probabilities: &[f64],
    bins: usize,
) -> Result<MisclassHistogram> {
    if bins == 0 {
        return Err(Error::InvalidInput("histogram needs ≥ 1 bin".into()));
    }
    if probabilities.len() != dataset.len() {
        return Err(Error::InvalidInput(format!(
            "{} probabilities for {} samples",
            probabilities.len(),
            dataset.len()
        )));
    }
    let family = &dataset.manifest.family;
    let band_px = family.band_width as usize * family.block_scale as usize;

    let mut correct = vec![0usize; bins];
    let mut incorrect = vec![0usize; bins];
    let mut correlations = Vec::with_capacity(dataset.len());
    let mut verdicts = Vec::with_capacity(dataset.len());
    for i in 0..dataset.len() {
        let corr = left_right_correlation(&dataset.image(i), band_px)?;
        let predicted = (probabilities[i] > 0.5) as u8;
        let ok = predicted == dataset.label(i);
        // Uniform bins over [−1,1]; the closed top edge folds into the last
        // bin so perfectly symmetric images (correlation exactly 1) count.
        let slot = (((corr + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1);
        if ok {
            correct[slot] += 1;
        } else {
            incorrect[slot] += 1;
        }
        correlations.push(corr);
        verdicts.push(ok);
    }

    let right: Vec<f64> = correlations
        .iter()
        .zip(&verdicts)
        .filter(|(_, &ok)| ok)
        .map(|(&c, _)| c)
        .collect();
    let wrong: Vec<f64> = correlations
        .iter()
        .zip(&verdicts)
        .filter(|(_, &ok)| !ok)
        .map(|(&c, _)| c)
        .collect();
    let ks = ks_statistic(&right, &wrong);

    let edges = (0..=bins).map(|b| -1.0 + 2.0 * b as f64 / bins as f64).collect();
    Ok(MisclassHistogram { edges, correct, incorrect, correlations, verdicts, ks })
}

/// Two-sample Kolmogorov–Smirnov statistic sup |F_a − F_b|; `None` when
/// either sample is empty.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).expect("correlations are finite"));
    ys.sort_by(|p, q| p.partial_cmp(q).expect("correlations are finite"));
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Some(d.max((1.0 - j as f64 / nb).abs()).max((1.0 - i as f64 / na).abs()).min(1.0))
}

/// Writes the histogram as (bin_lo, bin_hi, correct, incorrect) rows.
pub fn write_misclass_hist(
    path: &Path,
    hist: &MisclassHistogram,
    metadata: &serde_json::Value,
) -> Result<()> {
    let mut meta = metadata.clone();
    if let serde_json::Value::Object(map) = &mut meta {
        map.insert(
            "ks_statistic".into(),
            hist.ks.map(serde_json::Value::from).unwrap_or(serde_json::Value::Null),
        );
    }
    let mut t = Table::new(vec!["bin_lo", "bin_hi", "correct", "incorrect"]);
    for b in 0..hist.bins() {
        t.push_row(vec![
            fmt_f64(hist.edges[b]),
            fmt_f64(hist.edges[b + 1]),
            hist.correct[b].to_string(),
            hist.incorrect[b].to_string(),
        ])?;
    }
    write_table(path, &t, &meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imggen::{build_dataset, Brightness, DatasetManifest, FamilySpec};
    use crate::table::{read_metadata, read_table};

    fn band4(root: &std::path::Path, count: usize, seed: u64) -> Dataset {
        let spec = FamilySpec::band(4, Brightness::Bright, true);
        build_dataset(&DatasetManifest::new(spec, count, seed), &root.join("band4")).unwrap()
    }

    #[test]
    fn perfect_oracle_leaves_incorrect_empty_and_counts_partition() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = band4(tmp.path(), 400, 17);
        let perfect: Vec<f64> = ds.labels().iter().map(|&y| y as f64).collect();
        let h = misclass_histogram(&ds, &perfect, 20).unwrap();
        assert_eq!(h.incorrect.iter().sum::<usize>(), 0);
        let total: usize = h.correct.iter().sum::<usize>() + h.incorrect.iter().sum::<usize>();
        assert_eq!(total, ds.len(), "bins partition the dataset");
        assert_eq!(h.ks, None, "KS is undefined with an empty side");
        // Symmetric images correlate at exactly 1 and land in the top bin.
        let sym_count = ds.labels().iter().filter(|&&y| y == 1).count();
        assert_eq!(h.correct[19], sym_count);
    }

    #[test]
    fn anti_oracle_fills_incorrect_and_ks_hits_its_extremes() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = band4(tmp.path(), 200, 18);
        // Predict the complement of every label: all samples incorrect.
        let wrong: Vec<f64> = ds.labels().iter().map(|&y| 1.0 - y as f64).collect();
        let h = misclass_histogram(&ds, &wrong, 10).unwrap();
        assert_eq!(h.correct.iter().sum::<usize>(), 0);
        assert_eq!(h.incorrect.iter().sum::<usize>(), ds.len());
        assert_eq!(h.ks, None);

        // Correct on symmetric images only (their correlation is exactly 1),
        // wrong on every non-symmetric one — disjoint supports give KS = 1.
        let mixed: Vec<f64> = ds
            .labels()
            .iter()
            .map(|&y| if y == 1 { 0.9 } else { 1.0 })
            .collect();
        let h = misclass_histogram(&ds, &mixed, 10).unwrap();
        assert_eq!(h.ks, Some(1.0), "disjoint correlation supports");
    }

    #[test]
    fn ks_statistic_matches_hand_computed_values() {
        assert_eq!(ks_statistic(&[0.0, 0.0, 1.0, 1.0], &[1.0, 1.0]), Some(0.5));
        assert_eq!(ks_statistic(&[0.0, 1.0], &[0.0, 1.0]), Some(0.0));
        assert_eq!(ks_statistic(&[0.0, 0.1], &[0.9, 1.0]), Some(1.0));
        assert_eq!(ks_statistic(&[], &[1.0]), None);
    }

    #[test]
    fn histogram_artifact_round_trips_with_ks_metadata() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = band4(tmp.path(), 100, 19);
        let mut rng_like = 0u32;
        let probs: Vec<f64> = ds
            .labels()
            .iter()
            .map(|_| {
                rng_like = rng_like.wrapping_mul(1664525).wrapping_add(1013904223);
                (rng_like >> 8) as f64 / (1u32 << 24) as f64
            })
            .collect();
        let h = misclass_histogram(&ds, &probs, 8).unwrap();
        let path = tmp.path().join("misclass_hist.csv");
        write_misclass_hist(&path, &h, &serde_json::json!({"source": "unit-test"})).unwrap();
        let t = read_table(&path).unwrap();
        assert_eq!(t.columns(), ["bin_lo", "bin_hi", "correct", "incorrect"]);
        assert_eq!(t.len(), 8);
        let meta = read_metadata(&path).unwrap();
        assert!(meta.get("ks_statistic").is_some());
        let total: f64 = t.f64_column("correct").unwrap().iter().sum::<f64>()
            + t.f64_column("incorrect").unwrap().iter().sum::<f64>();
        assert_eq!(total as usize, 100);
    }

    #[test]
    fn probability_count_must_match_the_dataset() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = band4(tmp.path(), 10, 20);
        assert!(misclass_histogram(&ds, &[0.5; 9], 4).is_err());
        assert!(misclass_histogram(&ds, &[0.5; 10], 0).is_err());
    }
}
