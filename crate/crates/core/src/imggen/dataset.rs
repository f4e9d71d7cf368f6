//! Dataset construction and the three-file on-disk format:
//! `manifest.json` + `pixels.bin` (count × H × W bytes, image-major) +
//! `labels.bin` (one byte per image, 1 = symmetric).

use std::collections::BTreeMap;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imggen::{gen_image, mirror_left, FamilyKind, FamilySpec, ImageGrid};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PIXELS_FILE: &str = "pixels.bin";
pub const LABELS_FILE: &str = "labels.bin";
const FORMAT_VERSION: u32 = 1;

/// Everything needed to regenerate a dataset bit-for-bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub family: FamilySpec,
    pub count: usize,
    pub seed: u64,
    /// Fraction of images labeled symmetric; realized exactly as
    /// round(count × balance) positives, evenly interleaved.
    pub balance: f64,
    /// Named contiguous partitions (fractions must sum to 1). Ranges are
    /// assigned in sorted key order.
    pub split: BTreeMap<String, f64>,
    /// Directory of user-supplied grayscale images (natural_mirrored only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_dir: Option<PathBuf>,
}

impl DatasetManifest {
    pub fn new(family: FamilySpec, count: usize, seed: u64) -> Self {
        let mut split = BTreeMap::new();
        split.insert("train".to_string(), 0.95);
        split.insert("val".to_string(), 0.05);
        DatasetManifest {
            format_version: FORMAT_VERSION,
            family,
            count,
            seed,
            balance: 0.5,
            split,
            source_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::InvalidSpec(format!(
                "unsupported dataset format version {}",
                self.format_version
            )));
        }
        self.family.validate()?;
        if self.count == 0 {
            return Err(Error::InvalidSpec("count must be ≥ 1".into()));
        }
        if !(0.0..=1.0).contains(&self.balance) {
            return Err(Error::InvalidSpec(format!("balance must be in [0,1], got {}", self.balance)));
        }
        if self.split.is_empty() {
            return Err(Error::InvalidSpec("split must name at least one partition".into()));
        }
        let total: f64 = self.split.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!("split fractions sum to {}, expected 1", total)));
        }
        if self.split.values().any(|&f| f < 0.0) {
            return Err(Error::InvalidSpec("split fractions must be non-negative".into()));
        }
        if self.family.kind == FamilyKind::NaturalMirrored && self.source_dir.is_none() {
            return Err(Error::InvalidSpec("natural_mirrored manifests need source_dir".into()));
        }
        Ok(())
    }

    /// Label of image `index`: a Bresenham-style interleave that realizes
    /// exactly `round(count × balance)` positives spread evenly through the
    /// index range, so any contiguous split stays close to the target mix.
    pub fn label_for(&self, index: usize) -> u8 {
        let positives = (self.count as f64 * self.balance).round() as u128;
        let n = self.count as u128;
        let i = index as u128;
        (((i + 1) * positives) / n - (i * positives) / n) as u8
    }

    /// Contiguous index ranges per partition, in sorted key order. Boundary
    /// indices are `round(count × cumulative fraction)`, so ranges are
    /// disjoint and cover 0..count whenever fractions sum to 1.
    pub fn split_ranges(&self) -> BTreeMap<String, Range<usize>> {
        let mut out = BTreeMap::new();
        let mut cum = 0.0;
        let mut start = 0usize;
        for (name, frac) in &self.split {
            cum += frac;
            let end = (self.count as f64 * cum).round() as usize;
            let end = end.min(self.count);
            out.insert(name.clone(), start..end);
            start = end;
        }
        out
    }
}

/// A dataset loaded fully into memory (a 10⁵-image dataset is 40 MB).
#[derive(Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pixels: Vec<u8>,
    labels: Vec<u8>,
    side: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Image side length in pixels.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn label(&self, index: usize) -> u8 {
        self.labels[index]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Raw pixel bytes of one image.
    pub fn image_bytes(&self, index: usize) -> &[u8] {
        let px = self.side * self.side;
        &self.pixels[index * px..(index + 1) * px]
    }

    pub fn image(&self, index: usize) -> ImageGrid {
        ImageGrid::from_pixels(self.side, self.side, self.image_bytes(index).to_vec())
            .expect("stored image has side×side pixels")
    }
}

/// Writes the three dataset files under `out_dir` and returns the loaded
/// dataset. Synthetic families are generated in parallel per image (output
/// is independent of scheduling because every image owns its RNG streams);
/// natural_mirrored reads, grayscales, resizes, and mirrors files from the
/// manifest's source directory in sorted filename order.
pub fn build_dataset(manifest: &DatasetManifest, out_dir: &Path) -> Result<Dataset> {
    manifest.validate()?;
    let side = manifest.family.side();
    let px_per_image = side * side;

    let labels: Vec<u8> = (0..manifest.count).map(|i| manifest.label_for(i)).collect();
    let pixels = match manifest.family.kind {
        FamilyKind::NaturalMirrored => natural_pixels(manifest, &labels)?,
        _ => {
            let mut pixels = vec![0u8; manifest.count * px_per_image];
            pixels
                .par_chunks_mut(px_per_image)
                .enumerate()
                .try_for_each(|(i, chunk)| -> Result<()> {
                    let spec = manifest.family.with_symmetric(labels[i] == 1);
                    let img = gen_image(&spec, manifest.seed, i as u64)?;
                    chunk.copy_from_slice(img.pixels());
                    Ok(())
                })?;
            pixels
        }
    };

    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(PIXELS_FILE), &pixels)?;
    fs::write(out_dir.join(LABELS_FILE), &labels)?;
    let json = serde_json::to_vec_pretty(manifest)?;
    fs::write(out_dir.join(MANIFEST_FILE), json)?;

    Ok(Dataset { manifest: manifest.clone(), pixels, labels, side })
}

fn natural_pixels(manifest: &DatasetManifest, labels: &[u8]) -> Result<Vec<u8>> {
    let dir = manifest.source_dir.as_ref().expect("validated above");
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::Dataset { path: dir.clone(), reason: e.to_string() })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
                Some("png" | "jpg" | "jpeg" | "bmp" | "pgm" | "ppm")
            )
        })
        .collect();
    files.sort();
    if files.len() < manifest.count {
        return Err(Error::Dataset {
            path: dir.clone(),
            reason: format!("{} source images found, manifest wants {}", files.len(), manifest.count),
        });
    }

    let side = manifest.family.side();
    let mut pixels = vec![0u8; manifest.count * side * side];
    for (i, chunk) in pixels.chunks_mut(side * side).enumerate() {
        let gray = image::open(&files[i])?.into_luma8();
        let resized = image::imageops::resize(
            &gray,
            side as u32,
            side as u32,
            image::imageops::FilterType::Triangle,
        );
        let img = ImageGrid::from_pixels(side, side, resized.into_raw())?;
        let img = if labels[i] == 1 { mirror_left(&img)? } else { img };
        chunk.copy_from_slice(img.pixels());
    }
    Ok(pixels)
}

/// Loads a dataset directory, checking the files against the manifest.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Err(Error::Dataset { path: dir.to_path_buf(), reason: "manifest.json missing".into() });
    }
    let manifest: DatasetManifest = serde_json::from_slice(&fs::read(manifest_path)?)?;
    manifest.validate()?;
    let side = manifest.family.side();

    let pixels = fs::read(dir.join(PIXELS_FILE))
        .map_err(|e| Error::Dataset { path: dir.join(PIXELS_FILE), reason: e.to_string() })?;
    let labels = fs::read(dir.join(LABELS_FILE))
        .map_err(|e| Error::Dataset { path: dir.join(LABELS_FILE), reason: e.to_string() })?;

    if pixels.len() != manifest.count * side * side {
        return Err(Error::Dataset {
            path: dir.join(PIXELS_FILE),
            reason: format!(
                "expected {} bytes ({} images of {}x{}), found {}",
                manifest.count * side * side,
                manifest.count,
                side,
                side,
                pixels.len()
            ),
        });
    }
    if labels.len() != manifest.count {
        return Err(Error::Dataset {
            path: dir.join(LABELS_FILE),
            reason: format!("expected {} labels, found {}", manifest.count, labels.len()),
        });
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Dataset {
            path: dir.join(LABELS_FILE),
            reason: format!("labels must be 0 or 1, found {}", bad),
        });
    }
    Ok(Dataset { manifest, pixels, labels, side })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imggen::Brightness;

    fn manifest(count: usize, balance: f64) -> DatasetManifest {
        let mut m = DatasetManifest::new(FamilySpec::band(4, Brightness::Bright, true), count, 7);
        m.balance = balance;
        m
    }

    #[test]
    fn label_schedule_is_exact_and_interleaved() {
        let m = manifest(4000, 0.5);
        let ones: usize = (0..4000).map(|i| m.label_for(i) as usize).sum();
        assert_eq!(ones, 2000);
        // Evenly spread: any window of 10 holds 5 positives.
        for start in (0..3990).step_by(10) {
            let w: usize = (start..start + 10).map(|i| m.label_for(i) as usize).sum();
            assert_eq!(w, 5);
        }
        let m = manifest(10, 0.3);
        let ones: usize = (0..10).map(|i| m.label_for(i) as usize).sum();
        assert_eq!(ones, 3);
        let m = manifest(7, 1.0);
        assert!((0..7).all(|i| m.label_for(i) == 1));
        let m = manifest(7, 0.0);
        assert!((0..7).all(|i| m.label_for(i) == 0));
    }

    #[test]
    fn split_ranges_partition_the_index_space() {
        let mut m = manifest(10_000, 0.5);
        m.split = BTreeMap::from([("train".into(), 0.95), ("val".into(), 0.05)]);
        let ranges = m.split_ranges();
        assert_eq!(ranges["train"], 0..9500);
        assert_eq!(ranges["val"], 9500..10_000);
        // Odd count: still disjoint + covering.
        let mut m = manifest(11, 0.5);
        m.split = BTreeMap::from([("a".into(), 0.5), ("b".into(), 0.25), ("c".into(), 0.25)]);
        let r = m.split_ranges();
        assert_eq!(r["a"].end, r["b"].start);
        assert_eq!(r["b"].end, r["c"].start);
        assert_eq!(r["c"].end, 11);
        assert_eq!(r["a"].start, 0);
    }

    #[test]
    fn manifest_validation_rejects_bad_splits() {
        let mut m = manifest(10, 0.5);
        m.split = BTreeMap::from([("train".into(), 0.9)]);
        assert!(m.validate().is_err());
        m.split = BTreeMap::from([("train".into(), 1.2), ("val".into(), -0.2)]);
        assert!(m.validate().is_err());
        let mut m = manifest(10, 1.5);
        m.split = BTreeMap::from([("all".into(), 1.0)]);
        assert!(m.validate().is_err());
    }

    #[test]
    fn build_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = manifest(64, 0.5);
        let built = build_dataset(&m, dir.path()).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(built.manifest, loaded.manifest);
        assert_eq!(built.labels(), loaded.labels());
        assert_eq!(built.image_bytes(13), loaded.image_bytes(13));
        // Labels match the generator's symmetry.
        for i in 0..loaded.len() {
            assert_eq!(loaded.image(i).is_mirror_symmetric(), loaded.label(i) == 1);
        }
    }

    #[test]
    fn rebuilding_is_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let m = manifest(32, 0.5);
        build_dataset(&m, dir_a.path()).unwrap();
        build_dataset(&m, dir_b.path()).unwrap();
        for f in [PIXELS_FILE, LABELS_FILE, MANIFEST_FILE] {
            let a = fs::read(dir_a.path().join(f)).unwrap();
            let b = fs::read(dir_b.path().join(f)).unwrap();
            assert_eq!(a, b, "{f} differs between identical builds");
        }
    }

    #[test]
    fn load_rejects_truncated_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let m = manifest(16, 0.5);
        build_dataset(&m, dir.path()).unwrap();
        let px = dir.path().join(PIXELS_FILE);
        let bytes = fs::read(&px).unwrap();
        fs::write(&px, &bytes[..bytes.len() - 1]).unwrap();
        assert!(load_dataset(dir.path()).is_err());
    }
}
