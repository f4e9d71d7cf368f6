//! Representation taps and the end-to-end similarity pipeline: pick images
//! per family, extract the classifier-head input activations, build the
//! pairwise and family-block RDMs, and score them against every prototype.

use crate::analysis::rdm::{
    cosine_rdm, family_block_rdm, prototype_rdm, rdm_pearson, FamilyBlockRdm, FamilyKey,
    PrototypeKind,
};
use crate::error::{Error, Result};
use crate::imggen::{Dataset, FamilyKind, ImageGrid};
use crate::models::{unit_scale, Model};

/// Feature vector a trained checkpoint assigns to one image: the flattened
/// activations feeding the classifier head (see [`Model::representation`]
/// for the per-architecture tap rules). Pixels use the canonical byte→[0,1]
/// mapping, the same one training applies.
pub fn extract_representation(model: &Model<f32>, image: &[u8], side: usize) -> Result<Vec<f32>> {
    let sample = unit_scale::<f32>(image);
    model.representation(&sample, side)
}

/// The 16-way family identity of one image in a band dataset.
pub fn band_family_key(dataset: &Dataset, index: usize) -> Result<FamilyKey> {
    let family = &dataset.manifest.family;
    if family.kind != FamilyKind::Band {
        return Err(Error::InvalidInput(format!(
            "similarity families are defined over band datasets; {} is {:?}",
            family.slug(),
            family.kind
        )));
    }
    Ok(FamilyKey::new(dataset.label(index) == 1, family.band_width, family.brightness))
}

/// Representations and family keys for the similarity analysis: from each
/// dataset, the first `per_family` symmetric and first `per_family`
/// non-symmetric images in index order.
pub fn rsa_representations(
    model: &Model<f32>,
    datasets: &[&Dataset],
    per_family: usize,
) -> Result<(Vec<Vec<f32>>, Vec<FamilyKey>)> {
    if per_family < 2 {
        return Err(Error::InvalidInput(format!(
            "per_family must be ≥ 2 so each family has within-family pairs, got {per_family}"
        )));
    }
    let mut vectors = Vec::new();
    let mut keys = Vec::new();
    for ds in datasets {
        for want_symmetric in [true, false] {
            let want = want_symmetric as u8;
            let picked: Vec<usize> =
                (0..ds.len()).filter(|&i| ds.label(i) == want).take(per_family).collect();
            if picked.len() < per_family {
                return Err(Error::InvalidInput(format!(
                    "dataset {} holds only {} {} images, need {per_family}",
                    ds.manifest.family.slug(),
                    picked.len(),
                    if want_symmetric { "symmetric" } else { "non-symmetric" },
                )));
            }
            for i in picked {
                vectors.push(extract_representation(model, ds.image_bytes(i), ds.side())?);
                keys.push(band_family_key(ds, i)?);
            }
        }
    }
    Ok((vectors, keys))
}

/// Everything the similarity analysis of one checkpoint produces.
#[derive(Clone, Debug)]
pub struct RsaOutputs {
    /// Pairwise RDM over all selected images.
    pub full: crate::analysis::rdm::Rdm,
    /// Family key of each index in `full`.
    pub keys: Vec<FamilyKey>,
    /// 16×16 family-averaged RDM plus raw within-family means.
    pub block: FamilyBlockRdm,
    /// Pearson correlation of the block RDM against every prototype.
    pub correlations: Vec<(PrototypeKind, f64)>,
}

/// Runs the whole similarity analysis for one model over the 8 band
/// datasets: representations → pairwise cosine RDM → 16×16 family blocks →
/// correlation against all six prototypes.
pub fn rsa_pipeline(
    model: &Model<f32>,
    datasets: &[&Dataset],
    per_family: usize,
) -> Result<RsaOutputs> {
    let (vectors, keys) = rsa_representations(model, datasets, per_family)?;
    let labels: Vec<String> = keys.iter().map(FamilyKey::label).collect();
    let full = cosine_rdm(&vectors, &labels)?;
    let block = family_block_rdm(&full, &keys)?;
    let mut correlations = Vec::with_capacity(PrototypeKind::ALL.len());
    for kind in PrototypeKind::ALL {
        let proto = prototype_rdm(kind);
        correlations.push((kind, rdm_pearson(&block.rdm, &proto)?));
    }
    Ok(RsaOutputs { full, keys, block, correlations })
}

/// Hand-built symmetry-sensitive features, used as an oracle representation
/// when validating the similarity pipeline: per image row, the mean absolute
/// difference between the left half and the mirrored right half, plus a
/// trailing constant so perfectly symmetric images map to a nonzero vector.
pub fn mirror_defect_features(image: &ImageGrid) -> Vec<f64> {
    let (w, h) = (image.width(), image.height());
    let half = w / 2;
    let mut features = Vec::with_capacity(h + 1);
    for r in 0..h {
        let defect: f64 = (0..half)
            .map(|c| (image.get(r, c) as f64 - image.get(r, w - 1 - c) as f64).abs())
            .sum();
        features.push(defect / half as f64);
    }
    features.push(1.0);
    features
}
