//! Representational dissimilarity matrices: pairwise cosine distances,
//! family-level block averaging, idealized prototype patterns, and masked
//! Pearson correlation between them.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imggen::Brightness;
use crate::scalar::Scalar;
use crate::table::{fmt_f64, write_table, Table};

/// One of the 16 stimulus families used by the similarity analysis:
/// 8 band datasets × 2 symmetry classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FamilyKey {
    pub symmetric: bool,
    pub band_width: u8,
    pub brightness: Brightness,
}

/// The 8 (band width, brightness) dataset identities, in display order.
pub const DATASET_ORDER: [(u8, Brightness); 8] = [
    (0, Brightness::Bright),
    (2, Brightness::Bright),
    (4, Brightness::Bright),
    (4, Brightness::Dark),
    (6, Brightness::Bright),
    (14, Brightness::Bright),
    (16, Brightness::Bright),
    (18, Brightness::Bright),
];

impl FamilyKey {
    pub fn new(symmetric: bool, band_width: u8, brightness: Brightness) -> FamilyKey {
        FamilyKey { symmetric, band_width, brightness }
    }

    /// The canonical 16-family ordering: the 8 symmetric families first, then
    /// the 8 non-symmetric ones, each block in ascending band-width order
    /// (the dark variant right after its bright sibling). Keeping both
    /// symmetry blocks contiguous puts every nonsymmetric-vs-nonsymmetric
    /// cell in the bottom-right 8×8 quadrant of a 16×16 matrix.
    pub fn canonical_16() -> Vec<FamilyKey> {
        let mut keys = Vec::with_capacity(16);
        for symmetric in [true, false] {
            for (band_width, brightness) in DATASET_ORDER {
                keys.push(FamilyKey { symmetric, band_width, brightness });
            }
        }
        keys
    }

    /// Display / CSV label, e.g. `sym_band4_dark`, `nonsym_band0`.
    pub fn label(&self) -> String {
        let class = if self.symmetric { "sym" } else { "nonsym" };
        match self.brightness {
            Brightness::Bright => format!("{class}_band{}", self.band_width),
            Brightness::Dark => format!("{class}_band{}_dark", self.band_width),
        }
    }
}

impl fmt::Display for FamilyKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A representational dissimilarity matrix: symmetric, zero diagonal,
/// values in [0,1], plus a symmetric participation mask and per-index
/// family labels. All four invariants are checked on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Rdm {
    n: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
    labels: Vec<String>,
    /// True when a min-max rescale collapsed a constant matrix to all zeros;
    /// callers surface this as a warning.
    degenerate: bool,
}

impl Rdm {
    pub fn new(values: Vec<f64>, mask: Vec<bool>, labels: Vec<String>) -> Result<Rdm> {
        Rdm::assemble(values, mask, labels, false)
    }

    fn assemble(values: Vec<f64>, mask: Vec<bool>, labels: Vec<String>, degenerate: bool) -> Result<Rdm> {
        let n = labels.len();
        if n < 2 {
            return Err(Error::InvalidInput(format!("an RDM needs ≥ 2 indices, got {n}")));
        }
        if values.len() != n * n || mask.len() != n * n {
            return Err(Error::shape(
                format!("{n}×{n} values and mask for {n} labels"),
                format!("{} values, {} mask cells", values.len(), mask.len()),
            ));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "RDM diagonal must be exactly 0, found {} at index {i}",
                    values[i * n + i]
                )));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidInput(format!(
                        "RDM values must lie in [0,1], found {v} at ({i},{j})"
                    )));
                }
                if values[j * n + i] != v {
                    return Err(Error::InvalidInput(format!(
                        "RDM must be symmetric, cells ({i},{j}) and ({j},{i}) differ: {v} vs {}",
                        values[j * n + i]
                    )));
                }
                if mask[j * n + i] != mask[i * n + j] {
                    return Err(Error::InvalidInput(format!(
                        "RDM mask must be symmetric, cells ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(Rdm { n, values, mask, labels, degenerate })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn mask_at(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// True when the source matrix was constant off-diagonal and the min-max
    /// rescale emitted all zeros instead.
    pub fn degenerate_rescale(&self) -> bool {
        self.degenerate
    }

    /// The pattern-inverted matrix: off-diagonal v ↦ 1−v, diagonal kept 0,
    /// mask and labels unchanged. Used to probe anti-correlation.
    pub fn complement(&self) -> Rdm {
        let mut values = self.values.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    values[i * self.n + j] = 1.0 - values[i * self.n + j];
                }
            }
        }
        Rdm { n: self.n, values, mask: self.mask.clone(), labels: self.labels.clone(), degenerate: false }
    }
}

/// Min-max rescales the off-diagonal cells of an n×n matrix to [0,1] in
/// place. A constant matrix (max == min) becomes all zeros; returns true in
/// that degenerate case so callers can warn.
fn rescale_off_diagonal(n: usize, m: &mut [f64]) -> bool {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                lo = lo.min(m[i * n + j]);
                hi = hi.max(m[i * n + j]);
            }
        }
    }
    let degenerate = !(hi > lo);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m[i * n + j] = if degenerate { 0.0 } else { (m[i * n + j] - lo) / (hi - lo) };
            }
        }
    }
    degenerate
}

/// Raw pairwise cosine distances 1 − cos(xᵢ, xⱼ) as a dense n×n matrix in
/// [0,2], computed in f64 via one symmetric Gram product. Zero-norm vectors
/// are rejected with the full list of offending indices.
pub fn cosine_distances<F: Scalar>(vectors: &[Vec<F>]) -> Result<Vec<f64>> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("cosine RDM needs ≥ 2 vectors, got {n}")));
    }
    let dim = vectors[0].len();
    if dim == 0 {
        return Err(Error::InvalidInput("representation vectors must be non-empty".into()));
    }
    if let Some(bad) = vectors.iter().position(|v| v.len() != dim) {
        return Err(Error::shape(
            format!("{dim} features (like vector 0)"),
            format!("{} features at vector {bad}", vectors[bad].len()),
        ));
    }

    // Normalize into a flat n×dim f64 matrix, collecting zero-norm offenders.
    let mut x = vec![0.0f64; n * dim];
    let mut zero_idx = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        let row = &mut x[i * dim..(i + 1) * dim];
        for (o, &s) in row.iter_mut().zip(v) {
            *o = s.to_f64_lossy();
        }
        let norm = row.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            zero_idx.push(i);
        } else {
            for o in row.iter_mut() {
                *o /= norm;
            }
        }
    }
    if !zero_idx.is_empty() {
        return Err(Error::ZeroVectors(zero_idx));
    }

    // Gram matrix of unit rows; a blocked kernel may sum (i,j) and (j,i) in
    // different orders, so mirror the upper triangle to keep exact symmetry.
    let mut g = vec![0.0f64; n * n];
    f64::gemm(n, dim, n, 1.0, &x, false, &x, true, 0.0, &mut g);
    let mut d = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let cos = g[i * n + j].clamp(-1.0, 1.0);
            let dist = 1.0 - cos;
            d[i * n + j] = dist;
            d[j * n + i] = dist;
        }
    }
    Ok(d)
}

/// Pairwise cosine-distance RDM: raw distances min-max rescaled over the
/// off-diagonal cells to [0,1], diagonal forced to 0, full participation
/// mask. `labels` names each vector's family.
pub fn cosine_rdm<F: Scalar>(vectors: &[Vec<F>], labels: &[String]) -> Result<Rdm> {
    let n = vectors.len();
    if labels.len() != n {
        return Err(Error::InvalidInput(format!(
            "{n} vectors need {n} labels, got {}",
            labels.len()
        )));
    }
    let mut d = cosine_distances(vectors)?;
    let degenerate = rescale_off_diagonal(n, &mut d);
    Rdm::assemble(d, vec![true; n * n], labels.to_vec(), degenerate)
}

/// A 16×16 family-averaged RDM plus the raw (unrescaled) within-family mean
/// dissimilarities its diagonal summarizes. The emitted matrix keeps the
/// zero-diagonal invariant, so the within-family means live here and in the
/// artifact's metadata instead of on the diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyBlockRdm {
    pub rdm: Rdm,
    /// Mean within-family dissimilarity per canonical family, self-pairs
    /// excluded, in the raw (pre-rescale) scale of the input RDM.
    pub within_family: Vec<f64>,
}

/// Averages a labeled pairwise RDM into family blocks over the canonical 16
/// families. Block (i,j) is the mean of all cells between family i and
/// family j; diagonal blocks average only distinct pairs. Off-diagonal
/// blocks are min-max rescaled to [0,1]; per-block sums run over sorted cell
/// values, so the output is exactly invariant to within-family reordering.
pub fn family_block_rdm(rdm: &Rdm, keys: &[FamilyKey]) -> Result<FamilyBlockRdm> {
    let canonical = FamilyKey::canonical_16();
    let k = canonical.len();
    if keys.len() != rdm.n() {
        return Err(Error::InvalidInput(format!(
            "{} family keys for an RDM over {} indices",
            keys.len(),
            rdm.n()
        )));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (idx, key) in keys.iter().enumerate() {
        match canonical.iter().position(|c| c == key) {
            Some(f) => members[f].push(idx),
            None => {
                return Err(Error::InvalidInput(format!(
                    "index {idx} carries family key {key}, which is not one of the 16 canonical band families"
                )))
            }
        }
    }
    let empty: Vec<String> =
        (0..k).filter(|&f| members[f].is_empty()).map(|f| canonical[f].label()).collect();
    if !empty.is_empty() {
        return Err(Error::InvalidInput(format!("empty families: {}", empty.join(", "))));
    }
    let single: Vec<String> =
        (0..k).filter(|&f| members[f].len() == 1).map(|f| canonical[f].label()).collect();
    if !single.is_empty() {
        return Err(Error::InvalidInput(format!(
            "families with a single image have no within-family pairs: {}",
            single.join(", ")
        )));
    }

    // Sorted-sum block means: exact permutation invariance.
    let sorted_mean = |cells: Vec<f64>| -> f64 {
        let mut cells = cells;
        cells.sort_by(|a, b| a.partial_cmp(b).expect("RDM values are finite"));
        let n = cells.len() as f64;
        cells.into_iter().sum::<f64>() / n
    };

    let mut blocks = vec![0.0f64; k * k];
    let mut within = vec![0.0f64; k];
    for fi in 0..k {
        let cells: Vec<f64> = member_pairs(&members[fi])
            .map(|(a, b)| rdm.value(a, b))
            .collect();
        within[fi] = sorted_mean(cells);
        for fj in (fi + 1)..k {
            let cells: Vec<f64> = members[fi]
                .iter()
                .flat_map(|&a| members[fj].iter().map(move |&b| (a, b)))
                .map(|(a, b)| rdm.value(a, b))
                .collect();
            let m = sorted_mean(cells);
            blocks[fi * k + fj] = m;
            blocks[fj * k + fi] = m;
        }
    }
    let degenerate = rescale_off_diagonal(k, &mut blocks);
    let labels: Vec<String> = canonical.iter().map(FamilyKey::label).collect();
    let rdm = Rdm::assemble(blocks, vec![true; k * k], labels, degenerate)?;
    Ok(FamilyBlockRdm { rdm, within_family: within })
}

fn member_pairs(members: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    members
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| members[i + 1..].iter().map(move |&b| (a, b)))
}

/// The six idealized dissimilarity patterns the model RDMs are scored
/// against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrototypeKind {
    Symmetry1,
    Symmetry2,
    BandPresence,
    Brightness,
    BandWidth,
    SymmetrySmallBand,
}

impl PrototypeKind {
    pub const ALL: [PrototypeKind; 6] = [
        PrototypeKind::Symmetry1,
        PrototypeKind::Symmetry2,
        PrototypeKind::BandPresence,
        PrototypeKind::Brightness,
        PrototypeKind::BandWidth,
        PrototypeKind::SymmetrySmallBand,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PrototypeKind::Symmetry1 => "symmetry_1",
            PrototypeKind::Symmetry2 => "symmetry_2",
            PrototypeKind::BandPresence => "band_presence",
            PrototypeKind::Brightness => "brightness",
            PrototypeKind::BandWidth => "band_width",
            PrototypeKind::SymmetrySmallBand => "symmetry_small_band",
        }
    }
}

impl fmt::Display for PrototypeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PrototypeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<PrototypeKind> {
        PrototypeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = PrototypeKind::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidInput(format!(
                    "unknown prototype kind {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Dissimilarity a prototype assigns to a pair of distinct families.
fn prototype_value(kind: PrototypeKind, a: &FamilyKey, b: &FamilyKey) -> f64 {
    let differ = |same: bool| if same { 0.0 } else { 1.0 };
    match kind {
        PrototypeKind::Symmetry1 | PrototypeKind::Symmetry2 => differ(a.symmetric == b.symmetric),
        PrototypeKind::BandPresence => differ((a.band_width > 0) == (b.band_width > 0)),
        PrototypeKind::Brightness => differ(a.brightness == b.brightness),
        PrototypeKind::BandWidth => differ(a.band_width == b.band_width),
        PrototypeKind::SymmetrySmallBand => {
            // A model that fails on large bands: any pair touching a wide
            // band is maximally dissimilar; small-band pairs follow the
            // symmetry rule. Canonical widths split cleanly at ≤6 vs ≥14.
            if a.band_width >= 14 || b.band_width >= 14 {
                1.0
            } else {
                differ(a.symmetric == b.symmetric)
            }
        }
    }
}

/// The 16×16 idealized RDM for one prototype, over the canonical family
/// order. Symmetry-2 masks out every nonsymmetric-vs-nonsymmetric cell (the
/// bottom-right 8×8 quadrant); all other prototypes participate fully. The
/// diagonal is 0 by the type's invariant even where a rule (wide-band cells
/// of Symmetry-Small-Band) would assign 1 — correlations never read it.
pub fn prototype_rdm(kind: PrototypeKind) -> Rdm {
    let keys = FamilyKey::canonical_16();
    let k = keys.len();
    let mut values = vec![0.0f64; k * k];
    let mut mask = vec![true; k * k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                values[i * k + j] = prototype_value(kind, &keys[i], &keys[j]);
            }
            if kind == PrototypeKind::Symmetry2 && !keys[i].symmetric && !keys[j].symmetric {
                mask[i * k + j] = false;
            }
        }
    }
    let labels = keys.iter().map(FamilyKey::label).collect();
    Rdm::assemble(values, mask, labels, false).expect("prototype construction is always valid")
}

/// Pearson correlation between two RDMs over the upper-triangle cells where
/// both masks participate (diagonal excluded). Requires ≥ 3 such cells and
/// nonzero variance on both sides.
pub fn rdm_pearson(a: &Rdm, b: &Rdm) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::shape(format!("{0}×{0} RDM", a.n()), format!("{0}×{0} RDM", b.n())));
    }
    let n = a.n();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if a.mask_at(i, j) && b.mask_at(i, j) {
                xs.push(a.value(i, j));
                ys.push(b.value(i, j));
            }
        }
    }
    if xs.len() < 3 {
        return Err(Error::UndefinedCorrelation(format!(
            "only {} unmasked upper-triangle cells; need ≥ 3",
            xs.len()
        )));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let (mut sxx, mut syy, mut sxy) = (0.0f64, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation(format!(
            "the {} RDM is constant over the {} unmasked cells",
            if sxx == 0.0 { "first" } else { "second" },
            xs.len()
        )));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Which family attribute a grouped-dissimilarity ("violin") analysis bins
/// by.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupingFeature {
    Symmetry,
    Band,
    Brightness,
    Width,
}

impl GroupingFeature {
    pub const ALL: [GroupingFeature; 4] = [
        GroupingFeature::Symmetry,
        GroupingFeature::Band,
        GroupingFeature::Brightness,
        GroupingFeature::Width,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GroupingFeature::Symmetry => "symmetry",
            GroupingFeature::Band => "band",
            GroupingFeature::Brightness => "brightness",
            GroupingFeature::Width => "width",
        }
    }
}

impl fmt::Display for GroupingFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GroupingFeature {
    type Err = Error;

    fn from_str(s: &str) -> Result<GroupingFeature> {
        GroupingFeature::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = GroupingFeature::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidInput(format!(
                    "unknown grouping feature {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Partitions every unordered off-diagonal pair of a labeled RDM into
/// within-group bins (both families share the feature value) plus one "AC"
/// (across) bin, as (bin label, values). Bin sizes always sum to n(n−1)/2.
pub fn grouped_dissimilarities(
    rdm: &Rdm,
    keys: &[FamilyKey],
    feature: GroupingFeature,
) -> Result<Vec<(String, Vec<f64>)>> {
    if keys.len() != rdm.n() {
        return Err(Error::InvalidInput(format!(
            "{} family keys for an RDM over {} indices",
            keys.len(),
            rdm.n()
        )));
    }
    // Bin labels in fixed order; a pair lands in a within bin when both
    // keys map to the same feature value.
    let value_of = |k: &FamilyKey| -> String {
        match feature {
            GroupingFeature::Symmetry => if k.symmetric { "sym" } else { "nonsym" }.into(),
            GroupingFeature::Band => if k.band_width > 0 { "band" } else { "no_band" }.into(),
            GroupingFeature::Brightness => match k.brightness {
                Brightness::Bright => "bright".into(),
                Brightness::Dark => "dark".into(),
            },
            GroupingFeature::Width => format!("b{}", k.band_width),
        }
    };
    let mut bin_labels: Vec<String> = match feature {
        GroupingFeature::Symmetry => vec!["sym".into(), "nonsym".into()],
        GroupingFeature::Band => vec!["band".into(), "no_band".into()],
        GroupingFeature::Brightness => vec!["bright".into(), "dark".into()],
        GroupingFeature::Width => {
            let mut widths: Vec<u8> = keys.iter().map(|k| k.band_width).collect();
            widths.sort_unstable();
            widths.dedup();
            widths.into_iter().map(|w| format!("b{w}")).collect()
        }
    };
    bin_labels.push("AC".into());
    let mut bins: Vec<Vec<f64>> = vec![Vec::new(); bin_labels.len()];
    let ac = bins.len() - 1;
    for i in 0..rdm.n() {
        for j in (i + 1)..rdm.n() {
            let (vi, vj) = (value_of(&keys[i]), value_of(&keys[j]));
            let slot = if vi == vj {
                bin_labels.iter().position(|l| *l == vi).expect("within bin exists")
            } else {
                ac
            };
            bins[slot].push(rdm.value(i, j));
        }
    }
    Ok(bin_labels.into_iter().zip(bins).collect())
}

/// Writes a dense RDM as CSV: a `family` column followed by one column per
/// index label.
pub fn write_rdm(path: &Path, rdm: &Rdm, metadata: &serde_json::Value) -> Result<()> {
    let mut cols = vec!["family".to_string()];
    cols.extend(rdm.labels().iter().cloned());
    let mut t = Table::new(cols);
    for i in 0..rdm.n() {
        let mut row = vec![rdm.labels()[i].clone()];
        row.extend((0..rdm.n()).map(|j| fmt_f64(rdm.value(i, j))));
        t.push_row(row)?;
    }
    write_table(path, &t, metadata)
}

/// Writes an RDM's participation mask as CSV of 0/1 cells.
pub fn write_rdm_mask(path: &Path, rdm: &Rdm, metadata: &serde_json::Value) -> Result<()> {
    let mut cols = vec!["family".to_string()];
    cols.extend(rdm.labels().iter().cloned());
    let mut t = Table::new(cols);
    for i in 0..rdm.n() {
        let mut row = vec![rdm.labels()[i].clone()];
        row.extend((0..rdm.n()).map(|j| if rdm.mask_at(i, j) { "1" } else { "0" }.to_string()));
        t.push_row(row)?;
    }
    write_table(path, &t, metadata)
}

/// Writes a model × prototype correlation table: one row per model, one
/// column per prototype kind.
pub fn write_proto_corr(
    path: &Path,
    rows: &[(String, Vec<(PrototypeKind, f64)>)],
    metadata: &serde_json::Value,
) -> Result<()> {
    let mut cols = vec!["model".to_string()];
    cols.extend(PrototypeKind::ALL.iter().map(|k| k.name().to_string()));
    let mut t = Table::new(cols);
    for (model, corrs) in rows {
        let mut row = vec![model.clone()];
        for kind in PrototypeKind::ALL {
            let r = corrs
                .iter()
                .find(|(k, _)| *k == kind)
                .map(|(_, r)| *r)
                .ok_or_else(|| {
                    Error::InvalidInput(format!("row {model} is missing prototype {kind}"))
                })?;
            row.push(fmt_f64(r));
        }
        t.push_row(row)?;
    }
    write_table(path, &t, metadata)
}

/// Writes grouped dissimilarities long-form as (bin, value) rows.
pub fn write_violin(
    path: &Path,
    bins: &[(String, Vec<f64>)],
    metadata: &serde_json::Value,
) -> Result<()> {
    let mut t = Table::new(vec!["bin", "value"]);
    for (label, values) in bins {
        for v in values {
            t.push_row(vec![label.clone(), fmt_f64(*v)])?;
        }
    }
    write_table(path, &t, metadata)
}
