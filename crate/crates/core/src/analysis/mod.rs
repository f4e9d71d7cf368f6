//! Post-training analyses of what a classifier actually learned.
//!
//! Four lenses, each reading a trained checkpoint plus datasets:
//!
//! * [`rdm`] — representational dissimilarity matrices: pairwise cosine
//!   distances between internal representations, family-block averaging,
//!   idealised prototype patterns, and correlations between the two.
//! * [`represent`] — extraction of the per-image representation vectors the
//!   RDMs are built from, and the end-to-end RSA pipeline.
//! * [`misclass`] — verdict histograms against a per-image symmetry score,
//!   asking whether errors concentrate at any particular defect size.
//! * [`sweep`] — accuracy of the recurrent model when read out before its
//!   full unroll depth.
//! * [`kmeans`] — clustering of hidden activation maps at chosen unroll
//!   depths.
//!
//! Every analysis is a pure function of (checkpoint, datasets, parameters)
//! and emits CSV tables with JSON metadata sidecars.

pub mod kmeans;
pub mod misclass;
pub mod rdm;
pub mod represent;
pub mod sweep;

pub use kmeans::{aggregated_hidden_maps, kmeans, write_kmeans_centroids, KmeansFit};
pub use misclass::{ks_statistic, misclass_histogram, write_misclass_hist, MisclassHistogram};
pub use rdm::{
    cosine_rdm, family_block_rdm, grouped_dissimilarities, prototype_rdm, rdm_pearson,
    write_proto_corr, write_rdm, write_rdm_mask, write_violin, FamilyBlockRdm, FamilyKey,
    GroupingFeature, PrototypeKind, Rdm, DATASET_ORDER,
};
pub use represent::{
    band_family_key, extract_representation, mirror_defect_features, rsa_pipeline,
    rsa_representations, RsaOutputs,
};
pub use sweep::{timestep_sweep, write_timestep_grid, TimestepGrid, TimestepRow};
