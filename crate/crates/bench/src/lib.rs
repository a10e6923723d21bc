//! Fixed inputs shared by the benchmarks.

use pilab_core::MetaDataset;

/// A deterministic heterogeneous dataset of `k` studies.
pub fn dataset(k: usize) -> MetaDataset {
    let effects = (0..k).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.3).collect();
    let variances = (0..k).map(|i| 0.1 + 0.05 * (i % 7) as f64).collect();
    MetaDataset::from_effects(effects, variances).expect("valid dataset")
}
