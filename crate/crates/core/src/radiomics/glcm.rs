use super::discretize::DiscretizedRegion;
use super::neighborhood::{shift, DIRECTIONS_13};
use super::{mean_over_directions, NamedFeatures};
use crate::error::{Error, Result};

pub const NAMES: &[&str] = &[
    "JointEnergy",
    "Contrast",
    "Correlation",
    "InverseDifferenceMoment",
    "JointEntropy",
    "JointAverage",
    "Autocorrelation",
    "ClusterTendency",
    "ClusterShade",
    "DifferenceAverage",
    "InverseDifference",
];

/// Symmetric co-occurrence counts for one offset, row-major `ng x ng`,
/// zero-based levels. Only pairs with both voxels in the region count.
pub fn cooccurrence(disc: &DiscretizedRegion, offset: [i64; 3]) -> Vec<f64> {
    let ng = disc.bin_count;
    let mut m = vec![0.0; ng * ng];
    for (k, &li) in disc.levels.iter().enumerate() {
        if let Some(lj) = disc.level_at(shift(disc.coord(k), offset, 1)) {
            let (i, j) = (usize::from(li) - 1, usize::from(lj) - 1);
            m[i * ng + j] += 1.0;
            m[j * ng + i] += 1.0;
        }
    }
    m
}

fn features_for(counts: &[f64], ng: usize) -> Option<Vec<f64>> {
    let total: f64 = counts.iter().sum();
    if total == 0.0 {
        return None;
    }
    let mut px = vec![0.0; ng];
    for i in 0..ng {
        for j in 0..ng {
            px[i] += counts[i * ng + j] / total;
        }
    }
    let mu: f64 = px.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum();
    let var: f64 = px
        .iter()
        .enumerate()
        .map(|(i, p)| ((i + 1) as f64 - mu).powi(2) * p)
        .sum();

    let mut f = [0.0f64; 11];
    let mut sum_ij = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            let c = counts[i * ng + j];
            if c == 0.0 {
                continue;
            }
            let p = c / total;
            let (a, b) = ((i + 1) as f64, (j + 1) as f64);
            let d = a - b;
            let t = a + b - 2.0 * mu;
            f[0] += p * p;
            f[1] += d * d * p;
            f[3] += p / (1.0 + d * d);
            f[4] -= p * p.log2();
            sum_ij += a * b * p;
            f[7] += t * t * p;
            f[8] += t * t * t * p;
            f[9] += d.abs() * p;
            f[10] += p / (1.0 + d.abs());
        }
    }
    // symmetric matrix: both marginals share mean and variance
    f[2] = if var > 1e-12 { (sum_ij - mu * mu) / var } else { 1.0 };
    f[5] = mu;
    f[6] = sum_ij;
    Some(f.to_vec())
}

/// Co-occurrence features at distance 1, averaged with equal weight over
/// the 13 directions that contain at least one voxel pair.
pub fn glcm_features(disc: &DiscretizedRegion) -> Result<NamedFeatures> {
    if disc.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let per_dir: Vec<Vec<f64>> = DIRECTIONS_13
        .iter()
        .filter_map(|&d| features_for(&cooccurrence(disc, d), disc.bin_count))
        .collect();
    Ok(mean_over_directions(NAMES, &per_dir))
}
