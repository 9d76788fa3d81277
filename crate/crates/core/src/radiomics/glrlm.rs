use super::discretize::DiscretizedRegion;
use super::neighborhood::{shift, DIRECTIONS_13};
use super::{mean_over_directions, NamedFeatures};
use crate::error::{Error, Result};

pub const NAMES: &[&str] = &[
    "ShortRunEmphasis",
    "LongRunEmphasis",
    "GrayLevelNonUniformityNormalized",
    "RunLengthNonUniformityNormalized",
    "RunPercentage",
    "GrayLevelVariance",
    "RunEntropy",
    "LowGrayLevelRunEmphasis",
    "HighGrayLevelRunEmphasis",
];

/// Run-length counts along one direction: `(level, length) -> count`,
/// stored row-major as `ng x max_len` with zero-based indices.
pub fn run_lengths(disc: &DiscretizedRegion, dir: [i64; 3]) -> (Vec<f64>, usize) {
    let ng = disc.bin_count;
    let max_len = disc.max_extent();
    let mut m = vec![0.0; ng * max_len];
    for (k, &level) in disc.levels.iter().enumerate() {
        let c = disc.coord(k);
        if disc.level_at(shift(c, dir, -1)) == Some(level) {
            continue;
        }
        let mut len = 1;
        while disc.level_at(shift(c, dir, len as i64)) == Some(level) {
            len += 1;
        }
        m[(usize::from(level) - 1) * max_len + len - 1] += 1.0;
    }
    (m, max_len)
}

fn features_for(m: &[f64], ng: usize, max_len: usize, n_voxels: usize) -> Vec<f64> {
    let nr: f64 = m.iter().sum();
    let mut by_level = vec![0.0; ng];
    let mut by_len = vec![0.0; max_len];
    let mut f = [0.0f64; 9];
    let mut mu = 0.0;
    for i in 0..ng {
        for j in 0..max_len {
            let c = m[i * max_len + j];
            if c == 0.0 {
                continue;
            }
            let (g, r) = ((i + 1) as f64, (j + 1) as f64);
            let p = c / nr;
            by_level[i] += c;
            by_len[j] += c;
            f[0] += c / (r * r);
            f[1] += c * r * r;
            f[6] -= p * p.log2();
            f[7] += c / (g * g);
            f[8] += c * g * g;
            mu += g * p;
        }
    }
    for i in 0..ng {
        f[5] += by_level[i] / nr * ((i + 1) as f64 - mu).powi(2);
    }
    f[0] /= nr;
    f[1] /= nr;
    f[2] = by_level.iter().map(|x| x * x).sum::<f64>() / (nr * nr);
    f[3] = by_len.iter().map(|x| x * x).sum::<f64>() / (nr * nr);
    f[4] = nr / n_voxels as f64;
    f[7] /= nr;
    f[8] /= nr;
    f.to_vec()
}

/// Run-length features, equal-weight mean over the 13 directions. Runs
/// are maximal collinear segments of one gray level inside the region.
pub fn glrlm_features(disc: &DiscretizedRegion) -> Result<NamedFeatures> {
    if disc.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let per_dir: Vec<Vec<f64>> = DIRECTIONS_13
        .iter()
        .map(|&d| {
            let (m, max_len) = run_lengths(disc, d);
            features_for(&m, disc.bin_count, max_len, disc.len())
        })
        .collect();
    Ok(mean_over_directions(NAMES, &per_dir))
}

/// Features for a single direction; exposed for inspection and tests.
pub fn glrlm_features_along(disc: &DiscretizedRegion, dir: [i64; 3]) -> Result<NamedFeatures> {
    if disc.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let (m, max_len) = run_lengths(disc, dir);
    Ok(NamedFeatures::new(
        NAMES,
        features_for(&m, disc.bin_count, max_len, disc.len())
            .into_iter()
            .map(Some)
            .collect(),
    ))
}
