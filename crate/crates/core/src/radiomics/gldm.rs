use super::discretize::DiscretizedRegion;
use super::neighborhood::{neighbors_26, shift};
use super::NamedFeatures;
use crate::error::{Error, Result};

pub const NAMES: &[&str] = &[
    "SmallDependenceEmphasis",
    "LargeDependenceEmphasis",
    "GrayLevelNonUniformity",
    "DependenceNonUniformity",
    "DependenceNonUniformityNormalized",
    "GrayLevelVariance",
    "DependenceVariance",
    "DependenceEntropy",
];

/// Dependence of every region voxel: the number of in-region 26-neighbors
/// whose level differs by at most `alpha`.
pub fn dependences(disc: &DiscretizedRegion, alpha: u16) -> Vec<usize> {
    (0..disc.len())
        .map(|k| {
            let c = disc.coord(k);
            let level = disc.levels[k];
            neighbors_26()
                .filter(|&d| {
                    disc.level_at(shift(c, d, 1))
                        .is_some_and(|l| l.abs_diff(level) <= alpha)
                })
                .count()
        })
        .collect()
}

pub fn gldm_features(disc: &DiscretizedRegion) -> Result<NamedFeatures> {
    gldm_features_with_alpha(disc, 0)
}

/// Gray-level dependence features. A voxel with dependence `d` fills the
/// matrix cell `(level, d + 1)`.
pub fn gldm_features_with_alpha(disc: &DiscretizedRegion, alpha: u16) -> Result<NamedFeatures> {
    if disc.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let ng = disc.bin_count;
    let deps = dependences(disc, alpha);
    let mut m = vec![0.0; ng * 27];
    for (k, &d) in deps.iter().enumerate() {
        m[(usize::from(disc.levels[k]) - 1) * 27 + d] += 1.0;
    }
    let nz = disc.len() as f64;
    let mut by_level = vec![0.0; ng];
    let mut by_dep = vec![0.0; 27];
    let mut f = [0.0f64; 8];
    let (mut mu_g, mut mu_d) = (0.0, 0.0);
    for i in 0..ng {
        for j in 0..27 {
            let c = m[i * 27 + j];
            if c == 0.0 {
                continue;
            }
            let (g, dj) = ((i + 1) as f64, (j + 1) as f64);
            let p = c / nz;
            by_level[i] += c;
            by_dep[j] += c;
            f[0] += c / (dj * dj);
            f[1] += c * dj * dj;
            f[7] -= p * p.log2();
            mu_g += g * p;
            mu_d += dj * p;
        }
    }
    for i in 0..ng {
        f[5] += by_level[i] / nz * ((i + 1) as f64 - mu_g).powi(2);
    }
    for j in 0..27 {
        f[6] += by_dep[j] / nz * ((j + 1) as f64 - mu_d).powi(2);
    }
    f[0] /= nz;
    f[1] /= nz;
    f[2] = by_level.iter().map(|x| x * x).sum::<f64>() / nz;
    f[3] = by_dep.iter().map(|x| x * x).sum::<f64>() / nz;
    f[4] = f[3] / nz;
    Ok(NamedFeatures::new(NAMES, f.iter().map(|&v| Some(v)).collect()))
}
