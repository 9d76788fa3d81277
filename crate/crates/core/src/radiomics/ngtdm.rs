use super::discretize::DiscretizedRegion;
use super::neighborhood::{neighbors_26, shift};
use super::NamedFeatures;
use crate::error::{Error, Result};

pub const NAMES: &[&str] = &["Coarseness", "Contrast", "Busyness", "Complexity", "Strength"];

/// Coarseness reported when the summed differences vanish.
pub const COARSENESS_CAP: f64 = 1e6;

/// Per-level `(n_i, s_i)`: number of voxels at level `i` that have at least
/// one in-region 26-neighbor, and the sum of `|i - mean neighbor level|`
/// over those voxels.
pub fn tone_differences(disc: &DiscretizedRegion) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); disc.bin_count];
    for (k, &level) in disc.levels.iter().enumerate() {
        let c = disc.coord(k);
        let (mut sum, mut count) = (0.0, 0usize);
        for d in neighbors_26() {
            if let Some(l) = disc.level_at(shift(c, d, 1)) {
                sum += f64::from(l);
                count += 1;
            }
        }
        if count > 0 {
            let slot = &mut out[usize::from(level) - 1];
            slot.0 += 1.0;
            slot.1 += (f64::from(level) - sum / count as f64).abs();
        }
    }
    out
}

/// Neighboring gray-tone difference features. Voxels without any in-region
/// neighbor are excluded; if none remain every feature is missing.
pub fn ngtdm_features(disc: &DiscretizedRegion) -> Result<NamedFeatures> {
    if disc.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let tones = tone_differences(disc);
    let nvp: f64 = tones.iter().map(|t| t.0).sum();
    if nvp == 0.0 {
        return Ok(NamedFeatures::missing(NAMES));
    }
    // (gray level, p_i, s_i) over occupied levels
    let occ: Vec<(f64, f64, f64)> = tones
        .iter()
        .enumerate()
        .filter(|(_, t)| t.0 > 0.0)
        .map(|(i, t)| ((i + 1) as f64, t.0 / nvp, t.1))
        .collect();
    let ngp = occ.len() as f64;
    let ps: f64 = occ.iter().map(|&(_, p, s)| p * s).sum();
    let s_sum: f64 = occ.iter().map(|t| t.2).sum();

    let coarseness = if ps > 0.0 { 1.0 / ps } else { COARSENESS_CAP };
    let (mut contrast, mut busy_den, mut complexity, mut strength) = (0.0, 0.0, 0.0, 0.0);
    for &(i, pi, si) in &occ {
        for &(j, pj, sj) in &occ {
            contrast += pi * pj * (i - j).powi(2);
            busy_den += (i * pi - j * pj).abs();
            complexity += (i - j).abs() * (pi * si + pj * sj) / (pi + pj);
            strength += (pi + pj) * (i - j).powi(2);
        }
    }
    let contrast = if ngp > 1.0 {
        contrast / (ngp * (ngp - 1.0)) * s_sum / nvp
    } else {
        0.0
    };
    let busyness = (busy_den > 0.0).then(|| ps / busy_den);
    let strength = if s_sum > 0.0 { strength / s_sum } else { 0.0 };

    Ok(NamedFeatures::new(
        NAMES,
        vec![
            Some(coarseness),
            Some(contrast),
            busyness,
            Some(complexity / nvp),
            Some(strength),
        ],
    ))
}
