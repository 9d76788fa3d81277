use super::discretize::discretize;
use super::NamedFeatures;
use crate::error::{Error, Result};
use crate::nifti::{RegionMask, Volume};

pub const NAMES: &[&str] = &[
    "Mean",
    "Median",
    "Variance",
    "InterquartileRange",
    "MeanAbsoluteDeviation",
    "Percentile10",
    "Percentile90",
    "Minimum",
    "Maximum",
    "Range",
    "Skewness",
    "Kurtosis",
    "Energy",
    "RootMeanSquared",
    "Entropy",
    "Uniformity",
];

/// Percentile of sorted data by linear interpolation between closest
/// ranks, inclusive endpoints: position `q * (n - 1)`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Intensity statistics over the raw region values. Entropy and
/// Uniformity use the discretized gray-level histogram.
pub fn first_order(volume: &Volume, region: &RegionMask, bin_count: usize) -> Result<NamedFeatures> {
    let disc = discretize(volume, region, bin_count)?;
    let mut values: Vec<f64> = region.indices().map(|i| volume.data[i]).collect();
    if values.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4, mut mad, mut energy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &v in &values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        mad += d.abs();
        energy += v * v;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    mad /= n;
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (0.0, 0.0)
    };

    values.sort_by(f64::total_cmp);
    let min = values[0];
    let max = values[values.len() - 1];

    let mut hist = vec![0usize; bin_count + 1];
    for &l in &disc.levels {
        hist[usize::from(l)] += 1;
    }
    let (mut entropy, mut uniformity) = (0.0, 0.0);
    for &c in hist.iter().filter(|&&c| c > 0) {
        let p = c as f64 / n;
        entropy -= p * p.log2();
        uniformity += p * p;
    }

    Ok(NamedFeatures::new(
        NAMES,
        vec![
            Some(mean),
            Some(percentile(&values, 0.5)),
            Some(m2),
            Some(percentile(&values, 0.75) - percentile(&values, 0.25)),
            Some(mad),
            Some(percentile(&values, 0.10)),
            Some(percentile(&values, 0.90)),
            Some(min),
            Some(max),
            Some(max - min),
            Some(skewness),
            Some(kurtosis),
            Some(energy),
            Some((energy / n).sqrt()),
            Some(entropy),
            Some(uniformity),
        ],
    ))
}
