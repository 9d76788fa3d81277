use nalgebra::{Matrix3, SymmetricEigen};

use super::NamedFeatures;
use crate::error::{Error, Result};
use crate::nifti::RegionMask;

/// Relative size (against the covariance trace) below which an eigenvalue
/// is treated as zero.
pub const EIGEN_NOISE: f64 = 1e-12;

pub const NAMES: &[&str] = &[
    "VoxelVolume",
    "Maximum3DDiameter",
    "MajorAxisLength",
    "MinorAxisLength",
    "LeastAxisLength",
    "Elongation",
    "Flatness",
];

const FACE_NEIGHBORS: [[i64; 3]; 6] = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]];

/// Voxel-based shape descriptors in physical units (mm, mm^3).
///
/// The maximum diameter is taken over surface voxels (at least one face
/// neighbor outside the region or the grid); the farthest pair of voxel
/// centers always lies on the surface. Axis lengths are `4 * sqrt(lambda)`
/// for the eigenvalues of the population covariance of voxel centers.
/// Elongation and Flatness are undefined (missing) when the major
/// eigenvalue is zero.
pub fn shape_features(region: &RegionMask) -> Result<NamedFeatures> {
    let grid = region.grid;
    let sp = grid.spacing;
    let dims = grid.dims;
    let inside = |c: [i64; 3]| -> bool {
        (0..3).all(|a| c[a] >= 0 && (c[a] as usize) < dims[a])
            && region.member[grid.index(c[0] as usize, c[1] as usize, c[2] as usize)]
    };

    let mut points = Vec::new();
    let mut surface = Vec::new();
    for idx in region.indices() {
        let c = grid.coords(idx);
        let p = [c[0] as f64 * sp[0], c[1] as f64 * sp[1], c[2] as f64 * sp[2]];
        let ci = [c[0] as i64, c[1] as i64, c[2] as i64];
        if FACE_NEIGHBORS
            .iter()
            .any(|d| !inside([ci[0] + d[0], ci[1] + d[1], ci[2] + d[2]]))
        {
            surface.push(p);
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(Error::EmptyRegion);
    }

    let mut max_sq = 0.0f64;
    for (k, a) in surface.iter().enumerate() {
        for b in &surface[k + 1..] {
            let d = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2);
            max_sq = max_sq.max(d);
        }
    }

    let n = points.len() as f64;
    let mut mean = [0.0; 3];
    for p in &points {
        for a in 0..3 {
            mean[a] += p[a];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = Matrix3::<f64>::zeros();
    for p in &points {
        let d = [p[0] - mean[0], p[1] - mean[1], p[2] - mean[2]];
        for r in 0..3 {
            for c in 0..3 {
                cov[(r, c)] += d[r] * d[c];
            }
        }
    }
    cov /= n;
    // Eigenvalues at round-off level (flat or linear regions) are exactly
    // zero; otherwise the square root would turn 1e-16 noise into 1e-8.
    let noise_floor = EIGEN_NOISE * cov.trace();
    let mut eig: Vec<f64> = SymmetricEigen::new(cov)
        .eigenvalues
        .iter()
        .map(|&l| if l <= noise_floor { 0.0 } else { l })
        .collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let (major, minor, least) = (eig[0], eig[1], eig[2]);
    let ratio = |x: f64| (major > 0.0).then(|| (x / major).sqrt());

    Ok(NamedFeatures::new(
        NAMES,
        vec![
            Some(n * sp[0] * sp[1] * sp[2]),
            Some(max_sq.sqrt()),
            Some(4.0 * major.sqrt()),
            Some(4.0 * minor.sqrt()),
            Some(4.0 * least.sqrt()),
            ratio(minor),
            ratio(least),
        ],
    ))
}
