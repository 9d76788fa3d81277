use crate::error::{Error, Result};
use crate::nifti::{RegionMask, Volume};

/// Region voxels mapped to gray levels `1..=bin_count`.
#[derive(Debug, Clone)]
pub struct DiscretizedRegion {
    /// One level per region voxel, in ascending flat-index order.
    pub levels: Vec<u16>,
    pub bin_count: usize,
    pub bin_edges: Vec<f64>,
    /// Grid coordinates of each region voxel, aligned with `levels`.
    pub voxel_coords: Vec<[usize; 3]>,
    origin: [i64; 3],
    extent: [i64; 3],
    /// Dense bounding-box lookup; 0 marks voxels outside the region.
    lookup: Vec<u16>,
}

impl DiscretizedRegion {
    /// Build from explicit coordinates and levels. Voxels are reordered to
    /// ascending flat-index order (z, then y, then x).
    pub fn from_parts(voxel_coords: Vec<[usize; 3]>, levels: Vec<u16>, bin_count: usize) -> Result<Self> {
        if voxel_coords.is_empty() {
            return Err(Error::EmptyRegion);
        }
        if voxel_coords.len() != levels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates vs {} levels",
                voxel_coords.len(),
                levels.len()
            )));
        }
        if let Some(l) = levels.iter().find(|&&l| l == 0 || usize::from(l) > bin_count) {
            return Err(Error::InvalidArgument(format!("level {l} outside 1..={bin_count}")));
        }
        let mut pairs: Vec<([usize; 3], u16)> = voxel_coords.into_iter().zip(levels).collect();
        pairs.sort_unstable_by_key(|(c, _)| (c[2], c[1], c[0]));
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument(format!("duplicate voxel {:?}", w[0].0)));
        }
        let (voxel_coords, levels): (Vec<[usize; 3]>, Vec<u16>) = pairs.into_iter().unzip();
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for c in &voxel_coords {
            for a in 0..3 {
                lo[a] = lo[a].min(c[a] as i64);
                hi[a] = hi[a].max(c[a] as i64);
            }
        }
        let extent = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1];
        let mut lookup = vec![0u16; (extent[0] * extent[1] * extent[2]) as usize];
        for (c, &l) in voxel_coords.iter().zip(&levels) {
            let local = [c[0] as i64 - lo[0], c[1] as i64 - lo[1], c[2] as i64 - lo[2]];
            lookup[(local[0] + extent[0] * (local[1] + extent[1] * local[2])) as usize] = l;
        }
        Ok(DiscretizedRegion {
            levels,
            bin_count,
            bin_edges: (0..=bin_count).map(|k| k as f64).collect(),
            voxel_coords,
            origin: lo,
            extent,
            lookup,
        })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    #[inline]
    pub fn coord(&self, k: usize) -> [i64; 3] {
        let c = self.voxel_coords[k];
        [c[0] as i64, c[1] as i64, c[2] as i64]
    }

    /// Level at a grid coordinate, `None` outside the region.
    #[inline]
    pub fn level_at(&self, c: [i64; 3]) -> Option<u16> {
        let l = [c[0] - self.origin[0], c[1] - self.origin[1], c[2] - self.origin[2]];
        if (0..3).any(|a| l[a] < 0 || l[a] >= self.extent[a]) {
            return None;
        }
        match self.lookup[(l[0] + self.extent[0] * (l[1] + self.extent[1] * l[2])) as usize] {
            0 => None,
            v => Some(v),
        }
    }

    /// Longest possible run along any axis of the bounding box.
    pub(crate) fn max_extent(&self) -> usize {
        self.extent.iter().copied().max().unwrap_or(1) as usize
    }
}

/// Scaled positions this close to a bin edge are treated as lying on it, so
/// that rescaling the intensities cannot move a voxel across an edge
/// through rounding alone.
pub const EDGE_SNAP: f64 = 1e-9;

/// Fixed-bin-count min-max discretization of the region intensities:
/// `level = 1 + floor(bin_count * (v - min) / (max - min))`, clamped to
/// `bin_count`. A constant region maps to level 1 everywhere.
pub fn discretize(volume: &Volume, region: &RegionMask, bin_count: usize) -> Result<DiscretizedRegion> {
    if bin_count < 2 || bin_count > usize::from(u16::MAX) {
        return Err(Error::InvalidArgument(format!("bin_count must be in 2..=65535, got {bin_count}")));
    }
    if volume.grid.dims != region.grid.dims {
        return Err(Error::DimensionMismatch(format!(
            "volume dims {:?} vs region dims {:?}",
            volume.grid.dims, region.grid.dims
        )));
    }
    let idx: Vec<usize> = region.indices().collect();
    if idx.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let values: Vec<f64> = idx.iter().map(|&i| volume.data[i]).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let levels: Vec<u16> = values
        .iter()
        .map(|&v| {
            if range > 0.0 {
                let t = bin_count as f64 * (v - min) / range;
                let edge = t.round();
                let bin = if (t - edge).abs() <= EDGE_SNAP { edge } else { t.floor() } as usize;
                (1 + bin).min(bin_count) as u16
            } else {
                1
            }
        })
        .collect();
    let coords = idx.iter().map(|&i| volume.grid.coords(i)).collect();
    let mut disc = DiscretizedRegion::from_parts(coords, levels, bin_count)?;
    let width = if range > 0.0 { range / bin_count as f64 } else { 1.0 };
    disc.bin_edges = (0..=bin_count).map(|k| min + k as f64 * width).collect();
    Ok(disc)
}
