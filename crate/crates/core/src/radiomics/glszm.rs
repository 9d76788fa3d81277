use super::discretize::DiscretizedRegion;
use super::neighborhood::{shift, DIRECTIONS_13};
use super::NamedFeatures;
use crate::error::{Error, Result};

pub const NAMES: &[&str] = &[
    "SmallAreaEmphasis",
    "LargeAreaEmphasis",
    "SmallAreaHighGrayLevelEmphasis",
    "SmallAreaLowGrayLevelEmphasis",
    "LargeAreaHighGrayLevelEmphasis",
    "LargeAreaLowGrayLevelEmphasis",
    "GrayLevelNonUniformityNormalized",
    "SizeZoneNonUniformityNormalized",
    "ZonePercentage",
    "GrayLevelVariance",
    "ZoneVariance",
    "ZoneEntropy",
];

struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Zones: 26-connected components of equal gray level. Returns
/// `(level, size)` for every zone, sorted.
pub fn zones(disc: &DiscretizedRegion) -> Vec<(u16, usize)> {
    let n = disc.len();
    // voxel_coords are ordered by flat index, so a binary search by
    // (z, y, x) locates neighbors without a hash map
    let key = |c: [i64; 3]| (c[2], c[1], c[0]);
    let keys: Vec<(i64, i64, i64)> = (0..n).map(|k| key(disc.coord(k))).collect();
    let mut ds = DisjointSet::new(n);
    for k in 0..n {
        let c = disc.coord(k);
        for &d in &DIRECTIONS_13 {
            let nb = shift(c, d, 1);
            if disc.level_at(nb) == Some(disc.levels[k]) {
                let j = keys.binary_search(&key(nb)).expect("neighbor inside region");
                ds.union(k, j);
            }
        }
    }
    let mut out = Vec::new();
    for k in 0..n {
        if ds.find(k) == k {
            out.push((disc.levels[k], ds.size[k]));
        }
    }
    out.sort_unstable();
    out
}

/// Size-zone features over 26-connected equal-level zones.
pub fn glszm_features(disc: &DiscretizedRegion) -> Result<NamedFeatures> {
    if disc.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let zs = zones(disc);
    let nz = zs.len() as f64;
    let max_size = zs.iter().map(|z| z.1).max().unwrap_or(1);
    let mut by_level = vec![0.0; disc.bin_count];
    let mut by_size = vec![0.0; max_size];
    let mut f = [0.0f64; 12];
    let (mut mu_g, mut mu_s) = (0.0, 0.0);
    for &(level, size) in &zs {
        let (g, s) = (f64::from(level), size as f64);
        by_level[usize::from(level) - 1] += 1.0;
        by_size[size - 1] += 1.0;
        f[0] += 1.0 / (s * s);
        f[1] += s * s;
        f[2] += g * g / (s * s);
        f[3] += 1.0 / (g * g * s * s);
        f[4] += g * g * s * s;
        f[5] += s * s / (g * g);
        mu_g += g / nz;
        mu_s += s / nz;
    }
    for k in 0..6 {
        f[k] /= nz;
    }
    f[6] = by_level.iter().map(|x| x * x).sum::<f64>() / (nz * nz);
    f[7] = by_size.iter().map(|x| x * x).sum::<f64>() / (nz * nz);
    f[8] = nz / disc.len() as f64;
    // joint (level, size) probabilities for variance and entropy
    let mut joint: Vec<((u16, usize), f64)> = Vec::new();
    for &z in &zs {
        match joint.last_mut() {
            Some((key, c)) if *key == z => *c += 1.0,
            _ => joint.push((z, 1.0)),
        }
    }
    for &((level, size), c) in &joint {
        let p = c / nz;
        f[9] += p * (f64::from(level) - mu_g).powi(2);
        f[10] += p * (size as f64 - mu_s).powi(2);
        f[11] -= p * p.log2();
    }
    Ok(NamedFeatures::new(NAMES, f.iter().map(|&v| Some(v)).collect()))
}
