//! Brute-force reference implementations used as test oracles.
//!
//! Everything here is written from the textbook definitions with the
//! simplest possible algorithms (all-pairs scans, exact integer
//! arithmetic, iterative eigen-solvers) and shares no code with the crate.

use std::collections::{BTreeMap, HashMap};

// ---------------------------------------------------------------- Fisher

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

/// Two-sided Fisher exact p-value by enumerating every table with the
/// observed margins. Tables at most `1 + 1e-7` times as probable as the
/// observed one count as "at least as extreme"; the comparison is exact
/// integer arithmetic on unnormalized hypergeometric weights.
pub fn fisher_oracle(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let row1 = a + b;
    let row2 = c + d;
    let col1 = a + c;
    let weight = |x: u64| binomial(row1, x) * binomial(row2, col1 - x);
    let observed = weight(a);
    let lo = col1.saturating_sub(row2);
    let hi = col1.min(row1);
    let (mut extreme, mut total) = (0u128, 0u128);
    for x in lo..=hi {
        let w = weight(x);
        total += w;
        if w * 10_000_000 <= observed * 10_000_001 {
            extreme += w;
        }
    }
    (extreme as f64 / total as f64).min(1.0)
}

// ---------------------------------------------------------------- AUC

/// Mann-Whitney AUC by comparing every (positive, negative) pair.
pub fn auc_oracle(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

// ---------------------------------------------------------------- radiomics

/// A masked region: voxel coordinates with their raw intensities.
#[derive(Debug, Clone)]
pub struct OracleRegion {
    pub voxels: Vec<([i64; 3], f64)>,
    pub spacing: [f64; 3],
}

pub type Features = BTreeMap<String, Option<f64>>;

fn put(out: &mut Features, family: &str, name: &str, v: Option<f64>) {
    out.insert(format!("{family}__{name}"), v);
}

fn chebyshev_adjacent(a: [i64; 3], b: [i64; 3]) -> bool {
    a != b && (0..3).all(|k| (a[k] - b[k]).abs() <= 1)
}

/// The 13 offsets whose first nonzero component is positive.
fn half_neighborhood() -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    for dx in -1..=1 {
        for dy in -1..=1 {
            for dz in -1..=1 {
                let d = [dx, dy, dz];
                if d.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0) {
                    out.push(d);
                }
            }
        }
    }
    assert_eq!(out.len(), 13);
    out
}

pub fn oracle_levels(region: &OracleRegion, bins: usize) -> Vec<usize> {
    let lo = region.voxels.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let hi = region.voxels.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    region
        .voxels
        .iter()
        .map(|&(_, v)| {
            if hi > lo {
                let scaled = bins as f64 * (v - lo) / (hi - lo);
                // positions within 1e-9 of an edge count as on the edge
                let nearest = scaled.round();
                let bin = if (scaled - nearest).abs() <= 1e-9 { nearest } else { scaled.floor() };
                (bin as usize + 1).min(bins)
            } else {
                1
            }
        })
        .collect()
}

fn interpolated_quantile(values: &[f64], q: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = q * (s.len() - 1) as f64;
    let below = s[h.floor() as usize];
    let above = s[h.ceil() as usize];
    below + (h - h.floor()) * (above - below)
}

pub fn oracle_first_order(region: &OracleRegion, bins: usize) -> Features {
    let x: Vec<f64> = region.voxels.iter().map(|v| v.1).collect();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let central = |k: i32| x.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
    let var = central(2);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let energy: f64 = x.iter().map(|v| v * v).sum();
    let mut hist: HashMap<usize, f64> = HashMap::new();
    for l in oracle_levels(region, bins) {
        *hist.entry(l).or_default() += 1.0;
    }
    let entropy: f64 = hist.values().map(|c| -(c / n) * (c / n).log2()).sum();
    let uniformity: f64 = hist.values().map(|c| (c / n).powi(2)).sum();

    let mut out = Features::new();
    let f = "firstorder";
    put(&mut out, f, "Mean", Some(mean));
    put(&mut out, f, "Median", Some(interpolated_quantile(&x, 0.5)));
    put(&mut out, f, "Variance", Some(var));
    put(
        &mut out,
        f,
        "InterquartileRange",
        Some(interpolated_quantile(&x, 0.75) - interpolated_quantile(&x, 0.25)),
    );
    put(
        &mut out,
        f,
        "MeanAbsoluteDeviation",
        Some(x.iter().map(|v| (v - mean).abs()).sum::<f64>() / n),
    );
    put(&mut out, f, "Percentile10", Some(interpolated_quantile(&x, 0.1)));
    put(&mut out, f, "Percentile90", Some(interpolated_quantile(&x, 0.9)));
    put(&mut out, f, "Minimum", Some(min));
    put(&mut out, f, "Maximum", Some(max));
    put(&mut out, f, "Range", Some(max - min));
    put(&mut out, f, "Skewness", Some(if var > 0.0 { central(3) / var.powf(1.5) } else { 0.0 }));
    put(&mut out, f, "Kurtosis", Some(if var > 0.0 { central(4) / (var * var) } else { 0.0 }));
    put(&mut out, f, "Energy", Some(energy));
    put(&mut out, f, "RootMeanSquared", Some((energy / n).sqrt()));
    put(&mut out, f, "Entropy", Some(entropy));
    put(&mut out, f, "Uniformity", Some(uniformity));
    out
}

/// Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi rotations,
/// sorted descending.
pub fn jacobi_eigenvalues(mut a: [[f64; 3]; 3]) -> [f64; 3] {
    for _ in 0..100 {
        let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        if off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut r = [[0.0; 3]; 3];
            for (i, row) in r.iter_mut().enumerate() {
                row[i] = 1.0;
            }
            r[p][p] = c;
            r[q][q] = c;
            r[p][q] = s;
            r[q][p] = -s;
            // a <- r^T a r
            let mut ar = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    ar[i][j] = (0..3).map(|k| a[i][k] * r[k][j]).sum();
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    a[i][j] = (0..3).map(|k| r[k][i] * ar[k][j]).sum();
                }
            }
            a[p][q] = 0.0;
            a[q][p] = 0.0;
        }
    }
    let mut e = [a[0][0], a[1][1], a[2][2]];
    e.sort_by(|x, y| y.partial_cmp(x).unwrap());
    e
}

pub fn oracle_shape(region: &OracleRegion) -> Features {
    let sp = region.spacing;
    let pts: Vec<[f64; 3]> = region
        .voxels
        .iter()
        .map(|(c, _)| [c[0] as f64 * sp[0], c[1] as f64 * sp[1], c[2] as f64 * sp[2]])
        .collect();
    let n = pts.len() as f64;
    // the farthest pair of a finite point set is always on its boundary,
    // so scanning every pair gives the surface-voxel diameter
    let mut diameter: f64 = 0.0;
    for a in &pts {
        for b in &pts {
            diameter = diameter.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt());
        }
    }
    let mean: Vec<f64> = (0..3).map(|k| pts.iter().map(|p| p[k]).sum::<f64>() / n).collect();
    let mut cov = [[0.0; 3]; 3];
    for (i, row) in cov.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = pts.iter().map(|p| (p[i] - mean[i]) * (p[j] - mean[j])).sum::<f64>() / n;
        }
    }
    let trace = cov[0][0] + cov[1][1] + cov[2][2];
    let e = jacobi_eigenvalues(cov).map(|l| if l <= 1e-12 * trace { 0.0 } else { l });
    let mut out = Features::new();
    let f = "shape";
    put(&mut out, f, "VoxelVolume", Some(n * sp[0] * sp[1] * sp[2]));
    put(&mut out, f, "Maximum3DDiameter", Some(diameter));
    put(&mut out, f, "MajorAxisLength", Some(4.0 * e[0].sqrt()));
    put(&mut out, f, "MinorAxisLength", Some(4.0 * e[1].sqrt()));
    put(&mut out, f, "LeastAxisLength", Some(4.0 * e[2].sqrt()));
    put(&mut out, f, "Elongation", (e[0] > 0.0).then(|| (e[1] / e[0]).sqrt()));
    put(&mut out, f, "Flatness", (e[0] > 0.0).then(|| (e[2] / e[0]).sqrt()));
    out
}

fn average(per_direction: &[Vec<f64>], names: &[&str], family: &str) -> Features {
    let mut out = Features::new();
    for (k, name) in names.iter().enumerate() {
        let v = if per_direction.is_empty() {
            None
        } else {
            Some(per_direction.iter().map(|d| d[k]).sum::<f64>() / per_direction.len() as f64)
        };
        put(&mut out, family, name, v);
    }
    out
}

pub fn oracle_glcm(region: &OracleRegion, bins: usize) -> Features {
    let levels = oracle_levels(region, bins);
    let names = [
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
    let mut per_direction = Vec::new();
    for d in half_neighborhood() {
        // every ordered voxel pair one step apart along +d or -d
        let mut counts: HashMap<(usize, usize), f64> = HashMap::new();
        for (a, (ca, _)) in region.voxels.iter().enumerate() {
            for (b, (cb, _)) in region.voxels.iter().enumerate() {
                let diff = [cb[0] - ca[0], cb[1] - ca[1], cb[2] - ca[2]];
                if diff == d || diff == [-d[0], -d[1], -d[2]] {
                    *counts.entry((levels[a], levels[b])).or_default() += 1.0;
                }
            }
        }
        let total: f64 = counts.values().sum();
        if total == 0.0 {
            continue;
        }
        let p = |i: usize, j: usize| counts.get(&(i, j)).copied().unwrap_or(0.0) / total;
        let g: Vec<usize> = (1..=bins).collect();
        let px = |i: usize| g.iter().map(|&j| p(i, j)).sum::<f64>();
        let py = |j: usize| g.iter().map(|&i| p(i, j)).sum::<f64>();
        let mux: f64 = g.iter().map(|&i| i as f64 * px(i)).sum();
        let muy: f64 = g.iter().map(|&j| j as f64 * py(j)).sum();
        let sx = g.iter().map(|&i| (i as f64 - mux).powi(2) * px(i)).sum::<f64>().sqrt();
        let sy = g.iter().map(|&j| (j as f64 - muy).powi(2) * py(j)).sum::<f64>().sqrt();
        let mut v = vec![0.0; names.len()];
        for &i in &g {
            for &j in &g {
                let pij = p(i, j);
                if pij == 0.0 {
                    continue;
                }
                let (fi, fj) = (i as f64, j as f64);
                v[0] += pij * pij;
                v[1] += (fi - fj).powi(2) * pij;
                v[3] += pij / (1.0 + (fi - fj).powi(2));
                v[4] -= pij * pij.log2();
                v[6] += fi * fj * pij;
                v[7] += (fi + fj - mux - muy).powi(2) * pij;
                v[8] += (fi + fj - mux - muy).powi(3) * pij;
                v[9] += (fi - fj).abs() * pij;
                v[10] += pij / (1.0 + (fi - fj).abs());
            }
        }
        v[2] = if sx * sy > 1e-12 { (v[6] - mux * muy) / (sx * sy) } else { 1.0 };
        v[5] = mux;
        per_direction.push(v);
    }
    average(&per_direction, &names, "glcm")
}

pub fn oracle_glrlm(region: &OracleRegion, bins: usize) -> Features {
    let levels = oracle_levels(region, bins);
    let at: HashMap<[i64; 3], usize> = region.voxels.iter().zip(&levels).map(|((c, _), &l)| (*c, l)).collect();
    let names = [
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
    let np = region.voxels.len() as f64;
    let mut per_direction = Vec::new();
    for d in half_neighborhood() {
        // voxels per (level, run length); a run of length r holds r voxels
        let mut voxels_in: HashMap<(usize, usize), usize> = HashMap::new();
        for ((c, _), &l) in region.voxels.iter().zip(&levels) {
            let mut len = 1;
            for sign in [1i64, -1] {
                let mut k = 1;
                while at.get(&[c[0] + sign * k * d[0], c[1] + sign * k * d[1], c[2] + sign * k * d[2]]) == Some(&l) {
                    len += 1;
                    k += 1;
                }
            }
            *voxels_in.entry((l, len)).or_default() += 1;
        }
        let runs: HashMap<(usize, usize), f64> = voxels_in
            .iter()
            .map(|(&(g, r), &count)| {
                assert_eq!(count % r, 0);
                ((g, r), (count / r) as f64)
            })
            .collect();
        let nr: f64 = runs.values().sum();
        let mut by_g: HashMap<usize, f64> = HashMap::new();
        let mut by_r: HashMap<usize, f64> = HashMap::new();
        for (&(g, r), &c) in &runs {
            *by_g.entry(g).or_default() += c;
            *by_r.entry(r).or_default() += c;
        }
        let mu: f64 = by_g.iter().map(|(&g, c)| g as f64 * c / nr).sum();
        let sum = |f: &dyn Fn(f64, f64) -> f64| runs.iter().map(|(&(g, r), &c)| c * f(g as f64, r as f64)).sum::<f64>();
        per_direction.push(vec![
            sum(&|_, r| 1.0 / (r * r)) / nr,
            sum(&|_, r| r * r) / nr,
            by_g.values().map(|c| c * c).sum::<f64>() / (nr * nr),
            by_r.values().map(|c| c * c).sum::<f64>() / (nr * nr),
            nr / np,
            by_g.iter().map(|(&g, c)| c / nr * (g as f64 - mu).powi(2)).sum(),
            runs.values().map(|c| -(c / nr) * (c / nr).log2()).sum(),
            sum(&|g, _| 1.0 / (g * g)) / nr,
            sum(&|g, _| g * g) / nr,
        ]);
    }
    average(&per_direction, &names, "glrlm")
}

/// Connected same-level zones (26-connectivity) by repeated label
/// propagation until nothing changes. Returns (level, size) per zone.
pub fn oracle_zones(region: &OracleRegion, levels: &[usize]) -> Vec<(usize, usize)> {
    let n = region.voxels.len();
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for a in 0..n {
            for b in 0..n {
                if levels[a] == levels[b] && chebyshev_adjacent(region.voxels[a].0, region.voxels[b].0) && label[b] < label[a] {
                    label[a] = label[b];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut sizes: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (a, &l) in label.iter().enumerate() {
        let e = sizes.entry(l).or_insert((levels[a], 0));
        e.1 += 1;
    }
    sizes.into_values().collect()
}

pub fn oracle_glszm(region: &OracleRegion, bins: usize) -> Features {
    let levels = oracle_levels(region, bins);
    let zones = oracle_zones(region, &levels);
    let nz = zones.len() as f64;
    let mean = |f: &dyn Fn(f64, f64) -> f64| zones.iter().map(|&(g, s)| f(g as f64, s as f64)).sum::<f64>() / nz;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut by_g: HashMap<usize, f64> = HashMap::new();
    let mut by_s: HashMap<usize, f64> = HashMap::new();
    for &(g, s) in &zones {
        *joint.entry((g, s)).or_default() += 1.0;
        *by_g.entry(g).or_default() += 1.0;
        *by_s.entry(s).or_default() += 1.0;
    }
    let mu_g = mean(&|g, _| g);
    let mu_s = mean(&|_, s| s);
    let mut out = Features::new();
    let f = "glszm";
    put(&mut out, f, "SmallAreaEmphasis", Some(mean(&|_, s| 1.0 / (s * s))));
    put(&mut out, f, "LargeAreaEmphasis", Some(mean(&|_, s| s * s)));
    put(&mut out, f, "SmallAreaHighGrayLevelEmphasis", Some(mean(&|g, s| g * g / (s * s))));
    put(&mut out, f, "SmallAreaLowGrayLevelEmphasis", Some(mean(&|g, s| 1.0 / (g * g * s * s))));
    put(&mut out, f, "LargeAreaHighGrayLevelEmphasis", Some(mean(&|g, s| g * g * s * s)));
    put(&mut out, f, "LargeAreaLowGrayLevelEmphasis", Some(mean(&|g, s| s * s / (g * g))));
    put(
        &mut out,
        f,
        "GrayLevelNonUniformityNormalized",
        Some(by_g.values().map(|c| c * c).sum::<f64>() / (nz * nz)),
    );
    put(
        &mut out,
        f,
        "SizeZoneNonUniformityNormalized",
        Some(by_s.values().map(|c| c * c).sum::<f64>() / (nz * nz)),
    );
    put(&mut out, f, "ZonePercentage", Some(nz / region.voxels.len() as f64));
    put(
        &mut out,
        f,
        "GrayLevelVariance",
        Some(joint.iter().map(|(&(g, _), c)| c / nz * (g as f64 - mu_g).powi(2)).sum()),
    );
    put(
        &mut out,
        f,
        "ZoneVariance",
        Some(joint.iter().map(|(&(_, s), c)| c / nz * (s as f64 - mu_s).powi(2)).sum()),
    );
    put(&mut out, f, "ZoneEntropy", Some(joint.values().map(|c| -(c / nz) * (c / nz).log2()).sum()));
    out
}

pub fn oracle_gldm(region: &OracleRegion, bins: usize) -> Features {
    let levels = oracle_levels(region, bins);
    let np = region.voxels.len() as f64;
    // matrix cell (level, dependent neighbours + 1)
    let mut m: HashMap<(usize, usize), f64> = HashMap::new();
    for (a, (ca, _)) in region.voxels.iter().enumerate() {
        let dependent = region
            .voxels
            .iter()
            .enumerate()
            .filter(|&(b, (cb, _))| chebyshev_adjacent(*ca, *cb) && levels[b] == levels[a])
            .count();
        *m.entry((levels[a], dependent + 1)).or_default() += 1.0;
    }
    let mut by_g: HashMap<usize, f64> = HashMap::new();
    let mut by_j: HashMap<usize, f64> = HashMap::new();
    for (&(g, j), &c) in &m {
        *by_g.entry(g).or_default() += c;
        *by_j.entry(j).or_default() += c;
    }
    let mu_g: f64 = by_g.iter().map(|(&g, c)| g as f64 * c / np).sum();
    let mu_j: f64 = by_j.iter().map(|(&j, c)| j as f64 * c / np).sum();
    let sum = |f: &dyn Fn(f64) -> f64| m.iter().map(|(&(_, j), &c)| c * f(j as f64)).sum::<f64>();
    let dn = by_j.values().map(|c| c * c).sum::<f64>();
    let mut out = Features::new();
    let f = "gldm";
    put(&mut out, f, "SmallDependenceEmphasis", Some(sum(&|j| 1.0 / (j * j)) / np));
    put(&mut out, f, "LargeDependenceEmphasis", Some(sum(&|j| j * j) / np));
    put(&mut out, f, "GrayLevelNonUniformity", Some(by_g.values().map(|c| c * c).sum::<f64>() / np));
    put(&mut out, f, "DependenceNonUniformity", Some(dn / np));
    put(&mut out, f, "DependenceNonUniformityNormalized", Some(dn / (np * np)));
    put(
        &mut out,
        f,
        "GrayLevelVariance",
        Some(by_g.iter().map(|(&g, c)| c / np * (g as f64 - mu_g).powi(2)).sum()),
    );
    put(
        &mut out,
        f,
        "DependenceVariance",
        Some(by_j.iter().map(|(&j, c)| c / np * (j as f64 - mu_j).powi(2)).sum()),
    );
    put(&mut out, f, "DependenceEntropy", Some(m.values().map(|c| -(c / np) * (c / np).log2()).sum()));
    out
}

/// (level, p_i, s_i) of one occupied gray level.
type Tone = (f64, f64, f64);

pub fn oracle_ngtdm(region: &OracleRegion, bins: usize) -> Features {
    let levels = oracle_levels(region, bins);
    let mut n: BTreeMap<usize, f64> = BTreeMap::new();
    let mut s: BTreeMap<usize, f64> = BTreeMap::new();
    for (a, (ca, _)) in region.voxels.iter().enumerate() {
        let neighbours: Vec<f64> = region
            .voxels
            .iter()
            .enumerate()
            .filter(|(_, (cb, _))| chebyshev_adjacent(*ca, *cb))
            .map(|(b, _)| levels[b] as f64)
            .collect();
        if neighbours.is_empty() {
            continue;
        }
        let avg = neighbours.iter().sum::<f64>() / neighbours.len() as f64;
        *n.entry(levels[a]).or_default() += 1.0;
        *s.entry(levels[a]).or_default() += (levels[a] as f64 - avg).abs();
    }
    let names = ["Coarseness", "Contrast", "Busyness", "Complexity", "Strength"];
    let mut out = Features::new();
    let nvp: f64 = n.values().sum();
    if nvp == 0.0 {
        for name in names {
            put(&mut out, "ngtdm", name, None);
        }
        return out;
    }
    let gs: Vec<(f64, f64, f64)> = n.iter().map(|(&g, &c)| (g as f64, c / nvp, s[&g])).collect();
    let ngp = gs.len() as f64;
    let ps: f64 = gs.iter().map(|&(_, p, s)| p * s).sum();
    let s_total: f64 = gs.iter().map(|t| t.2).sum();
    let double = |f: &dyn Fn(Tone, Tone) -> f64| {
        gs.iter().flat_map(|&a| gs.iter().map(move |&b| (a, b))).map(|(a, b)| f(a, b)).sum::<f64>()
    };
    let busy_den = double(&|(i, pi, _), (j, pj, _)| (i * pi - j * pj).abs());
    put(&mut out, "ngtdm", "Coarseness", Some(if ps > 0.0 { 1.0 / ps } else { 1e6 }));
    put(
        &mut out,
        "ngtdm",
        "Contrast",
        Some(if ngp > 1.0 {
            double(&|(i, pi, _), (j, pj, _)| pi * pj * (i - j).powi(2)) / (ngp * (ngp - 1.0)) * s_total / nvp
        } else {
            0.0
        }),
    );
    put(&mut out, "ngtdm", "Busyness", (busy_den > 0.0).then(|| ps / busy_den));
    put(
        &mut out,
        "ngtdm",
        "Complexity",
        Some(double(&|(i, pi, si), (j, pj, sj)| (i - j).abs() * (pi * si + pj * sj) / (pi + pj)) / nvp),
    );
    put(
        &mut out,
        "ngtdm",
        "Strength",
        Some(if s_total > 0.0 {
            double(&|(i, pi, _), (j, pj, _)| (pi + pj) * (i - j).powi(2)) / s_total
        } else {
            0.0
        }),
    );
    out
}

/// All oracle families of one region.
pub fn oracle_all(region: &OracleRegion, bins: usize) -> Features {
    let mut out = oracle_shape(region);
    out.extend(oracle_first_order(region, bins));
    out.extend(oracle_glcm(region, bins));
    out.extend(oracle_glrlm(region, bins));
    out.extend(oracle_glszm(region, bins));
    out.extend(oracle_gldm(region, bins));
    out.extend(oracle_ngtdm(region, bins));
    out
}

/// Absolute tolerance, scaled by magnitude above 1.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
