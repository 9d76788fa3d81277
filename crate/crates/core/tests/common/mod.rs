//! Shared test harness: random inputs and library-vs-oracle comparisons.

#![allow(dead_code)]

pub mod oracle;

use mgmt_predict::nifti::Grid;
use mgmt_predict::radiomics::{
    discretize, first_order, glcm_features, gldm_features, glrlm_features, glszm_features, ngtdm_features, shape_features,
    Family, NamedFeatures,
};
use mgmt_predict::{derive_regions, LabelMask, RegionKind, RegionMask, Volume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oracle::{close, oracle_all, Features, OracleRegion};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random masked volume of at most 5x5x5 voxels. Half the cases use
/// small integer intensities so that ties and flat regions occur.
pub fn random_case(seed: u64) -> (Volume, LabelMask, usize) {
    let mut r = rng(seed);
    let dims = [r.random_range(1..=5), r.random_range(1..=5), r.random_range(1..=5)];
    let spacing = if r.random_bool(0.5) {
        [1.0, 1.0, 1.0]
    } else {
        [r.random_range(0.5..2.0), r.random_range(0.5..2.0), r.random_range(0.5..2.0)]
    };
    let grid = Grid::new(dims, spacing).unwrap();
    let integer = r.random_bool(0.5);
    let data: Vec<f64> = (0..grid.len())
        .map(|_| if integer { f64::from(r.random_range(0..5u8)) } else { r.random_range(0.0..100.0) })
        .collect();
    let density = r.random_range(0.2..1.0);
    let labels: Vec<u8> = (0..grid.len())
        .map(|_| if r.random_bool(density) { [1, 2, 4][r.random_range(0..3)] } else { 0 })
        .collect();
    let bins = r.random_range(2..=4);
    (
        Volume::new(grid, data).unwrap(),
        LabelMask::new(grid, labels).unwrap(),
        bins,
    )
}

pub fn oracle_region(volume: &Volume, region: &RegionMask) -> OracleRegion {
    OracleRegion {
        voxels: region
            .indices()
            .map(|i| {
                let c = volume.grid.coords(i);
                ([c[0] as i64, c[1] as i64, c[2] as i64], volume.data[i])
            })
            .collect(),
        spacing: volume.grid.spacing,
    }
}

fn add(out: &mut Features, family: Family, named: NamedFeatures) {
    for (name, v) in named.iter() {
        out.insert(format!("{}__{name}", family.token()), v);
    }
}

/// Every family computed by the library for one region.
pub fn library_features(volume: &Volume, region: &RegionMask, bins: usize) -> Features {
    let mut out = Features::new();
    add(&mut out, Family::Shape, shape_features(region).unwrap());
    add(&mut out, Family::FirstOrder, first_order(volume, region, bins).unwrap());
    let disc = discretize(volume, region, bins).unwrap();
    add(&mut out, Family::Glcm, glcm_features(&disc).unwrap());
    add(&mut out, Family::Glrlm, glrlm_features(&disc).unwrap());
    add(&mut out, Family::Glszm, glszm_features(&disc).unwrap());
    add(&mut out, Family::Gldm, gldm_features(&disc).unwrap());
    add(&mut out, Family::Ngtdm, ngtdm_features(&disc).unwrap());
    out
}

/// Compare library and oracle on every nonempty region of case `seed`.
/// Returns the number of feature values compared and any mismatches.
pub fn compare_case(seed: u64, tol: f64) -> (usize, Vec<String>) {
    let (volume, mask, bins) = random_case(seed);
    let regions = derive_regions(&mask);
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for kind in RegionKind::ALL {
        let region = regions.get(kind);
        if region.is_empty() {
            continue;
        }
        let lib = library_features(&volume, region, bins);
        let ora = oracle_all(&oracle_region(&volume, region), bins);
        if lib.keys().ne(ora.keys()) {
            mismatches.push(format!("seed {seed} {kind:?}: feature sets differ"));
            continue;
        }
        for (name, &a) in &lib {
            let b = ora[name];
            compared += 1;
            let ok = match (a, b) {
                (Some(a), Some(b)) => close(a, b, tol),
                (None, None) => true,
                _ => false,
            };
            if !ok {
                mismatches.push(format!("seed {seed} {kind:?} {name}: library {a:?}, oracle {b:?}"));
            }
        }
    }
    (compared, mismatches)
}
