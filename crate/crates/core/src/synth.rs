//! Seeded synthetic cohorts: ellipsoidal tumors in small MR-like volumes.
//!
//! Each subject has a whole-tumor ellipsoid made of nested shells: edema
//! (label 2) outside, an enhancing rim (4) and a necrotic center (1).
//! Class 1 subjects get a larger tumor (`diameter_delta_mm`) and a brighter
//! T1ce core (`intensity_delta`). With both effects at zero, labels carry
//! no image signal.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latent::latent_feature_name;
use crate::nifti::{write_label_mask, write_nifti, Grid, LabelMask, Modality, StorageType, Volume};
use crate::radiomics::{extract_all, RadiomicsConfig};
use crate::seed;
use crate::table::{format_value, FeatureTable, Labels};

/// Fraction of the normalized ellipsoid radius occupied by the tumor core.
const CORE_FRACTION: f64 = 0.6;
/// Fraction occupied by the necrotic center.
const NECROSIS_FRACTION: f64 = 0.35;
/// Voxels kept between the tumor and the volume border.
const BORDER_VOXELS: f64 = 1.0;
/// Largest center displacement from the volume middle, in voxels.
const CENTER_JITTER: f64 = 2.0;
/// Half-width of the uniform jitter on the base radius, in mm.
const RADIUS_JITTER_MM: f64 = 1.0;
/// Standard deviation of per-subject tissue intensity offsets.
const TISSUE_SD: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_subjects: usize,
    pub dims: [usize; 3],
    pub spacing_mm: [f64; 3],
    /// Mean whole-tumor semi-axis of class 0 subjects.
    pub base_radius_mm: f64,
    /// Extra whole-tumor diameter of class 1 subjects.
    pub diameter_delta_mm: f64,
    /// Extra T1ce intensity inside the tumor core of class 1 subjects.
    pub intensity_delta: f64,
    /// Fraction of class 1 subjects.
    pub class_balance: f64,
    /// Standard deviation of voxel noise.
    pub noise: f64,
    pub latent_dim: usize,
    /// Mean shift of the informative latent dimensions for class 1.
    pub latent_shift: f64,
    /// Number of leading latent dimensions carrying `latent_shift`.
    pub latent_informative: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_subjects: 200,
            dims: [32, 32, 32],
            spacing_mm: [1.0, 1.0, 1.0],
            base_radius_mm: 6.0,
            diameter_delta_mm: 8.0,
            intensity_delta: 40.0,
            class_balance: 0.5,
            noise: 5.0,
            latent_dim: 64,
            latent_shift: 1.0,
            latent_informative: 4,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    /// The same cohort shape with all label effects removed.
    pub fn null(&self) -> SyntheticSpec {
        SyntheticSpec {
            diameter_delta_mm: 0.0,
            intensity_delta: 0.0,
            latent_shift: 0.0,
            ..self.clone()
        }
    }

    fn radius_range(&self) -> (f64, f64) {
        let grow = self.diameter_delta_mm / 2.0;
        (
            self.base_radius_mm - RADIUS_JITTER_MM + grow.min(0.0),
            self.base_radius_mm + RADIUS_JITTER_MM + grow.max(0.0),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subjects < 2 {
            return Err(Error::Config("a cohort needs at least 2 subjects".into()));
        }
        if !(0.0..=1.0).contains(&self.class_balance) {
            return Err(Error::Config("class_balance must lie in [0, 1]".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::Config("noise must be a finite non-negative number".into()));
        }
        if self.latent_informative > self.latent_dim {
            return Err(Error::Config("latent_informative exceeds latent_dim".into()));
        }
        Grid::new(self.dims, self.spacing_mm)?;
        let (r_min, r_max) = self.radius_range();
        let min_spacing = self.spacing_mm.iter().copied().fold(f64::INFINITY, f64::min);
        if r_min < 2.0 * min_spacing {
            return Err(Error::InvalidArgument(format!(
                "smallest tumor radius {r_min:.1} mm is below two voxels"
            )));
        }
        for axis in 0..3 {
            let half = self.dims[axis] as f64 * self.spacing_mm[axis] / 2.0;
            let needed = r_max + (CENTER_JITTER + BORDER_VOXELS) * self.spacing_mm[axis];
            if needed > half {
                return Err(Error::InvalidArgument(format!(
                    "dims {:?} are too small for a tumor diameter of {:.1} mm",
                    self.dims,
                    2.0 * r_max
                )));
            }
        }
        Ok(())
    }
}

pub fn subject_id(index: usize) -> String {
    format!("subject_{index:03}")
}

/// Class labels: `round(n * class_balance)` ones in seeded random order.
pub fn cohort_labels(spec: &SyntheticSpec) -> Vec<u8> {
    let n_pos = (spec.n_subjects as f64 * spec.class_balance).round() as usize;
    let mut labels: Vec<u8> = (0..spec.n_subjects).map(|i| u8::from(i < n_pos)).collect();
    labels.shuffle(&mut seed::rng(spec.seed, "labels"));
    labels
}

/// One generated subject, held in memory.
#[derive(Debug, Clone)]
pub struct SyntheticSubject {
    pub id: String,
    pub label: u8,
    /// Ordered as [`Modality::ALL`].
    pub volumes: [Volume; 4],
    pub mask: LabelMask,
}

/// Tissue means per modality: background, edema, enhancing, necrosis.
fn tissue_means(modality: Modality) -> [f64; 4] {
    match modality {
        Modality::T1w => [100.0, 90.0, 95.0, 60.0],
        Modality::T1ce => [100.0, 95.0, 180.0, 70.0],
        Modality::T2w => [100.0, 180.0, 150.0, 200.0],
        Modality::Flair => [100.0, 190.0, 140.0, 120.0],
    }
}

fn tissue_of(label: u8) -> usize {
    match label {
        2 => 1,
        4 => 2,
        1 => 3,
        _ => 0,
    }
}

/// Generate subject `index` of the cohort with the given class label.
pub fn synth_subject(spec: &SyntheticSpec, index: usize, label: u8) -> Result<SyntheticSubject> {
    spec.validate()?;
    let grid = Grid::new(spec.dims, spec.spacing_mm)?;
    let mut rng = seed::rng(spec.seed, &format!("subject:{index}"));

    let radius = spec.base_radius_mm
        + rng.random_range(-RADIUS_JITTER_MM..=RADIUS_JITTER_MM)
        + f64::from(label) * spec.diameter_delta_mm / 2.0;
    let mut semi_axes = [radius, radius * rng.random_range(0.75..=1.0), radius * rng.random_range(0.75..=1.0)];
    semi_axes.shuffle(&mut rng);
    let center: [f64; 3] = std::array::from_fn(|axis| {
        let mid = (spec.dims[axis] as f64 - 1.0) / 2.0;
        (mid + rng.random_range(-CENTER_JITTER..=CENTER_JITTER)) * spec.spacing_mm[axis]
    });

    let mut labels = vec![0u8; grid.len()];
    for (i, l) in labels.iter_mut().enumerate() {
        let c = grid.coords(i);
        let rho = (0..3)
            .map(|a| {
                let d = (c[a] as f64 * spec.spacing_mm[a] - center[a]) / semi_axes[a];
                d * d
            })
            .sum::<f64>()
            .sqrt();
        *l = if rho < NECROSIS_FRACTION {
            1
        } else if rho < CORE_FRACTION {
            4
        } else if rho <= 1.0 {
            2
        } else {
            0
        };
    }

    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::Config(e.to_string()))?;
    let tissue_jitter = Normal::new(0.0, TISSUE_SD).map_err(|e| Error::Config(e.to_string()))?;
    let volumes = Modality::ALL.map(|modality| {
        let mut means = tissue_means(modality);
        for m in means.iter_mut().skip(1) {
            *m += tissue_jitter.sample(&mut rng);
        }
        if modality == Modality::T1ce {
            let boost = f64::from(label) * spec.intensity_delta;
            means[2] += boost;
            means[3] += boost;
        }
        let data: Vec<f64> = labels
            .iter()
            .map(|&l| means[tissue_of(l)] + noise.sample(&mut rng))
            .collect();
        Volume::new(grid, data).map(|v| v.with_modality(modality))
    });
    let [v0, v1, v2, v3] = volumes;
    Ok(SyntheticSubject {
        id: subject_id(index),
        label,
        volumes: [v0?, v1?, v2?, v3?],
        mask: LabelMask::new(grid, labels)?,
    })
}

/// Latent vectors: standard normal, with class 1 shifted by
/// `latent_shift` on the first `latent_informative` dimensions.
pub fn latent_table(spec: &SyntheticSpec, labels: &[u8]) -> Result<FeatureTable> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal is valid");
    let mut rng = seed::rng(spec.seed, "latent");
    let mut data = Vec::with_capacity(labels.len() * spec.latent_dim);
    for &label in labels {
        for k in 0..spec.latent_dim {
            let shift = if k < spec.latent_informative { f64::from(label) * spec.latent_shift } else { 0.0 };
            data.push(normal.sample(&mut rng) + shift);
        }
    }
    FeatureTable::new(
        (0..labels.len()).map(subject_id).collect(),
        (0..spec.latent_dim).map(|k| latent_feature_name(&latent_column(k))).collect(),
        data,
    )
}

fn latent_column(k: usize) -> String {
    format!("l{k:03}")
}

fn latent_csv_string(table: &FeatureTable, dim: usize) -> String {
    let mut s = String::from("subject_id");
    for k in 0..dim {
        s.push(',');
        s.push_str(&latent_column(k));
    }
    s.push('\n');
    for (r, id) in table.subjects().iter().enumerate() {
        s.push_str(id);
        for &v in table.row(r) {
            s.push(',');
            s.push_str(&format_value(v));
        }
        s.push('\n');
    }
    s
}

/// Generate the cohort and extract radiomic features in memory, without
/// writing images. Rows are in subject order.
pub fn extract_cohort(spec: &SyntheticSpec, config: &RadiomicsConfig) -> Result<(FeatureTable, Vec<u8>)> {
    spec.validate()?;
    let labels = cohort_labels(spec);
    let rows = labels
        .par_iter()
        .enumerate()
        .map(|(i, &label)| {
            let subject = synth_subject(spec, i, label)?;
            Ok((subject.id, extract_all(&subject.volumes, &subject.mask, config)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((FeatureTable::from_vectors(rows)?, labels))
}

/// Files written by [`write_cohort`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohortFiles {
    pub manifest: PathBuf,
    pub labels: PathBuf,
    pub latent: PathBuf,
}

/// Write the cohort to `dir`: gzipped NIFTI images per subject, a manifest
/// with image paths relative to `dir`, `labels.csv` and `latent.csv`.
pub fn write_cohort(spec: &SyntheticSpec, dir: &Path) -> Result<CohortFiles> {
    spec.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let labels = cohort_labels(spec);
    let rows = labels
        .par_iter()
        .enumerate()
        .map(|(i, &label)| {
            let subject = synth_subject(spec, i, label)?;
            let mut files = Vec::with_capacity(5);
            for volume in &subject.volumes {
                let modality = volume.modality.expect("synthetic volumes carry their modality");
                let name = format!("{}_{}.nii.gz", subject.id, modality.token());
                write_nifti(&dir.join(&name), &volume.grid, &volume.data, StorageType::Float32)?;
                files.push(name);
            }
            let name = format!("{}_seg.nii.gz", subject.id);
            write_label_mask(&dir.join(&name), &subject.mask)?;
            files.push(name);
            Ok(format!("{},{}\n", subject.id, files.join(",")))
        })
        .collect::<Result<Vec<_>>>()?;

    let write = |name: &str, contents: String| -> Result<PathBuf> {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    };
    let manifest = write("manifest.csv", format!("subject_id,t1,t1ce,t2,flair,mask\n{}", rows.concat()))?;
    let label_file = Labels {
        subjects: (0..spec.n_subjects).map(subject_id).collect(),
        values: labels.clone(),
    };
    let labels_path = write("labels.csv", label_file.to_csv_string())?;
    let latent = write("latent.csv", latent_csv_string(&latent_table(spec, &labels)?, spec.latent_dim))?;
    Ok(CohortFiles {
        manifest,
        labels: labels_path,
        latent,
    })
}
