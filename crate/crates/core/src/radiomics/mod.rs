//! Radiomic features per (modality, region) pair.
//!
//! Feature names follow `<family>__<feature>__<modality>__<region>`, e.g.
//! `glszm__SmallAreaEmphasis__flair__whole`. Shape features are modality
//! free and use the modality token `na`.
//!
//! Texture families work on a [`DiscretizedRegion`] (fixed bin count,
//! min-max binning, default 32 bins). Matrix-based families use distance 1
//! and the 13 unique 3D directions; per-direction features are averaged
//! with equal weights.

mod discretize;
pub mod first_order;
pub mod glcm;
pub mod gldm;
pub mod glrlm;
pub mod glszm;
mod neighborhood;
pub mod ngtdm;
pub mod shape;

use std::collections::BTreeSet;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use discretize::{discretize, DiscretizedRegion};
pub use first_order::first_order;
pub use glcm::glcm_features;
pub use gldm::{gldm_features, gldm_features_with_alpha};
pub use glrlm::glrlm_features;
pub use glszm::glszm_features;
pub use neighborhood::{neighbors_26, DIRECTIONS_13};
pub use ngtdm::ngtdm_features;
pub use shape::shape_features;

use crate::error::{Error, Result};
use crate::nifti::{derive_regions, LabelMask, Modality, RegionKind, RegionMask, Volume};

/// Values of one feature family. `None` marks a feature that is undefined
/// for this input.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedFeatures(Vec<(&'static str, Option<f64>)>);

impl NamedFeatures {
    pub fn new(names: &[&'static str], values: Vec<Option<f64>>) -> Self {
        assert_eq!(names.len(), values.len(), "one value per feature name");
        NamedFeatures(names.iter().copied().zip(values).collect())
    }

    pub fn missing(names: &[&'static str]) -> Self {
        NamedFeatures(names.iter().map(|&n| (n, None)).collect())
    }

    /// Value of a defined feature; `None` when missing or unknown.
    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(n, _)| *n == name).and_then(|(_, v)| *v)
    }

    pub fn is_missing(&self, name: &str) -> bool {
        self.0.iter().any(|(n, v)| *n == name && v.is_none())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, Option<f64>)> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Equal-weight mean over directions. An empty list yields all-missing.
pub(crate) fn mean_over_directions(names: &[&'static str], per_dir: &[Vec<f64>]) -> NamedFeatures {
    if per_dir.is_empty() {
        return NamedFeatures::missing(names);
    }
    let n = per_dir.len() as f64;
    let values = (0..names.len())
        .map(|k| Some(per_dir.iter().map(|v| v[k]).sum::<f64>() / n))
        .collect();
    NamedFeatures::new(names, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Shape,
    FirstOrder,
    Glcm,
    Glrlm,
    Glszm,
    Gldm,
    Ngtdm,
}

impl Family {
    pub const INTENSITY: [Family; 6] = [
        Family::FirstOrder,
        Family::Glcm,
        Family::Glrlm,
        Family::Glszm,
        Family::Gldm,
        Family::Ngtdm,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Family::Shape => "shape",
            Family::FirstOrder => "firstorder",
            Family::Glcm => "glcm",
            Family::Glrlm => "glrlm",
            Family::Glszm => "glszm",
            Family::Gldm => "gldm",
            Family::Ngtdm => "ngtdm",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::Shape => "Shape",
            Family::FirstOrder => "First order",
            Family::Glcm => "GLCM",
            Family::Glrlm => "GLRLM",
            Family::Glszm => "GLSZM",
            Family::Gldm => "GLDM",
            Family::Ngtdm => "NGTDM",
        }
    }

    pub fn from_token(token: &str) -> Option<Family> {
        [Family::Shape]
            .into_iter()
            .chain(Family::INTENSITY)
            .find(|f| f.token() == token)
    }

    pub fn names(self) -> &'static [&'static str] {
        match self {
            Family::Shape => shape::NAMES,
            Family::FirstOrder => first_order::NAMES,
            Family::Glcm => glcm::NAMES,
            Family::Glrlm => glrlm::NAMES,
            Family::Glszm => glszm::NAMES,
            Family::Gldm => gldm::NAMES,
            Family::Ngtdm => ngtdm::NAMES,
        }
    }
}

pub fn feature_name(family: Family, feature: &str, modality: Option<Modality>, region: RegionKind) -> String {
    format!(
        "{}__{}__{}__{}",
        family.token(),
        feature,
        modality.map_or("na", Modality::token),
        region.token()
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadiomicsConfig {
    pub bin_count: usize,
    /// Level tolerance for gray-level dependence.
    pub gldm_alpha: u16,
}

impl Default for RadiomicsConfig {
    fn default() -> Self {
        RadiomicsConfig {
            bin_count: 32,
            gldm_alpha: 0,
        }
    }
}

/// All radiomic features of one subject.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureVector {
    /// Feature values in extraction order; missing features hold 0.0.
    pub entries: IndexMap<String, f64>,
    pub missing: BTreeSet<String>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.get(name).copied()
    }

    pub fn is_missing(&self, name: &str) -> bool {
        self.missing.contains(name)
    }

    fn push(&mut self, name: String, value: Option<f64>) {
        debug_assert!(!self.entries.contains_key(&name), "duplicate feature {name}");
        if value.is_none() {
            self.missing.insert(name.clone());
        }
        self.entries.insert(name, value.unwrap_or(0.0));
    }
}

/// Ordered list of every feature name `extract_all` emits.
pub fn all_feature_names() -> Vec<String> {
    let mut names = Vec::new();
    for region in RegionKind::ALL {
        for f in shape::NAMES {
            names.push(feature_name(Family::Shape, f, None, region));
        }
    }
    for modality in Modality::ALL {
        for region in RegionKind::ALL {
            for family in Family::INTENSITY {
                for f in family.names() {
                    names.push(feature_name(family, f, Some(modality), region));
                }
            }
        }
    }
    names
}

fn intensity_families(volume: &Volume, region: &RegionMask, config: &RadiomicsConfig) -> Result<Vec<NamedFeatures>> {
    let disc = discretize(volume, region, config.bin_count)?;
    Ok(vec![
        first_order(volume, region, config.bin_count)?,
        glcm_features(&disc)?,
        glrlm_features(&disc)?,
        glszm_features(&disc)?,
        gldm_features_with_alpha(&disc, config.gldm_alpha)?,
        ngtdm_features(&disc)?,
    ])
}

/// Extract shape features for the three regions and all intensity
/// families for each of the 4 x 3 (modality, region) pairs.
///
/// `volumes` are ordered as [`Modality::ALL`]. Features of an empty region
/// are recorded as missing with value 0.0.
pub fn extract_all(volumes: &[Volume; 4], mask: &LabelMask, config: &RadiomicsConfig) -> Result<FeatureVector> {
    for (volume, expected) in volumes.iter().zip(Modality::ALL) {
        mask.check_compatible(volume)?;
        if let Some(m) = volume.modality {
            if m != expected {
                return Err(Error::InvalidArgument(format!(
                    "volume slot for {expected:?} holds {m:?}"
                )));
            }
        }
    }
    let regions = derive_regions(mask);
    let mut out = FeatureVector::default();

    for kind in RegionKind::ALL {
        let region = regions.get(kind);
        let shape = if region.is_empty() {
            NamedFeatures::missing(shape::NAMES)
        } else {
            shape_features(region)?
        };
        for (f, v) in shape.iter() {
            out.push(feature_name(Family::Shape, f, None, kind), v);
        }
    }

    let pairs: Vec<(usize, RegionKind)> = (0..4)
        .flat_map(|m| RegionKind::ALL.into_iter().map(move |r| (m, r)))
        .collect();
    let computed: Vec<Result<Option<Vec<NamedFeatures>>>> = pairs
        .par_iter()
        .map(|&(m, kind)| {
            let region = regions.get(kind);
            if region.is_empty() {
                Ok(None)
            } else {
                intensity_families(&volumes[m], region, config).map(Some)
            }
        })
        .collect();

    for (&(m, kind), families) in pairs.iter().zip(computed) {
        let modality = Modality::ALL[m];
        match families? {
            Some(fams) => {
                for (family, values) in Family::INTENSITY.into_iter().zip(fams) {
                    for (f, v) in values.iter() {
                        out.push(feature_name(family, f, Some(modality), kind), v);
                    }
                }
            }
            None => {
                for family in Family::INTENSITY {
                    for f in family.names() {
                        out.push(feature_name(family, f, Some(modality), kind), None);
                    }
                }
            }
        }
    }
    Ok(out)
}
