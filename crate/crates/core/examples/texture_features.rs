//! Radiomic features of one synthetic subject: shape, first-order and the
//! five texture-matrix families on each tumor region.
//!
//! ```text
//! cargo run --example texture_features
//! ```

use mgmt_predict::radiomics::{
    discretize, glcm_features, gldm_features, glrlm_features, glszm_features, ngtdm_features, Family, NamedFeatures,
};
use mgmt_predict::synth::{synth_subject, SyntheticSpec};
use mgmt_predict::{derive_regions, extract_all, Modality, RadiomicsConfig, RegionKind};

fn show(family: Family, features: &NamedFeatures, take: usize) {
    let listed: Vec<String> = features
        .iter()
        .take(take)
        .map(|(name, v)| match v {
            Some(v) => format!("{name}={v:.4}"),
            None => format!("{name}=missing"),
        })
        .collect();
    println!("  {:<6} {}", family.token(), listed.join("  "));
}

fn main() -> mgmt_predict::Result<()> {
    let spec = SyntheticSpec::default();
    let subject = synth_subject(&spec, 0, 1)?;
    let config = RadiomicsConfig::default();

    // the whole subject in one call
    let all = extract_all(&subject.volumes, &subject.mask, &config)?;
    println!("{}: {} features, {} missing", subject.id, all.len(), all.missing.len());
    for name in ["shape__Maximum3DDiameter__na__whole", "firstorder__Mean__t1ce__core", "glcm__Contrast__flair__whole"] {
        println!("  {name} = {:.4}", all.get(name).unwrap_or(f64::NAN));
    }

    // the families one at a time on the T1ce image
    let t1ce = &subject.volumes[Modality::ALL.iter().position(|&m| m == Modality::T1ce).unwrap()];
    let regions = derive_regions(&subject.mask);
    for kind in RegionKind::ALL {
        let region = regions.get(kind);
        if region.is_empty() {
            continue;
        }
        let disc = discretize(t1ce, region, config.bin_count)?;
        println!("T1ce {} ({} voxels, {} gray levels)", kind.label(), disc.len(), config.bin_count);
        show(Family::Glcm, &glcm_features(&disc)?, 3);
        show(Family::Glrlm, &glrlm_features(&disc)?, 3);
        show(Family::Glszm, &glszm_features(&disc)?, 3);
        show(Family::Gldm, &gldm_features(&disc)?, 3);
        show(Family::Ngtdm, &ngtdm_features(&disc)?, 3);
    }
    Ok(())
}
