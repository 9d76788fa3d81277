//! Write a synthetic cohort to disk: four gzipped NIFTI images and a label
//! mask per subject, plus manifest, labels and latent-vector CSVs.
//!
//! ```text
//! cargo run --example synthetic_cohort -- OUT_DIR [N_SUBJECTS]
//! ```

use std::path::PathBuf;

use mgmt_predict::synth::{cohort_labels, synth_subject, write_cohort, SyntheticSpec};
use mgmt_predict::{derive_regions, RegionKind};

fn main() -> mgmt_predict::Result<()> {
    let mut args = std::env::args().skip(1);
    let tmp = tempfile::tempdir().expect("temporary directory");
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| tmp.path().join("cohort"));
    let n_subjects = args.next().map(|s| s.parse().expect("N_SUBJECTS must be a number")).unwrap_or(10);
    let spec = SyntheticSpec { n_subjects, ..SyntheticSpec::default() };
    spec.validate()?;

    // class 1 tumors are larger and enhance more strongly
    let labels = cohort_labels(&spec);
    for (i, &label) in labels.iter().enumerate().take(6) {
        let subject = synth_subject(&spec, i, label)?;
        let regions = derive_regions(&subject.mask);
        println!(
            "{} class {label}: whole {:>5} voxels, core {:>5}, enhancing {:>5}",
            subject.id,
            regions.get(RegionKind::Whole).count(),
            regions.get(RegionKind::Core).count(),
            regions.get(RegionKind::EnhCore).count()
        );
    }

    let files = write_cohort(&spec, &dir)?;
    let images = std::fs::read_dir(&dir).map(|d| d.count()).unwrap_or(0);
    println!("\nwrote {images} files to {}", dir.display());
    println!("  manifest {}", files.manifest.display());
    println!("  labels   {}", files.labels.display());
    println!("  latent   {}", files.latent.display());
    println!("null variant (no class effects): {:?}", spec.null());
    Ok(())
}
