//! Read a NIFTI-1 volume and a BraTS label mask, then derive the three
//! tumor regions.
//!
//! ```text
//! cargo run --example read_nifti                       # writes and reads a demo pair
//! cargo run --example read_nifti -- image.nii.gz seg.nii.gz
//! ```

use std::path::PathBuf;

use mgmt_predict::nifti::{read_label_mask, read_volume, write_label_mask, write_nifti, Grid, StorageType};
use mgmt_predict::{derive_regions, LabelMask, RegionKind};

fn demo_pair(dir: &std::path::Path) -> mgmt_predict::Result<(PathBuf, PathBuf)> {
    let grid = Grid::new([8, 8, 6], [1.0, 1.0, 2.5])?;
    let data: Vec<f64> = (0..grid.len()).map(|i| (i % 17) as f64 * 3.5).collect();
    // a small lesion: necrotic center, enhancing shell, edema around it
    let labels: Vec<u8> = (0..grid.len())
        .map(|i| {
            let [x, y, z] = grid.coords(i);
            let d = (x as i64 - 4).abs().max((y as i64 - 4).abs()).max((z as i64 - 3).abs());
            [1, 4, 2].get(d as usize).copied().unwrap_or(0)
        })
        .collect();
    let image = dir.join("demo_t1ce.nii.gz");
    let seg = dir.join("demo_seg.nii.gz");
    write_nifti(&image, &grid, &data, StorageType::Float32)?;
    write_label_mask(&seg, &LabelMask::new(grid, labels)?)?;
    Ok((image, seg))
}

fn main() -> mgmt_predict::Result<()> {
    let args: Vec<PathBuf> = std::env::args_os().skip(1).map(PathBuf::from).collect();
    let tmp = tempfile::tempdir().expect("temporary directory");
    let (image, seg) = match args.as_slice() {
        [image, seg] => (image.clone(), seg.clone()),
        [] => demo_pair(tmp.path())?,
        _ => {
            eprintln!("usage: read_nifti [IMAGE SEG]");
            std::process::exit(1);
        }
    };

    let volume = read_volume(&image)?;
    let (lo, hi) = volume.data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    println!("{}", image.display());
    println!("  dims    {:?}", volume.dims());
    println!("  spacing {:?} mm", volume.spacing());
    println!("  range   [{lo}, {hi}]");

    let mask = read_label_mask(&seg)?;
    mask.check_compatible(&volume)?;
    let regions = derive_regions(&mask);
    println!("{}", seg.display());
    for kind in RegionKind::ALL {
        let region = regions.get(kind);
        let voxel_mm3: f64 = volume.spacing().iter().product();
        println!(
            "  {:<9} {:>5} voxels  {:>8.1} mm^3",
            kind.label(),
            region.count(),
            region.count() as f64 * voxel_mm3
        );
    }
    Ok(())
}
