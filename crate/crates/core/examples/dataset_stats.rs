//! Assembles a toy dataset from synthetic crops, re-assembles it to show
//! that nothing is rewritten, then subsamples it and prints statistics.
//!
//!     cargo run --example dataset_stats -- [out_dir]

use std::path::PathBuf;

use image::{Rgb, RgbImage};
use pedsynth::datasetio::{assemble, stats, subsample, verify, CropRecord};

fn crops() -> Vec<CropRecord> {
    let mut out = Vec::new();
    for pid in 1..=6u32 {
        for cam in [1, 2, 3] {
            if (pid + cam) % 4 == 0 {
                continue;
            }
            for frame in (0..48).step_by(12) {
                let shade = (pid * 40 % 256) as u8;
                let mut image = RgbImage::from_pixel(20, 50, Rgb([shade, 255 - shade, (cam * 60) as u8]));
                image.put_pixel(0, 0, Rgb([frame as u8, 0, 0]));
                out.push(CropRecord { pid, scene: 1, cam, frame, left: 10 * cam, top: frame as u32, image });
            }
        }
    }
    out
}

fn main() -> pedsynth::Result<()> {
    let root: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("pedsynth-dataset"));

    let first = assemble(crops(), &root, Some(5))?;
    println!("assembled {} crops: written {} unchanged {}", first.manifest.len(), first.written, first.unchanged);
    let again = assemble(crops(), &root, Some(5))?;
    println!("again: written {} unchanged {}", again.written, again.unchanged);
    verify(&root, &again.manifest)?;

    let sample = subsample(&again.manifest, 12, 5)?;
    println!("subsample of {} keeps {} ids\n", sample.len(), stats(&sample).ids);
    print!("{}", stats(&again.manifest));
    Ok(())
}
