//! Builds the palette and pattern catalog and writes a small sheet of UV maps.
//!
//!     cargo run --example palette_textures -- [out_dir]

use std::path::PathBuf;

use pedsynth::texgen::{build_palette, build_patterns, UvComposer, UvRef};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("pedsynth-textures"));

    std::fs::create_dir_all(&out)?;

    let palette = build_palette();
    let grays = palette.entries().iter().filter(|c| c.is_achromatic()).count();
    println!("palette: {} colours, {grays} grays", palette.len());
    for p in build_patterns() {
        println!("pattern {:2} {:?}", p.id, p.geometry);
    }

    let composer = UvComposer::new((256, 256))?;
    for (colour, pattern) in [(0, 0), (130, 6), (312, 9), (470, 12), (610, 15)] {
        let map = composer.compose(colour, pattern)?;
        let id = UvRef::Random { palette_index: colour, pattern_id: pattern }.id();
        let path = out.join(format!("{id}.png"));
        map.write_png(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
