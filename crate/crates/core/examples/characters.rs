//! Samples a small population, prints one character file and reads the whole
//! population back from disk.
//!
//!     cargo run --example characters -- [out_dir]

use std::path::{Path, PathBuf};

use pedsynth::persona::{
    emit_character_file, generate_population, read_population, write_population, PopulationSpec, SourceMix,
};
use pedsynth::texgen::TexturePool;
use pedsynth::wardrobe::load_catalog;

fn main() -> pedsynth::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("pedsynth-characters"));
    let catalog = load_catalog(&Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/catalog.tsv"))?;

    let mix = SourceMix { original: 4, web_image: 0, random: 8 };
    let spec = PopulationSpec::new(mix.total(), mix, 42);
    let population = generate_population(&spec, &catalog, &TexturePool::full())?;

    for c in &population {
        println!(
            "{:3} {:?} age {:4.1} height {:5.1} cm  {:8} {} items",
            c.id,
            c.gender,
            c.age,
            c.height_cm,
            c.texture_source().as_str(),
            c.outfit.assignments.len()
        );
    }
    println!("\n{}", emit_character_file(&population[5]));

    write_population(&population, spec.seed, &out)?;
    let back = read_population(&out, &catalog)?;
    assert_eq!(back, population);
    println!("round trip of {} files under {} ok", back.len(), out.display());
    Ok(())
}
