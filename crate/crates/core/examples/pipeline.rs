//! The whole pipeline on the bundled demo configuration, driven through the
//! same entry point as the command-line tool.
//!
//!     cargo run --release --example pipeline -- [out_dir]

use std::path::{Path, PathBuf};

fn main() -> pedsynth::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("pedsynth-demo"));
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/configs/demo.toml");
    let out_arg = out.to_string_lossy().into_owned();
    let base = ["pedsynth", "--config", config.to_str().expect("utf-8 path"), "--out", &out_arg];

    for step in [&["gen-characters"][..], &["simulate"], &["crop"], &["assemble", "--target", "50"], &["stats"]] {
        let args = base.iter().chain(step).copied();
        println!("$ pedsynth {}", step.join(" "));
        println!("{}\n", pedsynth::cli::run_args(args)?);
    }
    Ok(())
}
