//! Command-line front end.
//!
//! Every subcommand prints a short summary (or one JSON object with
//! `--json`). Failures print a single `error: <kind>: <message>` line and
//! exit with status 1.

mod config;
mod pipeline;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;

pub use config::{CaptureConfig, Paths, PopulationConfig, RenderConfig, RunConfig, SceneOverride, TextureConfig};
pub use pipeline::{
    cam_dir, cmd_assemble, cmd_crop, cmd_eval, cmd_gen_characters, cmd_gen_textures, cmd_run, cmd_simulate,
    cmd_stats, crops_for_frame, frame_file, record_scene, AssembleSummary, CharactersSummary, Context,
    CropSummary, RunSummary, SceneRecording, SimulateSummary, TexturesSummary,
};

use crate::error::{Error, Result};
use crate::evalkit::DEFAULT_MAX_RANK;

#[derive(Debug, Parser)]
#[command(name = "pedsynth", version, about = "Synthetic pedestrian dataset generator")]
pub struct Cli {
    /// TOML run configuration; bundled assets are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output root.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print a JSON summary instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compose the UV texture pool.
    GenTextures {
        #[arg(long)]
        colors: Option<usize>,
        #[arg(long)]
        patterns: Option<usize>,
        #[arg(long)]
        size: Option<u32>,
    },
    /// Sample the character population.
    GenCharacters {
        #[arg(long)]
        total: Option<usize>,
    },
    /// Simulate scenes, writing annotations, sampled frames and event logs.
    Simulate {
        #[arg(long = "scene")]
        scenes: Vec<String>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Cut person crops from the sampled frames.
    Crop {
        #[arg(long = "scene")]
        scenes: Vec<String>,
    },
    /// Merge scene crops into the dataset.
    Assemble {
        /// Also write an identity-stratified sample of this size.
        #[arg(long)]
        target: Option<usize>,
    },
    /// Dataset statistics.
    Stats {
        /// Manifest file or dataset directory (default: <out>/dataset).
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// CMC and mAP from a distance matrix.
    Eval {
        #[arg(long)]
        distmat: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        gallery: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_RANK)]
        max_rank: usize,
    },
    /// gen-characters, simulate, crop, assemble and stats in one go.
    Run,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.paths.out = o.clone();
    }
    match &cli.command {
        Command::GenTextures { colors, patterns, size } => {
            cfg.textures.colors = colors.unwrap_or(cfg.textures.colors);
            cfg.textures.patterns = patterns.unwrap_or(cfg.textures.patterns);
            cfg.textures.size = size.unwrap_or(cfg.textures.size);
        }
        Command::GenCharacters { total: Some(n) } => {
            cfg.population.total = *n;
            cfg.population.random = n.saturating_sub(cfg.population.original + cfg.population.web_image);
        }
        Command::Simulate { duration: Some(d), .. } => {
            cfg.capture.duration_s = *d;
            for o in cfg.scene.values_mut() {
                o.duration_s = None;
            }
        }
        _ => {}
    }
    Ok(cfg)
}

fn render<T: Serialize>(json: bool, value: &T, text: impl FnOnce(&T) -> String) -> Result<String> {
    if json {
        serde_json::to_string(value).map_err(|e| Error::Validation(format!("json output: {e}")))
    } else {
        Ok(text(value))
    }
}

/// Runs a parsed command line and returns what it prints.
pub fn execute(cli: &Cli) -> Result<String> {
    let run = || -> Result<String> {
        let json = cli.json;
        match &cli.command {
            Command::GenTextures { .. } => {
                let cfg = load_config(cli)?;
                cfg.validate()?;
                render(json, &cmd_gen_textures(&cfg)?, |s| format!("textures {} written {}", s.maps, s.written))
            }
            Command::GenCharacters { .. } => {
                let ctx = Context::load(load_config(cli)?)?;
                render(json, &cmd_gen_characters(&ctx)?, |s| {
                    format!(
                        "characters {} original {} web_image {} random {}",
                        s.characters, s.original, s.web_image, s.random
                    )
                })
            }
            Command::Simulate { scenes, .. } => {
                let ctx = Context::load(load_config(cli)?)?;
                render(json, &cmd_simulate(&ctx, scenes)?, |v| {
                    v.iter()
                        .map(|s| {
                            format!(
                                "scene {} agents {} events {} frames {} rendered {}",
                                s.scene, s.agents, s.events, s.frames, s.rendered
                            )
                        })
                        .collect::<Vec<_>>()
                        .join("\n")
                })
            }
            Command::Crop { scenes } => {
                let ctx = Context::load(load_config(cli)?)?;
                render(json, &cmd_crop(&ctx, scenes)?, |v| {
                    v.iter()
                        .map(|s| format!("scene {} crops {} rejected {}", s.scene, s.crops, s.rejected))
                        .collect::<Vec<_>>()
                        .join("\n")
                })
            }
            Command::Assemble { target } => {
                let ctx = Context::load(load_config(cli)?)?;
                render(json, &cmd_assemble(&ctx, *target)?, |s| {
                    let mut t = format!("bboxes {} written {} unchanged {}", s.bboxes, s.written, s.unchanged);
                    if let Some(n) = s.subsample {
                        t.push_str(&format!(" subsample {n}"));
                    }
                    t
                })
            }
            Command::Stats { manifest } => {
                let path = match manifest {
                    Some(p) => p.clone(),
                    None => load_config(cli)?.paths.out.join("dataset"),
                };
                render(json, &cmd_stats(&path)?, |s| s.to_string().trim_end().to_string())
            }
            Command::Eval {
                distmat,
                query,
                gallery,
                max_rank,
            } => render(json, &cmd_eval(distmat, query, gallery, *max_rank)?, |r| r.summary()),
            Command::Run => {
                let ctx = Context::load(load_config(cli)?)?;
                render(json, &cmd_run(&ctx)?, |r| {
                    let s = &r.stats;
                    format!(
                        "ids {} scenes {} cams {} videos {} bboxes {}",
                        s.ids, s.scenes, s.cams, s.videos, s.bboxes
                    )
                })
            }
        }
    };
    match cli.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(run),
        None => run(),
    }
}

/// Parses `args` (program name first) and executes them.
pub fn run_args<I, T>(args: I) -> Result<String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
    execute(&cli)
}

/// Entry point for the binary; returns the process exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(out) => {
            if !out.is_empty() {
                println!("{out}");
            }
            0
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {msg}", e.kind());
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_subcommands() {
        let cli = Cli::try_parse_from(["pedsynth", "simulate", "--scene", "demo", "--duration", "60", "--seed", "7"]).unwrap();
        assert_eq!(cli.seed, Some(7));
        match cli.command {
            Command::Simulate { scenes, duration } => {
                assert_eq!(scenes, ["demo"]);
                assert_eq!(duration, Some(60.0));
            }
            other => panic!("unexpected {other:?}"),
        }
        for sub in ["gen-textures", "gen-characters", "crop", "assemble", "stats", "run"] {
            Cli::try_parse_from(["pedsynth", sub]).unwrap();
        }
    }

    #[test]
    fn flags_override_file() {
        let cli = Cli::try_parse_from(["pedsynth", "gen-textures", "--colors", "3", "--out", "/tmp/o", "--seed", "9"]).unwrap();
        let cfg = load_config(&cli).unwrap();
        assert_eq!((cfg.textures.colors, cfg.seed), (3, 9));
        assert_eq!(cfg.paths.out, PathBuf::from("/tmp/o"));
    }

    #[test]
    fn bad_config_is_one_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.toml");
        std::fs::write(&p, "[population]\ntotal = 3\n").unwrap();
        let err = run_args(["pedsynth", "gen-characters", "--config", p.to_str().unwrap()]).unwrap_err();
        assert_eq!(err.kind(), "config");
    }
}
