pub mod capture;
pub mod cli;
pub mod datasetio;
pub mod error;
pub mod evalkit;
mod fsutil;
pub mod optics;
pub mod persona;
pub mod render;
pub mod rng;
pub mod texgen;
pub mod wardrobe;
pub mod world;

pub use error::{Error, Result};
