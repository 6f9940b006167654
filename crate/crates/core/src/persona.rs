//! Random characters and their text file format.
//!
//! A character file is UTF-8 text with one `key value…` pair per line:
//!
//! ```text
//! version 1
//! id 17
//! seed 9923481113
//! gender female
//! age 43.25
//! height_cm 158.31
//! weight 0.55
//! skin 3
//! wear top f_blouse_01@rnd_p001_t06 rnd_p001_t06
//! ```
//!
//! `wear <slot> <model_id> <uv_id>` repeats once per worn model.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::texgen::{TexturePool, UvRef, UvSource};
use crate::wardrobe::{retexture, sample_outfit, Catalog, Gender, Outfit, OutfitConfig, Slot};

pub const FILE_VERSION: u32 = 1;
pub const AGE_RANGE: (f64, f64) = (20.0, 90.0);
pub const MALE_HEIGHT_CM: (f64, f64) = (170.0, 5.7);
pub const FEMALE_HEIGHT_CM: (f64, f64) = (160.0, 5.2);

pub const DEFAULT_SKIN_TONES: [&str; 8] = [
    "porcelain", "ivory", "beige", "sand", "olive", "tan", "brown", "ebony",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Character {
    pub id: u32,
    pub gender: Gender,
    pub age: f64,
    pub height_cm: f64,
    /// Normalized body mass in `[0, 1]`.
    pub weight_norm: f64,
    pub skin: usize,
    pub outfit: Outfit,
    /// Seed of this character's private random stream.
    pub seed: u64,
}

impl Character {
    /// Texture source of the outfit: generated or web textures if any model
    /// was retextured, otherwise the catalog originals.
    pub fn texture_source(&self) -> UvSource {
        self.outfit
            .assignments
            .values()
            .map(|m| m.uv.source())
            .find(|s| *s != UvSource::Original)
            .unwrap_or(UvSource::Original)
    }

    pub fn file_name(&self) -> String {
        character_file_name(self.id)
    }
}

pub fn character_file_name(id: u32) -> String {
    format!("char_{id:06}.txt")
}

/// Counts of characters per texture source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SourceMix {
    pub original: usize,
    pub web_image: usize,
    pub random: usize,
}

impl SourceMix {
    pub fn total(&self) -> usize {
        self.original + self.web_image + self.random
    }

    /// Source of character `index` when ids are assigned in blocks
    /// (originals first, then web images, then random maps).
    pub fn source_of(&self, index: usize) -> UvSource {
        if index < self.original {
            UvSource::Original
        } else if index < self.original + self.web_image {
            UvSource::WebImage
        } else {
            UvSource::Random
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub n_total: usize,
    pub mix: SourceMix,
    pub seed: u64,
    pub skin_tones: Vec<String>,
    #[serde(default)]
    pub outfit: OutfitConfig,
}

impl PopulationSpec {
    pub fn new(n_total: usize, mix: SourceMix, seed: u64) -> Self {
        PopulationSpec {
            n_total,
            mix,
            seed,
            skin_tones: DEFAULT_SKIN_TONES.iter().map(|s| s.to_string()).collect(),
            outfit: OutfitConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mix.total() != self.n_total {
            return Err(Error::Config(format!(
                "source mix {}+{}+{} does not sum to n_total {}",
                self.mix.original, self.mix.web_image, self.mix.random, self.n_total
            )));
        }
        if self.n_total > u32::MAX as usize {
            return Err(Error::Config("population too large".into()));
        }
        if self.skin_tones.is_empty() {
            return Err(Error::Config("at least one skin tone is required".into()));
        }
        self.outfit.validate()
    }
}

/// Draws one character from its private stream `rng`.
pub fn sample_character<R: Rng + ?Sized>(
    rng: &mut R,
    id: u32,
    seed: u64,
    source: UvSource,
    spec: &PopulationSpec,
    catalog: &Catalog,
    pool: &TexturePool,
) -> Result<Character> {
    let gender = if rng.gen_bool(0.5) {
        Gender::Female
    } else {
        Gender::Male
    };
    let skin = rng.gen_range(0..spec.skin_tones.len());
    let age = rng.gen_range(AGE_RANGE.0..=AGE_RANGE.1);
    let weight_norm = rng.gen::<f64>();
    let (mean, sd) = match gender {
        Gender::Male => MALE_HEIGHT_CM,
        Gender::Female => FEMALE_HEIGHT_CM,
    };
    let height_cm = Normal::new(mean, sd).expect("valid normal").sample(rng);
    let outfit = sample_outfit(rng, gender, catalog, pool, source, &spec.outfit)?;
    Ok(Character {
        id,
        gender,
        age,
        height_cm,
        weight_norm,
        skin,
        outfit,
        seed,
    })
}

/// Characters with ids `1..=n_total`; the character at index `i` is drawn
/// from the stream `derive_seed(spec.seed, i)` so the result is independent
/// of scheduling.
pub fn generate_population(
    spec: &PopulationSpec,
    catalog: &Catalog,
    pool: &TexturePool,
) -> Result<Vec<Character>> {
    spec.validate()?;
    for (need, source) in [
        (spec.mix.web_image, UvSource::WebImage),
        (spec.mix.random, UvSource::Random),
    ] {
        if need > 0 && pool.count(source) == 0 {
            return Err(Error::Config(format!(
                "{need} characters need `{source}` textures but the pool has none"
            )));
        }
    }
    (0..spec.n_total)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(spec.seed, i as u64);
            let mut rng = rng_from_seed(seed);
            sample_character(
                &mut rng,
                i as u32 + 1,
                seed,
                spec.mix.source_of(i),
                spec,
                catalog,
                pool,
            )
        })
        .collect()
}

pub fn emit_character_file(c: &Character) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "version {FILE_VERSION}");
    let _ = writeln!(out, "id {}", c.id);
    let _ = writeln!(out, "seed {}", c.seed);
    let _ = writeln!(out, "gender {}", c.gender);
    let _ = writeln!(out, "age {}", c.age);
    let _ = writeln!(out, "height_cm {}", c.height_cm);
    let _ = writeln!(out, "weight {}", c.weight_norm);
    let _ = writeln!(out, "skin {}", c.skin);
    for (slot, m) in &c.outfit.assignments {
        let _ = writeln!(out, "wear {slot} {} {}", m.id, m.uv);
    }
    out
}

fn field<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse(line, format!("key `{key}`: invalid value `{value}`")))
}

fn ranged(line: usize, key: &str, value: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(lo..=hi).contains(&value) {
        return Err(Error::Range(format!(
            "line {line}: key `{key}` = {value} outside [{lo}, {hi}]"
        )));
    }
    Ok(value)
}

/// Parses a character file, resolving worn models against `catalog`.
pub fn parse_character_file(text: &str, catalog: &Catalog) -> Result<Character> {
    let mut seen = BTreeSet::new();
    let (mut id, mut seed, mut gender, mut age, mut height, mut weight, mut skin) =
        (None, None, None, None, None, None, None);
    let mut worn = Vec::new();
    let mut version = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let (key, rest) = raw.split_once(' ').unwrap_or((raw, ""));
        let rest = rest.trim();
        if key != "wear" && !seen.insert(key.to_string()) {
            return Err(Error::parse(line, format!("duplicate key `{key}`")));
        }
        match key {
            "version" => version = Some(field::<u32>(line, key, rest)?),
            "id" => id = Some(field::<u32>(line, key, rest)?),
            "seed" => seed = Some(field::<u64>(line, key, rest)?),
            "gender" => {
                gender = Some(
                    rest.parse::<Gender>()
                        .map_err(|_| Error::parse(line, format!("key `gender`: invalid value `{rest}`")))?,
                )
            }
            "age" => age = Some(ranged(line, key, field(line, key, rest)?, AGE_RANGE.0, AGE_RANGE.1)?),
            "height_cm" => {
                height = Some(ranged(line, key, field(line, key, rest)?, 1.0, 300.0)?)
            }
            "weight" => weight = Some(ranged(line, key, field(line, key, rest)?, 0.0, 1.0)?),
            "skin" => skin = Some(field::<usize>(line, key, rest)?),
            "wear" => worn.push((line, rest.to_string())),
            other => return Err(Error::parse(line, format!("unknown key `{other}`"))),
        }
    }
    let eof = last_line + 1;
    let need = |name: &str| Error::parse(eof, format!("missing key `{name}`"));
    let version = version.ok_or_else(|| need("version"))?;
    if version != FILE_VERSION {
        return Err(Error::parse(eof, format!("key `version`: unsupported version {version}")));
    }
    let gender = gender.ok_or_else(|| need("gender"))?;

    let mut outfit = Outfit::default();
    for (line, rest) in worn {
        let parts: Vec<&str> = rest.split_whitespace().collect();
        let [slot, model_id, uv_id] = parts[..] else {
            return Err(Error::parse(line, "key `wear`: expected `<slot> <model_id> <uv_id>`"));
        };
        let bad = |m: String| Error::parse(line, format!("key `wear`: {m}"));
        let slot: Slot = slot.parse().map_err(|e: Error| bad(e.to_string()))?;
        let uv: UvRef = uv_id.parse().map_err(|e: Error| bad(e.to_string()))?;
        let base_id = model_id.split('@').next().unwrap_or(model_id);
        let base = catalog
            .get(base_id)
            .ok_or_else(|| bad(format!("model `{base_id}` not in catalog")))?;
        if base.slot != slot {
            return Err(bad(format!("model `{base_id}` is a {} not a {slot}", base.slot)));
        }
        let model = if model_id.contains('@') {
            retexture(base, uv)
        } else {
            base.clone()
        };
        if model.id != model_id || model.uv != uv {
            return Err(bad(format!("model `{model_id}` inconsistent with uv `{uv_id}`")));
        }
        outfit.insert(model).map_err(|e| bad(e.to_string()))?;
    }
    outfit.check(gender).map_err(|e| Error::parse(eof, e.to_string()))?;

    Ok(Character {
        id: id.ok_or_else(|| need("id"))?,
        gender,
        age: age.ok_or_else(|| need("age"))?,
        height_cm: height.ok_or_else(|| need("height_cm"))?,
        weight_norm: weight.ok_or_else(|| need("weight"))?,
        skin: skin.ok_or_else(|| need("skin"))?,
        outfit,
        seed: seed.ok_or_else(|| need("seed"))?,
    })
}

/// `population.csv`: a `# seed` comment, then `id,file,source` rows.
pub fn population_manifest(population: &[Character], seed: u64) -> String {
    let mut out = format!("# seed {seed}\nid,file,source\n");
    for c in population {
        let _ = writeln!(out, "{},{},{}", c.id, c.file_name(), c.texture_source());
    }
    out
}

/// Writes every character file plus `population.csv` into `dir`.
pub fn write_population(population: &[Character], seed: u64, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for c in population {
        let path = dir.join(c.file_name());
        crate::fsutil::write_if_changed(&path, emit_character_file(c).as_bytes())?;
    }
    let path = dir.join("population.csv");
    crate::fsutil::write_if_changed(&path, population_manifest(population, seed).as_bytes())?;
    Ok(())
}

pub fn read_population(dir: &Path, catalog: &Catalog) -> Result<Vec<Character>> {
    let path = dir.join("population.csv");
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(&path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let file = rec.get(1).unwrap_or_default();
        let p = dir.join(file);
        let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        out.push(parse_character_file(&text, catalog)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> Catalog {
        Catalog::parse(include_str!("../assets/catalog.tsv")).unwrap()
    }

    fn pool() -> TexturePool {
        TexturePool::full().with_web_images(5)
    }

    #[test]
    fn mix_must_sum_to_total() {
        let spec = PopulationSpec::new(4, SourceMix { original: 1, web_image: 1, random: 1 }, 0);
        assert!(matches!(generate_population(&spec, &catalog(), &pool()), Err(Error::Config(_))));
    }

    #[test]
    fn missing_pool_kind_is_config_error() {
        let spec = PopulationSpec::new(3, SourceMix { original: 1, web_image: 1, random: 1 }, 0);
        let r = generate_population(&spec, &catalog(), &TexturePool::full());
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn population_is_deterministic_and_block_assigned() {
        let spec = PopulationSpec::new(10, SourceMix { original: 2, web_image: 3, random: 5 }, 42);
        let a = generate_population(&spec, &catalog(), &pool()).unwrap();
        let b = generate_population(&spec, &catalog(), &pool()).unwrap();
        let dump = |p: &[Character]| p.iter().map(emit_character_file).collect::<String>();
        assert_eq!(dump(&a), dump(&b));
        let sources: Vec<UvSource> = a.iter().map(|c| c.texture_source()).collect();
        assert_eq!(&sources[..2], &[UvSource::Original; 2]);
        assert_eq!(&sources[2..5], &[UvSource::WebImage; 3]);
        assert_eq!(&sources[5..], &[UvSource::Random; 5]);
        assert!(a.iter().enumerate().all(|(i, c)| c.id as usize == i + 1));
    }

    #[test]
    fn growing_population_keeps_prefix() {
        let small = PopulationSpec::new(5, SourceMix { original: 0, web_image: 0, random: 5 }, 9);
        let big = PopulationSpec::new(8, SourceMix { original: 0, web_image: 0, random: 8 }, 9);
        let a = generate_population(&small, &catalog(), &pool()).unwrap();
        let b = generate_population(&big, &catalog(), &pool()).unwrap();
        assert_eq!(a[..], b[..5]);
    }

    #[test]
    fn round_trip() {
        let cat = catalog();
        let spec = PopulationSpec::new(300, SourceMix { original: 100, web_image: 100, random: 100 }, 5);
        for c in generate_population(&spec, &cat, &pool()).unwrap() {
            let text = emit_character_file(&c);
            assert_eq!(parse_character_file(&text, &cat).unwrap(), c, "{text}");
        }
    }

    fn sample_text() -> (Catalog, String) {
        let cat = catalog();
        let spec = PopulationSpec::new(1, SourceMix { original: 0, web_image: 0, random: 1 }, 3);
        let c = &generate_population(&spec, &cat, &pool()).unwrap()[0];
        (cat, emit_character_file(c))
    }

    #[test]
    fn missing_gender_is_named() {
        let (cat, text) = sample_text();
        let text: String = text.lines().filter(|l| !l.starts_with("gender")).map(|l| format!("{l}\n")).collect();
        match parse_character_file(&text, &cat) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("gender"), "{message}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn age_below_range_is_range_error() {
        let (cat, text) = sample_text();
        let text: String = text
            .lines()
            .map(|l| if l.starts_with("age ") { "age 19\n".to_string() } else { format!("{l}\n") })
            .collect();
        match parse_character_file(&text, &cat) {
            Err(Error::Range(msg)) => assert!(msg.contains("line 5") && msg.contains("age"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_and_duplicate_keys_rejected() {
        let (cat, text) = sample_text();
        let extra = format!("{text}eyes blue\n");
        assert!(matches!(parse_character_file(&extra, &cat), Err(Error::Parse { .. })));
        let dup = format!("{text}skin 1\n");
        assert!(matches!(parse_character_file(&dup, &cat), Err(Error::Parse { .. })));
    }

    #[test]
    fn wear_line_must_match_catalog() {
        let (cat, text) = sample_text();
        let bad = text.replacen("wear ", "wear hat nonexistent_01 rnd_p001_t01\nwear ", 1);
        assert!(matches!(parse_character_file(&bad, &cat), Err(Error::Parse { .. })));
    }
}
