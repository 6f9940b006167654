//! Clothing catalog, retexturing and outfit sampling.
//!
//! Catalog files are line oriented, one model per line:
//!
//! ```text
//! id<TAB>category<TAB>slot<TAB>region<TAB>default_uv
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. `default_uv` is an
//! `orig_…` texture id.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::texgen::{TexturePool, UvRef, UvSource};

macro_rules! text_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::Validation(format!(
                        concat!("unknown ", stringify!($name), " `{}`"), other
                    ))),
                }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}
text_enum!(Gender { Male => "male", Female => "female" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Female,
    Male,
    Universal,
}
text_enum!(Category { Female => "female", Male => "male", Universal => "universal" });

impl Category {
    pub fn fits(&self, gender: Gender) -> bool {
        matches!(
            (self, gender),
            (Category::Universal, _) | (Category::Male, Gender::Male) | (Category::Female, Gender::Female)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Top,
    Bottom,
    Dress,
    Shoes,
    Hair,
    Beard,
    Hat,
    Backpack,
    Necklace,
    Bow,
}
text_enum!(Slot {
    Top => "top",
    Bottom => "bottom",
    Dress => "dress",
    Shoes => "shoes",
    Hair => "hair",
    Beard => "beard",
    Hat => "hat",
    Backpack => "backpack",
    Necklace => "necklace",
    Bow => "bow",
});

/// Primitive body region a clothing model is painted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Head,
    Torso,
    Legs,
    Body,
    Feet,
    Back,
    Neck,
}
text_enum!(Region {
    Head => "head",
    Torso => "torso",
    Legs => "legs",
    Body => "body",
    Feet => "feet",
    Back => "back",
    Neck => "neck",
});

impl Slot {
    pub fn region(&self) -> Region {
        match self {
            Slot::Top => Region::Torso,
            Slot::Bottom => Region::Legs,
            Slot::Dress => Region::Body,
            Slot::Shoes => Region::Feet,
            Slot::Hair | Slot::Beard | Slot::Hat | Slot::Bow => Region::Head,
            Slot::Backpack => Region::Back,
            Slot::Necklace => Region::Neck,
        }
    }

    /// Category restriction for gender-specific accessories.
    pub fn allows(&self, category: Category) -> bool {
        match self {
            Slot::Beard => category == Category::Male,
            Slot::Necklace | Slot::Bow => category == Category::Female,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClothingModel {
    pub id: String,
    pub category: Category,
    pub slot: Slot,
    pub region: Region,
    pub uv: UvRef,
}

impl ClothingModel {
    /// Catalog id this model was derived from.
    pub fn base_id(&self) -> &str {
        self.id.split('@').next().unwrap_or(&self.id)
    }

    fn validate(&self) -> Result<()> {
        if self.id.is_empty() || self.id.contains(['@', ' ', '\t']) {
            return Err(Error::Validation(format!("invalid model id `{}`", self.id)));
        }
        if self.region != self.slot.region() {
            return Err(Error::Validation(format!(
                "model `{}`: slot {} must use region {}, not {}",
                self.id,
                self.slot,
                self.slot.region(),
                self.region
            )));
        }
        if !self.slot.allows(self.category) {
            return Err(Error::Validation(format!(
                "model `{}`: slot {} not allowed for category {}",
                self.id, self.slot, self.category
            )));
        }
        if self.uv.source() != UvSource::Original {
            return Err(Error::Validation(format!(
                "model `{}`: default uv must be an original texture",
                self.id
            )));
        }
        Ok(())
    }
}

/// Copy of `m` wearing `uv`, with id `<base>@<uv id>`.
pub fn retexture(m: &ClothingModel, uv: UvRef) -> ClothingModel {
    ClothingModel {
        id: format!("{}@{}", m.base_id(), uv),
        uv,
        ..m.clone()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    models: Vec<ClothingModel>,
    by_id: HashMap<String, usize>,
}

impl Catalog {
    pub fn models(&self) -> &[ClothingModel] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ClothingModel> {
        self.by_id.get(id).map(|&i| &self.models[i])
    }

    pub fn push(&mut self, model: ClothingModel) -> Result<()> {
        model.validate()?;
        if self.by_id.contains_key(&model.id) {
            return Err(Error::DuplicateId(model.id));
        }
        self.by_id.insert(model.id.clone(), self.models.len());
        self.models.push(model);
        Ok(())
    }

    /// Models usable in `slot` by a character of `gender`, in catalog order.
    pub fn candidates(&self, slot: Slot, gender: Gender) -> Vec<&ClothingModel> {
        self.models
            .iter()
            .filter(|m| m.slot == slot && m.category.fits(gender))
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cat = Catalog::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(Error::parse(
                    line_no,
                    format!("expected 5 tab-separated fields, found {}", fields.len()),
                ));
            }
            let model = ClothingModel {
                id: fields[0].to_string(),
                category: at_line(line_no, fields[1].parse())?,
                slot: at_line(line_no, fields[2].parse())?,
                region: at_line(line_no, fields[3].parse())?,
                uv: at_line(line_no, fields[4].parse())?,
            };
            match cat.push(model) {
                Err(Error::Validation(msg)) => return Err(Error::parse(line_no, msg)),
                other => other?,
            }
        }
        Ok(cat)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# id\tcategory\tslot\tregion\tdefault_uv\n");
        for m in &self.models {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                m.id, m.category, m.slot, m.region, m.uv
            ));
        }
        out
    }
}

fn at_line<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::parse(line, e.to_string()))
}

pub fn load_catalog(path: &Path) -> Result<Catalog> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Catalog::parse(&text)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outfit {
    pub assignments: BTreeMap<Slot, ClothingModel>,
    pub complete: bool,
}

impl Outfit {
    pub fn get(&self, slot: Slot) -> Option<&ClothingModel> {
        self.assignments.get(&slot)
    }

    /// Adds a model. A dress occupies both the top and bottom slots.
    pub fn insert(&mut self, model: ClothingModel) -> Result<()> {
        let slot = model.slot;
        let clash = self.assignments.contains_key(&slot)
            || (slot == Slot::Dress
                && (self.assignments.contains_key(&Slot::Top)
                    || self.assignments.contains_key(&Slot::Bottom)))
            || (matches!(slot, Slot::Top | Slot::Bottom)
                && self.assignments.contains_key(&Slot::Dress));
        if clash {
            return Err(Error::Validation(format!("slot {slot} already occupied")));
        }
        self.assignments.insert(slot, model);
        self.complete = self.is_complete();
        Ok(())
    }

    fn is_complete(&self) -> bool {
        let has = |s| self.assignments.contains_key(&s);
        let garments = has(Slot::Dress) || (has(Slot::Top) && has(Slot::Bottom));
        garments && has(Slot::Shoes)
    }

    /// Outfit invariants, including the gender restrictions on accessories.
    pub fn check(&self, gender: Gender) -> Result<()> {
        if !self.is_complete() {
            return Err(Error::Validation("outfit lacks garments or shoes".into()));
        }
        for (slot, m) in &self.assignments {
            if m.slot != *slot || !m.category.fits(gender) || !slot.allows(m.category) {
                return Err(Error::Validation(format!(
                    "model `{}` not valid in slot {slot} for a {gender} character",
                    m.id
                )));
            }
        }
        Ok(())
    }
}

/// Accessory probabilities and the dress/separates choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutfitConfig {
    pub dress: f64,
    pub beard: f64,
    pub hat: f64,
    pub backpack: f64,
    pub necklace: f64,
    pub bow: f64,
}

impl Default for OutfitConfig {
    fn default() -> Self {
        OutfitConfig {
            dress: 0.3,
            beard: 0.3,
            hat: 0.2,
            backpack: 0.2,
            necklace: 0.3,
            bow: 0.2,
        }
    }
}

impl OutfitConfig {
    fn probability(&self, slot: Slot) -> f64 {
        match slot {
            Slot::Beard => self.beard,
            Slot::Hat => self.hat,
            Slot::Backpack => self.backpack,
            Slot::Necklace => self.necklace,
            Slot::Bow => self.bow,
            _ => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("dress", self.dress),
            ("beard", self.beard),
            ("hat", self.hat),
            ("backpack", self.backpack),
            ("necklace", self.necklace),
            ("bow", self.bow),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("probability `{name}` = {p} outside [0,1]")));
            }
        }
        Ok(())
    }
}

const ACCESSORIES: [Slot; 5] = [Slot::Beard, Slot::Hat, Slot::Backpack, Slot::Necklace, Slot::Bow];

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, list: &[&'a ClothingModel]) -> &'a ClothingModel {
    list[rng.gen_range(0..list.len())]
}

/// Dresses a character of `gender`. Mandatory slots are garments (dress, or
/// top and bottom), shoes and hair; accessories follow `config`. Unless
/// `source` is [`UvSource::Original`], every chosen model is retextured with
/// an independent draw from `pool`.
pub fn sample_outfit<R: Rng + ?Sized>(
    rng: &mut R,
    gender: Gender,
    catalog: &Catalog,
    pool: &TexturePool,
    source: UvSource,
    config: &OutfitConfig,
) -> Result<Outfit> {
    let tops = catalog.candidates(Slot::Top, gender);
    let bottoms = catalog.candidates(Slot::Bottom, gender);
    let dresses = catalog.candidates(Slot::Dress, gender);
    let shoes = catalog.candidates(Slot::Shoes, gender);
    let hair = catalog.candidates(Slot::Hair, gender);
    let separates = !tops.is_empty() && !bottoms.is_empty();
    if !(separates || !dresses.is_empty()) || shoes.is_empty() || hair.is_empty() {
        return Err(Error::Config(format!(
            "catalog cannot dress a {gender} character (needs garments, shoes and hair)"
        )));
    }
    if source != UvSource::Original && pool.count(source) == 0 {
        return Err(Error::Config(format!("texture pool has no `{source}` entries")));
    }

    let mut chosen: Vec<&ClothingModel> = Vec::new();
    let wear_dress = !dresses.is_empty() && (!separates || rng.gen_bool(config.dress));
    if wear_dress {
        chosen.push(pick(rng, &dresses));
    } else {
        chosen.push(pick(rng, &tops));
        chosen.push(pick(rng, &bottoms));
    }
    chosen.push(pick(rng, &shoes));
    chosen.push(pick(rng, &hair));
    for slot in ACCESSORIES {
        let list = catalog.candidates(slot, gender);
        if list.is_empty() {
            continue;
        }
        if rng.gen_bool(config.probability(slot)) {
            chosen.push(pick(rng, &list));
        }
    }

    let mut outfit = Outfit::default();
    for model in chosen {
        let worn = match source {
            UvSource::Original => model.clone(),
            _ => retexture(model, pool.sample(source, rng)?),
        };
        outfit.insert(worn)?;
    }
    Ok(outfit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn demo() -> Catalog {
        Catalog::parse(include_str!("../assets/catalog.tsv")).unwrap()
    }

    #[test]
    fn bundled_catalog_covers_all_slots() {
        let c = demo();
        assert!(c.len() >= 20);
        for slot in Slot::ALL {
            assert!(c.models().iter().any(|m| m.slot == *slot), "{slot}");
        }
    }

    #[test]
    fn catalog_errors() {
        let dup = "a\tmale\ttop\ttorso\torig_p001\na\tmale\ttop\ttorso\torig_p002\n";
        assert!(matches!(Catalog::parse(dup), Err(Error::DuplicateId(id)) if id == "a"));
        let bad = "a\tmale\ttop\ttorso\torig_p001\nb\tmale\tcape\ttorso\torig_p002\n";
        assert!(matches!(Catalog::parse(bad), Err(Error::Parse { line: 2, .. })));
        let short = "a\tmale\ttop\n";
        assert!(matches!(Catalog::parse(short), Err(Error::Parse { line: 1, .. })));
        let beard = "b\tfemale\tbeard\thead\torig_p001\n";
        assert!(matches!(Catalog::parse(beard), Err(Error::Parse { line: 1, .. })));
        assert!(Catalog::parse("").unwrap().is_empty());
        assert!(Catalog::parse("# only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn catalog_text_round_trip() {
        let c = demo();
        assert_eq!(Catalog::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn retexture_replaces_only_texture() {
        let c = demo();
        let shirt = c.candidates(Slot::Top, Gender::Male)[0].clone();
        let uv = UvRef::Random {
            palette_index: 1,
            pattern_id: 6,
        };
        let a = retexture(&shirt, uv);
        let b = retexture(&a, uv);
        assert_eq!(a.uv, uv);
        assert_eq!(a.id, b.id);
        assert_eq!(a.id, format!("{}@rnd_p001_t06", shirt.id));
        assert_eq!((a.slot, a.category, a.region), (shirt.slot, shirt.category, shirt.region));
        assert_eq!(c.candidates(Slot::Top, Gender::Male)[0], &shirt);
    }

    #[test]
    fn dress_excludes_separates() {
        let c = demo();
        let mut o = Outfit::default();
        o.insert(c.candidates(Slot::Dress, Gender::Female)[0].clone()).unwrap();
        assert!(o.insert(c.candidates(Slot::Top, Gender::Female)[0].clone()).is_err());
        assert!(!o.complete);
        o.insert(c.candidates(Slot::Shoes, Gender::Female)[0].clone()).unwrap();
        assert!(o.complete);
    }

    #[test]
    fn sampling_respects_gender_and_is_deterministic() {
        let c = demo();
        let pool = TexturePool::full();
        let cfg = OutfitConfig::default();
        for seed in 0..300 {
            let mut rng = rng_from_seed(seed);
            let f = sample_outfit(&mut rng, Gender::Female, &c, &pool, UvSource::Random, &cfg).unwrap();
            assert!(f.get(Slot::Beard).is_none());
            f.check(Gender::Female).unwrap();
            assert!(f.assignments.values().all(|m| m.uv.source() == UvSource::Random));
            let mut rng = rng_from_seed(seed);
            let m = sample_outfit(&mut rng, Gender::Male, &c, &pool, UvSource::Original, &cfg).unwrap();
            assert!(m.get(Slot::Necklace).is_none() && m.get(Slot::Bow).is_none());
            m.check(Gender::Male).unwrap();
        }
        let once = |s| {
            let mut rng = rng_from_seed(s);
            sample_outfit(&mut rng, Gender::Male, &c, &pool, UvSource::Random, &cfg).unwrap()
        };
        assert_eq!(once(99), once(99));
    }

    #[test]
    fn hat_frequency_matches_probability() {
        let c = demo();
        let pool = TexturePool::full();
        let cfg = OutfitConfig::default();
        let mut rng = rng_from_seed(2024);
        let n = 10_000;
        let hats = (0..n)
            .filter(|i| {
                let g = if i % 2 == 0 { Gender::Male } else { Gender::Female };
                sample_outfit(&mut rng, g, &c, &pool, UvSource::Original, &cfg)
                    .unwrap()
                    .get(Slot::Hat)
                    .is_some()
            })
            .count();
        let freq = hats as f64 / n as f64;
        assert!((freq - 0.2).abs() <= 0.02, "hat frequency {freq}");
    }

    #[test]
    fn insufficient_catalog_is_config_error() {
        let c = Catalog::parse("t\tmale\ttop\ttorso\torig_p001\n").unwrap();
        let mut rng = rng_from_seed(0);
        let r = sample_outfit(
            &mut rng,
            Gender::Male,
            &c,
            &TexturePool::full(),
            UvSource::Random,
            &OutfitConfig::default(),
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
