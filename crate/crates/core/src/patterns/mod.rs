//! Catalog of tamper patterns and their seeded application.
//!
//! Each pattern is a family of transformations. A [`PatternInstance`] pins one
//! member of the family: concrete parameters drawn from the pattern's schema,
//! plus a seed that drives any randomness internal to the transform (noise,
//! shuffles, site placement). Applying an instance is a pure function of the
//! input image and the instance.

mod composite;
mod geometric;
mod overlay;
mod params;
mod photometric;
pub mod raster;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub use params::{ParamRange, ParamSpec, ParamValue, Params};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::seed::{rng_on_stream, PatternRng, APPLY_STREAM, PARAM_STREAM};
use crate::synth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Geometric,
    Photometric,
    Overlay,
    Composite,
}

impl std::str::FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(Category::Geometric),
            "photometric" => Ok(Category::Photometric),
            "overlay" => Ok(Category::Overlay),
            "composite" => Ok(Category::Composite),
            other => Err(Error::Config(format!("unknown category `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternSplit {
    Base,
    Novel,
}

impl std::str::FromStr for PatternSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(PatternSplit::Base),
            "novel" => Ok(PatternSplit::Novel),
            other => Err(Error::Config(format!("unknown pattern split `{other}`"))),
        }
    }
}

/// Source of secondary images for patterns that combine two pictures.
pub trait PartnerSource: Sync {
    fn partner(&self, index: u64) -> Result<Image>;
}

/// Falls back to procedurally generated partners.
pub struct SynthPartners;

impl PartnerSource for SynthPartners {
    fn partner(&self, index: u64) -> Result<Image> {
        Ok(synth::source_image(index, 96, 96))
    }
}

pub(crate) struct ApplyCtx<'a> {
    pub rng: PatternRng,
    pub partners: &'a dyn PartnerSource,
}

type ApplyFn = fn(&Image, &Params, &mut ApplyCtx<'_>) -> Result<Image>;

#[derive(Clone, Copy, Serialize)]
pub struct PatternDescriptor {
    pub id: &'static str,
    pub category: Category,
    pub split: PatternSplit,
    #[serde(rename = "param_schema")]
    pub params: &'static [ParamSpec],
    #[serde(skip)]
    apply: ApplyFn,
}

impl std::fmt::Debug for PatternDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PatternDescriptor")
            .field("id", &self.id)
            .field("category", &self.category)
            .field("split", &self.split)
            .finish_non_exhaustive()
    }
}

impl PatternDescriptor {
    pub fn is_parameterized(&self) -> bool {
        !self.params.is_empty()
    }
}

/// Partner image index; reduced modulo the size of whatever source set backs it.
const PARTNER: ParamSpec = ParamSpec::int("partner", 0, i32::MAX as i64);

macro_rules! pattern {
    ($id:literal, $cat:ident, $split:ident, $f:path, [$($p:expr),* $(,)?]) => {
        PatternDescriptor {
            id: $id,
            category: Category::$cat,
            split: PatternSplit::$split,
            params: &[$($p),*],
            apply: $f,
        }
    };
}

use ParamSpec as P;

static CATALOG: [PatternDescriptor; 34] = [
    pattern!("ResizeCrop", Geometric, Base, geometric::resize_crop, [
        P::float("scale", 0.25, 1.0), P::float("ratio", 0.75, 4.0 / 3.0),
        P::float("cx", 0.0, 1.0), P::float("cy", 0.0, 1.0),
    ]),
    pattern!("Blend", Overlay, Base, overlay::blend, [P::float("alpha", 0.1, 0.45), PARTNER]),
    pattern!("GrayScale", Photometric, Base, photometric::grayscale, []),
    pattern!("ColorJitter", Photometric, Base, photometric::color_jitter, [
        P::float("brightness", 0.6, 1.4), P::float("contrast", 0.6, 1.4),
        P::float("saturation", 0.6, 1.4), P::float("hue", -0.15, 0.15),
    ]),
    pattern!("Blur", Photometric, Base, photometric::blur, [P::float("sigma_x", 0.6, 3.0), P::float("sigma_y", 0.6, 3.0)]),
    pattern!("Pixelate", Photometric, Base, photometric::pixelate, [
        P::int("block", 4, 32), P::float("x0", 0.0, 0.5), P::float("y0", 0.0, 0.5),
        P::float("w", 0.5, 1.0), P::float("h", 0.5, 1.0),
    ]),
    pattern!("Rotate", Geometric, Base, geometric::rotate, [P::float("angle", -45.0, 45.0)]),
    pattern!("Padding", Geometric, Base, geometric::padding, [
        P::float("top", 0.0, 0.3), P::float("bottom", 0.0, 0.3),
        P::float("left", 0.0, 0.3), P::float("right", 0.0, 0.3),
        P::int("r", 0, 255), P::int("g", 0, 255), P::int("b", 0, 255),
    ]),
    pattern!("AddNoise", Photometric, Base, photometric::add_noise, [P::float("sigma", 4.0, 40.0)]),
    pattern!("VertFlip", Geometric, Base, geometric::vert_flip, []),
    pattern!("HoriFlip", Geometric, Base, geometric::hori_flip, []),
    pattern!("PerspChange", Geometric, Base, geometric::persp_change, [
        P::float("d0", -0.15, 0.15), P::float("d1", -0.15, 0.15),
        P::float("d2", -0.15, 0.15), P::float("d3", -0.15, 0.15),
        P::float("d4", -0.15, 0.15), P::float("d5", -0.15, 0.15),
        P::float("d6", -0.15, 0.15), P::float("d7", -0.15, 0.15),
    ]),
    pattern!("StackImage", Composite, Base, composite::stack_image, [
        P::int("axis", 0, 1), P::int("partner_first", 0, 1),
        P::float("partner_scale", 0.5, 1.0), PARTNER,
    ]),
    pattern!("ChangeChan", Photometric, Base, photometric::change_chan, [
        P::int("perm", 0, 5), P::int("invert", 0, 7),
        P::int("shift_r", -64, 64), P::int("shift_g", -64, 64), P::int("shift_b", -64, 64),
    ]),
    pattern!("EncQuality", Photometric, Base, photometric::enc_quality, [P::float("quality", 10.0, 70.0)]),
    pattern!("AddStripes", Overlay, Base, overlay::add_stripes, [
        P::int("count", 2, 8), P::float("width", 0.1, 0.5), P::float("angle", 0.0, 180.0),
        P::float("phase", 0.0, 1.0), P::int("r", 0, 255), P::int("g", 0, 255), P::int("b", 0, 255),
        P::float("opacity", 0.4, 1.0),
    ]),
    pattern!("Sharpen", Photometric, Base, photometric::sharpen, [P::float("amount", 0.5, 3.0)]),
    pattern!("Skew", Geometric, Base, geometric::skew, [P::float("angle", -30.0, 30.0), P::int("axis", 0, 1)]),
    pattern!("ShufPixels", Composite, Base, composite::shuf_pixels, [P::float("fraction", 0.05, 0.35)]),
    pattern!("AddShapes", Overlay, Base, overlay::add_shapes, [P::int("count", 1, 5), P::float("opacity", 0.6, 1.0)]),
    pattern!("Repeat", Composite, Base, composite::repeat, [
        P::int("rows", 1, 4), P::int("cols", 1, 4), P::float("ox", 0.0, 1.0), P::float("oy", 0.0, 1.0),
    ]),
    pattern!("CutAssemble", Composite, Base, composite::cut_assemble, [P::int("rows", 3, 5), P::int("cols", 3, 5)]),
    pattern!("CutPaste", Composite, Base, composite::cut_paste, [
        P::float("w", 0.1, 0.4), P::float("h", 0.1, 0.4),
        P::float("x1", 0.0, 1.0), P::float("y1", 0.0, 1.0),
        P::float("x2", 0.0, 1.0), P::float("y2", 0.0, 1.0),
    ]),
    pattern!("Solarize", Photometric, Base, photometric::solarize, [
        P::int("threshold_r", 64, 224), P::int("threshold_g", 64, 224), P::int("threshold_b", 64, 224),
    ]),
    pattern!("Posterize", Photometric, Base, photometric::posterize, [
        P::int("levels_r", 2, 32), P::int("levels_g", 2, 32), P::int("levels_b", 2, 32), P::float("mix", 0.6, 1.0),
    ]),
    pattern!("Gamma", Photometric, Base, photometric::gamma, [
        P::float("gamma_r", 0.4, 2.5),
        P::float("gamma_g", 0.4, 2.5),
        P::float("gamma_b", 0.4, 2.5),
    ]),
    pattern!("Erasing", Overlay, Base, overlay::erasing, [
        P::float("area", 0.02, 0.3), P::float("aspect", 0.3, 3.3),
        P::float("cx", 0.0, 1.0), P::float("cy", 0.0, 1.0),
    ]),
    pattern!("GridDistort", Geometric, Base, geometric::grid_distort, [P::int("steps", 3, 6), P::float("limit", 0.1, 0.35)]),
    // novel
    pattern!("Mosaic", Photometric, Novel, photometric::mosaic, [
        P::int("tile", 5, 16), P::int("grout", 1, 2), P::float("jitter", 2.0, 25.0),
    ]),
    pattern!("Voronoi", Photometric, Novel, photometric::voronoi, [P::int("sites", 24, 160)]),
    pattern!("Pyramid", Composite, Novel, composite::pyramid, [
        P::int("levels", 2, 4), P::float("fill", 0.7, 1.0),
        P::int("r", 0, 255), P::int("g", 0, 255), P::int("b", 0, 255),
    ]),
    pattern!("Swirl", Geometric, Novel, geometric::swirl, [
        P::float("strength", 1.0, 6.0), P::float("radius", 0.3, 0.9),
        P::float("cx", 0.3, 0.7), P::float("cy", 0.3, 0.7), P::int("clockwise", 0, 1),
    ]),
    pattern!("WaveBlock", Photometric, Novel, photometric::wave_block, [
        P::float("period", 0.15, 0.5), P::float("offset", 0.0, 1.0),
        P::float("factor", 0.25, 0.7), P::int("vertical", 0, 1),
    ]),
    pattern!("OilPaint", Photometric, Novel, photometric::oil_paint, [P::int("radius", 2, 4), P::int("levels", 12, 40)]),
];

fn checked_catalog() -> &'static [PatternDescriptor] {
    static CHECK: OnceLock<()> = OnceLock::new();
    CHECK.get_or_init(|| {
        let mut ids = BTreeSet::new();
        for d in &CATALOG {
            assert!(ids.insert(d.id), "duplicate pattern id {}", d.id);
        }
        let base: BTreeSet<_> = CATALOG.iter().filter(|d| d.split == PatternSplit::Base).map(|d| d.id).collect();
        let novel: BTreeSet<_> = CATALOG.iter().filter(|d| d.split == PatternSplit::Novel).map(|d| d.id).collect();
        assert!(base.is_disjoint(&novel), "base and novel pattern sets overlap");
    });
    &CATALOG
}

/// The full catalog in stable order: 28 base patterns followed by 6 novel.
pub fn catalog() -> &'static [PatternDescriptor] {
    checked_catalog()
}

pub fn lookup(id: &str) -> Result<&'static PatternDescriptor> {
    catalog().iter().find(|d| d.id == id).ok_or_else(|| Error::UnknownPattern(id.to_owned()))
}

pub fn split_ids(split: PatternSplit) -> impl Iterator<Item = &'static str> {
    catalog().iter().filter(move |d| d.split == split).map(|d| d.id)
}

/// A fully parameterized transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternInstance {
    pub pattern_id: String,
    pub params: Params,
    pub seed: u64,
}

impl PatternInstance {
    pub fn validate(&self) -> Result<&'static PatternDescriptor> {
        let desc = lookup(&self.pattern_id)?;
        self.params.validate(desc.id, desc.params)?;
        Ok(desc)
    }
}

/// Ordered list of instances; applied left to right.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatternCombo {
    pub instances: Vec<PatternInstance>,
}

impl PatternCombo {
    pub fn new(instances: Vec<PatternInstance>) -> Self {
        Self { instances }
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn pattern_ids(&self) -> BTreeSet<&str> {
        self.instances.iter().map(|i| i.pattern_id.as_str()).collect()
    }

    /// Order-insensitive key: sorted distinct pattern ids joined by `+`.
    pub fn key(&self) -> String {
        combo_key(self.instances.iter().map(|i| i.pattern_id.as_str()))
    }
}

pub fn combo_key<'a>(ids: impl IntoIterator<Item = &'a str>) -> String {
    let set: BTreeSet<&str> = ids.into_iter().collect();
    set.into_iter().collect::<Vec<_>>().join("+")
}

pub fn parse_combo_key(key: &str) -> BTreeSet<String> {
    key.split('+').filter(|s| !s.is_empty()).map(str::to_owned).collect()
}

/// Draws parameters for `pattern_id` from its schema, seeded only by `seed`.
pub fn sample_instance(pattern_id: &str, seed: u64) -> Result<PatternInstance> {
    let desc = lookup(pattern_id)?;
    let mut rng = rng_on_stream(seed, PARAM_STREAM);
    let mut params = Params::new();
    for spec in desc.params {
        params.0.insert(spec.name.to_owned(), spec.sample(&mut rng));
    }
    Ok(PatternInstance { pattern_id: desc.id.to_owned(), params, seed })
}

pub fn apply(image: &Image, instance: &PatternInstance) -> Result<Image> {
    apply_with(image, instance, &SynthPartners)
}

pub fn apply_with(image: &Image, instance: &PatternInstance, partners: &dyn PartnerSource) -> Result<Image> {
    let desc = instance.validate()?;
    let mut ctx = ApplyCtx { rng: rng_on_stream(instance.seed, APPLY_STREAM), partners };
    (desc.apply)(image, &instance.params, &mut ctx)
}

pub fn apply_combo(image: &Image, combo: &PatternCombo) -> Result<Image> {
    apply_combo_with(image, combo, &SynthPartners)
}

pub fn apply_combo_with(image: &Image, combo: &PatternCombo, partners: &dyn PartnerSource) -> Result<Image> {
    let (first, rest) = combo
        .instances
        .split_first()
        .ok_or_else(|| Error::Pattern("empty pattern combo".into()))?;
    let mut out = apply_with(image, first, partners)?;
    for inst in rest {
        out = apply_with(&out, inst, partners)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_shape() {
        let cat = catalog();
        assert_eq!(cat.len(), 34);
        assert_eq!(split_ids(PatternSplit::Base).count(), 28);
        let novel: Vec<_> = split_ids(PatternSplit::Novel).collect();
        assert_eq!(novel, ["Mosaic", "Voronoi", "Pyramid", "Swirl", "WaveBlock", "OilPaint"]);
        let base: BTreeSet<_> = split_ids(PatternSplit::Base).collect();
        assert!(novel.iter().all(|n| !base.contains(n)));
    }

    #[test]
    fn unknown_pattern() {
        assert!(matches!(sample_instance("Nope", 1), Err(Error::UnknownPattern(_))));
        let inst = PatternInstance { pattern_id: "Nope".into(), params: Params::new(), seed: 0 };
        let img = Image::filled(2, 2, [0, 0, 0]).unwrap();
        assert!(matches!(apply(&img, &inst), Err(Error::UnknownPattern(_))));
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(sample_instance("Rotate", 7).unwrap(), sample_instance("Rotate", 7).unwrap());
        assert_ne!(sample_instance("Rotate", 7).unwrap(), sample_instance("Rotate", 8).unwrap());
    }

    #[test]
    fn rotate_angle_stays_in_range() {
        for s in 0..1000 {
            let a = sample_instance("Rotate", s).unwrap().params.f("angle");
            assert!((-45.0..=45.0).contains(&a), "seed {s}: {a}");
        }
    }

    #[test]
    fn parameterless_patterns() {
        for id in ["HoriFlip", "VertFlip", "GrayScale"] {
            for s in 0..50 {
                assert!(sample_instance(id, s).unwrap().params.is_empty());
            }
        }
    }

    #[test]
    fn sampled_params_always_validate() {
        for d in catalog() {
            for s in 0..200 {
                sample_instance(d.id, s).unwrap().validate().unwrap();
            }
        }
    }

    #[test]
    fn hori_flip_two_pixels() {
        let img = Image::new(2, 1, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let out = apply(&img, &sample_instance("HoriFlip", 0).unwrap()).unwrap();
        assert_eq!(out.data(), &[4, 5, 6, 1, 2, 3]);
    }

    #[test]
    fn grayscale_bt601() {
        let img = Image::new(1, 1, vec![120, 200, 40]).unwrap();
        let out = apply(&img, &sample_instance("GrayScale", 0).unwrap()).unwrap();
        // 0.299*120 + 0.587*200 + 0.114*40 = 157.84
        assert_eq!(out.data(), &[158, 158, 158]);
    }

    #[test]
    fn combo_is_a_left_fold() {
        let img = synth::source_image(11, 40, 30);
        let g = sample_instance("GrayScale", 0).unwrap();
        let combo = PatternCombo::new(vec![g.clone(), g.clone()]);
        assert_eq!(apply_combo(&img, &combo).unwrap(), apply(&apply(&img, &g).unwrap(), &g).unwrap());
        let r = sample_instance("Rotate", 3).unwrap();
        assert_eq!(apply_combo(&img, &PatternCombo::new(vec![r.clone()])).unwrap(), apply(&img, &r).unwrap());
        assert!(apply_combo(&img, &PatternCombo::default()).is_err());
    }

    #[test]
    fn rotate_and_flip_do_not_commute() {
        let img = synth::source_image(2, 48, 32);
        let rot = PatternInstance {
            pattern_id: "Rotate".into(),
            params: Params::new().with("angle", ParamValue::Float(30.0)),
            seed: 0,
        };
        let flip = sample_instance("HoriFlip", 0).unwrap();
        let a = apply_combo(&img, &PatternCombo::new(vec![rot.clone(), flip.clone()])).unwrap();
        let b = apply_combo(&img, &PatternCombo::new(vec![flip, rot])).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn combo_key_is_order_insensitive() {
        assert_eq!(combo_key(["Swirl", "Mosaic"]), "Mosaic+Swirl");
        assert_eq!(combo_key(["Mosaic", "Swirl", "Mosaic"]), "Mosaic+Swirl");
        assert_eq!(parse_combo_key("Mosaic+Swirl").len(), 2);
    }

    #[test]
    fn catalog_json_has_schema() {
        let v = serde_json::to_value(catalog()).unwrap();
        assert_eq!(v[6]["id"], "Rotate");
        assert_eq!(v[6]["param_schema"][0]["kind"], "float");
        assert_eq!(v[6]["param_schema"][0]["min"], -45.0);
        assert_eq!(v[28]["split"], "novel");
    }
}
