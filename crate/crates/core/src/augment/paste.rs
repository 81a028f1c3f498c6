use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::style::{apply_style, StyleRanges};
use super::{assign_identity, CategoryMap, Identity};
use crate::coco::{rle_encode, Category, CocoAnnotation, CocoDataset, CocoImage, Segmentation};
use crate::court::{crop_image, CourtRegion, CropRect, Zone};
use crate::error::{Error, Result};
use crate::raster::{ImageBuffer, Mask};
use crate::rng::Rng;

/// Placement draws per pasted instance before giving up on it.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 50;

/// An object cut out of a source image, trimmed to the tight box of its mask.
#[derive(Debug, Clone, PartialEq)]
pub struct InstancePatch {
    pub pixels: ImageBuffer,
    pub mask: Mask,
    pub identity: Identity,
    pub category_id: u64,
    /// `(image id, annotation id)` it was cut from.
    pub source: (u64, u64),
}

impl InstancePatch {
    pub fn width(&self) -> u32 {
        self.mask.width()
    }

    pub fn height(&self) -> u32 {
        self.mask.height()
    }

    /// Nearest-neighbour resize by `factor`, re-trimmed to the mask.
    /// Returns `None` if nothing of the mask survives.
    pub fn scaled(&self, factor: f64) -> Option<InstancePatch> {
        let w = ((self.width() as f64 * factor).round() as u32).max(1);
        let h = ((self.height() as f64 * factor).round() as u32).max(1);
        let src =
            |u: u32, n: u32, m: u32| (((u as f64 + 0.5) * m as f64 / n as f64) as u32).min(m - 1);
        let mask = Mask::from_fn(w, h, |u, v| {
            self.mask
                .get(src(u, w, self.width()), src(v, h, self.height()))
        });
        let c = self.pixels.channels() as usize;
        let mut data = Vec::with_capacity((w * h) as usize * c);
        for v in 0..h {
            for u in 0..w {
                data.extend_from_slice(
                    self.pixels
                        .pixel(src(u, w, self.width()), src(v, h, self.height())),
                );
            }
        }
        let pixels = ImageBuffer::from_raw(w, h, self.pixels.channels(), data).ok()?;
        let (x, y, bw, bh) = mask.bounds()?;
        Some(InstancePatch {
            pixels: crop_image(&pixels, CropRect::new(x, y, bw, bh)).ok()?,
            mask: mask.crop(x as i64, y as i64, bw, bh),
            ..self.clone()
        })
    }
}

/// Cuts every usable annotation of one image into a patch.
///
/// Crowd annotations, categories outside `categories` and masks smaller than
/// `min_area` pixels are skipped.
pub fn extract_from_image(
    img: &ImageBuffer,
    image_id: u64,
    anns: &[&CocoAnnotation],
    region: &CourtRegion,
    category_list: &[Category],
    categories: &CategoryMap,
    min_area: f64,
) -> Result<Vec<InstancePatch>> {
    let mut out = Vec::new();
    for ann in anns {
        if ann.iscrowd != 0 {
            continue;
        }
        let Some(name) = category_list.iter().find(|c| c.id == ann.category_id) else {
            continue;
        };
        if !categories.is_known(&name.name) {
            log::debug!("annotation {}: category {:?} not pooled", ann.id, name.name);
            continue;
        }
        let identity = assign_identity(ann, region, &name.name, categories)?;
        let mask = ann.mask(img.width(), img.height())?;
        if (mask.count() as f64) < min_area {
            continue;
        }
        let Some((x, y, w, h)) = mask.bounds() else {
            continue;
        };
        out.push(InstancePatch {
            pixels: crop_image(img, CropRect::new(x, y, w, h))?,
            mask: mask.crop(x as i64, y as i64, w, h),
            identity,
            category_id: ann.category_id,
            source: (image_id, ann.id),
        });
    }
    Ok(out)
}

/// Builds the copy-paste pool from a whole dataset, in document order.
pub fn extract_instances(
    ds: &CocoDataset,
    categories: &CategoryMap,
    min_area: f64,
    mut load: impl FnMut(&CocoImage) -> Result<(ImageBuffer, CourtRegion)>,
) -> Result<Vec<InstancePatch>> {
    let by_image = ds.annotations_by_image();
    let mut pool = Vec::new();
    for image in &ds.images {
        let anns = by_image.get(&image.id).map_or(&[][..], |v| v.as_slice());
        if anns.is_empty() {
            continue;
        }
        let (img, region) = load(image)?;
        pool.extend(extract_from_image(
            &img,
            image.id,
            anns,
            &region,
            &ds.categories,
            categories,
            min_area,
        )?);
    }
    Ok(pool)
}

fn band_strips(region: &CourtRegion) -> Vec<CropRect> {
    let r = region.rect;
    let Some(i) = region.interior else {
        return vec![r];
    };
    [
        CropRect::new(r.x, r.y, r.w, i.y - r.y),
        CropRect::new(r.x, i.bottom(), r.w, r.bottom() - i.bottom()),
        CropRect::new(r.x, i.y, i.x - r.x, i.h),
        CropRect::new(i.right(), i.y, r.right() - i.right(), i.h),
    ]
    .into_iter()
    .filter(|s| s.area() > 0)
    .collect()
}

/// Top-left corner for a `patch_w x patch_h` paste whose bbox bottom-centre
/// lands uniformly in the identity's zone (interior for players and balls,
/// band for officials) with the whole patch inside the image.
pub fn sample_paste_location(
    identity: Identity,
    region: &CourtRegion,
    patch_w: u32,
    patch_h: u32,
    img_w: u32,
    img_h: u32,
    rng: &mut Rng,
) -> Option<(u32, u32)> {
    if patch_w == 0 || patch_h == 0 || patch_w > img_w || patch_h > img_h {
        return None;
    }
    let zone = identity.target_zone();
    let strips = match zone {
        Zone::Interior => region.interior.into_iter().collect(),
        _ => band_strips(region),
    };
    let total: u64 = strips.iter().map(|s| s.area()).sum();
    if total == 0 {
        return None;
    }
    let (pw, ph) = (patch_w as f64, patch_h as f64);
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let mut pick = rng.below(total);
        let strip = strips
            .iter()
            .find(|s| {
                let hit = pick < s.area();
                pick = pick.saturating_sub(s.area());
                hit
            })
            .unwrap();
        let ax = rng.uniform(strip.x as f64, strip.right() as f64);
        let ay = rng.uniform(strip.y as f64, strip.bottom() as f64);
        let left = (ax - pw / 2.0).round();
        let top = (ay - ph).round();
        if left < 0.0 || top < 0.0 || left + pw > img_w as f64 || top + ph > img_h as f64 {
            continue;
        }
        if region.zone(left + pw / 2.0, top + ph) == zone {
            return Some((left as u32, top as u32));
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PasteConfig {
    pub paste_min: u32,
    pub paste_max: u32,
    /// Occluded annotations keep at least this fraction of their original area or are removed.
    pub visibility_min: f64,
    /// Source annotations smaller than this many pixels are not pooled.
    pub min_area: f64,
    /// Uniform resize range for pasted patches; off when `None`.
    pub scale: Option<[f64; 2]>,
    /// Blend mask-edge pixels half and half with the destination.
    pub feather: bool,
}

impl Default for PasteConfig {
    fn default() -> Self {
        PasteConfig {
            paste_min: 1,
            paste_max: 4,
            visibility_min: 0.1,
            min_area: crate::coco::DEFAULT_MIN_AREA,
            scale: None,
            feather: false,
        }
    }
}

impl PasteConfig {
    pub fn validate(&self) -> Result<()> {
        let scale_ok = self
            .scale
            .is_none_or(|[lo, hi]| lo > 0.0 && lo <= hi && hi.is_finite());
        if self.paste_min > self.paste_max
            || !(0.0..=1.0).contains(&self.visibility_min)
            || !(self.min_area >= 0.0)
            || !scale_ok
        {
            return Err(Error::Config(format!("invalid paste settings {self:?}")));
        }
        Ok(())
    }
}

/// An image being augmented together with its annotations.
#[derive(Debug, Clone)]
pub struct Canvas {
    pub image: ImageBuffer,
    pub image_id: u64,
    pub annotations: Vec<CocoAnnotation>,
    /// Visible pixel count of each annotation before it was first occluded.
    original_area: BTreeMap<u64, u64>,
    next_id: u64,
}

impl Canvas {
    pub fn new(image: ImageBuffer, image_id: u64, annotations: Vec<CocoAnnotation>) -> Self {
        let next_id = annotations.iter().map(|a| a.id + 1).max().unwrap_or(1);
        Canvas {
            image,
            image_id,
            annotations,
            original_area: BTreeMap::new(),
            next_id,
        }
    }

    pub fn into_parts(self) -> (ImageBuffer, Vec<CocoAnnotation>) {
        (self.image, self.annotations)
    }
}

/// Pastes `patch` with its top-left at `loc` and returns the new annotation id.
///
/// The pasted object is frontmost: its mask is removed from every existing
/// annotation, and those left with less than `visibility_min` of their
/// original area are dropped. Occluded survivors become RLE masks.
pub fn paste_instance(
    canvas: &mut Canvas,
    patch: &InstancePatch,
    loc: (u32, u32),
    config: &PasteConfig,
) -> Result<u64> {
    let (w, h) = (canvas.image.width(), canvas.image.height());
    let (lx, ly) = loc;
    let (pw, ph) = (patch.width(), patch.height());
    if patch.pixels.width() != pw || patch.pixels.height() != ph {
        return Err(Error::InvalidArgument(
            "patch pixels and mask differ in size".into(),
        ));
    }
    let target = CropRect::new(lx, ly, pw, ph);
    if !target.fits_in(w, h) {
        return Err(Error::OutOfBounds {
            rect: target.to_string(),
            width: w,
            height: h,
        });
    }
    patch.pixels.require_channels(canvas.image.channels())?;

    let edge = |u: u32, v: u32| {
        let m = &patch.mask;
        [(0i64, -1i64), (0, 1), (-1, 0), (1, 0)]
            .iter()
            .any(|&(dx, dy)| !m.get_signed(u as i64 + dx, v as i64 + dy))
    };
    for v in 0..ph {
        for u in 0..pw {
            if !patch.mask.get(u, v) {
                continue;
            }
            let src = patch.pixels.pixel(u, v);
            let dst = canvas.image.pixel_mut(lx + u, ly + v);
            if config.feather && edge(u, v) {
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = (*d as u16 + *s as u16).div_ceil(2) as u8;
                }
            } else {
                dst.copy_from_slice(src);
            }
        }
    }

    let (ox, oy) = (lx as i64, ly as i64);
    let mut kept = Vec::with_capacity(canvas.annotations.len() + 1);
    for mut ann in std::mem::take(&mut canvas.annotations) {
        let [bx, by, bw, bh] = ann.bbox;
        let disjoint = bx > (lx + pw) as f64 + 1.0
            || by > (ly + ph) as f64 + 1.0
            || bx + bw < lx as f64 - 1.0
            || by + bh < ly as f64 - 1.0;
        if disjoint {
            kept.push(ann);
            continue;
        }
        let mut mask = ann.mask(w, h)?;
        if mask.overlap_at(&patch.mask, ox, oy) == 0 {
            kept.push(ann);
            continue;
        }
        let original = *canvas.original_area.entry(ann.id).or_insert(mask.count());
        mask.subtract_at(&patch.mask, ox, oy);
        let remaining = mask.count();
        if remaining == 0 || (remaining as f64) < config.visibility_min * original as f64 {
            log::debug!(
                "annotation {} occluded ({remaining}/{original} px left)",
                ann.id
            );
            continue;
        }
        ann.segmentation = Segmentation::Rle(rle_encode(&mask));
        ann.recompute_geometry()?;
        kept.push(ann);
    }

    let mut full = Mask::new(w, h);
    full.union_at(&patch.mask, ox, oy);
    let id = canvas.next_id;
    canvas.next_id += 1;
    let mut ann = CocoAnnotation {
        id,
        image_id: canvas.image_id,
        category_id: patch.category_id,
        segmentation: Segmentation::Rle(rle_encode(&full)),
        bbox: [0.0; 4],
        area: 0.0,
        iscrowd: 0,
        sub_identity: Some(patch.identity.as_str().to_string()),
    };
    ann.recompute_geometry()?;
    kept.push(ann);
    canvas.annotations = kept;
    Ok(id)
}

/// One successful paste.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PastedInstance {
    pub annotation_id: u64,
    pub identity: Identity,
    pub source: (u64, u64),
    /// Bottom-centre of the pasted bbox in canvas coordinates.
    pub anchor: (f64, f64),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AugmentOutcome {
    /// Number of pastes drawn, including ones that found no legal location.
    pub requested: u32,
    pub pasted: Vec<PastedInstance>,
}

/// Draws between `paste_min` and `paste_max` patches from `pool`, styles each
/// by its identity and pastes it at a location legal for that identity.
/// `region` must be in the canvas frame.
pub fn augment_image(
    canvas: &mut Canvas,
    region: &CourtRegion,
    pool: &[InstancePatch],
    config: &PasteConfig,
    style: &StyleRanges,
    rng: &mut Rng,
) -> Result<AugmentOutcome> {
    config.validate()?;
    let requested = rng.range_inclusive(config.paste_min as i64, config.paste_max as i64) as u32;
    let mut outcome = AugmentOutcome {
        requested,
        pasted: Vec::new(),
    };
    if requested > 0 && pool.is_empty() {
        log::warn!(
            "image {}: instance pool is empty, nothing pasted",
            canvas.image_id
        );
        return Ok(outcome);
    }
    let (w, h) = (canvas.image.width(), canvas.image.height());
    for _ in 0..requested {
        let source = &pool[rng.below(pool.len() as u64) as usize];
        let scaled;
        let patch = match config.scale {
            Some([lo, hi]) => match source.scaled(rng.uniform(lo, hi)) {
                Some(p) => {
                    scaled = p;
                    &scaled
                }
                None => continue,
            },
            None => source,
        };
        let params = style.sample(rng);
        let styled = apply_style(patch, &params, rng)?;
        let Some(loc) = sample_paste_location(
            styled.identity,
            region,
            styled.width(),
            styled.height(),
            w,
            h,
            rng,
        ) else {
            continue;
        };
        let id = paste_instance(canvas, &styled, loc, config)?;
        outcome.pasted.push(PastedInstance {
            annotation_id: id,
            identity: styled.identity,
            source: styled.source,
            anchor: (
                loc.0 as f64 + styled.width() as f64 / 2.0,
                (loc.1 + styled.height()) as f64,
            ),
        });
    }
    Ok(outcome)
}
