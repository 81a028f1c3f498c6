//! Dataset-level orchestration: court detection and cropping, duplication
//! with augmentation, ROI export for inference, statistics and validation.
//!
//! Every (image, variant) unit draws from its own random stream derived from
//! the run seed and the unit's identifiers, and results are assembled in
//! `(image id, variant)` order, so outputs do not depend on the worker count.

mod config;
mod io;
mod roi;
mod stats;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{
    assign_identity, augment_image, extract_from_image, Canvas, Identity, InstancePatch,
};
use crate::coco::{
    serialize_coco, transform_under_crop, validate_dataset, CocoAnnotation, CocoDataset, CocoImage,
    Finding, FindingKind,
};
use crate::court::{crop_image, detect_court_detailed, split_regions, CourtRegion, CropRect};
use crate::error::{Error, Result};
use crate::raster::ImageBuffer;
use crate::rng::{mix_seed, Rng};

pub use config::{AugmentConfig, RegionConfig, RunConfig};
pub use io::{
    read_json, write_json, DirSink, DirSource, ImageSink, ImageSource, MemorySink, MemorySource,
    NullSink,
};
pub use roi::{
    export_roi, project_back_dataset, project_back_predictions, RectEntry, RectTable, RoiExport,
};
pub use stats::{compute_stats, GroupStats, ImageRatio, StatsReport};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One output image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub source_id: u64,
    pub source_file: String,
    pub source_width: u32,
    pub source_height: u32,
    pub variant: u32,
    pub output_id: u64,
    pub output_file: String,
    pub crop_rect: CropRect,
    /// Crop area over source image area.
    pub crop_area_ratio: f64,
    /// The static bounds were used because no usable court lines were found.
    pub fallback: bool,
    pub paste_count: u32,
    pub seed: u64,
    pub identity_counts: BTreeMap<Identity, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedImage {
    pub source_id: u64,
    pub source_file: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: AugmentConfig,
    pub records: Vec<ImageRecord>,
    #[serde(default)]
    pub skipped: Vec<SkippedImage>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dataset: CocoDataset,
    pub manifest: RunManifest,
}

impl RunOutput {
    /// Writes `annotations.json` and `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        io::write_bytes(
            &dir.join("annotations.json"),
            &serialize_coco(&self.dataset)?,
        )?;
        io::write_json(&dir.join("manifest.json"), &self.manifest)
    }
}

/// A source image after court detection and cropping.
struct Prepared {
    image: CocoImage,
    rect: CropRect,
    fallback: bool,
    cropped: ImageBuffer,
    annotations: Vec<CocoAnnotation>,
    /// In the cropped frame.
    region: CourtRegion,
}

pub(crate) fn crop_area_ratio(rect: CropRect, width: u32, height: u32) -> f64 {
    rect.area() as f64 / (width as f64 * height as f64)
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

fn prepare(
    image: &CocoImage,
    anns: &[&CocoAnnotation],
    ds: &CocoDataset,
    config: &AugmentConfig,
    source: &dyn ImageSource,
) -> Result<(Prepared, Vec<InstancePatch>)> {
    let img = source.load(image)?;
    let detection = detect_court_detailed(&img, &config.crop)?;
    let rect = detection.rect;
    let cropped = crop_image(&img, rect)?;
    let region = split_regions(rect, config.regions.band_frac)?.localized();
    let cats = &config.regions.categories;

    let mut annotations: Vec<CocoAnnotation> = anns
        .iter()
        .filter_map(|a| transform_under_crop(a, rect, config.paste.min_area))
        .collect();
    for ann in &mut annotations {
        let name = ds.category_name(ann.category_id).unwrap_or_default();
        if cats.is_known(name) {
            let identity = assign_identity(ann, &region, name, cats)?;
            ann.sub_identity = Some(identity.as_str().to_string());
        }
    }
    let refs: Vec<&CocoAnnotation> = annotations.iter().collect();
    let patches = extract_from_image(
        &cropped,
        image.id,
        &refs,
        &region,
        &ds.categories,
        cats,
        config.paste.min_area,
    )?;
    Ok((
        Prepared {
            image: image.clone(),
            rect,
            fallback: detection.fallback,
            cropped,
            annotations,
            region,
        },
        patches,
    ))
}

struct Variant {
    annotations: Vec<CocoAnnotation>,
    file: String,
    paste_count: u32,
    seed: u64,
}

fn render_variant(
    p: &Prepared,
    variant: u32,
    pool: &[InstancePatch],
    config: &AugmentConfig,
    sink: &dyn ImageSink,
) -> Result<Variant> {
    let seed = mix_seed(config.run.seed, &[p.image.id, variant as u64]);
    let mut rng = Rng::new(seed);
    let mut canvas = Canvas::new(p.cropped.clone(), p.image.id, p.annotations.clone());
    let outcome = augment_image(
        &mut canvas,
        &p.region,
        pool,
        &config.paste,
        &config.style,
        &mut rng,
    )?;
    let (mut img, annotations) = canvas.into_parts();
    if let Some(masked) = config.style.grid_mask.apply(&img, &mut rng)? {
        img = masked;
    }
    let file = format!("{}_v{:02}.png", io::flat_stem(&p.image.file_name), variant);
    sink.write(&file, &img)?;
    Ok(Variant {
        annotations,
        file,
        paste_count: outcome.pasted.len() as u32,
        seed,
    })
}

/// Detect, crop and duplicate every image `duplication_factor` times with
/// augmentation. Images that cannot be loaded or are too small are skipped
/// and recorded; failing to write output is fatal.
pub fn run_pipeline(
    config: &AugmentConfig,
    ds: &CocoDataset,
    source: &dyn ImageSource,
    sink: &dyn ImageSink,
) -> Result<RunOutput> {
    config.validate()?;
    ds.check_structure()?;
    let by_image = ds.annotations_by_image();
    let mut images: Vec<&CocoImage> = ds.images.iter().collect();
    images.sort_by_key(|i| i.id);

    let pool_threads = thread_pool(config.run.workers)?;
    let (prepared, skipped, pool) = pool_threads.install(|| {
        let results: Vec<_> = images
            .par_iter()
            .map(|image| {
                let anns = by_image.get(&image.id).map_or(&[][..], |v| v.as_slice());
                (*image, prepare(image, anns, ds, config, source))
            })
            .collect();
        let mut prepared = Vec::new();
        let mut skipped = Vec::new();
        let mut pool = Vec::new();
        for (image, result) in results {
            match result {
                Ok((p, patches)) => {
                    prepared.push(p);
                    pool.extend(patches);
                }
                Err(e) => {
                    log::warn!("skipping image {} ({}): {e}", image.id, image.file_name);
                    skipped.push(SkippedImage {
                        source_id: image.id,
                        source_file: image.file_name.clone(),
                        reason: e.to_string(),
                    });
                }
            }
        }
        (prepared, skipped, pool)
    });
    log::info!(
        "{} images prepared, {} skipped, {} instances pooled",
        prepared.len(),
        skipped.len(),
        pool.len()
    );

    let factor = config.run.duplication_factor;
    let units: Vec<(usize, u32)> = (0..prepared.len())
        .flat_map(|i| (0..factor).map(move |v| (i, v)))
        .collect();
    let variants = pool_threads.install(|| {
        units
            .par_iter()
            .map(|&(i, v)| render_variant(&prepared[i], v, &pool, config, sink))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut dataset = CocoDataset {
        images: Vec::with_capacity(variants.len()),
        annotations: Vec::new(),
        categories: ds.categories.clone(),
    };
    let mut records = Vec::with_capacity(variants.len());
    let mut next_ann_id = 1;
    for (&(i, variant), out) in units.iter().zip(variants) {
        let p = &prepared[i];
        let output_id = dataset.images.len() as u64 + 1;
        dataset.images.push(CocoImage {
            id: output_id,
            file_name: out.file.clone(),
            width: p.rect.w,
            height: p.rect.h,
        });
        let mut identity_counts = BTreeMap::new();
        for mut ann in out.annotations {
            if let Some(id) = ann.sub_identity.as_deref().and_then(Identity::from_attr) {
                *identity_counts.entry(id).or_insert(0) += 1;
            }
            ann.id = next_ann_id;
            ann.image_id = output_id;
            next_ann_id += 1;
            dataset.annotations.push(ann);
        }
        records.push(ImageRecord {
            source_id: p.image.id,
            source_file: p.image.file_name.clone(),
            source_width: p.image.width,
            source_height: p.image.height,
            variant,
            output_id,
            output_file: out.file,
            crop_rect: p.rect,
            crop_area_ratio: crop_area_ratio(p.rect, p.image.width, p.image.height),
            fallback: p.fallback,
            paste_count: out.paste_count,
            seed: out.seed,
            identity_counts,
        });
    }
    Ok(RunOutput {
        dataset,
        manifest: RunManifest {
            tool_version: TOOL_VERSION.to_string(),
            config: config.clone(),
            records,
            skipped,
        },
    })
}

/// Reads a dataset file and checks every dataset invariant. A document that
/// is not valid COCO at all yields a single schema finding.
pub fn validate_file(path: &Path) -> Result<Vec<Finding>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(match serde_json::from_slice::<CocoDataset>(&bytes) {
        Ok(ds) => validate_dataset(&ds),
        Err(e) => vec![Finding {
            kind: FindingKind::Schema,
            annotation_id: None,
            image_id: None,
            message: e.to_string(),
        }],
    })
}

#[cfg(test)]
mod tests;
