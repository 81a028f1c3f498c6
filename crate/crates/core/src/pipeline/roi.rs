use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::io::{flat_stem, ImageSink, ImageSource};
use super::{crop_area_ratio, thread_pool, AugmentConfig, SkippedImage};
use crate::coco::{
    project_back, project_back_annotation, project_back_segmentation, transform_under_crop,
    CocoAnnotation, CocoDataset, CocoImage, Geometry, Segmentation,
};
use crate::court::{crop_image, detect_court_detailed, CropRect};
use crate::error::{Error, Result};

/// Where one exported ROI came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectEntry {
    pub image_id: u64,
    pub file_name: String,
    pub roi_file_name: String,
    /// Original image size.
    pub width: u32,
    pub height: u32,
    pub rect: CropRect,
    pub crop_area_ratio: f64,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RectTable {
    pub entries: Vec<RectEntry>,
}

impl RectTable {
    pub fn get(&self, image_id: u64) -> Option<&RectEntry> {
        self.entries.iter().find(|e| e.image_id == image_id)
    }

    fn index(&self) -> BTreeMap<u64, &RectEntry> {
        self.entries.iter().map(|e| (e.image_id, e)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RoiExport {
    /// Same ids as the input; images resized to their ROI.
    pub dataset: CocoDataset,
    pub rects: RectTable,
    pub skipped: Vec<SkippedImage>,
}

/// Crops every image to its detected court, without augmentation or
/// duplication, and records the rectangles needed to map results back.
pub fn export_roi(
    ds: &CocoDataset,
    config: &AugmentConfig,
    source: &dyn ImageSource,
    sink: &dyn ImageSink,
) -> Result<RoiExport> {
    config.validate()?;
    ds.check_structure()?;
    let by_image = ds.annotations_by_image();
    let mut images: Vec<&CocoImage> = ds.images.iter().collect();
    images.sort_by_key(|i| i.id);

    let crop_one = |image: &CocoImage| -> Result<Result<(RectEntry, Vec<CocoAnnotation>)>> {
        let loaded = source
            .load(image)
            .and_then(|img| Ok((detect_court_detailed(&img, &config.crop)?, img)));
        let (detection, img) = match loaded {
            Ok(v) => v,
            Err(e) => return Ok(Err(e)),
        };
        let rect = detection.rect;
        let roi_file_name = format!("{}.png", flat_stem(&image.file_name));
        sink.write(&roi_file_name, &crop_image(&img, rect)?)?;
        let anns = by_image
            .get(&image.id)
            .into_iter()
            .flatten()
            .filter_map(|a| transform_under_crop(a, rect, config.paste.min_area))
            .collect();
        Ok(Ok((
            RectEntry {
                image_id: image.id,
                file_name: image.file_name.clone(),
                roi_file_name,
                width: image.width,
                height: image.height,
                rect,
                crop_area_ratio: crop_area_ratio(rect, image.width, image.height),
                fallback: detection.fallback,
            },
            anns,
        )))
    };

    let results = thread_pool(config.run.workers)?.install(|| {
        images
            .par_iter()
            .map(|image| crop_one(image))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut out = RoiExport {
        dataset: CocoDataset {
            categories: ds.categories.clone(),
            ..CocoDataset::default()
        },
        rects: RectTable::default(),
        skipped: Vec::new(),
    };
    for (image, result) in images.iter().zip(results) {
        match result {
            Ok((entry, anns)) => {
                out.dataset.images.push(CocoImage {
                    id: image.id,
                    file_name: entry.roi_file_name.clone(),
                    width: entry.rect.w,
                    height: entry.rect.h,
                });
                out.dataset.annotations.extend(anns);
                out.rects.entries.push(entry);
            }
            Err(e) => {
                log::warn!("skipping image {} ({}): {e}", image.id, image.file_name);
                out.skipped.push(SkippedImage {
                    source_id: image.id,
                    source_file: image.file_name.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(out)
}

fn entry_for<'a>(index: &BTreeMap<u64, &'a RectEntry>, image_id: u64) -> Result<&'a RectEntry> {
    index
        .get(&image_id)
        .copied()
        .ok_or_else(|| Error::InvalidArgument(format!("image {image_id} is not in the rect table")))
}

/// Maps an exported ROI dataset back to the original images.
pub fn project_back_dataset(roi: &CocoDataset, table: &RectTable) -> Result<CocoDataset> {
    let index = table.index();
    let images = roi
        .images
        .iter()
        .map(|img| {
            let e = entry_for(&index, img.id)?;
            Ok(CocoImage {
                id: img.id,
                file_name: e.file_name.clone(),
                width: e.width,
                height: e.height,
            })
        })
        .collect::<Result<_>>()?;
    let annotations = roi
        .annotations
        .iter()
        .map(|a| {
            let e = entry_for(&index, a.image_id)?;
            project_back_annotation(a, e.rect, e.width, e.height)
        })
        .collect::<Result<_>>()?;
    Ok(CocoDataset {
        images,
        annotations,
        categories: roi.categories.clone(),
    })
}

/// Maps predictions made on ROI images back to the original frames.
///
/// Accepts either a COCO results list (`[{image_id, bbox, segmentation?, ...}]`,
/// other fields preserved) or a whole COCO dataset document.
pub fn project_back_predictions(preds: Value, table: &RectTable) -> Result<Value> {
    match preds {
        Value::Array(items) => {
            let index = table.index();
            items
                .into_iter()
                .map(|item| project_back_item(item, &index))
                .collect::<Result<Vec<_>>>()
                .map(Value::Array)
        }
        Value::Object(ref map) if map.contains_key("annotations") => {
            let ds: CocoDataset = serde_json::from_value(preds)?;
            Ok(serde_json::to_value(project_back_dataset(&ds, table)?)?)
        }
        _ => Err(Error::Malformed(
            "expected a results list or a COCO dataset".into(),
        )),
    }
}

fn project_back_item(mut item: Value, index: &BTreeMap<u64, &RectEntry>) -> Result<Value> {
    let Some(obj) = item.as_object_mut() else {
        return Err(Error::Malformed("prediction is not an object".into()));
    };
    let image_id = obj
        .get("image_id")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Malformed("prediction has no image_id".into()))?;
    let e = entry_for(index, image_id)?;
    if let Some(bbox) = obj.get("bbox") {
        let bbox: [f64; 4] = serde_json::from_value(bbox.clone())?;
        let Geometry::BBox(b) = project_back(&Geometry::BBox(bbox), e.rect)? else {
            unreachable!()
        };
        obj.insert("bbox".into(), serde_json::to_value(b)?);
    }
    if let Some(seg) = obj.get("segmentation") {
        let seg: Segmentation = serde_json::from_value(seg.clone())?;
        let projected = project_back_segmentation(&seg, e.rect, e.width, e.height)?;
        obj.insert("segmentation".into(), serde_json::to_value(projected)?);
    }
    Ok(item)
}
