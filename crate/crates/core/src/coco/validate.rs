use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::{CocoDataset, Segmentation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingKind {
    /// Shape of a field is wrong (odd polygon, bad RLE sum, zero-sized image).
    Schema,
    Duplicate,
    /// An id that does not resolve.
    Reference,
    /// bbox/area disagree with the segmentation.
    Geometry,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub kind: FindingKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annotation_id: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image_id: Option<u64>,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.kind)?;
        if let Some(id) = self.annotation_id {
            write!(f, " [annotation {id}]")?;
        } else if let Some(id) = self.image_id {
            write!(f, " [image {id}]")?;
        }
        write!(f, ": {}", self.message)
    }
}

// bbox/area are written with two decimals.
const BBOX_SLACK: f64 = 0.011;

/// Checks every dataset invariant and returns all violations in document order.
pub fn validate_dataset(ds: &CocoDataset) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut push = |kind, annotation_id, image_id, message: String| {
        out.push(Finding {
            kind,
            annotation_id,
            image_id,
            message,
        })
    };

    let mut image_ids = HashSet::new();
    for img in &ds.images {
        if !image_ids.insert(img.id) {
            push(
                FindingKind::Duplicate,
                None,
                Some(img.id),
                "duplicate image id".into(),
            );
        }
        if img.width == 0 || img.height == 0 {
            push(
                FindingKind::Schema,
                None,
                Some(img.id),
                format!("image size {}x{} is empty", img.width, img.height),
            );
        }
    }
    let mut category_ids = HashSet::new();
    for cat in &ds.categories {
        if !category_ids.insert(cat.id) {
            push(
                FindingKind::Duplicate,
                None,
                None,
                format!("duplicate category id {}", cat.id),
            );
        }
    }

    let mut ann_ids = HashSet::new();
    for ann in &ds.annotations {
        let id = Some(ann.id);
        if !ann_ids.insert(ann.id) {
            push(
                FindingKind::Duplicate,
                id,
                None,
                "duplicate annotation id".into(),
            );
        }
        let image = ds.images.iter().find(|i| i.id == ann.image_id);
        if image.is_none() {
            push(
                FindingKind::Reference,
                id,
                None,
                format!("image_id {} does not exist", ann.image_id),
            );
        }
        if !category_ids.contains(&ann.category_id) {
            push(
                FindingKind::Reference,
                id,
                None,
                format!("category_id {} does not exist", ann.category_id),
            );
        }

        let mut shape_ok = true;
        match &ann.segmentation {
            Segmentation::Polygons(polys) => {
                if polys.is_empty() {
                    shape_ok = false;
                    push(
                        FindingKind::Schema,
                        id,
                        None,
                        "segmentation has no polygons".into(),
                    );
                }
                for (i, p) in polys.iter().enumerate() {
                    if p.len() < 6 || p.len() % 2 != 0 {
                        shape_ok = false;
                        push(
                            FindingKind::Schema,
                            id,
                            None,
                            format!("polygon {i} has {} values; need an even count ≥ 6", p.len()),
                        );
                    } else if p.iter().any(|v| !v.is_finite()) {
                        shape_ok = false;
                        push(
                            FindingKind::Schema,
                            id,
                            None,
                            format!("polygon {i} is not finite"),
                        );
                    }
                }
            }
            Segmentation::Rle(rle) => {
                let total: u64 = rle.counts.iter().sum();
                if total != rle.height() as u64 * rle.width() as u64 {
                    shape_ok = false;
                    push(
                        FindingKind::Schema,
                        id,
                        None,
                        format!(
                            "RLE counts sum to {total}, expected {}x{}",
                            rle.height(),
                            rle.width()
                        ),
                    );
                } else if let Some(img) = image {
                    if (rle.width(), rle.height()) != (img.width, img.height) {
                        shape_ok = false;
                        push(
                            FindingKind::Schema,
                            id,
                            None,
                            "RLE size does not match its image".into(),
                        );
                    }
                }
            }
        }
        if !shape_ok {
            continue;
        }

        if !(ann.area > 0.0) {
            push(
                FindingKind::Geometry,
                id,
                None,
                format!("area {} is not positive", ann.area),
            );
        }
        let (Ok(seg_area), Ok(seg_box)) = (ann.segmentation_area(), ann.segmentation_bbox()) else {
            continue;
        };
        let tol = (0.05 * seg_area).max(5.0);
        if (ann.area - seg_area).abs() > tol {
            push(
                FindingKind::Geometry,
                id,
                None,
                format!(
                    "area {} disagrees with segmentation area {seg_area:.2}",
                    ann.area
                ),
            );
        }
        if let Some([sx, sy, sw, sh]) = seg_box {
            let [bx, by, bw, bh] = ann.bbox;
            let encloses = bx <= sx + BBOX_SLACK
                && by <= sy + BBOX_SLACK
                && bx + bw >= sx + sw - BBOX_SLACK
                && by + bh >= sy + sh - BBOX_SLACK;
            if !encloses {
                push(
                    FindingKind::Geometry,
                    id,
                    None,
                    format!("bbox {:?} does not enclose the segmentation", ann.bbox),
                );
            }
        }
    }
    out
}
