//! COCO detection-format datasets: the data model, a validator shared by the
//! parser and the `validate` command, mask geometry, and crop transforms.

pub mod geometry;
pub mod rle;
mod transform;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::raster::Mask;

pub use geometry::{clip_polygon, polygon_area, polygons_bbox, rasterize};
pub use rle::{rle_decode, rle_encode, RleMask};
pub use transform::{
    project_back, project_back_annotation, project_back_segmentation, transform_under_crop,
    Geometry, DEFAULT_MIN_AREA,
};
pub use validate::{validate_dataset, Finding, FindingKind};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CocoDataset {
    #[serde(default)]
    pub images: Vec<CocoImage>,
    #[serde(default)]
    pub annotations: Vec<CocoAnnotation>,
    #[serde(default)]
    pub categories: Vec<Category>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: u64,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Segmentation {
    Polygons(Vec<Vec<f64>>),
    Rle(RleMask),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    pub segmentation: Segmentation,
    #[serde(serialize_with = "serialize_bbox")]
    pub bbox: [f64; 4],
    #[serde(serialize_with = "serialize_2dp")]
    pub area: f64,
    #[serde(default)]
    pub iscrowd: u8,
    /// `"player"`, `"official"` or `"ball"` on pasted instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_identity: Option<String>,
}

fn round_2dp(v: f64) -> f64 {
    let r = (v * 100.0).round() / 100.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn serialize_2dp<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_2dp(*v))
}

fn serialize_bbox<S: Serializer>(b: &[f64; 4], s: S) -> std::result::Result<S::Ok, S::Error> {
    b.map(round_2dp).serialize(s)
}

impl CocoAnnotation {
    /// Binary mask in the frame of an image of the given size.
    pub fn mask(&self, width: u32, height: u32) -> Result<Mask> {
        match &self.segmentation {
            Segmentation::Polygons(polys) => Ok(rasterize(polys, width, height)),
            Segmentation::Rle(rle) => {
                if rle.width() != width || rle.height() != height {
                    return Err(Error::Malformed(format!(
                        "annotation {}: RLE size {}x{} does not match image {}x{}",
                        self.id,
                        rle.width(),
                        rle.height(),
                        width,
                        height
                    )));
                }
                rle_decode(rle)
            }
        }
    }

    /// Area of the segmentation itself: summed polygon areas or RLE pixel count.
    pub fn segmentation_area(&self) -> Result<f64> {
        match &self.segmentation {
            Segmentation::Polygons(polys) => polys.iter().map(|p| polygon_area(p)).sum(),
            Segmentation::Rle(rle) => Ok(rle.area() as f64),
        }
    }

    /// Tight box around the segmentation; `None` when it is empty.
    pub fn segmentation_bbox(&self) -> Result<Option<[f64; 4]>> {
        match &self.segmentation {
            Segmentation::Polygons(polys) => Ok(polygons_bbox(polys)),
            Segmentation::Rle(rle) => Ok(rle_decode(rle)?
                .bounds()
                .map(|(x, y, w, h)| [x as f64, y as f64, w as f64, h as f64])),
        }
    }

    /// Sets `bbox` and `area` from the segmentation.
    pub fn recompute_geometry(&mut self) -> Result<()> {
        self.area = self.segmentation_area()?;
        self.bbox = self.segmentation_bbox()?.unwrap_or([0.0; 4]);
        Ok(())
    }

    /// Bottom-centre of the bbox, used as the object's foot position on the court.
    pub fn anchor(&self) -> (f64, f64) {
        let [x, y, w, h] = self.bbox;
        (x + w / 2.0, y + h)
    }
}

impl CocoDataset {
    pub fn image(&self, id: u64) -> Option<&CocoImage> {
        self.images.iter().find(|i| i.id == id)
    }

    pub fn category_name(&self, id: u64) -> Option<&str> {
        self.categories
            .iter()
            .find(|c| c.id == id)
            .map(|c| c.name.as_str())
    }

    /// Annotations grouped by image id, each group in document order.
    pub fn annotations_by_image(&self) -> BTreeMap<u64, Vec<&CocoAnnotation>> {
        let mut map: BTreeMap<u64, Vec<&CocoAnnotation>> = BTreeMap::new();
        for ann in &self.annotations {
            map.entry(ann.image_id).or_default().push(ann);
        }
        map
    }

    /// Fails on the first structural problem: duplicate ids, dangling
    /// references or malformed segmentations. Geometric findings are not errors.
    pub fn check_structure(&self) -> Result<()> {
        for f in validate_dataset(self) {
            match f.kind {
                FindingKind::Reference => {
                    return Err(Error::Reference {
                        annotation_id: f.annotation_id.unwrap_or_default(),
                        message: f.message,
                    })
                }
                FindingKind::Schema | FindingKind::Duplicate => {
                    return Err(Error::Malformed(f.to_string()))
                }
                FindingKind::Geometry => {}
            }
        }
        Ok(())
    }
}

pub fn parse_coco(text: &[u8]) -> Result<CocoDataset> {
    let ds: CocoDataset =
        serde_json::from_slice(text).map_err(|e| Error::Malformed(e.to_string()))?;
    ds.check_structure()?;
    Ok(ds)
}

/// Pretty-printed, deterministic document; bbox and area are rounded to two decimals.
pub fn serialize_coco(ds: &CocoDataset) -> Result<Vec<u8>> {
    ds.check_structure()?;
    let mut out = serde_json::to_vec_pretty(ds)?;
    out.push(b'\n');
    Ok(out)
}
