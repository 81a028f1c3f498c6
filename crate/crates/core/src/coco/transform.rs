use serde::{Deserialize, Serialize};

use super::geometry::{clip_polygon, points, translate};
use super::rle::{rle_decode, rle_encode};
use super::{CocoAnnotation, Segmentation};
use crate::court::CropRect;
use crate::error::{Error, Result};
use crate::raster::Mask;

/// Clipped annotations smaller than this (px²) are dropped.
pub const DEFAULT_MIN_AREA: f64 = 16.0;

const BOUNDS_EPS: f64 = 1e-6;

/// Moves an annotation into the frame of `rect`.
///
/// Polygons are clipped and translated; RLE masks are decoded, cropped and
/// re-encoded at the crop size. Returns `None` when less than `min_area`
/// remains, or when an RLE mask cannot be decoded.
pub fn transform_under_crop(
    ann: &CocoAnnotation,
    rect: CropRect,
    min_area: f64,
) -> Option<CocoAnnotation> {
    let (dx, dy) = (-(rect.x as f64), -(rect.y as f64));
    let mut all_inside = false;
    let segmentation = match &ann.segmentation {
        Segmentation::Polygons(polys) => {
            let mut out = Vec::new();
            all_inside = true;
            for poly in polys {
                let inside = points(poly).all(|(x, y)| rect.contains_point(x, y));
                all_inside &= inside;
                if inside {
                    out.push(translate(poly, dx, dy));
                } else {
                    out.extend(
                        clip_polygon(poly, rect)
                            .iter()
                            .map(|p| translate(p, dx, dy)),
                    );
                }
            }
            if out.is_empty() {
                return None;
            }
            Segmentation::Polygons(out)
        }
        Segmentation::Rle(rle) => match rle_decode(rle) {
            Ok(mask) => Segmentation::Rle(rle_encode(&mask.crop(
                rect.x as i64,
                rect.y as i64,
                rect.w,
                rect.h,
            ))),
            Err(e) => {
                log::warn!("annotation {}: {e}; dropped", ann.id);
                return None;
            }
        },
    };
    let mut out = CocoAnnotation {
        segmentation,
        ..ann.clone()
    };
    let area = ann.area;
    out.recompute_geometry().ok()?;
    if all_inside && (out.area - area).abs() <= 1e-6 * area.max(1.0) {
        // Pure translation: keep the source value rather than a re-rounded one.
        out.area = area;
    }
    (out.area >= min_area && out.area > 0.0).then_some(out)
}

/// A prediction in ROI coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    BBox([f64; 4]),
    Polygon(Vec<f64>),
}

/// Translates ROI-frame geometry by `(+rect.x, +rect.y)`. Geometry reaching
/// outside `[0, rect.w] x [0, rect.h]` is an error.
pub fn project_back(geom: &Geometry, rect: CropRect) -> Result<Geometry> {
    let (w, h) = (rect.w as f64, rect.h as f64);
    let within = |x: f64, y: f64| {
        x >= -BOUNDS_EPS && y >= -BOUNDS_EPS && x <= w + BOUNDS_EPS && y <= h + BOUNDS_EPS
    };
    let out_of_bounds = || Error::OutOfBounds {
        rect: format!("{geom:?}"),
        width: rect.w,
        height: rect.h,
    };
    let (dx, dy) = (rect.x as f64, rect.y as f64);
    match geom {
        Geometry::BBox([x, y, bw, bh]) => {
            if *bw < 0.0 || *bh < 0.0 || !within(*x, *y) || !within(x + bw, y + bh) {
                return Err(out_of_bounds());
            }
            Ok(Geometry::BBox([x + dx, y + dy, *bw, *bh]))
        }
        Geometry::Polygon(poly) => {
            if poly.len() % 2 != 0 || !points(poly).all(|(x, y)| within(x, y)) {
                return Err(out_of_bounds());
            }
            Ok(Geometry::Polygon(translate(poly, dx, dy)))
        }
    }
}

/// Maps a segmentation from ROI coordinates into an image of `width x height`.
pub fn project_back_segmentation(
    seg: &Segmentation,
    rect: CropRect,
    width: u32,
    height: u32,
) -> Result<Segmentation> {
    if !rect.fits_in(width, height) {
        return Err(Error::OutOfBounds {
            rect: rect.to_string(),
            width,
            height,
        });
    }
    Ok(match seg {
        Segmentation::Polygons(polys) => Segmentation::Polygons(
            polys
                .iter()
                .map(
                    |p| match project_back(&Geometry::Polygon(p.clone()), rect)? {
                        Geometry::Polygon(q) => Ok(q),
                        Geometry::BBox(_) => unreachable!(),
                    },
                )
                .collect::<Result<_>>()?,
        ),
        Segmentation::Rle(rle) => {
            if (rle.width(), rle.height()) != (rect.w, rect.h) {
                return Err(Error::OutOfBounds {
                    rect: format!("RLE {}x{}", rle.width(), rle.height()),
                    width: rect.w,
                    height: rect.h,
                });
            }
            let mut full = Mask::new(width, height);
            full.union_at(&rle_decode(rle)?, rect.x as i64, rect.y as i64);
            Segmentation::Rle(rle_encode(&full))
        }
    })
}

/// Maps a whole annotation from ROI coordinates to an image of
/// `width x height`. bbox is translated, not recomputed.
pub fn project_back_annotation(
    ann: &CocoAnnotation,
    rect: CropRect,
    width: u32,
    height: u32,
) -> Result<CocoAnnotation> {
    let segmentation = project_back_segmentation(&ann.segmentation, rect, width, height)?;
    let bbox = match project_back(&Geometry::BBox(ann.bbox), rect)? {
        Geometry::BBox(b) => b,
        Geometry::Polygon(_) => unreachable!(),
    };
    Ok(CocoAnnotation {
        segmentation,
        bbox,
        ..ann.clone()
    })
}
