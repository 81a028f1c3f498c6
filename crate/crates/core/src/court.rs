//! Court localisation and region geometry.
//!
//! [`detect_court`] finds straight lines with Canny + Hough, takes the convex
//! hull of all segment endpoints and combines its bounding box with fixed
//! fractions of the frame to produce the crop rectangle. [`split_regions`]
//! divides that rectangle into a core area and an outer band of a given area
//! fraction, which drives sub-identity assignment and paste placement.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgproc::{
    canny, convex_hull, hough_segments, hull_bbox, to_grayscale, CannyParams, ConvexHull,
    HoughParams, LineSegment, Point,
};
use crate::raster::ImageBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CropMode {
    /// The crop formula applied literally, then clamped.
    #[default]
    AsWritten,
    /// Union of the literal rectangle and the hull box; always covers every segment.
    HullUnion,
}

impl std::str::FromStr for CropMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-written" => Ok(CropMode::AsWritten),
            "hull-union" => Ok(CropMode::HullUnion),
            other => Err(Error::InvalidArgument(format!(
                "unknown crop mode {other:?} (expected as-written or hull-union)"
            ))),
        }
    }
}

/// Hough settings; `min_len` defaults to a tenth of the short image side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoughSettings {
    pub rho_res: f64,
    pub theta_res_deg: f64,
    pub votes_min: u32,
    pub min_len: Option<f64>,
    pub max_gap: u32,
}

impl Default for HoughSettings {
    fn default() -> Self {
        HoughSettings {
            rho_res: 1.0,
            theta_res_deg: 1.0,
            votes_min: 80,
            min_len: None,
            max_gap: 10,
        }
    }
}

impl HoughSettings {
    pub fn resolve(&self, width: u32, height: u32) -> HoughParams {
        let base = HoughParams::for_image(width, height);
        HoughParams {
            rho_res: self.rho_res,
            theta_res: self.theta_res_deg * PI / 180.0,
            votes_min: self.votes_min,
            min_len: self.min_len.unwrap_or(base.min_len),
            max_gap: self.max_gap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CropParams {
    pub h_min_frac: f64,
    pub h_max_frac: f64,
    pub w_min_frac: f64,
    pub w_max_frac: f64,
    pub y_offset: i64,
    pub mode: CropMode,
    /// In `as-written` mode, also intersect the result with the static bounds box.
    pub cap_to_static: bool,
    pub canny: CannyParams,
    pub hough: HoughSettings,
}

impl Default for CropParams {
    fn default() -> Self {
        CropParams {
            h_min_frac: 1.0 / 9.0,
            h_max_frac: 8.0 / 9.0,
            w_min_frac: 1.0 / 15.0,
            w_max_frac: 14.0 / 15.0,
            y_offset: 50,
            mode: CropMode::AsWritten,
            cap_to_static: true,
            canny: CannyParams::default(),
            hough: HoughSettings::default(),
        }
    }
}

impl CropParams {
    pub fn validate(&self) -> Result<()> {
        let ordered = |lo: f64, hi: f64| (0.0..=1.0).contains(&lo) && lo < hi && hi <= 1.0;
        if !ordered(self.h_min_frac, self.h_max_frac) || !ordered(self.w_min_frac, self.w_max_frac)
        {
            return Err(Error::Config(
                "bound fractions need 0 <= min < max <= 1".into(),
            ));
        }
        if self.y_offset < 0 {
            return Err(Error::Config("y_offset must be non-negative".into()));
        }
        if !(self.canny.low > 0.0 && self.canny.low < self.canny.high && self.canny.sigma > 0.0) {
            return Err(Error::Config(
                "canny needs sigma > 0 and 0 < low < high".into(),
            ));
        }
        let h = &self.hough;
        if !(h.rho_res > 0.0 && h.theta_res_deg > 0.0 && h.votes_min >= 1) {
            return Err(Error::Config(
                "hough needs rho_res > 0, theta_res_deg > 0, votes_min >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Axis-aligned pixel rectangle; covers columns `x..x+w` and rows `y..y+h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CropRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl CropRect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        CropRect { x, y, w, h }
    }

    pub fn full(width: u32, height: u32) -> Self {
        CropRect::new(0, 0, width, height)
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn fits_in(&self, width: u32, height: u32) -> bool {
        self.w >= 1 && self.h >= 1 && self.right() <= width && self.bottom() <= height
    }

    /// Closed containment of a continuous point.
    pub fn contains_point(&self, px: f64, py: f64) -> bool {
        px >= self.x as f64
            && px <= self.right() as f64
            && py >= self.y as f64
            && py <= self.bottom() as f64
    }

    /// Whether pixel `(px, py)` is one of the covered pixels.
    pub fn contains_pixel(&self, px: i64, py: i64) -> bool {
        px >= self.x as i64
            && px < self.right() as i64
            && py >= self.y as i64
            && py < self.bottom() as i64
    }
}

impl std::fmt::Display for CropRect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {}, {})", self.x, self.y, self.w, self.h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticBounds {
    pub min_h: u32,
    pub max_h: u32,
    pub min_w: u32,
    pub max_w: u32,
}

impl StaticBounds {
    pub fn rect(&self) -> CropRect {
        CropRect::new(
            self.min_w,
            self.min_h,
            self.max_w - self.min_w,
            self.max_h - self.min_h,
        )
    }
}

pub const MIN_WIDTH: u32 = 15;
pub const MIN_HEIGHT: u32 = 9;

fn frac_floor(frac: f64, dim: u32) -> u32 {
    // The epsilon keeps exact products such as 8/9 * 900 from flooring to 799.
    (frac * dim as f64 + 1e-9).floor() as u32
}

pub fn static_bounds(width: u32, height: u32, params: &CropParams) -> Result<StaticBounds> {
    if width < MIN_WIDTH || height < MIN_HEIGHT {
        return Err(Error::ImageTooSmall {
            width,
            height,
            min_width: MIN_WIDTH,
            min_height: MIN_HEIGHT,
        });
    }
    let b = StaticBounds {
        min_h: frac_floor(params.h_min_frac, height),
        max_h: frac_floor(params.h_max_frac, height),
        min_w: frac_floor(params.w_min_frac, width),
        max_w: frac_floor(params.w_max_frac, width),
    };
    if b.min_h >= b.max_h || b.min_w >= b.max_w {
        return Err(Error::ImageTooSmall {
            width,
            height,
            min_width: MIN_WIDTH,
            min_height: MIN_HEIGHT,
        });
    }
    Ok(b)
}

/// Everything [`detect_court`] computed along the way.
#[derive(Debug, Clone)]
pub struct CourtDetection {
    pub rect: CropRect,
    pub bounds: StaticBounds,
    pub segments: Vec<LineSegment>,
    pub hull: Option<ConvexHull>,
    pub hull_bbox: Option<(i64, i64, i64, i64)>,
    pub fallback: bool,
}

pub fn detect_court(img: &ImageBuffer, params: &CropParams) -> Result<CropRect> {
    detect_court_detailed(img, params).map(|d| d.rect)
}

pub fn detect_court_detailed(img: &ImageBuffer, params: &CropParams) -> Result<CourtDetection> {
    let (width, height) = (img.width(), img.height());
    let bounds = static_bounds(width, height, params)?;
    let gray = match img.channels() {
        3 => to_grayscale(img)?,
        _ => img.clone(),
    };
    let edges = canny(&gray, &params.canny)?;
    let segments = hough_segments(&edges, &params.hough.resolve(width, height));

    let mut detection = CourtDetection {
        rect: bounds.rect(),
        bounds,
        segments,
        hull: None,
        hull_bbox: None,
        fallback: true,
    };
    if detection.segments.len() < 2 {
        return Ok(detection);
    }
    let endpoints: Vec<Point> = detection
        .segments
        .iter()
        .flat_map(|s| [s.p0, s.p1])
        .collect();
    let hull = convex_hull(&endpoints)?;
    let Ok(bbox) = hull_bbox(&hull) else {
        detection.hull = Some(hull);
        return Ok(detection);
    };
    detection.hull = Some(hull);
    detection.hull_bbox = Some(bbox);
    if let Some(rect) = crop_from_hull(bbox, &bounds, width, height, params) {
        detection.rect = rect;
        detection.fallback = false;
    }
    Ok(detection)
}

/// Applies the crop formula to a hull bounding box `(x, y, w, h)`.
/// Returns `None` when clamping leaves an empty rectangle.
pub fn crop_from_hull(
    hull_box: (i64, i64, i64, i64),
    bounds: &StaticBounds,
    width: u32,
    height: u32,
    params: &CropParams,
) -> Option<CropRect> {
    let (dx, dy, dw, dh) = hull_box;
    let (min_w, min_h, max_h) = (
        bounds.min_w as i64,
        bounds.min_h as i64,
        bounds.max_h as i64,
    );

    let x = min_w.min(dx);
    let y = min_h.max(dy) - params.y_offset;
    let w = min_w.max(dw);
    let h = max_h.min(dh);
    let (mut x0, mut y0, mut x1, mut y1) = (x, y, x + w, y + h);

    match params.mode {
        CropMode::AsWritten => {
            if params.cap_to_static {
                x0 = x0.max(bounds.min_w as i64);
                y0 = y0.max(min_h);
                x1 = x1.min(bounds.max_w as i64);
                y1 = y1.min(max_h);
            }
        }
        CropMode::HullUnion => {
            // Endpoint pixels at the box's far edges must be covered too.
            x0 = x0.min(dx);
            y0 = y0.min(dy);
            x1 = x1.max(dx + dw + 1);
            y1 = y1.max(dy + dh + 1);
        }
    }

    let (x0, y0) = (x0.max(0), y0.max(0));
    let (x1, y1) = (x1.min(width as i64), y1.min(height as i64));
    (x1 > x0 && y1 > y0)
        .then(|| CropRect::new(x0 as u32, y0 as u32, (x1 - x0) as u32, (y1 - y0) as u32))
}

/// Which part of a [`CourtRegion`] a point falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Zone {
    Interior,
    Band,
    Outside,
}

/// Crop rectangle split into an interior and an outer band of `band_frac` of its area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CourtRegion {
    pub rect: CropRect,
    pub band_frac: f64,
    pub inset: u32,
    /// `None` when the band covers the whole rectangle.
    pub interior: Option<CropRect>,
}

impl CourtRegion {
    pub fn interior_area(&self) -> u64 {
        self.interior.map_or(0, |r| r.area())
    }

    pub fn band_area(&self) -> u64 {
        self.rect.area() - self.interior_area()
    }

    /// Interior is open; its boundary belongs to the band.
    pub fn zone(&self, px: f64, py: f64) -> Zone {
        if let Some(i) = self.interior {
            if px > i.x as f64 && px < i.right() as f64 && py > i.y as f64 && py < i.bottom() as f64
            {
                return Zone::Interior;
            }
        }
        if self.rect.contains_point(px, py) {
            Zone::Band
        } else {
            Zone::Outside
        }
    }

    /// The same region expressed in the frame of its own rectangle.
    pub fn localized(&self) -> CourtRegion {
        let (ox, oy) = (self.rect.x, self.rect.y);
        CourtRegion {
            rect: CropRect::new(0, 0, self.rect.w, self.rect.h),
            interior: self
                .interior
                .map(|i| CropRect::new(i.x - ox, i.y - oy, i.w, i.h)),
            ..*self
        }
    }
}

/// Uniform inset `t` solving `(w - 2t)(h - 2t) = (1 - band_frac) w h`, rounded.
pub fn split_regions(rect: CropRect, band_frac: f64) -> Result<CourtRegion> {
    if !(0.0..=1.0).contains(&band_frac) {
        return Err(Error::InvalidArgument(format!(
            "band fraction must be in [0, 1], got {band_frac}"
        )));
    }
    let (w, h) = (rect.w as f64, rect.h as f64);
    let max_inset = rect.w.min(rect.h) / 2;
    let inset = if band_frac >= 1.0 {
        max_inset
    } else {
        let s = w + h;
        let t = (s - (s * s - 4.0 * band_frac * w * h).max(0.0).sqrt()) / 4.0;
        (t.round() as u32).min(max_inset)
    };
    let interior = (band_frac < 1.0)
        .then(|| {
            CropRect::new(
                rect.x + inset,
                rect.y + inset,
                rect.w - 2 * inset,
                rect.h - 2 * inset,
            )
        })
        .filter(|r| r.w > 0 && r.h > 0);
    Ok(CourtRegion {
        rect,
        band_frac,
        inset,
        interior,
    })
}

pub fn crop_image(img: &ImageBuffer, rect: CropRect) -> Result<ImageBuffer> {
    if !rect.fits_in(img.width(), img.height()) {
        return Err(Error::OutOfBounds {
            rect: rect.to_string(),
            width: img.width(),
            height: img.height(),
        });
    }
    let c = img.channels() as usize;
    let row_len = rect.w as usize * c;
    let mut data = Vec::with_capacity(row_len * rect.h as usize);
    for y in rect.y..rect.bottom() {
        let start = (y as usize * img.width() as usize + rect.x as usize) * c;
        data.extend_from_slice(&img.data()[start..start + row_len]);
    }
    ImageBuffer::from_raw(rect.w, rect.h, img.channels(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    #[test]
    fn static_bounds_examples() {
        let p = CropParams::default();
        let b = static_bounds(1500, 900, &p).unwrap();
        assert_eq!((b.min_h, b.max_h, b.min_w, b.max_w), (100, 800, 100, 1400));
        let b = static_bounds(15, 9, &p).unwrap();
        assert_eq!((b.min_h, b.max_h, b.min_w, b.max_w), (1, 8, 1, 14));
        let b = static_bounds(100, 100, &p).unwrap();
        assert_eq!((b.min_h, b.max_h, b.min_w, b.max_w), (11, 88, 6, 93));
        assert!(static_bounds(14, 100, &p).is_err());
    }

    #[test]
    fn formula_on_oracle_hull_box() {
        let p = CropParams::default();
        let b = static_bounds(1500, 900, &p).unwrap();
        let r = crop_from_hull((200, 300, 1000, 500), &b, 1500, 900, &p).unwrap();
        assert_eq!(r, CropRect::new(100, 250, 1000, 500));
    }

    #[test]
    fn whole_frame_hull_is_capped_by_static_bounds() {
        let p = CropParams::default();
        let b = static_bounds(1500, 900, &p).unwrap();
        let r = crop_from_hull((0, 0, 1499, 899), &b, 1500, 900, &p).unwrap();
        assert_eq!(r, CropRect::new(100, 100, 1300, 700));
        let union = CropParams {
            mode: CropMode::HullUnion,
            ..p
        };
        let r = crop_from_hull((0, 0, 1499, 899), &b, 1500, 900, &union).unwrap();
        assert_eq!(r, CropRect::full(1500, 900));
    }

    /// Bright court floor covering pixels (200..=1200, 300..=800) on a dark frame.
    fn synthetic_court() -> ImageBuffer {
        ImageBuffer::from_fn(1500, 900, |x, y| {
            if (200..=1200).contains(&x) && (300..=800).contains(&y) {
                [230, 210, 190]
            } else {
                [20, 25, 30]
            }
        })
        .unwrap()
    }

    #[test]
    fn synthetic_court_as_written() {
        let d = detect_court_detailed(&synthetic_court(), &CropParams::default()).unwrap();
        assert!(!d.fallback, "{:?}", d.segments);
        assert_eq!(d.hull_bbox, Some((200, 300, 1000, 500)), "{:?}", d.segments);
        assert_eq!(d.rect, CropRect::new(100, 250, 1000, 500));
    }

    #[test]
    fn synthetic_court_hull_union_covers_segments() {
        let p = CropParams {
            mode: CropMode::HullUnion,
            ..CropParams::default()
        };
        let d = detect_court_detailed(&synthetic_court(), &p).unwrap();
        for s in &d.segments {
            for q in [s.p0, s.p1] {
                assert!(d.rect.contains_pixel(q.x, q.y));
            }
        }
    }

    #[test]
    fn blank_image_falls_back() {
        let img = ImageBuffer::filled(1500, 900, 3, 40).unwrap();
        let d = detect_court_detailed(&img, &CropParams::default()).unwrap();
        assert!(d.fallback);
        assert_eq!(d.rect, CropRect::new(100, 100, 1300, 700));
    }

    #[test]
    fn tiny_image_rejected() {
        let img = ImageBuffer::filled(10, 10, 3, 0).unwrap();
        assert!(matches!(
            detect_court(&img, &CropParams::default()),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn split_examples() {
        let rect = CropRect::new(10, 20, 100, 100);
        let r = split_regions(rect, 0.0).unwrap();
        assert_eq!(r.interior, Some(rect));
        assert_eq!(r.band_area(), 0);
        let r = split_regions(rect, 0.2).unwrap();
        assert_eq!(r.inset, 5);
        assert_eq!(r.interior, Some(CropRect::new(15, 25, 90, 90)));
        let r = split_regions(rect, 1.0).unwrap();
        assert_eq!(r.interior, None);
        assert_eq!(r.band_area(), rect.area());
        assert!(split_regions(rect, 1.5).is_err());
    }

    #[test]
    fn zones() {
        let r = split_regions(CropRect::new(0, 0, 100, 100), 0.2).unwrap();
        assert_eq!(r.zone(50.0, 50.0), Zone::Interior);
        assert_eq!(r.zone(5.0, 50.0), Zone::Band);
        assert_eq!(r.zone(2.0, 50.0), Zone::Band);
        assert_eq!(r.zone(100.0, 100.0), Zone::Band);
        assert_eq!(r.zone(100.5, 50.0), Zone::Outside);
    }

    #[test]
    fn crop_examples() {
        let img = ImageBuffer::from_fn(4, 4, |x, y| [(y * 4 + x) as u8]).unwrap();
        assert_eq!(crop_image(&img, CropRect::full(4, 4)).unwrap(), img);
        assert_eq!(
            crop_image(&img, CropRect::new(0, 0, 1, 1)).unwrap().data(),
            &[0]
        );
        assert_eq!(
            crop_image(&img, CropRect::new(1, 1, 2, 2)).unwrap().data(),
            &[5, 6, 9, 10]
        );
        assert!(crop_image(&img, CropRect::new(3, 0, 2, 2)).is_err());
    }

    #[test]
    fn fallback_is_deterministic() {
        let mut rng = Rng::new(1);
        let img = ImageBuffer::from_fn(120, 90, |_, _| [rng.below(20) as u8; 3]).unwrap();
        let p = CropParams::default();
        assert_eq!(
            detect_court(&img, &p).unwrap(),
            detect_court(&img, &p).unwrap()
        );
    }

    proptest! {
        #[test]
        fn split_area_within_rounding_slack(
            w in 1u32..2000, h in 1u32..2000, f in 0.0f64..=1.0
        ) {
            let rect = CropRect::new(3, 4, w, h);
            let r = split_regions(rect, f).unwrap();
            let area = rect.area() as f64;
            let frac = r.band_area() as f64 / area;
            prop_assert!((frac - f).abs() <= 2.0 * (w + h) as f64 / area + 1e-12);
            if let Some(i) = r.interior {
                prop_assert!(i.x >= rect.x && i.y >= rect.y);
                prop_assert!(i.right() <= rect.right() && i.bottom() <= rect.bottom());
            }
        }

        #[test]
        fn nested_crops_compose(
            w in 2u32..30, h in 2u32..30,
            a in (0u32..100, 0u32..100, 0u32..100, 0u32..100),
            b in (0u32..100, 0u32..100, 0u32..100, 0u32..100),
        ) {
            let img = ImageBuffer::from_fn(w, h, |x, y| [(x * 31 + y * 17) as u8]).unwrap();
            let r1 = CropRect::new(a.0 % w, a.1 % h, 1 + a.2 % (w - a.0 % w), 1 + a.3 % (h - a.1 % h));
            let r2 = CropRect::new(b.0 % r1.w, b.1 % r1.h, 1 + b.2 % (r1.w - b.0 % r1.w), 1 + b.3 % (r1.h - b.1 % r1.h));
            let twice = crop_image(&crop_image(&img, r1).unwrap(), r2).unwrap();
            let composed = CropRect::new(r1.x + r2.x, r1.y + r2.y, r2.w, r2.h);
            prop_assert_eq!(twice, crop_image(&img, composed).unwrap());
        }
    }
}
