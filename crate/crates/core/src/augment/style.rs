use serde::{Deserialize, Serialize};

use super::paste::InstancePatch;
use super::Identity;
use crate::error::{Error, Result};
use crate::raster::{ImageBuffer, Mask};
use crate::rng::Rng;

/// Gray written into GridMask holes.
pub const GRID_FILL: u8 = 114;

/// Control points `(input, output)` with strictly increasing inputs.
pub type ChannelCurve = Vec<(u8, u8)>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RgbCurve {
    pub channels: [ChannelCurve; 3],
}

impl RgbCurve {
    pub fn identity() -> Self {
        let c = vec![(0, 0), (255, 255)];
        RgbCurve {
            channels: [c.clone(), c.clone(), c],
        }
    }

    pub fn uniform(points: ChannelCurve) -> Self {
        RgbCurve {
            channels: [points.clone(), points.clone(), points],
        }
    }
}

/// Piecewise-linear lookup table; flat beyond the first and last control points.
fn curve_lut(points: &[(u8, u8)]) -> Result<[u8; 256]> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(
            "a curve needs at least two control points".into(),
        ));
    }
    if points.windows(2).any(|p| p[0].0 >= p[1].0) {
        return Err(Error::InvalidArgument(
            "curve inputs must be strictly increasing".into(),
        ));
    }
    let rising = points.windows(2).all(|p| p[0].1 <= p[1].1);
    let falling = points.windows(2).all(|p| p[0].1 >= p[1].1);
    if !rising && !falling {
        return Err(Error::InvalidArgument(format!(
            "curve {points:?} is not monotone"
        )));
    }
    let mut lut = [0u8; 256];
    for (v, out) in lut.iter_mut().enumerate() {
        let v = v as f64;
        let first = points[0];
        let last = points[points.len() - 1];
        let y = if v <= first.0 as f64 {
            first.1 as f64
        } else if v >= last.0 as f64 {
            last.1 as f64
        } else {
            let k = points.iter().position(|p| p.0 as f64 >= v).unwrap();
            let ((x0, y0), (x1, y1)) = (points[k - 1], points[k]);
            let t = (v - x0 as f64) / (x1 as f64 - x0 as f64);
            y0 as f64 + t * (y1 as f64 - y0 as f64)
        };
        *out = y.round().clamp(0.0, 255.0) as u8;
    }
    Ok(lut)
}

/// Calls `f` on every pixel, or only on pixels set in `mask`.
fn for_each_pixel(img: &mut ImageBuffer, mask: Option<&Mask>, mut f: impl FnMut(&mut [u8])) {
    let (w, h) = (img.width(), img.height());
    for y in 0..h {
        for x in 0..w {
            if mask.is_none_or(|m| m.get(x, y)) {
                f(img.pixel_mut(x, y));
            }
        }
    }
}

fn apply_curve(img: &mut ImageBuffer, mask: Option<&Mask>, curve: &RgbCurve) -> Result<()> {
    img.require_channels(3)?;
    let luts = [
        curve_lut(&curve.channels[0])?,
        curve_lut(&curve.channels[1])?,
        curve_lut(&curve.channels[2])?,
    ];
    for_each_pixel(img, mask, |px| {
        for c in 0..3 {
            px[c] = luts[c][px[c] as usize];
        }
    });
    Ok(())
}

pub fn rgb_curve(patch: &ImageBuffer, curve: &RgbCurve) -> Result<ImageBuffer> {
    let mut out = patch.clone();
    apply_curve(&mut out, None, curve)?;
    Ok(out)
}

fn rgb_to_hsv(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    let s = if max > 0.0 { d / max } else { 0.0 };
    let h = if d == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / d + 2.0)
    } else {
        60.0 * ((r - g) / d + 4.0)
    };
    (h, s, max)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
    let c = v * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    (r + m, g + m, b + m)
}

fn apply_hue(img: &mut ImageBuffer, mask: Option<&Mask>, degrees: f64) -> Result<()> {
    img.require_channels(3)?;
    if !degrees.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "hue shift {degrees} is not finite"
        )));
    }
    if degrees.rem_euclid(360.0) == 0.0 {
        return Ok(());
    }
    let to_u8 = |v: f64| v.round().clamp(0.0, 255.0) as u8;
    for_each_pixel(img, mask, |px| {
        let (h, s, v) = rgb_to_hsv(px[0] as f64, px[1] as f64, px[2] as f64);
        let (r, g, b) = hsv_to_rgb((h + degrees).rem_euclid(360.0), s, v);
        px[0] = to_u8(r);
        px[1] = to_u8(g);
        px[2] = to_u8(b);
    });
    Ok(())
}

/// Rotates hue in HSV space.
pub fn hue_shift(patch: &ImageBuffer, degrees: f64) -> Result<ImageBuffer> {
    let mut out = patch.clone();
    apply_hue(&mut out, None, degrees)?;
    Ok(out)
}

fn apply_salt_pepper(
    img: &mut ImageBuffer,
    mask: Option<&Mask>,
    density: f64,
    rng: &mut Rng,
) -> Result<()> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidArgument(format!(
            "salt-and-pepper density must be in [0, 1], got {density}"
        )));
    }
    for_each_pixel(img, mask, |px| {
        if rng.bernoulli(density) {
            let v = if rng.bernoulli(0.5) { 255 } else { 0 };
            px.fill(v);
        }
    });
    Ok(())
}

/// Replaces each pixel with probability `density` by black or white.
pub fn salt_pepper(patch: &ImageBuffer, density: f64, rng: &mut Rng) -> Result<ImageBuffer> {
    let mut out = patch.clone();
    apply_salt_pepper(&mut out, None, density, rng)?;
    Ok(out)
}

fn apply_brightness(img: &mut ImageBuffer, mask: Option<&Mask>, factor: f64) -> Result<()> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "brightness factor must be positive, got {factor}"
        )));
    }
    let mut lut = [0u8; 256];
    for (v, out) in lut.iter_mut().enumerate() {
        *out = (v as f64 * factor).round().clamp(0.0, 255.0) as u8;
    }
    for_each_pixel(img, mask, |px| {
        for v in px {
            *v = lut[*v as usize];
        }
    });
    Ok(())
}

pub fn brightness(patch: &ImageBuffer, factor: f64) -> Result<ImageBuffer> {
    let mut out = patch.clone();
    apply_brightness(&mut out, None, factor)?;
    Ok(out)
}

/// Periodic square holes: period `unit`, side `round(unit * ratio)`, random phase.
pub fn grid_mask(img: &ImageBuffer, unit: u32, ratio: f64, rng: &mut Rng) -> Result<ImageBuffer> {
    if unit < 2 || !(0.0..1.0).contains(&ratio) {
        return Err(Error::InvalidArgument(format!(
            "grid mask needs unit >= 2 and ratio in [0, 1), got unit={unit} ratio={ratio}"
        )));
    }
    let side = (unit as f64 * ratio).round() as u32;
    let ox = rng.below(unit as u64) as u32;
    let oy = rng.below(unit as u64) as u32;
    let mut out = img.clone();
    if side == 0 {
        return Ok(out);
    }
    for y in 0..img.height() {
        if (y + oy) % unit >= side {
            continue;
        }
        for x in 0..img.width() {
            if (x + ox) % unit < side {
                out.pixel_mut(x, y).fill(GRID_FILL);
            }
        }
    }
    Ok(out)
}

/// Applied to the whole augmented image with probability `probability`;
/// unit and ratio are drawn per image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridMaskConfig {
    pub probability: f64,
    pub unit_min: u32,
    pub unit_max: u32,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

impl Default for GridMaskConfig {
    fn default() -> Self {
        GridMaskConfig {
            probability: 0.0,
            unit_min: 32,
            unit_max: 96,
            ratio_min: 0.3,
            ratio_max: 0.5,
        }
    }
}

impl GridMaskConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.probability)
            && self.unit_min >= 2
            && self.unit_min <= self.unit_max
            && (0.0..1.0).contains(&self.ratio_min)
            && (0.0..1.0).contains(&self.ratio_max)
            && self.ratio_min <= self.ratio_max;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid grid mask settings {self:?}"
            )))
        }
    }

    pub fn apply(&self, img: &ImageBuffer, rng: &mut Rng) -> Result<Option<ImageBuffer>> {
        if !rng.bernoulli(self.probability) {
            return Ok(None);
        }
        let unit = rng.range_inclusive(self.unit_min as i64, self.unit_max as i64) as u32;
        let ratio = rng.uniform(self.ratio_min, self.ratio_max);
        grid_mask(img, unit, ratio, rng).map(Some)
    }
}

/// Concrete transform parameters for one patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleParams {
    pub curve: RgbCurve,
    pub hue_deg: f64,
    pub sp_density: f64,
    pub brightness: f64,
}

impl StyleParams {
    pub fn identity() -> Self {
        StyleParams {
            curve: RgbCurve::identity(),
            hue_deg: 0.0,
            sp_density: 0.0,
            brightness: 1.0,
        }
    }
}

/// Ranges [`StyleParams`] are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StyleRanges {
    pub curve_points: usize,
    /// Each control point's output is its input plus a uniform offset in ±jitter.
    pub curve_jitter: f64,
    pub hue_max_deg: f64,
    pub sp_density_min: f64,
    pub sp_density_max: f64,
    pub brightness_min: f64,
    pub brightness_max: f64,
    /// Whole-image GridMask applied after pasting.
    pub grid_mask: GridMaskConfig,
}

impl Default for StyleRanges {
    fn default() -> Self {
        StyleRanges {
            curve_points: 4,
            curve_jitter: 30.0,
            hue_max_deg: 30.0,
            sp_density_min: 0.001,
            sp_density_max: 0.02,
            brightness_min: 0.8,
            brightness_max: 1.2,
            grid_mask: GridMaskConfig::default(),
        }
    }
}

impl StyleRanges {
    /// Ranges that always yield [`StyleParams::identity`].
    pub fn none() -> Self {
        StyleRanges {
            curve_points: 2,
            curve_jitter: 0.0,
            hue_max_deg: 0.0,
            sp_density_min: 0.0,
            sp_density_max: 0.0,
            brightness_min: 1.0,
            brightness_max: 1.0,
            grid_mask: GridMaskConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (2..=256).contains(&self.curve_points)
            && (0.0..=255.0).contains(&self.curve_jitter)
            && (0.0..=180.0).contains(&self.hue_max_deg)
            && 0.0 <= self.sp_density_min
            && self.sp_density_min <= self.sp_density_max
            && self.sp_density_max <= 1.0
            && 0.0 < self.brightness_min
            && self.brightness_min <= self.brightness_max;
        if !ok {
            return Err(Error::Config(format!("invalid style ranges {self:?}")));
        }
        self.grid_mask.validate()
    }

    pub fn sample(&self, rng: &mut Rng) -> StyleParams {
        let n = self.curve_points.max(2);
        let mut channel = || -> ChannelCurve {
            let inputs: Vec<u8> = (0..n)
                .map(|k| (255.0 * k as f64 / (n - 1) as f64).round() as u8)
                .collect();
            let mut outputs: Vec<u8> = inputs
                .iter()
                .map(|&i| {
                    let j = rng.uniform(-self.curve_jitter, self.curve_jitter);
                    (i as f64 + j).round().clamp(0.0, 255.0) as u8
                })
                .collect();
            outputs.sort_unstable();
            inputs.into_iter().zip(outputs).collect()
        };
        let curve = RgbCurve {
            channels: [channel(), channel(), channel()],
        };
        StyleParams {
            curve,
            hue_deg: rng.uniform(-self.hue_max_deg, self.hue_max_deg),
            sp_density: rng.uniform(self.sp_density_min, self.sp_density_max),
            brightness: rng.uniform(self.brightness_min, self.brightness_max),
        }
    }
}

/// Players get an RGB curve then a hue rotation; officials and balls get
/// salt-and-pepper noise then a brightness change. Only masked pixels change.
pub fn apply_style(
    patch: &InstancePatch,
    params: &StyleParams,
    rng: &mut Rng,
) -> Result<InstancePatch> {
    let mut out = patch.clone();
    let mask = Some(&patch.mask);
    match patch.identity {
        Identity::Player => {
            apply_curve(&mut out.pixels, mask, &params.curve)?;
            apply_hue(&mut out.pixels, mask, params.hue_deg)?;
        }
        Identity::RefereeOrCoach | Identity::Ball => {
            apply_salt_pepper(&mut out.pixels, mask, params.sp_density, rng)?;
            apply_brightness(&mut out.pixels, mask, params.brightness)?;
        }
    }
    Ok(out)
}
