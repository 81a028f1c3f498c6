use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::filter::{gaussian_blur, sobel};
use crate::error::{Error, Result};
use crate::raster::{ImageBuffer, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CannyParams {
    pub sigma: f64,
    pub low: f64,
    pub high: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        CannyParams {
            sigma: 1.4,
            low: 50.0,
            high: 150.0,
        }
    }
}

/// Binary edge flags with the dimensions of the source image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap(Mask);

impl EdgeMap {
    pub fn from_mask(mask: Mask) -> Self {
        EdgeMap(mask)
    }

    pub fn width(&self) -> u32 {
        self.0.width()
    }

    pub fn height(&self) -> u32 {
        self.0.height()
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.0.get(x, y)
    }

    pub fn count(&self) -> u64 {
        self.0.count()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_mask(&self) -> &Mask {
        &self.0
    }

    /// Set pixels in row-major order.
    pub fn points(&self) -> Vec<(u32, u32)> {
        let mut pts = Vec::new();
        for y in 0..self.height() {
            for x in 0..self.width() {
                if self.get(x, y) {
                    pts.push((x, y));
                }
            }
        }
        pts
    }
}

/// Canny edge detector: Gaussian blur, Sobel gradients, 4-direction
/// non-maximum suppression and 8-connected hysteresis.
pub fn canny(img: &ImageBuffer, params: &CannyParams) -> Result<EdgeMap> {
    img.require_channels(1)?;
    if !(params.low > 0.0 && params.low < params.high) {
        return Err(Error::InvalidArgument(format!(
            "canny thresholds need 0 < low < high, got low={} high={}",
            params.low, params.high
        )));
    }
    if img.width() < 3 || img.height() < 3 {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min_width: 3,
            min_height: 3,
        });
    }

    let blurred = gaussian_blur(img, params.sigma)?;
    let grad = sobel(&blurred)?;
    let mag = grad.magnitude();
    let (w, h) = (img.width() as usize, img.height() as usize);

    let mut thin = vec![0.0f64; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            let m = mag[i];
            if m < params.low {
                continue;
            }
            let (gx, gy) = (grad.gx[i], grad.gy[i]);
            let (ahead, behind) = match direction_bin(gx, gy) {
                0 if gx > 0 => (i + 1, i - 1),
                0 => (i - 1, i + 1),
                1 if gx > 0 => (i + w + 1, i - w - 1),
                1 => (i - w - 1, i + w + 1),
                2 if gy > 0 => (i + w, i - w),
                2 => (i - w, i + w),
                _ if gy > 0 => (i + w - 1, i - w + 1),
                _ => (i - w + 1, i + w - 1),
            };
            // Two equal maxima keep only the one further along the gradient,
            // i.e. on the bright side of a step.
            if m > mag[ahead] && m >= mag[behind] {
                thin[i] = m;
            }
        }
    }

    let mut out = Mask::new(w as u32, h as u32);
    let mut queue = VecDeque::new();
    for (i, &m) in thin.iter().enumerate() {
        if m >= params.high {
            out.set((i % w) as u32, (i / w) as u32, true);
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as i64, (i / w) as i64);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if thin[j] >= params.low && !out.get(nx as u32, ny as u32) {
                    out.set(nx as u32, ny as u32, true);
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(EdgeMap(out))
}

/// Gradient direction quantized to 0, 45, 90 or 135 degrees (image y axis down).
fn direction_bin(gx: i32, gy: i32) -> u8 {
    let mut angle = (gy as f64).atan2(gx as f64).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        0
    } else if angle < 67.5 {
        1
    } else if angle < 112.5 {
        2
    } else {
        3
    }
}
