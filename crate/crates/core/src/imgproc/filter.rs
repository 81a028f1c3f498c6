use crate::error::{Error, Result};
use crate::raster::ImageBuffer;

/// BT.601 luma, rounded to nearest.
pub fn to_grayscale(img: &ImageBuffer) -> Result<ImageBuffer> {
    img.require_channels(3)?;
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| {
            let y = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
            y.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    ImageBuffer::from_raw(img.width(), img.height(), 1, data)
}

/// Normalized 1-D Gaussian with radius `ceil(3 * sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "blur sigma must be positive, got {sigma}"
        )));
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let denom = 2.0 * sigma * sigma;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    Ok(k)
}

/// Separable Gaussian blur with edge replication.
pub fn gaussian_blur(img: &ImageBuffer, sigma: f64) -> Result<ImageBuffer> {
    img.require_channels(1)?;
    let kernel = gaussian_kernel(sigma)?;
    let radius = (kernel.len() / 2) as i64;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let src = img.data();

    let mut horizontal = vec![0.0f64; src.len()];
    for y in 0..h {
        let row = &src[(y * w) as usize..((y + 1) * w) as usize];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, weight) in kernel.iter().enumerate() {
                let sx = (x + k as i64 - radius).clamp(0, w - 1);
                acc += weight * row[sx as usize] as f64;
            }
            horizontal[(y * w + x) as usize] = acc;
        }
    }

    let mut out = vec![0u8; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, weight) in kernel.iter().enumerate() {
                let sy = (y + k as i64 - radius).clamp(0, h - 1);
                acc += weight * horizontal[(sy * w + x) as usize];
            }
            out[(y * w + x) as usize] = acc.round().clamp(0.0, 255.0) as u8;
        }
    }
    ImageBuffer::from_raw(img.width(), img.height(), 1, out)
}

/// Sobel responses of a single-channel image. The outer 1-px frame is zero.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub width: u32,
    pub height: u32,
    pub gx: Vec<i32>,
    pub gy: Vec<i32>,
}

impl Gradients {
    #[inline]
    pub fn magnitude_at(&self, i: usize) -> f64 {
        (self.gx[i] as f64).hypot(self.gy[i] as f64)
    }

    pub fn magnitude(&self) -> Vec<f64> {
        (0..self.gx.len()).map(|i| self.magnitude_at(i)).collect()
    }
}

pub fn sobel(img: &ImageBuffer) -> Result<Gradients> {
    img.require_channels(1)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut gx = vec![0i32; w * h];
    let mut gy = vec![0i32; w * h];
    let p = |x: usize, y: usize| img.data()[y * w + x] as i32;
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            gx[y * w + x] = (p(x + 1, y - 1) + 2 * p(x + 1, y) + p(x + 1, y + 1))
                - (p(x - 1, y - 1) + 2 * p(x - 1, y) + p(x - 1, y + 1));
            gy[y * w + x] = (p(x - 1, y + 1) + 2 * p(x, y + 1) + p(x + 1, y + 1))
                - (p(x - 1, y - 1) + 2 * p(x, y - 1) + p(x + 1, y - 1));
        }
    }
    Ok(Gradients {
        width: w as u32,
        height: h as u32,
        gx,
        gy,
    })
}
