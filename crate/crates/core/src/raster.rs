//! 8-bit interleaved images and binary masks.

use std::path::Path;

use crate::error::{Error, Result};

/// Row-major interleaved 8-bit raster with 1 or 3 channels.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl std::fmt::Debug for ImageBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImageBuffer")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, channels: u8) -> Result<Self> {
        Self::filled(width, height, channels, 0)
    }

    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Result<Self> {
        check_shape(width, height, channels)?;
        let len = width as usize * height as usize * channels as usize;
        Ok(ImageBuffer {
            width,
            height,
            channels,
            data: vec![value; len],
        })
    }

    pub fn from_raw(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        check_shape(width, height, channels)?;
        let len = width as usize * height as usize * channels as usize;
        if data.len() != len {
            return Err(Error::InvalidArgument(format!(
                "buffer holds {} samples, {width}x{height}x{channels} needs {len}",
                data.len()
            )));
        }
        Ok(ImageBuffer {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn<const C: usize>(
        width: u32,
        height: u32,
        mut f: impl FnMut(u32, u32) -> [u8; C],
    ) -> Result<Self> {
        let mut img = Self::new(width, height, C as u8)?;
        for y in 0..height {
            for x in 0..width {
                img.pixel_mut(x, y).copy_from_slice(&f(x, y));
            }
        }
        Ok(img)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        let o = self.offset(x, y);
        &self.data[o..o + self.channels as usize]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: u32, y: u32) -> &mut [u8] {
        let o = self.offset(x, y);
        let c = self.channels as usize;
        &mut self.data[o..o + c]
    }

    /// Sample of a single-channel image.
    #[inline]
    pub fn luma(&self, x: u32, y: u32) -> u8 {
        self.data[self.offset(x, y)]
    }

    pub fn require_channels(&self, expected: u8) -> Result<()> {
        if self.channels != expected {
            return Err(Error::ChannelMismatch {
                expected,
                actual: self.channels,
            });
        }
        Ok(())
    }

    /// Loads any format the `image` crate decodes, converted to RGB.
    pub fn load_rgb(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        Self::from_raw(w, h, 3, rgb.into_raw())
    }

    /// Writes the image as PNG.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let color = match self.channels {
            1 => image::ExtendedColorType::L8,
            _ => image::ExtendedColorType::Rgb8,
        };
        image::save_buffer_with_format(
            path,
            &self.data,
            self.width,
            self.height,
            color,
            image::ImageFormat::Png,
        )
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn check_shape(width: u32, height: u32, channels: u8) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    if channels != 1 && channels != 3 {
        return Err(Error::InvalidArgument(format!(
            "images have 1 or 3 channels, got {channels}"
        )));
    }
    Ok(())
}

/// Row-major binary raster.
#[derive(Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl std::fmt::Debug for Mask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("count", &self.count())
            .finish()
    }
}

impl Mask {
    pub fn new(width: u32, height: u32) -> Self {
        Mask {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Mask {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    /// Like [`Mask::get`] but returns `false` outside the raster.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && x < self.width as i64
            && y < self.height as i64
            && self.get(x as u32, y as u32)
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let w = self.width as usize;
        self.bits[y as usize * w + x as usize] = value;
    }

    pub fn count(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Tight box of set pixels as `(x, y, w, h)`, or `None` for an empty mask.
    pub fn bounds(&self) -> Option<(u32, u32, u32, u32)> {
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        (x0 != u32::MAX).then(|| (x0, y0, x1 - x0 + 1, y1 - y0 + 1))
    }

    /// Sub-raster at `(x, y)` of size `w`x`h`; pixels outside `self` read as unset.
    pub fn crop(&self, x: i64, y: i64, w: u32, h: u32) -> Mask {
        Mask::from_fn(w, h, |u, v| self.get_signed(x + u as i64, y + v as i64))
    }

    /// Number of pixels set in both masks when `other` is placed at `(ox, oy)`.
    pub fn overlap_at(&self, other: &Mask, ox: i64, oy: i64) -> u64 {
        let mut n = 0;
        for v in 0..other.height {
            for u in 0..other.width {
                if other.get(u, v) && self.get_signed(ox + u as i64, oy + v as i64) {
                    n += 1;
                }
            }
        }
        n
    }

    /// Clears every pixel set in `other` placed at `(ox, oy)`.
    pub fn subtract_at(&mut self, other: &Mask, ox: i64, oy: i64) {
        for v in 0..other.height {
            for u in 0..other.width {
                let (x, y) = (ox + u as i64, oy + v as i64);
                if other.get(u, v) && self.get_signed(x, y) {
                    self.set(x as u32, y as u32, false);
                }
            }
        }
    }

    /// Sets every pixel set in `other` placed at `(ox, oy)`; parts outside are dropped.
    pub fn union_at(&mut self, other: &Mask, ox: i64, oy: i64) {
        for v in 0..other.height {
            for u in 0..other.width {
                let (x, y) = (ox + u as i64, oy + v as i64);
                if other.get(u, v)
                    && x >= 0
                    && y >= 0
                    && x < self.width as i64
                    && y < self.height as i64
                {
                    self.set(x as u32, y as u32, true);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(ImageBuffer::new(0, 3, 1).is_err());
        assert!(ImageBuffer::new(3, 3, 2).is_err());
        assert!(ImageBuffer::from_raw(2, 2, 3, vec![0; 11]).is_err());
        let img = ImageBuffer::from_raw(2, 2, 3, (0..12).collect()).unwrap();
        assert_eq!(img.pixel(1, 1), &[9, 10, 11]);
    }

    #[test]
    fn mask_bounds_and_set_ops() {
        let mut m = Mask::from_fn(6, 5, |x, y| (2..4).contains(&x) && (1..4).contains(&y));
        assert_eq!(m.bounds(), Some((2, 1, 2, 3)));
        assert_eq!(m.count(), 6);
        let square = Mask::from_fn(2, 2, |_, _| true);
        assert_eq!(m.overlap_at(&square, 3, 3), 1);
        m.subtract_at(&square, 3, 3);
        assert_eq!(m.count(), 5);
        m.union_at(&square, 5, 4);
        assert_eq!(m.count(), 6);
        assert_eq!(Mask::new(3, 3).bounds(), None);
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        let img = ImageBuffer::from_fn(7, 5, |x, y| [x as u8 * 30, y as u8 * 40, 7]).unwrap();
        img.save_png(&path).unwrap();
        assert_eq!(ImageBuffer::load_rgb(&path).unwrap(), img);
    }
}
