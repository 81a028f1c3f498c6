//! COCO run-length encoding: column-major runs that start with a run of zeros.

use serde::de::Deserializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Mask;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RleMask {
    /// `[height, width]`
    pub size: [u32; 2],
    pub counts: Vec<u64>,
}

impl<'de> Deserialize<'de> for RleMask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Counts {
            Runs(Vec<u64>),
            Compressed(String),
        }
        #[derive(Deserialize)]
        struct Raw {
            size: [u32; 2],
            counts: Counts,
        }
        let raw = Raw::deserialize(d)?;
        let counts = match raw.counts {
            Counts::Runs(v) => v,
            Counts::Compressed(s) => decode_counts_string(&s).map_err(serde::de::Error::custom)?,
        };
        Ok(RleMask {
            size: raw.size,
            counts,
        })
    }
}

impl RleMask {
    pub fn height(&self) -> u32 {
        self.size[0]
    }

    pub fn width(&self) -> u32 {
        self.size[1]
    }

    /// Number of set pixels.
    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).sum()
    }
}

pub fn rle_encode(mask: &Mask) -> RleMask {
    let (w, h) = (mask.width(), mask.height());
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u64;
    for x in 0..w {
        for y in 0..h {
            let v = mask.get(x, y);
            if v != current {
                counts.push(run);
                run = 0;
                current = v;
            }
            run += 1;
        }
    }
    counts.push(run);
    RleMask {
        size: [h, w],
        counts,
    }
}

pub fn rle_decode(rle: &RleMask) -> Result<Mask> {
    let (h, w) = (rle.height(), rle.width());
    let total: u64 = rle.counts.iter().sum();
    if total != h as u64 * w as u64 {
        return Err(Error::Malformed(format!(
            "RLE counts sum to {total}, expected {h}x{w} = {}",
            h as u64 * w as u64
        )));
    }
    let mut mask = Mask::new(w, h);
    let mut pos = 0u64;
    for (i, &run) in rle.counts.iter().enumerate() {
        if i % 2 == 1 {
            for p in pos..pos + run {
                let (x, y) = ((p / h as u64) as u32, (p % h as u64) as u32);
                mask.set(x, y, true);
            }
        }
        pos += run;
    }
    Ok(mask)
}

/// Decodes the compact string form used by pycocotools: each count (delta
/// coded against the count two places back, from the fourth on) is written as
/// little-endian 5-bit groups with a continuation bit, offset by 48.
pub fn decode_counts_string(s: &str) -> Result<Vec<u64>> {
    let bytes = s.as_bytes();
    let mut counts: Vec<i64> = Vec::new();
    let mut p = 0;
    while p < bytes.len() {
        let mut x: i64 = 0;
        let mut k = 0;
        loop {
            let Some(&b) = bytes.get(p) else {
                return Err(Error::Malformed("truncated RLE string".into()));
            };
            let c = b as i64 - 48;
            if !(0..64).contains(&c) || k > 12 {
                return Err(Error::Malformed("invalid RLE string".into()));
            }
            x |= (c & 0x1f) << (5 * k);
            p += 1;
            k += 1;
            if c & 0x20 == 0 {
                if c & 0x10 != 0 {
                    x |= -1i64 << (5 * k);
                }
                break;
            }
        }
        if counts.len() > 2 {
            x += counts[counts.len() - 2];
        }
        counts.push(x);
    }
    counts
        .into_iter()
        .map(|c| u64::try_from(c).map_err(|_| Error::Malformed("negative RLE count".into())))
        .collect()
}

pub fn encode_counts_string(counts: &[u64]) -> String {
    let mut out = String::new();
    for i in 0..counts.len() {
        let mut x = counts[i] as i64;
        if i > 2 {
            x -= counts[i - 2] as i64;
        }
        loop {
            let mut c = x & 0x1f;
            x >>= 5;
            let more = if c & 0x10 != 0 { x != -1 } else { x != 0 };
            if more {
                c |= 0x20;
            }
            out.push((c as u8 + 48) as char);
            if !more {
                break;
            }
        }
    }
    out
}
