use courtprior::court::{CourtDetection, CropRect};
use courtprior::{ImageBuffer, Result};

const SEGMENT: [u8; 3] = [255, 40, 40];
const HULL_BOX: [u8; 3] = [255, 210, 0];
const CROP: [u8; 3] = [40, 220, 60];

/// Detected segments in red, hull box in yellow, final crop in green.
pub fn draw(img: &ImageBuffer, det: &CourtDetection) -> Result<ImageBuffer> {
    let mut out = img.clone();
    for s in &det.segments {
        line(&mut out, (s.p0.x, s.p0.y), (s.p1.x, s.p1.y), SEGMENT);
    }
    if let Some((x, y, w, h)) = det.hull_bbox {
        rect(&mut out, x, y, w, h, HULL_BOX);
    }
    let CropRect { x, y, w, h } = det.rect;
    rect(&mut out, x as i64, y as i64, w as i64, h as i64, CROP);
    Ok(out)
}

fn put(img: &mut ImageBuffer, x: i64, y: i64, color: [u8; 3]) {
    if x >= 0 && y >= 0 && x < img.width() as i64 && y < img.height() as i64 {
        img.pixel_mut(x as u32, y as u32).copy_from_slice(&color);
    }
}

fn rect(img: &mut ImageBuffer, x: i64, y: i64, w: i64, h: i64, color: [u8; 3]) {
    let (x1, y1) = (x + w - 1, y + h - 1);
    for (a, b) in [
        ((x, y), (x1, y)),
        ((x1, y), (x1, y1)),
        ((x1, y1), (x, y1)),
        ((x, y1), (x, y)),
    ] {
        line(img, a, b, color);
    }
}

// Bresenham.
fn line(img: &mut ImageBuffer, (mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64), color: [u8; 3]) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = ((x1 - x0).signum(), (y1 - y0).signum());
    let mut err = dx + dy;
    loop {
        put(img, x0, y0, color);
        if (x0, y0) == (x1, y1) {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_hits_both_endpoints_and_clips() {
        let mut img = ImageBuffer::filled(10, 10, 3, 0).unwrap();
        line(&mut img, (-5, 2), (20, 7), CROP);
        line(&mut img, (1, 1), (8, 4), SEGMENT);
        assert_eq!(img.pixel(1, 1), &SEGMENT);
        assert_eq!(img.pixel(8, 4), &SEGMENT);
        rect(&mut img, 0, 0, 10, 10, HULL_BOX);
        assert_eq!(img.pixel(9, 9), &HULL_BOX);
        assert_eq!(img.pixel(0, 5), &HULL_BOX);
    }
}
