//! Polygon geometry on COCO's flat `[x0, y0, x1, y1, ...]` coordinate lists.

use crate::court::CropRect;
use crate::error::{Error, Result};
use crate::raster::Mask;

pub fn points(poly: &[f64]) -> impl Iterator<Item = (f64, f64)> + '_ {
    poly.chunks_exact(2).map(|c| (c[0], c[1]))
}

/// Absolute shoelace area.
pub fn polygon_area(poly: &[f64]) -> Result<f64> {
    if poly.len() < 6 || !poly.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "polygon needs at least 3 points as an even-length list, got {} values",
            poly.len()
        )));
    }
    Ok(signed_area(poly).abs())
}

fn signed_area(poly: &[f64]) -> f64 {
    let n = poly.len() / 2;
    let mut twice = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        twice += poly[2 * i] * poly[2 * j + 1] - poly[2 * j] * poly[2 * i + 1];
    }
    twice / 2.0
}

/// Tight `(x, y, w, h)` box around every vertex of every polygon.
pub fn polygons_bbox(polys: &[Vec<f64>]) -> Option<[f64; 4]> {
    let mut it = polys.iter().flat_map(|p| points(p));
    let (x, y) = it.next()?;
    let (mut x0, mut y0, mut x1, mut y1) = (x, y, x, y);
    for (x, y) in it {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    Some([x0, y0, x1 - x0, y1 - y0])
}

#[derive(Clone, Copy)]
enum Edge {
    Left(f64),
    Right(f64),
    Top(f64),
    Bottom(f64),
}

impl Edge {
    fn inside(&self, (x, y): (f64, f64)) -> bool {
        match *self {
            Edge::Left(v) => x >= v,
            Edge::Right(v) => x <= v,
            Edge::Top(v) => y >= v,
            Edge::Bottom(v) => y <= v,
        }
    }

    /// Intersection of segment `a -> b` with the edge line; `a` and `b` straddle it.
    fn intersect(&self, a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
        match *self {
            Edge::Left(v) | Edge::Right(v) => {
                let t = (v - a.0) / (b.0 - a.0);
                (v, a.1 + t * (b.1 - a.1))
            }
            Edge::Top(v) | Edge::Bottom(v) => {
                let t = (v - a.1) / (b.1 - a.1);
                (a.0 + t * (b.0 - a.0), v)
            }
        }
    }
}

/// Sutherland-Hodgman clipping against the four half-planes of `rect`.
///
/// Returns an empty list when nothing with positive area remains. A concave
/// input may come back as one ring with zero-width bridges along the
/// rectangle border; they add no area and cancel out when rasterized.
pub fn clip_polygon(poly: &[f64], rect: CropRect) -> Vec<Vec<f64>> {
    let mut ring: Vec<(f64, f64)> = points(poly).collect();
    let edges = [
        Edge::Left(rect.x as f64),
        Edge::Right(rect.right() as f64),
        Edge::Top(rect.y as f64),
        Edge::Bottom(rect.bottom() as f64),
    ];
    for edge in edges {
        if ring.is_empty() {
            break;
        }
        let input = std::mem::take(&mut ring);
        let mut prev = *input.last().unwrap();
        for &cur in &input {
            match (edge.inside(prev), edge.inside(cur)) {
                (true, true) => ring.push(cur),
                (true, false) => ring.push(edge.intersect(prev, cur)),
                (false, true) => {
                    ring.push(edge.intersect(prev, cur));
                    ring.push(cur);
                }
                (false, false) => {}
            }
            prev = cur;
        }
    }
    ring.dedup();
    while ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    if ring.len() < 3 {
        return Vec::new();
    }
    let flat: Vec<f64> = ring.iter().flat_map(|&(x, y)| [x, y]).collect();
    if signed_area(&flat).abs() <= 1e-9 {
        return Vec::new();
    }
    vec![flat]
}

/// Rasterizes polygons with the pixel-centre rule: pixel `(x, y)` is set when
/// `(x + 0.5, y + 0.5)` lies inside a ring (even-odd). Rings are unioned.
pub fn rasterize(polys: &[Vec<f64>], width: u32, height: u32) -> Mask {
    let mut mask = Mask::new(width, height);
    let mut xs = Vec::new();
    for poly in polys {
        let pts: Vec<(f64, f64)> = points(poly).collect();
        if pts.len() < 3 {
            continue;
        }
        let (ymin, ymax) = pts.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| {
            (lo.min(p.1), hi.max(p.1))
        });
        let row_lo = ((ymin - 0.5).ceil().max(0.0)) as u32;
        let row_hi = ((ymax - 0.5).floor().min(height as f64 - 1.0)) as i64;
        for y in row_lo as i64..=row_hi {
            let yc = y as f64 + 0.5;
            xs.clear();
            for i in 0..pts.len() {
                let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
                if (a.1 <= yc) != (b.1 <= yc) {
                    xs.push(a.0 + (yc - a.1) * (b.0 - a.0) / (b.1 - a.1));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                let x_lo = ((pair[0] - 0.5).ceil().max(0.0)) as i64;
                let x_hi = ((pair[1] - 0.5).ceil().min(width as f64)) as i64;
                for x in x_lo..x_hi {
                    mask.set(x as u32, y as u32, true);
                }
            }
        }
    }
    mask
}

pub fn translate(poly: &[f64], dx: f64, dy: f64) -> Vec<f64> {
    poly.chunks_exact(2)
        .flat_map(|c| [c[0] + dx, c[1] + dy])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    fn square(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<f64> {
        vec![x0, y0, x1, y0, x1, y1, x0, y1]
    }

    /// Star-shaped simple polygon around a centre with random radii.
    fn random_star(rng: &mut Rng, cx: f64, cy: f64, n: usize, rmin: f64, rmax: f64) -> Vec<f64> {
        (0..n)
            .flat_map(|i| {
                let a = i as f64 / n as f64 * std::f64::consts::TAU;
                let r = rng.uniform(rmin, rmax);
                [cx + r * a.cos(), cy + r * a.sin()]
            })
            .collect()
    }

    fn perimeter(poly: &[f64]) -> f64 {
        let p: Vec<_> = points(poly).collect();
        (0..p.len())
            .map(|i| {
                let (a, b) = (p[i], p[(i + 1) % p.len()]);
                (b.0 - a.0).hypot(b.1 - a.1)
            })
            .sum()
    }

    #[test]
    fn areas() {
        assert_eq!(polygon_area(&square(0.0, 0.0, 1.0, 1.0)).unwrap(), 1.0);
        assert_eq!(polygon_area(&[0.0, 0.0, 4.0, 0.0, 0.0, 3.0]).unwrap(), 6.0);
        assert!(polygon_area(&[0.0, 0.0, 1.0, 1.0]).is_err());
        assert!(polygon_area(&[0.0, 0.0, 1.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn area_agrees_with_rasterization() {
        let mut rng = Rng::new(17);
        for _ in 0..50 {
            let poly = random_star(&mut rng, 60.0, 50.0, 12, 10.0, 40.0);
            let count = rasterize(std::slice::from_ref(&poly), 128, 128).count() as f64;
            let area = polygon_area(&poly).unwrap();
            assert!(
                (count - area).abs() <= perimeter(&poly) / 2.0,
                "{count} vs {area}"
            );
        }
    }

    #[test]
    fn clip_cases() {
        let rect = CropRect::new(0, 0, 100, 100);
        let inside = square(10.0, 10.0, 20.0, 30.0);
        assert_eq!(clip_polygon(&inside, rect), vec![inside.clone()]);
        assert!(clip_polygon(&square(200.0, 200.0, 210.0, 210.0), rect).is_empty());

        let clipped = clip_polygon(&square(0.0, 0.0, 10.0, 10.0), CropRect::new(5, 0, 10, 10));
        assert_eq!(clipped.len(), 1);
        assert_eq!(polygon_area(&clipped[0]).unwrap(), 50.0);
        assert_eq!(polygons_bbox(&clipped), Some([5.0, 0.0, 5.0, 10.0]));

        // Touching only along an edge leaves nothing.
        assert!(clip_polygon(&square(100.0, 0.0, 110.0, 10.0), rect).is_empty());
    }

    #[test]
    fn concave_clip_keeps_area_and_raster() {
        // U shape whose two arms are separated by the crop.
        let u = vec![
            0.0, 0.0, 30.0, 0.0, 30.0, 30.0, 20.0, 30.0, 20.0, 10.0, 10.0, 10.0, 10.0, 30.0, 0.0,
            30.0,
        ];
        let rect = CropRect::new(0, 15, 40, 20);
        let clipped = clip_polygon(&u, rect);
        let area: f64 = clipped.iter().map(|p| polygon_area(p).unwrap()).sum();
        assert!((area - 2.0 * 10.0 * 15.0).abs() < 1e-9);
        let full = rasterize(&[u], 40, 40);
        let expected = full.crop(0, 15, 40, 20).count();
        let got = rasterize(&clipped, 40, 40).crop(0, 15, 40, 20).count();
        assert_eq!(got, expected);
    }

    #[test]
    fn rasterize_axis_aligned_exact() {
        let m = rasterize(&[square(2.0, 3.0, 7.0, 5.0)], 10, 10);
        assert_eq!(m.count(), 10);
        assert_eq!(m.bounds(), Some((2, 3, 5, 2)));
        // Parts outside the raster are dropped.
        let m = rasterize(&[square(-5.0, -5.0, 3.0, 3.0)], 10, 10);
        assert_eq!(m.count(), 9);
    }

    proptest! {
        #[test]
        fn axis_aligned_clip_is_analytic(
            x0 in 0.0f64..80.0, y0 in 0.0f64..80.0, w in 1.0f64..60.0, h in 1.0f64..60.0,
            rx in 0u32..80, ry in 0u32..80, rw in 1u32..60, rh in 1u32..60,
        ) {
            let poly = square(x0, y0, x0 + w, y0 + h);
            let rect = CropRect::new(rx, ry, rw, rh);
            let ix = (x0 + w).min(rect.right() as f64) - x0.max(rx as f64);
            let iy = (y0 + h).min(rect.bottom() as f64) - y0.max(ry as f64);
            let analytic = ix.max(0.0) * iy.max(0.0);
            let got: f64 = clip_polygon(&poly, rect).iter().map(|p| polygon_area(p).unwrap()).sum();
            prop_assert!((got - analytic).abs() <= 1e-9 + analytic * 0.01);
        }

        #[test]
        fn clipped_vertices_stay_in_rect(seed in 0u64..1000) {
            let mut rng = Rng::new(seed);
            let poly = random_star(&mut rng, 50.0, 50.0, 9, 5.0, 60.0);
            let rect = CropRect::new(20, 30, 50, 40);
            for ring in clip_polygon(&poly, rect) {
                for (x, y) in points(&ring) {
                    prop_assert!(rect.contains_point(x, y));
                }
            }
        }
    }
}
